use std::path::Path;
use std::process::{Command, Output};

fn samn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(samn(&[]).status.code(), Some(1));
    assert_eq!(samn(&["train"]).status.code(), Some(1));
    assert_eq!(
        samn(&["train", "--dataset", "x.csv", "--model", "svm"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(samn(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let o = samn(&[
        "train",
        "--dataset",
        missing.to_str().unwrap(),
        "--epochs",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "a,b,label\n").unwrap();
    assert_eq!(
        samn(&["train", "--dataset", empty.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn divergence_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = samn(&[
        "train",
        "--dataset",
        &data("iris.csv"),
        "--model",
        "cenet",
        "--epochs",
        "3",
        "--lr",
        "1e300",
        "--activation",
        "relu",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = samn(&[
        "train",
        "--dataset",
        &data("iris.csv"),
        "--epochs",
        "20",
        "--seed",
        "3",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("iris samn seed 3: accuracy"));
    let ckpt = dir.path().join("iris_samn_seed3.json");
    assert!(ckpt.exists());
    assert!(dir.path().join("iris_samn_seed3.csv").exists());

    let p = samn(&[
        "predict",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--input",
        &data("iris.csv"),
        "--label-col",
        "class",
    ]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let lines: Vec<String> = stdout(&p).lines().map(String::from).collect();
    assert_eq!(lines.len(), 150);
    assert!(lines.iter().all(|l| ["0", "1", "2"].contains(&l.as_str())));
    assert!(String::from_utf8_lossy(&p.stderr).contains("accuracy"));

    // feature count must match the checkpoint
    let bad = samn(&[
        "predict",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--input",
        &data("iris.csv"),
    ]);
    assert_ne!(bad.status.code(), Some(0));
}

#[test]
fn svmlight_training_and_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let heart = data("heart.svm");
    let o = samn(&[
        "train",
        "--dataset",
        &heart,
        "--format",
        "svmlight",
        "--model",
        "mbn",
        "--epochs",
        "5",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = dir.path().join("heart_mbn_seed1.json");
    let p = samn(&[
        "predict",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--input",
        &heart,
        "--format",
        "svmlight",
    ]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    assert_eq!(stdout(&p).lines().count(), 270);
}

#[test]
fn experiment_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        format!(
            "dataset = {:?}\nmodel = \"cenet\"\nepochs = 5\nrepetitions = 2\nseeds = [1, 2]\noutput_dir = \"out\"\n",
            data("wine.csv")
        ),
    )
    .unwrap();
    let o = samn(&["experiment", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("| wine | cenet |"), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/wine_cenet.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    std::fs::write(
        &config,
        "dataset = \"x.csv\"\nmodel = \"samn\"\nepochs = 0\n",
    )
    .unwrap();
    assert_eq!(
        samn(&["experiment", "--config", config.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn gridsearch_on_binary_data() {
    let o = samn(&[
        "gridsearch",
        "--dataset",
        &data("sonar.csv"),
        "--gamma-exp",
        "-7",
        "-3",
        "2",
        "--c-exp",
        "-1",
        "3",
        "2",
        "--folds",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("gamma "));
    let multi = samn(&["gridsearch", "--dataset", &data("iris.csv")]);
    assert_eq!(multi.status.code(), Some(1));
}
