use crate::dataio::Batch;
use crate::numerics::{DenseVars, Matrix, Tape, Var};
use crate::{Error, Result};

use super::model::PrototypeState;
use super::{Activation, MemoryParams, SamnConfig, SamnParams};

/// Parameters recorded as leaves of one tape, in [`SamnParams::matrices`] order.
pub struct ParamVars<'t> {
    pub layers: Vec<DenseVars<'t>>,
    pub memory: Option<MemoryVars<'t>>,
}

#[derive(Clone, Copy)]
pub struct MemoryVars<'t> {
    pub hidden: DenseVars<'t>,
    pub input: DenseVars<'t>,
    pub output: DenseVars<'t>,
}

impl<'t> ParamVars<'t> {
    pub fn record(params: &SamnParams, tape: &'t Tape) -> Self {
        ParamVars {
            layers: params.layers.iter().map(|l| l.record(tape)).collect(),
            memory: params.memory.as_ref().map(|m| MemoryVars::record(m, tape)),
        }
    }

    pub fn all(&self) -> Vec<Var<'t>> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(l.weight);
            out.push(l.bias);
        }
        if let Some(m) = &self.memory {
            for d in [m.hidden, m.input, m.output] {
                out.push(d.weight);
                out.push(d.bias);
            }
        }
        out
    }
}

impl<'t> MemoryVars<'t> {
    pub fn record(params: &MemoryParams, tape: &'t Tape) -> Self {
        MemoryVars {
            hidden: params.hidden.record(tape),
            input: params.input.record(tape),
            output: params.output.record(tape),
        }
    }
}

/// Runs extraction layers `from..=to` (1-based) on `x`.
pub fn extract<'t>(
    params: &ParamVars<'t>,
    activation: Activation,
    x: Var<'t>,
    from: usize,
    to: usize,
) -> Result<Var<'t>> {
    if from == 0 || from > to || to > params.layers.len() {
        return Err(Error::Config(format!(
            "layer range {from}..={to} outside 1..={}",
            params.layers.len()
        )));
    }
    let mut h = x;
    for layer in &params.layers[from - 1..to] {
        h = activation.apply(layer.apply(h)?)?;
    }
    Ok(h)
}

/// `softmax(X Xᵀ) X` with identity query/key/value projections.
pub fn sample_attention_block(x: Var<'_>) -> Result<Var<'_>> {
    let scores = x.matmul(x.transpose()?)?;
    let weights = scores.row_softmax()?;
    Ok(weights.matmul(x)?)
}

/// Row-stochastic similarity matrix `softmax(X Xᵀ)` among the rows of `x`.
pub fn attention_weights(x: &Matrix) -> Result<Matrix> {
    let tape = Tape::new();
    let v = tape.constant(x.clone());
    let w = v.matmul(v.transpose()?)?.row_softmax()?;
    let out = w.value().clone();
    Ok(out)
}

/// Applies `blocks` attention blocks to `x` outside of any training tape.
pub fn sample_attention(x: &Matrix, blocks: usize) -> Result<Matrix> {
    let tape = Tape::new();
    let mut v = tape.constant(x.clone());
    for _ in 0..blocks {
        v = sample_attention_block(v)?;
    }
    let out = v.value().clone();
    Ok(out)
}

/// One memory step for a single class. `h_prev` should be a constant so that
/// no gradient crosses the batch boundary. Returns `(h, S)`.
pub fn memory_update<'t>(
    mem: &MemoryVars<'t>,
    h_prev: Var<'t>,
    mean: Var<'t>,
) -> Result<(Var<'t>, Var<'t>)> {
    let h = mem
        .hidden
        .apply(h_prev)?
        .add(mem.input.apply(mean)?)?
        .sigmoid()?;
    let s = mem.output.apply(h)?.tanh()?;
    Ok((h, s))
}

/// Cross-entropy over `softmax_c cos(m_i, S_c)`, averaged over the rows of `refined`.
pub fn inner_loss<'t>(refined: Var<'t>, labels: &[usize], prototypes: Var<'t>) -> Result<Var<'t>> {
    let sims = refined.cosine(prototypes)?;
    Ok(sims.softmax_cross_entropy(labels)?)
}

/// Mean cosine over the `C(C-1)/2` unordered prototype pairs.
pub fn inter_loss(prototypes: Var<'_>) -> Result<Var<'_>> {
    let c = prototypes.shape().0;
    if c < 2 {
        return Err(Error::Config(format!(
            "inter-class loss needs at least 2 classes, got {c}"
        )));
    }
    let mut mask = Matrix::zeros(c, c);
    for i in 0..c {
        for j in i + 1..c {
            mask.set(i, j, 1.0);
        }
    }
    let tape = prototypes.tape();
    let sims = prototypes.cosine(prototypes)?;
    let upper = sims.mul(tape.constant(mask))?.sum()?;
    Ok(upper.scale(2.0 / (c * (c - 1)) as f64)?)
}

/// Per-class results of steps 1-4 on one batch. Entries are `None` for
/// classes absent from the batch.
pub struct EncodedBatch<'t> {
    pub attended: Vec<Option<Var<'t>>>,
    pub class_means: Vec<Option<Var<'t>>>,
    /// New memory `hᶜ`; always `None` for SAN.
    pub memory: Vec<Option<Var<'t>>>,
    /// New prototype `Sᶜ` (the class mean itself for SAN).
    pub prototypes: Vec<Option<Var<'t>>>,
}

pub struct BatchForward<'t> {
    pub encoded: EncodedBatch<'t>,
    /// `mᵢ` for every batch member, rows in [`Batch::indices`] order.
    pub refined: Var<'t>,
    pub labels: Vec<usize>,
    /// All `C` prototypes; classes absent from the batch enter as constants.
    pub all_prototypes: Var<'t>,
    pub inner: Var<'t>,
    pub inter: Var<'t>,
    pub total: Var<'t>,
}

pub(crate) fn encode_batch<'t>(
    tape: &'t Tape,
    params: &ParamVars<'t>,
    config: &SamnConfig,
    state: &PrototypeState,
    features: &Matrix,
    batch: &Batch,
) -> Result<EncodedBatch<'t>> {
    let n_classes = batch.groups.len();
    let k0 = config.pre_attention_layers();
    let x = tape.constant(features.select_rows(&batch.indices()));
    let hidden = extract(params, config.activation, x, 1, k0)?;

    let mut encoded = EncodedBatch {
        attended: vec![None; n_classes],
        class_means: vec![None; n_classes],
        memory: vec![None; n_classes],
        prototypes: vec![None; n_classes],
    };
    let mut offset = 0;
    for (c, group) in batch.groups.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let rows: Vec<usize> = (offset..offset + group.len()).collect();
        offset += group.len();
        let mut xc = hidden.select_rows(&rows)?;
        for _ in 0..config.attention_blocks() {
            xc = sample_attention_block(xc)?;
        }
        let mean = xc.row_mean()?;
        encoded.attended[c] = Some(xc);
        encoded.class_means[c] = Some(mean);
        match &params.memory {
            Some(mem) => {
                let h_prev = tape.constant(Matrix::row_vector(state.memory.row(c)));
                let (h, s) = memory_update(mem, h_prev, mean)?;
                encoded.memory[c] = Some(h);
                encoded.prototypes[c] = Some(s);
            }
            None => encoded.prototypes[c] = Some(mean),
        }
    }
    Ok(encoded)
}

/// End-to-end forward pass for one class-grouped batch.
pub fn forward_batch<'t>(
    tape: &'t Tape,
    params: &ParamVars<'t>,
    config: &SamnConfig,
    state: &PrototypeState,
    features: &Matrix,
    batch: &Batch,
) -> Result<BatchForward<'t>> {
    let encoded = encode_batch(tape, params, config, state, features, batch)?;

    let attended: Vec<Var<'t>> = encoded.attended.iter().flatten().copied().collect();
    let attended = Var::concat_rows(&attended)?;
    let refined = extract(
        params,
        config.activation,
        attended,
        config.pre_attention_layers() + 1,
        config.layers,
    )?;

    let mut rows = Vec::with_capacity(batch.groups.len());
    for (c, proto) in encoded.prototypes.iter().enumerate() {
        let row = match proto {
            Some(v) => *v,
            None if state.updated_at[c].is_some() => {
                tape.constant(Matrix::row_vector(state.prototypes.row(c)))
            }
            None => {
                return Err(Error::State(format!(
                    "class {c} has no prototype yet; run the warm-up pass first"
                )))
            }
        };
        rows.push(row);
    }
    let all_prototypes = Var::concat_rows(&rows)?;

    let labels = batch.grouped_labels();
    let inner = inner_loss(refined, &labels, all_prototypes)?;
    let inter = inter_loss(all_prototypes)?;
    let total = inner.add(inter)?;
    Ok(BatchForward {
        encoded,
        refined,
        labels,
        all_prototypes,
        inner,
        inter,
        total,
    })
}

/// Mean row of each class group; empty groups yield `None`.
pub fn class_means(groups: &[Matrix]) -> Vec<Option<Matrix>> {
    groups
        .iter()
        .map(|g| {
            (g.rows() > 0).then(|| {
                let mut mean = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (m, v) in mean.row_mut(0).iter_mut().zip(g.row(r)) {
                        *m += v;
                    }
                }
                mean.scale(1.0 / g.rows() as f64)
            })
        })
        .collect()
}
