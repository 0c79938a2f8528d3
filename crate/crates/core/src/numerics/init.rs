use rand::Rng;

use super::Matrix;

/// Glorot/Xavier uniform initialisation for a `fan_in x fan_out` weight.
pub fn glorot_uniform<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect();
    Matrix::from_vec(fan_in, fan_out, data).expect("length matches shape")
}
