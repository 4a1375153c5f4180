#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use specbound_core::{Matrix, SeededRng};

pub fn rng(seed: u64) -> ChaCha8Rng {
    SeededRng::with_stream(seed, 0xfeed).generator()
}

pub fn gaussian(k: usize, m: usize, gen: &mut impl Rng) -> Matrix {
    Matrix::new(k, m, (0..k * m).map(|_| gen.sample(StandardNormal)).collect()).unwrap()
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
