//! Shared fixtures for the benchmarks.

use dfsctl_core::linalg::{random_hermitian, rng, CMat};
use dfsctl_core::{LindbladModel, NoiseChannel, PauliString};

/// `n` qubits with collective dephasing, a random drift and two random controls.
pub fn dephased_register(n: usize, seed: u64) -> LindbladModel {
    let dim = 1 << n;
    let mut r = rng(seed);
    let mut z = CMat::zeros(dim, dim);
    for j in 0..n {
        let s: String = (0..n).map(|k| if k == j { 'Z' } else { 'I' }).collect();
        z += s.parse::<PauliString>().unwrap().matrix();
    }
    let diag = CMat::from_diagonal(&random_hermitian(dim, &mut r).diagonal());
    let controls = vec![random_hermitian(dim, &mut r), random_hermitian(dim, &mut r)];
    LindbladModel::new(diag, controls, vec![NoiseChannel { rate: 1.0, operator: z }]).unwrap()
}
