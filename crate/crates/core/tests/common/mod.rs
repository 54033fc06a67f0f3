#![allow(dead_code)]

use qmcts::lattice::cbc::admissible;
use qmcts::lattice::{KernelProvider, PodWeights};

/// Squared shift-averaged worst-case error of `z` by direct expansion over
/// every nonempty subset of coordinates (no order recursion).
pub fn brute_force_criterion(
    z: &[usize],
    n: usize,
    weights: &PodWeights,
    kernels: &[Vec<f64>],
) -> f64 {
    let s = z.len();
    let mut total = 0.0;
    for k in 0..n {
        for mask in 1u32..(1 << s) {
            let dims: Vec<usize> = (0..s).filter(|i| mask & (1 << i) != 0).collect();
            let mut term = weights.weight_of(&dims);
            for &i in &dims {
                term *= kernels[i][(k * z[i]) % n];
            }
            total += term;
        }
    }
    total / n as f64
}

/// Component-wise exhaustive minimization: for each `j`, the admissible `z`
/// minimising the brute-force criterion given the prefix already chosen.
/// Near-ties (relative 1e-12) go to the smallest candidate.
pub fn exhaustive_cbc(
    m: usize,
    n: usize,
    weights: &PodWeights,
    provider: &dyn KernelProvider,
) -> (Vec<usize>, Vec<f64>) {
    let kernels: Vec<Vec<f64>> = (0..m).map(|j| provider.values(j, n).unwrap()).collect();
    let mut z: Vec<usize> = Vec::new();
    let mut errs = Vec::new();
    for j in 0..m {
        let candidates = if j == 0 { vec![1] } else { admissible(n) };
        let values: Vec<f64> = candidates
            .iter()
            .map(|&c| {
                let mut trial = z.clone();
                trial.push(c);
                brute_force_criterion(&trial, n, weights, &kernels)
            })
            .collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let (best, value) = candidates
            .iter()
            .zip(&values)
            .filter(|(_, v)| **v <= min + 1e-12 * min.abs())
            .min_by_key(|(c, _)| **c)
            .unwrap();
        z.push(*best);
        errs.push(*value);
    }
    (z, errs)
}
