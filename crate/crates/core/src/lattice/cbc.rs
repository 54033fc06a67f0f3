//! Component-by-component construction of rank-1 lattice generating vectors
//! minimising the shift-averaged worst-case error under POD weights.
//!
//! For POD weights the squared shift-averaged worst-case error of
//! `(z_1, …, z_s)` is
//!
//! ```text
//! e_s²(z) = (1/N) Σ_k Σ_{ℓ=1}^{s} Γ_ℓ p_{s,ℓ}(k),
//! p_{s,ℓ}(k) = p_{s-1,ℓ}(k) + γ_s K_s({k z_s / N}) p_{s-1,ℓ-1}(k),   p_{·,0} = 1,
//! ```
//!
//! where `K_j` is the one-dimensional shift-invariant kernel supplied by a
//! [`KernelProvider`].

use rayon::prelude::*;

use super::points::{gcd, GeneratingVector};
use super::weights::PodWeights;
use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature::integrate;

/// Orders above this are dropped from the POD recursion.
pub const ORDER_CAP: usize = 35;

/// Candidates whose criterion lies within this relative distance of the
/// minimum are treated as tied; the smallest `z` wins.
pub const TIE_RTOL: f64 = 1e-12;

/// Supplies the shift-averaged kernel `K_j(k/N)` for `k = 0..N`.
pub trait KernelProvider: Sync {
    fn values(&self, dim: usize, n: usize) -> Result<Vec<f64>>;
}

/// Shift-invariant kernel for the standard normal density paired with the
/// weight function `w(ξ) = exp(-θ|ξ|)` in the unanchored space:
///
/// ```text
/// K_θ(x) = ∫_R [ |[0,s] ∩ ([0,s] - x mod 1)| - s² ] e^{2θ|t|} dt,   s = Φ(t).
/// ```
///
/// With `a = min(x, 1-x)`, `t_a = Φ^{-1}(1-a)` and `q = 1 - Φ(t)` this reduces to
/// `K = 2 [ ∫_0^{t_a} (Φ q - a) e^{2θt} dt - ∫_{t_a}^∞ q² e^{2θt} dt ]`.
#[derive(Clone, Debug)]
pub struct GaussianExpKernel {
    theta: Vec<f64>,
    tol: f64,
}

impl GaussianExpKernel {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "theta_j must be finite and > 0".into(),
            ));
        }
        Ok(Self { theta, tol: 1e-13 })
    }

    /// `K_θ(x)` for `x ∈ [0, 1)`.
    pub fn kernel(theta: f64, x: f64, tol: f64) -> f64 {
        let a = x.min(1.0 - x);
        let upper = 2.0 * theta + 14.0;
        let t_a = if a <= 0.0 {
            f64::INFINITY
        } else {
            // a ≤ 1/2, so 1 - a is exact enough and the quantile is ≥ 0
            -normal::inv_cdf(a).unwrap_or(f64::NEG_INFINITY)
        };
        let two_theta = 2.0 * theta;
        let inner_hi = t_a.min(upper);
        let mut total = integrate(
            |t| normal::cdf(t) * normal::cdf(-t) * (two_theta * t).exp(),
            0.0,
            inner_hi,
            tol,
        );
        if a > 0.0 {
            total -= a * (two_theta * t_a).exp_m1() / two_theta;
        }
        if t_a < upper {
            total -= integrate(
                |t| {
                    let q = normal::cdf(-t);
                    q * q * (two_theta * t).exp()
                },
                t_a,
                upper,
                tol,
            );
        }
        2.0 * total
    }
}

impl KernelProvider for GaussianExpKernel {
    fn values(&self, dim: usize, n: usize) -> Result<Vec<f64>> {
        let theta = *self.theta.get(dim).ok_or(Error::DimensionMismatch {
            expected: self.theta.len(),
            found: dim + 1,
        })?;
        // symmetric in x ↔ 1 - x
        let half: Vec<f64> = (0..=n / 2)
            .into_par_iter()
            .map(|k| Self::kernel(theta, k as f64 / n as f64, self.tol))
            .collect();
        let out: Vec<f64> = (0..n).map(|k| half[k.min(n - k)]).collect();
        if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("kernel value at k = {bad}")));
        }
        Ok(out)
    }
}

/// Shift-averaged kernel of the unanchored Sobolev space on the unit cube,
/// `B₂(x) = x² - x + 1/6`, identical in every dimension.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProductCubeKernel;

impl KernelProvider for ProductCubeKernel {
    fn values(&self, _dim: usize, n: usize) -> Result<Vec<f64>> {
        Ok((0..n)
            .map(|k| {
                let x = k as f64 / n as f64;
                x * x - x + 1.0 / 6.0
            })
            .collect())
    }
}

/// Admissible generating-vector components for `n` points.
pub fn admissible(n: usize) -> Vec<usize> {
    (1..n).filter(|&z| gcd(z, n) == 1).collect()
}

/// Result of a CBC run: the vector and `e_s²` after each component.
#[derive(Clone, Debug)]
pub struct CbcOutcome {
    pub vector: GeneratingVector,
    pub squared_errors: Vec<f64>,
}

/// Picks the smallest candidate whose value is within [`TIE_RTOL`] of the minimum.
pub(crate) fn argmin_with_ties(candidates: &[usize], values: &[f64]) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = TIE_RTOL * min.abs();
    candidates
        .iter()
        .zip(values)
        .filter(|(_, &v)| v <= min + slack)
        .map(|(&z, _)| z)
        .min()
        .expect("nonempty candidate set")
}

/// `Σ_k K((k c mod N)/N) q(k)`, stepping the index instead of taking products.
fn folded(ks: &[f64], q: &[f64], c: usize) -> f64 {
    let n = ks.len();
    let mut idx = 0;
    let mut acc = 0.0;
    for &qk in q {
        acc += ks[idx] * qk;
        idx += c;
        if idx >= n {
            idx -= n;
        }
    }
    acc
}

/// Fast CBC construction with POD weights.
pub fn cbc_construct(
    m: usize,
    n: usize,
    weights: &PodWeights,
    kernel: &dyn KernelProvider,
) -> Result<CbcOutcome> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    if weights.gamma.len() < m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: weights.gamma.len(),
        });
    }
    if n == 1 {
        return Ok(CbcOutcome {
            vector: GeneratingVector::new(n, vec![1; m])?,
            squared_errors: vec![0.0; m],
        });
    }
    let cap = m.min(ORDER_CAP);
    let big_gamma: Vec<f64> = (0..=cap).map(|l| weights.order_weight(l)).collect();
    let candidates = admissible(n);
    // p[ℓ][k]
    let mut p: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut z = Vec::with_capacity(m);
    let mut squared_errors = Vec::with_capacity(m);
    let inv_n = 1.0 / n as f64;

    for s in 0..m {
        let ks = kernel.values(s, n)?;
        if ks.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: ks.len(),
            });
        }
        let gs = weights.gamma[s];
        let top = (s + 1).min(cap);
        // z-independent part: Σ_k Σ_{ℓ≥1} Γ_ℓ p_{s-1,ℓ}(k)
        let mut base = 0.0;
        for (l, pl) in p.iter().enumerate().skip(1) {
            if l <= cap {
                base += big_gamma[l] * pl.iter().sum::<f64>();
            }
        }
        // q(k) = Σ_{ℓ=1}^{top} Γ_ℓ p_{s-1,ℓ-1}(k)
        let q: Vec<f64> = (0..n)
            .map(|k| {
                (1..=top)
                    .filter(|&l| l - 1 < p.len())
                    .map(|l| big_gamma[l] * p[l - 1][k])
                    .sum()
            })
            .collect();
        let chosen = if s == 0 {
            1
        } else {
            let values: Vec<f64> = candidates
                .par_iter()
                .map(|&c| (base + gs * folded(&ks, &q, c)) * inv_n)
                .collect();
            argmin_with_ties(&candidates, &values)
        };
        squared_errors.push((base + gs * folded(&ks, &q, chosen)) * inv_n);
        z.push(chosen);
        // update p to dimension s
        if p.len() <= top {
            p.push(vec![0.0; n]);
        }
        for l in (1..=top).rev() {
            let (lo, hi) = p.split_at_mut(l);
            let prev = &lo[l - 1];
            for k in 0..n {
                hi[0][k] += gs * ks[(k * chosen) % n] * prev[k];
            }
        }
    }
    Ok(CbcOutcome {
        vector: GeneratingVector::new(n, z)?,
        squared_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cube_kernel_values() {
        let v = ProductCubeKernel.values(0, 4).unwrap();
        assert_relative_eq!(v[0], 1.0 / 6.0);
        assert_relative_eq!(v[2], 0.25 - 0.5 + 1.0 / 6.0);
        assert_relative_eq!(v[1], v[3], epsilon = 1e-16);
    }

    /// Direct evaluation of the defining integral with the circular overlap.
    fn kernel_direct(theta: f64, x: f64) -> f64 {
        let f = |t: f64| {
            let s = normal::cdf(t);
            let overlap = (s - x).max(0.0) + (s - 1.0 + x).max(0.0);
            (overlap - s * s) * (2.0 * theta * t.abs()).exp()
        };
        let mut bps = vec![-30.0, 0.0, 30.0];
        if x > 0.0 {
            bps.push(normal::inv_cdf(x).unwrap());
            bps.push(normal::inv_cdf(1.0 - x).unwrap());
        }
        bps.sort_by(f64::total_cmp);
        bps.windows(2)
            .map(|w| integrate(f, w[0], w[1], 1e-14))
            .sum()
    }

    #[test]
    fn gaussian_kernel_matches_direct_integral() {
        for theta in [0.36, 0.7, 1.1] {
            for x in [0.0, 0.01, 0.125, 0.3, 0.5, 0.77, 0.999] {
                let a = GaussianExpKernel::kernel(theta, x, 1e-14);
                let b = kernel_direct(theta, x);
                assert!(
                    (a - b).abs() <= 1e-10 * b.abs().max(1.0),
                    "theta {theta}, x {x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn gaussian_kernel_has_zero_mean_and_symmetry() {
        let theta = 0.5;
        let mean = integrate(
            |x| GaussianExpKernel::kernel(theta, x, 1e-13),
            0.0,
            1.0,
            1e-9,
        );
        assert!(mean.abs() < 1e-7, "mean {mean}");
        let k0 = GaussianExpKernel::kernel(theta, 0.0, 1e-13);
        let kh = GaussianExpKernel::kernel(theta, 0.5, 1e-13);
        assert!(k0 > 0.0 && kh < 0.0);
        let kern = GaussianExpKernel::new(vec![theta]).unwrap();
        let v = kern.values(0, 16).unwrap();
        for k in 1..16 {
            assert_eq!(v[k], v[16 - k]);
        }
        assert!(kern.values(1, 16).is_err());
    }

    #[test]
    fn one_dimension_is_trivial() {
        let w = PodWeights::product(vec![1.0], 1).unwrap();
        let out = cbc_construct(1, 8, &w, &ProductCubeKernel).unwrap();
        assert_eq!(out.vector.z(), &[1]);
        // e² for the 1-D lattice {k/N} with B₂: Σ_k B₂(k/N)/N = 1/(6N²)
        assert_relative_eq!(out.squared_errors[0], 1.0 / (6.0 * 64.0), epsilon = 1e-15);
    }

    #[test]
    fn degenerate_sizes() {
        let w = PodWeights::product(vec![1.0; 3], 3).unwrap();
        let out = cbc_construct(3, 1, &w, &ProductCubeKernel).unwrap();
        assert_eq!(out.vector.z(), &[1, 1, 1]);
        let out = cbc_construct(0, 16, &w, &ProductCubeKernel).unwrap();
        assert!(out.vector.z().is_empty());
        assert!(cbc_construct(4, 16, &w, &ProductCubeKernel).is_err());
    }

    #[test]
    fn ties_resolve_to_smallest() {
        assert_eq!(
            argmin_with_ties(&[1, 3, 5, 7], &[2.0, 1.0, 1.0 + 1e-15, 1.5]),
            3
        );
        assert_eq!(
            argmin_with_ties(&[1, 3, 5, 7], &[2.0, 1.0 + 1e-15, 1.0, 1.5]),
            3
        );
    }

    #[test]
    fn admissible_sets() {
        assert_eq!(admissible(8), vec![1, 3, 5, 7]);
        assert_eq!(admissible(5), vec![1, 2, 3, 4]);
        assert!(admissible(1).is_empty());
    }
}
