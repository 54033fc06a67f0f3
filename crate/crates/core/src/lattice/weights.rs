//! Weight machinery for the weighted unanchored space over `R^m`:
//! weight-function parameters `θ_j`, the constants `ϱ_j(λ)`, and the
//! product-and-order-dependent (POD) weights `γ_ν = Γ_{|ν|} ∏_{j∈ν} γ_j`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Largest order for which `log Γ_ℓ` is tabulated.
pub const MAX_TABULATED_ORDER: usize = 64;

/// Riemann zeta function for real `s > 1` (Euler–Maclaurin, ~1e-15 relative).
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(Error::Domain(format!("zeta(s) requires s > 1, got {s}")));
    }
    const N: usize = 12;
    // B_{2k} / (2k)!
    const B2K_OVER_FACT: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
    ];
    let mut acc = CompensatedSum::new();
    for n in (1..N).rev() {
        acc.add((n as f64).powf(-s));
    }
    let nf = N as f64;
    acc.add(nf.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * nf.powf(-s));
    // Σ B_{2k}/(2k)! · s(s+1)…(s+2k-2) · N^{-s-2k+1}
    let mut rising = s;
    let mut power = nf.powf(-s - 1.0);
    for (k, c) in B2K_OVER_FACT.iter().enumerate() {
        if k > 0 {
            let a = s + (2 * k - 1) as f64;
            rising *= a * (a + 1.0);
            power /= nf * nf;
        }
        acc.add(c * rising * power);
    }
    Ok(acc.value())
}

/// `λ*` as a function of the summability exponent `p` and slack `δ`.
pub fn lambda_star(p: f64, delta: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (0, 1], got {p}")));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Domain(format!(
            "delta must lie in (0, 1/2], got {delta}"
        )));
    }
    if p <= 2.0 / 3.0 {
        Ok(1.0 / (2.0 - 2.0 * delta))
    } else {
        Ok(p / (2.0 - p))
    }
}

/// Raises an inferred summability exponent `p ∈ (2/3, 1]` so that
/// `λ* = p/(2-p)` is no smaller than the `1/(2-2δ)` used for `p ≤ 2/3`.
///
/// A sequence that is `p`-summable is `p'`-summable for every `p' > p`, so
/// this is always admissible. Without it, `p` just above 2/3 gives `λ*` near 1/2,
/// where `η* → 0`, `ϱ_j` explodes like `exp(θ_j²/η*)`, and the weights end up
/// ranked in reverse order of importance.
pub fn regularize_p(p: f64, delta: f64) -> f64 {
    if p > 2.0 / 3.0 {
        p.max(2.0 / (3.0 - 2.0 * delta)).min(1.0)
    } else {
        p
    }
}

/// Weight-function decay parameter `θ = (b + sqrt(b² + 1 - 1/(2λ*))) / 2`.
pub fn theta_for(b: f64, lambda_star: f64) -> Result<f64> {
    if !(lambda_star > 0.5) {
        return Err(Error::Domain(format!(
            "lambda* must exceed 1/2, got {lambda_star}"
        )));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "b must be finite and nonnegative, got {b}"
        )));
    }
    Ok(0.5 * (b + (b * b + 1.0 - 1.0 / (2.0 * lambda_star)).sqrt()))
}

/// `η* = (2λ - 1) / (4λ)`.
pub fn eta_star(lambda: f64) -> f64 {
    (2.0 * lambda - 1.0) / (4.0 * lambda)
}

/// `ϱ(λ) = 2 (√(2π) e^{θ²/η*} / (π^{2-2η*} (1-η*) η*))^λ ζ(λ + 1/2)`.
pub fn rho(theta: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.5 && lambda <= 1.0) {
        return Err(Error::Domain(format!(
            "rho requires lambda in (1/2, 1], got {lambda}"
        )));
    }
    let eta = eta_star(lambda);
    let base = (2.0 * PI).sqrt() * (theta * theta / eta).exp()
        / (PI.powf(2.0 - 2.0 * eta) * (1.0 - eta) * eta);
    Ok(2.0 * base.powf(lambda) * zeta(lambda + 0.5)?)
}

/// POD weights in the form consumed by the CBC search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PodWeights {
    /// Per-dimension factors `γ_j`.
    pub gamma: Vec<f64>,
    /// `log Γ_ℓ` for `ℓ = 0, 1, …`.
    pub log_order: Vec<f64>,
}

impl PodWeights {
    pub fn new(gamma: Vec<f64>, log_order: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidArgument(
                "gamma_j must be finite and >= 0".into(),
            ));
        }
        if log_order.is_empty() || log_order.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidArgument(
                "order weights must be finite".into(),
            ));
        }
        Ok(Self { gamma, log_order })
    }

    /// Product weights `γ_u = ∏ γ_j` (`Γ_ℓ = 1` for every order up to `max_order`).
    pub fn product(gamma: Vec<f64>, max_order: usize) -> Result<Self> {
        Self::new(gamma, vec![0.0; max_order + 1])
    }

    pub fn order_weight(&self, order: usize) -> f64 {
        self.log_order.get(order).map(|l| l.exp()).unwrap_or(0.0)
    }

    /// `γ_ν` for the index set `dims` (0-based).
    pub fn weight_of(&self, dims: &[usize]) -> f64 {
        let mut w = self.order_weight(dims.len());
        for &j in dims {
            w *= self.gamma[j];
        }
        w
    }
}

/// Every ingredient of the weighted space for one potential and time horizon.
#[derive(Clone, Debug, Serialize)]
pub struct WeightSpec {
    pub p: f64,
    pub delta: f64,
    pub lambda_star: f64,
    pub c_t: f64,
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub gamma_dim: Vec<f64>,
    /// `log Γ_ℓ` for `ℓ = 0..=MAX_TABULATED_ORDER`.
    pub log_gamma_order: Vec<f64>,
    /// `inf_j (θ_j - b_j)`; `+∞` when there are no dimensions.
    pub d_min: f64,
}

fn ln_factorial(n: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for k in 2..=n {
        acc.add((k as f64).ln());
    }
    acc.value()
}

/// Builds `λ*`, `θ_j`, `γ_j` and `log Γ_ℓ` from the decay sequence `b`.
pub fn build_weight_spec(b: &[f64], p: f64, delta: f64, horizon: f64) -> Result<WeightSpec> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!(
            "time horizon must be >= 0, got {horizon}"
        )));
    }
    let lambda = lambda_star(p, delta)?;
    let c_t = horizon.max(1.0);
    let mut theta = Vec::with_capacity(b.len());
    let mut rhos = Vec::with_capacity(b.len());
    let mut gamma = Vec::with_capacity(b.len());
    let mut d_min = f64::INFINITY;
    for &bj in b {
        let th = theta_for(bj, lambda)?;
        assert!(th > bj, "theta_j must exceed b_j when lambda* > 1/2");
        let r = rho(th, lambda)?;
        let g = (bj * bj / ((th - bj) * r)).powf(1.0 / (1.0 + lambda));
        d_min = d_min.min(th - bj);
        theta.push(th);
        rhos.push(r);
        gamma.push(g);
    }
    let log_gamma_order = (0..=MAX_TABULATED_ORDER)
        .map(|l| (2.0 * ln_factorial(l + 1) + 2.0 * l as f64 * (4.0 * c_t).ln()) / (1.0 + lambda))
        .collect();
    Ok(WeightSpec {
        p,
        delta,
        lambda_star: lambda,
        c_t,
        b: b.to_vec(),
        theta,
        rho: rhos,
        gamma_dim: gamma,
        log_gamma_order,
        d_min,
    })
}

impl WeightSpec {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn pod_weights(&self) -> PodWeights {
        PodWeights {
            gamma: self.gamma_dim.clone(),
            log_order: self.log_gamma_order.clone(),
        }
    }

    /// `γ_ν` assembled from the factorized form; `ν = ∅` gives 1.
    pub fn gamma_of(&self, dims: &[usize]) -> f64 {
        if dims.is_empty() {
            return 1.0;
        }
        let mut w = self.log_gamma_order[dims.len()].exp();
        for &j in dims {
            w *= self.gamma_dim[j];
        }
        w
    }

    /// Diagnostic bound factor `[Σ_{ν≠∅} γ_ν^λ ∏ ϱ_j(λ)]^{1/(2λ)}` at `λ = λ*`,
    /// summed over orders with the elementary symmetric recursion.
    pub fn worst_case_constant(&self) -> f64 {
        let lambda = self.lambda_star;
        let m = self.dim();
        // e[ℓ] = Σ_{|u|=ℓ} ∏ (γ_j^λ ϱ_j)
        let mut e = vec![0.0; m + 1];
        e[0] = 1.0;
        for j in 0..m {
            let t = self.gamma_dim[j].powf(lambda) * self.rho[j];
            for l in (1..=j + 1).rev() {
                e[l] += t * e[l - 1];
            }
        }
        let mut acc = CompensatedSum::new();
        for (l, el) in e.iter().enumerate().skip(1) {
            let lg = self
                .log_gamma_order
                .get(l)
                .copied()
                .unwrap_or(f64::INFINITY);
            acc.add((lambda * lg).exp() * el);
        }
        acc.value().powf(1.0 / (2.0 * lambda))
    }
}

/// Outcome of the extra condition required when `p = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct P1Check {
    pub sum_b: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// `Σ b_j < D^{1/2} / (4 C_T ϱ_max(1)^{1/2})` with `ϱ_max(1) = ϱ(θ_max, 1)`.
pub fn check_p1_condition(spec: &WeightSpec, theta_max: f64) -> Result<P1Check> {
    let sum_b = crate::sum::compensated_sum(&spec.b);
    let rho_max = rho(theta_max, 1.0)?;
    let bound = spec.d_min.sqrt() / (4.0 * spec.c_t * rho_max.sqrt());
    Ok(P1Check {
        sum_b,
        bound,
        satisfied: sum_b < bound,
    })
}
