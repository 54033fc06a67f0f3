//! Truncated Karhunen–Loève random potential
//! `V_m(ξ, x) = v0(x) + Σ_{j=1}^{m} λ_j ξ_j v_j(x)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{differentiate_inplace, TorusGrid};
use crate::sum::CompensatedSum;

/// Background term `v0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Background {
    Constant(f64),
    /// Values at the nodes of a grid with `values.len()` points.
    Tabulated(Vec<f64>),
}

/// Spatial mode `v_j`.
#[derive(Clone, Debug, PartialEq)]
pub enum ModeShape {
    /// `cos(k x)`.
    Cosine(u32),
    /// Values at the nodes of a grid with `values.len()` points.
    Tabulated(Vec<f64>),
}

impl ModeShape {
    fn on_grid(&self, grid: &TorusGrid) -> Result<Vec<f64>> {
        match self {
            ModeShape::Cosine(k) => Ok((0..grid.size())
                .map(|i| (*k as f64 * grid.node(i)).cos())
                .collect()),
            ModeShape::Tabulated(v) => {
                grid.check_len(v.len())?;
                Ok(v.clone())
            }
        }
    }

    /// `max(‖v‖_∞, ‖v'‖_∞)`; closed form for cosines, 4×-refined grid maxima otherwise.
    fn w1_inf_norm(&self) -> Result<f64> {
        match self {
            ModeShape::Cosine(0) => Ok(1.0),
            ModeShape::Cosine(k) => Ok((*k as f64).max(1.0)),
            ModeShape::Tabulated(v) => {
                let (sup, dsup) = refined_sup_norms(v)?;
                Ok(sup.max(dsup))
            }
        }
    }
}

/// Sup norms of a tabulated periodic function and its derivative, estimated on a
/// 4× refined grid via trigonometric interpolation.
fn refined_sup_norms(values: &[f64]) -> Result<(f64, f64)> {
    let coarse = TorusGrid::new(values.len())?;
    let fine = TorusGrid::new(4 * values.len())?;
    let n = coarse.size();
    let spectrum: Vec<Complex64> = coarse.forward(
        &values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect::<Vec<_>>(),
    );
    // Zero-pad: copy the paired modes, split the Nyquist bin evenly.
    let mut padded = vec![Complex64::default(); fine.size()];
    for (i, c) in spectrum.iter().enumerate() {
        let k = coarse.wavenumber(i);
        if i == n / 2 {
            let half = c * 0.5;
            padded[n / 2] += half;
            padded[fine.size() - n / 2] += half;
        } else {
            let idx = if k >= 0 {
                k as usize
            } else {
                (fine.size() as i64 + k) as usize
            };
            padded[idx] = *c;
        }
    }
    // Coarse coefficients carry a factor n; the fine inverse divides by 4n.
    padded.iter_mut().for_each(|c| *c *= 4.0);
    let interp = fine.inverse(&padded);
    let sup = interp.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut deriv = interp;
    let mut scratch = vec![Complex64::default(); fine.scratch_len()];
    differentiate_inplace(&fine, &mut deriv, &mut scratch);
    let dsup = deriv.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    Ok((sup, dsup))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub strength: f64,
    pub shape: ModeShape,
}

/// Truncated KL potential. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct KLPotential {
    background: Background,
    modes: Vec<Mode>,
    /// Decay exponent when built by [`build_cosine_potential`].
    cosine_alpha: Option<f64>,
}

impl KLPotential {
    /// General constructor; strengths must be positive and nonincreasing.
    pub fn new(background: Background, modes: Vec<Mode>) -> Result<Self> {
        for (j, mode) in modes.iter().enumerate() {
            if !(mode.strength > 0.0) || !mode.strength.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "mode {} strength must be positive and finite",
                    j + 1
                )));
            }
            if j > 0 && mode.strength > modes[j - 1].strength {
                return Err(Error::InvalidArgument(format!(
                    "mode strengths must be nonincreasing (mode {})",
                    j + 1
                )));
            }
        }
        Ok(Self {
            background,
            modes,
            cosine_alpha: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn cosine_alpha(&self) -> Option<f64> {
        self.cosine_alpha
    }

    /// Tabulates background and modes on `grid` for repeated evaluation.
    pub fn on_grid(&self, grid: &TorusGrid) -> Result<GridPotential> {
        let background = match &self.background {
            Background::Constant(c) => vec![*c; grid.size()],
            Background::Tabulated(v) => {
                grid.check_len(v.len())?;
                v.clone()
            }
        };
        let modes = self
            .modes
            .iter()
            .map(|m| m.shape.on_grid(grid))
            .collect::<Result<Vec<_>>>()?;
        let strengths = self.modes.iter().map(|m| m.strength).collect();
        Ok(GridPotential {
            background,
            strengths,
            modes,
        })
    }
}

/// `v0 ≡ offset`, `λ_j = j^{-alpha}`, `v_j = cos(j x)`.
pub fn build_cosine_potential(alpha: f64, m: usize, offset: f64) -> Result<KLPotential> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cosine family needs alpha > 1, got {alpha}"
        )));
    }
    if !offset.is_finite() {
        return Err(Error::NonFinite("potential offset".into()));
    }
    let modes = (1..=m)
        .map(|j| Mode {
            strength: (j as f64).powf(-alpha),
            shape: ModeShape::Cosine(j as u32),
        })
        .collect();
    let mut pot = KLPotential::new(Background::Constant(offset), modes)?;
    pot.cosine_alpha = Some(alpha);
    Ok(pot)
}

/// Potential tabulated on a fixed grid.
#[derive(Clone, Debug)]
pub struct GridPotential {
    background: Vec<f64>,
    strengths: Vec<f64>,
    modes: Vec<Vec<f64>>,
}

impl GridPotential {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn len(&self) -> usize {
        self.background.len()
    }

    pub fn is_empty(&self) -> bool {
        self.background.is_empty()
    }

    /// Writes `V_m(ξ, x_k)` into `out`, modes summed in ascending `j`.
    pub fn evaluate_into(&self, xi: &[f64], out: &mut [f64]) -> Result<()> {
        if xi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: xi.len(),
            });
        }
        if let Some(j) = xi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("xi component {}", j + 1)));
        }
        let coef: Vec<f64> = self.strengths.iter().zip(xi).map(|(l, x)| l * x).collect();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut acc = CompensatedSum::new();
            acc.add(self.background[k]);
            for (c, mode) in coef.iter().zip(&self.modes) {
                acc.add(c * mode[k]);
            }
            *slot = acc.value();
        }
        Ok(())
    }

    pub fn evaluate(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(xi, &mut out)?;
        Ok(out)
    }
}

/// `V_m(ξ, ·)` at the nodes of `grid`.
pub fn evaluate(pot: &KLPotential, xi: &[f64], grid: &TorusGrid) -> Result<Vec<f64>> {
    pot.on_grid(grid)?.evaluate(xi)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    /// `b_j = λ_j max(‖v_j‖_∞, ‖v_j'‖_∞)`.
    pub b: Vec<f64>,
    pub p: Option<f64>,
    pub sum_b_p: Option<f64>,
    pub satisfied: Option<bool>,
    pub notes: String,
    #[serde(skip)]
    cosine_alpha: Option<f64>,
}

pub fn decay_sequences(pot: &KLPotential) -> Result<DecayReport> {
    let b = pot
        .modes
        .iter()
        .map(|m| Ok(m.strength * m.shape.w1_inf_norm()?))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayReport {
        b,
        p: None,
        sum_b_p: None,
        satisfied: None,
        notes: String::new(),
        cosine_alpha: pot.cosine_alpha,
    })
}

/// Partial sum of `b_j^p` plus, for the cosine family, the tail test `p (α - 1) > 1`.
pub fn check_summability(report: &DecayReport, p: f64) -> Result<DecayReport> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (0, 1], got {p}")));
    }
    let mut acc = CompensatedSum::new();
    for b in &report.b {
        acc.add(b.powf(p));
    }
    let sum = acc.value();
    let (satisfied, notes) = if report.b.is_empty() {
        (true, "m = 0: vacuously summable".to_string())
    } else if let Some(alpha) = report.cosine_alpha {
        let margin = p * (alpha - 1.0);
        (
            margin > 1.0,
            format!("cosine tail: p*(alpha-1) = {margin:.6} (needs > 1)"),
        )
    } else {
        (
            sum.is_finite(),
            "finite truncation only; tail not assessed".to_string(),
        )
    };
    Ok(DecayReport {
        b: report.b.clone(),
        p: Some(p),
        sum_b_p: Some(sum),
        satisfied: Some(satisfied),
        notes,
        cosine_alpha: report.cosine_alpha,
    })
}

/// Summability exponent inferred from a log–log fit of the `b_j` tail.
///
/// Returns `min(1, 1.01 / s)` where `s` is the fitted decay exponent; falls back to
/// `0.5` when fewer than two positive entries exist or the sequence does not decay.
pub fn infer_p(report: &DecayReport) -> f64 {
    let pts: Vec<(f64, f64)> = report
        .b
        .iter()
        .enumerate()
        .filter(|(_, b)| **b > 0.0)
        .map(|(j, b)| (((j + 1) as f64).ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.5;
    }
    let tail = &pts[pts.len().saturating_sub(4).min(pts.len() - 2)..];
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let decay = -sxy / sxx;
    if !(decay > 0.0) {
        return 0.5;
    }
    (1.01 / decay).min(1.0)
}
