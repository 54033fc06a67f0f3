//! Position density `S = |ψ|²`, current density `J = Im(ψ̄ ∂ₓψ)`, point
//! functionals and relative L² errors.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{differentiate_inplace, real_l2_norm, same_grid, TorusGrid, WaveField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservableKind {
    PositionDensity,
    CurrentDensity,
}

impl ObservableKind {
    pub fn short(&self) -> &'static str {
        match self {
            Self::PositionDensity => "S",
            Self::CurrentDensity => "J",
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// Real field on a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableField {
    grid: TorusGrid,
    values: Vec<f64>,
    kind: ObservableKind,
}

impl ObservableField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>, kind: ObservableKind) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{kind} field")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            kind,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    /// Samples every `factor`-th node, mapping a fine grid onto a coarser one
    /// that shares its nodes.
    pub fn restrict(&self, target: &TorusGrid) -> Result<Self> {
        let (fine, coarse) = (self.grid.size(), target.size());
        if coarse > fine || fine % coarse != 0 {
            return Err(Error::GridMismatch {
                expected: coarse,
                found: fine,
            });
        }
        let factor = fine / coarse;
        Ok(Self {
            grid: target.clone(),
            values: self.values.iter().step_by(factor).copied().collect(),
            kind: self.kind,
        })
    }

    /// CSV with columns `x,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,value\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:?},{:?}\n", self.grid.node(k), v));
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(out.as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn density_into(values: &[Complex64], out: &mut [f64]) {
    for (o, v) in out.iter_mut().zip(values) {
        *o = v.norm_sqr();
    }
}

/// `Im(ψ̄ ∂ₓψ)` using `work` as a copy buffer for the derivative.
pub(crate) fn current_into(
    grid: &TorusGrid,
    values: &[Complex64],
    work: &mut [Complex64],
    scratch: &mut [Complex64],
    out: &mut [f64],
) {
    work.copy_from_slice(values);
    differentiate_inplace(grid, work, scratch);
    for ((o, v), d) in out.iter_mut().zip(values).zip(work.iter()) {
        *o = (v.conj() * d).im;
    }
}

pub fn position_density(f: &WaveField) -> ObservableField {
    let mut out = vec![0.0; f.values().len()];
    density_into(f.values(), &mut out);
    ObservableField {
        grid: f.grid().clone(),
        values: out,
        kind: ObservableKind::PositionDensity,
    }
}

pub fn current_density(f: &WaveField) -> ObservableField {
    let grid = f.grid();
    let mut work = vec![Complex64::default(); grid.size()];
    let mut scratch = vec![Complex64::default(); grid.scratch_len()];
    let mut out = vec![0.0; grid.size()];
    current_into(grid, f.values(), &mut work, &mut scratch, &mut out);
    ObservableField {
        grid: grid.clone(),
        values: out,
        kind: ObservableKind::CurrentDensity,
    }
}

/// Index of the node nearest to `x0`, ties toward the smaller index, wrapping
/// periodically.
pub fn nearest_node(grid: &TorusGrid, x0: f64) -> Result<usize> {
    if !x0.is_finite() {
        return Err(Error::NonFinite("evaluation point".into()));
    }
    let r = (x0 + PI) / grid.spacing();
    let lo = r.floor();
    let k = if r - lo > 0.5 { lo + 1.0 } else { lo };
    Ok((k as i64).rem_euclid(grid.size() as i64) as usize)
}

/// Value at the node nearest to `x0`.
pub fn point_eval(obs: &ObservableField, x0: f64) -> Result<f64> {
    Ok(obs.values[nearest_node(&obs.grid, x0)?])
}

/// `‖num - ref‖ / ‖ref‖` in the discrete L² norm.
pub fn l2_relative_error(num: &ObservableField, reference: &ObservableField) -> Result<f64> {
    same_grid(&num.grid, &reference.grid)?;
    let denom = real_l2_norm(&reference.grid, &reference.values);
    if denom == 0.0 {
        return Err(Error::Domain("reference field has zero norm".into()));
    }
    let diff: Vec<f64> = num
        .values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| a - b)
        .collect();
    Ok(real_l2_norm(&num.grid, &diff) / denom)
}
