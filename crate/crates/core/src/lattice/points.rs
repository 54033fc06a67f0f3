//! Rank-1 lattice generating vectors, their text format, and shifted point sets.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Integer vector `z` and point count `N` of a rank-1 lattice.
///
/// Components satisfy `1 ≤ z_j ≤ N-1`, `gcd(z_j, N) = 1` and `z_1 = 1`. The
/// single-point rule `N = 1` is accepted with every `z_j = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingVector {
    n: usize,
    z: Vec<usize>,
}

impl GeneratingVector {
    pub fn new(n: usize, z: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("lattice needs N >= 1".into()));
        }
        if n == 1 {
            if z.iter().any(|&zj| zj != 1) {
                return Err(Error::InvalidArgument(
                    "N = 1 requires every component to be 1".into(),
                ));
            }
            return Ok(Self { n, z });
        }
        for (j, &zj) in z.iter().enumerate() {
            if zj == 0 || zj >= n {
                return Err(Error::InvalidArgument(format!(
                    "z_{} = {zj} outside 1..={}",
                    j + 1,
                    n - 1
                )));
            }
            if gcd(zj, n) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "z_{} = {zj} shares a factor with N = {n}",
                    j + 1
                )));
            }
        }
        if z.first().is_some_and(|&z1| z1 != 1) {
            return Err(Error::InvalidArgument("z_1 must be 1".into()));
        }
        Ok(Self { n, z })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> &[usize] {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Leading `m` components (lattice rules are embedded in dimension).
    pub fn truncate(&self, m: usize) -> Result<Self> {
        if m > self.dim() {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.dim(),
            });
        }
        Ok(Self {
            n: self.n,
            z: self.z[..m].to_vec(),
        })
    }

    /// Text form: `N <value>` then one component per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("N {}\n", self.n);
        for zj in &self.z {
            writeln!(s, "{zj}").unwrap();
        }
        s
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: origin.into(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let n = head
            .strip_prefix('N')
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| err(ln, format!("expected `N <value>`, found `{head}`")))?;
        let mut z = Vec::new();
        for (ln, l) in lines {
            z.push(
                l.parse::<usize>()
                    .map_err(|e| err(ln, format!("bad component `{l}`: {e}")))?,
            );
        }
        Self::new(n, z)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Point `j` (1-based) as `frac((j z_k mod N)/N + Δ_k)`.
    pub fn point_into(&self, j: usize, shift: &[f64], out: &mut [f64]) {
        let n = self.n as u128;
        for ((o, &zk), &dk) in out.iter_mut().zip(&self.z).zip(shift) {
            let r = ((j as u128 * zk as u128) % n) as f64 / self.n as f64;
            let v = r + dk;
            *o = if v >= 1.0 { v - 1.0 } else { v };
        }
    }
}

/// All `N` points of the shifted lattice, `j = 1..=N`.
pub fn lattice_points(gv: &GeneratingVector, shift: &[f64]) -> Result<Vec<Vec<f64>>> {
    if shift.len() != gv.dim() {
        return Err(Error::DimensionMismatch {
            expected: gv.dim(),
            found: shift.len(),
        });
    }
    if shift.iter().any(|d| !(*d >= 0.0 && *d < 1.0)) {
        return Err(Error::Domain("shift components must lie in [0, 1)".into()));
    }
    Ok((1..=gv.n())
        .map(|j| {
            let mut p = vec![0.0; gv.dim()];
            gv.point_into(j, shift, &mut p);
            p
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(GeneratingVector::new(8, vec![1, 3, 5]).is_ok());
        assert!(GeneratingVector::new(8, vec![1, 2]).is_err());
        assert!(GeneratingVector::new(8, vec![1, 8]).is_err());
        assert!(GeneratingVector::new(8, vec![1, 0]).is_err());
        assert!(GeneratingVector::new(8, vec![3]).is_err());
        assert!(GeneratingVector::new(0, vec![]).is_err());
        assert!(GeneratingVector::new(1, vec![1, 1]).is_ok());
        assert!(GeneratingVector::new(1, vec![2]).is_err());
        assert!(GeneratingVector::new(5, vec![]).is_ok());
    }

    #[test]
    fn small_lattice() {
        let gv = GeneratingVector::new(4, vec![1, 3]).unwrap();
        let pts = lattice_points(&gv, &[0.0, 0.0]).unwrap();
        assert_eq!(
            pts,
            vec![
                vec![0.25, 0.75],
                vec![0.5, 0.5],
                vec![0.75, 0.25],
                vec![0.0, 0.0]
            ]
        );
        assert!(lattice_points(&gv, &[0.0]).is_err());
        assert!(lattice_points(&gv, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let gv = GeneratingVector::new(13, vec![1, 5, 8]).unwrap();
        let text = gv.to_text();
        assert_eq!(text, "N 13\n1\n5\n8\n");
        assert_eq!(GeneratingVector::parse(&text, "t").unwrap(), gv);
        assert!(GeneratingVector::parse("M 13\n1\n", "t").is_err());
        assert!(GeneratingVector::parse("N 13\nx\n", "t").is_err());
        assert!(GeneratingVector::parse("N 12\n1\n4\n", "t").is_err());
        assert!(GeneratingVector::parse("", "t").is_err());
    }

    #[test]
    fn large_products_do_not_overflow() {
        let n = (1usize << 40) + 1;
        let gv = GeneratingVector::new(n, vec![1, n - 1]).unwrap();
        let mut p = [0.0; 2];
        gv.point_into(n - 1, &[0.0, 0.0], &mut p);
        assert_eq!(p[1], 1.0 / n as f64);
    }
}
