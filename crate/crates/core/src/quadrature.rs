//! One-dimensional quadrature: adaptive Gauss–Kronrod on finite intervals and
//! Gauss–Hermite rules for the standard normal measure.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Upper bound on the number of subintervals in [`integrate`].
const MAX_INTERVALS: usize = 4000;

struct Piece {
    lo: f64,
    hi: f64,
    val: f64,
    err: f64,
}

/// Globally adaptive G7–K15 integral of `f` over `[a, b]`.
///
/// Bisects the subinterval with the largest error estimate until the summed
/// estimate drops below `max(tol, 1e-14·|I|)` or the interval budget runs out.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (val, err) = gk15(&f, a, b);
    let mut pieces = vec![Piece {
        lo: a,
        hi: b,
        val,
        err,
    }];
    loop {
        let total: f64 = pieces.iter().map(|p| p.val).sum();
        let total_err: f64 = pieces.iter().map(|p| p.err).sum();
        if total_err <= tol.max(1e-14 * total.abs()) || pieces.len() >= MAX_INTERVALS {
            break;
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("at least one piece");
        let Piece { lo, hi, .. } = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision
            let (val, _) = gk15(&f, lo, hi);
            pieces.push(Piece {
                lo,
                hi,
                val,
                err: 0.0,
            });
            continue;
        }
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (val, err) = gk15(&f, l, h);
            pieces.push(Piece {
                lo: l,
                hi: h,
                val,
                err,
            });
        }
    }
    pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut total = crate::sum::CompensatedSum::new();
    for p in &pieces {
        total.add(p.val);
    }
    total.value()
}

/// Gauss–Hermite rule for the standard normal measure: nodes ascending, weights
/// summing to one.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// `n`-point rule integrating polynomials of degree `2n - 1` exactly against
    /// `exp(-ξ²/2)/√(2π)`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 100 {
            return Err(Error::InvalidArgument(format!(
                "Gauss-Hermite order must be in 1..=100, got {n}"
            )));
        }
        // Newton iteration on orthonormal physicists' Hermite polynomials,
        // then rescale x -> √2 x and w -> w / √π.
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let mut z = 0.0;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        let mut pairs: Vec<(f64, f64)> = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| (xi * 2f64.sqrt(), wi / PI.sqrt()))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 =
            crate::sum::compensated_sum(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        crate::sum::compensated_sum(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-14);
        assert_relative_eq!(v, 2.0, epsilon = 1e-13);
        let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-14);
        assert_relative_eq!(v, PI.sqrt(), epsilon = 1e-13);
        // kink
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-13);
        assert_relative_eq!(v, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_by_quadrature() {
        let v = integrate(crate::normal::pdf, -40.0, 1.0, 1e-15);
        assert_relative_eq!(v, 0.841_344_746_068_542_9, epsilon = 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let gh = GaussHermite::new(20).unwrap();
        assert_eq!(gh.len(), 20);
        assert_relative_eq!(gh.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(gh.integrate(|x| x).abs() < 1e-14);
        assert_relative_eq!(gh.integrate(|x| x * x), 1.0, epsilon = 1e-12);
        assert_relative_eq!(gh.integrate(|x| x.powi(4)), 3.0, epsilon = 1e-12);
        assert_relative_eq!(gh.integrate(|x| x.powi(6)), 15.0, epsilon = 1e-11);
        assert!(gh.nodes.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(gh.nodes[19], 7.619_048_541_679_758, epsilon = 1e-12);
    }

    #[test]
    fn small_rules() {
        let gh = GaussHermite::new(1).unwrap();
        assert_eq!(gh.nodes, vec![0.0]);
        assert_eq!(gh.weights, vec![1.0]);
        let gh = GaussHermite::new(2).unwrap();
        assert_relative_eq!(gh.nodes[1], 1.0, epsilon = 1e-14);
        assert!(GaussHermite::new(0).is_err());
    }
}
