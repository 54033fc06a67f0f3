//! Standard normal density, distribution function and quantile, and the
//! componentwise map from the unit cube to Gaussian parameter space.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Replacement for an exact `0` coordinate.
pub const CLAMP_LOW: f64 = 1e-16;
/// Replacement for an exact `1` coordinate.
pub const CLAMP_HIGH: f64 = 1.0 - 1e-16;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(y: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * y * y).exp()
}

/// Standard normal distribution function via `erfc`.
pub fn cdf(y: f64) -> f64 {
    0.5 * libm::erfc(-y * FRAC_1_SQRT_2)
}

/// Standard normal quantile.
///
/// Wichura's AS 241 rational approximation followed by one Halley correction
/// against [`cdf`]. Input must lie strictly inside `(0, 1)`.
pub fn inv_cdf(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!(
            "quantile argument {u} outside (0, 1)"
        )));
    }
    let x = as241(u);
    // Halley step on the smaller tail to keep relative accuracy.
    let (e, sign) = if u <= 0.5 {
        (cdf(x) - u, 1.0)
    } else {
        (cdf(-x) - (1.0 - u), -1.0)
    };
    let r = sign * e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    if !r.is_finite() {
        return Ok(x);
    }
    Ok(x - r / (1.0 + 0.5 * x * r))
}

#[allow(clippy::inconsistent_digit_grouping)]
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33_430.575_583_588_13) * r
                + 67265.770_927_008_7)
                * r
                + 45921.953_931_549_87)
                * r
                + 13_731.693_765_509_46)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_71)
                * r
                + 21213.794_301_586_597)
                * r
                + 5394.196_021_424_751)
                * r
                + 687.187_007_492_057_9)
                * r
                + 42.313_330_701_600_91)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.745_450_142_783_414e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_08)
                * r
                + 0.689_767_334_985_1)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_759)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_133e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_8)
                * r
                + 0.599_832_206_555_888)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Clamps exact endpoints; returns `None` for anything else outside `(0, 1)`.
#[inline]
pub fn clamp_unit(u: f64) -> (f64, bool) {
    if u == 0.0 {
        (CLAMP_LOW, true)
    } else if u == 1.0 {
        (CLAMP_HIGH, true)
    } else {
        (u, false)
    }
}

/// Points mapped to Gaussian space, with the number of clamped coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MappedPoints {
    pub points: Vec<Vec<f64>>,
    pub clamped: usize,
}

/// Componentwise quantile of a single point, writing into `out`. Returns the number
/// of clamped coordinates.
pub fn map_point_into(point: &[f64], out: &mut [f64]) -> Result<usize> {
    let mut clamped = 0;
    for (o, &u) in out.iter_mut().zip(point) {
        let (u, c) = clamp_unit(u);
        clamped += c as usize;
        *o = inv_cdf(u)?;
    }
    Ok(clamped)
}

/// Componentwise quantile map `(0,1)^m → R^m`.
pub fn map_points(points: &[Vec<f64>]) -> Result<MappedPoints> {
    let mut clamped = 0;
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        let mut xi = vec![0.0; p.len()];
        clamped += map_point_into(p, &mut xi)?;
        out.push(xi);
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} unit-cube coordinates at 0 or 1");
    }
    Ok(MappedPoints {
        points: out,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn density() {
        assert_relative_eq!(pdf(0.0), 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-16);
        assert_eq!(pdf(1.7), pdf(-1.7));
        let p10 = pdf(10.0);
        assert!(p10 > 0.0);
        assert_relative_eq!(p10, 7.694_598_626_706_42e-23, max_relative = 1e-12);
    }

    #[test]
    fn distribution() {
        assert_eq!(cdf(0.0), 0.5);
        for y in [0.1, 0.7, 1.0, 2.5, 5.0, 8.0] {
            assert!((cdf(y) + cdf(-y) - 1.0).abs() <= 1e-15);
        }
        assert_relative_eq!(cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
    }

    #[test]
    fn quantile_basics() {
        assert_eq!(inv_cdf(0.5).unwrap(), 0.0);
        assert_relative_eq!(
            inv_cdf(0.841_344_746_068_542_9).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(inv_cdf(0.0).is_err());
        assert!(inv_cdf(1.0).is_err());
        assert!(inv_cdf(f64::NAN).is_err());
        assert!(inv_cdf(1e-300).unwrap() < -37.0);
    }

    #[test]
    fn odd_symmetry() {
        for u in [1e-10, 1e-4, 0.01, 0.2, 0.4999] {
            // use the exactly representable pair (1 - v, v)
            let v = 1.0 - u;
            let a = inv_cdf(1.0 - v).unwrap();
            let b = inv_cdf(v).unwrap();
            assert!(
                (a + b).abs() <= 1e-12 * a.abs().max(1.0),
                "u = {u}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn clamping() {
        let mapped = map_points(&[vec![0.0, 1.0, 0.5]]).unwrap();
        assert_eq!(mapped.clamped, 2);
        assert!(mapped.points[0][0] < -8.0);
        assert!(mapped.points[0][1] > 8.0);
        assert_eq!(mapped.points[0][2], 0.0);
        assert!(map_points(&[vec![-0.1]]).is_err());
        assert!(map_points(&[vec![1.5]]).is_err());
    }

    #[test]
    fn map_examples() {
        assert_eq!(map_points(&[vec![0.5; 4]]).unwrap().points[0], vec![0.0; 4]);
        let m = map_points(&[vec![0.841_344_746, 0.158_655_254]]).unwrap();
        assert!((m.points[0][0] - 1.0).abs() < 1e-8);
        assert!((m.points[0][1] + 1.0).abs() < 1e-8);
        assert!(map_points(&[]).unwrap().points.is_empty());
    }
}
