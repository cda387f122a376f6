// SPDX-License-Identifier: MIT OR Apache-2.0

//! Asymptotic covariance of group-level scores and pointwise confidence
//! bands for the refit estimator.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grouping::GroupedScores;
use crate::kernel::KernelSpec;
use crate::linalg::{inverse, rank_factorization, Matrix};
use crate::{Error, Result};

const RANK_TOL: f64 = 1e-10;

/// Group inverse `A#` by full-rank factorization: with `A = CF`,
/// `A# = C (FC)⁻² F`.
///
/// Fails when `A` has index above one, which shows up as a singular `FC`.
pub fn group_inverse(a: &Matrix) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch("group inverse needs a square matrix".into()));
    }
    let (c, f) = rank_factorization(a, RANK_TOL);
    if c.cols() == 0 {
        return Ok(Matrix::zeros(a.rows(), a.cols()));
    }
    let fc = f.matmul(&c);
    let inv = inverse(&fc)
        .ok_or_else(|| Error::invalid("matrix has index greater than one; no group inverse"))?;
    Ok(c.matmul(&inv).matmul(&inv).matmul(&f))
}

/// `ΓΛΓᵀ` together with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCovariance {
    pub groups: usize,
    /// Group pairs `(k, l)`, `k < l`, indexing `lambda` and the columns of
    /// `gamma`.
    pub pairs: Vec<(usize, usize)>,
    /// Diagonal of `Λ`.
    pub lambda: Vec<f64>,
    /// `B x B(B-1)/2`
    pub gamma: Matrix,
    pub covariance: Matrix,
}

fn check_simplex(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid(alloc::format!("{what} must be strictly positive")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(alloc::format!("{what} must sum to one, got {s}")));
    }
    Ok(())
}

fn covariance(scores: &[f64], r: &[f64], kernel_l2: f64, divide_by_b: bool) -> Result<AsymptoticCovariance> {
    let b = scores.len();
    if b < 2 {
        return Err(Error::invalid("covariance needs at least two groups"));
    }
    if r.len() != b {
        return Err(Error::ShapeMismatch(alloc::format!("{} group fractions for {b} groups", r.len())));
    }
    check_simplex(scores, "group scores")?;
    check_simplex(r, "group fractions")?;
    if !(kernel_l2 > 0.0) {
        return Err(Error::invalid("kernel roughness must be positive"));
    }
    let bf = b as f64;
    let div = if divide_by_b { bf } else { 1.0 };
    let mut a = Matrix::zeros(b, b);
    for l in 0..b {
        let mut out = 0.0;
        for k in 0..b {
            if k != l {
                let p = scores[k] / (scores[l] + scores[k]) / div;
                a[(l, k)] = -p;
                out += p;
            }
        }
        a[(l, l)] = out;
    }
    let ash = group_inverse(&a)?;
    let pairs: Vec<(usize, usize)> = (0..b).flat_map(|k| (k + 1..b).map(move |l| (k, l))).collect();
    let lambda: Vec<f64> = pairs
        .iter()
        .map(|&(k, l)| {
            let s = scores[k] + scores[l];
            scores[k] * scores[l] / (s * s) / (r[k] * r[l]) * kernel_l2
        })
        .collect();
    let gamma = Matrix::from_fn(b, pairs.len(), |i, c| {
        let (k, l) = pairs[c];
        (ash[(l, i)] - ash[(k, i)]) * (scores[k] + scores[l]) / bf
    });
    let mut cov = Matrix::zeros(b, b);
    for i in 0..b {
        for j in 0..b {
            cov[(i, j)] = (0..pairs.len())
                .map(|c| gamma[(i, c)] * lambda[c] * gamma[(j, c)])
                .sum();
        }
    }
    Ok(AsymptoticCovariance {
        groups: b,
        pairs,
        lambda,
        gamma,
        covariance: cov,
    })
}

/// Covariance `ΓΛΓᵀ` built on the group walk `P*_lk = π_k / (π_l + π_k)`.
///
/// `r` holds the group fractions `|G_k|/n` and `kernel_l2 = ∫K²`.
pub fn asymptotic_covariance(scores: &[f64], r: &[f64], kernel_l2: f64) -> Result<AsymptoticCovariance> {
    covariance(scores, r, kernel_l2, false)
}

/// Covariance of the refit group scores, built on the walk actually used
/// by the refit, `P_lk = π_k / (π_l + π_k) / B`.
///
/// Dividing the walk by `B` multiplies its group inverse by `B`, so this is
/// `B²` times [`asymptotic_covariance`].
pub fn refit_asymptotic_covariance(
    scores: &[f64],
    r: &[f64],
    kernel_l2: f64,
) -> Result<AsymptoticCovariance> {
    covariance(scores, r, kernel_l2, true)
}

/// Standard normal quantile (Wichura's AS 241, about 16 digits).
pub fn normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(c: &[f64; 8], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_545e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Pointwise bands for the refit group scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub level: f64,
    /// `n² · M · h` used to scale the covariance.
    pub scale: f64,
    /// `m x B` half-widths; row `k` belongs to grid point `t_k`.
    pub half_widths: Matrix,
}

/// Half-widths `z_{(1+level)/2} · sqrt(diag(ΓΛΓᵀ) / (n² M h))` per group and
/// grid point, with the estimated group scores plugged in.
///
/// `per_pair_rate` is `M`, the number of comparisons per pair and unit
/// time.
pub fn confidence_band(
    grouped: &GroupedScores,
    per_pair_rate: f64,
    kernel: &KernelSpec,
    level: f64,
) -> Result<ConfidenceBand> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::invalid(alloc::format!("level must lie in [0, 1), got {level}")));
    }
    if !(per_pair_rate > 0.0) {
        return Err(Error::invalid("comparison rate must be positive"));
    }
    let part = &grouped.partition;
    let n = part.n_items() as f64;
    let b = part.group_count();
    let m = grouped.group_scores.rows();
    let scale = n * n * per_pair_rate * kernel.bandwidth();
    let z = normal_quantile(0.5 + 0.5 * level);
    let mut half = Matrix::zeros(m, b);
    if b >= 2 && level > 0.0 {
        let r: Vec<f64> = part.group_sizes().iter().map(|&s| s as f64 / n).collect();
        for k in 0..m {
            let scores = grouped.group_scores.row(k);
            let cov = refit_asymptotic_covariance(scores, &r, kernel.roughness())?;
            for g in 0..b {
                half[(k, g)] = z * (cov.covariance[(g, g)].max(0.0) / scale).sqrt();
            }
        }
    }
    Ok(ConfidenceBand {
        level,
        scale,
        half_widths: half,
    })
}

/// Symmetric eigenvalue check helper: smallest eigenvalue of a symmetric
/// matrix by Jacobi rotations.
pub fn symmetric_min_eigenvalue(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut rot = Matrix::identity(n);
                rot[(p, p)] = c;
                rot[(q, q)] = c;
                rot[(p, q)] = s;
                rot[(q, p)] = -s;
                m = rot.transpose().matmul(&m).matmul(&rot);
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identities(a: &Matrix, g: &Matrix) -> f64 {
        let e1 = a.matmul(g).matmul(a).sub(a).max_abs();
        let e2 = g.matmul(a).matmul(g).sub(g).max_abs();
        let e3 = a.matmul(g).sub(&g.matmul(a)).max_abs();
        e1.max(e2).max(e3)
    }

    #[test]
    fn invertible_is_inverse() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let g = group_inverse(&a).unwrap();
        assert!(g.sub(&inverse(&a).unwrap()).max_abs() < 1e-14);
    }

    #[test]
    fn idempotent_is_its_own() {
        let a = Matrix::from_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        let g = group_inverse(&a).unwrap();
        assert!(g.sub(&a).max_abs() < 1e-15);
        assert!(identities(&a, &g) < 1e-15);
    }

    #[test]
    fn zero_is_zero() {
        let g = group_inverse(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(g, Matrix::zeros(3, 3));
    }

    #[test]
    fn nilpotent_is_rejected() {
        let a = Matrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(group_inverse(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn two_group_hand_case() {
        let c = asymptotic_covariance(&[0.5, 0.5], &[0.5, 0.5], 0.6).unwrap();
        let want = Matrix::from_rows(&[&[0.15, -0.15], &[-0.15, 0.15]]);
        assert!(c.covariance.sub(&want).max_abs() < 1e-15);
        assert!((c.lambda[0] - 0.6).abs() < 1e-15);
        assert!((c.gamma[(0, 0)] + 0.5).abs() < 1e-15 && (c.gamma[(1, 0)] - 0.5).abs() < 1e-15);
        let scaled = refit_asymptotic_covariance(&[0.5, 0.5], &[0.5, 0.5], 0.6).unwrap();
        assert!(scaled.covariance.sub(&want.scale(4.0)).max_abs() < 1e-14);
    }

    #[test]
    fn rows_sum_to_zero() {
        let c = asymptotic_covariance(&[0.5, 0.3, 0.2], &[0.3, 0.3, 0.4], 0.6).unwrap();
        for i in 0..3 {
            assert!(c.covariance.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
        assert!(symmetric_min_eigenvalue(&c.covariance) > -1e-10);
    }

    #[test]
    fn not_a_simplex() {
        assert!(asymptotic_covariance(&[0.5, 0.6], &[0.5, 0.5], 0.6).is_err());
    }

    #[test]
    fn quantiles() {
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert!((normal_quantile(0.5)).abs() < 1e-16);
        assert!((normal_quantile(1e-10) + 6.361_340_902_404_056).abs() < 1e-12);
        assert!((normal_quantile(0.1) + 1.281_551_565_544_600_4).abs() < 1e-14);
    }

    #[test]
    fn jacobi_min_eigen() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((symmetric_min_eigenvalue(&a) - 1.0).abs() < 1e-12);
    }
}
