// SPDX-License-Identifier: MIT OR Apache-2.0

//! Smoothing kernels and kernel-smoothed pairwise win fractions.

use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::types::DataView;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelFamily {
    /// `K(v) = 0.75 (1 - v²)` on `|v| <= 1`.
    #[default]
    Epanechnikov,
    /// Standard normal density.
    Gaussian,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Gaussian => "gaussian",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(KernelFamily::Epanechnikov),
            "gaussian" | "normal" => Ok(KernelFamily::Gaussian),
            other => Err(Error::invalid(alloc::format!("unknown kernel family {other:?}"))),
        }
    }
}

/// Kernel family plus bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(alloc::format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KernelSpec { family, bandwidth })
    }

    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Epanechnikov, bandwidth)
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Unscaled kernel `K(v)`.
    #[inline]
    pub fn profile(&self, v: f64) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => {
                if v.abs() <= 1.0 {
                    0.75 * (1.0 - v * v)
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian => (-0.5 * v * v).exp() / (2.0 * PI).sqrt(),
        }
    }

    /// `K_h(t, s) = K((t - s) / h) / h`
    #[inline]
    pub fn weight(&self, t: f64, s: f64) -> f64 {
        self.profile((t - s) / self.bandwidth) / self.bandwidth
    }

    /// Half-width of the support in time units, `None` when unbounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.family {
            KernelFamily::Epanechnikov => Some(self.bandwidth),
            KernelFamily::Gaussian => None,
        }
    }

    /// `∫ K²(v) dv`
    pub fn roughness(&self) -> f64 {
        match self.family {
            KernelFamily::Epanechnikov => 0.6,
            KernelFamily::Gaussian => 1.0 / (2.0 * PI.sqrt()),
        }
    }
}

pub fn kernel_weight(spec: &KernelSpec, t: f64, s: f64) -> f64 {
    spec.weight(t, s)
}

/// Kernel-weighted fraction of `{i, j}` comparisons favouring `j` at `t`.
///
/// `None` when no comparison of the pair carries kernel mass at `t`.
pub fn smoothed_win_fraction<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    i: usize,
    j: usize,
    t: f64,
) -> Option<f64> {
    assert_ne!(i, j, "a pair needs two distinct items");
    let view = data.into();
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let pm = view.pair_mass(spec, lo, hi, t);
    if pm.mass <= 0.0 {
        return None;
    }
    let hi_frac = pm.hi_won / pm.mass;
    Some(if j == hi { hi_frac } else { 1.0 - hi_frac })
}
