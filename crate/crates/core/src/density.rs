//! Conditional density via the derivative of the coefficient path.
//!
//! Under the multi-level model the density of `Y` given `X = x` at the fitted
//! quantile satisfies `f = 1 / (x' β̇(τ))`, so instead of any kernel smoother
//! we estimate `β̇(τ_l)` by the symmetric difference quotient of the pinball
//! fits at `τ_l ± h` and take reciprocals. Quantile crossing in finite
//! samples can drive `x' β̇` to zero or below; a floor keeps the reciprocal
//! finite and the downstream information matrix positive definite, and the
//! number of floored cells is reported.

use crate::data::{BandwidthRule, CoefficientSet, Dataset, FitConfig, QuantileGrid};
use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// Per-observation, per-level density estimates.
#[derive(Debug, Clone)]
pub struct DensityEstimates<T> {
    f_hat: Mat<T>,
    denominators: Mat<T>,
    dbeta_hat: Vec<Vec<T>>,
    h: T,
    clamped_count: usize,
}

impl<T: Scalar> DensityEstimates<T> {
    /// Wrap known density values (analytic curves, oracle fixtures) in the
    /// estimate container; entries must be finite and strictly positive.
    pub fn from_densities(f_hat: Mat<T>) -> Result<Self, Error> {
        let (n, l_count) = (f_hat.rows(), f_hat.cols());
        let mut denominators = Mat::zeros(n, l_count);
        for i in 0..n {
            for l in 0..l_count {
                let f = f_hat[(i, l)];
                if !(f.is_finite() && f > T::zero()) {
                    return Err(Error::NonFinite {
                        what: "density value",
                        row: i + 1,
                    });
                }
                denominators[(i, l)] = T::one() / f;
            }
        }
        Ok(DensityEstimates {
            f_hat,
            denominators,
            dbeta_hat: Vec::new(),
            h: T::zero(),
            clamped_count: 0,
        })
    }

    /// `f̂_{Y|X=x_i}` at level `l`.
    pub fn f_hat(&self, i: usize, l: usize) -> T {
        self.f_hat[(i, l)]
    }

    /// Row of estimates for observation `i` (length L).
    pub fn row(&self, i: usize) -> &[T] {
        self.f_hat.row(i)
    }

    /// Raw `x_i' · dbeta(τ_l)` before the floor.
    pub fn denominator(&self, i: usize, l: usize) -> T {
        self.denominators[(i, l)]
    }

    pub fn dbeta_hat(&self) -> &[Vec<T>] {
        &self.dbeta_hat
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn clamped_count(&self) -> usize {
        self.clamped_count
    }
}

/// Symmetric difference quotient `(β̂(τ+h) - β̂(τ-h)) / (2h)`.
pub fn estimate_derivative<T: Scalar>(fits_plus: &[T], fits_minus: &[T], h: T) -> Vec<T> {
    assert!(h > T::zero(), "bandwidth must be positive");
    assert_eq!(fits_plus.len(), fits_minus.len());
    let inv = T::one() / (T::of(2.0) * h);
    fits_plus
        .iter()
        .zip(fits_minus)
        .map(|(p, m)| (*p - *m) * inv)
        .collect()
}

/// Density estimates from a coefficient set that carries its off-grid fits.
pub fn estimate_density<T: Scalar>(
    data: &Dataset<T>,
    coeffs: &CoefficientSet<T>,
    cfg: &FitConfig<T>,
) -> Result<DensityEstimates<T>, Error> {
    cfg.validate()?;
    let off = coeffs.offgrid().ok_or(Error::MissingOffGridFits)?;
    let l_count = coeffs.grid().len();
    let n = data.n();
    let floor = cfg.density_floor;

    let dbeta_hat: Vec<Vec<T>> = (0..l_count)
        .map(|l| estimate_derivative(&off.plus[l], &off.minus[l], off.h))
        .collect();

    let mut f_hat = Mat::zeros(n, l_count);
    let mut denominators = Mat::zeros(n, l_count);
    let mut clamped_count = 0usize;
    for i in 0..n {
        let xi = data.row(i);
        for l in 0..l_count {
            let d = linalg::dot(xi, &dbeta_hat[l]);
            denominators[(i, l)] = d;
            if d < floor {
                clamped_count += 1;
                f_hat[(i, l)] = T::one() / floor;
            } else {
                f_hat[(i, l)] = T::one() / d;
            }
        }
    }
    if clamped_count == n * l_count {
        return Err(Error::DegenerateDensity { total: n * l_count });
    }
    Ok(DensityEstimates {
        f_hat,
        denominators,
        dbeta_hat,
        h: off.h,
        clamped_count,
    })
}

/// Rate-respecting default bandwidth `n^(-1/5)` (before the feasibility cap).
pub fn default_bandwidth<T: Scalar>(n: usize) -> T {
    assert!(n >= 2, "need at least two observations");
    T::of((n as f64).powf(-0.2))
}

/// Largest bandwidth keeping every `tau_l ± h` strictly inside (0, 1).
pub fn feasibility_cap<T: Scalar>(grid: &QuantileGrid<T>) -> T {
    (grid.first().min(T::one() - grid.last())) / T::of(2.0)
}

/// Bandwidth actually used by grid fitting: explicit values are validated,
/// automatic ones are capped (with a warning when the cap bites; replicate
/// loops resolve quietly so the warning appears once per user action).
pub(crate) fn resolve_bandwidth<T: Scalar>(
    cfg: &FitConfig<T>,
    n: usize,
    grid: &QuantileGrid<T>,
    quiet: bool,
) -> Result<(T, bool), Error> {
    match cfg.bandwidth {
        BandwidthRule::Explicit(h) => {
            let bad_low = grid.first() - h <= T::zero();
            let bad_high = grid.last() + h >= T::one();
            if bad_low || bad_high {
                let tau = if bad_low { grid.first() } else { grid.last() };
                return Err(Error::BandwidthOutOfRange {
                    h: h.to_f64_lossy(),
                    tau: tau.to_f64_lossy(),
                });
            }
            Ok((h, false))
        }
        BandwidthRule::Automatic { c } => {
            if n < 2 {
                return Err(Error::InvalidConfig(
                    "automatic bandwidth needs n >= 2".into(),
                ));
            }
            let raw = c * default_bandwidth(n);
            let cap = feasibility_cap(grid);
            if raw > cap {
                if !quiet {
                    log::warn!(
                        "bandwidth {} capped to {} to keep off-grid levels inside (0,1)",
                        raw,
                        cap
                    );
                }
                Ok((cap, true))
            } else {
                Ok((raw, false))
            }
        }
    }
}
