//! The one-step estimation pipeline and its bootstrap inference.
//!
//! `estimate` runs: grid fit (initial estimates and off-grid fits), plug-in
//! density, information system, score means, and finally the affine one-step
//! update `β̂ = β̂ᶜ + σ̂² · mean(Ŝ)` for every (level, coefficient) pair.
//! Two corrected estimators come out: EFF pools information across the whole
//! grid through the multi-level score; SEF uses only the level's own
//! single-quantile score. The uncorrected grid fit is the TQE baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, FitConfig, QuantileGrid};
use crate::density;
use crate::error::Error;
use crate::linalg;
use crate::normal;
use crate::pinball;
use crate::scalar::Scalar;
use crate::score::{self, ScoreSystem};

/// The three estimators reported per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Tqe,
    Sef,
    Eff,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Tqe, EstimatorKind::Sef, EstimatorKind::Eff];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Tqe => "TQE",
            EstimatorKind::Sef => "SEF",
            EstimatorKind::Eff => "EFF",
        }
    }
}

/// Pipeline health counters surfaced alongside the estimates.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// Density cells where the floor was applied.
    pub clamped_cells: usize,
    /// Observations whose fitted quantile boundaries crossed.
    pub crossed_observations: usize,
    /// Total solver iterations over all pinball fits.
    pub solver_iterations: usize,
    /// Pinball fits that exhausted their pivot budget.
    pub non_converged_fits: usize,
}

/// Point estimates and update ingredients for every (level, coefficient).
#[derive(Debug, Clone)]
pub struct EstimateReport<T> {
    grid: QuantileGrid<T>,
    n: usize,
    p: usize,
    tqe: Vec<Vec<T>>,
    sef: Vec<Vec<T>>,
    eff: Vec<Vec<T>>,
    sigma2_hat: Vec<Vec<T>>,
    sef_sigma2_hat: Vec<Vec<T>>,
    mean_score: Vec<Vec<T>>,
    sef_mean_score: Vec<Vec<T>>,
    bandwidth: T,
    pub diagnostics: Diagnostics,
}

impl<T: Scalar> EstimateReport<T> {
    pub fn grid(&self) -> &QuantileGrid<T> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn estimate(&self, kind: EstimatorKind, k: usize, j: usize) -> T {
        match kind {
            EstimatorKind::Tqe => self.tqe[k][j],
            EstimatorKind::Sef => self.sef[k][j],
            EstimatorKind::Eff => self.eff[k][j],
        }
    }

    pub fn tqe(&self, k: usize, j: usize) -> T {
        self.tqe[k][j]
    }

    pub fn sef(&self, k: usize, j: usize) -> T {
        self.sef[k][j]
    }

    pub fn eff(&self, k: usize, j: usize) -> T {
        self.eff[k][j]
    }

    /// Estimated variance bound for the pooled-information update.
    pub fn sigma2_hat(&self, k: usize, j: usize) -> T {
        self.sigma2_hat[k][j]
    }

    pub fn sef_sigma2_hat(&self, k: usize, j: usize) -> T {
        self.sef_sigma2_hat[k][j]
    }

    /// Mean estimated score driving the pooled update; the update is affine,
    /// so `eff == tqe + sigma2_hat * mean_score` reconstructs exactly.
    pub fn mean_score(&self, k: usize, j: usize) -> T {
        self.mean_score[k][j]
    }

    pub fn sef_mean_score(&self, k: usize, j: usize) -> T {
        self.sef_mean_score[k][j]
    }

    /// Large-sample standard error implied by the variance bound.
    pub fn asymptotic_se(&self, kind: EstimatorKind, k: usize, j: usize) -> Option<T> {
        let s2 = match kind {
            EstimatorKind::Eff => self.sigma2_hat[k][j],
            EstimatorKind::Sef => self.sef_sigma2_hat[k][j],
            EstimatorKind::Tqe => return None,
        };
        Some((s2 / T::of(self.n as f64)).sqrt())
    }
}

/// Run the full pipeline on one dataset.
pub fn estimate<T: Scalar>(
    data: &Dataset<T>,
    grid: &QuantileGrid<T>,
    cfg: &FitConfig<T>,
) -> Result<EstimateReport<T>, Error> {
    estimate_impl(data, grid, cfg, false)
}

pub(crate) fn estimate_impl<T: Scalar>(
    data: &Dataset<T>,
    grid: &QuantileGrid<T>,
    cfg: &FitConfig<T>,
    quiet: bool,
) -> Result<EstimateReport<T>, Error> {
    let (coeffs, fit_stats) =
        pinball::fit_grid_detailed(data, grid, cfg, quiet).map_err(Error::in_stage("fit"))?;
    let dens =
        density::estimate_density(data, &coeffs, cfg).map_err(Error::in_stage("density"))?;

    let n = data.n();
    let p = data.p();
    let l_count = grid.len();
    let spacings = grid.spacings();

    let u = score::assemble_u(data, &dens, grid);
    let sys = ScoreSystem::new(u).map_err(Error::in_stage("score"))?;

    // Boundaries and interval memberships are shared by every coefficient's
    // score; compute them once.
    let mut crossed_observations = 0usize;
    let mut intervals = vec![0usize; n];
    for i in 0..n {
        let xi = data.row(i);
        let mut b: Vec<T> = (0..l_count)
            .map(|l| linalg::dot(xi, coeffs.column(l)))
            .collect();
        if b.windows(2).any(|w| w[1] < w[0]) {
            crossed_observations += 1;
            b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        }
        intervals[i] = score::interval_index(data.y()[i], &b);
    }

    let tqe: Vec<Vec<T>> = coeffs.columns().to_vec();
    let mut eff = vec![vec![T::zero(); p]; l_count];
    let mut sigma2_hat = vec![vec![T::zero(); p]; l_count];
    let mut mean_score = vec![vec![T::zero(); p]; l_count];
    let inv_n = T::one() / T::of(n as f64);

    for k in 0..l_count {
        for j in 0..p {
            let m = k * p + j;
            let d = sys.direction(m);
            let mut total = T::zero();
            let mut weights = vec![T::zero(); l_count];
            for i in 0..n {
                let xi = data.row(i);
                for l in 0..l_count {
                    weights[l] = dens.f_hat(i, l) * linalg::dot(xi, &d[l * p..(l + 1) * p]);
                }
                total += score::score_given_interval(intervals[i], &weights, &spacings);
            }
            let mean = total * inv_n;
            let s2 = sys.sigma2(m);
            mean_score[k][j] = mean;
            sigma2_hat[k][j] = s2;
            eff[k][j] = tqe[k][j] + s2 * mean;
        }
    }

    // Single-quantile variant: same one-step form, but the level's own score
    // and its own (p-dimensional) information system.
    let mut sef = vec![vec![T::zero(); p]; l_count];
    let mut sef_sigma2_hat = vec![vec![T::zero(); p]; l_count];
    let mut sef_mean_score = vec![vec![T::zero(); p]; l_count];
    for k in 0..l_count {
        let tau = grid.level(k);
        let uk = score::single_level_u(data, &dens, k, tau);
        let sys_k = ScoreSystem::new(uk).map_err(Error::in_stage("score"))?;
        for j in 0..p {
            let d = sys_k.direction(j);
            let mut total = T::zero();
            for i in 0..n {
                total += score::single_quantile_score(
                    data.y()[i],
                    data.row(i),
                    coeffs.column(k),
                    dens.f_hat(i, k),
                    tau,
                    &d,
                );
            }
            let mean = total * inv_n;
            let s2 = sys_k.sigma2(j);
            sef_mean_score[k][j] = mean;
            sef_sigma2_hat[k][j] = s2;
            sef[k][j] = tqe[k][j] + s2 * mean;
        }
    }

    Ok(EstimateReport {
        grid: grid.clone(),
        n,
        p,
        tqe,
        sef,
        eff,
        sigma2_hat,
        sef_sigma2_hat,
        mean_score,
        sef_mean_score,
        bandwidth: dens.h(),
        diagnostics: Diagnostics {
            clamped_cells: dens.clamped_count(),
            crossed_observations,
            solver_iterations: fit_stats.solver_iterations,
            non_converged_fits: fit_stats.non_converged,
        },
    })
}

/// Bootstrap standard errors and p-values for every estimator and cell.
#[derive(Debug, Clone)]
pub struct BootstrapReport<T> {
    pub full: EstimateReport<T>,
    /// Sample SD of replicate estimates, indexed like the report cells.
    pub esd: [Vec<Vec<T>>; 3],
    /// `1 - Phi(|est / esd|)` per cell, same indexing.
    pub p_values: [Vec<Vec<T>>; 3],
    pub replications: usize,
    pub failures: usize,
    pub seed: u64,
}

impl<T: Scalar> BootstrapReport<T> {
    fn slot(kind: EstimatorKind) -> usize {
        match kind {
            EstimatorKind::Tqe => 0,
            EstimatorKind::Sef => 1,
            EstimatorKind::Eff => 2,
        }
    }

    pub fn esd(&self, kind: EstimatorKind, k: usize, j: usize) -> T {
        self.esd[Self::slot(kind)][k][j]
    }

    pub fn p_value(&self, kind: EstimatorKind, k: usize, j: usize) -> T {
        self.p_values[Self::slot(kind)][k][j]
    }
}

/// Nonparametric pairs bootstrap: rows are resampled with replacement and the
/// whole pipeline reruns per replicate. Replicate RNG streams derive from the
/// seed and replicate index, so results do not depend on scheduling.
pub fn bootstrap_se<T: Scalar>(
    data: &Dataset<T>,
    grid: &QuantileGrid<T>,
    cfg: &FitConfig<T>,
    replications: usize,
    seed: u64,
) -> Result<BootstrapReport<T>, Error> {
    if replications < 2 {
        return Err(Error::InvalidConfig(
            "bootstrap needs at least 2 replications".into(),
        ));
    }
    let full = estimate(data, grid, cfg)?;
    let n = data.n();

    let replicates: Vec<Result<EstimateReport<T>, Error>> = (0..replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            estimate_impl(&data.resample(&idx), grid, cfg, true)
        })
        .collect();

    let successes: Vec<&EstimateReport<T>> =
        replicates.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = replications - successes.len();
    if failures * 10 > replications {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replications,
            limit_percent: 10,
        });
    }

    let l_count = grid.len();
    let p = data.p();
    let mut esd: [Vec<Vec<T>>; 3] = std::array::from_fn(|_| vec![vec![T::zero(); p]; l_count]);
    let mut p_values: [Vec<Vec<T>>; 3] =
        std::array::from_fn(|_| vec![vec![T::zero(); p]; l_count]);
    for kind in EstimatorKind::ALL {
        let slot = BootstrapReport::<T>::slot(kind);
        for k in 0..l_count {
            for j in 0..p {
                let values: Vec<T> = successes.iter().map(|r| r.estimate(kind, k, j)).collect();
                let sd = sample_sd(&values);
                esd[slot][k][j] = sd;
                let z = (full.estimate(kind, k, j) / sd).abs();
                p_values[slot][k][j] = T::one() - normal::cdf(z);
            }
        }
    }

    Ok(BootstrapReport {
        full,
        esd,
        p_values,
        replications,
        failures,
        seed,
    })
}

/// Counter-based seed stream: independent of thread scheduling, stable across
/// runs.
pub(crate) fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn sample_mean<T: Scalar>(values: &[T]) -> T {
    let mut s = T::zero();
    for v in values {
        s += *v;
    }
    s / T::of(values.len() as f64)
}

/// Sample standard deviation (n-1 denominator).
pub(crate) fn sample_sd<T: Scalar>(values: &[T]) -> T {
    let n = values.len();
    if n < 2 {
        return T::zero();
    }
    let mean = sample_mean(values);
    let mut ss = T::zero();
    for v in values {
        let d = *v - mean;
        ss += d * d;
    }
    (ss / T::of((n - 1) as f64)).sqrt()
}
