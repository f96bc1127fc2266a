//! Simulation designs and the replication harness.
//!
//! Five two-covariate designs with closed-form coefficient curves. Data is
//! generated by inverse transform: a uniform draw `u` enters the coefficient
//! curves, so the conditional quantiles of `y` given the covariates are
//! exactly the model curves. Curves built from the normal quantile, the
//! logit, and the tangent are all strictly increasing, and the tangent blows
//! up at the endpoints, so uniform draws within 1e-12 of {0, 1} are redrawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::data::{Dataset, FitConfig, QuantileGrid};
use crate::error::Error;
use crate::estimator::{self, derive_seed, EstimatorKind};
use crate::linalg::Mat;
use crate::normal;
use crate::scalar::Scalar;

/// The five simulation designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimModel {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl SimModel {
    pub const ALL: [SimModel; 5] = [
        SimModel::M1,
        SimModel::M2,
        SimModel::M3,
        SimModel::M4,
        SimModel::M5,
    ];

    pub fn from_id(id: &str) -> Option<SimModel> {
        match id.to_ascii_uppercase().as_str() {
            "M1" => Some(SimModel::M1),
            "M2" => Some(SimModel::M2),
            "M3" => Some(SimModel::M3),
            "M4" => Some(SimModel::M4),
            "M5" => Some(SimModel::M5),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            SimModel::M1 => "M1",
            SimModel::M2 => "M2",
            SimModel::M3 => "M3",
            SimModel::M4 => "M4",
            SimModel::M5 => "M5",
        }
    }

    /// First coefficient curve.
    pub fn beta1<T: Scalar>(&self, tau: T) -> T {
        match self {
            SimModel::M1 | SimModel::M3 | SimModel::M4 => T::of(2.0),
            SimModel::M2 => T::of(2.0) + normal::quantile(tau),
            SimModel::M5 => T::one() + logit(tau),
        }
    }

    /// Second coefficient curve.
    pub fn beta2<T: Scalar>(&self, tau: T) -> T {
        match self {
            SimModel::M1 => T::one() + normal::quantile(tau),
            SimModel::M2 => T::of(2.0) + normal::quantile(tau),
            SimModel::M3 => T::one() + logit(tau),
            SimModel::M4 => T::one() + tan_curve(tau),
            SimModel::M5 => T::of(2.0) + tan_curve(tau),
        }
    }

    pub fn true_beta<T: Scalar>(&self, j: usize, tau: T) -> T {
        match j {
            0 => self.beta1(tau),
            1 => self.beta2(tau),
            _ => panic!("designs have two coefficients"),
        }
    }

    /// Derivative of the first coefficient curve.
    pub fn dbeta1<T: Scalar>(&self, tau: T) -> T {
        match self {
            SimModel::M1 | SimModel::M3 | SimModel::M4 => T::zero(),
            SimModel::M2 => normal_quantile_derivative(tau),
            SimModel::M5 => logit_derivative(tau),
        }
    }

    /// Derivative of the second coefficient curve.
    pub fn dbeta2<T: Scalar>(&self, tau: T) -> T {
        match self {
            SimModel::M1 | SimModel::M2 => normal_quantile_derivative(tau),
            SimModel::M3 => logit_derivative(tau),
            SimModel::M4 | SimModel::M5 => tan_curve_derivative(tau),
        }
    }

    /// True: the first covariate is the constant 1; otherwise standard
    /// log-normal, like the second covariate always is.
    pub fn x1_is_constant(&self) -> bool {
        matches!(self, SimModel::M1 | SimModel::M3 | SimModel::M4)
    }
}

fn logit<T: Scalar>(tau: T) -> T {
    (tau / (T::one() - tau)).ln()
}

fn logit_derivative<T: Scalar>(tau: T) -> T {
    T::one() / (tau * (T::one() - tau))
}

fn tan_curve<T: Scalar>(tau: T) -> T {
    T::of((std::f64::consts::PI * (tau.to_f64_lossy() - 0.5)).tan())
}

fn tan_curve_derivative<T: Scalar>(tau: T) -> T {
    let t = (std::f64::consts::PI * (tau.to_f64_lossy() - 0.5)).tan();
    T::of(std::f64::consts::PI * (1.0 + t * t))
}

fn normal_quantile_derivative<T: Scalar>(tau: T) -> T {
    T::one() / normal::pdf(normal::quantile(tau))
}

const ENDPOINT_GUARD: f64 = 1e-12;

/// Generate `n` observations from the design, deterministically in `seed`.
pub fn generate<T: Scalar>(model: SimModel, n: usize, seed: u64) -> Dataset<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = Vec::with_capacity(n);
    let mut x = Mat::zeros(n, 2);
    for i in 0..n {
        let x1 = if model.x1_is_constant() {
            1.0
        } else {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.exp()
        };
        let z2: f64 = StandardNormal.sample(&mut rng);
        let x2 = z2.exp();
        let u = loop {
            let u: f64 = rng.random();
            if u > ENDPOINT_GUARD && u < 1.0 - ENDPOINT_GUARD {
                break u;
            }
        };
        let u = T::of(u);
        let yi = T::of(x1) * model.beta1(u) + T::of(x2) * model.beta2(u);
        x[(i, 0)] = T::of(x1);
        x[(i, 1)] = T::of(x2);
        y.push(yi);
    }
    Dataset::new(y, x).expect("generated data is finite and well shaped")
}

/// Replication summary: per estimator, level, and coefficient.
#[derive(Debug, Clone)]
pub struct MonteCarloSummary<T> {
    pub model: SimModel,
    pub n: usize,
    pub grid: QuantileGrid<T>,
    pub replications: usize,
    pub failures: usize,
    pub seed: u64,
    /// `means[kind][k][j]`, kinds ordered TQE, SEF, EFF.
    pub means: [Vec<Vec<T>>; 3],
    pub sds: [Vec<Vec<T>>; 3],
}

impl<T: Scalar> MonteCarloSummary<T> {
    fn slot(kind: EstimatorKind) -> usize {
        match kind {
            EstimatorKind::Tqe => 0,
            EstimatorKind::Sef => 1,
            EstimatorKind::Eff => 2,
        }
    }

    pub fn mean(&self, kind: EstimatorKind, k: usize, j: usize) -> T {
        self.means[Self::slot(kind)][k][j]
    }

    pub fn sd(&self, kind: EstimatorKind, k: usize, j: usize) -> T {
        self.sds[Self::slot(kind)][k][j]
    }

    pub fn true_value(&self, k: usize, j: usize) -> T {
        self.model.true_beta(j, self.grid.level(k))
    }
}

/// Generate-and-estimate `replications` times; replicate seeds derive from
/// `cfg.seed` by index, so the summary is independent of scheduling.
pub fn run_monte_carlo<T: Scalar>(
    model: SimModel,
    n: usize,
    grid: &QuantileGrid<T>,
    replications: usize,
    cfg: &FitConfig<T>,
) -> Result<MonteCarloSummary<T>, Error> {
    if replications < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 replications".into(),
        ));
    }
    // surface bandwidth capping once, not once per replicate
    crate::density::resolve_bandwidth(cfg, n, grid, false)?;
    let results: Vec<Option<estimator::EstimateReport<T>>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let data = generate::<T>(model, n, derive_seed(cfg.seed, r as u64));
            estimator::estimate_impl(&data, grid, cfg, true).ok()
        })
        .collect();

    let successes: Vec<&estimator::EstimateReport<T>> =
        results.iter().flatten().collect();
    let failures = replications - successes.len();
    if failures * 50 > replications {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replications,
            limit_percent: 2,
        });
    }

    let l_count = grid.len();
    let p = 2;
    let mut means: [Vec<Vec<T>>; 3] = std::array::from_fn(|_| vec![vec![T::zero(); p]; l_count]);
    let mut sds: [Vec<Vec<T>>; 3] = std::array::from_fn(|_| vec![vec![T::zero(); p]; l_count]);
    for kind in EstimatorKind::ALL {
        let slot = MonteCarloSummary::<T>::slot(kind);
        for k in 0..l_count {
            for j in 0..p {
                let vals: Vec<T> = successes.iter().map(|r| r.estimate(kind, k, j)).collect();
                means[slot][k][j] = estimator::sample_mean(&vals);
                sds[slot][k][j] = estimator::sample_sd(&vals);
            }
        }
    }

    Ok(MonteCarloSummary {
        model,
        n,
        grid: grid.clone(),
        replications,
        failures,
        seed: cfg.seed,
        means,
        sds,
    })
}
