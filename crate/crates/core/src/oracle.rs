//! Brute-force verifiers, independent of the production solvers they certify.
//!
//! Each oracle recomputes a quantity by a different route (exhaustive
//! enumeration, coordinate elimination, closed-form identities) on instances
//! small enough that the route is unquestionably correct. They back the test
//! suite and the `selftest` command; size caps make them refuse rather than
//! silently subsample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{CoefficientSet, Dataset, FitConfig, QuantileGrid};
use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::pinball;
use crate::scalar::Scalar;
use crate::score;

/// One oracle outcome: the worst discrepancy seen and the verdict against the
/// stated tolerance.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub check: String,
    pub instance: String,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    fn within(check: &str, instance: String, max_discrepancy: f64, tolerance: f64) -> Self {
        OracleReport {
            check: check.to_string(),
            instance,
            max_discrepancy,
            tolerance,
            pass: max_discrepancy <= tolerance,
        }
    }
}

const ORACLE_MAX_N: usize = 50;
const ORACLE_MAX_P: usize = 3;
const ORACLE_MAX_DIM: usize = 12;

/// Exhaustive check-loss minimizer: try every interpolation vertex (each
/// nonsingular p-subset of observations) and keep the best objective, ties
/// resolved to the lexicographically smallest coefficient vector.
pub fn pinball_vertex_oracle<T: Scalar>(data: &Dataset<T>, tau: T) -> Result<Vec<T>, Error> {
    pinball::check_level(tau)?;
    let (n, p) = (data.n(), data.p());
    if n > ORACLE_MAX_N || p > ORACLE_MAX_P {
        return Err(Error::OracleLimit(format!(
            "vertex enumeration accepts n <= {ORACLE_MAX_N}, p <= {ORACLE_MAX_P}; got n={n}, p={p}"
        )));
    }
    let mut best: Option<(T, Vec<T>)> = None;
    for_each_combination(n, p, &mut |subset| {
        let xs = Mat::from_fn(p, p, |r, c| data.row(subset[r])[c]);
        let ys: Vec<T> = subset.iter().map(|&i| data.y()[i]).collect();
        let Some(beta) = linalg::solve_square(&xs, &ys, T::of(1e-10)) else {
            return;
        };
        let obj = pinball::objective(data, tau, &beta);
        if !obj.is_finite() {
            return;
        }
        match &best {
            None => best = Some((obj, beta)),
            Some((best_obj, best_beta)) => {
                let tie = T::of(1e-9) * (T::one() + best_obj.abs());
                if obj < *best_obj - tie {
                    best = Some((obj, beta));
                } else if obj < *best_obj + tie && pinball::lex_less(&beta, best_beta) {
                    let obj = obj.min(*best_obj);
                    best = Some((obj, beta));
                }
            }
        }
    });
    best.map(|(_, beta)| beta).ok_or(Error::Singular)
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        // advance the combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimize `d' U d` subject to `d_m = 1` by eliminating the constrained
/// coordinate and solving the reduced normal equations — no Lagrange step.
pub fn quadratic_min_oracle<T: Scalar>(u: &Mat<T>, m: usize) -> Result<(Vec<T>, T), Error> {
    let dim = u.rows();
    if dim > ORACLE_MAX_DIM {
        return Err(Error::OracleLimit(format!(
            "elimination oracle accepts dimension <= {ORACLE_MAX_DIM}, got {dim}"
        )));
    }
    assert!(m < dim);
    if dim == 1 {
        if !(u[(0, 0)] > T::zero()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: u[(0, 0)].to_f64_lossy(),
            });
        }
        return Ok((vec![T::one()], u[(0, 0)]));
    }
    let free: Vec<usize> = (0..dim).filter(|&i| i != m).collect();
    let uff = Mat::from_fn(dim - 1, dim - 1, |r, c| u[(free[r], free[c])]);
    let rhs: Vec<T> = free.iter().map(|&r| -u[(r, m)]).collect();
    let z = linalg::spd_solve(&uff, &rhs)?;
    let mut d = vec![T::zero(); dim];
    d[m] = T::one();
    for (slot, &r) in free.iter().enumerate() {
        d[r] = z[slot];
    }
    let value = linalg::dot(&d, &u.matvec(&d));
    Ok((d, value))
}

/// For a single-covariate model with known coefficient curve, the pooled
/// score at the optimal direction collapses to a single bracket that only
/// involves the target level. Evaluates both forms over a spread of response
/// values and reports the worst gap, and also checks the stationarity
/// identity satisfied by the optimal direction at every other level.
pub fn p1_reduction_check<T: Scalar>(
    grid: &QuantileGrid<T>,
    beta: impl Fn(T) -> T,
    dbeta: impl Fn(T) -> T,
    x: T,
) -> OracleReport {
    let l_count = grid.len();
    let db: Vec<T> = grid.levels().iter().map(|&t| dbeta(t)).collect();
    let u = p1_information(grid, &db);

    let columns: Vec<Vec<T>> = grid.levels().iter().map(|&t| vec![beta(t)]).collect();
    let coeffs = CoefficientSet::new(grid.clone(), columns).unwrap();
    let dens_row: Vec<T> = db.iter().map(|&d| T::one() / (x * d)).collect();
    let boundaries: Vec<T> = grid.levels().iter().map(|&t| x * beta(t)).collect();
    let spacings = grid.spacings();

    let mut worst = 0.0f64;
    for k in 0..l_count {
        let (d, _) = quadratic_min_oracle(&u, k).expect("analytic information is SPD");
        // probe below, between, above, and exactly on the boundaries
        let mut probes = Vec::new();
        probes.push(boundaries[0] - T::one());
        for w in 0..l_count {
            probes.push(boundaries[w]);
            let next = if w + 1 < l_count {
                (boundaries[w] + boundaries[w + 1]) / T::of(2.0)
            } else {
                boundaries[w] + T::one()
            };
            probes.push(next);
        }
        for &y in &probes {
            let full = score::efficient_score(y, &[x], &coeffs, &dens_row, &d);
            let collapsed = rm3_score(y, x, grid, &d, &db, &beta, k);
            worst = worst.max((full - collapsed).abs().to_f64_lossy());
        }
        // stationarity at the non-target levels
        for l in 0..l_count {
            if l == k {
                continue;
            }
            let ratio = |i: isize| -> T {
                if i < 0 || i as usize >= l_count {
                    T::zero()
                } else {
                    d[i as usize] / db[i as usize]
                }
            };
            let li = l as isize;
            let res = spacings[l + 1] * (ratio(li - 1) - ratio(li))
                - spacings[l] * (ratio(li) - ratio(li + 1));
            worst = worst.max(res.abs().to_f64_lossy());
        }
    }
    OracleReport::within(
        "p1_reduction",
        format!("L={l_count}, x={x}"),
        worst,
        1e-8,
    )
}

/// Negative control: a perturbed (non-optimal) direction must produce a
/// visible gap between the two forms, proving the check has power.
pub fn p1_reduction_negative_control<T: Scalar>(
    grid: &QuantileGrid<T>,
    beta: impl Fn(T) -> T,
    dbeta: impl Fn(T) -> T,
    x: T,
) -> OracleReport {
    let l_count = grid.len();
    assert!(l_count >= 2, "the control needs at least two levels");
    let db: Vec<T> = grid.levels().iter().map(|&t| dbeta(t)).collect();
    let u = p1_information(grid, &db);
    let columns: Vec<Vec<T>> = grid.levels().iter().map(|&t| vec![beta(t)]).collect();
    let coeffs = CoefficientSet::new(grid.clone(), columns).unwrap();
    let dens_row: Vec<T> = db.iter().map(|&d| T::one() / (x * d)).collect();
    let boundaries: Vec<T> = grid.levels().iter().map(|&t| x * beta(t)).collect();

    let k = 0usize;
    let (mut d, _) = quadratic_min_oracle(&u, k).expect("analytic information is SPD");
    d[l_count - 1] += T::of(0.25);

    let mut gap = 0.0f64;
    let mut y = boundaries[0] - T::one();
    for w in 0..=l_count {
        let full = score::efficient_score(y, &[x], &coeffs, &dens_row, &d);
        let collapsed = rm3_score(y, x, grid, &d, &db, &beta, k);
        gap = gap.max((full - collapsed).abs().to_f64_lossy());
        if w < l_count {
            y = boundaries[w] + T::of(0.5);
        }
    }
    OracleReport {
        check: "p1_reduction_negative_control".into(),
        instance: format!("L={l_count}, perturbed direction"),
        max_discrepancy: gap,
        tolerance: 1e-6,
        pass: gap > 1e-6,
    }
}

/// Single-covariate information matrix from the analytic derivative curve:
/// the covariate law drops out because `f(xβ(τ)) x = 1/β̇(τ)`.
fn p1_information<T: Scalar>(grid: &QuantileGrid<T>, db: &[T]) -> Mat<T> {
    let l_count = grid.len();
    let sp = grid.spacings();
    let mut u = Mat::zeros(l_count, l_count);
    for l in 0..l_count {
        u[(l, l)] = (T::one() / sp[l] + T::one() / sp[l + 1]) / (db[l] * db[l]);
        if l + 1 < l_count {
            let v = -(T::one() / sp[l + 1]) / (db[l] * db[l + 1]);
            u[(l, l + 1)] = v;
            u[(l + 1, l)] = v;
        }
    }
    u
}

/// The collapsed single-bracket score for p = 1.
fn rm3_score<T: Scalar>(
    y: T,
    x: T,
    grid: &QuantileGrid<T>,
    d: &[T],
    db: &[T],
    beta: &impl Fn(T) -> T,
    k: usize,
) -> T {
    let l_count = grid.len();
    let sp = grid.spacings();
    let ratio = |i: isize| -> T {
        if i < 0 || i as usize >= l_count {
            T::zero()
        } else {
            d[i as usize] / db[i as usize]
        }
    };
    let ki = k as isize;
    let bracket = (ratio(ki) - ratio(ki + 1)) / sp[k + 1] - (ratio(ki - 1) - ratio(ki)) / sp[k];
    let tau_k = grid.level(k);
    let below = if y < x * beta(tau_k) { T::one() } else { T::zero() };
    bracket * (tau_k - below)
}

/// Two-level variance-gain identity: the completed-square form and the direct
/// difference of the one- and two-level quadratic forms must agree, and both
/// are nonnegative up to roundoff.
pub fn efficiency_gain_check<T: Scalar>(
    tau1: T,
    tau2: T,
    f1: T,
    f2: T,
    xd1: T,
    xd2: T,
) -> OracleReport {
    let a = f1 * xd1;
    let b = f2 * xd2;
    let one = T::one();
    let q1 = a * a / (tau1 * (one - tau1));
    let q2 = a * a / tau1 + b * b / (one - tau2) + (a - b) * (a - b) / (tau2 - tau1);
    let direct = q2 - q1;
    let s = ((one - tau2) / (one - tau1)).sqrt();
    let bracket = s * a - b / s;
    let square = bracket * bracket / (tau2 - tau1);

    let agree = (direct - square).abs().to_f64_lossy();
    let negativity = (-direct.min(T::zero())).to_f64_lossy();
    let disc = agree.max(negativity);
    OracleReport::within(
        "efficiency_gain",
        format!("tau=({tau1},{tau2})"),
        disc,
        1e-12,
    )
}

/// Standard battery behind the CLI self-test.
pub fn run_battery(seed: u64) -> Vec<OracleReport> {
    let mut reports = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // solver vs exhaustive enumeration
    let mut worst = 0.0f64;
    let cfg = FitConfig::<f64>::default();
    for inst in 0..25 {
        let n = 8 + (inst * 7) % 40;
        let p = 1 + inst % 3;
        let data = random_instance(&mut rng, n, p);
        let tau = 0.1 + 0.8 * rng.random::<f64>();
        let solver = pinball::fit_quantile(&data, tau, &cfg).unwrap();
        let oracle = pinball_vertex_oracle(&data, tau).unwrap();
        for j in 0..p {
            worst = worst.max((solver.beta_hat[j] - oracle[j]).abs());
        }
    }
    // a flat-optimum instance where the tie rule decides
    {
        let y: Vec<f64> = (1..=10).map(f64::from).collect();
        let rows: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        let data = Dataset::from_rows(y, &rows).unwrap();
        let solver = pinball::fit_quantile(&data, 0.3, &cfg).unwrap();
        let oracle = pinball_vertex_oracle(&data, 0.3).unwrap();
        worst = worst.max((solver.beta_hat[0] - oracle[0]).abs());
    }
    reports.push(OracleReport::within(
        "pinball_vertex",
        "25 random instances (n<=48, p<=3) plus a flat optimum".into(),
        worst,
        1e-8,
    ));

    // Lagrange directions vs elimination
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let dim = 1 + rng.random_range(0..ORACLE_MAX_DIM);
        let u = random_spd(&mut rng, dim);
        let (dirs, sigma2) = score::solve_directions(&u).unwrap();
        for m in 0..dim {
            let (d, value) = quadratic_min_oracle(&u, m).unwrap();
            for r in 0..dim {
                worst = worst.max((dirs[(r, m)] - d[r]).abs());
            }
            worst = worst.max((sigma2[m] - 1.0 / value).abs());
        }
    }
    reports.push(OracleReport::within(
        "quadratic_min",
        "25 random SPD systems (dim<=12), all constraints".into(),
        worst,
        1e-9,
    ));

    // p = 1 score collapse on analytic curves
    let mut worst = 0.0f64;
    for inst in 0..6 {
        let (grid, beta, dbeta): (QuantileGrid<f64>, _, _) = analytic_instance(inst);
        let x = [0.5, 1.0, 2.0][inst % 3];
        let rep = p1_reduction_check(&grid, beta, dbeta, x);
        worst = worst.max(rep.max_discrepancy);
    }
    reports.push(OracleReport::within(
        "p1_reduction",
        "6 analytic curves, L in {1,2,3,4}".into(),
        worst,
        1e-8,
    ));

    // the collapse check must notice a wrong direction
    let (grid, beta, dbeta) = analytic_instance(2);
    reports.push(p1_reduction_negative_control(&grid, beta, dbeta, 1.0));

    // two-level gain identity
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let tau1 = 0.05 + 0.85 * rng.random::<f64>();
        let tau2 = (tau1 + 0.05 + (0.9 - tau1) * rng.random::<f64>()).min(0.95);
        let rep = efficiency_gain_check(
            tau1,
            tau2,
            0.1 + 2.0 * rng.random::<f64>(),
            0.1 + 2.0 * rng.random::<f64>(),
            4.0 * rng.random::<f64>() - 2.0,
            4.0 * rng.random::<f64>() - 2.0,
        );
        worst = worst.max(rep.max_discrepancy);
    }
    reports.push(OracleReport::within(
        "efficiency_gain",
        "10000 random two-level instances".into(),
        worst,
        1e-12,
    ));

    reports
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset<f64> {
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r = vec![1.0];
        for _ in 1..p {
            r.push(rng.random::<f64>() * 4.0 - 2.0);
        }
        let signal: f64 = r.iter().sum();
        y.push(signal + 3.0 * (rng.random::<f64>() - 0.5));
        rows.push(r);
    }
    Dataset::from_rows(y, &rows).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> Mat<f64> {
    let mut m = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    let mut u = m.mul(&m.transpose());
    for i in 0..dim {
        u[(i, i)] += 0.5;
    }
    u
}

type Curve = fn(f64) -> f64;

fn analytic_instance(idx: usize) -> (QuantileGrid<f64>, Curve, Curve) {
    let grids = [
        vec![0.5],
        vec![0.4, 0.7],
        vec![0.25, 0.5, 0.75],
        vec![0.2, 0.45, 0.6, 0.85],
        vec![0.3, 0.5, 0.7],
        vec![0.35, 0.65],
    ];
    let grid = QuantileGrid::new(grids[idx % grids.len()].clone()).unwrap();
    let curves: [(Curve, Curve); 3] = [
        (
            |t| crate::normal::quantile(t),
            |t| 1.0 / crate::normal::pdf(crate::normal::quantile(t)),
        ),
        (
            |t| 2.0 + 0.5 * (t / (1.0 - t)).ln(),
            |t| 0.5 / (t * (1.0 - t)),
        ),
        (
            |t| 1.0 + (std::f64::consts::PI * (t - 0.5)).tan(),
            |t| {
                let v = (std::f64::consts::PI * (t - 0.5)).tan();
                std::f64::consts::PI * (1.0 + v * v)
            },
        ),
    ];
    let (b, db) = curves[idx % curves.len()];
    (grid, b, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vertex_oracle_median() {
        let data =
            Dataset::from_rows(vec![1.0, 2.0, 9.0], &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let beta = pinball_vertex_oracle(&data, 0.5).unwrap();
        assert_abs_diff_eq!(beta[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn vertex_oracle_respects_size_cap() {
        let y = vec![0.0; 51];
        let rows: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        let data = Dataset::from_rows(y, &rows).unwrap();
        assert!(matches!(
            pinball_vertex_oracle(&data, 0.5),
            Err(Error::OracleLimit(_))
        ));
    }

    #[test]
    fn vertex_oracle_left_endpoint_tie() {
        let y: Vec<f64> = (1..=10).map(f64::from).collect();
        let rows: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        let data = Dataset::from_rows(y, &rows).unwrap();
        let beta = pinball_vertex_oracle(&data, 0.3).unwrap();
        assert_abs_diff_eq!(beta[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_oracle_identity_and_scalar() {
        let eye = Mat::<f64>::identity(3);
        for m in 0..3 {
            let (d, value) = quadratic_min_oracle(&eye, m).unwrap();
            for (i, v) in d.iter().enumerate() {
                assert_abs_diff_eq!(*v, if i == m { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
            assert_abs_diff_eq!(value, 1.0, epsilon = 1e-14);
        }
        let scalar = Mat::from_rows(&[vec![4.0]]);
        let (d, value) = quadratic_min_oracle(&scalar, 0).unwrap();
        assert_eq!(d, vec![1.0]);
        assert_abs_diff_eq!(value, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(1.0 / value, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn quadratic_oracle_dimension_cap() {
        let eye = Mat::<f64>::identity(13);
        assert!(matches!(
            quadratic_min_oracle(&eye, 0),
            Err(Error::OracleLimit(_))
        ));
    }

    #[test]
    fn p1_reduction_on_normal_curve() {
        let grid = QuantileGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
        let rep = p1_reduction_check(
            &grid,
            |t: f64| crate::normal::quantile(t),
            |t: f64| 1.0 / crate::normal::pdf(crate::normal::quantile(t)),
            1.0,
        );
        assert!(rep.pass, "discrepancy {}", rep.max_discrepancy);
    }

    #[test]
    fn p1_reduction_single_level_trivial() {
        let grid = QuantileGrid::new(vec![0.6]).unwrap();
        let rep = p1_reduction_check(
            &grid,
            |t: f64| crate::normal::quantile(t),
            |t: f64| 1.0 / crate::normal::pdf(crate::normal::quantile(t)),
            2.0,
        );
        assert!(rep.max_discrepancy < 1e-12);
    }

    #[test]
    fn negative_control_has_power() {
        let grid = QuantileGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
        let rep = p1_reduction_negative_control(
            &grid,
            |t: f64| crate::normal::quantile(t),
            |t: f64| 1.0 / crate::normal::pdf(crate::normal::quantile(t)),
            1.0,
        );
        assert!(rep.pass, "perturbed direction went unnoticed");
    }

    #[test]
    fn efficiency_gain_equality_case() {
        // proportional inputs make the completed square vanish
        let (tau1, tau2) = (0.3, 0.6);
        let a: f64 = 0.8;
        let b = a * (1.0 - tau2) / (1.0 - tau1);
        let rep = efficiency_gain_check(tau1, tau2, 1.0, 1.0, a, b);
        assert!(rep.pass);
        assert!(rep.max_discrepancy < 1e-12);
        // and the gain itself is ~0 at proportionality
        let s = ((1.0 - tau2) / (1.0 - tau1)).sqrt();
        assert_abs_diff_eq!(s * a - b / s, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn efficiency_gain_strictly_positive_generically() {
        let rep = efficiency_gain_check(0.3, 0.6, 1.0, 1.2, 0.8, -0.4);
        assert!(rep.pass);
        // recompute the square form to confirm a strict gain
        let (a, b) = (1.0f64 * 0.8, 1.2f64 * -0.4);
        let s = ((1.0f64 - 0.6) / (1.0 - 0.3)).sqrt();
        let gain = (s * a - b / s).powi(2) / (0.6 - 0.3);
        assert!(gain > 1e-3);
    }

    #[test]
    fn efficiency_gain_limit_probe() {
        // tau2 -> tau1 with smooth inputs stays finite and nonnegative
        let g = |t: f64| 0.7 + 0.3 * t;
        let tau1 = 0.4;
        for k in 2..10 {
            let tau2 = tau1 + 10f64.powi(-k);
            let rep = efficiency_gain_check(tau1, tau2, 1.0, 1.0, g(tau1), g(tau2));
            assert!(rep.max_discrepancy.is_finite());
            assert!(rep.pass, "failed at gap 1e-{k}: {}", rep.max_discrepancy);
        }
    }

    #[test]
    fn battery_passes() {
        for rep in run_battery(2024) {
            assert!(
                rep.pass,
                "{} failed: discrepancy {} vs tolerance {}",
                rep.check, rep.max_discrepancy, rep.tolerance
            );
        }
    }
}
