//! Pinball-loss (check-loss) regression at one level or across a grid.
//!
//! `fit_quantile` minimizes `Σ ρ_τ(y_i - x_i'β)` in two phases:
//!
//! 1. a smoothed majorize-minimize loop (iteratively reweighted least squares
//!    with a shrinking smoothing width), which gets close fast;
//! 2. an exact finishing polish on the active vertex set: the optimum of the
//!    piecewise-linear objective sits at an interpolation vertex (p rows fit
//!    exactly), so the polish pivots between vertices until no edge descends,
//!    then walks zero-slope edges to the lexicographically smallest optimal
//!    vertex so flat optima resolve deterministically to the left endpoint.
//!
//! The polish makes the result agree with brute-force vertex enumeration to
//! solver precision, which is what the oracle tests check.

use rayon::prelude::*;

use crate::data::{CoefficientSet, Dataset, FitConfig, OffGridFits, QuantileGrid};
use crate::density;
use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// Result of a single-level fit.
#[derive(Debug, Clone)]
pub struct PinballFit<T> {
    pub beta_hat: Vec<T>,
    pub level: T,
    /// Exact check loss at `beta_hat`.
    pub objective_value: T,
    /// Smoothed-phase steps plus polish pivots.
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted smoothed step, ending with the polished
    /// optimum; non-increasing.
    pub objective_trace: Vec<T>,
}

/// Check loss `u (τ - 1{u<0})`.
pub fn pinball_loss<T: Scalar>(u: T, tau: T) -> Result<T, Error> {
    check_level(tau)?;
    Ok(rho(u, tau))
}

#[inline]
pub(crate) fn rho<T: Scalar>(u: T, tau: T) -> T {
    if u < T::zero() {
        u * (tau - T::one())
    } else {
        u * tau
    }
}

pub(crate) fn check_level<T: Scalar>(tau: T) -> Result<(), Error> {
    if tau > T::zero() && tau < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "quantile level {tau} outside (0,1)"
        )))
    }
}

/// Check-loss objective at `beta`.
pub fn objective<T: Scalar>(data: &Dataset<T>, tau: T, beta: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..data.n() {
        s += rho(data.y()[i] - linalg::dot(data.row(i), beta), tau);
    }
    s
}

/// Minimize the check loss at level `tau`.
pub fn fit_quantile<T: Scalar>(
    data: &Dataset<T>,
    tau: T,
    cfg: &FitConfig<T>,
) -> Result<PinballFit<T>, Error> {
    check_level(tau)?;
    cfg.validate()?;
    let p = data.p();
    let rank = linalg::column_rank(data.x(), T::of(1e-10));
    if rank < p {
        return Err(Error::RankDeficient { rank, p });
    }

    let mut iterations = 0usize;
    let mut trace = Vec::new();
    let mut beta = smoothed_phase(data, tau, cfg, &mut iterations, &mut trace)?;

    let mut simplex = Simplex::new(data, tau);
    let optimal = simplex.polish(&mut beta)?;
    simplex.walk_to_lex_min(&mut beta)?;
    iterations += simplex.pivots;

    let objective_value = objective(data, tau, &beta);
    trace.push(objective_value);

    Ok(PinballFit {
        beta_hat: beta,
        level: tau,
        objective_value,
        iterations,
        converged: optimal,
        objective_trace: trace,
    })
}

/// Fit every grid level plus the off-grid levels `tau_l ± h` needed later for
/// derivative estimation; the off-grid fits ride along in the result.
pub fn fit_grid<T: Scalar>(
    data: &Dataset<T>,
    grid: &QuantileGrid<T>,
    cfg: &FitConfig<T>,
) -> Result<CoefficientSet<T>, Error> {
    Ok(fit_grid_detailed(data, grid, cfg, false)?.0)
}

/// Per-grid fit diagnostics surfaced by the estimation report.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridFitStats {
    pub solver_iterations: usize,
    pub non_converged: usize,
}

pub(crate) fn fit_grid_detailed<T: Scalar>(
    data: &Dataset<T>,
    grid: &QuantileGrid<T>,
    cfg: &FitConfig<T>,
    quiet: bool,
) -> Result<(CoefficientSet<T>, GridFitStats), Error> {
    cfg.validate()?;
    let (h, _capped) = density::resolve_bandwidth(cfg, data.n(), grid, quiet)?;
    let mut taus: Vec<T> = grid.levels().to_vec();
    for &t in grid.levels() {
        taus.push(t + h);
        taus.push(t - h);
    }
    for &t in &taus {
        if !(t > T::zero() && t < T::one()) {
            return Err(Error::BandwidthOutOfRange {
                h: h.to_f64_lossy(),
                tau: t.to_f64_lossy(),
            });
        }
    }

    let fits: Result<Vec<PinballFit<T>>, Error> = taus
        .par_iter()
        .map(|&t| fit_quantile(data, t, cfg))
        .collect();
    let fits = fits?;

    let mut stats = GridFitStats::default();
    for f in &fits {
        stats.solver_iterations += f.iterations;
        if !f.converged {
            stats.non_converged += 1;
        }
    }

    let l = grid.len();
    let beta: Vec<Vec<T>> = fits[..l].iter().map(|f| f.beta_hat.clone()).collect();
    let mut plus = Vec::with_capacity(l);
    let mut minus = Vec::with_capacity(l);
    for k in 0..l {
        plus.push(fits[l + 2 * k].beta_hat.clone());
        minus.push(fits[l + 2 * k + 1].beta_hat.clone());
    }
    let coeffs = CoefficientSet::new(grid.clone(), beta)?
        .with_offgrid(OffGridFits { h, plus, minus });
    Ok((coeffs, stats))
}

// ---------------------------------------------------------------------------
// Smoothed phase

fn smoothed_phase<T: Scalar>(
    data: &Dataset<T>,
    tau: T,
    cfg: &FitConfig<T>,
    iterations: &mut usize,
    trace: &mut Vec<T>,
) -> Result<Vec<T>, Error> {
    let n = data.n();
    let p = data.p();
    let y = data.y();
    let scale = y
        .iter()
        .map(|v| v.abs())
        .fold(T::one(), T::max);
    let mut eps = T::of(1e-2) * scale;
    let eps_floor = T::of(1e-12) * scale;

    let mut x_sum = vec![T::zero(); p];
    for i in 0..n {
        for (j, v) in data.row(i).iter().enumerate() {
            x_sum[j] += *v;
        }
    }

    // Unweighted least squares start.
    let mut gram = Mat::zeros(p, p);
    let mut rhs0 = vec![T::zero(); p];
    for i in 0..n {
        let xi = data.row(i);
        gram.add_scaled_outer(T::one(), xi);
        for j in 0..p {
            rhs0[j] += xi[j] * y[i];
        }
    }
    let mut beta = linalg::spd_solve(&gram, &rhs0)
        .or_else(|_| linalg::solve_square(&gram, &rhs0, T::of(1e-14)).ok_or(Error::Singular))?;

    let mut obj = objective(data, tau, &beta);
    trace.push(obj);
    let two_tau_m1 = T::of(2.0) * tau - T::one();

    while *iterations < cfg.max_iterations {
        // Weighted normal equations of the majorizer at the current point.
        let mut m = Mat::zeros(p, p);
        let mut rhs = vec![T::zero(); p];
        for i in 0..n {
            let xi = data.row(i);
            let r = y[i] - linalg::dot(xi, &beta);
            let v = T::one() / (r.abs() + eps);
            m.add_scaled_outer(v, xi);
            let vy = v * y[i];
            for j in 0..p {
                rhs[j] += xi[j] * vy;
            }
        }
        for j in 0..p {
            rhs[j] += two_tau_m1 * x_sum[j];
        }
        let candidate = match linalg::spd_solve(&m, &rhs) {
            Ok(b) => b,
            Err(_) => break,
        };
        *iterations += 1;
        let cand_obj = objective(data, tau, &candidate);
        if cand_obj < obj {
            let big_step = (obj - cand_obj) > cfg.solver_tolerance * (T::one() + obj.abs());
            beta = candidate;
            obj = cand_obj;
            trace.push(obj);
            if !big_step {
                if eps <= eps_floor {
                    break;
                }
                eps *= T::of(0.1);
            }
        } else {
            if eps <= eps_floor {
                break;
            }
            eps *= T::of(0.1);
        }
    }
    Ok(beta)
}

// ---------------------------------------------------------------------------
// Vertex polish

struct Simplex<'a, T> {
    data: &'a Dataset<T>,
    tau: T,
    act_tol: Vec<T>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    pivots: usize,
    pivot_budget: usize,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    fn new(data: &'a Dataset<T>, tau: T) -> Self {
        let act_tol = data
            .y()
            .iter()
            .map(|v| T::of(1e-11) * (T::one() + v.abs()))
            .collect();
        Simplex {
            data,
            tau,
            act_tol,
            basis: Vec::new(),
            in_basis: vec![false; data.n()],
            pivots: 0,
            pivot_budget: 300 + 12 * data.n(),
        }
    }

    fn basis_matrix(&self) -> Mat<T> {
        let p = self.data.p();
        Mat::from_fn(p, p, |i, j| self.data.row(self.basis[i])[j])
    }

    fn solve_vertex(&self) -> Result<Vec<T>, Error> {
        let xb = self.basis_matrix();
        let yb: Vec<T> = self.basis.iter().map(|&i| self.data.y()[i]).collect();
        linalg::solve_square(&xb, &yb, T::of(1e-14)).ok_or(Error::Singular)
    }

    fn residuals(&self, beta: &[T]) -> Vec<T> {
        let mut r: Vec<T> = (0..self.data.n())
            .map(|i| self.data.y()[i] - linalg::dot(self.data.row(i), beta))
            .collect();
        for &b in &self.basis {
            r[b] = T::zero();
        }
        r
    }

    /// Seed the basis with p independent rows, nearest-to-zero residuals
    /// first, then land exactly on that vertex.
    fn seed_basis(&mut self, beta: &mut Vec<T>) -> Result<(), Error> {
        let n = self.data.n();
        let p = self.data.p();
        let mut order: Vec<usize> = (0..n).collect();
        let r: Vec<T> = (0..n)
            .map(|i| self.data.y()[i] - linalg::dot(self.data.row(i), beta))
            .collect();
        order.sort_by(|&a, &b| {
            r[a].abs()
                .partial_cmp(&r[b].abs())
                .unwrap()
                .then(a.cmp(&b))
        });

        let mut ortho: Vec<Vec<T>> = Vec::new();
        for &i in &order {
            if self.basis.len() == p {
                break;
            }
            let xi = self.data.row(i);
            let norm0 = linalg::dot(xi, xi).sqrt();
            if norm0 == T::zero() {
                continue;
            }
            let mut v = xi.to_vec();
            for _ in 0..2 {
                for q in &ortho {
                    let c = linalg::dot(q, &v);
                    for (vk, qk) in v.iter_mut().zip(q) {
                        *vk -= c * *qk;
                    }
                }
            }
            let norm = linalg::dot(&v, &v).sqrt();
            if norm > T::of(1e-10) * norm0 {
                let inv = T::one() / norm;
                for vk in &mut v {
                    *vk *= inv;
                }
                ortho.push(v);
                self.basis.push(i);
                self.in_basis[i] = true;
            }
        }
        if self.basis.len() < p {
            return Err(Error::RankDeficient {
                rank: self.basis.len(),
                p,
            });
        }
        *beta = self.solve_vertex()?;
        Ok(())
    }

    fn is_active(&self, i: usize, r: &[T]) -> bool {
        self.in_basis[i] || r[i].abs() <= self.act_tol[i]
    }

    /// One-sided directional derivative of the objective along `dir`, where
    /// `u[i] = x_i . dir`. Active rows charge their full kink rate.
    fn slope(&self, u: &[T], r: &[T]) -> (T, T) {
        let tau = self.tau;
        let mut g = T::zero();
        let mut mass = T::zero();
        for i in 0..u.len() {
            let ui = u[i];
            mass += ui.abs();
            if self.is_active(i, r) {
                g += rho(-ui, tau);
            } else if r[i] < T::zero() {
                g -= ui * (tau - T::one());
            } else {
                g -= ui * tau;
            }
        }
        (g, mass)
    }

    /// Leftmost minimizer along `dir` starting from slope `g0`: walk the
    /// residual-crossing breakpoints until the slope turns nonnegative.
    /// Returns the step length and the entering row.
    fn line_search(&self, u: &[T], r: &[T], g0: T) -> Option<(T, usize)> {
        let mut bps: Vec<(T, usize)> = Vec::new();
        for i in 0..u.len() {
            if self.is_active(i, r) {
                continue;
            }
            let ui = u[i];
            if ui == T::zero() {
                continue;
            }
            let t = r[i] / ui;
            if t > T::zero() {
                bps.push((t, i));
            }
        }
        bps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut slope = g0;
        for (t, i) in bps {
            slope += u[i].abs();
            if slope >= T::zero() {
                return Some((t, i));
            }
        }
        None
    }

    fn edge(&self, q: usize, sigma: T) -> Result<(Vec<T>, Vec<T>), Error> {
        let p = self.data.p();
        let xb = self.basis_matrix();
        let mut e = vec![T::zero(); p];
        e[q] = sigma;
        let v = linalg::solve_square(&xb, &e, T::of(1e-14)).ok_or(Error::Singular)?;
        let u: Vec<T> = (0..self.data.n())
            .map(|i| linalg::dot(self.data.row(i), &v))
            .collect();
        Ok((v, u))
    }

    fn pivot(&mut self, q: usize, entering: usize, beta: &mut Vec<T>) -> Result<(), Error> {
        let leaving = self.basis[q];
        self.in_basis[leaving] = false;
        self.basis[q] = entering;
        self.in_basis[entering] = true;
        self.pivots += 1;
        *beta = self.solve_vertex()?;
        Ok(())
    }

    /// Descend to an optimal vertex. Returns false when the pivot budget ran
    /// out (best iterate is kept).
    fn polish(&mut self, beta: &mut Vec<T>) -> Result<bool, Error> {
        self.seed_basis(beta)?;
        let p = self.data.p();
        loop {
            if self.pivots >= self.pivot_budget {
                return Ok(false);
            }
            let r = self.residuals(beta);
            let mut moved = false;
            'directions: for q in 0..p {
                for sigma in [T::one(), -T::one()] {
                    let (_, u) = self.edge(q, sigma)?;
                    let (g, mass) = self.slope(&u, &r);
                    let g_tol = T::of(1e-10) * (T::one() + mass);
                    if g < -g_tol {
                        if let Some((_t, entering)) = self.line_search(&u, &r, g) {
                            self.pivot(q, entering, beta)?;
                            moved = true;
                            break 'directions;
                        }
                    }
                }
            }
            if !moved {
                return Ok(true);
            }
        }
    }

    /// From an optimal vertex, follow zero-slope edges while the adjacent
    /// vertex is lexicographically smaller; flat optima end at their left
    /// endpoint.
    fn walk_to_lex_min(&mut self, beta: &mut Vec<T>) -> Result<(), Error> {
        let p = self.data.p();
        for _ in 0..256 {
            let r = self.residuals(beta);
            let mut best: Option<(Vec<T>, usize, usize)> = None;
            for q in 0..p {
                for sigma in [T::one(), -T::one()] {
                    let (_, u) = self.edge(q, sigma)?;
                    let (g, mass) = self.slope(&u, &r);
                    let g_tol = T::of(1e-10) * (T::one() + mass);
                    if g.abs() <= g_tol {
                        if let Some((_t, entering)) = self.first_breakpoint(&u, &r) {
                            let saved_basis = self.basis.clone();
                            let saved_flags = self.in_basis.clone();
                            let leaving = self.basis[q];
                            self.in_basis[leaving] = false;
                            self.basis[q] = entering;
                            self.in_basis[entering] = true;
                            match self.solve_vertex() {
                                Ok(cand) => {
                                    let better_than_current = lex_less(&cand, beta);
                                    let better_than_best = match &best {
                                        Some((b, _, _)) => lex_less(&cand, b),
                                        None => true,
                                    };
                                    if better_than_current && better_than_best {
                                        best = Some((cand, q, entering));
                                    }
                                }
                                Err(_) => {}
                            }
                            self.basis = saved_basis;
                            self.in_basis = saved_flags;
                        }
                    }
                }
            }
            match best {
                Some((cand, q, entering)) => {
                    let leaving = self.basis[q];
                    self.in_basis[leaving] = false;
                    self.basis[q] = entering;
                    self.in_basis[entering] = true;
                    self.pivots += 1;
                    *beta = cand;
                }
                None => break,
            }
        }
        Ok(())
    }

    fn first_breakpoint(&self, u: &[T], r: &[T]) -> Option<(T, usize)> {
        let mut best: Option<(T, usize)> = None;
        for i in 0..u.len() {
            if self.is_active(i, r) || u[i] == T::zero() {
                continue;
            }
            let t = r[i] / u[i];
            if t > T::zero() {
                best = match best {
                    Some((tb, ib)) if (tb, ib) <= (t, i) => Some((tb, ib)),
                    _ => Some((t, i)),
                };
            }
        }
        best
    }
}

/// Lexicographic comparison with a small per-coordinate tolerance so exact
/// ties after floating-point solves behave deterministically.
pub(crate) fn lex_less<T: Scalar>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        let tol = T::of(1e-9) * (T::one() + x.abs().max(y.abs()));
        if (*x - *y).abs() <= tol {
            continue;
        }
        return *x < *y;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BandwidthRule;
    use approx::assert_abs_diff_eq;

    fn intercept_only(y: Vec<f64>) -> Dataset<f64> {
        let rows: Vec<Vec<f64>> = y.iter().map(|_| vec![1.0]).collect();
        Dataset::from_rows(y, &rows).unwrap()
    }

    #[test]
    fn loss_values() {
        assert_eq!(pinball_loss(0.0, 0.3).unwrap(), 0.0);
        assert_abs_diff_eq!(pinball_loss(2.0, 0.3).unwrap(), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(pinball_loss(-2.0, 0.3).unwrap(), 1.4, epsilon = 1e-15);
        assert!(pinball_loss(1.0, 0.0).is_err());
        assert!(pinball_loss(1.0, 1.5).is_err());
    }

    #[test]
    fn loss_nonnegative_zero_iff_zero() {
        for &u in &[-3.0, -0.1, 0.0, 0.2, 5.0] {
            let v = pinball_loss(u, 0.4).unwrap();
            assert!(v >= 0.0);
            assert_eq!(v == 0.0, u == 0.0);
        }
    }

    #[test]
    fn median_of_odd_sample() {
        let data = intercept_only(vec![1.0, 2.0, 9.0]);
        let fit = fit_quantile(&data, 0.5, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(fit.beta_hat[0], 2.0, epsilon = 1e-10);
        assert!(fit.converged);
    }

    #[test]
    fn flat_optimum_takes_left_endpoint() {
        let data = intercept_only((1..=10).map(f64::from).collect());
        let fit = fit_quantile(&data, 0.3, &FitConfig::default()).unwrap();
        // optimal facet is [3, 4]; deterministic tie rule picks 3
        assert_abs_diff_eq!(fit.beta_hat[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.objective_value, 10.5, epsilon = 1e-10);
    }

    #[test]
    fn objective_matches_recomputation() {
        let data = Dataset::from_rows(
            vec![0.3, -1.2, 2.5, 0.9, -0.4],
            &[
                vec![1.0, 0.2],
                vec![1.0, -1.1],
                vec![1.0, 2.0],
                vec![1.0, 0.7],
                vec![1.0, -0.3],
            ],
        )
        .unwrap();
        let fit = fit_quantile(&data, 0.4, &FitConfig::default()).unwrap();
        let direct = objective(&data, 0.4, &fit.beta_hat);
        assert_abs_diff_eq!(fit.objective_value, direct, epsilon = 1e-12);
    }

    #[test]
    fn objective_trace_monotone() {
        let data = intercept_only(vec![5.0, -3.0, 0.5, 2.0, 8.0, -1.0, 0.0]);
        let fit = fit_quantile(&data, 0.25, &FitConfig::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn subgradient_band_at_optimum() {
        // intercept design: at most n*tau strictly negative residuals and at
        // least n*tau - p non-positive ones
        let y = vec![
            0.62, -0.91, 1.44, 0.03, -1.21, 2.52, -0.33, 0.87, 1.05, -0.56, 0.11, -2.04, 0.75,
            1.93, -0.17,
        ];
        let rows: Vec<Vec<f64>> = (0..y.len())
            .map(|i| vec![1.0, (i as f64 * 0.37).sin()])
            .collect();
        let data = Dataset::from_rows(y, &rows).unwrap();
        for tau in [0.25, 0.5, 0.8] {
            let fit = fit_quantile(&data, tau, &FitConfig::default()).unwrap();
            let n = data.n() as f64;
            let mut neg = 0.0;
            let mut nonpos = 0.0;
            for i in 0..data.n() {
                let r = data.y()[i] - linalg::dot(data.row(i), &fit.beta_hat);
                if r < -1e-9 {
                    neg += 1.0;
                    nonpos += 1.0;
                } else if r <= 1e-9 {
                    nonpos += 1.0;
                }
            }
            assert!(neg <= n * tau + 1e-9, "tau={tau}: {neg} strictly negative");
            assert!(
                nonpos >= n * tau - data.p() as f64 - 1e-9,
                "tau={tau}: {nonpos} non-positive"
            );
        }
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let data = Dataset::from_rows(
            vec![1.0, 2.0, 3.0],
            &[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]],
        )
        .unwrap();
        assert!(matches!(
            fit_quantile(&data, 0.5, &FitConfig::default()),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn grid_reduces_to_single_fit() {
        let data = intercept_only(vec![1.0, 2.0, 9.0]);
        let grid = QuantileGrid::new(vec![0.5]).unwrap();
        let coeffs = fit_grid(&data, &grid, &FitConfig::default()).unwrap();
        assert_abs_diff_eq!(coeffs.column(0)[0], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn grid_caches_offgrid_fits() {
        let y: Vec<f64> = (0..40).map(|i| (i as f64 * 0.83).sin() * 3.0).collect();
        let data = intercept_only(y);
        let grid = QuantileGrid::new(vec![0.5, 0.7]).unwrap();
        let cfg = FitConfig {
            bandwidth: BandwidthRule::Explicit(0.05),
            ..FitConfig::default()
        };
        let coeffs = fit_grid(&data, &grid, &cfg).unwrap();
        let off = coeffs.offgrid().expect("off-grid fits cached");
        assert_eq!(off.h, 0.05);
        for (k, (plus_tau, minus_tau)) in [(0.55, 0.45), (0.75, 0.65)].iter().enumerate() {
            let fp = fit_quantile(&data, *plus_tau, &cfg).unwrap();
            let fm = fit_quantile(&data, *minus_tau, &cfg).unwrap();
            assert_abs_diff_eq!(off.plus[k][0], fp.beta_hat[0], epsilon = 1e-10);
            assert_abs_diff_eq!(off.minus[k][0], fm.beta_hat[0], epsilon = 1e-10);
        }
    }

    #[test]
    fn explicit_bandwidth_out_of_range_is_an_error() {
        let data = intercept_only(vec![1.0, 2.0, 3.0, 4.0]);
        let grid = QuantileGrid::new(vec![0.1, 0.5]).unwrap();
        let cfg = FitConfig {
            bandwidth: BandwidthRule::Explicit(0.2),
            ..FitConfig::default()
        };
        assert!(matches!(
            fit_grid(&data, &grid, &cfg),
            Err(Error::BandwidthOutOfRange { .. })
        ));
    }

    #[test]
    fn f32_smoke() {
        let y: Vec<f32> = vec![1.0, 2.0, 9.0];
        let rows: Vec<Vec<f32>> = y.iter().map(|_| vec![1.0]).collect();
        let data = Dataset::from_rows(y, &rows).unwrap();
        let fit = fit_quantile(&data, 0.5f32, &FitConfig::default()).unwrap();
        assert!((fit.beta_hat[0] - 2.0).abs() < 1e-4);
    }
}
