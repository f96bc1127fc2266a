//! Information matrices and efficient scores.
//!
//! The pooled-information quadratic form for a direction vector `d`
//! (one p-block per level) is `d' U d` with `U = B A B'`:
//! `A` is block-diagonal over the L+1 inter-quantile intervals, holding
//! interval-scaled density moments, and `B` sums adjacent interval blocks.
//! `U` is therefore block-tridiagonal and is assembled directly in that form;
//! the `B A B'` route exists for verification.
//!
//! For the coefficient `m = (k-1)p + j`, the minimizer of `d' U d` subject to
//! `d_m = 1` is the m-th column of `U⁻¹ W` (`W` the reciprocal of
//! `diag(U⁻¹)`), and the attained value is the variance bound
//! `σ²_m = 1 / (u_m' U u_m) = (U⁻¹)_mm`.

use crate::data::{CoefficientSet, Dataset, QuantileGrid};
use crate::density::DensityEstimates;
use crate::error::Error;
use crate::linalg::{self, Mat};
use crate::scalar::Scalar;

/// Assembled information system: matrix, inverse, optimal directions, and
/// per-coefficient variance bounds.
#[derive(Debug, Clone)]
pub struct ScoreSystem<T> {
    u: Mat<T>,
    u_inv: Mat<T>,
    w: Vec<T>,
    directions: Mat<T>,
    sigma2: Vec<T>,
}

impl<T: Scalar> ScoreSystem<T> {
    /// Validate symmetry and positive definiteness, then solve for every
    /// constrained direction at once.
    pub fn new(u: Mat<T>) -> Result<Self, Error> {
        let m = u.rows();
        if m != u.cols() {
            return Err(Error::DimensionMismatch("information matrix not square".into()));
        }
        let scale = (0..m)
            .map(|i| u[(i, i)].abs())
            .fold(T::one(), T::max);
        let asym = u.max_asymmetry();
        if asym > T::of(1e-10) * scale {
            return Err(Error::NotSymmetric {
                max_asymmetry: asym.to_f64_lossy(),
            });
        }
        let (directions, sigma2, u_inv) = solve_directions_full(&u)?;
        let w = (0..m).map(|i| T::one() / u_inv[(i, i)]).collect();
        Ok(ScoreSystem {
            u,
            u_inv,
            w,
            directions,
            sigma2,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    pub fn u(&self) -> &Mat<T> {
        &self.u
    }

    pub fn u_inv(&self) -> &Mat<T> {
        &self.u_inv
    }

    pub fn w(&self) -> &[T] {
        &self.w
    }

    /// Direction vector for constrained coordinate `m` (column of `U⁻¹ W`).
    pub fn direction(&self, m: usize) -> Vec<T> {
        self.directions.col_copy(m)
    }

    pub fn directions(&self) -> &Mat<T> {
        &self.directions
    }

    pub fn sigma2(&self, m: usize) -> T {
        self.sigma2[m]
    }

    pub fn sigma2_all(&self) -> &[T] {
        &self.sigma2
    }
}

/// Directions and variance bounds for a positive definite `U`.
pub fn solve_directions<T: Scalar>(u: &Mat<T>) -> Result<(Mat<T>, Vec<T>), Error> {
    let (d, s, _) = solve_directions_full(u)?;
    Ok((d, s))
}

fn solve_directions_full<T: Scalar>(u: &Mat<T>) -> Result<(Mat<T>, Vec<T>, Mat<T>), Error> {
    let m = u.rows();
    let u_inv = linalg::spd_inverse(u)?;
    let mut directions = Mat::zeros(m, m);
    let mut sigma2 = vec![T::zero(); m];
    for c in 0..m {
        let scale = T::one() / u_inv[(c, c)];
        for r in 0..m {
            directions[(r, c)] = u_inv[(r, c)] * scale;
        }
        let col = directions.col_copy(c);
        let quad = linalg::dot(&col, &u.matvec(&col));
        sigma2[c] = T::one() / quad;
    }
    Ok((directions, sigma2, u_inv))
}

fn moment<T: Scalar>(data: &Dataset<T>, dens: &DensityEstimates<T>, la: usize, lb: usize) -> Mat<T> {
    let p = data.p();
    let n = data.n();
    let mut s = Mat::zeros(p, p);
    for i in 0..n {
        let c = dens.f_hat(i, la) * dens.f_hat(i, lb);
        s.add_scaled_outer(c, data.row(i));
    }
    s.scale(T::one() / T::of(n as f64));
    s
}

/// Block-tridiagonal assembly of `U` (expectations replaced by sample
/// averages with the plug-in densities).
pub fn assemble_u<T: Scalar>(
    data: &Dataset<T>,
    dens: &DensityEstimates<T>,
    grid: &QuantileGrid<T>,
) -> Mat<T> {
    let p = data.p();
    let l_count = grid.len();
    let sp = grid.spacings();
    let mut u = Mat::zeros(p * l_count, p * l_count);
    for l in 0..l_count {
        let s_l = moment(data, dens, l, l);
        let w = T::one() / sp[l] + T::one() / sp[l + 1];
        for a in 0..p {
            for b in 0..p {
                u[(l * p + a, l * p + b)] += s_l[(a, b)] * w;
            }
        }
        if l + 1 < l_count {
            let c_l = moment(data, dens, l, l + 1);
            let w = -(T::one() / sp[l + 1]);
            for a in 0..p {
                for b in 0..p {
                    u[(l * p + a, (l + 1) * p + b)] = c_l[(a, b)] * w;
                    u[((l + 1) * p + a, l * p + b)] = c_l[(b, a)] * w;
                }
            }
        }
    }
    u
}

/// Interval-block diagonal matrix `A` (2pL on a side).
pub fn assemble_a<T: Scalar>(
    data: &Dataset<T>,
    dens: &DensityEstimates<T>,
    grid: &QuantileGrid<T>,
) -> Mat<T> {
    let p = data.p();
    let l_count = grid.len();
    let sp = grid.spacings();
    let dim = 2 * p * l_count;
    let mut a = Mat::zeros(dim, dim);

    let put = |mat: &Mat<T>, row0: usize, col0: usize, scale: T, a: &mut Mat<T>| {
        for r in 0..p {
            for c in 0..p {
                a[(row0 + r, col0 + c)] += mat[(r, c)] * scale;
            }
        }
    };

    // first interval touches only level 0
    let s0 = moment(data, dens, 0, 0);
    put(&s0, 0, 0, T::one() / sp[0], &mut a);
    // interior intervals touch levels (m-1, m)
    for m in 1..l_count {
        let off = p + 2 * p * (m - 1);
        let s_lo = moment(data, dens, m - 1, m - 1);
        let s_hi = moment(data, dens, m, m);
        let cross = moment(data, dens, m - 1, m);
        let inv = T::one() / sp[m];
        put(&s_lo, off, off, inv, &mut a);
        put(&s_hi, off + p, off + p, inv, &mut a);
        put(&cross, off, off + p, -inv, &mut a);
        let cross_t = cross.transpose();
        put(&cross_t, off + p, off, -inv, &mut a);
    }
    // last interval touches only level L-1
    let s_last = moment(data, dens, l_count - 1, l_count - 1);
    put(&s_last, dim - p, dim - p, T::one() / sp[l_count], &mut a);
    a
}

/// The summation pattern `B`: row-block `l` carries `I_p` in the two interval
/// slots adjacent to level `l`.
pub fn assemble_b<T: Scalar>(p: usize, l_count: usize) -> Mat<T> {
    assert!(p >= 1 && l_count >= 1);
    let mut b = Mat::zeros(p * l_count, 2 * p * l_count);
    for l in 0..l_count {
        for r in 0..p {
            b[(l * p + r, 2 * l * p + r)] = T::one();
            b[(l * p + r, (2 * l + 1) * p + r)] = T::one();
        }
    }
    b
}

/// Pooled-information efficient score for one coefficient, evaluated at one
/// observation. `dens_row` holds the L density estimates at this `x`;
/// `direction` is the pL-vector `d` partitioned by level.
///
/// Crossed fitted boundaries at this `x` are repaired by sorting the boundary
/// values before the interval lookup; a `y` exactly on a boundary belongs to
/// the interval above it.
pub fn efficient_score<T: Scalar>(
    y: T,
    x: &[T],
    coeffs: &CoefficientSet<T>,
    dens_row: &[T],
    direction: &[T],
) -> T {
    efficient_score_flagged(y, x, coeffs, dens_row, direction).0
}

/// As [`efficient_score`], also reporting whether boundaries had crossed.
pub fn efficient_score_flagged<T: Scalar>(
    y: T,
    x: &[T],
    coeffs: &CoefficientSet<T>,
    dens_row: &[T],
    direction: &[T],
) -> (T, bool) {
    let grid = coeffs.grid();
    let l_count = grid.len();
    let p = x.len();
    debug_assert_eq!(dens_row.len(), l_count);
    debug_assert_eq!(direction.len(), p * l_count);

    let mut boundaries: Vec<T> = (0..l_count)
        .map(|l| linalg::dot(x, coeffs.column(l)))
        .collect();
    let crossed = boundaries.windows(2).any(|w| w[1] < w[0]);
    if crossed {
        boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }

    let weights: Vec<T> = (0..l_count)
        .map(|l| dens_row[l] * linalg::dot(x, &direction[l * p..(l + 1) * p]))
        .collect();

    let value = score_from_parts(y, &boundaries, &weights, &grid.spacings());
    (value, crossed)
}

/// Core of the score sum given precomputed sorted boundaries and per-level
/// weights `a_l = f̂_l · x'd(τ_l)`; endpoint weights are zero.
pub(crate) fn score_from_parts<T: Scalar>(
    y: T,
    boundaries: &[T],
    weights: &[T],
    spacings: &[T],
) -> T {
    score_given_interval(interval_index(y, boundaries), weights, spacings)
}

/// Index of the interval containing `y`: the number of boundaries at or
/// below it (ties go up).
pub(crate) fn interval_index<T: Scalar>(y: T, boundaries: &[T]) -> usize {
    let mut idx = 0usize;
    while idx < boundaries.len() && boundaries[idx] <= y {
        idx += 1;
    }
    idx
}

pub(crate) fn score_given_interval<T: Scalar>(idx: usize, weights: &[T], spacings: &[T]) -> T {
    let l_count = weights.len();
    let mut s = T::zero();
    for li in 0..=l_count {
        let a_prev = if li == 0 { T::zero() } else { weights[li - 1] };
        let a_cur = if li == l_count { T::zero() } else { weights[li] };
        let delta = spacings[li];
        let ind = if idx == li { T::one() } else { T::zero() };
        s += (a_prev - a_cur) / delta * (ind - delta);
    }
    s
}

/// Single-level efficient score `f̂ (τ - 1{y < x'β}) d'x / ((1-τ)τ)`.
pub fn single_quantile_score<T: Scalar>(
    y: T,
    x: &[T],
    beta_tau: &[T],
    f_hat: T,
    tau: T,
    direction: &[T],
) -> T {
    let below = if y < linalg::dot(x, beta_tau) {
        T::one()
    } else {
        T::zero()
    };
    f_hat * (tau - below) * linalg::dot(direction, x) / ((T::one() - tau) * tau)
}

/// p×p single-level information matrix at grid level `k` (used by the
/// single-quantile variant of the one-step update).
pub(crate) fn single_level_u<T: Scalar>(
    data: &Dataset<T>,
    dens: &DensityEstimates<T>,
    k: usize,
    tau: T,
) -> Mat<T> {
    let mut s = moment(data, dens, k, k);
    s.scale(T::one() / (tau * (T::one() - tau)));
    s
}
