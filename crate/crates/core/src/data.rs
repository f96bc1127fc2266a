//! Domain types: datasets, quantile grids, coefficient sets, fit settings.
//!
//! All types here are immutable after construction and safe to share across
//! threads.

use crate::error::Error;
use crate::linalg::Mat;
use crate::scalar::Scalar;

/// A regression sample: responses `y` and an n×p design matrix `x`.
///
/// If the model wants an intercept, the caller supplies a constant-1 column;
/// nothing is injected silently. The largest absolute design entry seen at
/// construction is kept as a diagnostic (the theory assumes bounded
/// covariates) but never used to reject data.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    y: Vec<T>,
    x: Mat<T>,
    max_row_norm: T,
}

impl<T: Scalar> Dataset<T> {
    /// Validate and construct a dataset. Rows are reported 1-based in errors.
    pub fn new(y: Vec<T>, x: Mat<T>) -> Result<Self, Error> {
        if y.is_empty() || x.cols() == 0 {
            return Err(Error::DimensionMismatch(
                "need at least one observation and one covariate".into(),
            ));
        }
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "y has {} entries but x has {} rows",
                y.len(),
                x.rows()
            )));
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "response",
                    row: i + 1,
                });
            }
        }
        let mut max_row_norm = T::zero();
        for i in 0..x.rows() {
            for v in x.row(i) {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        what: "covariate",
                        row: i + 1,
                    });
                }
                max_row_norm = max_row_norm.max(v.abs());
            }
        }
        Ok(Dataset { y, x, max_row_norm })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(y: Vec<T>, rows: &[Vec<T>]) -> Result<Self, Error> {
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "y has {} entries but x has {} rows",
                y.len(),
                rows.len()
            )));
        }
        Self::new(y, Mat::from_rows(rows))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn x(&self) -> &Mat<T> {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[T] {
        self.x.row(i)
    }

    /// Largest |x_ij| seen at construction (diagnostic only).
    pub fn max_row_norm(&self) -> T {
        self.max_row_norm
    }

    /// Pairs-resample: new dataset made of the given row indices.
    pub fn resample(&self, idx: &[usize]) -> Dataset<T> {
        let y = idx.iter().map(|&i| self.y[i]).collect();
        let mut x = Mat::zeros(idx.len(), self.p());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).copy_from_slice(self.x.row(i));
        }
        Dataset {
            y,
            x,
            max_row_norm: self.max_row_norm,
        }
    }
}

/// Strictly increasing quantile levels in (0, 1), with the virtual endpoints
/// 0 and 1 supplying the outer interval spacings.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid<T> {
    levels: Vec<T>,
}

impl<T: Scalar> QuantileGrid<T> {
    pub fn new(levels: Vec<T>) -> Result<Self, Error> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for &t in &levels {
            if !(t > T::zero() && t < T::one()) {
                return Err(Error::InvalidGrid(format!("level {t} outside (0,1)")));
            }
        }
        for w in levels.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidGrid(format!(
                    "levels must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(QuantileGrid { levels })
    }

    pub fn single(tau: T) -> Result<Self, Error> {
        Self::new(vec![tau])
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> T {
        self.levels[l]
    }

    /// Interval spacings including the endpoint intervals:
    /// `[tau_1 - 0, tau_2 - tau_1, ..., 1 - tau_L]` (length L+1).
    pub fn spacings(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.levels.len() + 1);
        let mut prev = T::zero();
        for &t in &self.levels {
            out.push(t - prev);
            prev = t;
        }
        out.push(T::one() - prev);
        out
    }

    pub fn first(&self) -> T {
        self.levels[0]
    }

    pub fn last(&self) -> T {
        *self.levels.last().unwrap()
    }
}

/// Off-grid pinball fits cached by `fit_grid` for derivative estimation:
/// columns `l` hold the fits at `tau_l + h` and `tau_l - h`.
#[derive(Debug, Clone)]
pub struct OffGridFits<T> {
    pub h: T,
    pub plus: Vec<Vec<T>>,
    pub minus: Vec<Vec<T>>,
}

/// Per-level coefficient columns, optionally with derivative estimates and
/// the off-grid fits they came from.
#[derive(Debug, Clone)]
pub struct CoefficientSet<T> {
    grid: QuantileGrid<T>,
    beta: Vec<Vec<T>>,
    dbeta: Option<Vec<Vec<T>>>,
    offgrid: Option<OffGridFits<T>>,
}

impl<T: Scalar> CoefficientSet<T> {
    pub fn new(grid: QuantileGrid<T>, beta: Vec<Vec<T>>) -> Result<Self, Error> {
        if beta.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient columns for a grid of length {}",
                beta.len(),
                grid.len()
            )));
        }
        let p = beta[0].len();
        if p == 0 || beta.iter().any(|c| c.len() != p) {
            return Err(Error::DimensionMismatch(
                "coefficient columns must share a positive length".into(),
            ));
        }
        Ok(CoefficientSet {
            grid,
            beta,
            dbeta: None,
            offgrid: None,
        })
    }

    pub(crate) fn with_offgrid(mut self, offgrid: OffGridFits<T>) -> Self {
        self.offgrid = Some(offgrid);
        self
    }

    pub fn with_dbeta(mut self, dbeta: Vec<Vec<T>>) -> Result<Self, Error> {
        if dbeta.len() != self.grid.len() || dbeta.iter().any(|c| c.len() != self.p()) {
            return Err(Error::DimensionMismatch(
                "derivative columns must match the coefficient layout".into(),
            ));
        }
        self.dbeta = Some(dbeta);
        Ok(self)
    }

    pub fn grid(&self) -> &QuantileGrid<T> {
        &self.grid
    }

    pub fn p(&self) -> usize {
        self.beta[0].len()
    }

    /// Coefficient column for level `l` (0-based).
    pub fn column(&self, l: usize) -> &[T] {
        &self.beta[l]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.beta
    }

    pub fn dbeta(&self) -> Option<&[Vec<T>]> {
        self.dbeta.as_deref()
    }

    pub fn offgrid(&self) -> Option<&OffGridFits<T>> {
        self.offgrid.as_ref()
    }
}

/// Bandwidth selection for the derivative difference quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule<T> {
    /// Use exactly this h; fitting fails if a level ± h leaves (0, 1).
    Explicit(T),
    /// `c · n^(-1/5)`, capped so every off-grid level stays inside (0, 1).
    Automatic { c: T },
}

/// Settings shared by the fitting pipeline.
#[derive(Debug, Clone, Copy)]
pub struct FitConfig<T> {
    pub bandwidth: BandwidthRule<T>,
    /// Floor applied to x'·dbeta before taking reciprocals. The default 0.3
    /// caps the density plug-in at ~3.3, which keeps rare difference-quotient
    /// noise from dominating the information matrix on unit-scale responses;
    /// responses whose conditional quantile function rises much more slowly
    /// than 0.3 per unit of tau need a smaller floor.
    pub density_floor: T,
    /// Relative objective-change tolerance for the smoothed solver phase.
    pub solver_tolerance: T,
    /// Iteration cap for the smoothed solver phase.
    pub max_iterations: usize,
    /// Master seed for replication-based routines.
    pub seed: u64,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        FitConfig {
            bandwidth: BandwidthRule::Automatic { c: T::one() },
            density_floor: T::of(0.3),
            solver_tolerance: T::of(1e-9),
            max_iterations: 200,
            seed: 0,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.density_floor > T::zero()) {
            return Err(Error::InvalidConfig("density floor must be > 0".into()));
        }
        if !(self.solver_tolerance > T::zero()) {
            return Err(Error::InvalidConfig("solver tolerance must be > 0".into()));
        }
        match self.bandwidth {
            BandwidthRule::Explicit(h) if !(h > T::zero()) => {
                Err(Error::InvalidConfig("explicit bandwidth must be > 0".into()))
            }
            BandwidthRule::Automatic { c } if !(c > T::zero()) => {
                Err(Error::InvalidConfig("bandwidth constant must be > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_valid_dataset() {
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![1.0], vec![1.0], vec![1.0]])
            .unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 1);
        assert_eq!(d.max_row_norm(), 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = Dataset::from_rows(vec![1.0, 2.0, 3.0], &[vec![1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn non_finite_reports_row() {
        let err =
            Dataset::from_rows(vec![1.0, f64::NAN], &[vec![1.0], vec![1.0]]).unwrap_err();
        match err {
            Error::NonFinite { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn construction_is_pure() {
        let a = Dataset::from_rows(vec![1.0, 2.0], &[vec![1.0, 0.5], vec![1.0, -0.5]]).unwrap();
        let b = Dataset::from_rows(vec![1.0, 2.0], &[vec![1.0, 0.5], vec![1.0, -0.5]]).unwrap();
        assert_eq!(a.y(), b.y());
        assert_eq!(a.x(), b.x());
    }

    #[test]
    fn grid_spacings() {
        let g = QuantileGrid::new(vec![0.5f64, 0.7]).unwrap();
        assert_eq!(g.len(), 2);
        let s = g.spacings();
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[1] - 0.2).abs() < 1e-15);
        assert!((s[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_disorder_and_range() {
        assert!(QuantileGrid::new(vec![0.7, 0.5]).is_err());
        assert!(QuantileGrid::new(vec![0.3, 0.3]).is_err());
        assert!(QuantileGrid::new(vec![0.0, 0.5]).is_err());
        assert!(QuantileGrid::new(vec![0.5, 1.0]).is_err());
        assert!(QuantileGrid::new(vec![0.3, 0.5, 0.7]).is_ok());
    }

    #[test]
    fn spacings_sum_to_one() {
        let g = QuantileGrid::new(vec![0.111, 0.25, 0.5, 0.77, 0.93]).unwrap();
        let total: f64 = g.spacings().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficient_set_checks_shape() {
        let g = QuantileGrid::new(vec![0.5, 0.7]).unwrap();
        assert!(CoefficientSet::new(g.clone(), vec![vec![1.0, 2.0]]).is_err());
        assert!(
            CoefficientSet::new(g, vec![vec![1.0, 2.0], vec![1.5, 2.5]]).is_ok()
        );
    }
}
