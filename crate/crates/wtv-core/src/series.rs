//! Frame-stack containers, pixel grids, and simplex normalization.
//!
//! A [`FrameSeries`] holds `T` frames over a fixed `height x width` grid,
//! each frame a row-major flattened vector of length `d = height * width`.
//! All downstream modules share this flattening convention.

use crate::error::{Error, Result};

/// Tolerance used when checking that a frame sits on the probability simplex.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A spatiotemporal signal: `T` frames over a `height x width` pixel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    height: usize,
    width: usize,
    values: Vec<Vec<f64>>,
    mass_scale: Option<Vec<f64>>,
}

impl FrameSeries {
    /// Builds a series from per-frame row-major pixel vectors.
    ///
    /// Rejects empty stacks, frames of the wrong length, and non-finite values.
    pub fn new(height: usize, width: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        let d = height * width;
        if d == 0 || values.is_empty() {
            return Err(Error::DimensionMismatch(
                "series needs a non-empty grid and at least one frame".into(),
            ));
        }
        for (t, frame) in values.iter().enumerate() {
            if frame.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    actual: frame.len(),
                });
            }
            if frame.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { frame: t });
            }
        }
        Ok(Self {
            height,
            width,
            values,
            mass_scale: None,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of frames `T`.
    pub fn frames(&self) -> usize {
        self.values.len()
    }

    /// Pixels per frame, `d = height * width`.
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t]
    }

    pub fn frames_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.iter().map(|f| f.as_slice())
    }

    /// Per-frame pre-normalization masses, present after [`FrameSeries::normalize`].
    pub fn mass_scale(&self) -> Option<&[f64]> {
        self.mass_scale.as_deref()
    }

    /// The time series seen by a single pixel.
    pub fn pixel_series(&self, pixel: usize) -> Vec<f64> {
        self.values.iter().map(|f| f[pixel]).collect()
    }

    /// Rebuilds a series with the same grid from new frame data.
    pub fn with_values(&self, values: Vec<Vec<f64>>) -> Result<Self> {
        let mut s = Self::new(self.height, self.width, values)?;
        s.mass_scale = self.mass_scale.clone();
        Ok(s)
    }

    /// Clamps negatives to zero and scales each frame onto the probability
    /// simplex. The clamped per-frame totals are retained so
    /// [`FrameSeries::denormalize`] can restore original intensities.
    pub fn normalize(&self) -> Result<FrameSeries> {
        let mut scales = Vec::with_capacity(self.frames());
        let mut frames = Vec::with_capacity(self.frames());
        for (t, frame) in self.values.iter().enumerate() {
            let clamped: Vec<f64> = frame.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            if total <= 0.0 {
                return Err(Error::AllZeroFrame { frame: t });
            }
            frames.push(clamped.iter().map(|&v| v / total).collect());
            scales.push(total);
        }
        Ok(FrameSeries {
            height: self.height,
            width: self.width,
            values: frames,
            mass_scale: Some(scales),
        })
    }

    /// Undoes [`FrameSeries::normalize`] by multiplying each frame with its
    /// recorded mass.
    pub fn denormalize(&self) -> Result<FrameSeries> {
        let scales = self.mass_scale.as_ref().ok_or(Error::MissingScale)?;
        let frames = self
            .values
            .iter()
            .zip(scales)
            .map(|(frame, &s)| frame.iter().map(|&v| v * s).collect())
            .collect();
        Ok(FrameSeries {
            height: self.height,
            width: self.width,
            values: frames,
            mass_scale: None,
        })
    }

    /// Checks the simplex invariant on every frame: entries nonnegative and
    /// sums within `tol` of one. Returns the first offending frame.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for (t, frame) in self.values.iter().enumerate() {
            let sum: f64 = frame.iter().sum();
            if frame.iter().any(|&v| v < 0.0) || (sum - 1.0).abs() > tol {
                return Err(Error::NotNormalized { frame: t, sum });
            }
        }
        Ok(())
    }

    pub(crate) fn set_mass_scale(&mut self, scale: Option<Vec<f64>>) {
        self.mass_scale = scale;
    }
}

/// The 2D integer lattice underlying a frame: pixel `i` sits at row `i / width`,
/// column `i % width`. The map between flattened indices and coordinates is a
/// bijection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelGrid {
    height: usize,
    width: usize,
}

impl PixelGrid {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of lattice points `d`.
    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates `(row, col)` of flattened pixel `i`.
    pub fn coord(&self, i: usize) -> (usize, usize) {
        (i / self.width, i % self.width)
    }

    /// Flattened index of `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coordinates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).map(|i| self.coord(i))
    }
}

/// Sweep strategy for the Wasserstein filter's outer loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    /// Sequential sweep; each transition sees the freshest estimate.
    #[default]
    GaussSeidel,
    /// All transitions solved against a snapshot of the estimate, possibly in
    /// parallel. Results are applied in transition order, so output does not
    /// depend on thread count.
    Jacobi,
}

/// Parameters of the Wasserstein total variation filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Transport regularization weight, `>= 0`.
    pub lambda: f64,
    /// Entropic regularization weight, `> 0`. Strong convexity (and a unique
    /// optimum) requires a strictly positive value.
    pub gamma: f64,
    /// Gradient step size, `> 0`.
    pub alpha: f64,
    /// Inner Sinkhorn iterations per transition per outer sweep.
    pub sinkhorn_iters: usize,
    /// Outer convergence tolerance on the Frobenius norm of the estimate
    /// change. `None` selects `1e-6 * d * T` at run time.
    pub tolerance: Option<f64>,
    pub max_outer_iters: usize,
    /// Ground-cost truncation radius; `None` keeps the dense kernel.
    pub kernel_truncation_radius: Option<f64>,
    /// Run Sinkhorn updates on the dual potentials with streamed log-sum-exp
    /// instead of multiplicative scalings.
    pub log_domain: bool,
    pub sweep: SweepMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            gamma: 1.0,
            alpha: 0.05,
            sinkhorn_iters: 100,
            tolerance: None,
            max_outer_iters: 500,
            kernel_truncation_radius: None,
            log_domain: false,
            sweep: SweepMode::GaussSeidel,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.sinkhorn_iters == 0 {
            return Err(Error::InvalidConfig("sinkhorn_iters must be >= 1".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("max_outer_iters must be >= 1".into()));
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "tolerance must be positive, got {tol}"
                )));
            }
        }
        if let Some(r) = self.kernel_truncation_radius {
            if !(r >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "truncation radius must be nonnegative, got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Effective outer tolerance for a `d`-pixel, `T`-frame problem.
    pub fn effective_tolerance(&self, d: usize, frames: usize) -> f64 {
        self.tolerance
            .unwrap_or(1e-6 * d as f64 * frames as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series(frames: Vec<Vec<f64>>) -> FrameSeries {
        let d = frames[0].len();
        FrameSeries::new(1, d, frames).unwrap()
    }

    #[test]
    fn normalize_uniform_scaling() {
        let s = series(vec![vec![2.0, 2.0]]).normalize().unwrap();
        assert_eq!(s.frame(0), &[0.5, 0.5]);
        assert_eq!(s.mass_scale().unwrap(), &[4.0]);
    }

    #[test]
    fn normalize_clamps_negatives_before_scaling() {
        let s = series(vec![vec![1.0, 0.0, -1.0]]).normalize().unwrap();
        assert_eq!(s.frame(0), &[1.0, 0.0, 0.0]);
        assert_eq!(s.mass_scale().unwrap(), &[1.0]);
    }

    #[test]
    fn normalize_rejects_massless_frame() {
        let err = series(vec![vec![0.0, 0.0]]).normalize().unwrap_err();
        assert!(matches!(err, Error::AllZeroFrame { frame: 0 }));
    }

    #[test]
    fn denormalize_restores_scale() {
        let s = series(vec![vec![3.0, 1.0]]);
        let back = s.normalize().unwrap().denormalize().unwrap();
        assert_eq!(back.frame(0), &[3.0, 1.0]);

        let mut n = series(vec![vec![0.5, 0.5]]);
        n.set_mass_scale(Some(vec![4.0]));
        assert_eq!(n.denormalize().unwrap().frame(0), &[2.0, 2.0]);

        let mut n = series(vec![vec![0.25, 0.75]]);
        n.set_mass_scale(Some(vec![8.0]));
        assert_eq!(n.denormalize().unwrap().frame(0), &[2.0, 6.0]);
    }

    #[test]
    fn denormalize_requires_scale() {
        let err = series(vec![vec![1.0, 0.0]]).denormalize().unwrap_err();
        assert!(matches!(err, Error::MissingScale));
    }

    #[test]
    fn rejects_non_finite_and_ragged_input() {
        assert!(matches!(
            FrameSeries::new(1, 2, vec![vec![f64::NAN, 0.0]]),
            Err(Error::NonFinite { frame: 0 })
        ));
        assert!(matches!(
            FrameSeries::new(1, 2, vec![vec![1.0, 2.0], vec![1.0]]),
            Err(Error::LengthMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn grid_coordinates_are_bijective() {
        let g = PixelGrid::new(3, 4);
        for i in 0..g.len() {
            let (r, c) = g.coord(i);
            assert_eq!(g.index(r, c), i);
        }
        assert_eq!(g.coord(5), (1, 1));
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = FilterConfig::default();
        cfg.gamma = 0.0;
        assert!(cfg.validate().is_err());
        cfg = FilterConfig::default();
        cfg.alpha = -1.0;
        assert!(cfg.validate().is_err());
        cfg = FilterConfig {
            tolerance: Some(0.0),
            ..FilterConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(FilterConfig::default().validate().is_ok());
        assert_abs_diff_eq!(
            FilterConfig::default().effective_tolerance(10, 4),
            4e-5,
            epsilon = 1e-18
        );
    }

    proptest! {
        /// Round trip: denormalize(normalize(x)) recovers any nonnegative series.
        #[test]
        fn normalize_round_trip(
            raw in proptest::collection::vec(
                proptest::collection::vec(0.0f64..100.0, 6),
                1..5,
            )
        ) {
            prop_assume!(raw.iter().all(|f| f.iter().sum::<f64>() > 1e-9));
            let s = FrameSeries::new(2, 3, raw.clone()).unwrap();
            let back = s.normalize().unwrap().denormalize().unwrap();
            for (orig, rec) in raw.iter().zip(back.frames_iter()) {
                for (&a, &b) in orig.iter().zip(rec) {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }

        /// Normalized frames lie on the probability simplex.
        #[test]
        fn normalized_frames_on_simplex(
            raw in proptest::collection::vec(
                proptest::collection::vec(-1.0f64..10.0, 4),
                1..5,
            )
        ) {
            prop_assume!(raw.iter().all(|f| f.iter().any(|&v| v > 1e-6)));
            let s = FrameSeries::new(2, 2, raw).unwrap();
            let n = s.normalize().unwrap();
            for frame in n.frames_iter() {
                let sum: f64 = frame.iter().sum();
                prop_assert!(frame.iter().all(|&v| v >= 0.0));
                prop_assert!((sum - 1.0).abs() <= SIMPLEX_TOL);
            }
            prop_assert!(n.check_normalized(SIMPLEX_TOL).is_ok());
        }
    }
}
