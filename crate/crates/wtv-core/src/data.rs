//! Simulated-ring generation and preprocessing: Otsu background removal,
//! block-mean downsampling, and fidelity-matched lambda calibration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::series::FrameSeries;

/// Default histogram resolution for Otsu thresholding.
pub const OTSU_DEFAULT_BINS: usize = 256;

/// Parameters of the moving-ring stack: a hard-edged annulus whose center
/// follows a seeded Gaussian random walk, reflected at the boundary so the
/// ring always stays fully inside the frame.
///
/// `walk_std` is the per-step, per-axis standard deviation of the walk.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    /// Initial center `(row, col)`, real-valued.
    pub center_start: (f64, f64),
    pub radius: f64,
    pub thickness: f64,
    pub walk_std: f64,
    pub seed: u64,
}

impl RingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.frames == 0 {
            return Err(Error::InvalidSpec(
                "height, width, and frames must be positive".into(),
            ));
        }
        if !(self.radius > 0.0) || !(self.thickness > 0.0) {
            return Err(Error::InvalidSpec(
                "radius and thickness must be positive".into(),
            ));
        }
        let side = self.height.min(self.width) as f64;
        if self.radius + self.thickness >= side / 2.0 {
            return Err(Error::InvalidSpec(format!(
                "ring of radius {} and thickness {} does not fit a {}x{} frame",
                self.radius, self.thickness, self.height, self.width
            )));
        }
        if !(self.walk_std >= 0.0) {
            return Err(Error::InvalidSpec("walk_std must be nonnegative".into()));
        }
        let (lo_r, hi_r, lo_c, hi_c) = self.center_bounds();
        let (r0, c0) = self.center_start;
        if r0 < lo_r || r0 > hi_r || c0 < lo_c || c0 > hi_c {
            return Err(Error::InvalidSpec(format!(
                "center_start ({r0}, {c0}) leaves the ring partially outside the frame"
            )));
        }
        Ok(())
    }

    /// Range the center may occupy while keeping the annulus fully interior.
    fn center_bounds(&self) -> (f64, f64, f64, f64) {
        let margin = self.radius + self.thickness / 2.0;
        (
            margin,
            (self.height - 1) as f64 - margin,
            margin,
            (self.width - 1) as f64 - margin,
        )
    }
}

/// Folds `x` into `[lo, hi]` by reflection.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let period = 2.0 * (hi - lo);
    let mut r = (x - lo).rem_euclid(period);
    if r > hi - lo {
        r = period - r;
    }
    lo + r
}

/// Renders the moving-ring stack: frame `t` has intensity one on pixels whose
/// distance to the walking center lies in
/// `[radius - thickness/2, radius + thickness/2]`, zero elsewhere.
/// Deterministic for a given seed.
pub fn simulate_ring(spec: &RingSpec) -> Result<FrameSeries> {
    spec.validate()?;
    let (lo_r, hi_r, lo_c, hi_c) = spec.center_bounds();
    let walk = Normal::new(0.0, spec.walk_std)
        .map_err(|e| Error::InvalidSpec(format!("bad walk distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let inner = (spec.radius - spec.thickness / 2.0).max(0.0);
    let outer = spec.radius + spec.thickness / 2.0;
    let (inner_sq, outer_sq) = (inner * inner, outer * outer);

    let mut center = spec.center_start;
    let mut frames = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        if t > 0 {
            let dr: f64 = walk.sample(&mut rng);
            let dc: f64 = walk.sample(&mut rng);
            center = (
                reflect(center.0 + dr, lo_r, hi_r),
                reflect(center.1 + dc, lo_c, hi_c),
            );
        }
        let mut frame = vec![0.0; spec.height * spec.width];
        for r in 0..spec.height {
            let dr = r as f64 - center.0;
            for c in 0..spec.width {
                let dc = c as f64 - center.1;
                let sq = dr * dr + dc * dc;
                if sq >= inner_sq && sq <= outer_sq {
                    frame[r * spec.width + c] = 1.0;
                }
            }
        }
        frames.push(frame);
    }
    FrameSeries::new(spec.height, spec.width, frames)
}

/// Otsu's histogram threshold: intensities are min-max scaled onto `bins`
/// buckets and the cut maximizing the between-class variance is selected.
/// Returns the threshold (in original intensity units) and the foreground
/// mask of pixels strictly above it.
pub fn otsu_threshold(frame: &[f64], bins: usize) -> Result<(f64, Vec<bool>)> {
    if bins < 2 {
        return Err(Error::InvalidConfig("otsu needs at least 2 bins".into()));
    }
    if frame.is_empty() || frame.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { frame: 0 });
    }
    let min = frame.iter().copied().fold(f64::INFINITY, f64::min);
    let max = frame.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(Error::ConstantFrame);
    }

    let bin_of = |v: f64| -> usize {
        let s = (v - min) / (max - min);
        ((s * bins as f64) as usize).min(bins - 1)
    };
    let mut hist = vec![0usize; bins];
    for &v in frame {
        hist[bin_of(v)] += 1;
    }

    let total = frame.len() as f64;
    let total_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(k, &n)| k as f64 * n as f64)
        .sum();

    // Scan cuts: class 0 holds bins 0..=k, class 1 the rest.
    let mut best_k = 0usize;
    let mut best_var = f64::NEG_INFINITY;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    for k in 0..bins - 1 {
        w0 += hist[k] as f64;
        sum0 += k as f64 * hist[k] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (total_sum - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_k = k;
        }
    }
    if best_var == f64::NEG_INFINITY {
        return Err(Error::ConstantFrame);
    }

    let threshold = min + (max - min) * (best_k + 1) as f64 / bins as f64;
    let mask = frame.iter().map(|&v| bin_of(v) > best_k).collect();
    Ok((threshold, mask))
}

/// Block-mean pooling over `factor x factor` blocks. Dimensions that do not
/// divide evenly are zero-padded, so the total mass identity
/// `sum_out = sum_in / factor^2` holds regardless.
pub fn downsample(series: &FrameSeries, factor: usize) -> FrameSeries {
    assert!(factor >= 1, "downsample factor must be positive");
    if factor == 1 {
        return series.clone();
    }
    let (h, w) = (series.height(), series.width());
    let oh = h.div_ceil(factor);
    let ow = w.div_ceil(factor);
    let area = (factor * factor) as f64;
    let frames = series
        .frames_iter()
        .map(|frame| {
            let mut out = vec![0.0; oh * ow];
            for r in 0..h {
                let row = &frame[r * w..(r + 1) * w];
                let or = r / factor;
                for (c, &v) in row.iter().enumerate() {
                    out[or * ow + c / factor] += v;
                }
            }
            out.iter_mut().for_each(|v| *v /= area);
            out
        })
        .collect();
    FrameSeries::new(oh, ow, frames).expect("pooled dimensions are consistent")
}

/// Sum-of-squares data fidelity `sum_t ||x_t - y_t||^2` (the calibration
/// target; note no 1/2 factor).
pub fn fidelity_sum(x: &FrameSeries, y: &FrameSeries) -> f64 {
    x.frames_iter()
        .zip(y.frames_iter())
        .map(|(xf, yf)| {
            xf.iter()
                .zip(yf)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Finds `lambda` whose fidelity matches `target` by bisection, exploiting
/// that fidelity is nondecreasing in `lambda`. `fidelity` evaluates the
/// filter at a given `lambda` and returns `sum_t ||x_t - y_t||^2`.
///
/// The bracket must satisfy `fidelity(lo) <= target <= fidelity(hi)`.
/// Converges to `|fidelity(lambda) - target| <= tol * target` within 60
/// bisection steps.
pub fn calibrate_lambda(
    mut fidelity: impl FnMut(f64) -> Result<f64>,
    target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidConfig(format!(
            "bracket low {lo} must be below high {hi}"
        )));
    }
    if !(target >= 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidConfig(
            "target must be nonnegative and tol positive".into(),
        ));
    }
    let f_lo = fidelity(lo)?;
    let f_hi = fidelity(hi)?;
    if !(f_lo <= target && target <= f_hi) {
        return Err(Error::BracketInvalid {
            target,
            lo_fidelity: f_lo,
            hi_fidelity: f_hi,
        });
    }
    let within = |f: f64| (f - target).abs() <= tol * target;
    if target == 0.0 || within(f_lo) {
        return Ok(lo);
    }
    if within(f_hi) {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f_mid = fidelity(mid)?;
        if within(f_mid) {
            return Ok(mid);
        }
        if f_mid < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence(60))
}
