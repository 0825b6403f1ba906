//! Entropic optimal transport between frames: ground costs, Gibbs kernels,
//! Sinkhorn-Knopp scaling, transport plans, and their cost/entropy functionals.
//!
//! The kernel is `K = exp(-lambda * C / gamma)` over the pairwise pixel cost
//! `C`. Alternating scaling updates `u <- mu / (K v)`, `v <- nu / (K u)`
//! converge to scalings whose plan `diag(u) K diag(v)` matches the prescribed
//! marginals; the dual potentials are `a = -gamma log u`, `b = -gamma log v`.
//! Large `lambda / gamma` underflows the multiplicative updates, so a
//! log-domain path operating on the potentials with streamed log-sum-exp is
//! available behind a flag.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::series::PixelGrid;

/// Kernel entries below this trigger a (non-fatal) underflow warning.
const UNDERFLOW_WARN_THRESHOLD: f64 = 1e-300;

/// Sparsity pattern shared by a cost, its kernel, and derived plans.
/// Symmetric with the full diagonal present; sparse rows are sorted CSR.
#[derive(Debug, PartialEq, Eq)]
pub(crate) enum PairPattern {
    Dense { d: usize },
    Sparse {
        d: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
    },
}

impl PairPattern {
    pub(crate) fn d(&self) -> usize {
        match self {
            PairPattern::Dense { d } => *d,
            PairPattern::Sparse { d, .. } => *d,
        }
    }

    /// Number of stored entries.
    pub(crate) fn len(&self) -> usize {
        match self {
            PairPattern::Dense { d } => d * d,
            PairPattern::Sparse { col_idx, .. } => col_idx.len(),
        }
    }

    /// Storage slot of `(i, j)` if present.
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        match self {
            PairPattern::Dense { d } => Some(i * d + j),
            PairPattern::Sparse { row_ptr, col_idx, .. } => {
                let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                row.binary_search(&(j as u32)).ok().map(|k| row_ptr[i] + k)
            }
        }
    }

    /// Iterates `(column, slot)` pairs of row `i`.
    fn row(&self, i: usize) -> RowIter<'_> {
        match self {
            PairPattern::Dense { d } => RowIter::Dense {
                j: 0,
                d: *d,
                base: i * d,
            },
            PairPattern::Sparse { row_ptr, col_idx, .. } => RowIter::Sparse {
                slot: row_ptr[i],
                end: row_ptr[i + 1],
                col_idx,
            },
        }
    }
}

enum RowIter<'a> {
    Dense { j: usize, d: usize, base: usize },
    Sparse {
        slot: usize,
        end: usize,
        col_idx: &'a [u32],
    },
}

impl Iterator for RowIter<'_> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        match self {
            RowIter::Dense { j, d, base } => {
                if *j < *d {
                    let out = (*j, *base + *j);
                    *j += 1;
                    Some(out)
                } else {
                    None
                }
            }
            RowIter::Sparse { slot, end, col_idx } => {
                if *slot < *end {
                    let out = (col_idx[*slot] as usize, *slot);
                    *slot += 1;
                    Some(out)
                } else {
                    None
                }
            }
        }
    }
}

fn patterns_match(a: &Arc<PairPattern>, b: &Arc<PairPattern>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Pairwise pixel transport cost `c[i][j]`, symmetric with a zero diagonal.
/// Stored dense or radius-truncated sparse; dropped entries are treated as
/// unreachable (their kernel weight is exactly zero).
#[derive(Debug)]
pub struct GroundCost {
    pattern: Arc<PairPattern>,
    values: Vec<f64>,
    truncation_radius: Option<f64>,
}

impl GroundCost {
    pub fn d(&self) -> usize {
        self.pattern.d()
    }

    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }

    pub fn is_dense(&self) -> bool {
        matches!(*self.pattern, PairPattern::Dense { .. })
    }

    /// Stored entry count.
    pub fn nnz(&self) -> usize {
        self.pattern.len()
    }

    /// Cost of pair `(i, j)`; zero when the pair is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    /// Whether pair `(i, j)` is stored.
    pub fn stores(&self, i: usize, j: usize) -> bool {
        self.pattern.slot(i, j).is_some()
    }

    /// Builds a dense cost from row-major values; validates symmetry, a zero
    /// diagonal, and nonnegativity.
    pub fn from_dense(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != d * d {
            return Err(Error::LengthMismatch {
                expected: d * d,
                actual: values.len(),
            });
        }
        for i in 0..d {
            if values[i * d + i] != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "ground cost diagonal must be zero, got {} at {i}",
                    values[i * d + i]
                )));
            }
            for j in 0..d {
                let v = values[i * d + j];
                if !(v >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "ground cost must be nonnegative, got {v} at ({i}, {j})"
                    )));
                }
                if v != values[j * d + i] {
                    return Err(Error::InvalidConfig(format!(
                        "ground cost must be symmetric; mismatch at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            pattern: Arc::new(PairPattern::Dense { d }),
            values,
            truncation_radius: None,
        })
    }
}

/// Pairwise Euclidean distances between lattice coordinates. With a
/// truncation radius, pairs farther apart than the radius are omitted from
/// storage entirely.
pub fn euclidean_cost(grid: &PixelGrid, truncation_radius: Option<f64>) -> GroundCost {
    let d = grid.len();
    let dist = |i: usize, j: usize| -> f64 {
        let (ri, ci) = grid.coord(i);
        let (rj, cj) = grid.coord(j);
        let dr = ri as f64 - rj as f64;
        let dc = ci as f64 - cj as f64;
        (dr * dr + dc * dc).sqrt()
    };
    match truncation_radius {
        None => {
            let mut values = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    values[i * d + j] = dist(i, j);
                }
            }
            GroundCost {
                pattern: Arc::new(PairPattern::Dense { d }),
                values,
                truncation_radius: None,
            }
        }
        Some(radius) => {
            let r = radius.max(0.0);
            let reach = r.floor() as isize;
            let r2 = r * r;
            let (h, w) = (grid.height() as isize, grid.width() as isize);
            let mut row_ptr = Vec::with_capacity(d + 1);
            let mut col_idx = Vec::new();
            let mut values = Vec::new();
            row_ptr.push(0);
            for i in 0..d {
                let (ri, ci) = grid.coord(i);
                for dr in -reach..=reach {
                    let rr = ri as isize + dr;
                    if rr < 0 || rr >= h {
                        continue;
                    }
                    for dc in -reach..=reach {
                        let cc = ci as isize + dc;
                        if cc < 0 || cc >= w {
                            continue;
                        }
                        let sq = (dr * dr + dc * dc) as f64;
                        if sq <= r2 {
                            col_idx.push((rr * w + cc) as u32);
                            values.push(sq.sqrt());
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
            GroundCost {
                pattern: Arc::new(PairPattern::Sparse { d, row_ptr, col_idx }),
                values,
                truncation_radius: Some(radius),
            }
        }
    }
}

/// Truncation radius at which every dropped kernel entry satisfies
/// `exp(-lambda c / gamma) < 1e-12`. `None` (dense) when `lambda` is zero.
pub fn default_truncation_radius(lambda: f64, gamma: f64) -> Option<f64> {
    if lambda > 0.0 && gamma > 0.0 {
        Some(-(1e-12f64).ln() * gamma / lambda)
    } else {
        None
    }
}

/// Entrywise kernel `K = exp(-lambda C / gamma)` on a ground cost's pattern.
/// Stores both the kernel values and the exponents `-lambda c / gamma`; the
/// latter drive the log-domain updates, where a stored value of `0.0` would
/// lose the magnitude information.
#[derive(Debug)]
pub struct GibbsKernel {
    pattern: Arc<PairPattern>,
    values: Vec<f64>,
    exponents: Vec<f64>,
    lambda: f64,
    gamma: f64,
    min_entry: f64,
}

impl GibbsKernel {
    pub fn d(&self) -> usize {
        self.pattern.d()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Smallest stored kernel value.
    pub fn min_entry(&self) -> f64 {
        self.min_entry
    }

    /// True when some stored entry sits below the representable-range margin,
    /// meaning multiplicative updates are at risk of underflow.
    pub fn underflow_risk(&self) -> bool {
        self.min_entry < UNDERFLOW_WARN_THRESHOLD
    }

    /// Kernel value at `(i, j)`; exact zero for truncated pairs.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    /// `out[i] = sum_j K[i][j] x[j]`. The kernel is symmetric, so this also
    /// serves as the transposed product.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        match &*self.pattern {
            PairPattern::Dense { d } => {
                for i in 0..*d {
                    let row = &self.values[i * d..(i + 1) * d];
                    out[i] = row.iter().zip(x).map(|(&k, &v)| k * v).sum();
                }
            }
            PairPattern::Sparse { d, row_ptr, col_idx } => {
                for i in 0..*d {
                    let lo = row_ptr[i];
                    let hi = row_ptr[i + 1];
                    out[i] = self.values[lo..hi]
                        .iter()
                        .zip(&col_idx[lo..hi])
                        .map(|(&k, &j)| k * x[j as usize])
                        .sum();
                }
            }
        }
    }

    /// `out[i] = log sum_j exp(exponent[i][j] - w[j] / gamma)`, streamed with a
    /// running maximum. Entries with `w[j] = +inf` contribute nothing.
    fn log_matvec(&self, w: &[f64], out: &mut [f64]) {
        let d = self.d();
        for i in 0..d {
            let mut acc = LogSumExp::new();
            for (j, slot) in self.pattern.row(i) {
                let wj = w[j];
                if wj.is_finite() {
                    acc.add(self.exponents[slot] - wj / self.gamma);
                }
            }
            out[i] = acc.value();
        }
    }
}

/// Builds the Gibbs kernel of a ground cost. Warns (without failing) when the
/// smallest stored entry risks underflow in multiplicative updates.
pub fn gibbs_kernel(cost: &GroundCost, lambda: f64, gamma: f64) -> Result<GibbsKernel> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be nonnegative, got {lambda}"
        )));
    }
    let scale = -lambda / gamma;
    let exponents: Vec<f64> = cost.values.iter().map(|&c| scale * c).collect();
    let values: Vec<f64> = exponents.iter().map(|&e| e.exp()).collect();
    let min_entry = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min_entry < UNDERFLOW_WARN_THRESHOLD {
        log::warn!(
            "gibbs kernel minimum entry {min_entry:e} below {UNDERFLOW_WARN_THRESHOLD:e}; \
             multiplicative sinkhorn may underflow (consider log-domain updates or larger gamma)"
        );
    }
    Ok(GibbsKernel {
        pattern: Arc::clone(&cost.pattern),
        values,
        exponents,
        lambda,
        gamma,
        min_entry,
    })
}

/// Streamed log-sum-exp accumulator.
struct LogSumExp {
    max: f64,
    sum: f64,
}

impl LogSumExp {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = if self.max == f64::NEG_INFINITY {
                1.0
            } else {
                self.sum * (self.max - x).exp() + 1.0
            };
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Sinkhorn scalings `(u, v)` and dual potentials `(a, b) = -gamma log (u, v)`
/// for one marginal pair. Components for zero-mass marginal entries are held
/// at `u = 0` (`a = +inf`) and excluded from updates.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    u: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    gamma: f64,
}

impl DualState {
    /// Cold-start state: unit dual potentials, `u = v = exp(-1/gamma)`.
    pub fn cold(d: usize, gamma: f64) -> Self {
        let scaling = (-1.0 / gamma).exp();
        Self {
            u: vec![scaling; d],
            v: vec![scaling; d],
            a: vec![1.0; d],
            b: vec![1.0; d],
            gamma,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Row dual potentials; `+inf` marks a zero-mass marginal entry.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Column dual potentials.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Builds a state from explicit scalings (potentials derived).
    pub fn from_scalings(u: Vec<f64>, v: Vec<f64>, gamma: f64) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                actual: v.len(),
            });
        }
        if u.iter().chain(&v).any(|&s| s < 0.0 || s.is_nan()) {
            return Err(Error::InvalidConfig(
                "scalings must be nonnegative and not NaN".into(),
            ));
        }
        let a = u.iter().map(|&s| -gamma * s.ln()).collect();
        let b = v.iter().map(|&s| -gamma * s.ln()).collect();
        Ok(Self { u, v, a, b, gamma })
    }

    /// Shifts the dual gauge: `a += delta`, `b -= delta` (scalings rescaled to
    /// match). The transport plan is invariant under this shift.
    pub fn shift_gauge(&mut self, delta: f64) {
        let factor = (-delta / self.gamma).exp();
        for (a, u) in self.a.iter_mut().zip(&mut self.u) {
            if a.is_finite() {
                *a += delta;
                *u *= factor;
            }
        }
        for (b, v) in self.b.iter_mut().zip(&mut self.v) {
            if b.is_finite() {
                *b -= delta;
                *v /= factor;
            }
        }
    }

    fn refresh_potentials(&mut self) {
        for (a, &u) in self.a.iter_mut().zip(&self.u) {
            *a = -self.gamma * u.ln();
        }
        for (b, &v) in self.b.iter_mut().zip(&self.v) {
            *b = -self.gamma * v.ln();
        }
    }

    fn refresh_scalings(&mut self) {
        for (u, &a) in self.u.iter_mut().zip(&self.a) {
            *u = (-a / self.gamma).exp();
        }
        for (v, &b) in self.v.iter_mut().zip(&self.b) {
            *v = (-b / self.gamma).exp();
        }
    }
}

/// Runs `iters` alternating Sinkhorn updates for marginals `(mu, nu)` on the
/// given kernel, warm-starting from a previous state when provided. The `u`
/// update matches `mu`, the `v` update `nu`.
///
/// Errors with [`Error::NumericUnderflow`] when a supported component of
/// `K v` or `K u` reaches zero or stops being finite; enabling `log_domain`
/// or raising gamma avoids this. In log-domain mode the potentials are
/// authoritative and extreme scalings may round to `0`/`inf`.
pub fn sinkhorn(
    mu: &[f64],
    nu: &[f64],
    kernel: &GibbsKernel,
    iters: usize,
    warm: Option<&DualState>,
    log_domain: bool,
) -> Result<DualState> {
    let d = kernel.d();
    if mu.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: mu.len(),
        });
    }
    if nu.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: nu.len(),
        });
    }
    if iters == 0 {
        return Err(Error::InvalidConfig("sinkhorn needs at least 1 iteration".into()));
    }
    for (name, m) in [("mu", mu), ("nu", nu)] {
        if m.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{name} must be nonnegative and finite"
            )));
        }
        if m.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidConfig(format!("{name} carries no mass")));
        }
    }
    let mut state = match warm {
        Some(w) => {
            if w.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    actual: w.len(),
                });
            }
            if w.gamma != kernel.gamma {
                return Err(Error::InvalidConfig(format!(
                    "warm state gamma {} does not match kernel gamma {}",
                    w.gamma, kernel.gamma
                )));
            }
            w.clone()
        }
        None => DualState::cold(d, kernel.gamma),
    };

    if log_domain {
        let mut lse = vec![0.0; d];
        for _ in 0..iters {
            kernel.log_matvec(&state.b, &mut lse);
            for i in 0..d {
                state.a[i] = if mu[i] > 0.0 {
                    if lse[i] == f64::NEG_INFINITY {
                        return Err(Error::NumericUnderflow { transition: None });
                    }
                    kernel.gamma * (lse[i] - mu[i].ln())
                } else {
                    f64::INFINITY
                };
            }
            kernel.log_matvec(&state.a, &mut lse);
            for j in 0..d {
                state.b[j] = if nu[j] > 0.0 {
                    if lse[j] == f64::NEG_INFINITY {
                        return Err(Error::NumericUnderflow { transition: None });
                    }
                    kernel.gamma * (lse[j] - nu[j].ln())
                } else {
                    f64::INFINITY
                };
            }
        }
        state.refresh_scalings();
    } else {
        let mut prod = vec![0.0; d];
        for _ in 0..iters {
            kernel.matvec(&state.v, &mut prod);
            for i in 0..d {
                state.u[i] = if mu[i] > 0.0 {
                    let den = prod[i];
                    if den == 0.0 || !den.is_finite() {
                        return Err(Error::NumericUnderflow { transition: None });
                    }
                    mu[i] / den
                } else {
                    0.0
                };
            }
            kernel.matvec(&state.u, &mut prod);
            for j in 0..d {
                state.v[j] = if nu[j] > 0.0 {
                    let den = prod[j];
                    if den == 0.0 || !den.is_finite() {
                        return Err(Error::NumericUnderflow { transition: None });
                    }
                    nu[j] / den
                } else {
                    0.0
                };
            }
        }
        state.refresh_potentials();
    }
    Ok(state)
}

/// A transport plan on the kernel's pattern, with cached marginals.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pattern: Arc<PairPattern>,
    values: Vec<f64>,
    row_marginal: Vec<f64>,
    col_marginal: Vec<f64>,
}

impl TransportPlan {
    pub fn d(&self) -> usize {
        self.pattern.d()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |s| self.values[s])
    }

    /// Cached row sums `P 1`.
    pub fn row_marginal(&self) -> &[f64] {
        &self.row_marginal
    }

    /// Cached column sums `P^T 1`.
    pub fn col_marginal(&self) -> &[f64] {
        &self.col_marginal
    }

    pub fn total_mass(&self) -> f64 {
        self.row_marginal.iter().sum()
    }
}

/// Assembles the plan `P = diag(u) K diag(v)` and caches its marginals.
///
/// When a scaling overflowed (log-domain states under extreme
/// regularization), entries are recovered from the potentials instead:
/// `P[i][j] = exp(exponent[i][j] - (a[i] + b[j]) / gamma)`.
pub fn plan_from_duals(state: &DualState, kernel: &GibbsKernel) -> TransportPlan {
    let d = kernel.d();
    debug_assert_eq!(state.len(), d);
    let finite_scalings = state
        .u
        .iter()
        .chain(&state.v)
        .all(|s| s.is_finite());
    let mut values = vec![0.0; kernel.pattern.len()];
    let mut row_marginal = vec![0.0; d];
    let mut col_marginal = vec![0.0; d];
    for i in 0..d {
        for (j, slot) in kernel.pattern.row(i) {
            let p = if finite_scalings {
                state.u[i] * kernel.values[slot] * state.v[j]
            } else {
                let expo = kernel.exponents[slot] - (state.a[i] + state.b[j]) / kernel.gamma;
                expo.exp()
            };
            values[slot] = p;
            row_marginal[i] += p;
            col_marginal[j] += p;
        }
    }
    TransportPlan {
        pattern: Arc::clone(&kernel.pattern),
        values,
        row_marginal,
        col_marginal,
    }
}

/// Total transport cost `sum c[i][j] P[i][j]`.
pub fn transport_cost(plan: &TransportPlan, cost: &GroundCost) -> Result<f64> {
    if plan.d() != cost.d() {
        return Err(Error::DimensionMismatch(format!(
            "plan is {}-dimensional, cost {}-dimensional",
            plan.d(),
            cost.d()
        )));
    }
    if !patterns_match(&plan.pattern, &cost.pattern) {
        return Err(Error::DimensionMismatch(
            "plan and cost use different storage patterns".into(),
        ));
    }
    Ok(plan
        .values
        .iter()
        .zip(&cost.values)
        .map(|(&p, &c)| p * c)
        .sum())
}

/// Plan entropy `sum P[i][j] log P[i][j] - 1`, with `0 log 0 = 0`.
pub fn plan_entropy(plan: &TransportPlan) -> f64 {
    plan.values
        .iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>()
        - 1.0
}

/// Transport cost and entropy of the plan defined by `state` without
/// materializing it.
pub(crate) fn stream_cost_entropy(
    state: &DualState,
    kernel: &GibbsKernel,
    cost: &GroundCost,
) -> Result<(f64, f64)> {
    if !patterns_match(&kernel.pattern, &cost.pattern) {
        return Err(Error::DimensionMismatch(
            "kernel and cost use different storage patterns".into(),
        ));
    }
    let d = kernel.d();
    let finite_scalings = state.u.iter().chain(&state.v).all(|s| s.is_finite());
    let mut transport = 0.0;
    let mut neg_entropy = 0.0;
    for i in 0..d {
        for (j, slot) in kernel.pattern.row(i) {
            let p = if finite_scalings {
                state.u[i] * kernel.values[slot] * state.v[j]
            } else {
                (kernel.exponents[slot] - (state.a[i] + state.b[j]) / kernel.gamma).exp()
            };
            if p > 0.0 {
                transport += cost.values[slot] * p;
                neg_entropy += p * p.ln();
            }
        }
    }
    Ok((transport, neg_entropy - 1.0))
}

/// Hilbert projective-metric distance between two positive vectors over their
/// common support: `log max_i(x_i/y_i) - log min_i(x_i/y_i)`. Infinite when
/// the supports differ.
pub fn hilbert_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut max_ratio = f64::NEG_INFINITY;
    let mut min_ratio = f64::INFINITY;
    let mut seen = false;
    for (&a, &b) in x.iter().zip(y) {
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a <= 0.0 || b <= 0.0 {
            return f64::INFINITY;
        }
        let r = a / b;
        max_ratio = max_ratio.max(r);
        min_ratio = min_ratio.min(r);
        seen = true;
    }
    if seen {
        max_ratio.ln() - min_ratio.ln()
    } else {
        0.0
    }
}
