//! Filtering of noisy spatiotemporal (video) time series with an entropic
//! optimal-transport regularizer, alongside classical l1/l2 trend filters and
//! a simulated-ring experiment harness.
//!
//! The transport-regularized filter estimates a nonnegative signal `Y` close
//! to the observations `X` while keeping consecutive frames close in
//! Wasserstein distance, so spatial motion is smoothed instead of being
//! temporally averaged away. Entropic regularization makes the objective
//! strongly convex and solvable with Sinkhorn scaling.

pub mod data;
pub mod error;
pub mod ot;
pub mod series;
pub mod trend;
pub mod wtv;

pub use error::{Error, Result};
pub use ot::{
    default_truncation_radius, euclidean_cost, gibbs_kernel, hilbert_distance, plan_entropy,
    plan_from_duals, sinkhorn, transport_cost, DualState, GibbsKernel, GroundCost, TransportPlan,
};
pub use series::{FilterConfig, FrameSeries, PixelGrid, SweepMode};
pub use trend::{
    apply_diff, l1_filter_series, l1_lambda_max, l1_trend_filter, l2_filter_series,
    l2_trend_filter, DiffOperator,
};
pub use wtv::{gradient_step, wtv_filter, wtv_objective, WtvReport, WtvState};
