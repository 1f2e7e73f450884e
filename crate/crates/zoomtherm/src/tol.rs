//! Default tolerances and enumeration guards.
//!
//! Every threshold used by the library lives here so that a run is fully
//! determined by one small record. All values can be overridden per call
//! through [`Params`].

/// Endpoint tolerance for inverse-branch round trips and interval equality.
pub const TOL_INV: f64 = 1e-10;

/// Relative tolerance when comparing an analytic derivative against a
/// finite-difference slope.
pub const TOL_FD: f64 = 1e-6;

/// Step used for finite-difference derivative checks.
pub const H_FD: f64 = 1e-7;

/// Absolute tolerance for cylinder-measure identities (additivity,
/// conformality, overlap agreement of spread masses).
pub const TOL_MEAS: f64 = 1e-9;

/// Residual threshold for eigendata power iteration.
pub const TOL_EIG: f64 = 1e-12;

/// Tolerance for the variational identity `h + ∫φ dμ = p*`.
pub const TOL_EQ: f64 = 1e-3;

/// Sample points per interval for contraction/distortion/monotonicity checks.
pub const SAMPLES_PER_INTERVAL: usize = 64;

/// Guard on the number of enumerated pre-images / survivor components.
pub const MAX_PREIMAGES: usize = 1_000_000;

/// Pressure increments (nats) treated as evidence of divergence when doubling
/// the truncation twice does not decelerate.
pub const DIVERGENCE_GAP: f64 = 0.5;

/// Default dyadic grid depth for projected measures.
pub const GRID_DEPTH: usize = 10;

/// Frequency threshold below which a base point is reported as having no
/// usable density of hyperbolic times.
pub const THETA_MIN: f64 = 0.05;

/// Numeric knobs threaded through the pipeline.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub tol_inv: f64,
    pub tol_fd: f64,
    pub h_fd: f64,
    pub tol_meas: f64,
    pub tol_eig: f64,
    pub tol_eq: f64,
    pub samples: usize,
    pub max_preimages: usize,
    pub divergence_gap: f64,
    pub grid_depth: usize,
    pub theta_min: f64,
    pub max_iters: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tol_inv: TOL_INV,
            tol_fd: TOL_FD,
            h_fd: H_FD,
            tol_meas: TOL_MEAS,
            tol_eig: TOL_EIG,
            tol_eq: TOL_EQ,
            samples: SAMPLES_PER_INTERVAL,
            max_preimages: MAX_PREIMAGES,
            divergence_gap: DIVERGENCE_GAP,
            grid_depth: GRID_DEPTH,
            theta_min: THETA_MIN,
            max_iters: 10_000,
        }
    }
}
