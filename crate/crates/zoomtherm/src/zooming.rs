//! Hyperbolic and zooming times along finite orbits.
//!
//! A time `n` is hyperbolic for `x` when the derivative products over every
//! suffix window contract at rate `σ` and the orbit recurs slowly to the
//! critical set. At such times a ball of radius `δ` around `fⁿ(x)` pulls
//! back along the orbit's branch sequence to a pre-ball `V_n(x)` on which
//! all backward iterates contract like `α_k(r) = σ^{k/2}·r`.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::map::{evaluate_orbit, MapModel};
use serde::Serialize;

/// Comparison slack for the hyperbolic-time inequalities; the doubling map
/// at `σ = 1/2` meets the product condition with exact equality.
const HYP_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub enum ContractionKind {
    /// `α_n(r) = σ^{n/2}·r`, the contraction produced by hyperbolic times.
    Exponential { sigma: f64 },
    /// User-supplied linear factors `α_n(r) = c_n·r`; orders past the table
    /// extrapolate geometrically with the last observed ratio.
    Table { factors: Vec<f64> },
}

/// A zooming contraction `(α_n)` together with the ball radius `δ`.
#[derive(Clone, Debug, Serialize)]
pub struct ZoomingContraction {
    pub kind: ContractionKind,
    pub delta: f64,
}

impl ZoomingContraction {
    pub fn exponential(sigma: f64, delta: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::InvalidParam {
                name: "sigma".into(),
                value: sigma,
                reason: "contraction rate must lie in (0,1)".into(),
            });
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParam {
                name: "delta".into(),
                value: delta,
                reason: "zooming-ball radius must be positive".into(),
            });
        }
        Ok(ZoomingContraction { kind: ContractionKind::Exponential { sigma }, delta })
    }

    pub fn from_table(factors: Vec<f64>, delta: f64) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
            return Err(Error::Precondition(
                "contraction table must consist of factors in (0,1)".into(),
            ));
        }
        for m in 0..factors.len() {
            for n in 0..factors.len() {
                if m + n + 1 < factors.len() && factors[m] * factors[n] > factors[m + n + 1] + 1e-12 {
                    return Err(Error::Precondition(format!(
                        "table violates α_m∘α_n ≤ α_(m+n) at m={}, n={}",
                        m + 1,
                        n + 1
                    )));
                }
            }
        }
        Ok(ZoomingContraction { kind: ContractionKind::Table { factors }, delta })
    }

    /// The linear factor `c_n` with `α_n(r) = c_n·r`.
    pub fn factor(&self, n: usize) -> f64 {
        match &self.kind {
            ContractionKind::Exponential { sigma } => sigma.powf(n as f64 / 2.0),
            ContractionKind::Table { factors } => {
                if n == 0 {
                    1.0
                } else if n <= factors.len() {
                    factors[n - 1]
                } else {
                    let last = *factors.last().unwrap();
                    let ratio = if factors.len() >= 2 {
                        (last / factors[factors.len() - 2]).min(1.0 - 1e-9)
                    } else {
                        last
                    };
                    last * ratio.powi((n - factors.len()) as i32)
                }
            }
        }
    }

    pub fn alpha(&self, n: usize, r: f64) -> f64 {
        if n == 0 {
            r
        } else {
            self.factor(n) * r
        }
    }

    /// `Σ_{n>from} α_n(r)`, the residual beyond a finite cutoff.
    pub fn tail_sum(&self, from: usize, r: f64) -> f64 {
        match &self.kind {
            ContractionKind::Exponential { sigma } => {
                let q = sigma.sqrt();
                r * q.powi(from as i32 + 1) / (1.0 - q)
            }
            ContractionKind::Table { .. } => {
                let mut total = 0.0;
                let mut n = from + 1;
                loop {
                    let term = self.alpha(n, r);
                    total += term;
                    n += 1;
                    if term < 1e-16 * r.max(1e-300) || n > from + 100_000 {
                        break;
                    }
                }
                total
            }
        }
    }

    /// `Σ_{n≥1} α_n(r)`.
    pub fn total_sum(&self, r: f64) -> f64 {
        self.tail_sum(0, r)
    }
}

/// The hyperbolic times of one base point, up to `n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicTimes {
    pub base_point: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub b_exponent: f64,
    pub n_max: usize,
    pub times: Vec<usize>,
    /// Orbit index at which the critical set was hit exactly, if any; times
    /// past the hit are rejected.
    pub critical_hit: Option<usize>,
}

/// Every `n ≤ n_max` such that for all `1 ≤ k ≤ n` the suffix derivative
/// product satisfies `∏ |f′|⁻¹ ≤ σ^k` and the truncated critical distance
/// satisfies `dist_ε(f^{n−k}x, C) ≥ σ^{bk}`.
pub fn detect_hyperbolic_times(
    map: &MapModel,
    x0: f64,
    n_max: usize,
    sigma: f64,
    epsilon: f64,
) -> Result<HyperbolicTimes> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParam {
            name: "sigma".into(),
            value: sigma,
            reason: "rate must lie in (0,1)".into(),
        });
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidParam {
            name: "epsilon".into(),
            value: epsilon,
            reason: "recurrence radius must be positive".into(),
        });
    }
    let orbit = evaluate_orbit(map, x0, n_max)?;
    let b = map.b_exponent();
    let ln_sigma = sigma.ln();
    let check_distance = b > 0.0 && !map.critical_set.is_empty();

    let mut times = Vec::new();
    for n in 1..=n_max {
        let mut ok = true;
        let mut sum_neg_log = 0.0;
        for k in 1..=n {
            sum_neg_log -= orbit.log_derivatives[n - k];
            if sum_neg_log > k as f64 * ln_sigma + HYP_SLACK {
                ok = false;
                break;
            }
            if check_distance {
                let d = orbit.critical_distances[n - k];
                let trunc = if d < epsilon { d } else { 1.0 };
                if trunc < sigma.powf(b * k as f64) - HYP_SLACK {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            times.push(n);
        }
    }
    Ok(HyperbolicTimes {
        base_point: map.phase.reduce(x0),
        sigma,
        epsilon,
        b_exponent: b,
        n_max,
        times,
        critical_hit: orbit.critical_hit,
    })
}

/// `#{times ≤ n} / n`.
pub fn hyperbolic_frequency(record: &HyperbolicTimes, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("frequency needs n ≥ 1".into()));
    }
    if n > record.n_max {
        return Err(Error::Precondition(format!(
            "n={n} exceeds the record horizon {}",
            record.n_max
        )));
    }
    let count = record.times.iter().filter(|&&t| t <= n).count();
    Ok(count as f64 / n as f64)
}

/// A pre-ball `V_n(x)`: the neighbourhood mapped homeomorphically by `fⁿ`
/// onto the ball `B_δ(fⁿx)`.
#[derive(Clone, Debug, Serialize)]
pub struct ZoomingPreBall {
    pub center: f64,
    pub order: usize,
    pub interval: Interval,
    pub target: Interval,
    pub branch_word: Vec<usize>,
}

/// Pull `B_δ(fⁿx)` back along the orbit's branch sequence. Fails with a
/// branch-crossing error when the ball is too large for the inverse branches
/// to stay within single domains.
pub fn zooming_preball(map: &MapModel, x: f64, n: usize, delta: f64) -> Result<ZoomingPreBall> {
    if delta <= 0.0 {
        return Err(Error::InvalidParam {
            name: "delta".into(),
            value: delta,
            reason: "ball radius must be positive".into(),
        });
    }
    let orbit = evaluate_orbit(map, x, n)?;
    let mut word = Vec::with_capacity(n);
    for j in 0..n {
        word.push(map.branch_of(orbit.points[j])?);
    }
    let target = map.phase.ball(orbit.points[n], delta);
    let mut current = target;
    let tol = crate::tol::TOL_INV;
    for j in (0..n).rev() {
        let b = &map.branches[word[j]];
        let shifted = if map.phase.is_circle() {
            // Translate the arc so the orbit point's unrolled image lands inside.
            let fwd = b.forward_unrolled(orbit.points[j]);
            let next = orbit.points[j + 1];
            let anchor = if current.contains_point(next, tol) {
                next
            } else {
                next + 1.0
            };
            current.shifted(fwd - anchor)
        } else {
            current
        };
        if !b.image.contains(&shifted, tol) {
            return Err(Error::BranchBoundaryCrossed { order: n, step: j });
        }
        let (a, c) = (b.inverse_unrolled(shifted.lo), b.inverse_unrolled(shifted.hi));
        current = Interval::open(a.min(c), a.max(c));
    }
    if !current.contains_point(map.phase.reduce(x), 1e-9) {
        return Err(Error::Numeric(format!(
            "pre-ball {current:?} lost its center {x}"
        )));
    }
    Ok(ZoomingPreBall {
        center: map.phase.reduce(x),
        order: n,
        interval: current,
        target,
        branch_word: word,
    })
}

/// Result of checking the backward-contraction inequality on a sample grid.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    /// Worst ratio `d(f^j y, f^j z) / α_{n−j}(d(fⁿy, fⁿz))` observed.
    pub max_ratio: f64,
    pub passes: bool,
    pub pairs_checked: usize,
}

/// Verify `d(f^j y, f^j z) ≤ α_{n−j}(d(fⁿ y, fⁿ z))` over sampled pairs of
/// the pre-ball.
pub fn verify_contraction(
    map: &MapModel,
    ball: &ZoomingPreBall,
    contraction: &ZoomingContraction,
    samples: usize,
) -> Result<ContractionReport> {
    let pts = ball.interval.samples(samples.max(4));
    let n = ball.order;
    // forward orbits of all sample points
    let mut orbits: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    for &p in &pts {
        orbits.push(evaluate_orbit(map, p, n)?.points);
    }
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..pts.len() {
        for l in (i + 1)..pts.len() {
            let dn = map.phase.dist(orbits[i][n], orbits[l][n]);
            if dn < 1e-14 {
                continue;
            }
            for j in 0..n {
                let dj = map.phase.dist(orbits[i][j], orbits[l][j]);
                let bound = contraction.alpha(n - j, dn);
                max_ratio = max_ratio.max(dj / bound);
                pairs += 1;
            }
        }
    }
    Ok(ContractionReport {
        max_ratio,
        passes: max_ratio <= 1.0 + 1e-6,
        pairs_checked: pairs,
    })
}

/// Result of the bounded-distortion estimate over a pre-ball.
#[derive(Clone, Debug, Serialize)]
pub struct DistortionReport {
    /// `max |log Jfⁿ(y) − log Jfⁿ(z)| / d(fⁿy, fⁿz)` over sampled pairs.
    pub max_ratio: f64,
    pub rho: f64,
    pub passes: bool,
    pub pairs_checked: usize,
}

/// Compare the log-Jacobian oscillation of `fⁿ` across the pre-ball against
/// the distortion constant `ρ`.
pub fn distortion_check(
    map: &MapModel,
    ball: &ZoomingPreBall,
    rho: f64,
    samples: usize,
) -> Result<DistortionReport> {
    let pts = ball.interval.samples(samples.max(4));
    let n = ball.order;
    let mut log_jn = Vec::with_capacity(pts.len());
    let mut finals = Vec::with_capacity(pts.len());
    for &p in &pts {
        let orbit = evaluate_orbit(map, p, n)?;
        let mut s = 0.0;
        for j in 0..n {
            let jac = map.jacobian_at(orbit.points[j])?;
            if jac == 0.0 {
                return Err(Error::Numeric(format!(
                    "Jacobian vanishes inside the pre-ball at {}",
                    orbit.points[j]
                )));
            }
            s += jac.ln();
        }
        log_jn.push(s);
        finals.push(orbit.points[n]);
    }
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..pts.len() {
        for l in (i + 1)..pts.len() {
            let d = map.phase.dist(finals[i], finals[l]);
            if d < 1e-14 {
                continue;
            }
            max_ratio = max_ratio.max((log_jn[i] - log_jn[l]).abs() / d);
            pairs += 1;
        }
    }
    Ok(DistortionReport {
        max_ratio,
        rho,
        passes: max_ratio <= rho,
        pairs_checked: pairs,
    })
}
