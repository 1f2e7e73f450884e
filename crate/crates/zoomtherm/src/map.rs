//! Concrete one-dimensional dynamical systems with exact branch structure.
//!
//! A [`MapModel`] is a piecewise-monotone self-map of the circle or an
//! interval. Each [`Branch`] carries a closed-form forward map, inverse and
//! derivative on its domain. Circle branches are stored *unrolled*: the
//! forward map takes values in the universal cover, so the image of a branch
//! is a plain interval of reals and pull-backs reduce to a monotone inverse
//! plus an integer shift. Reduction mod 1 happens only when producing orbit
//! points.

use crate::error::{Error, Result};
use crate::interval::Interval;
use serde::Serialize;

/// The ambient space: the unit circle with wraparound metric, or a segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PhaseSpace {
    Circle,
    Segment { lo: f64, hi: f64 },
}

impl PhaseSpace {
    /// Canonical representative of a point.
    pub fn reduce(&self, x: f64) -> f64 {
        match self {
            PhaseSpace::Circle => x - x.floor(),
            PhaseSpace::Segment { .. } => x,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            PhaseSpace::Circle => x.is_finite(),
            PhaseSpace::Segment { lo, hi } => x >= *lo - 1e-12 && x <= *hi + 1e-12,
        }
    }

    pub fn dist(&self, x: f64, y: f64) -> f64 {
        match self {
            PhaseSpace::Circle => {
                let t = (x - y).rem_euclid(1.0);
                t.min(1.0 - t)
            }
            PhaseSpace::Segment { .. } => (x - y).abs(),
        }
    }

    /// Total extent as an interval in phase coordinates.
    pub fn as_interval(&self) -> Interval {
        match self {
            PhaseSpace::Circle => Interval::open(0.0, 1.0),
            PhaseSpace::Segment { lo, hi } => Interval::closed(*lo, *hi),
        }
    }

    pub fn total_len(&self) -> f64 {
        self.as_interval().len()
    }

    /// Metric ball, clipped at segment boundaries; on the circle the result
    /// is unrolled with `lo` normalized into `[0,1)` and at most one wrap.
    pub fn ball(&self, center: f64, radius: f64) -> Interval {
        match self {
            PhaseSpace::Circle => {
                if radius >= 0.5 {
                    return Interval::open(0.0, 1.0);
                }
                let lo = (center - radius).rem_euclid(1.0);
                Interval::open(lo, lo + 2.0 * radius)
            }
            PhaseSpace::Segment { lo, hi } => {
                Interval::open((center - radius).max(*lo), (center + radius).min(*hi))
            }
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, PhaseSpace::Circle)
    }
}

/// Closed-form branch maps. Enough for the built-in families; arbitrary
/// user-scripted maps are out of scope.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum BranchMap {
    /// `x ↦ slope·x + offset` (unrolled on the circle).
    Affine { slope: f64, offset: f64 },
    /// `x ↦ a − x²` on `x ≤ 0` (increasing side of the parabola).
    ParabolaLeft { a: f64 },
    /// `x ↦ a − x²` on `x ≥ 0` (decreasing side).
    ParabolaRight { a: f64 },
}

impl BranchMap {
    fn forward(&self, x: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, offset } => slope * x + offset,
            BranchMap::ParabolaLeft { a } | BranchMap::ParabolaRight { a } => a - x * x,
        }
    }

    fn inverse(&self, y: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, offset } => (y - offset) / slope,
            BranchMap::ParabolaLeft { a } => -((a - y).max(0.0)).sqrt(),
            BranchMap::ParabolaRight { a } => ((a - y).max(0.0)).sqrt(),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match *self {
            BranchMap::Affine { slope, .. } => slope,
            BranchMap::ParabolaLeft { a: _ } | BranchMap::ParabolaRight { a: _ } => -2.0 * x,
        }
    }
}

/// A monotone branch: domain, unrolled image and the closed-form map.
#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub domain: Interval,
    /// Forward image of the domain in unrolled coordinates, endpoint-sorted.
    pub image: Interval,
    pub map: BranchMap,
    pub increasing: bool,
}

impl Branch {
    fn new(domain: Interval, map: BranchMap) -> Self {
        let (ya, yb) = (map.forward(domain.lo), map.forward(domain.hi));
        let increasing = yb >= ya;
        let image = Interval::open(ya.min(yb), ya.max(yb));
        Branch { domain, image, map, increasing }
    }

    pub fn forward_unrolled(&self, x: f64) -> f64 {
        self.map.forward(x)
    }

    /// Inverse of the unrolled forward map; caller guarantees `y` lies in
    /// the image (possibly after an integer shift on the circle).
    pub fn inverse_unrolled(&self, y: f64) -> f64 {
        self.map.inverse(y)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.map.derivative(x)
    }

    /// Pull a target interval back through this branch. Succeeds only when
    /// some integer translate of the target is contained in the branch image
    /// (`allow_shift` is true on the circle); partial covers yield `None`.
    pub fn pull_interval(&self, target: &Interval, allow_shift: bool, tol: f64) -> Option<Interval> {
        let shift = if allow_shift {
            let k_min = (self.image.lo - target.lo - tol).ceil() as i64;
            let k_max = (self.image.hi - target.hi + tol).floor() as i64;
            if k_min > k_max {
                return None;
            }
            k_min as f64
        } else {
            0.0
        };
        let t = target.shifted(shift);
        if !self.image.contains(&t, tol) {
            return None;
        }
        let (a, b) = (self.inverse_unrolled(t.lo), self.inverse_unrolled(t.hi));
        let mut out = Interval {
            lo: a.min(b),
            hi: a.max(b),
            closed: target.closed,
        };
        // Clamp round-off spill at the domain ends.
        out.lo = out.lo.max(self.domain.lo);
        out.hi = out.hi.min(self.domain.hi);
        Some(out)
    }
}

/// How the reference-measure Jacobian is evaluated.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum JacobianKind {
    /// Lebesgue reference on a piecewise-smooth map: `J(x) = |f′(x)|`.
    LebesgueDerivative,
    /// Conformal model with constant local expansion factor.
    ConformalConstant(f64),
}

/// Jacobian of the reference measure together with its distortion constant.
/// The convention `J ≤ 1` outside the expanding set is user-asserted.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReferenceJacobian {
    pub kind: JacobianKind,
    pub distortion_constant: f64,
}

/// Non-degeneracy constants of the critical set. Carried as metadata; no
/// operation consumes them numerically except the hyperbolic-time exponent
/// `b = (1/3)·min(1, 1/β)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NonDegeneracy {
    pub big_b: f64,
    pub beta: f64,
}

/// A piecewise-monotone map of the circle or an interval.
#[derive(Clone, Debug, Serialize)]
pub struct MapModel {
    pub name: String,
    pub phase: PhaseSpace,
    pub branches: Vec<Branch>,
    pub critical_set: Vec<f64>,
    pub non_degeneracy: Option<NonDegeneracy>,
    pub jacobian: ReferenceJacobian,
    /// Default zooming-ball radius: half the shortest branch-image radius.
    pub default_delta: f64,
}

impl MapModel {
    fn finish(
        name: &str,
        phase: PhaseSpace,
        branches: Vec<Branch>,
        critical_set: Vec<f64>,
        non_degeneracy: Option<NonDegeneracy>,
        jacobian: ReferenceJacobian,
    ) -> Self {
        let min_image = branches
            .iter()
            .map(|b| b.image.len())
            .fold(f64::INFINITY, f64::min);
        MapModel {
            name: name.to_string(),
            phase,
            branches,
            critical_set,
            non_degeneracy,
            jacobian,
            default_delta: 0.25 * min_image,
        }
    }

    /// The angle-doubling map `x ↦ 2x mod 1`.
    pub fn doubling() -> Self {
        let b0 = Branch::new(Interval::open(0.0, 0.5), BranchMap::Affine { slope: 2.0, offset: 0.0 });
        let b1 = Branch::new(Interval::open(0.5, 1.0), BranchMap::Affine { slope: 2.0, offset: 0.0 });
        MapModel::finish(
            "doubling",
            PhaseSpace::Circle,
            vec![b0, b1],
            Vec::new(),
            None,
            ReferenceJacobian { kind: JacobianKind::LebesgueDerivative, distortion_constant: 1.0 },
        )
    }

    /// The full tent map on `[0,1]`.
    pub fn tent() -> Self {
        let b0 = Branch::new(Interval::open(0.0, 0.5), BranchMap::Affine { slope: 2.0, offset: 0.0 });
        let b1 = Branch::new(Interval::open(0.5, 1.0), BranchMap::Affine { slope: -2.0, offset: 2.0 });
        MapModel::finish(
            "tent",
            PhaseSpace::Segment { lo: 0.0, hi: 1.0 },
            vec![b0, b1],
            Vec::new(),
            None,
            ReferenceJacobian { kind: JacobianKind::LebesgueDerivative, distortion_constant: 1.0 },
        )
    }

    /// The quadratic family `x ↦ a − x²` on `[−a, a]`, interior critical
    /// point at 0 splitting the two monotone branches.
    pub fn quadratic(a: f64) -> Result<Self> {
        if !(a > 1.0 && a <= 2.0) {
            return Err(Error::InvalidParam {
                name: "a".into(),
                value: a,
                reason: "quadratic family requires a ∈ (1, 2]".into(),
            });
        }
        let b0 = Branch::new(Interval::open(-a, 0.0), BranchMap::ParabolaLeft { a });
        let b1 = Branch::new(Interval::open(0.0, a), BranchMap::ParabolaRight { a });
        Ok(MapModel::finish(
            "quadratic",
            PhaseSpace::Segment { lo: -a, hi: a },
            vec![b0, b1],
            vec![0.0],
            Some(NonDegeneracy { big_b: 2.0 * a * a, beta: 1.0 }),
            ReferenceJacobian { kind: JacobianKind::LebesgueDerivative, distortion_constant: 4.0 },
        ))
    }

    /// The one-sided 2-shift, realized through its conjugacy with the
    /// doubling map for interval geometry; the local expansion factor is
    /// identically 2, so the model is conformal.
    pub fn shift2() -> Self {
        let mut m = MapModel::doubling();
        m.name = "shift2".into();
        m.jacobian = ReferenceJacobian {
            kind: JacobianKind::ConformalConstant(2.0),
            distortion_constant: 1.0,
        };
        m
    }

    /// The k-branch linear circle map `x ↦ kx mod 1`.
    pub fn affine_full(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParam {
                name: "branches".into(),
                value: k as f64,
                reason: "need at least 2 full branches".into(),
            });
        }
        let branches = (0..k)
            .map(|i| {
                Branch::new(
                    Interval::open(i as f64 / k as f64, (i + 1) as f64 / k as f64),
                    BranchMap::Affine { slope: k as f64, offset: 0.0 },
                )
            })
            .collect();
        Ok(MapModel::finish(
            &format!("affine{k}"),
            PhaseSpace::Circle,
            branches,
            Vec::new(),
            None,
            ReferenceJacobian { kind: JacobianKind::LebesgueDerivative, distortion_constant: 1.0 },
        ))
    }

    /// Piecewise-affine map on `[0,1]` with each branch increasing onto
    /// `[0,1]`; `breaks` are the interior breakpoints.
    pub fn piecewise_affine_full(breaks: &[f64]) -> Result<Self> {
        let mut pts = vec![0.0];
        pts.extend_from_slice(breaks);
        pts.push(1.0);
        for w in pts.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParam {
                    name: "breaks".into(),
                    value: w[1],
                    reason: "breakpoints must be strictly increasing in (0,1)".into(),
                });
            }
        }
        let branches = pts
            .windows(2)
            .map(|w| {
                let slope = 1.0 / (w[1] - w[0]);
                Branch::new(
                    Interval::open(w[0], w[1]),
                    BranchMap::Affine { slope, offset: -slope * w[0] },
                )
            })
            .collect();
        Ok(MapModel::finish(
            "piecewise_affine",
            PhaseSpace::Segment { lo: 0.0, hi: 1.0 },
            branches,
            Vec::new(),
            None,
            ReferenceJacobian { kind: JacobianKind::LebesgueDerivative, distortion_constant: 1.0 },
        ))
    }

    /// Index of the branch whose domain contains `x` (half-open convention,
    /// last branch closed on the right).
    pub fn branch_of(&self, x: f64) -> Result<usize> {
        let x = self.phase.reduce(x);
        for (i, b) in self.branches.iter().enumerate() {
            if x >= b.domain.lo && x < b.domain.hi {
                return Ok(i);
            }
        }
        if let Some(last) = self.branches.last() {
            if (x - last.domain.hi).abs() <= 1e-12 {
                return Ok(self.branches.len() - 1);
            }
        }
        Err(Error::OutsidePhaseSpace(x))
    }

    /// One forward step, reduced into the phase space.
    pub fn forward(&self, x: f64) -> Result<f64> {
        let x = self.phase.reduce(x);
        let b = &self.branches[self.branch_of(x)?];
        Ok(self.phase.reduce(b.forward_unrolled(x)))
    }

    /// Signed derivative at `x` (local expansion factor for conformal models).
    pub fn derivative_at(&self, x: f64) -> Result<f64> {
        if let JacobianKind::ConformalConstant(c) = self.jacobian.kind {
            return Ok(c);
        }
        let x = self.phase.reduce(x);
        let b = &self.branches[self.branch_of(x)?];
        Ok(b.derivative(x))
    }

    /// Reference-measure Jacobian `J(x) ≥ 0`.
    pub fn jacobian_at(&self, x: f64) -> Result<f64> {
        match self.jacobian.kind {
            JacobianKind::LebesgueDerivative => Ok(self.derivative_at(x)?.abs()),
            JacobianKind::ConformalConstant(c) => Ok(c),
        }
    }

    pub fn dist_to_critical(&self, x: f64) -> f64 {
        self.critical_set
            .iter()
            .map(|c| self.phase.dist(x, *c))
            .fold(f64::INFINITY, f64::min)
    }

    /// Hyperbolic-time recurrence exponent `b = (1/3)·min(1, 1/β)`; zero when
    /// there is no critical set (the recurrence condition is then vacuous).
    pub fn b_exponent(&self) -> f64 {
        match (&self.non_degeneracy, self.critical_set.is_empty()) {
            (Some(nd), false) if nd.beta > 0.0 => (1.0 / 3.0) * (1.0_f64).min(1.0 / nd.beta),
            _ => 0.0,
        }
    }
}

/// Select a built-in family by name with a flat parameter record.
pub fn builtin_map(name: &str, params: &std::collections::BTreeMap<String, f64>) -> Result<MapModel> {
    match name {
        "doubling" => Ok(MapModel::doubling()),
        "tent" => Ok(MapModel::tent()),
        "quadratic" => {
            let a = params.get("a").copied().ok_or_else(|| Error::InvalidParam {
                name: "a".into(),
                value: f64::NAN,
                reason: "quadratic family requires parameter a".into(),
            })?;
            MapModel::quadratic(a)
        }
        "shift2" => Ok(MapModel::shift2()),
        "affine" => {
            let k = params.get("branches").copied().unwrap_or(2.0);
            if k.fract() != 0.0 || k < 2.0 {
                return Err(Error::InvalidParam {
                    name: "branches".into(),
                    value: k,
                    reason: "branch count must be an integer ≥ 2".into(),
                });
            }
            MapModel::affine_full(k as u32)
        }
        other => Err(Error::UnknownMap(other.to_string())),
    }
}

/// A finite orbit with per-point log-derivatives and critical distances.
/// A point on the critical set records its log-derivative as `-∞`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSegment {
    pub points: Vec<f64>,
    pub log_derivatives: Vec<f64>,
    pub critical_distances: Vec<f64>,
    /// First index at which the orbit hit the critical set exactly, if any.
    pub critical_hit: Option<usize>,
}

/// Iterate `n` steps from `x0`, recording log-derivatives and distances to
/// the critical set along the way.
pub fn evaluate_orbit(map: &MapModel, x0: f64, n: usize) -> Result<OrbitSegment> {
    let mut x = map.phase.reduce(x0);
    if !map.phase.contains(x) {
        return Err(Error::OutsidePhaseSpace(x0));
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut log_derivatives = Vec::with_capacity(n + 1);
    let mut critical_distances = Vec::with_capacity(n + 1);
    let mut critical_hit = None;
    for i in 0..=n {
        points.push(x);
        let d = map.derivative_at(x)?.abs();
        if d == 0.0 && critical_hit.is_none() {
            critical_hit = Some(i);
        }
        log_derivatives.push(if d == 0.0 { f64::NEG_INFINITY } else { d.ln() });
        critical_distances.push(map.dist_to_critical(x));
        if i < n {
            x = map.forward(x)?;
            if !map.phase.contains(x) {
                return Err(Error::OutsidePhaseSpace(x));
            }
        }
    }
    Ok(OrbitSegment { points, log_derivatives, critical_distances, critical_hit })
}

/// All order-1 regular pre-images of `target`: for every branch whose image
/// contains the closure of `target`, the pulled-back interval together with
/// the branch index. Branches covering `target` only partially contribute
/// nothing.
pub fn branch_preimages(map: &MapModel, target: &Interval, tol: f64) -> Vec<(Interval, usize)> {
    let allow_shift = map.phase.is_circle();
    map.branches
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.pull_interval(target, allow_shift, tol).map(|iv| (iv, i)))
        .collect()
}
