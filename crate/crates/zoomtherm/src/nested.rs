//! Regular pre-images, chains, nested collections and holes.
//!
//! A ball is shaved into a *nested* set by removing every chain of linked
//! regular pre-images that reaches its boundary; a collection of such sets
//! has the property that pre-images of its members of distinct orders are
//! never linked. Holes are unions of shrunken members, and the survivor set
//! of a hole is approximated by exact interval arithmetic.
//!
//! The enumeration is finite: all claims are certified up to a cutoff order
//! and the residual tail is bounded by `Σ_{n>N} α_n(M₀)` using the zooming
//! contraction.

use crate::error::{Error, Result};
use crate::interval::{linked, Interval, IntervalSet};
use crate::map::MapModel;
use crate::tol::Params;
use crate::zooming::ZoomingContraction;
use serde::Serialize;

/// An interval `P` with `fⁿ(P)` a homeomorphism onto its target.
#[derive(Clone, Debug, Serialize)]
pub struct RegularPreimage {
    pub interval: Interval,
    pub order: usize,
    /// Index of the collection element this is a pre-image of.
    pub target_id: usize,
    /// Branch indices along the way: `f^j(P) ⊆ domain(branch_word[j])`.
    pub branch_word: Vec<usize>,
}

/// Check that a candidate pre-image is a zooming pre-image: the ball of
/// radius `δ` around the image of its midpoint pulls back along the same
/// branch word, and both the ball pieces and the candidate's own images
/// contract like `α`.
pub(crate) fn zooming_ball_pullback_ok(
    map: &MapModel,
    word: &[usize],
    mid: f64,
    contraction: &ZoomingContraction,
    tol: f64,
) -> bool {
    let n = word.len();
    // forward orbit of the midpoint along the word
    let mut orbit = Vec::with_capacity(n + 1);
    let mut x = mid;
    orbit.push(x);
    for &b in word {
        let branch = &map.branches[b];
        if !branch.domain.contains_point(x, tol) {
            return false;
        }
        x = map.phase.reduce(branch.forward_unrolled(x));
        orbit.push(x);
    }
    let target = map.phase.ball(orbit[n], contraction.delta);
    let full_len = target.len();
    let mut current = target;
    for j in (0..n).rev() {
        let b = &map.branches[word[j]];
        let shifted = if map.phase.is_circle() {
            let fwd = b.forward_unrolled(orbit[j]);
            let next = orbit[j + 1];
            let anchor = if current.contains_point(next, tol) { next } else { next + 1.0 };
            current.shifted(fwd - anchor)
        } else {
            current
        };
        if !b.image.contains(&shifted, tol) {
            return false;
        }
        let (a, c) = (b.inverse_unrolled(shifted.lo), b.inverse_unrolled(shifted.hi));
        current = Interval::open(a.min(c), a.max(c));
        if current.len() > contraction.alpha(n - j, full_len) + 1e-9 {
            return false;
        }
    }
    true
}

/// Options for [`enumerate_preimages`].
#[derive(Clone, Copy)]
pub struct EnumerateOptions<'a> {
    /// Keep only pre-images arising inside zooming pre-balls.
    pub zooming_only: bool,
    pub contraction: &'a ZoomingContraction,
    /// Retain only pre-images meeting this window (the recursion itself is
    /// unaffected; pruning is by the contraction only).
    pub window: Option<&'a IntervalSet>,
}

/// All regular pre-images of each collection element of order `1..=n_max`,
/// composed branch by branch. With `zooming_only`, candidates must satisfy
/// the backward-contraction inequality at every level and admit the
/// `δ`-ball pull-back around their midpoint orbit.
pub fn enumerate_preimages(
    map: &MapModel,
    collection: &[Interval],
    n_max: usize,
    opts: &EnumerateOptions,
    params: &Params,
) -> Result<Vec<RegularPreimage>> {
    if n_max == 0 {
        return Err(Error::Precondition("cutoff order must be at least 1".into()));
    }
    let tol = params.tol_inv;
    let allow_shift = map.phase.is_circle();
    let mut out: Vec<RegularPreimage> = Vec::new();
    let mut explored: usize = 0;

    for (target_id, target) in collection.iter().enumerate() {
        // frontier of order-m pre-images of this target
        let mut frontier: Vec<(Interval, Vec<usize>)> = vec![(*target, Vec::new())];
        for m in 1..=n_max {
            let mut next = Vec::new();
            for (iv, word) in &frontier {
                for (bi, branch) in map.branches.iter().enumerate() {
                    let Some(pulled) = branch.pull_interval(iv, allow_shift, tol) else {
                        continue;
                    };
                    explored += 1;
                    if explored > params.max_preimages {
                        return Err(Error::BlowupGuard { max: params.max_preimages });
                    }
                    if opts.zooming_only
                        && pulled.len() > opts.contraction.alpha(m, target.len()) + 1e-9
                    {
                        continue;
                    }
                    let mut w = Vec::with_capacity(word.len() + 1);
                    w.push(bi);
                    w.extend_from_slice(word);
                    next.push((pulled, w));
                }
            }
            for (iv, word) in &next {
                if opts.zooming_only
                    && !zooming_ball_pullback_ok(map, word, iv.mid(), opts.contraction, tol)
                {
                    continue;
                }
                if let Some(win) = opts.window {
                    if !win.pieces().iter().any(|p| p.overlaps_interior(iv, 0.0)) {
                        continue;
                    }
                }
                out.push(RegularPreimage {
                    interval: *iv,
                    order: m,
                    target_id,
                    branch_word: word.clone(),
                });
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
    }
    Ok(out)
}

/// A linked sequence of pre-images with nondecreasing positive orders
/// beginning at a base set. Stored as indices into the enumeration.
#[derive(Clone, Debug, Serialize)]
pub struct Chain {
    pub indices: Vec<usize>,
}

/// All chains of length `≤ max_len` beginning at `base`: nondecreasing
/// positive orders, consecutive elements linked, first element linked with
/// the base, all elements distinct.
pub fn enumerate_chains(
    base: &Interval,
    preimages: &[RegularPreimage],
    max_len: usize,
    params: &Params,
) -> Result<Vec<Chain>> {
    let tol = params.tol_inv;
    let mut chains = Vec::new();
    let starts: Vec<usize> = (0..preimages.len())
        .filter(|&i| preimages[i].order > 0 && linked(base, &preimages[i].interval, tol))
        .collect();
    let mut stack: Vec<Vec<usize>> = starts.into_iter().map(|i| vec![i]).collect();
    while let Some(path) = stack.pop() {
        if chains.len() >= params.max_preimages {
            return Err(Error::BlowupGuard { max: params.max_preimages });
        }
        if path.len() < max_len {
            let last = *path.last().unwrap();
            for j in 0..preimages.len() {
                if preimages[j].order >= preimages[last].order
                    && !path.contains(&j)
                    && linked(&preimages[last].interval, &preimages[j].interval, tol)
                {
                    let mut ext = path.clone();
                    ext.push(j);
                    stack.push(ext);
                }
            }
        }
        chains.push(Chain { indices: path });
    }
    Ok(chains)
}

/// Union of all chain elements over all chains beginning at `base`, computed
/// as the closure of the linkedness reachability with nondecreasing orders.
fn chain_union(base: &Interval, preimages: &[RegularPreimage], tol: f64) -> IntervalSet {
    let mut reached = vec![false; preimages.len()];
    let mut queue: Vec<usize> = Vec::new();
    for (i, p) in preimages.iter().enumerate() {
        if p.order > 0 && linked(base, &p.interval, tol) {
            reached[i] = true;
            queue.push(i);
        }
    }
    while let Some(i) = queue.pop() {
        for (j, p) in preimages.iter().enumerate() {
            if !reached[j]
                && p.order >= preimages[i].order
                && linked(&preimages[i].interval, &p.interval, tol)
            {
                reached[j] = true;
                queue.push(j);
            }
        }
    }
    IntervalSet::from_intervals(
        preimages
            .iter()
            .zip(&reached)
            .filter(|(_, &r)| r)
            .map(|(p, _)| Interval::closed(p.interval.lo, p.interval.hi))
            .collect(),
    )
}

/// Per-ball outcome of the shrinking construction.
#[derive(Clone, Debug, Serialize)]
pub struct ShrinkCertificate {
    pub ball_index: usize,
    /// Whether `B_{(1−ε)r}(p)` is contained in the shrunken component.
    pub contains_core: bool,
    /// Distance from the core ball to the shaved boundary (negative when the
    /// certificate fails).
    pub margin: f64,
    /// Number of chain pieces that were removed.
    pub chain_pieces: usize,
    /// Whether the a-priori sufficient condition `Σ α_n(M₀) ≤ ε·min rᵢ`
    /// held (the construction proceeds either way; this is diagnostic).
    pub apriori_bound_ok: bool,
}

/// A nested collection: balls, their shrunken members `A′`, and the
/// finite-cutoff certificates.
#[derive(Clone, Debug, Serialize)]
pub struct NestedCollection {
    pub balls: Vec<(f64, f64)>,
    pub shrunken: Vec<Interval>,
    pub epsilon: f64,
    pub cutoff: usize,
    pub certificates: Vec<ShrinkCertificate>,
    /// Indices of balls excluded because the shaving removed their center.
    pub excluded: Vec<usize>,
    /// `Σ_{n>N} α_n(M₀)`: maximal extra shaving the un-enumerated tail could
    /// contribute.
    pub tail_bound: f64,
}

/// Shave each ball into `A′ = component of A ∖ closure(∪ chains)` containing
/// its center, using zooming pre-images up to the cutoff order.
pub fn nested_shrink(
    map: &MapModel,
    balls: &[(f64, f64)],
    epsilon: f64,
    cutoff: usize,
    contraction: &ZoomingContraction,
    params: &Params,
) -> Result<NestedCollection> {
    if balls.is_empty() {
        return Err(Error::Precondition("need at least one ball".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Precondition("epsilon must lie in (0,1)".into()));
    }
    for &(p, r) in balls {
        if r <= 0.0 {
            return Err(Error::Precondition(format!("ball at {p} has nonpositive radius")));
        }
        if r >= contraction.delta / 4.0 {
            return Err(Error::Precondition(format!(
                "ball radius {r} violates r < δ/4 = {}",
                contraction.delta / 4.0
            )));
        }
    }
    for (i, &(pi, ri)) in balls.iter().enumerate() {
        for (j, &(pj, rj)) in balls.iter().enumerate() {
            if i != j && map.phase.dist(pi, pj) < ri + rj / 2.0 {
                return Err(Error::Precondition(format!(
                    "balls {i} and {j} violate B_r(p_i) ∩ B_(r/2)(p_j) = ∅"
                )));
            }
        }
    }

    let ball_ivs: Vec<Interval> = balls.iter().map(|&(p, r)| map.phase.ball(p, r)).collect();
    let m0 = ball_ivs.iter().map(Interval::len).fold(0.0, f64::max);
    let chain_reach = contraction.total_sum(m0);
    let window = IntervalSet::from_intervals(
        balls
            .iter()
            .map(|&(p, r)| map.phase.ball(p, r + chain_reach + 0.1 * r))
            .collect(),
    );
    let opts = EnumerateOptions {
        zooming_only: true,
        contraction,
        window: Some(&window),
    };
    let preimages = enumerate_preimages(map, &ball_ivs, cutoff, &opts, params)?;

    let min_eps_r = balls.iter().map(|&(_, r)| epsilon * r).fold(f64::INFINITY, f64::min);
    let apriori_ok = chain_reach <= min_eps_r;
    let tail_bound = contraction.tail_sum(cutoff, m0);

    let mut shrunken = Vec::new();
    let mut certificates = Vec::new();
    let mut excluded = Vec::new();
    for (i, &(p, r)) in balls.iter().enumerate() {
        let shaved = chain_union(&ball_ivs[i], &preimages, params.tol_inv);
        let star = IntervalSet::single(ball_ivs[i]).subtract(&shaved);
        let center = if ball_ivs[i].contains_point(p, 0.0) { p } else { p + 1.0 };
        match star.component_containing(center, 0.0) {
            Some(comp) => {
                // align the core with the (possibly unrolled) ball coords
                let shift = if ball_ivs[i].contains_point(p, 0.0) { 0.0 } else { 1.0 };
                let core = map.phase.ball(p, (1.0 - epsilon) * r).shifted(shift);
                let margin = (core.lo - comp.lo).min(comp.hi - core.hi);
                certificates.push(ShrinkCertificate {
                    ball_index: i,
                    contains_core: comp.contains(&core, params.tol_inv),
                    margin,
                    chain_pieces: shaved.pieces().len(),
                    apriori_bound_ok: apriori_ok,
                });
                shrunken.push(comp);
            }
            None => {
                excluded.push(i);
                shrunken.push(Interval::open(p, p));
                certificates.push(ShrinkCertificate {
                    ball_index: i,
                    contains_core: false,
                    margin: f64::NEG_INFINITY,
                    chain_pieces: shaved.pieces().len(),
                    apriori_bound_ok: apriori_ok,
                });
            }
        }
    }
    Ok(NestedCollection {
        balls: balls.to_vec(),
        shrunken,
        epsilon,
        cutoff,
        certificates,
        excluded,
        tail_bound,
    })
}

/// Report of the nested-collection property verification at a finite cutoff.
#[derive(Clone, Debug, Serialize)]
pub struct NestedReport {
    pub preimages_checked: usize,
    /// Pairs `(member, preimage)` found linked (must be empty).
    pub member_violations: Vec<(usize, usize)>,
    /// Pre-image pairs of distinct orders found linked (must be empty).
    pub cross_order_violations: Vec<(usize, usize)>,
    /// Same-target intersecting pre-image pairs of equal order (must be
    /// empty: overlapping pre-images of a nested set have distinct orders).
    pub equal_order_overlaps: Vec<(usize, usize)>,
    pub ok: bool,
}

/// Verify the defining property of a nested collection on all enumerated
/// pre-images of its members up to the cutoff: members are never linked with
/// pre-images, pre-images of distinct orders are never linked, and
/// same-order pre-images of one member never overlap.
pub fn verify_nested(
    map: &MapModel,
    collection: &NestedCollection,
    cutoff: usize,
    contraction: &ZoomingContraction,
    params: &Params,
) -> Result<NestedReport> {
    let members: Vec<Interval> = collection.shrunken.clone();
    let opts = EnumerateOptions {
        zooming_only: true,
        contraction,
        window: None,
    };
    let pre = enumerate_preimages(map, &members, cutoff, &opts, params)?;
    let tol = params.tol_inv;

    let mut member_violations = Vec::new();
    for (mi, m) in members.iter().enumerate() {
        for (pi, p) in pre.iter().enumerate() {
            if linked(m, &p.interval, tol) {
                member_violations.push((mi, pi));
            }
        }
    }

    // sort by left endpoint and sweep: only overlapping pairs can be linked
    let mut order: Vec<usize> = (0..pre.len()).collect();
    order.sort_by(|&a, &b| pre[a].interval.lo.total_cmp(&pre[b].interval.lo));
    let mut cross_order_violations = Vec::new();
    let mut equal_order_overlaps = Vec::new();
    for (si, &i) in order.iter().enumerate() {
        for &j in order.iter().skip(si + 1) {
            if pre[j].interval.lo >= pre[i].interval.hi {
                break;
            }
            if pre[i].order != pre[j].order {
                if linked(&pre[i].interval, &pre[j].interval, tol) {
                    cross_order_violations.push((i, j));
                }
            } else if pre[i].target_id == pre[j].target_id
                && pre[i].interval.overlaps_interior(&pre[j].interval, tol)
                && !pre[i].interval.approx_eq(&pre[j].interval, tol)
            {
                equal_order_overlaps.push((i, j));
            }
        }
    }

    let ok = member_violations.is_empty()
        && cross_order_violations.is_empty()
        && equal_order_overlaps.is_empty();
    Ok(NestedReport {
        preimages_checked: pre.len(),
        member_violations,
        cross_order_violations,
        equal_order_overlaps,
        ok,
    })
}

/// A hole: the union of chosen shrunken members. Empty is allowed and means
/// the map stays closed.
#[derive(Clone, Debug, Serialize)]
pub struct Hole {
    pub components: Vec<usize>,
    pub region: IntervalSet,
}

impl Hole {
    pub fn empty() -> Self {
        Hole { components: Vec::new(), region: IntervalSet::empty() }
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    /// A hole given directly as a union of intervals (for escape-rate runs
    /// on explicit holes rather than nested-collection ones).
    pub fn from_intervals(ivs: Vec<Interval>) -> Self {
        Hole { components: Vec::new(), region: IntervalSet::from_intervals(ivs) }
    }
}

/// Build the hole `H = ∪ A′_k` over the chosen indices and verify the
/// sandwich `∪ B_{r/2} ⊆ H ⊆ ∪ B_r`.
pub fn build_hole(map: &MapModel, collection: &NestedCollection, chosen: &[usize]) -> Result<Hole> {
    let mut ivs = Vec::new();
    for &k in chosen {
        if k >= collection.shrunken.len() {
            return Err(Error::Precondition(format!("hole index {k} out of range")));
        }
        if collection.excluded.contains(&k) {
            return Err(Error::Precondition(format!(
                "ball {k} was excluded by the shrinking step and cannot form a hole"
            )));
        }
        ivs.push(collection.shrunken[k]);
    }
    let region = IntervalSet::from_intervals(ivs);
    for &k in chosen {
        let (p, r) = collection.balls[k];
        let inner = map.phase.ball(p, r / 2.0);
        let outer = map.phase.ball(p, r);
        if !region.contains_interval(&inner, 1e-9) {
            return Err(Error::Numeric(format!(
                "hole violates B_(r/2) ⊆ H for ball {k}"
            )));
        }
        if !IntervalSet::single(outer).contains_interval(&collection.shrunken[k], 1e-9) {
            return Err(Error::Numeric(format!("hole violates H ⊆ B_r for ball {k}")));
        }
    }
    Ok(Hole { components: chosen.to_vec(), region })
}

/// Pre-image of an interval set under the full map: branch by branch,
/// partial covers included.
pub fn preimage_set(map: &MapModel, set: &IntervalSet, params: &Params) -> Result<IntervalSet> {
    let mut out = Vec::new();
    for branch in &map.branches {
        for piece in set.pieces() {
            let (k_lo, k_hi) = if map.phase.is_circle() {
                (
                    (branch.image.lo - piece.hi).floor() as i64,
                    (branch.image.hi - piece.lo).ceil() as i64,
                )
            } else {
                (0, 0)
            };
            for k in k_lo..=k_hi {
                let shifted = piece.shifted(k as f64);
                let Some(overlap) = shifted.intersect(&branch.image) else {
                    continue;
                };
                if overlap.len() <= params.tol_inv {
                    continue;
                }
                let (a, b) = (
                    branch.inverse_unrolled(overlap.lo),
                    branch.inverse_unrolled(overlap.hi),
                );
                out.push(Interval::open(a.min(b), a.max(b)));
                if out.len() > params.max_preimages {
                    return Err(Error::BlowupGuard { max: params.max_preimages });
                }
            }
        }
    }
    Ok(IntervalSet::from_intervals(out))
}

/// The depth-n approximation of the survivor set: `∩_{j=0}^{n} f^{−j}(M∖H̄)`
/// as a canonical interval set, together with its reference mass.
#[derive(Clone, Debug, Serialize)]
pub struct SurvivorApprox {
    pub set: IntervalSet,
    pub mass: f64,
    pub depth: usize,
}

pub fn survivor_iterate(
    map: &MapModel,
    hole: &Hole,
    n: usize,
    params: &Params,
) -> Result<SurvivorApprox> {
    let full = IntervalSet::single(map.phase.as_interval());
    let closed_hole = IntervalSet::from_intervals(
        hole.region
            .pieces()
            .iter()
            .map(|p| Interval::closed(p.lo, p.hi))
            .collect(),
    );
    let s0 = full.subtract(&closed_hole);
    let mut current = s0.clone();
    for _ in 0..n {
        let pre = preimage_set(map, &current, params)?;
        current = s0.intersect(&pre);
        if current.pieces().len() > params.max_preimages {
            return Err(Error::BlowupGuard { max: params.max_preimages });
        }
    }
    let mass = current.total_len();
    Ok(SurvivorApprox { set: current, mass, depth: n })
}
