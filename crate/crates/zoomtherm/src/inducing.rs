//! First-return induced Markov schemes on a base interval.
//!
//! The partition element through a point is its minimal-order zooming
//! pre-image of the base; the inducing time is that order and `F = f^τ` maps
//! every element homeomorphically onto the base. When the base comes from a
//! nested collection, returns nest cleanly inside the base and the whole
//! scheme is adapted to any hole made of other members of the collection.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::map::MapModel;
use crate::nested::{zooming_ball_pullback_ok, Hole};
use crate::tol::Params;
use crate::zooming::ZoomingContraction;
use serde::Serialize;

/// One partition element of an induced scheme.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeElement {
    pub interval: Interval,
    /// Inducing time: `f^tau` maps the element onto the base.
    pub tau: usize,
    /// Branch indices along the pass: `f^j(P) ⊆ domain(branch_word[j])`.
    pub branch_word: Vec<usize>,
    /// The intervals `f^j(P)` for `0 ≤ j < tau`.
    pub itinerary: Vec<Interval>,
}

/// A first-return induced full Markov scheme.
#[derive(Clone, Debug, Serialize)]
pub struct InducedScheme {
    pub base: Interval,
    pub elements: Vec<SchemeElement>,
    pub cutoff: usize,
    /// Mass of base points whose first return was not resolved within the
    /// cutoff (inducing time 0 by convention; excluded from the partition).
    pub unresolved_mass: f64,
    /// Whether elements were restricted to zooming returns.
    pub zooming_mode: bool,
    /// Number of pulled intervals that straddled the base boundary; nonzero
    /// values indicate a base that is not aligned with the return structure.
    pub straddle_warnings: usize,
}

impl InducedScheme {
    pub fn alphabet_len(&self) -> usize {
        self.elements.len()
    }

    /// Reference (length) mass of one element relative to the base.
    pub fn element_mass(&self, i: usize) -> f64 {
        self.elements[i].interval.len()
    }
}

/// How to build a first-return scheme.
#[derive(Clone)]
pub struct FirstReturnOptions {
    pub cutoff: usize,
    /// When set, elements are restricted to zooming returns and the base
    /// must satisfy `diam(base) < δ/2`; when `None` all first returns are
    /// taken (sanity mode for bases aligned with the branch structure).
    pub zooming: Option<ZoomingContraction>,
    pub params: Params,
}

impl FirstReturnOptions {
    pub fn plain(cutoff: usize) -> Self {
        FirstReturnOptions { cutoff, zooming: None, params: Params::default() }
    }

    pub fn zooming(cutoff: usize, contraction: ZoomingContraction) -> Self {
        FirstReturnOptions { cutoff, zooming: Some(contraction), params: Params::default() }
    }
}

/// Build the first-return scheme on `base`: enumerate pre-images of the base
/// order by order, emit those contained in the base as partition elements,
/// and stop extending them (their extensions would revisit the base and so
/// are not first returns).
pub fn first_return_scheme(
    map: &MapModel,
    base: &Interval,
    opts: &FirstReturnOptions,
) -> Result<InducedScheme> {
    if opts.cutoff == 0 {
        return Err(Error::Precondition("cutoff must be at least 1".into()));
    }
    let params = &opts.params;
    let tol = params.tol_inv;
    if let Some(c) = &opts.zooming {
        if base.len() >= c.delta / 2.0 {
            return Err(Error::Precondition(format!(
                "base diameter {} is too large relative to delta {} (need diam < δ/2)",
                base.len(),
                c.delta
            )));
        }
    }
    let allow_shift = map.phase.is_circle();
    let mut elements: Vec<SchemeElement> = Vec::new();
    let mut straddle_warnings = 0usize;
    let mut explored = 0usize;

    // frontier of order-m pre-images of the base that have not yet returned
    let mut frontier: Vec<(Interval, Vec<usize>)> = vec![(*base, Vec::new())];
    for m in 1..=opts.cutoff {
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
                if let Some(c) = &opts.zooming {
                    if pulled.len() > c.alpha(m, base.len()) + 1e-9 {
                        continue;
                    }
                }
                let mut w = Vec::with_capacity(word.len() + 1);
                w.push(bi);
                w.extend_from_slice(word);

                if base.contains(&pulled, tol) {
                    if let Some(c) = &opts.zooming {
                        if !zooming_ball_pullback_ok(map, &w, pulled.mid(), c, tol) {
                            continue;
                        }
                    }
                    let itinerary = forward_itinerary(map, &pulled, &w);
                    elements.push(SchemeElement {
                        interval: pulled,
                        tau: m,
                        branch_word: w,
                        itinerary,
                    });
                } else if pulled.overlaps_interior(base, tol) {
                    straddle_warnings += 1;
                    next.push((pulled, w));
                } else {
                    next.push((pulled, w));
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    elements.sort_by(|a, b| {
        a.tau
            .cmp(&b.tau)
            .then(a.interval.lo.total_cmp(&b.interval.lo))
    });
    // merge duplicates produced by distinct enumeration paths
    elements.dedup_by(|a, b| a.interval.approx_eq(&b.interval, tol) && a.tau == b.tau);
    let covered: f64 = elements.iter().map(|e| e.interval.len()).sum();
    Ok(InducedScheme {
        base: *base,
        elements,
        cutoff: opts.cutoff,
        unresolved_mass: (base.len() - covered).max(0.0),
        zooming_mode: opts.zooming.is_some(),
        straddle_warnings,
    })
}

/// Forward endpoint propagation of `iv` through a branch word; returns the
/// intervals `f^j(iv)` for `0 ≤ j < word.len()`.
fn forward_itinerary(map: &MapModel, iv: &Interval, word: &[usize]) -> Vec<Interval> {
    let mut out = Vec::with_capacity(word.len());
    let mut cur = *iv;
    for &b in word {
        out.push(cur);
        let branch = &map.branches[b];
        let (a, c) = (
            branch.forward_unrolled(cur.lo),
            branch.forward_unrolled(cur.hi),
        );
        let (lo, hi) = (a.min(c), a.max(c));
        // reduce the whole interval by the deck shift of its left endpoint
        let shift = map.phase.reduce(lo) - lo;
        cur = Interval::open(lo + shift, hi + shift);
    }
    out
}

/// The geometric interval of a symbolic cylinder `[a₀ a₁ … a_(d−1)]`: the set
/// of base points whose first `d` passes go through those elements.
pub fn cylinder_interval(
    map: &MapModel,
    scheme: &InducedScheme,
    word: &[usize],
    tol: f64,
) -> Result<Interval> {
    let mut iv = scheme.elements[*word.last().ok_or_else(|| {
        Error::Precondition("cylinder word must be nonempty".into())
    })?]
    .interval;
    let allow_shift = map.phase.is_circle();
    for &a in word.iter().rev().skip(1) {
        let elem = &scheme.elements[a];
        let mut cur = iv;
        for &b in elem.branch_word.iter().rev() {
            cur = map.branches[b]
                .pull_interval(&cur, allow_shift, tol)
                .ok_or(Error::Numeric(
                    "cylinder pull-back left the branch image".into(),
                ))?;
        }
        iv = cur;
    }
    Ok(iv)
}

/// Per-axiom outcome of the Markov verification.
#[derive(Clone, Debug, Serialize)]
pub struct MarkovReport {
    /// Overlapping element pairs (axiom: pairwise-disjoint interiors).
    pub overlapping_pairs: Vec<(usize, usize)>,
    /// Elements whose `f^τ` image misses the base endpoints (full branch).
    pub full_branch_failures: Vec<usize>,
    /// Elements on which `f^τ` was not monotone on the sample grid.
    pub homeomorphism_failures: Vec<usize>,
    /// Max cylinder diameter per depth (must decrease).
    pub cylinder_diameters: Vec<f64>,
    pub diameters_decay: bool,
    pub ok: bool,
}

/// Check the Markov axioms in their full-branch specialization.
pub fn verify_markov(map: &MapModel, scheme: &InducedScheme, params: &Params) -> Result<MarkovReport> {
    let tol = params.tol_inv;
    let n = scheme.elements.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scheme.elements[a]
            .interval
            .lo
            .total_cmp(&scheme.elements[b].interval.lo)
    });
    let mut overlapping_pairs = Vec::new();
    for (si, &i) in order.iter().enumerate() {
        for &j in order.iter().skip(si + 1) {
            if scheme.elements[j].interval.lo >= scheme.elements[i].interval.hi - tol {
                break;
            }
            if scheme.elements[i]
                .interval
                .overlaps_interior(&scheme.elements[j].interval, tol)
            {
                overlapping_pairs.push((i, j));
            }
        }
    }

    let mut full_branch_failures = Vec::new();
    let mut homeomorphism_failures = Vec::new();
    for (i, e) in scheme.elements.iter().enumerate() {
        let final_iv = push_forward(map, &e.interval, &e.branch_word);
        if !final_iv.approx_eq(&scheme.base, 1e-8) {
            full_branch_failures.push(i);
        }
        // sampled monotonicity of f^τ on the element
        let samples = e.interval.samples(8);
        let mut images = Vec::with_capacity(samples.len());
        for &x in &samples {
            let mut y = x;
            for &b in &e.branch_word {
                y = map.phase.reduce(map.branches[b].forward_unrolled(y));
            }
            images.push(y);
        }
        // compare in unrolled coordinates relative to the base
        let base_anchor = scheme.base.lo;
        let unrolled: Vec<f64> = images
            .iter()
            .map(|&y| if y < base_anchor - tol { y + 1.0 } else { y })
            .collect();
        let inc = unrolled.windows(2).all(|w| w[1] > w[0]);
        let dec = unrolled.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            homeomorphism_failures.push(i);
        }
    }

    // cylinder diameter decay over the first few depths, on a capped alphabet
    let cap = n.min(12);
    let mut cylinder_diameters = Vec::new();
    let mut words: Vec<Vec<usize>> = (0..cap).map(|a| vec![a]).collect();
    for _depth in 0..3 {
        let mut max_diam: f64 = 0.0;
        for w in &words {
            if let Ok(iv) = cylinder_interval(map, scheme, w, tol) {
                max_diam = max_diam.max(iv.len());
            }
        }
        cylinder_diameters.push(max_diam);
        let mut next = Vec::new();
        for w in &words {
            for a in 0..cap {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        words = next;
        if words.len() > 20_000 {
            break;
        }
    }
    let diameters_decay = cylinder_diameters.windows(2).all(|w| w[1] < w[0] + tol);

    let ok = overlapping_pairs.is_empty()
        && full_branch_failures.is_empty()
        && homeomorphism_failures.is_empty()
        && diameters_decay;
    Ok(MarkovReport {
        overlapping_pairs,
        full_branch_failures,
        homeomorphism_failures,
        cylinder_diameters,
        diameters_decay,
        ok,
    })
}

fn push_forward(map: &MapModel, iv: &Interval, word: &[usize]) -> Interval {
    let mut cur = *iv;
    for &b in word {
        let branch = &map.branches[b];
        let (a, c) = (
            branch.forward_unrolled(cur.lo),
            branch.forward_unrolled(cur.hi),
        );
        let (lo, hi) = (a.min(c), a.max(c));
        let shift = map.phase.reduce(lo) - lo;
        cur = Interval::open(lo + shift, hi + shift);
    }
    cur
}

/// Outcome of the adapted-to-hole check.
#[derive(Clone, Debug, Serialize)]
pub struct AdaptedReport {
    /// Pairs `(element, k)` with `f^k(P) ∩ H ≠ ∅` but `f^k(P) ⊄ H`.
    pub violations: Vec<(usize, usize)>,
    pub itineraries_checked: usize,
    pub ok: bool,
}

/// Check that every element can meet the hole only by entering it entirely:
/// `f^k(P) ∩ H ≠ ∅ ⇒ f^k(P) ⊆ H` for all `0 ≤ k < τ(P)`.
pub fn verify_adapted(scheme: &InducedScheme, hole: &Hole, params: &Params) -> Result<AdaptedReport> {
    let tol = params.tol_inv;
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for (i, e) in scheme.elements.iter().enumerate() {
        if e.itinerary.is_empty() {
            return Err(Error::Precondition(format!("element {i} has no stored itinerary")));
        }
        for (k, piece) in e.itinerary.iter().enumerate() {
            checked += 1;
            let meets = hole
                .region
                .pieces()
                .iter()
                .any(|h| h.overlaps_interior(piece, tol));
            if meets && !hole.region.contains_interval(piece, tol) {
                violations.push((i, k));
            }
        }
    }
    let ok = violations.is_empty();
    Ok(AdaptedReport { violations, itineraries_checked: checked, ok })
}

/// Result of the return-time compatibility scan over spread pieces.
#[derive(Clone, Debug, Serialize)]
pub struct CompatibilityWitness {
    pub element_a: usize,
    pub step_a: usize,
    pub element_b: usize,
    pub step_b: usize,
}

/// Scan all pairs of itinerary pieces: overlapping pieces must be equal as
/// intervals and carry the same remaining inducing time. Violations break
/// the well-definedness of spread conformal measures.
pub fn check_return_compatibility(
    scheme: &InducedScheme,
    params: &Params,
) -> Vec<CompatibilityWitness> {
    let tol = params.tol_inv;
    let mut pieces: Vec<(usize, usize, Interval)> = Vec::new();
    for (i, e) in scheme.elements.iter().enumerate() {
        for (k, piece) in e.itinerary.iter().enumerate() {
            pieces.push((i, k, *piece));
        }
    }
    pieces.sort_by(|a, b| a.2.lo.total_cmp(&b.2.lo));
    let mut out = Vec::new();
    for (si, &(i, k, ref a)) in pieces.iter().enumerate() {
        for &(j, kk, ref b) in pieces.iter().skip(si + 1) {
            if b.lo >= a.hi - tol {
                break;
            }
            if !a.overlaps_interior(b, tol) {
                continue;
            }
            let same_piece = a.approx_eq(b, 1e-9);
            let same_remaining =
                scheme.elements[i].tau as i64 - k as i64 == scheme.elements[j].tau as i64 - kk as i64;
            if !(same_piece && same_remaining) {
                out.push(CompatibilityWitness {
                    element_a: i,
                    step_a: k,
                    element_b: j,
                    step_b: kk,
                });
            }
        }
    }
    out
}

/// Outcome of pruning.
#[derive(Clone, Debug, Serialize)]
pub struct PruneReport {
    pub removed: Vec<usize>,
    pub remaining: usize,
}

/// Remove every element one of whose intermediate iterates nests *strictly*
/// inside another element (iterates equal to an element are allowed), so
/// that overlapping spread pieces always agree. Cylinders through removed
/// symbols disappear with their symbol downstream, which excludes the
/// F-preimages of removed elements at the symbolic level.
pub fn prune_return_compatible(
    scheme: &InducedScheme,
    params: &Params,
) -> Result<(InducedScheme, PruneReport)> {
    let tol = params.tol_inv;
    let mut alive: Vec<bool> = vec![true; scheme.elements.len()];
    loop {
        let mut changed = false;
        for j in 0..scheme.elements.len() {
            if !alive[j] {
                continue;
            }
            'outer: for k in 1..scheme.elements[j].itinerary.len() {
                let piece = &scheme.elements[j].itinerary[k];
                for i in 0..scheme.elements.len() {
                    if !alive[i] || i == j {
                        continue;
                    }
                    if scheme.elements[i].interval.contains_strictly(piece, tol)
                        && piece.overlaps_interior(&scheme.elements[i].interval, tol)
                    {
                        alive[j] = false;
                        changed = true;
                        break 'outer;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let removed: Vec<usize> = (0..scheme.elements.len()).filter(|&i| !alive[i]).collect();
    let elements: Vec<SchemeElement> = scheme
        .elements
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(e, _)| e.clone())
        .collect();
    if elements.is_empty() {
        return Err(Error::EmptyScheme);
    }
    let covered: f64 = elements.iter().map(|e| e.interval.len()).sum();
    let pruned = InducedScheme {
        base: scheme.base,
        elements,
        cutoff: scheme.cutoff,
        unresolved_mass: (scheme.base.len() - covered).max(0.0),
        zooming_mode: scheme.zooming_mode,
        straddle_warnings: scheme.straddle_warnings,
    };
    let remaining = pruned.elements.len();
    Ok((pruned, PruneReport { removed, remaining }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapModel;
    use crate::nested::{build_hole, nested_shrink};
    use crate::tol::Params;

    #[test]
    fn full_shift_sanity_scheme() {
        let m = MapModel::doubling();
        let s = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
            .unwrap();
        assert_eq!(s.elements.len(), 2);
        for e in &s.elements {
            assert_eq!(e.tau, 1);
        }
        assert!(s.unresolved_mass < 1e-12);
        let report = verify_markov(&m, &s, &Params::default()).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn half_interval_first_returns_and_kac() {
        let m = MapModel::doubling();
        let n = 14;
        let s = first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(n))
            .unwrap();
        // one element per inducing time, dyadic lengths
        assert_eq!(s.elements.len(), n);
        for (i, e) in s.elements.iter().enumerate() {
            assert_eq!(e.tau, i + 1);
            assert!((e.interval.len() - 0.5f64.powi(e.tau as i32 + 1)).abs() < 1e-12);
        }
        // Kac: Σ τ·|P| / |base| → 2
        let kac: f64 = s.elements.iter().map(|e| e.tau as f64 * e.interval.len()).sum::<f64>()
            / s.base.len();
        let tail: f64 = (n + 1..200).map(|t| t as f64 * 0.5f64.powi(t as i32)).sum();
        assert!((kac + tail - 2.0).abs() < 1e-9, "kac {kac} tail {tail}");
        assert!((s.unresolved_mass - 0.5f64.powi(n as i32 + 1)).abs() < 1e-12);
        let report = verify_markov(&m, &s, &Params::default()).unwrap();
        assert!(report.ok, "{report:?}");
    }

    #[test]
    fn first_element_intervals_are_the_expected_cylinders() {
        let m = MapModel::doubling();
        let s = first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(6))
            .unwrap();
        let expect = [
            Interval::open(0.0, 0.25),
            Interval::open(0.25, 0.375),
            Interval::open(0.375, 0.4375),
        ];
        for (e, exp) in s.elements.iter().zip(expect) {
            assert!(e.interval.approx_eq(&exp, 1e-12), "{:?} vs {exp:?}", e.interval);
        }
    }

    #[test]
    fn nested_base_scheme_is_markov_and_disjoint() {
        let m = MapModel::doubling();
        let c = ZoomingContraction::exponential(0.5, m.default_delta).unwrap();
        let coll = nested_shrink(
            &m,
            &[(1.0 / 3.0, 0.04), (2.0 / 3.0, 0.04)],
            0.5,
            12,
            &c,
            &Params::default(),
        )
        .unwrap();
        let s = first_return_scheme(
            &m,
            &coll.shrunken[0],
            &FirstReturnOptions::zooming(12, c.clone()),
        )
        .unwrap();
        assert!(!s.elements.is_empty());
        let report = verify_markov(&m, &s, &Params::default()).unwrap();
        assert!(report.ok, "{report:?}");
        // every inducing time is a zooming time of the element midpoint:
        // re-verify via the ball pull-back
        for e in &s.elements {
            assert!(zooming_ball_pullback_ok(
                &m,
                &e.branch_word,
                e.interval.mid(),
                &c,
                1e-10
            ));
        }
        // unresolved mass shrinks as the cutoff grows
        let s8 = first_return_scheme(
            &m,
            &coll.shrunken[0],
            &FirstReturnOptions::zooming(8, c.clone()),
        )
        .unwrap();
        assert!(s.unresolved_mass < s8.unresolved_mass);
    }

    #[test]
    fn corrupted_scheme_fails_disjointness() {
        let m = MapModel::doubling();
        let mut s =
            first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(8))
                .unwrap();
        // enlarge one element by 1% so it overlaps its neighbour
        let iv = s.elements[0].interval;
        s.elements[0].interval = Interval::open(iv.lo, iv.hi + 0.01 * iv.len());
        let report = verify_markov(&m, &s, &Params::default()).unwrap();
        assert!(!report.overlapping_pairs.is_empty());
        assert!(!report.ok);
    }

    #[test]
    fn adapted_empty_hole_is_vacuous() {
        let m = MapModel::doubling();
        let s = first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(8))
            .unwrap();
        let rep = verify_adapted(&s, &Hole::empty(), &Params::default()).unwrap();
        assert!(rep.ok);
        assert!(rep.itineraries_checked > 0);
    }

    #[test]
    fn scheme_on_one_nested_ball_is_adapted_to_the_other() {
        let m = MapModel::doubling();
        let c = ZoomingContraction::exponential(0.5, m.default_delta).unwrap();
        let coll = nested_shrink(
            &m,
            &[(1.0 / 3.0, 0.04), (2.0 / 3.0, 0.04)],
            0.5,
            12,
            &c,
            &Params::default(),
        )
        .unwrap();
        for (base_i, hole_i) in [(0usize, 1usize), (1, 0)] {
            let s = first_return_scheme(
                &m,
                &coll.shrunken[base_i],
                &FirstReturnOptions::zooming(12, c.clone()),
            )
            .unwrap();
            let hole = build_hole(&m, &coll, &[hole_i]).unwrap();
            let rep = verify_adapted(&s, &hole, &Params::default()).unwrap();
            assert!(rep.ok, "violations: {:?}", rep.violations);
        }
    }

    #[test]
    fn synthetic_straddling_itinerary_is_reported() {
        let m = MapModel::doubling();
        let mut s =
            first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(6))
                .unwrap();
        // corrupt one itinerary piece so it straddles the hole boundary
        s.elements[2].itinerary[1] = Interval::open(0.55, 0.65);
        let hole = Hole::from_intervals(vec![Interval::open(0.6, 0.7)]);
        let rep = verify_adapted(&s, &hole, &Params::default()).unwrap();
        assert!(!rep.ok);
        assert!(rep.violations.contains(&(2, 1)), "violations: {:?}", rep.violations);
    }

    #[test]
    fn pruning_keeps_first_return_schemes_whole() {
        let m = MapModel::doubling();
        for base in [Interval::open(0.0, 1.0), Interval::open(0.0, 0.5)] {
            let s = first_return_scheme(&m, &base, &FirstReturnOptions::plain(10)).unwrap();
            let (pruned, report) = prune_return_compatible(&s, &Params::default()).unwrap();
            assert!(report.removed.is_empty());
            assert_eq!(pruned.elements.len(), s.elements.len());
            assert!(check_return_compatibility(&pruned, &Params::default()).is_empty());
        }
    }

    #[test]
    fn pruning_removes_strictly_nested_iterates() {
        let m = MapModel::doubling();
        let mut s =
            first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(6))
                .unwrap();
        // fabricate an element whose first iterate lands strictly inside
        // element 0 = [0, 1/4)
        let bad = SchemeElement {
            interval: Interval::open(0.46, 0.48),
            tau: 2,
            branch_word: vec![1, 0],
            itinerary: vec![Interval::open(0.46, 0.48), Interval::open(0.05, 0.10)],
        };
        s.elements.push(bad);
        let (pruned, report) = prune_return_compatible(&s, &Params::default()).unwrap();
        assert_eq!(report.removed.len(), 1);
        assert_eq!(pruned.elements.len(), s.elements.len() - 1);
    }

    #[test]
    fn cylinder_intervals_refine_elements() {
        let m = MapModel::doubling();
        let s = first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(8))
            .unwrap();
        let tol = 1e-10;
        for a in 0..3usize {
            for b in 0..3usize {
                let iv = cylinder_interval(&m, &s, &[a, b], tol).unwrap();
                assert!(s.elements[a].interval.contains(&iv, tol));
                // mass of [a b] = |P_a| · |P_b| / |base| for the doubling map
                let expect =
                    s.elements[a].interval.len() * s.elements[b].interval.len() / s.base.len();
                assert!((iv.len() - expect).abs() < 1e-12);
            }
        }
    }
}
