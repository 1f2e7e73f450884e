//! The acceptance suite: one row per criterion, each with its tolerance
//! pinned in code. `selftest` runs all rows and prints a pass/fail table.

use crate::commands::{run_escape, run_pressure};
use crate::config::RunConfig;
use zoomtherm::equilibrium::{
    equilibrium_state, escape_rate, geometric_t0, pressure_solve, spread_conformal,
    CandidateMeasure, PotentialSpec,
};
use zoomtherm::inducing::{
    first_return_scheme, prune_return_compatible, verify_adapted, FirstReturnOptions,
    InducedScheme,
};
use zoomtherm::interval::Interval;
use zoomtherm::map::MapModel;
use zoomtherm::nested::{build_hole, nested_shrink, verify_nested, Hole};
use zoomtherm::thermo::{fit_variation_ratio, gibbs_eigendata, induced_potential, verify_gibbs};
use zoomtherm::tol::Params;
use zoomtherm::zooming::ZoomingContraction;

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Debug)]
pub struct RowResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn row(id: usize, name: &'static str, r: Result<(bool, String), String>) -> RowResult {
    match r {
        Ok((passed, detail)) => RowResult { id, name, passed, detail },
        Err(e) => RowResult { id, name, passed: false, detail: format!("error: {e}") },
    }
}

fn full_shift() -> Result<(MapModel, InducedScheme), String> {
    let m = MapModel::doubling();
    let s = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
        .map_err(|e| e.to_string())?;
    Ok((m, s))
}

fn half_base(cutoff: usize) -> Result<(MapModel, InducedScheme), String> {
    let m = MapModel::doubling();
    let s = first_return_scheme(
        &m,
        &Interval::open(0.0, 0.5),
        &FirstReturnOptions::plain(cutoff),
    )
    .map_err(|e| e.to_string())?;
    Ok((m, s))
}

fn two_ball_collection() -> Result<(MapModel, ZoomingContraction, zoomtherm::nested::NestedCollection), String> {
    let m = MapModel::doubling();
    let c = ZoomingContraction::exponential(0.5, m.default_delta).map_err(|e| e.to_string())?;
    let coll = nested_shrink(
        &m,
        &[(1.0 / 3.0, 0.04), (2.0 / 3.0, 0.04)],
        0.5,
        12,
        &c,
        &Params::default(),
    )
    .map_err(|e| e.to_string())?;
    Ok((m, c, coll))
}

fn row1_entropy() -> Result<(bool, String), String> {
    let params = Params::default();
    let (m, s1) = full_shift()?;
    let p1 = pressure_solve(&m, &s1, &PotentialSpec::Zero, (0.1, 2.0), 1e-8, &params)
        .map_err(|e| e.to_string())?;
    let (m, s2) = half_base(48)?;
    let p2 = pressure_solve(&m, &s2, &PotentialSpec::Zero, (0.1, 2.0), 1e-8, &params)
        .map_err(|e| e.to_string())?;
    let (e1, e2) = ((p1.p_star - LN2).abs(), (p2.p_star - LN2).abs());
    Ok((
        e1 < 1e-3 && e2 < 1e-3,
        format!("full shift {:.6}, first-return {:.6}, target ln2 = {:.6}", p1.p_star, p2.p_star, LN2),
    ))
}

fn row2_pressure_line() -> Result<(bool, String), String> {
    let params = Params::default();
    let (m, s) = full_shift()?;
    let mut worst = 0.0f64;
    for t in [-2.0, -1.0, -0.5, 0.5] {
        let expect = (1.0 - t) * LN2;
        let p = pressure_solve(
            &m,
            &s,
            &PotentialSpec::Geometric { t },
            (expect - 1.0, expect + 1.0),
            1e-8,
            &params,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max((p.p_star - expect).abs());
    }
    Ok((worst < 1e-3, format!("max |p* − (1−t)·ln2| = {worst:.2e}")))
}

fn row3_t0() -> Result<(bool, String), String> {
    let (m, s) = full_shift()?;
    let lebesgue = CandidateMeasure { scheme: &s, weights: vec![0.5, 0.5] };
    let r = geometric_t0(&m, &s, &[lebesgue], &Params::default()).map_err(|e| e.to_string())?;
    Ok(((r.t0 + 1.0).abs() < 1e-6, format!("t0 = {:.9}", r.t0)))
}

fn row4_abramov_kac() -> Result<(bool, String), String> {
    let (m, s) = half_base(48)?;
    let (_, eq) = equilibrium_state(
        &m,
        &s,
        &PotentialSpec::Zero,
        (0.2, 1.5),
        48,
        4,
        2,
        1e-9,
        &Params::default(),
    )
    .map_err(|e| e.to_string())?;
    let (e_tau, e_h) = ((eq.tau_integral - 2.0).abs(), (eq.entropy - LN2).abs());
    Ok((
        e_tau < 1e-3 && e_h < 1e-3,
        format!("∫τ = {:.6}, h = {:.6}", eq.tau_integral, eq.entropy),
    ))
}

fn row5_variational_identity() -> Result<(bool, String), String> {
    let params = Params::default();
    let mut worst = 0.0f64;
    let (m, s) = full_shift()?;
    for (phi, bracket) in [
        (PotentialSpec::Zero, (0.1, 2.0)),
        (PotentialSpec::Geometric { t: -2.0 }, (1.5, 2.5)),
        (PotentialSpec::Geometric { t: -1.0 }, (1.0, 1.9)),
        (PotentialSpec::Geometric { t: -0.5 }, (0.6, 1.5)),
        (PotentialSpec::Geometric { t: 0.5 }, (0.05, 1.0)),
    ] {
        let (p, eq) =
            equilibrium_state(&m, &s, &phi, bracket, 2, 4, 6, 1e-9, &params).map_err(|e| e.to_string())?;
        worst = worst.max((eq.entropy + eq.phi_integral - p.p_star).abs());
    }
    let (m, s) = half_base(48)?;
    let (p, eq) = equilibrium_state(&m, &s, &PotentialSpec::Zero, (0.2, 1.5), 48, 4, 2, 1e-9, &params)
        .map_err(|e| e.to_string())?;
    worst = worst.max((eq.entropy + eq.phi_integral - p.p_star).abs());
    Ok((worst < 1e-3, format!("max |h + ∫φ − p*| = {worst:.2e}")))
}

fn row6_eigen_residuals() -> Result<(bool, String), String> {
    let params = Params::default();
    let (m, s) = half_base(512)?;
    let phi = PotentialSpec::constant(-LN2);
    let pot = induced_potential(&m, &s, &phi, 1, &params).map_err(|e| e.to_string())?;
    let mut worst_h = 0.0f64;
    let mut worst_m = 0.0f64;
    for n_sym in [32usize, 128, 512] {
        let g = gibbs_eigendata(&pot, n_sym, params.tol_eig, &params).map_err(|e| e.to_string())?;
        worst_h = worst_h.max(g.residual_h);
        worst_m = worst_m.max(g.residual_m);
    }
    // Gibbs ratio on a depth-1-constant potential at depth 4
    let g12 = gibbs_eigendata(&pot, 12, params.tol_eig, &params).map_err(|e| e.to_string())?;
    let rep = verify_gibbs(&g12, 4, 100_000).map_err(|e| e.to_string())?;
    let k_err = (rep.k_constant - 1.0).abs();
    Ok((
        worst_h < 1e-10 && worst_m < 1e-10 && k_err < 1e-9,
        format!("residuals h {worst_h:.2e}, m {worst_m:.2e}; |K−1| = {k_err:.2e}"),
    ))
}

fn row7_escape_rates() -> Result<(bool, String), String> {
    let m = MapModel::doubling();
    let params = Params::default();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let expect = LN2 - golden.ln();
    let r1 = escape_rate(
        &m,
        &Hole::from_intervals(vec![Interval::open(0.75, 1.0)]),
        24,
        &params,
    )
    .map_err(|e| e.to_string())?;
    let r2 = escape_rate(
        &m,
        &Hole::from_intervals(vec![Interval::open(0.0, 0.5)]),
        20,
        &params,
    )
    .map_err(|e| e.to_string())?;
    let (e1, e2) = ((r1.rate - expect).abs(), (r2.rate - LN2).abs());
    Ok((
        e1 < 1e-3 && e2 < 1e-6,
        format!(
            "golden-mean hole {:.6} (target {:.6}), half hole {:.9}",
            r1.rate, expect, r2.rate
        ),
    ))
}

fn row8_nested_property() -> Result<(bool, String), String> {
    let (m, c, coll) = two_ball_collection()?;
    let report = verify_nested(&m, &coll, 12, &c, &Params::default()).map_err(|e| e.to_string())?;
    let cores = coll.certificates.iter().all(|c| c.contains_core);
    Ok((
        report.ok && cores,
        format!(
            "{} pre-images checked, {} linked cross-order pairs, cores contained: {}",
            report.preimages_checked,
            report.cross_order_violations.len(),
            cores
        ),
    ))
}

fn row9_adapted() -> Result<(bool, String), String> {
    let (m, c, coll) = two_ball_collection()?;
    let params = Params::default();
    let mut total = 0usize;
    for (base_i, hole_i) in [(0usize, 1usize), (1, 0)] {
        let s = first_return_scheme(
            &m,
            &coll.shrunken[base_i],
            &FirstReturnOptions::zooming(12, c.clone()),
        )
        .map_err(|e| e.to_string())?;
        let hole = build_hole(&m, &coll, &[hole_i]).map_err(|e| e.to_string())?;
        let rep = verify_adapted(&s, &hole, &params).map_err(|e| e.to_string())?;
        if !rep.ok {
            return Ok((false, format!("violations: {:?}", rep.violations)));
        }
        total += rep.itineraries_checked;
    }
    Ok((true, format!("{total} itinerary pieces scanned, zero violations")))
}

fn row10_spreading() -> Result<(bool, String), String> {
    let params = Params::default();
    // pruning leaves first-return schemes unchanged
    let (m, s_full) = full_shift()?;
    let (pruned_full, rep_full) = prune_return_compatible(&s_full, &params).map_err(|e| e.to_string())?;
    let (_, s_half) = half_base(30)?;
    let (pruned_half, rep_half) = prune_return_compatible(&s_half, &params).map_err(|e| e.to_string())?;
    if !rep_full.removed.is_empty() || !rep_half.removed.is_empty() {
        return Ok((false, "pruning unexpectedly removed elements".into()));
    }
    let phi = PotentialSpec::constant(-LN2);
    // τ ≡ 1: spreading is the identity
    let pot = induced_potential(&m, &pruned_full, &phi, 1, &params).map_err(|e| e.to_string())?;
    let g = gibbs_eigendata(&pot, 2, params.tol_eig, &params).map_err(|e| e.to_string())?;
    let res_full = spread_conformal(&m, &pruned_full, &g, &phi, 0.0, 6, 6, 1, &params)
        .map_err(|e| e.to_string())?;
    let identity_ok = res_full.pieces.len() == 2
        && res_full.pieces.iter().all(|(_, mass)| (mass - 0.5).abs() < 1e-12);
    // dyadic Lebesgue reproduction on the full shift
    let k = res_full.normalized_cells.len() as f64;
    let lebesgue_err = res_full
        .normalized_cells
        .iter()
        .map(|m| (m - 1.0 / k).abs())
        .fold(0.0f64, f64::max);
    // overlap agreement on the half-base scheme
    let pot_h = induced_potential(&m, &pruned_half, &phi, 1, &params).map_err(|e| e.to_string())?;
    let g_h = gibbs_eigendata(&pot_h, 30, params.tol_eig, &params).map_err(|e| e.to_string())?;
    let res_half = spread_conformal(&m, &pruned_half, &g_h, &phi, 0.0, 4, 3, 2, &params)
        .map_err(|e| e.to_string())?;
    Ok((
        identity_ok && lebesgue_err < 1e-9 && res_half.overlap_max_disagreement < 1e-9,
        format!(
            "identity {}, Lebesgue err {:.2e}, overlap disagreement {:.2e}",
            identity_ok, lebesgue_err, res_half.overlap_max_disagreement
        ),
    ))
}

fn row11_variation_decay() -> Result<(bool, String), String> {
    let params = Params::default();
    let m = MapModel::quadratic(2.0).map_err(|e| e.to_string())?;
    let sigma = 0.9;
    let c = ZoomingContraction::exponential(sigma, 0.25).map_err(|e| e.to_string())?;
    let coll = nested_shrink(&m, &[(1.0 / 3.0, 0.06)], 0.5, 10, &c, &params)
        .map_err(|e| e.to_string())?;
    let s = first_return_scheme(
        &m,
        &coll.shrunken[0],
        &FirstReturnOptions::zooming(16, c.clone()),
    )
    .map_err(|e| e.to_string())?;
    if s.elements.len() < 2 {
        return Ok((false, format!("scheme too small: {} elements", s.elements.len())));
    }
    let phi = PotentialSpec::Geometric { t: -2.0 };
    let pot = induced_potential(&m, &s, &phi, 5, &params).map_err(|e| e.to_string())?;
    let theta = fit_variation_ratio(&pot.variations)
        .ok_or_else(|| "variation fit degenerate".to_string())?;
    let bound = sigma.sqrt() + 0.05;
    Ok((
        theta <= bound,
        format!(
            "θ = {:.4} ≤ {:.4}; V = {:?} over {} elements",
            theta, bound, pot.variations, s.elements.len()
        ),
    ))
}

fn determinism_artifact() -> Result<String, String> {
    let mut cfg = RunConfig::default();
    cfg.set("map.name", "doubling".into());
    cfg.set("scheme.base", "0:0.5".into());
    cfg.set("scheme.cutoff", "30".into());
    cfg.set("potential.kind", "zero".into());
    cfg.set("equilibrium.bracket", "0.2:1.5".into());
    let pressure = run_pressure(&cfg).map_err(|e| e.to_string())?;
    let mut cfg2 = RunConfig::default();
    cfg2.set("map.name", "doubling".into());
    cfg2.set("hole.intervals", "0.75:1.0".into());
    cfg2.set("escape.nmax", "20".into());
    let escape = run_escape(&cfg2).map_err(|e| e.to_string())?;
    Ok(format!("{}{}", pressure.stdout, escape.stdout))
}

fn row12_determinism() -> Result<(bool, String), String> {
    let a = determinism_artifact()?;
    let b = determinism_artifact()?;
    Ok((
        a == b,
        format!("two runs produced {} identical bytes", a.len()),
    ))
}

/// Run all acceptance rows, at most `threads` in parallel.
pub fn run_all(threads: usize) -> Vec<RowResult> {
    type RowFn = fn() -> Result<(bool, String), String>;
    let rows: Vec<(usize, &'static str, RowFn)> = vec![
        (1, "entropy of the doubling map (both schemes)", row1_entropy),
        (2, "geometric pressure line (1−t)·ln 2", row2_pressure_line),
        (3, "t0 of the doubling map", row3_t0),
        (4, "Abramov/Kac on the first-return scheme", row4_abramov_kac),
        (5, "variational identity h + ∫φ = p*", row5_variational_identity),
        (6, "eigen-residuals and Gibbs ratio", row6_eigen_residuals),
        (7, "escape rates (golden-mean and half holes)", row7_escape_rates),
        (8, "nested-collection property suite", row8_nested_property),
        (9, "adapted-to-hole suite", row9_adapted),
        (10, "return-time pruning and conformal spreading", row10_spreading),
        (11, "induced-potential variation decay", row11_variation_decay),
        (12, "determinism of artifacts", row12_determinism),
    ];
    let threads = threads.max(1);
    let mut results: Vec<Option<RowResult>> = vec![None; rows.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results_mutex = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(rows.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= rows.len() {
                    break;
                }
                let (id, name, f) = rows[i];
                let r = row(id, name, f());
                results_mutex.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_iter().map(|r| r.expect("row executed")).collect()
}

/// Render the pass/fail table.
pub fn render_table(rows: &[RowResult]) -> String {
    let mut out = String::new();
    out.push_str("acceptance suite\n");
    out.push_str("----------------\n");
    for r in rows {
        out.push_str(&format!(
            "{:>2}  {}  {}\n      {}\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        ));
    }
    let passed = rows.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} rows passed\n", rows.len()));
    out
}
