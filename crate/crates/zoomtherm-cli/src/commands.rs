//! Subcommand runners. Each returns the primary artifact as a string (JSON,
//! or CSV for `hyp-times`) plus named files to persist when `output.dir` is
//! set. Identical configs produce byte-identical output.

use crate::config::{BaseSpec, ConfigError, RunConfig};
use serde_json::{json, Value};
use zoomtherm::equilibrium::{
    self, dyadic_cells, equilibrium_state, escape_rate, pressure_solve,
};
use zoomtherm::inducing::{
    first_return_scheme, prune_return_compatible, verify_markov, FirstReturnOptions, InducedScheme,
};
use zoomtherm::interval::Interval;
use zoomtherm::map::MapModel;
use zoomtherm::nested::{build_hole, nested_shrink, verify_nested, Hole, NestedCollection};
use zoomtherm::thermo::{gibbs_eigendata, gurevich_pressure, induced_potential, InducedPotential};
use zoomtherm::tol::Params;
use zoomtherm::zooming::{detect_hyperbolic_times, hyperbolic_frequency, ZoomingContraction};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit-code-bearing error: config errors exit 1, numerical failures exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<zoomtherm::Error> for CliError {
    fn from(e: zoomtherm::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

/// Primary artifact plus files to write under `output.dir`.
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<(String, String)>,
}

fn iv_json(iv: &Interval) -> Value {
    json!({ "lo": iv.lo, "hi": iv.hi })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serialization");
    s.push('\n');
    s
}

/// Map + contraction + scheme (+ the nested collection when the base is a
/// nested member), assembled from the shared config keys.
pub struct Pipeline {
    pub map: MapModel,
    pub contraction: ZoomingContraction,
    pub collection: Option<NestedCollection>,
    pub scheme: InducedScheme,
}

pub fn build_pipeline(cfg: &RunConfig) -> Result<Pipeline, CliError> {
    let map = cfg.map()?;
    let contraction = cfg.contraction(&map)?;
    let params = Params::default();
    let cutoff = cfg.usize_or("scheme.cutoff", 14)?;
    let (collection, base, zoom_default) = match cfg.base_spec()? {
        BaseSpec::Explicit(iv) => (None, iv, false),
        BaseSpec::NestedMember(i) => {
            let balls = cfg.balls()?;
            let epsilon = cfg.f64_or("nest.epsilon", 0.5)?;
            let n = cfg.usize_or("nest.cutoff", 12)?;
            let coll = nested_shrink(&map, &balls, epsilon, n, &contraction, &params)?;
            if i >= coll.shrunken.len() {
                return Err(CliError::Config(format!("scheme.base: nest index {i} out of range")));
            }
            let base = coll.shrunken[i];
            (Some(coll), base, true)
        }
    };
    let zooming = cfg.bool_or("scheme.zooming", zoom_default)?;
    let opts = if zooming {
        FirstReturnOptions::zooming(cutoff, contraction.clone())
    } else {
        FirstReturnOptions::plain(cutoff)
    };
    let scheme = first_return_scheme(&map, &base, &opts)?;
    Ok(Pipeline { map, contraction, collection, scheme })
}

fn hole_from_config(cfg: &RunConfig, pipeline: &Pipeline) -> Result<Hole, CliError> {
    if let Some(ivs) = cfg.hole_intervals()? {
        return Ok(Hole::from_intervals(ivs));
    }
    if let Some(components) = cfg.hole_components()? {
        let coll = pipeline.collection.as_ref().ok_or_else(|| {
            CliError::Config("hole.components requires a nest-based scheme.base".into())
        })?;
        return Ok(build_hole(&pipeline.map, coll, &components)?);
    }
    Ok(Hole::empty())
}

/// `hyp-times`: CSV with columns `x0,n,is_hyperbolic,frequency`.
pub fn run_hyp_times(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let map = cfg.map()?;
    let n_max = cfg.usize_or("hyp.nmax", 40)?;
    let sigma = cfg.f64_or("hyp.sigma", 0.5)?;
    let epsilon = cfg.f64_or("hyp.epsilon", 0.1)?;
    let x0s: Vec<f64> = match cfg.get("hyp.x0") {
        None => vec![0.2],
        Some(s) => s
            .split([',', ';'])
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.trim().parse().map_err(|_| CliError::Config(format!("hyp.x0: bad number `{p}`"))))
            .collect::<Result<_, _>>()?,
    };
    let mut csv = String::from("x0,n,is_hyperbolic,frequency\n");
    for x0 in x0s {
        let rec = detect_hyperbolic_times(&map, x0, n_max, sigma, epsilon)?;
        for n in 1..=n_max {
            let is_hyp = rec.times.contains(&n);
            let freq = hyperbolic_frequency(&rec, n)?;
            csv.push_str(&format!("{x0},{n},{is_hyp},{freq}\n"));
        }
    }
    Ok(CommandOutput {
        stdout: csv.clone(),
        files: vec![("hyp-times.csv".into(), csv)],
    })
}

/// `nest`: shrunken members, certificates and tail bounds as JSON.
pub fn run_nest(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let map = cfg.map()?;
    let contraction = cfg.contraction(&map)?;
    let params = Params::default();
    let balls = cfg.balls()?;
    let epsilon = cfg.f64_or("nest.epsilon", 0.5)?;
    let cutoff = cfg.usize_or("nest.cutoff", 12)?;
    let coll = nested_shrink(&map, &balls, epsilon, cutoff, &contraction, &params)?;
    let report = verify_nested(&map, &coll, cutoff, &contraction, &params)?;
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "balls": coll.balls.iter().map(|&(p, r)| json!({"center": p, "radius": r})).collect::<Vec<_>>(),
        "shrunken": coll.shrunken.iter().map(iv_json).collect::<Vec<_>>(),
        "epsilon": coll.epsilon,
        "cutoff": coll.cutoff,
        "certificates": coll.certificates.iter().map(|c| json!({
            "ball_index": c.ball_index,
            "contains_core": c.contains_core,
            "margin": c.margin,
            "chain_pieces": c.chain_pieces,
            "apriori_bound_ok": c.apriori_bound_ok,
        })).collect::<Vec<_>>(),
        "excluded": coll.excluded,
        "tail_bound": coll.tail_bound,
        "nested_property": {
            "preimages_checked": report.preimages_checked,
            "linked_member_pairs": report.member_violations.len(),
            "linked_cross_order_pairs": report.cross_order_violations.len(),
            "equal_order_overlaps": report.equal_order_overlaps.len(),
            "ok": report.ok,
        },
    });
    let text = pretty(&out);
    Ok(CommandOutput { stdout: text.clone(), files: vec![("nest.json".into(), text)] })
}

/// `induce`: scheme elements, unresolved mass, Markov certificates.
pub fn run_induce(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let pipeline = build_pipeline(cfg)?;
    let params = Params::default();
    let markov = verify_markov(&pipeline.map, &pipeline.scheme, &params)?;
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "base": iv_json(&pipeline.scheme.base),
        "cutoff": pipeline.scheme.cutoff,
        "zooming_mode": pipeline.scheme.zooming_mode,
        "elements": pipeline.scheme.elements.iter().map(|e| json!({
            "endpoints": iv_json(&e.interval),
            "tau": e.tau,
            "branch_word": e.branch_word,
        })).collect::<Vec<_>>(),
        "unresolved_mass": pipeline.scheme.unresolved_mass,
        "certificates": {
            "disjoint_interiors": markov.overlapping_pairs.is_empty(),
            "full_branch": markov.full_branch_failures.is_empty(),
            "homeomorphisms": markov.homeomorphism_failures.is_empty(),
            "cylinder_diameters": markov.cylinder_diameters,
            "diameters_decay": markov.diameters_decay,
            "markov_ok": markov.ok,
        },
    });
    let text = pretty(&out);
    Ok(CommandOutput { stdout: text.clone(), files: vec![("induce.json".into(), text)] })
}

fn bracket_from(cfg: &RunConfig) -> Result<(f64, f64), CliError> {
    let s = cfg.get("equilibrium.bracket").unwrap_or("0.05:3.0");
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("equilibrium.bracket: expected lo:hi, got `{s}`")))?;
    let lo: f64 = a.trim().parse().map_err(|_| CliError::Config("equilibrium.bracket: bad lo".into()))?;
    let hi: f64 = b.trim().parse().map_err(|_| CliError::Config("equilibrium.bracket: bad hi".into()))?;
    Ok((lo, hi))
}

fn shifted_potential(pot: &InducedPotential, p: f64) -> InducedPotential {
    InducedPotential {
        depth1: pot
            .depth1
            .iter()
            .zip(&pot.taus)
            .map(|(c, &t)| c - p * t as f64)
            .collect(),
        taus: pot.taus.clone(),
        masses: pot.masses.clone(),
        variations: pot.variations.clone(),
        depth: pot.depth,
        zero_jacobian_flagged: pot.zero_jacobian_flagged,
    }
}

/// `pressure`: root of the induced-pressure equation plus Gurevich
/// diagnostics of the shifted potential at the root.
pub fn run_pressure(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let pipeline = build_pipeline(cfg)?;
    let params = Params::default();
    let phi = cfg.potential()?;
    let bracket = bracket_from(cfg)?;
    let tol = cfg.f64_or("thermo.tol", 1e-8)?;
    let n_sym = cfg.usize_or("thermo.nsym", 64)?;
    let n_max = cfg.usize_or("thermo.nmax", 12)?;
    let depth = cfg.usize_or("thermo.depth", 2)?;

    let pressure = pressure_solve(&pipeline.map, &pipeline.scheme, &phi, bracket, tol, &params)?;
    let pot = induced_potential(&pipeline.map, &pipeline.scheme, &phi, depth, &params)?;
    let shifted = shifted_potential(&pot, pressure.p_star);
    let est = gurevich_pressure(&shifted, n_sym, n_max, &params)?;
    let gibbs = gibbs_eigendata(&shifted, n_sym, params.tol_eig, &params)?;

    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "p_star": pressure.p_star,
        "bracket": [pressure.bracket.0, pressure.bracket.1],
        "iterations": pressure.iterations,
        "truncation_sizes": pressure.truncation_sizes,
        "pressure_lower_bounds": est.truncation_curve,
        "periodic_estimates": est.periodic_pinned,
        "lambda": gibbs.lambda,
        "residuals": { "eigenfunction": gibbs.residual_h, "conformal": gibbs.residual_m },
        "divergent": est.divergent,
        "variations": pot.variations,
    });
    let text = pretty(&out);
    Ok(CommandOutput { stdout: text.clone(), files: vec![("pressure.json".into(), text)] })
}

/// `equilibrium`: pressure, Abramov data and projected cell masses
/// (JSON + CSV).
pub fn run_equilibrium(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let pipeline = build_pipeline(cfg)?;
    let params = Params::default();
    let phi = cfg.potential()?;
    let bracket = bracket_from(cfg)?;
    let tol = cfg.f64_or("equilibrium.tol", 1e-8)?;
    let n_sym = cfg.usize_or("thermo.nsym", 64)?;
    let grid_depth = cfg.usize_or("equilibrium.grid_depth", 10)?;
    let sym_depth = cfg.usize_or("equilibrium.sym_depth", 2)?;

    let (pressure, eq) = equilibrium_state(
        &pipeline.map,
        &pipeline.scheme,
        &phi,
        bracket,
        n_sym,
        grid_depth,
        sym_depth,
        tol,
        &params,
    )?;

    let cells = dyadic_cells(&pipeline.map, grid_depth);
    let mut csv = String::from("cell_lo,cell_hi,mass\n");
    for (cell, mass) in cells.iter().zip(&eq.projected) {
        csv.push_str(&format!("{},{},{}\n", cell.lo, cell.hi, mass));
    }
    let identity_residual = (eq.entropy + eq.phi_integral - pressure.p_star).abs();
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "p_star": pressure.p_star,
        "tau_integral": eq.tau_integral,
        "entropy_induced": eq.entropy_induced,
        "phi_integral_induced": eq.phi_integral_induced,
        "entropy": eq.entropy,
        "phi_integral": eq.phi_integral,
        "variational_identity_residual": identity_residual,
        "lambda": eq.induced_gibbs.lambda,
        "residuals": {
            "eigenfunction": eq.induced_gibbs.residual_h,
            "conformal": eq.induced_gibbs.residual_m,
        },
        "grid_depth": eq.grid_depth,
        "projected_total": eq.projected.iter().sum::<f64>(),
    });
    let text = pretty(&out);
    Ok(CommandOutput {
        stdout: text.clone(),
        files: vec![
            ("equilibrium.json".into(), text),
            ("equilibrium-cells.csv".into(), csv),
        ],
    })
}

/// `conformal`: spread the conformal measure of `φ − p*` back to the map.
pub fn run_conformal(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let pipeline = build_pipeline(cfg)?;
    let params = Params::default();
    let phi = cfg.potential()?;
    let bracket = bracket_from(cfg)?;
    let tol = cfg.f64_or("equilibrium.tol", 1e-8)?;
    let n_sym = cfg.usize_or("thermo.nsym", 64)?;
    let grid_depth = cfg.usize_or("equilibrium.grid_depth", 8)?;
    let sym_depth = cfg.usize_or("equilibrium.sym_depth", 3)?;
    let exactness = cfg.usize_or("conformal.exactness", 4)?;

    let pressure = pressure_solve(&pipeline.map, &pipeline.scheme, &phi, bracket, tol, &params)?;
    let (pruned, prune_report) = prune_return_compatible(&pipeline.scheme, &params)?;
    let pot = induced_potential(&pipeline.map, &pruned, &phi, 1, &params)?;
    let shifted = shifted_potential(&pot, pressure.p_star);
    let gibbs = gibbs_eigendata(&shifted, n_sym, params.tol_eig, &params)?;
    let res = equilibrium::spread_conformal(
        &pipeline.map,
        &pruned,
        &gibbs,
        &phi,
        pressure.p_star,
        grid_depth,
        sym_depth,
        exactness,
        &params,
    )?;

    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "p_star": pressure.p_star,
        "pruned_elements": prune_report.removed.len(),
        "pieces": res.pieces.iter().map(|(iv, m)| json!({
            "interval": iv_json(iv), "mass": m,
        })).collect::<Vec<_>>(),
        "total_mass": res.total_mass,
        "overlap_max_disagreement": res.overlap_max_disagreement,
        "finiteness_bound": res.finiteness_bound,
        "exactness_time": res.exactness_time,
        "grid_depth": res.grid_depth,
        "normalized_cells": res.normalized_cells,
    });
    let text = pretty(&out);
    Ok(CommandOutput { stdout: text.clone(), files: vec![("conformal.json".into(), text)] })
}

/// `escape`: per-depth survivor masses and the fitted escape rate
/// (JSON + CSV).
pub fn run_escape(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let map = cfg.map()?;
    let params = Params::default();
    let n_max = cfg.usize_or("escape.nmax", 24)?;
    // explicit hole intervals need no scheme; nest components need one
    let hole = if let Some(ivs) = cfg.hole_intervals()? {
        Hole::from_intervals(ivs)
    } else if cfg.get("hole.components").is_some() {
        let pipeline = build_pipeline(cfg)?;
        hole_from_config(cfg, &pipeline)?
    } else {
        Hole::empty()
    };
    let r = escape_rate(&map, &hole, n_max, &params)?;
    let mut csv = String::from("n,mass,log_mass_over_n\n");
    for &(n, mass, s) in &r.per_n {
        csv.push_str(&format!("{n},{mass},{s}\n"));
    }
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "hole": hole.region.pieces().iter().map(iv_json).collect::<Vec<_>>(),
        "rate": if r.rate.is_finite() { json!(r.rate) } else { json!("infinite") },
        "mass_zero_at": r.mass_zero_at,
        "series": r.per_n.iter().map(|&(n, m, s)| json!({
            "n": n, "mass": m, "neg_log_mass_over_n": if s.is_finite() { json!(s) } else { json!("infinite") },
        })).collect::<Vec<_>>(),
    });
    let text = pretty(&out);
    Ok(CommandOutput {
        stdout: text.clone(),
        files: vec![("escape.json".into(), text), ("escape-series.csv".into(), csv)],
    })
}
