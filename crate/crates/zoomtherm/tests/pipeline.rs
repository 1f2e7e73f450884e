//! Cross-module integration: the whole pipeline runs end to end on the
//! built-in families, and independently built schemes agree on what they
//! compute.

use zoomtherm::equilibrium::{equilibrium_state, pressure_solve, PotentialSpec};
use zoomtherm::inducing::{
    first_return_scheme, verify_adapted, verify_markov, FirstReturnOptions,
};
use zoomtherm::interval::Interval;
use zoomtherm::map::MapModel;
use zoomtherm::nested::{build_hole, nested_shrink};
use zoomtherm::thermo::{gurevich_pressure, induced_potential};
use zoomtherm::tol::Params;
use zoomtherm::zooming::{detect_hyperbolic_times, ZoomingContraction};

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn entropy_is_scheme_independent_on_circle_families() {
    let params = Params::default();
    for (map, bases) in [
        (MapModel::doubling(), vec![Interval::open(0.0, 1.0), Interval::open(0.0, 0.5)]),
        (MapModel::shift2(), vec![Interval::open(0.0, 1.0)]),
        (MapModel::tent(), vec![Interval::open(0.0, 1.0)]),
    ] {
        for base in bases {
            let cutoff = if base.len() < 1.0 { 40 } else { 1 };
            let s = first_return_scheme(&map, &base, &FirstReturnOptions::plain(cutoff)).unwrap();
            let p = pressure_solve(&map, &s, &PotentialSpec::Zero, (0.1, 2.0), 1e-8, &params)
                .unwrap();
            assert!(
                (p.p_star - LN2).abs() < 1e-4,
                "{} base {:?}: {}",
                map.name,
                base,
                p.p_star
            );
        }
    }
}

#[test]
fn tripling_has_entropy_log3() {
    let m = MapModel::affine_full(3).unwrap();
    let s = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
        .unwrap();
    let p = pressure_solve(&m, &s, &PotentialSpec::Zero, (0.5, 2.0), 1e-9, &Params::default())
        .unwrap();
    assert!((p.p_star - 3f64.ln()).abs() < 1e-6);
}

/// Equilibrium states from two different base intervals agree on dyadic cell
/// masses (uniqueness at desk scale for the strongly transitive doubling map).
#[test]
fn equilibria_from_different_bases_agree() {
    let params = Params::default();
    let m = MapModel::doubling();
    let full = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
        .unwrap();
    let half = first_return_scheme(&m, &Interval::open(0.0, 0.5), &FirstReturnOptions::plain(40))
        .unwrap();
    for (phi, bracket) in [
        (PotentialSpec::Zero, (0.2, 1.5)),
        (PotentialSpec::Geometric { t: -2.0 }, (1.8, 2.4)),
    ] {
        let (_, eq_full) =
            equilibrium_state(&m, &full, &phi, bracket, 2, 5, 6, 1e-9, &params).unwrap();
        let (_, eq_half) =
            equilibrium_state(&m, &half, &phi, bracket, 40, 5, 3, 1e-9, &params).unwrap();
        for (a, b) in eq_full.projected.iter().zip(&eq_half.projected) {
            assert!(
                (a - b).abs() < 10.0 * params.tol_meas,
                "{phi:?}: cell masses {a} vs {b}"
            );
        }
    }
}

#[test]
fn quadratic_full_pipeline() {
    let params = Params::default();
    let m = MapModel::quadratic(2.0).unwrap();
    let sigma = 0.9;

    // hyperbolic times exist with positive frequency along a generic orbit
    let rec = detect_hyperbolic_times(&m, 0.3, 60, sigma, 0.1).unwrap();
    assert!(rec.times.len() >= 3, "times: {:?}", rec.times);

    // nested ball, induced scheme, Markov verification
    let c = ZoomingContraction::exponential(sigma, 0.25).unwrap();
    let coll = nested_shrink(&m, &[(1.0 / 3.0, 0.06)], 0.5, 10, &c, &params).unwrap();
    assert!(coll.certificates[0].contains_core);
    let s = first_return_scheme(
        &m,
        &coll.shrunken[0],
        &FirstReturnOptions::zooming(16, c.clone()),
    )
    .unwrap();
    assert!(s.elements.len() > 100, "elements: {}", s.elements.len());
    let markov = verify_markov(&m, &s, &params).unwrap();
    assert!(markov.ok, "{markov:?}");

    // unresolved mass decreases with the cutoff
    let s_shallow = first_return_scheme(
        &m,
        &coll.shrunken[0],
        &FirstReturnOptions::zooming(11, c.clone()),
    )
    .unwrap();
    assert!(s.unresolved_mass < s_shallow.unresolved_mass);

    // pressure of φ≡0 approximates the topological entropy log 2 from below
    let p = pressure_solve(&m, &s, &PotentialSpec::Zero, (0.1, 1.5), 1e-8, &params).unwrap();
    assert!(p.p_star <= LN2 + 1e-6, "estimate exceeds entropy: {}", p.p_star);
    assert!((p.p_star - LN2).abs() < 0.2, "estimate far from entropy: {}", p.p_star);

    // the variational identity holds for the truncated equilibrium
    let (pr, eq) =
        equilibrium_state(&m, &s, &PotentialSpec::Zero, (0.1, 1.5), 256, 4, 2, 1e-9, &params)
            .unwrap();
    assert!(
        (eq.entropy + eq.phi_integral - pr.p_star).abs() < 1e-3,
        "identity residual {}",
        (eq.entropy + eq.phi_integral - pr.p_star).abs()
    );
}

#[test]
fn adapted_scheme_with_hole_carries_through_thermo() {
    // build the hole from one nested ball, induce on the other, and push the
    // adapted scheme through the thermodynamic stack
    let params = Params::default();
    let m = MapModel::doubling();
    let c = ZoomingContraction::exponential(0.5, m.default_delta).unwrap();
    let coll = nested_shrink(
        &m,
        &[(1.0 / 3.0, 0.04), (2.0 / 3.0, 0.04)],
        0.5,
        12,
        &c,
        &params,
    )
    .unwrap();
    let hole = build_hole(&m, &coll, &[1]).unwrap();
    let s = first_return_scheme(
        &m,
        &coll.shrunken[0],
        &FirstReturnOptions::zooming(12, c.clone()),
    )
    .unwrap();
    let adapted = verify_adapted(&s, &hole, &params).unwrap();
    assert!(adapted.ok);

    let pot = induced_potential(&m, &s, &PotentialSpec::Zero, 2, &params).unwrap();
    let est = gurevich_pressure(&pot, s.elements.len(), 8, &params).unwrap();
    // the scheme codes only orbits that keep returning to the base, so its
    // zero-potential pressure is a finite lower estimate dominated by log 2
    assert!(est.log_lambda.is_finite() || est.divergent);
    for w in est.truncation_curve.windows(2) {
        assert!(w[1].1 >= w[0].1 - 1e-12);
    }
}

#[test]
fn survivor_set_of_nested_hole_keeps_positive_mass() {
    let params = Params::default();
    let m = MapModel::doubling();
    let c = ZoomingContraction::exponential(0.5, m.default_delta).unwrap();
    let coll = nested_shrink(
        &m,
        &[(1.0 / 3.0, 0.04), (2.0 / 3.0, 0.04)],
        0.5,
        12,
        &c,
        &params,
    )
    .unwrap();
    let hole = build_hole(&m, &coll, &[0]).unwrap();
    let mut last = f64::INFINITY;
    for n in [0usize, 2, 4, 8] {
        let s = zoomtherm::nested::survivor_iterate(&m, &hole, n, &params).unwrap();
        assert!(s.mass <= last + 1e-12);
        assert!(s.mass > 0.3, "mass {}", s.mass);
        last = s.mass;
    }
    let rate = zoomtherm::equilibrium::escape_rate(&m, &hole, 16, &params).unwrap();
    assert!(rate.rate > 0.0 && rate.rate < LN2);
}
