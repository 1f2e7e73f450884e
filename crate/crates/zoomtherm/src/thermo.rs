//! Thermodynamics of the countable full shift coded by an induced scheme.
//!
//! Potentials are induced by Birkhoff sums over each element's pass and
//! approximated as locally constant at a working cylinder depth. On a full
//! shift the depth-1 transfer operator is the rank-one matrix
//! `L_(ba) = e^(c_a)`, so the leading eigenvalue is `λ = Σ_a e^(c_a)`, the
//! eigenfunction is constant and the conformal measure has depth-1 weights
//! `m_a = e^(c_a)/λ`. Power iteration is still run generically, because the
//! optional depth-2 lift has genuine spectral structure.

use crate::equilibrium::PotentialSpec;
use crate::error::{Error, Result};
use crate::inducing::{cylinder_interval, InducedScheme};
use crate::map::MapModel;
use crate::tol::Params;
use serde::Serialize;
use std::collections::BTreeMap;

/// A potential induced on the shift: depth-1 coefficients (Birkhoff sums at
/// element midpoints), inducing times, and empirical cylinder variations.
#[derive(Clone, Debug, Serialize)]
pub struct InducedPotential {
    /// `Φ̄(C_a) = Σ_{j<τ_a} φ(f^j x_a)` at the element midpoint.
    pub depth1: Vec<f64>,
    pub taus: Vec<usize>,
    /// Reference mass of each element (used to rank truncations).
    pub masses: Vec<f64>,
    /// Empirical variations `V_n` over sampled depth-n cylinders, `n ≤ depth`.
    pub variations: Vec<f64>,
    pub depth: usize,
    /// Set when a geometric potential hit a vanishing Jacobian along an
    /// itinerary; the value 0 is used there by convention.
    pub zero_jacobian_flagged: bool,
}

impl InducedPotential {
    pub fn alphabet_len(&self) -> usize {
        self.depth1.len()
    }

    /// Symbols ranked by reference mass (largest first, then smallest
    /// inducing time, then index) — the truncation order.
    pub fn ranked_symbols(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.depth1.len()).collect();
        idx.sort_by(|&a, &b| {
            self.masses[b]
                .total_cmp(&self.masses[a])
                .then(self.taus[a].cmp(&self.taus[b]))
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Birkhoff sum of `phi` over one element's pass, starting at `x`.
pub(crate) fn birkhoff_over_element(
    map: &MapModel,
    word: &[usize],
    phi: &PotentialSpec,
    x: f64,
) -> Result<(f64, bool)> {
    let mut sum = 0.0;
    let mut flagged = false;
    let mut cur = x;
    for &b in word {
        let (v, flag) = phi.eval_flagged(map, cur)?;
        sum += v;
        flagged |= flag;
        cur = map.phase.reduce(map.branches[b].forward_unrolled(cur));
    }
    Ok((sum, flagged))
}

/// Induce `phi` on the scheme: per-element Birkhoff sums at midpoints plus
/// empirical variations up to the working depth.
pub fn induced_potential(
    map: &MapModel,
    scheme: &InducedScheme,
    phi: &PotentialSpec,
    depth: usize,
    params: &Params,
) -> Result<InducedPotential> {
    let mut depth1 = Vec::with_capacity(scheme.elements.len());
    let mut flagged = false;
    for e in &scheme.elements {
        let (sum, f) = birkhoff_over_element(map, &e.branch_word, phi, e.interval.mid())?;
        depth1.push(sum);
        flagged |= f;
    }
    let taus: Vec<usize> = scheme.elements.iter().map(|e| e.tau).collect();
    let masses: Vec<f64> = scheme.elements.iter().map(|e| e.interval.len()).collect();

    // empirical variations over a mass-capped sub-alphabet
    let mut ranked: Vec<usize> = (0..scheme.elements.len()).collect();
    ranked.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let cap = ranked.len().min(8);
    let sub: Vec<usize> = ranked[..cap].to_vec();
    let mut variations = Vec::with_capacity(depth);
    let mut words: Vec<Vec<usize>> = sub.iter().map(|&a| vec![a]).collect();
    for _n in 1..=depth {
        let mut vmax: f64 = 0.0;
        for w in &words {
            let iv = cylinder_interval(map, scheme, w, params.tol_inv)?;
            let e0 = &scheme.elements[w[0]];
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for x in iv.samples(6) {
                let (v, _) = birkhoff_over_element(map, &e0.branch_word, phi, x)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            vmax = vmax.max(hi - lo);
        }
        variations.push(vmax);
        if words.len() * sub.len() > 40_000 {
            break;
        }
        let mut next = Vec::with_capacity(words.len() * sub.len());
        for w in &words {
            for &a in &sub {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        words = next;
    }
    Ok(InducedPotential {
        depth1,
        taus,
        masses,
        variations,
        depth,
        zero_jacobian_flagged: flagged,
    })
}

/// Fit a geometric decay ratio to the empirical variations by regressing
/// `log V_n` on `n` (entries below 1e-300 are skipped).
pub fn fit_variation_ratio(variations: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = variations
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 1e-300)
        .map(|(i, &v)| ((i + 1) as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Some(slope.exp())
}

/// Gurevich pressure estimates on a truncated alphabet.
#[derive(Clone, Debug, Serialize)]
pub struct PressureEstimate {
    /// Log of the leading eigenvalue at the full requested truncation
    /// (`+∞` when the divergence heuristic fires).
    pub log_lambda: f64,
    /// `(N, log λ_N)` along a nested family of truncations; nondecreasing by
    /// the finite-subsystem characterization.
    pub truncation_curve: Vec<(usize, f64)>,
    /// `(n, (1/n)·log Σ_(σⁿx=x, x₀=a) e^(Φ̄_n))`, the periodic-point sums
    /// pinned at the anchor symbol; converges to the pressure at rate O(1/n).
    pub periodic_pinned: Vec<(usize, f64)>,
    /// `(n, (1/n)·log Σ_(σⁿx=x) e^(Φ̄_n))`, the unpinned trace form; exact
    /// for depth-1 potentials.
    pub periodic_trace: Vec<(usize, f64)>,
    pub anchor_symbol: usize,
    pub divergent: bool,
    pub truncation_size: usize,
}

/// Estimate the Gurevich pressure of the induced potential via periodic-point
/// sums and the truncated transfer-matrix eigenvalue.
pub fn gurevich_pressure(
    pot: &InducedPotential,
    n_sym: usize,
    n_max: usize,
    params: &Params,
) -> Result<PressureEstimate> {
    if pot.alphabet_len() == 0 {
        return Err(Error::Precondition("empty alphabet".into()));
    }
    let ranked = pot.ranked_symbols();
    let keep = ranked.len().min(n_sym.max(1));
    let retained = &ranked[..keep];
    if retained.iter().any(|&a| !pot.depth1[a].is_finite()) {
        return Err(Error::Precondition(
            "potential must be finite on retained cylinders".into(),
        ));
    }

    let log_lambda_at = |k: usize| -> f64 {
        // stabilized log-sum-exp over the first k retained symbols
        let cs: Vec<f64> = ranked[..k].iter().map(|&a| pot.depth1[a]).collect();
        let mx = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        mx + cs.iter().map(|c| (c - mx).exp()).sum::<f64>().ln()
    };

    let mut sizes = vec![keep];
    for d in [4usize, 2] {
        if keep / d >= 1 {
            sizes.push(keep / d);
        }
    }
    sizes.sort_unstable();
    sizes.dedup();
    let truncation_curve: Vec<(usize, f64)> =
        sizes.iter().map(|&k| (k, log_lambda_at(k))).collect();

    // divergence heuristic: doubling the truncation twice keeps adding more
    // than the configured gap without decelerating
    let mut divergent = false;
    if 4 * keep <= ranked.len() {
        let l1 = log_lambda_at(keep);
        let l2 = log_lambda_at(2 * keep);
        let l4 = log_lambda_at(4 * keep);
        let (g1, g2) = (l2 - l1, l4 - l2);
        if g1 > params.divergence_gap && g2 > params.divergence_gap && g2 > 0.9 * g1 {
            divergent = true;
        }
    }
    let log_lambda = if divergent { f64::INFINITY } else { log_lambda_at(keep) };

    // periodic-point sums via scaled iteration of the rank-one matrix
    let anchor = retained[0];
    let coeffs: Vec<f64> = retained.iter().map(|&a| pot.depth1[a]).collect();
    let weights: Vec<f64> = coeffs.iter().map(|c| c.exp()).collect();
    let mut periodic_pinned = Vec::new();
    let mut periodic_trace = Vec::new();
    if !divergent {
        for n in 1..=n_max {
            // w = Aⁿ e_anchor with running log-scale
            let mut w = vec![0.0; keep];
            w[0] = 1.0; // anchor is retained[0]
            let mut log_scale = 0.0;
            for _ in 0..n {
                let s: f64 = weights.iter().zip(&w).map(|(e, v)| e * v).sum();
                let mx = s.abs().max(1e-300);
                w = vec![s / mx; keep];
                log_scale += mx.ln();
            }
            periodic_pinned.push((n, (w[0].ln() + log_scale) / n as f64));
            // trace form: Σ_a (Aⁿ)_(aa); for the rank-one depth-1 matrix the
            // column iteration already gives (Aⁿ e_a)_b independent of b≠ stage,
            // so assemble the trace from one more weighted sum
            let mut tr = 0.0;
            for (ai, _) in retained.iter().enumerate() {
                let mut v = vec![0.0; keep];
                v[ai] = 1.0;
                let mut ls = 0.0;
                for _ in 0..n {
                    let s: f64 = weights.iter().zip(&v).map(|(e, u)| e * u).sum();
                    let mx = s.abs().max(1e-300);
                    v = vec![s / mx; keep];
                    ls += mx.ln();
                }
                tr += v[ai] * ls.exp();
            }
            periodic_trace.push((n, tr.ln() / n as f64));
        }
    }

    Ok(PressureEstimate {
        log_lambda,
        truncation_curve,
        periodic_pinned,
        periodic_trace,
        anchor_symbol: anchor,
        divergent,
        truncation_size: keep,
    })
}

/// A measure on symbol space given by weights on cylinders up to a depth.
#[derive(Clone, Debug, Serialize)]
pub struct CylinderMeasure {
    pub depth: usize,
    pub weights: BTreeMap<Vec<u32>, f64>,
}

impl CylinderMeasure {
    /// Materialize the product (Bernoulli) measure of depth-1 weights.
    pub fn bernoulli(weights: &[f64], depth: usize, max_words: usize) -> Result<CylinderMeasure> {
        let k = weights.len();
        let mut total_words = 0usize;
        let mut map = BTreeMap::new();
        let mut level: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), 1.0)];
        for _ in 1..=depth {
            let mut next = Vec::with_capacity(level.len() * k);
            for (w, mass) in &level {
                for (a, &wa) in weights.iter().enumerate() {
                    let mut v = w.clone();
                    v.push(a as u32);
                    next.push((v, mass * wa));
                }
            }
            total_words += next.len();
            if total_words > max_words {
                return Err(Error::BlowupGuard { max: max_words });
            }
            for (w, mass) in &next {
                map.insert(w.clone(), *mass);
            }
            level = next;
        }
        Ok(CylinderMeasure { depth, weights: map })
    }

    pub fn weight(&self, word: &[u32]) -> Option<f64> {
        self.weights.get(word).copied()
    }

    pub fn total(&self) -> f64 {
        self.weights
            .iter()
            .filter(|(w, _)| w.len() == 1)
            .map(|(_, &m)| m)
            .sum()
    }

    /// Largest additivity violation `|m(w) − Σ_a m(wa)|` across depths.
    pub fn additivity_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for (w, &mass) in &self.weights {
            if w.len() >= self.depth {
                continue;
            }
            let child_sum: f64 = self
                .weights
                .iter()
                .filter(|(v, _)| v.len() == w.len() + 1 && v.starts_with(w))
                .map(|(_, &m)| m)
                .sum();
            defect = defect.max((mass - child_sum).abs());
        }
        defect
    }
}

/// Leading eigendata of the truncated depth-1 transfer operator.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsData {
    pub lambda: f64,
    pub log_lambda: f64,
    /// Retained element indices, in truncation (mass) order.
    pub alphabet: Vec<usize>,
    /// Inducing times per retained symbol.
    pub taus: Vec<usize>,
    /// Depth-1 potential coefficients per retained symbol.
    pub coeffs: Vec<f64>,
    /// Eigenfunction values per retained symbol, scaled so `∫ h dm = 1`.
    pub h: Vec<f64>,
    /// Conformal-measure weights per retained symbol, a probability vector.
    pub m: Vec<f64>,
    pub residual_h: f64,
    pub residual_m: f64,
    pub iterations: usize,
    pub truncation_size: usize,
}

impl GibbsData {
    /// Depth-1 weights of the invariant Gibbs measure `μ = h·m`, normalized.
    pub fn mu_weights(&self) -> Vec<f64> {
        let total: f64 = self.h.iter().zip(&self.m).map(|(h, m)| h * m).sum();
        self.h
            .iter()
            .zip(&self.m)
            .map(|(h, m)| h * m / total)
            .collect()
    }

    /// Materialize the conformal measure as a product cylinder measure.
    pub fn cylinder_measure(&self, depth: usize, max_words: usize) -> Result<CylinderMeasure> {
        CylinderMeasure::bernoulli(&self.m, depth, max_words)
    }
}

fn power_iterate(
    dim: usize,
    matvec: impl Fn(&[f64]) -> Vec<f64>,
    ell_one: bool,
    tol: f64,
    max_iters: usize,
) -> Result<(f64, Vec<f64>, f64, usize)> {
    let norm = |v: &[f64]| -> f64 {
        if ell_one {
            v.iter().map(|x| x.abs()).sum()
        } else {
            v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
        }
    };
    let mut v = vec![1.0 / dim as f64; dim];
    let mut lambda;
    for it in 1..=max_iters {
        let w = matvec(&v);
        let nw = norm(&w);
        if nw == 0.0 {
            return Err(Error::Numeric("transfer operator annihilated the iterate".into()));
        }
        let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
        lambda = nw / norm(&v);
        // residual of the eigen equation at the current iterate
        let resid = {
            let lv = matvec(&next);
            let diff: Vec<f64> = lv.iter().zip(&next).map(|(a, b)| a - lambda * b).collect();
            norm(&diff)
        };
        v = next;
        if resid < tol {
            return Ok((lambda, v, resid, it));
        }
    }
    Err(Error::NonConvergence { iters: max_iters, residual: f64::NAN })
}

/// Compute `λ`, the eigenfunction `h` and the conformal weights `m` of the
/// truncated depth-1 transfer operator by power iteration on the operator and
/// its transpose.
pub fn gibbs_eigendata(
    pot: &InducedPotential,
    n_sym: usize,
    tol_eig: f64,
    params: &Params,
) -> Result<GibbsData> {
    let ranked = pot.ranked_symbols();
    let keep = ranked.len().min(n_sym.max(1));
    let alphabet: Vec<usize> = ranked[..keep].to_vec();
    let coeffs: Vec<f64> = alphabet.iter().map(|&a| pot.depth1[a]).collect();
    let taus: Vec<usize> = alphabet.iter().map(|&a| pot.taus[a]).collect();
    let weights: Vec<f64> = coeffs.iter().map(|c| c.exp()).collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Precondition("potential weights overflow".into()));
    }

    // L h (x) = Σ_a e^(c_a) h(a x): constant in the leading coordinate
    let forward = |v: &[f64]| -> Vec<f64> {
        let s: f64 = weights.iter().zip(v).map(|(w, h)| w * h).sum();
        vec![s; v.len()]
    };
    // (Lᵀ m)_a = e^(c_a) Σ_b m_b
    let transpose = |v: &[f64]| -> Vec<f64> {
        let s: f64 = v.iter().sum();
        weights.iter().map(|w| w * s).collect()
    };

    let (lambda_h, mut h, _, it_h) = power_iterate(keep, forward, false, tol_eig, params.max_iters)?;
    let (lambda_m, mut m, _, it_m) = power_iterate(keep, transpose, true, tol_eig, params.max_iters)?;
    let lambda = 0.5 * (lambda_h + lambda_m);

    // normalize: m a probability, then scale h so ∫ h dm = 1
    let msum: f64 = m.iter().sum();
    for x in &mut m {
        *x /= msum;
    }
    let hm: f64 = h.iter().zip(&m).map(|(h, m)| h * m).sum();
    for x in &mut h {
        *x /= hm;
    }

    // residuals after normalization
    let lh = forward(&h);
    let residual_h = lh
        .iter()
        .zip(&h)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0f64, f64::max);
    let ltm = transpose(&m);
    let residual_m = ltm
        .iter()
        .zip(&m)
        .map(|(a, b)| (a - lambda * b).abs())
        .sum();

    Ok(GibbsData {
        lambda,
        log_lambda: lambda.ln(),
        alphabet,
        taus,
        coeffs,
        h,
        m,
        residual_h,
        residual_m,
        iterations: it_h + it_m,
        truncation_size: keep,
    })
}

/// Outcome of the Gibbs-ratio check.
#[derive(Clone, Debug, Serialize)]
pub struct GibbsReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `K = max(ratio_max, 1/ratio_min)`.
    pub k_constant: f64,
    pub cylinders_checked: usize,
}

/// Check `K⁻¹ ≤ μ(C_n) / exp(Φ̄_n(C) − n·log λ) ≤ K` over cylinders up to
/// the given depth, with `μ = h·m` at depth-1 coefficients.
pub fn verify_gibbs(data: &GibbsData, depth: usize, max_words: usize) -> Result<GibbsReport> {
    let k = data.m.len();
    let mu = data.mu_weights();
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let mut checked = 0usize;
    let mut level: Vec<(usize, f64, f64)> = (0..k)
        .map(|a| (a, mu[a], data.coeffs[a]))
        .collect(); // (last symbol, mass, Birkhoff sum)
    for n in 1..=depth {
        for &(_, mass, birkhoff) in &level {
            let gibbs = (birkhoff - n as f64 * data.log_lambda).exp();
            let ratio = mass / gibbs;
            ratio_min = ratio_min.min(ratio);
            ratio_max = ratio_max.max(ratio);
            checked += 1;
        }
        if n == depth {
            break;
        }
        if level.len() * k > max_words {
            return Err(Error::BlowupGuard { max: max_words });
        }
        let mut next = Vec::with_capacity(level.len() * k);
        for &(_, mass, birkhoff) in &level {
            for b in 0..k {
                // μ(C_(w b)) = μ(C_w)·m_b for the depth-1 product structure
                next.push((b, mass * data.m[b], birkhoff + data.coeffs[b]));
            }
        }
        level = next;
    }
    Ok(GibbsReport {
        ratio_min,
        ratio_max,
        k_constant: ratio_max.max(1.0 / ratio_min),
        cylinders_checked: checked,
    })
}

/// Outcome of the conformality check of a cylinder measure.
#[derive(Clone, Debug, Serialize)]
pub struct ConformalReport {
    /// `max |m(C_aw) − e^(c_a − log λ)·m(C_w)|` over words of depth ≤ D.
    pub max_residual: f64,
    pub checked: usize,
    pub ok: bool,
}

/// Verify that a cylinder measure transforms conformally: prepending a
/// symbol multiplies the mass by `e^(c_a − log λ)`.
pub fn verify_conformal(
    m: &CylinderMeasure,
    coeffs: &[f64],
    log_lambda: f64,
    depth: usize,
    tol_meas: f64,
) -> ConformalReport {
    let mut max_residual: f64 = 0.0;
    let mut checked = 0usize;
    for (w, &mass) in &m.weights {
        if w.len() < 2 || w.len() > depth {
            continue;
        }
        let a = w[0] as usize;
        let tail = &w[1..];
        let Some(tail_mass) = m.weight(tail) else { continue };
        let predicted = (coeffs[a] - log_lambda).exp() * tail_mass;
        max_residual = max_residual.max((mass - predicted).abs());
        checked += 1;
    }
    ConformalReport { max_residual, checked, ok: max_residual <= tol_meas }
}

/// Conformality residual measured against the *true* Birkhoff values at
/// cylinder centers rather than the depth-1 coefficients; this is the
/// quantity that shrinks when the locally-constant approximation is refined.
pub fn conformal_residual_true(
    map: &MapModel,
    scheme: &InducedScheme,
    phi: &PotentialSpec,
    masses: &dyn Fn(&[usize]) -> Option<f64>,
    alphabet: &[usize],
    log_lambda: f64,
    depth: usize,
    params: &Params,
) -> Result<f64> {
    let mut max_residual: f64 = 0.0;
    let mut words: Vec<Vec<usize>> = alphabet.iter().map(|&a| vec![a]).collect();
    for _ in 2..=depth.max(2) {
        let mut next = Vec::with_capacity(words.len() * alphabet.len());
        for w in &words {
            for &a in alphabet {
                let mut v = vec![a];
                v.extend_from_slice(w);
                next.push(v);
            }
        }
        for w in &next {
            let (Some(mass), Some(tail_mass)) = (masses(w), masses(&w[1..])) else {
                continue;
            };
            let iv = cylinder_interval(map, scheme, w, params.tol_inv)?;
            let (birkhoff, _) =
                birkhoff_over_element(map, &scheme.elements[w[0]].branch_word, phi, iv.mid())?;
            let predicted = (birkhoff - log_lambda).exp() * tail_mass;
            max_residual = max_residual.max((mass - predicted).abs());
        }
        words = next;
        if words.len() * alphabet.len() > 40_000 {
            break;
        }
    }
    Ok(max_residual)
}

/// Eigendata of the depth-2 (pair) lift of the transfer operator.
#[derive(Clone, Debug, Serialize)]
pub struct Depth2Gibbs {
    /// Retained element indices (same rank order as the depth-1 truncation).
    pub alphabet: Vec<usize>,
    /// Coefficients `Φ₂(a,b)` at the centers of 2-cylinders, row-major.
    pub coeffs2: Vec<f64>,
    pub lambda: f64,
    pub log_lambda: f64,
    /// Pair weights `m₂(a,b)`, a probability vector (row-major).
    pub m2: Vec<f64>,
    pub residual_m: f64,
    pub iterations: usize,
}

impl Depth2Gibbs {
    /// Mass of a cylinder word under the pair measure: telescoping product of
    /// `e^(Φ₂ − log λ)` into the final pair weight.
    pub fn word_mass(&self, word: &[usize]) -> Option<f64> {
        let k = self.alphabet.len();
        let pos = |a: usize| self.alphabet.iter().position(|&x| x == a);
        match word.len() {
            0 => None,
            1 => {
                let a = pos(word[0])?;
                Some((0..k).map(|b| self.m2[a * k + b]).sum())
            }
            _ => {
                let mut mass_exp = 0.0;
                for i in 0..word.len() - 2 {
                    let (a, b) = (pos(word[i])?, pos(word[i + 1])?);
                    mass_exp += self.coeffs2[a * k + b] - self.log_lambda;
                }
                let (a, b) = (pos(word[word.len() - 2])?, pos(word[word.len() - 1])?);
                Some(mass_exp.exp() * self.m2[a * k + b])
            }
        }
    }
}

/// Power iteration on the depth-2 lift: states are 2-cylinders `(a,b)` with
/// coefficient `Φ₂(a,b)` evaluated at the pair-cylinder center.
pub fn gibbs_eigendata_depth2(
    map: &MapModel,
    scheme: &InducedScheme,
    phi: &PotentialSpec,
    pot: &InducedPotential,
    n_sym: usize,
    tol_eig: f64,
    params: &Params,
) -> Result<Depth2Gibbs> {
    let ranked = pot.ranked_symbols();
    let keep = ranked.len().min(n_sym.max(1));
    let alphabet: Vec<usize> = ranked[..keep].to_vec();
    let k = keep;
    let mut coeffs2 = vec![0.0; k * k];
    for (ai, &a) in alphabet.iter().enumerate() {
        for (bi, &b) in alphabet.iter().enumerate() {
            let iv = cylinder_interval(map, scheme, &[a, b], params.tol_inv)?;
            let (v, _) =
                birkhoff_over_element(map, &scheme.elements[a].branch_word, phi, iv.mid())?;
            coeffs2[ai * k + bi] = v;
        }
    }
    let weights2: Vec<f64> = coeffs2.iter().map(|c| c.exp()).collect();

    // (L₂ᵀ m)(a,b) = e^(Φ₂(a,b)) Σ_c m(b,c)
    let transpose = |v: &[f64]| -> Vec<f64> {
        let mut row_sums = vec![0.0; k];
        for b in 0..k {
            for c in 0..k {
                row_sums[b] += v[b * k + c];
            }
        }
        let mut out = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                out[a * k + b] = weights2[a * k + b] * row_sums[b];
            }
        }
        out
    };

    let (lambda, mut m2, residual_m, iterations) =
        power_iterate(k * k, transpose, true, tol_eig, params.max_iters)?;
    let total: f64 = m2.iter().sum();
    for x in &mut m2 {
        *x /= total;
    }

    Ok(Depth2Gibbs {
        alphabet,
        coeffs2,
        lambda,
        log_lambda: lambda.ln(),
        m2,
        residual_m,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inducing::{first_return_scheme, FirstReturnOptions};
    use crate::interval::Interval;
    use crate::map::MapModel;

    fn full_shift_scheme() -> (MapModel, InducedScheme) {
        let m = MapModel::doubling();
        let s = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
            .unwrap();
        (m, s)
    }

    fn half_base_scheme(cutoff: usize) -> (MapModel, InducedScheme) {
        let m = MapModel::doubling();
        let s = first_return_scheme(
            &m,
            &Interval::open(0.0, 0.5),
            &FirstReturnOptions::plain(cutoff),
        )
        .unwrap();
        (m, s)
    }

    #[test]
    fn constant_potential_has_zero_variation() {
        let (m, s) = full_shift_scheme();
        let phi = PotentialSpec::constant(0.7);
        let pot = induced_potential(&m, &s, &phi, 4, &Params::default()).unwrap();
        for c in &pot.depth1 {
            assert!((c - 0.7).abs() < 1e-12);
        }
        for v in &pot.variations {
            assert!(*v < 1e-12);
        }
    }

    #[test]
    fn tau_potential_is_exact_on_dyadic_scheme() {
        let (m, s) = half_base_scheme(12);
        let phi = PotentialSpec::constant(-(2f64.ln()));
        let pot = induced_potential(&m, &s, &phi, 3, &Params::default()).unwrap();
        for (c, e) in pot.depth1.iter().zip(&s.elements) {
            assert!((c + e.tau as f64 * 2f64.ln()).abs() < 1e-10);
        }
        for v in &pot.variations {
            assert!(*v < 1e-10);
        }
    }

    #[test]
    fn geometric_potential_matches_log_derivative_sum() {
        let (m, s) = half_base_scheme(8);
        let phi = PotentialSpec::Geometric { t: -2.0 };
        let pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        for (c, e) in pot.depth1.iter().zip(&s.elements) {
            // φ_t = −t·log|f′| = 2·log 2 per step
            assert!((c - e.tau as f64 * 2.0 * 2f64.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn two_symbol_zero_potential_pressure_is_log2() {
        let (m, s) = full_shift_scheme();
        let pot = induced_potential(&m, &s, &PotentialSpec::Zero, 2, &Params::default()).unwrap();
        let est = gurevich_pressure(&pot, 2, 12, &Params::default()).unwrap();
        assert!((est.log_lambda - 2f64.ln()).abs() < 1e-12);
        assert!(!est.divergent);
        // trace form is exact for depth-1 potentials
        for &(_, v) in &est.periodic_trace {
            assert!((v - 2f64.ln()).abs() < 1e-11);
        }
        // pinned form converges at rate O(1/n): here c_a = 0, so
        // p_n = (n−1)/n · log 2 exactly
        for &(n, v) in &est.periodic_pinned {
            let expect = (n as f64 - 1.0) / n as f64 * 2f64.ln();
            assert!((v - expect).abs() < 1e-11, "n={n}: {v} vs {expect}");
        }
    }

    #[test]
    fn two_symbol_asymmetric_pressure_matches_brute_force() {
        // depth-1 values (0, −1): P_G = log(1 + e^−1); oracle enumerates all
        // periodic words pinned at each anchor for n ≤ 12
        let (m, s) = full_shift_scheme();
        let phi = PotentialSpec::Geometric { t: 0.0 };
        let mut pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        pot.depth1 = vec![0.0, -1.0];
        let est = gurevich_pressure(&pot, 2, 12, &Params::default()).unwrap();
        let lambda = 1.0 + (-1.0f64).exp();
        assert!((est.log_lambda - lambda.ln()).abs() < 1e-12);

        let anchor_local = 0usize; // ranked order keeps symbol 0 first (equal masses)
        for &(n, v) in &est.periodic_pinned {
            // brute force over all words of length n with x₀ = anchor
            let mut total = 0.0;
            let count = 2usize.pow(n as u32 - 1);
            for wbits in 0..count {
                let mut word = vec![anchor_local];
                for i in 0..n - 1 {
                    word.push((wbits >> i) & 1);
                }
                let birkhoff: f64 = word.iter().map(|&a| pot.depth1[a]).sum();
                total += birkhoff.exp();
            }
            assert!(
                (v - total.ln() / n as f64).abs() < 1e-10,
                "pinned sum mismatch at n={n}"
            );
            // and the closed form e^(c_a)·λ^(n−1)
            let closed = (pot.depth1[0] + (n as f64 - 1.0) * lambda.ln()) / n as f64;
            assert!((v - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn truncation_curve_is_monotone() {
        let (m, s) = half_base_scheme(32);
        let phi = PotentialSpec::constant(-(2f64.ln()));
        let pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        let est = gurevich_pressure(&pot, 32, 6, &Params::default()).unwrap();
        for w in est.truncation_curve.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-15, "not monotone: {:?}", est.truncation_curve);
        }
        // Σ_τ e^(−τ·log 2) = 1 − 2^(−32): pressure ≈ 0
        assert!(est.log_lambda.abs() < 1e-9);
    }

    #[test]
    fn zero_potential_on_countable_alphabet_diverges() {
        let (m, s) = half_base_scheme(64);
        let pot = induced_potential(&m, &s, &PotentialSpec::Zero, 2, &Params::default()).unwrap();
        let est = gurevich_pressure(&pot, 8, 4, &Params::default()).unwrap();
        assert!(est.divergent);
        assert!(est.log_lambda.is_infinite());
    }

    #[test]
    fn rank_one_eigendata_closed_form() {
        let (m, s) = full_shift_scheme();
        let phi = PotentialSpec::Geometric { t: 0.0 };
        let mut pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        pot.depth1 = vec![0.3, -0.4];
        let g = gibbs_eigendata(&pot, 2, 1e-12, &Params::default()).unwrap();
        let lambda = 0.3f64.exp() + (-0.4f64).exp();
        assert!((g.lambda - lambda).abs() < 1e-12);
        assert!((g.m[0] - 0.3f64.exp() / lambda).abs() < 1e-12);
        assert!((g.m[1] - (-0.4f64).exp() / lambda).abs() < 1e-12);
        // h is constant ≡ 1 after the ∫h dm = 1 normalization
        for h in &g.h {
            assert!((h - 1.0).abs() < 1e-12);
        }
        assert!(g.residual_h < 1e-10);
        assert!(g.residual_m < 1e-10);
    }

    #[test]
    fn uniform_potential_gives_uniform_measure() {
        let m = MapModel::affine_full(5).unwrap();
        let s = first_return_scheme(&m, &Interval::open(0.0, 1.0), &FirstReturnOptions::plain(1))
            .unwrap();
        let pot = induced_potential(&m, &s, &PotentialSpec::Zero, 2, &Params::default()).unwrap();
        let g = gibbs_eigendata(&pot, 5, 1e-12, &Params::default()).unwrap();
        assert!((g.lambda - 5.0).abs() < 1e-12);
        for w in &g.m {
            assert!((w - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn tau_potential_eigendata_and_gibbs_ratio() {
        let (m, s) = half_base_scheme(40);
        let phi = PotentialSpec::constant(-(2f64.ln()));
        let pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        let g = gibbs_eigendata(&pot, 40, 1e-12, &Params::default()).unwrap();
        assert!((g.lambda - 1.0).abs() < 1e-9);
        // m(C_τ) = 2^(−τ) up to the truncation normalization
        for (i, &a) in g.alphabet.iter().enumerate() {
            let tau = s.elements[a].tau as i32;
            assert!((g.m[i] - 0.5f64.powi(tau)).abs() < 1e-9);
        }
        // the depth-4 ratio scan runs on a moderate truncation
        let g12 = gibbs_eigendata(&pot, 12, 1e-12, &Params::default()).unwrap();
        let rep = verify_gibbs(&g12, 4, 100_000).unwrap();
        assert!((rep.k_constant - 1.0).abs() < 1e-9, "K = {}", rep.k_constant);
    }

    #[test]
    fn gibbs_ratio_is_one_for_depth1_constant_potentials() {
        let (m, s) = full_shift_scheme();
        let phi = PotentialSpec::Geometric { t: 0.0 };
        let mut pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        pot.depth1 = vec![0.25, -1.3];
        let g = gibbs_eigendata(&pot, 2, 1e-12, &Params::default()).unwrap();
        let rep = verify_gibbs(&g, 4, 10_000).unwrap();
        assert!((rep.k_constant - 1.0).abs() < 1e-9);
        assert_eq!(rep.cylinders_checked, 2 + 4 + 8 + 16);
    }

    #[test]
    fn conformality_of_product_measure() {
        let (m, s) = full_shift_scheme();
        let phi = PotentialSpec::Geometric { t: 0.0 };
        let mut pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        pot.depth1 = vec![0.0, -1.0];
        let g = gibbs_eigendata(&pot, 2, 1e-12, &Params::default()).unwrap();
        let cm = g.cylinder_measure(5, 100_000).unwrap();
        assert!(cm.additivity_defect() < 1e-12);
        let rep = verify_conformal(&cm, &g.coeffs, g.log_lambda, 5, 1e-9);
        assert!(rep.ok, "max residual {}", rep.max_residual);
        assert!(rep.checked > 0);

        // corruption is detected
        let mut bad = cm.clone();
        if let Some(v) = bad.weights.get_mut(&vec![0u32, 1u32]) {
            *v += 1e-3;
        }
        let rep = verify_conformal(&bad, &g.coeffs, g.log_lambda, 5, 1e-9);
        assert!(!rep.ok);
    }

    #[test]
    fn depth2_lift_agrees_on_depth1_constant_potentials() {
        let (m, s) = half_base_scheme(12);
        let phi = PotentialSpec::constant(-(2f64.ln()));
        let pot = induced_potential(&m, &s, &phi, 2, &Params::default()).unwrap();
        let g2 = gibbs_eigendata_depth2(&m, &s, &phi, &pot, 8, 1e-12, &Params::default()).unwrap();
        let g1 = gibbs_eigendata(&pot, 8, 1e-12, &Params::default()).unwrap();
        assert!((g2.lambda - g1.lambda).abs() < 1e-9);
        // word masses agree with the product measure
        for (i, &a) in g1.alphabet.iter().enumerate().take(3) {
            for (j, &b) in g1.alphabet.iter().enumerate().take(3) {
                let m2 = g2.word_mass(&[a, b]).unwrap();
                assert!((m2 - g1.m[i] * g1.m[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn variation_fit_recovers_geometric_decay() {
        let vs = vec![0.1, 0.05, 0.025, 0.0125];
        let theta = fit_variation_ratio(&vs).unwrap();
        assert!((theta - 0.5).abs() < 1e-9);
    }
}
