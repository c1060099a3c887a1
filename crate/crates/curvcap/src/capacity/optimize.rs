use serde::{Deserialize, Serialize};

use crate::capacity::growth::GrowthConstraintSet;
use crate::error::{Error, Result};
use crate::kernels::curvature::{curvature_per_atom, curvature_total};
use crate::kernels::potential::potential_on_atoms;
use crate::plane::measure::AtomicMeasure;
use crate::sum::Cascade;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub max_iters: usize,
    /// Relative g-improvement below which an accepted step counts as
    /// converged.
    pub tolerance: f64,
    /// Recorded in the estimate; the ascent itself is deterministic.
    pub seed: u64,
    /// Curvature truncation; defaults to the support's resolution.
    pub epsilon: Option<f64>,
    /// Warm-start weights (same length as the support); defaults to the
    /// support's own weights.
    pub initial_weights: Option<Vec<f64>>,
    /// Cap on functional evaluations in the uniform-direction polish; keeps
    /// the O(n^3) cost bounded on large supports.
    pub max_polish_evals: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            max_iters: 60,
            tolerance: 1e-9,
            seed: 0,
            epsilon: None,
            initial_weights: None,
            max_polish_evals: 200,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub g_value: f64,
    pub mass: f64,
    pub curvature: f64,
    pub scale: f64,
}

pub const TRACE_CSV_HEADER: &str = "iter,g_value,mass,curvature,scale";

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iter, r.g_value, r.mass, r.curvature, r.scale
        ));
    }
    out
}

/// Near-extremal admissible measure for the mass-vs-curvature functional,
/// with the diagnostics needed to judge extremality.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityEstimate {
    /// mass^2 / (mass + curvature), recomputed from the fields below.
    pub g_value: f64,
    pub sigma: AtomicMeasure,
    pub curvature: f64,
    pub mass: f64,
    /// min over atoms of U_sigma; the measured level alpha.
    pub potential_min: f64,
    /// mass / max U_sigma: the mass the measure would carry if rescaled so
    /// the potential tops out at 1.
    pub u_normalized_bound: f64,
    /// One-sided relative derivative of g along the feasible uniform-add
    /// direction; <= 0 up to noise at a constrained maximum.
    pub derivative_check: f64,
    pub converged: bool,
    pub iterations: usize,
    pub epsilon: f64,
    pub seed: u64,
}

/// One feasible point: weights projected onto the growth constraints and
/// then optimally rescaled, with the quantities the ascent needs.
struct Eval {
    sigma: AtomicMeasure,
    g: f64,
    /// c^2 potential per atom at sigma (drives the gradient).
    per_atom: Vec<f64>,
    curvature: f64,
    scale: f64,
}

fn eval_weights(
    support: &AtomicMeasure,
    constraints: &GrowthConstraintSet,
    weights: &[f64],
    epsilon: f64,
) -> Result<Eval> {
    let m = support.with_weights(weights)?;
    let w = m.mass();
    if w == 0.0 {
        return Ok(Eval {
            sigma: m,
            g: 0.0,
            per_atom: vec![0.0; weights.len()],
            curvature: 0.0,
            scale: 0.0,
        });
    }
    let per_atom = curvature_per_atom(&m, epsilon)?;
    // K = sum_i w_i * c^2_m(x_i) equals the full ordered triple sum
    let mut acc = Cascade::new();
    for (pa, &(_, wi)) in per_atom.iter().zip(m.atoms()) {
        acc.push(pa * wi);
    }
    let k = acc.finish().max(0.0);
    let mr = constraints.max_ratio(&m);
    if !(mr > 0.0) {
        return Err(Error::invalid("constraint set does not see the measure"));
    }
    let s = if mr > 1.0 { 1.0 / mr } else { 1.0 };
    let t_max = 1.0 / (mr * s);
    let ws = s * w;
    let ks = s * s * s * k;
    let t_star = if ks > 0.0 {
        (ws / ks).sqrt().min(t_max)
    } else {
        t_max
    };
    let tau = s * t_star;
    let g = t_star * ws * ws / (ws + t_star * t_star * ks);
    Ok(Eval {
        sigma: m.scaled(tau)?,
        g,
        per_atom: per_atom.iter().map(|p| tau * tau * p).collect(),
        curvature: tau * tau * tau * k,
        scale: tau,
    })
}

fn row(iter: usize, e: &Eval) -> TraceRow {
    TraceRow {
        iter,
        g_value: e.g,
        mass: e.sigma.mass(),
        curvature: e.curvature,
        scale: e.scale,
    }
}

/// Projected multiplicative ascent on the weights: exponentiated-gradient
/// step on log g, then growth projection and optimal rescale; step size
/// halves on non-improvement. After the loop, a line-search polish along the
/// uniform-add direction (which multiplicative updates explore poorly near
/// zero weights) and a one-sided derivative check in that direction.
pub fn optimize_gplus(
    support: &AtomicMeasure,
    config: &OptimizeConfig,
) -> Result<(CapacityEstimate, Vec<TraceRow>)> {
    if support.is_empty() {
        return Err(Error::invalid("support must be nonempty"));
    }
    let epsilon = config.epsilon.unwrap_or_else(|| support.resolution());
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("curvature truncation must be >= 0"));
    }
    let constraints = GrowthConstraintSet::for_measure(support);
    let w0: Vec<f64> = match &config.initial_weights {
        Some(w) => {
            if w.len() != support.len() {
                return Err(Error::invalid("initial weights length mismatch"));
            }
            w.clone()
        }
        None => support.atoms().iter().map(|&(_, w)| w).collect(),
    };
    let mut cur = eval_weights(support, &constraints, &w0, epsilon)?;
    if cur.sigma.mass() == 0.0 {
        return Err(Error::invalid("support carries no mass"));
    }
    let mut trace = vec![row(0, &cur)];
    let mut eta = 0.5f64;
    let mut converged = false;
    let mut iterations = 0usize;

    'outer: for it in 1..=config.max_iters {
        iterations = it;
        let msig = cur.sigma.mass();
        let denom = msig + cur.curvature;
        let sw: Vec<f64> = cur.sigma.atoms().iter().map(|&(_, w)| w).collect();
        loop {
            let wn: Vec<f64> = sw
                .iter()
                .zip(&cur.per_atom)
                .map(|(&wi, &pa)| {
                    let grad = 2.0 / msig - (1.0 + 3.0 * pa) / denom;
                    wi * (eta * wi * grad).clamp(-30.0, 30.0).exp()
                })
                .collect();
            let cand = eval_weights(support, &constraints, &wn, epsilon)?;
            if cand.g > cur.g {
                let improve = (cand.g - cur.g) / cur.g;
                cur = cand;
                trace.push(row(it, &cur));
                eta = (eta * 1.25).min(4.0);
                if improve < config.tolerance {
                    converged = true;
                }
                break;
            }
            eta *= 0.5;
            if eta < 1e-12 {
                // no ascent at any step size: a fixed point
                converged = true;
                break 'outer;
            }
        }
        if converged {
            break;
        }
    }

    // polish: accept uniform-add moves while any ladder step improves
    let ladder = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let mut evals = 0usize;
    'polish: while evals < config.max_polish_evals {
        let mean = cur.sigma.mass() / support.len() as f64;
        let mut moved = false;
        for &lam in &ladder {
            let wn: Vec<f64> = cur
                .sigma
                .atoms()
                .iter()
                .map(|&(_, w)| w + lam * mean)
                .collect();
            let cand = eval_weights(support, &constraints, &wn, epsilon)?;
            evals += 1;
            if cand.g > cur.g * (1.0 + 1e-13) {
                cur = cand;
                moved = true;
                break;
            }
            if evals >= config.max_polish_evals {
                break 'polish;
            }
        }
        if !moved {
            break;
        }
    }

    let delta = 1e-6;
    let mean = cur.sigma.mass() / support.len() as f64;
    let wn: Vec<f64> = cur
        .sigma
        .atoms()
        .iter()
        .map(|&(_, w)| w + delta * mean)
        .collect();
    let shifted = eval_weights(support, &constraints, &wn, epsilon)?;
    let derivative_check = (shifted.g - cur.g) / (delta * cur.g);

    // recompute the report directly on sigma so g_value = mass^2/(mass +
    // curvature) holds bitwise over the struct's own fields
    let sigma = cur.sigma;
    let mass = sigma.mass();
    let curvature = curvature_total(&sigma, epsilon)?.total;
    let g_value = mass * mass / (mass + curvature);
    let us = potential_on_atoms(&sigma, epsilon)?;
    let potential_min = us.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = us.iter().copied().fold(0.0f64, f64::max);
    Ok((
        CapacityEstimate {
            g_value,
            mass,
            curvature,
            potential_min: if potential_min.is_finite() { potential_min } else { 0.0 },
            u_normalized_bound: if u_max > 0.0 { mass / u_max } else { 0.0 },
            derivative_check,
            converged,
            iterations,
            epsilon,
            seed: config.seed,
            sigma,
        },
        trace,
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremalDiagnostics {
    /// c^2(sigma)/sigma(C); at a true extremum this stays <= 2.
    pub curvature_mass_ratio: f64,
    pub potential_min: f64,
    pub potential_median: f64,
    /// The measured level: min over atoms of U_sigma.
    pub alpha: f64,
    pub ratio_exceeds_two: bool,
}

pub fn extremal_diagnostics(sigma: &AtomicMeasure, epsilon: f64) -> Result<ExtremalDiagnostics> {
    let mass = sigma.mass();
    let k = curvature_total(sigma, epsilon)?.total;
    let ratio = if mass > 0.0 { k / mass } else { 0.0 };
    let mut us = potential_on_atoms(sigma, epsilon)?;
    us.sort_by(f64::total_cmp);
    let (pmin, pmed) = if us.is_empty() {
        (0.0, 0.0)
    } else {
        let n = us.len();
        let med = if n % 2 == 1 {
            us[n / 2]
        } else {
            0.5 * (us[n / 2 - 1] + us[n / 2])
        };
        (us[0], med)
    };
    Ok(ExtremalDiagnostics {
        curvature_mass_ratio: ratio,
        potential_min: pmin,
        potential_median: pmed,
        alpha: pmin,
        ratio_exceeds_two: ratio > 2.0,
    })
}

/// mass/max U: how much mass the measure carries once rescaled so its
/// potential is capped at 1. Scales linearly under dilation of the support.
pub fn potential_normalized_bound(m: &AtomicMeasure, epsilon: f64) -> Result<f64> {
    if m.mass() == 0.0 {
        return Ok(0.0);
    }
    let us = potential_on_atoms(m, epsilon)?;
    let u_max = us.iter().copied().fold(0.0f64, f64::max);
    if u_max > 0.0 {
        Ok(m.mass() / u_max)
    } else {
        Ok(0.0)
    }
}
