//! Probabilistic estimate of the well-covered atom set.
//!
//! Each trial draws a random dyadic lattice and asks a caller-supplied
//! builder which atoms land in the exceptional set `W_D` of that lattice,
//! together with the exceptional mass. Atoms that escape `W_D` in more than
//! `(1 - delta2)/2` of the trials form the good set `G`. When every trial
//! keeps the exceptional mass below `delta2 * mu(F)`, the averaged Chebyshev
//! bound forces `mu(G) >= (1 - delta2)/(1 + delta2) * mu(F)`.
//!
//! The companion distance function takes, at each point, the
//! `beta = (1 - delta2)^2/4` quantile over all ordered trial pairs of the
//! distance to the atoms escaping both trials. It vanishes on `G` and is
//! 1-Lipschitz, being a fixed order statistic of 1-Lipschitz functions.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::plane::{AtomicMeasure, DyadicLattice, Point};
use crate::tb::kernel::suppressed_kernel;
use crate::tb::lattice::random_lattice;
use crate::tb::suppression::SuppressionProfile;

/// Per-trial exceptional data: which atoms fell in `W_D` and its mass.
#[derive(Clone, Debug)]
pub struct WdSample {
    pub in_wd: Vec<bool>,
    pub wd_mass: f64,
}

impl WdSample {
    /// Builds a sample whose mass is the measure of the masked atoms.
    pub fn from_mask(mu: &AtomicMeasure, in_wd: Vec<bool>) -> Result<Self> {
        if in_wd.len() != mu.len() {
            return Err(Error::invalid("mask length does not match the measure"));
        }
        let wd_mass = mu
            .atoms()
            .iter()
            .zip(&in_wd)
            .filter(|(_, &m)| m)
            .map(|(&(_, w), _)| w)
            .sum();
        Ok(WdSample { in_wd, wd_mass })
    }
}

/// Result of the good-set estimate over random lattice translations.
#[derive(Clone, Debug)]
pub struct GSetEstimate {
    pub trials: u32,
    pub delta2: f64,
    /// Quantile level of the pairwise distance function.
    pub beta: f64,
    /// Per-atom frequency of escaping the exceptional set.
    pub p1: Vec<f64>,
    /// Atoms with escape frequency above `(1 - delta2)/2`.
    pub g_indices: Vec<usize>,
    pub g_mass: f64,
    pub total_mass: f64,
    /// True when every trial kept `wd_mass <= delta2 * total_mass`.
    pub hypothesis_met: bool,
    /// Mass the good set must reach when the hypothesis holds.
    pub bound_target: f64,
    /// `Some(g_mass >= bound_target)` when the hypothesis holds.
    pub bound_pass: Option<bool>,
    masks: Vec<Vec<bool>>,
    positions: Vec<Point>,
    weights: Vec<f64>,
}

impl GSetEstimate {
    /// Quantile distance to the atoms escaping both trials of a pair.
    ///
    /// For each ordered pair of trials the distance from `x` to the atoms
    /// outside both exceptional sets is taken (infinite when no atom
    /// escapes both); the `beta`-quantile of the sorted values is returned.
    pub fn phi(&self, x: Point) -> f64 {
        let dists: Vec<f64> = self.positions.iter().map(|p| x.dist(*p)).collect();
        let t = self.masks.len();
        let mut vals = Vec::with_capacity(t * t);
        for s in 0..t {
            for u in 0..t {
                let mut best = f64::INFINITY;
                for i in 0..dists.len() {
                    if self.weights[i] > 0.0 && !self.masks[s][i] && !self.masks[u][i] {
                        best = best.min(dists[i]);
                    }
                }
                vals.push(best);
            }
        }
        vals.sort_by(f64::total_cmp);
        let idx = ((self.beta * vals.len() as f64).floor() as usize).min(vals.len() - 1);
        vals[idx]
    }
}

/// Estimates the good set of `mu` over `trials >= 30` random lattices with
/// size exponent `n`. The builder receives the trial index and the drawn
/// lattice and returns the exceptional data of that trial.
pub fn g_set_estimate(
    mu: &AtomicMeasure,
    n: i32,
    builder: &(dyn Fn(u64, &DyadicLattice) -> Result<WdSample> + Sync),
    trials: u32,
    delta2: f64,
    seed: u64,
) -> Result<GSetEstimate> {
    if trials < 30 {
        return Err(Error::invalid("good-set estimate needs at least 30 trials"));
    }
    if !(delta2 > 0.0 && delta2 < 1.0) {
        return Err(Error::invalid("delta2 must lie in (0, 1)"));
    }
    let total_mass = mu.mass();
    if mu.is_empty() || total_mass <= 0.0 {
        return Err(Error::invalid("good-set estimate needs a measure with mass"));
    }
    let positions: Vec<Point> = mu.atoms().iter().map(|&(p, _)| p).collect();
    let weights: Vec<f64> = mu.atoms().iter().map(|&(_, w)| w).collect();

    let samples: Vec<WdSample> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let rl = random_lattice(seed, trial, n, &positions)?;
            let sample = builder(trial, &rl.lattice)?;
            if sample.in_wd.len() != mu.len() {
                return Err(Error::invalid("builder mask length does not match the measure"));
            }
            if !(sample.wd_mass >= 0.0 && sample.wd_mass.is_finite()) {
                return Err(Error::invalid("builder exceptional mass must be finite"));
            }
            Ok(sample)
        })
        .collect::<Result<_>>()?;

    let mut escapes = vec![0u32; mu.len()];
    let mut hypothesis_met = true;
    for sample in &samples {
        for (e, &m) in escapes.iter_mut().zip(&sample.in_wd) {
            if !m {
                *e += 1;
            }
        }
        if sample.wd_mass > delta2 * total_mass {
            hypothesis_met = false;
        }
    }
    let p1: Vec<f64> = escapes.iter().map(|&e| e as f64 / trials as f64).collect();
    let threshold = (1.0 - delta2) / 2.0;
    let g_indices: Vec<usize> = (0..mu.len()).filter(|&i| p1[i] > threshold).collect();
    let g_mass: f64 = g_indices.iter().map(|&i| weights[i]).sum();
    let bound_target = (1.0 - delta2) / (1.0 + delta2) * total_mass;
    let bound_pass = if hypothesis_met {
        Some(g_mass >= bound_target - 1e-9 * total_mass)
    } else {
        None
    };
    Ok(GSetEstimate {
        trials,
        delta2,
        beta: (1.0 - delta2) * (1.0 - delta2) / 4.0,
        p1,
        g_indices,
        g_mass,
        total_mass,
        hypothesis_met,
        bound_target,
        bound_pass,
        masks: samples.into_iter().map(|s| s.in_wd).collect(),
        positions,
        weights,
    })
}

/// Power-iteration estimate of the operator norm of the suppressed Cauchy
/// operator on `L^2(mu)`, skipping the (zero or singular) diagonal. The
/// value approaches the true norm from below; it is recorded, not certified.
pub fn operator_norm_probe(
    mu: &AtomicMeasure,
    theta: &SuppressionProfile,
    iters: u32,
    seed: u64,
) -> Result<f64> {
    if iters < 1 {
        return Err(Error::invalid("operator probe needs at least one iteration"));
    }
    let atoms = mu.atoms();
    let n = atoms.len();
    if n == 0 || mu.mass() <= 0.0 {
        return Ok(0.0);
    }
    // kernel matrix K[i][j] = K_theta(x_j, x_i), the weight against atom j
    // when evaluating at atom i
    let mut kmat = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                kmat[i * n + j] = suppressed_kernel(atoms[j].0, atoms[i].0, theta)?;
            }
        }
    }
    let wnorm2 = |v: &[Complex64]| -> f64 {
        v.iter().zip(atoms).map(|(z, &(_, w))| z.norm_sqr() * w).sum()
    };
    let apply_t = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| (0..n).map(|j| kmat[i * n + j] * v[j] * atoms[j].1).sum())
            .collect()
    };
    let apply_t_adj = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|j| (0..n).map(|i| kmat[i * n + j].conj() * v[i] * atoms[i].1).sum())
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..iters {
        let norm = wnorm2(&v).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for z in v.iter_mut() {
            *z /= norm;
        }
        let av = apply_t_adj(&apply_t(&v));
        lambda = wnorm2(&av).sqrt();
        v = av;
    }
    Ok(lambda.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corner_measure() -> AtomicMeasure {
        AtomicMeasure::new(
            vec![
                (Point::new(-0.5, -0.5), 0.25),
                (Point::new(0.5, -0.5), 0.25),
                (Point::new(-0.5, 0.5), 0.25),
                (Point::new(0.5, 0.5), 0.25),
            ],
            1e-6,
        )
        .unwrap()
    }

    #[test]
    fn empty_exceptional_set_keeps_every_atom() {
        let mu = corner_measure();
        let builder = |_: u64, _: &DyadicLattice| {
            Ok(WdSample { in_wd: vec![false; 4], wd_mass: 0.0 })
        };
        let est = g_set_estimate(&mu, 4, &builder, 30, 0.5, 3).unwrap();
        assert!(est.p1.iter().all(|&p| p == 1.0));
        assert_eq!(est.g_indices, vec![0, 1, 2, 3]);
        assert!((est.g_mass - 1.0).abs() < 1e-15);
        assert!(est.hypothesis_met);
        assert_eq!(est.bound_pass, Some(true));
        // the distance function vanishes on the good set and is the plain
        // distance to the support away from it
        for &(p, _) in mu.atoms() {
            assert_eq!(est.phi(p), 0.0);
        }
        let far = Point::new(10.0, 10.0);
        let direct = mu
            .atoms()
            .iter()
            .map(|&(p, _)| far.dist(p))
            .fold(f64::INFINITY, f64::min);
        assert!((est.phi(far) - direct).abs() < 1e-12);
    }

    #[test]
    fn permanently_captured_atom_is_excluded_from_g() {
        let mu = corner_measure();
        let builder = |_: u64, _: &DyadicLattice| {
            Ok(WdSample { in_wd: vec![true, false, false, false], wd_mass: 0.25 })
        };
        let est = g_set_estimate(&mu, 4, &builder, 40, 0.5, 5).unwrap();
        assert_eq!(est.p1[0], 0.0);
        assert_eq!(est.g_indices, vec![1, 2, 3]);
        assert!((est.g_mass - 0.75).abs() < 1e-15);
        assert_eq!(est.bound_pass, Some(true));
        // at the captured atom the distance runs to the nearest free atom
        let phi0 = est.phi(mu.atoms()[0].0);
        assert!((phi0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotating_third_of_the_mass_meets_the_bound() {
        let atoms: Vec<(Point, f64)> = (0..10)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 10.0;
                (Point::new(a.cos(), a.sin()), 0.1)
            })
            .collect();
        let mu = AtomicMeasure::new(atoms, 1e-6).unwrap();
        let builder = |trial: u64, _: &DyadicLattice| {
            let mut mask = vec![false; 10];
            for k in 0..3u64 {
                mask[((3 * trial + k) % 10) as usize] = true;
            }
            WdSample::from_mask(&mu, mask)
        };
        let est = g_set_estimate(&mu, 4, &builder, 30, 0.5, 9).unwrap();
        // each atom is captured in exactly 9 of the 30 trials
        assert!(est.p1.iter().all(|&p| (p - 0.7).abs() < 1e-15));
        assert!(est.hypothesis_met);
        assert_eq!(est.g_indices.len(), 10);
        assert_eq!(est.bound_pass, Some(true));
        assert!(est.g_mass >= est.bound_target);
        for &(p, _) in mu.atoms() {
            assert_eq!(est.phi(p), 0.0);
        }
    }

    #[test]
    fn saturated_masks_void_the_hypothesis_and_phi_diverges() {
        let mu = corner_measure();
        let builder =
            |_: u64, _: &DyadicLattice| Ok(WdSample { in_wd: vec![true; 4], wd_mass: 1.0 });
        let est = g_set_estimate(&mu, 4, &builder, 30, 0.5, 1).unwrap();
        assert!(!est.hypothesis_met);
        assert_eq!(est.bound_pass, None);
        assert!(est.g_indices.is_empty());
        assert!(est.phi(Point::new(0.0, 0.0)).is_infinite());
    }

    #[test]
    fn quantile_index_sits_exactly_at_the_pair_fraction() {
        // two atoms: B is always captured, A is captured in the first k
        // trials. The pair values at A are 0 on the (T-k)^2 pairs where A
        // escapes twice and infinite otherwise, so phi(A) = 0 exactly when
        // (T-k)^2 exceeds the quantile index floor(beta T^2).
        let mu = AtomicMeasure::new(
            vec![(Point::new(0.0, 0.0), 0.5), (Point::new(1.5, 0.0), 0.5)],
            1e-6,
        )
        .unwrap();
        let run = |k: u64| {
            let builder = move |trial: u64, _: &DyadicLattice| {
                Ok(WdSample { in_wd: vec![trial < k, true], wd_mass: 1.0 })
            };
            g_set_estimate(&mu, 4, &builder, 30, 0.5, 0)
                .unwrap()
                .phi(Point::new(0.0, 0.0))
        };
        // beta = 0.0625, T = 30: index floor(0.0625 * 900) = 56
        // k = 22: 8^2 = 64 zeros > 56  -> phi = 0
        // k = 23: 7^2 = 49 zeros <= 56 -> phi = infinity
        assert_eq!(run(22), 0.0);
        assert!(run(23).is_infinite());
    }

    #[test]
    fn phi_is_lipschitz_along_sampled_segments() {
        let mu = corner_measure();
        let builder = |trial: u64, _: &DyadicLattice| {
            let mut rng = ChaCha8Rng::seed_from_u64(977);
            rng.set_stream(trial);
            let mut mask: Vec<bool> = (0..4).map(|_| rng.gen::<f64>() < 0.4).collect();
            mask[0] = false; // one atom always escapes, keeping phi finite
            WdSample::from_mask(&mu, mask)
        };
        let est = g_set_estimate(&mu, 4, &builder, 30, 0.5, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..3 {
            let a = Point::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
            let b = Point::new(rng.gen::<f64>() * 4.0 - 2.0, rng.gen::<f64>() * 4.0 - 2.0);
            let steps = 100;
            let mut prev = est.phi(a);
            for s in 1..=steps {
                let t = s as f64 / steps as f64;
                let p = Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
                let cur = est.phi(p);
                let step = a.dist(b) / steps as f64;
                assert!(
                    (cur - prev).abs() <= step * (1.0 + 1e-9) + 1e-12,
                    "phi moved faster than the segment"
                );
                prev = cur;
            }
        }
    }

    #[test]
    fn estimate_validates_its_inputs() {
        let mu = corner_measure();
        let builder = |_: u64, _: &DyadicLattice| {
            Ok(WdSample { in_wd: vec![false; 4], wd_mass: 0.0 })
        };
        assert!(g_set_estimate(&mu, 4, &builder, 10, 0.5, 0).is_err());
        assert!(g_set_estimate(&mu, 4, &builder, 30, 1.0, 0).is_err());
        let short = |_: u64, _: &DyadicLattice| {
            Ok(WdSample { in_wd: vec![false; 2], wd_mass: 0.0 })
        };
        assert!(g_set_estimate(&mu, 4, &short, 30, 0.5, 0).is_err());
        let empty = AtomicMeasure::new(vec![], 1e-6).unwrap();
        assert!(g_set_estimate(&empty, 4, &builder, 30, 0.5, 0).is_err());
    }

    #[test]
    fn operator_probe_is_deterministic_and_below_the_frobenius_bound() {
        let mu = AtomicMeasure::new(
            vec![
                (Point::new(0.0, 0.0), 0.4),
                (Point::new(1.0, 0.2), 0.3),
                (Point::new(-0.3, 0.9), 0.3),
            ],
            1e-6,
        )
        .unwrap();
        let theta = SuppressionProfile::constant(0.3).unwrap();
        let a = operator_norm_probe(&mu, &theta, 25, 17).unwrap();
        let b = operator_norm_probe(&mu, &theta, 25, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite() && a > 0.0);

        // weighted Frobenius norm dominates the operator norm
        let mut frob2 = 0.0;
        for (i, &(pi, wi)) in mu.atoms().iter().enumerate() {
            for (j, &(pj, wj)) in mu.atoms().iter().enumerate() {
                if i != j {
                    let k = suppressed_kernel(pj, pi, &theta).unwrap();
                    frob2 += k.norm_sqr() * wi * wj;
                }
            }
        }
        assert!(a <= frob2.sqrt() * (1.0 + 1e-9));

        let empty = AtomicMeasure::new(vec![], 1e-6).unwrap();
        assert_eq!(operator_norm_probe(&empty, &theta, 5, 0).unwrap(), 0.0);
        assert!(operator_norm_probe(&mu, &theta, 0, 0).is_err());
    }
}
