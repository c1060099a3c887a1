use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::plane::{AtomicMeasure, DyadicLattice, DyadicSquare};
use crate::sum::Cascade;
use crate::tb::Classification;

fn csum(it: impl Iterator<Item = Complex64>) -> Complex64 {
    let mut acc = Cascade::new();
    for v in it {
        acc.push(v);
    }
    acc.finish()
}

/// `Delta_Q f` restricted to its support: the atoms of the transit square
/// `Q`, in discovery order.
#[derive(Clone, Debug)]
pub struct DeltaComponent {
    pub square: DyadicSquare,
    pub atoms: Vec<usize>,
    pub values: Vec<Complex64>,
}

/// A full b-adapted decomposition of one function sample.
#[derive(Clone, Debug)]
pub struct MartingaleDecomposition {
    /// The global component `Xi f = (<f>_root / <b>_root) b`, one value per atom.
    pub xi: Vec<Complex64>,
    pub deltas: Vec<DeltaComponent>,
    /// `L2(mu)` norm of `Xi f + sum Delta_Q f - f`.
    pub reconstruction_residual: f64,
    /// Largest `|integral of Delta_Q f dmu|` over the components.
    pub max_delta_integral: f64,
    /// `L2(mu)` norm of the input.
    pub f_norm: f64,
    /// `|Xi f|^2 + sum |Delta_Q f|^2` in `L2(mu)`.
    pub energy: f64,
}

struct ChildGroup {
    atoms: Vec<usize>,
    /// Index of the transit child's node; `None` for terminal or stopping
    /// children (single atom, zero mass, or lattice floor).
    node: Option<usize>,
}

struct Node {
    square: DyadicSquare,
    atoms: Vec<usize>,
    children: Vec<ChildGroup>,
}

/// The b-adapted martingale operators for one measure, density, lattice,
/// and terminal/transit labelling. Built once, then applied to any number
/// of function samples.
pub struct MartingaleMachine {
    weights: Vec<f64>,
    b: Vec<Complex64>,
    nodes: Vec<Node>,
    total_mass: f64,
}

impl MartingaleMachine {
    pub fn new(
        mu: &AtomicMeasure,
        b: &[Complex64],
        lattice: &DyadicLattice,
        labels: &Classification,
        c_d: f64,
    ) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("empty measure"));
        }
        if b.len() != mu.len() {
            return Err(Error::invalid("density length does not match atom count"));
        }
        if !(c_d > 0.0 && c_d.is_finite()) {
            return Err(Error::invalid("paraaccretivity constant must be positive"));
        }
        if b.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("density values must be finite"));
        }
        for &(p, _) in mu.atoms() {
            if !lattice.in_root(p) {
                return Err(Error::LatticeTooSmall(format!(
                    "atom ({}, {}) outside the decomposition root",
                    p.x, p.y
                )));
            }
        }
        let root = lattice.root();
        if labels.terminal(root) {
            return Err(Error::invalid(
                "root square is terminal; the decomposition is vacuous",
            ));
        }
        let weights: Vec<f64> = mu.atoms().iter().map(|&(_, w)| w).collect();
        let total_mass: f64 = crate::sum::pairwise_sum(&weights);
        if !(total_mass > 0.0) {
            return Err(Error::invalid("measure has zero total mass"));
        }

        let mut machine = MartingaleMachine {
            weights,
            b: b.to_vec(),
            nodes: Vec::new(),
            total_mass,
        };
        let root_atoms: Vec<usize> = (0..mu.len()).collect();
        machine.check_guard(root, &root_atoms, c_d)?;
        machine.build(mu, lattice, labels, c_d, root, root_atoms)?;
        Ok(machine)
    }

    fn mass_of(&self, atoms: &[usize]) -> f64 {
        let ws: Vec<f64> = atoms.iter().map(|&i| self.weights[i]).collect();
        crate::sum::pairwise_sum(&ws)
    }

    fn b_sum(&self, atoms: &[usize]) -> Complex64 {
        csum(atoms.iter().map(|&i| self.b[i] * self.weights[i]))
    }

    fn check_guard(&self, q: DyadicSquare, atoms: &[usize], c_d: f64) -> Result<()> {
        let mass = self.mass_of(atoms);
        if mass <= 0.0 {
            return Ok(());
        }
        let avg = self.b_sum(atoms) / mass;
        if avg.norm() * c_d < 1.0 - 1e-12 {
            return Err(Error::Paraaccretivity(format!(
                "level {} ({}, {}): |<b>| = {} below 1/{}",
                q.level,
                q.kx,
                q.ky,
                avg.norm(),
                c_d
            )));
        }
        Ok(())
    }

    fn build(
        &mut self,
        mu: &AtomicMeasure,
        lattice: &DyadicLattice,
        labels: &Classification,
        c_d: f64,
        square: DyadicSquare,
        atoms: Vec<usize>,
    ) -> Result<usize> {
        let idx = self.nodes.len();
        self.nodes.push(Node { square, atoms: atoms.clone(), children: Vec::new() });
        let mut groups = Vec::new();
        for child in square.children() {
            let sub: Vec<usize> = atoms
                .iter()
                .copied()
                .filter(|&i| lattice.square_contains(child, mu.atoms()[i].0))
                .collect();
            if sub.is_empty() {
                continue;
            }
            let transit = sub.len() >= 2
                && self.mass_of(&sub) > 0.0
                && child.level > lattice.min_level()
                && !labels.terminal(child);
            if transit {
                self.check_guard(child, &sub, c_d)?;
                let node = self.build(mu, lattice, labels, c_d, child, sub.clone())?;
                groups.push(ChildGroup { atoms: sub, node: Some(node) });
            } else {
                groups.push(ChildGroup { atoms: sub, node: None });
            }
        }
        self.nodes[idx].children = groups;
        Ok(idx)
    }

    pub fn len_atoms(&self) -> usize {
        self.weights.len()
    }

    /// Transit squares in build order (root first).
    pub fn transit_squares(&self) -> Vec<DyadicSquare> {
        self.nodes.iter().map(|n| n.square).collect()
    }

    fn ratio(&self, f: &[Complex64], atoms: &[usize]) -> Complex64 {
        let num = csum(atoms.iter().map(|&i| f[i] * self.weights[i]));
        num / self.b_sum(atoms)
    }

    /// Weighted inner product `<u, v> = sum u_i conj(v_i) w_i`.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        csum(
            u.iter()
                .zip(v)
                .zip(&self.weights)
                .map(|((a, b), &w)| a * b.conj() * w),
        )
    }

    pub fn norm(&self, u: &[Complex64]) -> f64 {
        self.inner(u, u).re.max(0.0).sqrt()
    }

    pub fn apply_xi(&self, f: &[Complex64]) -> Vec<Complex64> {
        let r = self.ratio(f, &self.nodes[0].atoms);
        self.b.iter().map(|&bi| r * bi).collect()
    }

    pub fn apply_delta(&self, node: usize, f: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        self.delta_into(node, f, &mut out);
        out
    }

    fn delta_into(&self, node: usize, f: &[Complex64], out: &mut [Complex64]) {
        let n = &self.nodes[node];
        let rq = self.ratio(f, &n.atoms);
        for g in &n.children {
            match g.node {
                Some(j) => {
                    let rj = self.ratio(f, &self.nodes[j].atoms);
                    let diff = rj - rq;
                    for &i in &g.atoms {
                        out[i] = diff * self.b[i];
                    }
                }
                None => {
                    for &i in &g.atoms {
                        out[i] = f[i] - rq * self.b[i];
                    }
                }
            }
        }
    }

    /// Adjoint of `Delta_Q` in the weighted inner product, in the explicit
    /// conjugate-average form.
    pub fn apply_delta_adjoint(&self, node: usize, g: &[Complex64]) -> Vec<Complex64> {
        let n = &self.nodes[node];
        let s = |atoms: &[usize]| {
            csum(
                atoms
                    .iter()
                    .map(|&i| self.b[i] * g[i].conj() * self.weights[i]),
            )
        };
        let rq = (s(&n.atoms) / self.b_sum(&n.atoms)).conj();
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for grp in &n.children {
            match grp.node {
                Some(j) => {
                    let cj = (s(&self.nodes[j].atoms) / self.b_sum(&self.nodes[j].atoms)).conj();
                    for &i in &grp.atoms {
                        out[i] = cj - rq;
                    }
                }
                None => {
                    for &i in &grp.atoms {
                        out[i] = g[i] - rq;
                    }
                }
            }
        }
        out
    }

    pub fn decompose(&self, f: &[Complex64]) -> Result<MartingaleDecomposition> {
        if f.len() != self.weights.len() {
            return Err(Error::invalid("sample length does not match atom count"));
        }
        let xi = self.apply_xi(f);
        let mut recon = xi.clone();
        let mut deltas = Vec::with_capacity(self.nodes.len());
        let mut max_delta_integral = 0.0f64;
        let mut energy = self.inner(&xi, &xi).re;
        let mut scratch = vec![Complex64::new(0.0, 0.0); f.len()];
        for (k, node) in self.nodes.iter().enumerate() {
            for v in &mut scratch {
                *v = Complex64::new(0.0, 0.0);
            }
            self.delta_into(k, f, &mut scratch);
            let mut values = Vec::with_capacity(node.atoms.len());
            let mut integral = Cascade::new();
            let mut e = 0.0;
            for &i in &node.atoms {
                let v = scratch[i];
                values.push(v);
                recon[i] += v;
                integral.push(v * self.weights[i]);
                e += v.norm_sqr() * self.weights[i];
            }
            energy += e;
            max_delta_integral = max_delta_integral.max(integral.finish().norm());
            deltas.push(DeltaComponent {
                square: node.square,
                atoms: node.atoms.clone(),
                values,
            });
        }
        for (r, v) in recon.iter_mut().zip(f) {
            *r -= v;
        }
        let reconstruction_residual = self.norm(&recon);
        Ok(MartingaleDecomposition {
            xi,
            deltas,
            reconstruction_residual,
            max_delta_integral,
            f_norm: self.norm(f),
            energy,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }
}

/// One-shot decomposition of a sample against a labelled lattice.
pub fn martingale_decompose(
    f: &[Complex64],
    b: &[Complex64],
    mu: &AtomicMeasure,
    lattice: &DyadicLattice,
    labels: &Classification,
    c_d: f64,
) -> Result<MartingaleDecomposition> {
    MartingaleMachine::new(mu, b, lattice, labels, c_d)?.decompose(f)
}

/// Min and max over the samples of `(|Xi f|^2 + sum |Delta_Q f|^2) / |f|^2`.
/// Zero samples are skipped; at least one usable sample is required.
pub fn norm_equivalence(
    machine: &MartingaleMachine,
    samples: &[Vec<Complex64>],
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut used = 0;
    for f in samples {
        let d = machine.decompose(f)?;
        if d.f_norm == 0.0 {
            continue;
        }
        let ratio = d.energy / (d.f_norm * d.f_norm);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(Error::invalid("no nonzero samples"));
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ExceptionalSets;
    use crate::pipeline::{HSet, HdSet, SSet, TdSet};
    use crate::plane::Point;
    use crate::tb::classify_squares;
    use rand::{Rng, SeedableRng};

    fn empty_exc(lat: &DyadicLattice) -> ExceptionalSets {
        ExceptionalSets {
            h: HSet { selected: vec![], dilated: vec![], sum_radii: 0.0 },
            hd: HdSet { lattice: *lat, squares: vec![], sum_sides: 0.0 },
            s: SSet { alpha: 1.0, points: vec![], balls: vec![] },
            td: TdSet { lattice: *lat, c_d: 4.0, squares: vec![] },
        }
    }

    fn random_setup(
        n: usize,
        seed: u64,
    ) -> (AtomicMeasure, DyadicLattice, Classification) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let atoms: Vec<(Point, f64)> = (0..n)
            .map(|_| {
                (
                    Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
                    rng.gen_range(0.1..1.0),
                )
            })
            .collect();
        let mu = AtomicMeasure::new(atoms, 0.01).unwrap();
        let lat = DyadicLattice::new(2, Point::new(0.1, -0.2)).unwrap();
        let labels = classify_squares(&lat, &empty_exc(&lat), &mu, 4).unwrap();
        (mu, lat, labels)
    }

    fn random_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn reconstruction_is_exact_on_random_inputs() {
        let (mu, lat, labels) = random_setup(16, 1);
        let b = vec![Complex64::new(1.0, 0.0); 16];
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        for f in random_samples(16, 10, 2) {
            let d = machine.decompose(&f).unwrap();
            assert!(
                d.reconstruction_residual <= 1e-12 * d.f_norm.max(1.0),
                "residual {}",
                d.reconstruction_residual
            );
            assert!(d.max_delta_integral <= 1e-12 * d.f_norm.max(1.0) * machine.total_mass());
        }
    }

    #[test]
    fn unit_density_gives_orthogonal_pieces_and_unit_ratios() {
        let (mu, lat, labels) = random_setup(24, 3);
        let b = vec![Complex64::new(1.0, 0.0); 24];
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        let samples = random_samples(24, 20, 4);
        let (lo, hi) = norm_equivalence(&machine, &samples).unwrap();
        assert!((lo - 1.0).abs() < 1e-12, "lo {lo}");
        assert!((hi - 1.0).abs() < 1e-12, "hi {hi}");
    }

    #[test]
    fn density_is_reproduced_by_xi_and_annihilated_by_delta() {
        let (mu, lat, labels) = random_setup(20, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let b: Vec<Complex64> = (0..20)
            .map(|_| {
                let phase: f64 = rng.gen_range(-0.3..0.3);
                let mag: f64 = rng.gen_range(0.6..1.8);
                Complex64::new(mag * phase.cos(), mag * phase.sin())
            })
            .collect();
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        let d = machine.decompose(&b).unwrap();
        for (xi, bi) in d.xi.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-12);
        }
        for comp in &d.deltas {
            for v in &comp.values {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_identities_hold_to_tolerance() {
        let (mu, lat, labels) = random_setup(18, 7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let b: Vec<Complex64> = (0..18)
            .map(|_| {
                let phase: f64 = rng.gen_range(-0.25..0.25);
                let mag: f64 = rng.gen_range(0.7..1.5);
                Complex64::new(mag * phase.cos(), mag * phase.sin())
            })
            .collect();
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        let squares = machine.transit_squares();
        let f = &random_samples(18, 1, 9)[0];
        let scale = machine.norm(f).max(1.0);
        // idempotence and cross-annihilation
        for qi in 0..squares.len().min(6) {
            let df = machine.apply_delta(qi, f);
            let ddf = machine.apply_delta(qi, &df);
            for (a, c) in df.iter().zip(&ddf) {
                assert!((a - c).norm() < 1e-12 * scale, "Delta not idempotent");
            }
            let xd = machine.apply_xi(&df);
            for v in &xd {
                assert!(v.norm() < 1e-12 * scale, "Xi Delta != 0");
            }
            for qj in 0..squares.len().min(6) {
                if qi == qj {
                    continue;
                }
                let dd = machine.apply_delta(qj, &df);
                for v in &dd {
                    assert!(v.norm() < 1e-12 * scale, "Delta_R Delta_Q != 0");
                }
            }
        }
        // Delta applied to Xi f vanishes
        let xf = machine.apply_xi(f);
        for qi in 0..squares.len().min(6) {
            let dxf = machine.apply_delta(qi, &xf);
            for v in &dxf {
                assert!(v.norm() < 1e-12 * scale, "Delta Xi != 0");
            }
        }
        // adjoint pairing <Delta_Q f, g> = <f, Delta*_Q g>
        let g = &random_samples(18, 2, 10)[1];
        for qi in 0..squares.len() {
            let lhs = machine.inner(&machine.apply_delta(qi, f), g);
            let rhs = machine.inner(f, &machine.apply_delta_adjoint(qi, g));
            assert!(
                (lhs - rhs).norm() < 1e-12 * scale * machine.norm(g).max(1.0),
                "adjoint mismatch {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn random_density_ratios_stay_in_the_recorded_window() {
        let (mu, lat, labels) = random_setup(30, 11);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let b: Vec<Complex64> = (0..30)
            .map(|_| {
                let phase: f64 = rng.gen_range(-0.3..0.3);
                let mag: f64 = rng.gen_range(0.5..2.0);
                Complex64::new(mag * phase.cos(), mag * phase.sin())
            })
            .collect();
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        let samples = random_samples(30, 40, 13);
        let (lo, hi) = norm_equivalence(&machine, &samples).unwrap();
        assert!(lo > 1.0 / 100.0, "lower ratio {lo} out of window");
        assert!(hi < 100.0, "upper ratio {hi} out of window");
        assert!(lo <= hi);
    }

    #[test]
    fn cancelling_density_trips_the_paraaccretivity_guard() {
        // two close atoms with opposite densities sit alone in a deep square
        let mu = AtomicMeasure::new(
            vec![
                (Point::new(0.1, 0.1), 1.0),
                (Point::new(0.15, 0.1), 1.0),
                (Point::new(2.5, 2.5), 1.0),
                (Point::new(-2.5, 1.5), 1.0),
            ],
            0.01,
        )
        .unwrap();
        let lat = DyadicLattice::new(2, Point::new(0.0, 0.0)).unwrap();
        let labels = classify_squares(&lat, &empty_exc(&lat), &mu, 4).unwrap();
        let b = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert!(matches!(
            MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0),
            Err(Error::Paraaccretivity(_))
        ));
    }

    #[test]
    fn stopping_rules_cover_single_atoms_and_zero_mass() {
        // a square with one atom stops; reconstruction still exact
        let mu = AtomicMeasure::new(
            vec![(Point::new(1.0, 1.0), 1.0), (Point::new(-1.0, -1.0), 0.0)],
            0.1,
        )
        .unwrap();
        let lat = DyadicLattice::new(1, Point::new(0.0, 0.0)).unwrap();
        let labels = classify_squares(&lat, &empty_exc(&lat), &mu, 2).unwrap();
        let b = vec![Complex64::new(1.0, 0.0); 2];
        let machine = MartingaleMachine::new(&mu, &b, &lat, &labels, 4.0).unwrap();
        let f = vec![Complex64::new(0.7, -0.1), Complex64::new(-0.3, 0.4)];
        let d = machine.decompose(&f).unwrap();
        assert!(d.reconstruction_residual < 1e-14);
    }
}
