use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::ExceptionalSets;
use crate::plane::{AtomicMeasure, DyadicLattice, DyadicSquare};
use crate::sum::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquareLabel {
    Terminal,
    Transit,
}

/// Exact containment of the half-open dyadic square `q` in the union of
/// half-open dyadic squares `members` of the same lattice. Same-lattice
/// squares are nested or disjoint, so `q` is covered iff it sits inside one
/// member or every child is covered by the members below `q`.
pub fn square_in_union(q: DyadicSquare, members: &[DyadicSquare]) -> bool {
    if members.iter().any(|m| q.is_descendant_of(*m)) {
        return true;
    }
    let below: Vec<DyadicSquare> = members
        .iter()
        .copied()
        .filter(|m| m.is_descendant_of(q) && m.level < q.level)
        .collect();
    if below.is_empty() {
        return false;
    }
    q.children().iter().all(|c| square_in_union(*c, &below))
}

/// Terminal/transit labels over the lattice squares that carry atoms, down
/// to `depth` levels below the root. A square is terminal when it is wholly
/// inside the union of absorbing and dominance squares; everything the
/// recursion may still pass through is transit.
#[derive(Clone, Debug)]
pub struct Classification {
    members: Vec<DyadicSquare>,
    pub labels: Vec<(DyadicSquare, SquareLabel)>,
    pub root_transit: bool,
    /// Set when the root itself is terminal, i.e. the exceptional union
    /// swallowed the whole data square. Decompositions are vacuous then.
    pub degenerate: bool,
    /// Mass of the atoms outside the union; positive mass forces a transit
    /// root.
    pub mass_off_union: f64,
}

impl Classification {
    /// Depth-unlimited exact query.
    pub fn terminal(&self, q: DyadicSquare) -> bool {
        square_in_union(q, &self.members)
    }

    pub fn label_of(&self, q: DyadicSquare) -> Option<SquareLabel> {
        self.labels
            .iter()
            .find(|(s, _)| *s == q)
            .map(|&(_, l)| l)
    }
}

pub fn classify_squares(
    lattice: &DyadicLattice,
    exc: &ExceptionalSets,
    mu: &AtomicMeasure,
    depth: u32,
) -> Result<Classification> {
    for (name, other) in [("absorbing", &exc.hd.lattice), ("dominance", &exc.td.lattice)] {
        if other.root_exp != lattice.root_exp
            || other.translation.x != lattice.translation.x
            || other.translation.y != lattice.translation.y
        {
            return Err(Error::invalid(format!(
                "{name} squares were built on a different lattice"
            )));
        }
    }
    let mut members: Vec<DyadicSquare> = exc.hd.squares.clone();
    members.extend(exc.td.squares.iter().map(|t| t.square));

    let off: Vec<f64> = mu
        .atoms()
        .iter()
        .filter(|&&(p, _)| !exc.in_hd_or_td(p))
        .map(|&(_, w)| w)
        .collect();
    let mass_off_union = pairwise_sum(&off);

    // group atoms by square, walking down only through occupied squares
    let mut labels = Vec::new();
    let root = lattice.root();
    let mut frontier: Vec<(DyadicSquare, Vec<usize>)> =
        vec![(root, (0..mu.len()).collect())];
    let mut level = 0u32;
    while !frontier.is_empty() && level <= depth {
        let mut next = Vec::new();
        for (q, idx) in frontier {
            if idx.is_empty() {
                continue;
            }
            let terminal = square_in_union(q, &members);
            labels.push((
                q,
                if terminal { SquareLabel::Terminal } else { SquareLabel::Transit },
            ));
            if terminal || q.level <= lattice.min_level() {
                continue;
            }
            for child in q.children() {
                let sub: Vec<usize> = idx
                    .iter()
                    .copied()
                    .filter(|&i| lattice.square_contains(child, mu.atoms()[i].0))
                    .collect();
                if !sub.is_empty() {
                    next.push((child, sub));
                }
            }
        }
        frontier = next;
        level += 1;
    }

    let root_terminal = square_in_union(root, &members);
    if mass_off_union > 0.0 && root_terminal {
        return Err(Error::StageFailure {
            stage: "classify",
            reason: "positive mass off the exceptional union inside a terminal root".into(),
        });
    }
    Ok(Classification {
        members,
        labels,
        root_transit: !root_terminal,
        degenerate: root_terminal,
        mass_off_union,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use crate::pipeline::{HSet, HdSet, SSet, TdSet, TdSquare};
    use crate::plane::Point;

    fn empty_exc(lat: &DyadicLattice) -> ExceptionalSets {
        ExceptionalSets {
            h: HSet { selected: vec![], dilated: vec![], sum_radii: 0.0 },
            hd: HdSet { lattice: lat.clone(), squares: vec![], sum_sides: 0.0 },
            s: SSet { alpha: 1.0, points: vec![], balls: vec![] },
            td: TdSet { lattice: lat.clone(), c_d: 4.0, squares: vec![] },
        }
    }

    fn unit_atoms() -> AtomicMeasure {
        AtomicMeasure::new(
            vec![
                (Point::new(0.5, 0.5), 1.0),
                (Point::new(-1.5, 0.5), 1.0),
                (Point::new(0.5, -1.5), 1.0),
            ],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn empty_union_leaves_everything_transit() {
        let lat = DyadicLattice::new(2, Point::new(0.0, 0.0)).unwrap();
        let exc = empty_exc(&lat);
        let c = classify_squares(&lat, &exc, &unit_atoms(), 3).unwrap();
        assert!(c.root_transit && !c.degenerate);
        assert!(c.labels.iter().all(|&(_, l)| l == SquareLabel::Transit));
        assert!(c.mass_off_union > 2.9);
    }

    #[test]
    fn root_sized_union_raises_the_degenerate_flag() {
        let lat = DyadicLattice::new(2, Point::new(0.0, 0.0)).unwrap();
        let mut exc = empty_exc(&lat);
        exc.td.squares.push(TdSquare {
            square: lat.root(),
            mu_mass: 3.0,
            nu_mass: Complex64::new(0.1, 0.0),
        });
        let c = classify_squares(&lat, &exc, &unit_atoms(), 2).unwrap();
        assert!(c.degenerate && !c.root_transit);
        assert_eq!(c.mass_off_union, 0.0);
        assert!(c.labels.iter().all(|&(_, l)| l == SquareLabel::Terminal));
        // children of a terminal square stay terminal
        for child in lat.root().children() {
            assert!(c.terminal(child));
        }
    }

    #[test]
    fn union_coverage_descends_through_children() {
        let lat = DyadicLattice::new(2, Point::new(0.0, 0.0)).unwrap();
        let root = lat.root();
        let kids = root.children();
        let mut exc = empty_exc(&lat);
        // three children as absorbing squares, the fourth as dominance
        exc.hd.squares = kids[..3].to_vec();
        exc.td.squares.push(TdSquare {
            square: kids[3],
            mu_mass: 1.0,
            nu_mass: Complex64::new(0.0, 0.0),
        });
        let c = classify_squares(&lat, &exc, &unit_atoms(), 2).unwrap();
        // covered jointly: the root is terminal even though no single member
        // contains it
        assert!(c.degenerate);
        assert!(c.terminal(root));
        // removing one child breaks the cover
        let mut partial = empty_exc(&lat);
        partial.hd.squares = kids[..3].to_vec();
        let c = classify_squares(&lat, &partial, &unit_atoms(), 2).unwrap();
        assert!(c.root_transit);
        assert!(!c.terminal(root));
        assert!(c.terminal(kids[0]));
    }

    #[test]
    fn mismatched_lattices_are_rejected() {
        let lat = DyadicLattice::new(2, Point::new(0.0, 0.0)).unwrap();
        let other = DyadicLattice::new(2, Point::new(0.25, 0.0)).unwrap();
        let mut exc = empty_exc(&lat);
        exc.hd.lattice = other;
        assert!(matches!(
            classify_squares(&lat, &exc, &unit_atoms(), 2),
            Err(Error::InvalidArgument(_))
        ));
    }
}
