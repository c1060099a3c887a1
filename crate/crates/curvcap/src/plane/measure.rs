use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::point::Point;
use crate::sum::pairwise_sum;

fn key(p: Point) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// Finite positive atomic measure with a resolution scale `h`. The measure
/// stands in for a continuous one only down to distance `h`: radial maximal
/// quantities are floored at `h` and curvature truncations default to it.
///
/// Atoms at bit-identical positions are merged on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MeasureWire", try_from = "MeasureWire")]
pub struct AtomicMeasure {
    atoms: Vec<(Point, f64)>,
    resolution: f64,
}

impl AtomicMeasure {
    pub fn new(raw: Vec<(Point, f64)>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid("resolution must be positive and finite"));
        }
        let mut atoms: Vec<(Point, f64)> = Vec::with_capacity(raw.len());
        let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(raw.len());
        for (p, w) in raw {
            if !p.is_finite() {
                return Err(Error::invalid("atom position must be finite"));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid("atom weight must be nonnegative and finite"));
            }
            match index.get(&key(p)) {
                Some(&i) => atoms[i].1 += w,
                None => {
                    index.insert(key(p), atoms.len());
                    atoms.push((p, w));
                }
            }
        }
        Ok(AtomicMeasure { atoms, resolution })
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn mass(&self) -> f64 {
        let ws: Vec<f64> = self.atoms.iter().map(|a| a.1).collect();
        pairwise_sum(&ws)
    }

    /// Exact max pairwise atom distance; 0 for fewer than two atoms.
    pub fn diameter(&self) -> f64 {
        let mut d2: f64 = 0.0;
        for i in 0..self.atoms.len() {
            for j in (i + 1)..self.atoms.len() {
                d2 = d2.max(self.atoms[i].0.dist2(self.atoms[j].0));
            }
        }
        d2.sqrt()
    }

    pub fn support_bbox(&self) -> Option<(Point, Point)> {
        if self.atoms.is_empty() {
            return None;
        }
        let mut lo = self.atoms[0].0;
        let mut hi = lo;
        for &(p, _) in &self.atoms {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        Some((lo, hi))
    }

    /// Same support, weights multiplied by `t >= 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid("scale factor must be nonnegative and finite"));
        }
        Ok(AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| (p, w * t)).collect(),
            resolution: self.resolution,
        })
    }

    /// Image under `z -> t z`, `t > 0`: positions and resolution scale by `t`,
    /// weights are kept.
    pub fn dilated(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("dilation factor must be positive and finite"));
        }
        Ok(AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| (p * t, w)).collect(),
            resolution: self.resolution * t,
        })
    }

    /// Replace weights atom-by-atom (same order as [`Self::atoms`]).
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.atoms.len() {
            return Err(Error::invalid("weight vector length mismatch"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("atom weight must be nonnegative and finite"));
        }
        Ok(AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .zip(weights)
                .map(|(&(p, _), &w)| (p, w))
                .collect(),
            resolution: self.resolution,
        })
    }
}

/// Complex atomic measure; same merging and resolution semantics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MeasureWire", try_from = "MeasureWire")]
pub struct ComplexAtomicMeasure {
    atoms: Vec<(Point, Complex64)>,
    resolution: f64,
}

impl ComplexAtomicMeasure {
    pub fn new(raw: Vec<(Point, Complex64)>, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::invalid("resolution must be positive and finite"));
        }
        let mut atoms: Vec<(Point, Complex64)> = Vec::with_capacity(raw.len());
        let mut index: HashMap<(u64, u64), usize> = HashMap::with_capacity(raw.len());
        for (p, w) in raw {
            if !p.is_finite() {
                return Err(Error::invalid("atom position must be finite"));
            }
            if !(w.re.is_finite() && w.im.is_finite()) {
                return Err(Error::invalid("atom weight must be finite"));
            }
            match index.get(&key(p)) {
                Some(&i) => atoms[i].1 += w,
                None => {
                    index.insert(key(p), atoms.len());
                    atoms.push((p, w));
                }
            }
        }
        Ok(ComplexAtomicMeasure { atoms, resolution })
    }

    pub fn from_positive(m: &AtomicMeasure) -> Self {
        ComplexAtomicMeasure {
            atoms: m
                .atoms()
                .iter()
                .map(|&(p, w)| (p, Complex64::new(w, 0.0)))
                .collect(),
            resolution: m.resolution(),
        }
    }

    /// `b dmu` for a pointwise density `b` given atom-by-atom.
    pub fn from_density(m: &AtomicMeasure, b: &[Complex64]) -> Result<Self> {
        if b.len() != m.len() {
            return Err(Error::invalid("density vector length mismatch"));
        }
        Ok(ComplexAtomicMeasure {
            atoms: m
                .atoms()
                .iter()
                .zip(b)
                .map(|(&(p, w), &bi)| (p, bi * w))
                .collect(),
            resolution: m.resolution(),
        })
    }

    pub fn atoms(&self) -> &[(Point, Complex64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn total(&self) -> Complex64 {
        let ws: Vec<Complex64> = self.atoms.iter().map(|a| a.1).collect();
        pairwise_sum(&ws)
    }

    /// Variation measure `|nu|`: same atoms, weights `|w|`.
    pub fn variation(&self) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self.atoms.iter().map(|&(p, w)| (p, w.norm())).collect(),
            resolution: self.resolution,
        }
    }
}

fn zero(v: &f64) -> bool {
    *v == 0.0
}

/// On-disk atom record. `im` is omitted when zero, so positive measures
/// serialize without it and read back either way.
#[derive(Serialize, Deserialize)]
struct AtomWire {
    x: f64,
    y: f64,
    re: f64,
    #[serde(default, skip_serializing_if = "zero")]
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureWire {
    resolution: f64,
    atoms: Vec<AtomWire>,
}

impl From<AtomicMeasure> for MeasureWire {
    fn from(m: AtomicMeasure) -> Self {
        MeasureWire {
            resolution: m.resolution,
            atoms: m
                .atoms
                .into_iter()
                .map(|(p, w)| AtomWire { x: p.x, y: p.y, re: w, im: 0.0 })
                .collect(),
        }
    }
}

impl TryFrom<MeasureWire> for AtomicMeasure {
    type Error = Error;
    fn try_from(w: MeasureWire) -> Result<Self> {
        let atoms = w
            .atoms
            .into_iter()
            .map(|a| {
                if a.im != 0.0 {
                    return Err(Error::invalid(
                        "complex atom weight in a positive-measure file",
                    ));
                }
                Ok((Point::new(a.x, a.y), a.re))
            })
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(atoms, w.resolution)
    }
}

impl From<ComplexAtomicMeasure> for MeasureWire {
    fn from(m: ComplexAtomicMeasure) -> Self {
        MeasureWire {
            resolution: m.resolution,
            atoms: m
                .atoms
                .into_iter()
                .map(|(p, w)| AtomWire { x: p.x, y: p.y, re: w.re, im: w.im })
                .collect(),
        }
    }
}

impl TryFrom<MeasureWire> for ComplexAtomicMeasure {
    type Error = Error;
    fn try_from(w: MeasureWire) -> Result<Self> {
        let atoms = w
            .atoms
            .into_iter()
            .map(|a| (Point::new(a.x, a.y), Complex64::new(a.re, a.im)))
            .collect();
        ComplexAtomicMeasure::new(atoms, w.resolution)
    }
}
