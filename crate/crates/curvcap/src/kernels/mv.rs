use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::cauchy::cauchy_truncated_real;
use crate::kernels::curvature::curvature_total;
use crate::kernels::maximal::maximal_radial;
use crate::plane::measure::AtomicMeasure;
use crate::sum::par_sum_by_index;

/// One row of the transform-energy / curvature comparison at truncation
/// `epsilon`:
///
/// `lhs = ||C_eps mu||^2_{L^2(mu)}`, `curvature_term = c^2_eps(mu) / 6`,
/// `remainder = lhs - curvature_term`. For measures with bounded growth the
/// remainder stays within a constant times the mass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MvReport {
    pub epsilon: f64,
    pub lhs: f64,
    pub curvature_term: f64,
    pub remainder: f64,
    pub mass: f64,
    /// Measured `sup mu(B)/r` over balls centered at atoms (radii floored at
    /// the resolution).
    pub growth_constant: f64,
}

pub fn mv_identity_report(m: &AtomicMeasure, epsilon: f64) -> Result<MvReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(crate::error::Error::invalid(
            "truncation must be positive and finite",
        ));
    }
    let atoms = m.atoms().to_vec();
    let lhs = {
        let m_ref = &m;
        let atoms_ref = &atoms;
        par_sum_by_index(atoms.len(), move |i| {
            let (p, w) = atoms_ref[i];
            let c = cauchy_truncated_real(m_ref, p, epsilon).expect("validated epsilon");
            w * c.norm_sqr()
        })
    };
    let curv = curvature_total(m, epsilon)?;
    let growth = m
        .atoms()
        .iter()
        .map(|&(p, _)| maximal_radial(m, p))
        .fold(0.0f64, f64::max);
    Ok(MvReport {
        epsilon,
        lhs,
        curvature_term: curv.total / 6.0,
        remainder: lhs - curv.total / 6.0,
        mass: m.mass(),
        growth_constant: growth,
    })
}

pub const MV_CSV_HEADER: &str = "epsilon,lhs,curv_term,remainder,mass";

pub fn mv_csv(reports: &[MvReport]) -> String {
    let mut out = String::from(MV_CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epsilon, r.lhs, r.curvature_term, r.remainder, r.mass
        ));
    }
    out
}
