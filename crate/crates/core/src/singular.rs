//! Points where every sheet of the map meets at the origin.
//!
//! Candidates are the zeros of the discriminant; each is confirmed by looking
//! at the fiber itself.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::{clusters, AlgebraicCurve};
use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::io::{csv_bytes, fmt17, write_atomically};
use crate::poly::lex_cmp;

/// Fiber collapse threshold relative to the curve scale.
pub const COLLAPSE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct SingularPointRecord {
    pub location: [f64; 2],
    pub fiber_diameter: f64,
    /// Largest distance of a sheet from the origin.
    pub distance_to_zero: f64,
    /// Extrapolated `I(x, 0+)`, when it was computed.
    pub small_scale_frequency: Option<f64>,
    /// Size of the largest group of coinciding sheets.
    pub cluster_size: usize,
    pub is_full_multiplicity: bool,
}

impl SingularPointRecord {
    pub fn location(&self) -> Complex64 {
        Complex64::new(self.location[0], self.location[1])
    }
}

/// Zeros of the discriminant in the closed disk `|z - center| <= radius`.
pub fn find_singular_candidates(
    curve: &AlgebraicCurve,
    center: Complex64,
    radius: f64,
) -> Result<Vec<Complex64>> {
    if !curve.is_reduced() {
        return Err(Error::DegenerateCurve(
            "the discriminant vanishes identically: every fiber has a repeated root".into(),
        ));
    }
    Ok(curve
        .branch_points()
        .iter()
        .copied()
        .filter(|b| (b - center).norm() <= radius * (1.0 + 1e-12))
        .collect())
}

/// Classifies candidates by fiber collapse and attaches `I(x, 0+)`.
pub fn classify_d_q(curve: &AlgebraicCurve, candidates: &[Complex64]) -> Result<Vec<SingularPointRecord>> {
    classify(curve, candidates, true)
}

fn classify(
    curve: &AlgebraicCurve,
    candidates: &[Complex64],
    with_frequency: bool,
) -> Result<Vec<SingularPointRecord>> {
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    check_barycenter_free(curve)?;
    let tol = COLLAPSE_TOL * curve.scale();
    let mut records = candidates
        .par_iter()
        .map(|&x| {
            let roots = curve.fiber_roots(x)?;
            let fiber = crate::aq_space::QPoint::from_complex(&roots);
            let fiber_diameter = fiber.fiber_diameter();
            let distance_to_zero = fiber.max_value_norm();
            let cluster_size = clusters(&roots, |_| tol).iter().map(Vec::len).max().unwrap_or(0);
            let is_full_multiplicity = fiber_diameter < tol && distance_to_zero < tol;
            let small_scale_frequency = if with_frequency {
                Some(Frequency::new(curve).small_scale_frequency(x)?)
            } else {
                None
            };
            Ok(SingularPointRecord {
                location: [x.re, x.im],
                fiber_diameter,
                distance_to_zero,
                small_scale_frequency,
                cluster_size,
                is_full_multiplicity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|a, b| lex_cmp(&a.location(), &b.location()));
    Ok(records)
}

/// Number of points of full multiplicity in the closed disk `|z| <= radius`.
pub fn count_d_q(curve: &AlgebraicCurve, radius: f64) -> Result<usize> {
    let candidates = find_singular_candidates(curve, Complex64::new(0.0, 0.0), radius)?;
    Ok(classify(curve, &candidates, false)?
        .iter()
        .filter(|r| r.is_full_multiplicity)
        .count())
}

/// Points of full multiplicity in the closed disk `|z - center| <= radius`.
pub fn full_multiplicity_points(curve: &AlgebraicCurve, center: Complex64, radius: f64) -> Result<Vec<Complex64>> {
    let candidates = find_singular_candidates(curve, center, radius)?;
    Ok(classify(curve, &candidates, false)?
        .into_iter()
        .filter(|r| r.is_full_multiplicity)
        .map(|r| r.location())
        .collect())
}

fn check_barycenter_free(curve: &AlgebraicCurve) -> Result<()> {
    let tol = 1e-9 * curve.scale();
    for k in 0..8 {
        let z = Complex64::from_polar(0.15 + 0.2 * k as f64, 1.1 + 2.3 * k as f64);
        let roots = curve.fiber_roots(z)?;
        let mean = roots.iter().sum::<Complex64>() / roots.len() as f64;
        if mean.norm() > tol {
            return Err(Error::Precondition(format!(
                "fibers are not barycenter-free: mean {mean} at z = {z}"
            )));
        }
    }
    Ok(())
}

pub fn records_csv(records: &[SingularPointRecord]) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                fmt17(r.location[0]),
                fmt17(r.location[1]),
                fmt17(r.fiber_diameter),
                r.small_scale_frequency.map(fmt17).unwrap_or_default(),
                r.is_full_multiplicity.to_string(),
            ]
        })
        .collect();
    csv_bytes(
        &["location_re", "location_im", "fiber_diameter", "small_scale_frequency", "is_full_multiplicity"],
        &rows,
    )
}

pub fn write_records_csv(records: &[SingularPointRecord], path: &Path) -> Result<()> {
    write_atomically(path, &records_csv(records)?)
}
