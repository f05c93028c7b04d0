//! Counting Q-points by nested covers.
//!
//! Starting from all full-multiplicity points, each level covers the points of
//! the current ball by balls `lambda` times smaller, keeps the child holding
//! the most points and records whether the count dropped (`xi = 1`). The
//! number of drops controls the count: `N_0 <= (4 / lambda^2)^{sum xi}`.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::AlgebraicCurve;
use crate::error::{Error, Result};
use crate::frequency::Frequency;
use crate::io::{csv_bytes, fmt17, write_atomically};
use crate::poly::lex_cmp;
use crate::singular::full_multiplicity_points;

/// Radius of the disk whose Q-points are counted.
pub const COUNT_RADIUS: f64 = 0.5;
/// Tolerance on the sign of a frequency drop.
pub const DROP_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoveringConfig {
    pub lambda: f64,
    pub delta: f64,
    pub max_depth: usize,
}

impl Default for CoveringConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            delta: 0.05,
            max_depth: 60,
        }
    }
}

impl CoveringConfig {
    pub fn new(lambda: f64, delta: f64, max_depth: usize) -> Result<Self> {
        let config = Self {
            lambda,
            delta,
            max_depth,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 0.2) {
            return Err(Error::Domain(format!("lambda must lie in (0, 1/5), got {}", self.lambda)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Domain(format!("delta must be positive, got {}", self.delta)));
        }
        if self.max_depth == 0 {
            return Err(Error::Domain("max_depth must be positive".into()));
        }
        Ok(())
    }

    /// `4 / lambda^2`, the volume bound on the number of balls per level.
    pub fn ball_bound(&self) -> f64 {
        4.0 / (self.lambda * self.lambda)
    }
}

/// Frequency drop `I(x, r) - I(x, lambda r)`.
pub fn frequency_drop(curve: &AlgebraicCurve, x: Complex64, r: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let freq = Frequency::new(curve);
    Ok(freq.frequency(x, r)? - freq.frequency(x, lambda * r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnnulusVerdict {
    CertifiedEmpty,
    DropTooLarge,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnnulusCheck {
    pub center: [f64; 2],
    pub r: f64,
    pub drop: f64,
    pub verdict: AnnulusVerdict,
    /// Full-multiplicity points found by the detector with
    /// `lambda r <= |y - x| < r`.
    pub detected: Vec<[f64; 2]>,
    /// False when the annulus was certified empty but the detector found
    /// points in it: `delta` is too large for this curve.
    pub agrees: bool,
}

impl AnnulusCheck {
    pub fn miscalibrated(&self) -> bool {
        !self.agrees
    }
}

pub fn annulus_empty_check(
    curve: &AlgebraicCurve,
    x: Complex64,
    r: f64,
    config: &CoveringConfig,
) -> Result<AnnulusCheck> {
    config.validate()?;
    let drop = frequency_drop(curve, x, r, config.lambda)?;
    let verdict = if drop <= config.delta {
        AnnulusVerdict::CertifiedEmpty
    } else {
        AnnulusVerdict::DropTooLarge
    };
    let inner = config.lambda * r;
    let detected: Vec<[f64; 2]> = full_multiplicity_points(curve, x, r)?
        .into_iter()
        .filter(|y| {
            let d = (y - x).norm();
            d >= inner && d < r
        })
        .map(|y| [y.re, y.im])
        .collect();
    let agrees = verdict == AnnulusVerdict::DropTooLarge || detected.is_empty();
    Ok(AnnulusCheck {
        center: [x.re, x.im],
        r,
        drop,
        verdict,
        detected,
        agrees,
    })
}

/// Greedy Vitali selection in the given order: a point is kept unless it lies
/// in the open ball of `radius` about a point kept before it.
///
/// The kept balls of `radius` cover every point, and kept points are at least
/// `radius` apart, so the balls of `lambda radius` about them are disjoint for
/// any `lambda < 1/2`.
pub fn vitali_subcover(points: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut kept: Vec<Complex64> = Vec::new();
    for &p in points {
        if kept.iter().all(|k| (p - k).norm() >= radius) {
            kept.push(p);
        }
    }
    kept
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringLevel {
    pub level: usize,
    pub center: [f64; 2],
    /// Q-points in the level's ball.
    pub count: usize,
    /// Balls in the cover of this level's points by balls of the next radius.
    pub balls: usize,
    /// 1 when the count dropped from the previous level.
    pub xi: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringTrace {
    pub config: CoveringConfig,
    pub levels: Vec<CoveringLevel>,
    pub final_depth: usize,
    pub xi_sum: usize,
    /// `(4 / lambda^2)^{sum xi}`.
    pub bound: f64,
    /// Invariants that failed; empty on a clean run.
    pub violations: Vec<String>,
}

impl CoveringTrace {
    pub fn initial_count(&self) -> usize {
        self.levels.first().map_or(0, |l| l.count)
    }

    pub fn final_center(&self) -> Complex64 {
        let c = self.levels.last().map_or([0.0, 0.0], |l| l.center);
        Complex64::new(c[0], c[1])
    }

    /// `N_0 <= (4 / lambda^2)^{sum xi}`.
    pub fn certified(&self) -> bool {
        self.initial_count() as f64 <= self.bound
    }

    pub fn check(&self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InternalLogic(self.violations.join("; ")))
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .map(|l| {
                vec![
                    l.level.to_string(),
                    fmt17(l.center[0]),
                    fmt17(l.center[1]),
                    l.count.to_string(),
                    l.balls.to_string(),
                    l.xi.to_string(),
                ]
            })
            .collect();
        let mut bytes = csv_bytes(&["level", "center_re", "center_im", "N_k", "J_k", "xi"], &rows)?;
        bytes.extend_from_slice(format!("# {}\n", self.summary()).as_bytes());
        Ok(bytes)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomically(path, &self.to_csv()?)
    }

    pub fn summary(&self) -> String {
        format!(
            "N_0 = {} <= (4/lambda^2)^(sum xi) = {:.6e} with lambda = {}, sum xi = {}, depth = {}: {}",
            self.initial_count(),
            self.bound,
            self.config.lambda,
            self.xi_sum,
            self.final_depth,
            if self.certified() { "holds" } else { "FAILS" }
        )
    }
}

/// Runs the nested covering on a finite point set inside `B_1(center)`.
///
/// Level `k` holds the points of `B_{lambda^k}(x^k)` that were also in every
/// earlier ball, so the counts are nonincreasing by construction.
pub fn covering_trace(points: &[Complex64], center: Complex64, config: &CoveringConfig) -> Result<CoveringTrace> {
    config.validate()?;
    let mut current: Vec<Complex64> = points.to_vec();
    current.sort_by(lex_cmp);
    let mut levels = Vec::new();
    let mut x = center;
    let mut radius = 1.0;
    let mut xi_sum = 0;
    let mut previous: Option<usize> = None;
    loop {
        let level = levels.len();
        let count = current.len();
        let xi = u8::from(previous.is_some_and(|p| p > count));
        xi_sum += xi as usize;
        let child_radius = radius * config.lambda;
        let kept = vitali_subcover(&current, child_radius);
        levels.push(CoveringLevel {
            level,
            center: [x.re, x.im],
            count,
            balls: kept.len(),
            xi,
        });
        if count <= 1 {
            break;
        }
        if level >= config.max_depth {
            return Err(Error::NonTermination { depth: level, count });
        }
        let counts: Vec<usize> = kept
            .par_iter()
            .map(|c| current.iter().filter(|p| (*p - c).norm() < child_radius).count())
            .collect();
        // Most points wins; ties go to the lexicographically smallest center,
        // which is the first in `kept` since `current` is sorted.
        let best = (0..kept.len())
            .max_by(|&i, &j| counts[i].cmp(&counts[j]).then(j.cmp(&i)))
            .expect("a nonempty set has a nonempty cover");
        x = kept[best];
        current.retain(|p| (p - x).norm() < child_radius);
        radius = child_radius;
        previous = Some(count);
    }
    let bound = config.ball_bound().powi(xi_sum as i32);
    let mut trace = CoveringTrace {
        config: *config,
        final_depth: levels.len() - 1,
        levels,
        xi_sum,
        bound,
        violations: Vec::new(),
    };
    trace.violations = trace_violations(&trace);
    Ok(trace)
}

fn trace_violations(trace: &CoveringTrace) -> Vec<String> {
    let mut out = Vec::new();
    let levels = &trace.levels;
    let bound = trace.config.ball_bound();
    for l in levels {
        if l.balls as f64 > bound {
            out.push(format!("level {}: J = {} exceeds 4/lambda^2 = {bound}", l.level, l.balls));
        }
    }
    for pair in levels.windows(2) {
        if pair[1].count > pair[0].count {
            out.push(format!("level {}: count increased", pair[1].level));
        }
        if (pair[1].xi == 1) != (pair[0].count > pair[1].count) {
            out.push(format!("level {}: xi does not match the counts", pair[1].level));
        }
    }
    // N_0 <= (sup J)^{sum xi} N_kbar, in integers
    let sup_j = levels.iter().map(|l| l.balls as u128).max().unwrap_or(1).max(1);
    let last = levels.last().map_or(0, |l| l.count as u128);
    let product = sup_j
        .checked_pow(trace.xi_sum as u32)
        .and_then(|p| p.checked_mul(last.max(1)))
        .unwrap_or(u128::MAX);
    if (trace.initial_count() as u128) > product {
        out.push(format!(
            "N_0 = {} exceeds (sup J)^(sum xi) N_kbar = {product}",
            trace.initial_count()
        ));
    }
    if !trace.certified() {
        out.push(trace.summary());
    }
    out
}

/// Covering of the full-multiplicity points in `B_{1/2}`.
pub fn covering_count(curve: &AlgebraicCurve, config: &CoveringConfig) -> Result<CoveringTrace> {
    let origin = Complex64::new(0.0, 0.0);
    let points = full_multiplicity_points(curve, origin, COUNT_RADIUS)?;
    covering_trace(&points, origin, config)
}

/// The drop chain behind `delta sum xi <= C(lambda) I(x, 1)`, evaluated at
/// the center of the last ball.
#[derive(Debug, Clone, Serialize)]
pub struct DropChain {
    pub center: [f64; 2],
    /// Levels `k` with `xi(k) = 1`, paired with the scales
    /// `(lambda^{k+1}, 3 lambda^{k-1})`.
    pub scales: Vec<(usize, f64, f64)>,
    pub drops: Vec<f64>,
    /// `delta sum xi`.
    pub lower: f64,
    pub drop_sum: f64,
    /// Largest number of scale intervals sharing a radius.
    pub multiplicity: usize,
    /// Largest outer radius among the scale intervals (at least 1).
    pub top_radius: f64,
    /// `I(x, top_radius)`; monotonicity gives `drop_sum <= multiplicity * top_frequency`.
    pub top_frequency: f64,
    pub lower_holds: bool,
    pub telescopes: bool,
}

pub fn drop_chain(curve: &AlgebraicCurve, trace: &CoveringTrace) -> Result<DropChain> {
    let lambda = trace.config.lambda;
    let x = trace.final_center();
    let freq = Frequency::new(curve);
    let scales: Vec<(usize, f64, f64)> = trace
        .levels
        .iter()
        .filter(|l| l.xi == 1)
        .map(|l| {
            let k = l.level as i32;
            (l.level, lambda.powi(k + 1), 3.0 * lambda.powi(k - 1))
        })
        .collect();
    let drops = scales
        .iter()
        .map(|&(_, lo, hi)| Ok(freq.frequency(x, hi)? - freq.frequency(x, lo)?))
        .collect::<Result<Vec<f64>>>()?;
    let multiplicity = scales
        .iter()
        .map(|&(_, _, hi)| scales.iter().filter(|&&(_, l, h)| l < hi && hi <= h).count())
        .max()
        .unwrap_or(0);
    let top_radius = scales.iter().map(|s| s.2).fold(1.0, f64::max);
    let top_frequency = freq.frequency(x, top_radius)?;
    let drop_sum: f64 = drops.iter().sum();
    let lower = trace.config.delta * trace.xi_sum as f64;
    let slack = DROP_SLACK * (1.0 + drop_sum.abs());
    Ok(DropChain {
        center: [x.re, x.im],
        scales,
        lower,
        lower_holds: lower <= drop_sum + slack,
        telescopes: drop_sum <= multiplicity as f64 * top_frequency + slack,
        drops,
        drop_sum,
        multiplicity,
        top_radius,
        top_frequency,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub count: usize,
    /// `I(0, 2)`.
    pub frequency: f64,
    /// Smallest `b` with `count <= b^{I(0, 2)}`.
    pub fitted_base: f64,
    /// `(4 / lambda^2)^{sum xi}` from the covering.
    pub proof_bound: f64,
    pub trace: CoveringTrace,
    pub chain: DropChain,
}

pub fn theorem_bound_report(curve: &AlgebraicCurve, config: &CoveringConfig) -> Result<BoundReport> {
    let origin = Complex64::new(0.0, 0.0);
    let trace = covering_count(curve, config)?;
    let count = trace.initial_count();
    let frequency = Frequency::new(curve).frequency(origin, 2.0)?;
    let fitted_base = fitted_base(count, frequency)?;
    let chain = drop_chain(curve, &trace)?;
    Ok(BoundReport {
        count,
        frequency,
        fitted_base,
        proof_bound: trace.bound,
        trace,
        chain,
    })
}

/// `count^{1 / I}`, or 1 when at most one point is counted.
pub fn fitted_base(count: usize, frequency: f64) -> Result<f64> {
    if count <= 1 {
        return Ok(1.0);
    }
    if !(frequency > 0.0) {
        return Err(Error::Domain(format!(
            "{count} points cannot be bounded by a power with exponent {frequency}"
        )));
    }
    Ok((count as f64).powf(1.0 / frequency))
}
