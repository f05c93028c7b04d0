//! Adaptive Gauss-Kronrod quadrature and circle integrals for vector-valued
//! integrands.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Kronrod abscissae (positive half, descending; the last one is the center).
const XGK: [f64; 8] = [
    0.991455371120812639,
    0.949107912342758525,
    0.864864423359769073,
    0.741531185599394440,
    0.586087235467691130,
    0.405845151377397167,
    0.207784955007898468,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529225,
    0.063092092629978553,
    0.104790010322250184,
    0.140653259715525919,
    0.169004726639267903,
    0.190350578064785410,
    0.204432940075298892,
    0.209482141084727828,
];

/// Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693,
    0.279705391489276668,
    0.381830050505118945,
    0.417959183673469388,
];

/// Exponent of the grading substitution toward a singular endpoint.
const GRADING_POWER: i32 = 4;
/// Circles passing this close (relative to the radius) to a branch point are
/// integrated on graded arcs instead of by the trapezoid rule.
const NEAR_BRANCH: f64 = 0.2;
const TRAPEZOID_START: usize = 32;
const TRAPEZOID_CAP: usize = 1 << 14;
const TRAPEZOID_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 4000;

/// Which end of a panel carries an integrable singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    None,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Refinement target.
    pub target: f64,
    /// Estimated relative error above which the result is rejected.
    pub accept: f64,
    /// Absolute error floor per component.
    pub floor: f64,
    /// Components are judged relative to at least `coupling` times the
    /// largest component, so near-cancellation cannot stall refinement.
    pub coupling: f64,
}

impl Tolerance {
    pub const fn new(target: f64, accept: f64) -> Self {
        Self {
            target,
            accept,
            floor: 1e-300,
            coupling: 1e-9,
        }
    }

    pub const fn with_coupling(self, coupling: f64) -> Self {
        Self { coupling, ..self }
    }
}

#[derive(Clone)]
struct Interval<const M: usize> {
    a: f64,
    b: f64,
    value: [f64; M],
    error: [f64; M],
}

fn kronrod<const M: usize, F>(f: &F, a: f64, b: f64) -> Result<Interval<M>>
where
    F: Fn(f64) -> Result<[f64; M]>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = [0.0; M];
    let mut gauss = [0.0; M];
    let mut abs = [0.0; M];
    for m in 0..M {
        kron[m] = WGK[7] * fc[m];
        gauss[m] = WG[3] * fc[m];
        abs[m] = WGK[7] * fc[m].abs();
    }
    let mut values = [[0.0; M]; 15];
    values[7] = fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        for m in 0..M {
            kron[m] += WGK[i] * (f1[m] + f2[m]);
            abs[m] += WGK[i] * (f1[m].abs() + f2[m].abs());
            if i % 2 == 1 {
                gauss[m] += WG[i / 2] * (f1[m] + f2[m]);
            }
        }
        values[i] = f1;
        values[14 - i] = f2;
    }
    let mut value = [0.0; M];
    let mut error = [0.0; M];
    for m in 0..M {
        let mean = 0.5 * kron[m];
        let mut asc = WGK[7] * (fc[m] - mean).abs();
        for i in 0..7 {
            asc += WGK[i] * ((values[i][m] - mean).abs() + (values[14 - i][m] - mean).abs());
        }
        let asc = asc * half.abs();
        let abs = abs[m] * half.abs();
        let diff = ((kron[m] - gauss[m]) * half).abs();
        let mut err = diff;
        if asc != 0.0 && diff != 0.0 {
            err = asc * (200.0 * diff / asc).powf(1.5).min(1.0);
        }
        if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * abs);
        }
        value[m] = kron[m] * half;
        error[m] = err;
    }
    Ok(Interval { a, b, value, error })
}

/// Adaptive G7K15 on `[a, b]` with global bisection of the worst interval.
pub fn integrate<const M: usize, F>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<[f64; M]>
where
    F: Fn(f64) -> Result<[f64; M]>,
{
    if a == b {
        return Ok([0.0; M]);
    }
    let mut intervals = vec![kronrod(f, a, b)?];
    loop {
        let (total, error) = totals(&intervals);
        let largest = total.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let reference: [f64; M] = std::array::from_fn(|m| total[m].abs().max(tol.coupling * largest));
        let within = |target: f64| (0..M).all(|m| error[m] <= (target * reference[m]).max(tol.floor));
        if within(tol.target) {
            return Ok(total);
        }
        if intervals.len() >= MAX_INTERVALS {
            if within(tol.accept) {
                return Ok(total);
            }
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {} intervals: value {total:?}, error {error:?}",
                intervals.len()
            )));
        }
        // Bisect the interval with the largest error relative to its component's total.
        let scaled = |iv: &Interval<M>| {
            (0..M)
                .map(|m| iv.error[m] / reference[m].max(tol.floor))
                .fold(0.0, f64::max)
        };
        let worst = (0..intervals.len())
            .max_by(|&i, &j| scaled(&intervals[i]).total_cmp(&scaled(&intervals[j])))
            .expect("nonempty");
        let iv = intervals.swap_remove(worst);
        let mid = 0.5 * (iv.a + iv.b);
        if !(mid > iv.a.min(iv.b) && mid < iv.a.max(iv.b)) {
            // Interval exhausted at machine resolution.
            intervals.push(iv);
            return if within(tol.accept) {
                Ok(total)
            } else {
                Err(Error::Quadrature(format!("interval collapsed near {mid}")))
            };
        }
        intervals.push(kronrod(f, iv.a, mid)?);
        intervals.push(kronrod(f, mid, iv.b)?);
    }
}

fn totals<const M: usize>(intervals: &[Interval<M>]) -> ([f64; M], [f64; M]) {
    let mut sorted: Vec<&Interval<M>> = intervals.iter().collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<[f64; M]> = sorted.iter().map(|iv| iv.value).collect();
    let errors: Vec<[f64; M]> = sorted.iter().map(|iv| iv.error).collect();
    (pairwise_sum(&values), pairwise_sum(&errors))
}

/// Integrates over `[a, b]` with the substitution `s = a + (b - a) t^4`
/// (or its mirror) when an endpoint is singular.
///
/// The integrand receives `(anchor, offset)` with `s = anchor + offset`, the
/// anchor being the singular endpoint, so that points very close to the
/// singularity keep their relative position exactly.
pub fn integrate_graded<const M: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    grade: Grade,
    tol: Tolerance,
) -> Result<[f64; M]>
where
    F: Fn(f64, f64) -> Result<[f64; M]>,
{
    let len = b - a;
    let k = GRADING_POWER;
    let graded = |anchor: f64, sign: f64| {
        move |t: f64| {
            let offset = sign * len * t.powi(k);
            if offset == 0.0 {
                // underflow: the Jacobian vanishes with it
                return Ok([0.0; M]);
            }
            Ok(scale(f(anchor, offset)?, len * k as f64 * t.powi(k - 1)))
        }
    };
    match grade {
        Grade::None => integrate(&|s: f64| f(s, 0.0), a, b, tol),
        Grade::Left => integrate(&graded(a, 1.0), 0.0, 1.0, tol),
        Grade::Right => integrate(&graded(b, -1.0), 0.0, 1.0, tol),
    }
}

/// Integrates over the panels between consecutive `points`, grading toward
/// every point flagged singular. Panels singular at both ends are split in
/// half. The integrand takes `(anchor, offset)` as in [`integrate_graded`].
pub fn integrate_panels<const M: usize, F>(
    f: &F,
    points: &[(f64, bool)],
    tol: Tolerance,
) -> Result<[f64; M]>
where
    F: Fn(f64, f64) -> Result<[f64; M]>,
{
    let mut parts = Vec::new();
    for pair in points.windows(2) {
        let ((a, sa), (b, sb)) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let part = match (sa, sb) {
            (false, false) => integrate_graded(f, a, b, Grade::None, tol)?,
            (true, false) => integrate_graded(f, a, b, Grade::Left, tol)?,
            (false, true) => integrate_graded(f, a, b, Grade::Right, tol)?,
            (true, true) => {
                let mid = 0.5 * (a + b);
                add(
                    integrate_graded(f, a, mid, Grade::Left, tol)?,
                    integrate_graded(f, mid, b, Grade::Right, tol)?,
                )
            }
        };
        parts.push(part);
    }
    Ok(pairwise_sum(&parts))
}

/// `int_0^{2 pi} f(s e^{i theta}, theta) s d theta` over the circle of radius
/// `s` about `center`. The integrand receives the offset from the center, not
/// the rounded point, so it can resolve radii far below the spacing of
/// doubles near `center`.
///
/// Uses the periodic trapezoid rule with doubling. Circles passing near a
/// branch point (where the integrand has sharp peaks or integrable
/// singularities) go to graded Gauss-Kronrod arcs split at the branch angles.
pub fn circle_integral<const M: usize, F>(
    center: Complex64,
    radius: f64,
    branch_points: &[Complex64],
    f: &F,
    tol: Tolerance,
) -> Result<[f64; M]>
where
    F: Fn(Complex64, f64) -> Result<[f64; M]> + Sync,
{
    let mut angles: Vec<f64> = branch_points
        .iter()
        .filter_map(|b| {
            let d = b - center;
            let dist = d.norm();
            ((dist - radius).abs() < NEAR_BRANCH * radius && dist > 0.0)
                .then(|| d.arg().rem_euclid(TAU))
        })
        .collect();
    if angles.is_empty() {
        if let Some(v) = trapezoid(radius, f, tol)? {
            return Ok(v);
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    // A point of the circle is only known to about eps * radius, which is a
    // relative error of eps * radius / gap in its distance to the nearest
    // branch point. Asking for more than that only feeds rounding noise to
    // the error estimate.
    let gap = branch_points
        .iter()
        .map(|b| ((b - center).norm() - radius).abs())
        .fold(f64::INFINITY, f64::min);
    let noise = f64::EPSILON * radius / gap;
    let tol = Tolerance {
        target: tol.target.max(noise.min(tol.accept)),
        ..tol
    };
    arcs(radius, &angles, f, tol)
}

fn trapezoid<const M: usize, F>(radius: f64, f: &F, tol: Tolerance) -> Result<Option<[f64; M]>>
where
    F: Fn(Complex64, f64) -> Result<[f64; M]> + Sync,
{
    let eval = |k: usize, n: usize| {
        let theta = TAU * k as f64 / n as f64;
        f(Complex64::from_polar(radius, theta), theta)
    };
    let mut n = TRAPEZOID_START;
    let first: Vec<[f64; M]> = match (0..n).into_par_iter().map(|k| eval(k, n)).collect() {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    let mut sum = pairwise_sum(&first);
    let mut estimate = scale(sum, TAU * radius / n as f64);
    let mut last_change = f64::INFINITY;
    while n < TRAPEZOID_CAP {
        let fresh: Vec<[f64; M]> =
            match (0..n).into_par_iter().map(|k| eval(2 * k + 1, 2 * n)).collect() {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
        sum = add(sum, pairwise_sum(&fresh));
        n *= 2;
        let next = scale(sum, TAU * radius / n as f64);
        let largest = next.iter().map(|v| v.abs()).fold(0.0, f64::max);
        // largest change relative to its component
        let change = (0..M)
            .map(|m| (next[m] - estimate[m]).abs() / next[m].abs().max(tol.coupling * largest).max(tol.floor))
            .fold(0.0, f64::max);
        estimate = next;
        // Doubling squares the error of an analytic integrand, so the change
        // bounds the error of the previous estimate. Once the changes stop
        // shrinking the integrand's own rounding noise has been reached.
        let stalled = n >= 8 * TRAPEZOID_START && change > 0.5 * last_change;
        if change <= TRAPEZOID_TOL.max(tol.target) || (stalled && change <= tol.accept) {
            return Ok(Some(estimate));
        }
        last_change = change;
    }
    Ok(None)
}

fn arcs<const M: usize, F>(
    radius: f64,
    angles: &[f64],
    f: &F,
    tol: Tolerance,
) -> Result<[f64; M]>
where
    F: Fn(Complex64, f64) -> Result<[f64; M]> + Sync,
{
    if angles.is_empty() {
        let g = |theta: f64| Ok(scale(f(Complex64::from_polar(radius, theta), theta)?, radius));
        return integrate(&g, 0.0, TAU, tol);
    }
    // Each arc is split in half and graded toward both branch angles; points
    // are rotations of the exact branch directions.
    let mut parts = Vec::with_capacity(2 * angles.len());
    for (i, &start) in angles.iter().enumerate() {
        let end = angles.get(i + 1).copied().unwrap_or(angles[0] + TAU);
        let end_angle = angles.get(i + 1).copied().unwrap_or(angles[0]);
        let half = 0.5 * (end - start);
        for (anchor, grade) in [(start, Grade::Left), (end_angle, Grade::Right)] {
            let direction = Complex64::from_polar(radius, anchor);
            // local coordinate: offset from the anchor angle
            let g = |_: f64, offset: f64| {
                let point = direction * Complex64::from_polar(1.0, offset);
                Ok(scale(f(point, anchor + offset)?, radius))
            };
            let (a, b) = if grade == Grade::Left { (0.0, half) } else { (-half, 0.0) };
            parts.push(integrate_graded(&g, a, b, grade, tol)?);
        }
    }
    Ok(pairwise_sum(&parts))
}

pub fn pairwise_sum<const M: usize>(values: &[[f64; M]]) -> [f64; M] {
    match values.len() {
        0 => [0.0; M],
        1 => values[0],
        n => {
            let (left, right) = values.split_at(n / 2);
            add(pairwise_sum(left), pairwise_sum(right))
        }
    }
}

fn add<const M: usize>(mut a: [f64; M], b: [f64; M]) -> [f64; M] {
    for m in 0..M {
        a[m] += b[m];
    }
    a
}

fn scale<const M: usize>(mut a: [f64; M], factor: f64) -> [f64; M] {
    for v in a.iter_mut() {
        *v *= factor;
    }
    a
}
