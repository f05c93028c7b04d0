//! Q-valued maps given as the fibers of plane algebraic curves
//! `P(z, w) = sum_{j,k} c[j][k] w^j z^k = 0`, monic (up to a constant) in `w`.
//!
//! The map is `z -> sum_i [[w_i(z)]]` where `w_1..w_Q` are the roots of
//! `w -> P(z, w)`. Away from the discriminant every root is a holomorphic
//! function of `z` with derivative `-P_z / P_w`.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aq_space::QPoint;
use crate::dd;
use crate::error::{Error, Result};
use crate::poly::{horner, lex_cmp, roots_of, Poly};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative size below which discriminant coefficients are treated as zero.
const DISCRIMINANT_CUTOFF: f64 = 1e-14;
/// Discriminant coefficients within this factor of the measured noise are zeroed.
const NOISE_MARGIN: f64 = 100.0;
/// Jet-degeneracy threshold on `|P_w|` relative to its natural magnitude.
const JET_DEGENERACY: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AlgebraicCurve {
    /// `coeffs[j][k]` multiplies `w^j z^k`.
    coeffs: Vec<Vec<Complex64>>,
    cache: OnceLock<CurveData>,
}

#[derive(Debug, Clone)]
struct CurveData {
    reduced: bool,
    branch_points: Vec<Complex64>,
    scale: f64,
}

/// The fiber at `z` together with the derivative of every root.
#[derive(Debug, Clone)]
pub struct FiberJet {
    pub fiber: QPoint,
    pub derivatives: Vec<Complex64>,
    pub valid_derivative: Vec<bool>,
}

/// Roots and root derivatives at one point, in matching order.
#[derive(Debug, Clone)]
pub(crate) struct Sample {
    pub roots: Vec<Complex64>,
    pub derivatives: Vec<Complex64>,
}

/// JSON layout of a curve file, row-major in `(j, k)`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CurveDescriptor {
    pub degree_w: usize,
    pub degree_z: usize,
    pub coeffs: Vec<Vec<[f64; 2]>>,
}

impl AlgebraicCurve {
    pub fn new(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidCurve("degree in w must be at least 1".into()));
        }
        let width = coeffs[0].len();
        if width == 0 || coeffs.iter().any(|row| row.len() != width) {
            return Err(Error::InvalidCurve(
                "coefficient rows must be nonempty and of equal length".into(),
            ));
        }
        if coeffs.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidCurve("coefficients must be finite".into()));
        }
        let lead = coeffs.last().expect("at least two rows");
        if lead[0] == ZERO || lead[1..].iter().any(|c| *c != ZERO) {
            return Err(Error::InvalidCurve(
                "the coefficient of w^Q must be a nonzero constant".into(),
            ));
        }
        Ok(Self {
            coeffs,
            cache: OnceLock::new(),
        })
    }

    pub fn from_descriptor(desc: &CurveDescriptor) -> Result<Self> {
        if desc.coeffs.len() != desc.degree_w + 1
            || desc.coeffs.iter().any(|row| row.len() != desc.degree_z + 1)
        {
            return Err(Error::InvalidCurve(format!(
                "coefficient table must be {} x {}",
                desc.degree_w + 1,
                desc.degree_z + 1
            )));
        }
        Self::new(
            desc.coeffs
                .iter()
                .map(|row| row.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
                .collect(),
        )
    }

    pub fn descriptor(&self) -> CurveDescriptor {
        CurveDescriptor {
            degree_w: self.degree_w(),
            degree_z: self.degree_z(),
            coeffs: self
                .coeffs
                .iter()
                .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_descriptor(&serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.descriptor())?)
    }

    /// `w^Q - z^p`: the homogeneous map `z -> sum [[z^(p/Q)]]` of degree `p/Q`.
    pub fn homogeneous(q: usize, p: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidCurve("Q must be positive".into()));
        }
        let mut coeffs = vec![vec![ZERO; p + 1]; q + 1];
        coeffs[q][0] = Complex64::new(1.0, 0.0);
        coeffs[0][p] -= Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    /// `w - z`, the identity map.
    pub fn linear() -> Self {
        Self::homogeneous(1, 1).expect("valid curve")
    }

    /// `w^Q = 0`, the constant map `Q[[0]]`.
    pub fn zero_map(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidCurve("Q must be positive".into()));
        }
        let mut coeffs = vec![vec![ZERO]; q + 1];
        coeffs[q][0] = Complex64::new(1.0, 0.0);
        Self::new(coeffs)
    }

    /// `w^2 = z (z - eps)`: two 2-points at `0` and `eps`.
    pub fn make_g_eps(eps: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be finite and nonnegative, got {eps}")));
        }
        let mut coeffs = vec![vec![ZERO; 3]; 3];
        coeffs[2][0] = Complex64::new(1.0, 0.0);
        coeffs[0][2] = Complex64::new(-1.0, 0.0);
        coeffs[0][1] = Complex64::new(eps, 0.0);
        Self::new(coeffs)
    }

    /// `(w^2 - z)^2 = eps^2 z^2 prod_i (z - z_i)` with every `|z_i|` in `(1/4, 1/2)`.
    pub fn make_f_eps(eps: f64, points: &[Complex64]) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("eps must be finite and nonnegative, got {eps}")));
        }
        if let Some(bad) = points.iter().find(|z| !(z.norm() > 0.25 && z.norm() < 0.5)) {
            return Err(Error::Domain(format!(
                "branch point {bad} must lie in the annulus 1/4 < |z| < 1/2"
            )));
        }
        let mut product = vec![Complex64::new(1.0, 0.0)];
        for zi in points {
            let mut next = vec![ZERO; product.len() + 1];
            for (m, a) in product.iter().enumerate() {
                next[m + 1] += a;
                next[m] -= a * zi;
            }
            product = next;
        }
        let width = product.len() + 2;
        let mut coeffs = vec![vec![ZERO; width]; 5];
        coeffs[4][0] = Complex64::new(1.0, 0.0);
        coeffs[2][1] = Complex64::new(-2.0, 0.0);
        coeffs[0][2] = Complex64::new(1.0, 0.0);
        for (m, a) in product.iter().enumerate() {
            coeffs[0][m + 2] -= eps * eps * a;
        }
        Self::new(coeffs)
    }

    pub fn degree_w(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn degree_z(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    fn lead(&self) -> Complex64 {
        self.coeffs[self.degree_w()][0]
    }

    /// Coefficients of `w -> P(z, w)` in ascending order.
    pub fn w_coeffs(&self, z: Complex64) -> Vec<Complex64> {
        self.coeffs.iter().map(|row| horner(row, z)).collect()
    }

    /// `d^dz/dz^dz d^dw/dw^dw P` at `(z, w)`.
    pub fn partial(&self, z: Complex64, w: Complex64, dz: usize, dw: usize) -> Complex64 {
        let mut total = ZERO;
        let mut w_pow = Complex64::new(1.0, 0.0);
        for j in dw..self.coeffs.len() {
            let row = &self.coeffs[j];
            let mut inner = ZERO;
            for k in (dz..row.len()).rev() {
                inner = inner * z + row[k] * falling(k, dz);
            }
            total += inner * w_pow * falling(j, dw);
            w_pow *= w;
        }
        total
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.partial(z, w, 0, 0)
    }

    /// The Q roots at `z`, sorted by `(re, im)`.
    pub fn fiber_roots(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.fiber_roots_at(z, ZERO)
    }

    /// The roots at `z = x + u`. Clustered roots are resolved against the
    /// exact sum, so `u` keeps its relative accuracy even when it is far
    /// below the spacing of doubles near `x`.
    pub(crate) fn fiber_roots_at(&self, x: Complex64, u: Complex64) -> Result<Vec<Complex64>> {
        let z = x + u;
        let a = self.w_coeffs(z);
        let mut roots = roots_of(&a).map_err(|e| match e {
            Error::RootFinding { residuals, .. } => Error::RootFinding { z, residuals },
            other => other,
        })?;
        let lead = a[a.len() - 1];
        let coeff_scale = a.iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
        let residuals: Vec<f64> = roots.iter().map(|w| (horner(&a, *w) / lead).norm()).collect();
        let ok = roots.iter().zip(&residuals).all(|(w, r)| {
            r.is_finite()
                && *r <= 1e-9 * (1.0 + coeff_scale) * w.norm().max(1.0).powi(a.len() as i32 - 1)
        });
        if !ok {
            return Err(Error::RootFinding { z, residuals });
        }
        self.refine_clustered(x, u, &mut roots);
        roots.sort_by(lex_cmp);
        Ok(roots)
    }

    /// Re-solves every cluster of close roots from a compensated Taylor
    /// expansion about its centroid, then polishes each root by Newton with
    /// compensated evaluation. Plain evaluation limits clustered roots to an
    /// error of order `sqrt(eps)` times their size, which can exceed the gap.
    fn refine_clustered(&self, x: Complex64, u: Complex64, roots: &mut [Complex64]) {
        for members in clusters(roots, |w| 1e-2 * (1.0 + w.norm())) {
            let m = members.len();
            if m < 2 {
                continue;
            }
            let center = members.iter().map(|&i| roots[i]).sum::<Complex64>() / m as f64;
            let spread = members.iter().map(|&i| (roots[i] - center).norm()).fold(0.0, f64::max);
            let mut factorial = 1.0;
            let local: Vec<Complex64> = (0..=m)
                .map(|k| {
                    if k > 0 {
                        factorial *= k as f64;
                    }
                    dd::partial_at(&self.coeffs, x, u, center, 0, k) / factorial
                })
                .collect();
            let Ok(offsets) = Poly::new(local).roots() else {
                continue;
            };
            let bound = 2.0 * spread + 1e-6 * (1.0 + center.norm());
            if offsets.len() != m || offsets.iter().any(|u| !(u.norm() <= bound)) {
                continue;
            }
            let fresh: Vec<Complex64> = offsets.iter().map(|u| center + u).collect();
            for ((&i, w), gap) in members.iter().zip(&fresh).zip(nearest_gaps(&fresh)) {
                roots[i] = self.polish(x, u, *w, gap);
            }
        }
    }

    fn polish(&self, x: Complex64, u: Complex64, mut w: Complex64, gap: f64) -> Complex64 {
        let mut value = dd::partial_at(&self.coeffs, x, u, w, 0, 0);
        for _ in 0..3 {
            let slope = dd::partial_at(&self.coeffs, x, u, w, 0, 1);
            if slope == ZERO || value == ZERO {
                break;
            }
            let step = value / slope;
            let candidate = w - step;
            let next = dd::partial_at(&self.coeffs, x, u, candidate, 0, 0);
            if step.norm() >= 0.25 * gap || next.norm() >= value.norm() {
                break;
            }
            w = candidate;
            value = next;
        }
        w
    }

    pub fn eval_fiber(&self, z: Complex64) -> Result<QPoint> {
        Ok(QPoint::from_complex(&self.fiber_roots(z)?))
    }

    /// Fiber and root derivatives at `z`.
    pub fn eval_fiber_jet(&self, z: Complex64) -> Result<FiberJet> {
        let roots = self.fiber_roots(z)?;
        let mut derivatives = Vec::with_capacity(roots.len());
        let mut valid = Vec::with_capacity(roots.len());
        let gaps = nearest_gaps(&roots);
        for ((w, m), gap) in roots.iter().zip(self.root_orders(&roots)).zip(gaps) {
            let (num, den, magnitude) = self.implicit_terms(z, ZERO, *w, m, is_clustered(*w, gap));
            let ok = den != ZERO && den.norm() >= JET_DEGENERACY * magnitude;
            derivatives.push(if den != ZERO { -num / den } else { ZERO });
            valid.push(ok);
        }
        Ok(FiberJet {
            fiber: QPoint::from_complex(&roots),
            derivatives,
            valid_derivative: valid,
        })
    }

    /// `|Df|^2(z) = 2 sum_i |w_i'(z)|^2`; undefined on the discriminant.
    pub fn gradient_norm_sq(&self, z: Complex64) -> Result<f64> {
        let jet = self.eval_fiber_jet(z)?;
        if jet.valid_derivative.iter().any(|v| !v) {
            return Err(Error::SingularEvaluation { z });
        }
        Ok(2.0 * jet.derivatives.iter().map(|d| d.norm_sqr()).sum::<f64>())
    }

    /// Roots and derivatives for quadrature: no degeneracy threshold, only a
    /// hard failure when the implicit derivative is exactly undefined.
    pub(crate) fn sample_at(&self, x: Complex64, u: Complex64) -> Result<Sample> {
        let z = x + u;
        let roots = self.fiber_roots_at(x, u)?;
        let mut derivatives = Vec::with_capacity(roots.len());
        let gaps = nearest_gaps(&roots);
        for ((w, m), gap) in roots.iter().zip(self.root_orders(&roots)).zip(gaps) {
            let (num, den, _) = self.implicit_terms(x, u, *w, m, is_clustered(*w, gap));
            if den == ZERO {
                return Err(Error::SingularEvaluation { z });
            }
            derivatives.push(-num / den);
        }
        Ok(Sample { roots, derivatives })
    }

    /// Order of `w`-differentiation used for each root's implicit derivative.
    /// Reduced curves always use the first derivative. On non-reduced curves
    /// a root lying on a component of multiplicity `m` is differentiated
    /// through `d^(m-1)/dw^(m-1) P`, which vanishes simply on that component.
    fn root_orders(&self, roots: &[Complex64]) -> Vec<usize> {
        if self.is_reduced() {
            return vec![1; roots.len()];
        }
        let tol = 1e-6 * (1.0 + roots.iter().map(|w| w.norm()).fold(0.0, f64::max));
        roots
            .iter()
            .map(|w| roots.iter().filter(|v| (*v - w).norm() <= tol).count())
            .collect()
    }

    fn implicit_terms(
        &self,
        x: Complex64,
        u: Complex64,
        w: Complex64,
        m: usize,
        clustered: bool,
    ) -> (Complex64, Complex64, f64) {
        let z = x + u;
        let (num, den) = if clustered {
            (
                dd::partial_at(&self.coeffs, x, u, w, 1, m - 1),
                dd::partial_at(&self.coeffs, x, u, w, 0, m),
            )
        } else {
            (self.partial(z, w, 1, m - 1), self.partial(z, w, 0, m))
        };
        let a = self.w_coeffs(z);
        let radius = w.norm().max(1.0);
        let magnitude: f64 = a
            .iter()
            .enumerate()
            .skip(m)
            .map(|(j, c)| c.norm() * falling(j, m) * radius.powi((j - m) as i32))
            .sum();
        (num, den, magnitude)
    }

    /// `Res_w(P, dP/dw)` as a polynomial in `z`.
    ///
    /// Values on the unit circle come from the root product
    /// `Res = (-1)^(Q(Q-1)/2) lead^(2Q-1) prod_{i<j} (w_i - w_j)^2`, and the
    /// coefficients from a discrete Fourier transform of those values.
    pub fn discriminant_z(&self) -> Result<Poly> {
        let q = self.degree_w();
        let sign = if (q * (q - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let factor = sign * self.lead().powu((2 * q - 1) as u32);
        self.interpolate_discriminant(|roots| factor * pair_product(roots))
    }

    /// Discriminant of the square-free part: only distinct roots enter the
    /// product. Coincides with [`Self::discriminant_z`] up to a constant on
    /// reduced curves.
    fn reduced_discriminant(&self) -> Result<Poly> {
        self.interpolate_discriminant(|roots| pair_product(&cluster_centroids(roots, 1e-6)))
    }

    fn interpolate_discriminant<F>(&self, value: F) -> Result<Poly>
    where
        F: Fn(&[Complex64]) -> Complex64,
    {
        let q = self.degree_w();
        let k_eff = self
            .coeffs
            .iter()
            .filter_map(|row| row.iter().rposition(|c| *c != ZERO))
            .max()
            .unwrap_or(0);
        let n = (2 * q - 1) * k_eff + 1;
        // Twice the needed samples: the upper half of the spectrum is zero in
        // exact arithmetic and measures the noise floor of the lower half.
        let total = 2 * n;
        let samples: Vec<Complex64> = (0..total)
            .map(|k| {
                let z = Complex64::from_polar(1.0, TAU * k as f64 / total as f64);
                self.fiber_roots(z).map(|roots| value(&roots))
            })
            .collect::<Result<_>>()?;
        let spectrum: Vec<Complex64> = (0..total)
            .map(|m| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        v * Complex64::from_polar(1.0, -TAU * (k * m % total) as f64 / total as f64)
                    })
                    .sum::<Complex64>()
                    / total as f64
            })
            .collect();
        let noise = spectrum[n..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut coeffs = spectrum[..n].to_vec();
        let largest = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cutoff = (NOISE_MARGIN * noise).max(DISCRIMINANT_CUTOFF * largest);
        for c in coeffs.iter_mut() {
            if c.norm() <= cutoff {
                *c = ZERO;
            }
        }
        Ok(Poly::new(coeffs))
    }

    /// False when every fiber has a repeated root (the discriminant vanishes
    /// identically), e.g. `(w^2 - z)^2 = 0`.
    pub fn is_reduced(&self) -> bool {
        self.data().reduced
    }

    /// Deduplicated zeros of the (square-free) discriminant, sorted by `(re, im)`.
    pub fn branch_points(&self) -> &[Complex64] {
        &self.data().branch_points
    }

    /// `1 + max |w|` over fibers on the circle `|z| = 2`.
    pub fn scale(&self) -> f64 {
        self.data().scale
    }

    fn data(&self) -> &CurveData {
        self.cache.get_or_init(|| {
            let reduced = self.detect_reduced();
            let branch_points = self.locate_branch_points(reduced).unwrap_or_default();
            let scale = 1.0
                + (0..64)
                    .filter_map(|k| {
                        let z = Complex64::from_polar(2.0, TAU * (k as f64 + 0.5) / 64.0);
                        self.fiber_roots(z).ok()
                    })
                    .flat_map(|roots| roots.into_iter().map(|w| w.norm()))
                    .fold(0.0, f64::max);
            CurveData {
                reduced,
                branch_points,
                scale,
            }
        })
    }

    fn detect_reduced(&self) -> bool {
        // A reduced curve has distinct roots at a generic point.
        (0..8).any(|k| {
            let z = Complex64::from_polar(0.7 + 0.1 * k as f64, 0.3 + 0.77 * k as f64);
            self.fiber_roots(z).is_ok_and(|roots| {
                let scale = 1.0 + roots.iter().map(|w| w.norm()).fold(0.0, f64::max);
                roots
                    .iter()
                    .enumerate()
                    .all(|(i, a)| roots[i + 1..].iter().all(|b| (a - b).norm() > 1e-6 * scale))
            })
        })
    }

    fn locate_branch_points(&self, reduced: bool) -> Result<Vec<Complex64>> {
        let disc = if reduced {
            self.discriminant_z()?
        } else {
            self.reduced_discriminant()?
        };
        if disc.degree() == 0 {
            return Ok(Vec::new());
        }
        let roots = disc.roots()?;
        let mut points: Vec<Complex64> = cluster_by(&roots, |z| 1e-4 * (1.0 + z.norm()))
            .into_iter()
            .map(|c| if reduced { self.refine_collision(c).unwrap_or(c) } else { c })
            .collect();
        points.sort_by(lex_cmp);
        let mut deduped: Vec<Complex64> = Vec::with_capacity(points.len());
        for z in points {
            if !deduped.iter().any(|d| (d - z).norm() <= 1e-8 * (1.0 + z.norm())) {
                deduped.push(z);
            }
        }
        Ok(deduped)
    }

    /// Newton's method on `P = P_w = 0` in `(z, w)`, started from the closest
    /// root pair at `z0`. Converges quadratically at simple branch points.
    fn refine_collision(&self, z0: Complex64) -> Option<Complex64> {
        if z0.norm() == 0.0 {
            // Exact zeros of the discriminant come out exactly.
            return Some(z0);
        }
        let roots = self.fiber_roots(z0).ok()?;
        let mut best = (f64::INFINITY, ZERO);
        for (i, a) in roots.iter().enumerate() {
            for b in &roots[i + 1..] {
                let d = (a - b).norm();
                if d < best.0 {
                    best = (d, (a + b) / 2.0);
                }
            }
        }
        let (mut z, mut w) = (z0, best.1);
        let mut last_residual = f64::INFINITY;
        for _ in 0..60 {
            // the residuals cancel heavily near a collision
            let f1 = crate::dd::partial(&self.coeffs, z, w, 0, 0);
            let f2 = crate::dd::partial(&self.coeffs, z, w, 0, 1);
            let pz = self.partial(z, w, 1, 0);
            let pwz = self.partial(z, w, 1, 1);
            let pww = self.partial(z, w, 0, 2);
            let det = pz * pww - f2 * pwz;
            if det == ZERO {
                return None;
            }
            let dz = (f1 * pww - f2 * f2) / det;
            let dw = (pz * f2 - pwz * f1) / det;
            z -= dz;
            w -= dw;
            if !z.re.is_finite() || (z - z0).norm() > 1e-3 * (1.0 + z0.norm()) {
                return None;
            }
            // Converged, or stalled at the rounding floor of an
            // ill-conditioned collision.
            let residual = f1.norm() + f2.norm();
            let small = dz.norm() <= 1e-6 * (1.0 + z.norm());
            if dz.norm() <= 1e-15 * (1.0 + z.norm()) || (small && residual >= last_residual) {
                return Some(z);
            }
            last_residual = residual;
        }
        None
    }

    /// The curve whose fiber over `y` is `f(x + s y) / c`:
    /// `P'(y, v) = P(x + s y, c v)`, renormalized to a monic leading term.
    pub fn affine_pullback(&self, x: Complex64, s: f64, c: f64) -> Result<Self> {
        if !(s > 0.0 && c > 0.0 && s.is_finite() && c.is_finite()) {
            return Err(Error::Domain(format!("pullback needs s, c > 0 (got s = {s}, c = {c})")));
        }
        let q = self.degree_w();
        let kmax = self.degree_z();
        let norm = self.lead() * c.powi(q as i32);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let cj = c.powi(j as i32);
                (0..=kmax)
                    .map(|m| {
                        let mut acc = ZERO;
                        for (k, ck) in row.iter().enumerate().skip(m) {
                            acc += ck * binomial(k, m) * x.powu((k - m) as u32);
                        }
                        acc * cj * s.powi(m as i32) / norm
                    })
                    .collect()
            })
            .collect();
        Self::new(coeffs)
    }
}

fn nearest_gaps(roots: &[Complex64]) -> Vec<f64> {
    roots
        .iter()
        .enumerate()
        .map(|(i, w)| {
            roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| (v - w).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn is_clustered(w: Complex64, gap: f64) -> bool {
    gap < 1e-2 * (1.0 + w.norm())
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn pair_product(roots: &[Complex64]) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    for (i, a) in roots.iter().enumerate() {
        for b in &roots[i + 1..] {
            let d = a - b;
            prod *= d * d;
        }
    }
    prod
}

fn cluster_centroids(roots: &[Complex64], rel_tol: f64) -> Vec<Complex64> {
    let scale = 1.0 + roots.iter().map(|w| w.norm()).fold(0.0, f64::max);
    cluster_by(roots, |_| rel_tol * scale)
}

/// Single-linkage clusters (distance below `tol(point)`), returned as centroids.
pub(crate) fn cluster_by<F>(points: &[Complex64], tol: F) -> Vec<Complex64>
where
    F: Fn(Complex64) -> f64,
{
    clusters(points, tol)
        .into_iter()
        .map(|members| members.iter().map(|&i| points[i]).sum::<Complex64>() / members.len() as f64)
        .collect()
}

/// Single-linkage clusters as index lists, in order of first member.
pub(crate) fn clusters<F>(points: &[Complex64], tol: F) -> Vec<Vec<usize>>
where
    F: Fn(Complex64) -> f64,
{
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let t = tol(points[i]).max(tol(points[j]));
            if (points[i] - points[j]).norm() <= t {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups.into_iter().map(|(_, members)| members).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zi() -> Vec<Complex64> {
        vec![c(0.3, 0.1), c(-0.2, 0.3), c(-0.1, -0.35)]
    }

    /// Sylvester-matrix resultant, evaluated by Gaussian elimination.
    fn sylvester_resultant(p: &[Complex64], q: &[Complex64]) -> Complex64 {
        let (m, n) = (p.len() - 1, q.len() - 1);
        let size = m + n;
        let mut a = vec![vec![ZERO; size]; size];
        for i in 0..n {
            for (k, coef) in p.iter().rev().enumerate() {
                a[i][i + k] = *coef;
            }
        }
        for i in 0..m {
            for (k, coef) in q.iter().rev().enumerate() {
                a[n + i][i + k] = *coef;
            }
        }
        let mut det = Complex64::new(1.0, 0.0);
        for col in 0..size {
            let pivot = (col..size)
                .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
                .unwrap();
            if a[pivot][col] == ZERO {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..size {
                let f = a[r][col] / a[col][col];
                for k in col..size {
                    let v = a[col][k];
                    a[r][k] -= f * v;
                }
            }
        }
        det
    }

    #[test]
    fn rejects_non_monic_curves() {
        let bad = vec![vec![c(1.0, 0.0), ZERO], vec![ZERO, c(1.0, 0.0)]];
        assert!(matches!(AlgebraicCurve::new(bad), Err(Error::InvalidCurve(_))));
        assert!(AlgebraicCurve::new(vec![vec![c(1.0, 0.0)]]).is_err());
        assert!(AlgebraicCurve::make_f_eps(0.1, &[c(0.1, 0.0)]).is_err());
        assert!(AlgebraicCurve::make_f_eps(0.1, &[c(0.6, 0.0)]).is_err());
        assert!(AlgebraicCurve::make_g_eps(-1.0).is_err());
    }

    #[test]
    fn g_eps_collapses_at_both_branch_points() {
        let eps = 0.2;
        let g = AlgebraicCurve::make_g_eps(eps).unwrap();
        let zero = QPoint::collapsed(2, &[0.0, 0.0]);
        assert!(g.eval_fiber(ZERO).unwrap().approx_eq(&zero));
        assert!(g.eval_fiber(c(eps, 0.0)).unwrap().fiber_diameter() < 1e-7);
        // w^2 = (eps/2)(-eps/2) = -(eps/2)^2
        let mid = g.eval_fiber(c(eps / 2.0, 0.0)).unwrap();
        let expected = QPoint::from_complex(&[c(0.0, eps / 2.0), c(0.0, -eps / 2.0)]);
        assert!(mid.approx_eq(&expected));
    }

    #[test]
    fn jets_of_simple_curves() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let jet = sqrt.eval_fiber_jet(c(1.0, 0.0)).unwrap();
        // roots sorted: -1 then +1; derivatives -1/2 and +1/2
        assert!((jet.fiber.complex(0) - c(-1.0, 0.0)).norm() < 1e-14);
        assert!((jet.derivatives[0] - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((jet.derivatives[1] - c(0.5, 0.0)).norm() < 1e-14);
        assert!(jet.valid_derivative.iter().all(|v| *v));

        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        assert!(g.eval_fiber_jet(ZERO).unwrap().valid_derivative.iter().all(|v| !v));
        assert!(matches!(g.gradient_norm_sq(ZERO), Err(Error::SingularEvaluation { .. })));

        let id = AlgebraicCurve::linear();
        let jet = id.eval_fiber_jet(c(0.3, -2.0)).unwrap();
        assert_eq!(jet.derivatives, vec![c(1.0, 0.0)]);
    }

    #[test]
    fn gradient_norm_examples() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        for r in [0.1, 0.5, 2.0] {
            let z = Complex64::from_polar(r, 0.8);
            assert!((sqrt.gradient_norm_sq(z).unwrap() - 1.0 / r).abs() < 1e-12 / r);
        }
        assert!((AlgebraicCurve::linear().gradient_norm_sq(c(5.0, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        // f_0 = (w^2 - z)^2: branches +-sqrt(z) with multiplicity two each,
        // |w'|^2 = 1/(4|z|) on all four, so |Df|^2 = 2 * 4 / 4 = 2 at z = 1.
        let f0 = AlgebraicCurve::make_f_eps(0.0, &zi()).unwrap();
        assert!(!f0.is_reduced());
        assert!((f0.gradient_norm_sq(c(1.0, 0.0)).unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn f_eps_fibers() {
        let f0 = AlgebraicCurve::make_f_eps(0.0, &zi()).unwrap();
        let z = c(0.7, 0.2);
        let r = z.sqrt();
        let expected = QPoint::from_complex(&[r, r, -r, -r]);
        assert!(crate::aq_space::metric_g(&f0.eval_fiber(z).unwrap(), &expected).unwrap() < 1e-6);

        let f = AlgebraicCurve::make_f_eps(0.01, &zi()).unwrap();
        assert_eq!(f.eval_fiber(ZERO).unwrap(), QPoint::collapsed(4, &[0.0, 0.0]));
        for k in 0..100 {
            let z = Complex64::from_polar(0.02 * k as f64, 2.4 * k as f64);
            let bary = f.eval_fiber(z).unwrap().barycenter();
            assert!(bary[0].abs() < 1e-12 && bary[1].abs() < 1e-12);
            let gb = AlgebraicCurve::make_g_eps(0.1).unwrap().eval_fiber(z).unwrap().barycenter();
            assert!(gb[0].abs() < 1e-12 && gb[1].abs() < 1e-12);
        }
    }

    #[test]
    fn g_zero_is_plus_minus_identity() {
        let g0 = AlgebraicCurve::make_g_eps(0.0).unwrap();
        let z = c(0.4, -0.9);
        assert!(g0.eval_fiber(z).unwrap().approx_eq(&QPoint::from_complex(&[z, -z])));
    }

    #[test]
    fn discriminant_examples() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let d = sqrt.discriminant_z().unwrap();
        assert_eq!(d.degree(), 1);
        assert_eq!(d.coeffs()[0], ZERO);

        // disc(w^2 - z(z - eps)) = 4 z (z - eps); the resultant carries a sign.
        let eps = 0.3;
        let g = AlgebraicCurve::make_g_eps(eps).unwrap();
        let d = g.discriminant_z().unwrap();
        let mut roots = d.roots().unwrap();
        roots.sort_by(lex_cmp);
        assert!(roots[0].norm() < 1e-12);
        assert!((roots[1] - c(eps, 0.0)).norm() < 1e-12);
        let bp = g.branch_points();
        assert_eq!(bp.len(), 2);
        assert_eq!(bp[0], ZERO);
        assert!((bp[1] - c(eps, 0.0)).norm() < 1e-15);

        let id = AlgebraicCurve::linear();
        let d = id.discriminant_z().unwrap();
        assert_eq!(d.degree(), 0);
        assert!(d.coeffs()[0] != ZERO);
        assert!(id.branch_points().is_empty());
    }

    #[test]
    fn resultant_matches_sylvester_determinant() {
        let f = AlgebraicCurve::make_f_eps(0.2, &zi()).unwrap();
        let d = f.discriminant_z().unwrap();
        for z in [c(0.3, 0.2), c(-1.1, 0.4), c(0.05, -0.6)] {
            let a = f.w_coeffs(z);
            let da: Vec<Complex64> = a.iter().enumerate().skip(1).map(|(j, x)| x * j as f64).collect();
            let oracle = sylvester_resultant(&a, &da);
            assert!((d.eval(z) - oracle).norm() < 1e-9 * (1.0 + oracle.norm()), "{} vs {}", d.eval(z), oracle);
        }
    }

    #[test]
    fn f_eps_branch_points_are_origin_and_the_chosen_points() {
        for eps in [1e-3, 1e-2, 0.1] {
            let f = AlgebraicCurve::make_f_eps(eps, &zi()).unwrap();
            let near: Vec<Complex64> =
                f.branch_points().iter().copied().filter(|z| z.norm() < 2.0).collect();
            let mut expected = zi();
            expected.push(ZERO);
            expected.sort_by(lex_cmp);
            assert_eq!(near.len(), 4, "eps = {eps}: {near:?}");
            for (a, b) in near.iter().zip(&expected) {
                assert!((a - b).norm() < 1e-8, "eps = {eps}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn vieta_sum_matches_coefficient() {
        let curve = AlgebraicCurve::new(vec![
            vec![c(0.5, 0.0), c(0.0, 1.0), c(-0.2, 0.0)],
            vec![c(1.0, 0.0), c(0.3, 0.0), ZERO],
            vec![ZERO, c(1.0, 1.0), ZERO],
            vec![c(2.0, 0.0), ZERO, ZERO],
        ])
        .unwrap();
        for k in 0..20 {
            let z = Complex64::from_polar(0.1 * k as f64, 1.3 * k as f64);
            let a = curve.w_coeffs(z);
            let sum: Complex64 = curve.fiber_roots(z).unwrap().iter().sum();
            assert!((sum + a[2] / a[3]).norm() < 1e-9);
        }
    }

    #[test]
    fn holder_continuity_of_fibers() {
        // Near a sqrt branch point G(f(z+h), f(z)) ~ |h|^(1/2).
        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let lipschitz = |z: Complex64, h: Complex64| {
            let a = g.eval_fiber(z + h).unwrap();
            let b = g.eval_fiber(z).unwrap();
            crate::aq_space::metric_g(&a, &b).unwrap() / h.norm().sqrt()
        };
        let constant = lipschitz(ZERO, c(1e-2, 0.0)) * 4.0;
        for k in 0..50 {
            let z = Complex64::from_polar(0.5 * (k as f64 / 50.0), 0.9 * k as f64);
            let h = Complex64::from_polar(10f64.powi(-(k % 6) as i32 - 1), 0.4 * k as f64);
            assert!(lipschitz(z, h) <= constant, "z = {z}, h = {h}");
        }
    }

    #[test]
    fn gradient_matches_matched_finite_differences() {
        let f = AlgebraicCurve::make_f_eps(0.1, &zi()).unwrap();
        let h = 1e-5;
        for z in [c(0.9, 0.3), c(-0.6, 0.7), c(0.2, -1.2)] {
            let center = f.eval_fiber(z).unwrap();
            let mut total = 0.0;
            for dir in [c(1.0, 0.0), c(0.0, 1.0)] {
                let plus = f.eval_fiber(z + dir * h).unwrap();
                let minus = f.eval_fiber(z - dir * h).unwrap();
                let sp = crate::aq_space::optimal_matching(&center, &plus).unwrap();
                let sm = crate::aq_space::optimal_matching(&center, &minus).unwrap();
                for i in 0..4 {
                    let d = (plus.complex(sp[i]) - minus.complex(sm[i])) / (2.0 * h);
                    total += d.norm_sqr();
                }
            }
            let exact = f.gradient_norm_sq(z).unwrap();
            assert!((total - exact).abs() < 1e-4 * exact, "{total} vs {exact}");
        }
    }

    #[test]
    fn pullback_rescales_fibers() {
        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let (x, s, k) = (c(0.1, 0.2), 0.5, 3.0);
        let p = g.affine_pullback(x, s, k).unwrap();
        for y in [c(0.2, 0.1), c(-0.7, 0.3)] {
            let expected = g.eval_fiber(x + y * s).unwrap().scaled(1.0 / k);
            assert!(p.eval_fiber(y).unwrap().approx_eq(&expected));
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let f = AlgebraicCurve::make_f_eps(0.05, &zi()).unwrap();
        let back = AlgebraicCurve::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.coeffs(), f.coeffs());
        let bad = r#"{"degree_w": 2, "degree_z": 1, "coeffs": [[[0,0],[1,0]]]}"#;
        assert!(AlgebraicCurve::from_json(bad).is_err());
    }
}
