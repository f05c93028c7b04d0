//! Dirichlet energy `D(x, r)`, boundary height `H(x, r)` and the frequency
//! `I(x, r) = r D / H` of a two-dimensional Q-valued map, with the checks
//! that surround the monotonicity of `I`.
//!
//! Circle integrals are taken with respect to arc length. For a holomorphic
//! branch `w` the radial derivative at `x + s e^{i theta}` is `w' e^{i theta}`,
//! so all boundary quantities come from the fiber jet.

use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::aq_space::QPoint;
use crate::curve::AlgebraicCurve;
use crate::error::{Error, Result};
use crate::io::{csv_bytes, fmt17, write_atomically};
use crate::quadrature::{circle_integral, integrate_panels, Tolerance};

/// Fraction of the curve scale below which `H` counts as zero.
pub const DEGENERATE_HEIGHT: f64 = 1e-14;
/// Relative slack allowed in the inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-6;
/// Relative tolerance of the centered-difference log-derivative check.
pub const LOG_DERIVATIVE_TOL: f64 = 1e-3;
/// Smallest radius used to extrapolate `I(x, 0+)`.
pub const SMALL_SCALE_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct FrequencyOptions {
    pub circle: Tolerance,
    pub radial: Tolerance,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        Self {
            circle: Tolerance::new(1e-11, 1e-8),
            radial: Tolerance::new(1e-10, 1e-6),
        }
    }
}

/// Boundary integrals over `|z - x| = s`: `int |d_r f|^2`, `int |f|^2` and
/// `int <d_r f, f>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMoments {
    pub radial_sq: f64,
    pub height: f64,
    pub cross: f64,
}

impl CircleMoments {
    /// `int_{|z - x| = s} |Df|^2`, twice the radial part for holomorphic branches.
    pub fn energy_density(&self) -> f64 {
        2.0 * self.radial_sq
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    pub energy: Vec<f64>,
    pub height: Vec<f64>,
    /// `None` where the height is degenerate.
    pub frequency: Vec<Option<f64>>,
}

impl RadialProfile {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<Vec<String>> = (0..self.radii.len())
            .map(|k| {
                vec![
                    fmt17(self.radii[k]),
                    fmt17(self.energy[k]),
                    fmt17(self.height[k]),
                    self.frequency[k].map(fmt17).unwrap_or_default(),
                ]
            })
            .collect();
        csv_bytes(&["r", "D", "H", "I"], &rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomically(path, &self.to_csv()?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub s: f64,
    pub t: f64,
    /// `I(t) - I(s)`.
    pub lhs: f64,
    /// `int_s^t 2r (A H - B^2) / H^2 dr` with `A = int |d_r f|^2`,
    /// `B = int <d_r f, f>` over the circle of radius `r`.
    pub rhs: f64,
    pub residual: f64,
}

impl MonotonicityReport {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.residual <= rel_tol * (1.0 + self.lhs.abs())
    }
}

/// One inequality `lower <= upper`, with relative slack `(upper - lower) / |upper|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Inequality {
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
}

impl Inequality {
    fn new(lower: f64, upper: f64) -> Self {
        let scale = upper.abs().max(lower.abs()).max(f64::MIN_POSITIVE);
        Self {
            lower,
            upper,
            slack: (upper - lower) / scale,
        }
    }

    pub fn holds(&self) -> bool {
        self.slack >= -INEQUALITY_SLACK
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub r: f64,
    pub t: f64,
    /// Centered difference of `ln(H(tau) / tau)` at `tau = t`.
    pub log_derivative: f64,
    /// `2 I(t) / t`.
    pub log_derivative_expected: f64,
    pub log_derivative_error: f64,
    /// `(r/t)^{2 I(t)} H(t)/t <= H(r)/r`.
    pub height_lower: Inequality,
    /// `H(r)/r <= (r/t)^{2 I(r)} H(t)/t`.
    pub height_upper: Inequality,
    /// `(I(r)/I(t)) (r/t)^{2 I(t)} D(t) <= D(r)`.
    pub energy_lower: Inequality,
    /// `D(r) <= (r/t)^{2 I(r)} D(t)`.
    pub energy_upper: Inequality,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoincareReport {
    pub r: f64,
    pub height_over_r: f64,
    /// `2 int_0^r D(s)/s ds`.
    pub middle: f64,
    /// `Q D(r)`.
    pub q_energy: f64,
    pub first: Inequality,
    pub second: Inequality,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Blowup {
    pub points: Vec<QPoint>,
    /// `D(x, s)^{1/2}`.
    pub normalization: f64,
    /// Energy of the rescaled map on the unit disk, computed independently.
    pub rescaled_energy: f64,
}

/// Frequency computations for one curve.
pub struct Frequency<'a> {
    curve: &'a AlgebraicCurve,
    options: FrequencyOptions,
}

impl<'a> Frequency<'a> {
    pub fn new(curve: &'a AlgebraicCurve) -> Self {
        Self::with_options(curve, FrequencyOptions::default())
    }

    pub fn with_options(curve: &'a AlgebraicCurve, options: FrequencyOptions) -> Self {
        Self { curve, options }
    }

    pub fn curve(&self) -> &AlgebraicCurve {
        self.curve
    }

    pub fn moments(&self, x: Complex64, s: f64) -> Result<CircleMoments> {
        let [radial_sq, height, cross] = self.moments_vec(x, s)?;
        Ok(CircleMoments {
            radial_sq,
            height,
            cross,
        })
    }

    fn moments_vec(&self, x: Complex64, s: f64) -> Result<[f64; 3]> {
        // The cross term cancels between sheets. It is integrated as
        // `B + M` and `M` with `M = sum |d_r w| |w| >= |B|` pointwise, so
        // its error is measured against `M`.
        let [a, h, shifted, majorant] = self.circle(x, s, |roots, derivatives, dir| {
            let mut out = [0.0; 4];
            for (w, d) in roots.iter().zip(derivatives) {
                let cross = ((d * dir).conj() * w).re;
                let size = d.norm() * w.norm();
                out[0] += d.norm_sqr();
                out[1] += w.norm_sqr();
                out[2] += cross + size;
                out[3] += size;
            }
            out
        })?;
        Ok([a, h, shifted - majorant])
    }

    /// `int_{|z-x|=s} |Df|^2`; diverges on circles through branch points.
    fn energy_density(&self, x: Complex64, s: f64) -> Result<f64> {
        let [v] = self.circle(x, s, |_, derivatives, _| {
            [2.0 * derivatives.iter().map(|d| d.norm_sqr()).sum::<f64>()]
        })?;
        Ok(v)
    }

    fn circle<const M: usize, G>(&self, x: Complex64, s: f64, g: G) -> Result<[f64; M]>
    where
        G: Fn(&[Complex64], &[Complex64], Complex64) -> [f64; M] + Sync,
    {
        let curve = self.curve;
        let integrand = |u: Complex64, theta: f64| {
            let sample = curve.sample_at(x, u)?;
            Ok(g(&sample.roots, &sample.derivatives, Complex64::from_polar(1.0, theta)))
        };
        circle_integral(x, s, curve.branch_points(), &integrand, self.options.circle)
    }

    /// Panel boundaries on `[lo, hi]` for radial integrals about `x`; branch
    /// radii are flagged singular, and so is the origin.
    fn radial_points(&self, x: Complex64, lo: f64, hi: f64) -> Vec<(f64, bool)> {
        let radii: Vec<f64> = self.curve.branch_points().iter().map(|b| (b - x).norm()).collect();
        let on_branch = |r: f64| radii.iter().any(|d| (d - r).abs() <= 1e-12 * r.max(1e-300));
        let mut points = vec![(lo, lo == 0.0 || on_branch(lo))];
        let mut inner: Vec<f64> = radii
            .iter()
            .copied()
            .filter(|d| *d > lo * (1.0 + 1e-12) && *d < hi * (1.0 - 1e-12))
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        points.extend(inner.into_iter().map(|d| (d, true)));
        points.push((hi, on_branch(hi)));
        points
    }

    pub fn height(&self, x: Complex64, r: f64) -> Result<f64> {
        check_radius(r)?;
        let curve = self.curve;
        let integrand = |u: Complex64, _: f64| {
            Ok([curve.fiber_roots_at(x, u)?.iter().map(|w| w.norm_sqr()).sum::<f64>()])
        };
        Ok(circle_integral(x, r, curve.branch_points(), &integrand, self.options.circle)?[0])
    }

    /// `int_lo^hi (int_{|z-x|=s} |Df|^2) ds`.
    fn energy_between(&self, x: Complex64, lo: f64, hi: f64) -> Result<f64> {
        let points = self.radial_points(x, lo, hi);
        let f = |anchor: f64, offset: f64| Ok([self.energy_density(x, anchor + offset)?]);
        Ok(integrate_panels(&f, &points, self.options.radial)?[0])
    }

    pub fn energy(&self, x: Complex64, r: f64) -> Result<f64> {
        check_radius(r)?;
        self.energy_between(x, 0.0, r)
    }

    fn degenerate_height(&self) -> f64 {
        DEGENERATE_HEIGHT * self.curve.scale()
    }

    fn ratio(&self, r: f64, energy: f64, height: f64) -> Result<f64> {
        if height < self.degenerate_height() {
            return Err(Error::DegenerateHeight { height, radius: r });
        }
        Ok(r * energy / height)
    }

    pub fn frequency(&self, x: Complex64, r: f64) -> Result<f64> {
        let energy = self.energy(x, r)?;
        let height = self.height(x, r)?;
        self.ratio(r, energy, height)
    }

    /// `D`, `H` and `I` at increasing radii, accumulating `D` panel by panel.
    pub fn profile(&self, x: Complex64, radii: &[f64]) -> Result<RadialProfile> {
        if radii.is_empty() {
            return Err(Error::Domain("profile needs at least one radius".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || !(radii[0] > 0.0) {
            return Err(Error::Domain("radii must be positive and strictly increasing".into()));
        }
        let mut energy = Vec::with_capacity(radii.len());
        let mut height = Vec::with_capacity(radii.len());
        let mut frequency = Vec::with_capacity(radii.len());
        let mut total = 0.0;
        let mut lo = 0.0;
        for &r in radii {
            check_radius(r)?;
            total += self.energy_between(x, lo, r)?;
            lo = r;
            let h = self.height(x, r)?;
            energy.push(total);
            height.push(h);
            frequency.push(self.ratio(r, total, h).ok());
        }
        Ok(RadialProfile {
            center: [x.re, x.im],
            radii: radii.to_vec(),
            energy,
            height,
            frequency,
        })
    }

    pub fn monotonicity_check(&self, x: Complex64, s: f64, t: f64) -> Result<MonotonicityReport> {
        if !(s > 0.0 && s < t && t.is_finite()) {
            return Err(Error::Domain(format!("need 0 < s < t, got s = {s}, t = {t}")));
        }
        let profile = self.profile(x, &[s, t])?;
        let degenerate = |k: usize| Error::DegenerateHeight {
            height: profile.height[k],
            radius: profile.radii[k],
        };
        let lhs = profile.frequency[1].ok_or_else(|| degenerate(1))?
            - profile.frequency[0].ok_or_else(|| degenerate(0))?;
        let floor = self.degenerate_height();
        let integrand = |anchor: f64, offset: f64| {
            let r = anchor + offset;
            let [a, h, b] = self.moments_vec(x, r)?;
            if h < floor {
                return Err(Error::DegenerateHeight { height: h, radius: r });
            }
            // The second component is the size against which the cancelling
            // Cauchy-Schwarz deficit is measured.
            Ok([2.0 * r * (a * h - b * b) / (h * h), 2.0 * r * a / h])
        };
        let tol = self.options.radial.with_coupling(1e-4);
        let rhs = integrate_panels(&integrand, &self.radial_points(x, s, t), tol)?[0];
        Ok(MonotonicityReport {
            s,
            t,
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
        })
    }

    pub fn verify_growth_bounds(&self, x: Complex64, r: f64, t: f64) -> Result<GrowthReport> {
        if !(r > 0.0 && r <= t && t.is_finite()) {
            return Err(Error::Domain(format!("need 0 < r <= t, got r = {r}, t = {t}")));
        }
        let radii: Vec<f64> = if r < t { vec![r, t] } else { vec![t] };
        let profile = self.profile(x, &radii)?;
        let last = radii.len() - 1;
        let (hr, ht) = (profile.height[0], profile.height[last]);
        let (dr, dt) = (profile.energy[0], profile.energy[last]);
        let ir = self.ratio(r, dr, hr)?;
        let it = self.ratio(t, dt, ht)?;

        let step = 1e-3;
        let (t_minus, t_plus) = (t * (1.0 - step), t * (1.0 + step));
        let log_h = |tau: f64| -> Result<f64> { Ok((self.height(x, tau)? / tau).ln()) };
        let log_derivative = (log_h(t_plus)? - log_h(t_minus)?) / (t_plus - t_minus);
        let expected = 2.0 * it / t;
        let log_derivative_error = (log_derivative - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);

        let q = r / t;
        let height_lower = Inequality::new(q.powf(2.0 * it) * ht / t, hr / r);
        let height_upper = Inequality::new(hr / r, q.powf(2.0 * ir) * ht / t);
        let energy_lower = Inequality::new(ir / it * q.powf(2.0 * it) * dt, dr);
        let energy_upper = Inequality::new(dr, q.powf(2.0 * ir) * dt);
        let passed = log_derivative_error <= LOG_DERIVATIVE_TOL
            && [height_lower, height_upper, energy_lower, energy_upper]
                .iter()
                .all(Inequality::holds);
        Ok(GrowthReport {
            r,
            t,
            log_derivative,
            log_derivative_expected: expected,
            log_derivative_error,
            height_lower,
            height_upper,
            energy_lower,
            energy_upper,
            passed,
        })
    }

    /// Checks `H(x,r)/r <= 2 int_0^r D(x,s)/s ds <= Q D(x,r)` at a point where
    /// the whole fiber sits at the origin.
    pub fn verify_poincare(&self, x: Complex64, r: f64) -> Result<PoincareReport> {
        check_radius(r)?;
        let fiber = self.curve.eval_fiber(x)?;
        let tol = 1e-7 * self.curve.scale();
        if fiber.fiber_diameter() > tol || fiber.max_value_norm() > tol {
            return Err(Error::Precondition(format!(
                "{x} is not a point of full multiplicity at the origin (diameter {}, norm {})",
                fiber.fiber_diameter(),
                fiber.max_value_norm()
            )));
        }
        let energy = self.energy(x, r)?;
        let height = self.height(x, r)?;
        // 2 int_0^r D(s)/s ds = 2 int_0^r E(u) ln(r/u) du by Fubini.
        let mut points = self.radial_points(x, 0.0, r);
        if let Some(last) = points.last_mut() {
            last.1 = true;
        }
        let integrand = |anchor: f64, offset: f64| {
            let u = anchor + offset;
            let log = if anchor == r { -(offset / r).ln_1p() } else { (r / u).ln() };
            Ok([self.energy_density(x, u)? * log])
        };
        let middle = 2.0 * integrate_panels(&integrand, &points, self.options.radial)?[0];
        let q_energy = self.curve.degree_w() as f64 * energy;
        let first = Inequality::new(height / r, middle);
        let second = Inequality::new(middle, q_energy);
        Ok(PoincareReport {
            r,
            height_over_r: height / r,
            middle,
            q_energy,
            first,
            second,
            passed: first.holds() && second.holds(),
        })
    }

    /// Samples of `y -> f(x + s y) / D(x, s)^{1/2}` for `|y| <= 1`, together
    /// with the unit-disk energy of that rescaling computed on the pulled-back
    /// curve.
    pub fn blowup_rescale(&self, x: Complex64, s: f64, samples: &[Complex64]) -> Result<Blowup> {
        check_radius(s)?;
        if let Some(y) = samples.iter().find(|y| y.norm() > 1.0) {
            return Err(Error::Domain(format!("blow-up sample {y} lies outside the unit disk")));
        }
        let energy = self.energy(x, s)?;
        if !(energy > DEGENERATE_HEIGHT) {
            return Err(Error::DegenerateRescaling(energy));
        }
        let normalization = energy.sqrt();
        let points = samples
            .iter()
            .map(|y| Ok(self.curve.eval_fiber(x + y * s)?.scaled(1.0 / normalization)))
            .collect::<Result<Vec<_>>>()?;
        let pulled = self.curve.affine_pullback(x, s, normalization)?;
        let rescaled_energy = Frequency::with_options(&pulled, self.options).energy(Complex64::new(0.0, 0.0), 1.0)?;
        if (rescaled_energy - 1.0).abs() > 1e-3 {
            return Err(Error::InternalLogic(format!(
                "rescaled energy {rescaled_energy} differs from 1"
            )));
        }
        Ok(Blowup {
            points,
            normalization,
            rescaled_energy,
        })
    }

    /// `I(x, 0+)` by Richardson extrapolation of `I` at `r0, 2 r0, 4 r0`,
    /// eliminating the first two orders of a Taylor expansion in `r`.
    pub fn small_scale_frequency(&self, x: Complex64) -> Result<f64> {
        let r0 = SMALL_SCALE_RADIUS;
        let profile = self.profile(x, &[r0, 2.0 * r0, 4.0 * r0])?;
        let i: Vec<f64> = profile
            .frequency
            .iter()
            .zip(&profile.height)
            .zip(&profile.radii)
            .map(|((f, h), r)| f.ok_or(Error::DegenerateHeight { height: *h, radius: *r }))
            .collect::<Result<_>>()?;
        Ok((8.0 * i[0] - 6.0 * i[1] + i[2]) / 3.0)
    }

    /// Largest ratio `I(x, 1) / I(0, 2)` over the given points.
    pub fn interior_constant(&self, points: &[Complex64]) -> Result<f64> {
        let reference = self.frequency(Complex64::new(0.0, 0.0), 2.0)?;
        let mut worst: f64 = 0.0;
        for x in points {
            worst = worst.max(self.frequency(*x, 1.0)? / reference);
        }
        Ok(worst)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive and finite, got {r}")))
    }
}

pub fn height_h(curve: &AlgebraicCurve, x: Complex64, r: f64) -> Result<f64> {
    Frequency::new(curve).height(x, r)
}

pub fn energy_d(curve: &AlgebraicCurve, x: Complex64, r: f64) -> Result<f64> {
    Frequency::new(curve).energy(x, r)
}

pub fn frequency_i(curve: &AlgebraicCurve, x: Complex64, r: f64) -> Result<f64> {
    Frequency::new(curve).frequency(x, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

    fn zi() -> Vec<Complex64> {
        vec![Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.3), Complex64::new(-0.1, -0.35)]
    }

    #[test]
    fn square_root_oracles() {
        let curve = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let f = Frequency::new(&curve);
        for r in [0.1, 1.0, 1.7] {
            assert_relative_eq!(f.height(ORIGIN, r).unwrap(), 4.0 * PI * r * r, max_relative = 1e-11);
            assert_relative_eq!(f.energy(ORIGIN, r).unwrap(), 2.0 * PI * r, max_relative = 1e-9);
            assert_relative_eq!(f.frequency(ORIGIN, r).unwrap(), 0.5, max_relative = 1e-9);
        }
    }

    #[test]
    fn linear_and_constant_maps() {
        let id = AlgebraicCurve::linear();
        let f = Frequency::new(&id);
        assert_relative_eq!(f.height(ORIGIN, 0.7).unwrap(), 2.0 * PI * 0.7f64.powi(3), max_relative = 1e-12);
        assert_relative_eq!(f.energy(ORIGIN, 0.7).unwrap(), 2.0 * PI * 0.49, max_relative = 1e-10);
        assert_relative_eq!(f.frequency(ORIGIN, 0.7).unwrap(), 1.0, max_relative = 1e-10);

        let zero = AlgebraicCurve::zero_map(3).unwrap();
        let f = Frequency::new(&zero);
        assert_eq!(f.height(ORIGIN, 1.0).unwrap(), 0.0);
        assert_eq!(f.energy(ORIGIN, 1.0).unwrap(), 0.0);
        assert!(matches!(f.frequency(ORIGIN, 1.0), Err(Error::DegenerateHeight { .. })));
        assert!(matches!(f.blowup_rescale(ORIGIN, 1.0, &[]), Err(Error::DegenerateRescaling(_))));
    }

    #[test]
    fn homogeneous_polar_oracle() {
        // w^Q = z^p: H = 2 pi Q r^{2a+1}, D = 2 pi Q a r^{2a}, a = p/Q.
        for (q, p) in [(3usize, 1usize), (3, 2), (4, 1)] {
            let curve = AlgebraicCurve::homogeneous(q, p).unwrap();
            let f = Frequency::new(&curve);
            let a = p as f64 / q as f64;
            let r: f64 = 0.6;
            let qf = q as f64;
            assert_relative_eq!(f.height(ORIGIN, r).unwrap(), 2.0 * PI * qf * r.powf(2.0 * a + 1.0), max_relative = 1e-11);
            assert_relative_eq!(f.energy(ORIGIN, r).unwrap(), 2.0 * PI * qf * a * r.powf(2.0 * a), max_relative = 1e-9);
        }
    }

    #[test]
    fn energy_across_an_interior_branch_point() {
        // Off-center disk for w^2 = z: |Df|^2 = 1/|z| integrated over B_1(1/2).
        let curve = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let x = Complex64::new(0.5, 0.0);
        let d = Frequency::new(&curve).energy(x, 1.0).unwrap();
        // Oracle: int_{B_1(x)} 1/|z| dA = int_0^{2pi} rho(phi) dphi in polar
        // coordinates about the origin, rho the distance to the boundary.
        let oracle = crate::quadrature::integrate(
            &|phi: f64| {
                let c = 0.5 * phi.cos();
                Ok([c + (c * c + 0.75).sqrt()])
            },
            0.0,
            2.0 * PI,
            Tolerance::new(1e-14, 1e-12),
        )
        .unwrap()[0];
        assert_relative_eq!(d, oracle, max_relative = 1e-8);
    }

    #[test]
    fn profile_is_cumulative_and_consistent() {
        let curve = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let f = Frequency::new(&curve);
        let radii = [0.1, 0.3, 0.5, 1.0];
        let p = f.profile(ORIGIN, &radii).unwrap();
        for k in 0..radii.len() {
            assert_relative_eq!(p.energy[k], f.energy(ORIGIN, radii[k]).unwrap(), max_relative = 1e-8);
            assert_relative_eq!(p.frequency[k].unwrap(), radii[k] * p.energy[k] / p.height[k], max_relative = 1e-14);
        }
        let csv = String::from_utf8(p.to_csv().unwrap()).unwrap();
        assert!(csv.starts_with("r,D,H,I\n"));
        assert_eq!(csv.lines().count(), radii.len() + 1);
        assert!(f.profile(ORIGIN, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn monotonicity_identity_examples() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let rep = Frequency::new(&sqrt).monotonicity_check(ORIGIN, 0.5, 1.5).unwrap();
        assert!(rep.lhs.abs() < 1e-9 && rep.rhs.abs() < 1e-9, "{rep:?}");

        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let rep = Frequency::new(&g).monotonicity_check(ORIGIN, 0.5, 1.5).unwrap();
        assert!(rep.passed(1e-3), "{rep:?}");
        assert!(rep.rhs >= -1e-9);
        assert!(rep.lhs > 0.0);
    }

    #[test]
    fn monotonicity_identity_on_a_single_valued_map() {
        // f = z + z^2: I(r) = (1 + 2r^2)/(1 + r^2), I' = 2r/(1+r^2)^2.
        let curve = AlgebraicCurve::new(vec![
            vec![Complex64::new(0.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        ])
        .unwrap();
        let exact = |r: f64| (1.0 + 2.0 * r * r) / (1.0 + r * r);
        let rep = Frequency::new(&curve).monotonicity_check(ORIGIN, 0.2, 0.9).unwrap();
        assert_relative_eq!(rep.lhs, exact(0.9) - exact(0.2), max_relative = 1e-8);
        assert_relative_eq!(rep.rhs, exact(0.9) - exact(0.2), max_relative = 1e-8);
    }

    #[test]
    fn growth_bounds() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let rep = Frequency::new(&sqrt).verify_growth_bounds(ORIGIN, 0.3, 1.2).unwrap();
        assert!(rep.passed, "{rep:?}");
        for ineq in [rep.height_lower, rep.height_upper, rep.energy_lower, rep.energy_upper] {
            assert!(ineq.slack.abs() < 1e-8, "{ineq:?}");
        }
        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let rep = Frequency::new(&g).verify_growth_bounds(ORIGIN, 0.4, 1.6).unwrap();
        assert!(rep.passed, "{rep:?}");
        let id = AlgebraicCurve::linear();
        let rep = Frequency::new(&id).verify_growth_bounds(ORIGIN, 0.4, 1.6).unwrap();
        assert!(rep.passed && rep.energy_upper.slack.abs() < 1e-8, "{rep:?}");
    }

    #[test]
    fn poincare_chain() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let rep = Frequency::new(&sqrt).verify_poincare(ORIGIN, 1.0).unwrap();
        assert_relative_eq!(rep.height_over_r, 4.0 * PI, max_relative = 1e-10);
        assert_relative_eq!(rep.middle, 4.0 * PI, max_relative = 1e-8);
        assert_relative_eq!(rep.q_energy, 4.0 * PI, max_relative = 1e-8);
        assert!(rep.passed);

        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        assert!(Frequency::new(&g).verify_poincare(ORIGIN, 0.1).unwrap().passed);
        let err = Frequency::new(&g).verify_poincare(Complex64::new(0.1, 0.0), 0.1);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn blowups() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        let f = Frequency::new(&sqrt);
        let ys = [Complex64::new(0.5, 0.2), Complex64::new(-0.3, -0.6)];
        let a = f.blowup_rescale(ORIGIN, 0.1, &ys).unwrap();
        let b = f.blowup_rescale(ORIGIN, 1.0, &ys).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!(crate::aq_space::metric_g(p, q).unwrap() < 1e-9);
        }
        // profile z^{1/2} / sqrt(2 pi)
        let y = ys[0];
        let profile = QPoint::from_complex(&[y.sqrt() / (2.0 * PI).sqrt(), -y.sqrt() / (2.0 * PI).sqrt()]);
        assert!(crate::aq_space::metric_g(&b.points[0], &profile).unwrap() < 1e-9);
        assert!((a.rescaled_energy - 1.0).abs() < 1e-6);

        let g = AlgebraicCurve::make_g_eps(0.3).unwrap();
        let f = Frequency::new(&g);
        let coarse = f.blowup_rescale(ORIGIN, 0.1, &ys).unwrap();
        let fine = f.blowup_rescale(ORIGIN, 0.01, &ys).unwrap();
        // near 0, g = +-(-eps z)^{1/2} (1 + O(z))
        let gap = |b: &Blowup| {
            b.points
                .iter()
                .zip(&ys)
                .map(|(p, y)| {
                    let v = (-y).sqrt();
                    let h = QPoint::from_complex(&[v, -v]).scaled(1.0 / (2.0 * PI).sqrt());
                    crate::aq_space::metric_g(p, &h).unwrap()
                })
                .fold(0.0, f64::max)
        };
        assert!(gap(&fine) < gap(&coarse) && gap(&fine) < 0.05, "{} {}", gap(&fine), gap(&coarse));
        assert!(f.blowup_rescale(ORIGIN, 0.1, &[Complex64::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn small_scale_frequency_at_branch_points() {
        let sqrt = AlgebraicCurve::homogeneous(2, 1).unwrap();
        assert_relative_eq!(Frequency::new(&sqrt).small_scale_frequency(ORIGIN).unwrap(), 0.5, max_relative = 1e-8);
        let f = AlgebraicCurve::make_f_eps(0.01, &zi()).unwrap();
        let i0 = Frequency::new(&f).small_scale_frequency(ORIGIN).unwrap();
        assert!((i0 - 0.5).abs() < 1e-3, "{i0}");
    }
}
