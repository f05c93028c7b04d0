//! Univariate complex polynomials and their roots.
//!
//! Roots come from the eigenvalues of the companion matrix (complex Schur
//! form) followed by one guarded Newton step per root.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(vec![ZERO]);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// All roots with multiplicity. The zero polynomial has no well-defined
    /// root set and is rejected.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::Domain("roots of the zero polynomial".into()));
        }
        roots_of(&self.coeffs)
    }
}

pub(crate) fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
}

/// Roots of `sum coeffs[k] w^k`; the top coefficient must be nonzero.
pub(crate) fn roots_of(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if lead == ZERO {
        return Err(Error::Domain("leading coefficient vanishes".into()));
    }
    // Exact zero roots are split off so the companion matrix never sees a
    // nilpotent block.
    let zeros = coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced: Vec<Complex64> = coeffs[zeros..].iter().map(|c| c / lead).collect();
    let mut roots = vec![ZERO; zeros];
    let n = reduced.len() - 1;
    let found = match n {
        0 => Vec::new(),
        1 => vec![-reduced[0]],
        2 => quadratic(reduced[1], reduced[0]).to_vec(),
        _ => {
            // Rescale by the geometric mean of the root moduli so the
            // companion matrix is balanced when all coefficients are tiny or
            // huge; the constant term is nonzero after stripping zero roots.
            let rho = reduced[0].norm().powf(1.0 / n as f64);
            let scaled: Vec<Complex64> = reduced
                .iter()
                .enumerate()
                .map(|(k, c)| c * rho.powi(k as i32 - n as i32))
                .collect();
            companion_eigenvalues(&scaled)
                .ok_or_else(|| Error::RootFinding {
                    z: ZERO,
                    residuals: Vec::new(),
                })?
                .into_iter()
                .map(|u| u * rho)
                .collect()
        }
    };
    let derivative: Vec<Complex64> = reduced
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect();
    for (i, w) in found.iter().enumerate() {
        let gap = found
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| (v - w).norm())
            .fold(f64::INFINITY, f64::min);
        roots.push(newton_polish(&reduced, &derivative, *w, gap));
    }
    Ok(roots)
}

/// Roots of the monic quadratic `w^2 + b w + c`, avoiding cancellation.
fn quadratic(b: Complex64, c: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * c).sqrt();
    let sign = if (b.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (b + sign * disc);
    if q == ZERO {
        [ZERO, ZERO]
    } else {
        [q, c / q]
    }
}

/// One Newton step, kept only if it lowers the residual and stays well inside
/// the gap to the nearest other root (so clustered roots cannot merge).
fn newton_polish(p: &[Complex64], dp: &[Complex64], w: Complex64, gap: f64) -> Complex64 {
    let value = horner(p, w);
    let slope = horner(dp, w);
    if slope == ZERO || value == ZERO {
        return w;
    }
    let step = value / slope;
    let candidate = w - step;
    if step.norm() < 0.25 * gap && horner(p, candidate).norm() < value.norm() {
        candidate
    } else {
        w
    }
}

macro_rules! fixed_companion {
    ($monic:expr, $($n:literal),*) => {
        match $monic.len() - 1 {
            $($n => {
                let mut m = SMatrix::<Complex64, $n, $n>::zeros();
                fill_companion(&mut m, $monic);
                nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
                    .and_then(|s| s.eigenvalues())
                    .map(|v| v.iter().copied().collect::<Vec<_>>())
            })*
            n => {
                let mut m = DMatrix::<Complex64>::zeros(n, n);
                fill_companion(&mut m, $monic);
                nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)
                    .and_then(|s| s.eigenvalues())
                    .map(|v| v.iter().copied().collect::<Vec<_>>())
            }
        }
    };
}

fn fill_companion<R, C, S>(m: &mut nalgebra::Matrix<Complex64, R, C, S>, monic: &[Complex64])
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::StorageMut<Complex64, R, C>,
{
    let n = monic.len() - 1;
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i];
    }
}

fn companion_eigenvalues(monic: &[Complex64]) -> Option<Vec<Complex64>> {
    if let Some(v) = fixed_companion!(monic, 3, 4, 5, 6, 7, 8) {
        return Some(v);
    }
    // Highly symmetric root sets can stall the QR iteration; a shift of the
    // variable breaks the symmetry.
    let radius = 1.0 + monic.iter().map(|c| c.norm()).fold(0.0, f64::max);
    [0.013, -0.029, 0.071].iter().find_map(|&t| {
        let shift = Complex64::from_polar(t * radius, 0.6180339887);
        let shifted = taylor_shift(monic, shift);
        let v: Option<Vec<Complex64>> = fixed_companion!(&shifted[..], 3, 4, 5, 6, 7, 8);
        v.map(|roots| roots.into_iter().map(|u| u + shift).collect())
    })
}

/// Coefficients of `p(u + shift)`.
fn taylor_shift(coeffs: &[Complex64], shift: Complex64) -> Vec<Complex64> {
    let mut out = coeffs.to_vec();
    let n = out.len();
    for i in 0..n {
        for k in (i..n - 1).rev() {
            let next = out[k + 1];
            out[k] += shift * next;
        }
    }
    out
}

/// Sort key used for deterministic ordering of points in the plane.
pub fn lex_cmp(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}
