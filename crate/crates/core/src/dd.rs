//! Compensated (double-double) evaluation of bivariate polynomials.
//!
//! Used where the value of `P` or a partial derivative is the small
//! difference of large terms, e.g. `dP/dw` at two nearly coincident roots.

use num_complex::Complex64;

/// Error-free sum: `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let t = FACTOR * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Error-free product (Dekker): `a b = p + e` exactly, barring overflow.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from_prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    /// `self * b` for a double `b`.
    fn mul_f(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }
}

#[derive(Clone, Copy, Debug)]
struct CDd {
    re: Dd,
    im: Dd,
}

impl CDd {
    const ZERO: CDd = CDd { re: Dd::ZERO, im: Dd::ZERO };

    fn add(self, o: CDd) -> CDd {
        CDd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    fn mul_c(self, z: Complex64) -> CDd {
        CDd {
            re: self.re.mul_f(z.re).add(self.im.mul_f(z.im).neg()),
            im: self.re.mul_f(z.im).add(self.im.mul_f(z.re)),
        }
    }

    fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    /// The unrounded sum `x + u`.
    fn sum(x: Complex64, u: Complex64) -> CDd {
        let (rh, rl) = two_sum(x.re, u.re);
        let (ih, il) = two_sum(x.im, u.im);
        CDd { re: Dd { hi: rh, lo: rl }, im: Dd { hi: ih, lo: il } }
    }

    fn from_scaled(c: Complex64, factor: f64) -> CDd {
        CDd { re: Dd::from_prod(c.re, factor), im: Dd::from_prod(c.im, factor) }
    }

    fn round(self) -> Complex64 {
        Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
    }
}

fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

/// `d^dz/dz^dz d^dw/dw^dw P(z, w)` for `P = sum coeffs[j][k] w^j z^k`, with
/// roughly twice the working precision before the final rounding.
pub(crate) fn partial(coeffs: &[Vec<Complex64>], z: Complex64, w: Complex64, dz: usize, dw: usize) -> Complex64 {
    partial_at(coeffs, z, Complex64::new(0.0, 0.0), w, dz, dw)
}

/// As [`partial`] at `z = x + u`, the sum taken without rounding.
pub(crate) fn partial_at(
    coeffs: &[Vec<Complex64>],
    x: Complex64,
    u: Complex64,
    w: Complex64,
    dz: usize,
    dw: usize,
) -> Complex64 {
    let z = CDd::sum(x, u);
    let mut acc = CDd::ZERO;
    for j in (dw..coeffs.len()).rev() {
        let row = &coeffs[j];
        let mut inner = CDd::ZERO;
        for k in (dz..row.len()).rev() {
            inner = inner.mul(z).add(CDd::from_scaled(row[k], falling(k, dz) * falling(j, dw)));
        }
        acc = acc.mul_c(w).add(inner);
    }
    acc.round()
}
