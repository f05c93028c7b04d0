//! Independent oracles and benchmark curves shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qfreq::curve::AlgebraicCurve;
use qfreq::QPoint;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

/// Three branch points in the annulus 1/4 < |z| < 1/2.
pub fn zi() -> Vec<Complex64> {
    vec![c(0.3, 0.1), c(-0.2, 0.3), c(-0.1, -0.35)]
}

/// Every permutation of `0..n`, by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(p.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, p, out);
            let j = if k % 2 == 0 { i } else { 0 };
            p.swap(j, k - 1);
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// `G(a, b)` as the minimum over all `Q!` pairings.
pub fn brute_force_g(a: &QPoint, b: &QPoint) -> f64 {
    permutations(a.q())
        .iter()
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(i, &j)| a.value(i).iter().zip(b.value(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

pub struct Benchmark {
    pub name: String,
    pub curve: AlgebraicCurve,
    pub homogeneous: bool,
}

/// The example families used throughout: `g_eps`, `f_eps` with three branch
/// points, and `w^Q = z^p`.
pub fn benchmarks() -> Vec<Benchmark> {
    let mut out = Vec::new();
    for eps in [0.05, 0.1, 0.3] {
        out.push(Benchmark {
            name: format!("g_{eps}"),
            curve: AlgebraicCurve::make_g_eps(eps).unwrap(),
            homogeneous: false,
        });
    }
    for eps in [1e-3, 1e-2] {
        out.push(Benchmark {
            name: format!("f_{eps}"),
            curve: AlgebraicCurve::make_f_eps(eps, &zi()).unwrap(),
            homogeneous: false,
        });
    }
    for (q, p) in [(2, 1), (3, 1), (3, 2), (4, 1)] {
        out.push(Benchmark {
            name: format!("w^{q}=z^{p}"),
            curve: AlgebraicCurve::homogeneous(q, p).unwrap(),
            homogeneous: true,
        });
    }
    out
}
