//! The space of unordered Q-tuples `A_Q(R^n)`.
//!
//! A [`QPoint`] stores its Q values in a fixed internal order, but every
//! operation here depends only on the multiset: the metric `G` minimizes the
//! root-sum-square distance over all pairings of the two tuples.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// An unordered Q-tuple of points in `R^n`, stored flat (`q * dim` coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct QPoint {
    dim: usize,
    coords: Vec<f64>,
}

impl QPoint {
    pub fn new(values: &[Vec<f64>]) -> Result<Self> {
        let first = values
            .first()
            .ok_or_else(|| Error::Domain("a Q-point needs at least one value".into()))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Domain("ambient dimension must be positive".into()));
        }
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch(
                "all values of a Q-point must share one dimension".into(),
            ));
        }
        Ok(Self {
            dim,
            coords: values.iter().flatten().copied().collect(),
        })
    }

    /// Q-point in `R^2`, identifying the plane with `C`.
    pub fn from_complex(values: &[Complex64]) -> Self {
        assert!(!values.is_empty(), "a Q-point needs at least one value");
        Self {
            dim: 2,
            coords: values.iter().flat_map(|w| [w.re, w.im]).collect(),
        }
    }

    /// The collapsed point `Q[[p]]`.
    pub fn collapsed(q: usize, p: &[f64]) -> Self {
        assert!(q > 0 && !p.is_empty());
        Self {
            dim: p.len(),
            coords: p.iter().copied().cycle().take(q * p.len()).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Value `i` as a complex number. Only meaningful for `dim == 2`.
    pub fn complex(&self, i: usize) -> Complex64 {
        debug_assert_eq!(self.dim, 2);
        Complex64::new(self.coords[2 * i], self.coords[2 * i + 1])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.q()).map(|i| self.complex(i)).collect()
    }

    /// Reorders the stored values: slot `i` of the result holds value `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.q());
        Self {
            dim: self.dim,
            coords: perm.iter().flat_map(|&j| self.value(j).iter().copied()).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| c * x).collect(),
        }
    }

    pub fn translated(&self, p: &[f64]) -> Self {
        assert_eq!(p.len(), self.dim);
        Self {
            dim: self.dim,
            coords: self
                .coords
                .iter()
                .enumerate()
                .map(|(k, x)| x + p[k % self.dim])
                .collect(),
        }
    }

    /// Arithmetic mean of the values.
    pub fn barycenter(&self) -> Vec<f64> {
        let q = self.q() as f64;
        let mut mean = vec![0.0; self.dim];
        for v in self.values() {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= q);
        mean
    }

    pub fn subtract_barycenter(&self) -> Self {
        let neg: Vec<f64> = self.barycenter().iter().map(|m| -m).collect();
        self.translated(&neg)
    }

    /// `max_{i,j} |p_i - p_j|`; zero iff the point is collapsed.
    pub fn fiber_diameter(&self) -> f64 {
        let q = self.q();
        let mut diam: f64 = 0.0;
        for i in 0..q {
            for j in i + 1..q {
                diam = diam.max(dist_sq(self.value(i), self.value(j)).sqrt());
            }
        }
        diam
    }

    /// `|T| = G(T, Q[[0]])`.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest Euclidean norm among the values.
    pub fn max_value_norm(&self) -> f64 {
        self.values()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Multiset equality up to `1e-10 * (1 + max norm)`.
    pub fn approx_eq(&self, other: &QPoint) -> bool {
        let scale = 1.0 + self.max_value_norm().max(other.max_value_norm());
        metric_g(self, other).is_ok_and(|g| g < 1e-10 * scale)
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_compatible(t: &QPoint, s: &QPoint) -> Result<()> {
    if t.q() != s.q() {
        return Err(Error::DimensionMismatch(format!(
            "multiplicities differ: {} vs {}",
            t.q(),
            s.q()
        )));
    }
    if t.dim != s.dim {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions differ: {} vs {}",
            t.dim, s.dim
        )));
    }
    Ok(())
}

/// Row-major `Q x Q` matrix of squared distances `|t_i - s_j|^2`.
pub fn squared_cost_matrix(t: &QPoint, s: &QPoint) -> Result<Vec<f64>> {
    check_compatible(t, s)?;
    let q = t.q();
    let mut cost = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            cost.push(dist_sq(t.value(i), s.value(j)));
        }
    }
    Ok(cost)
}

/// Cost of the assignment `i -> perm[i]`, summed in row order.
pub fn assignment_cost(cost: &[f64], perm: &[usize]) -> f64 {
    let q = perm.len();
    perm.iter().enumerate().map(|(i, &j)| cost[i * q + j]).sum()
}

/// The permutation realizing `G(T, S)`: value `i` of `t` is paired with
/// value `sigma[i]` of `s`. Ties go to the lexicographically smallest
/// permutation.
pub fn optimal_matching(t: &QPoint, s: &QPoint) -> Result<Vec<usize>> {
    let cost = squared_cost_matrix(t, s)?;
    Ok(lexicographic_assignment(&cost, t.q()))
}

/// `G(T, S) = min_sigma (sum_i |t_i - s_sigma(i)|^2)^(1/2)`.
pub fn metric_g(t: &QPoint, s: &QPoint) -> Result<f64> {
    let cost = squared_cost_matrix(t, s)?;
    let perm = lexicographic_assignment(&cost, t.q());
    Ok(assignment_cost(&cost, &perm).sqrt())
}

/// Minimum-cost assignment on a square `n x n` cost matrix, with ties
/// resolved towards the lexicographically smallest permutation.
pub fn lexicographic_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    match n {
        0 => Vec::new(),
        1 => vec![0],
        2 => {
            let id = cost[0] + cost[3];
            let swap = cost[1] + cost[2];
            if swap < id {
                vec![1, 0]
            } else {
                vec![0, 1]
            }
        }
        _ => {
            let best = hungarian(cost, n);
            let optimum = assignment_cost(cost, &best);
            let tol = 1e-12 * optimum;

            // Fix rows one at a time to the smallest column that still admits
            // an optimal completion.
            let mut perm = Vec::with_capacity(n);
            let mut used = vec![false; n];
            let mut prefix = 0.0;
            for row in 0..n {
                let free: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
                let mut chosen = None;
                for &col in &free {
                    let rest_cols: Vec<usize> =
                        free.iter().copied().filter(|&j| j != col).collect();
                    let rest = sub_optimum(cost, n, row + 1, &rest_cols);
                    if prefix + cost[row * n + col] + rest <= optimum + tol {
                        chosen = Some(col);
                        break;
                    }
                }
                // Round-off can reject every column by a hair; fall back to
                // the Hungarian choice for this row.
                let col = chosen.unwrap_or_else(|| {
                    free.iter()
                        .copied()
                        .min_by(|&a, &b| {
                            let ca = cost[row * n + a]
                                + sub_optimum(cost, n, row + 1, &without(&free, a));
                            let cb = cost[row * n + b]
                                + sub_optimum(cost, n, row + 1, &without(&free, b));
                            ca.total_cmp(&cb)
                        })
                        .expect("free columns remain")
                });
                prefix += cost[row * n + col];
                used[col] = true;
                perm.push(col);
            }
            perm
        }
    }
}

fn without(cols: &[usize], skip: usize) -> Vec<usize> {
    cols.iter().copied().filter(|&j| j != skip).collect()
}

/// Optimal cost of assigning rows `first_row..n` to `cols`.
fn sub_optimum(cost: &[f64], n: usize, first_row: usize, cols: &[usize]) -> f64 {
    let m = cols.len();
    debug_assert_eq!(m, n - first_row);
    if m == 0 {
        return 0.0;
    }
    let mut sub = Vec::with_capacity(m * m);
    for r in first_row..n {
        for &c in cols {
            sub.push(cost[r * n + c]);
        }
    }
    let perm = hungarian(&sub, m);
    assignment_cost(&sub, &perm)
}

/// Kuhn-Munkres with potentials, `O(n^3)`. Returns the column of each row.
fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row (1-based) matched to column j; column 0 is a sentinel.
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}
