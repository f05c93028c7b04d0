//! Discrete Dirichlet minimization for Q-valued maps on a triangulated disk.
//!
//! The energy of a labeling is `sum_e w_e G(u(a), u(b))^2` over mesh edges.
//! With the optimal matching of every edge frozen, the energy is a quadratic
//! form on the cover graph whose nodes are (vertex, sheet) pairs, minimized
//! by one sparse solve; recomputing the matchings can only lower it further.

mod mesh;

use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::aq_space::{lexicographic_assignment, QPoint};
use crate::curve::AlgebraicCurve;
use crate::error::{Error, Result};
use crate::frequency::RadialProfile;
use crate::io::{csv_bytes, fmt17, write_atomically};

pub use mesh::{build_disk_mesh, build_disk_mesh_with, DiskMesh, Edge, Weights};

/// Relative energy decrease below which minimization stops.
pub const ENERGY_TOL: f64 = 1e-10;
/// Relative residual of the conjugate-gradient solves.
pub const CG_TOL: f64 = 1e-13;
const CG_MAX_ITER: usize = 20_000;
/// Seeds of the random initial matchings in the basin report.
pub const BASIN_SEEDS: [u64; 3] = [11, 23, 47];

/// One Q-point per vertex, stored as complex sheets.
#[derive(Debug, Clone, PartialEq)]
pub struct QLabeling {
    pub q: usize,
    pub values: Vec<Vec<Complex64>>,
}

impl QLabeling {
    pub fn qpoint(&self, v: usize) -> QPoint {
        QPoint::from_complex(&self.values[v])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q: self.q,
            values: self.values.iter().map(|s| s.iter().map(|w| w * c).collect()).collect(),
        }
    }

    /// Every vertex shifted by minus its own barycenter.
    pub fn subtract_barycenter(&self) -> Self {
        Self {
            q: self.q,
            values: self
                .values
                .iter()
                .map(|s| {
                    let mean = s.iter().sum::<Complex64>() / s.len() as f64;
                    s.iter().map(|w| w - mean).collect()
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut rows = Vec::with_capacity(self.values.len() * self.q);
        for (v, sheets) in self.values.iter().enumerate() {
            for (i, w) in sheets.iter().enumerate() {
                rows.push(vec![v.to_string(), i.to_string(), fmt17(w.re), fmt17(w.im)]);
            }
        }
        csv_bytes(&["vertex", "sheet", "re", "im"], &rows)
    }
}

/// Squared distance and optimal matching of two complex Q-points.
fn matched(a: &[Complex64], b: &[Complex64]) -> (f64, Vec<usize>) {
    let q = a.len();
    if q == 1 {
        return ((a[0] - b[0]).norm_sqr(), vec![0]);
    }
    let cost: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| (x - y).norm_sqr())).collect();
    let perm = lexicographic_assignment(&cost, q);
    let total = perm.iter().enumerate().map(|(i, &j)| cost[i * q + j]).sum();
    (total, perm)
}

/// Fibers of the curve at the boundary vertices. Interior entries are zero.
pub fn boundary_trace(curve: &AlgebraicCurve, mesh: &DiskMesh) -> Result<QLabeling> {
    let q = curve.degree_w();
    let mut values = vec![vec![Complex64::new(0.0, 0.0); q]; mesh.vertex_count()];
    for (v, z) in mesh.vertices.iter().enumerate() {
        if mesh.boundary[v] {
            values[v] = curve.fiber_roots(*z)?;
        }
    }
    Ok(QLabeling { q, values })
}

pub fn discrete_energy(mesh: &DiskMesh, labels: &QLabeling) -> f64 {
    let terms: Vec<f64> = mesh
        .edges
        .par_iter()
        .map(|e| e.weight * matched(&labels.values[e.a], &labels.values[e.b]).0)
        .collect();
    terms.iter().sum()
}

/// Boundary sheets reordered by nearest-neighbour transport along the circle,
/// starting at angle 0. Going once around realizes the monodromy as a jump
/// between the last and first boundary vertex.
pub fn transport_boundary(mesh: &DiskMesh, labels: &QLabeling) -> QLabeling {
    let mut out = labels.clone();
    let ring = mesh.ring_vertices(mesh.resolution);
    let mut previous: Option<usize> = None;
    for v in ring {
        if let Some(p) = previous {
            let (_, perm) = matched(&out.values[p], &labels.values[v]);
            out.values[v] = perm.iter().map(|&j| labels.values[v][j]).collect();
        }
        previous = Some(v);
    }
    out
}

/// Sheet-by-sheet discrete harmonic extension of the boundary labels, taken
/// in the order they are stored.
pub fn harmonic_extension(mesh: &DiskMesh, boundary: &QLabeling) -> Result<QLabeling> {
    let q = boundary.q;
    let identity: Vec<usize> = (0..q).collect();
    let matchings = vec![identity; mesh.edges.len()];
    let mut labels = boundary.clone();
    solve_frozen(mesh, &matchings, &mut labels)?;
    Ok(labels)
}

/// Default initial labeling: the transported boundary, extended harmonically
/// on the cover graph that glues the sheets across the ray at angle 0 by the
/// boundary monodromy. This places the single branching defect at the center
/// instead of smearing it along the seam.
pub fn initial_labels(mesh: &DiskMesh, boundary: &QLabeling) -> Result<QLabeling> {
    let transported = transport_boundary(mesh, boundary);
    let ring = mesh.ring_vertices(mesh.resolution);
    let (first, last) = (ring.start, ring.end - 1);
    let (_, monodromy) = matched(&transported.values[last], &transported.values[first]);
    let mut inverse = vec![0; monodromy.len()];
    for (i, &j) in monodromy.iter().enumerate() {
        inverse[j] = i;
    }
    let identity: Vec<usize> = (0..boundary.q).collect();
    let angle = |v: usize| mesh.vertices[v].arg().rem_euclid(std::f64::consts::TAU);
    let matchings: Vec<Vec<usize>> = mesh
        .edges
        .iter()
        .map(|e| {
            if mesh.ring[e.a] == 0 || mesh.ring[e.b] == 0 {
                return identity.clone();
            }
            let (alpha, beta) = (angle(e.a), angle(e.b));
            if (alpha - beta).abs() <= std::f64::consts::PI {
                identity.clone()
            } else if alpha > beta {
                monodromy.clone()
            } else {
                inverse.clone()
            }
        })
        .collect();
    let mut labels = transported;
    solve_frozen(mesh, &matchings, &mut labels)?;
    Ok(labels)
}

/// Harmonic extension of a boundary whose sheets are shuffled independently
/// at every boundary vertex.
pub fn random_initial_labels(mesh: &DiskMesh, boundary: &QLabeling, seed: u64) -> Result<QLabeling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = boundary.clone();
    for v in mesh.ring_vertices(mesh.resolution) {
        shuffled.values[v].shuffle(&mut rng);
    }
    harmonic_extension(mesh, &shuffled)
}

#[derive(Debug, Clone, Serialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub energy: f64,
    /// Edges whose matching changed after the solve.
    pub matching_changes: usize,
}

#[derive(Debug, Clone)]
pub struct Minimization {
    pub labels: QLabeling,
    pub energy: f64,
    pub log: Vec<LogEntry>,
    pub converged: bool,
}

impl Minimization {
    pub fn log_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<Vec<String>> = self
            .log
            .iter()
            .map(|l| vec![l.iteration.to_string(), fmt17(l.energy), l.matching_changes.to_string()])
            .collect();
        csv_bytes(&["iteration", "energy", "matching_changes"], &rows)
    }

    pub fn write_log_csv(&self, path: &Path) -> Result<()> {
        write_atomically(path, &self.log_csv()?)
    }
}

/// Alternating minimization: solve with frozen matchings, then rematch.
///
/// Boundary labels are taken from `initial` and never change.
pub fn minimize(mesh: &DiskMesh, initial: &QLabeling, max_iterations: usize) -> Result<Minimization> {
    check_labels(mesh, initial)?;
    let mut labels = initial.clone();
    let mut matchings = edge_matchings(mesh, &labels);
    let mut energy = discrete_energy(mesh, &labels);
    let mut log = vec![LogEntry {
        iteration: 0,
        energy,
        matching_changes: 0,
    }];
    let mut converged = false;
    for iteration in 1..=max_iterations {
        solve_frozen(mesh, &matchings, &mut labels)?;
        let next = edge_matchings(mesh, &labels);
        let matching_changes = next.iter().zip(&matchings).filter(|(a, b)| a != b).count();
        matchings = next;
        let fresh = discrete_energy(mesh, &labels);
        // Each half-step is an exact minimization over a set containing the
        // previous state; only solver rounding can make the energy rise.
        if fresh > energy * (1.0 + 1e-11) + 1e-300 {
            return Err(Error::InternalLogic(format!(
                "energy rose from {energy:e} to {fresh:e} at iteration {iteration}"
            )));
        }
        let decrease = energy - fresh;
        energy = fresh.min(energy);
        log.push(LogEntry {
            iteration,
            energy,
            matching_changes,
        });
        if matching_changes == 0 || decrease <= ENERGY_TOL * energy {
            converged = true;
            break;
        }
    }
    Ok(Minimization {
        labels,
        energy,
        log,
        converged,
    })
}

fn check_labels(mesh: &DiskMesh, labels: &QLabeling) -> Result<()> {
    if labels.values.len() != mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} vertices",
            labels.values.len(),
            mesh.vertex_count()
        )));
    }
    if labels.q == 0 || labels.values.iter().any(|s| s.len() != labels.q) {
        return Err(Error::DimensionMismatch(format!("every label must have Q = {} sheets", labels.q)));
    }
    Ok(())
}

fn edge_matchings(mesh: &DiskMesh, labels: &QLabeling) -> Vec<Vec<usize>> {
    mesh.edges
        .par_iter()
        .map(|e| matched(&labels.values[e.a], &labels.values[e.b]).1)
        .collect()
}

/// Minimizes `sum_e w_e sum_i |u_a[i] - u_b[sigma_e(i)]|^2` over interior
/// labels: the Dirichlet problem for the Laplacian of the cover graph.
/// Every cover node is joined to the boundary, so the system is definite.
fn solve_frozen(mesh: &DiskMesh, matchings: &[Vec<usize>], labels: &mut QLabeling) -> Result<()> {
    let q = labels.q;
    let n = mesh.vertex_count() * q;
    let node = |v: usize, i: usize| v * q + i;
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (e, perm) in mesh.edges.iter().zip(matchings) {
        for (i, &j) in perm.iter().enumerate() {
            let (x, y) = (node(e.a, i), node(e.b, j));
            adjacency[x].push((y, e.weight));
            adjacency[y].push((x, e.weight));
        }
    }
    let fixed: Vec<bool> = (0..n).map(|x| mesh.boundary[x / q]).collect();
    let values: Vec<Complex64> = labels.values.iter().flatten().copied().collect();
    let diagonal: Vec<f64> = adjacency.iter().map(|row| row.iter().map(|(_, w)| w).sum()).collect();

    // A x = b on free nodes, with boundary values moved to the right side.
    let apply = |x: &[Complex64], out: &mut [Complex64]| {
        out.par_iter_mut().enumerate().for_each(|(k, o)| {
            *o = if fixed[k] {
                Complex64::new(0.0, 0.0)
            } else {
                let mut acc = x[k] * diagonal[k];
                for &(m, w) in &adjacency[k] {
                    if !fixed[m] {
                        acc -= x[m] * w;
                    }
                }
                acc
            };
        });
    };
    let rhs: Vec<Complex64> = (0..n)
        .map(|k| {
            if fixed[k] {
                return Complex64::new(0.0, 0.0);
            }
            adjacency[k]
                .iter()
                .filter(|(m, _)| fixed[*m])
                .map(|&(m, w)| values[m] * w)
                .sum()
        })
        .collect();
    let mut x: Vec<Complex64> = (0..n)
        .map(|k| if fixed[k] { Complex64::new(0.0, 0.0) } else { values[k] })
        .collect();
    conjugate_gradient(&apply, &rhs, &diagonal, &fixed, &mut x)?;
    for (k, value) in x.into_iter().enumerate() {
        if !fixed[k] {
            labels.values[k / q][k % q] = value;
        }
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradients for a real symmetric positive
/// definite operator acting on complex vectors.
fn conjugate_gradient<A>(apply: &A, rhs: &[Complex64], diagonal: &[f64], fixed: &[bool], x: &mut [Complex64]) -> Result<()>
where
    A: Fn(&[Complex64], &mut [Complex64]) + Sync,
{
    let n = rhs.len();
    let dot = |a: &[Complex64], b: &[Complex64]| -> f64 { a.iter().zip(b).map(|(u, v)| (u.conj() * v).re).sum() };
    let precondition = |r: &[Complex64]| -> Vec<Complex64> {
        r.iter()
            .zip(diagonal)
            .zip(fixed)
            .map(|((v, d), f)| if *f { Complex64::new(0.0, 0.0) } else { v / d })
            .collect()
    };
    let mut ax = vec![Complex64::new(0.0, 0.0); n];
    apply(x, &mut ax);
    let mut r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let target = CG_TOL * dot(rhs, rhs).sqrt().max(f64::MIN_POSITIVE);
    if dot(&r, &r).sqrt() <= target {
        return Ok(());
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..CG_MAX_ITER {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!("operator is not positive definite (p.Ap = {pap:e})")));
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += p[k] * alpha;
            r[k] -= ap[k] * alpha;
        }
        if dot(&r, &r).sqrt() <= target {
            return Ok(());
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + p[k] * beta;
        }
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not reach relative residual {CG_TOL:e} in {CG_MAX_ITER} iterations"
    )))
}

/// `D`, `H` and `I = r D / H` at mesh rings: `D` sums the triangle shares of
/// the energy inside the ring, `H` is the ring's `|u|^2` mass times arc length.
pub fn compare_frequency_discrete(mesh: &DiskMesh, labels: &QLabeling, radii: &[f64]) -> Result<RadialProfile> {
    check_labels(mesh, labels)?;
    let energies: Vec<f64> = mesh.edges.par_iter().map(|e| matched(&labels.values[e.a], &labels.values[e.b]).0).collect();
    let mut out = RadialProfile {
        center: [0.0, 0.0],
        radii: Vec::new(),
        energy: Vec::new(),
        height: Vec::new(),
        frequency: Vec::new(),
    };
    for &r in radii {
        let k = mesh.ring_at(r)?;
        let mut energy = 0.0;
        for ((t, ids), shares) in mesh.triangles.iter().zip(&mesh.edge_of).zip(&mesh.triangle_weights) {
            if t.iter().all(|&v| mesh.ring[v] <= k) {
                energy += (0..3).map(|m| shares[m] * energies[ids[m]]).sum::<f64>();
            }
        }
        let ring = mesh.ring_vertices(k);
        let arc = std::f64::consts::TAU * mesh.ring_radius(k) / ring.len() as f64;
        let height: f64 = ring.map(|v| labels.values[v].iter().map(|w| w.norm_sqr()).sum::<f64>() * arc).sum();
        let radius = mesh.ring_radius(k);
        if !(height > 0.0) {
            return Err(Error::DegenerateHeight { height, radius });
        }
        out.radii.push(radius);
        out.energy.push(energy);
        out.height.push(height);
        out.frequency.push(Some(radius * energy / height));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasinReport {
    /// Energy reached from the transported boundary matching.
    pub transported: f64,
    /// `(seed, energy)` from random initial matchings.
    pub random: Vec<(u64, f64)>,
    /// Largest relative gap between any two final energies.
    pub spread: f64,
}

/// Minimizes from the default start and from three random boundary
/// matchings, and compares the energies reached.
pub fn basin_report(mesh: &DiskMesh, boundary: &QLabeling, max_iterations: usize) -> Result<BasinReport> {
    let transported = minimize(mesh, &initial_labels(mesh, boundary)?, max_iterations)?.energy;
    let random = BASIN_SEEDS
        .iter()
        .map(|&seed| {
            let start = random_initial_labels(mesh, boundary, seed)?;
            Ok((seed, minimize(mesh, &start, max_iterations)?.energy))
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<f64> = std::iter::once(transported).chain(random.iter().map(|r| r.1)).collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(0.0, f64::max);
    Ok(BasinReport {
        transported,
        random,
        spread: if hi > 0.0 { (hi - lo) / hi } else { 0.0 },
    })
}
