//! Ring triangulation of the closed unit disk.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{csv_bytes, fmt17};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Weights {
    #[default]
    Cotangent,
    Uniform,
}

#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Triangulated unit disk: a center vertex and `n` rings, ring `k` holding
/// `6k` equally spaced vertices at radius `k / n`.
#[derive(Debug, Clone)]
pub struct DiskMesh {
    pub resolution: usize,
    pub weighting: Weights,
    pub vertices: Vec<Complex64>,
    pub boundary: Vec<bool>,
    pub edges: Vec<Edge>,
    pub triangles: Vec<[usize; 3]>,
    /// Share of each edge weight contributed by each triangle, indexed like
    /// `triangles`: entry `m` belongs to `(edge_of[t][m])`, the edge opposite
    /// corner `m`.
    pub triangle_weights: Vec<[f64; 3]>,
    pub edge_of: Vec<[usize; 3]>,
    /// Ring index of every vertex.
    pub ring: Vec<usize>,
}

pub fn ring_start(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 + 3 * k * (k - 1)
    }
}

fn ring_len(k: usize) -> usize {
    if k == 0 {
        1
    } else {
        6 * k
    }
}

pub fn build_disk_mesh(resolution: usize) -> Result<DiskMesh> {
    build_disk_mesh_with(resolution, Weights::Cotangent)
}

pub fn build_disk_mesh_with(resolution: usize, weighting: Weights) -> Result<DiskMesh> {
    if resolution < 3 {
        return Err(Error::Domain(format!("mesh resolution must be at least 3, got {resolution}")));
    }
    let n = resolution;
    let mut vertices = Vec::with_capacity(ring_start(n + 1));
    let mut ring = Vec::with_capacity(ring_start(n + 1));
    for k in 0..=n {
        for j in 0..ring_len(k) {
            let angle = TAU * j as f64 / ring_len(k) as f64;
            vertices.push(if k == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(k as f64 / n as f64, angle)
            });
            ring.push(k);
        }
    }
    let boundary = ring.iter().map(|&k| k == n).collect();

    let mut triangles = Vec::with_capacity(6 * n * n);
    for j in 0..6 {
        triangles.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=n {
        // Zip ring k - 1 to ring k in angular order.
        let (inner, outer) = (ring_len(k - 1), ring_len(k));
        let (si, so) = (ring_start(k - 1), ring_start(k));
        let (mut i, mut o) = (0, 0);
        while i < inner || o < outer {
            // Angles as fractions of a turn; take the shorter new diagonal.
            let (here_inner, here_outer) = (i as f64 / inner as f64, o as f64 / outer as f64);
            let next_inner = (i + 1) as f64 / inner as f64;
            let next_outer = (o + 1) as f64 / outer as f64;
            let advance_outer = o < outer
                && (i == inner || (next_outer - here_inner).abs() < (next_inner - here_outer).abs());
            if advance_outer {
                triangles.push([si + i % inner, so + o, so + (o + 1) % outer]);
                o += 1;
            } else {
                triangles.push([si + i, so + o % outer, si + (i + 1) % inner]);
                i += 1;
            }
        }
    }

    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_of = Vec::with_capacity(triangles.len());
    let mut triangle_weights = Vec::with_capacity(triangles.len());
    for t in &triangles {
        let mut ids = [0; 3];
        let mut shares = [0.0; 3];
        for m in 0..3 {
            let (a, b) = (t[(m + 1) % 3], t[(m + 2) % 3]);
            let key = (a.min(b), a.max(b));
            let id = *index.entry(key).or_insert_with(|| {
                edges.push(Edge { a: key.0, b: key.1, weight: 0.0 });
                edges.len() - 1
            });
            ids[m] = id;
            shares[m] = match weighting {
                Weights::Cotangent => 0.5 * cot(vertices[t[m]], vertices[a], vertices[b]),
                Weights::Uniform => 0.0,
            };
        }
        edge_of.push(ids);
        triangle_weights.push(shares);
    }
    if weighting == Weights::Uniform {
        // Unit edge weights, split evenly between the adjacent triangles.
        let mut adjacent = vec![0usize; edges.len()];
        for ids in &edge_of {
            for &e in ids {
                adjacent[e] += 1;
            }
        }
        for (ids, shares) in edge_of.iter().zip(triangle_weights.iter_mut()) {
            for m in 0..3 {
                shares[m] = 1.0 / adjacent[ids[m]] as f64;
            }
        }
    }
    for (ids, shares) in edge_of.iter().zip(&triangle_weights) {
        for m in 0..3 {
            edges[ids[m]].weight += shares[m];
        }
    }
    let mesh = DiskMesh {
        resolution,
        weighting,
        vertices,
        boundary,
        edges,
        triangles,
        triangle_weights,
        edge_of,
        ring,
    };
    if let Some(e) = mesh.edges.iter().find(|e| !(e.weight > 0.0)) {
        return Err(Error::InternalLogic(format!(
            "edge ({}, {}) has nonpositive weight {}",
            e.a, e.b, e.weight
        )));
    }
    Ok(mesh)
}

/// Cotangent of the angle at `p` in the triangle `p, a, b`.
fn cot(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let (u, v) = (a - p, b - p);
    let dot = u.re * v.re + u.im * v.im;
    let cross = u.re * v.im - u.im * v.re;
    dot / cross.abs()
}

impl DiskMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    /// Radius of ring `k`.
    pub fn ring_radius(&self, k: usize) -> f64 {
        k as f64 / self.resolution as f64
    }

    /// The ring at radius `r`, if one lies within `1e-9`.
    pub fn ring_at(&self, r: f64) -> Result<usize> {
        let k = (r * self.resolution as f64).round();
        if k >= 1.0 && k <= self.resolution as f64 && (k / self.resolution as f64 - r).abs() <= 1e-9 {
            Ok(k as usize)
        } else {
            Err(Error::Resolution(r))
        }
    }

    pub fn ring_vertices(&self, k: usize) -> std::ops::Range<usize> {
        ring_start(k)..ring_start(k) + ring_len(k)
    }

    pub fn is_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            adjacency[e.a].push(e.b);
            adjacency[e.b].push(e.a);
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().all(|s| *s)
    }

    pub fn vertices_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<Vec<String>> = self
            .vertices
            .iter()
            .zip(&self.boundary)
            .enumerate()
            .map(|(i, (v, b))| vec![i.to_string(), fmt17(v.re), fmt17(v.im), b.to_string()])
            .collect();
        csv_bytes(&["vertex", "x", "y", "boundary"], &rows)
    }

    pub fn edges_csv(&self) -> Result<Vec<u8>> {
        let rows: Vec<Vec<String>> = self
            .edges
            .iter()
            .map(|e| vec![e.a.to_string(), e.b.to_string(), fmt17(e.weight)])
            .collect();
        csv_bytes(&["a", "b", "weight"], &rows)
    }
}
