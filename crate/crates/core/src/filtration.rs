//! Vietoris–Rips filtration of the complete complex up to dimension 2.
//!
//! Simplices are ordered by `(value, dim, lexicographic vertices)`, which is
//! a valid filtration order: a face never has a larger value or dimension
//! than its coface. Vertices and edges are stored explicitly; the `C(n, 3)`
//! triangles are enumerated on demand (see [`Filtration::triangle`]) and only
//! materialized when the full simplex list is requested.

use std::cmp::Ordering;
use std::sync::OnceLock;

use crate::geometry::DistanceMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Simplex {
    vertices: [u32; 3],
    dim: u8,
    value: f64,
    critical_edge: Option<(u32, u32)>,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self {
            vertices: [v, 0, 0],
            dim: 0,
            value: 0.0,
            critical_edge: None,
        }
    }

    /// Edge `{u, v}` with `u < v`.
    pub fn edge(u: u32, v: u32, value: f64) -> Self {
        debug_assert!(u < v);
        Self {
            vertices: [u, v, 0],
            dim: 1,
            value,
            critical_edge: Some((u, v)),
        }
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices[..self.dim as usize + 1]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// The vertex pair whose distance equals [`value`](Self::value); absent
    /// for vertices.
    pub fn critical_edge(&self) -> Option<(u32, u32)> {
        self.critical_edge
    }

    /// Total filtration order: value, then dimension, then vertices.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.dim.cmp(&other.dim))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }

    /// Faces of codimension one, in lexicographic order.
    pub fn facets(&self) -> Vec<Vec<u32>> {
        let v = self.vertices();
        if v.len() == 1 {
            return Vec::new();
        }
        (0..v.len())
            .rev()
            .map(|skip| {
                v.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &x)| x)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug)]
pub struct Filtration {
    distances: DistanceMatrix,
    edges: Vec<Simplex>,
    max_value: f64,
    diameter_edge: Option<(u32, u32)>,
    all: OnceLock<Vec<Simplex>>,
}

impl Clone for Filtration {
    fn clone(&self) -> Self {
        Self {
            distances: self.distances.clone(),
            edges: self.edges.clone(),
            max_value: self.max_value,
            diameter_edge: self.diameter_edge,
            all: OnceLock::new(),
        }
    }
}

/// Builds the Rips filtration of the complete 2-skeleton over `dm`.
pub fn build_rips(dm: &DistanceMatrix) -> Filtration {
    let n = dm.len();
    assert!(n <= u32::MAX as usize, "too many points");
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push(Simplex::edge(u as u32, v as u32, dm.get(u, v)));
        }
    }
    edges.sort_by(Simplex::filtration_cmp);
    // the last edge in filtration order realizes the diameter
    let (max_value, diameter_edge) = match edges.last() {
        Some(e) => (e.value, e.critical_edge),
        None => (0.0, None),
    };
    Filtration {
        distances: dm.clone(),
        edges,
        max_value,
        diameter_edge,
        all: OnceLock::new(),
    }
}

impl Filtration {
    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn vertex_count(&self) -> usize {
        self.distances.len()
    }

    /// Edges in filtration order.
    pub fn edges(&self) -> &[Simplex] {
        &self.edges
    }

    /// Diameter of the point set; 0 with fewer than two points.
    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// `min_i max_j d(i, j)`. From this value on the complex is a cone over
    /// the minimizing vertex, so no H1 class outlives it.
    pub fn enclosing_radius(&self) -> f64 {
        let d = &self.distances;
        (0..d.len())
            .map(|i| d.row(i).iter().copied().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }

    /// The edge realizing [`max_value`](Self::max_value), chosen as the last
    /// such edge in filtration order.
    pub fn diameter_edge(&self) -> Option<(u32, u32)> {
        self.diameter_edge
    }

    /// Triangle on three distinct vertices (any order). Its critical edge is
    /// the longest side; among equal sides, the one latest in filtration order.
    pub fn triangle(&self, a: u32, b: u32, c: u32) -> Simplex {
        let mut v = [a, b, c];
        v.sort_unstable();
        let [a, b, c] = v;
        debug_assert!(a < b && b < c);
        let d = |i: u32, j: u32| self.distances.get(i as usize, j as usize);
        // sides in lexicographic (= tie-break) order; keep the last maximum
        let mut best = ((a, b), d(a, b));
        for side in [(a, c), (b, c)] {
            let len = d(side.0, side.1);
            if len >= best.1 {
                best = (side, len);
            }
        }
        Simplex {
            vertices: v,
            dim: 2,
            value: best.1,
            critical_edge: Some(best.0),
        }
    }

    /// Every simplex in filtration order. The first call enumerates and sorts
    /// all `C(n, 3)` triangles.
    pub fn simplices(&self) -> &[Simplex] {
        self.all.get_or_init(|| {
            let n = self.vertex_count() as u32;
            let (_, _, c2) = self.simplex_count();
            let mut all = Vec::with_capacity(n as usize + self.edges.len() + c2);
            all.extend((0..n).map(Simplex::vertex));
            all.extend_from_slice(&self.edges);
            for a in 0..n {
                for b in (a + 1)..n {
                    for c in (b + 1)..n {
                        all.push(self.triangle(a, b, c));
                    }
                }
            }
            all.sort_by(Simplex::filtration_cmp);
            all
        })
    }

    pub fn simplex_count(&self) -> (usize, usize, usize) {
        simplex_count(self)
    }
}

/// Simplex counts per dimension: `(C(n,1), C(n,2), C(n,3))`.
pub fn simplex_count(f: &Filtration) -> (usize, usize, usize) {
    let n = f.vertex_count();
    let c2 = if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    };
    (n, f.edges.len(), c2)
}
