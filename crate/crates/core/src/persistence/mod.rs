//! Persistent homology over F₂ in dimensions 0 and 1.
//!
//! Three independent routes produce the same pairing for a given filtration
//! order:
//!
//! * [`compute_persistence`]: the fast path. H0 by bit-packed column
//!   reduction of the edge boundaries; H1 by reducing the coboundaries of the
//!   surviving edges (clearing the H0 deaths) with triangles enumerated on the
//!   fly.
//! * [`compute_persistence_pruned`]: the same, minus the zero-length H1
//!   pairs above the enclosing radius. Used by the loss pipeline.
//! * [`reduce_naive`]: textbook left-to-right reduction of the explicit
//!   boundary matrix over every simplex.
//! * [`compute_h0_unionfind`]: Kruskal-style merging with the elder rule,
//!   for H0 only.
//!
//! Essential classes are reported with `death = max_value` (the diameter of
//! the point set) instead of infinity so every bar has a finite length.

mod naive;
mod reduction;
mod union_find;

pub use naive::reduce_naive;
pub use reduction::{compute_persistence, compute_persistence_pruned};
pub use union_find::compute_h0_unionfind;

use crate::filtration::Simplex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
    /// Simplex whose arrival creates the class.
    pub birth_simplex: Simplex,
    /// Simplex whose arrival kills it; `None` for essential bars.
    pub death_simplex: Option<Simplex>,
    pub essential: bool,
}

impl Bar {
    fn finite(birth: Simplex, death: Simplex) -> Self {
        Self {
            dim: birth.dim(),
            birth: birth.value(),
            death: death.value(),
            birth_simplex: birth,
            death_simplex: Some(death),
            essential: false,
        }
    }

    fn essential(birth: Simplex, max_value: f64) -> Self {
        Self {
            dim: birth.dim(),
            birth: birth.value(),
            death: max_value,
            birth_simplex: birth,
            death_simplex: None,
            essential: true,
        }
    }

    pub fn length(&self) -> f64 {
        self.death - self.birth
    }

    pub fn mean(&self) -> f64 {
        (self.death + self.birth) / 2.0
    }
}

/// Vertex tuples of a bar's birth and death simplices.
pub type Pairing = (Vec<u32>, Option<Vec<u32>>);

#[derive(Debug, Clone, PartialEq)]
pub struct Barcode {
    bars: Vec<Bar>,
    max_value: f64,
    diameter_edge: Option<(u32, u32)>,
}

impl Barcode {
    /// Bars are stored sorted by `(dim, birth, death, birth simplex)`.
    pub(crate) fn new(mut bars: Vec<Bar>, max_value: f64, diameter_edge: Option<(u32, u32)>) -> Self {
        bars.sort_by(|a, b| {
            a.dim
                .cmp(&b.dim)
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
                .then_with(|| a.birth_simplex.vertices().cmp(b.birth_simplex.vertices()))
        });
        Self {
            bars,
            max_value,
            diameter_edge,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), 0.0, None)
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &Bar> {
        self.bars.iter().filter(move |b| b.dim == dim)
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// Edge whose length is `max_value`; essential deaths move with it.
    pub fn diameter_edge(&self) -> Option<(u32, u32)> {
        self.diameter_edge
    }

    /// `(dim, birth, death)` triples in storage order.
    pub fn intervals(&self) -> Vec<(usize, f64, f64)> {
        self.bars.iter().map(|b| (b.dim, b.birth, b.death)).collect()
    }

    /// Birth/death simplices of every bar, sorted, for comparing pairings.
    pub fn pairings(&self) -> Vec<Pairing> {
        let mut p: Vec<Pairing> = self
            .bars
            .iter()
            .map(|b| {
                (
                    b.birth_simplex.vertices().to_vec(),
                    b.death_simplex.map(|s| s.vertices().to_vec()),
                )
            })
            .collect();
        p.sort();
        p
    }

    /// The barcode restricted to one dimension.
    pub fn restricted_to(&self, dim: usize) -> Barcode {
        Barcode {
            bars: self.in_dim(dim).copied().collect(),
            max_value: self.max_value,
            diameter_edge: self.diameter_edge,
        }
    }
}
