use super::{Bar, Barcode};
use crate::filtration::{build_rips, Simplex};
use crate::geometry::DistanceMatrix;

/// Disjoint sets whose representative is always the oldest (smallest index)
/// vertex of the component.
struct ElderSets {
    parent: Vec<u32>,
}

impl ElderSets {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }
}

/// H0 barcode by Kruskal merging over edges in filtration order. Each merge
/// kills the younger of the two components; the survivor is essential.
pub fn compute_h0_unionfind(dm: &DistanceMatrix) -> Barcode {
    let f = build_rips(dm);
    let n = dm.len();
    let mut sets = ElderSets::new(n);
    let mut bars = Vec::with_capacity(n);
    for edge in f.edges() {
        let (ru, rv) = (sets.find(edge.vertices()[0]), sets.find(edge.vertices()[1]));
        if ru == rv {
            continue;
        }
        let (elder, younger) = (ru.min(rv), ru.max(rv));
        sets.parent[younger as usize] = elder;
        bars.push(Bar::finite(Simplex::vertex(younger), *edge));
    }
    for v in 0..n as u32 {
        if sets.find(v) == v {
            bars.push(Bar::essential(Simplex::vertex(v), f.max_value()));
        }
    }
    Barcode::new(bars, f.max_value(), f.diameter_edge())
}
