use std::cmp::Ordering;
use std::collections::HashMap;

use super::{Bar, Barcode};
use crate::filtration::{Filtration, Simplex};

/// Fixed-width F₂ column over the vertex rows.
#[derive(Clone)]
struct BitColumn(Vec<u64>);

impl BitColumn {
    fn with_pair(words: usize, u: u32, v: u32) -> Self {
        let mut bits = vec![0u64; words];
        for x in [u, v] {
            bits[x as usize / 64] ^= 1 << (x % 64);
        }
        Self(bits)
    }

    fn xor_assign(&mut self, other: &BitColumn) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }

    fn low(&self) -> Option<u32> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| (i * 64 + 63 - w.leading_zeros() as usize) as u32)
    }
}

/// Persistence pairs in dimensions 0 and 1.
///
/// H0 reduces edge boundary columns over bit-packed vertex rows. Edges that
/// reduce to zero create H1 classes; those are reduced again as coboundary
/// columns, latest edge first, with the earliest coface as pivot. Edges
/// killed in H0 are cleared from this second pass. Both passes follow the
/// filtration order exactly, so the pairs match the boundary-matrix reduction
/// of the full complex.
pub fn compute_persistence(f: &Filtration) -> Barcode {
    persistence_up_to(f, f64::INFINITY)
}

/// [`compute_persistence`] without the H1 pairs born after the enclosing
/// radius. Those all have zero length, so every bar of positive length is
/// kept, with the same birth and death simplices. Cofaces above the radius
/// are never generated, which is where most of the work goes on dense
/// clouds.
pub fn compute_persistence_pruned(f: &Filtration) -> Barcode {
    persistence_up_to(f, f.enclosing_radius())
}

fn persistence_up_to(f: &Filtration, limit: f64) -> Barcode {
    let n = f.vertex_count();
    if n == 0 {
        return Barcode::empty();
    }
    let mut bars = Vec::with_capacity(n + f.edges().len());
    let positive = reduce_h0(f, &mut bars);
    let short = positive.partition_point(|e| e.value() <= limit);
    reduce_h1(f, &positive[..short], limit, &mut bars);
    Barcode::new(bars, f.max_value(), f.diameter_edge())
}

/// Appends H0 bars; returns the edges that were not H0 deaths, in
/// filtration order.
fn reduce_h0(f: &Filtration, bars: &mut Vec<Bar>) -> Vec<Simplex> {
    let n = f.vertex_count();
    let words = n.div_ceil(64);
    // pivot row -> reduced column owning it
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut reduced: Vec<BitColumn> = Vec::with_capacity(n.saturating_sub(1));
    let mut positive = Vec::with_capacity(f.edges().len());

    for edge in f.edges() {
        let [u, v] = edge.vertices() else {
            unreachable!()
        };
        let mut col = BitColumn::with_pair(words, *u, *v);
        loop {
            match col.low() {
                None => {
                    positive.push(*edge);
                    break;
                }
                Some(low) => match owner[low as usize] {
                    Some(k) => col.xor_assign(&reduced[k]),
                    None => {
                        owner[low as usize] = Some(reduced.len());
                        reduced.push(col);
                        bars.push(Bar::finite(Simplex::vertex(low), *edge));
                        break;
                    }
                },
            }
        }
    }
    for (v, o) in owner.iter().enumerate() {
        if o.is_none() {
            bars.push(Bar::essential(Simplex::vertex(v as u32), f.max_value()));
        }
    }
    positive
}

/// Triangle packed so that integer order is filtration order: value bits
/// (monotone for non-negative floats) above the sorted vertex triple.
type Key = u128;

const VERTEX_BITS: u32 = 21;

fn pack(value: f64, [a, b, c]: [u32; 3]) -> Key {
    debug_assert!(value >= 0.0 && value.is_sign_positive());
    ((value.to_bits() as u128) << 64) | ((a as u128) << (2 * VERTEX_BITS)) | ((b as u128) << VERTEX_BITS) | c as u128
}

fn unpack(f: &Filtration, key: Key) -> Simplex {
    let mask = (1u128 << VERTEX_BITS) - 1;
    let v = |shift: u32| ((key >> shift) & mask) as u32;
    f.triangle(v(2 * VERTEX_BITS), v(VERTEX_BITS), v(0))
}

fn sorted3(u: u32, v: u32, w: u32) -> [u32; 3] {
    // u < v always holds for edges
    if w < u {
        [w, u, v]
    } else if w < v {
        [u, w, v]
    } else {
        [u, v, w]
    }
}

/// Keys of the triangles containing `edge` with value at most `limit`, in
/// filtration order.
fn coboundary(f: &Filtration, edge: &Simplex, limit: f64) -> Vec<Key> {
    let (u, v) = (edge.vertices()[0], edge.vertices()[1]);
    let d = f.distances();
    let (ru, rv) = (d.row(u as usize), d.row(v as usize));
    let base = edge.value();
    let mut col: Vec<Key> = ru
        .iter()
        .zip(rv)
        .enumerate()
        .filter(|&(w, (&a, &b))| w as u32 != u && w as u32 != v && a <= limit && b <= limit)
        .map(|(w, (&a, &b))| pack(base.max(a).max(b), sorted3(u, v, w as u32)))
        .collect();
    col.sort_unstable();
    col
}

/// Smallest key of [`coboundary`] without materializing the column.
fn earliest_coface(f: &Filtration, edge: &Simplex) -> Option<Key> {
    let (u, v) = (edge.vertices()[0], edge.vertices()[1]);
    let d = f.distances();
    let (ru, rv) = (d.row(u as usize), d.row(v as usize));
    let base = edge.value();
    ru.iter()
        .zip(rv)
        .enumerate()
        .filter(|&(w, _)| w as u32 != u && w as u32 != v)
        .map(|(w, (&a, &b))| pack(base.max(a).max(b), sorted3(u, v, w as u32)))
        .min()
}

/// Symmetric difference of two sorted columns.
fn add_columns(a: &[Key], b: &[Key]) -> Vec<Key> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

enum Column {
    /// Never modified: equal to the coboundary of this edge.
    Raw(Simplex),
    Reduced(Vec<Key>),
}

/// `positive` must hold only edges of value at most `limit`.
fn reduce_h1(f: &Filtration, positive: &[Simplex], limit: f64, bars: &mut Vec<Bar>) {
    assert!(f.vertex_count() < 1 << VERTEX_BITS, "too many vertices for packed keys");
    let mut owner: HashMap<Key, usize> = HashMap::with_capacity(positive.len());
    let mut columns: Vec<Column> = Vec::with_capacity(positive.len());

    for edge in positive.iter().rev() {
        let Some(first) = earliest_coface(f, edge) else {
            bars.push(Bar::essential(*edge, f.max_value()));
            continue;
        };
        debug_assert!(unpack(f, first).value() <= limit);
        if let std::collections::hash_map::Entry::Vacant(slot) = owner.entry(first) {
            slot.insert(columns.len());
            columns.push(Column::Raw(*edge));
            bars.push(Bar::finite(*edge, unpack(f, first)));
            continue;
        }

        let mut col = coboundary(f, edge, limit);
        loop {
            let Some(pivot) = col.first().copied() else {
                debug_assert!(limit.is_infinite(), "class born below the enclosing radius survived it");
                bars.push(Bar::essential(*edge, f.max_value()));
                break;
            };
            match owner.get(&pivot) {
                Some(&k) => {
                    col = match &columns[k] {
                        Column::Raw(e) => add_columns(&col, &coboundary(f, e, limit)),
                        Column::Reduced(other) => add_columns(&col, other),
                    };
                }
                None => {
                    owner.insert(pivot, columns.len());
                    columns.push(Column::Reduced(col));
                    bars.push(Bar::finite(*edge, unpack(f, pivot)));
                    break;
                }
            }
        }
    }
}
