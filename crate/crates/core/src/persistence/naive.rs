use std::collections::HashMap;

use super::{Bar, Barcode};
use crate::filtration::Filtration;

/// Standard column reduction of the full boundary matrix, no optimizations.
///
/// Materializes every simplex, so it is only practical for small clouds;
/// it serves as the reference the fast path is checked against.
pub fn reduce_naive(f: &Filtration) -> Barcode {
    let simplices = f.simplices();
    if simplices.is_empty() {
        return Barcode::empty();
    }
    let index: HashMap<&[u32], usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, s)| (s.vertices(), i))
        .collect();

    let mut columns: Vec<Vec<usize>> = simplices
        .iter()
        .map(|s| {
            let mut rows: Vec<usize> = s.facets().iter().map(|face| index[face.as_slice()]).collect();
            rows.sort_unstable();
            rows
        })
        .collect();

    let mut low_owner: HashMap<usize, usize> = HashMap::new();
    let mut bars = Vec::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].last() {
            let Some(&k) = low_owner.get(&low) else {
                break;
            };
            let sum = symmetric_difference(&columns[j], &columns[k]);
            columns[j] = sum;
        }
        if let Some(&low) = columns[j].last() {
            low_owner.insert(low, j);
            bars.push(Bar::finite(simplices[low], simplices[j]));
        }
    }

    for (i, s) in simplices.iter().enumerate() {
        let is_positive = columns[i].is_empty();
        if is_positive && !low_owner.contains_key(&i) && s.dim() <= 1 {
            bars.push(Bar::essential(*s, f.max_value()));
        }
    }
    bars.retain(|b| b.dim <= 1);
    Barcode::new(bars, f.max_value(), f.diameter_edge())
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else if a[i] > b[j] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}
