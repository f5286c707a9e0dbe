//! Barcode signatures and the topological losses built on them.
//!
//! A dimension-`i` signature is the pair of vectors `L_i` (bar lengths
//! `d - b`) and `M_i` (bar midpoints `(d + b) / 2`). Three losses are
//! defined over barcodes:
//!
//! * nonparametric: `Σ_i (-1)^i (1 + count_i) <L_i, M_i>`
//! * parametrized:  `-Σ_j (d_j - b_j)^p ((d_j + b_j) / 2)^q` in one dimension
//! * weighted:      `Σ_i w_i <L_i, M_i>`
//!
//! Gradients flow from bar endpoints to point coordinates through the
//! critical edge of each bar's birth and death simplex. Bar counts are
//! piecewise constant in the coordinates and are held fixed when
//! differentiating.

use thiserror::Error;

use crate::filtration::build_rips;
use crate::geometry::{pairwise_distances, PointCloud};
use crate::persistence::{compute_persistence_pruned, Barcode};

/// Bars no longer than this are left out of signatures.
pub const LENGTH_EPSILON: f64 = 1e-12;

/// Highest homology dimension a loss may use.
pub const MAX_DIM: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum LossSpecError {
    #[error("homology dimension {0} is not supported (max {MAX_DIM})")]
    Dimension(usize),
    #[error("exponents must be finite and non-negative, got p={p}, q={q}")]
    Exponent { p: f64, q: f64 },
    #[error("expected between 1 and {max} finite dimension weights, got {0:?}", max = MAX_DIM + 1)]
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    dim: usize,
    lengths: Vec<f64>,
    means: Vec<f64>,
    bar_refs: Vec<usize>,
}

impl Signature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Index into [`Barcode::bars`] for each entry.
    pub fn bar_refs(&self) -> &[usize] {
        &self.bar_refs
    }

    pub fn count(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }
}

/// Signature of the dimension-`dim` bars longer than [`LENGTH_EPSILON`].
/// Essential bars take part with their death at the barcode's max value.
pub fn extract_signature(bc: &Barcode, dim: usize) -> Signature {
    let mut sig = Signature {
        dim,
        lengths: Vec::new(),
        means: Vec::new(),
        bar_refs: Vec::new(),
    };
    for (i, bar) in bc.bars().iter().enumerate() {
        if bar.dim == dim && bar.length() > LENGTH_EPSILON {
            sig.lengths.push(bar.length());
            sig.means.push(bar.mean());
            sig.bar_refs.push(i);
        }
    }
    sig
}

/// Signatures for dimensions `0..=max_dim`.
pub fn signatures(bc: &Barcode, max_dim: usize) -> Vec<Signature> {
    (0..=max_dim).map(|d| extract_signature(bc, d)).collect()
}

/// `<L, M> = Σ_j L_j M_j`.
pub fn inner_product(s: &Signature) -> f64 {
    s.lengths.iter().zip(&s.means).map(|(l, m)| l * m).sum()
}

/// The `1 + dim(ΔF_i)` factor of the nonparametric loss, read as one plus
/// the number of bars in the signature.
pub fn dimension_factor(s: &Signature) -> f64 {
    1.0 + s.count() as f64
}

fn alternating(dim: usize) -> f64 {
    if dim.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Per-dimension coefficient `(-1)^i (1 + count_i)` of the nonparametric loss.
fn nonparametric_coefficient(s: &Signature) -> f64 {
    alternating(s.dim) * dimension_factor(s)
}

pub fn loss_nonparametric(signatures: &[Signature], max_dim: usize) -> f64 {
    signatures
        .iter()
        .filter(|s| s.dim <= max_dim)
        .map(|s| nonparametric_coefficient(s) * inner_product(s))
        .sum()
}

pub fn loss_parametrized(bc: &Barcode, dim: usize, p: f64, q: f64) -> f64 {
    -bc.in_dim(dim)
        .filter(|b| b.length() > LENGTH_EPSILON)
        .map(|b| b.length().powf(p) * b.mean().powf(q))
        .sum::<f64>()
}

/// `Σ_i w_i <L_i, M_i>`, with `weights[i]` applied to the dimension-`i`
/// signature. Signatures without a weight contribute nothing.
pub fn loss_weighted(signatures: &[Signature], weights: &[f64]) -> f64 {
    signatures
        .iter()
        .filter_map(|s| weights.get(s.dim).map(|w| w * inner_product(s)))
        .sum()
}

/// Direction of optimization: `Promote` minimizes the loss as written,
/// `Discount` minimizes its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sign {
    #[default]
    Promote,
    Discount,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Promote => 1.0,
            Sign::Discount => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossKind {
    Nonparametric { max_dim: usize },
    Parametrized { dim: usize, p: f64, q: f64 },
    Weighted { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub sign: Sign,
}

impl Default for LossSpec {
    fn default() -> Self {
        Self::nonparametric(MAX_DIM)
    }
}

impl LossSpec {
    pub fn nonparametric(max_dim: usize) -> Self {
        Self {
            kind: LossKind::Nonparametric { max_dim },
            sign: Sign::Promote,
        }
    }

    pub fn parametrized(dim: usize, p: f64, q: f64) -> Self {
        Self {
            kind: LossKind::Parametrized { dim, p, q },
            sign: Sign::Promote,
        }
    }

    pub fn weighted(weights: Vec<f64>) -> Self {
        Self {
            kind: LossKind::Weighted { weights },
            sign: Sign::Promote,
        }
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<(), LossSpecError> {
        match &self.kind {
            LossKind::Nonparametric { max_dim } if *max_dim > MAX_DIM => {
                Err(LossSpecError::Dimension(*max_dim))
            }
            LossKind::Parametrized { dim, .. } if *dim > MAX_DIM => {
                Err(LossSpecError::Dimension(*dim))
            }
            LossKind::Parametrized { p, q, .. }
                if !(p.is_finite() && q.is_finite() && *p >= 0.0 && *q >= 0.0) =>
            {
                Err(LossSpecError::Exponent { p: *p, q: *q })
            }
            LossKind::Weighted { weights }
                if weights.is_empty()
                    || weights.len() > MAX_DIM + 1
                    || weights.iter().any(|w| !w.is_finite()) =>
            {
                Err(LossSpecError::Weights(weights.clone()))
            }
            _ => Ok(()),
        }
    }

    fn highest_dim(&self) -> usize {
        match &self.kind {
            LossKind::Nonparametric { max_dim } => *max_dim,
            LossKind::Parametrized { dim, .. } => *dim,
            LossKind::Weighted { weights } => weights.len().saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    /// Sign-adjusted loss value.
    pub value: f64,
    /// Gradient of `value` with respect to each point's `(x, y)`.
    pub grad_points: Vec<[f64; 2]>,
    /// Gradient of `value` with respect to each bar's `(birth, death)`,
    /// indexed like [`Barcode::bars`].
    pub grad_bars: Vec<[f64; 2]>,
}

/// `e * x^(e-1)`, taking the `e = 0` term as zero.
fn power_slope(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        0.0
    } else {
        e * x.powf(e - 1.0)
    }
}

/// Raw (unsigned) loss of a barcode and its gradient per bar endpoint.
pub fn barcode_loss(bc: &Barcode, kind: &LossKind) -> (f64, Vec<[f64; 2]>) {
    let mut grads = vec![[0.0; 2]; bc.bars().len()];
    let value = match kind {
        LossKind::Nonparametric { max_dim } => {
            let sigs = signatures(bc, *max_dim);
            for s in &sigs {
                let c = nonparametric_coefficient(s);
                for &i in s.bar_refs() {
                    let bar = &bc.bars()[i];
                    grads[i] = [-c * bar.birth, c * bar.death];
                }
            }
            loss_nonparametric(&sigs, *max_dim)
        }
        LossKind::Weighted { weights } => {
            let sigs = signatures(bc, weights.len().saturating_sub(1).min(MAX_DIM));
            for s in &sigs {
                let w = weights[s.dim];
                for &i in s.bar_refs() {
                    let bar = &bc.bars()[i];
                    grads[i] = [-w * bar.birth, w * bar.death];
                }
            }
            loss_weighted(&sigs, weights)
        }
        &LossKind::Parametrized { dim, p, q } => {
            let sig = extract_signature(bc, dim);
            for (k, &i) in sig.bar_refs().iter().enumerate() {
                let (l, m) = (sig.lengths[k], sig.means[k]);
                // T = -l^p m^q, dl/dd = 1, dl/db = -1, dm/dd = dm/db = 1/2
                let dl = -power_slope(l, p) * m.powf(q);
                let dm = -l.powf(p) * power_slope(m, q);
                grads[i] = [-dl + 0.5 * dm, dl + 0.5 * dm];
            }
            loss_parametrized(bc, dim, p, q)
        }
    };
    (value, grads)
}

/// Adds `g * ∂|p_u - p_v| / ∂p` into `grad`. Zero-length edges contribute
/// nothing.
fn push_edge(cloud: &PointCloud, grad: &mut [[f64; 2]], edge: Option<(u32, u32)>, g: f64) {
    let Some((u, v)) = edge else { return };
    if g == 0.0 {
        return;
    }
    let (pu, pv) = (cloud.points()[u as usize], cloud.points()[v as usize]);
    let len = pu.distance(&pv);
    if len == 0.0 {
        return;
    }
    let (ux, uy) = ((pu.x - pv.x) / len, (pu.y - pv.y) / len);
    grad[u as usize][0] += g * ux;
    grad[u as usize][1] += g * uy;
    grad[v as usize][0] -= g * ux;
    grad[v as usize][1] -= g * uy;
}

/// Pushes per-bar endpoint gradients onto point coordinates.
pub fn backpropagate(cloud: &PointCloud, bc: &Barcode, bar_grads: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut grad = vec![[0.0; 2]; cloud.len()];
    for (bar, &[gb, gd]) in bc.bars().iter().zip(bar_grads) {
        push_edge(cloud, &mut grad, bar.birth_simplex.critical_edge(), gb);
        let death_edge = match bar.death_simplex {
            Some(s) => s.critical_edge(),
            None => bc.diameter_edge(),
        };
        push_edge(cloud, &mut grad, death_edge, gd);
    }
    grad
}

/// Barcode used by the losses: every bar of positive length, see
/// [`compute_persistence_pruned`].
pub fn barcode_of(cloud: &PointCloud) -> Barcode {
    compute_persistence_pruned(&build_rips(&pairwise_distances(cloud)))
}

/// Sign-adjusted loss of a cloud, without gradients.
pub fn loss_value(cloud: &PointCloud, spec: &LossSpec) -> f64 {
    spec.sign.factor() * barcode_loss(&barcode_of(cloud), &spec.kind).0
}

/// Loss and coordinate gradient for a cloud: distances, filtration,
/// persistence, signatures, loss, then the chain rule back to points.
pub fn loss_gradient(cloud: &PointCloud, spec: &LossSpec) -> LossReport {
    debug_assert!(spec.highest_dim() <= MAX_DIM);
    let bc = barcode_of(cloud);
    let sign = spec.sign.factor();
    let (raw, mut grad_bars) = barcode_loss(&bc, &spec.kind);
    for g in &mut grad_bars {
        g[0] *= sign;
        g[1] *= sign;
    }
    let grad_points = backpropagate(cloud, &bc, &grad_bars);
    LossReport {
        value: sign * raw,
        grad_points,
        grad_bars,
    }
}
