//! Square QAM alphabets with per-point constructive-interference classification.
//!
//! Points live on the odd-integer grid scaled to unit average energy. Each
//! point is classified by whether its real/imaginary coordinate sits on the
//! outermost grid level, which decides if that component may be pushed past
//! its nominal position without crossing a decision boundary.

use num_complex::Complex64;

use crate::error::{Result, SlpError};

/// Constellation point category.
///
/// A: inner point, neither component scalable. B: only the real component
/// scalable. C: only the imaginary component. D: both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    A,
    B,
    C,
    D,
}

/// Scalability classification of one constellation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointClass {
    pub kind: PointKind,
    pub real_scalable: bool,
    pub imag_scalable: bool,
}

/// Decomposition of a symbol into bases parallel to the detection thresholds:
/// `s_r` carries the real part, `s_j` carries j times the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolBases {
    pub s_r: Complex64,
    pub s_j: Complex64,
}

/// Normalized square QAM alphabet with Gray-coded labels.
#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    side: usize,
    norm_factor: f64,
    points: Vec<Complex64>,
    labels: Vec<u8>,
    label_to_index: Vec<usize>,
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    /// Points in enumeration order (the order used for detection tie-breaks).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Gray label of the point at `index`.
    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }

    /// Outermost grid coordinate magnitude (after normalization).
    pub fn max_coordinate(&self) -> f64 {
        (self.side as f64 - 1.0) * self.norm_factor
    }
}

/// Build the normalized QAM alphabet for `order` in {4, 16, 64}.
pub fn build_constellation(order: usize) -> Result<Constellation> {
    if !matches!(order, 4 | 16 | 64) {
        return Err(SlpError::Config(format!(
            "unsupported modulation order {order}; expected 4, 16 or 64"
        )));
    }
    let side = (order as f64).sqrt() as usize;
    let bits_per_symbol = order.trailing_zeros() as usize;
    let half_bits = bits_per_symbol / 2;

    // Mean energy of the odd-integer grid: 2 * mean(level^2) over one axis.
    let levels: Vec<f64> = (0..side).map(|k| 2.0 * k as f64 - (side as f64 - 1.0)).collect();
    let axis_energy: f64 = levels.iter().map(|l| l * l).sum::<f64>() / side as f64;
    let norm_factor = 1.0 / (2.0 * axis_energy).sqrt();

    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    let mut label_to_index = vec![0usize; order];
    for i_idx in 0..side {
        for q_idx in 0..side {
            let p = Complex64::new(levels[i_idx] * norm_factor, levels[q_idx] * norm_factor);
            let label = ((gray(i_idx) as u8) << half_bits) | gray(q_idx) as u8;
            label_to_index[label as usize] = points.len();
            points.push(p);
            labels.push(label);
        }
    }
    Ok(Constellation {
        order,
        bits_per_symbol,
        side,
        norm_factor,
        points,
        labels,
        label_to_index,
    })
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Locate `s` in the alphabet within `tol` (Euclidean).
pub fn point_index(s: Complex64, c: &Constellation, tol: f64) -> Result<usize> {
    let idx = nearest_index(s, c);
    if (s - c.points()[idx]).norm() <= tol {
        Ok(idx)
    } else {
        Err(SlpError::InvalidSymbol(format!(
            "{s} is not a constellation point of {}-QAM",
            c.order()
        )))
    }
}

/// Classify a constellation point by which components sit on the outer level.
pub fn classify_point(s: Complex64, c: &Constellation) -> Result<PointClass> {
    point_index(s, c, 1e-9)?;
    let max_coord = c.max_coordinate();
    let real_scalable = (s.re.abs() - max_coord).abs() <= 1e-9;
    let imag_scalable = (s.im.abs() - max_coord).abs() <= 1e-9;
    let kind = match (real_scalable, imag_scalable) {
        (false, false) => PointKind::A,
        (true, false) => PointKind::B,
        (false, true) => PointKind::C,
        (true, true) => PointKind::D,
    };
    Ok(PointClass {
        kind,
        real_scalable,
        imag_scalable,
    })
}

/// Split a symbol into threshold-parallel bases; `s_r + s_j` reconstructs `s`.
pub fn decompose_symbol(s: Complex64) -> SymbolBases {
    SymbolBases {
        s_r: Complex64::new(s.re, 0.0),
        s_j: Complex64::new(0.0, s.im),
    }
}

/// Partition of the 2·KL real/imaginary components of a symbol vector into the
/// scalable set O and the fixed set I, together with the permutation that
/// reorders components O-first.
///
/// Component 2i is the real part of symbol i, component 2i+1 the imaginary
/// part. `perm[m]` is the original component index occupying position m after
/// reordering; original relative order is preserved inside each set.
#[derive(Debug, Clone)]
pub struct IndexPartition {
    pub outer_indices: Vec<usize>,
    pub inner_indices: Vec<usize>,
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl IndexPartition {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn outer_count(&self) -> usize {
        self.outer_indices.len()
    }

    /// Row m of the permutation matrix E is the unit row e_{perm(m)}.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Apply E: reorder an original-ordered vector O-first.
    pub fn apply<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| v[i]).collect()
    }

    /// Apply E^{-1} = E^T: map an O-first vector back to original ordering.
    pub fn apply_inverse<T: Copy>(&self, v: &[T]) -> Vec<T> {
        self.inv.iter().map(|&i| v[i]).collect()
    }

    /// Materialize E as a dense matrix (test and diagnostic use).
    pub fn matrix(&self) -> crate::linalg::ComplexMatrix {
        let n = self.len();
        crate::linalg::ComplexMatrix::from_fn(n, n, |r, c| {
            if self.perm[r] == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// Build the O/I partition of a symbol vector's 2·len components.
pub fn build_index_partition(s: &[Complex64], c: &Constellation) -> Result<IndexPartition> {
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for (i, &sym) in s.iter().enumerate() {
        let class = classify_point(sym, c)?;
        if class.real_scalable {
            outer.push(2 * i);
        } else {
            inner.push(2 * i);
        }
        if class.imag_scalable {
            outer.push(2 * i + 1);
        } else {
            inner.push(2 * i + 1);
        }
    }
    let perm: Vec<usize> = outer.iter().chain(inner.iter()).copied().collect();
    let mut inv = vec![0usize; perm.len()];
    for (pos, &orig) in perm.iter().enumerate() {
        inv[orig] = pos;
    }
    Ok(IndexPartition {
        outer_indices: outer,
        inner_indices: inner,
        perm,
        inv,
    })
}

/// Map a bit string (values 0/1, length divisible by log2(order)) to symbols.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let bps = c.bits_per_symbol;
    if bits.len() % bps != 0 {
        return Err(SlpError::Config(format!(
            "bit string length {} is not a multiple of {}",
            bits.len(),
            bps
        )));
    }
    let mut out = Vec::with_capacity(bits.len() / bps);
    for chunk in bits.chunks(bps) {
        let mut label = 0u8;
        for &b in chunk {
            if b > 1 {
                return Err(SlpError::Config(format!("bit value {b} is not 0 or 1")));
            }
            label = (label << 1) | b;
        }
        out.push(c.points[c.label_to_index[label as usize]]);
    }
    Ok(out)
}

/// Slice each entry to the nearest constellation point and return the sliced
/// symbols alongside the demapped bit string.
///
/// Ties go to the point with smaller real part, then smaller imaginary part.
pub fn demap(s_hat: &[Complex64], c: &Constellation) -> (Vec<Complex64>, Vec<u8>) {
    let bps = c.bits_per_symbol;
    let mut symbols = Vec::with_capacity(s_hat.len());
    let mut bits = Vec::with_capacity(s_hat.len() * bps);
    for &z in s_hat {
        let idx = nearest_index(z, c);
        symbols.push(c.points[idx]);
        let label = c.labels[idx];
        for b in (0..bps).rev() {
            bits.push((label >> b) & 1);
        }
    }
    (symbols, bits)
}

fn nearest_index(z: Complex64, c: &Constellation) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (i, &p) in c.points.iter().enumerate() {
        let d = (z - p).norm_sqr();
        let better = d < best_d
            || (d == best_d
                && (p.re < c.points[best].re
                    || (p.re == c.points[best].re && p.im < c.points[best].im)));
        if better {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Bit errors between two equal-length bit strings.
pub fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}
