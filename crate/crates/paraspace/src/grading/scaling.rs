//! Scaling vectors, scaled norms, and weighted multi-index sets.
//!
//! A scaling vector s ∈ ℕ_{≥1}^d grades ℝ^d anisotropically: the scaled norm
//! ‖x‖_s = Σ_i |x_i|^{1/s_i} is 1-homogeneous under the dilation
//! x_i ↦ λ^{s_i} x_i, and a multi-index k ∈ ℕ^d carries weight
//! |k|_s = Σ_i k_i s_i. The index sets below/around a threshold γ drive
//! anisotropic Taylor expansion and sector bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce `x` to its minimal-magnitude representative modulo `period`,
/// landing in [-period/2, period/2).
pub fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period + 0.5).floor()
}

/// Componentwise minimal-magnitude representative of a displacement.
pub fn wrap_displacement(x: &[f64], period: f64) -> Vec<f64> {
    x.iter().map(|&v| wrap(v, period)).collect()
}

/// Anisotropic scaling exponents, one positive integer per axis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScalingVector(Vec<u32>);

impl ScalingVector {
    pub fn new(s: Vec<u32>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::DimensionMismatch("scaling vector must be nonempty".into()));
        }
        if s.iter().any(|&v| v == 0) {
            return Err(Error::InvalidGamma("scaling exponents must be >= 1".into()));
        }
        Ok(Self(s))
    }

    pub fn isotropic(d: usize) -> Self {
        Self(vec![1; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// |s| = Σ_i s_i, the homogeneous dimension.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn min_exponent(&self) -> u32 {
        *self.0.iter().min().unwrap()
    }

    pub fn max_exponent(&self) -> u32 {
        *self.0.iter().max().unwrap()
    }

    /// ‖x‖_s = Σ_i |x_i|^{1/s_i}.
    pub fn aniso_norm(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .zip(&self.0)
            .map(|(&v, &s)| match s {
                1 => v.abs(),
                2 => v.abs().sqrt(),
                _ => v.abs().powf(1.0 / s as f64),
            })
            .sum()
    }

    /// Scaled norm of the wrapped displacement: each coordinate is reduced to
    /// its minimal-magnitude representative modulo `period` first.
    pub fn aniso_norm_wrapped(&self, x: &[f64], period: f64) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .zip(&self.0)
            .map(|(&v, &s)| {
                let w = wrap(v, period).abs();
                match s {
                    1 => w,
                    2 => w.sqrt(),
                    _ => w.powf(1.0 / s as f64),
                }
            })
            .sum()
    }

    /// Anisotropic dilation 2^{j·s}: x_i ↦ 2^{j s_i} x_i.
    pub fn dilate(&self, j: i32, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim(), "point dimension mismatch");
        x.iter()
            .zip(&self.0)
            .map(|(&v, &s)| v * (2f64).powi(j * s as i32))
            .collect()
    }
}

/// Multi-index k ∈ ℕ^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Self {
        Self(k)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// e_a, the unit index along axis `a`.
    pub fn unit(d: usize, a: usize) -> Self {
        let mut k = vec![0; d];
        k[a] = 1;
        Self(k)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, a: usize) -> u32 {
        self.0[a]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// |k| = Σ_i k_i, the unweighted order.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// |k|_s = Σ_i k_i s_i.
    pub fn weight(&self, s: &ScalingVector) -> u64 {
        assert_eq!(self.dim(), s.dim(), "scaling dimension mismatch");
        self.0
            .iter()
            .zip(s.as_slice())
            .map(|(&k, &si)| k as u64 * si as u64)
            .sum()
    }

    /// Index of the first nonzero entry, if any.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.0.iter().position(|&v| v != 0)
    }

    /// k! = Π_i k_i!.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| fact(k)).product()
    }

    /// Π_i C(k_i, l_i); zero when any l_i > k_i.
    pub fn binomial(&self, l: &MultiIndex) -> f64 {
        assert_eq!(self.dim(), l.dim());
        self.0
            .iter()
            .zip(&l.0)
            .map(|(&k, &l)| binom(k, l))
            .product()
    }

    /// h^k = Π_i h_i^{k_i}.
    pub fn monomial(&self, h: &[f64]) -> f64 {
        assert_eq!(h.len(), self.dim());
        self.0
            .iter()
            .zip(h)
            .map(|(&k, &x)| x.powi(k as i32))
            .product()
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(&a, &b)| a + b).collect())
    }

    /// Graded-lexicographic comparison: by weight |k|_s, then lexicographic.
    pub fn graded_lex_cmp(&self, other: &MultiIndex, s: &ScalingVector) -> std::cmp::Ordering {
        self.weight(s)
            .cmp(&other.weight(s))
            .then_with(|| self.0.cmp(&other.0))
    }
}

fn fact(k: u32) -> f64 {
    (1..=k as u64).map(|v| v as f64).product()
}

fn binom(k: u32, l: u32) -> f64 {
    if l > k {
        return 0.0;
    }
    // small arguments only; exact in f64 for the orders used here
    fact(k) / (fact(l) * fact(k - l))
}

/// All k with |k|_s < γ, in graded-lexicographic order. Empty for γ ≤ 0.
pub fn index_set_below(gamma: f64, s: &ScalingVector) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut prefix = vec![0u32; s.dim()];
    collect_below(s.as_slice(), gamma, 0, 0, &mut prefix, &mut out);
    out.sort_by(|a, b| a.graded_lex_cmp(b, s));
    out
}

fn collect_below(
    s: &[u32],
    gamma: f64,
    axis: usize,
    acc: u64,
    prefix: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    if axis == s.len() {
        out.push(MultiIndex::new(prefix.clone()));
        return;
    }
    let mut k = 0u32;
    loop {
        let w = acc + k as u64 * s[axis] as u64;
        if (w as f64) >= gamma {
            break;
        }
        prefix[axis] = k;
        collect_below(s, gamma, axis + 1, w, prefix, out);
        k += 1;
    }
    prefix[axis] = 0;
}

/// The Taylor remainder index set at level γ: all k with |k|_s > γ whose
/// reduction by the first nonzero coordinate drops below γ, i.e.
/// |k - e_{m(k)}|_s < γ with m(k) the first axis where k is nonzero.
/// Finite because each member satisfies |k|_s < γ + s_{m(k)}.
///
/// γ must be positive and non-integer; at integer γ the strict inequalities
/// no longer split ℕ^d cleanly and the set is not well defined.
pub fn index_set_boundary(gamma: f64, s: &ScalingVector) -> Result<Vec<MultiIndex>> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidGamma(format!(
            "remainder index set needs gamma > 0, got {gamma}"
        )));
    }
    if gamma.fract() == 0.0 {
        return Err(Error::InvalidGamma(format!(
            "remainder index set undefined at integer gamma = {gamma}"
        )));
    }
    let bound = gamma + s.max_exponent() as f64;
    let mut out: Vec<MultiIndex> = index_set_below(bound, s)
        .into_iter()
        .filter(|k| {
            let w = k.weight(s) as f64;
            if w <= gamma {
                return false;
            }
            let m = k.first_nonzero().expect("nonzero weight implies nonzero index");
            let reduced = k
                .checked_sub(&MultiIndex::unit(k.dim(), m))
                .expect("first nonzero entry is >= 1");
            (reduced.weight(s) as f64) < gamma
        })
        .collect();
    out.sort_by(|a, b| a.graded_lex_cmp(b, s));
    Ok(out)
}
