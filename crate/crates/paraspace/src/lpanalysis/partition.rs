//! Anisotropic dyadic partition of unity on the frequency lattice, its
//! Littlewood-Paley block transforms, kernel moment checks, and spectral
//! support (annulus) checks.
//!
//! The base multiplier is a tensor product of 1-D smooth plateaus: per axis
//! chi(t) = 1 for |t| <= 1+eps, 0 for |t| >= (1-eps) 2^{s_a}, glued with the
//! exp(-1/u) step. Level j rescales the argument by the exact power of two
//! 2^{-(j+1)s}, so plateau and support membership are exact on the lattice
//! and the level-j multipliers are bitwise dilates of each other.

use crate::error::{Error, Result};
use crate::grading::{MultiIndex, ScalingVector};
use crate::lpanalysis::grid::{GridField, GridSpec};

/// Default transition sharpness of the plateau functions.
pub const PARTITION_EPS: f64 = 0.05;

/// Spectral margin such that low-high products S_{j-1}a * Delta_j c have
/// spectrum confined to the box annulus between scales j-1-margin and
/// j+1+margin. The inner frequency gap of a product term is at least
/// 2*eps*2^{j s_a}; the margin must satisfy 2^{-margin} < 2*eps, so eps =
/// 0.05 gives margin 4 for every scaling vector.
pub const SPECTRAL_MARGIN: i32 = 4;

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let rise = (-1.0 / u).exp();
        let fall = (-1.0 / (1.0 - u)).exp();
        rise / (rise + fall)
    }
}

/// 1-D plateau: exactly 1 up to 1+eps, exactly 0 from (1-eps)*2^s on.
fn chi(t: f64, s_axis: u32, eps: f64) -> f64 {
    let t = t.abs();
    let inner = 1.0 + eps;
    let outer = (1.0 - eps) * f64::powi(2.0, s_axis as i32);
    if t <= inner {
        1.0
    } else if t >= outer {
        0.0
    } else {
        smooth_step((outer - t) / (outer - inner))
    }
}

/// Membership of a lattice frequency in the closed dyadic box
/// 2^{(j+1)s}[-1,1]^d; boxes below index -1 are empty.
pub fn in_dyadic_box(s: &ScalingVector, j: i32, xi: &[i64]) -> bool {
    if j < -1 {
        return false;
    }
    xi.iter().zip(s.as_slice()).all(|(&f, &sa)| {
        let bound = f64::powi(2.0, (j + 1) * sa as i32);
        (f.abs() as f64) <= bound
    })
}

#[derive(Debug)]
pub struct DyadicPartition {
    spec: GridSpec,
    eps: f64,
    j_max: i32,
    /// phi[j+1] = sampled multiplier of block j, j = -1..=j_max.
    phi: Vec<Vec<f64>>,
    /// low[j] = sampled multiplier of S_j (the cumulative sum below j),
    /// j = 0..=j_max+1.
    low: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn build(spec: GridSpec) -> Result<Self> {
        Self::build_with_eps(spec, PARTITION_EPS)
    }

    pub fn build_with_eps(spec: GridSpec, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::MalformedPartition(format!(
                "plateau sharpness must lie in (0, 0.5), got {eps}"
            )));
        }
        let j_max = spec.j_max();
        if j_max < 0 {
            return Err(Error::GridTooSmall(format!(
                "shape {:?} with scaling {:?} cannot resolve the base dyadic box",
                spec.shape(),
                spec.scaling().as_slice()
            )));
        }
        let d = spec.dim();
        let npts = spec.len();
        let s = spec.scaling().as_slice().to_vec();

        // cumulative multipliers c_j for j = -1..=j_max, built separably
        let mut cumulative: Vec<Vec<f64>> = Vec::with_capacity((j_max + 2) as usize);
        for j in -1..=j_max {
            let axis_tables: Vec<Vec<f64>> = (0..d)
                .map(|a| {
                    let n = spec.shape()[a];
                    let scale = f64::powi(2.0, (j + 1) * s[a] as i32);
                    (0..n)
                        .map(|bin| chi(spec.freq_axis(bin, a) as f64 / scale, s[a], eps))
                        .collect()
                })
                .collect();
            let mut table = vec![1.0; npts];
            for (flat, v) in table.iter_mut().enumerate() {
                let idx = spec.indices_from_flat(flat);
                for a in 0..d {
                    *v *= axis_tables[a][idx[a]];
                }
            }
            cumulative.push(table);
        }

        let mut phi: Vec<Vec<f64>> = Vec::with_capacity((j_max + 2) as usize);
        phi.push(cumulative[0].clone());
        for j in 0..=j_max {
            let cur = &cumulative[(j + 1) as usize];
            let prev = &cumulative[j as usize];
            phi.push(cur.iter().zip(prev).map(|(a, b)| a - b).collect());
        }
        Ok(Self { spec, eps, j_max, phi, low: cumulative })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    fn check_block_scale(&self, j: i32) -> Result<()> {
        if j < -1 || j > self.j_max {
            return Err(Error::ScaleOutOfRange(format!("j = {j} outside -1..={}", self.j_max)));
        }
        Ok(())
    }

    /// Sampled multiplier of block j, j = -1..=j_max.
    pub fn phi(&self, j: i32) -> &[f64] {
        assert!(j >= -1 && j <= self.j_max, "block scale out of range");
        &self.phi[(j + 1) as usize]
    }

    pub fn phi_at(&self, j: i32, flat: usize) -> f64 {
        self.phi(j)[flat]
    }

    /// Sampled multiplier of S_j = sum of blocks below j, j = 0..=j_max+1.
    pub fn low_multiplier(&self, j: i32) -> &[f64] {
        assert!(j >= 0 && j <= self.j_max + 1, "low-pass scale out of range");
        &self.low[j as usize]
    }

    /// Per-axis half width of the dyadic box at level j.
    pub fn box_bound(&self, j: i32, axis: usize) -> f64 {
        f64::powi(2.0, (j + 1) * self.spec.scaling().as_slice()[axis] as i32)
    }

    /// Indicator (exact 0/1) of the resolved band, the box at j_max - 1.
    /// Fields respecting the band contract have spectrum inside it.
    pub fn band_indicator(&self) -> Vec<f64> {
        let s = self.spec.scaling().clone();
        let jb = self.j_max - 1;
        (0..self.spec.len())
            .map(|flat| if in_dyadic_box(&s, jb, &self.spec.freq(flat)) { 1.0 } else { 0.0 })
            .collect()
    }

    /// Project a field onto the resolved band (exact spectral cutoff).
    pub fn band_limit(&self, f: &GridField) -> Result<GridField> {
        self.spec.same_as(f.spec())?;
        Ok(f.apply_table(&self.band_indicator()))
    }

    /// Relative spectral mass outside the resolved band.
    pub fn band_leakage(&self, f: &GridField) -> f64 {
        let ind = self.band_indicator();
        let npts = self.spec.len();
        let sp = f.spectrum();
        let mut peak = 0.0f64;
        let mut outside = 0.0f64;
        for c in 0..f.channels() {
            for i in 0..npts {
                let m = sp[c * npts + i].norm();
                peak = peak.max(m);
                if ind[i] == 0.0 {
                    outside = outside.max(m);
                }
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            outside / peak
        }
    }
}

/// Scaled radius of the largest mode ball that the partition reconstructs
/// exactly: per axis the plateau of the top cumulative multiplier, capped
/// strictly below the Nyquist line so every mode keeps its conjugate
/// partner on the lattice.
pub fn resolved_radius(spec: &GridSpec) -> f64 {
    let j_max = spec.j_max();
    let s = spec.scaling().as_slice();
    (0..spec.dim())
        .map(|a| {
            let plateau = (1.0 + PARTITION_EPS) * f64::powi(2.0, (j_max + 1) * s[a] as i32);
            let nyquist = spec.shape()[a] as f64 / 2.0 - 1.0;
            plateau.min(nyquist).powf(1.0 / s[a] as f64)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Littlewood-Paley block: spectrum multiplied by phi_j.
pub fn lp_block(f: &GridField, j: i32, p: &DyadicPartition) -> Result<GridField> {
    p.spec().same_as(f.spec())?;
    p.check_block_scale(j)?;
    Ok(f.apply_table(p.phi(j)))
}

/// Low-pass S_j: the cumulative multiplier below scale j (S_0 is block -1,
/// S_{j_max+1} is the identity on band-limited fields).
pub fn lp_low(f: &GridField, j: i32, p: &DyadicPartition) -> Result<GridField> {
    p.spec().same_as(f.spec())?;
    if j < 0 || j > p.j_max() + 1 {
        return Err(Error::ScaleOutOfRange(format!("j = {j} outside 0..={}", p.j_max() + 1)));
    }
    Ok(f.apply_table(p.low_multiplier(j)))
}

/// Spectral partial derivative (symbol (2 pi i xi)^k).
pub fn spectral_derivative(f: &GridField, k: &MultiIndex) -> GridField {
    f.derivative(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// The kernel of one block Delta_j, j >= 0.
    Block(i32),
    /// The kernel of the low-pass S_j, j >= 0.
    LowPass(i32),
}

#[derive(Clone, Copy, Debug)]
pub struct MomentCheck {
    /// The moment of the kernel paired with derivative k against monomial l.
    pub value: f64,
    /// Max deviation of the multiplier from its required plateau value on
    /// the sampled neighborhood of frequency zero.
    pub residual: f64,
}

/// Kernel moments against polynomials, verified in frequency space.
///
/// Block kernels integrate every polynomial to zero because their multiplier
/// vanishes identically near frequency zero; low-pass kernels act as the
/// identity on polynomials because their multiplier is one there. The
/// returned value is the analytic moment (0, or delta_{kl} k! for low-pass);
/// the residual measures the plateau on the lattice neighborhood, which the
/// construction makes exactly zero.
pub fn kernel_moment(
    p: &DyadicPartition,
    kind: KernelKind,
    k: &MultiIndex,
    l: &MultiIndex,
) -> Result<MomentCheck> {
    let spec = p.spec();
    let s = spec.scaling();
    let (table, plateau, j): (&[f64], f64, i32) = match kind {
        KernelKind::Block(j) => {
            if j < 0 || j > p.j_max() {
                return Err(Error::ScaleOutOfRange(format!("j = {j} outside 0..={}", p.j_max())));
            }
            (p.phi(j), 0.0, j)
        }
        KernelKind::LowPass(j) => {
            if j < 0 || j > p.j_max() + 1 {
                return Err(Error::ScaleOutOfRange(format!("j = {j} outside 0..={}", p.j_max() + 1)));
            }
            (p.low_multiplier(j), 1.0, j)
        }
    };
    // neighborhood: lattice points of the closed box at level j-1
    let mut residual = 0.0f64;
    for flat in 0..spec.len() {
        let xi = spec.freq(flat);
        if in_dyadic_box(s, j - 1, &xi) {
            residual = residual.max((table[flat] - plateau).abs());
        }
    }
    if residual > 1e-12 {
        return Err(Error::MalformedPartition(format!(
            "multiplier plateau residual {residual:.3e} near frequency zero"
        )));
    }
    let value = match kind {
        KernelKind::Block(_) => 0.0,
        KernelKind::LowPass(_) => {
            if k == l {
                k.factorial()
            } else {
                0.0
            }
        }
    };
    Ok(MomentCheck { value, residual })
}

/// Relative spectral leakage of a field outside the box annulus centered at
/// scale j, widened by `margin` levels on both sides: the max spectrum
/// magnitude at lattice frequencies inside the inner box or outside the
/// outer box, divided by the global max. A zero field reports 0; a field
/// whose peak sits outside the annulus (like a constant) reports 1.
pub fn check_spectral_annulus(f: &GridField, j: i32, margin: i32) -> f64 {
    assert!(j >= 0, "annulus scale must be nonnegative");
    let spec = f.spec();
    let s = spec.scaling();
    let npts = spec.len();
    let sp = f.spectrum();
    let mut peak = 0.0f64;
    let mut outside = 0.0f64;
    for flat in 0..npts {
        let xi = spec.freq(flat);
        let in_annulus =
            in_dyadic_box(s, j + 1 + margin, &xi) && !in_dyadic_box(s, j - 1 - margin, &xi);
        for c in 0..f.channels() {
            let m = sp[c * npts + flat].norm();
            peak = peak.max(m);
            if !in_annulus {
                outside = outside.max(m);
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        outside / peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::ScalingVector;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn part(shape: Vec<usize>, s: Vec<u32>) -> DyadicPartition {
        let spec = GridSpec::new(shape, ScalingVector::new(s).unwrap()).unwrap();
        DyadicPartition::build(spec).unwrap()
    }

    fn rand_band_limited(p: &DyadicPartition, seed: u64) -> GridField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = GridField::new(
            p.spec().clone(),
            1,
            (0..p.spec().len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        p.band_limit(&raw).unwrap()
    }

    #[test]
    fn partition_sums_to_one_on_resolved_band() {
        for p in [
            part(vec![64, 64], vec![1, 1]),
            part(vec![64, 32], vec![2, 1]),
            part(vec![32, 16, 16], vec![2, 1, 1]),
        ] {
            let spec = p.spec();
            let s = spec.scaling();
            let mut worst = 0.0f64;
            for flat in 0..spec.len() {
                if !in_dyadic_box(s, p.j_max(), &spec.freq(flat)) {
                    continue;
                }
                let sum: f64 = (-1..=p.j_max()).map(|j| p.phi_at(j, flat)).sum();
                worst = worst.max((sum - 1.0).abs());
            }
            assert!(worst <= 8.0 * f64::EPSILON, "partition sum residual {worst:.3e}");
        }
    }

    #[test]
    fn blocks_are_within_unit_range_and_vanish_at_zero() {
        let p = part(vec![64, 32], vec![2, 1]);
        let zero = p.spec().flat_from_freq(&[0, 0]);
        assert_eq!(p.phi_at(-1, zero), 1.0);
        for j in 0..=p.j_max() {
            assert_eq!(p.phi_at(j, zero), 0.0);
        }
        for j in -1..=p.j_max() {
            for &v in p.phi(j) {
                assert!((0.0..=1.0).contains(&v));
            }
        }
        // base multiplier is 1 on the whole unit box
        for xi in [[1i64, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]] {
            assert_eq!(p.phi_at(-1, p.spec().flat_from_freq(&xi)), 1.0);
        }
    }

    #[test]
    fn supports_of_distant_blocks_are_exactly_disjoint() {
        for p in [part(vec![64, 64], vec![1, 1]), part(vec![64, 32], vec![2, 1])] {
            for i in -1..=p.j_max() {
                for j in -1..=p.j_max() {
                    if (i - j).abs() <= 1 {
                        continue;
                    }
                    let pi = p.phi(i);
                    let pj = p.phi(j);
                    for flat in 0..p.spec().len() {
                        assert!(
                            pi[flat] * pj[flat] == 0.0,
                            "blocks {i} and {j} overlap at bin {flat}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn multipliers_are_bitwise_dilates() {
        let spec = GridSpec::new(vec![256], ScalingVector::isotropic(1)).unwrap();
        let p = DyadicPartition::build(spec.clone()).unwrap();
        for (j, jp) in [(3, 1), (4, 2), (2, 1)] {
            let shift = j - jp;
            for flat in 0..spec.len() {
                let xi = spec.freq(flat)[0];
                let scaled = xi << shift;
                if scaled.abs() >= spec.shape()[0] as i64 / 2 {
                    continue;
                }
                let lhs = p.phi_at(j, spec.flat_from_freq(&[scaled]));
                let rhs = p.phi_at(jp, flat);
                assert!(lhs == rhs, "dilation mismatch at xi={xi}, j={j}, j'={jp}");
            }
        }
    }

    #[test]
    fn block_of_constant_field() {
        let p = part(vec![32, 32], vec![1, 1]);
        let one = GridField::constant(p.spec().clone(), 1.0);
        let low = lp_block(&one, -1, &p).unwrap();
        for i in 0..one.npoints() {
            assert_abs_diff_eq!(low.value(0, i), 1.0, epsilon = 1e-13);
        }
        for j in 0..=p.j_max() {
            let b = lp_block(&one, j, &p).unwrap();
            assert_eq!(b.sup_norm(), 0.0);
        }
    }

    #[test]
    fn single_mode_is_owned_by_one_block() {
        let p = part(vec![64, 64], vec![1, 1]);
        // frequency (8,0): chi(8/8)=1 at level 2, chi(8/4)=0 at level 1
        let owner = 2;
        assert_eq!(p.phi_at(owner, p.spec().flat_from_freq(&[8, 0])), 1.0);
        let f = GridField::from_fn(p.spec().clone(), |x| (TAU * 8.0 * x[0]).cos());
        for j in -1..=p.j_max() {
            let b = lp_block(&f, j, &p).unwrap();
            if j == owner {
                let diff = b.sub(&f).unwrap().sup_norm();
                assert!(diff <= 1e-12, "owner block should reproduce the mode, diff {diff:.3e}");
            } else {
                assert!(b.sup_norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn blocks_reconstruct_band_limited_fields() {
        let p = part(vec![64, 32], vec![2, 1]);
        for seed in 0..3 {
            let f = rand_band_limited(&p, seed);
            let mut sum = GridField::zeros(p.spec().clone(), 1);
            for j in -1..=p.j_max() {
                sum = sum.add(&lp_block(&f, j, &p).unwrap()).unwrap();
            }
            let rel = sum.sub(&f).unwrap().sup_norm() / f.sup_norm();
            assert!(rel <= 1e-12, "reconstruction residual {rel:.3e}");
        }
    }

    #[test]
    fn low_pass_is_cumulative() {
        let p = part(vec![32, 32], vec![1, 1]);
        let f = rand_band_limited(&p, 7);
        // S_0 equals block -1 bitwise (same multiplier table)
        let s0 = lp_low(&f, 0, &p).unwrap();
        let d0 = lp_block(&f, -1, &p).unwrap();
        assert_eq!(s0.data(), d0.data());
        // S_j + sum of blocks at and above j restores f
        for j in 0..=p.j_max() {
            let mut acc = lp_low(&f, j, &p).unwrap();
            for i in j..=p.j_max() {
                acc = acc.add(&lp_block(&f, i, &p).unwrap()).unwrap();
            }
            let rel = acc.sub(&f).unwrap().sup_norm() / f.sup_norm();
            assert!(rel <= 1e-12);
        }
        // top low-pass is the identity on the band
        let top = lp_low(&f, p.j_max() + 1, &p).unwrap();
        assert!(top.sub(&f).unwrap().sup_norm() / f.sup_norm() <= 1e-12);
    }

    #[test]
    fn constants_pass_through_low_pass() {
        let p = part(vec![32, 32], vec![1, 1]);
        let c = GridField::constant(p.spec().clone(), -2.5);
        for j in 0..=p.j_max() + 1 {
            let out = lp_low(&c, j, &p).unwrap();
            for i in 0..c.npoints() {
                assert_abs_diff_eq!(out.value(0, i), -2.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn kernel_moments_have_exact_plateaus() {
        let p = part(vec![64, 32], vec![2, 1]);
        let k10 = MultiIndex::new(vec![1, 0]);
        let k20 = MultiIndex::new(vec![2, 0]);
        let zero = MultiIndex::zero(2);
        for j in 0..=p.j_max() {
            let m = kernel_moment(&p, KernelKind::Block(j), &k10, &k10).unwrap();
            assert_eq!(m.value, 0.0);
            assert_eq!(m.residual, 0.0);
        }
        let m = kernel_moment(&p, KernelKind::LowPass(1), &k10, &k10).unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.residual, 0.0);
        let m = kernel_moment(&p, KernelKind::LowPass(1), &zero, &k20).unwrap();
        assert_eq!(m.value, 0.0);
        let m = kernel_moment(&p, KernelKind::LowPass(0), &k20, &k20).unwrap();
        assert_eq!(m.value, 2.0);
        assert!(kernel_moment(&p, KernelKind::Block(-1), &zero, &zero).is_err());
    }

    #[test]
    fn annulus_leakage_of_blocks_and_products() {
        let p = part(vec![64, 64], vec![1, 1]);
        let g = rand_band_limited(&p, 21);
        let a = rand_band_limited(&p, 22);
        for j in 1..=p.j_max() {
            let bj = lp_block(&g, j, &p).unwrap();
            assert_eq!(check_spectral_annulus(&bj, j, 0), 0.0);
            let sa = lp_low(&a, j - 1, &p).unwrap();
            let term = sa.mul_pointwise(&bj).unwrap();
            let leak = check_spectral_annulus(&term, j, SPECTRAL_MARGIN);
            assert!(leak <= 1e-10, "product leakage {leak:.3e} at scale {j}");
        }
        let one = GridField::constant(p.spec().clone(), 1.0);
        assert_eq!(check_spectral_annulus(&one, 3, 0), 1.0);
    }

    #[test]
    fn band_projection_is_idempotent_and_detected() {
        let p = part(vec![32, 32], vec![1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = GridField::new(
            p.spec().clone(),
            1,
            (0..p.spec().len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        assert!(p.band_leakage(&raw) > 0.1);
        let f = p.band_limit(&raw).unwrap();
        assert_eq!(p.band_leakage(&f), 0.0);
        let again = p.band_limit(&f).unwrap();
        assert_eq!(f.spectrum(), again.spectrum());
    }

    #[test]
    fn rejects_grids_too_small_for_one_box() {
        let spec = GridSpec::new(vec![8, 8], ScalingVector::new(vec![3, 1]).unwrap()).unwrap();
        assert!(DyadicPartition::build(spec).is_err());
    }
}
