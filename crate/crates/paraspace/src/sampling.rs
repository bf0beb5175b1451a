//! Deterministic point-pair sampling for discretized suprema.
//!
//! Pair positions are drawn in continuum coordinates from a seeded stream
//! and snapped to whatever grid they are used on. The same seed therefore
//! yields (nearly) the same point set on a 128-grid and a 256-grid, so that
//! ratios of sampled norms across resolutions measure refinement of the
//! field, not resampling of the supremum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grading::ScalingVector;
use crate::lpanalysis::GridSpec;

#[derive(Clone, Copy, Debug)]
pub struct PairSample {
    /// Flat grid index of the anchor.
    pub x: usize,
    /// Flat grid index of the partner.
    pub y: usize,
    /// Wrapped scaled distance of the snapped points, in (0, cap].
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    pub seed: u64,
    /// Anchor count for near-pair clouds.
    pub anchors: usize,
    /// Near pairs per anchor.
    pub near_per_anchor: usize,
    /// Independent long-range pairs.
    pub far_pairs: usize,
    /// Scaled-distance cap, at most 1.
    pub radius_cap: f64,
}

impl Default for PairSampler {
    fn default() -> Self {
        Self { seed: 0x5eed, anchors: 64, near_per_anchor: 32, far_pairs: 512, radius_cap: 1.0 }
    }
}

impl PairSampler {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// A displacement with prescribed scaled length rho: split rho over the
    /// axes and invert the per-axis scaling, so the sum of |h_a|^{1/s_a}
    /// comes out to rho exactly (before snapping).
    fn scaled_offset(rng: &mut ChaCha8Rng, s: &ScalingVector, rho: f64) -> Vec<f64> {
        let d = s.dim();
        let mut weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        (0..d)
            .map(|a| {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * (weights[a] * rho).powi(s.as_slice()[a] as i32)
            })
            .collect()
    }

    fn push_pair(
        spec: &GridSpec,
        cap: f64,
        anchor: &[f64],
        offset: &[f64],
        out: &mut Vec<PairSample>,
    ) {
        let partner: Vec<f64> = anchor.iter().zip(offset).map(|(a, h)| a + h).collect();
        let x = spec.snap(anchor);
        let y = spec.snap(&partner);
        if x == y {
            return;
        }
        let dist = spec.scaled_distance(&spec.point(y), &spec.point(x));
        if dist > 0.0 && dist <= cap {
            out.push(PairSample { x, y, dist });
        }
    }

    /// The deterministic pair set on a given grid.
    pub fn pairs(&self, spec: &GridSpec) -> Vec<PairSample> {
        self.pairs_with_hotspots(spec, &[])
    }

    /// Pair set enriched with near clouds around caller-chosen grid points
    /// (typically the sites of the largest observed gradients).
    pub fn pairs_with_hotspots(&self, spec: &GridSpec, hotspots: &[usize]) -> Vec<PairSample> {
        let cap = self.radius_cap.min(1.0);
        let s = spec.scaling();
        let d = spec.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.anchors * self.near_per_anchor + self.far_pairs);

        // log-spread near radii: small enough to probe local regularity,
        // large enough to survive snapping on the coarsest grids in use
        let rho_min: f64 = 1.0 / 32.0;
        for _ in 0..self.anchors {
            let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            for _ in 0..self.near_per_anchor {
                let t = rng.gen_range(0.0..1.0f64);
                let rho = rho_min * (cap / rho_min).powf(t);
                let offset = Self::scaled_offset(&mut rng, s, rho);
                Self::push_pair(spec, cap, &anchor, &offset, &mut out);
            }
        }
        for _ in 0..self.far_pairs {
            let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let rho = rng.gen_range(rho_min..=cap);
            let offset = Self::scaled_offset(&mut rng, s, rho);
            Self::push_pair(spec, cap, &anchor, &offset, &mut out);
        }

        let mut hot_rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        for &flat in hotspots {
            let anchor = spec.point(flat);
            for _ in 0..self.near_per_anchor {
                let t = hot_rng.gen_range(0.0..1.0f64);
                let rho = rho_min * (cap / rho_min).powf(t);
                let offset = Self::scaled_offset(&mut hot_rng, s, rho);
                Self::push_pair(spec, cap, &anchor, &offset, &mut out);
            }
        }
        out
    }

    /// Clustered point triples (anchor plus two nearby offsets), for checks
    /// of composition laws that hold on the torus only locally — wrapped
    /// displacements are additive as long as all three points sit in a
    /// common small neighborhood.
    pub fn triples(&self, spec: &GridSpec, count: usize, radius: f64) -> Vec<(usize, usize, usize)> {
        let d = spec.dim();
        let s = spec.scaling();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x1357_9bdf);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let mut pts = [spec.snap(&anchor), 0, 0];
            for slot in 1..3 {
                let rho = rng.gen_range(0.0..radius);
                let offset = Self::scaled_offset(&mut rng, s, rho);
                let p: Vec<f64> = anchor.iter().zip(&offset).map(|(a, h)| a + h).collect();
                pts[slot] = spec.snap(&p);
            }
            out.push((pts[0], pts[1], pts[2]));
        }
        out
    }

    /// Deterministic grid points for residual sampling and the like.
    pub fn points(&self, spec: &GridSpec, count: usize) -> Vec<usize> {
        let d = spec.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x0fed_cba9);
        (0..count)
            .map(|_| {
                let p: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                spec.snap(&p)
            })
            .collect()
    }
}

/// Grid points with the largest first-derivative magnitude (summed over axes
/// and channels), in decreasing order. Useful anchor enrichment for norms
/// whose sup tends to sit where a field varies fastest.
pub fn top_hotspots(f: &crate::lpanalysis::GridField, count: usize) -> Vec<usize> {
    let d = f.spec().dim();
    let n = f.npoints();
    let mut magnitude = vec![0.0f64; n];
    for a in 0..d {
        let g = f.derivative(&crate::grading::MultiIndex::unit(d, a));
        for c in 0..g.channels() {
            for (m, v) in magnitude.iter_mut().zip(g.channel(c)) {
                *m += v.abs();
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| magnitude[j].partial_cmp(&magnitude[i]).unwrap().then(i.cmp(&j)));
    order.truncate(count);
    order
}
