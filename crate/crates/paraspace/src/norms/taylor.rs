//! Anisotropic Taylor polynomials and remainders on grid fields.
//!
//! The polynomial at level gamma collects the terms with scaled weight
//! |k|_s < gamma. The remainder comes in two forms: the direct difference
//! f(x+h) - T(x,h), and an integral form that sums, over the boundary index
//! set just above gamma, 1-D line integrals of the highest derivatives along
//! the last-axis segment of the expansion path. Both evaluate off-grid
//! points by trigonometric interpolation, so they agree to quadrature
//! accuracy on band-limited fields.

use crate::error::{Error, Result};
use crate::grading::{index_set_below, index_set_boundary, MultiIndex};
use crate::lpanalysis::{GridField, GridSpec, OffGridEvaluator};

/// Gauss-Legendre nodes and weights on [0,1].
pub fn gauss_legendre_unit(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1);
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        // Newton iteration on the Legendre polynomial over [-1,1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for n in 2..=q {
                let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = if q == 1 { 1.0 } else { q as f64 * (x * p1 - p0) / (x * x - 1.0) };
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map to [0,1], filling symmetric slots
        nodes[i] = 0.5 * (1.0 - x);
        nodes[q - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[q - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemainderMethod {
    /// f(x+h) minus the Taylor polynomial; the oracle form.
    Direct,
    /// Line-integral form over the boundary index set; requires a
    /// non-integer level.
    Integral,
}

/// Precomputed derivative data of one field channel for repeated Taylor
/// evaluations at a fixed level.
pub struct TaylorJet {
    spec: GridSpec,
    gamma: f64,
    below: Vec<(MultiIndex, GridField)>,
    boundary: Option<Vec<(MultiIndex, OffGridEvaluator)>>,
    base_eval: OffGridEvaluator,
    quad: (Vec<f64>, Vec<f64>),
}

impl TaylorJet {
    pub fn new(f: &GridField, channel: usize, gamma: f64, quad_nodes: usize) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidGamma(format!(
                "positive finite expansion level required, got {gamma}"
            )));
        }
        let g = if f.channels() == 1 && channel == 0 { f.clone() } else { f.extract_channel(channel) };
        let s = g.spec().scaling().clone();
        let below = index_set_below(gamma, &s)
            .into_iter()
            .map(|k| {
                let d = g.derivative(&k);
                (k, d)
            })
            .collect();
        let boundary = match index_set_boundary(gamma, &s) {
            Ok(set) => Some(
                set.into_iter()
                    .map(|k| {
                        let d = g.derivative(&k);
                        let ev = d.offgrid(0);
                        (k, ev)
                    })
                    .collect(),
            ),
            Err(_) => None,
        };
        Ok(Self {
            spec: g.spec().clone(),
            gamma,
            below,
            boundary,
            base_eval: g.offgrid(0),
            quad: gauss_legendre_unit(quad_nodes),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The Taylor polynomial at a grid point, evaluated at displacement h.
    pub fn poly(&self, x_flat: usize, h: &[f64]) -> f64 {
        self.below
            .iter()
            .map(|(k, df)| df.value(0, x_flat) / k.factorial() * k.monomial(h))
            .sum()
    }

    pub fn remainder_direct(&self, x_flat: usize, h: &[f64]) -> f64 {
        let x = self.spec.point(x_flat);
        let shifted: Vec<f64> = x.iter().zip(h).map(|(a, b)| a + b).collect();
        self.base_eval.eval(&shifted) - self.poly(x_flat, h)
    }

    pub fn remainder_integral(&self, x_flat: usize, h: &[f64]) -> Result<f64> {
        let boundary = self.boundary.as_ref().ok_or_else(|| {
            Error::InvalidGamma(format!(
                "integral remainder undefined at integer level {}",
                self.gamma
            ))
        })?;
        let x = self.spec.point(x_flat);
        let d = self.spec.dim();
        let (nodes, weights) = &self.quad;
        let mut total = 0.0;
        for (k, ev) in boundary {
            let m = k.first_nonzero().expect("boundary indices are nonzero");
            let km = k.get(m);
            let reduced = k
                .checked_sub(&MultiIndex::unit(d, m))
                .expect("boundary index has a positive first component");
            let factor = k.monomial(h) / reduced.factorial();
            if factor == 0.0 {
                continue;
            }
            // integrate d^k f along the partial path: full offsets before
            // axis m, t*h_m on axis m, untouched after
            let mut integral = 0.0;
            let mut pt = vec![0.0; d];
            for (&t, &w) in nodes.iter().zip(weights) {
                for a in 0..d {
                    pt[a] = x[a]
                        + if a < m {
                            h[a]
                        } else if a == m {
                            t * h[m]
                        } else {
                            0.0
                        };
                }
                let poly_weight = if km == 1 { 1.0 } else { (1.0 - t).powi(km as i32 - 1) };
                integral += w * poly_weight * ev.eval(&pt);
            }
            total += factor * integral;
        }
        Ok(total)
    }
}

/// One-off Taylor polynomial value (see TaylorJet for bulk use).
pub fn taylor_poly(f: &GridField, x_flat: usize, h: &[f64], gamma: f64) -> Result<f64> {
    Ok(TaylorJet::new(f, 0, gamma, 2)?.poly(x_flat, h))
}

/// One-off Taylor remainder with the requested method at 32 quadrature nodes.
pub fn taylor_remainder(
    f: &GridField,
    x_flat: usize,
    h: &[f64],
    gamma: f64,
    method: RemainderMethod,
) -> Result<f64> {
    let jet = TaylorJet::new(f, 0, gamma, 32)?;
    match method {
        RemainderMethod::Direct => Ok(jet.remainder_direct(x_flat, h)),
        RemainderMethod::Integral => jet.remainder_integral(x_flat, h),
    }
}
