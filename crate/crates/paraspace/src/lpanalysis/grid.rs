//! Periodic grid specifications and sampled fields with cached spectra.
//!
//! The domain is the unit torus [0,1)^d sampled on a power-of-two lattice.
//! Fields can carry several channels (one per basis symbol when they take
//! values in a graded space); samples are stored channel-major row-major.

use num_complex::Complex64;
use std::sync::OnceLock;

use super::fft;
use crate::error::{Error, Result};
use crate::grading::{MultiIndex, ScalingVector};

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    shape: Vec<usize>,
    scaling: ScalingVector,
}

impl GridSpec {
    pub fn new(shape: Vec<usize>, scaling: ScalingVector) -> Result<Self> {
        if shape.len() != scaling.dim() {
            return Err(Error::DimensionMismatch(format!(
                "scaling vector has {} axes, shape has {}",
                scaling.dim(),
                shape.len()
            )));
        }
        for &n in &shape {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "sample counts must be powers of two with at least 8 points, got {n}"
                )));
            }
        }
        Ok(Self { shape, scaling })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scaling(&self) -> &ScalingVector {
        &self.scaling
    }

    pub fn strides(&self) -> Vec<usize> {
        fft::strides(&self.shape)
    }

    /// Grid point coordinates of a flat sample index, in [0,1)^d.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let st = self.strides();
        (0..self.dim()).map(|a| {
            let idx = rem / st[a];
            rem %= st[a];
            idx as f64 / self.shape[a] as f64
        }).collect()
    }

    pub fn flat_from_indices(&self, idx: &[usize]) -> usize {
        let st = self.strides();
        idx.iter().zip(&st).map(|(i, s)| i * s).sum()
    }

    pub fn indices_from_flat(&self, flat: usize) -> Vec<usize> {
        let mut rem = flat;
        let st = self.strides();
        (0..self.dim()).map(|a| {
            let idx = rem / st[a];
            rem %= st[a];
            idx
        }).collect()
    }

    /// Signed frequency of a bin along one axis: bins [0, N/2) map to
    /// themselves, [N/2, N) to negative frequencies.
    pub fn freq_axis(&self, bin: usize, a: usize) -> i64 {
        let n = self.shape[a];
        if bin < n / 2 {
            bin as i64
        } else {
            bin as i64 - n as i64
        }
    }

    /// Signed frequency vector of a flat spectral index.
    pub fn freq(&self, flat: usize) -> Vec<i64> {
        self.indices_from_flat(flat)
            .iter()
            .enumerate()
            .map(|(a, &bin)| self.freq_axis(bin, a))
            .collect()
    }

    /// Flat spectral index of a signed frequency vector inside the lattice.
    pub fn flat_from_freq(&self, xi: &[i64]) -> usize {
        let idx: Vec<usize> = xi
            .iter()
            .enumerate()
            .map(|(a, &f)| {
                let n = self.shape[a] as i64;
                debug_assert!(f >= -n / 2 && f < n / 2, "frequency outside lattice");
                (if f < 0 { f + n } else { f }) as usize
            })
            .collect();
        self.flat_from_indices(&idx)
    }

    /// Largest scale j whose dyadic box 2^{(j+1)s}[-1,1]^d fits the
    /// frequency lattice on every axis.
    pub fn j_max(&self) -> i32 {
        self.shape
            .iter()
            .zip(self.scaling.as_slice())
            .map(|(&n, &s)| ((n.trailing_zeros() as i32 - 1) / s as i32) - 1)
            .min()
            .unwrap()
    }

    /// Nearest grid point to a continuum point (coordinates wrapped).
    pub fn snap(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = x
            .iter()
            .zip(&self.shape)
            .map(|(&xi, &n)| {
                let i = (xi * n as f64).round() as i64;
                i.rem_euclid(n as i64) as usize
            })
            .collect();
        self.flat_from_indices(&idx)
    }

    /// Wrapped scaled distance between two points of the torus.
    pub fn scaled_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.scaling.aniso_norm_wrapped(&diff, 1.0)
    }

    pub fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpecMismatch(format!(
                "{:?}/{:?} vs {:?}/{:?}",
                self.shape,
                self.scaling.as_slice(),
                other.shape,
                other.scaling.as_slice()
            )))
        }
    }
}

#[derive(Debug)]
pub struct GridField {
    spec: GridSpec,
    channels: usize,
    data: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for GridField {
    fn clone(&self) -> Self {
        let out = GridField {
            spec: self.spec.clone(),
            channels: self.channels,
            data: self.data.clone(),
            spectrum: OnceLock::new(),
        };
        if let Some(sp) = self.spectrum.get() {
            let _ = out.spectrum.set(sp.clone());
        }
        out
    }
}

impl GridField {
    pub fn new(spec: GridSpec, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || data.len() != channels * spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples for {channels} channels, got {}",
                channels * spec.len(),
                data.len()
            )));
        }
        Ok(Self { spec, channels, data, spectrum: OnceLock::new() })
    }

    pub fn zeros(spec: GridSpec, channels: usize) -> Self {
        let data = vec![0.0; channels * spec.len()];
        Self { spec, channels, data, spectrum: OnceLock::new() }
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        let data = vec![value; spec.len()];
        Self { spec, channels: 1, data, spectrum: OnceLock::new() }
    }

    /// Single-channel field sampled from a function of the point coordinates.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let data: Vec<f64> = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        Self { spec, channels: 1, data, spectrum: OnceLock::new() }
    }

    /// Build from a full channel-major spectrum; samples are its inverse
    /// transform and the spectrum cache is seeded with the exact input, so
    /// spectral supports enforced upstream stay exact.
    pub fn from_spectrum(spec: GridSpec, channels: usize, spectrum: Vec<Complex64>) -> Result<Self> {
        let npts = spec.len();
        if channels == 0 || spectrum.len() != channels * npts {
            return Err(Error::InvalidGrid(format!(
                "expected {} spectrum entries for {channels} channels, got {}",
                channels * npts,
                spectrum.len()
            )));
        }
        let mut data = Vec::with_capacity(channels * npts);
        for c in 0..channels {
            data.extend(fft::inverse_to_real(&spectrum[c * npts..(c + 1) * npts], spec.shape()));
        }
        let field = Self { spec, channels, data, spectrum: OnceLock::new() };
        let _ = field.spectrum.set(spectrum);
        Ok(field)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn npoints(&self) -> usize {
        self.spec.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.npoints();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn value(&self, c: usize, flat: usize) -> f64 {
        self.data[c * self.npoints() + flat]
    }

    /// Per-point values across channels.
    pub fn values_at(&self, flat: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.value(c, flat)).collect()
    }

    /// Cached forward transform of all channels (channel-major).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let npts = self.npoints();
            let mut out = Vec::with_capacity(self.channels * npts);
            for c in 0..self.channels {
                out.extend(fft::forward_real(self.channel(c), self.spec.shape()));
            }
            out
        })
    }

    pub fn channel_spectrum(&self, c: usize) -> &[Complex64] {
        let n = self.npoints();
        &self.spectrum()[c * n..(c + 1) * n]
    }

    /// New field with every channel's spectrum multiplied by a real symbol
    /// of the signed frequency. Exact zeros of the symbol produce exact
    /// zeros in the output spectrum.
    pub fn apply_real_multiplier(&self, m: impl Fn(&[i64]) -> f64) -> Self {
        let npts = self.npoints();
        let table: Vec<f64> = (0..npts).map(|i| m(&self.spec.freq(i))).collect();
        self.apply_table(&table)
    }

    /// Same, with a precomputed per-bin table.
    pub fn apply_table(&self, table: &[f64]) -> Self {
        assert_eq!(table.len(), self.npoints());
        let npts = self.npoints();
        let src = self.spectrum();
        let mut out = vec![Complex64::default(); self.channels * npts];
        for c in 0..self.channels {
            for i in 0..npts {
                out[c * npts + i] = src[c * npts + i] * table[i];
            }
        }
        Self::from_spectrum(self.spec.clone(), self.channels, out).expect("shape preserved")
    }

    pub fn apply_complex_multiplier(&self, m: impl Fn(&[i64]) -> Complex64) -> Self {
        let npts = self.npoints();
        let table: Vec<Complex64> = (0..npts).map(|i| m(&self.spec.freq(i))).collect();
        let src = self.spectrum();
        let mut out = vec![Complex64::default(); self.channels * npts];
        for c in 0..self.channels {
            for i in 0..npts {
                out[c * npts + i] = src[c * npts + i] * table[i];
            }
        }
        Self::from_spectrum(self.spec.clone(), self.channels, out).expect("shape preserved")
    }

    /// Spectral partial derivative of scaled order k: symbol (2 pi i xi)^k.
    /// The unmatched Nyquist bin is zeroed for odd k_a so the result of a
    /// real input stays real.
    pub fn derivative(&self, k: &MultiIndex) -> Self {
        assert_eq!(k.dim(), self.spec.dim(), "derivative index dimension mismatch");
        let shape = self.spec.shape().to_vec();
        let kk = k.clone();
        self.apply_complex_multiplier(move |xi| {
            let mut acc = Complex64::new(1.0, 0.0);
            for a in 0..xi.len() {
                let ka = kk.get(a);
                if ka == 0 {
                    continue;
                }
                if ka % 2 == 1 && xi[a] == -(shape[a] as i64) / 2 {
                    return Complex64::new(0.0, 0.0);
                }
                let base = Complex64::new(0.0, std::f64::consts::TAU * xi[a] as f64);
                acc *= base.powu(ka);
            }
            acc
        })
    }

    /// Max over grid points of the per-point l1 norm across channels.
    pub fn sup_norm(&self) -> f64 {
        let npts = self.npoints();
        (0..npts)
            .map(|i| (0..self.channels).map(|c| self.data[c * npts + i].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm_channel(&self, c: usize) -> f64 {
        self.channel(c).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn extract_channel(&self, c: usize) -> GridField {
        let out = GridField {
            spec: self.spec.clone(),
            channels: 1,
            data: self.channel(c).to_vec(),
            spectrum: OnceLock::new(),
        };
        if let Some(sp) = self.spectrum.get() {
            let n = self.npoints();
            let _ = out.spectrum.set(sp[c * n..(c + 1) * n].to_vec());
        }
        out
    }

    /// Stack single-channel fields into one multi-channel field.
    pub fn stack(parts: &[GridField]) -> Result<GridField> {
        let first = parts.first().ok_or_else(|| Error::InvalidGrid("empty stack".into()))?;
        let mut data = Vec::new();
        for p in parts {
            first.spec.same_as(&p.spec)?;
            if p.channels != 1 {
                return Err(Error::InvalidGrid("stack expects single-channel parts".into()));
            }
            data.extend_from_slice(&p.data);
        }
        GridField::new(first.spec.clone(), parts.len(), data)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        GridField::new(self.spec.clone(), self.channels, data)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        GridField::new(self.spec.clone(), self.channels, data)
    }

    pub fn scale(&self, c: f64) -> GridField {
        let data = self.data.iter().map(|v| v * c).collect();
        GridField { spec: self.spec.clone(), channels: self.channels, data, spectrum: OnceLock::new() }
    }

    /// Pointwise product of two fields with matching channel counts, or a
    /// single-channel field broadcast against a multi-channel one.
    pub fn mul_pointwise(&self, other: &GridField) -> Result<GridField> {
        self.spec.same_as(&other.spec)?;
        let npts = self.npoints();
        if self.channels == other.channels {
            let data = self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect();
            return GridField::new(self.spec.clone(), self.channels, data);
        }
        let (scalar, vector) = if self.channels == 1 {
            (self, other)
        } else if other.channels == 1 {
            (other, self)
        } else {
            return Err(Error::DimensionMismatch(format!(
                "cannot broadcast {} channels against {}",
                self.channels, other.channels
            )));
        };
        let mut data = Vec::with_capacity(vector.data.len());
        for c in 0..vector.channels {
            for i in 0..npts {
                data.push(scalar.data[i] * vector.data[c * npts + i]);
            }
        }
        GridField::new(self.spec.clone(), vector.channels, data)
    }

    fn compatible(&self, other: &GridField) -> Result<()> {
        self.spec.same_as(&other.spec)?;
        if self.channels != other.channels {
            return Err(Error::DimensionMismatch(format!(
                "channel counts differ: {} vs {}",
                self.channels, other.channels
            )));
        }
        Ok(())
    }

    /// Trigonometric interpolation of one channel at arbitrary points.
    pub fn offgrid(&self, c: usize) -> OffGridEvaluator {
        OffGridEvaluator::new(self, c)
    }
}

/// Evaluates one channel anywhere on the torus by summing its nonzero
/// spectral modes. Exact (up to roundoff) for band-limited fields.
pub struct OffGridEvaluator {
    axis_freqs: Vec<Vec<f64>>,
    /// Per entry: axis-local frequency indices then the coefficient / M.
    entries: Vec<(Vec<u32>, Complex64)>,
}

impl OffGridEvaluator {
    fn new(field: &GridField, c: usize) -> Self {
        let spec = field.spec();
        let npts = field.npoints();
        let sp = field.channel_spectrum(c);
        let peak = sp.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = peak * 1e-15;
        let d = spec.dim();
        let mut axis_freqs: Vec<Vec<f64>> = vec![Vec::new(); d];
        let mut axis_map: Vec<std::collections::HashMap<i64, u32>> =
            vec![std::collections::HashMap::new(); d];
        let mut entries = Vec::new();
        let inv_m = 1.0 / npts as f64;
        for i in 0..npts {
            if sp[i].norm() <= floor {
                continue;
            }
            let xi = spec.freq(i);
            let mut idx = Vec::with_capacity(d);
            for a in 0..d {
                let next = axis_freqs[a].len() as u32;
                let t = *axis_map[a].entry(xi[a]).or_insert_with(|| {
                    axis_freqs[a].push(std::f64::consts::TAU * xi[a] as f64);
                    next
                });
                idx.push(t);
            }
            entries.push((idx, sp[i] * inv_m));
        }
        Self { axis_freqs, entries }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let phases: Vec<Vec<Complex64>> = self
            .axis_freqs
            .iter()
            .zip(x)
            .map(|(fs, &xa)| fs.iter().map(|w| Complex64::from_polar(1.0, w * xa)).collect())
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, coef) in &self.entries {
            let mut term = *coef;
            for (a, &t) in idx.iter().enumerate() {
                term *= phases[a][t as usize];
            }
            acc += term;
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn spec2(n: usize) -> GridSpec {
        GridSpec::new(vec![n, n], ScalingVector::isotropic(2)).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(vec![8, 16], ScalingVector::isotropic(2)).is_ok());
        assert!(GridSpec::new(vec![4, 16], ScalingVector::isotropic(2)).is_err());
        assert!(GridSpec::new(vec![12, 16], ScalingVector::isotropic(2)).is_err());
        assert!(GridSpec::new(vec![8], ScalingVector::isotropic(2)).is_err());
    }

    #[test]
    fn largest_scale_examples() {
        assert_eq!(spec2(256).j_max(), 6);
        assert_eq!(spec2(8).j_max(), 1);
        let par = GridSpec::new(vec![64, 64, 64], ScalingVector::new(vec![2, 1, 1]).unwrap()).unwrap();
        assert_eq!(par.j_max(), 1);
        let onedim = GridSpec::new(vec![128], ScalingVector::isotropic(1)).unwrap();
        assert_eq!(onedim.j_max(), 5);
    }

    #[test]
    fn frequency_lattice_roundtrip() {
        let sp = spec2(16);
        for flat in 0..sp.len() {
            let xi = sp.freq(flat);
            for (a, &f) in xi.iter().enumerate() {
                assert!(f >= -(sp.shape()[a] as i64) / 2);
                assert!(f < sp.shape()[a] as i64 / 2);
            }
            assert_eq!(sp.flat_from_freq(&xi), flat);
        }
    }

    #[test]
    fn derivative_of_single_mode() {
        let sp = GridSpec::new(vec![64, 8], ScalingVector::isotropic(2)).unwrap();
        let f = GridField::from_fn(sp.clone(), |x| (TAU * x[0]).sin());
        let df = f.derivative(&MultiIndex::new(vec![1, 0]));
        for i in 0..sp.len() {
            let x = sp.point(i);
            assert_abs_diff_eq!(df.value(0, i), TAU * (TAU * x[0]).cos(), epsilon = 1e-10);
        }
        // zeroth derivative is the identity
        let same = f.derivative(&MultiIndex::zero(2));
        for i in 0..sp.len() {
            assert_abs_diff_eq!(same.value(0, i), f.value(0, i), epsilon = 1e-13);
        }
    }

    #[test]
    fn offgrid_interpolation_matches_analytic_mode() {
        let sp = spec2(32);
        let f = GridField::from_fn(sp, |x| (TAU * (3.0 * x[0] - x[1])).cos() + 0.5);
        let ev = f.offgrid(0);
        let pts = [[0.13, 0.71], [0.5, 0.0], [0.999, 0.301]];
        for p in pts {
            let want = (TAU * (3.0 * p[0] - p[1])).cos() + 0.5;
            assert_abs_diff_eq!(ev.eval(&p), want, epsilon = 1e-11);
        }
    }

    #[test]
    fn from_spectrum_keeps_exact_support() {
        let sp = spec2(16);
        let n = sp.len();
        let mut spectrum = vec![Complex64::default(); n];
        let hit = sp.flat_from_freq(&[2, -3]);
        let mirror = sp.flat_from_freq(&[-2, 3]);
        spectrum[hit] = Complex64::new(8.0, 1.0);
        spectrum[mirror] = Complex64::new(8.0, -1.0);
        let f = GridField::from_spectrum(sp, 1, spectrum).unwrap();
        let back = f.spectrum();
        let mut nonzero = 0;
        for v in back {
            if v.norm() != 0.0 {
                nonzero += 1;
            }
        }
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn broadcast_product_and_stack() {
        let sp = spec2(8);
        let a = GridField::from_fn(sp.clone(), |x| x[0]);
        let b = GridField::from_fn(sp.clone(), |x| 1.0 + x[1]);
        let two = GridField::stack(&[a.clone(), b.clone()]).unwrap();
        let prod = a.mul_pointwise(&two).unwrap();
        assert_eq!(prod.channels(), 2);
        for i in 0..sp.len() {
            assert_abs_diff_eq!(prod.value(0, i), a.value(0, i) * a.value(0, i));
            assert_abs_diff_eq!(prod.value(1, i), a.value(0, i) * b.value(0, i));
        }
        // l1 across channels at the argmax point
        let x = sp.point(sp.len() - 1);
        assert!(two.sup_norm() >= x[0].abs() + (1.0 + x[1]).abs() - 1e-12);
    }
}
