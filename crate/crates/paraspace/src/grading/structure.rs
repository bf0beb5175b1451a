//! Graded model spaces and sector-lowering contraction maps.
//!
//! A model space is a finite direct sum 𝒯 = ⊕_{α ∈ A} 𝒯_α of sectors indexed
//! by a finite set A of homogeneities (exact rationals, 0 ∈ A, each below the
//! working level γ). Sector 0 is one-dimensional, spanned by the unit symbol.
//! Contraction maps Γ act on 𝒯 and may only move mass downwards: Γτ − τ lives
//! strictly below the sector of τ. That triangularity is checked at
//! construction, exactly.

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact homogeneity value.
pub type Hom = Ratio<i64>;

pub fn hom(num: i64, den: i64) -> Hom {
    Ratio::new(num, den)
}

pub fn hom_to_f64(h: Hom) -> f64 {
    *h.numer() as f64 / *h.denom() as f64
}

/// True when γ ∈ A + ℕ, the shifted lattice of homogeneities.
pub fn in_shifted_lattice(gamma: Hom, homs: &[Hom]) -> bool {
    homs.iter().any(|&a| gamma >= a && (gamma - a).is_integer())
}

/// The finite homogeneity set A together with the working level γ.
///
/// Validated exactly: 0 ∈ A, strictly ascending, every α < γ, and γ ∉ A + ℕ.
/// The last condition is what makes the level admissible; integer offsets
/// from a sector are exactly the degenerate levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneitySet {
    homs: Vec<Hom>,
    gamma: Hom,
}

impl HomogeneitySet {
    pub fn new(homs: Vec<Hom>, gamma: Hom) -> Result<Self> {
        if homs.is_empty() {
            return Err(Error::InvalidStructure("homogeneity set must be nonempty".into()));
        }
        if !homs.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidStructure(
                "homogeneities must be strictly ascending".into(),
            ));
        }
        if !homs.contains(&Hom::zero()) {
            return Err(Error::InvalidStructure("homogeneity set must contain 0".into()));
        }
        if let Some(&top) = homs.last() {
            if top >= gamma {
                return Err(Error::InvalidGamma(format!(
                    "every homogeneity must lie below gamma = {gamma}, got {top}"
                )));
            }
        }
        if in_shifted_lattice(gamma, &homs) {
            return Err(Error::InvalidGamma(format!(
                "gamma = {gamma} lies on the shifted homogeneity lattice A + N"
            )));
        }
        Ok(Self { homs, gamma })
    }

    pub fn homs(&self) -> &[Hom] {
        &self.homs
    }

    pub fn gamma(&self) -> Hom {
        self.gamma
    }

    pub fn gamma_f64(&self) -> f64 {
        hom_to_f64(self.gamma)
    }

    pub fn contains(&self, alpha: Hom) -> bool {
        self.homs.binary_search(&alpha).is_ok()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolInfo {
    pub name: String,
    /// Sector index into `ModelSpace::sectors`.
    pub sector: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sector {
    pub alpha: Hom,
    /// Global symbol index range of this sector.
    pub start: usize,
    pub len: usize,
}

impl Sector {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A graded coefficient space with named basis symbols per sector.
///
/// Elements of 𝒯 are coefficient vectors over the global symbol order
/// (sectors ascending, declaration order within a sector). The sector norm is
/// the ℓ¹ sum of coefficients belonging to one sector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpace {
    homs: HomogeneitySet,
    sectors: Vec<Sector>,
    symbols: Vec<SymbolInfo>,
}

impl ModelSpace {
    /// Build from (α, symbol names) pairs in ascending sector order.
    /// The first sector must be α = 0 with a single unit symbol.
    pub fn new(gamma: Hom, sector_symbols: Vec<(Hom, Vec<String>)>) -> Result<Self> {
        let homs: Vec<Hom> = sector_symbols.iter().map(|(a, _)| *a).collect();
        let homset = HomogeneitySet::new(homs, gamma)?;
        match sector_symbols.first() {
            Some((a, names)) if a.is_zero() && names.len() == 1 => {}
            _ => {
                return Err(Error::InvalidStructure(
                    "sector 0 must come first and be spanned by a single unit symbol".into(),
                ))
            }
        }
        let mut sectors = Vec::with_capacity(sector_symbols.len());
        let mut symbols = Vec::new();
        for (si, (alpha, names)) in sector_symbols.into_iter().enumerate() {
            if names.is_empty() {
                return Err(Error::InvalidStructure(format!("sector {alpha} has no symbols")));
            }
            let start = symbols.len();
            for name in names {
                if symbols.iter().any(|s: &SymbolInfo| s.name == name) {
                    return Err(Error::InvalidStructure(format!("duplicate symbol {name}")));
                }
                symbols.push(SymbolInfo { name, sector: si });
            }
            sectors.push(Sector { alpha, start, len: symbols.len() - start });
        }
        Ok(Self { homs: homset, sectors, symbols })
    }

    pub fn homogeneities(&self) -> &HomogeneitySet {
        &self.homs
    }

    pub fn gamma(&self) -> Hom {
        self.homs.gamma()
    }

    pub fn dim(&self) -> usize {
        self.symbols.len()
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn sector(&self, i: usize) -> &Sector {
        &self.sectors[i]
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn symbols(&self) -> &[SymbolInfo] {
        &self.symbols
    }

    pub fn symbol_name(&self, i: usize) -> &str {
        &self.symbols[i].name
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }

    pub fn sector_of_symbol(&self, i: usize) -> usize {
        self.symbols[i].sector
    }

    pub fn alpha(&self, sector: usize) -> Hom {
        self.sectors[sector].alpha
    }

    pub fn alpha_f64(&self, sector: usize) -> f64 {
        hom_to_f64(self.sectors[sector].alpha)
    }

    pub fn sector_index_of(&self, alpha: Hom) -> Option<usize> {
        self.sectors.iter().position(|s| s.alpha == alpha)
    }

    /// Global index of the unit symbol spanning sector 0.
    pub fn unit_index(&self) -> usize {
        self.sectors[0].start
    }

    /// ℓ¹ norm of the coefficients of `tau` belonging to the sector at `alpha`.
    pub fn sector_norm(&self, tau: &[f64], alpha: Hom) -> Result<f64> {
        assert_eq!(tau.len(), self.dim(), "coefficient vector length mismatch");
        let si = self
            .sector_index_of(alpha)
            .ok_or_else(|| Error::UnknownSector(format!("{alpha}")))?;
        Ok(self.sectors[si].range().map(|i| tau[i].abs()).sum())
    }

    /// ℓ¹ norm over a sector given by index.
    pub fn sector_norm_by_index(&self, tau: &[f64], sector: usize) -> f64 {
        self.sectors[sector].range().map(|i| tau[i].abs()).sum()
    }

    /// Projection of `tau` to the sector at index `sector` (coefficients only).
    pub fn project(&self, tau: &[f64], sector: usize) -> Vec<f64> {
        self.sectors[sector].range().map(|i| tau[i]).collect()
    }
}

/// A single contraction map Γ on a model space, stored as a dense matrix in
/// the global symbol basis: `mat[target * dim + source]`.
///
/// Construction enforces triangularity exactly: for a source symbol in the
/// sector at α, entries targeting sectors above α must be 0.0 and the block
/// at α itself must be the identity. Anything below α is unconstrained.
#[derive(Clone, Debug)]
pub struct StructureElement {
    dim: usize,
    mat: Vec<f64>,
}

impl StructureElement {
    pub fn new(space: &ModelSpace, mat: Vec<f64>) -> Result<Self> {
        let dim = space.dim();
        if mat.len() != dim * dim {
            return Err(Error::InvalidStructure(format!(
                "matrix must be {dim}x{dim}, got {} entries",
                mat.len()
            )));
        }
        for src in 0..dim {
            let ssec = space.sector_of_symbol(src);
            for tgt in 0..dim {
                let tsec = space.sector_of_symbol(tgt);
                let v = mat[tgt * dim + src];
                if tsec > ssec && v != 0.0 {
                    return Err(Error::InvalidStructure(format!(
                        "entry {} -> {} raises the sector (value {v})",
                        space.symbol_name(src),
                        space.symbol_name(tgt)
                    )));
                }
                if tsec == ssec {
                    let want = if tgt == src { 1.0 } else { 0.0 };
                    if v != want {
                        return Err(Error::InvalidStructure(format!(
                            "diagonal sector block must be the identity: entry {} -> {} is {v}",
                            space.symbol_name(src),
                            space.symbol_name(tgt)
                        )));
                    }
                }
            }
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(space: &ModelSpace) -> Self {
        let dim = space.dim();
        let mut mat = vec![0.0; dim * dim];
        for i in 0..dim {
            mat[i * dim + i] = 1.0;
        }
        Self { dim, mat }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, target: usize, source: usize) -> f64 {
        self.mat[target * self.dim + source]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.mat
    }

    /// Γτ in the global symbol basis.
    pub fn apply(&self, tau: &[f64]) -> Vec<f64> {
        assert_eq!(tau.len(), self.dim, "coefficient vector length mismatch");
        let mut out = vec![0.0; self.dim];
        for (tgt, o) in out.iter_mut().enumerate() {
            let row = &self.mat[tgt * self.dim..(tgt + 1) * self.dim];
            *o = row.iter().zip(tau).map(|(m, t)| m * t).sum();
        }
        out
    }

    /// self ∘ other. Triangularity is closed under composition; the identity
    /// diagonal blocks multiply back to the identity exactly.
    pub fn compose(&self, other: &StructureElement) -> StructureElement {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut mat = vec![0.0; d * d];
        for t in 0..d {
            for s in 0..d {
                let mut acc = 0.0;
                for m in 0..d {
                    acc += self.mat[t * d + m] * other.mat[m * d + s];
                }
                mat[t * d + s] = acc;
            }
        }
        StructureElement { dim: d, mat }
    }

    /// Max |entry| difference, for defect measurements.
    pub fn max_abs_diff(&self, other: &StructureElement) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.mat
            .iter()
            .zip(&other.mat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_space_15() -> ModelSpace {
        // symbols 1, X^(0,1), X^(1,0) at homogeneities 0 and 1, level 1.5
        ModelSpace::new(
            hom(3, 2),
            vec![
                (hom(0, 1), vec!["1".into()]),
                (hom(1, 1), vec!["X^(0,1)".into(), "X^(1,0)".into()]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn homogeneity_set_validation() {
        assert!(HomogeneitySet::new(vec![hom(0, 1), hom(3, 4), hom(1, 1)], hom(6, 5)).is_ok());
        // gamma on A + N
        assert!(HomogeneitySet::new(vec![hom(0, 1), hom(3, 4)], hom(7, 4)).is_err());
        assert!(HomogeneitySet::new(vec![hom(0, 1)], hom(2, 1)).is_err());
        // missing 0
        assert!(HomogeneitySet::new(vec![hom(1, 2)], hom(3, 4)).is_err());
        // not ascending
        assert!(HomogeneitySet::new(vec![hom(1, 2), hom(0, 1)], hom(3, 4)).is_err());
        // sector at/above gamma
        assert!(HomogeneitySet::new(vec![hom(0, 1), hom(1, 1)], hom(1, 2)).is_err());
    }

    #[test]
    fn shifted_lattice_membership() {
        let homs = [hom(0, 1), hom(3, 4), hom(1, 1)];
        assert!(in_shifted_lattice(hom(2, 1), &homs));
        assert!(in_shifted_lattice(hom(7, 4), &homs));
        assert!(!in_shifted_lattice(hom(6, 5), &homs));
        assert!(!in_shifted_lattice(hom(1, 2), &homs));
    }

    #[test]
    fn sector_norm_is_per_sector_l1() {
        let sp = poly_space_15();
        let tau = vec![2.0, 0.0, 0.0];
        assert_eq!(sp.sector_norm(&tau, hom(0, 1)).unwrap(), 2.0);
        let tau = vec![0.5, -1.0, 2.0];
        assert_eq!(sp.sector_norm(&tau, hom(1, 1)).unwrap(), 3.0);
        assert!(sp.sector_norm(&tau, hom(1, 2)).is_err());
    }

    #[test]
    fn unit_sector_is_one_dimensional() {
        let err = ModelSpace::new(
            hom(3, 2),
            vec![(hom(0, 1), vec!["1".into(), "extra".into()])],
        );
        assert!(err.is_err());
        let err = ModelSpace::new(hom(3, 2), vec![(hom(1, 2), vec!["a".into()])]);
        assert!(err.is_err());
    }

    /// Translation by h on the degree-<1.5 polynomial sector:
    /// X^k ↦ X^k + h^k 1 for the two first-order symbols.
    fn translation(space: &ModelSpace, h: [f64; 2]) -> StructureElement {
        let d = space.dim();
        let mut mat = vec![0.0; d * d];
        for i in 0..d {
            mat[i * d + i] = 1.0;
        }
        // unit symbol is index 0; X^(0,1) index 1 picks h_2, X^(1,0) index 2 picks h_1
        mat[1] = h[1];
        mat[2] = h[0];
        StructureElement::new(space, mat).unwrap()
    }

    #[test]
    fn apply_translation_to_first_order_symbol() {
        let sp = poly_space_15();
        let g = translation(&sp, [0.25, -0.5]);
        // tau = X^(1,0)
        let tau = vec![0.0, 0.0, 1.0];
        let out = g.apply(&tau);
        assert_eq!(out, vec![0.25, 0.0, 1.0]);
        // identity fixes everything
        let id = StructureElement::identity(&sp);
        assert_eq!(id.apply(&tau), tau);
    }

    #[test]
    fn raising_entries_are_rejected() {
        let sp = poly_space_15();
        let d = sp.dim();
        let mut mat = vec![0.0; d * d];
        for i in 0..d {
            mat[i * d + i] = 1.0;
        }
        mat[1 * d + 0] = 0.3; // unit -> X^(0,1), raises sector
        assert!(StructureElement::new(&sp, mat).is_err());

        let mut mat2 = vec![0.0; d * d];
        for i in 0..d {
            mat2[i * d + i] = 1.0;
        }
        mat2[2 * d + 1] = 0.7; // X^(0,1) -> X^(1,0), same sector off-diagonal
        assert!(StructureElement::new(&sp, mat2).is_err());
    }

    #[test]
    fn composition_stays_triangular_and_adds_translations() {
        let sp = poly_space_15();
        let a = translation(&sp, [0.25, -0.5]);
        let b = translation(&sp, [0.5, 0.125]);
        let ab = a.compose(&b);
        // still passes the construction check
        let checked = StructureElement::new(&sp, ab.matrix().to_vec()).unwrap();
        let expect = translation(&sp, [0.75, -0.375]);
        assert!(checked.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn pam_style_lowering() {
        // symbols 1, I at homogeneities 0, 3/4; Γ I = I + c 1
        let sp = ModelSpace::new(
            hom(6, 5),
            vec![
                (hom(0, 1), vec!["1".into()]),
                (hom(3, 4), vec!["I".into()]),
            ],
        )
        .unwrap();
        let c = 1.37;
        let mat = vec![1.0, c, 0.0, 1.0];
        let g = StructureElement::new(&sp, mat).unwrap();
        let out = g.apply(&[0.0, 1.0]);
        assert_eq!(out, vec![c, 1.0]);
    }
}
