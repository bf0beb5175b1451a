//! Two-point transition kernels in separated form.
//!
//! Every strictly-lower entry of a transition matrix is stored as a sum of
//! terms of two shapes: a polynomial term `coeff * w(u) * (v-u)^p` whose
//! dependence on v is a wrapped monomial around u, and a separated term
//! `coeff * a(u) * c(v)` whose factors live on opposite basepoints. Block
//! convolutions annihilate wrapped polynomials of subcritical weight, so the
//! separated terms are exactly the part a paraproduct sees.

use crate::error::{Error, Result};
use crate::grading::{wrap_displacement, ModelSpace, MultiIndex, StructureElement};
use crate::lpanalysis::{GridField, GridSpec};

/// A scalar factor attached to one basepoint.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelFactor {
    One,
    /// Index into the kernel's named field table.
    Field(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelTerm {
    /// coeff * u_factor(u) * (v - u)^monomial, displacement wrapped to the
    /// nearest representative.
    Poly {
        coeff: f64,
        monomial: MultiIndex,
        u_factor: KernelFactor,
    },
    /// coeff * a(u) * c(v) with c a stored field.
    Sep {
        coeff: f64,
        a: KernelFactor,
        c: usize,
    },
}

#[derive(Clone, Debug)]
pub struct KernelEntry {
    pub source: usize,
    pub target: usize,
    pub terms: Vec<KernelTerm>,
}

/// The strictly-lower part of a transition-matrix family, plus the field
/// table its factors refer to. The diagonal is always the identity.
#[derive(Clone, Debug, Default)]
pub struct SeparableKernel {
    pub entries: Vec<KernelEntry>,
    fields: Vec<(String, GridField)>,
}

impl SeparableKernel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_field(&mut self, name: &str, field: GridField) -> usize {
        self.fields.push((name.to_string(), field));
        self.fields.len() - 1
    }

    pub fn field(&self, i: usize) -> &GridField {
        &self.fields[i].1
    }

    pub fn field_name(&self, i: usize) -> &str {
        &self.fields[i].0
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(n, _)| n == name)
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }

    pub fn validate(&self, space: &ModelSpace) -> Result<()> {
        for (name, f) in &self.fields {
            if f.channels() != 1 {
                return Err(Error::InvalidStructure(format!(
                    "kernel field '{name}' must be scalar, has {} channels",
                    f.channels()
                )));
            }
        }
        let check_factor = |f: &KernelFactor| -> Result<()> {
            if let KernelFactor::Field(i) = f {
                if *i >= self.fields.len() {
                    return Err(Error::InvalidStructure(format!(
                        "kernel factor references field {i} of {}",
                        self.fields.len()
                    )));
                }
            }
            Ok(())
        };
        for entry in &self.entries {
            if entry.source >= space.dim() || entry.target >= space.dim() {
                return Err(Error::InvalidStructure(format!(
                    "kernel entry ({}, {}) out of range for {} symbols",
                    entry.target,
                    entry.source,
                    space.dim()
                )));
            }
            if space.sector_of_symbol(entry.target) >= space.sector_of_symbol(entry.source) {
                return Err(Error::InvalidStructure(format!(
                    "kernel entry {} -> {} does not lower the sector",
                    space.symbol_name(entry.source),
                    space.symbol_name(entry.target)
                )));
            }
            for term in &entry.terms {
                match term {
                    KernelTerm::Poly { u_factor, .. } => check_factor(u_factor)?,
                    KernelTerm::Sep { a, c, .. } => {
                        check_factor(a)?;
                        if *c >= self.fields.len() {
                            return Err(Error::InvalidStructure(format!(
                                "separated factor references field {c} of {}",
                                self.fields.len()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn factor_value(&self, factor: &KernelFactor, flat: usize) -> f64 {
        match factor {
            KernelFactor::One => 1.0,
            KernelFactor::Field(i) => self.fields[*i].1.value(0, flat),
        }
    }

    /// The matrix entry carried by one kernel entry at basepoints (v, u).
    pub fn entry_value(&self, spec: &GridSpec, entry: &KernelEntry, v: usize, u: usize) -> f64 {
        let pv = spec.point(v);
        let pu = spec.point(u);
        let diff: Vec<f64> = pv.iter().zip(&pu).map(|(a, b)| a - b).collect();
        let h = wrap_displacement(&diff, 1.0);
        entry
            .terms
            .iter()
            .map(|term| match term {
                KernelTerm::Poly { coeff, monomial, u_factor } => {
                    coeff * self.factor_value(u_factor, u) * monomial.monomial(&h)
                }
                KernelTerm::Sep { coeff, a, c } => {
                    coeff * self.factor_value(a, u) * self.fields[*c].1.value(0, v)
                }
            })
            .sum()
    }

    /// Assemble the full transition matrix at basepoints (v, u).
    pub fn gamma_element(
        &self,
        space: &ModelSpace,
        spec: &GridSpec,
        v: usize,
        u: usize,
    ) -> Result<StructureElement> {
        let dim = space.dim();
        let mut mat = vec![0.0; dim * dim];
        for i in 0..dim {
            mat[i * dim + i] = 1.0;
        }
        for entry in &self.entries {
            mat[entry.target * dim + entry.source] += self.entry_value(spec, entry, v, u);
        }
        StructureElement::new(space, mat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::{hom, ScalingVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn tiny_space() -> ModelSpace {
        ModelSpace::new(
            hom(6, 5),
            vec![
                (hom(0, 1), vec!["1".into()]),
                (hom(3, 4), vec!["J".into()]),
                (hom(1, 1), vec!["X^(1,0)".into(), "X^(0,1)".into()]),
            ],
        )
        .unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec::new(vec![16, 16], ScalingVector::isotropic(2)).unwrap()
    }

    #[test]
    fn polynomial_terms_wrap_their_displacement() {
        let space = tiny_space();
        let spec = grid();
        let mut kernel = SeparableKernel::new();
        kernel.entries.push(KernelEntry {
            source: 2,
            target: 0,
            terms: vec![KernelTerm::Poly {
                coeff: 1.0,
                monomial: MultiIndex::unit(2, 0),
                u_factor: KernelFactor::One,
            }],
        });
        kernel.validate(&space).unwrap();
        // u at x0 = 15/16, v at x0 = 1/16: wrapped difference is 2/16
        let u = spec.flat_from_indices(&[15, 0]);
        let v = spec.flat_from_indices(&[1, 0]);
        let g = kernel.gamma_element(&space, &spec, v, u).unwrap();
        assert_abs_diff_eq!(g.entry(0, 2), 2.0 / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.entry(0, 0), 1.0, epsilon = 0.0);
        assert_abs_diff_eq!(g.entry(0, 1), 0.0, epsilon = 0.0);
    }

    #[test]
    fn separated_terms_take_factors_at_opposite_basepoints() {
        let space = tiny_space();
        let spec = grid();
        let mut kernel = SeparableKernel::new();
        let f = GridField::from_fn(spec.clone(), |x| (TAU * x[0]).cos());
        let idx = kernel.add_field("osc", f.clone());
        kernel.entries.push(KernelEntry {
            source: 1,
            target: 0,
            terms: vec![
                KernelTerm::Sep { coeff: 1.0, a: KernelFactor::One, c: idx },
                KernelTerm::Poly {
                    coeff: -1.0,
                    monomial: MultiIndex::zero(2),
                    u_factor: KernelFactor::Field(idx),
                },
            ],
        });
        kernel.validate(&space).unwrap();
        let u = spec.flat_from_indices(&[3, 7]);
        let v = spec.flat_from_indices(&[9, 2]);
        let g = kernel.gamma_element(&space, &spec, v, u).unwrap();
        assert_abs_diff_eq!(g.entry(0, 1), f.value(0, v) - f.value(0, u), epsilon = 1e-15);
        // at equal basepoints the whole matrix is the identity
        let id = kernel.gamma_element(&space, &spec, u, u).unwrap();
        assert_abs_diff_eq!(
            id.max_abs_diff(&StructureElement::identity(&space)),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn sector_raising_entries_are_rejected() {
        let space = tiny_space();
        let mut kernel = SeparableKernel::new();
        kernel.entries.push(KernelEntry { source: 0, target: 1, terms: vec![] });
        assert!(kernel.validate(&space).is_err());
    }
}
