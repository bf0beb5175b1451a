//! A concrete model: graded symbol space, transition structure, and the
//! grid realization everything is evaluated on.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grading::{
    wrap_displacement, Hom, ModelSpace, MultiIndex, ScalingVector, StructureElement,
};
use crate::lpanalysis::{GridField, GridSpec};
use crate::models::kernel::SeparableKernel;

/// What a symbol means when realized on functions.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolTag {
    Unit,
    Poly(MultiIndex),
    /// A mollified primitive of the driving noise.
    Integral,
    Other(String),
}

/// How transition matrices are produced.
#[derive(Clone, Debug)]
pub enum GammaEvaluator {
    /// Closed-form binomial transport between monomial symbols.
    Polynomial,
    /// Binomial transport plus lowering of the primitive symbol by the
    /// increment of the stored field (index into the kernel field table).
    Pam { ixi: usize },
    /// Evaluate the separable kernel entries directly.
    Kernel,
}

pub struct ModelInstance {
    name: String,
    space: ModelSpace,
    scaling: ScalingVector,
    tags: Vec<SymbolTag>,
    kernel: SeparableKernel,
    evaluator: GammaEvaluator,
    grid: Option<GridSpec>,
    gamma_bound: OnceLock<f64>,
}

fn tag_monomial(tag: &SymbolTag, d: usize) -> Option<MultiIndex> {
    match tag {
        SymbolTag::Unit => Some(MultiIndex::zero(d)),
        SymbolTag::Poly(k) => Some(k.clone()),
        _ => None,
    }
}

impl ModelInstance {
    pub fn new(
        name: &str,
        space: ModelSpace,
        scaling: ScalingVector,
        tags: Vec<SymbolTag>,
        kernel: SeparableKernel,
        evaluator: GammaEvaluator,
        grid: Option<GridSpec>,
    ) -> Result<Self> {
        if tags.len() != space.dim() {
            return Err(Error::InvalidStructure(format!(
                "{} tags for {} symbols",
                tags.len(),
                space.dim()
            )));
        }
        if tags[space.unit_index()] != SymbolTag::Unit {
            return Err(Error::InvalidStructure(
                "the lowest symbol must carry the unit tag".into(),
            ));
        }
        for (i, tag) in tags.iter().enumerate() {
            match tag {
                SymbolTag::Poly(k) => {
                    if k.dim() != scaling.dim() {
                        return Err(Error::InvalidStructure(format!(
                            "monomial tag on '{}' has dimension {}",
                            space.symbol_name(i),
                            k.dim()
                        )));
                    }
                    let alpha = space.alpha(space.sector_of_symbol(i));
                    if Hom::from(k.weight(&scaling) as i64) != alpha {
                        return Err(Error::InvalidStructure(format!(
                            "monomial tag on '{}' has weight {} in a sector of homogeneity {}",
                            space.symbol_name(i),
                            k.weight(&scaling),
                            alpha
                        )));
                    }
                }
                SymbolTag::Unit if i != space.unit_index() => {
                    return Err(Error::InvalidStructure(
                        "only the lowest symbol may carry the unit tag".into(),
                    ));
                }
                _ => {}
            }
        }
        kernel.validate(&space)?;
        if let GammaEvaluator::Pam { ixi } = evaluator {
            if ixi >= kernel.field_count() {
                return Err(Error::InvalidStructure(
                    "lowering field index out of range".into(),
                ));
            }
        }
        if let Some(g) = &grid {
            if g.scaling() != &scaling {
                return Err(Error::SpecMismatch(
                    "model grid scaling differs from the model scaling".into(),
                ));
            }
            for i in 0..kernel.field_count() {
                kernel.field(i).spec().same_as(g)?;
            }
        }
        Ok(Self {
            name: name.to_string(),
            space,
            scaling,
            tags,
            kernel,
            evaluator,
            grid,
            gamma_bound: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn scaling(&self) -> &ScalingVector {
        &self.scaling
    }

    pub fn tags(&self) -> &[SymbolTag] {
        &self.tags
    }

    pub fn kernel(&self) -> &SeparableKernel {
        &self.kernel
    }

    pub fn evaluator(&self) -> &GammaEvaluator {
        &self.evaluator
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn gamma(&self) -> Hom {
        self.space.gamma()
    }

    fn check_spec(&self, spec: &GridSpec) -> Result<()> {
        match &self.grid {
            Some(g) => g.same_as(spec),
            None if spec.scaling() == &self.scaling => Ok(()),
            None => Err(Error::SpecMismatch(
                "grid scaling differs from the model scaling".into(),
            )),
        }
    }

    fn displacement(&self, spec: &GridSpec, y: usize, x: usize) -> Vec<f64> {
        let py = spec.point(y);
        let px = spec.point(x);
        let diff: Vec<f64> = py.iter().zip(&px).map(|(a, b)| a - b).collect();
        wrap_displacement(&diff, 1.0)
    }

    fn fill_poly_block(&self, mat: &mut [f64], h: &[f64]) {
        let dim = self.space.dim();
        let d = self.scaling.dim();
        for (src, tag_s) in self.tags.iter().enumerate() {
            let Some(k) = tag_monomial(tag_s, d) else { continue };
            for (tgt, tag_t) in self.tags.iter().enumerate() {
                let Some(l) = tag_monomial(tag_t, d) else { continue };
                match k.checked_sub(&l) {
                    Some(rem) if !rem.is_zero() => {
                        mat[tgt * dim + src] += k.binomial(&l) * rem.monomial(h);
                    }
                    _ => {}
                }
            }
        }
    }

    /// The transition matrix carrying coefficients at basepoint x to
    /// basepoint y.
    pub fn gamma_element(&self, spec: &GridSpec, y: usize, x: usize) -> Result<StructureElement> {
        self.check_spec(spec)?;
        match &self.evaluator {
            GammaEvaluator::Kernel => self.kernel.gamma_element(&self.space, spec, y, x),
            GammaEvaluator::Polynomial => {
                let dim = self.space.dim();
                let mut mat = vec![0.0; dim * dim];
                for i in 0..dim {
                    mat[i * dim + i] = 1.0;
                }
                self.fill_poly_block(&mut mat, &self.displacement(spec, y, x));
                StructureElement::new(&self.space, mat)
            }
            GammaEvaluator::Pam { ixi } => {
                let dim = self.space.dim();
                let mut mat = vec![0.0; dim * dim];
                for i in 0..dim {
                    mat[i * dim + i] = 1.0;
                }
                self.fill_poly_block(&mut mat, &self.displacement(spec, y, x));
                let f = self.kernel.field(*ixi);
                let unit = self.space.unit_index();
                for (src, tag) in self.tags.iter().enumerate() {
                    if matches!(tag, SymbolTag::Integral) {
                        mat[unit * dim + src] += f.value(0, y) - f.value(0, x);
                    }
                }
                StructureElement::new(&self.space, mat)
            }
        }
    }

    /// The realization of one symbol, evaluated at y around basepoint x.
    /// Available for the closed-form structures; kernel-only models do not
    /// carry enough data to realize their primitive symbols pointwise.
    pub fn pi_value(&self, spec: &GridSpec, symbol: usize, x: usize, y: usize) -> Result<f64> {
        self.check_spec(spec)?;
        match &self.tags[symbol] {
            SymbolTag::Unit => Ok(1.0),
            SymbolTag::Poly(k) => Ok(k.monomial(&self.displacement(spec, y, x))),
            SymbolTag::Integral => match &self.evaluator {
                GammaEvaluator::Pam { ixi } => {
                    let f = self.kernel.field(*ixi);
                    Ok(f.value(0, y) - f.value(0, x))
                }
                _ => Err(Error::InvalidStructure(format!(
                    "no pointwise realization of '{}' in a kernel-only model",
                    self.space.symbol_name(symbol)
                ))),
            },
            SymbolTag::Other(name) => Err(Error::InvalidStructure(format!(
                "no pointwise realization of '{name}'"
            ))),
        }
    }

    /// The empirical transition bound recorded by the model check, if any.
    pub fn gamma_bound(&self) -> Option<f64> {
        self.gamma_bound.get().copied()
    }

    pub fn record_gamma_bound(&self, bound: f64) {
        let _ = self.gamma_bound.set(bound);
    }

    /// A stored field, looked up by name (used by realizations and reports).
    pub fn named_field(&self, name: &str) -> Option<&GridField> {
        self.kernel.field_index(name).map(|i| self.kernel.field(i))
    }
}

impl Clone for ModelInstance {
    fn clone(&self) -> Self {
        let bound = OnceLock::new();
        if let Some(b) = self.gamma_bound.get() {
            let _ = bound.set(*b);
        }
        Self {
            name: self.name.clone(),
            space: self.space.clone(),
            scaling: self.scaling.clone(),
            tags: self.tags.clone(),
            kernel: self.kernel.clone(),
            evaluator: self.evaluator.clone(),
            grid: self.grid.clone(),
            gamma_bound: bound,
        }
    }
}
