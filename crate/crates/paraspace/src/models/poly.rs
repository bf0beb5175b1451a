//! The polynomial model: monomial symbols below a level, binomial
//! transport, and the canonical lift of a smooth field.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grading::{hom_to_f64, index_set_below, Hom, MultiIndex, ScalingVector};
use crate::grading::ModelSpace;
use crate::lpanalysis::GridField;
use crate::models::instance::{GammaEvaluator, ModelInstance, SymbolTag};
use crate::models::kernel::{KernelEntry, KernelFactor, KernelTerm, SeparableKernel};
use crate::models::modelled::ModelledField;

pub(crate) fn monomial_name(k: &MultiIndex) -> String {
    if k.is_zero() {
        "1".to_string()
    } else {
        let body: Vec<String> = k.as_slice().iter().map(|v| v.to_string()).collect();
        format!("X^({})", body.join(","))
    }
}

/// All monomial symbols of scaled weight below `gamma`, with binomial
/// transport stored both in closed form and as polynomial kernel terms.
pub fn poly_model(s: &ScalingVector, gamma: Hom) -> Result<ModelInstance> {
    let gf = hom_to_f64(gamma);
    if gf <= 0.0 {
        return Err(Error::InvalidGamma(format!("positive level required, got {gamma}")));
    }
    let indices = index_set_below(gf, s);
    let mut by_weight: BTreeMap<u64, Vec<MultiIndex>> = BTreeMap::new();
    for k in indices {
        by_weight.entry(k.weight(s)).or_default().push(k);
    }
    let mut sector_symbols = Vec::new();
    let mut tags = Vec::new();
    let mut flat = Vec::new();
    for (w, ks) in &by_weight {
        let names = ks.iter().map(monomial_name).collect();
        sector_symbols.push((Hom::from(*w as i64), names));
        for k in ks {
            tags.push(if k.is_zero() { SymbolTag::Unit } else { SymbolTag::Poly(k.clone()) });
            flat.push(k.clone());
        }
    }
    let space = ModelSpace::new(gamma, sector_symbols)?;
    let mut kernel = SeparableKernel::new();
    for (src, k) in flat.iter().enumerate() {
        for (tgt, l) in flat.iter().enumerate() {
            let Some(rem) = k.checked_sub(l) else { continue };
            if rem.is_zero() {
                continue;
            }
            kernel.entries.push(KernelEntry {
                source: src,
                target: tgt,
                terms: vec![KernelTerm::Poly {
                    coeff: k.binomial(l),
                    monomial: rem,
                    u_factor: KernelFactor::One,
                }],
            });
        }
    }
    ModelInstance::new("poly", space, s.clone(), tags, kernel, GammaEvaluator::Polynomial, None)
}

/// The canonical lift: channel k holds the k-th derivative over k
/// factorial, so transported coefficients reproduce Taylor transport.
pub fn poly_lift(f: &GridField, model: &ModelInstance) -> Result<ModelledField> {
    if f.channels() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "the canonical lift takes a scalar field, got {} channels",
            f.channels()
        )));
    }
    if f.spec().scaling() != model.scaling() {
        return Err(Error::SpecMismatch(
            "field scaling differs from the model scaling".into(),
        ));
    }
    let mut components = Vec::with_capacity(model.space().dim());
    for tag in model.tags() {
        let component = match tag {
            SymbolTag::Unit => f.clone(),
            SymbolTag::Poly(k) => f.derivative(k).scale(1.0 / k.factorial()),
            _ => {
                return Err(Error::InvalidStructure(
                    "the canonical lift is defined for monomial models only".into(),
                ))
            }
        };
        components.push(component);
    }
    ModelledField::from_components(model.space().clone(), &components)
}
