//! The heat-paracontrolled model family: a unit symbol, a mollified
//! primitive of the noise, and the first-order monomials, with transport
//! that lowers the primitive by its own increments.

use crate::error::{Error, Result};
use crate::grading::{hom, Hom, MultiIndex, ScalingVector};
use crate::grading::ModelSpace;
use crate::lpanalysis::{DyadicPartition, GridField};
use crate::models::instance::{GammaEvaluator, ModelInstance, SymbolTag};
use crate::models::kernel::{KernelEntry, KernelFactor, KernelTerm, SeparableKernel};
use crate::models::modelled::ModelledField;
use crate::models::poly::monomial_name;
use crate::paraproducts::bony::bony_para;

/// Build the model over symbols {1, I(Xi), X^(e_a)} with the primitive at
/// homogeneity `alpha_i` and level `gamma` strictly between 1 and
/// 1 + alpha_i. `ixi` is the realized primitive on the working grid.
pub fn pam_model(
    s: &ScalingVector,
    alpha_i: Hom,
    gamma: Hom,
    ixi: &GridField,
) -> Result<ModelInstance> {
    let zero = hom(0, 1);
    let one = hom(1, 1);
    if !(alpha_i > zero && alpha_i < one) {
        return Err(Error::InvalidStructure(format!(
            "primitive homogeneity must sit in (0, 1), got {alpha_i}"
        )));
    }
    if !(gamma > one && gamma < one + alpha_i) {
        return Err(Error::InvalidGamma(format!(
            "level must sit in (1, 1 + {alpha_i}), got {gamma}"
        )));
    }
    if ixi.channels() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "the realized primitive must be scalar, got {} channels",
            ixi.channels()
        )));
    }
    if ixi.spec().scaling() != s {
        return Err(Error::SpecMismatch(
            "primitive field scaling differs from the model scaling".into(),
        ));
    }
    let d = s.dim();
    let axes: Vec<usize> = (0..d).filter(|&a| s.as_slice()[a] == 1).collect();
    if axes.is_empty() {
        return Err(Error::InvalidStructure(
            "no axis of scaling exponent 1: the weight-1 sector is empty".into(),
        ));
    }
    let x_names: Vec<String> =
        axes.iter().map(|&a| monomial_name(&MultiIndex::unit(d, a))).collect();
    let space = ModelSpace::new(
        gamma,
        vec![
            (zero, vec!["1".to_string()]),
            (alpha_i, vec!["I(Xi)".to_string()]),
            (one, x_names),
        ],
    )?;
    let mut tags = vec![SymbolTag::Unit, SymbolTag::Integral];
    for &a in &axes {
        tags.push(SymbolTag::Poly(MultiIndex::unit(d, a)));
    }
    let mut kernel = SeparableKernel::new();
    let ixi_idx = kernel.add_field("ixi", ixi.clone());
    let unit = space.unit_index();
    let primitive = space.symbol_index("I(Xi)").expect("primitive symbol present");
    kernel.entries.push(KernelEntry {
        source: primitive,
        target: unit,
        terms: vec![
            KernelTerm::Sep { coeff: 1.0, a: KernelFactor::One, c: ixi_idx },
            KernelTerm::Poly {
                coeff: -1.0,
                monomial: MultiIndex::zero(d),
                u_factor: KernelFactor::Field(ixi_idx),
            },
        ],
    });
    for (i, &a) in axes.iter().enumerate() {
        kernel.entries.push(KernelEntry {
            source: primitive + 1 + i,
            target: unit,
            terms: vec![KernelTerm::Poly {
                coeff: 1.0,
                monomial: MultiIndex::unit(d, a),
                u_factor: KernelFactor::One,
            }],
        });
    }
    ModelInstance::new(
        "pam",
        space,
        s.clone(),
        tags,
        kernel,
        GammaEvaluator::Pam { ixi: ixi_idx },
        Some(ixi.spec().clone()),
    )
}

/// The paracontrolled lift determined by a slope field g and a remainder w:
/// the primitive channel is g, the unit channel is the low-high paraproduct
/// of (g, primitive) plus w, and the monomial channels are the matching
/// derivative corrections. The partition must live on the model grid so
/// that every scale decomposition is shared.
pub fn pam_modelled(
    g: &GridField,
    w: &GridField,
    model: &ModelInstance,
    partition: &DyadicPartition,
) -> Result<ModelledField> {
    let GammaEvaluator::Pam { ixi } = model.evaluator() else {
        return Err(Error::InvalidStructure(
            "paracontrolled lift needs a primitive-lowering model".into(),
        ));
    };
    let ixi = model.kernel().field(*ixi);
    let grid = model.grid().expect("primitive-lowering models carry a grid");
    grid.same_as(g.spec())?;
    grid.same_as(w.spec())?;
    grid.same_as(partition.spec())?;
    if g.channels() != 1 || w.channels() != 1 {
        return Err(Error::DimensionMismatch(
            "slope and remainder fields must be scalar".into(),
        ));
    }
    let f1 = bony_para(g, ixi, partition)?.add(w)?;
    let mut components = Vec::with_capacity(model.space().dim());
    for tag in model.tags() {
        components.push(match tag {
            SymbolTag::Unit => f1.clone(),
            SymbolTag::Integral => g.clone(),
            SymbolTag::Poly(k) => f1
                .derivative(k)
                .sub(&g.mul_pointwise(&ixi.derivative(k))?)?
                .scale(1.0 / k.factorial()),
            SymbolTag::Other(name) => {
                return Err(Error::InvalidStructure(format!(
                    "paracontrolled lift cannot fill the '{name}' channel"
                )))
            }
        });
    }
    ModelledField::from_components(model.space().clone(), &components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::StructureElement;
    use crate::lpanalysis::GridSpec;
    use crate::sampling::PairSampler;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::TAU;

    fn setup() -> (GridSpec, ModelInstance) {
        let s = ScalingVector::isotropic(2);
        let spec = GridSpec::new(vec![32, 32], s.clone()).unwrap();
        let ixi = GridField::from_fn(spec.clone(), |x| {
            (TAU * x[0]).sin() + 0.4 * (TAU * (2.0 * x[0] + 3.0 * x[1])).cos()
        });
        let model = pam_model(&s, hom(3, 4), hom(6, 5), &ixi).unwrap();
        (spec, model)
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let s = ScalingVector::isotropic(2);
        let spec = GridSpec::new(vec![16, 16], s.clone()).unwrap();
        let ixi = GridField::constant(spec, 0.0);
        assert!(pam_model(&s, hom(3, 2), hom(6, 5), &ixi).is_err());
        assert!(pam_model(&s, hom(3, 4), hom(9, 5), &ixi).is_err());
        assert!(pam_model(&s, hom(3, 4), hom(1, 1), &ixi).is_err());
    }

    #[test]
    fn transport_lowers_the_primitive_by_its_increment() {
        let (spec, model) = setup();
        let ixi = model.named_field("ixi").unwrap().clone();
        let x = spec.flat_from_indices(&[3, 28]);
        let y = spec.flat_from_indices(&[30, 2]);
        let g = model.gamma_element(&spec, y, x).unwrap();
        let unit = model.space().unit_index();
        let primitive = model.space().symbol_index("I(Xi)").unwrap();
        assert_abs_diff_eq!(
            g.entry(unit, primitive),
            ixi.value(0, y) - ixi.value(0, x),
            epsilon = 1e-14
        );
        // kernel evaluation agrees with the closed form
        let via_kernel = model.kernel().gamma_element(model.space(), &spec, y, x).unwrap();
        assert_abs_diff_eq!(g.max_abs_diff(&via_kernel), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn transport_composes_exactly_on_clustered_triples() {
        let (spec, model) = setup();
        let sampler = PairSampler::with_seed(7);
        for (x, y, z) in sampler.triples(&spec, 50, 0.125) {
            let a = model.gamma_element(&spec, x, y).unwrap();
            let b = model.gamma_element(&spec, y, z).unwrap();
            let c = model.gamma_element(&spec, x, z).unwrap();
            assert!(a.compose(&b).max_abs_diff(&c) <= 1e-13);
        }
    }

    #[test]
    fn identity_at_equal_basepoints() {
        let (spec, model) = setup();
        let g = model.gamma_element(&spec, 77, 77).unwrap();
        assert_abs_diff_eq!(
            g.max_abs_diff(&StructureElement::identity(model.space())),
            0.0,
            epsilon = 0.0
        );
    }
}
