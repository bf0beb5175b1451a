//! Paraproducts driven by the separated part of a model kernel, and the
//! sharp remainders they leave behind.
//!
//! Block convolutions kill the wrapped-polynomial kernel terms of
//! subcritical weight, so only the separated terms contribute: for each
//! kernel entry e -> t with separated factors (a, c), the target channel t
//! receives  coeff * sum_j S_{j-1}(F^e a) D_j c.

use crate::error::{Error, Result};
use crate::grading::Hom;
use crate::lpanalysis::{DyadicPartition, GridField};
use crate::models::instance::ModelInstance;
use crate::models::kernel::{KernelFactor, KernelTerm};
use crate::models::modelled::ModelledField;
use crate::paraproducts::bony::{lowhigh_accumulate, ParaproductLog, ParaproductTerm};

fn structure_para_impl(
    field: &ModelledField,
    model: &ModelInstance,
    alpha: Hom,
    partition: &DyadicPartition,
    mut log: Option<&mut Vec<ParaproductTerm>>,
) -> Result<GridField> {
    let space = model.space();
    let spec = field.spec();
    partition.spec().same_as(spec)?;
    if let Some(grid) = model.grid() {
        grid.same_as(spec)?;
    }
    let sector = space
        .sector_index_of(alpha)
        .ok_or_else(|| Error::UnknownSector(format!("no sector of homogeneity {alpha}")))?;
    let range = space.sector(sector).range();
    let kernel = model.kernel();
    let mut channels: Vec<GridField> =
        range.clone().map(|_| GridField::zeros(spec.clone(), 1)).collect();
    for entry in &kernel.entries {
        if space.sector_of_symbol(entry.target) != sector {
            continue;
        }
        let local = entry.target - range.start;
        for term in &entry.terms {
            let KernelTerm::Sep { coeff, a, c } = term else {
                // wrapped polynomials of subcritical weight vanish under
                // every block convolution
                continue;
            };
            let source = field.component_field(entry.source);
            let left = match a {
                KernelFactor::One => source,
                KernelFactor::Field(i) => source.mul_pointwise(kernel.field(*i))?,
            };
            let label = format!(
                "{}->{} via {}",
                space.symbol_name(entry.source),
                space.symbol_name(entry.target),
                kernel.field_name(*c)
            );
            let sum =
                lowhigh_accumulate(&left, kernel.field(*c), partition, &label, log.as_deref_mut())?;
            let sum = if *coeff == 1.0 { sum } else { sum.scale(*coeff) };
            channels[local] = channels[local].add(&sum)?;
        }
    }
    GridField::stack(&channels)
}

/// The kernel-driven paraproduct feeding the sector of homogeneity `alpha`.
/// The output has one channel per symbol of that sector.
pub fn structure_para(
    field: &ModelledField,
    model: &ModelInstance,
    alpha: Hom,
    partition: &DyadicPartition,
) -> Result<GridField> {
    structure_para_impl(field, model, alpha, partition, None)
}

/// As `structure_para`, with the per-term log.
pub fn structure_para_logged(
    field: &ModelledField,
    model: &ModelInstance,
    alpha: Hom,
    partition: &DyadicPartition,
) -> Result<(GridField, ParaproductLog)> {
    let mut terms = Vec::new();
    let out = structure_para_impl(field, model, alpha, partition, Some(&mut terms))?;
    Ok((out, ParaproductLog { terms }))
}

/// Sector coefficients minus their kernel paraproduct, for every sector.
pub fn sharp_remainder(
    field: &ModelledField,
    model: &ModelInstance,
    partition: &DyadicPartition,
) -> Result<Vec<(Hom, GridField)>> {
    let space = model.space();
    let mut out = Vec::with_capacity(space.sector_count());
    for (i, sector) in space.sectors().iter().enumerate() {
        let para = structure_para(field, model, sector.alpha, partition)?;
        let own = field.sector_field(i);
        out.push((sector.alpha, own.sub(&para)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::{hom, ScalingVector};
    use crate::lpanalysis::GridSpec;
    use crate::models::pam::{pam_model, pam_modelled};
    use crate::models::synthetic::make_synthetic_field;
    use crate::paraproducts::bony::bony_para;

    fn setup() -> (GridSpec, DyadicPartition, ModelInstance) {
        let s = ScalingVector::isotropic(2);
        let spec = GridSpec::new(vec![64, 64], s.clone()).unwrap();
        let ixi = make_synthetic_field(&spec, 0.75, 21, 12.0).unwrap();
        let p = DyadicPartition::build(spec.clone()).unwrap();
        let model = pam_model(&s, hom(3, 4), hom(6, 5), &ixi).unwrap();
        (spec, p, model)
    }

    #[test]
    fn unit_sector_of_the_heat_model_reduces_to_the_low_high_paraproduct() {
        let (spec, p, model) = setup();
        let g = make_synthetic_field(&spec, 0.45, 4, 12.0).unwrap();
        let w = make_synthetic_field(&spec, 1.2, 5, 8.0).unwrap();
        let lift = pam_modelled(&g, &w, &model, &p).unwrap();
        let ixi = model.named_field("ixi").unwrap();
        let para = structure_para(&lift, &model, hom(0, 1), &p).unwrap();
        let direct = bony_para(&g, ixi, &p).unwrap();
        assert!(para.sub(&direct).unwrap().sup_norm() <= 1e-15 * (1.0 + direct.sup_norm()));
    }

    #[test]
    fn top_sector_receives_nothing() {
        let (spec, p, model) = setup();
        let g = make_synthetic_field(&spec, 0.45, 4, 12.0).unwrap();
        let w = make_synthetic_field(&spec, 1.2, 5, 8.0).unwrap();
        let lift = pam_modelled(&g, &w, &model, &p).unwrap();
        let para = structure_para(&lift, &model, hom(1, 1), &p).unwrap();
        assert_eq!(para.channels(), 2);
        assert_eq!(para.sup_norm(), 0.0);
    }

    #[test]
    fn unknown_sectors_are_rejected() {
        let (spec, p, model) = setup();
        let g = make_synthetic_field(&spec, 0.45, 4, 12.0).unwrap();
        let lift = pam_modelled(&g, &g, &model, &p).unwrap();
        assert!(matches!(
            structure_para(&lift, &model, hom(1, 2), &p),
            Err(Error::UnknownSector(_))
        ));
    }

    #[test]
    fn sharp_remainder_subtracts_the_paraproduct_sectorwise() {
        let (spec, p, model) = setup();
        let g = make_synthetic_field(&spec, 0.45, 4, 12.0).unwrap();
        let w = make_synthetic_field(&spec, 1.2, 5, 8.0).unwrap();
        let lift = pam_modelled(&g, &w, &model, &p).unwrap();
        let sharp = sharp_remainder(&lift, &model, &p).unwrap();
        assert_eq!(sharp.len(), 3);
        // unit sector: F^1 - paraproduct = w by construction of the lift
        let diff = sharp[0].1.sub(&w).unwrap();
        assert!(diff.sup_norm() <= 1e-13 * (1.0 + w.sup_norm()));
        // primitive sector: nothing above it maps into it separately except
        // through the kernel, which has no entries targeting it
        assert_eq!(sharp[1].1.sub(&g.clone()).unwrap().sup_norm(), 0.0);
    }
}
