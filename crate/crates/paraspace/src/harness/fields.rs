//! Deterministic field suites for a verification run. Everything is derived
//! from the run seed through fixed offsets, and the synthetic samplers fold
//! a fixed continuum series onto whatever grid is asked for, so the same
//! configuration describes the same fields on every grid size.

use crate::error::{Error, Result};
use crate::grading::hom_to_f64;
use crate::harness::config::{RunConfig, StructureChoice};
use crate::lpanalysis::{lp_low, DyadicPartition, GridField, GridSpec};
use crate::models::{
    make_synthetic_field, pam_model, pam_modelled, poly_model, synthetic_poly_lift,
    ModelInstance, ModelledField,
};

/// Roughness levels the scalar suite cycles through.
pub const SCALAR_ROUGHNESS: [f64; 3] = [0.3, 0.75, 1.2];

const SCALAR_SEED_BASE: u64 = 1_000;
const SLOPE_SEED_BASE: u64 = 2_000;
const REMAINDER_SEED_BASE: u64 = 3_000;
const LIFT_SEED_BASE: u64 = 4_000;
const OFFSET_SEED: u64 = 5_000;
const NOISE_SEED: u64 = 6_000;

/// A modelled field whose structure condition is deliberately violated,
/// together with the honest lift it was derived from.
pub struct BrokenField {
    pub label: String,
    /// true for corruptions supported above every low-pass window, whose
    /// residual curves stay exactly flat; false for one whose increments
    /// survive at small distance and make the pair ratios diverge instead
    pub stays_flat: bool,
    pub field: ModelledField,
}

/// All the inputs one grid's checks consume.
pub struct FieldSuite {
    pub spec: GridSpec,
    pub partition: DyadicPartition,
    /// (roughness, field), band-limited inside every configured grid
    pub scalars: Vec<(f64, GridField)>,
    pub model: ModelInstance,
    /// honest modelled fields of the configured structure
    pub families: Vec<ModelledField>,
    pub broken: Vec<BrokenField>,
}

pub fn grid_spec(config: &RunConfig, size: usize) -> Result<GridSpec> {
    let s = config.scaling_vector()?;
    GridSpec::new(vec![size; config.dimension], s)
}

/// The realized rough primitive shared by every grid of a run.
pub fn primitive_field(config: &RunConfig, spec: &GridSpec) -> Result<GridField> {
    let alpha = hom_to_f64(config.alpha_integral_hom());
    make_synthetic_field(spec, alpha, config.seed, config.deep_cutoff)
}

/// The model instance of the configured structure on one grid.
pub fn build_model(config: &RunConfig, spec: &GridSpec) -> Result<ModelInstance> {
    let s = config.scaling_vector()?;
    match config.structure {
        StructureChoice::Polynomial => poly_model(&s, config.gamma_hom()),
        StructureChoice::Pam => {
            let ixi = primitive_field(config, spec)?;
            pam_model(&s, config.alpha_integral_hom(), config.gamma_hom(), &ixi)
        }
    }
}

fn honest_family(
    config: &RunConfig,
    spec: &GridSpec,
    model: &ModelInstance,
    partition: &DyadicPartition,
) -> Result<Vec<ModelledField>> {
    let gamma = config.gamma_f64();
    let mut out = Vec::with_capacity(config.family_count);
    for i in 0..config.family_count as u64 {
        let lift = match config.structure {
            StructureChoice::Polynomial => synthetic_poly_lift(
                spec,
                model,
                gamma,
                config.seed + LIFT_SEED_BASE + i,
                config.deep_cutoff,
            )?,
            StructureChoice::Pam => {
                let alpha = hom_to_f64(config.alpha_integral_hom());
                let g = make_synthetic_field(
                    spec,
                    gamma - alpha,
                    config.seed + SLOPE_SEED_BASE + i,
                    config.deep_cutoff,
                )?;
                let w = make_synthetic_field(
                    spec,
                    gamma,
                    config.seed + REMAINDER_SEED_BASE + i,
                    config.deep_cutoff,
                )?;
                pam_modelled(&g, &w, model, partition)?
            }
        };
        out.push(lift);
    }
    Ok(out)
}

fn corrupt_unit(
    model: &ModelInstance,
    honest: &ModelledField,
    offset: &GridField,
) -> Result<ModelledField> {
    let unit = model.space().unit_index();
    let mut comps: Vec<GridField> =
        (0..model.space().dim()).map(|i| honest.component_field(i)).collect();
    comps[unit] = comps[unit].add(offset)?;
    ModelledField::from_components(model.space().clone(), &comps)
}

/// A cosine just under the Nyquist frequency of the first axis — above
/// every low-pass window the residual fit looks at, so the deviation keeps
/// the scale-independent point value and the fitted decay collapses.
pub fn beyond_window_ripple(spec: &GridSpec, amplitude: f64) -> GridField {
    let m = (spec.shape()[0] / 2 - 2) as f64;
    GridField::from_fn(spec.clone(), |x| {
        amplitude * (std::f64::consts::TAU * m * x[0]).cos()
    })
}

/// Deliberately broken lifts: the honest first family member with its unit
/// channel offset by (i) a beyond-window ripple, (ii) broadband noise
/// restricted to the band above the widest low-pass window, and (iii) a
/// synthetic field of negative roughness, whose increments refuse to
/// vanish at small distance.
fn broken_family(
    config: &RunConfig,
    spec: &GridSpec,
    partition: &DyadicPartition,
    model: &ModelInstance,
    honest: &ModelledField,
) -> Result<Vec<BrokenField>> {
    let ripple = beyond_window_ripple(spec, 35.0);
    // every low-pass up to the widest window annihilates this band, so the
    // residual a window leaves behind is the same at every scale
    let raw = make_synthetic_field(spec, -0.2, config.seed + NOISE_SEED, config.deep_cutoff)?;
    let band = raw.sub(&lp_low(&raw, partition.j_max(), partition)?)?;
    let band = band.scale(35.0 / band.sup_norm());
    // scaled up so the corruption dominates the honest tail at every
    // probed scale and distance
    let rough = make_synthetic_field(
        spec,
        -0.2,
        config.seed + OFFSET_SEED,
        config.deep_cutoff,
    )?
    .scale(10.0);
    Ok(vec![
        BrokenField {
            label: "beyond-window ripple".to_string(),
            stays_flat: true,
            field: corrupt_unit(model, honest, &ripple)?,
        },
        BrokenField {
            label: "top-band noise".to_string(),
            stays_flat: true,
            field: corrupt_unit(model, honest, &band)?,
        },
        BrokenField {
            label: "negative-roughness offset".to_string(),
            stays_flat: false,
            field: corrupt_unit(model, honest, &rough)?,
        },
    ])
}

/// Build the full suite for one grid size of the run.
pub fn generate_field_suite(config: &RunConfig, size: usize) -> Result<FieldSuite> {
    if !config.grid_sizes.contains(&size) {
        return Err(Error::InvalidConfig(format!(
            "grid size {size} is not part of this run"
        )));
    }
    let spec = grid_spec(config, size)?;
    let partition = DyadicPartition::build(spec.clone())?;
    let mut scalars = Vec::with_capacity(config.field_count * SCALAR_ROUGHNESS.len());
    for level in 0..SCALAR_ROUGHNESS.len() {
        for i in 0..config.field_count {
            let roughness = SCALAR_ROUGHNESS[level];
            let seed = config.seed
                + SCALAR_SEED_BASE
                + (level * config.field_count + i) as u64;
            scalars.push((
                roughness,
                make_synthetic_field(&spec, roughness, seed, config.scalar_cutoff)?,
            ));
        }
    }
    let model = build_model(config, &spec)?;
    let families = honest_family(config, &spec, &model, &partition)?;
    let broken = broken_family(config, &spec, &partition, &model, &families[0])?;
    Ok(FieldSuite { spec, partition, scalars, model, families, broken })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_config() -> RunConfig {
        let mut config = RunConfig::default_run();
        config.grid_sizes = vec![64, 128];
        config.family_count = 2;
        config.field_count = 1;
        config.deep_cutoff = 256.0;
        config.scalar_cutoff = 10.0;
        config.validate().unwrap();
        config
    }

    #[test]
    fn suites_are_bit_identical_for_the_same_seed() {
        let config = small_config();
        let one = generate_field_suite(&config, 64).unwrap();
        let two = generate_field_suite(&config, 64).unwrap();
        assert_eq!(one.scalars.len(), two.scalars.len());
        for ((_, a), (_, b)) in one.scalars.iter().zip(&two.scalars) {
            assert_eq!(a.channel(0), b.channel(0));
        }
        for (a, b) in one.families.iter().zip(&two.families) {
            assert_eq!(a.field().channel(0), b.field().channel(0));
        }
    }

    #[test]
    fn different_seeds_give_different_fields() {
        let config = small_config();
        let mut other = small_config();
        other.seed ^= 0xDEAD_BEEF;
        let one = generate_field_suite(&config, 64).unwrap();
        let two = generate_field_suite(&other, 64).unwrap();
        let d: f64 = one.scalars[0]
            .1
            .channel(0)
            .iter()
            .zip(two.scalars[0].1.channel(0))
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(d > 1e-6);
    }

    #[test]
    fn suite_sizes_follow_the_config() {
        let mut config = small_config();
        config.field_count = 2;
        config.family_count = 3;
        let suite = generate_field_suite(&config, 64).unwrap();
        assert_eq!(suite.scalars.len(), 6);
        assert_eq!(suite.families.len(), 3);
        assert_eq!(suite.broken.len(), 3);
        assert_eq!(suite.broken.iter().filter(|b| !b.stays_flat).count(), 1);
        assert_eq!(suite.spec.shape(), &[64, 64]);
    }

    #[test]
    fn scalar_fields_are_resolved_on_every_configured_grid() {
        // band-limited synthesis makes the coarse field the exact
        // restriction of the fine one
        let config = small_config();
        let coarse = generate_field_suite(&config, 64).unwrap();
        let fine = generate_field_suite(&config, 128).unwrap();
        let (_, fc) = &coarse.scalars[0];
        let (_, ff) = &fine.scalars[0];
        for (ic, pc) in [(0usize, (0usize, 0usize)), (3 * 64 + 17, (3, 17))].iter() {
            let flat_fine = pc.0 * 2 * 128 + pc.1 * 2;
            assert_abs_diff_eq!(
                fc.value(0, *ic),
                ff.value(0, flat_fine),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn unknown_grid_sizes_are_rejected() {
        let config = small_config();
        assert!(generate_field_suite(&config, 32).is_err());
    }
}
