//! Structural health checks for a model on its grid: the composition law,
//! identity at coincident points, triangularity, kernel faithfulness, and
//! an empirical transition bound.

use crate::error::Result;
use crate::grading::hom_to_f64;
use crate::lpanalysis::GridSpec;
use crate::models::instance::{GammaEvaluator, ModelInstance};
use crate::sampling::PairSampler;

#[derive(Clone, Debug)]
pub struct ModelCheckReport {
    /// Max over clustered triples of |Gamma_xy Gamma_yz - Gamma_xz|.
    pub chen_defect: f64,
    /// Max over points of |Gamma_xx - id|.
    pub identity_defect: f64,
    /// Empirical sup of |entry(b, a)| / dist^(alpha_a - alpha_b), at least 1.
    pub gamma_bound: f64,
    /// Max difference between the closed-form transport and the kernel
    /// term-table evaluation (zero for kernel-evaluated models).
    pub kernel_defect: f64,
    /// Transport evaluations that failed the triangularity validation.
    pub triangularity_violations: usize,
}

/// Run all checks with the sampler's deterministic point sets and record
/// the empirical transition bound on the model.
pub fn check_model(
    model: &ModelInstance,
    spec: &GridSpec,
    sampler: &PairSampler,
) -> Result<ModelCheckReport> {
    let space = model.space();
    let mut violations = 0usize;

    // composition on clustered triples, where no displacement wraps
    let mut chen: f64 = 0.0;
    for (x, y, z) in sampler.triples(spec, 120, 0.125) {
        let parts = (
            model.gamma_element(spec, x, y),
            model.gamma_element(spec, y, z),
            model.gamma_element(spec, x, z),
        );
        match parts {
            (Ok(a), Ok(b), Ok(c)) => chen = chen.max(a.compose(&b).max_abs_diff(&c)),
            _ => violations += 1,
        }
    }

    let mut identity: f64 = 0.0;
    for x in sampler.points(spec, 60) {
        match model.gamma_element(spec, x, x) {
            Ok(g) => {
                identity =
                    identity.max(g.max_abs_diff(&crate::grading::StructureElement::identity(space)))
            }
            Err(_) => violations += 1,
        }
    }

    let mut bound: f64 = 1.0;
    let mut kernel_defect: f64 = 0.0;
    let closed_form = !matches!(model.evaluator(), GammaEvaluator::Kernel);
    for pair in sampler.pairs(spec) {
        let g = match model.gamma_element(spec, pair.y, pair.x) {
            Ok(g) => g,
            Err(_) => {
                violations += 1;
                continue;
            }
        };
        for src in 0..space.dim() {
            let sa = space.sector_of_symbol(src);
            for tgt in 0..space.dim() {
                let sb = space.sector_of_symbol(tgt);
                if sb >= sa {
                    continue;
                }
                let gap = hom_to_f64(space.alpha(sa)) - hom_to_f64(space.alpha(sb));
                let ratio = g.entry(tgt, src).abs() / pair.dist.powf(gap);
                bound = bound.max(ratio);
            }
        }
        if closed_form {
            if let Ok(k) = model.kernel().gamma_element(space, spec, pair.y, pair.x) {
                kernel_defect = kernel_defect.max(g.max_abs_diff(&k));
            } else {
                violations += 1;
            }
        }
    }

    model.record_gamma_bound(bound);
    Ok(ModelCheckReport {
        chen_defect: chen,
        identity_defect: identity,
        gamma_bound: bound,
        kernel_defect,
        triangularity_violations: violations,
    })
}
