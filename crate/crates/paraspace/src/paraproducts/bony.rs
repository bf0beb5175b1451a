//! Low-high paraproducts: sums of products of a low-pass tail against a
//! single dyadic block.

use crate::error::{Error, Result};
use crate::lpanalysis::{
    check_spectral_annulus, lp_block, lp_low, DyadicPartition, GridField, SPECTRAL_MARGIN,
};

/// One logged summand of a paraproduct decomposition.
pub struct ParaproductTerm {
    /// Which structured piece the term belongs to (entry and factor names).
    pub label: String,
    /// The block scale of the high factor.
    pub j: i32,
    pub sup: f64,
    /// Relative spectral mass escaping the expected annulus around scale j.
    pub leakage: f64,
    pub field: GridField,
}

/// The full term-by-term account of one paraproduct evaluation.
pub struct ParaproductLog {
    pub terms: Vec<ParaproductTerm>,
}

impl ParaproductLog {
    /// Re-sum the logged terms, in logged order.
    pub fn total(&self, like: &GridField) -> Result<GridField> {
        let mut out = GridField::zeros(like.spec().clone(), like.channels());
        for term in &self.terms {
            out = out.add(&term.field)?;
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["label", "j", "sup", "leakage"])?;
        for t in &self.terms {
            w.write_record([
                t.label.clone(),
                t.j.to_string(),
                format!("{:.17e}", t.sup),
                format!("{:.17e}", t.leakage),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shared ascending-scale accumulation of sum_j S_{j-1} f * D_j g, with an
/// optional per-term log.
pub(crate) fn lowhigh_accumulate(
    f: &GridField,
    g: &GridField,
    partition: &DyadicPartition,
    label: &str,
    mut log: Option<&mut Vec<ParaproductTerm>>,
) -> Result<GridField> {
    partition.spec().same_as(f.spec())?;
    partition.spec().same_as(g.spec())?;
    if f.channels() != 1 || g.channels() != 1 {
        return Err(Error::DimensionMismatch(
            "paraproduct factors must be scalar fields".into(),
        ));
    }
    let mut out = GridField::zeros(f.spec().clone(), 1);
    for j in 1..=partition.j_max() {
        let low = lp_low(f, j - 1, partition)?;
        let high = lp_block(g, j, partition)?;
        let term = low.mul_pointwise(&high)?;
        out = out.add(&term)?;
        if let Some(entries) = log.as_deref_mut() {
            entries.push(ParaproductTerm {
                label: label.to_string(),
                j,
                sup: term.sup_norm(),
                leakage: check_spectral_annulus(&term, j, SPECTRAL_MARGIN),
                field: term,
            });
        }
    }
    Ok(out)
}

/// The low-high paraproduct of two scalar fields.
pub fn bony_para(f: &GridField, g: &GridField, partition: &DyadicPartition) -> Result<GridField> {
    lowhigh_accumulate(f, g, partition, "low-high", None)
}

/// As `bony_para`, returning the term log alongside the sum.
pub fn bony_para_logged(
    f: &GridField,
    g: &GridField,
    partition: &DyadicPartition,
) -> Result<(GridField, ParaproductLog)> {
    let mut terms = Vec::new();
    let out = lowhigh_accumulate(f, g, partition, "low-high", Some(&mut terms))?;
    Ok((out, ParaproductLog { terms }))
}
