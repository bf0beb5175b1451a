//! Scale-weighted sup norms over dyadic blocks.

use crate::error::Result;
use crate::lpanalysis::{lp_block, DyadicPartition, GridField};
use crate::norms::report::{NormEntry, NormPart, NormReport, Witness};

/// Sup of the channel-summed absolute value, together with the grid point
/// attaining it (first such point in flat order).
pub(crate) fn sup_with_argmax(f: &GridField) -> (f64, usize) {
    let n = f.npoints();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for i in 0..n {
        let mut v = 0.0;
        for c in 0..f.channels() {
            v += f.value(c, i).abs();
        }
        if v > best {
            best = v;
            arg = i;
        }
    }
    (best, arg)
}

/// Weighted-block sup norm at regularity `gamma` (any real value): the max
/// over blocks of 2^(j*gamma) times the block sup, reported per block with
/// the attaining grid point.
pub fn besov_norm(f: &GridField, gamma: f64, partition: &DyadicPartition) -> Result<NormReport> {
    partition.spec().same_as(f.spec())?;
    let mut entries = Vec::new();
    for j in -1..=partition.j_max() {
        let block = lp_block(f, j, partition)?;
        let (sup, point) = sup_with_argmax(&block);
        entries.push(NormEntry {
            label: format!("j={j}"),
            value: (j as f64 * gamma).exp2() * sup,
            witness: Witness::Block { j, point },
        });
    }
    Ok(NormReport::from_parts(vec![NormPart::from_entries("blocks", entries)]))
}
