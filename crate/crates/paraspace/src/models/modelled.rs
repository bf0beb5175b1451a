//! Coefficient fields over a graded symbol space.

use crate::error::{Error, Result};
use crate::grading::ModelSpace;
use crate::lpanalysis::{GridField, GridSpec};

/// A field of coefficient vectors: one channel per symbol, in the symbol
/// order of the space.
#[derive(Clone)]
pub struct ModelledField {
    space: ModelSpace,
    field: GridField,
}

impl ModelledField {
    pub fn new(space: ModelSpace, field: GridField) -> Result<Self> {
        if field.channels() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} channels for {} symbols",
                field.channels(),
                space.dim()
            )));
        }
        Ok(Self { space, field })
    }

    /// Stack per-symbol scalar fields in symbol order.
    pub fn from_components(space: ModelSpace, components: &[GridField]) -> Result<Self> {
        if components.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} components for {} symbols",
                components.len(),
                space.dim()
            )));
        }
        let field = GridField::stack(components)?;
        Self::new(space, field)
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn field(&self) -> &GridField {
        &self.field
    }

    pub fn spec(&self) -> &GridSpec {
        self.field.spec()
    }

    pub fn component(&self, symbol: usize) -> &[f64] {
        self.field.channel(symbol)
    }

    pub fn component_field(&self, symbol: usize) -> GridField {
        self.field.extract_channel(symbol)
    }

    /// The channels of one sector as a standalone field.
    pub fn sector_field(&self, sector: usize) -> GridField {
        let range = self.space.sector(sector).range();
        let fields: Vec<GridField> = range.map(|i| self.field.extract_channel(i)).collect();
        GridField::stack(&fields).expect("sector channels share a grid")
    }

    /// The full coefficient vector at one grid point.
    pub fn coefficients_at(&self, flat: usize) -> Vec<f64> {
        (0..self.space.dim()).map(|c| self.field.value(c, flat)).collect()
    }
}
