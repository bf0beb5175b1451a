//! Model serialization: a JSON description referencing field files stored
//! next to it.
//!
//! The kernel term table is the transport authority for stored models; a
//! description without one is rejected rather than silently re-deriving a
//! closed form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grading::{Hom, ModelSpace, MultiIndex, ScalingVector};
use crate::lpanalysis::{read_field, write_field};
use crate::models::instance::{GammaEvaluator, ModelInstance, SymbolTag};
use crate::models::kernel::{KernelEntry, KernelFactor, KernelTerm, SeparableKernel};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TagFile {
    Unit,
    Poly(Vec<u32>),
    Integral,
    Other(String),
}

#[derive(Serialize, Deserialize)]
struct SymbolFile {
    name: String,
    tag: TagFile,
}

#[derive(Serialize, Deserialize)]
struct SectorFile {
    alpha: Hom,
    symbols: Vec<SymbolFile>,
}

#[derive(Serialize, Deserialize)]
struct FieldRef {
    name: String,
    path: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FactorFile {
    One,
    Field(String),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TermFile {
    Poly { coeff: f64, monomial: Vec<u32>, u_factor: FactorFile },
    Sep { coeff: f64, a: FactorFile, c: String },
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    source: String,
    target: String,
    terms: Vec<TermFile>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    scaling: Vec<u32>,
    gamma: Hom,
    sectors: Vec<SectorFile>,
    fields: Vec<FieldRef>,
    kernel: Vec<EntryFile>,
}

fn tag_to_file(tag: &SymbolTag) -> TagFile {
    match tag {
        SymbolTag::Unit => TagFile::Unit,
        SymbolTag::Poly(k) => TagFile::Poly(k.as_slice().to_vec()),
        SymbolTag::Integral => TagFile::Integral,
        SymbolTag::Other(s) => TagFile::Other(s.clone()),
    }
}

fn tag_from_file(tag: &TagFile) -> SymbolTag {
    match tag {
        TagFile::Unit => SymbolTag::Unit,
        TagFile::Poly(k) => SymbolTag::Poly(MultiIndex::new(k.clone())),
        TagFile::Integral => SymbolTag::Integral,
        TagFile::Other(s) => SymbolTag::Other(s.clone()),
    }
}

fn factor_to_file(kernel: &SeparableKernel, f: &KernelFactor) -> FactorFile {
    match f {
        KernelFactor::One => FactorFile::One,
        KernelFactor::Field(i) => FactorFile::Field(kernel.field_name(*i).to_string()),
    }
}

/// Write the model description to `path` and its fields to
/// `<stem>.<field>.field` files beside it.
pub fn save_model(model: &ModelInstance, path: &Path) -> Result<()> {
    let space = model.space();
    let kernel = model.kernel();
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidConfig(format!("bad model path {}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));

    let mut sectors = Vec::new();
    for sector in space.sectors() {
        let symbols = sector
            .range()
            .map(|i| SymbolFile {
                name: space.symbol_name(i).to_string(),
                tag: tag_to_file(&model.tags()[i]),
            })
            .collect();
        sectors.push(SectorFile { alpha: sector.alpha, symbols });
    }

    let mut fields = Vec::new();
    for i in 0..kernel.field_count() {
        let name = kernel.field_name(i);
        let rel = format!("{stem}.{name}.field");
        write_field(&dir.join(&rel), kernel.field(i))?;
        fields.push(FieldRef { name: name.to_string(), path: rel });
    }

    let entries = kernel
        .entries
        .iter()
        .map(|e| EntryFile {
            source: space.symbol_name(e.source).to_string(),
            target: space.symbol_name(e.target).to_string(),
            terms: e
                .terms
                .iter()
                .map(|t| match t {
                    KernelTerm::Poly { coeff, monomial, u_factor } => TermFile::Poly {
                        coeff: *coeff,
                        monomial: monomial.as_slice().to_vec(),
                        u_factor: factor_to_file(kernel, u_factor),
                    },
                    KernelTerm::Sep { coeff, a, c } => TermFile::Sep {
                        coeff: *coeff,
                        a: factor_to_file(kernel, a),
                        c: kernel.field_name(*c).to_string(),
                    },
                })
                .collect(),
        })
        .collect();

    let file = ModelFile {
        name: model.name().to_string(),
        scaling: model.scaling().as_slice().to_vec(),
        gamma: space.gamma(),
        sectors,
        fields,
        kernel: entries,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Load a model saved by `save_model`. The transport always evaluates
/// through the stored kernel term table.
pub fn load_model(path: &Path) -> Result<ModelInstance> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.kernel.is_empty() {
        return Err(Error::InvalidStructure(format!(
            "model '{}' carries no kernel term table",
            file.name
        )));
    }
    let scaling = ScalingVector::new(file.scaling.clone())?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));

    let sector_symbols: Vec<(Hom, Vec<String>)> = file
        .sectors
        .iter()
        .map(|s| (s.alpha, s.symbols.iter().map(|y| y.name.clone()).collect()))
        .collect();
    let space = ModelSpace::new(file.gamma, sector_symbols)?;
    let tags: Vec<SymbolTag> =
        file.sectors.iter().flat_map(|s| s.symbols.iter().map(|y| tag_from_file(&y.tag))).collect();

    let mut kernel = SeparableKernel::new();
    for f in &file.fields {
        let field = read_field(&dir.join(&f.path))?;
        kernel.add_field(&f.name, field);
    }
    let field_of = |name: &str| -> Result<usize> {
        kernel
            .field_index(name)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown kernel field '{name}'")))
    };
    let symbol_of = |name: &str| -> Result<usize> {
        space
            .symbol_index(name)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown symbol '{name}'")))
    };
    let mut entries = Vec::new();
    for e in &file.kernel {
        let mut terms = Vec::new();
        for t in &e.terms {
            terms.push(match t {
                TermFile::Poly { coeff, monomial, u_factor } => KernelTerm::Poly {
                    coeff: *coeff,
                    monomial: MultiIndex::new(monomial.clone()),
                    u_factor: match u_factor {
                        FactorFile::One => KernelFactor::One,
                        FactorFile::Field(n) => KernelFactor::Field(field_of(n)?),
                    },
                },
                TermFile::Sep { coeff, a, c } => KernelTerm::Sep {
                    coeff: *coeff,
                    a: match a {
                        FactorFile::One => KernelFactor::One,
                        FactorFile::Field(n) => KernelFactor::Field(field_of(n)?),
                    },
                    c: field_of(c)?,
                },
            });
        }
        entries.push(KernelEntry { source: symbol_of(&e.source)?, target: symbol_of(&e.target)?, terms });
    }
    kernel.entries = entries;
    let grid = if kernel.field_count() > 0 { Some(kernel.field(0).spec().clone()) } else { None };
    ModelInstance::new(&file.name, space, scaling, tags, kernel, GammaEvaluator::Kernel, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::{hom, ScalingVector};
    use crate::lpanalysis::GridSpec;
    use crate::models::pam::pam_model;
    use crate::models::synthetic::make_synthetic_field;
    use approx::assert_abs_diff_eq;

    #[test]
    fn models_round_trip_through_disk() {
        let s = ScalingVector::isotropic(2);
        let spec = GridSpec::new(vec![32, 32], s.clone()).unwrap();
        let ixi = make_synthetic_field(&spec, 0.75, 6, 8.0).unwrap();
        let model = pam_model(&s, hom(3, 4), hom(6, 5), &ixi).unwrap();
        let dir = std::env::temp_dir().join("paraspace-model-roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pam.model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.space().dim(), model.space().dim());
        for (x, y) in [(0usize, 999usize), (513, 14), (40, 41)] {
            let a = model.gamma_element(&spec, y, x).unwrap();
            let b = loaded.gamma_element(&spec, y, x).unwrap();
            assert_abs_diff_eq!(a.max_abs_diff(&b), 0.0, epsilon = 1e-15);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn kernel_free_descriptions_are_rejected() {
        let dir = std::env::temp_dir().join("paraspace-model-reject");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.model.json");
        std::fs::write(
            &path,
            r#"{"name":"bad","scaling":[1,1],"gamma":[3,2],
               "sectors":[{"alpha":[0,1],"symbols":[{"name":"1","tag":"unit"}]}],
               "fields":[],"kernel":[]}"#,
        )
        .unwrap();
        assert!(load_model(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
