//! Binary field files: one UTF-8 JSON header line describing the grid,
//! followed by the raw little-endian f64 samples (channel-major, row-major
//! within a channel). Round-trips are bit-exact.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grading::ScalingVector;
use crate::lpanalysis::grid::{GridField, GridSpec};

#[derive(Serialize, Deserialize)]
struct FieldHeader {
    dim: usize,
    n: Vec<usize>,
    s: Vec<u32>,
    channels: usize,
    layout: String,
}

pub fn write_field(path: impl AsRef<Path>, f: &GridField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = FieldHeader {
        dim: f.spec().dim(),
        n: f.spec().shape().to_vec(),
        s: f.spec().scaling().as_slice().to_vec(),
        channels: f.channels(),
        layout: "row-major".into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in f.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<GridField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = r.read(&mut byte)?;
        if got == 0 {
            return Err(Error::InvalidGrid("field file ends before header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: FieldHeader = serde_json::from_slice(&header_bytes)?;
    if header.layout != "row-major" {
        return Err(Error::InvalidGrid(format!("unsupported layout {}", header.layout)));
    }
    if header.n.len() != header.dim {
        return Err(Error::InvalidGrid("header dimension disagrees with shape".into()));
    }
    let spec = GridSpec::new(header.n, ScalingVector::new(header.s)?)?;
    let count = spec.len() * header.channels;
    let mut raw = Vec::with_capacity(count * 8);
    r.read_to_end(&mut raw)?;
    if raw.len() != count * 8 {
        return Err(Error::InvalidGrid(format!(
            "expected {} sample bytes, found {}",
            count * 8,
            raw.len()
        )));
    }
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridField::new(spec, header.channels, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let spec = GridSpec::new(vec![16, 8], ScalingVector::new(vec![2, 1]).unwrap()).unwrap();
        let f = GridField::from_fn(spec.clone(), |x| {
            (x[0] * 17.0).sin() * 1e-3 + x[1] * std::f64::consts::PI
        });
        let two = GridField::stack(&[f.clone(), f.scale(-0.125)]).unwrap();
        let dir = std::env::temp_dir().join(format!("field-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.field");
        write_field(&path, &two).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.spec(), two.spec());
        assert_eq!(back.channels(), 2);
        assert_eq!(back.data(), two.data());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = std::env::temp_dir().join(format!("field-io-{}-t", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.field");
        std::fs::write(
            &path,
            b"{\"dim\":1,\"n\":[8],\"s\":[1],\"channels\":1,\"layout\":\"row-major\"}\n\x00\x00",
        )
        .unwrap();
        assert!(read_field(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
