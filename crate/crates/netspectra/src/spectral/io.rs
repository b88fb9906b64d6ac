//! On-disk formats for spectra: a JSON document for eigenvalues and
//! run metadata, plus a compact little-endian binary file for eigenvector
//! columns (they dominate the size at large n and gain nothing from text).

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EigenPair, SpectrumMeta, SpectrumResult};
use crate::error::{Error, Result};

/// Magic prefix of the eigenvector column file.
pub const VECTOR_MAGIC: &[u8; 8] = b"NSVEC01\n";

#[derive(Serialize, Deserialize)]
struct MetaDto {
    n: usize,
    alpha: f64,
    lambda_min: f64,
    source: String,
    method: String,
    multiplicity_lower_bound: bool,
    partial: bool,
    #[serde(default)]
    config: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct PairDto {
    re: f64,
    im: f64,
    residual: f64,
    vector_column: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct FileDto {
    meta: MetaDto,
    eigenvalues: Vec<PairDto>,
}

/// A spectrum read back from disk. Eigenvectors live in a separate file;
/// [`SpectrumFile::attach_vectors`] joins them back on.
pub struct SpectrumFile {
    pub spectrum: SpectrumResult,
    pub method: String,
    pub config: serde_json::Value,
    columns: Vec<Option<usize>>,
}

impl SpectrumFile {
    /// Attach eigenvector columns read via [`read_vectors`].
    pub fn attach_vectors(&mut self, n: usize, cols: Vec<Vec<Complex64>>) -> Result<()> {
        if n != self.spectrum.n {
            return Err(Error::Format(format!(
                "vector file is for n={n}, spectrum has n={}",
                self.spectrum.n
            )));
        }
        for (pair, col) in self.spectrum.pairs.iter_mut().zip(&self.columns) {
            if let Some(c) = col {
                let v = cols.get(*c).ok_or_else(|| {
                    Error::Format(format!("vector column {c} out of range ({})", cols.len()))
                })?;
                pair.vector = Some(v.clone());
            }
        }
        Ok(())
    }
}

/// Write the spectrum as JSON. Pairs that carry an eigenvector are assigned
/// consecutive `vector_column` indices matching [`write_vectors`] order.
pub fn write_spectrum<W: Write>(
    w: W,
    spec: &SpectrumResult,
    method: &str,
    config: serde_json::Value,
) -> Result<()> {
    let mut next_col = 0usize;
    let eigenvalues = spec
        .pairs
        .iter()
        .map(|p| PairDto {
            re: p.lambda.re,
            im: p.lambda.im,
            residual: p.residual,
            vector_column: p.vector.as_ref().map(|_| {
                let c = next_col;
                next_col += 1;
                c
            }),
        })
        .collect();
    let dto = FileDto {
        meta: MetaDto {
            n: spec.n,
            alpha: spec.meta.alpha,
            lambda_min: spec.lambda_min,
            source: spec.meta.source.clone(),
            method: method.to_string(),
            multiplicity_lower_bound: spec.multiplicity_lower_bound,
            partial: spec.partial,
            config,
        },
        eigenvalues,
    };
    serde_json::to_writer_pretty(w, &dto)?;
    Ok(())
}

/// Read a spectrum JSON document. Eigenvectors come back as `None` until
/// attached from the companion vector file.
pub fn read_spectrum<R: Read>(r: R) -> Result<SpectrumFile> {
    let dto: FileDto = serde_json::from_reader(r)?;
    let columns: Vec<Option<usize>> = dto.eigenvalues.iter().map(|p| p.vector_column).collect();
    let pairs = dto
        .eigenvalues
        .into_iter()
        .map(|p| EigenPair {
            lambda: Complex64::new(p.re, p.im),
            vector: None,
            residual: p.residual,
        })
        .collect();
    Ok(SpectrumFile {
        spectrum: SpectrumResult {
            pairs,
            lambda_min: dto.meta.lambda_min,
            n: dto.meta.n,
            meta: SpectrumMeta {
                source: dto.meta.source,
                alpha: dto.meta.alpha,
            },
            multiplicity_lower_bound: dto.meta.multiplicity_lower_bound,
            partial: dto.meta.partial,
        },
        method: dto.meta.method,
        config: dto.meta.config,
        columns,
    })
}

/// Write eigenvector columns (pairs that have one, in pair order) as
/// little-endian binary. Returns the number of columns written.
pub fn write_vectors<W: Write>(mut w: W, spec: &SpectrumResult) -> Result<usize> {
    let cols: Vec<&Vec<Complex64>> = spec.pairs.iter().filter_map(|p| p.vector.as_ref()).collect();
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&(spec.n as u64).to_le_bytes())?;
    w.write_all(&(cols.len() as u64).to_le_bytes())?;
    for col in &cols {
        if col.len() != spec.n {
            return Err(Error::Format(format!(
                "eigenvector has length {}, expected {}",
                col.len(),
                spec.n
            )));
        }
        for z in col.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(cols.len())
}

/// Read a vector file written by [`write_vectors`]: returns (n, columns).
pub fn read_vectors<R: Read>(mut r: R) -> Result<(usize, Vec<Vec<Complex64>>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        return Err(Error::Format("not an eigenvector column file".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let k = u64::from_le_bytes(buf) as usize;
    let mut cols = Vec::with_capacity(k);
    for _ in 0..k {
        let mut col = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            let im = f64::from_le_bytes(buf);
            col.push(Complex64::new(re, im));
        }
        cols.push(col);
    }
    Ok((n, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmatrix::build_operator;
    use crate::graph::generate_preferential;
    use crate::spectral::{arnoldi_spectrum, ArnoldiConfig};

    #[test]
    fn json_and_vector_roundtrip_is_bit_exact() {
        let g = generate_preferential(40, 2, 11).unwrap();
        let op = build_operator(&g, 0.85).unwrap();
        let cfg = ArnoldiConfig {
            krylov_dim: 40,
            ..Default::default()
        };
        let spec = arnoldi_spectrum(&op, &cfg, "roundtrip").unwrap();
        assert!(!spec.pairs.is_empty());

        let mut json = Vec::new();
        write_spectrum(
            &mut json,
            &spec,
            "arnoldi",
            serde_json::json!({"alpha": 0.85}),
        )
        .unwrap();
        let mut bin = Vec::new();
        let k = write_vectors(&mut bin, &spec).unwrap();

        let mut file = read_spectrum(json.as_slice()).unwrap();
        assert_eq!(file.method, "arnoldi");
        assert_eq!(file.config["alpha"], 0.85);
        let (n, cols) = read_vectors(bin.as_slice()).unwrap();
        assert_eq!(n, 40);
        assert_eq!(cols.len(), k);
        file.attach_vectors(n, cols).unwrap();

        let back = file.spectrum;
        assert_eq!(back.n, spec.n);
        assert_eq!(back.lambda_min, spec.lambda_min);
        assert_eq!(back.pairs.len(), spec.pairs.len());
        for (a, b) in back.pairs.iter().zip(&spec.pairs) {
            assert_eq!(a.lambda, b.lambda);
            assert_eq!(a.residual, b.residual);
            assert_eq!(a.vector, b.vector);
        }
    }

    #[test]
    fn vector_file_rejects_bad_magic() {
        let bad = b"NOTMAGIC\x00\x00\x00\x00\x00\x00\x00\x00";
        assert!(read_vectors(&bad[..]).is_err());
    }
}
