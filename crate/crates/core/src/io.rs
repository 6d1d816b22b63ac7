//! File formats: graphon JSON specs and the `GSPC` binary sample format.
//!
//! Binary layout (little endian): magic `GSPC`, version `u32`, `n: u64`,
//! `m: u64` (zero unless the sample is a Gram symmetrization), then the
//! normalized `(n+m) x (n+m)` matrix as row-major `f64`, then, when latent
//! coordinates were sampled, `n` further `f64` values.

use crate::graphon::{AnalyticGraphon, StepGraphon};
use crate::matrix::SquareMatrix;
use crate::models::EnsembleSample;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Default panel count when an analytic kernel is refined to a step graphon.
pub const DEFAULT_REFINEMENT: usize = 256;

const MAGIC: &[u8; 4] = b"GSPC";
const VERSION: u32 = 1;

/// JSON graphon schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphonSpec {
    Step {
        fractions: Vec<f64>,
        weights: Vec<Vec<f64>>,
    },
    Constant {
        value: f64,
    },
    Analytic {
        name: String,
        #[serde(default = "default_scale")]
        scale: f64,
    },
}

fn default_scale() -> f64 {
    1.0
}

impl GraphonSpec {
    pub fn to_analytic(&self) -> Result<AnalyticGraphon> {
        Ok(match self {
            GraphonSpec::Step { fractions, weights } => {
                AnalyticGraphon::Step(StepGraphon::new(fractions.clone(), weights.clone())?)
            }
            GraphonSpec::Constant { value } => AnalyticGraphon::Constant(*value),
            GraphonSpec::Analytic { name, scale } => match name.as_str() {
                "product" => AnalyticGraphon::Product { scale: *scale },
                "min" => AnalyticGraphon::Min { scale: *scale },
                "max" => AnalyticGraphon::Max { scale: *scale },
                other => {
                    return Err(Error::InvalidGraphon(format!(
                        "unknown analytic kernel `{other}` (expected product, min, or max)"
                    )))
                }
            },
        })
    }

    /// Step form: exact for step and constant specs, midpoint refinement
    /// with `panels` blocks for analytic kernels.
    pub fn to_step(&self, panels: usize) -> Result<StepGraphon> {
        match self {
            GraphonSpec::Step { fractions, weights } => {
                StepGraphon::new(fractions.clone(), weights.clone())
            }
            GraphonSpec::Constant { value } => StepGraphon::constant(*value),
            GraphonSpec::Analytic { .. } => self.to_analytic()?.refine(panels),
        }
    }

    /// True when `to_step` involves a refinement whose panel count should be
    /// recorded in output metadata.
    pub fn needs_refinement(&self) -> bool {
        matches!(self, GraphonSpec::Analytic { .. })
    }

    pub fn from_step(w: &StepGraphon) -> Self {
        GraphonSpec::Step {
            fractions: w.fractions().to_vec(),
            weights: w.weights().to_vec(),
        }
    }
}

pub fn load_graphon(path: &Path) -> Result<GraphonSpec> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "graphon file not found: {}",
            path.display()
        )));
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A sample read back from a `GSPC` file.
#[derive(Debug, Clone)]
pub struct SampleFile {
    pub n: u64,
    pub m: u64,
    pub matrix: SquareMatrix,
    pub latent: Option<Vec<f64>>,
}

impl SampleFile {
    /// Aspect ratio `m/n` when the file holds a Gram symmetrization.
    pub fn gram_aspect(&self) -> Option<f64> {
        (self.m > 0).then(|| self.m as f64 / self.n as f64)
    }
}

pub fn write_sample(path: &Path, sample: &EnsembleSample) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(sample.n as u64).to_le_bytes())?;
    out.write_all(&(sample.m as u64).to_le_bytes())?;
    for value in sample.matrix.data() {
        out.write_all(&value.to_le_bytes())?;
    }
    if let Some(latent) = &sample.latent {
        for value in latent {
            out.write_all(&value.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_sample(path: &Path) -> Result<SampleFile> {
    let mut input = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::MalformedSample(format!(
            "bad magic {magic:?}, expected GSPC"
        )));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::MalformedSample(format!(
            "unsupported version {version}"
        )));
    }
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf);
    input.read_exact(&mut u64buf)?;
    let m = u64::from_le_bytes(u64buf);
    let dim = (n + m) as usize;
    let mut data = vec![0.0f64; dim * dim];
    let mut f64buf = [0u8; 8];
    for value in data.iter_mut() {
        input.read_exact(&mut f64buf)?;
        *value = f64::from_le_bytes(f64buf);
    }
    let matrix = SquareMatrix::from_raw(dim, data)?;
    // latent block is optional; present iff more bytes follow
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    let latent = if rest.is_empty() {
        None
    } else {
        if rest.len() != 8 * n as usize {
            return Err(Error::MalformedSample(format!(
                "trailing block of {} bytes is not {} latent coordinates",
                rest.len(),
                n
            )));
        }
        Some(
            rest.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    };
    Ok(SampleFile {
        n,
        m,
        matrix,
        latent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphon_spec_parsing() {
        let spec: GraphonSpec =
            serde_json::from_str(r#"{"kind":"constant","value":2.0}"#).unwrap();
        let w = spec.to_step(8).unwrap();
        assert_eq!(w.block_count(), 1);
        assert_eq!(w.weight(0, 0), 2.0);

        let spec: GraphonSpec = serde_json::from_str(
            r#"{"kind":"step","fractions":[0.5,0.5],"weights":[[0,1],[1,0]]}"#,
        )
        .unwrap();
        assert_eq!(spec.to_step(8).unwrap().block_count(), 2);

        let spec: GraphonSpec =
            serde_json::from_str(r#"{"kind":"analytic","name":"product"}"#).unwrap();
        assert!(spec.needs_refinement());
        assert_eq!(spec.to_step(32).unwrap().block_count(), 32);

        let bad: GraphonSpec =
            serde_json::from_str(r#"{"kind":"analytic","name":"sine"}"#).unwrap();
        assert!(bad.to_analytic().is_err());
    }
}
