//! Loading models and datasets and turning command-line flags into the
//! question the verifier answers.

use std::path::Path;

use anyhow::{bail, Context, Result};

use qnnv::encoder::{InputRegionSpec, Norm, PropertySpec};
use qnnv::qnn::{
    classify, load_model_file, parse_dataset, parse_dataset_raw, qnn_forward, quantize_value,
    QuantConfig, QuantizedNetwork, Sample, Sign,
};

/// Robustness property selected on the command line.
#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum PropertyKind {
    /// The classified label changes.
    Class,
    /// Any output coordinate changes.
    Diff,
}

/// Loads a quantized model, rejecting real-valued files.
pub fn load_quantized(path: &Path) -> Result<QuantizedNetwork> {
    let file =
        load_model_file(path).with_context(|| format!("reading model {}", path.display()))?;
    if file.is_real() {
        bail!(
            "{} holds a real-valued model; run `qnnv quantize` on it first",
            path.display()
        );
    }
    file.to_quantized()
        .with_context(|| format!("loading model {}", path.display()))
}

/// Loads a dataset and leaves every value on the model's input grid. Raw
/// files carry real numbers and are quantized entrywise; grid files must
/// already be within the input range.
pub fn load_samples(path: &Path, raw: bool, net: &QuantizedNetwork) -> Result<Vec<Sample>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    let samples: Vec<Sample> = if raw {
        parse_dataset_raw(&text)?
            .into_iter()
            .map(|s| Sample {
                label: s.label,
                values: s
                    .values
                    .iter()
                    .map(|v| quantize_value(v, net.cfg_in()))
                    .collect(),
            })
            .collect()
    } else {
        parse_dataset(&text)?
    };
    if samples.is_empty() {
        bail!("dataset {} has no samples", path.display());
    }
    for (i, s) in samples.iter().enumerate() {
        if s.values.len() != net.input_dim() {
            bail!(
                "sample {i} has {} values but the model takes {}",
                s.values.len(),
                net.input_dim()
            );
        }
        if let Some(&v) = s.values.iter().find(|v| !net.cfg_in().contains(**v)) {
            bail!("sample {i} value {v} is outside the model's input grid");
        }
    }
    Ok(samples)
}

/// The samples a command works on: the whole dataset, or one picked by index.
pub fn pick(samples: Vec<Sample>, sample: Option<usize>) -> Result<Vec<(usize, Sample)>> {
    match sample {
        None => Ok(samples.into_iter().enumerate().collect()),
        Some(i) => {
            if i >= samples.len() {
                bail!("no sample {i}; the dataset has {}", samples.len());
            }
            Ok(vec![(i, samples.into_iter().nth(i).unwrap())])
        }
    }
}

/// Builds the property for one sample. A classification question without an
/// explicit target defends the model's own class at the center.
pub fn resolve_property(
    kind: PropertyKind,
    target: Option<usize>,
    net: &QuantizedNetwork,
    center: &[i64],
) -> Result<PropertySpec> {
    match kind {
        PropertyKind::Diff => {
            if target.is_some() {
                bail!("--target only applies to --property class");
            }
            Ok(PropertySpec::OutputDifference)
        }
        PropertyKind::Class => {
            let target = match target {
                Some(g) => g,
                None => classify(&qnn_forward(net, center)?)?,
            };
            Ok(PropertySpec::Misclassification { target })
        }
    }
}

pub fn region(center: &[i64], radius: i64, norm: Norm) -> InputRegionSpec {
    InputRegionSpec {
        center: center.to_vec(),
        radius,
        norm,
    }
}

/// Parses a quantization configuration written as `sign,bits,frac` with sign
/// `+` (unsigned) or `+-` (signed), e.g. `+-,6,4`.
pub fn parse_cfg(s: &str) -> Result<QuantConfig, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [sign, bits, frac] = parts[..] else {
        return Err(format!("expected sign,bits,frac, got {s:?}"));
    };
    let sign = match sign {
        "+" => Sign::Unsigned,
        "+-" => Sign::Signed,
        other => return Err(format!("unknown sign {other:?}; use + or +-")),
    };
    let bits: u32 = bits
        .parse()
        .map_err(|_| format!("bad total bit count {bits:?}"))?;
    let frac: u32 = frac
        .parse()
        .map_err(|_| format!("bad fraction bit count {frac:?}"))?;
    QuantConfig::new(sign, bits, frac).map_err(|e| e.to_string())
}
