//! On-disk formats: the JSON model file and the CSV sample format.
//!
//! A model file carries `arch`, the five quantization configs, and either
//! `layers` (grid integers) or `layers_real` (decimal strings, for networks
//! that still need quantizing). Samples are one line each:
//! `label,v_1,...,v_n`, with `#` comments and blank lines ignored.

use std::path::Path;

use num::{BigInt, BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use super::config::QuantConfig;
use super::net::{QuantizedLayer, QuantizedNetwork};
use super::real::{RealLayer, RealNetwork};
use super::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerJson {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<i64>>,
    pub b: Vec<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealLayerJson {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<String>>,
    pub b: Vec<String>,
}

/// The JSON model file. Exactly one of `layers` / `layers_real` must be
/// present; the configs are optional for real files (the quantize command can
/// supply them) and mandatory for quantized ones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub arch: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfg_in: Option<QuantConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfg_w: Option<QuantConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfg_b: Option<QuantConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfg_out_hidden: Option<QuantConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfg_out_last: Option<QuantConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers_real: Option<Vec<RealLayerJson>>,
}

impl ModelFile {
    /// Validate `arch` against the actual layer widths. Both the collapsed
    /// form `[n_in, h_1, ..., n_out]` and the variant with the input width
    /// duplicated up front are accepted.
    fn check_arch(&self, widths: &[usize]) -> Result<(), ModelError> {
        let collapsed_ok = self.arch == widths;
        let duplicated_ok = self.arch.len() == widths.len() + 1
            && self.arch[0] == self.arch[1]
            && self.arch[1..] == *widths;
        if !(collapsed_ok || duplicated_ok) {
            return Err(ModelError::BadFile(format!(
                "arch {:?} does not match layer widths {:?}",
                self.arch, widths
            )));
        }
        Ok(())
    }

    fn configs(&self) -> Result<[QuantConfig; 5], ModelError> {
        let get = |cfg: &Option<QuantConfig>, name: &str| {
            cfg.ok_or_else(|| ModelError::BadFile(format!("missing {name}")))
        };
        Ok([
            get(&self.cfg_in, "cfg_in")?,
            get(&self.cfg_w, "cfg_w")?,
            get(&self.cfg_b, "cfg_b")?,
            get(&self.cfg_out_hidden, "cfg_out_hidden")?,
            get(&self.cfg_out_last, "cfg_out_last")?,
        ])
    }

    pub fn is_real(&self) -> bool {
        self.layers_real.is_some()
    }

    pub fn to_quantized(&self) -> Result<QuantizedNetwork, ModelError> {
        if self.layers_real.is_some() && self.layers.is_some() {
            return Err(ModelError::BadFile(
                "file has both layers and layers_real".into(),
            ));
        }
        let layers = self
            .layers
            .as_ref()
            .ok_or_else(|| ModelError::BadFile("no quantized layers; quantize it first".into()))?;
        let [cfg_in, cfg_w, cfg_b, cfg_h, cfg_l] = self.configs()?;
        let net = QuantizedNetwork::new(
            layers
                .iter()
                .map(|l| QuantizedLayer {
                    weights: l.weights.clone(),
                    bias: l.b.clone(),
                })
                .collect(),
            cfg_in,
            cfg_w,
            cfg_b,
            cfg_h,
            cfg_l,
        )?;
        self.check_arch(&net.widths())?;
        Ok(net)
    }

    pub fn to_real(&self) -> Result<RealNetwork, ModelError> {
        if self.layers_real.is_some() && self.layers.is_some() {
            return Err(ModelError::BadFile(
                "file has both layers and layers_real".into(),
            ));
        }
        let layers = self
            .layers_real
            .as_ref()
            .ok_or_else(|| ModelError::BadFile("no layers_real in file".into()))?;
        let mut parsed = Vec::with_capacity(layers.len());
        for l in layers {
            let weights = l
                .weights
                .iter()
                .map(|row| row.iter().map(|s| parse_decimal(s)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?;
            let bias = l.b.iter().map(|s| parse_decimal(s)).collect::<Result<_, _>>()?;
            parsed.push(RealLayer { weights, bias });
        }
        let net = RealNetwork::new(parsed)?;
        self.check_arch(&net.widths())?;
        Ok(net)
    }

    pub fn from_quantized(net: &QuantizedNetwork) -> ModelFile {
        ModelFile {
            arch: net.widths(),
            cfg_in: Some(*net.cfg_in()),
            cfg_w: Some(*net.cfg_w()),
            cfg_b: Some(*net.cfg_b()),
            cfg_out_hidden: Some(*net.cfg_out_hidden()),
            cfg_out_last: Some(*net.cfg_out_last()),
            layers: Some(
                net.layers()
                    .iter()
                    .map(|l| LayerJson {
                        weights: l.weights.clone(),
                        b: l.bias.clone(),
                    })
                    .collect(),
            ),
            layers_real: None,
        }
    }
}

pub fn load_model_file(path: &Path) -> Result<ModelFile, ModelError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_quantized(path: &Path, net: &QuantizedNetwork) -> Result<(), ModelError> {
    let file = ModelFile::from_quantized(net);
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Parse a plain decimal literal (`-1.23`, `0.616`, `17`) into an exact
/// rational. No exponents, no separators.
pub fn parse_decimal(s: &str) -> Result<BigRational, ModelError> {
    let bad = || ModelError::BadDecimal(s.to_string());
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let mut num = BigInt::zero();
    for c in int_part.chars().chain(frac_part.chars()) {
        num = num * 10 + (c as u8 - b'0');
    }
    let mut den = BigInt::one();
    for _ in 0..frac_part.len() {
        den *= 10;
    }
    if neg {
        num = -num;
    }
    Ok(BigRational::new(num, den))
}

/// One pre-quantized sample: integer label and grid-integer values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub label: i64,
    pub values: Vec<i64>,
}

/// One raw sample: integer label and real-valued (decimal) inputs that still
/// need quantizing.
#[derive(Debug, Clone)]
pub struct RawSample {
    pub label: i64,
    pub values: Vec<BigRational>,
}

fn dataset_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parse a pre-quantized dataset (`label,v_1,...,v_n` per line).
pub fn parse_dataset(text: &str) -> Result<Vec<Sample>, ModelError> {
    let mut out = Vec::new();
    for (line, l) in dataset_lines(text) {
        let mut fields = l.split(',').map(str::trim);
        let label = fields
            .next()
            .and_then(|f| f.parse::<i64>().ok())
            .ok_or_else(|| ModelError::BadSample {
                line,
                reason: "missing or non-integer label".into(),
            })?;
        let values = fields
            .map(|f| {
                f.parse::<i64>().map_err(|_| ModelError::BadSample {
                    line,
                    reason: format!("non-integer value {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(ModelError::BadSample {
                line,
                reason: "no values".into(),
            });
        }
        out.push(Sample { label, values });
    }
    Ok(out)
}

/// Parse a raw dataset whose values are decimal reals.
pub fn parse_dataset_raw(text: &str) -> Result<Vec<RawSample>, ModelError> {
    let mut out = Vec::new();
    for (line, l) in dataset_lines(text) {
        let mut fields = l.split(',').map(str::trim);
        let label = fields
            .next()
            .and_then(|f| f.parse::<i64>().ok())
            .ok_or_else(|| ModelError::BadSample {
                line,
                reason: "missing or non-integer label".into(),
            })?;
        let values = fields
            .map(|f| {
                parse_decimal(f).map_err(|_| ModelError::BadSample {
                    line,
                    reason: format!("bad decimal {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(ModelError::BadSample {
                line,
                reason: "no values".into(),
            });
        }
        out.push(RawSample { label, values });
    }
    Ok(out)
}

pub fn write_dataset(samples: &[Sample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&s.label.to_string());
        for v in &s.values {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}
