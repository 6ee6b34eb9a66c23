//! Quantized network semantics: fixed-point configs, rounding, exact forward
//! evaluation for both real-valued and quantized networks, and the JSON/CSV
//! file formats.

mod config;
mod format;
mod net;
mod real;

pub use config::{clamp, round_half_up, round_half_up_pow2, QuantConfig, Sign};
pub use format::{
    load_model_file, parse_dataset, parse_dataset_raw, parse_decimal, save_quantized,
    write_dataset, ModelFile, RawSample, Sample,
};
pub use net::{classify, qnn_forward, qnn_forward_layers, QuantizedLayer, QuantizedNetwork};
pub(crate) use net::eval_rounded_unclamped;
pub use real::{quantize_network, quantize_value, real_forward, RealLayer, RealNetwork};

use thiserror::Error;


/// Errors from network construction, evaluation, and the file formats.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid quantization config: {0}")]
    BadConfig(String),
    #[error("layer {layer}: {reason}")]
    BadLayer { layer: usize, reason: String },
    #[error("network must have at least one affine layer")]
    Empty,
    #[error("expected {expected} input values, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("input value {value} at index {index} is outside the input grid [{lo}, {hi}]")]
    InputOutsideGrid {
        value: i64,
        index: usize,
        lo: i64,
        hi: i64,
    },
    #[error("classify needs a non-empty output vector")]
    EmptyOutput,
    #[error("arithmetic overflow in fixed-point evaluation; reduce the bit widths")]
    Overflow,
    #[error("cannot parse decimal literal {0:?}")]
    BadDecimal(String),
    #[error("model file: {0}")]
    BadFile(String),
    #[error("dataset line {line}: {reason}")]
    BadSample { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}
