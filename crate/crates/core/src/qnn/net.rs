//! Quantized network representation and the exact fixed-point forward pass.
//!
//! A quantized network is a chain of affine layers over grid integers. Layer
//! `t` (0-based) computes, for each output neuron,
//!
//! ```text
//!   clamp( round_half_up( 2^e_w * sum_k W[j][k] * y[k]  +  2^e_b * b[j] ), lo, hi )
//! ```
//!
//! where `e_w` aligns the accumulated product to the output scale
//! (`F_out - F_in - F_w` on the first layer, `-F_w` afterwards), and
//! `e_b = F_out - F_b` aligns the bias. Hidden layers clamp to
//! `[0, ub]`, which absorbs the ReLU; the last layer clamps to its full grid.
//! All arithmetic is exact integer arithmetic.

use super::config::{clamp, round_half_up_pow2, QuantConfig};
use super::ModelError;

/// One affine layer of grid integers. `weights[j]` is the incoming row for
/// output neuron `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedLayer {
    pub weights: Vec<Vec<i64>>,
    pub bias: Vec<i64>,
}

/// A quantized feed-forward network together with the five grid configs that
/// fix its semantics (input, weight, bias, hidden activation, output).
#[derive(Debug, Clone)]
pub struct QuantizedNetwork {
    layers: Vec<QuantizedLayer>,
    cfg_in: QuantConfig,
    cfg_w: QuantConfig,
    cfg_b: QuantConfig,
    cfg_out_hidden: QuantConfig,
    cfg_out_last: QuantConfig,
}

impl QuantizedNetwork {
    pub fn new(
        layers: Vec<QuantizedLayer>,
        cfg_in: QuantConfig,
        cfg_w: QuantConfig,
        cfg_b: QuantConfig,
        cfg_out_hidden: QuantConfig,
        cfg_out_last: QuantConfig,
    ) -> Result<Self, ModelError> {
        for cfg in [&cfg_in, &cfg_w, &cfg_b, &cfg_out_hidden, &cfg_out_last] {
            cfg.validate()?;
        }
        // The rescale exponents assume one common activation scale: a hidden
        // layer's output is the next layer's input at the same F.
        if cfg_out_hidden.frac_bits != cfg_out_last.frac_bits {
            return Err(ModelError::BadConfig(format!(
                "hidden and output activation configs must share fraction bits, got {} vs {}",
                cfg_out_hidden.frac_bits, cfg_out_last.frac_bits
            )));
        }
        if layers.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut prev_width = None;
        for (t, layer) in layers.iter().enumerate() {
            let rows = layer.weights.len();
            if rows == 0 || rows != layer.bias.len() {
                return Err(ModelError::BadLayer {
                    layer: t,
                    reason: format!("{} weight rows vs {} biases", rows, layer.bias.len()),
                });
            }
            let cols = layer.weights[0].len();
            if cols == 0 || layer.weights.iter().any(|row| row.len() != cols) {
                return Err(ModelError::BadLayer {
                    layer: t,
                    reason: "empty or ragged weight matrix".into(),
                });
            }
            if let Some(prev) = prev_width {
                if cols != prev {
                    return Err(ModelError::BadLayer {
                        layer: t,
                        reason: format!("expects {cols} inputs but previous layer yields {prev}"),
                    });
                }
            }
            prev_width = Some(rows);
            // Out-of-grid entries are rejected, not clamped: a file claiming a
            // config its values do not fit is corrupt.
            for (j, row) in layer.weights.iter().enumerate() {
                if let Some(w) = row.iter().find(|w| !cfg_w.contains(**w)) {
                    return Err(ModelError::BadLayer {
                        layer: t,
                        reason: format!("weight {w} in row {j} outside grid {cfg_w}"),
                    });
                }
            }
            if let Some(b) = layer.bias.iter().find(|b| !cfg_b.contains(**b)) {
                return Err(ModelError::BadLayer {
                    layer: t,
                    reason: format!("bias {b} outside grid {cfg_b}"),
                });
            }
        }
        Ok(QuantizedNetwork {
            layers,
            cfg_in,
            cfg_w,
            cfg_b,
            cfg_out_hidden,
            cfg_out_last,
        })
    }

    pub fn layers(&self) -> &[QuantizedLayer] {
        &self.layers
    }

    pub fn cfg_in(&self) -> &QuantConfig {
        &self.cfg_in
    }

    pub fn cfg_w(&self) -> &QuantConfig {
        &self.cfg_w
    }

    pub fn cfg_b(&self) -> &QuantConfig {
        &self.cfg_b
    }

    pub fn cfg_out_hidden(&self) -> &QuantConfig {
        &self.cfg_out_hidden
    }

    pub fn cfg_out_last(&self) -> &QuantConfig {
        &self.cfg_out_last
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weights.len()
    }

    /// Layer widths, input first: `[n_in, h_1, ..., n_out]`.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.weights.len()));
        w
    }

    /// Total neuron count (inputs + every layer's outputs).
    pub fn neuron_count(&self) -> usize {
        self.widths().iter().sum()
    }

    pub fn is_last_layer(&self, t: usize) -> bool {
        t + 1 == self.layers.len()
    }

    /// Clamp range of layer `t`'s activations. Hidden layers clamp at 0 from
    /// below (ReLU is absorbed into the clamp); the last layer uses its full
    /// grid.
    pub fn layer_range(&self, t: usize) -> (i64, i64) {
        if self.is_last_layer(t) {
            (self.cfg_out_last.lb(), self.cfg_out_last.ub())
        } else {
            (0, self.cfg_out_hidden.ub())
        }
    }

    /// Power-of-two rescale exponents `(e_w, e_b)` for layer `t`: the affine
    /// form is `2^e_w * (W y) + 2^e_b * b`.
    pub fn scale_exponents(&self, t: usize) -> (i64, i64) {
        let f_out = self.cfg_out_last.frac_bits as i64;
        let f_in = self.cfg_in.frac_bits as i64;
        let f_w = self.cfg_w.frac_bits as i64;
        let f_b = self.cfg_b.frac_bits as i64;
        let e_w = if t == 0 { f_out - f_in - f_w } else { -f_w };
        (e_w, f_out - f_b)
    }

    /// Largest |weight| anywhere in the network.
    pub fn max_abs_weight(&self) -> i64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().flatten())
            .map(|w| w.abs())
            .max()
            .unwrap_or(0)
    }
}

/// `round(2^e_w * acc + 2^e_b * b)` without the clamp, exact.
pub(crate) fn eval_rounded_unclamped(
    acc: i128,
    bias: i64,
    e_w: i64,
    e_b: i64,
) -> Result<i128, ModelError> {
    // Common power-of-two denominator; both shifted exponents are >= 0.
    let p = 0.max(-e_w).max(-e_b) as u32;
    let sw = (e_w + p as i64) as u32;
    let sb = (e_b + p as i64) as u32;
    let a = shl_exact(acc, sw).ok_or(ModelError::Overflow)?;
    let b = shl_exact(i128::from(bias), sb).ok_or(ModelError::Overflow)?;
    let num = a.checked_add(b).ok_or(ModelError::Overflow)?;
    round_half_up_pow2(num, p).ok_or(ModelError::Overflow)
}

/// Evaluate one affine row exactly: `clamp(round(2^e_w * acc + 2^e_b * b))`.
pub(crate) fn eval_preactivation(
    acc: i128,
    bias: i64,
    e_w: i64,
    e_b: i64,
    lo: i64,
    hi: i64,
) -> Result<i64, ModelError> {
    let rounded = eval_rounded_unclamped(acc, bias, e_w, e_b)?;
    let clamped = clamp(rounded, i128::from(lo), i128::from(hi));
    Ok(clamped as i64)
}

/// `v * 2^s` with genuine overflow detection. `checked_shl` only rejects
/// oversized shift amounts, not lost bits, so multiply instead.
fn shl_exact(v: i128, s: u32) -> Option<i128> {
    if v == 0 {
        return Some(0);
    }
    if s >= 127 {
        return None;
    }
    v.checked_mul(1i128 << s)
}

/// Forward pass returning every layer's post-activation vector (the final
/// entry is the network output).
pub fn qnn_forward_layers(net: &QuantizedNetwork, input: &[i64]) -> Result<Vec<Vec<i64>>, ModelError> {
    if input.len() != net.input_dim() {
        return Err(ModelError::InputArity {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    let cfg_in = net.cfg_in();
    for (i, &v) in input.iter().enumerate() {
        if !cfg_in.contains(v) {
            return Err(ModelError::InputOutsideGrid {
                value: v,
                index: i,
                lo: cfg_in.lb(),
                hi: cfg_in.ub(),
            });
        }
    }
    let mut all = Vec::with_capacity(net.layers().len());
    let mut acts: Vec<i64> = input.to_vec();
    for (t, layer) in net.layers().iter().enumerate() {
        let (e_w, e_b) = net.scale_exponents(t);
        let (lo, hi) = net.layer_range(t);
        let mut next = Vec::with_capacity(layer.weights.len());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let mut acc: i128 = 0;
            for (&w, &y) in row.iter().zip(&acts) {
                let prod = i128::from(w).checked_mul(i128::from(y)).ok_or(ModelError::Overflow)?;
                acc = acc.checked_add(prod).ok_or(ModelError::Overflow)?;
            }
            next.push(eval_preactivation(acc, b, e_w, e_b, lo, hi)?);
        }
        all.push(next.clone());
        acts = next;
    }
    Ok(all)
}

/// Forward pass returning the output layer only.
pub fn qnn_forward(net: &QuantizedNetwork, input: &[i64]) -> Result<Vec<i64>, ModelError> {
    Ok(qnn_forward_layers(net, input)?.pop().unwrap())
}

/// Predicted class: the smallest (1-indexed) position attaining the maximum.
pub fn classify(output: &[i64]) -> Result<usize, ModelError> {
    let mut best: Option<(usize, i64)> = None;
    for (i, &v) in output.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i + 1).ok_or(ModelError::EmptyOutput)
}
