//! Real-valued feed-forward ReLU networks and their quantization onto
//! fixed-point grids. Weights are exact rationals (decimal literals parse
//! losslessly), so quantization and the reference forward pass have no
//! floating-point error to account for.

use num::{BigInt, BigRational, Signed, Zero};

use super::config::{clamp, round_half_up, QuantConfig};
use super::net::{QuantizedLayer, QuantizedNetwork};
use super::ModelError;

/// One affine layer of a real-valued network. `weights[j]` is the incoming
/// row for output neuron `j`.
#[derive(Debug, Clone)]
pub struct RealLayer {
    pub weights: Vec<Vec<BigRational>>,
    pub bias: Vec<BigRational>,
}

/// A feed-forward ReLU network over exact rationals. ReLU is applied after
/// every layer except the last.
#[derive(Debug, Clone)]
pub struct RealNetwork {
    layers: Vec<RealLayer>,
}

impl RealNetwork {
    pub fn new(layers: Vec<RealLayer>) -> Result<Self, ModelError> {
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
            if cols == 0 {
                return Err(ModelError::BadLayer {
                    layer: t,
                    reason: "empty weight row".into(),
                });
            }
            if layer.weights.iter().any(|row| row.len() != cols) {
                return Err(ModelError::BadLayer {
                    layer: t,
                    reason: "ragged weight matrix".into(),
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
        }
        Ok(RealNetwork { layers })
    }

    pub fn layers(&self) -> &[RealLayer] {
        &self.layers
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
}

/// Exact forward pass of the real network: affine layers with ReLU between
/// them, identity on the final layer.
pub fn real_forward(net: &RealNetwork, input: &[BigRational]) -> Result<Vec<BigRational>, ModelError> {
    if input.len() != net.input_dim() {
        return Err(ModelError::InputArity {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    let mut acts: Vec<BigRational> = input.to_vec();
    let last = net.layers.len() - 1;
    for (t, layer) in net.layers.iter().enumerate() {
        let mut next = Vec::with_capacity(layer.weights.len());
        for (row, b) in layer.weights.iter().zip(&layer.bias) {
            let mut sum = b.clone();
            for (w, a) in row.iter().zip(&acts) {
                sum += w * a;
            }
            if t != last && sum.is_negative() {
                sum = BigRational::zero();
            }
            next.push(sum);
        }
        acts = next;
    }
    Ok(acts)
}

/// Quantize a single real value onto a grid: scale by `2^F`, round half-up,
/// clamp into the grid.
pub fn quantize_value(u: &BigRational, cfg: &QuantConfig) -> i64 {
    use num::ToPrimitive;
    let scaled = round_half_up(&(u * cfg.scale()));
    let clamped = clamp(scaled, BigInt::from(cfg.lb()), BigInt::from(cfg.ub()));
    // The clamp above pins the value inside an i64-sized grid.
    clamped.to_i64().expect("grid values fit i64")
}

/// Quantize every weight and bias of a real network entrywise.
pub fn quantize_network(
    net: &RealNetwork,
    cfg_in: QuantConfig,
    cfg_w: QuantConfig,
    cfg_b: QuantConfig,
    cfg_out_hidden: QuantConfig,
    cfg_out_last: QuantConfig,
) -> Result<QuantizedNetwork, ModelError> {
    let layers = net
        .layers
        .iter()
        .map(|layer| QuantizedLayer {
            weights: layer
                .weights
                .iter()
                .map(|row| row.iter().map(|w| quantize_value(w, &cfg_w)).collect())
                .collect(),
            bias: layer.bias.iter().map(|b| quantize_value(b, &cfg_b)).collect(),
        })
        .collect();
    QuantizedNetwork::new(layers, cfg_in, cfg_w, cfg_b, cfg_out_hidden, cfg_out_last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::{parse_decimal, Sign};

    fn r(s: &str) -> BigRational {
        parse_decimal(s).unwrap()
    }

    fn row(vals: &[&str]) -> Vec<BigRational> {
        vals.iter().map(|s| r(s)).collect()
    }

    use crate::qnn::test_fixtures::running_dnn;

    #[test]
    fn real_forward_fixture_values() {
        let net = running_dnn();
        let out = real_forward(&net, &[r("0.616"), r("0.114")]).unwrap();
        assert_eq!(out, vec![r("0.499335"), r("0.6404292")]);
    }

    #[test]
    fn real_forward_applies_relu_between_layers() {
        // Single path: hidden pre-activation is negative, so the output must
        // see 0, not the negative value.
        let net = RealNetwork::new(vec![
            RealLayer {
                weights: vec![row(&["1"])],
                bias: row(&["-2"]),
            },
            RealLayer {
                weights: vec![row(&["1"])],
                bias: row(&["0"]),
            },
        ])
        .unwrap();
        assert_eq!(real_forward(&net, &[r("1")]).unwrap(), vec![r("0")]);
        // The final layer is affine only: negatives pass through.
        assert_eq!(real_forward(&net, &[r("3")]).unwrap(), vec![r("1")]);
        let neg = RealNetwork::new(vec![RealLayer {
            weights: vec![row(&["1"])],
            bias: row(&["-2"]),
        }])
        .unwrap();
        assert_eq!(real_forward(&neg, &[r("1")]).unwrap(), vec![r("-1")]);
    }

    #[test]
    fn real_forward_checks_arity() {
        let net = running_dnn();
        assert!(matches!(
            real_forward(&net, &[r("1")]),
            Err(ModelError::InputArity { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn constructor_rejects_ragged_and_mismatched_layers() {
        assert!(matches!(RealNetwork::new(vec![]), Err(ModelError::Empty)));
        let ragged = RealNetwork::new(vec![RealLayer {
            weights: vec![row(&["1", "2"]), row(&["3"])],
            bias: row(&["0", "0"]),
        }]);
        assert!(ragged.is_err());
        let chained = RealNetwork::new(vec![
            RealLayer {
                weights: vec![row(&["1", "2"])],
                bias: row(&["0"]),
            },
            RealLayer {
                weights: vec![row(&["1", "2"])], // expects 2 inputs, gets 1
                bias: row(&["0"]),
            },
        ]);
        assert!(chained.is_err());
    }

    #[test]
    fn quantize_value_fixtures() {
        let c42 = QuantConfig::new(Sign::Signed, 4, 2).unwrap();
        assert_eq!(quantize_value(&r("1.2345"), &c42), 5);
        assert_eq!(quantize_value(&r("0"), &c42), 0);
        let c64u = QuantConfig::new(Sign::Unsigned, 6, 4).unwrap();
        assert_eq!(quantize_value(&r("0.616"), &c64u), 10);
        assert_eq!(quantize_value(&r("0.114"), &c64u), 2);
        // Saturation at both ends.
        assert_eq!(quantize_value(&r("100"), &c64u), 63);
        assert_eq!(quantize_value(&r("-1"), &c64u), 0);
        // Negative tie rounds toward +inf: -19.68 scaled is not a tie, but
        // -1.28125 * 16 = -20.5 is.
        let c64s = QuantConfig::new(Sign::Signed, 6, 4).unwrap();
        assert_eq!(quantize_value(&r("-1.28125"), &c64s), -20);
    }

    #[test]
    fn quantize_value_is_monotone() {
        let cfg = QuantConfig::new(Sign::Signed, 5, 3).unwrap();
        let mut prev = None;
        for n in -300..300 {
            let u = BigRational::new(BigInt::from(n), BigInt::from(37));
            let q = quantize_value(&u, &cfg);
            if let Some(p) = prev {
                assert!(q >= p);
            }
            prev = Some(q);
        }
    }

    #[test]
    fn quantize_network_fixture_weights() {
        let net = running_dnn();
        let c64u = QuantConfig::new(Sign::Unsigned, 6, 4).unwrap();
        let c64s = QuantConfig::new(Sign::Signed, 6, 4).unwrap();
        let qnn = quantize_network(&net, c64u, c64s, c64s, c64u, c64u).unwrap();
        assert_eq!(qnn.layers()[0].weights, vec![vec![9, -20], vec![24, 17]]);
        assert_eq!(qnn.layers()[1].weights, vec![vec![-12, 10], vec![13, 7]]);
        assert_eq!(qnn.layers()[0].bias, vec![0, 0]);
        assert_eq!(qnn.layers()[1].bias, vec![0, 0]);
    }
}
