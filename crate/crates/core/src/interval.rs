//! Interval bounds for quantized networks.
//!
//! Propagates per-neuron value ranges forward through a network: each affine
//! row's extreme accumulator values come from pairing weight signs with input
//! bounds, and the rescale/round/clamp pipeline is monotone, so applying it
//! to the extremes bounds every reachable activation. The bounds feed the
//! encoder, where a neuron whose range collapses becomes a constant and the
//! rest get their staircases truncated to the reachable values.
//!
//! Everything here is exact integer arithmetic on the same semantics as the
//! forward pass, so the bounds are sound by construction: no reachable value
//! ever escapes them.

use crate::encoder::{InputRegionSpec, Norm};
use crate::qnn::{ModelError, QuantConfig, QuantizedNetwork};

/// Inclusive range of a post-activation value on the output grid.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IntervalBound {
    pub lo: i64,
    pub hi: i64,
}

impl IntervalBound {
    pub fn point(v: i64) -> IntervalBound {
        IntervalBound { lo: v, hi: v }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Number of grid values in the range.
    pub fn width(&self) -> i64 {
        self.hi - self.lo
    }
}

/// Bounds for one neuron: the rounded affine value before clamping, and the
/// final clamped activation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NeuronInterval {
    pub pre_lo: i128,
    pub pre_hi: i128,
    pub post: IntervalBound,
}

/// Per-layer bounds for a network over an input region.
#[derive(Clone, Debug)]
pub struct IntervalAnalysis {
    pub input: Vec<IntervalBound>,
    pub layers: Vec<Vec<NeuronInterval>>,
}

impl IntervalAnalysis {
    /// Bounds of the network outputs (last layer).
    pub fn output(&self) -> &[NeuronInterval] {
        self.layers.last().expect("networks have at least one layer")
    }
}

/// How a neuron's clamp behaves over the analyzed region.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NeuronState {
    /// The affine value never rises above the lower clamp edge.
    ClampedLow,
    /// The affine value never falls below the upper clamp edge.
    ClampedHigh,
    /// The activation takes a single value.
    Fixed(i64),
    /// The clamp never engages; the activation is the rounded affine value.
    Active,
    /// Some inputs clamp, some do not.
    Mixed,
}

/// Classifies a neuron against its clamp range `[clamp_lo, clamp_hi]`.
pub fn classify_neuron(n: &NeuronInterval, clamp_lo: i64, clamp_hi: i64) -> NeuronState {
    if n.pre_hi <= i128::from(clamp_lo) {
        NeuronState::ClampedLow
    } else if n.pre_lo >= i128::from(clamp_hi) {
        NeuronState::ClampedHigh
    } else if n.post.is_fixed() {
        NeuronState::Fixed(n.post.lo)
    } else if n.pre_lo >= i128::from(clamp_lo) && n.pre_hi <= i128::from(clamp_hi) {
        NeuronState::Active
    } else {
        NeuronState::Mixed
    }
}

/// Per-coordinate projection of an input region onto the input grid.
///
/// The projection is exact for every norm: radius-r balls in L1, L2 and Linf
/// all project to `[c - r, c + r]` clipped to the grid, and an L0 ball with
/// positive radius projects to the whole grid in every coordinate.
pub fn input_intervals(region: &InputRegionSpec, cfg_in: &QuantConfig) -> Vec<IntervalBound> {
    let (lb, ub) = (cfg_in.lb(), cfg_in.ub());
    region
        .center
        .iter()
        .map(|&c| {
            debug_assert!(cfg_in.contains(c));
            if region.radius == 0 {
                return IntervalBound::point(c);
            }
            match region.norm {
                Norm::L0 => IntervalBound { lo: lb, hi: ub },
                Norm::L1 | Norm::L2 | Norm::LInf => IntervalBound {
                    lo: c.saturating_sub(region.radius).max(lb),
                    hi: c.saturating_add(region.radius).min(ub),
                },
            }
        })
        .collect()
}

/// Forward interval propagation from input bounds.
pub fn propagate(
    net: &QuantizedNetwork,
    input: &[IntervalBound],
) -> Result<IntervalAnalysis, ModelError> {
    if input.len() != net.input_dim() {
        return Err(ModelError::InputArity {
            expected: net.input_dim(),
            got: input.len(),
        });
    }
    let mut layers = Vec::with_capacity(net.layers().len());
    let mut current: Vec<IntervalBound> = input.to_vec();
    for (t, layer) in net.layers().iter().enumerate() {
        let (e_w, e_b) = net.scale_exponents(t);
        let (clamp_lo, clamp_hi) = net.layer_range(t);
        let mut row_bounds = Vec::with_capacity(layer.weights.len());
        for (row, &bias) in layer.weights.iter().zip(&layer.bias) {
            let mut acc_lo: i128 = 0;
            let mut acc_hi: i128 = 0;
            for (w, b) in row.iter().zip(&current) {
                let w = i128::from(*w);
                let (term_lo, term_hi) = if w >= 0 {
                    (w * i128::from(b.lo), w * i128::from(b.hi))
                } else {
                    (w * i128::from(b.hi), w * i128::from(b.lo))
                };
                acc_lo = acc_lo.checked_add(term_lo).ok_or(ModelError::Overflow)?;
                acc_hi = acc_hi.checked_add(term_hi).ok_or(ModelError::Overflow)?;
            }
            // Rescale, round and clamp are all monotone, so the accumulator
            // extremes map to activation extremes.
            let pre_lo = crate::qnn::eval_rounded_unclamped(acc_lo, bias, e_w, e_b)?;
            let pre_hi = crate::qnn::eval_rounded_unclamped(acc_hi, bias, e_w, e_b)?;
            debug_assert!(pre_lo <= pre_hi);
            let post = IntervalBound {
                lo: pre_lo.clamp(i128::from(clamp_lo), i128::from(clamp_hi)) as i64,
                hi: pre_hi.clamp(i128::from(clamp_lo), i128::from(clamp_hi)) as i64,
            };
            row_bounds.push(NeuronInterval {
                pre_lo,
                pre_hi,
                post,
            });
        }
        current = row_bounds.iter().map(|n| n.post).collect();
        layers.push(row_bounds);
    }
    Ok(IntervalAnalysis {
        input: input.to_vec(),
        layers,
    })
}

/// Convenience: project the region, then propagate.
pub fn analyze(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
) -> Result<IntervalAnalysis, ModelError> {
    let input = input_intervals(region, net.cfg_in());
    propagate(net, &input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::{qnn_forward_layers, QuantizedLayer, QuantizedNetwork, Sign};

    fn running_qnn() -> QuantizedNetwork {
        crate::qnn::test_fixtures::running_qnn()
    }

    fn region(center: &[i64], radius: i64, norm: Norm) -> InputRegionSpec {
        InputRegionSpec {
            center: center.to_vec(),
            radius,
            norm,
        }
    }

    #[test]
    fn projection_covers_each_norm() {
        let cfg = QuantConfig::new(Sign::Unsigned, 6, 4).unwrap();
        let r = region(&[10, 2], 4, Norm::LInf);
        assert_eq!(
            input_intervals(&r, &cfg),
            vec![IntervalBound { lo: 6, hi: 14 }, IntervalBound { lo: 0, hi: 6 }]
        );
        // Clipping at the grid edge.
        let r = region(&[62, 1], 4, Norm::L1);
        assert_eq!(
            input_intervals(&r, &cfg),
            vec![IntervalBound { lo: 58, hi: 63 }, IntervalBound { lo: 0, hi: 5 }]
        );
        // L0 with any positive radius frees the whole grid.
        let r = region(&[10, 2], 1, Norm::L0);
        assert_eq!(
            input_intervals(&r, &cfg),
            vec![IntervalBound { lo: 0, hi: 63 }, IntervalBound { lo: 0, hi: 63 }]
        );
        // Radius zero pins the center regardless of norm.
        let r = region(&[10, 2], 0, Norm::L0);
        assert_eq!(
            input_intervals(&r, &cfg),
            vec![IntervalBound::point(10), IntervalBound::point(2)]
        );
    }

    #[test]
    fn fixture_bounds_match_hand_calculation() {
        let net = running_qnn();
        let input = vec![IntervalBound { lo: 6, hi: 14 }, IntervalBound { lo: 0, hi: 6 }];
        let ia = propagate(&net, &input).unwrap();
        assert_eq!(ia.layers[0][0].post, IntervalBound { lo: 0, hi: 8 });
        assert_eq!(ia.layers[0][1].post, IntervalBound { lo: 9, hi: 27 });
        assert_eq!(ia.layers[1][0].post, IntervalBound { lo: 0, hi: 17 });
        assert_eq!(ia.layers[1][1].post, IntervalBound { lo: 4, hi: 18 });
    }

    #[test]
    fn point_region_reproduces_forward_pass() {
        let net = running_qnn();
        let r = region(&[10, 2], 0, Norm::LInf);
        let ia = analyze(&net, &r).unwrap();
        let fwd = qnn_forward_layers(&net, &[10, 2]).unwrap();
        for (bounds, values) in ia.layers.iter().zip(&fwd) {
            for (b, &v) in bounds.iter().zip(values) {
                assert_eq!(b.post, IntervalBound::point(v));
            }
        }
    }

    #[test]
    fn bounds_are_sound_for_every_point_in_a_box() {
        let net = running_qnn();
        let input = vec![IntervalBound { lo: 6, hi: 14 }, IntervalBound { lo: 0, hi: 6 }];
        let ia = propagate(&net, &input).unwrap();
        for a in 6..=14 {
            for b in 0..=6 {
                let fwd = qnn_forward_layers(&net, &[a, b]).unwrap();
                for (bounds, values) in ia.layers.iter().zip(&fwd) {
                    for (iv, &v) in bounds.iter().zip(values) {
                        assert!(iv.post.contains(v), "({a},{b}): {v} outside {iv:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn neuron_states_cover_all_arms() {
        let mk = |pre_lo: i128, pre_hi: i128, post_lo: i64, post_hi: i64| NeuronInterval {
            pre_lo,
            pre_hi,
            post: IntervalBound {
                lo: post_lo,
                hi: post_hi,
            },
        };
        assert_eq!(classify_neuron(&mk(-9, -2, 0, 0), 0, 63), NeuronState::ClampedLow);
        assert_eq!(classify_neuron(&mk(70, 80, 63, 63), 0, 63), NeuronState::ClampedHigh);
        assert_eq!(classify_neuron(&mk(5, 5, 5, 5), 0, 63), NeuronState::Fixed(5));
        assert_eq!(classify_neuron(&mk(3, 9, 3, 9), 0, 63), NeuronState::Active);
        assert_eq!(classify_neuron(&mk(-4, 9, 0, 9), 0, 63), NeuronState::Mixed);
    }

    #[test]
    fn zero_weight_layer_collapses_to_bias() {
        // A layer of zero weights fixes every neuron at its rescaled bias.
        let cfg_u = QuantConfig::new(Sign::Unsigned, 6, 4).unwrap();
        let cfg_s = QuantConfig::new(Sign::Signed, 6, 4).unwrap();
        let cfg_b = QuantConfig::new(Sign::Signed, 6, 2).unwrap();
        let net = QuantizedNetwork::new(
            vec![QuantizedLayer {
                weights: vec![vec![0, 0]],
                bias: vec![16],
            }],
            cfg_u,
            cfg_s,
            cfg_b,
            cfg_u,
            cfg_s,
        )
        .unwrap();
        let input = vec![IntervalBound { lo: 0, hi: 63 }, IntervalBound { lo: 0, hi: 63 }];
        let ia = propagate(&net, &input).unwrap();
        // bias 16 at F_b = 2 against F_out = 4: value 64, clamped to the
        // signed grid top at 31.
        assert_eq!(ia.layers[0][0].post, IntervalBound::point(31));
        assert_eq!(
            classify_neuron(&ia.layers[0][0], net.cfg_out_last().lb(), net.cfg_out_last().ub()),
            NeuronState::ClampedHigh
        );
    }
}
