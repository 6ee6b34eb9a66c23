//! Network-to-ILP translation.
//!
//! Every non-input neuron is a staircase applied to the affine form of its
//! layer inputs; the staircase booleans and four rows per neuron are the only
//! integer structure the network contributes. Neurons whose interval bounds
//! collapse to a single value never become variables: the value is folded
//! into every downstream affine expression as a constant.

use crate::ilp::{IlpModel, LinExpr, Rat, VarId};
use crate::interval::{IntervalAnalysis, IntervalBound};
use crate::qnn::QuantizedNetwork;

use super::staircase::{encode_piecewise_constant, neuron_pcf};

/// A neuron as the encoder sees it: a model variable, or a value that the
/// interval bounds fixed in advance.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NeuronRef {
    Var(VarId),
    Const(i64),
}

impl NeuronRef {
    /// Adds `coef * neuron` to an affine expression.
    fn accumulate(self, expr: &mut LinExpr, coef: Rat) {
        match self {
            NeuronRef::Var(v) => {
                expr.add_term(v, coef);
            }
            NeuronRef::Const(c) => {
                expr.add_constant(&coef * &Rat::from_int(c));
            }
        }
    }
}

/// Sizes and handles produced by [`encode_network`].
pub(crate) struct NetworkEncoding {
    pub inputs: Vec<VarId>,
    pub layers: Vec<Vec<NeuronRef>>,
    /// Linear rows added.
    pub rows: usize,
    /// Piece-selector booleans added.
    pub booleans: usize,
    /// Variables added: inputs, neuron outputs and booleans.
    pub vars: usize,
    /// Neurons folded to constants.
    pub fixed: usize,
}

impl NetworkEncoding {
    pub fn outputs(&self) -> &[NeuronRef] {
        self.layers.last().expect("networks have at least one layer")
    }
}

/// Encodes the whole network over fresh input variables bounded by
/// `input_bounds`. When interval bounds are supplied, each staircase is
/// truncated to the neuron's reachable activation range and fixed neurons
/// become constants; otherwise every neuron ranges over its full clamp
/// interval.
pub(crate) fn encode_network(
    model: &mut IlpModel,
    net: &QuantizedNetwork,
    input_bounds: &[IntervalBound],
    ia: Option<&IntervalAnalysis>,
) -> NetworkEncoding {
    assert_eq!(input_bounds.len(), net.input_dim(), "input bound arity");
    if let Some(ia) = ia {
        debug_assert_eq!(ia.input, input_bounds, "interval analysis input mismatch");
    }

    let inputs: Vec<VarId> = input_bounds
        .iter()
        .enumerate()
        .map(|(i, b)| {
            model
                .add_int(format!("x{}", i + 1), b.lo, b.hi)
                .expect("input bounds are ordered")
        })
        .collect();

    let mut enc = NetworkEncoding {
        inputs: inputs.clone(),
        layers: Vec::with_capacity(net.layers().len()),
        rows: 0,
        booleans: 0,
        vars: inputs.len(),
        fixed: 0,
    };

    let mut current: Vec<NeuronRef> = inputs.into_iter().map(NeuronRef::Var).collect();
    for (t, layer) in net.layers().iter().enumerate() {
        let (e_w, e_b) = net.scale_exponents(t);
        let (clamp_lo, clamp_hi) = net.layer_range(t);
        let mut next = Vec::with_capacity(layer.weights.len());
        for (j, (row, &bias)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let range = match ia {
                Some(ia) => ia.layers[t][j].post,
                None => IntervalBound {
                    lo: clamp_lo,
                    hi: clamp_hi,
                },
            };
            if range.is_fixed() {
                enc.fixed += 1;
                next.push(NeuronRef::Const(range.lo));
                continue;
            }

            let mut affine = LinExpr::new();
            for (&w, &input) in row.iter().zip(&current) {
                if w != 0 {
                    input.accumulate(&mut affine, &Rat::pow2(e_w) * &Rat::from_int(w));
                }
            }
            affine.add_constant(&Rat::pow2(e_b) * &Rat::from_int(bias));

            let pcf = neuron_pcf(range.lo, range.hi);
            let sv = encode_piecewise_constant(
                model,
                &pcf,
                &affine,
                &format!("y{}_{}", t + 2, j + 1),
                &format!("v{}_{}", t + 2, j + 1),
            );
            enc.rows += 4;
            enc.booleans += sv.booleans.len();
            enc.vars += 1 + sv.booleans.len();
            next.push(NeuronRef::Var(sv.output));
        }
        enc.layers.push(next.clone());
        current = next;
    }
    enc
}
