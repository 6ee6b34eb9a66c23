//! Reduction of robustness questions to integer feasibility.
//!
//! The verification model for a network, an input region and a property is
//! the conjunction of three parts built over one [`IlpModel`]:
//!
//! * network rows: one truncated staircase per non-input neuron, applied
//!   directly to the neuron's affine form ([`network`]);
//! * region rows: the per-coordinate projection lands in the input variable
//!   bounds, plus coupling rows where the box is not exact ([`region`]);
//! * property rows: selector booleans for the ways robustness can fail
//!   ([`property`]).
//!
//! The model is satisfiable exactly at the encodings of adversarial inputs,
//! so robustness is the infeasibility of this model. Interval bounds keep
//! the encoding small: each staircase needs one boolean per reachable value,
//! which is what makes the whole reduction tractable.

mod network;
mod property;
mod region;
mod staircase;

pub use network::NeuronRef;
pub use property::PropertySpec;
pub use region::{InputRegionSpec, Norm};
pub use staircase::{
    encode_piecewise_constant, neuron_pcf, Breakpoint, PiecewiseConstant, StaircaseError,
    StaircaseVars,
};

use thiserror::Error;

use crate::ilp::IlpModel;
use crate::interval;
use crate::qnn::{qnn_forward, ModelError, QuantizedNetwork};

use network::encode_network;
use property::{encode_misclassification, encode_output_difference, PropertyEncoding};
use region::encode_input_region;

/// Largest L2 radius whose square fits the quadratic row bound.
const MAX_L2_RADIUS: i64 = 3_037_000_499;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("region center has {got} coordinates, the network takes {expected}")]
    CenterArity { expected: usize, got: usize },
    #[error("center coordinate {index} is {value}, outside the input grid [{lo}, {hi}]")]
    CenterOffGrid {
        index: usize,
        value: i64,
        lo: i64,
        hi: i64,
    },
    #[error("region radius {0} is negative")]
    NegativeRadius(i64),
    #[error("l2 radius {0} exceeds the largest encodable value {MAX_L2_RADIUS}")]
    RadiusTooLarge(i64),
    #[error("target class {target} is out of range 1..={outputs}")]
    BadTarget { target: usize, outputs: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Variable and row counts of one verification model, split by origin.
#[derive(Clone, Copy, Default, Debug)]
pub struct EncodingCounts {
    pub network_rows: usize,
    /// Inputs, neuron outputs and piece-selector booleans.
    pub network_vars: usize,
    pub network_booleans: usize,
    /// Neurons folded to constants by interval bounds.
    pub fixed_neurons: usize,
    pub region_rows: usize,
    pub region_vars: usize,
    pub region_booleans: usize,
    pub region_quadratics: usize,
    pub property_rows: usize,
    pub property_booleans: usize,
}

impl EncodingCounts {
    pub fn total_booleans(&self) -> usize {
        self.network_booleans + self.region_booleans + self.property_booleans
    }
}

/// A complete verification model plus the handles needed to read solutions.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub model: IlpModel,
    /// Input variables in coordinate order.
    pub inputs: Vec<crate::ilp::VarId>,
    /// Network outputs; fixed ones appear as constants.
    pub outputs: Vec<NeuronRef>,
    /// The property holds at every region point, before any solving.
    pub trivially_violated: bool,
    pub counts: EncodingCounts,
}

/// Validates a region against a network's input grid.
pub fn validate_region(net: &QuantizedNetwork, region: &InputRegionSpec) -> Result<(), EncodeError> {
    if region.center.len() != net.input_dim() {
        return Err(EncodeError::CenterArity {
            expected: net.input_dim(),
            got: region.center.len(),
        });
    }
    let cfg = net.cfg_in();
    for (index, &value) in region.center.iter().enumerate() {
        if !cfg.contains(value) {
            return Err(EncodeError::CenterOffGrid {
                index,
                value,
                lo: cfg.lb(),
                hi: cfg.ub(),
            });
        }
    }
    if region.radius < 0 {
        return Err(EncodeError::NegativeRadius(region.radius));
    }
    if region.norm == Norm::L2 && region.radius > MAX_L2_RADIUS {
        return Err(EncodeError::RadiusTooLarge(region.radius));
    }
    Ok(())
}

/// Builds the feasibility model whose solutions are exactly the adversarial
/// points: region members whose outputs violate the property. `use_ia`
/// controls whether interval bounds truncate the staircases.
pub fn build_verification_model(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    property: &PropertySpec,
    use_ia: bool,
) -> Result<Encoding, EncodeError> {
    build_model(net, region, Some(property), use_ia)
}

/// Builds the network and region rows only. Solutions are exactly the region
/// points paired with the network's outputs on them, which makes the model a
/// checkable mirror of the forward pass.
pub fn build_forward_model(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    use_ia: bool,
) -> Result<Encoding, EncodeError> {
    build_model(net, region, None, use_ia)
}

fn build_model(
    net: &QuantizedNetwork,
    region: &InputRegionSpec,
    property: Option<&PropertySpec>,
    use_ia: bool,
) -> Result<Encoding, EncodeError> {
    validate_region(net, region)?;
    if let Some(&PropertySpec::Misclassification { target }) = property {
        if target < 1 || target > net.output_dim() {
            return Err(EncodeError::BadTarget {
                target,
                outputs: net.output_dim(),
            });
        }
    }

    let input_bounds = interval::input_intervals(region, net.cfg_in());
    let ia = if use_ia {
        Some(interval::propagate(net, &input_bounds)?)
    } else {
        None
    };

    let mut model = IlpModel::new();
    let nenc = encode_network(&mut model, net, &input_bounds, ia.as_ref());
    let renc = encode_input_region(&mut model, region, &nenc.inputs);
    let outputs = nenc.outputs().to_vec();
    let penc = match property {
        None => PropertyEncoding {
            rows: 0,
            booleans: 0,
            trivial: false,
        },
        Some(PropertySpec::OutputDifference) => {
            let baseline = qnn_forward(net, &region.center)?;
            encode_output_difference(&mut model, &outputs, &baseline)
        }
        Some(&PropertySpec::Misclassification { target }) => {
            encode_misclassification(&mut model, &outputs, target)
        }
    };

    let counts = EncodingCounts {
        network_rows: nenc.rows,
        network_vars: nenc.vars,
        network_booleans: nenc.booleans,
        fixed_neurons: nenc.fixed,
        region_rows: renc.rows,
        region_vars: renc.vars,
        region_booleans: renc.booleans,
        region_quadratics: renc.quadratics,
        property_rows: penc.rows,
        property_booleans: penc.booleans,
    };

    // Size guarantees of the reduction: at most four rows per non-input
    // neuron, and at most (span + 2) variables per neuron overall, where
    // span is the widest clamp range in the network.
    let hidden = net.neuron_count() - net.input_dim();
    debug_assert!(counts.network_rows <= 4 * hidden);
    let span = (0..net.layers().len())
        .map(|t| {
            let (lo, hi) = net.layer_range(t);
            hi - lo
        })
        .max()
        .expect("networks have at least one layer") as usize;
    debug_assert!(counts.network_vars <= (span + 2) * net.neuron_count());

    Ok(Encoding {
        model,
        inputs: nenc.inputs,
        outputs,
        trivially_violated: penc.trivial,
        counts,
    })
}
