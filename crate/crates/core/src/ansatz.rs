//! Deterministic construction of the data re-uploading classifier circuit
//! and its gate accounting.
//!
//! The circuit has `M` main blocks of `R` re-upload units each. A re-upload
//! unit encodes the feature vector as one RotY per qubit, then applies an
//! entangling layer: a cyclic stride-2 CNOT ladder on one parity class
//! (Q/2 gates) followed by one trainable RotY per qubit. Ladder parity
//! alternates even/odd across successive entangling layers. The final
//! re-upload unit of the last main block keeps its trainable rotations but
//! omits its ladder, and the circuit closes with `N` rotation-only trainable
//! layers. Under the defaults (R=4, M=2, N=1) this yields exactly
//! `7·Q/2` two-qubit gates: 35, 42, 49, 56, 63 for Q = 10, 12, 14, 16, 18.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{Circuit, Gate, SimError};

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("qubit count must be even and at least 4 (got {0})")]
    InvalidQubitCount(usize),
    #[error("{0} must be at least 1")]
    ZeroBlockCount(&'static str),
    #[error("feature vector length {got} exceeds qubit count {qubits}")]
    TooManyFeatures { got: usize, qubits: usize },
    #[error("feature {0} is not finite")]
    NonFiniteFeature(usize),
    #[error("parameter vector length {got}, expected {expected}")]
    ParamLengthMismatch { got: usize, expected: usize },
    #[error("parameter {0} is not finite")]
    NonFiniteParam(usize),
    #[error("shot schedule is undefined below 10 qubits (got {0}); use an explicit shot count")]
    ShotsBelowTable(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type AnsatzResult<T> = Result<T, AnsatzError>;

/// Circuit hyperparameters. Serialized field names follow the symbols used
/// in experiment manifests: Q, E, R, M, N, B, S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    /// Qubit count; even and ≥ 4 (the stride-2 parity ladders need it).
    #[serde(rename = "Q")]
    pub qubits: usize,
    /// Number of encoders. Fixed at 1 in this architecture.
    #[serde(rename = "E", default = "default_encoders")]
    pub encoders: usize,
    /// Re-uploads per main block.
    #[serde(rename = "R", default = "default_reuploads")]
    pub reuploads: usize,
    /// Main blocks.
    #[serde(rename = "M", default = "default_main_blocks")]
    pub main_blocks: usize,
    /// Final rotation-only trainable layers.
    #[serde(rename = "N", default = "default_final_blocks")]
    pub final_blocks: usize,
    /// Training batch size.
    #[serde(rename = "B", default = "default_batch_size")]
    pub batch_size: usize,
    /// Default shot budget per circuit.
    #[serde(rename = "S", default = "default_shots")]
    pub shots: u64,
}

fn default_encoders() -> usize {
    1
}
fn default_reuploads() -> usize {
    4
}
fn default_main_blocks() -> usize {
    2
}
fn default_final_blocks() -> usize {
    1
}
fn default_batch_size() -> usize {
    16
}
fn default_shots() -> u64 {
    600
}

impl AnsatzConfig {
    /// Defaults (E=1, R=4, M=2, N=1, B=16, S=600) at the given width.
    pub fn with_qubits(qubits: usize) -> Self {
        AnsatzConfig {
            qubits,
            encoders: default_encoders(),
            reuploads: default_reuploads(),
            main_blocks: default_main_blocks(),
            final_blocks: default_final_blocks(),
            batch_size: default_batch_size(),
            shots: default_shots(),
        }
    }

    pub fn validate(&self) -> AnsatzResult<()> {
        if self.qubits < 4 || self.qubits % 2 != 0 {
            return Err(AnsatzError::InvalidQubitCount(self.qubits));
        }
        if self.encoders == 0 {
            return Err(AnsatzError::ZeroBlockCount("encoder count"));
        }
        if self.reuploads == 0 {
            return Err(AnsatzError::ZeroBlockCount("re-upload count"));
        }
        if self.main_blocks == 0 {
            return Err(AnsatzError::ZeroBlockCount("main block count"));
        }
        if self.final_blocks == 0 {
            return Err(AnsatzError::ZeroBlockCount("final block count"));
        }
        Ok(())
    }

    /// Number of re-upload units, i.e. how many times the feature vector is
    /// encoded into the circuit.
    pub fn reupload_count(&self) -> usize {
        self.main_blocks * self.reuploads
    }

    /// Trainable rotation layers: one per re-upload unit plus the N final
    /// layers.
    pub fn trainable_layer_count(&self) -> usize {
        self.reupload_count() + self.final_blocks
    }

    pub fn trainable_param_count(&self) -> usize {
        self.trainable_layer_count() * self.qubits
    }

    /// Structural layer count (encoding layers + ladders + trainable
    /// rotation layers). Independent of Q at fixed (R, M, N).
    pub fn layer_count(&self) -> usize {
        let units = self.reupload_count();
        units * 2 + (units - 1) + self.final_blocks
    }
}

/// Ordered trainable rotation angles, layer-major then qubit-major:
/// parameter `l·Q + q` drives the trainable RotY on qubit `q` of layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn new(config: &AnsatzConfig, values: Vec<f64>) -> AnsatzResult<Self> {
        let expected = config.trainable_param_count();
        if values.len() != expected {
            return Err(AnsatzError::ParamLengthMismatch { got: values.len(), expected });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(AnsatzError::NonFiniteParam(i));
            }
        }
        Ok(ParamVector { values })
    }

    pub fn zeros(config: &AnsatzConfig) -> Self {
        ParamVector { values: vec![0.0; config.trainable_param_count()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Where each angle lives in the built gate list, for parameter-shift
/// differentiation without rebuilding circuits.
#[derive(Debug, Clone)]
pub struct CircuitLayout {
    /// `encoding_positions[q]` lists the gate indices of every encoding
    /// rotation carrying feature `q` (one per re-upload unit).
    pub encoding_positions: Vec<Vec<usize>>,
    /// `trainable_positions[j]` is the gate index of trainable parameter `j`.
    pub trainable_positions: Vec<usize>,
}

/// Gate totals of one built circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub single_qubit: usize,
    pub two_qubit: usize,
}

/// Build the circuit for one feature vector. Features shorter than Q are
/// zero-padded; longer ones are rejected.
pub fn build_circuit(
    config: &AnsatzConfig,
    features: &[f64],
    params: &ParamVector,
) -> AnsatzResult<Circuit> {
    build_circuit_with_layout(config, features, params).map(|(c, _)| c)
}

/// As [`build_circuit`], also returning the gate positions of every angle.
pub fn build_circuit_with_layout(
    config: &AnsatzConfig,
    features: &[f64],
    params: &ParamVector,
) -> AnsatzResult<(Circuit, CircuitLayout)> {
    config.validate()?;
    let q = config.qubits;
    if features.len() > q {
        return Err(AnsatzError::TooManyFeatures { got: features.len(), qubits: q });
    }
    for (i, f) in features.iter().enumerate() {
        if !f.is_finite() {
            return Err(AnsatzError::NonFiniteFeature(i));
        }
    }
    if params.len() != config.trainable_param_count() {
        return Err(AnsatzError::ParamLengthMismatch {
            got: params.len(),
            expected: config.trainable_param_count(),
        });
    }

    let mut angles = vec![0.0; q];
    angles[..features.len()].copy_from_slice(features);

    let mut gates = Vec::new();
    let mut encoding_positions: Vec<Vec<usize>> = vec![Vec::new(); q];
    let mut trainable_positions = Vec::with_capacity(params.len());
    let mut ladder_index = 0usize;
    let mut layer = 0usize;

    for m in 0..config.main_blocks {
        for r in 0..config.reuploads {
            for (qubit, &angle) in angles.iter().enumerate() {
                encoding_positions[qubit].push(gates.len());
                gates.push(Gate::rot_y(qubit, angle));
            }
            let last_unit = m + 1 == config.main_blocks && r + 1 == config.reuploads;
            if !last_unit {
                let parity = ladder_index % 2;
                for i in (parity..q).step_by(2) {
                    gates.push(Gate::cnot(i, (i + 2) % q));
                }
                ladder_index += 1;
            }
            for qubit in 0..q {
                trainable_positions.push(gates.len());
                gates.push(Gate::rot_y(qubit, params.values()[layer * q + qubit]));
            }
            layer += 1;
        }
    }
    for _ in 0..config.final_blocks {
        for qubit in 0..q {
            trainable_positions.push(gates.len());
            gates.push(Gate::rot_y(qubit, params.values()[layer * q + qubit]));
        }
        layer += 1;
    }

    let circuit = Circuit::new(q, gates)?;
    Ok((circuit, CircuitLayout { encoding_positions, trainable_positions }))
}

/// Closed-form gate totals. Always equals a direct scan of
/// [`build_circuit`] output.
pub fn count_gates(config: &AnsatzConfig) -> AnsatzResult<GateCounts> {
    config.validate()?;
    let q = config.qubits;
    let units = config.reupload_count();
    let single_qubit = units * q + config.trainable_layer_count() * q;
    let two_qubit = (units - 1) * q / 2;
    Ok(GateCounts { single_qubit, two_qubit })
}

/// Shot schedule versus qubit count. Tabulated for Q ∈ {10, 12, 14, 16, 18}
/// as {500, 1000, 2000, 5000, 20000}; other widths ≥ 10 are filled in by
/// geometric (log-linear) interpolation, or extrapolation of the last table
/// segment, rounded to a multiple of 25. Below 10 qubits the schedule is
/// undefined and callers must pass an explicit shot count instead.
pub fn shots_for(qubits: usize) -> AnsatzResult<u64> {
    const TABLE: [(usize, u64); 5] = [(10, 500), (12, 1000), (14, 2000), (16, 5000), (18, 20000)];
    if qubits < TABLE[0].0 {
        return Err(AnsatzError::ShotsBelowTable(qubits));
    }
    if let Some(&(_, shots)) = TABLE.iter().find(|(q, _)| *q == qubits) {
        return Ok(shots);
    }
    let ln_shots = if qubits > TABLE[TABLE.len() - 1].0 {
        let (q_lo, s_lo) = TABLE[TABLE.len() - 2];
        let (q_hi, s_hi) = TABLE[TABLE.len() - 1];
        let rate = ((s_hi as f64).ln() - (s_lo as f64).ln()) / (q_hi - q_lo) as f64;
        (s_hi as f64).ln() + rate * (qubits - q_hi) as f64
    } else {
        let (q_lo, s_lo) = *TABLE.iter().rev().find(|(q, _)| *q < qubits).unwrap();
        let (q_hi, s_hi) = *TABLE.iter().find(|(q, _)| *q > qubits).unwrap();
        let frac = (qubits - q_lo) as f64 / (q_hi - q_lo) as f64;
        (s_lo as f64).ln() + frac * ((s_hi as f64).ln() - (s_lo as f64).ln())
    };
    let raw = ln_shots.exp();
    let rounded = (raw / 25.0).round().max(1.0) * 25.0;
    Ok(rounded as u64)
}
