//! Exact statevector simulation of RotY/CNot circuits: gate application,
//! shot sampling, Monte Carlo Pauli noise trajectories, and Z-basis
//! expectation values.
//!
//! Bit-ordering convention, shared by every module in this workspace:
//! **qubit 0 is the leftmost character of every bitstring key**. Internally,
//! basis index `i` stores the bit of qubit `q` at position `Q - 1 - q`, so
//! the bitstring of an index is just its binary expansion read left to right.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default upper bound on statevector width. 2^26 complex amplitudes is
/// about 1 GiB, the edge of what a desk machine absorbs gracefully.
pub const DEFAULT_STATEVECTOR_CAPACITY: usize = 26;

/// Allowed deviation of the squared norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("qubit index {index} out of range for {qubits} qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("cnot control and target must differ (both {0})")]
    ControlEqualsTarget(usize),
    #[error("rotation angle must be finite")]
    NonFiniteAngle,
    #[error("qubit count must be at least 1")]
    EmptyRegister,
    #[error("{qubits} qubits exceed the statevector capacity of {limit}")]
    CapacityExceeded { qubits: usize, limit: usize },
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("histogram has no counts")]
    EmptyHistogram,
    #[error("histogram key {key:?} malformed for {qubits} qubits")]
    MalformedKey { key: String, qubits: usize },
    #[error("noise probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("amplitude vector length {got} does not match {qubits} qubits")]
    AmplitudeLengthMismatch { got: usize, qubits: usize },
    #[error("statevector norm^2 deviates from 1 by {0:.3e}")]
    NotNormalized(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type SimResult<T> = Result<T, SimError>;

/// One gate of the restricted set required by the ansatz: a Y rotation or a
/// controlled NOT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    RotY { target: usize, theta: f64 },
    CNot { control: usize, target: usize },
}

impl Gate {
    pub fn rot_y(target: usize, theta: f64) -> Self {
        Gate::RotY { target, theta }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::CNot { control, target }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::CNot { .. })
    }

    pub fn validate(&self, qubits: usize) -> SimResult<()> {
        match *self {
            Gate::RotY { target, theta } => {
                if target >= qubits {
                    return Err(SimError::IndexOutOfRange { index: target, qubits });
                }
                if !theta.is_finite() {
                    return Err(SimError::NonFiniteAngle);
                }
            }
            Gate::CNot { control, target } => {
                if control >= qubits {
                    return Err(SimError::IndexOutOfRange { index: control, qubits });
                }
                if target >= qubits {
                    return Err(SimError::IndexOutOfRange { index: target, qubits });
                }
                if control == target {
                    return Err(SimError::ControlEqualsTarget(control));
                }
            }
        }
        Ok(())
    }
}

/// An ordered gate list over a fixed register width. The executable object
/// shared by the statevector and MPS backends.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubit_count: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubit_count: usize, gates: Vec<Gate>) -> SimResult<Self> {
        if qubit_count == 0 {
            return Err(SimError::EmptyRegister);
        }
        for gate in &gates {
            gate.validate(qubit_count)?;
        }
        Ok(Circuit { qubit_count, gates })
    }

    pub fn empty(qubit_count: usize) -> SimResult<Self> {
        Circuit::new(qubit_count, Vec::new())
    }

    pub fn push(&mut self, gate: Gate) -> SimResult<()> {
        gate.validate(self.qubit_count)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn single_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_two_qubit()).count()
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// The same circuit with qubit `q` relabeled to `perm[q]`.
    pub fn relabeled(&self, perm: &[usize]) -> SimResult<Circuit> {
        validate_permutation(perm, self.qubit_count)?;
        let gates = self
            .gates
            .iter()
            .map(|g| match *g {
                Gate::RotY { target, theta } => Gate::RotY { target: perm[target], theta },
                Gate::CNot { control, target } => {
                    Gate::CNot { control: perm[control], target: perm[target] }
                }
            })
            .collect();
        Circuit::new(self.qubit_count, gates)
    }

    /// Line-oriented text form: `qubits <Q>` header, then one gate per line
    /// (`ry <q> <theta>` or `cnot <c> <t>`). `#` starts a comment.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {}\n", self.qubit_count);
        for gate in &self.gates {
            match *gate {
                Gate::RotY { target, theta } => {
                    out.push_str(&format!("ry {} {}\n", target, theta));
                }
                Gate::CNot { control, target } => {
                    out.push_str(&format!("cnot {} {}\n", control, target));
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> SimResult<Circuit> {
        let mut qubit_count: Option<usize> = None;
        let mut gates = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            let parse_err = |message: String| SimError::Parse { line: line_no, message };
            match head {
                "qubits" => {
                    let q = parts
                        .next()
                        .ok_or_else(|| parse_err("missing qubit count".into()))?
                        .parse::<usize>()
                        .map_err(|e| parse_err(format!("bad qubit count: {e}")))?;
                    qubit_count = Some(q);
                }
                "ry" => {
                    let target = parse_field(&mut parts, "target", line_no)?;
                    let theta: f64 = parts
                        .next()
                        .ok_or_else(|| parse_err("missing angle".into()))?
                        .parse()
                        .map_err(|e| parse_err(format!("bad angle: {e}")))?;
                    gates.push(Gate::RotY { target, theta });
                }
                "cnot" => {
                    let control = parse_field(&mut parts, "control", line_no)?;
                    let target = parse_field(&mut parts, "target", line_no)?;
                    gates.push(Gate::CNot { control, target });
                }
                other => {
                    return Err(parse_err(format!("unknown directive {other:?}")));
                }
            }
        }
        let qubit_count = qubit_count.ok_or(SimError::Parse {
            line: 0,
            message: "missing `qubits` header".into(),
        })?;
        Circuit::new(qubit_count, gates)
    }
}

fn parse_field(
    parts: &mut std::str::SplitWhitespace<'_>,
    what: &str,
    line: usize,
) -> SimResult<usize> {
    parts
        .next()
        .ok_or_else(|| SimError::Parse { line, message: format!("missing {what}") })?
        .parse::<usize>()
        .map_err(|e| SimError::Parse { line, message: format!("bad {what}: {e}") })
}

fn validate_permutation(perm: &[usize], qubits: usize) -> SimResult<()> {
    if perm.len() != qubits {
        return Err(SimError::AmplitudeLengthMismatch { got: perm.len(), qubits });
    }
    let mut seen = vec![false; qubits];
    for &p in perm {
        if p >= qubits {
            return Err(SimError::IndexOutOfRange { index: p, qubits });
        }
        if seen[p] {
            return Err(SimError::MalformedKey {
                key: format!("{perm:?}"),
                qubits,
            });
        }
        seen[p] = true;
    }
    Ok(())
}

/// Bitstring key of basis index `index`: qubit 0 leftmost.
pub fn bitstring(qubit_count: usize, index: usize) -> String {
    (0..qubit_count)
        .map(|q| if index >> (qubit_count - 1 - q) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Basis index of a bitstring key. Errors on wrong length or non-binary
/// characters.
pub fn index_of(key: &str, qubit_count: usize) -> SimResult<usize> {
    if key.len() != qubit_count {
        return Err(SimError::MalformedKey { key: key.to_string(), qubits: qubit_count });
    }
    let mut index = 0usize;
    for ch in key.chars() {
        index <<= 1;
        match ch {
            '0' => {}
            '1' => index |= 1,
            _ => {
                return Err(SimError::MalformedKey {
                    key: key.to_string(),
                    qubits: qubit_count,
                })
            }
        }
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_code(code: u8) -> Option<Pauli> {
        match code {
            1 => Some(Pauli::X),
            2 => Some(Pauli::Y),
            3 => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Full complex amplitude vector over `2^Q` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubit_count: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0...0⟩ on `qubit_count` qubits.
    pub fn zero_state(qubit_count: usize) -> SimResult<Self> {
        if qubit_count == 0 {
            return Err(SimError::EmptyRegister);
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << qubit_count];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { qubit_count, amplitudes })
    }

    pub fn from_amplitudes(qubit_count: usize, amplitudes: Vec<Complex64>) -> SimResult<Self> {
        if qubit_count == 0 {
            return Err(SimError::EmptyRegister);
        }
        if amplitudes.len() != 1 << qubit_count {
            return Err(SimError::AmplitudeLengthMismatch {
                got: amplitudes.len(),
                qubits: qubit_count,
            });
        }
        let state = StateVector { qubit_count, amplitudes };
        let deviation = (state.norm_sqr() - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(SimError::NotNormalized(deviation));
        }
        Ok(state)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn shift_of(&self, qubit: usize) -> usize {
        self.qubit_count - 1 - qubit
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> SimResult<()> {
        gate.validate(self.qubit_count)?;
        match *gate {
            Gate::RotY { target, theta } => self.apply_rot_y(target, theta),
            Gate::CNot { control, target } => self.apply_cnot(control, target),
        }
        Ok(())
    }

    /// RotY(θ) acts as [[cos(θ/2), −sin(θ/2)], [sin(θ/2), cos(θ/2)]].
    fn apply_rot_y(&mut self, target: usize, theta: f64) {
        let (sin, cos) = (theta / 2.0).sin_cos();
        let mask = 1usize << self.shift_of(target);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = a0 * cos - a1 * sin;
                self.amplitudes[j] = a0 * sin + a1 * cos;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = 1usize << self.shift_of(control);
        let tmask = 1usize << self.shift_of(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }

    pub(crate) fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) {
        let mask = 1usize << self.shift_of(qubit);
        match pauli {
            Pauli::X => {
                for i in 0..self.amplitudes.len() {
                    if i & mask == 0 {
                        self.amplitudes.swap(i, i | mask);
                    }
                }
            }
            Pauli::Y => {
                let im = Complex64::new(0.0, 1.0);
                for i in 0..self.amplitudes.len() {
                    if i & mask == 0 {
                        let j = i | mask;
                        let a0 = self.amplitudes[i];
                        let a1 = self.amplitudes[j];
                        self.amplitudes[i] = -im * a1;
                        self.amplitudes[j] = im * a0;
                    }
                }
            }
            Pauli::Z => {
                for i in 0..self.amplitudes.len() {
                    if i & mask != 0 {
                        self.amplitudes[i] = -self.amplitudes[i];
                    }
                }
            }
        }
    }

    /// ⟨Z⟩ on one qubit: Σ_b |a_b|² · (+1 if the bit is 0, −1 if 1).
    pub fn expectation_z(&self, qubit: usize) -> SimResult<f64> {
        if qubit >= self.qubit_count {
            return Err(SimError::IndexOutOfRange { index: qubit, qubits: self.qubit_count });
        }
        let mask = 1usize << self.shift_of(qubit);
        let mut total = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if i & mask == 0 {
                total += p;
            } else {
                total -= p;
            }
        }
        Ok(total)
    }
}

/// Map from measured bitstring to count, with its shot total.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    qubit_count: usize,
    counts: BTreeMap<String, u64>,
    total_shots: u64,
}

impl Histogram {
    pub fn from_counts(qubit_count: usize, counts: BTreeMap<String, u64>) -> SimResult<Self> {
        if qubit_count == 0 {
            return Err(SimError::EmptyRegister);
        }
        let mut total = 0u64;
        for (key, &count) in &counts {
            index_of(key, qubit_count)?;
            total += count;
        }
        if total == 0 {
            return Err(SimError::EmptyHistogram);
        }
        Ok(Histogram { qubit_count, counts, total_shots: total })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// Per-bitstring relative frequencies; sums to 1.
    pub fn frequencies(&self) -> BTreeMap<String, f64> {
        let total = self.total_shots as f64;
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / total))
            .collect()
    }

    /// ⟨Z⟩ estimate from counts: (N₀ − N₁) / total on the given qubit.
    pub fn expectation_z(&self, qubit: usize) -> SimResult<f64> {
        if self.counts.is_empty() {
            return Err(SimError::EmptyHistogram);
        }
        if qubit >= self.qubit_count {
            return Err(SimError::IndexOutOfRange { index: qubit, qubits: self.qubit_count });
        }
        let mut zeros = 0i64;
        let mut ones = 0i64;
        for (key, &count) in &self.counts {
            if key.as_bytes()[qubit] == b'0' {
                zeros += count as i64;
            } else {
                ones += count as i64;
            }
        }
        Ok((zeros - ones) as f64 / self.total_shots as f64)
    }

    /// Text form: `shots <N>` header, then `bitstring count` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("shots {}\n", self.total_shots);
        for (key, count) in &self.counts {
            out.push_str(&format!("{key} {count}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> SimResult<Histogram> {
        let mut declared: Option<u64> = None;
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut qubits: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            if head == "shots" {
                let n = parts
                    .next()
                    .ok_or(SimError::Parse { line: line_no, message: "missing shot total".into() })?
                    .parse::<u64>()
                    .map_err(|e| SimError::Parse {
                        line: line_no,
                        message: format!("bad shot total: {e}"),
                    })?;
                declared = Some(n);
                continue;
            }
            let count = parts
                .next()
                .ok_or(SimError::Parse { line: line_no, message: "missing count".into() })?
                .parse::<u64>()
                .map_err(|e| SimError::Parse { line: line_no, message: format!("bad count: {e}") })?;
            if let Some(q) = qubits {
                if head.len() != q {
                    return Err(SimError::MalformedKey { key: head.to_string(), qubits: q });
                }
            } else {
                qubits = Some(head.len());
            }
            *counts.entry(head.to_string()).or_insert(0) += count;
        }
        let qubits = qubits.ok_or(SimError::EmptyHistogram)?;
        let hist = Histogram::from_counts(qubits, counts)?;
        if let Some(n) = declared {
            if n != hist.total_shots {
                return Err(SimError::Parse {
                    line: 0,
                    message: format!(
                        "declared shot total {n} does not match counted {}",
                        hist.total_shots
                    ),
                });
            }
        }
        Ok(hist)
    }
}

/// Depolarizing and readout error rates for the Monte Carlo noise model.
/// The defaults are plausible trapped-ion-class magnitudes; they are
/// configuration values, not measured device numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Depolarizing probability after each single-qubit gate.
    pub p1: f64,
    /// Depolarizing probability after each two-qubit gate.
    pub p2: f64,
    /// Readout bit-flip probability per measured qubit.
    pub p_ro: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams { p1: 2e-4, p2: 5e-3, p_ro: 5e-3 }
    }
}

impl NoiseParams {
    pub fn zero() -> Self {
        NoiseParams { p1: 0.0, p2: 0.0, p_ro: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_ro == 0.0
    }

    pub fn validate(&self) -> SimResult<()> {
        for p in [self.p1, self.p2, self.p_ro] {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(SimError::InvalidProbability(p));
            }
        }
        Ok(())
    }
}

/// Run a circuit on |0...0⟩ with the default capacity guard.
pub fn run_statevector(circuit: &Circuit) -> SimResult<StateVector> {
    run_statevector_with_capacity(circuit, DEFAULT_STATEVECTOR_CAPACITY)
}

pub fn run_statevector_with_capacity(
    circuit: &Circuit,
    max_qubits: usize,
) -> SimResult<StateVector> {
    if circuit.qubit_count() > max_qubits {
        return Err(SimError::CapacityExceeded {
            qubits: circuit.qubit_count(),
            limit: max_qubits,
        });
    }
    let mut state = StateVector::zero_state(circuit.qubit_count())?;
    for gate in circuit.gates() {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Draw `shots` i.i.d. bitstrings from |a_b|². Deterministic for a fixed
/// seed.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> SimResult<Histogram> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let probs = state.probabilities();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(probs.len() - 1);
        *by_index.entry(idx).or_insert(0) += 1;
    }
    let counts = by_index
        .into_iter()
        .map(|(i, c)| (bitstring(state.qubit_count(), i), c))
        .collect();
    Histogram::from_counts(state.qubit_count(), counts)
}

// Per-shot error plan: Pauli insertions after specific gate positions.
enum Insertion {
    Single { qubit: usize, pauli: Pauli },
    Pair { control: usize, control_pauli: Option<Pauli>, target: usize, target_pauli: Option<Pauli> },
}

/// Monte Carlo trajectory simulation: after each single-qubit (two-qubit)
/// gate a uniformly random non-identity Pauli is inserted on the affected
/// qubit(s) with probability `p1` (`p2`); before readout each measured bit
/// flips with probability `p_ro`. Deterministic for a fixed seed. With all
/// rates zero this is exactly `sample` over `run_statevector`.
pub fn run_noisy(
    circuit: &Circuit,
    noise: &NoiseParams,
    shots: u64,
    seed: u64,
) -> SimResult<Histogram> {
    noise.validate()?;
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let clean = run_statevector(circuit)?;
    if noise.is_zero() {
        return sample(&clean, shots, seed);
    }

    let qubits = circuit.qubit_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    let mut insertions: Vec<(usize, Insertion)> = Vec::new();

    for _ in 0..shots {
        insertions.clear();
        for (gi, gate) in circuit.gates().iter().enumerate() {
            match *gate {
                Gate::RotY { target, .. } => {
                    if noise.p1 > 0.0 && rng.gen::<f64>() < noise.p1 {
                        let pauli = Pauli::from_code(rng.gen_range(1u8..4)).unwrap();
                        insertions.push((gi, Insertion::Single { qubit: target, pauli }));
                    }
                }
                Gate::CNot { control, target } => {
                    if noise.p2 > 0.0 && rng.gen::<f64>() < noise.p2 {
                        // Uniform over the 15 non-identity two-qubit Paulis.
                        let k = rng.gen_range(1u8..16);
                        insertions.push((
                            gi,
                            Insertion::Pair {
                                control,
                                control_pauli: Pauli::from_code(k / 4),
                                target,
                                target_pauli: Pauli::from_code(k % 4),
                            },
                        ));
                    }
                }
            }
        }

        let trajectory_state;
        let measured_state: &StateVector = if insertions.is_empty() {
            &clean
        } else {
            let mut state = StateVector::zero_state(qubits)?;
            let mut next = 0usize;
            for (gi, gate) in circuit.gates().iter().enumerate() {
                state.apply_gate(gate)?;
                while next < insertions.len() && insertions[next].0 == gi {
                    match insertions[next].1 {
                        Insertion::Single { qubit, pauli } => state.apply_pauli(qubit, pauli),
                        Insertion::Pair { control, control_pauli, target, target_pauli } => {
                            if let Some(p) = control_pauli {
                                state.apply_pauli(control, p);
                            }
                            if let Some(p) = target_pauli {
                                state.apply_pauli(target, p);
                            }
                        }
                    }
                    next += 1;
                }
            }
            trajectory_state = state;
            &trajectory_state
        };

        let u: f64 = rng.gen();
        let mut idx = draw_index(measured_state.amplitudes(), u);
        if noise.p_ro > 0.0 {
            for q in 0..qubits {
                if rng.gen::<f64>() < noise.p_ro {
                    idx ^= 1usize << (qubits - 1 - q);
                }
            }
        }
        *by_index.entry(idx).or_insert(0) += 1;
    }

    let counts = by_index
        .into_iter()
        .map(|(i, c)| (bitstring(qubits, i), c))
        .collect();
    Histogram::from_counts(qubits, counts)
}

fn draw_index(amplitudes: &[Complex64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, a) in amplitudes.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            return i;
        }
    }
    amplitudes.len() - 1
}

/// ⟨Z⟩ estimate from a histogram. Free-function alias for
/// [`Histogram::expectation_z`].
pub fn z_from_histogram(hist: &Histogram, qubit: usize) -> SimResult<f64> {
    hist.expectation_z(qubit)
}
