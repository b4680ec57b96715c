//! Qubit-assignment debiasing and post-processing: variant generation,
//! histogram remapping, mean and non-linear aggregation, bias correction,
//! and the classification rule.
//!
//! A logical circuit is executed as `V` equivalent variants (default 25),
//! each with the logical qubits relabeled by a distinct permutation, so that
//! assignment-dependent error profiles average out once the measured
//! bitstrings are remapped back to logical order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{Circuit, Histogram, SimError};

/// Default number of circuit variants.
pub const DEFAULT_VARIANT_COUNT: usize = 25;

/// Below this total shot budget across all variants the symmetrization is
/// known to be impractical; aggregation warns but proceeds.
pub const PRACTICAL_SHOT_FLOOR: u64 = 500;

#[derive(Debug, Error)]
pub enum MitigationError {
    #[error("variant count must be at least 1")]
    ZeroVariants,
    #[error("{requested} variants exceed the {available} distinct permutations of {qubits} qubits")]
    VariantCountExceedsPermutations { requested: usize, available: u64, qubits: usize },
    #[error("histogram list is empty")]
    EmptyHistogramList,
    #[error("histograms disagree on qubit count")]
    QubitCountMismatch,
    #[error("filter threshold {t} exceeds variant count {variants}")]
    ThresholdExceedsVariants { t: usize, variants: usize },
    #[error("filter exponent must be finite and non-negative (got {0})")]
    InvalidExponent(f64),
    #[error("filter discarded every bitstring; no distribution can be formed")]
    DegenerateFilter,
    #[error("logit set is empty")]
    EmptyLogits,
    #[error("logit {value} at position {index} outside [-1, 1]")]
    LogitOutOfRange { index: usize, value: f64 },
    #[error("sample ids and logits have different lengths")]
    LogitLengthMismatch,
    #[error("candidate grid is empty")]
    EmptyGrid,
    #[error("got {labels} labels for {samples} samples")]
    LabelMismatch { labels: usize, samples: usize },
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bundle manifest error: {0}")]
    Manifest(#[from] serde_json::Error),
}

pub type MitigationResult<T> = Result<T, MitigationError>;

/// A bitstring → probability map. Sums to 1 within 1e-12.
pub type Distribution = BTreeMap<String, f64>;

/// A logical circuit together with its qubit-permutation variants.
/// Permutation 0 is always the identity; variant `k` is the base circuit
/// with qubit `q` relabeled to `permutations[k][q]`.
#[derive(Debug, Clone)]
pub struct VariantSet {
    base: Circuit,
    permutations: Vec<Vec<usize>>,
    circuits: Vec<Circuit>,
}

impl VariantSet {
    pub fn base(&self) -> &Circuit {
        &self.base
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }
}

fn permutation_capacity(qubits: usize) -> u64 {
    // Saturating factorial; anything past u64::MAX is effectively unlimited.
    let mut total: u64 = 1;
    for k in 2..=qubits as u64 {
        total = match total.checked_mul(k) {
            Some(v) => v,
            None => return u64::MAX,
        };
    }
    total
}

/// Generate `variant_count` distinct qubit permutations of a circuit:
/// identity first, the rest seeded-random without repetition.
pub fn generate_variants(
    circuit: &Circuit,
    variant_count: usize,
    seed: u64,
) -> MitigationResult<VariantSet> {
    if variant_count == 0 {
        return Err(MitigationError::ZeroVariants);
    }
    let qubits = circuit.qubit_count();
    let available = permutation_capacity(qubits);
    if variant_count as u64 > available {
        return Err(MitigationError::VariantCountExceedsPermutations {
            requested: variant_count,
            available,
            qubits,
        });
    }

    let identity: Vec<usize> = (0..qubits).collect();
    let mut permutations = vec![identity.clone()];
    let mut seen: std::collections::HashSet<Vec<usize>> = permutations.iter().cloned().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while permutations.len() < variant_count {
        let mut candidate = identity.clone();
        candidate.shuffle(&mut rng);
        if seen.insert(candidate.clone()) {
            permutations.push(candidate);
        }
    }

    let circuits = permutations
        .iter()
        .map(|perm| circuit.relabeled(perm))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VariantSet { base: circuit.clone(), permutations, circuits })
}

/// Undo a variant's qubit relabeling on a measured histogram: the bit at
/// physical position `perm[q]` moves back to logical position `q`.
pub fn remap_histogram(hist: &Histogram, perm: &[usize]) -> MitigationResult<Histogram> {
    let qubits = hist.qubit_count();
    if perm.len() != qubits || perm.iter().any(|&p| p >= qubits) {
        return Err(MitigationError::Sim(SimError::MalformedKey {
            key: format!("{perm:?}"),
            qubits,
        }));
    }
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (key, &count) in hist.counts() {
        let bytes = key.as_bytes();
        let logical: String = (0..qubits).map(|q| bytes[perm[q]] as char).collect();
        *counts.entry(logical).or_insert(0) += count;
    }
    Ok(Histogram::from_counts(qubits, counts)?)
}

fn check_uniform_qubits(histograms: &[Histogram]) -> MitigationResult<usize> {
    let first = histograms.first().ok_or(MitigationError::EmptyHistogramList)?;
    let qubits = first.qubit_count();
    if histograms.iter().any(|h| h.qubit_count() != qubits) {
        return Err(MitigationError::QubitCountMismatch);
    }
    Ok(qubits)
}

/// Mean of per-variant relative frequencies, bitstring by bitstring.
pub fn aggregate_mean(histograms: &[Histogram]) -> MitigationResult<Distribution> {
    check_uniform_qubits(histograms)?;
    let variants = histograms.len() as f64;
    let mut sums: BTreeMap<String, f64> = BTreeMap::new();
    for hist in histograms {
        for (key, freq) in hist.frequencies() {
            *sums.entry(key).or_insert(0.0) += freq;
        }
    }
    Ok(sums.into_iter().map(|(k, s)| (k, s / variants)).collect())
}

/// Power-law aggregation filter parameters: exponent `p ≥ 0` and support
/// threshold `t` (variants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub p: f64,
    pub t: usize,
}

impl FilterParams {
    /// p = 0, t = 0 reduces the filter to simple averaging.
    pub fn mean_equivalent() -> Self {
        FilterParams { p: 0.0, t: 0 }
    }
}

/// Weighted area under the transposed survival curve of one bitstring:
/// Σ_v W(v)·f_(v) over frequencies sorted descending, with
/// W(v) = (v/V)^p. Ranks are 1-based, so the largest frequency carries the
/// smallest weight and concentration in few variants is suppressed.
pub(crate) fn power_law_score(freqs_sorted_desc: &[f64], variant_count: usize, p: f64) -> f64 {
    let v_total = variant_count as f64;
    freqs_sorted_desc
        .iter()
        .enumerate()
        .map(|(rank, &f)| ((rank + 1) as f64 / v_total).powf(p) * f)
        .sum()
}

/// Non-linear aggregation: each bitstring's per-variant frequencies are
/// scored by [`power_law_score`], bitstrings observed in fewer than `t`
/// variants are discarded, and the surviving scores are normalized into a
/// distribution. With p = 0 and t = 0 this reduces to simple averaging.
pub fn dnl_filter(
    histograms: &[Histogram],
    params: &FilterParams,
) -> MitigationResult<Distribution> {
    check_uniform_qubits(histograms)?;
    if !params.p.is_finite() || params.p < 0.0 {
        return Err(MitigationError::InvalidExponent(params.p));
    }
    let variants = histograms.len();
    if params.t > variants {
        return Err(MitigationError::ThresholdExceedsVariants { t: params.t, variants });
    }
    let total_shots: u64 = histograms.iter().map(|h| h.total_shots()).sum();
    if total_shots < PRACTICAL_SHOT_FLOOR {
        log::warn!(
            "aggregating {total_shots} total shots across {variants} variants, \
             below the practical floor of {PRACTICAL_SHOT_FLOOR}"
        );
    }

    // Per-bitstring frequency columns across variants (absent = 0).
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (v, hist) in histograms.iter().enumerate() {
        for (key, freq) in hist.frequencies() {
            columns.entry(key).or_insert_with(|| vec![0.0; variants])[v] = freq;
        }
    }

    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut norm = 0.0;
    for (key, mut freqs) in columns {
        let support = freqs.iter().filter(|&&f| f > 0.0).count();
        if support < params.t {
            continue;
        }
        freqs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let score = power_law_score(&freqs, variants, params.p);
        if score > 0.0 {
            norm += score;
            scores.insert(key, score);
        }
    }
    if norm <= 0.0 || scores.is_empty() {
        return Err(MitigationError::DegenerateFilter);
    }
    Ok(scores.into_iter().map(|(k, s)| (k, s / norm)).collect())
}

/// ⟨Z⟩ of one qubit under a bitstring distribution.
pub fn z_from_distribution(dist: &Distribution, qubit: usize) -> MitigationResult<f64> {
    if dist.is_empty() {
        return Err(MitigationError::EmptyDistribution);
    }
    let mut z = 0.0;
    for (key, &prob) in dist {
        if qubit >= key.len() {
            return Err(MitigationError::Sim(SimError::IndexOutOfRange {
                index: qubit,
                qubits: key.len(),
            }));
        }
        if key.as_bytes()[qubit] == b'0' {
            z += prob;
        } else {
            z -= prob;
        }
    }
    Ok(z)
}

/// One ⟨Z⟩ logit per test sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitSet {
    sample_ids: Vec<String>,
    logits: Vec<f64>,
    corrected: bool,
}

impl LogitSet {
    /// Raw logits are ⟨Z⟩ values and must lie in [−1, 1].
    pub fn new(sample_ids: Vec<String>, logits: Vec<f64>) -> MitigationResult<Self> {
        if logits.is_empty() {
            return Err(MitigationError::EmptyLogits);
        }
        if sample_ids.len() != logits.len() {
            return Err(MitigationError::LogitLengthMismatch);
        }
        for (index, &value) in logits.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(MitigationError::LogitOutOfRange { index, value });
            }
        }
        Ok(LogitSet { sample_ids, logits, corrected: false })
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Whether [`bias_correct`] has been applied. Corrected values may leave
    /// [−1, 1]; the range invariant only binds raw sets.
    pub fn is_corrected(&self) -> bool {
        self.corrected
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }
}

/// Subtract the global mean logit. The corrected set has mean 0 within
/// 1e-12, so the class decision threshold sits at zero regardless of any
/// uniform hardware-induced shift.
pub fn bias_correct(set: &LogitSet) -> LogitSet {
    let mean = set.logits.iter().sum::<f64>() / set.logits.len() as f64;
    LogitSet {
        sample_ids: set.sample_ids.clone(),
        logits: set.logits.iter().map(|z| z - mean).collect(),
        corrected: true,
    }
}

/// Class 0 if the (corrected) logit is strictly positive, class 1 otherwise;
/// an exact 0 falls to class 1.
pub fn classify(logit: f64) -> u8 {
    if logit > 0.0 {
        0
    } else {
        1
    }
}

/// One evaluated grid point of the filter parameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub p: f64,
    pub t: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchOutcome {
    pub best: FilterParams,
    pub best_accuracy: f64,
    pub grid: Vec<GridPoint>,
}

/// Default filter parameter grid.
pub fn default_grid() -> (Vec<f64>, Vec<usize>) {
    (vec![0.0, 0.5, 1.0, 2.0, 4.0], vec![0, 2, 5, 10])
}

/// Exhaustively evaluate classification accuracy over a (p, t) grid.
///
/// `samples` holds, per test sample, the remapped variant histograms.
/// Accuracy at each grid point comes from the full downstream pipeline:
/// filter → ⟨Z⟩ of `target_qubit` → bias correction → classification. Ties
/// break toward smaller p, then smaller t. A grid point whose filter
/// degenerates on any sample scores 0.
pub fn grid_search_filter(
    samples: &[Vec<Histogram>],
    candidate_ps: &[f64],
    candidate_ts: &[usize],
    labels: &[u8],
    target_qubit: usize,
) -> MitigationResult<GridSearchOutcome> {
    if candidate_ps.is_empty() || candidate_ts.is_empty() {
        return Err(MitigationError::EmptyGrid);
    }
    if samples.is_empty() {
        return Err(MitigationError::EmptyHistogramList);
    }
    if labels.len() != samples.len() {
        return Err(MitigationError::LabelMismatch { labels: labels.len(), samples: samples.len() });
    }

    let mut grid = Vec::with_capacity(candidate_ps.len() * candidate_ts.len());
    let mut best: Option<GridPoint> = None;
    for &p in candidate_ps {
        for &t in candidate_ts {
            let params = FilterParams { p, t };
            let accuracy = grid_point_accuracy(samples, &params, labels, target_qubit)?;
            let point = GridPoint { p, t, accuracy };
            grid.push(point);
            let better = match best {
                None => true,
                Some(b) => {
                    accuracy > b.accuracy
                        || (accuracy == b.accuracy && (p < b.p || (p == b.p && t < b.t)))
                }
            };
            if better {
                best = Some(point);
            }
        }
    }
    let best = best.unwrap();
    Ok(GridSearchOutcome {
        best: FilterParams { p: best.p, t: best.t },
        best_accuracy: best.accuracy,
        grid,
    })
}

fn grid_point_accuracy(
    samples: &[Vec<Histogram>],
    params: &FilterParams,
    labels: &[u8],
    target_qubit: usize,
) -> MitigationResult<f64> {
    let mut logits = Vec::with_capacity(samples.len());
    for histograms in samples {
        match dnl_filter(histograms, params) {
            Ok(dist) => logits.push(z_from_distribution(&dist, target_qubit)?),
            Err(MitigationError::DegenerateFilter) => return Ok(0.0),
            Err(e) => return Err(e),
        }
    }
    let ids = (0..logits.len()).map(|i| i.to_string()).collect();
    let set = LogitSet::new(ids, logits)?;
    let corrected = bias_correct(&set);
    let correct = corrected
        .logits()
        .iter()
        .zip(labels)
        .filter(|(&z, &label)| classify(z) == label)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Split a total shot budget across variants: floor(S/V) each, with one
/// extra shot for the first S mod V variants.
pub fn split_shots(total: u64, variants: usize) -> Vec<u64> {
    let v = variants as u64;
    let base = total / v;
    let remainder = (total % v) as usize;
    (0..variants)
        .map(|k| if k < remainder { base + 1 } else { base })
        .collect()
}

/// On-disk form of a variant histogram bundle: a directory of
/// `sample<id>_variant<k>.hist` files plus this manifest as `variants.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariantBundleManifest {
    pub qubits: usize,
    pub variant_count: usize,
    pub permutations: Vec<Vec<usize>>,
    pub sample_ids: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_sha256: Option<String>,
}

pub const BUNDLE_MANIFEST_FILE: &str = "variants.json";

pub fn write_variant_bundle(
    dir: &Path,
    manifest: &VariantBundleManifest,
    samples: &[(String, Vec<Histogram>)],
) -> MitigationResult<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join(BUNDLE_MANIFEST_FILE), json + "\n")?;
    for (id, histograms) in samples {
        for (k, hist) in histograms.iter().enumerate() {
            let path = dir.join(format!("sample{id}_variant{k}.hist"));
            fs::write(path, hist.to_text())?;
        }
    }
    Ok(())
}

pub fn read_variant_bundle(
    dir: &Path,
) -> MitigationResult<(VariantBundleManifest, Vec<(String, Vec<Histogram>)>)> {
    let manifest: VariantBundleManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(BUNDLE_MANIFEST_FILE))?)?;
    let mut samples = Vec::with_capacity(manifest.sample_ids.len());
    for id in &manifest.sample_ids {
        let mut histograms = Vec::with_capacity(manifest.variant_count);
        for k in 0..manifest.variant_count {
            let path = dir.join(format!("sample{id}_variant{k}.hist"));
            let hist = Histogram::from_text(&fs::read_to_string(&path)?)?;
            histograms.push(hist);
        }
        samples.push((id.clone(), histograms));
    }
    Ok((manifest, samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{run_statevector, sample, Gate};
    use approx::assert_abs_diff_eq;

    fn hist(qubits: usize, entries: &[(&str, u64)]) -> Histogram {
        let counts = entries.iter().map(|(k, c)| (k.to_string(), *c)).collect();
        Histogram::from_counts(qubits, counts).unwrap()
    }

    #[test]
    fn single_variant_is_identity() {
        let circuit = Circuit::new(3, vec![Gate::rot_y(1, 0.4)]).unwrap();
        let set = generate_variants(&circuit, 1, 9).unwrap();
        assert_eq!(set.permutations(), &[vec![0, 1, 2]]);
        assert_eq!(set.circuits()[0], circuit);
    }

    #[test]
    fn variants_are_distinct() {
        let circuit = Circuit::empty(10).unwrap();
        let set = generate_variants(&circuit, 25, 42).unwrap();
        let unique: std::collections::HashSet<_> = set.permutations().iter().collect();
        assert_eq!(unique.len(), 25);
        assert_eq!(set.permutations()[0], (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn variant_count_capacity() {
        let circuit = Circuit::empty(3).unwrap();
        assert!(matches!(
            generate_variants(&circuit, 7, 0),
            Err(MitigationError::VariantCountExceedsPermutations {
                requested: 7,
                available: 6,
                ..
            })
        ));
    }

    #[test]
    fn remapped_variant_distribution_matches_base() {
        // Simulate base and variant exactly; remapping the variant's
        // distribution must reproduce the base distribution.
        let config = crate::ansatz::AnsatzConfig::with_qubits(4);
        let params = crate::ansatz::ParamVector::new(
            &config,
            (0..config.trainable_param_count())
                .map(|i| 0.1 + 0.05 * i as f64)
                .collect(),
        )
        .unwrap();
        let circuit =
            crate::ansatz::build_circuit(&config, &[0.3, 0.7, -0.2, 1.1], &params).unwrap();
        let set = generate_variants(&circuit, 5, 33).unwrap();

        let base_probs = run_statevector(&circuit).unwrap().probabilities();
        let q = circuit.qubit_count();
        for (perm, variant) in set.permutations().iter().zip(set.circuits()).skip(1) {
            let probs = run_statevector(variant).unwrap().probabilities();
            let mut remapped = vec![0.0; probs.len()];
            for (idx, &p) in probs.iter().enumerate() {
                let key = crate::qsim::bitstring(q, idx);
                let bytes = key.as_bytes();
                let logical: String = (0..q).map(|l| bytes[perm[l]] as char).collect();
                remapped[crate::qsim::index_of(&logical, q).unwrap()] += p;
            }
            for (a, b) in remapped.iter().zip(&base_probs) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn remap_identity_and_swap() {
        let h = hist(2, &[("10", 7)]);
        assert_eq!(remap_histogram(&h, &[0, 1]).unwrap(), h);
        let swapped = remap_histogram(&h, &[1, 0]).unwrap();
        assert_eq!(swapped.counts().get("01"), Some(&7));
    }

    #[test]
    fn remap_inverse_law() {
        let h = hist(3, &[("101", 4), ("010", 6), ("110", 1)]);
        let sigma = vec![2, 0, 1];
        let mut inverse = vec![0; 3];
        for (i, &s) in sigma.iter().enumerate() {
            inverse[s] = i;
        }
        let round_trip = remap_histogram(&remap_histogram(&h, &sigma).unwrap(), &inverse).unwrap();
        assert_eq!(round_trip, h);
    }

    #[test]
    fn mean_of_single_histogram_is_its_frequencies() {
        let h = hist(2, &[("00", 3), ("11", 1)]);
        let dist = aggregate_mean(&[h]).unwrap();
        assert_abs_diff_eq!(dist["00"], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(dist["11"], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn mean_of_disjoint_histograms() {
        let a = hist(1, &[("0", 1)]);
        let b = hist(1, &[("1", 1)]);
        let dist = aggregate_mean(&[a, b]).unwrap();
        assert_abs_diff_eq!(dist["0"], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dist["1"], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mean_is_order_invariant() {
        let a = hist(2, &[("00", 5), ("01", 5)]);
        let b = hist(2, &[("00", 2), ("10", 8)]);
        let c = hist(2, &[("11", 4)]);
        let forward = aggregate_mean(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let backward = aggregate_mean(&[c, b, a]).unwrap();
        for (key, value) in &forward {
            assert_abs_diff_eq!(value, &backward[key], epsilon = 1e-15);
        }
    }

    #[test]
    fn filter_reduces_to_mean_at_p0_t0() {
        let hists = vec![
            hist(2, &[("00", 10), ("01", 30), ("11", 60)]),
            hist(2, &[("00", 50), ("10", 50)]),
            hist(2, &[("01", 25), ("11", 75)]),
        ];
        let mean = aggregate_mean(&hists).unwrap();
        let filtered = dnl_filter(&hists, &FilterParams::mean_equivalent()).unwrap();
        assert_eq!(mean.len(), filtered.len());
        for (key, value) in &mean {
            assert_abs_diff_eq!(value, &filtered[key], epsilon = 1e-12);
        }
    }

    #[test]
    fn score_hand_example() {
        // V = 2, p = 1: a concentrated column (1.0, 0.0) scores
        // 0.5·1.0 + 1.0·0.0 = 0.5, a consistent column (0.5, 0.5) scores
        // 0.5·0.5 + 1.0·0.5 = 0.75; normalized they split 0.4 / 0.6.
        let concentrated = power_law_score(&[1.0, 0.0], 2, 1.0);
        let consistent = power_law_score(&[0.5, 0.5], 2, 1.0);
        assert_abs_diff_eq!(concentrated, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(consistent, 0.75, epsilon = 1e-15);
        let total = concentrated + consistent;
        assert_abs_diff_eq!(concentrated / total, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(consistent / total, 0.6, epsilon = 1e-15);
        // p = 0 leaves plain sums (simple averaging up to normalization).
        assert_abs_diff_eq!(power_law_score(&[1.0, 0.0], 2, 0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn filter_suppresses_concentrated_bitstrings() {
        // "00" mass concentrated in variant 1, "11"/"01" spread evenly.
        let dist = dnl_filter(
            &[
                hist(2, &[("00", 10), ("11", 5), ("01", 5)]),
                hist(2, &[("11", 5), ("01", 5), ("10", 10)]),
            ],
            &FilterParams { p: 1.0, t: 0 },
        )
        .unwrap();
        // Columns: "00" = (0.5, 0.0) → 0.25; "11" = (0.25, 0.25) → 0.375.
        assert_abs_diff_eq!(dist["11"] / dist["00"], 1.5, epsilon = 1e-12);
    }

    #[test]
    fn filter_threshold_discards_rare_support() {
        let mut hists = vec![hist(1, &[("0", 9), ("1", 1)])];
        for _ in 0..24 {
            hists.push(hist(1, &[("0", 10)]));
        }
        let dist = dnl_filter(&hists, &FilterParams { p: 0.0, t: 2 }).unwrap();
        assert!(!dist.contains_key("1"), "support-1 bitstring must be dropped");
        assert_abs_diff_eq!(dist["0"], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn filter_degenerate_threshold_errors() {
        let hists = vec![hist(1, &[("0", 1)]), hist(1, &[("1", 1)])];
        assert!(matches!(
            dnl_filter(&hists, &FilterParams { p: 0.0, t: 2 }),
            Err(MitigationError::DegenerateFilter)
        ));
    }

    #[test]
    fn filter_output_is_distribution_and_order_invariant() {
        let hists = vec![
            hist(2, &[("00", 7), ("01", 3)]),
            hist(2, &[("00", 2), ("10", 8)]),
            hist(2, &[("00", 5), ("11", 5)]),
        ];
        let params = FilterParams { p: 2.0, t: 0 };
        let dist = dnl_filter(&hists, &params).unwrap();
        let total: f64 = dist.values().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert!(dist.values().all(|&p| p >= 0.0));

        let reordered = vec![hists[2].clone(), hists[0].clone(), hists[1].clone()];
        let dist2 = dnl_filter(&reordered, &params).unwrap();
        for (key, value) in &dist {
            assert_abs_diff_eq!(value, &dist2[key], epsilon = 1e-12);
        }
    }

    #[test]
    fn bias_correct_examples() {
        let set =
            LogitSet::new(vec!["a".into(), "b".into(), "c".into()], vec![0.5, 0.1, -0.3]).unwrap();
        let corrected = bias_correct(&set);
        assert_abs_diff_eq!(corrected.logits()[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(corrected.logits()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(corrected.logits()[2], -0.4, epsilon = 1e-12);
        assert!(corrected.is_corrected());

        let centered = LogitSet::new(vec!["a".into(), "b".into()], vec![0.2, -0.2]).unwrap();
        assert_eq!(bias_correct(&centered).logits(), centered.logits());

        let constant = LogitSet::new(vec!["a".into(), "b".into()], vec![0.7, 0.7]).unwrap();
        assert!(bias_correct(&constant).logits().iter().all(|&z| z.abs() < 1e-15));
    }

    #[test]
    fn bias_correct_mean_is_zero() {
        let set = LogitSet::new(
            (0..9).map(|i| i.to_string()).collect(),
            vec![0.9, -0.4, 0.3, 0.11, -0.99, 0.5, 0.2, -0.1, 0.05],
        )
        .unwrap();
        let corrected = bias_correct(&set);
        let mean: f64 = corrected.logits().iter().sum::<f64>() / 9.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn classify_rule() {
        assert_eq!(classify(0.2), 0);
        assert_eq!(classify(-0.2), 1);
        assert_eq!(classify(0.0), 1);
    }

    #[test]
    fn classification_invariant_under_logit_shift() {
        let base = vec![0.4, -0.1, 0.05, -0.6];
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let reference: Vec<u8> = bias_correct(&LogitSet::new(ids.clone(), base.clone()).unwrap())
            .logits()
            .iter()
            .map(|&z| classify(z))
            .collect();
        for shift in [-0.3, 0.2, 0.39] {
            let shifted: Vec<f64> = base.iter().map(|z| z + shift).collect();
            let classes: Vec<u8> = bias_correct(&LogitSet::new(ids.clone(), shifted).unwrap())
                .logits()
                .iter()
                .map(|&z| classify(z))
                .collect();
            assert_eq!(classes, reference, "shift {shift}");
        }
    }

    #[test]
    fn logit_range_enforced_on_raw_sets() {
        assert!(matches!(
            LogitSet::new(vec!["a".into()], vec![1.2]),
            Err(MitigationError::LogitOutOfRange { .. })
        ));
    }

    #[test]
    fn split_shots_rule() {
        assert_eq!(split_shots(500, 25), vec![20; 25]);
        let split = split_shots(503, 25);
        assert_eq!(split[..3], [21, 21, 21]);
        assert_eq!(split[3..], [20; 22]);
        assert_eq!(split.iter().sum::<u64>(), 503);
    }

    #[test]
    fn grid_search_singleton_and_monotonicity() {
        // Class-0 samples concentrate on "00", class-1 on "10".
        let sample0 = vec![hist(2, &[("00", 8), ("10", 2)]); 3];
        let sample1 = vec![hist(2, &[("10", 9), ("00", 1)]); 3];
        let samples = vec![sample0, sample1];
        let labels = vec![0u8, 1u8];

        let singleton = grid_search_filter(&samples, &[0.0], &[0], &labels, 0).unwrap();
        assert_eq!(singleton.best, FilterParams::mean_equivalent());
        assert_eq!(singleton.grid.len(), 1);

        let wider = grid_search_filter(&samples, &[0.0, 1.0], &[0, 1], &labels, 0).unwrap();
        assert!(wider.best_accuracy >= singleton.best_accuracy);
        assert_eq!(wider.grid.len(), 4);
    }

    #[test]
    fn grid_search_prefers_filter_under_corruption() {
        // One adversarially corrupted variant floods a spurious bitstring on
        // class-0 samples; some p>0 grid point must do at least as well as
        // plain averaging.
        let clean0 = hist(2, &[("00", 90), ("01", 10)]);
        let corrupt0 = hist(2, &[("10", 100)]);
        let clean1 = hist(2, &[("10", 85), ("11", 15)]);

        let mut samples = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..6 {
            let mut variants = vec![clean0.clone(); 9];
            variants.push(corrupt0.clone());
            samples.push(variants);
            labels.push(0u8);
        }
        for _ in 0..6 {
            samples.push(vec![clean1.clone(); 10]);
            labels.push(1u8);
        }

        let outcome =
            grid_search_filter(&samples, &[0.0, 0.5, 1.0, 2.0, 4.0], &[0, 2], &labels, 0).unwrap();
        let mean_point = outcome.grid.iter().find(|g| g.p == 0.0 && g.t == 0).unwrap();
        let best_filtered = outcome
            .grid
            .iter()
            .filter(|g| g.p > 0.0)
            .map(|g| g.accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            best_filtered >= mean_point.accuracy,
            "filtered {best_filtered} vs mean {}",
            mean_point.accuracy
        );
    }

    #[test]
    fn empty_grid_rejected() {
        let samples = vec![vec![hist(1, &[("0", 1)])]];
        assert!(matches!(
            grid_search_filter(&samples, &[], &[0], &[0], 0),
            Err(MitigationError::EmptyGrid)
        ));
    }

    #[test]
    fn bundle_round_trip() {
        let dir = std::env::temp_dir().join(format!("qets-bundle-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        let manifest = VariantBundleManifest {
            qubits: 2,
            variant_count: 2,
            permutations: vec![vec![0, 1], vec![1, 0]],
            sample_ids: vec!["0".into(), "1".into()],
            seed: 5,
            manifest_sha256: Some("abc".into()),
        };
        let samples = vec![
            ("0".to_string(), vec![hist(2, &[("00", 4)]), hist(2, &[("01", 4)])]),
            ("1".to_string(), vec![hist(2, &[("10", 4)]), hist(2, &[("11", 4)])]),
        ];
        write_variant_bundle(&dir, &manifest, &samples).unwrap();
        let (read_manifest, read_samples) = read_variant_bundle(&dir).unwrap();
        assert_eq!(read_manifest.permutations, manifest.permutations);
        assert_eq!(read_samples, samples);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn noiseless_symmetrization_recovers_exact_z() {
        // Mean-aggregated noiseless variants agree with the exact ⟨Z⟩ well
        // inside the 5·√(1/S) band.
        let config = crate::ansatz::AnsatzConfig::with_qubits(4);
        let params = crate::ansatz::ParamVector::new(
            &config,
            (0..config.trainable_param_count())
                .map(|i| (i as f64 * 0.37).sin())
                .collect(),
        )
        .unwrap();
        let circuit =
            crate::ansatz::build_circuit(&config, &[0.2, -0.5, 0.9, 0.1], &params).unwrap();
        let exact = run_statevector(&circuit).unwrap().expectation_z(0).unwrap();

        let set = generate_variants(&circuit, 5, 21).unwrap();
        let total_shots = 4000u64;
        let split = split_shots(total_shots, set.len());
        let mut remapped = Vec::new();
        for (k, (variant, perm)) in set.circuits().iter().zip(set.permutations()).enumerate() {
            let state = run_statevector(variant).unwrap();
            let h = sample(&state, split[k], crate::seeding::derive(77, k as u64)).unwrap();
            remapped.push(remap_histogram(&h, perm).unwrap());
        }
        let dist = aggregate_mean(&remapped).unwrap();
        let z = z_from_distribution(&dist, 0).unwrap();
        let bound = 5.0 * (1.0 / total_shots as f64).sqrt();
        assert!((z - exact).abs() < bound, "z = {z}, exact = {exact}");
    }
}
