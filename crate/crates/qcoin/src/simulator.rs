//! Gate-model simulation of the four-qubit discrimination circuits:
//! exact statevector evolution, a density-matrix path with depolarizing
//! and readout noise, and seeded multinomial shot sampling.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discrimination::{MeasurementBasis, PreparationParams, ProbDist, Strategy};
use crate::likelihood::KlDivergence;
use crate::synthesis::{decompose_two_qubit, u3_matrix, zyz_decompose, SynthesisError};
use crate::linalg::ComplexMatrix;

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("qubit index {index} out of range for {num_qubits} qubits")]
    QubitIndex { index: usize, num_qubits: usize },
    #[error("cnot control and target coincide (qubit {0})")]
    DegenerateCnot(usize),
    #[error("basis dimension {basis} does not fit the {strategy} strategy")]
    BasisMismatch { basis: usize, strategy: Strategy },
    #[error("noise probability {0} outside [0, 1]")]
    BadNoiseProbability(f64),
    #[error("shot counts cover different outcome spaces ({0} vs {1} bits)")]
    OutcomeSpaceMismatch(usize, usize),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// One gate in a circuit. Rotations carry the standard three angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateOp {
    Rotation { qubit: usize, theta: f64, phi: f64, lambda: f64 },
    Cnot { control: usize, target: usize },
}

/// Ordered gate list over a fixed register; measurement happens once, at
/// the end, on `measured_qubits` in the listed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
    measured_qubits: Vec<usize>,
}

impl Circuit {
    pub fn new(
        num_qubits: usize,
        ops: Vec<GateOp>,
        measured_qubits: Vec<usize>,
    ) -> Result<Self, SimulatorError> {
        let check = |q: usize| {
            if q >= num_qubits {
                Err(SimulatorError::QubitIndex { index: q, num_qubits })
            } else {
                Ok(())
            }
        };
        for op in &ops {
            match *op {
                GateOp::Rotation { qubit, .. } => check(qubit)?,
                GateOp::Cnot { control, target } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return Err(SimulatorError::DegenerateCnot(control));
                    }
                }
            }
        }
        for &q in &measured_qubits {
            check(q)?;
        }
        Ok(Self { num_qubits, ops, measured_qubits })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn measured_qubits(&self) -> &[usize] {
        &self.measured_qubits
    }

    pub fn cnot_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, GateOp::Cnot { .. }))
            .count()
    }
}

/// Synthetic stand-in for hardware imperfections: depolarizing channels
/// after each gate plus classical readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub depolarizing_1q: f64,
    pub depolarizing_2q: f64,
    pub readout_flip: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { depolarizing_1q: 0.0, depolarizing_2q: 0.0, readout_flip: 0.0 }
    }

    pub fn new(
        depolarizing_1q: f64,
        depolarizing_2q: f64,
        readout_flip: f64,
    ) -> Result<Self, SimulatorError> {
        for p in [depolarizing_1q, depolarizing_2q, readout_flip] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimulatorError::BadNoiseProbability(p));
            }
        }
        Ok(Self { depolarizing_1q, depolarizing_2q, readout_flip })
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_1q == 0.0 && self.depolarizing_2q == 0.0 && self.readout_flip == 0.0
    }
}

/// Tally of measured bitstrings. Keys list the measured qubits in order,
/// first measured qubit leftmost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub seed: u64,
    pub workers: usize,
}

impl ShotCounts {
    pub fn outcome_bits(&self) -> usize {
        self.counts.keys().next().map_or(0, |k| k.len())
    }
}

/// Counts file layout for the JSON interface.
#[derive(Debug, Serialize, Deserialize)]
pub struct CountsFile {
    pub shots: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    pub workers: usize,
    pub counts: BTreeMap<String, u64>,
}

impl CountsFile {
    pub fn new(counts: &ShotCounts, noise: &NoiseModel) -> Self {
        Self {
            shots: counts.shots,
            seed: counts.seed,
            noise: *noise,
            workers: counts.workers,
            counts: counts.counts.clone(),
        }
    }
}

/// Which of the two prepared states the circuit should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateLabel {
    A,
    B,
}

// Register layout: qubits a, b, c, d at indices 0..3; qubit 0 is the most
// significant bit of a basis-state index. The coins live on b and c.
const QUBIT_A: usize = 0;
const QUBIT_B: usize = 1;
const QUBIT_C: usize = 2;
const QUBIT_D: usize = 3;

/// Assemble the four-qubit discrimination circuit: rotate b and c by beta,
/// entangle each with its ancilla (CNOT b->a, c->d) to make the coins
/// impure, rotate by delta for state B, change to the measurement basis,
/// and measure b and c.
pub fn build_circuit(
    params: &PreparationParams,
    strategy: Strategy,
    basis: &MeasurementBasis,
    which: StateLabel,
) -> Result<Circuit, SimulatorError> {
    let expected = match strategy {
        Strategy::Direct => 2,
        Strategy::Entangled => 4,
    };
    if basis.dimension() != expected {
        return Err(SimulatorError::BasisMismatch { basis: basis.dimension(), strategy });
    }

    let mut ops = Vec::new();
    for q in [QUBIT_B, QUBIT_C] {
        ops.push(GateOp::Rotation { qubit: q, theta: params.beta, phi: 0.0, lambda: 0.0 });
    }
    ops.push(GateOp::Cnot { control: QUBIT_B, target: QUBIT_A });
    ops.push(GateOp::Cnot { control: QUBIT_C, target: QUBIT_D });
    if which == StateLabel::B {
        for q in [QUBIT_B, QUBIT_C] {
            ops.push(GateOp::Rotation { qubit: q, theta: params.delta, phi: 0.0, lambda: 0.0 });
        }
    }

    // Measuring in basis {|m_i>} = applying U^dag, then reading out in the
    // computational basis.
    let u_dag = basis.unitary().adjoint();
    match strategy {
        Strategy::Direct => {
            let (gate, _phase) = zyz_decompose(&u_dag)?;
            for q in [QUBIT_B, QUBIT_C] {
                ops.push(GateOp::Rotation {
                    qubit: q,
                    theta: gate.theta,
                    phi: gate.phi,
                    lambda: gate.lambda,
                });
            }
        }
        Strategy::Entangled => {
            let decomposition = decompose_two_qubit(&u_dag)?;
            let map = |target: usize| if target == 0 { QUBIT_B } else { QUBIT_C };
            let push_local = |ops: &mut Vec<GateOp>, g: &crate::synthesis::SingleQubitGate| {
                ops.push(GateOp::Rotation {
                    qubit: map(g.target),
                    theta: g.theta,
                    phi: g.phi,
                    lambda: g.lambda,
                });
            };
            push_local(&mut ops, &decomposition.locals[0]);
            push_local(&mut ops, &decomposition.locals[1]);
            ops.push(GateOp::Cnot { control: QUBIT_B, target: QUBIT_C });
            push_local(&mut ops, &decomposition.locals[2]);
            push_local(&mut ops, &decomposition.locals[3]);
            ops.push(GateOp::Cnot { control: QUBIT_B, target: QUBIT_C });
            push_local(&mut ops, &decomposition.locals[4]);
            push_local(&mut ops, &decomposition.locals[5]);
        }
    }

    Circuit::new(4, ops, vec![QUBIT_B, QUBIT_C])
}

fn bit_mask(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

fn apply_single_to_state(
    psi: &mut [Complex64],
    num_qubits: usize,
    qubit: usize,
    m: &ComplexMatrix,
) {
    let mask = bit_mask(num_qubits, qubit);
    for idx in 0..psi.len() {
        if idx & mask == 0 {
            let hi = idx | mask;
            let a = psi[idx];
            let b = psi[hi];
            psi[idx] = m[(0, 0)] * a + m[(0, 1)] * b;
            psi[hi] = m[(1, 0)] * a + m[(1, 1)] * b;
        }
    }
}

fn apply_cnot_to_state(psi: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let cmask = bit_mask(num_qubits, control);
    let tmask = bit_mask(num_qubits, target);
    for idx in 0..psi.len() {
        if idx & cmask != 0 && idx & tmask == 0 {
            psi.swap(idx, idx | tmask);
        }
    }
}

/// Run the circuit from |0...0> and return the statevector.
fn statevector(c: &Circuit) -> Vec<Complex64> {
    let dim = 1usize << c.num_qubits();
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    for op in c.ops() {
        match *op {
            GateOp::Rotation { qubit, theta, phi, lambda } => {
                apply_single_to_state(&mut psi, c.num_qubits(), qubit, &u3_matrix(theta, phi, lambda));
            }
            GateOp::Cnot { control, target } => {
                apply_cnot_to_state(&mut psi, c.num_qubits(), control, target);
            }
        }
        debug_assert!(
            (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12,
            "statevector norm drifted"
        );
    }
    psi
}

/// Marginal distribution over the measured qubits, exact Born rule.
pub fn born_probabilities(c: &Circuit) -> ProbDist {
    let psi = statevector(c);
    marginal_from_amplitudes(&psi, c)
}

fn outcome_index(c: &Circuit, basis_index: usize) -> usize {
    let m = c.measured_qubits().len();
    let mut out = 0usize;
    for (k, &q) in c.measured_qubits().iter().enumerate() {
        if basis_index & bit_mask(c.num_qubits(), q) != 0 {
            out |= 1 << (m - 1 - k);
        }
    }
    out
}

fn marginal_from_amplitudes(psi: &[Complex64], c: &Circuit) -> ProbDist {
    let m = c.measured_qubits().len();
    let mut probs = vec![0.0; 1 << m];
    for (idx, amp) in psi.iter().enumerate() {
        probs[outcome_index(c, idx)] += amp.norm_sqr();
    }
    let total: f64 = probs.iter().sum();
    ProbDist::from_raw(&probs.iter().map(|p| p / total).collect::<Vec<_>>())
}

/// Full density matrix evolution with depolarizing noise after each gate.
struct DensityState {
    num_qubits: usize,
    // Row-major (2^n) x (2^n).
    rho: Vec<Complex64>,
}

impl DensityState {
    fn ground(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        rho[0] = Complex64::new(1.0, 0.0);
        Self { num_qubits, rho }
    }

    fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// rho -> G rho G^dag for a single-qubit gate.
    fn apply_single(&mut self, qubit: usize, m: &ComplexMatrix) {
        let dim = self.dim();
        let mask = bit_mask(self.num_qubits, qubit);
        // Left multiply on row indices.
        for col in 0..dim {
            for row in 0..dim {
                if row & mask == 0 {
                    let hi = row | mask;
                    let a = self.rho[row * dim + col];
                    let b = self.rho[hi * dim + col];
                    self.rho[row * dim + col] = m[(0, 0)] * a + m[(0, 1)] * b;
                    self.rho[hi * dim + col] = m[(1, 0)] * a + m[(1, 1)] * b;
                }
            }
        }
        // Right multiply by G^dag on column indices.
        for row in 0..dim {
            for col in 0..dim {
                if col & mask == 0 {
                    let hi = col | mask;
                    let a = self.rho[row * dim + col];
                    let b = self.rho[row * dim + hi];
                    self.rho[row * dim + col] = a * m[(0, 0)].conj() + b * m[(0, 1)].conj();
                    self.rho[row * dim + hi] = a * m[(1, 0)].conj() + b * m[(1, 1)].conj();
                }
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let dim = self.dim();
        let cmask = bit_mask(self.num_qubits, control);
        let tmask = bit_mask(self.num_qubits, target);
        let flip = |idx: usize| if idx & cmask != 0 { idx ^ tmask } else { idx };
        let mut out = vec![Complex64::new(0.0, 0.0); dim * dim];
        for row in 0..dim {
            for col in 0..dim {
                out[flip(row) * dim + flip(col)] = self.rho[row * dim + col];
            }
        }
        self.rho = out;
    }

    /// Replace the marginal on `qubits` with the maximally mixed state,
    /// with probability p: rho -> (1-p) rho + p (I/2^k (x) tr_qubits rho).
    fn depolarize(&mut self, qubits: &[usize], p: f64) {
        if p == 0.0 {
            return;
        }
        let dim = self.dim();
        let masks: Vec<usize> = qubits
            .iter()
            .map(|&q| bit_mask(self.num_qubits, q))
            .collect();
        let full: usize = masks.iter().sum();
        let k = qubits.len() as u32;
        let weight = 1.0 / (1u32 << k) as f64;
        let mut mixed = vec![Complex64::new(0.0, 0.0); dim * dim];
        for row in 0..dim {
            for col in 0..dim {
                // Nonzero only when the traced-out qubits agree.
                if row & full != col & full {
                    continue;
                }
                let base_r = row & !full;
                let base_c = col & !full;
                let mut acc = Complex64::new(0.0, 0.0);
                for assignment in 0..(1usize << k) {
                    let mut bits = 0usize;
                    for (bit, &mask) in masks.iter().enumerate() {
                        if assignment & (1 << bit) != 0 {
                            bits |= mask;
                        }
                    }
                    acc += self.rho[(base_r | bits) * dim + (base_c | bits)];
                }
                mixed[row * dim + col] = acc * weight;
            }
        }
        for i in 0..dim * dim {
            self.rho[i] = self.rho[i] * (1.0 - p) + mixed[i] * p;
        }
    }

    fn marginal(&self, c: &Circuit) -> Vec<f64> {
        let dim = self.dim();
        let m = c.measured_qubits().len();
        let mut probs = vec![0.0; 1 << m];
        for idx in 0..dim {
            probs[outcome_index(c, idx)] += self.rho[idx * dim + idx].re;
        }
        probs
    }
}

/// Outcome distribution with the noise model applied (density-matrix path
/// when any noise is present, pure statevector otherwise).
pub fn outcome_distribution(c: &Circuit, noise: &NoiseModel) -> ProbDist {
    if noise.is_noiseless() {
        return born_probabilities(c);
    }
    let mut state = DensityState::ground(c.num_qubits());
    for op in c.ops() {
        match *op {
            GateOp::Rotation { qubit, theta, phi, lambda } => {
                state.apply_single(qubit, &u3_matrix(theta, phi, lambda));
                state.depolarize(&[qubit], noise.depolarizing_1q);
            }
            GateOp::Cnot { control, target } => {
                state.apply_cnot(control, target);
                state.depolarize(&[control, target], noise.depolarizing_2q);
            }
        }
    }
    let mut probs = state.marginal(c);
    if noise.readout_flip > 0.0 {
        probs = apply_readout_flips(&probs, noise.readout_flip);
    }
    let total: f64 = probs.iter().sum();
    ProbDist::from_raw(&probs.iter().map(|p| p / total).collect::<Vec<_>>())
}

fn apply_readout_flips(probs: &[f64], r: f64) -> Vec<f64> {
    let cells = probs.len();
    let bits = cells.trailing_zeros() as usize;
    let mut out = vec![0.0; cells];
    for (x, &px) in probs.iter().enumerate() {
        for (y, slot) in out.iter_mut().enumerate() {
            let flips = (x ^ y).count_ones() as i32;
            let keeps = bits as i32 - flips;
            *slot += px * r.powi(flips) * (1.0 - r).powi(keeps);
        }
    }
    out
}

fn bitstring(outcome: usize, bits: usize) -> String {
    (0..bits)
        .map(|k| {
            if outcome & (1 << (bits - 1 - k)) != 0 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub const DEFAULT_WORKERS: usize = 4;

/// Sample `shots` measurement outcomes, deterministic for a fixed
/// (seed, worker count) pair.
pub fn sample_shots(c: &Circuit, shots: u64, noise: &NoiseModel, seed: u64) -> ShotCounts {
    sample_shots_partitioned(c, shots, noise, seed, DEFAULT_WORKERS)
}

/// Shot sampling with an explicit worker count. Shots are split across
/// workers, each drawing from its own derived RNG stream; the merged tally
/// does not depend on scheduling order.
pub fn sample_shots_partitioned(
    c: &Circuit,
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
    workers: usize,
) -> ShotCounts {
    let dist = outcome_distribution(c, noise);
    let bits = c.measured_qubits().len();
    let workers = workers.max(1);

    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }

    let base = shots / workers as u64;
    let extra = shots % workers as u64;
    let tallies: Vec<Vec<u64>> = (0..workers)
        .into_par_iter()
        .map(|w| {
            let quota = base + u64::from((w as u64) < extra);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(0x5a00 + w as u64);
            let mut tally = vec![0u64; 1 << bits];
            for _ in 0..quota {
                let u: f64 = rng.gen();
                let cell = cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1);
                tally[cell] += 1;
            }
            tally
        })
        .collect();

    let mut counts = BTreeMap::new();
    for cell in 0..(1usize << bits) {
        let total: u64 = tallies.iter().map(|t| t[cell]).sum();
        counts.insert(bitstring(cell, bits), total);
    }
    ShotCounts { counts, shots, seed, workers }
}

/// Empirical relative-entropy estimate from two tallies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrelEstimate {
    /// Add-half smoothed plug-in estimate, always finite.
    pub smoothed: f64,
    /// Raw plug-in estimate; flagged infinite when counts_b has an empty
    /// cell where counts_a does not.
    pub raw: KlDivergence,
}

/// Plug-in KL divergence of the empirical frequencies, reported both with
/// add-half smoothing per cell and raw.
pub fn estimate_srel_from_counts(
    counts_a: &ShotCounts,
    counts_b: &ShotCounts,
) -> Result<SrelEstimate, SimulatorError> {
    let bits = counts_a.outcome_bits();
    if bits != counts_b.outcome_bits() {
        return Err(SimulatorError::OutcomeSpaceMismatch(bits, counts_b.outcome_bits()));
    }
    let cells = 1usize << bits;
    let get = |c: &ShotCounts, cell: usize| -> f64 {
        c.counts.get(&bitstring(cell, bits)).copied().unwrap_or(0) as f64
    };
    let na = counts_a.shots as f64;
    let nb = counts_b.shots as f64;

    let mut raw = 0.0;
    let mut infinite = false;
    let mut smoothed = 0.0;
    for cell in 0..cells {
        let ca = get(counts_a, cell);
        let cb = get(counts_b, cell);
        if ca > 0.0 {
            if cb == 0.0 {
                infinite = true;
            } else {
                let pa = ca / na;
                let pb = cb / nb;
                raw += pa * (pa / pb).ln();
            }
        }
        let sa = (ca + 0.5) / (na + 0.5 * cells as f64);
        let sb = (cb + 0.5) / (nb + 0.5 * cells as f64);
        smoothed += sa * (sa / sb).ln();
    }
    Ok(SrelEstimate {
        smoothed,
        raw: if infinite {
            KlDivergence::Infinite
        } else {
            KlDivergence::Finite(raw.max(0.0))
        },
    })
}
