//! Discrimination of quantum coins by relative entropy.
//!
//! A classical biased coin reveals itself over many tosses at a rate set by
//! the Kullback-Leibler divergence between the observed and assumed outcome
//! distributions. For qubits the divergence depends on the measurement
//! basis, so discriminating two density matrices becomes an optimization:
//! pick the basis that maximizes the induced classical divergence. This
//! crate implements that pipeline end to end:
//!
//! - [`likelihood`]: exact and Stirling-approximated binomial
//!   log-likelihoods and the binary relative entropy;
//! - [`linalg`]: dense complex matrices at dimensions 2 and 4, tensor
//!   products, partial traces, and small eigen/exponential kernels;
//! - [`discrimination`]: state preparation from the (beta, delta) angles,
//!   basis-dependent relative entropy, and the two optimization
//!   strategies (per-qubit basis angle vs a rotation-group walk over
//!   entangled pair bases);
//! - [`synthesis`]: Makhlin invariants and the two-CNOT + six local gate
//!   decomposition of the optimized pair basis;
//! - [`simulator`]: statevector and density-matrix simulation of the
//!   four-qubit circuits with depolarizing/readout noise and seeded shot
//!   sampling;
//! - [`qasm`]: OpenQASM 2.0 emission and parsing for the circuit subset
//!   used here.

pub mod discrimination;
pub mod likelihood;
pub mod linalg;
pub mod qasm;
pub mod simulator;
pub mod synthesis;

pub use discrimination::{
    basis_from_angle, confidence_decay, measurement_distribution, optimize_direct,
    optimize_entangled, prepare_states, relative_entropy_of_basis, MeasurementBasis,
    OptimizerConfig, PreparationParams, ProbDist, Strategy, StrategyReport, StrategyReportFile,
};
pub use likelihood::{
    approx_log_likelihood, exact_log_likelihood, kl_binary, likelihood_curve, BinaryDist,
    KlDivergence, TossRecord,
};
pub use linalg::{
    bloch_to_density, expm_antisymmetric, partial_trace, tensor_product, BlochVector,
    ComplexMatrix, DensityMatrix, Subsystem, UnitaryMatrix,
};
pub use qasm::{emit_qasm, parse_qasm};
pub use simulator::{
    born_probabilities, build_circuit, estimate_srel_from_counts, sample_shots,
    sample_shots_partitioned, Circuit, GateOp, NoiseModel, ShotCounts, StateLabel,
};
pub use synthesis::{
    decompose_two_qubit, makhlin_invariants, zyz_decompose, DecompositionResult,
    MakhlinInvariants, SingleQubitGate,
};
