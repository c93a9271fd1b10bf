//! Basis-dependent state discrimination: state preparation from (beta,
//! delta), measurement distributions, relative entropy of a basis, and the
//! two optimization strategies (single-qubit angle scan and a seeded random
//! walk over two-qubit rotations, with a deterministic refinement pass).

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::likelihood::{kl_divergence, KlDivergence};
use crate::linalg::{
    expm, expm_i_hermitian, tensor_product, ComplexMatrix, DensityMatrix, LinalgError,
    UnitaryMatrix, TOL_STRUCTURAL,
};

#[derive(Debug, Error)]
pub enum DiscriminationError {
    #[error("angle {name} = {value} outside [0, pi]")]
    AngleRange { name: &'static str, value: f64 },
    #[error("dimension mismatch: state is {state}, basis is {basis}")]
    DimensionMismatch { state: usize, basis: usize },
    #[error("dominant-outcome probability {0} must lie strictly inside (0, 1)")]
    DegenerateProbability(f64),
    #[error("invalid optimizer config: {0}")]
    BadConfig(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Preparation angles: beta controls purity, delta the Bloch-plane
/// separation between the two states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreparationParams {
    pub beta: f64,
    pub delta: f64,
}

impl PreparationParams {
    pub fn new(beta: f64, delta: f64) -> Result<Self, DiscriminationError> {
        if !(0.0..=std::f64::consts::PI).contains(&beta) {
            return Err(DiscriminationError::AngleRange { name: "beta", value: beta });
        }
        if !(0.0..=std::f64::consts::PI).contains(&delta) {
            return Err(DiscriminationError::AngleRange { name: "delta", value: delta });
        }
        Ok(Self { beta, delta })
    }
}

/// Orthonormal measurement basis; the columns of the unitary are the basis
/// vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    unitary: UnitaryMatrix,
}

impl MeasurementBasis {
    pub fn new(unitary: UnitaryMatrix) -> Self {
        Self { unitary }
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.unitary
    }

    pub fn dimension(&self) -> usize {
        self.unitary.dimension()
    }
}

/// Normalized outcome distribution. Construction clamps tiny negative
/// values (bounded by -1e-12) to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    pub fn from_raw(raw: &[f64]) -> Self {
        let probs: Vec<f64> = raw
            .iter()
            .map(|&p| {
                debug_assert!(p > -1e-9, "probability {p} too negative to clamp");
                p.max(0.0)
            })
            .collect();
        let sum: f64 = probs.iter().sum();
        debug_assert!((sum - 1.0).abs() < TOL_STRUCTURAL, "probabilities sum to {sum}");
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Search schedule for the entangled-basis walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Initial random-walk step in radians.
    pub step_size: f64,
    /// Multiplicative step decay applied when acceptance stalls.
    pub cooling: f64,
    /// Total proposals per restart.
    pub iterations: usize,
    /// Independent restarts (the best result wins).
    pub restarts: usize,
    pub seed: u64,
    /// Convergence threshold on the objective for the refinement sweeps.
    pub tolerance: f64,
    /// Search the full two-qubit unitary group instead of real rotations.
    pub search_su4: bool,
    /// Keep bases with infinite divergence instead of rejecting them.
    pub allow_infinite_divergence: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.3,
            cooling: 0.95,
            iterations: 5000,
            restarts: 8,
            seed: 0,
            tolerance: 1e-12,
            search_su4: false,
            allow_infinite_divergence: false,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), DiscriminationError> {
        if self.step_size <= 0.0 {
            return Err(DiscriminationError::BadConfig("step_size must be positive"));
        }
        if !(self.cooling > 0.0 && self.cooling <= 1.0) {
            return Err(DiscriminationError::BadConfig("cooling must be in (0, 1]"));
        }
        if self.iterations < 1 {
            return Err(DiscriminationError::BadConfig("iterations must be >= 1"));
        }
        if self.restarts < 1 {
            return Err(DiscriminationError::BadConfig("restarts must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Entangled,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Direct => write!(f, "direct"),
            Strategy::Entangled => write!(f, "entangled"),
        }
    }
}

/// Result of one strategy optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub strategy: Strategy,
    /// Relative entropy per qubit, nats.
    pub s_rel: f64,
    pub basis: MeasurementBasis,
    /// Optimal basis angle (direct strategy only).
    pub phi_star: Option<f64>,
    /// Relative entropy per measured pair, nats (entangled strategy only).
    pub raw_pair_value: Option<f64>,
    pub seed: u64,
    /// Set when the two states coincide and the optimum is arbitrary.
    pub degenerate: bool,
}

impl StrategyReport {
    pub fn s_rel_bits(&self) -> f64 {
        self.s_rel / std::f64::consts::LN_2
    }
}

/// Serialization form of a report, including the config echo.
#[derive(Debug, Serialize, Deserialize)]
pub struct StrategyReportFile {
    pub strategy: Strategy,
    pub s_rel_nats: f64,
    pub s_rel_bits: f64,
    pub phi_star: Option<f64>,
    pub raw_pair_value_nats: Option<f64>,
    pub degenerate: bool,
    /// Basis unitary, row-major [re, im] pairs.
    pub unitary: Vec<[f64; 2]>,
    pub seed: u64,
    pub config: OptimizerConfig,
}

impl StrategyReportFile {
    pub fn from_report(report: &StrategyReport, config: &OptimizerConfig) -> Self {
        Self {
            strategy: report.strategy,
            s_rel_nats: report.s_rel,
            s_rel_bits: report.s_rel_bits(),
            phi_star: report.phi_star,
            raw_pair_value_nats: report.raw_pair_value,
            degenerate: report.degenerate,
            unitary: report
                .basis
                .unitary()
                .matrix()
                .entries()
                .iter()
                .map(|z| [z.re, z.im])
                .collect(),
            seed: report.seed,
            config: config.clone(),
        }
    }
}

/// Bloch-plane rotation by `angle`: the standard y-axis rotation matrix.
pub fn rotation_y(angle: f64) -> ComplexMatrix {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    ComplexMatrix::from_real(2, 2, &[c, -s, s, c])
}

/// Prepare the two states to discriminate:
/// rho_A = diag(cos^2(beta/2), sin^2(beta/2)) on the z axis, and rho_B the
/// same state rotated by delta in the x-z plane. Both have Bloch length
/// cos(beta).
pub fn prepare_states(params: &PreparationParams) -> (DensityMatrix, DensityMatrix) {
    let c2 = (params.beta / 2.0).cos().powi(2);
    let s2 = (params.beta / 2.0).sin().powi(2);
    let rho_a = ComplexMatrix::diagonal(&[Complex64::new(c2, 0.0), Complex64::new(s2, 0.0)]);
    let r = rotation_y(params.delta);
    let rho_b = r.mul(&rho_a).mul(&r.adjoint());
    (
        DensityMatrix::new(rho_a).expect("diagonal probabilities form a density matrix"),
        DensityMatrix::new(rho_b).expect("rotation preserves density-matrix structure"),
    )
}

/// Outcome probabilities <m_i| rho |m_i> for each basis column.
pub fn measurement_distribution(
    rho: &DensityMatrix,
    basis: &MeasurementBasis,
) -> Result<ProbDist, DiscriminationError> {
    if rho.dimension() != basis.dimension() {
        return Err(DiscriminationError::DimensionMismatch {
            state: rho.dimension(),
            basis: basis.dimension(),
        });
    }
    Ok(ProbDist::from_raw(&born_diagonal(
        rho.matrix(),
        basis.unitary().matrix(),
    )))
}

/// Diagonal of V^dag rho V, as real values.
fn born_diagonal(rho: &ComplexMatrix, v: &ComplexMatrix) -> Vec<f64> {
    let n = rho.rows();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for k in 0..n {
                row += rho[(j, k)] * v[(k, i)];
            }
            acc += v[(j, i)].conj() * row;
        }
        out[i] = acc.re;
    }
    out
}

/// Relative entropy of the outcome distributions induced by a basis,
/// D( p(rho_a) || q(rho_b) ) in nats. Basis-dependent by construction.
pub fn relative_entropy_of_basis(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    basis: &MeasurementBasis,
) -> Result<KlDivergence, DiscriminationError> {
    let p = measurement_distribution(rho_a, basis)?;
    let q = measurement_distribution(rho_b, basis)?;
    Ok(kl_divergence(p.probs(), q.probs()))
}

/// Single-qubit basis at angle phi in the x-z plane: basis vectors point
/// along the antipodal Bloch directions +-(sin phi, 0, cos phi).
pub fn basis_from_angle(phi: f64) -> MeasurementBasis {
    let reduced = phi.rem_euclid(std::f64::consts::PI);
    MeasurementBasis::new(
        UnitaryMatrix::new(rotation_y(reduced)).expect("rotation is orthogonal"),
    )
}

/// Decay factor of the confidence in the wrong state after n measurements:
/// exp(-n s_rel) / sqrt(2 pi n p (1 - p)).
pub fn confidence_decay(n: u64, s_rel: f64, p: f64) -> Result<f64, DiscriminationError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DiscriminationError::DegenerateProbability(p));
    }
    assert!(n >= 1, "confidence decay needs at least one measurement");
    assert!(s_rel >= 0.0, "relative entropy is nonnegative");
    let nf = n as f64;
    Ok((-nf * s_rel).exp() / (2.0 * std::f64::consts::PI * nf * p * (1.0 - p)).sqrt())
}

const DIRECT_GRID_POINTS: usize = 10_000;
const GOLDEN_INV: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of `f` on [a, b] down to `xtol`.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut c = b - GOLDEN_INV * (b - a);
    let mut d = a + GOLDEN_INV * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN_INV * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN_INV * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Scan the single-qubit basis angle on a uniform grid, then refine the
/// best bracket by golden-section search.
pub fn optimize_direct(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    cfg: &OptimizerConfig,
) -> Result<StrategyReport, DiscriminationError> {
    cfg.validate()?;
    if rho_a.dimension() != 2 || rho_b.dimension() != 2 {
        return Err(DiscriminationError::DimensionMismatch {
            state: rho_a.dimension().max(rho_b.dimension()),
            basis: 2,
        });
    }
    if rho_a.matrix().max_abs_diff(rho_b.matrix()) < 1e-14 {
        return Ok(StrategyReport {
            strategy: Strategy::Direct,
            s_rel: 0.0,
            basis: basis_from_angle(0.0),
            phi_star: Some(0.0),
            raw_pair_value: None,
            seed: cfg.seed,
            degenerate: true,
        });
    }

    let allow_inf = cfg.allow_infinite_divergence;
    let objective = |phi: f64| -> f64 {
        let kl = relative_entropy_of_basis(rho_a, rho_b, &basis_from_angle(phi))
            .expect("2x2 dimensions always match");
        match kl {
            KlDivergence::Finite(v) => v,
            KlDivergence::Infinite => {
                if allow_inf {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    };

    let step = std::f64::consts::PI / DIRECT_GRID_POINTS as f64;
    let mut best_idx = 0usize;
    let mut best_val = f64::NEG_INFINITY;
    for k in 0..DIRECT_GRID_POINTS {
        let v = objective(k as f64 * step);
        if v > best_val {
            best_val = v;
            best_idx = k;
        }
    }
    let center = best_idx as f64 * step;
    let (phi_star, s_rel) = if best_val.is_infinite() {
        (center, best_val)
    } else {
        golden_max(&objective, center - step, center + step, 1e-10)
    };
    let phi_star = phi_star.rem_euclid(std::f64::consts::PI);

    Ok(StrategyReport {
        strategy: Strategy::Direct,
        s_rel,
        basis: basis_from_angle(phi_star),
        phi_star: Some(phi_star),
        raw_pair_value: None,
        seed: cfg.seed,
        degenerate: false,
    })
}

/// Basis elements of the tangent space at identity: real rotations (6
/// antisymmetric matrices), extended with the extra 9 directions of the
/// full unitary group when requested.
fn walk_generators(su4: bool) -> Vec<ComplexMatrix> {
    let mut gens = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let mut a = ComplexMatrix::zeros(4, 4);
            a[(i, j)] = Complex64::new(1.0, 0.0);
            a[(j, i)] = Complex64::new(-1.0, 0.0);
            gens.push(a);
        }
    }
    if su4 {
        for i in 0..4 {
            for j in i + 1..4 {
                let mut a = ComplexMatrix::zeros(4, 4);
                a[(i, j)] = Complex64::new(0.0, 1.0);
                a[(j, i)] = Complex64::new(0.0, 1.0);
                gens.push(a);
            }
        }
        for i in 0..3 {
            let mut a = ComplexMatrix::zeros(4, 4);
            a[(i, i)] = Complex64::new(0.0, 1.0);
            a[(i + 1, i + 1)] = Complex64::new(0.0, -1.0);
            gens.push(a);
        }
    }
    gens
}

/// Random tangent direction for a walk step.
fn random_generator(rng: &mut ChaCha8Rng, su4: bool) -> ComplexMatrix {
    let normal = |rng: &mut ChaCha8Rng| -> f64 {
        // Box-Muller from two uniforms.
        let u1: f64 = rng.gen::<f64>().max(1e-300);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut a = ComplexMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in i + 1..4 {
            let x = normal(rng);
            a[(i, j)] += Complex64::new(x, 0.0);
            a[(j, i)] += Complex64::new(-x, 0.0);
        }
    }
    if su4 {
        for i in 0..4 {
            for j in i + 1..4 {
                let y = normal(rng);
                a[(i, j)] += Complex64::new(0.0, y);
                a[(j, i)] += Complex64::new(0.0, y);
            }
        }
        for i in 0..4 {
            let z = normal(rng);
            a[(i, i)] = Complex64::new(0.0, z);
        }
    }
    a
}

fn step_matrix(generator: &ComplexMatrix, scale: f64) -> ComplexMatrix {
    if generator.max_imag() == 0.0 {
        expm(&generator.scale(Complex64::new(scale, 0.0)))
    } else {
        // Anti-Hermitian generator: exponentiate through the Hermitian part.
        let h = generator.scale(Complex64::new(0.0, -1.0));
        expm_i_hermitian(&h, scale)
    }
}

struct RestartOutcome {
    value: f64,
    basis: ComplexMatrix,
}

/// Hill-climb from one restart's RNG stream, then refine deterministically
/// with per-generator golden-section sweeps.
fn entangled_restart(
    rho_a2: &ComplexMatrix,
    rho_b2: &ComplexMatrix,
    warm: &ComplexMatrix,
    cfg: &OptimizerConfig,
    restart_index: usize,
) -> RestartOutcome {
    let allow_inf = cfg.allow_infinite_divergence;
    let objective = |v: &ComplexMatrix| -> f64 {
        let p = born_diagonal(rho_a2, v);
        let q = born_diagonal(rho_b2, v);
        let p = ProbDist::from_raw(&p);
        let q = ProbDist::from_raw(&q);
        match kl_divergence(p.probs(), q.probs()) {
            KlDivergence::Finite(x) => x,
            KlDivergence::Infinite => {
                if allow_inf {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart_index as u64 + 1);

    let mut v = warm.clone();
    let mut current = objective(&v);
    let mut eps = cfg.step_size;
    let mut stall = 0usize;
    const STALL_WINDOW: usize = 25;

    for _ in 0..cfg.iterations {
        if eps < 1e-9 || current.is_infinite() {
            break;
        }
        let a = random_generator(&mut rng, cfg.search_su4);
        let proposal = v.mul(&step_matrix(&a, eps));
        let val = objective(&proposal);
        if val > current {
            v = proposal;
            current = val;
            stall = 0;
        } else {
            stall += 1;
            if stall >= STALL_WINDOW {
                eps *= cfg.cooling;
                stall = 0;
            }
        }
    }

    // Deterministic refinement: cyclic line searches along the tangent
    // basis until a full sweep stops paying.
    if current.is_finite() {
        let gens = walk_generators(cfg.search_su4);
        let tol = cfg.tolerance.max(1e-14);
        for _sweep in 0..60 {
            let mut gained = 0.0;
            for g in &gens {
                let line = |s: f64| -> f64 { objective(&v.mul(&step_matrix(g, s))) };
                let (s_best, val) = golden_max(&line, -0.2, 0.2, 1e-13);
                if val > current + 1e-15 {
                    v = v.mul(&step_matrix(g, s_best));
                    gained += val - current;
                    current = val;
                }
            }
            if gained < tol {
                break;
            }
        }
    }

    RestartOutcome { value: current, basis: v }
}

/// Optimize the two-qubit measurement basis for pairs of identical coins.
///
/// Forms rho_A (x) rho_A and rho_B (x) rho_B, warm-starts from the optimal
/// separable basis (so the result never falls below the direct strategy),
/// and reports the per-qubit value, i.e. half the per-pair relative entropy.
pub fn optimize_entangled(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    cfg: &OptimizerConfig,
) -> Result<StrategyReport, DiscriminationError> {
    cfg.validate()?;
    let direct = optimize_direct(rho_a, rho_b, cfg)?;
    if direct.degenerate {
        let identity = UnitaryMatrix::new(ComplexMatrix::identity(4))
            .expect("identity is unitary");
        return Ok(StrategyReport {
            strategy: Strategy::Entangled,
            s_rel: 0.0,
            basis: MeasurementBasis::new(identity),
            phi_star: None,
            raw_pair_value: Some(0.0),
            seed: cfg.seed,
            degenerate: true,
        });
    }

    let rho_a2 = tensor_product(rho_a.matrix(), rho_a.matrix());
    let rho_b2 = tensor_product(rho_b.matrix(), rho_b.matrix());
    let u2 = direct.basis.unitary().matrix();
    let warm = tensor_product(u2, u2);

    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| entangled_restart(&rho_a2, &rho_b2, &warm, cfg, r))
        .collect();

    let mut best = 0usize;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[best].value {
            best = i;
        }
    }
    let winner = &outcomes[best];

    let basis = MeasurementBasis::new(UnitaryMatrix::new(winner.basis.clone())?);
    Ok(StrategyReport {
        strategy: Strategy::Entangled,
        s_rel: winner.value / 2.0,
        basis,
        phi_star: None,
        raw_pair_value: Some(winner.value),
        seed: cfg.seed,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Subsystem;

    fn params(beta: f64, delta: f64) -> PreparationParams {
        PreparationParams::new(beta, delta).unwrap()
    }

    #[test]
    fn prepare_pure_state_at_beta_zero() {
        let (rho_a, _) = prepare_states(&params(0.0, 0.5));
        let proj = ComplexMatrix::diagonal(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(rho_a.matrix().max_abs_diff(&proj) < 1e-15);
    }

    #[test]
    fn prepare_delta_zero_states_coincide() {
        let (rho_a, rho_b) = prepare_states(&params(0.7, 0.0));
        assert!(rho_a.matrix().max_abs_diff(rho_b.matrix()) < 1e-15);
    }

    #[test]
    fn prepare_beta_point_two_diagonal() {
        let (rho_a, _) = prepare_states(&params(0.2, 1.8));
        // cos^2(0.1), sin^2(0.1) to 5 significant figures.
        assert!((rho_a.matrix()[(0, 0)].re - 0.99003).abs() < 5e-6);
        assert!((rho_a.matrix()[(1, 1)].re - 0.00997).abs() < 5e-6);
    }

    #[test]
    fn prepare_bloch_lengths_are_cos_beta() {
        for (beta, delta) in [(0.2, 1.8), (0.9, 0.4), (1.5, 2.5)] {
            let (rho_a, rho_b) = prepare_states(&params(beta, delta));
            for rho in [&rho_a, &rho_b] {
                let b = crate::linalg::density_to_bloch(rho).unwrap();
                assert!((b.norm() - beta.cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prepare_matches_circuit_reduced_state() {
        // Partial trace of the two-qubit CNOT construction at beta = 0.2.
        let beta = 0.2f64;
        let ry = rotation_y(beta);
        let mut psi = vec![Complex64::new(0.0, 0.0); 4];
        // |0>_b rotated, then CNOT(b -> a) with b the most significant qubit here.
        // State on (b, a): cos(b/2)|00> + sin(b/2)|11>.
        psi[0] = ry[(0, 0)];
        psi[3] = ry[(1, 0)];
        let mut joint = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                joint[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        let reduced = crate::linalg::partial_trace(&joint, Subsystem::First).unwrap();
        let (rho_a, _) = prepare_states(&params(beta, 1.8));
        assert!(reduced.max_abs_diff(rho_a.matrix()) < 1e-14);
    }

    #[test]
    fn distribution_of_maximally_mixed_is_uniform() {
        let mixed = DensityMatrix::new(
            ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0)),
        )
        .unwrap();
        for phi in [0.0, 0.3, 1.2, 2.9] {
            let d = measurement_distribution(&mixed, &basis_from_angle(phi)).unwrap();
            assert!((d.probs()[0] - 0.5).abs() < 1e-12);
            assert!((d.probs()[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_of_ground_state_in_computational_basis() {
        let ground = DensityMatrix::new(ComplexMatrix::diagonal(&[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]))
        .unwrap();
        let d = measurement_distribution(&ground, &basis_from_angle(0.0)).unwrap();
        assert!((d.probs()[0] - 1.0).abs() < 1e-12);
        assert!(d.probs()[1].abs() < 1e-12);
    }

    #[test]
    fn distribution_beta_point_two_reproduces_diagonal() {
        let (rho_a, _) = prepare_states(&params(0.2, 1.8));
        let d = measurement_distribution(&rho_a, &basis_from_angle(0.0)).unwrap();
        assert!((d.probs()[0] - (0.1f64).cos().powi(2)).abs() < 1e-12);
        assert!((d.probs()[1] - (0.1f64).sin().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn distribution_dimension_mismatch() {
        let (rho_a, _) = prepare_states(&params(0.2, 1.8));
        let basis4 = MeasurementBasis::new(
            UnitaryMatrix::new(ComplexMatrix::identity(4)).unwrap(),
        );
        assert!(matches!(
            measurement_distribution(&rho_a, &basis4),
            Err(DiscriminationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn relative_entropy_vanishes_for_equal_states() {
        let (rho_a, _) = prepare_states(&params(0.4, 1.1));
        for phi in [0.0, 0.7, 1.9, 2.8] {
            let kl = relative_entropy_of_basis(&rho_a, &rho_a, &basis_from_angle(phi)).unwrap();
            assert!(kl.value() < 1e-12);
        }
    }

    #[test]
    fn relative_entropy_matches_componentwise_evaluation() {
        // Oracle: measurement_distribution + the binary closed form.
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let basis = basis_from_angle(0.0);
        let p = measurement_distribution(&rho_a, &basis).unwrap();
        let q = measurement_distribution(&rho_b, &basis).unwrap();
        let expected = p.probs()[0] * (p.probs()[0] / q.probs()[0]).ln()
            + p.probs()[1] * (p.probs()[1] / q.probs()[1]).ln();
        let got = relative_entropy_of_basis(&rho_a, &rho_b, &basis)
            .unwrap()
            .value();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn relative_entropy_nonnegative_over_random_bases() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (rho_a, rho_b) = prepare_states(&params(0.35, 2.1));
        for _ in 0..500 {
            let phi = rng.gen::<f64>() * std::f64::consts::PI;
            let kl = relative_entropy_of_basis(&rho_a, &rho_b, &basis_from_angle(phi)).unwrap();
            assert!(kl.value() >= 0.0);
        }
    }

    #[test]
    fn basis_angle_zero_is_computational() {
        let b = basis_from_angle(0.0);
        assert!(b.unitary().matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn basis_angle_half_pi_is_x_basis() {
        let b = basis_from_angle(std::f64::consts::FRAC_PI_2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = ComplexMatrix::from_real(2, 2, &[s, -s, s, s]);
        assert!(b.unitary().matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn basis_angle_reduces_mod_pi() {
        let a = basis_from_angle(0.4);
        let b = basis_from_angle(0.4 + std::f64::consts::PI);
        assert!(a.unitary().matrix().max_abs_diff(b.unitary().matrix()) < 1e-12);
    }

    #[test]
    fn direct_degenerate_states() {
        let (rho_a, rho_b) = prepare_states(&params(0.5, 0.0));
        let report = optimize_direct(&rho_a, &rho_b, &OptimizerConfig::default()).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.s_rel, 0.0);
    }

    #[test]
    fn direct_matches_brute_force_grid() {
        // Oracle: dense grid; the refined result may only be better.
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let report = optimize_direct(&rho_a, &rho_b, &OptimizerConfig::default()).unwrap();

        let n = 200_000;
        let mut best = f64::NEG_INFINITY;
        for k in 0..n {
            let phi = k as f64 * std::f64::consts::PI / n as f64;
            let v = relative_entropy_of_basis(&rho_a, &rho_b, &basis_from_angle(phi))
                .unwrap()
                .value();
            best = best.max(v);
        }
        assert!(report.s_rel >= best - 1e-12);
        assert!(report.s_rel - best < 1e-8);
        // Frozen reference from an independent offline optimization.
        assert!((report.s_rel - 2.2534207099813).abs() < 1e-9);
        assert!((report.phi_star.unwrap() - 1.8879103143).abs() < 1e-6);
    }

    #[test]
    fn direct_covariant_under_common_rotation() {
        let (rho_a, rho_b) = prepare_states(&params(0.3, 1.2));
        let report = optimize_direct(&rho_a, &rho_b, &OptimizerConfig::default()).unwrap();

        let shift = 0.9f64;
        let r = rotation_y(shift);
        let rot = |rho: &DensityMatrix| {
            DensityMatrix::new(r.mul(rho.matrix()).mul(&r.adjoint())).unwrap()
        };
        let report2 = optimize_direct(&rot(&rho_a), &rot(&rho_b), &OptimizerConfig::default())
            .unwrap();
        assert!((report.s_rel - report2.s_rel).abs() < 1e-9);
        let dphi = (report2.phi_star.unwrap() - report.phi_star.unwrap() - shift)
            .rem_euclid(std::f64::consts::PI);
        assert!(dphi < 1e-6 || dphi > std::f64::consts::PI - 1e-6);
    }

    #[test]
    fn entangled_degenerate_at_delta_zero() {
        let (rho_a, rho_b) = prepare_states(&params(0.5, 0.0));
        let report = optimize_entangled(&rho_a, &rho_b, &OptimizerConfig::default()).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.s_rel, 0.0);
    }

    #[test]
    fn entangled_never_regresses_below_direct() {
        let cfg = OptimizerConfig {
            iterations: 400,
            restarts: 2,
            ..OptimizerConfig::default()
        };
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let direct = optimize_direct(&rho_a, &rho_b, &cfg).unwrap();
        let ent = optimize_entangled(&rho_a, &rho_b, &cfg).unwrap();
        assert!(ent.s_rel >= direct.s_rel - 1e-12);
        assert!((ent.raw_pair_value.unwrap() - 2.0 * ent.s_rel).abs() < 1e-15);
    }

    #[test]
    fn entangled_separable_start_doubles_single_qubit_value() {
        // Additivity: the product basis scores exactly twice the
        // single-qubit optimum.
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let direct = optimize_direct(&rho_a, &rho_b, &OptimizerConfig::default()).unwrap();
        let u2 = direct.basis.unitary().matrix();
        let warm = tensor_product(u2, u2);
        let rho_a2 = tensor_product(rho_a.matrix(), rho_a.matrix());
        let rho_b2 = tensor_product(rho_b.matrix(), rho_b.matrix());
        let p = ProbDist::from_raw(&born_diagonal(&rho_a2, &warm));
        let q = ProbDist::from_raw(&born_diagonal(&rho_b2, &warm));
        let pair = kl_divergence(p.probs(), q.probs()).value();
        assert!((pair - 2.0 * direct.s_rel).abs() < 1e-10);
    }

    #[test]
    fn entangled_reports_are_bit_identical_for_same_seed() {
        let cfg = OptimizerConfig {
            iterations: 300,
            restarts: 3,
            seed: 99,
            ..OptimizerConfig::default()
        };
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let a = optimize_entangled(&rho_a, &rho_b, &cfg).unwrap();
        let b = optimize_entangled(&rho_a, &rho_b, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn confidence_decay_values() {
        // s_rel = 0: pure power law.
        let c = confidence_decay(50, 0.0, 0.3).unwrap();
        let expected = 1.0 / (2.0 * std::f64::consts::PI * 50.0 * 0.3 * 0.7).sqrt();
        assert!((c - expected).abs() < 1e-15);

        // Oracle: direct evaluation exp(-10)/sqrt(50 pi).
        let c = confidence_decay(100, 0.1, 0.5).unwrap();
        let expected = (-10.0f64).exp() / (50.0 * std::f64::consts::PI).sqrt();
        assert!((c - expected).abs() < 1e-18);

        // Doubling n drops log C by at least n * s_rel.
        let c1 = confidence_decay(200, 0.05, 0.4).unwrap().ln();
        let c2 = confidence_decay(400, 0.05, 0.4).unwrap().ln();
        assert!(c1 - c2 >= 200.0 * 0.05);
    }

    #[test]
    fn confidence_decay_rejects_degenerate_p() {
        assert!(confidence_decay(10, 0.1, 0.0).is_err());
        assert!(confidence_decay(10, 0.1, 1.0).is_err());
    }

    #[test]
    fn report_serialization_round_trip() {
        let (rho_a, rho_b) = prepare_states(&params(0.2, 1.8));
        let cfg = OptimizerConfig::default();
        let report = optimize_direct(&rho_a, &rho_b, &cfg).unwrap();
        let file = StrategyReportFile::from_report(&report, &cfg);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back: StrategyReportFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.s_rel_nats, file.s_rel_nats);
        assert_eq!(back.unitary, file.unitary);
        assert!((file.s_rel_bits - file.s_rel_nats / std::f64::consts::LN_2).abs() < 1e-15);
    }
}
