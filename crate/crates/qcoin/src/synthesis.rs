//! Two-qubit gate synthesis: local-equivalence invariants in the magic
//! basis and the two-CNOT decomposition.
//!
//! Any two-qubit unitary whose canonical class has a vanishing third
//! coordinate factors as
//!
//! ```text
//! exp(i g) (l5 x l6) CNOT (l3 x l4) CNOT (l1 x l2)
//! ```
//!
//! with six single-qubit gates. All real-orthogonal gates (the output of
//! the rotation-group basis search) are in this class; generic two-qubit
//! unitaries outside it are rejected with a three-CNOT error rather than a
//! bad reconstruction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eigen, ComplexMatrix, LinalgError, UnitaryMatrix};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("unitary requires 3 CNOTs (g1 = {g1_re:.6} + {g1_im:.6}i, g2 = {g2:.6})")]
    RequiresThreeCnots { g1_re: f64, g1_im: f64, g2: f64 },
    #[error("expected a {expected}x{expected} unitary, got {got}x{got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("magic-basis diagonalization failed to converge")]
    DiagonalizationFailed,
    #[error("reconstruction residual {residual:.3e} exceeds the 1e-8 bound")]
    ResidualTooLarge { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One single-qubit gate in the standard three-angle form
/// u3(theta, phi, lambda) = Rz(phi) Ry(theta) Rz(lambda), up to phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitGate {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
    pub target: usize,
}

impl SingleQubitGate {
    /// The 2x2 matrix of the gate (phase convention: top-left entry real
    /// and nonnegative).
    pub fn matrix(&self) -> ComplexMatrix {
        u3_matrix(self.theta, self.phi, self.lambda)
    }
}

/// u3(theta, phi, lambda) in the OpenQASM convention.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    ComplexMatrix::from_rows(
        2,
        2,
        &[
            Complex64::new(c, 0.0),
            -Complex64::from_polar(s, lambda),
            Complex64::from_polar(s, phi),
            Complex64::from_polar(c, phi + lambda),
        ],
    )
}

/// CNOT placement inside the synthesized circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnotPlacement {
    pub control: usize,
    pub target: usize,
}

/// Local-unitary invariants of a two-qubit gate, computed in the magic
/// basis. Two gates are locally equivalent exactly when both invariants
/// agree; they also decide the CNOT count of a synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MakhlinInvariants {
    pub g1: Complex64,
    pub g2: f64,
}

/// Output of the two-CNOT synthesis.
///
/// `locals` holds the six single-qubit gates in application order:
/// pre-layer pair, mid-layer pair, post-layer pair, each on qubits (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub locals: [SingleQubitGate; 6],
    pub cnots: [CnotPlacement; 2],
    pub global_phase: f64,
    pub residual: f64,
}

impl DecompositionResult {
    /// Multiply the synthesized circuit back into a 4x4 matrix.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let cnot = cnot_matrix();
        let layer = |a: &SingleQubitGate, b: &SingleQubitGate| {
            crate::linalg::tensor_product(&a.matrix(), &b.matrix())
        };
        let pre = layer(&self.locals[0], &self.locals[1]);
        let mid = layer(&self.locals[2], &self.locals[3]);
        let post = layer(&self.locals[4], &self.locals[5]);
        post.mul(&cnot)
            .mul(&mid)
            .mul(&cnot)
            .mul(&pre)
            .scale(Complex64::from_polar(1.0, self.global_phase))
    }
}

/// Serialization form with angles rounded to 15 significant digits.
#[derive(Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub locals: Vec<SingleQubitGate>,
    pub cnots: Vec<CnotPlacement>,
    pub global_phase: f64,
    pub residual: f64,
}

fn round_sig15(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.14e}").parse().expect("formatted float parses back")
}

impl DecompositionFile {
    pub fn from_result(r: &DecompositionResult) -> Self {
        Self {
            locals: r
                .locals
                .iter()
                .map(|g| SingleQubitGate {
                    theta: round_sig15(g.theta),
                    phi: round_sig15(g.phi),
                    lambda: round_sig15(g.lambda),
                    target: g.target,
                })
                .collect(),
            cnots: r.cnots.to_vec(),
            global_phase: round_sig15(r.global_phase),
            residual: r.residual,
        }
    }
}

/// CNOT with control on the first (most significant) qubit.
pub fn cnot_matrix() -> ComplexMatrix {
    ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

/// The magic (Bell) basis as a unitary whose columns are the magic states.
fn magic_basis() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re * s, im * s);
    ComplexMatrix::from_rows(
        4,
        4,
        &[
            c(1.0, 0.0),
            c(0.0, -1.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, -1.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(-1.0, 0.0),
            c(0.0, -1.0),
            c(1.0, 0.0),
            c(0.0, 1.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
    )
}

/// Decompose a single-qubit unitary into u3 angles plus a global phase:
/// u = exp(i phase) u3(theta, phi, lambda).
pub fn zyz_decompose(u: &UnitaryMatrix) -> Result<(SingleQubitGate, f64), SynthesisError> {
    if u.dimension() != 2 {
        return Err(SynthesisError::WrongDimension { expected: 2, got: u.dimension() });
    }
    let m = u.matrix();
    let (gate, phase) = u3_angles_of(m);
    Ok((gate, phase))
}

/// u3 angle extraction for an arbitrary 2x2 unitary matrix.
fn u3_angles_of(m: &ComplexMatrix) -> (SingleQubitGate, f64) {
    let a = m[(0, 0)];
    let b = m[(0, 1)];
    let c = m[(1, 0)];
    let d = m[(1, 1)];
    let theta = 2.0 * c.norm().atan2(a.norm());

    let (phase, phi, lambda);
    if c.norm() < 1e-12 {
        // Diagonal: split the relative phase into phi, leave lambda 0.
        phase = a.arg();
        phi = (d * a.conj()).arg();
        lambda = 0.0;
    } else if a.norm() < 1e-12 {
        // Anti-diagonal: lambda 0, phase from -b.
        phase = (-b).arg();
        phi = wrap_angle(c.arg() - phase);
        lambda = 0.0;
    } else {
        phase = a.arg();
        phi = wrap_angle(c.arg() - phase);
        lambda = wrap_angle((-b).arg() - phase);
    }
    (
        SingleQubitGate { theta, phi, lambda, target: 0 },
        phase,
    )
}

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y -= two_pi;
    }
    y
}

/// Makhlin invariants in the magic basis:
/// g1 = tr^2(m) / (16 det U), g2 = (tr^2(m) - tr(m^2)) / (4 det U)
/// with m = u^T u and u the gate expressed in the magic basis.
pub fn makhlin_invariants(u: &UnitaryMatrix) -> Result<MakhlinInvariants, SynthesisError> {
    if u.dimension() != 4 {
        return Err(SynthesisError::WrongDimension { expected: 4, got: u.dimension() });
    }
    let mb = magic_basis();
    let um = mb.adjoint().mul(u.matrix()).mul(&mb);
    let m = um.transpose().mul(&um);
    let det = u.matrix().determinant();
    let tr = m.trace();
    let tr2 = m.mul(&m).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2c = (tr * tr - tr2) / (det * 4.0);
    Ok(MakhlinInvariants { g1, g2: g2c.re })
}

/// Is the gate inside the two-CNOT circuit class?
///
/// Equivalent to the canonical class having a vanishing coordinate, which
/// reads g1 real and nonnegative on the invariants.
pub fn within_two_cnot_class(inv: &MakhlinInvariants) -> bool {
    inv.g1.im.abs() < 1e-9 && inv.g1.re > -1e-9
}

/// Jointly diagonalize the real and imaginary parts of a symmetric unitary
/// matrix with one real orthogonal transform (det +1). Returns (P, thetas)
/// with m = P diag(exp(2i theta)) P^T.
fn diagonalize_symmetric_unitary(
    m: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<f64>), SynthesisError> {
    let mr = m.real_part();
    let mi = m.sub(&mr).scale(Complex64::new(0.0, -1.0)).real_part();

    // The two parts commute; a generic linear combination separates the
    // joint eigenspaces. Try a few mixing angles and keep the first that
    // diagonalizes both.
    const MIX: [f64; 8] = [0.0, 0.7, 1.3, 2.1, 0.33, 1.9, 2.7, 0.11];
    for &t in MIX.iter() {
        let combo = mr
            .scale(Complex64::new(t.cos(), 0.0))
            .add(&mi.scale(Complex64::new(t.sin(), 0.0)));
        let (_, v) = hermitian_eigen(&combo);
        if v.max_imag() > 1e-9 {
            continue;
        }
        let mut p = v.real_part();
        let check = |x: &ComplexMatrix| -> f64 {
            let d = p.transpose().mul(x).mul(&p);
            let mut off = 0.0f64;
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        off = off.max(d[(i, j)].norm());
                    }
                }
            }
            off
        };
        if check(&mr) < 1e-10 && check(&mi) < 1e-10 {
            if p.determinant().re < 0.0 {
                p.negate_column(0);
            }
            let d = p.transpose().mul(m).mul(&p);
            let mut thetas: Vec<f64> = (0..4).map(|i| d[(i, i)].arg() / 2.0).collect();
            // det(m) = 1, so the theta sum must be a multiple of 2 pi for
            // diag(exp(i theta)) to have unit determinant.
            let sum: f64 = thetas.iter().sum();
            let k = (sum / std::f64::consts::PI).round() as i64;
            if k.rem_euclid(2) != 0 {
                thetas[0] -= std::f64::consts::PI * sum.signum();
            }
            return Ok((p, thetas));
        }
    }
    Err(SynthesisError::DiagonalizationFailed)
}

/// One side of the magic-basis factorization: U = lambda M K D P^T M^dag
/// with K, P special orthogonal and D = diag(exp(i theta)).
struct MagicFactorization {
    phase: Complex64,
    orthogonal_left: ComplexMatrix,
    orthogonal_right: ComplexMatrix,
    thetas: Vec<f64>,
}

fn magic_factorize(u: &ComplexMatrix) -> Result<MagicFactorization, SynthesisError> {
    let det = u.determinant();
    let mut phase = Complex64::from_polar(det.norm().powf(0.25), det.arg() / 4.0);
    let su = u.scale(Complex64::new(1.0, 0.0) / phase);
    let mb = magic_basis();
    let mut um = mb.adjoint().mul(&su).mul(&mb);
    let mut m = um.transpose().mul(&um);
    // The quartic root is defined up to i^k; pick the branch with
    // nonnegative real trace of m so near-local gates get near-zero
    // eigenphases instead of a spurious pi/2 offset.
    if m.trace().re < 0.0 {
        um = um.scale(Complex64::new(0.0, 1.0));
        phase *= Complex64::new(0.0, -1.0);
        m = m.scale(Complex64::new(-1.0, 0.0));
    }
    let (p, thetas) = diagonalize_symmetric_unitary(&m)?;
    let d_inv_half = ComplexMatrix::diagonal(
        &thetas
            .iter()
            .map(|&t| Complex64::from_polar(1.0, -t))
            .collect::<Vec<_>>(),
    );
    let k = um.mul(&p).mul(&d_inv_half);
    if k.max_imag() > 1e-8 {
        return Err(SynthesisError::DiagonalizationFailed);
    }
    Ok(MagicFactorization {
        phase,
        orthogonal_left: k.real_part(),
        orthogonal_right: p,
        thetas,
    })
}

/// Canonical in-class parameters from the halved eigenphases: the doubled
/// phases pair up as {s, -s, t, -t} and the class is ((s+t)/2, (t-s)/2, 0).
fn class_parameters(thetas: &[f64]) -> (f64, f64) {
    let e: Vec<f64> = thetas.iter().map(|&t| 2.0 * t).collect();
    let pairings = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
    let mut best = f64::INFINITY;
    let mut chosen = pairings[0];
    for pairing in pairings {
        let score: f64 = pairing
            .iter()
            .map(|&(a, b)| (Complex64::from_polar(1.0, e[a] + e[b]) - 1.0).norm())
            .sum();
        if score < best {
            best = score;
            chosen = pairing;
        }
    }
    // Circular mean of the two equivalent representatives of the pair
    // value; stable when the pair sits at the +-pi boundary.
    let half = |a: usize, b: usize| {
        (Complex64::from_polar(1.0, e[a]) + Complex64::from_polar(1.0, -e[b]))
            .arg()
            .abs()
    };
    let s = half(chosen[0].0, chosen[0].1);
    let t = half(chosen[1].0, chosen[1].1);
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    ((hi + lo) / 2.0, (hi - lo) / 2.0)
}

/// Canonical two-CNOT core: CNOT (Rx(gamma) x Rz(alpha)) CNOT, equal to
/// exp(-i (gamma XX + alpha ZZ) / 2).
fn canonical_core(gamma: f64, alpha: f64) -> ComplexMatrix {
    let rx = |t: f64| {
        let c = (t / 2.0).cos();
        let s = (t / 2.0).sin();
        ComplexMatrix::from_rows(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(c, 0.0),
            ],
        )
    };
    let rz = |t: f64| {
        ComplexMatrix::diagonal(&[
            Complex64::from_polar(1.0, -t / 2.0),
            Complex64::from_polar(1.0, t / 2.0),
        ])
    };
    let cnot = cnot_matrix();
    cnot.mul(&crate::linalg::tensor_product(&rx(gamma), &rz(alpha)))
        .mul(&cnot)
}

/// Split an exact Kronecker product of two 2x2 unitaries into factors.
fn split_local(l: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let block = |bi: usize, bj: usize| {
        let mut b = ComplexMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                b[(i, j)] = l[(2 * bi + i, 2 * bj + j)];
            }
        }
        b
    };
    let mut best = (0, 0);
    let mut best_norm = -1.0;
    for bi in 0..2 {
        for bj in 0..2 {
            let n = block(bi, bj).max_abs();
            if n > best_norm {
                best_norm = n;
                best = (bi, bj);
            }
        }
    }
    let pivot = block(best.0, best.1);
    let frob: f64 = pivot
        .entries()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let b = pivot.scale(Complex64::new(std::f64::consts::SQRT_2 / frob, 0.0));
    let mut a = ComplexMatrix::zeros(2, 2);
    for bi in 0..2 {
        for bj in 0..2 {
            a[(bi, bj)] = block(bi, bj).mul(&b.adjoint()).trace() / 2.0;
        }
    }
    (a, b)
}

/// Decompose a two-qubit unitary into two CNOTs and six single-qubit
/// gates, up to a reported global phase.
pub fn decompose_two_qubit(u: &UnitaryMatrix) -> Result<DecompositionResult, SynthesisError> {
    if u.dimension() != 4 {
        return Err(SynthesisError::WrongDimension { expected: 4, got: u.dimension() });
    }
    let inv = makhlin_invariants(u)?;
    if !within_two_cnot_class(&inv) {
        return Err(SynthesisError::RequiresThreeCnots {
            g1_re: inv.g1.re,
            g1_im: inv.g1.im,
            g2: inv.g2,
        });
    }

    let fu = magic_factorize(u.matrix())?;
    let (mut gamma, mut alpha) = class_parameters(&fu.thetas);
    // Snap a near-separable core to the exact identity to avoid angle
    // jitter from noise-level entangling power.
    if gamma.abs() < 1e-10 {
        gamma = 0.0;
    }
    if alpha.abs() < 1e-10 {
        alpha = 0.0;
    }

    let core = canonical_core(gamma, alpha);
    let mut fw = magic_factorize(&core)?;

    // Match the core's eigenphases to the input's, column by column.
    let mut perm = [0usize; 4];
    let mut used = [false; 4];
    for a in 0..4 {
        let target = Complex64::from_polar(1.0, 2.0 * fu.thetas[a]);
        let mut best_b = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (b, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let d = (Complex64::from_polar(1.0, 2.0 * fw.thetas[b]) - target).norm();
            if d < best_d {
                best_d = d;
                best_b = b;
            }
        }
        perm[a] = best_b;
        used[best_b] = true;
    }
    fw.orthogonal_right = fw.orthogonal_right.permute_columns(&perm);
    fw.orthogonal_left = fw.orthogonal_left.permute_columns(&perm);
    let mut thetas_w: Vec<f64> = perm.iter().map(|&b| fw.thetas[b]).collect();

    // Align the halved phases (the square roots), flipping pi-offset
    // columns; unit determinants force an even number of flips.
    let mut flips = 0usize;
    for j in 0..4 {
        let du = Complex64::from_polar(1.0, fu.thetas[j]);
        let dw = Complex64::from_polar(1.0, thetas_w[j]);
        if (du - dw).norm() > 1.0 {
            thetas_w[j] += std::f64::consts::PI;
            fw.orthogonal_left.negate_column(j);
            flips += 1;
        }
    }
    if flips % 2 != 0 {
        return Err(SynthesisError::DiagonalizationFailed);
    }
    // An odd permutation flips both determinants; undo it pairwise (the
    // same column sign on both sides leaves the factorization intact).
    if fw.orthogonal_right.determinant().re < 0.0 {
        fw.orthogonal_right.negate_column(0);
        fw.orthogonal_left.negate_column(0);
    }

    let mb = magic_basis();
    let post4 = mb
        .mul(&fu.orthogonal_left.mul(&fw.orthogonal_left.transpose()))
        .mul(&mb.adjoint());
    let pre4 = mb
        .mul(&fw.orthogonal_right.mul(&fu.orthogonal_right.transpose()))
        .mul(&mb.adjoint());

    let (post_a, post_b) = split_local(&post4);
    let (pre_a, pre_b) = split_local(&pre4);
    let rx_gate = {
        let c = (gamma / 2.0).cos();
        let s = (gamma / 2.0).sin();
        ComplexMatrix::from_rows(
            2,
            2,
            &[
                Complex64::new(c, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, -s),
                Complex64::new(c, 0.0),
            ],
        )
    };
    let rz_gate = ComplexMatrix::diagonal(&[
        Complex64::from_polar(1.0, -alpha / 2.0),
        Complex64::from_polar(1.0, alpha / 2.0),
    ]);

    // The core carries its own quarter-root phase; the composition uses
    // core / fw.phase, so that phase is subtracted here.
    let mut total_phase = fu.phase.arg() - fw.phase.arg();
    let mut gate_of = |m: &ComplexMatrix, target: usize| -> SingleQubitGate {
        let (mut g, ph) = u3_angles_of(m);
        g.target = target;
        total_phase += ph;
        g
    };
    let locals = [
        gate_of(&pre_a, 0),
        gate_of(&pre_b, 1),
        gate_of(&rx_gate, 0),
        gate_of(&rz_gate, 1),
        gate_of(&post_a, 0),
        gate_of(&post_b, 1),
    ];
    let cnots = [
        CnotPlacement { control: 0, target: 1 },
        CnotPlacement { control: 0, target: 1 },
    ];

    let mut result = DecompositionResult {
        locals,
        cnots,
        global_phase: wrap_angle(total_phase),
        residual: 0.0,
    };
    let rebuilt = result.reconstruct();
    result.residual = rebuilt.max_abs_diff(u.matrix());
    if result.residual > 1e-8 {
        return Err(SynthesisError::ResidualTooLarge { residual: result.residual });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_antisymmetric, tensor_product};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_so4(rng: &mut impl Rng) -> UnitaryMatrix {
        let mut a = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in i + 1..4 {
                let x = 4.0 * rng.gen::<f64>() - 2.0;
                a[(i, j)] = Complex64::new(x, 0.0);
                a[(j, i)] = Complex64::new(-x, 0.0);
            }
        }
        expm_antisymmetric(&a).unwrap()
    }

    fn random_u2(rng: &mut impl Rng) -> ComplexMatrix {
        // Haar-ish 2x2 unitary from angles.
        let t = rng.gen::<f64>() * std::f64::consts::PI;
        let p = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let l = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        let g = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        u3_matrix(t, p, l).scale(Complex64::from_polar(1.0, g))
    }

    #[test]
    fn zyz_identity() {
        let (gate, phase) = zyz_decompose(
            &UnitaryMatrix::new(ComplexMatrix::identity(2)).unwrap(),
        )
        .unwrap();
        assert_eq!(gate.theta, 0.0);
        assert_eq!(gate.phi, 0.0);
        assert_eq!(gate.lambda, 0.0);
        assert_eq!(phase, 0.0);
    }

    #[test]
    fn zyz_rotation_y() {
        let delta = 1.8;
        let ry = crate::discrimination::rotation_y(delta);
        let (gate, phase) = zyz_decompose(&UnitaryMatrix::new(ry).unwrap()).unwrap();
        assert!((gate.theta - delta).abs() < 1e-14);
        assert!(gate.phi.abs() < 1e-14);
        assert!(gate.lambda.abs() < 1e-14);
        assert!(phase.abs() < 1e-14);
    }

    #[test]
    fn zyz_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..500 {
            let u = random_u2(&mut rng);
            let (gate, phase) =
                zyz_decompose(&UnitaryMatrix::new(u.clone()).unwrap()).unwrap();
            let rebuilt = gate.matrix().scale(Complex64::from_polar(1.0, phase));
            assert!(rebuilt.max_abs_diff(&u) < 1e-10);
        }
    }

    #[test]
    fn invariants_of_identity_and_cnot() {
        // Oracle: direct evaluation in the magic basis.
        let id = makhlin_invariants(
            &UnitaryMatrix::new(ComplexMatrix::identity(4)).unwrap(),
        )
        .unwrap();
        assert!((id.g1 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((id.g2 - 3.0).abs() < 1e-12);

        let cnot = makhlin_invariants(&UnitaryMatrix::new(cnot_matrix()).unwrap()).unwrap();
        assert!(cnot.g1.norm() < 1e-12);
        assert!((cnot.g2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariants_stable_under_local_dressing() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..1000 {
            let u = random_so4(&mut rng);
            let base = makhlin_invariants(&u).unwrap();
            let dressed = tensor_product(&random_u2(&mut rng), &random_u2(&mut rng))
                .mul(u.matrix())
                .mul(&tensor_product(&random_u2(&mut rng), &random_u2(&mut rng)));
            let dressed_inv =
                makhlin_invariants(&UnitaryMatrix::new(dressed).unwrap()).unwrap();
            assert!((base.g1 - dressed_inv.g1).norm() < 1e-9);
            assert!((base.g2 - dressed_inv.g2).abs() < 1e-9);
        }
    }

    #[test]
    fn decompose_identity_and_cnot() {
        for u in [ComplexMatrix::identity(4), cnot_matrix()] {
            let r = decompose_two_qubit(&UnitaryMatrix::new(u).unwrap()).unwrap();
            assert!(r.residual <= 1e-8);
            assert_eq!(r.cnots.len(), 2);
        }
    }

    #[test]
    fn decompose_separable_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let sep = tensor_product(&random_u2(&mut rng), &random_u2(&mut rng));
        let r = decompose_two_qubit(&UnitaryMatrix::new(sep).unwrap()).unwrap();
        assert!(r.residual <= 1e-8);
        // Snapped mid-layer: both mid gates reduce to z rotations (theta 0).
        assert!(r.locals[2].theta.abs() < 1e-9);
        assert!(r.locals[3].theta.abs() < 1e-9);
    }

    #[test]
    fn decompose_random_so4_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let u = random_so4(&mut rng);
            let r = decompose_two_qubit(&u).unwrap();
            worst = worst.max(r.residual);
        }
        assert!(worst <= 1e-8, "worst residual {worst}");
    }

    #[test]
    fn decompose_two_cnot_circuits_always_pass_class_test() {
        // Matrices built as locals CNOT locals CNOT locals are in-class by
        // construction and must decompose.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let cnot = cnot_matrix();
        for _ in 0..200 {
            let u = tensor_product(&random_u2(&mut rng), &random_u2(&mut rng))
                .mul(&cnot)
                .mul(&tensor_product(&random_u2(&mut rng), &random_u2(&mut rng)))
                .mul(&cnot)
                .mul(&tensor_product(&random_u2(&mut rng), &random_u2(&mut rng)));
            let u = UnitaryMatrix::new(u).unwrap();
            let inv = makhlin_invariants(&u).unwrap();
            assert!(within_two_cnot_class(&inv), "in-class gate rejected: {inv:?}");
            let r = decompose_two_qubit(&u).unwrap();
            assert!(r.residual <= 1e-8);
        }
    }

    #[test]
    fn decompose_rejects_generic_three_cnot_gates() {
        // A generic SU(4) element sits outside the class; build one from a
        // canonical interaction with all three coordinates nonzero.
        let x = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let y = ComplexMatrix::from_rows(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let z = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let h = tensor_product(&x, &x)
            .scale(Complex64::new(0.4, 0.0))
            .add(&tensor_product(&y, &y).scale(Complex64::new(0.3, 0.0)))
            .add(&tensor_product(&z, &z).scale(Complex64::new(0.2, 0.0)));
        let u = UnitaryMatrix::new(crate::linalg::expm_i_hermitian(&h, 0.5)).unwrap();
        match decompose_two_qubit(&u) {
            Err(SynthesisError::RequiresThreeCnots { .. }) => {}
            other => panic!("expected three-CNOT rejection, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_preserves_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let u = random_so4(&mut rng);
        let r = decompose_two_qubit(&u).unwrap();
        let rebuilt = UnitaryMatrix::new(r.reconstruct()).unwrap();
        let a = makhlin_invariants(&u).unwrap();
        let b = makhlin_invariants(&rebuilt).unwrap();
        assert!((a.g1 - b.g1).norm() < 1e-9);
        assert!((a.g2 - b.g2).abs() < 1e-9);
    }

    #[test]
    fn decomposition_file_rounds_angles() {
        let r = decompose_two_qubit(&UnitaryMatrix::new(cnot_matrix()).unwrap()).unwrap();
        let file = DecompositionFile::from_result(&r);
        let json = serde_json::to_string(&file).unwrap();
        let back: DecompositionFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.locals.len(), 6);
        assert_eq!(back.cnots.len(), 2);
    }
}
