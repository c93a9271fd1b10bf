//! Dense complex linear algebra for two-level and four-level systems.
//!
//! Everything in the discrimination pipeline lives at dimension 2 or 4, so
//! the matrix type is a plain row-major buffer and the eigensolvers are a
//! closed form (2x2) plus cyclic Jacobi sweeps (4x4). No general-purpose
//! decomposition library is pulled in for this.

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for structural invariants (unitarity, Hermiticity, trace).
pub const TOL_STRUCTURAL: f64 = 1e-10;
/// Tolerance for algebraic identities (round trips, trace preservation).
pub const TOL_ALGEBRAIC: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPositive { eigenvalue: f64 },
    #[error("trace is {trace:.12} but must be 1")]
    BadTrace { trace: f64 },
    #[error("matrix is not antisymmetric (max deviation {deviation:.3e})")]
    NotAntisymmetric { deviation: f64 },
    #[error("Bloch vector has norm {norm:.12} > 1")]
    BlochNorm { norm: f64 },
    #[error("non-finite entry in matrix")]
    NonFinite,
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from a row-major slice of entries.
    pub fn from_rows(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        Self { rows, cols, data: data.to_vec() }
    }

    /// Build from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn conjugate(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn determinant(&self) -> Complex64 {
        assert!(self.is_square());
        // LU with partial pivoting; n is at most 4 here.
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex64::new(1.0, 0.0);
        for k in 0..n {
            let (mut pivot, mut pv) = (k, a[(k, k)].norm());
            for r in k + 1..n {
                if a[(r, k)].norm() > pv {
                    pivot = r;
                    pv = a[(r, k)].norm();
                }
            }
            if pv == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            if pivot != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(pivot, j)];
                    a[(pivot, j)] = t;
                }
                det = -det;
            }
            det *= a[(k, k)];
            for r in k + 1..n {
                let f = a[(r, k)] / a[(k, k)];
                for j in k..n {
                    let corr = f * a[(k, j)];
                    a[(r, j)] -= corr;
                }
            }
        }
        det
    }

    /// Largest absolute entry of self - other.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real part, entrywise.
    pub fn real_part(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| Complex64::new(z.re, 0.0)).collect(),
        }
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint().mul(self).max_abs_diff(&Self::identity(self.cols))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Flip the sign of one column in place.
    pub fn negate_column(&mut self, j: usize) {
        for i in 0..self.rows {
            self[(i, j)] = -self[(i, j)];
        }
    }

    /// Reorder columns by `perm`: new column k is old column perm[k].
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.cols);
        let mut out = Self::zeros(self.rows, self.cols);
        for (k, &p) in perm.iter().enumerate() {
            for i in 0..self.rows {
                out[(i, k)] = self[(i, p)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Unitary matrix, validated to `TOL_STRUCTURAL` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        if !matrix.is_square() {
            return Err(LinalgError::Dimension {
                expected: "square".into(),
                got: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let dev = matrix.unitarity_deviation();
        if dev > TOL_STRUCTURAL {
            return Err(LinalgError::NotUnitary { deviation: dev });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint() }
    }
}

/// Density matrix: Hermitian, unit trace, positive semidefinite (all to tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_finite() {
            return Err(LinalgError::NonFinite);
        }
        if !matrix.is_square() {
            return Err(LinalgError::Dimension {
                expected: "square".into(),
                got: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        let herm = matrix.hermiticity_deviation();
        if herm > TOL_STRUCTURAL {
            return Err(LinalgError::NotHermitian { deviation: herm });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_STRUCTURAL || tr.im.abs() > TOL_STRUCTURAL {
            return Err(LinalgError::BadTrace { trace: tr.re });
        }
        let eigs = hermitian_eigenvalues(&matrix);
        if let Some(&lo) = eigs.first() {
            if lo < -TOL_STRUCTURAL {
                return Err(LinalgError::NotPositive { eigenvalue: lo });
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.rows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// Point in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, LinalgError> {
        let norm2 = x * x + y * y + z * z;
        if norm2 > 1.0 + TOL_STRUCTURAL {
            return Err(LinalgError::BlochNorm { norm: norm2.sqrt() });
        }
        Ok(Self { x, y, z })
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// rho = (I + x sx + y sy + z sz) / 2.
pub fn bloch_to_density(b: BlochVector) -> DensityMatrix {
    let half = 0.5;
    let m = ComplexMatrix::from_rows(
        2,
        2,
        &[
            Complex64::new(half * (1.0 + b.z), 0.0),
            Complex64::new(half * b.x, -half * b.y),
            Complex64::new(half * b.x, half * b.y),
            Complex64::new(half * (1.0 - b.z), 0.0),
        ],
    );
    DensityMatrix::new(m).expect("Bloch ball point always yields a valid density matrix")
}

/// Bloch vector of a 2x2 density matrix.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector, LinalgError> {
    let m = rho.matrix();
    if m.rows() != 2 {
        return Err(LinalgError::Dimension {
            expected: "2x2".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    BlochVector::new(
        2.0 * m[(1, 0)].re,
        2.0 * m[(1, 0)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    )
}

/// Kronecker product; the first argument is the most significant subsystem.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Which tensor factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// Most significant factor (the first argument of `tensor_product`).
    First,
    /// Least significant factor.
    Second,
}

/// Partial trace of a 4x4 matrix down to the kept 2x2 factor.
pub fn partial_trace(m: &ComplexMatrix, keep: Subsystem) -> Result<ComplexMatrix, LinalgError> {
    if m.rows() != 4 || m.cols() != 4 {
        return Err(LinalgError::Dimension {
            expected: "4x4".into(),
            got: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let mut out = ComplexMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..2 {
                s += match keep {
                    Subsystem::First => m[(2 * i + k, 2 * j + k)],
                    Subsystem::Second => m[(2 * k + i, 2 * k + j)],
                };
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// exp(a) for a real antisymmetric matrix, by scaling and squaring.
///
/// The result is a rotation (special orthogonal), verified against
/// `TOL_STRUCTURAL` before being handed back.
pub fn expm_antisymmetric(a: &ComplexMatrix) -> Result<UnitaryMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::Dimension {
            expected: "square".into(),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let imag = a.max_imag();
    let asym = a.add(&a.transpose()).max_abs();
    if imag > TOL_ALGEBRAIC || asym > TOL_ALGEBRAIC {
        return Err(LinalgError::NotAntisymmetric { deviation: imag.max(asym) });
    }
    UnitaryMatrix::new(expm(a))
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub(crate) fn expm(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.rows();
    let norm = a.max_abs() * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a.scale(Complex64::new(scale, 0.0));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=24 {
        term = term.mul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        result = result.add(&term);
        if term.max_abs() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// exp(i * scale * h) for Hermitian h, via eigendecomposition.
pub(crate) fn expm_i_hermitian(h: &ComplexMatrix, scale: f64) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(h);
    let d: Vec<Complex64> = vals
        .iter()
        .map(|&l| Complex64::from_polar(1.0, scale * l))
        .collect();
    vecs.mul(&ComplexMatrix::diagonal(&d)).mul(&vecs.adjoint())
}

/// Eigenvalues of a Hermitian matrix, ascending. Closed form at 2x2,
/// cyclic Jacobi otherwise.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    match m.rows() {
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)].norm();
            let mean = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            vec![mean - disc, mean + disc]
        }
        _ => {
            let (mut vals, _) = hermitian_eigen(m);
            vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
            vals
        }
    }
}

/// Full Hermitian eigendecomposition by cyclic Jacobi sweeps.
///
/// Returns (eigenvalues, eigenvector matrix V) with m = V diag(vals) V^dag.
/// Eigenvalues are in the order matching V's columns, not sorted.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off < 1e-15 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-18 {
                    continue;
                }
                // Unitary 2x2 rotation eliminating a[(p,q)]:
                // factor out the phase of apq, then a real Jacobi rotation
                // with the inner (small-angle) root for stability.
                let phase = apq / apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (tau * tau + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let cp = Complex64::new(c, 0.0);
                let sp = phase * s;
                // Columns transform: new_p = c*p - conj(sp)*q ... apply G on right of V,
                // and G^dag A G on A with G[[c, s*phase],[-s*conj(phase), c]] arranged so
                // that the (p,q) entry vanishes.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = cp * aip - sp.conj() * aiq;
                    a[(i, q)] = sp * aip + cp * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = cp * apj - sp * aqj;
                    a[(q, j)] = sp.conj() * apj + cp * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = cp * vip - sp.conj() * viq;
                    v[(i, q)] = sp * vip + cp * viq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[(i, i)].re).collect();
    (vals, v)
}
