//! Dense complex linear algebra for small Hilbert spaces (dimension ≤ 16).
//!
//! Matrices are stored row-major. The Hermitian eigensolver is a cyclic
//! complex Jacobi iteration; unitary propagators are built from the
//! eigendecomposition so that they are unitary to rounding.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{HolonomyError, Result};

/// Relative Hermiticity tolerance: `max |A_ij - conj(A_ji)| <= HERMITIAN_RTOL * max |A|`.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Two rays are identified when their fidelity is at least `1 - RAY_EQ_TOL`.
pub const RAY_EQ_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 64;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(HolonomyError::InvalidInput("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(HolonomyError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `max_ij |A_ij - conj(A_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let tolerance = HERMITIAN_RTOL * self.max_abs();
        let deviation = self.hermiticity_deviation();
        if !self.is_finite() || deviation > tolerance {
            return Err(HolonomyError::NotHermitian { deviation, tolerance });
        }
        Ok(())
    }

    pub fn is_hermitian(&self) -> bool {
        self.check_hermitian().is_ok()
    }

    /// `max |U†U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let p = &self.adjoint() * self;
        (&p - &Self::identity(self.dim)).max_abs()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "matrix-vector dimension mismatch");
        (0..self.dim)
            .map(|i| {
                let row = &self.data[i * self.dim..(i + 1) * self.dim];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Applies a unitary to a state. The result is renormalized, which only
    /// absorbs rounding when the matrix really is unitary.
    pub fn apply(&self, state: &State) -> Result<State> {
        if state.dim() != self.dim {
            return Err(HolonomyError::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        State::new(self.mul_vec(state.amplitudes()))
    }

    /// `<psi|A|psi>`.
    pub fn expectation(&self, psi: &State) -> Complex64 {
        let av = self.mul_vec(psi.amplitudes());
        psi.amplitudes().iter().zip(&av).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    amps: Vec<Complex64>,
}

impl State {
    /// Normalizes `amps`. Fails on empty, zero or non-finite input.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(HolonomyError::InvalidInput("empty state vector".into()));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HolonomyError::InvalidInput("non-finite amplitude".into()));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(HolonomyError::InvalidInput("zero-norm state vector".into()));
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The `k`-th standard basis vector.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`; panics on dimension mismatch (see [`overlap`] for the
    /// checked version).
    pub fn braket(&self, other: &State) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "state dimension mismatch");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `e^{i alpha} |self>`.
    pub fn with_phase(&self, alpha: f64) -> Self {
        self.scaled_unit(Complex64::from_polar(1.0, alpha))
    }

    /// Multiplies by a unit-modulus factor without renormalizing.
    pub(crate) fn scaled_unit(&self, u: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|z| z * u).collect(),
        }
    }

    /// `lambda |self>`, renormalized.
    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        Self::new(self.amps.iter().map(|z| z * lambda).collect())
    }

    pub fn fidelity(&self, other: &State) -> f64 {
        self.braket(other).norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Checked inner product `<a|b>`.
pub fn overlap(a: &State, b: &State) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.braket(b))
}

/// A point of projective Hilbert space.
///
/// The stored representative is in canonical gauge: the first component of
/// (numerically) largest modulus is real and non-negative.
#[derive(Clone, Debug)]
pub struct Ray {
    representative: State,
}

impl Ray {
    pub fn new(state: &State) -> Self {
        Self {
            representative: canonical_gauge(state),
        }
    }

    pub fn representative(&self) -> &State {
        &self.representative
    }

    pub fn fidelity(&self, other: &Ray) -> f64 {
        self.representative.fidelity(&other.representative)
    }

    /// Fubini-Study distance `arccos |<a|b>|`, in [0, π/2].
    pub fn distance(&self, other: &Ray) -> f64 {
        self.representative.braket(&other.representative).norm().min(1.0).acos()
    }
}

impl PartialEq for Ray {
    fn eq(&self, other: &Self) -> bool {
        self.representative.dim() == other.representative.dim() && self.fidelity(other) >= 1.0 - RAY_EQ_TOL
    }
}

fn canonical_gauge(state: &State) -> State {
    let max = state.amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = state
        .amps
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let z = state.amps[pivot];
    if z.norm() == 0.0 {
        return state.clone();
    }
    state.scaled_unit(z.conj() / z.norm())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Vec<State>,
    /// Minimum adjacent eigenvalue spacing (`+inf` in dimension 1).
    pub gap: f64,
}

impl EigenSystem {
    /// Distance from eigenvalue `level` to its nearest neighbour.
    pub fn level_gap(&self, level: usize) -> f64 {
        let mut g = f64::INFINITY;
        if level > 0 {
            g = g.min(self.values[level] - self.values[level - 1]);
        }
        if level + 1 < self.values.len() {
            g = g.min(self.values[level + 1] - self.values[level]);
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvectors are returned in canonical ray gauge. Eigenvalues equal within
/// `1e-12 * max|H|` keep the order of the diagonal positions they converged to.
pub fn eigh(h: &ComplexMatrix) -> Result<EigenSystem> {
    h.check_hermitian()?;
    let n = h.dim();
    let scale = h.max_abs();
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-16 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q, scale);
                }
            }
        }
    }

    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    // Runs of tied eigenvalues go back to index order.
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && raw[order[end]] - raw[order[end - 1]] <= tie {
            end += 1;
        }
        order[start..end].sort_unstable();
        start = end;
    }

    let values: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let amps = (0..n).map(|row| v[(row, col)]).collect();
            State::new(amps).map(|s| canonical_gauge(&s))
        })
        .collect::<Result<Vec<_>>>()?;
    let gap = values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(EigenSystem { values, vectors, gap })
}

/// One two-sided rotation annihilating `a[p][q]`.
///
/// The phase of `a[p][q]` is first removed by `diag(1, e^{-i phi})`, then a
/// real Jacobi rotation diagonalizes the real 2x2 block.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, scale: f64) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag <= 1e-300 || mag <= 1e-18 * scale {
        return;
    }
    let n = a.dim();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
    let (s, c) = theta.sin_cos();
    let phase = (apq / mag).conj();
    let g00 = Complex64::new(c, 0.0);
    let g01 = Complex64::new(s, 0.0);
    let g10 = phase * (-s);
    let g11 = phase * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g00 + akq * g10;
        a[(k, q)] = akp * g01 + akq * g11;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g00.conj() * apk + g10.conj() * aqk;
        a[(q, k)] = g01.conj() * apk + g11.conj() * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g00 + vkq * g10;
        v[(k, q)] = vkp * g01 + vkq * g11;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// `exp(-i H dt / hbar)` through the eigendecomposition of `H`.
pub fn expm_unitary(h: &ComplexMatrix, dt: f64, hbar: f64) -> Result<ComplexMatrix> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(HolonomyError::InvalidInput(format!(
            "hbar must be positive, got {hbar}"
        )));
    }
    if !dt.is_finite() {
        return Err(HolonomyError::InvalidInput("non-finite time step".into()));
    }
    let eig = eigh(h)?;
    Ok(spectral_unitary(&eig, dt / hbar))
}

/// `sum_k e^{-i lambda_k tau} |v_k><v_k|`.
pub(crate) fn spectral_unitary(eig: &EigenSystem, tau: f64) -> ComplexMatrix {
    let n = eig.dim();
    let mut u = ComplexMatrix::zeros(n);
    for (lambda, vec) in eig.values.iter().zip(&eig.vectors) {
        let f = Complex64::from_polar(1.0, -lambda * tau);
        let amps = vec.amplitudes();
        for i in 0..n {
            let fi = f * amps[i];
            for j in 0..n {
                u[(i, j)] += fi * amps[j].conj();
            }
        }
    }
    u
}
