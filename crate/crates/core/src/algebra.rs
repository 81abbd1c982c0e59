//! Quaternions, small dense complex matrices, Pauli tensor generators and a
//! Hermitian eigen-solver for the 4x4 and 8x8 matrices used everywhere else.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::states::StateCase;
use crate::{Error, Result};

/// Largest matrix dimension handled by [`CMatrix`].
pub const MAX_DIM: usize = 8;

/// Absolute tolerance on `max |A[r][c] - conj(A[c][r])|`.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A real quaternion `a + b*i + c*j + d*k`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.a, -self.b, -self.c, -self.d)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// The 2x2 complex block `[[a - i d, i b + c], [i b - c, a + i d]]`.
    ///
    /// This is a faithful representation: products map to matrix products
    /// and [`Quaternion::conj`] maps to the conjugate transpose.
    pub fn to_block(self) -> CMatrix {
        let mut m = CMatrix::zeros(2);
        m[(0, 0)] = Complex64::new(self.a, -self.d);
        m[(0, 1)] = Complex64::new(self.c, self.b);
        m[(1, 0)] = Complex64::new(-self.c, self.b);
        m[(1, 1)] = Complex64::new(self.a, self.d);
        m
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product, `i^2 = j^2 = k^2 = ijk = -1`.
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
            p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
            p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
            p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
        )
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, q: Quaternion) -> Quaternion {
        Quaternion::new(self.a + q.a, self.b + q.b, self.c + q.c, self.d + q.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

pub fn quat_mul(p: Quaternion, q: Quaternion) -> Quaternion {
    p * q
}

pub fn quat_conj(q: Quaternion) -> Quaternion {
    q.conj()
}

pub fn quat_to_block(q: Quaternion) -> CMatrix {
    q.to_block()
}

/// Dense square complex matrix of dimension at most [`MAX_DIM`], stored
/// inline so the sampling loop never allocates.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: [Complex64; MAX_DIM * MAX_DIM],
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&n),
            "matrix dimension {n} out of range"
        );
        CMatrix {
            n,
            data: [ZERO; MAX_DIM * MAX_DIM],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn set_zero(&mut self) {
        self.data = [ZERO; MAX_DIM * MAX_DIM];
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_fn(self.n, |r, c| self[(r, c)] * s)
    }

    /// Kronecker product; the result must still fit in [`MAX_DIM`].
    pub fn kron(&self, other: &CMatrix) -> Self {
        let (n, m) = (self.n, other.n);
        Self::from_fn(n * m, |r, c| self[(r / m, c / m)] * other[(r % m, c % m)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.entries()
            .zip(other.entries())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for r in 0..self.n {
            for c in r..self.n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= HERMITIAN_TOL
    }

    fn entries(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).flat_map(move |r| (0..self.n).map(move |c| self[(r, c)]))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.n && c < self.n);
        &self.data[r * MAX_DIM + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.n && c < self.n);
        &mut self.data[r * MAX_DIM + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        CMatrix::from_fn(self.n, |r, c| self[(r, c)] + rhs[(r, c)])
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        CMatrix::from_fn(self.n, |r, c| self[(r, c)] - rhs[(r, c)])
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.n, self.n)?;
        for r in 0..self.n {
            write!(f, "  ")?;
            for c in 0..self.n {
                let z = self[(r, c)];
                write!(f, "{:>9.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// The 2x2 Pauli matrix `sigma_k`, with `sigma_0 = I`.
pub fn pauli(k: u8) -> CMatrix {
    let mut m = CMatrix::zeros(2);
    match k {
        0 => {
            m[(0, 0)] = ONE;
            m[(1, 1)] = ONE;
        }
        1 => {
            m[(0, 1)] = ONE;
            m[(1, 0)] = ONE;
        }
        2 => {
            m[(0, 1)] = -I;
            m[(1, 0)] = I;
        }
        3 => {
            m[(0, 0)] = ONE;
            m[(1, 1)] = -ONE;
        }
        _ => panic!("pauli index {k} out of range"),
    }
    m
}

/// Index of a generator: a Pauli pair `(i, j)` for rebits and qubits, a
/// Pauli triple `(i, j, k)` for quaterbits. The first factor is the most
/// significant tensor slot.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeneratorLabel {
    case: StateCase,
    paulis: [u8; 3],
}

const fn pair(case: StateCase, i: u8, j: u8) -> GeneratorLabel {
    GeneratorLabel {
        case,
        paulis: [i, j, 0],
    }
}

const fn triple(i: u8, j: u8, k: u8) -> GeneratorLabel {
    GeneratorLabel {
        case: StateCase::Quaterbit,
        paulis: [i, j, k],
    }
}

const fn qubit(i: u8, j: u8) -> GeneratorLabel {
    pair(StateCase::Qubit, i, j)
}

const fn rebit(i: u8, j: u8) -> GeneratorLabel {
    pair(StateCase::Rebit, i, j)
}

static QUBIT_LABELS: [GeneratorLabel; 15] = [
    qubit(0, 1),
    qubit(0, 2),
    qubit(0, 3),
    qubit(1, 0),
    qubit(1, 1),
    qubit(1, 2),
    qubit(1, 3),
    qubit(2, 0),
    qubit(2, 1),
    qubit(2, 2),
    qubit(2, 3),
    qubit(3, 0),
    qubit(3, 1),
    qubit(3, 2),
    qubit(3, 3),
];

// Real symmetric Pauli products: no sigma_y, or sigma_y in both slots.
static REBIT_LABELS: [GeneratorLabel; 9] = [
    rebit(0, 1),
    rebit(0, 3),
    rebit(1, 0),
    rebit(1, 1),
    rebit(1, 3),
    rebit(2, 2),
    rebit(3, 0),
    rebit(3, 1),
    rebit(3, 3),
];

// Traceless 4x4 quaternionic Hermitian matrices, written as 8x8 complex
// matrices with the quaternion unit in the last slot.
static QUATERBIT_LABELS: [GeneratorLabel; 27] = [
    triple(3, 0, 0),
    triple(0, 3, 0),
    triple(3, 3, 0),
    triple(0, 1, 0),
    triple(3, 1, 0),
    triple(0, 2, 1),
    triple(3, 2, 1),
    triple(0, 2, 2),
    triple(3, 2, 2),
    triple(0, 2, 3),
    triple(3, 2, 3),
    triple(1, 0, 0),
    triple(1, 3, 0),
    triple(2, 0, 1),
    triple(2, 3, 1),
    triple(2, 0, 2),
    triple(2, 3, 2),
    triple(2, 0, 3),
    triple(2, 3, 3),
    triple(1, 1, 0),
    triple(2, 2, 0),
    triple(1, 2, 1),
    triple(2, 1, 1),
    triple(1, 2, 2),
    triple(2, 1, 2),
    triple(1, 2, 3),
    triple(2, 1, 3),
];

/// The generator labels of a case, in coefficient-vector order.
pub fn generator_labels(case: StateCase) -> &'static [GeneratorLabel] {
    match case {
        StateCase::Rebit => &REBIT_LABELS,
        StateCase::Qubit => &QUBIT_LABELS,
        StateCase::Quaterbit => &QUATERBIT_LABELS,
    }
}

impl GeneratorLabel {
    /// Validates `indices` against the label set of `case`.
    pub fn new(case: StateCase, indices: &[u8]) -> Result<Self> {
        generator_labels(case)
            .iter()
            .copied()
            .find(|l| l.indices() == indices)
            .ok_or_else(|| Error::InvalidLabel {
                case: case.name(),
                label: indices.to_vec(),
            })
    }

    pub fn case(&self) -> StateCase {
        self.case
    }

    pub fn indices(&self) -> &[u8] {
        &self.paulis[..self.case.tensor_factors()]
    }

    /// Pauli index of the second subsystem; the partial transpose acts here.
    pub fn second(&self) -> u8 {
        self.paulis[1]
    }

    /// Position of this label in its case's coefficient vector.
    pub fn position(&self) -> usize {
        generator_labels(self.case)
            .iter()
            .position(|l| l == self)
            .expect("labels are only constructed from the static tables")
    }

    /// The generator as a Pauli tensor product with unit entries.
    pub fn pauli_tensor(&self) -> PauliTensor {
        PauliTensor::new(self.indices())
    }
}

impl fmt::Debug for GeneratorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.case.name())?;
        for i in self.indices() {
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

/// A tensor product of Pauli matrices in sparse form: every row has exactly
/// one nonzero entry, of modulus one.
#[derive(Clone, Copy, Debug)]
pub struct PauliTensor {
    n: usize,
    cols: [u8; MAX_DIM],
    vals: [Complex64; MAX_DIM],
}

impl PauliTensor {
    pub fn new(paulis: &[u8]) -> Self {
        let n = 1usize << paulis.len();
        assert!(n <= MAX_DIM, "too many tensor factors");
        let mut cols = [0u8; MAX_DIM];
        let mut vals = [ZERO; MAX_DIM];
        for row in 0..n {
            let mut col = 0usize;
            let mut val = ONE;
            for (slot, &p) in paulis.iter().enumerate() {
                let shift = paulis.len() - 1 - slot;
                let bit = (row >> shift) & 1;
                let (c, v) = match p {
                    0 => (bit, ONE),
                    1 => (bit ^ 1, ONE),
                    2 => (bit ^ 1, if bit == 0 { -I } else { I }),
                    3 => (bit, if bit == 0 { ONE } else { -ONE }),
                    _ => panic!("pauli index {p} out of range"),
                };
                col |= c << shift;
                val *= v;
            }
            cols[row] = col as u8;
            vals[row] = val;
        }
        PauliTensor { n, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(column, value)` of the single nonzero entry in `row`.
    #[inline]
    pub fn entry(&self, row: usize) -> (usize, Complex64) {
        (self.cols[row] as usize, self.vals[row])
    }

    pub fn to_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n);
        for r in 0..self.n {
            let (c, v) = self.entry(r);
            m[(r, c)] = v;
        }
        m
    }
}

/// The orthonormalized generator of `label`: the Pauli tensor product
/// divided by `sqrt(d)`, so that `Tr(G_a G_b) = delta_ab`.
pub fn generator_matrix(label: GeneratorLabel) -> Result<CMatrix> {
    // Re-validate: labels are only built from the tables, but a label of the
    // wrong dimension here would silently produce garbage.
    let label = GeneratorLabel::new(label.case, label.indices())?;
    let t = label.pauli_tensor();
    Ok(t.to_matrix()
        .scale(Complex64::new(1.0 / (t.dim() as f64).sqrt(), 0.0)))
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let mut a = h.clone();
    jacobi_diagonalize(&mut a);
    let mut ev: Vec<f64> = (0..a.n).map(|i| a[(i, i)].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &CMatrix) -> Result<f64> {
    check_hermitian(h)?;
    let mut a = h.clone();
    jacobi_diagonalize(&mut a);
    Ok((0..a.n).map(|i| a[(i, i)].re).fold(f64::INFINITY, f64::min))
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic complex Jacobi. On return the diagonal of `a` holds the
/// eigenvalues; the off-diagonal part is negligible.
///
/// Each rotation is `J = S R S^H` with `S = diag(1, conj(e))` removing the
/// phase `e` of the pivot and `R` a real Jacobi rotation.
fn jacobi_diagonalize(a: &mut CMatrix) {
    let n = a.n;
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return;
    }
    let threshold = (f64::EPSILON * scale) * (f64::EPSILON * scale);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= threshold {
            return;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let e = apq / g;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + theta.hypot(1.0))
                } else {
                    0.0
                };
                if t == 0.0 {
                    continue;
                }
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                let jpq = e * s;
                let jqp = -e.conj() * s;
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * c;
                }
                // A <- J^H A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * jqp.conj();
                    a[(q, k)] = apk * jpq.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
            }
        }
    }
}

/// Attempts a Cholesky factorization of `h + shift * I` without storing the
/// factor beyond what the recurrence needs. Returns `true` iff every pivot is
/// strictly positive.
fn cholesky_succeeds(h: &CMatrix, shift: f64) -> bool {
    let n = h.n;
    let mut l = [[ZERO; MAX_DIM]; MAX_DIM];
    for j in 0..n {
        let mut d = h[(j, j)].re + shift;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let ljj = d.sqrt();
        l[j][j] = Complex64::new(ljj, 0.0);
        let inv = 1.0 / ljj;
        for i in j + 1..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s * inv;
        }
    }
    true
}

/// Margin used by the Cholesky pre-tests of [`is_psd`].
const CHOLESKY_MARGIN: f64 = 1e-9;

/// Decides `min_eigenvalue(h) >= -tol` for Hermitian `h`.
///
/// Two shifted Cholesky attempts settle every matrix whose smallest
/// eigenvalue is farther than `1e-9` from zero; only the remainder goes
/// through the eigen-solver. The answer therefore matches the eigenvalue
/// criterion exactly, up to Cholesky round-off far below the margin.
pub fn is_psd(h: &CMatrix, tol: f64) -> bool {
    debug_assert!(h.hermitian_deviation() <= HERMITIAN_TOL);
    if tol < CHOLESKY_MARGIN {
        if !cholesky_succeeds(h, CHOLESKY_MARGIN) {
            return false;
        }
        if cholesky_succeeds(h, -CHOLESKY_MARGIN) {
            return true;
        }
    }
    let mut a = h.clone();
    jacobi_diagonalize(&mut a);
    (0..a.n).all(|i| a[(i, i)].re >= -tol)
}
