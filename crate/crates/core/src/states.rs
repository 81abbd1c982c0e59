//! State families, the coefficient chart, and the positivity and partial
//! transpose tests.
//!
//! A state of each family is written `rho = I/d + sum_a c_a G_a` over the
//! orthonormal generators `G_a` of [`crate::algebra::generator_matrix`], so the
//! coefficient vector `c` is an isometric Hilbert-Schmidt chart and
//! `Tr(rho^2) = 1/d + |c|^2`. Every density matrix therefore lies in the ball
//! `|c|^2 <= 1 - 1/d`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::algebra::{self, generator_labels, CMatrix, GeneratorLabel, PauliTensor, Quaternion};
use crate::{Error, Result};

/// `lambda_min >= -POSITIVITY_TOL` counts as positive semidefinite.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Reconstruction residual above which a matrix is declared outside the span.
pub const SPAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StateCase {
    Rebit,
    Qubit,
    Quaterbit,
}

impl StateCase {
    pub const ALL: [StateCase; 3] = [StateCase::Rebit, StateCase::Qubit, StateCase::Quaterbit];

    pub const fn name(self) -> &'static str {
        match self {
            StateCase::Rebit => "rebit",
            StateCase::Qubit => "qubit",
            StateCase::Quaterbit => "quaterbit",
        }
    }

    /// Dimension `d` of the complex density matrix.
    pub const fn dim(self) -> usize {
        match self {
            StateCase::Rebit | StateCase::Qubit => 4,
            StateCase::Quaterbit => 8,
        }
    }

    /// Number `m` of real coefficients.
    pub const fn coeff_dim(self) -> usize {
        match self {
            StateCase::Rebit => 9,
            StateCase::Qubit => 15,
            StateCase::Quaterbit => 27,
        }
    }

    /// Largest purity `Tr(rho^2)` of a state. Quaternionic Hermitian matrices
    /// have doubly degenerate spectra, so a quaterbit state has at least two
    /// equal nonzero eigenvalues and purity at most 1/2.
    pub const fn max_purity(self) -> f64 {
        match self {
            StateCase::Rebit | StateCase::Qubit => 1.0,
            StateCase::Quaterbit => 0.5,
        }
    }

    /// Outsphere radius `sqrt(max_purity - 1/d)`: `sqrt(3/4)` for rebits and
    /// qubits, `sqrt(3/8)` for quaterbits.
    pub fn radius(self) -> f64 {
        (self.max_purity() - 1.0 / self.dim() as f64).sqrt()
    }

    /// The series parameter whose `P(alpha)` is conjectured to be this
    /// family's separability probability.
    pub const fn alpha(self) -> f64 {
        match self {
            StateCase::Rebit => 0.5,
            StateCase::Qubit => 1.0,
            StateCase::Quaterbit => 2.0,
        }
    }

    pub(crate) const fn tensor_factors(self) -> usize {
        match self {
            StateCase::Rebit | StateCase::Qubit => 2,
            StateCase::Quaterbit => 3,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for StateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StateCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown case `{s}`")))
    }
}

struct GeneratorTable {
    tensors: Vec<PauliTensor>,
    pt_signs: Vec<f64>,
}

fn table(case: StateCase) -> &'static GeneratorTable {
    static TABLES: [OnceLock<GeneratorTable>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[case.index()].get_or_init(|| {
        let labels = generator_labels(case);
        GeneratorTable {
            tensors: labels.iter().map(GeneratorLabel::pauli_tensor).collect(),
            // sigma_y^T = -sigma_y; the other Paulis are symmetric
            pt_signs: labels
                .iter()
                .map(|l| if l.second() == 2 { -1.0 } else { 1.0 })
                .collect(),
        }
    })
}

/// Real coordinates of a state in its family's generator basis.
#[derive(Clone, PartialEq)]
pub struct CoeffVector {
    case: StateCase,
    coeffs: Vec<f64>,
}

impl CoeffVector {
    pub fn new(case: StateCase, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != case.coeff_dim() {
            return Err(Error::DimensionMismatch {
                expected: case.coeff_dim(),
                found: coeffs.len(),
            });
        }
        Ok(CoeffVector { case, coeffs })
    }

    pub fn zeros(case: StateCase) -> Self {
        CoeffVector {
            case,
            coeffs: vec![0.0; case.coeff_dim()],
        }
    }

    /// Builds a vector from `(label indices, value)` pairs; unnamed labels are 0.
    pub fn from_labels(case: StateCase, entries: &[(&[u8], f64)]) -> Result<Self> {
        let mut v = Self::zeros(case);
        for (idx, value) in entries {
            let pos = GeneratorLabel::new(case, idx)?.position();
            v.coeffs[pos] = *value;
        }
        Ok(v)
    }

    pub fn case(&self) -> StateCase {
        self.case
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, label: &[u8]) -> Result<f64> {
        Ok(self.coeffs[GeneratorLabel::new(self.case, label)?.position()])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Writes `I/d + sum_a c_a G_a` into `out`, which must have dimension `d`.
    pub fn write_density(&self, out: &mut CMatrix) {
        let d = self.case.dim();
        assert_eq!(out.dim(), d);
        out.set_zero();
        let diag = Complex64::new(1.0 / d as f64, 0.0);
        for i in 0..d {
            out[(i, i)] = diag;
        }
        let norm = 1.0 / (d as f64).sqrt();
        for (&c, t) in self.coeffs.iter().zip(&table(self.case).tensors) {
            if c == 0.0 {
                continue;
            }
            let s = c * norm;
            for row in 0..d {
                let (col, val) = t.entry(row);
                out[(row, col)] += val * s;
            }
        }
    }

    pub fn partial_transpose_in_place(&mut self) {
        for (c, s) in self.coeffs.iter_mut().zip(&table(self.case).pt_signs) {
            *c *= s;
        }
    }
}

impl fmt::Debug for CoeffVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoeffVector({}, {:?})", self.case, self.coeffs)
    }
}

/// `rho = I/d + sum_a c_a G_a`.
pub fn coeffs_to_density(v: &CoeffVector) -> CMatrix {
    let mut m = CMatrix::zeros(v.case.dim());
    v.write_density(&mut m);
    m
}

/// Projects `rho` onto the generators, `c_a = Tr(rho G_a)`, and checks that
/// nothing is lost in the projection.
pub fn density_to_coeffs(rho: &CMatrix, case: StateCase) -> Result<CoeffVector> {
    let d = case.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let deviation = rho.hermitian_deviation();
    if deviation > algebra::HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let norm = 1.0 / (d as f64).sqrt();
    let coeffs = table(case)
        .tensors
        .iter()
        .map(|t| {
            // Tr(rho T) = sum_k rho[col(k)][k] * T[k][col(k)]
            let tr: Complex64 = (0..d)
                .map(|k| {
                    let (col, val) = t.entry(k);
                    rho[(col, k)] * val
                })
                .sum();
            tr.re * norm
        })
        .collect();
    let v = CoeffVector { case, coeffs };
    // The identity component is pinned to 1/d, so a wrong trace also shows up here.
    let residual = (rho - &coeffs_to_density(&v)).frobenius_norm();
    if residual > SPAN_TOL {
        return Err(Error::OutOfSpan {
            case: case.name(),
            norm: residual,
        });
    }
    Ok(v)
}

/// The traceless part of a two-quaterbit density matrix in quaternionic
/// block form: real diagonal entries and the six upper off-diagonal
/// quaternions, in row-major order `(0,1) (0,2) (0,3) (1,2) (1,3) (2,3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuaterbitBlocks {
    pub diagonal: [f64; 4],
    pub off_diagonal: [Quaternion; 6],
}

const OFF_DIAGONAL_POSITIONS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Trace tolerance for [`QuaterbitBlocks`].
pub const BLOCK_TRACE_TOL: f64 = 1e-14;

impl QuaterbitBlocks {
    fn check_trace(&self) -> Result<()> {
        let sum: f64 = self.diagonal.iter().sum();
        if sum.abs() > BLOCK_TRACE_TOL {
            return Err(Error::TraceCondition { sum });
        }
        Ok(())
    }

    /// Assembles the traceless 8x8 complex matrix directly from the blocks,
    /// placing `q` above the diagonal and `conj(q)` below it.
    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.check_trace()?;
        let mut m = CMatrix::zeros(8);
        for (b, &x) in self.diagonal.iter().enumerate() {
            m[(2 * b, 2 * b)] = Complex64::new(x, 0.0);
            m[(2 * b + 1, 2 * b + 1)] = Complex64::new(x, 0.0);
        }
        for (&(br, bc), q) in OFF_DIAGONAL_POSITIONS.iter().zip(&self.off_diagonal) {
            let upper = q.to_block();
            let lower = q.conj().to_block();
            for r in 0..2 {
                for c in 0..2 {
                    m[(2 * br + r, 2 * bc + c)] = upper[(r, c)];
                    m[(2 * bc + r, 2 * br + c)] = lower[(r, c)];
                }
            }
        }
        Ok(m)
    }
}

/// Coefficients of the quaterbit state `I/8 + rho'` whose traceless part
/// `rho'` has the given block form.
pub fn quaterbit_from_blocks(b: &QuaterbitBlocks) -> Result<CoeffVector> {
    let mut rho = b.to_matrix()?;
    for i in 0..8 {
        rho[(i, i)] += Complex64::new(0.125, 0.0);
    }
    density_to_coeffs(&rho, StateCase::Quaterbit)
}

/// `min_eigenvalue(rho) >= -POSITIVITY_TOL`.
pub fn is_positive(v: &CoeffVector) -> bool {
    algebra::is_psd(&coeffs_to_density(v), POSITIVITY_TOL)
}

/// Partial transpose on the second subsystem: flips the sign of every
/// coefficient with `sigma_y` in the second slot.
pub fn partial_transpose(v: &CoeffVector) -> CoeffVector {
    let mut out = v.clone();
    out.partial_transpose_in_place();
    out
}

/// Positive partial transpose.
pub fn ppt_test(v: &CoeffVector) -> bool {
    is_positive(&partial_transpose(v))
}
