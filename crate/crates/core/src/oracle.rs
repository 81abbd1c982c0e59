//! Reference constructions that deliberately avoid the fast paths in
//! [`crate::states`]. The self-test battery and the test suites compare the
//! two routes against each other.

use num_complex::Complex64;

use crate::algebra::{generator_labels, pauli, CMatrix};
use crate::states::{CoeffVector, StateCase};

/// `I/d + sum_a c_a (sigma_i (x) sigma_j [(x) sigma_k]) / sqrt(d)` built with
/// dense Kronecker products.
pub fn dense_density(v: &CoeffVector) -> CMatrix {
    let case = v.case();
    let d = case.dim();
    let mut rho = CMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0));
    for (label, &c) in generator_labels(case).iter().zip(v.as_slice()) {
        let idx = label.indices();
        let g = idx[1..]
            .iter()
            .fold(pauli(idx[0]), |acc, &p| acc.kron(&pauli(p)));
        rho = &rho + &g.scale(Complex64::new(c / (d as f64).sqrt(), 0.0));
    }
    rho
}

/// Transposes the second two-level subsystem by swapping its row and column
/// indices. For quaterbits the trailing quaternion slot is left alone.
pub fn partial_transpose_matrix(rho: &CMatrix, case: StateCase) -> CMatrix {
    // index = first * 2^(k+1) + second * 2^k + rest, with k trailing bits
    let trailing = case.dim() / 4;
    let split = |i: usize| (i / (2 * trailing), (i / trailing) % 2, i % trailing);
    let join = |a: usize, b: usize, r: usize| (a * 2 + b) * trailing + r;
    CMatrix::from_fn(case.dim(), |row, col| {
        let (a, b, r) = split(row);
        let (a2, b2, r2) = split(col);
        rho[(join(a, b2, r), join(a2, b, r2))]
    })
}

/// `|Phi+><Phi+|` with `|Phi+> = (|00> + |11>)/sqrt(2)`.
pub fn bell_phi_plus() -> CMatrix {
    let mut m = CMatrix::zeros(4);
    for r in [0, 3] {
        for c in [0, 3] {
            m[(r, c)] = Complex64::new(0.5, 0.0);
        }
    }
    m
}

/// `p |Psi-><Psi-| + (1 - p) I/4` with the singlet
/// `|Psi-> = (|01> - |10>)/sqrt(2)`, written out entry by entry.
pub fn werner_state(p: f64) -> CMatrix {
    let q = (1.0 - p) / 4.0;
    let mut m = CMatrix::diag(&[q, q + p / 2.0, q + p / 2.0, q]);
    m[(1, 2)] = Complex64::new(-p / 2.0, 0.0);
    m[(2, 1)] = Complex64::new(-p / 2.0, 0.0);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_swap_on_bell_state() {
        let pt = partial_transpose_matrix(&bell_phi_plus(), StateCase::Qubit);
        let mut swap = CMatrix::zeros(4);
        swap[(0, 0)] = Complex64::new(0.5, 0.0);
        swap[(3, 3)] = Complex64::new(0.5, 0.0);
        swap[(1, 2)] = Complex64::new(0.5, 0.0);
        swap[(2, 1)] = Complex64::new(0.5, 0.0);
        assert_eq!(pt, swap);
    }

    #[test]
    fn werner_state_is_a_density_matrix() {
        let w = werner_state(0.3);
        assert!((w.trace().re - 1.0).abs() < 1e-15);
        assert_eq!(w.hermitian_deviation(), 0.0);
    }
}
