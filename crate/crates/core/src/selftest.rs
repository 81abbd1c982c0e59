//! Invariant batteries run by `sepprob selftest`.
//!
//! Each check compares two independent routes (fast path against
//! [`crate::oracle`], algebraic identity, analytic moment) and reports the
//! worst deviation it saw.

use std::time::Instant;

use crate::algebra::{eigenvalues, generator_labels, generator_matrix, CMatrix, Quaternion};
use crate::conjecture::p_of_alpha;
use crate::engine::{merge, run_chunk, RunPlan, TallyCounts};
use crate::oracle;
use crate::sampler::{derive_stream, BallSampler};
use crate::states::{self, coeffs_to_density, density_to_coeffs, CoeffVector, QuaterbitBlocks, StateCase};

pub type PartialTransposeFn = fn(&CoeffVector) -> CoeffVector;

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub secs: f64,
}

/// Configuration of the battery. `partial_transpose` is swappable so the
/// battery itself can be tested against a broken implementation.
#[derive(Clone, Debug)]
pub struct Battery {
    pub seed: u64,
    pub trials: usize,
    pub ball_draws: usize,
    pub partial_transpose: PartialTransposeFn,
}

impl Default for Battery {
    fn default() -> Self {
        Battery {
            seed: 0,
            trials: 1000,
            ball_draws: 1_000_000,
            partial_transpose: states::partial_transpose,
        }
    }
}

type CheckFn = fn(&Battery) -> Result<String, String>;

const CHECKS: [(&str, CheckFn); 11] = [
    ("algebra.homomorphism", check_homomorphism),
    ("algebra.generator_gram", check_generator_gram),
    ("algebra.eigensolver", check_eigensolver),
    ("states.pt_involution", check_pt_involution),
    ("states.pt_spectrum", check_pt_spectrum),
    ("states.kramers_pairs", check_kramers),
    ("states.block_round_trip", check_block_round_trip),
    ("states.werner_threshold", check_werner),
    ("sampler.ball_moments", check_ball_moments),
    ("engine.tally_ordering", check_tally_ordering),
    ("conjecture.rationals", check_rationals),
];

pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(n, _)| *n)
}

impl Battery {
    pub fn run(&self) -> Vec<CheckReport> {
        CHECKS.iter().map(|(name, f)| self.run_one(name, *f)).collect()
    }

    fn run_one(&self, name: &'static str, f: CheckFn) -> CheckReport {
        let start = Instant::now();
        let (passed, detail) = match f(self) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        CheckReport {
            name,
            passed,
            detail,
            secs: start.elapsed().as_secs_f64(),
        }
    }

    fn points(&self, case: StateCase, salt: u64) -> impl Iterator<Item = CoeffVector> {
        let mut s = BallSampler::new(case.coeff_dim(), case.radius(), derive_stream(self.seed, 1, salt))
            .expect("valid ball");
        (0..self.trials).map(move |_| CoeffVector::new(case, s.next_point()).expect("length matches"))
    }
}

fn within(name: &str, worst: f64, tol: f64) -> Result<String, String> {
    if worst <= tol {
        Ok(format!("max {name} {worst:.2e} <= {tol:.0e}"))
    } else {
        Err(format!("max {name} {worst:.3e} exceeds {tol:.0e}"))
    }
}

fn check_homomorphism(b: &Battery) -> Result<String, String> {
    let mut s = BallSampler::new(8, 2.0, derive_stream(b.seed, 1, 100)).expect("valid ball");
    let mut worst = 0.0f64;
    for _ in 0..b.trials {
        let x = s.next_point();
        let p = Quaternion::new(x[0], x[1], x[2], x[3]);
        let q = Quaternion::new(x[4], x[5], x[6], x[7]);
        worst = worst
            .max((p * q).to_block().max_abs_diff(&(&p.to_block() * &q.to_block())))
            .max(((p * q).norm() - p.norm() * q.norm()).abs())
            .max(p.conj().to_block().max_abs_diff(&p.to_block().adjoint()));
    }
    within("deviation", worst, 1e-12)
}

fn check_generator_gram(_: &Battery) -> Result<String, String> {
    let mut worst = 0.0f64;
    for case in StateCase::ALL {
        let gens: Vec<CMatrix> = generator_labels(case)
            .iter()
            .map(|l| generator_matrix(*l).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for (i, a) in gens.iter().enumerate() {
            worst = worst.max(a.trace().norm()).max(a.hermitian_deviation());
            for (j, g) in gens.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max(((a * g).trace() - expected).norm());
            }
        }
    }
    within("Gram deviation", worst, 1e-14)
}

fn check_eigensolver(b: &Battery) -> Result<String, String> {
    // A diagonal spectrum conjugated by a generator-built unitary
    // exp(i theta P) = cos(theta) I + i sin(theta) P for a Pauli tensor P.
    let mut worst = 0.0f64;
    let mut s = BallSampler::new(8, 1.0, derive_stream(b.seed, 1, 101)).expect("valid ball");
    for case in [StateCase::Qubit, StateCase::Quaterbit] {
        let d = case.dim();
        for t in 0..b.trials / 10 {
            let spectrum = s.next_point()[..d].to_vec();
            let mut h = CMatrix::diag(&spectrum);
            for (k, label) in generator_labels(case).iter().enumerate().skip(t % 3).step_by(5) {
                let p = label.pauli_tensor().to_matrix();
                let theta = 0.3 + k as f64 * 0.17;
                let u = &CMatrix::identity(d).scale(theta.cos().into())
                    + &p.scale(num_complex::Complex64::new(0.0, theta.sin()));
                h = &(&u * &h) * &u.adjoint();
                h = CMatrix::from_fn(d, |r, c| (h[(r, c)] + h[(c, r)].conj()) * 0.5);
            }
            let mut sorted = spectrum.clone();
            sorted.sort_by(f64::total_cmp);
            let ev = eigenvalues(&h).map_err(|e| e.to_string())?;
            for (x, y) in ev.iter().zip(&sorted) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    within("eigenvalue error", worst, 1e-10)
}

fn check_pt_involution(b: &Battery) -> Result<String, String> {
    for case in StateCase::ALL {
        for v in b.points(case, 200 + case as u64) {
            let pt = (b.partial_transpose)(&v);
            if (b.partial_transpose)(&pt) != v || pt.norm_sqr() != v.norm_sqr() {
                return Err(format!("{case}: partial transpose is not an isometric involution"));
            }
        }
    }
    Ok(format!("{} vectors per case", b.trials))
}

fn check_pt_spectrum(b: &Battery) -> Result<String, String> {
    let mut worst = 0.0f64;
    for case in StateCase::ALL {
        for v in b.points(case, 300 + case as u64) {
            let by_coeffs = eigenvalues(&coeffs_to_density(&(b.partial_transpose)(&v)));
            let by_swap = eigenvalues(&oracle::partial_transpose_matrix(&coeffs_to_density(&v), case));
            let (x, y) = match (by_coeffs, by_swap) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => return Err(e.to_string()),
            };
            for (p, q) in x.iter().zip(&y) {
                worst = worst.max((p - q).abs());
            }
        }
    }
    within("spectrum difference", worst, 1e-10)
}

fn check_kramers(b: &Battery) -> Result<String, String> {
    let mut worst = 0.0f64;
    for v in b.points(StateCase::Quaterbit, 400) {
        for m in [coeffs_to_density(&v), coeffs_to_density(&(b.partial_transpose)(&v))] {
            let ev = eigenvalues(&m).map_err(|e| e.to_string())?;
            for pair in ev.chunks(2) {
                worst = worst.max(pair[1] - pair[0]);
            }
        }
    }
    within("pair splitting", worst, 1e-9)
}

fn check_block_round_trip(b: &Battery) -> Result<String, String> {
    let mut s = BallSampler::new(27, 0.3, derive_stream(b.seed, 1, 500)).expect("valid ball");
    let mut worst = 0.0f64;
    for _ in 0..b.trials {
        let x = s.next_point();
        let mut blocks = QuaterbitBlocks {
            diagonal: [x[0], x[1], x[2], -(x[0] + x[1] + x[2])],
            ..Default::default()
        };
        for (i, q) in blocks.off_diagonal.iter_mut().enumerate() {
            let o = 3 + 4 * i;
            *q = Quaternion::new(x[o], x[o + 1], x[o + 2], x[o + 3]);
        }
        let v = states::quaterbit_from_blocks(&blocks).map_err(|e| e.to_string())?;
        let mut direct = blocks.to_matrix().map_err(|e| e.to_string())?;
        for i in 0..8 {
            direct[(i, i)] += 0.125;
        }
        worst = worst.max(coeffs_to_density(&v).max_abs_diff(&direct));
    }
    within("reconstruction error", worst, 1e-12)
}

fn check_werner(b: &Battery) -> Result<String, String> {
    for (p, expected) in [(0.33, true), (0.34, false)] {
        let v = density_to_coeffs(&oracle::werner_state(p), StateCase::Qubit).map_err(|e| e.to_string())?;
        let ppt = states::is_positive(&(b.partial_transpose)(&v));
        if ppt != expected {
            return Err(format!("Werner p = {p}: PPT {ppt}, expected {expected}"));
        }
    }
    Ok("PPT flips between p = 0.33 and 0.34".into())
}

fn check_ball_moments(b: &Battery) -> Result<String, String> {
    let mut summary = Vec::new();
    for case in StateCase::ALL {
        let m = case.coeff_dim();
        let r2 = case.radius() * case.radius();
        let mut s = BallSampler::new(m, case.radius(), derive_stream(b.seed, 1, 600 + m as u64)).expect("valid ball");
        let mut x = vec![0.0; m];
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..b.ball_draws {
            s.fill(&mut x);
            let t = x.iter().map(|y| y * y).sum::<f64>() / r2;
            sum += t;
            sum_sq += t * t;
        }
        let n = b.ball_draws as f64;
        let mean = sum / n;
        let se = ((sum_sq / n - mean * mean) / n).sqrt();
        let expected = m as f64 / (m as f64 + 2.0);
        let z = (mean - expected) / se;
        if z.abs() > 5.0 {
            return Err(format!("m = {m}: mean |x|^2/r^2 = {mean:.6}, expected {expected:.6} (z = {z:.2})"));
        }
        summary.push(format!("m={m} z={z:+.2}"));
    }
    Ok(summary.join(", "))
}

fn check_tally_ordering(b: &Battery) -> Result<String, String> {
    for case in StateCase::ALL {
        let plan = RunPlan::new(case, b.seed, 40_000, 2_500).map_err(|e| e.to_string())?;
        let mut acc = TallyCounts::ZERO;
        for chunk in 0..plan.n_chunks() {
            let t = run_chunk(case, plan.stream(chunk), plan.chunk_len(chunk));
            if !t.is_ordered() {
                return Err(format!("{case} chunk {chunk}: {t:?}"));
            }
            acc = merge(acc, t).map_err(|e| e.to_string())?;
            if !acc.is_ordered() {
                return Err(format!("{case} after chunk {chunk}: {acc:?}"));
            }
        }
        let parallel = plan.run_chunks(0..plan.n_chunks()).map_err(|e| e.to_string())?;
        if parallel != acc {
            return Err(format!("{case}: parallel tally {parallel:?} != sequential {acc:?}"));
        }
    }
    Ok("ordered after every chunk and merge".into())
}

fn check_rationals(_: &Battery) -> Result<String, String> {
    let mut worst = 0.0f64;
    for (alpha, exact) in [(0.5, 29.0 / 64.0), (1.0, 8.0 / 33.0), (2.0, 26.0 / 323.0)] {
        let s = p_of_alpha(alpha, 1e-12).map_err(|e| e.to_string())?;
        worst = worst.max((s.value - exact).abs());
    }
    within("|P - rational|", worst, 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Battery {
        Battery {
            trials: 200,
            ball_draws: 200_000,
            ..Battery::default()
        }
    }

    #[test]
    fn clean_build_passes() {
        for r in quick().run() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    fn no_flip(v: &CoeffVector) -> CoeffVector {
        v.clone()
    }

    /// Forgets the sign flip on the quaterbit (2,2,0) generator.
    fn dropped_sign(v: &CoeffVector) -> CoeffVector {
        let mut out = states::partial_transpose(v);
        if v.case() == StateCase::Quaterbit {
            let pos = crate::algebra::GeneratorLabel::new(StateCase::Quaterbit, &[2, 2, 0])
                .unwrap()
                .position();
            out.as_mut_slice()[pos] *= -1.0;
        }
        out
    }

    #[test]
    fn corrupted_partial_transpose_is_caught() {
        for pt in [no_flip as PartialTransposeFn, dropped_sign] {
            let b = Battery {
                partial_transpose: pt,
                ..quick()
            };
            let failed: Vec<_> = b.run().into_iter().filter(|r| !r.passed).map(|r| r.name).collect();
            assert!(failed.contains(&"states.pt_spectrum"), "{failed:?}");
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = check_names().collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
    }
}
