//! Dense ground-truth oracles.
//!
//! Builds the projector-form Hamiltonian as an explicit `2^n x 2^n` real
//! symmetric matrix (qubit 0 is the most significant bit of the basis index),
//! diagonalizes it, evaluates product states in closed form and optimizes
//! over product states by multi-start ascent on Bloch angles.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::Instance;

pub const DEFAULT_QUBIT_CAP: usize = 14;

/// Slack allowed on `|b| <= 1` for Bloch vectors.
pub const BLOCH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExactError {
    #[error("{n} qubits exceeds the dense limit of {cap}")]
    TooManyQubits { n: usize, cap: usize },
    #[error("Bloch vector {index} has norm {norm} > 1")]
    NotAState { index: usize, norm: f64 },
    #[error("Bloch vector {index} has norm {norm}, expected a pure state")]
    NotPure { index: usize, norm: f64 },
    #[error("assignment has {got} qubits, instance has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

#[inline]
fn bit_mask(n: usize, qubit: usize) -> usize {
    1 << (n - 1 - qubit)
}

/// Z eigenvalue of `qubit` in computational basis state `basis`.
#[inline]
fn z_value(n: usize, basis: usize, qubit: usize) -> f64 {
    if basis & bit_mask(n, qubit) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl DenseHamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// All eigenvalues, largest first.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// `<psi|H|psi>` for a normalized complex state vector.
    pub fn expectation(&self, psi: &[Complex<f64>]) -> f64 {
        let re = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.re));
        let im = DVector::from_iterator(psi.len(), psi.iter().map(|c| c.im));
        // H is real symmetric, so the cross terms cancel.
        re.dot(&(&self.matrix * &re)) + im.dot(&(&self.matrix * &im))
    }
}

/// Projector form: `sum w (I - J Z_u Z_v)/2 + sum h (I + X_i)/2`.
pub fn build_hamiltonian(inst: &Instance, cap: usize) -> Result<DenseHamiltonian, ExactError> {
    let n = inst.n();
    if n > cap {
        return Err(ExactError::TooManyQubits { n, cap });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let h_total = inst.total_field();
    for b in 0..dim {
        let mut diag = 0.5 * h_total;
        for e in inst.edges() {
            let zz = z_value(n, b, e.u) * z_value(n, b, e.v);
            diag += 0.5 * e.w * (1.0 - e.j.value() * zz);
        }
        m[(b, b)] = diag;
        for (i, &h) in inst.fields().iter().enumerate() {
            if h != 0.0 {
                m[(b, b ^ bit_mask(n, i))] += 0.5 * h;
            }
        }
    }
    Ok(DenseHamiltonian { n, matrix: m })
}

/// Minimization form: `sum w J Z_u Z_v - sum h X_i`.
pub fn build_tfim_hamiltonian(inst: &Instance, cap: usize) -> Result<DMatrix<f64>, ExactError> {
    let n = inst.n();
    if n > cap {
        return Err(ExactError::TooManyQubits { n, cap });
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for b in 0..dim {
        m[(b, b)] = inst
            .edges()
            .iter()
            .map(|e| e.w * e.j.value() * z_value(n, b, e.u) * z_value(n, b, e.v))
            .sum();
        for (i, &h) in inst.fields().iter().enumerate() {
            if h != 0.0 {
                m[(b, b ^ bit_mask(n, i))] -= h;
            }
        }
    }
    Ok(m)
}

pub fn lambda_min_tfim(inst: &Instance, cap: usize) -> Result<f64, ExactError> {
    let m = build_tfim_hamiltonian(inst, cap)?;
    Ok(m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest eigenvalue and a unit eigenvector.
pub fn lambda_max(h: &DenseHamiltonian) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(h.matrix.clone());
    let (idx, &value) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("Hamiltonian has dimension >= 1");
    let v = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    (value, v / norm)
}

/// Single-qubit Bloch vector `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// A product state, one Bloch vector per qubit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BlochAssignment {
    pub vectors: Vec<BlochVector>,
}

impl BlochAssignment {
    pub fn new(vectors: Vec<BlochVector>) -> Self {
        BlochAssignment { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Pure states in the x-z half plane, `(cos theta, 0, sin theta)`.
    pub fn from_angles(angles: &[f64]) -> Self {
        BlochAssignment {
            vectors: angles
                .iter()
                .map(|&t| BlochVector::new(t.cos(), 0.0, t.sin()))
                .collect(),
        }
    }

    pub fn all(n: usize, b: BlochVector) -> Self {
        BlochAssignment { vectors: vec![b; n] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductEnergy {
    pub total: f64,
    pub edge_terms: Vec<f64>,
    pub field_terms: Vec<f64>,
}

/// Closed-form energy of a product state.
pub fn evaluate_product_state(inst: &Instance, state: &BlochAssignment) -> Result<ProductEnergy, ExactError> {
    if state.len() != inst.n() {
        return Err(ExactError::SizeMismatch {
            expected: inst.n(),
            got: state.len(),
        });
    }
    for (index, b) in state.vectors.iter().enumerate() {
        let norm = b.norm();
        if !(norm <= 1.0 + BLOCH_TOLERANCE) {
            return Err(ExactError::NotAState { index, norm });
        }
    }
    let b = &state.vectors;
    let edge_terms: Vec<f64> = inst
        .edges()
        .iter()
        .map(|e| 0.5 * e.w * (1.0 - e.j.value() * b[e.u].z * b[e.v].z))
        .collect();
    let field_terms: Vec<f64> = inst
        .fields()
        .iter()
        .zip(b)
        .map(|(&h, bv)| 0.5 * h * (1.0 + bv.x))
        .collect();
    let total = edge_terms.iter().sum::<f64>() + field_terms.iter().sum::<f64>();
    Ok(ProductEnergy {
        total,
        edge_terms,
        field_terms,
    })
}

/// State vector of a pure product state, qubit 0 most significant.
pub fn product_state_vector(state: &BlochAssignment) -> Result<Vec<Complex<f64>>, ExactError> {
    let mut psi = vec![Complex::new(1.0, 0.0)];
    for (index, b) in state.vectors.iter().enumerate() {
        let norm = b.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(ExactError::NotPure { index, norm });
        }
        // cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
        let theta = b.z.clamp(-1.0, 1.0).acos();
        let phi = b.y.atan2(b.x);
        let a0 = Complex::new((theta / 2.0).cos(), 0.0);
        let a1 = Complex::from_polar((theta / 2.0).sin(), phi);
        psi = psi.iter().flat_map(|&p| [p * a0, p * a1]).collect();
    }
    Ok(psi)
}

/// `<X_i>` and the full `<Z_i Z_j>` matrix of a real state vector.
#[derive(Debug, Clone)]
pub struct Moments {
    pub x: Vec<f64>,
    pub c: DMatrix<f64>,
}

pub fn moments(n: usize, psi: &DVector<f64>) -> Moments {
    let dim = 1usize << n;
    assert_eq!(psi.len(), dim, "state dimension must be 2^n");
    let x = (0..n)
        .map(|i| {
            let m = bit_mask(n, i);
            (0..dim).map(|b| psi[b] * psi[b ^ m]).sum()
        })
        .collect();
    let mut c = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..dim)
                .map(|b| psi[b] * psi[b] * z_value(n, b, i) * z_value(n, b, j))
                .sum();
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Moments { x, c }
}

/// Best classical z-basis assignment by enumeration; returns the value and spins.
pub fn brute_force_classical(inst: &Instance) -> (f64, Vec<i8>) {
    let n = inst.n();
    assert!(n < 26, "enumeration is limited to small instances");
    let h_half = 0.5 * inst.total_field();
    let mut best = (f64::NEG_INFINITY, 0usize);
    for mask in 0..(1usize << n) {
        let s = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        let value = h_half
            + inst
                .edges()
                .iter()
                .map(|e| 0.5 * e.w * (1.0 - e.j.value() * s(e.u) * s(e.v)))
                .sum::<f64>();
        if value > best.0 {
            best = (value, mask);
        }
    }
    let spins = (0..n).map(|i| if best.1 >> i & 1 == 1 { -1 } else { 1 }).collect();
    (best.0, spins)
}

fn angle_objective(inst: &Instance, theta: &[f64]) -> f64 {
    let s: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
    let edges: f64 = inst
        .edges()
        .iter()
        .map(|e| 0.5 * e.w * (1.0 - e.j.value() * s[e.u] * s[e.v]))
        .sum();
    let fields: f64 = inst
        .fields()
        .iter()
        .zip(theta)
        .map(|(&h, t)| 0.5 * h * (1.0 + t.cos()))
        .sum();
    edges + fields
}

fn angle_gradient(inst: &Instance, theta: &[f64], grad: &mut [f64]) {
    for (g, (&h, t)) in grad.iter_mut().zip(inst.fields().iter().zip(theta)) {
        *g = -0.5 * h * t.sin();
    }
    for e in inst.edges() {
        let c = -0.5 * e.w * e.j.value();
        grad[e.u] += c * theta[e.u].cos() * theta[e.v].sin();
        grad[e.v] += c * theta[e.v].cos() * theta[e.u].sin();
    }
}

fn project_angles(theta: &mut [f64]) {
    for t in theta.iter_mut() {
        *t = t.clamp(-FRAC_PI_2, FRAC_PI_2);
    }
}

const ASCENT_MAX_ITERS: usize = 50_000;
const ASCENT_GRAD_TOL: f64 = 1e-11;

/// Projected gradient ascent with backtracking from `start`.
/// Returns the local optimum's angles and value.
pub fn ascend_from(inst: &Instance, start: &[f64]) -> (Vec<f64>, f64) {
    let n = inst.n();
    let mut theta = start.to_vec();
    project_angles(&mut theta);
    let mut value = angle_objective(inst, &theta);
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut step = 1.0;
    for _ in 0..ASCENT_MAX_ITERS {
        angle_gradient(inst, &theta, &mut grad);
        // Projected gradient: drop components pushing against an active bound.
        let pg = theta
            .iter()
            .zip(&grad)
            .map(|(&t, &g)| {
                if (t >= FRAC_PI_2 && g > 0.0) || (t <= -FRAC_PI_2 && g < 0.0) {
                    0.0
                } else {
                    g.abs()
                }
            })
            .fold(0.0, f64::max);
        if pg < ASCENT_GRAD_TOL {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            for k in 0..n {
                trial[k] = theta[k] + step * grad[k];
            }
            project_angles(&mut trial);
            let decrease: f64 = trial.iter().zip(&theta).zip(&grad).map(|((a, b), g)| g * (a - b)).sum();
            let candidate = angle_objective(inst, &trial);
            if candidate >= value + 1e-4 * decrease {
                std::mem::swap(&mut theta, &mut trial);
                value = candidate;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(1e3);
    }
    (theta, value)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalOptimum {
    pub angles: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductOptimum {
    pub state: BlochAssignment,
    pub value: f64,
    /// One entry per restart, in restart order.
    pub restarts: Vec<LocalOptimum>,
}

/// Best product state found by `restarts` ascents from uniform random angles.
///
/// Optimal product states can take `y_i = 0` and `x_i >= 0`, so each qubit
/// is a single angle in `[-pi/2, pi/2]`.
pub fn optimize_product_state(inst: &Instance, restarts: usize, seed: u64) -> ProductOptimum {
    let n = inst.n();
    let restarts = restarts.max(1);
    let results: Vec<LocalOptimum> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let start: Vec<f64> = (0..n).map(|_| rng.random_range(-FRAC_PI_2..=FRAC_PI_2)).collect();
            let (angles, value) = ascend_from(inst, &start);
            LocalOptimum { angles, value }
        })
        .collect();
    let best = results
        .iter()
        .fold(&results[0], |best, r| if r.value > best.value { r } else { best });
    ProductOptimum {
        state: BlochAssignment::from_angles(&best.angles),
        value: best.value,
        restarts: results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, Edge, RandomInstanceParams, Sign};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn single_field_projector() {
        let inst = Instance::new(1, vec![], vec![1.0]).unwrap();
        let h = build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(h.matrix(), &expected);
        let spectrum = h.spectrum();
        assert_close(spectrum[0], 1.0, 1e-12);
        assert_close(spectrum[1], 0.0, 1e-12);
    }

    #[test]
    fn ferromagnetic_edge_is_aligned_projector() {
        let inst = Instance::new(2, vec![Edge::new(0, 1, 1.0, Sign::Minus)], vec![0.0, 0.0]).unwrap();
        let h = build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap();
        assert_eq!(h.matrix(), &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0])));
    }

    #[test]
    fn triangle_spectrum() {
        let h = build_hamiltonian(&Instance::triangle(0.6), DEFAULT_QUBIT_CAP).unwrap();
        let s19 = 19f64.sqrt();
        let mut expected = vec![3.6, 3.2, 3.2, 2.6, 2.6, (8.0 + s19) / 5.0, (8.0 - s19) / 5.0, 0.8];
        expected.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in h.spectrum().iter().zip(&expected) {
            assert_close(*a, *b, 1e-9);
        }
        let (top, v) = lambda_max(&h);
        assert_close(top, 3.6, 1e-9);
        assert_close(v.norm(), 1.0, 1e-12);
        assert!((h.matrix() * &v - &v * top).norm() < 1e-9);
    }

    #[test]
    fn field_only_top_state_is_plus() {
        let inst = Instance::new(3, vec![], vec![1.0; 3]).unwrap();
        let (top, v) = lambda_max(&build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap());
        assert_close(top, 3.0, 1e-12);
        let plus = 1.0 / 8f64.sqrt();
        let overlap: f64 = v.iter().map(|a| a * plus).sum();
        assert_close(overlap.abs(), 1.0, 1e-10);
    }

    #[test]
    fn two_qubit_antiferromagnet_with_field() {
        // H = Z1Z2 - X1 - X2 has ground energy -sqrt(5) in the symmetric sector.
        let inst = Instance::new(2, vec![Edge::new(0, 1, 1.0, Sign::Plus)], vec![1.0, 1.0]).unwrap();
        let (top, _) = lambda_max(&build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap());
        assert_close(top, (3.0 + 5f64.sqrt()) / 2.0, 1e-9);
        assert_close(lambda_min_tfim(&inst, DEFAULT_QUBIT_CAP).unwrap(), -(5f64.sqrt()), 1e-9);
    }

    #[test]
    fn cap_is_enforced() {
        let inst = Instance::new(5, vec![], vec![0.0; 5]).unwrap();
        let err = build_hamiltonian(&inst, 4).unwrap_err();
        assert!(matches!(err, ExactError::TooManyQubits { n: 5, cap: 4 }));
    }

    #[test]
    fn closed_form_examples() {
        let tri = Instance::triangle(0.6);
        let matching_state = BlochAssignment::new(vec![
            BlochVector::new(1.0, 0.0, 0.0),
            BlochVector::new(0.6, 0.0, 0.8),
            BlochVector::new(0.6, 0.0, -0.8),
        ]);
        let e = evaluate_product_state(&tri, &matching_state).unwrap();
        assert_close(e.total, 169.0 / 50.0, 1e-12);
        assert_close(e.edge_terms.iter().sum(), 91.0 / 50.0, 1e-12);

        let plus = evaluate_product_state(&tri, &BlochAssignment::all(3, BlochVector::new(1.0, 0.0, 0.0))).unwrap();
        assert_close(plus.total, 33.0 / 10.0, 1e-12);

        let mixed = evaluate_product_state(&tri, &BlochAssignment::all(3, BlochVector::new(0.0, 0.0, 0.0))).unwrap();
        assert_close(mixed.total, 1.5 + 0.9, 1e-12);

        let bad = BlochAssignment::all(3, BlochVector::new(0.8, 0.0, 0.8));
        assert!(matches!(evaluate_product_state(&tri, &bad), Err(ExactError::NotAState { index: 0, .. })));
    }

    #[test]
    fn matching_state_vector_agrees() {
        let tri = Instance::triangle(0.6);
        let h = build_hamiltonian(&tri, DEFAULT_QUBIT_CAP).unwrap();
        let s = |a: f64| Complex::new(a.sqrt(), 0.0);
        let q0 = [s(0.5), s(0.5)];
        let q1 = [s(0.9), s(0.1)];
        let q2 = [s(0.1), s(0.9)];
        let mut psi = Vec::new();
        for a in q0 {
            for b in q1 {
                for c in q2 {
                    psi.push(a * b * c);
                }
            }
        }
        assert_close(h.expectation(&psi), 169.0 / 50.0, 1e-9);
    }

    #[test]
    fn closed_form_matches_state_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.random_range(1..=6);
            let inst = random_instance(&RandomInstanceParams { n, edge_prob: 0.6, h_max: 1.5 }, &mut rng);
            let h = build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap();
            let state = BlochAssignment::new(
                (0..n)
                    .map(|_| {
                        let z: f64 = rng.random_range(-1.0..=1.0);
                        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                        let r = (1.0 - z * z).sqrt();
                        BlochVector::new(r * phi.cos(), r * phi.sin(), z)
                    })
                    .collect(),
            );
            let closed = evaluate_product_state(&inst, &state).unwrap().total;
            let psi = product_state_vector(&state).unwrap();
            assert_close(closed, h.expectation(&psi), 1e-9);
        }
    }

    #[test]
    fn optimizer_examples() {
        let tri = optimize_product_state(&Instance::triangle(0.6), 100, 3);
        assert_close(tri.value, 169.0 / 50.0, 1e-7);

        let field_only = Instance::new(3, vec![], vec![0.5, 1.0, 2.0]).unwrap();
        let opt = optimize_product_state(&field_only, 10, 1);
        assert_close(opt.value, 3.5, 1e-12);
        for b in &opt.state.vectors {
            assert!(b.z.abs() < 1e-6);
        }

        let edge = Instance::new(2, vec![Edge::new(0, 1, 1.0, Sign::Plus)], vec![0.0, 0.0]).unwrap();
        let opt = optimize_product_state(&edge, 10, 1);
        assert_close(opt.value, 1.0, 1e-10);
        assert!(opt.state.vectors[0].z * opt.state.vectors[1].z < -0.99);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = random_instance(&RandomInstanceParams { n: 6, edge_prob: 0.5, h_max: 1.0 }, &mut rng);
        let a = optimize_product_state(&inst, 16, 9);
        let b = optimize_product_state(&inst, 16, 9);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn spectrum_bounds_and_orderings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let n = rng.random_range(1..=6);
            let inst = random_instance(&RandomInstanceParams { n, edge_prob: 0.5, h_max: 1.0 }, &mut rng);
            let h = build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap();
            let m = h.matrix();
            assert!((m - m.transpose()).amax() < 1e-12);
            let spectrum = h.spectrum();
            let upper = inst.total_weight() + inst.total_field();
            assert!(spectrum.iter().all(|&e| e >= -1e-10 && e <= upper + 1e-10));
            let prod = optimize_product_state(&inst, 8, 0);
            assert!(prod.value <= spectrum[0] + 1e-9);
        }
    }

    #[test]
    fn field_free_top_eigenvalue_is_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..30 {
            let n = rng.random_range(2..=7);
            let inst = random_instance(&RandomInstanceParams { n, edge_prob: 0.6, h_max: 0.0 }, &mut rng);
            let (top, _) = lambda_max(&build_hamiltonian(&inst, DEFAULT_QUBIT_CAP).unwrap());
            assert_close(top, brute_force_classical(&inst).0, 1e-9);
        }
    }

    #[test]
    fn moments_of_basis_and_plus_states() {
        let mut zero = DVector::zeros(4);
        zero[0] = 1.0;
        let m = moments(2, &zero);
        assert_eq!(m.x, vec![0.0, 0.0]);
        assert!(m.c.iter().all(|&v| v == 1.0));

        let plus = DVector::from_element(4, 0.5);
        let m = moments(2, &plus);
        assert_close(m.x[0], 1.0, 1e-12);
        assert_close(m.c[(0, 1)], 0.0, 1e-12);
    }
}
