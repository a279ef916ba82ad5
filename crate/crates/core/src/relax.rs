//! SOC-strengthened SDP relaxation.
//!
//! Variables are the transverse moments `x_i` and a unit-diagonal PSD matrix
//! `C` of z-z correlations. The relaxation maximizes
//!
//! ```text
//! sum_{ij in E} w_ij (1 - J_ij c_ij)/2 + sum_i h_i (1 + x_i)/2
//! ```
//!
//! subject to `C >= 0`, `c_ii = 1`, `|x_i| <= 1` and, for every edge and both
//! of its endpoints, `x_i^2 + c_ij^2 <= 1`.
//!
//! The solver is a two-block ADMM. One block holds a symmetric PSD matrix
//! together with the linear objective, so its update is an eigenvalue clip.
//! The other block holds an unconstrained-symmetry copy of the matrix with
//! the unit diagonal and the disk constraints. Row `i` of that copy carries
//! the correlations seen from endpoint `i`, so each vertex's disks form an
//! independent "star" set whose projection reduces to a 1-D convex search.
//! After convergence the iterate is repaired to exact feasibility.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::instance::Instance;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Eigenvalues above `-PSD_SLACK` are accepted as PSD without projection.
pub const PSD_SLACK: f64 = 1e-12;

/// Largest negative eigenvalue `gram_vectors` accepts.
pub const GRAM_REFUSAL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error(
        "ADMM did not converge in {iterations} iterations (primal {:.3e}, dual {:.3e})",
        residuals.primal,
        residuals.dual
    )]
    NotConverged {
        best: Box<SdpSolution>,
        residuals: Residuals,
        iterations: usize,
    },
    #[error("matrix is not PSD: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix must be square with unit diagonal")]
    BadShape,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    /// Target accuracy of the objective, relative to `W + H`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Over-relaxation factor in `(0, 2)`. Values above 1 stall on some
    /// degenerate instances.
    pub relaxation: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: DEFAULT_TOLERANCE,
            max_iterations: 200_000,
            rho: 1.0,
            relaxation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
}

/// Unit vectors `u_i` (rows) with `<u_i, u_j> = c_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramVectors {
    vectors: DMatrix<f64>,
}

impl GramVectors {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    /// Dimension of the factor, the numerical rank of `C`.
    pub fn rank(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn from_rows(vectors: DMatrix<f64>) -> Self {
        GramVectors { vectors }
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.vectors * self.vectors.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    pub c: DMatrix<f64>,
    pub grams: GramVectors,
    pub objective: f64,
    /// `w_ij (1 + t_ij)/2` per edge, in instance edge order.
    pub edge_terms: Vec<f64>,
    /// `h_i (1 + x_i)/2` per vertex.
    pub field_terms: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn edge_part(&self) -> f64 {
        self.edge_terms.iter().sum()
    }

    pub fn field_part(&self) -> f64 {
        self.field_terms.iter().sum()
    }

    /// Signed edge correlations `t_ij = -J_ij c_ij`, in instance edge order.
    pub fn edge_correlations(&self, inst: &Instance) -> Vec<f64> {
        inst.edges()
            .iter()
            .map(|e| -e.j.value() * self.c[(e.u, e.v)])
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("solution serialization cannot fail")
    }
}

impl Serialize for SdpSolution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.c.nrows())
            .map(|i| self.c.row(i).iter().copied().collect())
            .collect();
        let mut s = serializer.serialize_struct("SdpSolution", 9)?;
        s.serialize_field("objective", &self.objective)?;
        s.serialize_field("sdp_e", &self.edge_part())?;
        s.serialize_field("sdp_x", &self.field_part())?;
        s.serialize_field("x", &self.x)?;
        s.serialize_field("C", &rows)?;
        s.serialize_field("edge_terms", &self.edge_terms)?;
        s.serialize_field("field_terms", &self.field_terms)?;
        s.serialize_field("residuals", &self.residuals)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.end()
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Frobenius projection of a symmetric matrix onto the PSD cone.
fn psd_projection(sym: DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(sym);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// Factor a PSD matrix into unit row vectors, clipping small negative
/// eigenvalues and dropping the null space.
fn factor_unit_rows(c: &DMatrix<f64>) -> GramVectors {
    let n = c.nrows();
    if n == 0 {
        return GramVectors::from_rows(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(c));
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.eigenvalues[k] > 1e-12 * top.max(1.0))
        .collect();
    let mut v = DMatrix::zeros(n, keep.len().max(1));
    for (col, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for i in 0..n {
            v[(i, col)] = eig.eigenvectors[(i, k)] * s;
        }
    }
    for i in 0..n {
        let norm = v.row(i).norm();
        if norm > 0.0 {
            v.row_mut(i).scale_mut(1.0 / norm);
        } else {
            v[(i, 0)] = 1.0;
        }
    }
    GramVectors::from_rows(v)
}

/// Unit vectors realizing `C` as a Gram matrix.
pub fn gram_vectors(c: &DMatrix<f64>) -> Result<GramVectors, RelaxError> {
    if !c.is_square() || c.diagonal().iter().any(|d| (d - 1.0).abs() > 1e-6) {
        return Err(RelaxError::BadShape);
    }
    if c.nrows() > 0 {
        let min = symmetrize(c).symmetric_eigenvalues().min();
        if min < -GRAM_REFUSAL {
            return Err(RelaxError::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(factor_unit_rows(c))
}

fn objective_terms(inst: &Instance, x: &[f64], c: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let edge_terms = inst
        .edges()
        .iter()
        .map(|e| 0.5 * e.w * (1.0 - e.j.value() * c[(e.u, e.v)]))
        .collect();
    let field_terms = inst
        .fields()
        .iter()
        .zip(x)
        .map(|(&h, &xi)| 0.5 * h * (1.0 + xi))
        .collect();
    (edge_terms, field_terms)
}

/// Turn a near-feasible `(x, C)` into an exactly feasible solution.
///
/// `C` is symmetrized, projected onto the PSD cone when it has a negative
/// eigenvalue, and rescaled to unit diagonal. Each `x_i` is clamped into
/// `[-1, 1]` and then shrunk until every incident disk constraint holds.
pub fn repair_feasibility(raw_x: &[f64], raw_c: &DMatrix<f64>, inst: &Instance) -> SdpSolution {
    let n = inst.n();
    assert_eq!(raw_x.len(), n, "x has wrong length");
    assert_eq!(raw_c.shape(), (n, n), "C has wrong shape");

    let mut c = if raw_c == &raw_c.transpose() {
        raw_c.clone()
    } else {
        symmetrize(raw_c)
    };
    if n > 0 && c.symmetric_eigenvalues().min() < -PSD_SLACK {
        c = psd_projection(c);
    }
    let diag: Vec<f64> = c.diagonal().iter().copied().collect();
    if diag.iter().any(|&d| d != 1.0) {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (di, dj) = (diag[i], diag[j]);
                c[(i, j)] = if di > 0.0 && dj > 0.0 {
                    (c[(i, j)] / (di * dj).sqrt()).clamp(-1.0, 1.0)
                } else {
                    0.0
                };
            }
            c[(i, i)] = 1.0;
        }
    }

    let mut x: Vec<f64> = raw_x.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    for e in inst.edges() {
        let cij = c[(e.u, e.v)];
        for end in [e.u, e.v] {
            let xi = &mut x[end];
            if *xi * *xi + cij * cij > 1.0 {
                let bound = (1.0 - cij * cij).max(0.0).sqrt();
                *xi = xi.signum() * bound.min(xi.abs());
                while *xi * *xi + cij * cij > 1.0 {
                    *xi = if *xi > 0.0 { xi.next_down() } else { xi.next_up() };
                }
            }
        }
    }

    let (edge_terms, field_terms) = objective_terms(inst, &x, &c);
    let objective = edge_terms.iter().sum::<f64>() + field_terms.iter().sum::<f64>();
    let grams = factor_unit_rows(&c);
    SdpSolution {
        x,
        c,
        grams,
        objective,
        edge_terms,
        field_terms,
        residuals: Residuals::default(),
        iterations: 0,
    }
}

/// Euclidean projection of `(a, b)` onto `{(x, c) : x^2 + c_k^2 <= 1 for all k}`.
/// Overwrites `b` and returns the new `x`.
fn project_star(a: f64, b: &mut [f64]) -> f64 {
    let m = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return a.clamp(-1.0, 1.0);
    }
    if a.abs() <= 1.0 && a * a + m * m <= 1.0 {
        return a;
    }
    // For fixed |x| = y the c_k decouple into clips at sqrt(1 - y^2); the
    // remaining 1-D problem is convex with the derivative below.
    let target = a.abs();
    let slope = |y: f64| {
        let r = (1.0 - y * y).sqrt();
        let excess: f64 = b.iter().map(|v| (v.abs() - r).max(0.0)).sum();
        (y - target) + excess * y / r
    };
    let (mut lo, mut hi) = (0.0, target.min(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let y = lo;
    let r = (1.0 - y * y).sqrt();
    for v in b.iter_mut() {
        *v = v.clamp(-r, r);
    }
    a.signum() * y
}

/// Iterations between duality-gap checks. A certified gap below the
/// target is a second way to stop when the residuals plateau.
const GAP_CHECK_INTERVAL: usize = 50;

struct Admm<'a> {
    inst: &'a Instance,
    neighbors: Vec<Vec<usize>>,
    scale: f64,
    /// Linear cost of the minimization form, split evenly over (i,j) and (j,i).
    cost_c: DMatrix<f64>,
    cost_x: Vec<f64>,
}

impl<'a> Admm<'a> {
    fn new(inst: &'a Instance) -> Self {
        let n = inst.n();
        let scale = inst.total_weight() + inst.total_field();
        let mut cost_c = DMatrix::zeros(n, n);
        let mut neighbors = vec![Vec::new(); n];
        for e in inst.edges() {
            let q = 0.25 * e.w * e.j.value() / scale;
            cost_c[(e.u, e.v)] += q;
            cost_c[(e.v, e.u)] += q;
            neighbors[e.u].push(e.v);
            neighbors[e.v].push(e.u);
        }
        let cost_x = inst.fields().iter().map(|&h| -0.5 * h / scale).collect();
        Admm {
            inst,
            neighbors,
            scale,
            cost_c,
            cost_x,
        }
    }

    fn project_constraints(&self, m: &mut DMatrix<f64>, x: &mut [f64]) {
        let mut row = Vec::new();
        for i in 0..self.inst.n() {
            m[(i, i)] = 1.0;
            row.clear();
            row.extend(self.neighbors[i].iter().map(|&j| m[(i, j)]));
            x[i] = project_star(x[i], &mut row);
            for (&j, &v) in self.neighbors[i].iter().zip(&row) {
                m[(i, j)] = v;
            }
        }
    }

    /// Upper bound on the relaxation from a multiplier estimate `y` for the
    /// coupling `C = M`.
    ///
    /// Weak duality holds for any `y` that vanishes off the edges and makes
    /// `cost + sym(y)` PSD; the first is imposed by zeroing, the second by a
    /// diagonal shift. Each vertex's star set then has the closed-form
    /// support function `sqrt(cost_x_i^2 + (sum_j |y_ij|)^2)`.
    fn dual_bound(&self, y: &DMatrix<f64>) -> f64 {
        let n = self.inst.n();
        let mut masked = DMatrix::zeros(n, n);
        for i in 0..n {
            masked[(i, i)] = y[(i, i)];
            for &j in &self.neighbors[i] {
                masked[(i, j)] = y[(i, j)];
            }
        }
        let slack = (&self.cost_c + symmetrize(&masked)).symmetric_eigenvalues().min();
        let shift = (-slack).max(0.0);
        let mut dual = 0.0;
        for i in 0..n {
            let row: f64 = self.neighbors[i].iter().map(|&j| masked[(i, j)].abs()).sum();
            dual -= masked[(i, i)] + shift + self.cost_x[i].hypot(row);
        }
        // Undo the scaling of the minimization form.
        self.scale * (0.5 - dual)
    }

    fn run(&self, settings: &SolverSettings) -> Result<SdpSolution, RelaxError> {
        let n = self.inst.n();
        let alpha = settings.relaxation;
        let mut rho = settings.rho;

        let mut cv = DMatrix::<f64>::identity(n, n);
        let mut xv = vec![0.0; n];
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut xw = vec![0.0; n];
        let mut uc = DMatrix::<f64>::zeros(n, n);
        let mut ux = vec![0.0; n];

        let eps = settings.tol * 1e-2;
        let dim = ((n * n + n) as f64).sqrt();
        let mut residuals = Residuals::default();
        let mut iterations = 0;
        let mut converged = false;

        for it in 1..=settings.max_iterations {
            iterations = it;
            // PSD block with the linear cost.
            let target = &m - &uc - &self.cost_c / rho;
            cv = psd_projection(symmetrize(&target));
            for i in 0..n {
                xv[i] = xw[i] - ux[i] - self.cost_x[i] / rho;
            }

            // Over-relaxed constraint block.
            let c_hat = &cv * alpha + &m * (1.0 - alpha);
            let x_hat: Vec<f64> = (0..n).map(|i| alpha * xv[i] + (1.0 - alpha) * xw[i]).collect();
            let m_prev = m.clone();
            let xw_prev = xw.clone();
            m = &c_hat + &uc;
            for i in 0..n {
                xw[i] = x_hat[i] + ux[i];
            }
            self.project_constraints(&mut m, &mut xw);

            uc += &c_hat - &m;
            for i in 0..n {
                ux[i] += x_hat[i] - xw[i];
            }

            let primal = ((&cv - &m).norm_squared()
                + xv.iter().zip(&xw).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sqrt();
            let dual = rho
                * ((&m - &m_prev).norm_squared()
                    + xw.iter().zip(&xw_prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
                .sqrt();
            residuals = Residuals { primal, dual };

            if primal <= eps * dim && dual <= eps * dim {
                converged = true;
                break;
            }
            if it % GAP_CHECK_INTERVAL == 0 {
                let upper = self.dual_bound(&(&uc * rho));
                let lower = repair_feasibility(&xw, &cv, self.inst).objective;
                if upper - lower <= eps * self.scale {
                    converged = true;
                    break;
                }
            }

            if it % 50 == 0 {
                let factor = if primal > 10.0 * dual {
                    2.0
                } else if dual > 10.0 * primal {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    uc /= factor;
                    for u in ux.iter_mut() {
                        *u /= factor;
                    }
                }
            }
        }

        let mut solution = repair_feasibility(&xw, &cv, self.inst);
        solution.residuals = residuals;
        solution.iterations = iterations;
        if converged {
            Ok(solution)
        } else {
            Err(RelaxError::NotConverged {
                best: Box::new(solution),
                residuals,
                iterations,
            })
        }
    }
}

fn trivial_solution(inst: &Instance) -> SdpSolution {
    let n = inst.n();
    repair_feasibility(&vec![0.0; n], &DMatrix::identity(n, n), inst)
}

pub fn solve_with(inst: &Instance, settings: &SolverSettings) -> Result<SdpSolution, RelaxError> {
    if !(settings.tol > 0.0 && settings.tol.is_finite()) {
        return Err(RelaxError::InvalidTolerance(settings.tol));
    }
    if inst.total_weight() + inst.total_field() == 0.0 {
        let mut s = trivial_solution(inst);
        s.objective = 0.0;
        return Ok(s);
    }
    Admm::new(inst).run(settings)
}

/// Solve the relaxation to relative accuracy `tol`.
pub fn solve_soc_sdp(inst: &Instance, tol: f64) -> Result<SdpSolution, RelaxError> {
    solve_with(
        inst,
        &SolverSettings {
            tol,
            ..SolverSettings::default()
        },
    )
}

/// The relaxation with every field zeroed: the plain MaxCut-style SDP over
/// the signed edges.
pub fn solve_edge_relaxation(inst: &Instance, tol: f64) -> Result<SdpSolution, RelaxError> {
    solve_soc_sdp(&inst.without_fields(), tol)
}
