//! Approximation constants and the optimal-interpolation curve.
//!
//! Everything here is computed from scratch; no target values are stored.
//! One-dimensional minimizations scan a 2001-point grid and then refine the
//! best bracket with golden-section search down to a 1e-10 interval.

use std::f64::consts::FRAC_2_PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const GRID_POINTS: usize = 2001;
const GOLDEN_WIDTH: f64 = 1e-10;
const BISECTION_WIDTH: f64 = 1e-8;
/// Resolution of the shared q table used to seed each curve maximization.
const Q_TABLE_POINTS: usize = 201;
/// `q_opt` below `1 - TRANSITION_SLACK` counts as having left the endpoint.
const TRANSITION_SLACK: f64 = 1e-7;

pub const DEFAULT_CURVE_POINTS: usize = 1001;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("K(t) needs |t| <= 1, got {0}")]
    OutOfDomain(f64),
    #[error("q = {0} is outside [0, 1]")]
    InvalidQ(f64),
    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("curve needs at least 2 points, got {0}")]
    GridTooSmall(usize),
}

/// `K(t) = (2/pi) asin t`, the sign correlation of hyperplane rounding.
pub fn k_of_t(t: f64) -> Result<f64, ConstantsError> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(ConstantsError::OutOfDomain(t));
    }
    Ok(FRAC_2_PI * t.asin())
}

fn k(t: f64) -> f64 {
    FRAC_2_PI * t.clamp(-1.0, 1.0).asin()
}

/// Pure-ZZ edge ratio `(1 + K(t)) / (1 + t)`.
pub fn r_a(t: f64) -> f64 {
    (1.0 + k(t)) / (1.0 + t)
}

/// Mixed edge ratio `(1 + t^2 K(t)) / (1 + t)`.
pub fn r_b(t: f64) -> f64 {
    (1.0 + t * t * k(t)) / (1.0 + t)
}

/// Interpolated edge ratio `(1 + ((1 - q^2) + q^2 t^2) K(t)) / (1 + t)`.
pub fn r_q(q: f64, t: f64) -> f64 {
    let q2 = q * q;
    (1.0 + ((1.0 - q2) + q2 * t * t) * k(t)) / (1.0 + t)
}

/// A minimum value and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub value: f64,
    pub argmin: f64,
}

fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, width: f64) -> Minimum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    Minimum { value: f(t), argmin: t }
}

/// Grid scan plus golden refinement of `f` over `[lo, hi]`.
pub fn minimize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Minimum {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let at = |i: usize| if i == GRID_POINTS - 1 { hi } else { lo + step * i as f64 };
    let mut best = (0, f(lo));
    for i in 1..GRID_POINTS {
        let v = f(at(i));
        if v < best.1 {
            best = (i, v);
        }
    }
    let a = at(best.0.saturating_sub(1));
    let b = at((best.0 + 1).min(GRID_POINTS - 1));
    let refined = golden(&f, a, b, GOLDEN_WIDTH);
    if refined.value <= best.1 {
        refined
    } else {
        Minimum { value: best.1, argmin: at(best.0) }
    }
}

/// `alpha_GW = min_{t in [0,1]} R_A(t)`.
pub fn alpha_gw() -> Minimum {
    minimize(r_a, 0.0, 1.0)
}

/// `beta(q) = min_{t in [0,1]} R_q(t)`; `beta(1)` is the mixed-rounding constant.
pub fn beta_of_q(q: f64) -> Result<Minimum, ConstantsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(ConstantsError::InvalidQ(q));
    }
    Ok(minimize(|t| r_q(q, t), 0.0, 1.0))
}

pub fn beta() -> Minimum {
    minimize(r_b, 0.0, 1.0)
}

/// Final bracket `(lo, hi)` of width at most 1e-8 around a sign change.
fn bisect<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> Result<(f64, f64), ConstantsError> {
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok((lo, lo));
    }
    if g_hi == 0.0 {
        return Ok((hi, hi));
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(ConstantsError::NoBracket { lo, hi });
    }
    let lo_sign = g_lo.signum();
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Root of `beta(q) = (1 + q)/2` on `[0, 1]`.
///
/// Returns the end of the final bracket where `beta(q) <= (1 + q)/2`, so
/// `beta(q*)` bounds both the edge and the field share at the returned `q`.
pub fn q_star() -> Result<f64, ConstantsError> {
    let g = |q: f64| beta_of(q) - 0.5 * (1.0 + q);
    let (lo, hi) = bisect(g, 0.0, 1.0)?;
    Ok(if g(lo) <= 0.0 { lo } else { hi })
}

/// Best-of field and Ising warm-up ratio `1 - 1/(4 alpha)`.
pub fn warmup_ratio_with(alpha: f64) -> f64 {
    1.0 - 1.0 / (4.0 * alpha)
}

pub fn warmup_ratio() -> f64 {
    warmup_ratio_with(alpha_gw().value)
}

/// Edge share where the pure-ZZ and mixed candidate bounds cross.
pub fn two_candidate_crossing(alpha: f64, beta: f64) -> f64 {
    0.5 / (alpha + 0.5 - beta)
}

/// Two-candidate ratio `1/2 + (1/2)(alpha - 1/2)/(alpha + 1/2 - beta)`.
pub fn two_candidate_gamma_with(alpha: f64, beta: f64) -> f64 {
    0.5 + 0.5 * (alpha - 0.5) / (alpha + 0.5 - beta)
}

pub fn two_candidate_gamma() -> f64 {
    two_candidate_gamma_with(alpha_gw().value, beta().value)
}

/// `Q(p, q) = (1+q)/2 + (beta(q) - (1+q)/2) p` given a precomputed `beta(q)`.
pub fn q_value(p: f64, q: f64, beta_q: f64) -> f64 {
    let field = 0.5 * (1.0 + q);
    field + (beta_q - field) * p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub p: f64,
    pub q_opt: f64,
    pub ratio: f64,
}

/// Shared scan of `beta` over a uniform q grid.
struct QTable {
    q: Vec<f64>,
    beta: Vec<f64>,
}

impl QTable {
    fn new() -> Self {
        let q: Vec<f64> = (0..Q_TABLE_POINTS)
            .map(|i| i as f64 / (Q_TABLE_POINTS - 1) as f64)
            .collect();
        let beta = q.par_iter().map(|&q| beta_of(q)).collect();
        QTable { q, beta }
    }

    fn point(&self, p: f64) -> CurvePoint {
        let last = Q_TABLE_POINTS - 1;
        let mut best = 0;
        for i in 1..=last {
            if q_value(p, self.q[i], self.beta[i]) > q_value(p, self.q[best], self.beta[best]) {
                best = i;
            }
        }
        let lo = self.q[best.saturating_sub(1)];
        let hi = self.q[(best + 1).min(last)];
        let neg = |q: f64| -q_value(p, q, beta_of(q));
        let refined = golden(&neg, lo, hi, GOLDEN_WIDTH);
        let mut out = CurvePoint { p, q_opt: refined.argmin, ratio: -refined.value };
        for (q, b) in [(0.0, self.beta[0]), (1.0, self.beta[last])] {
            let v = q_value(p, q, b);
            if v >= out.ratio {
                out = CurvePoint { p, q_opt: q, ratio: v };
            }
        }
        out
    }
}

fn beta_of(q: f64) -> f64 {
    minimize(|t| r_q(q, t), 0.0, 1.0).value
}

/// `max_q Q(p, q)` on `grid` uniformly spaced values of `p` in `[0, 1]`.
pub fn q_opt_curve(grid: usize) -> Result<Vec<CurvePoint>, ConstantsError> {
    if grid < 2 {
        return Err(ConstantsError::GridTooSmall(grid));
    }
    let table = QTable::new();
    Ok((0..grid)
        .into_par_iter()
        .map(|i| {
            let p = if i == grid - 1 { 1.0 } else { i as f64 / (grid - 1) as f64 };
            table.point(p)
        })
        .collect())
}

/// Landmarks of the curve, located by bisection and golden search in `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveFeatures {
    /// Smallest `p` with `q_opt < 1`.
    pub transition_p: f64,
    /// `p` with `q_opt(p) = q*`.
    pub crossing_p: f64,
    /// `min_p max_q Q(p, q)` and where it is attained.
    pub min_ratio: f64,
    pub min_ratio_p: f64,
}

pub fn curve_features(q_star: f64) -> Result<CurveFeatures, ConstantsError> {
    let table = QTable::new();
    let mid = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
    let transition_p = mid(bisect(
        |p| if table.point(p).q_opt < 1.0 - TRANSITION_SLACK { 1.0 } else { -1.0 },
        0.0,
        1.0,
    )?);
    let crossing_p = mid(bisect(|p| table.point(p).q_opt - q_star, 0.0, 1.0)?);
    // The ratio is a maximum of affine functions of p, hence convex.
    let min = golden(&|p| table.point(p).ratio, 0.0, 1.0, BISECTION_WIDTH);
    Ok(CurveFeatures {
        transition_p,
        crossing_p,
        min_ratio: min.value,
        min_ratio_p: min.argmin,
    })
}

/// Every constant in one flat record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub alpha_gw: f64,
    pub alpha_gw_argmin: f64,
    pub beta: f64,
    pub beta_argmin: f64,
    pub q_star: f64,
    #[serde(rename = "ratio_C")]
    pub ratio_c: f64,
    pub gamma_warmup: f64,
    pub gamma_two: f64,
    pub p_star: f64,
    pub transition_p: f64,
    pub crossing_p: f64,
    pub curve_min_ratio: f64,
}

pub fn all_constants() -> Result<Constants, ConstantsError> {
    let a = alpha_gw();
    let b = beta();
    let q = q_star()?;
    let features = curve_features(q)?;
    Ok(Constants {
        alpha_gw: a.value,
        alpha_gw_argmin: a.argmin,
        beta: b.value,
        beta_argmin: b.argmin,
        q_star: q,
        ratio_c: beta_of(q),
        gamma_warmup: warmup_ratio_with(a.value),
        gamma_two: two_candidate_gamma_with(a.value, b.value),
        p_star: two_candidate_crossing(a.value, b.value),
        transition_p: features.transition_p,
        crossing_p: features.crossing_p,
        curve_min_ratio: features.min_ratio,
    })
}
