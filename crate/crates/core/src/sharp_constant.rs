//! The constant `C(p,q)` as the infimum over the open unit square of
//!
//! ```text
//! F(a,c) = B(a,c,q)^(θ−1) / B(a,c,p)^θ,      θ = (q−2)/(q−p),
//! B(a,c,s) = (c^(s−2)(a^s − 1) + c^s(a² − a^s) + 1 − a²) / ((1−c)(1−a)(1−ac)).
//! ```
//!
//! `B` has removable singularities on the sides `a = 1` and `c = 1`, and the
//! infimum is frequently attained only in the limit towards them (for
//! `(p,q) = (4,6)` along `a → 1` at `c = 1/2`). The minimiser therefore
//! searches the interior and every side of the closed square, evaluating the
//! singular sides as Richardson-extrapolated one-sided limits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::numeric::{minimize_scalar, richardson, Extrapolation};
use crate::rv::{admissible_constant, check_exponents, two_point, GapReport};

pub const DEFAULT_TOL: f64 = 1e-7;
/// Smallest distance from the sides at which `b_func` and `objective`
/// accept points.
pub const EVAL_MARGIN: f64 = 1e-9;
/// Relative agreement required by the identity checks.
pub const IDENTITY_REL_TOL: f64 = 1e-10;

const GRID_POINTS: usize = 512;
const GRID_EPS: f64 = 1e-6;
const LOG_DOMAIN_EXPONENT: f64 = 30.0;
const RICHARDSON_FIRST_LEVEL: i32 = 10;
const RICHARDSON_LEVELS: usize = 18;
const INTERIOR_MARGIN: f64 = 7.450580596923828e-9; // 2^-27
const EDGE_SCAN_POINTS: usize = 513;
const CORNER_SCAN_POINTS: usize = 129;
const CORNER_DIR_MIN: f64 = 1e-3;
const SCALAR_XTOL: f64 = 1e-10;
const NM_MAX_ITER: usize = 10_000;
const NM_STARTS: usize = 4;

/// A point of the closed square together with its exact distances to the
/// sides `a = 1` and `c = 1`.
#[derive(Debug, Clone, Copy)]
struct Point {
    a: f64,
    da: f64,
    c: f64,
    dc: f64,
}

impl Point {
    fn new(a: f64, c: f64) -> Self {
        Self {
            a,
            da: 1.0 - a,
            c,
            dc: 1.0 - c,
        }
    }
}

/// `ln x` given `x` and `1 − x`, accurate when `x` is close to 1.
fn ln_with_gap(x: f64, gap: f64) -> f64 {
    if gap < 0.5 {
        (-gap).ln_1p()
    } else {
        x.ln()
    }
}

/// `B(a,c,s)` written as
/// `((c^(s−2) − 1)(a^s − 1) + (c^s − 1)(a² − a^s)) / ((1−c)(1−a)(1−ac))`,
/// which equals the defining quotient and keeps full relative accuracy as
/// `a → 1` or `c → 1`.
fn b_stable(pt: Point, s: f64) -> f64 {
    let ln_a = ln_with_gap(pt.a, pt.da);
    let ln_c = ln_with_gap(pt.c, pt.dc);
    let a_s = (s * ln_a).exp_m1();
    let a_2 = (2.0 * ln_a).exp_m1();
    let c_s2 = ((s - 2.0) * ln_c).exp_m1();
    let c_s = (s * ln_c).exp_m1();
    let num = c_s2 * a_s + c_s * (a_2 - a_s);
    let den = pt.dc * pt.da * (pt.da + pt.dc - pt.da * pt.dc);
    num / den
}

fn theta(p: f64, q: f64) -> f64 {
    (q - 2.0) / (q - p)
}

fn objective_at(pt: Point, p: f64, q: f64) -> f64 {
    let th = theta(p, q);
    let bq = b_stable(pt, q);
    let bp = b_stable(pt, p);
    if th > LOG_DOMAIN_EXPONENT {
        ((th - 1.0) * bq.ln() - th * bp.ln()).exp()
    } else {
        bq.powf(th - 1.0) / bp.powf(th)
    }
}

fn check_open_square(a: f64, c: f64) -> Result<()> {
    let ok = |x: f64| (EVAL_MARGIN..=1.0 - EVAL_MARGIN).contains(&x);
    if !(ok(a) && ok(c)) {
        return Err(domain(format!(
            "(a, c) = ({a}, {c}) must lie at least {EVAL_MARGIN:e} inside the unit square"
        )));
    }
    Ok(())
}

/// `B(a,c,p)` on the open square.
pub fn b_func(a: f64, c: f64, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 2.0) {
        return Err(param(format!("exponent p = {p} must exceed 2")));
    }
    check_open_square(a, c)?;
    Ok(b_stable(Point::new(a, c), p))
}

/// `F(a,c) = B(a,c,q)^(θ−1) / B(a,c,p)^θ` on the open square.
pub fn objective(a: f64, c: f64, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    check_open_square(a, c)?;
    Ok(objective_at(Point::new(a, c), p, q))
}

/// How one coordinate moves along a path `t ↦ (a(t), c(t))`, `t → 0⁺`.
#[derive(Debug, Clone, Copy)]
enum Coord {
    Fixed(f64),
    /// `x = 1 − rate·t`
    FromOne(f64),
    /// `x = rate·t`
    FromZero(f64),
}

impl Coord {
    fn at(self, t: f64) -> (f64, f64) {
        match self {
            Coord::Fixed(x) => (x, 1.0 - x),
            Coord::FromOne(rate) => (1.0 - rate * t, rate * t),
            Coord::FromZero(rate) => (rate * t, 1.0 - rate * t),
        }
    }

    /// Level at which the nested margins start: deeper when a fixed
    /// coordinate sits close to 1, since the expansion in `t` then only
    /// converges for `t` small compared to that distance.
    fn first_level(self) -> i32 {
        match self {
            Coord::Fixed(x) if 1.0 - x < 1.0 / 64.0 => {
                let need = (16.0 / (1.0 - x)).log2().ceil() as i32;
                need.max(RICHARDSON_FIRST_LEVEL)
            }
            _ => RICHARDSON_FIRST_LEVEL,
        }
    }
}

fn path_point(ca: Coord, cc: Coord, t: f64) -> Point {
    let (a, da) = ca.at(t);
    let (c, dc) = cc.at(t);
    Point { a, da, c, dc }
}

fn path_levels(ca: Coord, cc: Coord) -> impl Iterator<Item = f64> {
    let k0 = ca.first_level().max(cc.first_level());
    (0..RICHARDSON_LEVELS as i32).map(move |k| 2f64.powi(-(k0 + k)))
}

/// One-sided limit of the objective along a path, by Richardson
/// extrapolation over nested margins `t = 2^-k`.
fn objective_limit(ca: Coord, cc: Coord, p: f64, q: f64) -> Extrapolation {
    let samples: Vec<f64> = path_levels(ca, cc)
        .map(|t| objective_at(path_point(ca, cc, t), p, q))
        .collect();
    richardson(&samples)
}

/// Where in the closed square the infimum was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Location {
    Interior,
    /// limit `a → 1⁻` at fixed `c`
    EdgeAOne,
    /// limit `c → 1⁻` at fixed `a`
    EdgeCOne,
    EdgeAZero,
    EdgeCZero,
    /// limit `(a,c) → (1,1)` along `(1 − s·t, 1 − (1−s)·t)`
    CornerOneOne { s: f64 },
}

/// The computed constant and where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpConstantResult {
    pub p: f64,
    pub q: f64,
    pub c_value: f64,
    /// `(a*, c*)`, possibly on the boundary of the square.
    pub argmin: (f64, f64),
    pub location: Location,
    /// Objective evaluations spent by the local searches.
    pub iterations: usize,
    /// Error estimate of `c_value` (extrapolation error or final bracket
    /// spread, whichever is larger).
    pub achieved_tol: f64,
    pub tol: f64,
    pub lower_bound: f64,
}

/// JSON record `{p, q, C, a_star, c_star, lower_bound, tol}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpConstantRecord {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub a_star: f64,
    pub c_star: f64,
    pub lower_bound: f64,
    pub tol: f64,
}

impl SharpConstantResult {
    pub fn record(&self) -> SharpConstantRecord {
        SharpConstantRecord {
            p: self.p,
            q: self.q,
            c: self.c_value,
            a_star: self.argmin.0,
            c_star: self.argmin.1,
            lower_bound: self.lower_bound,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    value: f64,
    argmin: (f64, f64),
    location: Location,
    error: f64,
}

fn better(x: Candidate, y: Candidate) -> Candidate {
    if y.value < x.value {
        y
    } else {
        x
    }
}

/// Coarse grid over `[ε, 1−ε]²`. Rows are evaluated in parallel; the row
/// minima are combined in row order so the result does not depend on
/// scheduling. Returns the whole table for basin detection.
fn grid_values(p: f64, q: f64) -> (Vec<f64>, Vec<f64>) {
    let step = (1.0 - 2.0 * GRID_EPS) / (GRID_POINTS - 1) as f64;
    let axis: Vec<f64> = (0..GRID_POINTS)
        .map(|i| GRID_EPS + step * i as f64)
        .collect();
    let values: Vec<f64> = axis
        .par_iter()
        .flat_map_iter(|&a| {
            axis.iter()
                .map(move |&c| objective_at(Point::new(a, c), p, q))
        })
        .collect();
    (axis, values)
}

/// Grid points not exceeded by any of their neighbours, best first.
fn grid_basins(values: &[f64]) -> Vec<usize> {
    let n = GRID_POINTS;
    let mut basins: Vec<usize> = (0..n * n)
        .filter(|&idx| {
            let (i, j) = (idx / n, idx % n);
            let v = values[idx];
            if !v.is_finite() {
                return false;
            }
            (i.saturating_sub(1)..=(i + 1).min(n - 1)).all(|ii| {
                (j.saturating_sub(1)..=(j + 1).min(n - 1)).all(|jj| !(values[ii * n + jj] < v))
            })
        })
        .collect();
    basins.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(x.cmp(&y)));
    basins.truncate(NM_STARTS);
    basins
}

struct NmOutcome {
    x: [f64; 2],
    value: f64,
    spread: f64,
    iterations: usize,
}

/// Nelder–Mead on the box `[lo, hi]²`, with trial points projected back
/// into the box.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: F, start: [f64; 2], step: f64, lo: f64, hi: f64, ftol: f64) -> NmOutcome {
    let clamp = |x: [f64; 2]| [x[0].clamp(lo, hi), x[1].clamp(lo, hi)];
    let mut simplex = [
        clamp(start),
        clamp([start[0] + step, start[1]]),
        clamp([start[0], start[1] + step]),
    ];
    if simplex[1] == simplex[0] {
        simplex[1] = clamp([start[0] - step, start[1]]);
    }
    if simplex[2] == simplex[0] {
        simplex[2] = clamp([start[0], start[1] - step]);
    }
    let mut fv = simplex.map(&f);
    let mut iterations = 0;
    loop {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| fv[i].total_cmp(&fv[j]));
        simplex = order.map(|i| simplex[i]);
        fv = order.map(|i| fv[i]);
        let spread = fv[2] - fv[0];
        let size = simplex
            .iter()
            .skip(1)
            .map(|x| (x[0] - simplex[0][0]).abs().max((x[1] - simplex[0][1]).abs()))
            .fold(0.0f64, f64::max);
        if (spread <= ftol && size <= 1e-9) || size <= 1e-14 || iterations >= NM_MAX_ITER {
            return NmOutcome {
                x: simplex[0],
                value: fv[0],
                spread,
                iterations,
            };
        }
        iterations += 1;
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            clamp([
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ])
        };
        let xr = along(-1.0);
        let fr = f(xr);
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = f(xe);
            if fe < fr {
                simplex[2] = xe;
                fv[2] = fe;
            } else {
                simplex[2] = xr;
                fv[2] = fr;
            }
        } else if fr < fv[1] {
            simplex[2] = xr;
            fv[2] = fr;
        } else {
            let (xc, fc) = if fr < fv[2] {
                let x = along(-0.5);
                (x, f(x))
            } else {
                let x = along(0.5);
                (x, f(x))
            };
            if fc < fv[2].min(fr) {
                simplex[2] = xc;
                fv[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        0.5 * (simplex[0][0] + simplex[i][0]),
                        0.5 * (simplex[0][1] + simplex[i][1]),
                    ];
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
}

/// Minimise `F` over the closed square by a coarse grid plus Nelder–Mead
/// polish in the interior, scalar searches along each side (one-sided
/// limits on `a = 1` and `c = 1`) and a directional search at the corner
/// `(1,1)`. The smallest candidate wins.
pub fn compute_c(p: f64, q: f64, tol: f64) -> Result<SharpConstantResult> {
    check_exponents(p, q)?;
    if !(1e-10..=1e-3).contains(&tol) {
        return Err(param(format!("tolerance {tol:e} must lie in [1e-10, 1e-3]")));
    }
    let lower_bound = c_lower_bound(p, q).unwrap_or(0.0);
    let mut evaluations = 0usize;

    // Interior: grid basins polished by Nelder–Mead.
    let (axis, values) = grid_values(p, q);
    let step = axis[1] - axis[0];
    let mut best: Option<Candidate> = None;
    for idx in grid_basins(&values) {
        let start = [axis[idx / GRID_POINTS], axis[idx % GRID_POINTS]];
        let out = nelder_mead(
            |x| objective_at(Point::new(x[0], x[1]), p, q),
            start,
            step,
            INTERIOR_MARGIN,
            1.0 - INTERIOR_MARGIN,
            0.01 * tol,
        );
        evaluations += out.iterations;
        let cand = Candidate {
            value: out.value,
            argmin: (out.x[0], out.x[1]),
            location: Location::Interior,
            error: out.spread,
        };
        best = Some(best.map_or(cand, |b| better(b, cand)));
    }
    let mut best = best.ok_or_else(|| Error::Numerical("objective is not finite on the grid".into()))?;

    let side_hi = 1.0 - GRID_EPS;

    // Side a → 1 (one-sided limit), c ∈ [0, 1).
    let edge = minimize_scalar(
        |c| objective_limit(Coord::FromOne(1.0), Coord::Fixed(c), p, q).value,
        0.0,
        side_hi,
        EDGE_SCAN_POINTS,
        SCALAR_XTOL,
    );
    evaluations += edge.evaluations * RICHARDSON_LEVELS;
    let ex = objective_limit(Coord::FromOne(1.0), Coord::Fixed(edge.x), p, q);
    best = better(
        best,
        Candidate {
            value: ex.value,
            argmin: (1.0, edge.x),
            location: Location::EdgeAOne,
            error: ex.error.max(edge.spread),
        },
    );

    // Side c → 1 (one-sided limit), a ∈ [0, 1).
    let edge = minimize_scalar(
        |a| objective_limit(Coord::Fixed(a), Coord::FromOne(1.0), p, q).value,
        0.0,
        side_hi,
        EDGE_SCAN_POINTS,
        SCALAR_XTOL,
    );
    evaluations += edge.evaluations * RICHARDSON_LEVELS;
    let ex = objective_limit(Coord::Fixed(edge.x), Coord::FromOne(1.0), p, q);
    best = better(
        best,
        Candidate {
            value: ex.value,
            argmin: (edge.x, 1.0),
            location: Location::EdgeCOne,
            error: ex.error.max(edge.spread),
        },
    );

    // Sides a = 0 and c = 0 are regular; evaluate directly.
    let edge = minimize_scalar(
        |c| objective_at(Point::new(0.0, c), p, q),
        0.0,
        side_hi,
        EDGE_SCAN_POINTS,
        SCALAR_XTOL,
    );
    evaluations += edge.evaluations;
    best = better(
        best,
        Candidate {
            value: edge.value,
            argmin: (0.0, edge.x),
            location: Location::EdgeAZero,
            error: edge.spread,
        },
    );
    let edge = minimize_scalar(
        |a| objective_at(Point::new(a, 0.0), p, q),
        0.0,
        side_hi,
        EDGE_SCAN_POINTS,
        SCALAR_XTOL,
    );
    evaluations += edge.evaluations;
    best = better(
        best,
        Candidate {
            value: edge.value,
            argmin: (edge.x, 0.0),
            location: Location::EdgeCZero,
            error: edge.spread,
        },
    );

    // Corner (1,1): the limit depends on the direction of approach.
    let corner = minimize_scalar(
        |s| objective_limit(Coord::FromOne(s), Coord::FromOne(1.0 - s), p, q).value,
        CORNER_DIR_MIN,
        1.0 - CORNER_DIR_MIN,
        CORNER_SCAN_POINTS,
        SCALAR_XTOL,
    );
    evaluations += corner.evaluations * RICHARDSON_LEVELS;
    let ex = objective_limit(Coord::FromOne(corner.x), Coord::FromOne(1.0 - corner.x), p, q);
    best = better(
        best,
        Candidate {
            value: ex.value,
            argmin: (1.0, 1.0),
            location: Location::CornerOneOne { s: corner.x },
            error: ex.error.max(corner.spread),
        },
    );

    if !best.value.is_finite() {
        return Err(Error::Numerical(format!("non-finite minimum for p = {p}, q = {q}")));
    }
    if best.error > tol {
        return Err(Error::Solver {
            iterations: evaluations,
            best: best.value,
            spread: best.error,
        });
    }
    if best.value < lower_bound - 1e-9 {
        return Err(Error::Numerical(format!(
            "minimum {} fell below the closed-form lower bound {lower_bound}",
            best.value
        )));
    }
    Ok(SharpConstantResult {
        p,
        q,
        c_value: best.value,
        argmin: best.argmin,
        location: best.location,
        iterations: evaluations,
        achieved_tol: best.error,
        tol,
        lower_bound,
    })
}

/// `ln` of the closed-form lower bound
/// `(min{1, q−2})^((p−2)/(q−p)) / p^(2(q−2)/(q−p))`; finite for all valid `p, q`.
pub fn ln_c_lower_bound(p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    let th = theta(p, q);
    Ok((th - 1.0) * (q - 2.0).min(1.0).ln() - 2.0 * th * p.ln())
}

/// Closed-form lower bound on `C(p,q)`. Fails if the value underflows `f64`,
/// which happens for `q` very close to `p`; use [`ln_c_lower_bound`] there.
pub fn c_lower_bound(p: f64, q: f64) -> Result<f64> {
    let v = ln_c_lower_bound(p, q)?.exp();
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "lower bound for p = {p}, q = {q} underflows f64; use ln_c_lower_bound"
        )))
    }
}

/// The `(p,q) = (4,6)` decomposition `F(a,c) − 1/3 = R(a,c)` with
/// `R = (c(2c−1)a² − (c+1)²a + 3c² − c + 2) / (3(1+c)(1+a)(1+ac))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C46Identity {
    /// `F(a,c) − 1/3` (a one-sided limit when `a = 1` or `c = 1`)
    pub residual: f64,
    pub rational_form: f64,
    /// `|F − (1/3 + R)| / F`
    pub rel_err: f64,
}

pub fn c46_rational_form(a: f64, c: f64) -> f64 {
    (c * (2.0 * c - 1.0) * a * a - (c + 1.0) * (c + 1.0) * a + 3.0 * c * c - c + 2.0)
        / (3.0 * (1.0 + c) * (1.0 + a) * (1.0 + a * c))
}

/// Residual `F(a,c) − 1/3` for `p = 4, q = 6` on the closed square, checked
/// against the rational form to [`IDENTITY_REL_TOL`].
pub fn c46_identity_residual(a: f64, c: f64) -> Result<C46Identity> {
    if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&c)) {
        return Err(domain(format!("(a, c) = ({a}, {c}) outside the closed unit square")));
    }
    let f = match (a == 1.0, c == 1.0) {
        (false, false) => objective_at(Point::new(a, c), 4.0, 6.0),
        (true, false) => objective_limit(Coord::FromOne(1.0), Coord::Fixed(c), 4.0, 6.0).value,
        (false, true) => objective_limit(Coord::Fixed(a), Coord::FromOne(1.0), 4.0, 6.0).value,
        (true, true) => objective_limit(Coord::FromOne(0.5), Coord::FromOne(0.5), 4.0, 6.0).value,
    };
    let rational_form = c46_rational_form(a, c);
    let rel_err = (f - (1.0 / 3.0 + rational_form)).abs() / f;
    if !(rel_err <= IDENTITY_REL_TOL) {
        return Err(Error::Numerical(format!(
            "C(4,6) identity mismatch at ({a}, {c}): relative error {rel_err:e}"
        )));
    }
    Ok(C46Identity {
        residual: f - 1.0 / 3.0,
        rational_form,
        rel_err,
    })
}

/// Leading principal minors of the derivative matrix of
/// `γ(t) = (t², t^p, t^q, −t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorsionReport {
    pub t: f64,
    pub p: f64,
    pub q: f64,
    /// determinants of the leading 1×1 … 4×4 blocks
    pub minors: [f64; 4],
    pub closed_forms: [f64; 4],
    pub max_rel_err: f64,
}

impl TorsionReport {
    pub fn all_positive(&self) -> bool {
        self.minors.iter().all(|&m| m > 0.0)
    }
}

/// `s(s−1)…(s−k+1) t^(s−k)`, the `k`-th derivative of `t^s`.
fn power_derivative(s: f64, k: u32, t: f64) -> f64 {
    let coeff: f64 = (0..k).map(|i| s - i as f64).product();
    if coeff == 0.0 {
        0.0
    } else {
        coeff * t.powf(s - k as f64)
    }
}

fn determinant<const N: usize>(mut m: [[f64; N]; N], size: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..size {
            let factor = m[row][col] / m[col][col];
            for k in col..size {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    det
}

pub fn torsion_minors(t: f64, p: f64, q: f64) -> Result<TorsionReport> {
    check_exponents(p, q)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(domain(format!("t = {t} must lie in (0, 1)")));
    }
    // Row k holds the k-th derivative of (t², t^p, t^q, −t).
    let mut m = [[0.0f64; 4]; 4];
    for (row, k) in (1..=4u32).enumerate() {
        m[row] = [
            power_derivative(2.0, k, t),
            power_derivative(p, k, t),
            power_derivative(q, k, t),
            if k == 1 { -1.0 } else { 0.0 },
        ];
    }
    let minors = [1, 2, 3, 4].map(|k| determinant(m, k));
    let closed_forms = [
        2.0 * t,
        2.0 * p * (p - 2.0) * t.powf(p - 1.0),
        2.0 * p * q * (p - 2.0) * (q - 2.0) * (q - p) * t.powf(p + q - 4.0),
        2.0 * p * (p - 1.0) * (p - 2.0) * q * (q - 1.0) * (q - 2.0) * (q - p) * t.powf(p + q - 7.0),
    ];
    let max_rel_err = minors
        .iter()
        .zip(&closed_forms)
        .map(|(m, c)| ((m - c) / c).abs())
        .fold(0.0f64, f64::max);
    Ok(TorsionReport {
        t,
        p,
        q,
        minors,
        closed_forms,
        max_rel_err,
    })
}

/// Equality check of the refined inequality along two-point variables that
/// approach the minimiser of `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub p: f64,
    pub q: f64,
    pub constant: f64,
    /// limit of the admissible constant `(1−‖X‖₁)/moment quotient`
    pub ratio_limit: f64,
    pub ratio_error: f64,
    /// `|ratio_limit − C| / C`
    pub rel_err: f64,
    /// the path point closest to the minimiser
    pub finest: GapReport,
    pub finest_ab: (f64, f64),
    pub path_points: usize,
}

const SHARPNESS_LEVELS: i32 = 15;

fn sharpness_path(result: &SharpConstantResult) -> Option<(Coord, Coord)> {
    let (a, c) = result.argmin;
    let free = |x: f64| {
        if x <= 0.0 {
            Coord::FromZero(1.0)
        } else if x >= 1.0 {
            Coord::FromOne(1.0)
        } else {
            Coord::Fixed(x)
        }
    };
    match result.location {
        Location::Interior => None,
        Location::CornerOneOne { s } => Some((Coord::FromOne(s), Coord::FromOne(1.0 - s))),
        _ => Some((free(a), free(c))),
    }
}

/// Build two-point variables `P{X=a} = r, P{X=1/c} = 1−r` approaching the
/// minimiser, compute the largest constant each admits, and extrapolate.
/// The result should reproduce `C(p,q)`.
pub fn sharpness_check(result: &SharpConstantResult) -> Result<SharpnessReport> {
    let (p, q, constant) = (result.p, result.q, result.c_value);
    let admissible = |a: f64, c: f64| -> Result<(f64, GapReport)> {
        let rv = two_point(a, 1.0 / c)?.to_finite_rv();
        let ratio = admissible_constant(&rv, p, q)?;
        let gap = crate::rv::main_inequality_rhs(&rv, p, q, constant)?;
        Ok((ratio, gap))
    };
    let (ratio_limit, ratio_error, finest, finest_ab, path_points) = match sharpness_path(result) {
        None => {
            let (a, c) = result.argmin;
            let (ratio, gap) = admissible(a, c)?;
            (ratio, 0.0, gap, (a, 1.0 / c), 1)
        }
        Some((ca, cc)) => {
            let k0 = ca.first_level().max(cc.first_level());
            let mut ratios = Vec::new();
            let mut last = None;
            for k in 0..SHARPNESS_LEVELS {
                let t = 2f64.powi(-(k0 + k));
                let (a, _) = ca.at(t);
                let (c, _) = cc.at(t);
                let (ratio, gap) = admissible(a, c)?;
                ratios.push(ratio);
                last = Some((gap, (a, 1.0 / c)));
            }
            let ex = richardson(&ratios);
            let (gap, ab) = last.expect("at least one level");
            (ex.value, ex.error, gap, ab, ratios.len())
        }
    };
    Ok(SharpnessReport {
        p,
        q,
        constant,
        ratio_limit,
        ratio_error,
        rel_err: ((ratio_limit - constant) / constant).abs(),
        finest,
        finest_ab,
        path_points,
    })
}
