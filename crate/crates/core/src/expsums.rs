//! Normalised exponential sums `X_S(θ) = |S|^{−1/2} Σ_{j∈S} e^{2πijθ}` on
//! `θ ∈ [0,1)`: exact even moments from additive energies, L^p norms by
//! periodic quadrature, and the refined-gap bound applied to them.

use std::sync::Arc;

use num_rational::Ratio;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::pairwise_sum;
use crate::rv::{check_exponents, moment_quotient};

pub const MAX_SQUARES: u64 = 1000;
/// Grid points per unit of span in the first quadrature pass.
pub const OVERSAMPLING: u64 = 64;
/// Largest quadrature grid.
pub const MAX_GRID: u64 = 1 << 28;
pub const MIN_QUAD_TOL: f64 = 1e-10;

const MIN_CHUNK: usize = 4096;

/// Finite set of distinct integers with at least two elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct ExpSumSet {
    elements: Vec<i64>,
}

impl TryFrom<Vec<i64>> for ExpSumSet {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        ExpSumSet::new(v)
    }
}

impl From<ExpSumSet> for Vec<i64> {
    fn from(s: ExpSumSet) -> Self {
        s.elements
    }
}

impl ExpSumSet {
    /// Elements may come in any order; duplicates are rejected.
    pub fn new(mut elements: Vec<i64>) -> Result<Self> {
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return Err(param("set elements must be distinct"));
        }
        if elements.len() < 2 {
            return Err(param("set needs at least two elements"));
        }
        let span = elements[elements.len() - 1] as i128 - elements[0] as i128;
        if span > (MAX_GRID / OVERSAMPLING) as i128 {
            return Err(Error::Capacity(format!(
                "span {span} exceeds the supported {}",
                MAX_GRID / OVERSAMPLING
            )));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> u64 {
        (self.elements[self.len() - 1] - self.elements[0]) as u64
    }

    pub fn shifted(&self, t: i64) -> Result<Self> {
        Self::new(self.elements.iter().map(|j| j + t).collect())
    }

    pub fn reflected(&self) -> Self {
        Self::new(self.elements.iter().map(|j| -j).collect()).expect("reflection keeps validity")
    }

    /// `size` distinct integers drawn uniformly from `[lo, lo + width)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, lo: i64, width: usize) -> Result<Self> {
        if size < 2 || size > width {
            return Err(param(format!("cannot draw {size} distinct values from {width}")));
        }
        Self::new(sample(rng, width, size).into_iter().map(|i| lo + i as i64).collect())
    }

    /// Offsets `j − min S`, all in `[0, span]`.
    fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        let lo = self.elements[0];
        self.elements.iter().map(move |&j| (j - lo) as usize)
    }
}

/// `{1, 4, 9, …, m²}`
pub fn squares_set(m: u64) -> Result<ExpSumSet> {
    if !(2..=MAX_SQUARES).contains(&m) {
        return Err(param(format!("m = {m} must lie in 2..={MAX_SQUARES}")));
    }
    ExpSumSet::new((1..=m as i64).map(|j| j * j).collect())
}

fn factorial(k: u32) -> u64 {
    (1..=k as u64).product()
}

/// Number `r_k(S)` of `2k`-tuples from `S` whose first and last `k` entries
/// have equal sums.
pub fn additive_energy(set: &ExpSumSet, k: u32) -> Result<u64> {
    if !(1..=3).contains(&k) {
        return Err(param(format!("k = {k} must be 1, 2 or 3")));
    }
    let n = set.len() as u64;
    let guard = n
        .checked_pow(2 * k - 1)
        .and_then(|v| v.checked_mul(factorial(k)));
    if guard.is_none() {
        return Err(Error::Capacity(format!(
            "r_{k} for |S| = {n} may overflow 64-bit counts; use a big-integer count"
        )));
    }
    let offsets: Vec<usize> = set.offsets().collect();
    let span = set.span() as usize;
    // coefficients of (Σ_{j∈S} z^{j − min S})^i
    let mut coeffs = vec![0u64; span + 1];
    for &d in &offsets {
        coeffs[d] = 1;
    }
    for i in 2..=k as usize {
        let mut next = vec![0u64; i * span + 1];
        for (idx, &c) in coeffs.iter().enumerate().filter(|(_, &c)| c != 0) {
            for &d in &offsets {
                next[idx + d] += c;
            }
        }
        coeffs = next;
    }
    Ok(coeffs.iter().map(|c| c * c).sum())
}

/// `‖X_S‖_{2k}^{2k} = r_k(S)/|S|^k`, exactly.
pub fn exact_even_moment(set: &ExpSumSet, k: u32) -> Result<Ratio<u64>> {
    let r = additive_energy(set, k)?;
    Ok(Ratio::new(r, (set.len() as u64).pow(k)))
}

pub fn ratio_to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Quadrature estimate of `‖X_S‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadNorm {
    pub p: f64,
    /// `‖X_S‖_p`
    pub value: f64,
    /// `‖X_S‖_p^p`
    pub moment: f64,
    /// change of `value` in the last grid doubling
    pub est_error: f64,
    pub grid_points: u64,
}

struct GridPlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl GridPlan {
    fn new(span: u64, grid: u64) -> Self {
        let n = ((8 * (span + 1)).next_power_of_two().max(MIN_CHUNK as u64)).min(grid) as usize;
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let scratch_len = fft.get_inplace_scratch_len();
        Self { n, fft, scratch_len }
    }
}

/// `Σ_l |X_S((l + h/2)/M)|^p` over `l = 0..M`, `h ∈ {0, 1}`.
///
/// Points `l ≡ r (mod M/n)` form a length-`n` inverse DFT of the phase-twisted
/// indicator, so the grid is processed in independent chunks of size `n`.
fn grid_power_sum(set: &ExpSumSet, p: f64, grid: u64, half_shift: bool, plan: &GridPlan) -> f64 {
    let n = plan.n;
    let chunks = (grid / n as u64) as usize;
    let two_m = 2 * grid;
    let inv_size = 1.0 / set.len() as f64;
    let offsets: Vec<u64> = set.offsets().map(|d| d as u64).collect();
    let chunk_sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex::new(0.0, 0.0); n],
                    vec![Complex::new(0.0, 0.0); plan.scratch_len],
                    vec![0.0; n],
                )
            },
            |(buf, scratch, vals), r| {
                buf.fill(Complex::new(0.0, 0.0));
                let step = 2 * r as u64 + half_shift as u64;
                for &d in &offsets {
                    let phase = (d * step) % two_m;
                    let angle = std::f64::consts::TAU * phase as f64 / two_m as f64;
                    buf[d as usize] = Complex::from_polar(1.0, angle);
                }
                plan.fft.process_with_scratch(buf, scratch);
                for (v, z) in vals.iter_mut().zip(buf.iter()) {
                    *v = (z.norm_sqr() * inv_size).powf(0.5 * p);
                }
                pairwise_sum(vals)
            },
        )
        .collect();
    pairwise_sum(&chunk_sums)
}

/// `‖X_S‖_p` by the uniform rule on `[0,1)`, starting from
/// `M = 64·(span+1)` rounded up to a power of two and doubling until the
/// value moves by less than `tol`.
pub fn quadrature_norm(set: &ExpSumSet, p: f64, tol: f64) -> Result<QuadNorm> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(param(format!("exponent p = {p} must be finite and at least 1")));
    }
    if !(tol >= MIN_QUAD_TOL) {
        return Err(param(format!("tolerance {tol:e} must be at least {MIN_QUAD_TOL:e}")));
    }
    let mut grid = (OVERSAMPLING * (set.span() + 1)).next_power_of_two();
    let plan = GridPlan::new(set.span(), grid);
    let mut sum = grid_power_sum(set, p, grid, false, &plan);
    let mut moment = sum / grid as f64;
    let mut value = moment.powf(1.0 / p);
    loop {
        if 2 * grid > MAX_GRID {
            return Err(Error::Numerical(format!(
                "‖X_S‖_{p} quadrature did not reach {tol:e} within {MAX_GRID} points"
            )));
        }
        sum += grid_power_sum(set, p, grid, true, &plan);
        grid *= 2;
        let next_moment = sum / grid as f64;
        let next_value = next_moment.powf(1.0 / p);
        let change = (next_value - value).abs();
        moment = next_moment;
        value = next_value;
        if change < tol {
            return Ok(QuadNorm {
                p,
                value,
                moment,
                est_error: change,
                grid_points: grid,
            });
        }
    }
}

/// `‖X_S‖_p^p`, exact when `p ∈ {2, 4, 6}`.
fn moment_of(set: &ExpSumSet, p: f64, tol: f64) -> Result<f64> {
    if p == 2.0 || p == 4.0 || p == 6.0 {
        if let Ok(r) = exact_even_moment(set, (p / 2.0) as u32) {
            return Ok(ratio_to_f64(&r));
        }
    }
    Ok(quadrature_norm(set, p, tol)?.moment)
}

/// Exact even moments and quadrature norms of one set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub set: ExpSumSet,
    /// `(k, r_k/|S|^k)`
    pub exact_even: Vec<(u32, Ratio<u64>)>,
    pub quadrature: Vec<QuadNorm>,
}

impl MomentTable {
    pub fn compute(set: &ExpSumSet, ks: &[u32], ps: &[f64], tol: f64) -> Result<Self> {
        let exact_even = ks
            .iter()
            .map(|&k| Ok((k, exact_even_moment(set, k)?)))
            .collect::<Result<_>>()?;
        let quadrature = ps
            .iter()
            .map(|&p| quadrature_norm(set, p, tol))
            .collect::<Result<_>>()?;
        Ok(Self {
            set: set.clone(),
            exact_even,
            quadrature,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub p: f64,
    pub q: f64,
    pub constant: f64,
    pub lp_p: f64,
    pub lq_q: f64,
    /// `1 − C (‖X_S‖_p^p − 1)^θ / (‖X_S‖_q^q − 1)^{θ−1}`
    pub bound: f64,
    pub degenerate: bool,
}

/// Upper bound on `‖X_S‖₁` from the refined gap inequality with constant `C`.
/// Moments of order 4 and 6 are exact, others come from quadrature at `tol`.
pub fn theorem_upper_bound_tol(set: &ExpSumSet, p: f64, q: f64, constant: f64, tol: f64) -> Result<TheoremBound> {
    check_exponents(p, q)?;
    if !(constant.is_finite() && constant > 0.0) {
        return Err(param(format!("constant C = {constant} must be positive")));
    }
    let lp_p = moment_of(set, p, tol)?;
    let lq_q = moment_of(set, q, tol)?;
    let (bound, degenerate) = match moment_quotient(lp_p, lq_q, p, q) {
        Some(m) => (1.0 - constant * m, false),
        None => (1.0, true),
    };
    Ok(TheoremBound {
        p,
        q,
        constant,
        lp_p,
        lq_q,
        bound,
        degenerate,
    })
}

pub fn theorem_upper_bound(set: &ExpSumSet, p: f64, q: f64, constant: f64) -> Result<TheoremBound> {
    theorem_upper_bound_tol(set, p, q, constant, 1e-10)
}

/// One row of the growth table for the squares `{1, …, m²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BourgainRow {
    pub m: u64,
    pub l1: f64,
    pub l1_error: f64,
    pub l4_4: f64,
    pub l6_6: f64,
    /// `‖X_Q‖₄⁴ / log m`
    pub l4_over_log: f64,
    /// `‖X_Q‖₆⁶ / m`
    pub l6_over_m: f64,
    /// `(1 − ‖X_Q‖₁)·m / log^N m`
    pub deficit_scaled: f64,
    /// bound with `C(4,6) = 1/3`
    pub theorem_bound: f64,
    pub gap: f64,
}

pub const BOURGAIN_MAX_M: u64 = 500;

pub fn bourgain_row(m: u64, log_power: f64, tol: f64) -> Result<BourgainRow> {
    if m > BOURGAIN_MAX_M {
        return Err(Error::Capacity(format!("m = {m} exceeds {BOURGAIN_MAX_M}")));
    }
    let set = squares_set(m)?;
    let l1 = quadrature_norm(&set, 1.0, tol)?;
    let l4_4 = ratio_to_f64(&exact_even_moment(&set, 2)?);
    let l6_6 = ratio_to_f64(&exact_even_moment(&set, 3)?);
    let bound = theorem_upper_bound(&set, 4.0, 6.0, 1.0 / 3.0)?.bound;
    let log_m = (m as f64).ln();
    Ok(BourgainRow {
        m,
        l1: l1.value,
        l1_error: l1.est_error,
        l4_4,
        l6_6,
        l4_over_log: l4_4 / log_m,
        l6_over_m: l6_6 / m as f64,
        deficit_scaled: (1.0 - l1.value) * m as f64 / log_m.powf(log_power),
        theorem_bound: bound,
        gap: bound - l1.value,
    })
}

pub fn bourgain_diagnostics(m_values: &[u64], log_power: f64, tol: f64) -> Result<Vec<BourgainRow>> {
    m_values.iter().map(|&m| bourgain_row(m, log_power, tol)).collect()
}
