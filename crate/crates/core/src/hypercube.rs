//! Functions on the discrete cube `{−1,1}ⁿ`, their coordinate differences
//! and the L¹ Poincaré ratio, plus the two one-dimensional integrals that
//! turn Rademacher-sum bounds into Poincaré constants.
//!
//! Vertex `x` is stored at the index whose bit `j` is set exactly when
//! `x_j = −1`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::pairwise_mean;
use crate::quadrature::{integrate, QuadratureResult};
use crate::rademacher::dax1_deficit;

pub const MAX_DIM: usize = 20;
/// The improvement over π/2 asserted for the Poincaré constant.
pub const DELTA_CLAIMED: f64 = 0.00013;
/// π/2 − √(π/2), reported for context next to the remark figure.
pub const GAUSSIAN_DELTA: f64 = FRAC_PI_2 - 1.253_314_137_315_500_3;

const PAR_THRESHOLD: usize = 1 << 14;

/// Real-valued function on `{−1,1}ⁿ` as a table of `2ⁿ` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CubeTable", into = "CubeTable")]
pub struct CubeFunction {
    n: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CubeTable {
    n: usize,
    values: Vec<f64>,
}

impl TryFrom<CubeTable> for CubeFunction {
    type Error = Error;

    fn try_from(t: CubeTable) -> Result<Self> {
        CubeFunction::new(t.n, t.values)
    }
}

impl From<CubeFunction> for CubeTable {
    fn from(f: CubeFunction) -> Self {
        CubeTable {
            n: f.n,
            values: f.values,
        }
    }
}

impl CubeFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(param(format!("dimension n = {n} must lie in 1..={MAX_DIM}")));
        }
        if values.len() != 1 << n {
            return Err(param(format!(
                "table has {} entries, expected 2^{n} = {}",
                values.len(),
                1usize << n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(param("table values must be finite"));
        }
        Ok(Self { n, values })
    }

    /// Tabulate `f(x)` with `x ∈ {−1,1}ⁿ` passed as a slice of `±1.0`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(n: usize, f: F) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(param(format!("dimension n = {n} must lie in 1..={MAX_DIM}")));
        }
        let mut x = vec![0.0; n];
        let values = (0..1usize << n)
            .map(|idx| {
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = vertex_coord(idx, j);
                }
                f(&x)
            })
            .collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn expectation(&self) -> f64 {
        pairwise_mean(&self.values)
    }

    /// Random table mixing Gaussian values, Boolean `±1` functions and
    /// sparse spikes.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Self> {
        let len = 1usize << n.min(MAX_DIM);
        let kind = rng.random_range(0..4u8);
        let mut values: Vec<f64> = match kind {
            0 => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
            1 => (0..len)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 })
                .collect(),
            2 => {
                let density = rng.random_range(0.0..0.2);
                (0..len)
                    .map(|_| {
                        if rng.random_bool(density) {
                            rng.random_range(-10.0..10.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            _ => (0..len)
                .map(|_| {
                    let g: f64 = rng.sample(StandardNormal);
                    if rng.random_bool(0.05) {
                        g * 20.0
                    } else {
                        g
                    }
                })
                .collect(),
        };
        if values.iter().all(|&v| v == values[0]) {
            values[0] += 1.0;
        }
        Self::new(n, values)
    }

    /// Little-endian `u32` dimension followed by `2ⁿ` little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 8 * self.values.len());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (head, rest) = bytes
            .split_first_chunk::<4>()
            .ok_or_else(|| Error::Parse("binary cube table shorter than its header".into()))?;
        let n = u32::from_le_bytes(*head) as usize;
        if !(1..=MAX_DIM).contains(&n) || rest.len() != 8 << n {
            return Err(Error::Parse(format!(
                "binary cube table: header n = {n} does not match {} payload bytes",
                rest.len()
            )));
        }
        let values = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(n, values)
    }
}

fn vertex_coord(idx: usize, j: usize) -> f64 {
    if idx >> j & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn map_vertices<F>(len: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if len >= PAR_THRESHOLD {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

/// `D_j f(x) = (f(x) − f(S_j x))/2`, `j` counted from 0.
pub fn partial_difference(f: &CubeFunction, j: usize) -> Result<CubeFunction> {
    if j >= f.n {
        return Err(param(format!("coordinate {j} out of range for n = {}", f.n)));
    }
    let bit = 1usize << j;
    let v = &f.values;
    Ok(CubeFunction {
        n: f.n,
        values: map_vertices(v.len(), |x| 0.5 * (v[x] - v[x ^ bit])),
    })
}

/// `|∇f|(x) = (Σ_j |D_j f(x)|²)^{1/2}`
pub fn gradient_modulus(f: &CubeFunction) -> CubeFunction {
    let v = &f.values;
    let n = f.n;
    CubeFunction {
        n,
        values: map_vertices(v.len(), |x| {
            (0..n)
                .map(|j| {
                    let d = 0.5 * (v[x] - v[x ^ (1 << j)]);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        }),
    }
}

fn mean_abs_deviation(f: &CubeFunction) -> f64 {
    let mean = f.expectation();
    let dev: Vec<f64> = f.values.iter().map(|v| (v - mean).abs()).collect();
    pairwise_mean(&dev)
}

/// `E|f − Ef| / E|∇f|` under the uniform measure.
pub fn poincare_ratio(f: &CubeFunction) -> Result<f64> {
    let grad = gradient_modulus(f).expectation();
    if grad == 0.0 {
        return Err(Error::DegenerateInput(
            "Poincaré ratio undefined for a constant function".into(),
        ));
    }
    Ok(mean_abs_deviation(f) / grad)
}

/// `cos u` and `sin²u/4` for `p = (1 + cos u)/2`, i.e. `2p − 1` and `p(1−p)`.
fn arcsine_substitution(u: f64) -> (f64, f64) {
    let (s, c) = u.sin_cos();
    (c, 0.25 * s * s)
}

/// δ integrand after `p = (1 + cos u)/2`, which turns `dp/√(p(1−p))` into
/// `du` on `[0, π/2]`.
fn delta_integrand_u(u: f64) -> f64 {
    let (two_p_minus_1, pq) = arcsine_substitution(u);
    dax1_deficit(two_p_minus_1, pq)
}

/// `u` where the two branches of the `min` in the δ integrand cross:
/// `2p(1−p) = (2p−1)²`, i.e. `tan²u = 2`.
pub fn delta_kink() -> f64 {
    SQRT_2.atan()
}

/// `δ = ∫_{1/2}^{1} min{4P³, (2p−1)⁴P}/(45 − 3P³) dp/√P`, `P = p(1−p)`.
pub fn delta_integral(tol: f64) -> Result<QuadratureResult> {
    if !(tol >= 1e-12) {
        return Err(param(format!("tolerance {tol:e} must be at least 1e-12")));
    }
    let kink = delta_kink();
    let mut r = integrate(delta_integrand_u, &[0.0, kink, FRAC_PI_2], tol, 2_000)?;
    r.breakpoints = vec![(1.0 + kink.cos()) / 2.0];
    Ok(r)
}

fn cached_delta() -> f64 {
    static DELTA: OnceLock<f64> = OnceLock::new();
    *DELTA.get_or_init(|| {
        delta_integral(1e-8)
            .expect("δ quadrature converges at 1e-8")
            .value
    })
}

/// Both ends of the chain `E|f − Ef| ≤ (π/2 − δ) E|∇f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBound {
    pub lhs: f64,
    pub rhs: f64,
    pub delta: f64,
    pub holds: bool,
}

pub fn chain_bound(f: &CubeFunction) -> ChainBound {
    let delta = cached_delta();
    let lhs = mean_abs_deviation(f);
    let rhs = (FRAC_PI_2 - delta) * gradient_modulus(f).expectation();
    ChainBound {
        lhs,
        rhs,
        delta,
        holds: lhs <= rhs,
    }
}

/// `N(s) = ⌊1/(1 − (1−s)²)⌋`
pub fn floor_count(s: f64) -> u64 {
    (1.0 / (s * (2.0 - s))).floor() as u64
}

/// `s ∈ (0, 1/2]` where `1/(s(2−s))` crosses the integer `k ≥ 2`.
pub fn floor_breakpoint(k: u64) -> f64 {
    let r = 1.0 / k as f64;
    // 1 − √(1 − r), written without cancellation
    r / (1.0 + (1.0 - r).sqrt())
}

/// How the radical is grouped in the sup formula for indicator
/// coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadicalGrouping {
    /// `2√(N s (1−s)) (1−s)^{N−1}`: agrees with the exact binomial supremum
    Binomial,
    /// `2√(N s) (1−s)^{N−1}`: the literal reading, which can exceed 1
    Literal,
}

fn remark_piece(k: u64, s: f64, grouping: RadicalGrouping) -> f64 {
    let n = k as f64;
    let radicand = match grouping {
        RadicalGrouping::Binomial => n * s * (1.0 - s),
        RadicalGrouping::Literal => n * s,
    };
    2.0 * radicand.sqrt() * ((n - 1.0) * (-s).ln_1p()).exp()
}

/// Limit of the remark integrand as `p → 1`: `N(s)·s → 1/2`, so both
/// groupings tend to `√2·e^{−1/2}`.
const REMARK_TAIL_LIMIT: f64 = 0.857_763_884_960_706_8;
/// `|g(s) − limit| ≤ REMARK_TAIL_SLOPE · s` near `s = 0`.
const REMARK_TAIL_SLOPE: f64 = 1.0;

/// `π/2 − ∫_{1/2}^{1} R(1−p) dp/√(p(1−p))` with `R` the indicator-coefficient
/// supremum. The integrand is smooth between consecutive jumps of `N`, which
/// accumulate at `p = 1`; pieces are integrated separately and the remainder
/// next to `p = 1` is replaced by its limit with a tail bound.
pub fn remark_integral_with(tol: f64, grouping: RadicalGrouping) -> Result<QuadratureResult> {
    if !(tol >= 1e-10) {
        return Err(param(format!("tolerance {tol:e} must be at least 1e-10")));
    }
    // Tail on u ∈ [0, u_K] costs at most SLOPE·s_K·u_K ≈ 2·s_K^{3/2}.
    let s_tail = (0.125 * tol).powf(2.0 / 3.0);
    let k_max = ((1.0 / (2.0 * s_tail)).ceil() as u64).max(2);
    let to_u = |s: f64| 2.0 * s.sqrt().asin();

    // Pieces with N = k live on s ∈ (s_{k+1}, s_k], with s_1 := 1/2.
    let piece_tol = 0.5 * tol / k_max as f64;
    let mut values = Vec::with_capacity(k_max as usize);
    let mut errors = Vec::with_capacity(k_max as usize);
    let mut subdivisions = 0;
    let mut upper = 0.5;
    for k in 1..=k_max {
        let lower = floor_breakpoint(k + 1);
        let r = integrate(
            |u: f64| {
                let half = (0.5 * u).sin();
                remark_piece(k, half * half, grouping)
            },
            &[to_u(lower), to_u(upper)],
            piece_tol,
            64,
        )?;
        values.push(r.value);
        errors.push(r.est_error);
        subdivisions += r.subdivisions;
        upper = lower;
    }
    let u_tail = to_u(upper);
    values.push(REMARK_TAIL_LIMIT * u_tail);
    errors.push(REMARK_TAIL_SLOPE * upper * u_tail);

    let integral = crate::numeric::pairwise_sum(&values);
    let est_error = crate::numeric::pairwise_sum(&errors);
    let mut breakpoints: Vec<f64> = (2..=k_max + 1).map(|k| 1.0 - floor_breakpoint(k)).collect();
    breakpoints.sort_by(f64::total_cmp);
    Ok(QuadratureResult {
        value: FRAC_PI_2 - integral,
        est_error,
        subdivisions,
        breakpoints,
    })
}

/// [`remark_integral_with`] using the grouping that matches the binomial
/// supremum.
pub fn remark_integral(tol: f64) -> Result<QuadratureResult> {
    remark_integral_with(tol, RadicalGrouping::Binomial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn dictator(n: usize, j: usize) -> CubeFunction {
        CubeFunction::from_fn(n, |x| x[j]).unwrap()
    }

    fn majority3() -> CubeFunction {
        CubeFunction::from_fn(3, |x| (x[0] + x[1] + x[2]).signum()).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(CubeFunction::new(0, vec![1.0]).is_err());
        assert!(CubeFunction::new(2, vec![1.0; 3]).is_err());
        assert!(CubeFunction::new(1, vec![1.0, f64::NAN]).is_err());
        assert!(CubeFunction::new(21, vec![]).is_err());
        let f = CubeFunction::new(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.expectation(), 2.5);
    }

    #[test]
    fn dictator_differences() {
        let f = dictator(3, 1);
        assert_eq!(partial_difference(&f, 1).unwrap(), f);
        for j in [0, 2] {
            assert!(partial_difference(&f, j).unwrap().values().iter().all(|&v| v == 0.0));
        }
        assert!(partial_difference(&f, 3).is_err());
        assert!(gradient_modulus(&f).values().iter().all(|&v| v == 1.0));
        assert_eq!(poincare_ratio(&f).unwrap(), 1.0);
    }

    #[test]
    fn constant_function() {
        let f = CubeFunction::new(3, vec![2.5; 8]).unwrap();
        for j in 0..3 {
            assert!(partial_difference(&f, j).unwrap().values().iter().all(|&v| v == 0.0));
        }
        assert!(matches!(poincare_ratio(&f), Err(Error::DegenerateInput(_))));
        let c = chain_bound(&f);
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));
        assert!(c.holds);
    }

    #[test]
    fn product_of_two_coordinates() {
        let f = CubeFunction::from_fn(2, |x| x[0] * x[1]).unwrap();
        assert_eq!(partial_difference(&f, 0).unwrap(), f);
    }

    #[test]
    fn majority_of_three() {
        let f = majority3();
        let g = gradient_modulus(&f);
        let mut zeros = 0;
        for (idx, &v) in g.values().iter().enumerate() {
            let unanimous = idx == 0 || idx == 7;
            if unanimous {
                assert_eq!(v, 0.0);
                zeros += 1;
            } else {
                assert!((v - SQRT_2).abs() < 1e-15);
            }
        }
        assert_eq!(zeros, 2);
        let r = poincare_ratio(&f).unwrap();
        assert!((r - 4.0 / (3.0 * SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn linear_function_has_constant_gradient() {
        let a = [0.3, -1.2, 0.5, 2.0];
        let f = CubeFunction::from_fn(4, |x| x.iter().zip(&a).map(|(x, a)| x * a).sum()).unwrap();
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(gradient_modulus(&f).values().iter().all(|&v| (v - norm).abs() < 1e-14));
    }

    #[test]
    fn binary_and_json_formats() {
        let f = majority3();
        assert_eq!(CubeFunction::from_bytes(&f.to_bytes()).unwrap(), f);
        assert!(CubeFunction::from_bytes(&f.to_bytes()[..20]).is_err());
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.starts_with(r#"{"n":3,"values":["#));
        assert_eq!(serde_json::from_str::<CubeFunction>(&s).unwrap(), f);
        assert!(serde_json::from_str::<CubeFunction>(r#"{"n":2,"values":[1,2]}"#).is_err());
    }

    #[test]
    fn delta_value_and_window() {
        let r = delta_integral(1e-8).unwrap();
        assert!((0.000125..=0.000135).contains(&r.value), "{r:?}");
        assert!(r.est_error <= 1e-8);
        let half = delta_integral(5e-9).unwrap();
        assert!((half.value - r.value).abs() < 1e-9);
        assert!(delta_integral(1e-13).is_err());
    }

    #[test]
    fn delta_integrand_sign_and_endpoint() {
        assert!(delta_integrand_u(FRAC_PI_2) < 1e-60);
        for i in 0..=1000 {
            assert!(delta_integrand_u(FRAC_PI_2 * i as f64 / 1000.0) >= 0.0);
        }
    }

    #[test]
    fn delta_matches_midpoint_rule() {
        let m = 1_000_000;
        let h = FRAC_PI_2 / m as f64;
        let vals: Vec<f64> = (0..m).map(|i| delta_integrand_u((i as f64 + 0.5) * h)).collect();
        let mid = crate::numeric::pairwise_sum(&vals) * h;
        let r = delta_integral(1e-12).unwrap();
        assert!((mid - r.value).abs() < 1e-9, "{mid} vs {}", r.value);
    }

    #[test]
    fn remark_value_and_breakpoints() {
        let r = remark_integral(1e-6).unwrap();
        assert!((0.145..=0.153).contains(&r.value), "{}", r.value);
        assert!(r.est_error <= 1e-6);
        let first = 1.0 - (1.0 - 1.0 / SQRT_2);
        assert!((r.breakpoints[0] - first).abs() < 1e-15);
        assert!(r.breakpoints.windows(2).all(|w| w[0] < w[1]));
        assert!((GAUSSIAN_DELTA - 0.31748).abs() < 1e-5);
    }

    #[test]
    fn remark_literal_grouping_differs() {
        let lit = remark_integral_with(1e-6, RadicalGrouping::Literal).unwrap();
        assert!(lit.value < 0.0, "{}", lit.value);
    }

    #[test]
    fn remark_stable_under_tolerance_halving() {
        let a = remark_integral(1e-7).unwrap();
        let b = remark_integral(5e-8).unwrap();
        assert!((a.value - b.value).abs() < 1e-7);
    }

    #[test]
    fn remark_tail_bound_holds() {
        for i in 1..200_000 {
            let s = 10f64.powf(-1.5 - 5.5 * i as f64 / 200_000.0);
            let k = floor_count(s);
            for grouping in [RadicalGrouping::Binomial, RadicalGrouping::Literal] {
                let g = remark_piece(k, s, grouping);
                assert!((g - REMARK_TAIL_LIMIT).abs() <= REMARK_TAIL_SLOPE * s, "s={s}");
            }
        }
        assert!((REMARK_TAIL_LIMIT - SQRT_2 * (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn floor_breakpoints_are_jumps() {
        for k in 2..50u64 {
            let s = floor_breakpoint(k);
            assert_eq!(floor_count(s * (1.0 + 1e-9)), k - 1);
            assert_eq!(floor_count(s * (1.0 - 1e-9)), k);
        }
    }

    #[test]
    fn exhaustive_boolean_n3() {
        for mask in 0..256u32 {
            let f = CubeFunction::new(3, (0..8).map(|i| (mask >> i & 1) as f64).collect()).unwrap();
            let c = chain_bound(&f);
            assert!(c.holds, "mask {mask}: {c:?}");
            if let Ok(r) = poincare_ratio(&f) {
                assert!(r <= FRAC_PI_2 - DELTA_CLAIMED);
            }
        }
    }

    fn permute(f: &CubeFunction, perm: &[usize]) -> CubeFunction {
        let n = f.n();
        let values = (0..1usize << n)
            .map(|idx| {
                let src = (0..n).fold(0, |acc, j| acc | ((idx >> perm[j] & 1) << j));
                f.values()[src]
            })
            .collect();
        CubeFunction::new(n, values).unwrap()
    }

    proptest! {
        #[test]
        fn differences_sum_to_zero(seed in any::<u64>(), n in 1usize..8) {
            let f = CubeFunction::random(&mut stream_rng(seed, 0), n).unwrap();
            for j in 0..n {
                let d = partial_difference(&f, j).unwrap();
                let scale = f.values().iter().map(|v| v.abs()).sum::<f64>().max(1.0);
                prop_assert!(d.values().iter().sum::<f64>().abs() <= 1e-12 * scale);
                prop_assert_eq!(partial_difference(&d, j).unwrap(), d.clone());
            }
        }

        #[test]
        fn ratio_invariances(seed in any::<u64>(), n in 1usize..8, shift in -5.0f64..5.0, lambda in 0.1f64..10.0) {
            let mut rng = stream_rng(seed, 1);
            let f = CubeFunction::random(&mut rng, n).unwrap();
            let r = poincare_ratio(&f).unwrap();
            let moved = CubeFunction::new(n, f.values().iter().map(|v| -lambda * v + shift).collect()).unwrap();
            prop_assert!((poincare_ratio(&moved).unwrap() - r).abs() <= 1e-10 * r);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.reverse();
            prop_assert!((poincare_ratio(&permute(&f, &perm)).unwrap() - r).abs() <= 1e-12 * r);
            let flip = rng.random_range(0..n);
            let flipped = CubeFunction::new(n, (0..1usize << n).map(|i| f.values()[i ^ (1 << flip)]).collect()).unwrap();
            prop_assert!((poincare_ratio(&flipped).unwrap() - r).abs() <= 1e-12 * r);
            prop_assert!(r <= FRAC_PI_2 - DELTA_CLAIMED);
        }
    }
}
