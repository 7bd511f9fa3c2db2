//! Sums `Σ aⱼξⱼ` of i.i.d. biased Bernoulli variables with mean zero and
//! unit variance: exact laws by convolution, the moment estimates behind the
//! `C(4,6)` bound, and the closed-form upper bounds on `E|Σ aⱼξⱼ|`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::hypercube::floor_count;
use crate::numeric::pairwise_sum;
use crate::rv::{merge_atoms, Atom, FiniteRv};

/// Largest number of summands for exact convolution.
pub const MAX_EXACT_TERMS: usize = 24;
/// Largest number of signs enumerated by [`khinchin6_check`].
pub const MAX_KHINCHIN_TERMS: usize = 20;
/// Allowed deviation of `Σ aⱼ²` from 1.
pub const COEFF_NORM_TOL: f64 = 1e-12;
/// Sharp Khinchin constant for the sixth moment.
pub const KHINCHIN6: f64 = 15.0;

fn check_open_bias(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(param(format!("bias p = {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_closed_bias(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(param(format!("bias p = {p} must lie in [0, 1]")));
    }
    Ok(())
}

/// Finitely supported law on the real line, signs kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedDistribution {
    atoms: Vec<Atom>,
}

impl SignedDistribution {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E Xᵏ`
    pub fn raw_moment(&self, k: i32) -> f64 {
        let terms: Vec<f64> = self.atoms.iter().map(|a| a.prob * a.value.powi(k)).collect();
        pairwise_sum(&terms)
    }

    /// Law of `|X|`.
    pub fn abs(&self) -> Result<FiniteRv> {
        FiniteRv::from_atoms(self.atoms.clone())
    }
}

/// `ξ = √((1−p)/p)` with probability `p`, `−√(p/(1−p))` otherwise.
pub fn biased_xi(p: f64) -> Result<SignedDistribution> {
    check_open_bias(p)?;
    let q = 1.0 - p;
    Ok(SignedDistribution {
        atoms: vec![
            Atom {
                value: -(p / q).sqrt(),
                prob: q,
            },
            Atom {
                value: (q / p).sqrt(),
                prob: p,
            },
        ],
    })
}

/// `E ξ⁴ = 1/(p(1−p)) − 3`
pub fn xi_fourth_moment(p: f64) -> Result<f64> {
    check_open_bias(p)?;
    Ok(1.0 / (p * (1.0 - p)) - 3.0)
}

/// Bias and unit-norm coefficient vector of `Σ aⱼξⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BiasedSumInput", into = "BiasedSumInput")]
pub struct BiasedSumSpec {
    bias: f64,
    coeffs: Vec<f64>,
}

/// Wire form `{bias, coeffs, normalize}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BiasedSumInput {
    bias: f64,
    coeffs: Vec<f64>,
    #[serde(default)]
    normalize: bool,
}

impl TryFrom<BiasedSumInput> for BiasedSumSpec {
    type Error = Error;

    fn try_from(i: BiasedSumInput) -> Result<Self> {
        if i.normalize {
            BiasedSumSpec::normalized(i.bias, i.coeffs)
        } else {
            BiasedSumSpec::new(i.bias, i.coeffs)
        }
    }
}

impl From<BiasedSumSpec> for BiasedSumInput {
    fn from(s: BiasedSumSpec) -> Self {
        BiasedSumInput {
            bias: s.bias,
            coeffs: s.coeffs,
            normalize: false,
        }
    }
}

impl BiasedSumSpec {
    /// Coefficients must already satisfy `Σ aⱼ² = 1`.
    pub fn new(bias: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_open_bias(bias)?;
        if coeffs.is_empty() {
            return Err(param("coefficient vector is empty"));
        }
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(param("coefficients must be finite"));
        }
        let sq: Vec<f64> = coeffs.iter().map(|a| a * a).collect();
        let norm2 = pairwise_sum(&sq);
        if (norm2 - 1.0).abs() > COEFF_NORM_TOL {
            return Err(Error::Normalization { norm: norm2.sqrt() });
        }
        Ok(Self { bias, coeffs })
    }

    /// Rescale the coefficients to unit Euclidean norm first.
    pub fn normalized(bias: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|a| !a.is_finite()) {
            return Err(param("coefficients must be finite"));
        }
        let norm = pairwise_sum(&coeffs.iter().map(|a| a * a).collect::<Vec<_>>()).sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateInput("all coefficients are zero".into()));
        }
        Self::new(bias, coeffs.into_iter().map(|a| a / norm).collect())
    }

    /// Random spec with bias uniform in `bias_range` and `1..=max_terms`
    /// coefficients drawn from one of several shapes.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, bias_range: (f64, f64), max_terms: usize) -> Self {
        let bias = rng.random_range(bias_range.0..bias_range.1);
        let n = rng.random_range(1..=max_terms.max(1));
        let coeffs: Vec<f64> = match rng.random_range(0..4u8) {
            0 => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            1 => vec![1.0; n],
            2 => (0..n)
                .map(|j| if j == 0 { 1.0 } else { rng.random_range(-0.3..0.3) })
                .collect(),
            _ => (0..n)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        rng.random_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        };
        Self::normalized(bias, coeffs).unwrap_or_else(|_| Self {
            bias,
            coeffs: vec![1.0],
        })
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Exact law of `Σ aⱼξⱼ` by repeated two-point convolution.
pub fn exact_signed_sum(spec: &BiasedSumSpec) -> Result<SignedDistribution> {
    let n = spec.coeffs.len();
    if n > MAX_EXACT_TERMS {
        return Err(Error::Capacity(format!(
            "{n} summands exceed the exact limit of {MAX_EXACT_TERMS}; use the moment formulas"
        )));
    }
    let xi = biased_xi(spec.bias)?;
    let mut atoms = vec![Atom {
        value: 0.0,
        prob: 1.0,
    }];
    for &a in &spec.coeffs {
        let next = atoms.iter().flat_map(|s| {
            xi.atoms.iter().map(move |x| Atom {
                value: s.value + a * x.value,
                prob: s.prob * x.prob,
            })
        });
        atoms = merge_atoms(next.collect::<Vec<_>>());
    }
    Ok(SignedDistribution { atoms })
}

/// Exact law of `|Σ aⱼξⱼ|`.
pub fn exact_sum_distribution(spec: &BiasedSumSpec) -> Result<FiniteRv> {
    exact_signed_sum(spec)?.abs()
}

/// `E(Σ aⱼξⱼ)⁴ = 3 + (Eξ⁴ − 3) Σ aⱼ⁴`
pub fn fourth_moment(spec: &BiasedSumSpec) -> f64 {
    let a4: Vec<f64> = spec.coeffs.iter().map(|a| a.powi(4)).collect();
    let p = spec.bias;
    3.0 + (1.0 / (p * (1.0 - p)) - 6.0) * pairwise_sum(&a4)
}

/// `min{3, Eξ⁴} = 1 + min{2, (2p−1)²/(p(1−p))}`
pub fn fourth_moment_lower_bound(p: f64) -> Result<f64> {
    check_open_bias(p)?;
    let t = 2.0 * p - 1.0;
    Ok(1.0 + f64::min(2.0, t * t / (p * (1.0 - p))))
}

/// `15/(p(1−p))³`
pub fn sixth_moment_bound(p: f64) -> Result<f64> {
    check_open_bias(p)?;
    Ok(KHINCHIN6 / (p * (1.0 - p)).powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhinchinCheck {
    /// `E|Σ εᵢbᵢ|⁶` averaged over all sign vectors
    pub lhs: f64,
    /// `15 (Σ bᵢ²)³`
    pub rhs: f64,
}

impl KhinchinCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

pub fn khinchin6_check(b: &[f64]) -> Result<KhinchinCheck> {
    if b.len() > MAX_KHINCHIN_TERMS {
        return Err(Error::Capacity(format!(
            "{} signs exceed the enumeration limit of {MAX_KHINCHIN_TERMS}",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(param("coefficients must be finite"));
    }
    // ε₁ = +1 suffices by symmetry of |·|⁶.
    let mut sums = vec![0.0f64];
    for (j, &bj) in b.iter().enumerate() {
        if j == 0 {
            sums[0] = bj;
            continue;
        }
        let minus: Vec<f64> = sums.iter().map(|s| s - bj).collect();
        for s in sums.iter_mut() {
            *s += bj;
        }
        sums.extend(minus);
    }
    let sixth: Vec<f64> = sums.iter().map(|s| s.powi(6)).collect();
    let sq: Vec<f64> = b.iter().map(|v| v * v).collect();
    Ok(KhinchinCheck {
        lhs: pairwise_sum(&sixth) / sums.len() as f64,
        rhs: KHINCHIN6 * pairwise_sum(&sq).powi(3),
    })
}

/// `min{4P³, t⁴P}/(45 − 3P³)` with `t = 2p − 1`, `P = p(1−p)`.
pub(crate) fn dax1_deficit(t: f64, pq: f64) -> f64 {
    let pq3 = pq * pq * pq;
    f64::min(4.0 * pq3, t.powi(4) * pq) / (45.0 - 3.0 * pq3)
}

fn min_term(p: f64) -> f64 {
    let pq = p * (1.0 - p);
    f64::min(4.0 * pq.powi(3), (2.0 * p - 1.0).powi(4) * pq)
}

/// `1 − min{4p³(1−p)³, (2p−1)⁴p(1−p)}/(45 − 3(p(1−p))³)`
pub fn dax1_rhs(p: f64) -> Result<f64> {
    check_closed_bias(p)?;
    Ok(1.0 - dax1_deficit(2.0 * p - 1.0, p * (1.0 - p)))
}

/// `√(1 − min{4p³(1−p)³, (2p−1)⁴p(1−p)}/480)`
pub fn ramon1_rhs(p: f64) -> Result<f64> {
    check_closed_bias(p)?;
    Ok((1.0 - min_term(p) / 480.0).sqrt())
}

/// The indicator-coefficient supremum formula at bias `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoneReport {
    pub p: f64,
    /// `min(p, 1−p)`
    pub p_star: f64,
    /// `N(p*) = ⌊1/(1 − (1−p*)²)⌋`
    pub n: u64,
    /// `2√(N p*) (1−p*)^{N−1}`, read literally
    pub verbatim: f64,
    /// `2√(N p*(1−p*)) (1−p*)^{N−1}`, the binomial mean absolute deviation
    pub binomial: f64,
    /// the literal reading exceeds 1, impossible for an L¹/L² ratio
    pub exceeds_unit: bool,
}

pub fn stone_report(p: f64) -> Result<StoneReport> {
    check_open_bias(p)?;
    let s = p.min(1.0 - p);
    let n = floor_count(s);
    let tail = ((n as f64 - 1.0) * (-s).ln_1p()).exp();
    let verbatim = 2.0 * (n as f64 * s).sqrt() * tail;
    Ok(StoneReport {
        p,
        p_star: s,
        n,
        verbatim,
        binomial: 2.0 * (n as f64 * s * (1.0 - s)).sqrt() * tail,
        exceeds_unit: verbatim > 1.0,
    })
}

/// The displayed right-hand side, read literally.
pub fn stone_rhs(p: f64) -> Result<f64> {
    Ok(stone_report(p)?.verbatim)
}

/// `E|Σ ξⱼ|/√k` for `k` equal coefficients, i.e. `E|M − kp|/√(kp(1−p))`
/// with `M ~ Bin(k, p)`.
pub fn indicator_mean_abs(p: f64, k: u64) -> Result<f64> {
    check_open_bias(p)?;
    if k == 0 {
        return Err(param("need at least one coefficient"));
    }
    let kf = k as f64;
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_binom = 0.0;
    let mut terms = Vec::with_capacity(k as usize + 1);
    for m in 0..=k {
        if m > 0 {
            log_binom += ((k - m + 1) as f64).ln() - (m as f64).ln();
        }
        let mf = m as f64;
        let pmf = (log_binom + mf * lp + (kf - mf) * lq).exp();
        terms.push(pmf * (mf - kf * p).abs());
    }
    Ok(pairwise_sum(&terms) / (kf * p * (1.0 - p)).sqrt())
}

/// Largest [`indicator_mean_abs`] over `1 ≤ k ≤ k_max`, with its `k`.
pub fn indicator_sup(p: f64, k_max: u64) -> Result<(u64, f64)> {
    let mut best = (0, f64::NEG_INFINITY);
    for k in 1..=k_max.max(1) {
        let v = indicator_mean_abs(p, k)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best)
}
