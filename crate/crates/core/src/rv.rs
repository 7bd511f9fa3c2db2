//! Finite-support nonnegative random variables and the refined
//! Cauchy–Schwarz gap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, param, Error, Result};
use crate::numeric::pairwise_sum;

/// Atoms whose values differ by at most this fraction of the largest value
/// are merged.
pub const MERGE_REL_TOL: f64 = 1e-12;
/// Allowed deviation of the total probability from 1.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Allowed deviation of ‖X‖₂ from 1 in [`main_inequality_rhs`].
pub const NORMALIZATION_TOL: f64 = 1e-10;
/// Below this, ‖X‖_q^q − 1 is treated as zero (X constant in modulus).
pub const DEGENERATE_MOMENT_GAP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Law of `|X|` for a random variable with finitely many values.
///
/// Atoms are kept sorted by value with near-duplicates merged, so that
/// expectations are exact sums over the discrete measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct FiniteRv {
    atoms: Vec<Atom>,
}

impl FiniteRv {
    /// Build from `(value, probability)` pairs. Values are replaced by their
    /// absolute values; probabilities must lie in `(0, 1]` and sum to 1.
    pub fn new<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let atoms: Vec<Atom> = pairs
            .into_iter()
            .map(|(value, prob)| Atom { value, prob })
            .collect();
        Self::from_atoms(atoms)
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::DegenerateInput("random variable has no atoms".into()));
        }
        for a in &atoms {
            if !a.value.is_finite() {
                return Err(param(format!("atom value {} is not finite", a.value)));
            }
            if !(a.prob > 0.0 && a.prob <= 1.0) {
                return Err(param(format!("atom probability {} not in (0, 1]", a.prob)));
            }
        }
        let total = pairwise_sum(&atoms.iter().map(|a| a.prob).collect::<Vec<_>>());
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(param(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            atoms: merge_atoms(atoms.into_iter().map(|a| Atom {
                value: a.value.abs(),
                prob: a.prob,
            })),
        })
    }

    /// Build from values and nonnegative weights; the weights are rescaled
    /// to probabilities and zero-weight atoms dropped.
    pub fn from_weights(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(param("values and weights differ in length"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(param("weights must be finite and nonnegative"));
        }
        let total = pairwise_sum(weights);
        if total <= 0.0 {
            return Err(Error::DegenerateInput("all weights are zero".into()));
        }
        let pairs = values
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&v, &w)| (v, w / total));
        let atoms: Vec<Atom> = pairs.map(|(value, prob)| Atom { value, prob }).collect();
        // Renormalisation above is exact up to rounding; skip the strict sum check.
        if atoms.iter().any(|a| !a.value.is_finite()) {
            return Err(param("atom values must be finite"));
        }
        Ok(Self {
            atoms: merge_atoms(atoms.into_iter().map(|a| Atom {
                value: a.value.abs(),
                prob: a.prob,
            })),
        })
    }

    /// Constant variable `X ≡ value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new([(value, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `E X^p` for `p > 0`.
    pub fn moment(&self, p: f64) -> f64 {
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.prob * a.value.powf(p))
            .collect();
        pairwise_sum(&terms)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    /// `λ·X` for `λ ≥ 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(param(format!("scale {lambda} must be finite and nonnegative")));
        }
        Ok(Self {
            atoms: merge_atoms(self.atoms.iter().map(|a| Atom {
                value: a.value * lambda,
                prob: a.prob,
            })),
        })
    }

    /// A random law with between `min_atoms` and `max_atoms` atoms, mixing
    /// bulk, heavy-tailed and near-constant shapes.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, min_atoms: usize, max_atoms: usize) -> Self {
        assert!(min_atoms >= 1 && max_atoms >= min_atoms);
        let k = rng.random_range(min_atoms..=max_atoms);
        let shape = rng.random_range(0..4u8);
        let mut values = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for _ in 0..k {
            let v = match shape {
                0 => rng.random::<f64>(),
                1 => 10f64.powf(rng.random_range(-2.0..2.0)),
                2 => 1.0 + 1e-3 * rng.random::<f64>(),
                _ => {
                    if rng.random_bool(0.2) {
                        0.0
                    } else {
                        rng.random_range(0.0..5.0)
                    }
                }
            };
            let w = match shape {
                1 => 10f64.powf(rng.random_range(-4.0..0.0)),
                _ => rng.random_range(0.01..1.0),
            };
            values.push(v);
            weights.push(w);
        }
        if values.iter().all(|&v| v == 0.0) {
            values[0] = 1.0;
        }
        Self::from_weights(&values, &weights).expect("generated weights are valid")
    }
}

impl TryFrom<Vec<Atom>> for FiniteRv {
    type Error = Error;

    fn try_from(atoms: Vec<Atom>) -> Result<Self> {
        Self::from_atoms(atoms)
    }
}

impl From<FiniteRv> for Vec<Atom> {
    fn from(rv: FiniteRv) -> Self {
        rv.atoms
    }
}

/// Sort by value and merge atoms closer than [`MERGE_REL_TOL`] times the
/// largest value. The merged atom keeps the smallest value of its group.
pub(crate) fn merge_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = atoms.into_iter().collect();
    atoms.sort_by(|x, y| x.value.total_cmp(&y.value));
    let scale = atoms
        .iter()
        .map(|a| a.value.abs())
        .fold(0.0f64, f64::max);
    let tol = MERGE_REL_TOL * scale;
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    let mut group_start = f64::NAN;
    for a in atoms {
        match out.last_mut() {
            Some(last) if a.value - group_start <= tol => last.prob += a.prob,
            _ => {
                group_start = a.value;
                out.push(a);
            }
        }
    }
    out
}

/// `‖X‖_p = (E|X|^p)^{1/p}`.
pub fn lp_norm(rv: &FiniteRv, p: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(param(format!("norm exponent p = {p} must be finite and positive")));
    }
    Ok(rv.moment(p).powf(1.0 / p))
}

/// Rescale so that ‖X‖₂ = 1.
pub fn normalize_l2(rv: &FiniteRv) -> Result<FiniteRv> {
    let norm = lp_norm(rv, 2.0)?;
    if norm == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot normalize an identically zero variable".into(),
        ));
    }
    rv.scaled(1.0 / norm)
}

/// Two-valued variable with `P{X=a} = r`, `P{X=b} = 1−r`, `0 < a < 1 < b`,
/// where `r` is forced by ‖X‖₂ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointRv {
    pub a: f64,
    pub b: f64,
    /// `P{X = a} = (b²−1)/(b²−a²)`
    pub r: f64,
    /// `P{X = b} = (1−a²)/(b²−a²)`, computed directly rather than as `1 − r`.
    pub r_complement: f64,
}

impl TwoPointRv {
    /// `E X = (1+ab)/(a+b)`
    pub fn mean(&self) -> f64 {
        (1.0 + self.a * self.b) / (self.a + self.b)
    }

    /// `1 − E X = (1−a)(b−1)/(a+b)`, free of cancellation near `a = 1`.
    pub fn mean_deficit(&self) -> f64 {
        (1.0 - self.a) * (self.b - 1.0) / (self.a + self.b)
    }

    pub fn second_moment(&self) -> f64 {
        self.a * self.a * self.r + self.b * self.b * self.r_complement
    }

    pub fn to_finite_rv(&self) -> FiniteRv {
        FiniteRv {
            atoms: vec![
                Atom {
                    value: self.a,
                    prob: self.r,
                },
                Atom {
                    value: self.b,
                    prob: self.r_complement,
                },
            ],
        }
    }
}

pub fn two_point(a: f64, b: f64) -> Result<TwoPointRv> {
    if !(a > 0.0 && a < 1.0) {
        return Err(param(format!("two-point value a = {a} must lie in (0, 1)")));
    }
    if !(b > 1.0 && b.is_finite()) {
        return Err(param(format!("two-point value b = {b} must lie in (1, ∞)")));
    }
    let denom = (b - a) * (b + a);
    Ok(TwoPointRv {
        a,
        b,
        r: (b - 1.0) * (b + 1.0) / denom,
        r_complement: (1.0 - a) * (1.0 + a) / denom,
    })
}

/// Both sides of the refined inequality for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub p: f64,
    pub q: f64,
    pub constant: f64,
    /// ‖X‖₁
    pub l1: f64,
    /// E X^p
    pub lp_p: f64,
    /// E X^q
    pub lq_q: f64,
    pub rhs: f64,
    /// `rhs − l1`; nonnegative when the inequality holds.
    pub gap: f64,
    /// ‖X‖_q^q − 1 vanished and `rhs` was set to 1.
    pub degenerate: bool,
}

impl GapReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.gap >= -slack
    }
}

pub(crate) fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p.is_finite() && q.is_finite() && p > 2.0 && q > p) {
        return Err(param(format!("need 2 < p < q < ∞, got p = {p}, q = {q}")));
    }
    Ok(())
}

/// The moment quotient `(m_p − 1)^θ / (m_q − 1)^{θ−1}` with `θ = (q−2)/(q−p)`,
/// evaluated in log space. `None` when `m_q − 1` is below the degeneracy
/// threshold.
pub(crate) fn moment_quotient(lp_p: f64, lq_q: f64, p: f64, q: f64) -> Option<f64> {
    let theta = (q - 2.0) / (q - p);
    let dq = lq_q - 1.0;
    if dq < DEGENERATE_MOMENT_GAP {
        return None;
    }
    // Lyapunov gives m_p ≥ 1; clamp rounding below it.
    let dp = (lp_p - 1.0).max(0.0);
    if dp == 0.0 {
        return Some(0.0);
    }
    Some((theta * dp.ln() - (theta - 1.0) * dq.ln()).exp())
}

/// Right-hand side `1 − C (‖X‖_p^p − 1)^θ / (‖X‖_q^q − 1)^{θ−1}` and the gap
/// to ‖X‖₁ for a variable already normalised to ‖X‖₂ = 1.
pub fn main_inequality_rhs(rv: &FiniteRv, p: f64, q: f64, constant: f64) -> Result<GapReport> {
    check_exponents(p, q)?;
    if !(constant.is_finite() && constant > 0.0) {
        return Err(param(format!("constant C = {constant} must be positive")));
    }
    let l2 = rv.moment(2.0).sqrt();
    if (l2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization { norm: l2 });
    }
    let l1 = rv.mean();
    let lp_p = rv.moment(p);
    let lq_q = rv.moment(q);
    let (rhs, degenerate) = match moment_quotient(lp_p, lq_q, p, q) {
        Some(m) => (1.0 - constant * m, false),
        None => (1.0, true),
    };
    Ok(GapReport {
        p,
        q,
        constant,
        l1,
        lp_p,
        lq_q,
        rhs,
        gap: rhs - l1,
        degenerate,
    })
}

/// Ratio `(1 − ‖X‖₁) / [(‖X‖_p^p − 1)^θ / (‖X‖_q^q − 1)^{θ−1}]`: the largest
/// constant for which this particular variable satisfies the inequality.
pub fn admissible_constant(rv: &FiniteRv, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    let l2 = rv.moment(2.0).sqrt();
    if (l2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization { norm: l2 });
    }
    match moment_quotient(rv.moment(p), rv.moment(q), p, q) {
        Some(m) if m > 0.0 => Ok((1.0 - rv.mean()) / m),
        _ => Err(domain("moment quotient vanishes; variable is constant in modulus")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn lp_norm_examples() {
        let c = FiniteRv::constant(1.0).unwrap();
        assert_eq!(lp_norm(&c, 7.0).unwrap(), 1.0);
        let x = FiniteRv::new([(0.5, 0.8), (2.0, 0.2)]).unwrap();
        assert!((lp_norm(&x, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((lp_norm(&x, 1.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn lp_norm_rejects_bad_exponent() {
        let x = FiniteRv::constant(1.0).unwrap();
        for p in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(lp_norm(&x, p), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn construction_takes_absolute_values_and_merges() {
        let x = FiniteRv::new([(-2.0, 0.25), (2.0, 0.25), (1.0, 0.5)]).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.atoms()[1], Atom { value: 2.0, prob: 0.5 });
        let y = FiniteRv::new([(1.0, 0.5), (1.0 + 1e-14, 0.5)]).unwrap();
        assert_eq!(y.len(), 1);
    }

    #[test]
    fn construction_rejects_bad_probabilities() {
        assert!(FiniteRv::new([(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(FiniteRv::new([(1.0, 0.0), (2.0, 1.0)]).is_err());
        assert!(FiniteRv::new([(1.0, 1.5)]).is_err());
        assert!(FiniteRv::new(Vec::<(f64, f64)>::new()).is_err());
        assert!(FiniteRv::new([(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn two_point_examples() {
        let t = two_point(0.5, 2.0).unwrap();
        assert!((t.r - 0.8).abs() < 1e-15);
        assert!((t.mean() - 0.8).abs() < 1e-15);
        assert!((t.second_moment() - 1.0).abs() < 1e-15);
        let near = two_point(1.0 - 1e-12, 3.0).unwrap();
        assert!((near.mean() - 1.0).abs() < 1e-11);
        assert!(two_point(1.0, 2.0).is_err());
        assert!(two_point(0.5, 1.0).is_err());
        assert!(two_point(0.0, 2.0).is_err());
    }

    #[test]
    fn two_point_identities_on_random_pairs() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..10_000 {
            let a: f64 = rng.random_range(1e-3..1.0 - 1e-3);
            let b: f64 = 1.0 / rng.random_range(1e-3..1.0 - 1e-3);
            let t = two_point(a, b).unwrap();
            let rv = t.to_finite_rv();
            assert!((rv.mean() - (1.0 + a * b) / (a + b)).abs() < 1e-12);
            assert!((rv.moment(2.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_examples() {
        let x = FiniteRv::constant(2.0).unwrap();
        assert_eq!(normalize_l2(&x).unwrap().atoms(), &[Atom { value: 1.0, prob: 1.0 }]);
        let y = FiniteRv::new([(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let ny = normalize_l2(&y).unwrap();
        let s5 = 5f64.sqrt();
        assert!((ny.atoms()[0].value - 1.0 / s5).abs() < 1e-15);
        assert!((ny.atoms()[1].value - 3.0 / s5).abs() < 1e-15);
        let twice = normalize_l2(&ny).unwrap();
        for (u, v) in twice.atoms().iter().zip(ny.atoms()) {
            assert!((u.value - v.value).abs() < 1e-12);
        }
        let zero = FiniteRv::constant(0.0).unwrap();
        assert!(matches!(normalize_l2(&zero), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn rhs_of_constant_variable_is_degenerate() {
        let x = FiniteRv::constant(1.0).unwrap();
        let g = main_inequality_rhs(&x, 4.0, 6.0, 0.7).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.rhs, 1.0);
        assert_eq!(g.gap, 0.0);
    }

    #[test]
    fn rhs_two_point_at_one_third() {
        let x = two_point(0.5, 2.0).unwrap().to_finite_rv();
        let g = main_inequality_rhs(&x, 4.0, 6.0, 1.0 / 3.0).unwrap();
        assert!(g.gap >= 0.0, "{g:?}");
        assert!((g.gap - (g.rhs - g.l1)).abs() == 0.0);
    }

    #[test]
    fn rhs_errors() {
        let x = FiniteRv::new([(0.5, 0.5), (1.5, 0.5)]).unwrap();
        assert!(matches!(
            main_inequality_rhs(&x, 4.0, 6.0, 0.3),
            Err(Error::Normalization { .. })
        ));
        let n = normalize_l2(&x).unwrap();
        assert!(matches!(main_inequality_rhs(&n, 2.0, 6.0, 0.3), Err(Error::Parameter(_))));
        assert!(matches!(main_inequality_rhs(&n, 5.0, 4.0, 0.3), Err(Error::Parameter(_))));
        assert!(matches!(main_inequality_rhs(&n, 4.0, 6.0, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn admissible_constant_matches_rhs() {
        let x = two_point(0.3, 2.5).unwrap().to_finite_rv();
        let c = admissible_constant(&x, 4.0, 6.0).unwrap();
        let g = main_inequality_rhs(&x, 4.0, 6.0, c).unwrap();
        assert!(g.gap.abs() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let x = FiniteRv::new([(0.5, 0.8), (2.0, 0.2)]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"[{"value":0.5,"prob":0.8},{"value":2.0,"prob":0.2}]"#);
        let back: FiniteRv = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<FiniteRv>(r#"[{"value":1,"prob":0.3}]"#).is_err());
    }

    proptest! {
        #[test]
        fn cauchy_schwarz_and_monotone_norms(seed in any::<u64>()) {
            let rv = FiniteRv::random(&mut stream_rng(seed, 0), 1, 8);
            let mut prev = 0.0;
            for p in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 9.0] {
                let n = lp_norm(&rv, p).unwrap();
                prop_assert!(n >= prev * (1.0 - 1e-12));
                prev = n;
            }
            prop_assert!(lp_norm(&rv, 1.0).unwrap() <= lp_norm(&rv, 2.0).unwrap() * (1.0 + 1e-15));
        }

        #[test]
        fn verdict_is_scale_invariant(seed in any::<u64>(), lambda in 1e-3f64..1e3) {
            let rv = FiniteRv::random(&mut stream_rng(seed, 1), 2, 8);
            let n1 = normalize_l2(&rv).unwrap();
            let n2 = normalize_l2(&rv.scaled(lambda).unwrap()).unwrap();
            prop_assert_eq!(n1.len(), n2.len());
            for (u, v) in n1.atoms().iter().zip(n2.atoms()) {
                prop_assert!((u.value - v.value).abs() <= 1e-12 * u.value.max(1.0));
            }
            let g1 = main_inequality_rhs(&n1, 4.0, 6.0, 1.0 / 3.0).unwrap();
            let g2 = main_inequality_rhs(&n2, 4.0, 6.0, 1.0 / 3.0).unwrap();
            prop_assert_eq!(g1.gap >= -1e-12, g2.gap >= -1e-12);
        }

        #[test]
        fn refined_inequality_at_one_third(seed in any::<u64>()) {
            let rv = normalize_l2(&FiniteRv::random(&mut stream_rng(seed, 2), 2, 8)).unwrap();
            let g = main_inequality_rhs(&rv, 4.0, 6.0, 1.0 / 3.0).unwrap();
            prop_assert!(g.gap >= -1e-12, "{:?}", g);
        }
    }
}
