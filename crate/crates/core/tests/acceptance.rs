//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::f64::consts::FRAC_PI_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use momentgap::expsums::{
    additive_energy, exact_even_moment, quadrature_norm, ratio_to_f64, squares_set, theorem_upper_bound, ExpSumSet,
};
use momentgap::hypercube::{delta_integral, poincare_ratio, remark_integral, CubeFunction};
use momentgap::numeric::stream_rng;
use momentgap::rademacher::{dax1_rhs, exact_sum_distribution, fourth_moment, khinchin6_check, BiasedSumSpec};
use momentgap::rv::{main_inequality_rhs, normalize_l2, FiniteRv};
use momentgap::sharp_constant::{b_func, c_lower_bound, compute_c, sharpness_check, torsion_minors, DEFAULT_TOL};
use momentgap::verify::{run_verify, VerifyConfig};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn sharp_constant() -> Outcome {
    let t = Instant::now();
    let r = compute_c(4.0, 6.0, DEFAULT_TOL).expect("C(4,6) converges");
    let el = t.elapsed();
    let err = (r.c_value - 1.0 / 3.0).abs();
    outcome(
        err <= 1e-6 && el < Duration::from_secs(10),
        format!("C(4,6) = {:.12}, |C − 1/3| = {err:.1e}, {:.2} s", r.c_value, secs(el)),
    )
}

const PAIRS: [(f64, f64); 20] = [
    (2.1, 2.2),
    (2.1, 12.0),
    (2.5, 3.0),
    (2.5, 7.0),
    (3.0, 4.0),
    (3.0, 5.0),
    (3.0, 12.0),
    (3.5, 6.0),
    (4.0, 5.0),
    (4.0, 6.0),
    (4.0, 9.0),
    (5.0, 6.0),
    (5.0, 9.0),
    (5.5, 11.0),
    (6.0, 6.5),
    (6.0, 10.0),
    (7.0, 8.0),
    (8.0, 12.0),
    (10.0, 11.0),
    (11.0, 12.0),
];

fn lower_bound_grid() -> Outcome {
    let t = Instant::now();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (p, q) in PAIRS {
        match (compute_c(p, q, DEFAULT_TOL), c_lower_bound(p, q)) {
            (Ok(r), Ok(lb)) => {
                let margin = r.c_value - (lb - 1e-9);
                worst = worst.min(margin);
                if margin < 0.0 {
                    failures.push(format!("({p},{q})"));
                }
            }
            (Err(e), _) | (_, Err(e)) => failures.push(format!("({p},{q}): {e}")),
        }
    }
    let el = t.elapsed();
    outcome(
        failures.is_empty() && el < Duration::from_secs(300),
        format!(
            "{} pairs, smallest C − bound margin {worst:.3e}, {:.2} s{}",
            PAIRS.len(),
            secs(el),
            if failures.is_empty() { String::new() } else { format!(", failing {failures:?}") }
        ),
    )
}

fn lemma_sandwich() -> Outcome {
    let n = 500;
    let lo = 1e-3;
    let step = (1.0 - 2.0 * lo) / (n - 1) as f64;
    let mut violations = 0usize;
    let mut evaluated = 0usize;
    for p in [2.1, 2.5, 3.0, 4.0, 7.3, 12.0] {
        let floor = f64::min(1.0, p - 2.0);
        for i in 0..n {
            let a = lo + step * i as f64;
            for j in 0..n {
                let c = lo + step * j as f64;
                match b_func(a, c, p) {
                    Ok(b) if b >= floor && b <= p * p => {}
                    _ => violations += 1,
                }
                evaluated += 1;
            }
        }
    }
    outcome(violations == 0, format!("{evaluated} grid evaluations, {violations} violations"))
}

fn gap_sweep(p: f64, q: f64, constant: f64, count: u64, stream: u64) -> (usize, f64) {
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for i in 0..count {
        let mut rng = stream_rng(SEED, stream << 32 | i);
        let rv = normalize_l2(&FiniteRv::random(&mut rng, 2, 8)).expect("nonzero variable");
        let g = main_inequality_rhs(&rv, p, q, constant).expect("valid exponents");
        worst = worst.min(g.gap);
        if g.gap < -1e-12 {
            violations += 1;
        }
    }
    (violations, worst)
}

fn main_inequality() -> Outcome {
    let (v46, w46) = gap_sweep(4.0, 6.0, 1.0 / 3.0, 100_000, 1);
    let c35 = compute_c(3.0, 5.0, DEFAULT_TOL).expect("C(3,5)").c_value;
    let c59 = compute_c(5.0, 9.0, DEFAULT_TOL).expect("C(5,9)").c_value;
    let (v35, w35) = gap_sweep(3.0, 5.0, c35, 10_000, 2);
    let (v59, w59) = gap_sweep(5.0, 9.0, c59, 10_000, 3);
    outcome(
        v46 + v35 + v59 == 0,
        format!(
            "violations (4,6): {v46}/100000, (3,5): {v35}/10000, (5,9): {v59}/10000; min gaps {w46:.2e}, {w35:.2e}, {w59:.2e}"
        ),
    )
}

fn sharpness() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (p, q) in [(4.0, 6.0), (3.0, 5.0), (5.0, 9.0)] {
        let r = compute_c(p, q, DEFAULT_TOL).expect("converges");
        let s = sharpness_check(&r).expect("two-point path");
        ok &= s.rel_err <= 1e-4;
        parts.push(format!("({p},{q}) rel err {:.1e}", s.rel_err));
    }
    outcome(ok, parts.join(", "))
}

fn delta() -> Outcome {
    let t = Instant::now();
    let a = delta_integral(1e-10).expect("converges");
    let el = t.elapsed();
    let b = delta_integral(5e-11).expect("converges");
    let shift = (a.value - b.value).abs();
    outcome(
        (0.000125..=0.000135).contains(&a.value) && shift < 1e-9 && el < Duration::from_secs(1),
        format!("δ = {:.12}, change under tol halving {shift:.1e}, {:.3} s", a.value, secs(el)),
    )
}

fn remark() -> Outcome {
    let t = Instant::now();
    let r = remark_integral(1e-6).expect("converges");
    let el = t.elapsed();
    outcome(
        (0.145..=0.153).contains(&r.value) && el < Duration::from_secs(1),
        format!("value {:.9} ± {:.1e}, {:.3} s", r.value, r.est_error, secs(el)),
    )
}

fn specs() -> Vec<BiasedSumSpec> {
    (0..1000)
        .map(|i| BiasedSumSpec::random(&mut stream_rng(SEED, 8 << 32 | i), (0.02, 0.98), 12))
        .collect()
}

fn rademacher_bound() -> Outcome {
    let mut violations = 0;
    let mut closest = f64::INFINITY;
    for s in specs() {
        let l1 = exact_sum_distribution(&s).expect("n ≤ 12").mean();
        let rhs = dax1_rhs(s.bias()).unwrap();
        closest = closest.min(rhs - l1);
        if l1 > rhs + 1e-12 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("1000 specs, {violations} violations, smallest margin {closest:.3e}"))
}

fn moment_identities() -> Outcome {
    let mut worst_rel = 0.0f64;
    for s in specs() {
        let exact = exact_sum_distribution(&s).unwrap().moment(4.0);
        let formula = fourth_moment(&s);
        worst_rel = worst_rel.max((exact - formula).abs() / formula);
    }
    let mut khinchin_fail = 0;
    for i in 0..1000 {
        let mut rng = stream_rng(SEED, 9 << 32 | i);
        let n = rng.random_range(1..=12);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        if !khinchin6_check(&b).unwrap().holds() {
            khinchin_fail += 1;
        }
    }
    outcome(
        worst_rel <= 1e-10 && khinchin_fail == 0,
        format!("max relative 4th-moment error {worst_rel:.1e}, Khinchin failures {khinchin_fail}/1000"),
    )
}

fn poincare() -> Outcome {
    let limit = FRAC_PI_2 - 0.00013;
    let mut worst = 0.0f64;
    let mut violations = 0;
    for mask in 0..256u32 {
        let f = CubeFunction::new(3, (0..8).map(|i| (mask >> i & 1) as f64).collect()).unwrap();
        if let Ok(r) = poincare_ratio(&f) {
            worst = worst.max(r);
            violations += (r > limit) as usize;
        }
    }
    for i in 0..10_000 {
        let mut rng = stream_rng(SEED, 10 << 32 | i);
        let n = rng.random_range(1..=10);
        let f = CubeFunction::random(&mut rng, n).unwrap();
        let r = poincare_ratio(&f).expect("non-constant");
        worst = worst.max(r);
        violations += (r > limit) as usize;
    }
    outcome(violations == 0, format!("256 Boolean + 10000 random, max ratio {worst:.6}, {violations} violations"))
}

fn brute_energy(s: &ExpSumSet, k: u32) -> u64 {
    let e = s.elements();
    let n = e.len();
    let mut count = 0;
    for tuple in 0..n.pow(2 * k) {
        let mut idx = tuple;
        let mut diff = 0i64;
        for pos in 0..2 * k {
            diff += if pos < k { e[idx % n] } else { -e[idx % n] };
            idx /= n;
        }
        count += (diff == 0) as u64;
    }
    count
}

fn exponential_sums() -> Outcome {
    let mut mismatches = 0;
    for i in 0..100 {
        let mut rng = stream_rng(SEED, 11 << 32 | i);
        let size = rng.random_range(2..=6);
        let s = ExpSumSet::random(&mut rng, size, -20, 60).unwrap();
        for k in [2, 3] {
            mismatches += (additive_energy(&s, k).unwrap() != brute_energy(&s, k)) as usize;
        }
    }
    let mut worst_l4 = 0.0f64;
    for i in 0..50 {
        let mut rng = stream_rng(SEED, 12 << 32 | i);
        let size = rng.random_range(2..=30);
        let s = ExpSumSet::random(&mut rng, size, -200, 500).unwrap();
        let q = quadrature_norm(&s, 4.0, 1e-10).unwrap().moment;
        worst_l4 = worst_l4.max((q - ratio_to_f64(&exact_even_moment(&s, 2).unwrap())).abs());
    }
    let mut bound_fail = 0;
    let mut sets: Vec<ExpSumSet> = (2..=100).map(|m| squares_set(m).unwrap()).collect();
    for i in 0..100 {
        let mut rng = stream_rng(SEED, 13 << 32 | i);
        let size = rng.random_range(2..=40);
        sets.push(ExpSumSet::random(&mut rng, size, -500, 1000).unwrap());
    }
    for s in &sets {
        let l1 = quadrature_norm(s, 1.0, 1e-9).unwrap();
        let b = theorem_upper_bound(s, 4.0, 6.0, 1.0 / 3.0).unwrap();
        bound_fail += (b.bound < l1.value - l1.est_error) as usize;
    }
    outcome(
        mismatches == 0 && worst_l4 <= 1e-8 && bound_fail == 0,
        format!(
            "brute-force mismatches {mismatches}/200, max |quad − exact| for ‖X‖₄⁴ {worst_l4:.1e}, bound failures {bound_fail}/{}",
            sets.len()
        ),
    )
}

fn torsion() -> Outcome {
    let mut worst = 0.0f64;
    let mut nonpositive = 0;
    for i in 0..100 {
        let mut rng = stream_rng(SEED, 14 << 32 | i);
        let t = rng.random_range(0.02..0.98);
        let p = rng.random_range(2.05..10.0);
        let q = p + rng.random_range(0.05..8.0);
        let r = torsion_minors(t, p, q).unwrap();
        nonpositive += (!r.all_positive()) as usize;
        worst = worst.max(r.max_rel_err);
    }
    outcome(
        nonpositive == 0 && worst <= 1e-8,
        format!("100 triples, {nonpositive} with a non-positive minor, max relative error {worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let cfg = VerifyConfig {
        seed: 42,
        samples: 20_000,
        constant_override: None,
    };
    let a = serde_json::to_string(&run_verify(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_verify(&cfg).unwrap()).unwrap();
    outcome(a == b, format!("two runs with seed 42: {} bytes each, identical = {}", a.len(), a == b))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("sharp constant C(4,6)", sharp_constant),
        ("explicit lower bound on 20 pairs", lower_bound_grid),
        ("B(a,c,p) sandwich on 500x500 grid", lemma_sandwich),
        ("refined inequality sweep", main_inequality),
        ("sharpness along two-point variables", sharpness),
        ("delta quadrature", delta),
        ("remark figure", remark),
        ("biased Rademacher bound", rademacher_bound),
        ("moment identities", moment_identities),
        ("L1 Poincare ratio", poincare),
        ("exponential sums", exponential_sums),
        ("torsion minors", torsion),
        ("verify determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failed += (!result.passed) as usize;
        println!(
            "{} {:>2}. {name}: {} [{:.2} s]",
            if result.passed { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            secs(t.elapsed())
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
