//! Small numerical utilities shared by the other modules: reproducible
//! summation, Richardson extrapolation to a one-sided limit, a scalar
//! minimiser and seeded random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PAIRWISE_BLOCK: usize = 64;

/// Pairwise (cascade) summation in a fixed order.
///
/// The split points depend only on the slice length, so the result is
/// bit-identical regardless of how the inputs were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean by [`pairwise_sum`]. Empty input gives `NaN`.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Extrapolated limit of a sequence sampled at step sizes halving each level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    pub error: f64,
}

/// Highest elimination order used by [`richardson`]. Higher orders amplify
/// rounding noise in the deepest levels more than they remove truncation error.
const MAX_RICHARDSON_ORDER: usize = 6;

/// Richardson extrapolation of `g(h)` to `h → 0⁺` from samples taken at
/// `h₀, h₀/2, h₀/4, …`, assuming an expansion in integer powers of `h`.
///
/// The returned entry of the Neville table is the one whose two neighbouring
/// estimates agree best; that disagreement is the error estimate.
pub fn richardson(samples: &[f64]) -> Extrapolation {
    let levels = samples.len();
    assert!(levels >= 2, "need at least two levels to extrapolate");
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels);
    let mut best = Extrapolation {
        value: samples[levels - 1],
        error: (samples[levels - 1] - samples[levels - 2]).abs(),
    };
    for (i, &g) in samples.iter().enumerate() {
        let cols = i.min(MAX_RICHARDSON_ORDER);
        let mut row = Vec::with_capacity(cols + 1);
        row.push(g);
        for j in 1..=cols {
            let factor = (1u64 << j) as f64 - 1.0;
            let prev = table[i - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / factor);
        }
        for j in 1..=cols {
            let mut err = (row[j] - row[j - 1]).abs();
            if j < table[i - 1].len() {
                err = err.max((row[j] - table[i - 1][j]).abs());
            }
            if err.is_finite() && err < best.error {
                best = Extrapolation {
                    value: row[j],
                    error: err,
                };
            }
        }
        table.push(row);
    }
    best
}

/// Outcome of a bounded scalar minimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
    /// Difference between the two final bracket points when the minimum
    /// came from the bracket; zero when a scanned point was never improved on.
    pub spread: f64,
}

/// Minimise `f` on `[lo, hi]`: uniform scan with `samples` points (endpoints
/// included) followed by golden-section search in the bracket around the best
/// sample, stopped once the bracket is narrower than `xtol`.
pub fn minimize_scalar<F>(mut f: F, lo: f64, hi: f64, samples: usize, xtol: f64) -> ScalarMin
where
    F: FnMut(f64) -> f64,
{
    assert!(samples >= 3 && hi > lo);
    let step = (hi - lo) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples)
        .map(|i| if i + 1 == samples { hi } else { lo + step * i as f64 })
        .collect();
    let mut evaluations = 0;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        evaluations += 1;
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut left = xs[best_i.saturating_sub(1)];
    let mut right = xs[(best_i + 1).min(samples - 1)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = right - inv_phi * (right - left);
    let mut x2 = left + inv_phi * (right - left);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    evaluations += 2;
    while right - left > xtol {
        if f1 <= f2 {
            right = x2;
            x2 = x1;
            f2 = f1;
            x1 = right - inv_phi * (right - left);
            f1 = f(x1);
        } else {
            left = x1;
            x1 = x2;
            f1 = f2;
            x2 = left + inv_phi * (right - left);
            f2 = f(x2);
        }
        evaluations += 1;
    }

    // A scanned point that the bracket never improved on (typically an
    // endpoint minimum) is an exact evaluation; only a bracket minimum
    // carries the bracket's spread as uncertainty.
    let mut out = ScalarMin {
        x: xs[best_i],
        value: best_v,
        evaluations,
        spread: 0.0,
    };
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < out.value {
            out.x = x;
            out.value = v;
            out.spread = (f1 - f2).abs();
        }
    }
    out
}

/// Independent random stream `stream` derived from a run seed. Sample `i`
/// of a sweep draws from stream `i`, so sweeps are reproducible regardless
/// of how work is split across threads.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
