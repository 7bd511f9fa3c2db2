//! Globally adaptive 15-point Gauss–Kronrod quadrature on a finite interval
//! split at caller-supplied breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub est_error: f64,
    /// number of bisections performed
    pub subdivisions: usize,
    /// interior points where the integrand was split up front
    pub breakpoints: Vec<f64>,
}

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(Kronrod estimate, |Kronrod − Gauss|)` on `[a, b]`.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    seq: usize,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    // Largest error first; ties go to the older piece.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then(other.seq.cmp(&self.seq))
    }
}

/// Integrate `f` over `[knots[0], knots[last]]`, first splitting at every
/// knot, then bisecting the piece with the largest error estimate until the
/// summed estimate is at most `tol`.
pub fn integrate<F>(f: F, knots: &[f64], tol: f64, max_subdivisions: usize) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(param("quadrature knots must be strictly increasing, at least two"));
    }
    if !(tol > 0.0) {
        return Err(param(format!("quadrature tolerance {tol} must be positive")));
    }
    let mut heap = BinaryHeap::with_capacity(knots.len() + max_subdivisions);
    let mut seq = 0usize;
    let mut total_err = 0.0;
    for w in knots.windows(2) {
        let (value, error) = gk15(&f, w[0], w[1]);
        total_err += error;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
            seq,
        });
        seq += 1;
    }
    let mut subdivisions = 0;
    while total_err > tol {
        if subdivisions >= max_subdivisions {
            return Err(Error::Numerical(format!(
                "quadrature did not reach tolerance {tol:e} within {max_subdivisions} subdivisions \
                 (estimated error {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        total_err -= worst.error;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&f, a, b);
            total_err += error;
            heap.push(Piece { a, b, value, error, seq });
            seq += 1;
        }
        subdivisions += 1;
    }
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = pieces.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = pieces.iter().map(|p| p.error).collect();
    Ok(QuadratureResult {
        value: pairwise_sum(&values),
        est_error: pairwise_sum(&errors),
        subdivisions,
        breakpoints: knots[1..knots.len() - 1].to_vec(),
    })
}
