//! Sharp constants for the refined Cauchy–Schwarz gap
//!
//! ```text
//! ‖X‖₁ ≤ 1 − C(p,q) · (‖X‖_p^p − 1)^θ / (‖X‖_q^q − 1)^(θ−1),   θ = (q−2)/(q−p),  ‖X‖₂ = 1
//! ```
//!
//! together with the numerical machinery needed to check it on concrete
//! random variables and to reproduce its two applications:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`rv`] | finite-support random variables, L^p norms, two-point extremizers, gap evaluator |
//! | [`sharp_constant`] | `B(a,c,p)`, the objective, `C(p,q)` by global minimisation, torsion minors |
//! | [`rademacher`] | biased Bernoulli sums: exact distributions, moment bounds, sup estimates |
//! | [`hypercube`] | discrete gradients on `{−1,1}ⁿ`, L¹ Poincaré ratio, the δ quadratures |
//! | [`expsums`] | exponential sums `X_S`, additive-energy moments, periodic quadrature |
//! | [`verify`] | seeded randomized invariant suites and the headline-number reproduction |

pub mod error;
pub mod expsums;
pub mod hypercube;
pub mod numeric;
pub mod quadrature;
pub mod rademacher;
pub mod rv;
pub mod sharp_constant;
pub mod verify;

pub use error::{Error, Result};
pub use expsums::{ExpSumSet, MomentTable};
pub use hypercube::CubeFunction;
pub use quadrature::QuadratureResult;
pub use rademacher::BiasedSumSpec;
pub use rv::{FiniteRv, GapReport, TwoPointRv};
pub use sharp_constant::{SharpConstantResult, TorsionReport};
pub use verify::{VerifyConfig, VerifyReport};
