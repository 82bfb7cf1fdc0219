//! Exact commutative-algebra engine for the rings `A_Σ = O⟦x, y, t⟧/(x_i y_i, x_j : j ∉ Σ)`
//! over a discrete valuation ring `O`.
//!
//! * [`dvr`]: exact arithmetic in `O`, two backends;
//! * [`fpmod`]: finitely presented `O`-modules, Smith normal form;
//! * [`ringfam`]: the ring family, `O`-points and their strata;
//! * [`cotangent`]: cotangent modules of `A_Σ` and of `B`, by presentation and closed form;
//! * [`congruence`]: congruence-module lengths of module families and Wiles defects;
//! * [`freeness`]: the descent that forces `M_Σ ≅ A_Σ^{μ_∅}`, with certificates;
//! * [`fuzz`]: seeded randomized cross-checks, parallel when the `parallel` feature is on;
//! * [`cli`]: instance files, reports and the command-line driver.

pub mod cli;
pub mod congruence;
pub mod cotangent;
pub mod dvr;
pub mod fpmod;
pub mod freeness;
pub mod fuzz;
pub mod par;
pub mod ringfam;
pub mod rng;
