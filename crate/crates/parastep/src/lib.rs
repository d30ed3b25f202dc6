//! Parabolic self-maps of the upper half-plane in Herglotz form, with an
//! analytic hyperbolic-step classifier and orbit-based empirical diagnostics.
//!
//! A parabolic holomorphic self-map of ℍ with Denjoy–Wolff point at infinity
//! is determined by a real drift β and a finite positive measure μ on ℝ:
//!
//! ```text
//! f(z) = z + β + ∫ (1 + t z)/(t − z) dμ(t)
//! ```
//!
//! The crate models (β, μ) pairs, evaluates f accurately on ℍ and on the
//! real trace beyond the support, decides whether the iterates of f have
//! zero or positive hyperbolic step from integrability and symmetry
//! properties of μ, and cross-checks the verdict by actually iterating.
//!
//! See the `book/` guide for a narrative walkthrough; its code snippets are
//! compiled as doctests.

pub mod classify;
pub mod dynamics;
pub mod expr;
pub mod halfplane;
pub mod herglotz;
pub mod mapspec;
pub mod measure;
pub mod quad;

pub use classify::{classify, cross_validate, Agreement, Classification, Rule, ValidationReport, Verdict};
pub use dynamics::{
    abel_residual, angular_probe, drift_probe, empirical_step, orbit, pommerenke_b,
    EmpiricalVerdict, OrbitTrace, StepVerdict,
};
pub use expr::Expr;
pub use halfplane::{cayley_to_disk, hyperbolic_distance, pseudo_hyperbolic, ExtendedReal, HPoint};
pub use herglotz::{
    eval, find_invariant_abscissa, herglotz_integral, real_trace_eval, tilde_beta, EvalResult,
    ParabolicMap,
};
pub use measure::{
    Atom, AtomTrain, Component, DensityComponent, IntegrabilityProfile, MeasureSpec, Region,
    TrainCount,
};

#[cfg(doctest)]
mod book {
    //! The mdbook chapters double as doctests so the guide can never drift
    //! from the API.
    #[doc = include_str!("../../../book/src/halfplane.md")]
    mod halfplane {}
    #[doc = include_str!("../../../book/src/representation.md")]
    mod representation {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/orbits.md")]
    mod orbits {}
}
