//! The analytic hyperbolic-step decision procedure, and its cross-validation
//! against the empirical orbit classifier.
//!
//! The decision tree, in order:
//!
//! 1. μ = 0: the map is the translation z + β, a parabolic automorphism with
//!    constant step sequence: positive hyperbolic step.
//! 2. t ∈ L¹(μ): decide by the sign of β̃ = β − ∫t dμ. Exactly balanced
//!    drift gives zero step; otherwise the step is positive exactly when t²
//!    is integrable on the side the orbit drifts toward. A β̃ that is zero
//!    only up to numerical error (no closed-form provenance) is reported as
//!    Unknown rather than guessed.
//! 3. μ symmetric (and t ∉ L¹): zero step for every β.
//! 4. ∫_{(−∞,0)}|t| dμ = ∞ with ∫_{(0,∞)} t² dμ < ∞ (or the mirror image,
//!    via the reflection conjugation z ↦ −z̄): positive step for every β.
//! 5. Anything else is outside the decided region: Unknown.

use crate::dynamics::{
    empirical_step, orbit, EmpiricalVerdict, StepVerdict, DEFAULT_ZERO_THRESHOLD,
};
use crate::halfplane::HPoint;
use crate::herglotz::{HerglotzError, ParabolicMap};
use serde::Serialize;
use thiserror::Error;

/// Default band around zero inside which a *numerically computed* β̃ is
/// considered ambiguous.
pub const DEFAULT_EPS_BETA: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("the identity map has no hyperbolic step classification")]
    IdentityMap,
    #[error(transparent)]
    Herglotz(#[from] HerglotzError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    ZeroHS,
    PositiveHS,
    Unknown,
}

/// Which theorem-branch produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rule {
    #[serde(rename = "L1_BalancedBeta")]
    L1BalancedBeta,
    #[serde(rename = "L1_PosBeta_T2Finite")]
    L1PosBetaT2Finite,
    #[serde(rename = "L1_PosBeta_T2Infinite")]
    L1PosBetaT2Infinite,
    #[serde(rename = "L1_NegBeta_T2Finite")]
    L1NegBetaT2Finite,
    #[serde(rename = "L1_NegBeta_T2Infinite")]
    L1NegBetaT2Infinite,
    #[serde(rename = "Symmetric_ZeroBeta")]
    SymmetricZeroBeta,
    #[serde(rename = "Symmetric_NotL1")]
    SymmetricNotL1,
    #[serde(rename = "HalfLine_PHS")]
    HalfLinePhs,
    #[serde(rename = "Perturbed_HalfLine_PHS")]
    PerturbedHalfLinePhs,
    Translation,
    OutsideTheorems,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub rule: Rule,
    pub beta_tilde: Option<f64>,
    /// Whether the verdict was obtained on the reflected measure (the
    /// conjugation z ↦ −z̄ preserves the hyperbolic step).
    pub reflected: bool,
    pub notes: String,
}

/// Classifies the hyperbolic step of f analytically.
///
/// `eps_beta` is the ambiguity band for a β̃ that lacks closed-form
/// provenance; with exact provenance the decision is by the exact float
/// value.
pub fn classify(f: &ParabolicMap, eps_beta: f64) -> Result<Classification, ClassifyError> {
    let mu = f.mu();

    // (0) pure translation
    if mu.is_zero() {
        if f.beta() == 0.0 {
            return Err(ClassifyError::IdentityMap);
        }
        return Ok(Classification {
            verdict: Verdict::PositiveHS,
            rule: Rule::Translation,
            beta_tilde: Some(f.beta()),
            reflected: false,
            notes: "parabolic automorphism: the step sequence is a positive constant".into(),
        });
    }

    let profile = mu.integrability_profile().map_err(HerglotzError::from)?;

    // (1) t in L1: decide by the sign of beta-tilde
    if profile.t_l1 {
        let beta_tilde = f.beta() - profile.moment1.expect("moment1 present when t_l1");
        let ambiguous = !profile.moment1_exact && beta_tilde.abs() <= eps_beta;
        if ambiguous {
            return Ok(Classification {
                verdict: Verdict::Unknown,
                rule: Rule::OutsideTheorems,
                beta_tilde: Some(beta_tilde),
                reflected: false,
                notes: "numerically ambiguous beta_tilde: |beta - ∫t dμ| is below eps_beta but ∫t dμ has no closed-form provenance".into(),
            });
        }
        let (verdict, rule) = if beta_tilde.abs() <= eps_beta {
            (Verdict::ZeroHS, Rule::L1BalancedBeta)
        } else if beta_tilde > 0.0 {
            if profile.t2_pos_finite {
                (Verdict::PositiveHS, Rule::L1PosBetaT2Finite)
            } else {
                (Verdict::ZeroHS, Rule::L1PosBetaT2Infinite)
            }
        } else if profile.t2_neg_finite {
            (Verdict::PositiveHS, Rule::L1NegBetaT2Finite)
        } else {
            (Verdict::ZeroHS, Rule::L1NegBetaT2Infinite)
        };
        return Ok(Classification {
            verdict,
            rule,
            beta_tilde: Some(beta_tilde),
            reflected: false,
            notes: String::new(),
        });
    }

    // (2) symmetric, t not in L1
    if profile.symmetric {
        let rule = if f.beta() == 0.0 {
            Rule::SymmetricZeroBeta
        } else {
            Rule::SymmetricNotL1
        };
        return Ok(Classification {
            verdict: Verdict::ZeroHS,
            rule,
            beta_tilde: None,
            reflected: false,
            notes: String::new(),
        });
    }

    // (3) half-line-dominated mass: PHS for every beta
    if !profile.abs_t_neg_finite && profile.t2_pos_finite {
        let rule = if profile.support_upper.is_some() {
            Rule::HalfLinePhs
        } else {
            Rule::PerturbedHalfLinePhs
        };
        return Ok(Classification {
            verdict: Verdict::PositiveHS,
            rule,
            beta_tilde: None,
            reflected: false,
            notes: String::new(),
        });
    }
    if !profile.abs_t_pos_finite && profile.t2_neg_finite {
        // mirrored case, decided on the reflection
        let reflected = f.reflect();
        let rprofile = reflected
            .mu()
            .integrability_profile()
            .map_err(HerglotzError::from)?;
        debug_assert!(!rprofile.abs_t_neg_finite && rprofile.t2_pos_finite);
        let rule = if rprofile.support_upper.is_some() {
            Rule::HalfLinePhs
        } else {
            Rule::PerturbedHalfLinePhs
        };
        return Ok(Classification {
            verdict: Verdict::PositiveHS,
            rule,
            beta_tilde: None,
            reflected: true,
            notes: "classified via the reflected measure (z ↦ −z̄ conjugation)".into(),
        });
    }

    // (4) genuinely undecided territory
    Ok(Classification {
        verdict: Verdict::Unknown,
        rule: Rule::OutsideTheorems,
        beta_tilde: None,
        reflected: false,
        notes: "no decided branch applies (t ∉ L¹, not symmetric, t² infinite on the heavy side)"
            .into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Yes,
    No,
    NotComparable,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub analytic: Classification,
    pub empirical: EmpiricalVerdict,
    pub agree: Agreement,
}

/// Runs the analytic classifier and the empirical one on a fresh orbit, and
/// compares. `agree` is `NotComparable` when either side abstains.
pub fn cross_validate(
    f: &ParabolicMap,
    z0: HPoint,
    n: usize,
) -> Result<ValidationReport, ClassifyError> {
    let analytic = classify(f, DEFAULT_EPS_BETA)?;
    let trace = orbit(f, z0, n, 1e-8)?;
    let empirical = empirical_step(&trace, DEFAULT_ZERO_THRESHOLD, (n / 10).max(10))?;
    let agree = match (analytic.verdict, empirical.verdict) {
        (Verdict::Unknown, _) | (_, StepVerdict::Inconclusive) => Agreement::NotComparable,
        (Verdict::ZeroHS, StepVerdict::ZeroHS) => Agreement::Yes,
        (Verdict::PositiveHS, StepVerdict::PositiveHS) => Agreement::Yes,
        _ => Agreement::No,
    };
    Ok(ValidationReport {
        analytic,
        empirical,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::measure::{Atom, AtomTrain, Component, DensityComponent, MeasureSpec, TrainCount};

    fn ex1_mu() -> MeasureSpec {
        MeasureSpec::new(
            vec![Component::Density(
                DensityComponent::new(
                    Expr::parse("1/(pi*(1+t^2)^2)").unwrap(),
                    None,
                    None,
                    Some(4.0),
                    Some(4.0),
                    None,
                )
                .unwrap(),
            )],
            true,
        )
        .unwrap()
    }

    fn ex2_mu() -> MeasureSpec {
        MeasureSpec::new(
            vec![Component::Density(
                DensityComponent::new(
                    Expr::parse("1/((1+t^2)*t)").unwrap(),
                    Some(1.0),
                    None,
                    None,
                    Some(3.0),
                    Some(std::f64::consts::FRAC_PI_4),
                )
                .unwrap(),
            )],
            false,
        )
        .unwrap()
    }

    fn ex3_mu() -> MeasureSpec {
        MeasureSpec::new(
            vec![Component::Train(
                AtomTrain::new(
                    std::f64::consts::FRAC_PI_2,
                    std::f64::consts::PI,
                    TrainCount::Infinite,
                    Expr::parse("1/(1+t^2)").unwrap(),
                    2.0,
                    true,
                )
                .unwrap(),
            )],
            true,
        )
        .unwrap()
    }

    fn ex4_mu() -> MeasureSpec {
        MeasureSpec::new(
            vec![Component::Density(
                DensityComponent::new(
                    Expr::parse("1/(1+t^2)").unwrap(),
                    None,
                    Some(0.0),
                    Some(2.0),
                    None,
                    None,
                )
                .unwrap(),
            )],
            false,
        )
        .unwrap()
    }

    fn c(beta: f64, mu: MeasureSpec) -> Classification {
        classify(&ParabolicMap::new(beta, mu).unwrap(), DEFAULT_EPS_BETA).unwrap()
    }

    #[test]
    fn golden_ex1() {
        let r = c(0.0, ex1_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::L1BalancedBeta));
        let r = c(0.5, ex1_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::L1PosBetaT2Finite));
        let r = c(-0.5, ex1_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::L1NegBetaT2Finite));
    }

    #[test]
    fn golden_ex2() {
        let r = c(0.0, ex2_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::L1NegBetaT2Finite));
        assert!((r.beta_tilde.unwrap() + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let r = c(std::f64::consts::FRAC_PI_4, ex2_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::L1BalancedBeta));
        let r = c(1.0, ex2_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::L1PosBetaT2Infinite));
    }

    #[test]
    fn golden_ex3() {
        let r = c(-5.0, ex3_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::SymmetricNotL1));
        let r = c(0.0, ex3_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::SymmetricZeroBeta));
        let r = c(2.0, ex3_mu());
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::SymmetricNotL1));
    }

    #[test]
    fn golden_ex4_and_reflection() {
        for beta in [-2.0, 0.0, 7.0] {
            let r = c(beta, ex4_mu());
            assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::HalfLinePhs));
            assert!(!r.reflected);
        }
        let r = c(7.0, ex4_mu().reflect());
        assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::HalfLinePhs));
        assert!(r.reflected);
    }

    #[test]
    fn translation_rule() {
        let r = c(1.0, MeasureSpec::zero());
        assert_eq!((r.verdict, r.rule), (Verdict::PositiveHS, Rule::Translation));
    }

    #[test]
    fn reflection_coherence() {
        for beta in [-1.0, 0.25, 3.0] {
            for mu in [ex1_mu(), ex2_mu(), ex3_mu(), ex4_mu()] {
                let direct = c(beta, mu.clone());
                let mirrored = c(-beta, mu.reflect());
                assert_eq!(direct.verdict, mirrored.verdict, "beta={beta}");
            }
        }
    }

    #[test]
    fn scaling_invariance() {
        // scaling mu by c > 0 and beta by c preserves the L1-branch verdict
        let base = DensityComponent::new(
            Expr::parse("1/(pi*(1+t^2)^2)").unwrap(),
            None,
            None,
            Some(4.0),
            Some(4.0),
            None,
        )
        .unwrap();
        let scaled = DensityComponent::new(
            Expr::parse("3/(pi*(1+t^2)^2)").unwrap(),
            None,
            None,
            Some(4.0),
            Some(4.0),
            None,
        )
        .unwrap();
        let m1 = MeasureSpec::new(vec![Component::Density(base)], true).unwrap();
        let m3 = MeasureSpec::new(vec![Component::Density(scaled)], true).unwrap();
        for beta in [-0.5, 0.0, 0.5] {
            let a = c(beta, m1.clone());
            let b = c(3.0 * beta, m3.clone());
            assert_eq!(a.verdict, b.verdict);
            assert_eq!(a.rule, b.rule);
        }
    }

    #[test]
    fn ambiguous_beta_tilde_is_unknown() {
        // one-sided train with numerically computed first moment, beta set to
        // the computed value: no closed-form provenance, so Unknown
        let train = AtomTrain::new(
            1.0,
            1.0,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^4)").unwrap(),
            4.0,
            false,
        )
        .unwrap();
        let mu = MeasureSpec::new(vec![Component::Train(train)], false).unwrap();
        let m1 = mu
            .integrability_profile()
            .unwrap()
            .moment1
            .unwrap();
        let r = c(m1, mu);
        assert_eq!(r.verdict, Verdict::Unknown);
        assert_eq!(r.rule, Rule::OutsideTheorems);
        assert!(r.notes.contains("ambiguous"));
    }

    #[test]
    fn outside_theorems_case() {
        // heavy tails on both sides, not symmetric: no theorem applies
        let left = DensityComponent::new(
            Expr::parse("1/(1+t^2)").unwrap(),
            None,
            Some(0.0),
            Some(2.0),
            None,
            None,
        )
        .unwrap();
        let right = DensityComponent::new(
            Expr::parse("2/(1+t^2)").unwrap(),
            Some(0.0),
            None,
            None,
            Some(2.0),
            None,
        )
        .unwrap();
        let mu = MeasureSpec::new(
            vec![Component::Density(left), Component::Density(right)],
            false,
        )
        .unwrap();
        let r = c(1.0, mu);
        assert_eq!((r.verdict, r.rule), (Verdict::Unknown, Rule::OutsideTheorems));
    }

    #[test]
    fn decision_table_witnesses() {
        // the six rows of the L1 decision table, via truncated/untruncated
        // variants of the first two golden measures and their reflections
        let t2_both = || ex1_mu(); // t^2 finite on both sides
        let t2_pos_inf = || ex2_mu(); // t^2 infinite on (0, inf), zero mass left of 1
        let t2_neg_inf = || ex2_mu().reflect();

        // row 1: balanced drift, any t^2: 0HS
        assert_eq!(c(0.0, t2_both()).verdict, Verdict::ZeroHS);
        assert_eq!(c(std::f64::consts::FRAC_PI_4, t2_pos_inf()).verdict, Verdict::ZeroHS);
        // row 2: nonzero drift, t^2 finite both sides: PHS
        assert_eq!(c(0.7, t2_both()).verdict, Verdict::PositiveHS);
        assert_eq!(c(-0.7, t2_both()).verdict, Verdict::PositiveHS);
        // row 3: positive drift, t^2 divergent on the right: 0HS
        assert_eq!(c(2.0, t2_pos_inf()).verdict, Verdict::ZeroHS);
        // row 4: positive drift, divergent left, convergent right: PHS
        assert_eq!(c(0.0, t2_neg_inf()).verdict, Verdict::PositiveHS);
        // (beta = 0 gives beta_tilde = pi/4 > 0 on the reflected measure)
        // row 5: negative drift, convergent left, divergent right: PHS
        assert_eq!(c(0.0, t2_pos_inf()).verdict, Verdict::PositiveHS);
        // row 6: negative drift, divergent left: 0HS
        assert_eq!(c(-2.0, t2_neg_inf()).verdict, Verdict::ZeroHS);
    }

    #[test]
    fn atom_pair_balanced_is_exact() {
        let mu = MeasureSpec::new(
            vec![
                Component::Atom(Atom::new(2.0, 0.3).unwrap()),
                Component::Atom(Atom::new(-1.0, 0.6).unwrap()),
            ],
            false,
        )
        .unwrap();
        // first moment = 0.6 - 0.6 = 0 exactly, with atom provenance
        let r = c(0.0, mu);
        assert_eq!((r.verdict, r.rule), (Verdict::ZeroHS, Rule::L1BalancedBeta));
    }

    #[test]
    fn serialization_uses_spec_rule_names() {
        let r = c(0.0, ex1_mu());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"L1_BalancedBeta\""));
        assert!(json.contains("\"ZeroHS\""));
    }
}
