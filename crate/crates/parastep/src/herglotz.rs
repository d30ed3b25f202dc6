//! The map itself: f(z) = z + β + ∫ (1 + t z)/(t − z) dμ(t), evaluated on ℍ
//! and on the real trace beyond the support of μ.

use crate::halfplane::HPoint;
use crate::measure::{KernelSpec, MeasureError, MeasureSpec, Region, RelTol};
use crate::quad::QuadratureFailure;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HerglotzError {
    #[error("beta and the measure must not both vanish (that is the identity map)")]
    IdentityMap,
    #[error("|t| is not integrable, so the drift beta-tilde is undefined")]
    NotL1,
    #[error("the measure is not supported on a half-line bounded above")]
    NotHalfLine,
    #[error("no invariant abscissa below 1e300; the real trace never reaches the margin")]
    SearchFailure,
    #[error("evaluation left the upper half-plane numerically: {0}")]
    LeftHalfPlane(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl From<QuadratureFailure> for HerglotzError {
    fn from(f: QuadratureFailure) -> Self {
        HerglotzError::Measure(MeasureError::Quadrature(f))
    }
}

/// A parabolic self-map of ℍ with Denjoy–Wolff point ∞, in Herglotz form.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicMap {
    beta: f64,
    mu: MeasureSpec,
}

impl ParabolicMap {
    /// Builds the map; β = 0 with the zero measure is rejected (identity).
    pub fn new(beta: f64, mu: MeasureSpec) -> Result<Self, HerglotzError> {
        if !beta.is_finite() {
            return Err(HerglotzError::Measure(MeasureError::Invalid(
                "beta must be finite".into(),
            )));
        }
        if beta == 0.0 && mu.is_zero() {
            return Err(HerglotzError::IdentityMap);
        }
        Ok(Self { beta, mu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> &MeasureSpec {
        &self.mu
    }

    /// The same map with the measure reflected and the drift negated; this
    /// is the conjugation by z ↦ −z̄, which preserves the hyperbolic step.
    pub fn reflect(&self) -> ParabolicMap {
        ParabolicMap {
            beta: -self.beta,
            mu: self.mu.reflect(),
        }
    }
}

/// Integral value together with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct EvalResult {
    pub value: Complex64,
    pub error_bound: f64,
}

/// Machine-precision floor for an evaluation near z: asking for absolute
/// accuracy below the resolution of z + f-increment arithmetic is not
/// meaningful.
pub(crate) fn machine_floor(z: Complex64) -> f64 {
    48.0 * f64::EPSILON * (1.0 + z.norm())
}

fn herglotz_kernel_sum(
    mu: &MeasureSpec,
    z: Complex64,
    tol: f64,
) -> Result<EvalResult, HerglotzError> {
    let kernel = move |t: f64| (1.0 + t * z) / (t - z);
    let spec = KernelSpec {
        f: &kernel,
        pole_x: Some(z.re),
        smooth_scale: z.im.max(SUPPORT_GAP_MIN),
        extent: z.norm(),
        // |(1+tz)/(t-z)| <= 2(1+|z|) once t >= 2|z|
        growth: (0.0, 2.0 * (1.0 + z.norm())),
    };
    let tol_eff = tol.max(machine_floor(z));
    let mut ctx = crate::quad::QuadCtx::from_env();
    let est = mu.sum_kernel_abs(&spec, Region::All, tol_eff, &mut ctx)?;
    let floor = 8.0 * f64::EPSILON * est.abs_integral + machine_floor(z);
    if est.error > tol_eff.max(floor) * 4.0 {
        return Err(QuadratureFailure {
            requested: tol_eff,
            achieved: est.error,
            evals: ctx.used,
        }
        .into());
    }
    Ok(EvalResult {
        value: est.value,
        error_bound: est.error,
    })
}

const SUPPORT_GAP_MIN: f64 = 1e-12;

/// ∫ (1 + t z)/(t − z) dμ(t) for z ∈ ℍ, with |value − truth| ≲ error_bound.
///
/// The requested tolerance is floored at the machine resolution of z-scale
/// arithmetic; an error is returned only when the evaluation budget cannot
/// reach even that.
pub fn herglotz_integral(
    mu: &MeasureSpec,
    z: HPoint,
    tol: f64,
) -> Result<EvalResult, HerglotzError> {
    assert!(tol > 0.0, "tolerance must be positive");
    herglotz_kernel_sum(mu, z.to_complex(), tol)
}

/// One application of the map: f(z) = z + β + ∫ … dμ.
///
/// Im f(z) ≥ Im z always holds in exact arithmetic (strictly when μ ≠ 0);
/// if rounding ever produced a violation the point constructor would reject
/// it and the error is surfaced rather than clamped.
pub fn eval(f: &ParabolicMap, z: HPoint, tol: f64) -> Result<HPoint, HerglotzError> {
    let int = herglotz_integral(&f.mu, z, tol)?;
    let w = z.to_complex() + f.beta + int.value;
    HPoint::from_complex(w).map_err(|e| HerglotzError::LeftHalfPlane(e.to_string()))
}

pub(crate) fn eval_with_bound(
    f: &ParabolicMap,
    z: HPoint,
    tol: f64,
) -> Result<(HPoint, f64), HerglotzError> {
    let int = herglotz_integral(&f.mu, z, tol)?;
    let w = z.to_complex() + f.beta + int.value;
    let p = HPoint::from_complex(w).map_err(|e| HerglotzError::LeftHalfPlane(e.to_string()))?;
    Ok((p, int.error_bound))
}

/// β̃ = β − ∫ t dμ(t), defined when t ∈ L¹(μ).
pub fn tilde_beta(f: &ParabolicMap) -> Result<f64, HerglotzError> {
    let profile = f.mu.integrability_profile()?;
    match profile.moment1 {
        Some(m1) => Ok(f.beta - m1),
        None => Err(HerglotzError::NotL1),
    }
}

/// f̂(x) = x + β + p(x) on the real trace x > sup supp μ, where
/// p(x) = ∫ (1 + t x)/(t − x) dμ(t). Strictly increasing in x.
pub fn real_trace_eval(f: &ParabolicMap, x: f64, tol: f64) -> Result<f64, HerglotzError> {
    let p = real_trace_p(f, x, tol)?;
    Ok(x + f.beta + p)
}

fn real_trace_p(f: &ParabolicMap, x: f64, tol: f64) -> Result<f64, HerglotzError> {
    let profile = f.mu.integrability_profile()?;
    let a = match profile.support_upper {
        Some(a) => a,
        None => return Err(HerglotzError::NotHalfLine),
    };
    if !(x > a) {
        return Err(HerglotzError::Measure(MeasureError::Invalid(format!(
            "real trace evaluation requires x > support bound {a}, got {x}"
        ))));
    }
    let z = Complex64::new(x, 0.0);
    let kernel = move |t: f64| (1.0 + t * z) / (t - z);
    let spec = KernelSpec {
        f: &kernel,
        pole_x: Some(x),
        smooth_scale: (x - a).max(SUPPORT_GAP_MIN),
        extent: x.abs(),
        growth: (0.0, 2.0 * (1.0 + x.abs())),
    };
    let est = f.mu.sum_kernel(&spec, Region::All, RelTol(tol.max(1e-14)))?;
    let _ = tol;
    Ok(est.value.re)
}

/// Finds b > sup supp μ with p(b) + β ≥ margin, by doubling then bisection
/// on the increasing function x ↦ p(x) + β. The half-plane above Re = b is
/// then invariant under f̂.
pub fn find_invariant_abscissa(f: &ParabolicMap, margin: f64) -> Result<f64, HerglotzError> {
    assert!(margin > 0.0, "margin must be positive");
    let profile = f.mu.integrability_profile()?;
    let a = match profile.support_upper {
        Some(a) => a,
        None => return Err(HerglotzError::NotHalfLine),
    };
    let tol = 1e-10;
    let value = |x: f64| -> Result<f64, HerglotzError> { Ok(real_trace_p(f, x, tol)? + f.beta) };

    // doubling phase
    let mut offset = 1.0f64.max(a.abs() * 1e-9);
    let mut hi = a + offset;
    let mut lo = a;
    loop {
        if value(hi)? >= margin {
            break;
        }
        lo = hi;
        offset *= 2.0;
        hi = a + offset;
        if hi > 1e300 {
            return Err(HerglotzError::SearchFailure);
        }
    }
    // bisection toward the margin from above; any b with value >= margin is valid
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = value(mid)?;
        if v >= margin {
            hi = mid;
            if v <= margin * 1.5 {
                break;
            }
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
