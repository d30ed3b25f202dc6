//! Finite positive measures on ℝ: atoms, arithmetic atom trains, and
//! absolutely continuous components with expression densities.
//!
//! Integrability against |t| and t² is never inferred from quadrature —
//! quadrature cannot prove divergence. Instead, tail behaviour is *declared*
//! (decay exponents on infinite trains, tail exponents on unbounded
//! densities) and *checked* numerically at construction: declared exponents
//! must match sampled behaviour two-sidedly. Moment finiteness is then
//! decided from the declarations alone; finite values are computed
//! numerically.
//!
//! Infinite sums are evaluated as a direct head plus a midpoint
//! Euler–Maclaurin tail (an adaptive quadrature of the term function plus
//! endpoint-derivative corrections), which reaches near machine precision
//! where bound-based truncation would need billions of terms.

use crate::expr::Expr;
use crate::halfplane::ExtendedReal;
use crate::quad::{
    self, Adaptive, Estimate, QuadCtx, QuadError, QuadratureFailure,
};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("invalid measure: {0}")]
    Invalid(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureFailure),
    #[error("integrand evaluation failed: {0}")]
    Integrand(String),
}

impl From<QuadError> for MeasureError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::Integrand { at, message } => {
                MeasureError::Integrand(format!("at t = {at}: {message}"))
            }
            QuadError::Failure(f) => MeasureError::Quadrature(f),
        }
    }
}

/// A single point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    t: f64,
    w: f64,
}

impl Atom {
    pub fn new(t: f64, w: f64) -> Result<Self, MeasureError> {
        if !t.is_finite() {
            return Err(MeasureError::Invalid("atom location must be finite".into()));
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(MeasureError::Invalid(format!(
                "atom mass must be positive and finite, got {w}"
            )));
        }
        Ok(Self { t, w })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainCount {
    Finite(u64),
    Infinite,
}

/// Point masses on the arithmetic progression t_k = t0 + k·step with weights
/// w(t_k) given by an expression. `mirrored` adds the reflected atoms at
/// −t_k with the same weights. For infinite trains the weights must decay
/// like |t|^{−r} for the declared r (checked on samples, both as an upper
/// and a lower bound, since moment divergence decisions rely on it).
#[derive(Debug, Clone, PartialEq)]
pub struct AtomTrain {
    t0: f64,
    step: f64,
    count: TrainCount,
    weight: Expr,
    decay: f64,
    mirrored: bool,
    arg_negated: bool,
    /// Sampled bound on w_k·|t_k|^decay, with safety margin; 0 for finite trains.
    decay_coeff: f64,
}

/// Largest admissible finite train; larger families should be declared as
/// infinite trains with a decay exponent.
pub const MAX_FINITE_TRAIN: u64 = 1_000_000;

impl AtomTrain {
    pub fn new(
        t0: f64,
        step: f64,
        count: TrainCount,
        weight: Expr,
        decay: f64,
        mirrored: bool,
    ) -> Result<Self, MeasureError> {
        if !t0.is_finite() || !step.is_finite() || step == 0.0 {
            return Err(MeasureError::Invalid(
                "train requires finite t0 and nonzero finite step".into(),
            ));
        }
        // decay is meaningful for infinite trains only
        let decay = match count {
            TrainCount::Finite(_) => 0.0,
            TrainCount::Infinite => decay,
        };
        let mut train = Self {
            t0,
            step,
            count,
            weight,
            decay,
            mirrored,
            arg_negated: false,
            decay_coeff: 0.0,
        };
        match count {
            TrainCount::Finite(0) => {
                return Err(MeasureError::Invalid("finite train must have count >= 1".into()))
            }
            TrainCount::Finite(n) if n > MAX_FINITE_TRAIN => {
                return Err(MeasureError::Invalid(format!(
                    "finite train count {n} exceeds {MAX_FINITE_TRAIN}; declare an infinite train with a decay exponent"
                )))
            }
            TrainCount::Finite(n) => {
                let sample_end = n.min(10_000);
                for k in 0..sample_end {
                    train.check_weight(k)?;
                }
            }
            TrainCount::Infinite => {
                if !(decay > 1.0) {
                    return Err(MeasureError::Invalid(format!(
                        "infinite train needs decay exponent r > 1 for finite mass, got {decay}"
                    )));
                }
                for k in 0..100u64 {
                    train.check_weight(k)?;
                }
                // declared decay must be numerically sane: w_k |t_k|^r bounded
                // above and below away from zero over sampled indices
                let mut ratios = Vec::new();
                let mut k = 100u64;
                while k <= 10_000 {
                    let w = train.check_weight(k)?;
                    let t = train.position(k).abs();
                    let r = w * t.powf(decay);
                    if !r.is_finite() || r <= 0.0 {
                        return Err(MeasureError::Invalid(format!(
                            "weight at index {k} is inconsistent with decay exponent {decay}"
                        )));
                    }
                    ratios.push(r);
                    k = (k * 3 / 2).max(k + 1);
                }
                let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
                if hi / lo > 1e2 {
                    return Err(MeasureError::Invalid(format!(
                        "sampled w_k * |t_k|^{decay} varies by {:.1e}; declared decay exponent looks wrong",
                        hi / lo
                    )));
                }
                train.decay_coeff = hi * 4.0;
            }
        }
        Ok(train)
    }

    fn check_weight(&self, k: u64) -> Result<f64, MeasureError> {
        let w = self.weight_at(k).map_err(|e| {
            MeasureError::Invalid(format!("train weight at index {k}: {e}"))
        })?;
        if !(w > 0.0) {
            return Err(MeasureError::Invalid(format!(
                "train weight at index {k} is not positive: {w}"
            )));
        }
        Ok(w)
    }

    fn position(&self, k: u64) -> f64 {
        self.t0 + k as f64 * self.step
    }

    fn weight_at(&self, k: u64) -> Result<f64, crate::expr::EvalError> {
        let arg = self.position(k);
        self.weight.eval(if self.arg_negated { -arg } else { arg })
    }

    /// Sides of the train as (position progression, weight-argument progression).
    fn sides(&self) -> Vec<Side> {
        let sgn = if self.arg_negated { -1.0 } else { 1.0 };
        let primary = Side {
            pos0: self.t0,
            pos_step: self.step,
            warg0: sgn * self.t0,
            warg_step: sgn * self.step,
        };
        if self.mirrored {
            let mirror = Side {
                pos0: -self.t0,
                pos_step: -self.step,
                warg0: sgn * self.t0,
                warg_step: sgn * self.step,
            };
            vec![primary, mirror]
        } else {
            vec![primary]
        }
    }

    pub fn mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn count(&self) -> TrainCount {
        self.count
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// The weight as a function of the atom position, with any reflection
    /// folded into the expression tree.
    pub fn effective_weight_expr(&self) -> Expr {
        if self.arg_negated {
            negate_variable(&self.weight)
        } else {
            self.weight.clone()
        }
    }
}

/// Substitutes t ↦ −t in an expression.
fn negate_variable(e: &Expr) -> Expr {
    match e {
        Expr::Var => Expr::Neg(Box::new(Expr::Var)),
        Expr::Num(v) => Expr::Num(*v),
        Expr::Pi => Expr::Pi,
        Expr::Neg(a) => Expr::Neg(Box::new(negate_variable(a))),
        Expr::Abs(a) => Expr::Abs(Box::new(negate_variable(a))),
        Expr::Log(a) => Expr::Log(Box::new(negate_variable(a))),
        Expr::Exp(a) => Expr::Exp(Box::new(negate_variable(a))),
        Expr::Add(a, b) => Expr::Add(Box::new(negate_variable(a)), Box::new(negate_variable(b))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(negate_variable(a)), Box::new(negate_variable(b))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(negate_variable(a)), Box::new(negate_variable(b))),
        Expr::Div(a, b) => Expr::Div(Box::new(negate_variable(a)), Box::new(negate_variable(b))),
        Expr::Pow(a, b) => Expr::Pow(Box::new(negate_variable(a)), Box::new(negate_variable(b))),
    }
}

/// One side of a train: atom positions pos0 + k·pos_step with weights
/// evaluated at warg0 + k·warg_step.
#[derive(Debug, Clone, Copy)]
struct Side {
    pos0: f64,
    pos_step: f64,
    warg0: f64,
    warg_step: f64,
}

/// An absolutely continuous component dμ = ρ(t) dt on an interval whose ends
/// may be infinite. Unbounded ends require a declared tail exponent α > 1
/// with ρ(t) ≍ |t|^{−α}; an optional closed-form first moment can be declared
/// and is validated at construction, giving it exact provenance for the
/// classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityComponent {
    rho: Expr,
    lower: Option<f64>,
    upper: Option<f64>,
    tail_neg: Option<f64>,
    tail_pos: Option<f64>,
    declared_moment1: Option<f64>,
    arg_negated: bool,
    /// Sampled bounds on ρ(t)·|t|^α per unbounded side, with safety margin.
    tail_coeff_neg: f64,
    tail_coeff_pos: f64,
}

impl DensityComponent {
    pub fn new(
        rho: Expr,
        lower: Option<f64>,
        upper: Option<f64>,
        tail_neg: Option<f64>,
        tail_pos: Option<f64>,
        declared_moment1: Option<f64>,
    ) -> Result<Self, MeasureError> {
        if let (Some(a), Some(b)) = (lower, upper) {
            if !(a < b) {
                return Err(MeasureError::Invalid(format!(
                    "density support [{a}, {b}] is empty"
                )));
            }
        }
        if let Some(a) = lower {
            if !a.is_finite() {
                return Err(MeasureError::Invalid("finite support bound expected".into()));
            }
        }
        if let Some(b) = upper {
            if !b.is_finite() {
                return Err(MeasureError::Invalid("finite support bound expected".into()));
            }
        }
        match (upper, tail_pos) {
            (None, None) => {
                return Err(MeasureError::Invalid(
                    "support unbounded above requires tail_pos exponent".into(),
                ))
            }
            (None, Some(a)) if !(a > 1.0) => {
                return Err(MeasureError::Invalid(format!(
                    "tail_pos exponent must exceed 1 for finite mass, got {a}"
                )))
            }
            _ => {}
        }
        match (lower, tail_neg) {
            (None, None) => {
                return Err(MeasureError::Invalid(
                    "support unbounded below requires tail_neg exponent".into(),
                ))
            }
            (None, Some(a)) if !(a > 1.0) => {
                return Err(MeasureError::Invalid(format!(
                    "tail_neg exponent must exceed 1 for finite mass, got {a}"
                )))
            }
            _ => {}
        }
        let mut d = Self {
            rho,
            lower,
            upper,
            tail_neg,
            tail_pos,
            declared_moment1,
            arg_negated: false,
            tail_coeff_neg: 0.0,
            tail_coeff_pos: 0.0,
        };
        d.check_nonnegative()?;
        if upper.is_none() {
            d.tail_coeff_pos = 4.0 * d.check_tail(1.0, tail_pos.unwrap())?;
        }
        if lower.is_none() {
            d.tail_coeff_neg = 4.0 * d.check_tail(-1.0, tail_neg.unwrap())?;
        }
        if let Some(m1) = declared_moment1 {
            if !m1.is_finite() {
                return Err(MeasureError::Invalid("declared moment1 must be finite".into()));
            }
            if !d.side_integrability(1.0).abs_t_finite || !d.side_integrability(-1.0).abs_t_finite {
                return Err(MeasureError::Invalid(
                    "moment1 declared but |t| is not integrable per the declared tails".into(),
                ));
            }
            let mut ctx = QuadCtx::from_env();
            let computed = d
                .kernel_sum(
                    &KernelSpec::moment(1, false),
                    Region::All,
                    1e-10 * (1.0 + m1.abs()),
                    &mut ctx,
                )?;
            let slack = (1e-8 * (1.0 + m1.abs())).max(8.0 * computed.error);
            if (computed.value.re - m1).abs() > slack {
                return Err(MeasureError::Invalid(format!(
                    "declared moment1 = {m1} but quadrature gives {} (+/- {:.1e})",
                    computed.value.re, computed.error
                )));
            }
        }
        Ok(d)
    }

    fn rho_at(&self, t: f64) -> Result<f64, crate::expr::EvalError> {
        self.rho.eval(if self.arg_negated { -t } else { t })
    }

    pub fn lower(&self) -> Option<f64> {
        self.lower
    }

    pub fn upper(&self) -> Option<f64> {
        self.upper
    }

    pub fn tail_neg(&self) -> Option<f64> {
        self.tail_neg
    }

    pub fn tail_pos(&self) -> Option<f64> {
        self.tail_pos
    }

    pub fn declared_moment1(&self) -> Option<f64> {
        self.declared_moment1
    }

    /// The density as a function of position, with any reflection folded
    /// into the expression tree.
    pub fn effective_rho_expr(&self) -> Expr {
        if self.arg_negated {
            negate_variable(&self.rho)
        } else {
            self.rho.clone()
        }
    }

    /// Sample points spanning the (open) support.
    fn sample_points(&self, n: usize) -> Vec<f64> {
        let mut pts = Vec::with_capacity(n);
        let theta_of = |t: f64| t.atan();
        let lo = self.lower.map_or(-std::f64::consts::FRAC_PI_2, theta_of);
        let hi = self.upper.map_or(std::f64::consts::FRAC_PI_2, theta_of);
        for i in 1..=n {
            let th = lo + (hi - lo) * i as f64 / (n + 1) as f64;
            pts.push(th.tan());
        }
        pts
    }

    fn check_nonnegative(&self) -> Result<(), MeasureError> {
        for t in self.sample_points(1000) {
            let v = self.rho_at(t).map_err(|e| {
                MeasureError::Invalid(format!("density evaluation at t = {t}: {e}"))
            })?;
            if v < 0.0 {
                return Err(MeasureError::Invalid(format!(
                    "density is negative at t = {t}: {v}"
                )));
            }
        }
        Ok(())
    }

    /// Validates one declared tail exponent and returns the sampled bound on
    /// ρ(t)·|t|^α.
    fn check_tail(&self, dir: f64, alpha: f64) -> Result<f64, MeasureError> {
        let near = match dir {
            d if d > 0.0 => self.lower.map_or(0.0, |a| a.abs()),
            _ => self.upper.map_or(0.0, |b| b.abs()),
        };
        let lo = 1e3f64.max(2.0 * near + 10.0);
        let hi = lo * 1e3;
        let mut ratios = Vec::new();
        for i in 0..30 {
            let t = dir * lo * (hi / lo).powf(i as f64 / 29.0);
            let v = self.rho_at(t).map_err(|e| {
                MeasureError::Invalid(format!("density tail sample at t = {t}: {e}"))
            })?;
            let r = v * t.abs().powf(alpha);
            if !r.is_finite() || r <= 0.0 {
                return Err(MeasureError::Invalid(format!(
                    "density tail at t = {t} inconsistent with declared exponent {alpha}"
                )));
            }
            ratios.push(r);
        }
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().cloned().fold(0.0f64, f64::max);
        if max / min > 1e2 {
            return Err(MeasureError::Invalid(format!(
                "sampled rho(t)|t|^{alpha} varies by {:.1e}; declared tail exponent looks wrong",
                max / min
            )));
        }
        Ok(max)
    }

    /// Structural evenness about 0: symmetric support and ρ(t) = ρ(−t) on
    /// samples. Gives the component an exactly-zero first moment.
    fn structurally_even(&self) -> bool {
        let support_sym = match (self.lower, self.upper) {
            (None, None) => true,
            (Some(a), Some(b)) => a == -b,
            _ => false,
        };
        if !support_sym {
            return false;
        }
        for t in self.sample_points(1000) {
            let (Ok(a), Ok(b)) = (self.rho_at(t), self.rho_at(-t)) else {
                return false;
            };
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return false;
            }
        }
        true
    }

    fn side_integrability(&self, dir: f64) -> SideIntegrability {
        let tail = if dir > 0.0 {
            match self.upper {
                Some(_) => None,
                None => self.tail_pos,
            }
        } else {
            match self.lower {
                Some(_) => None,
                None => self.tail_neg,
            }
        };
        match tail {
            None => SideIntegrability {
                abs_t_finite: true,
                t2_finite: true,
            },
            Some(alpha) => SideIntegrability {
                abs_t_finite: alpha > 2.0,
                t2_finite: alpha > 3.0,
            },
        }
    }

    fn kernel_sum(
        &self,
        kern: &KernelSpec<'_>,
        region: Region,
        tol: f64,
        ctx: &mut QuadCtx,
    ) -> Result<Estimate, MeasureError> {
        let (lo, hi) = match region.clip(self.lower, self.upper) {
            Some(b) => b,
            None => return Ok(Estimate::zero()),
        };
        let opts = {
            let mut o = Adaptive::tol(tol);
            if kern.smooth_scale.is_finite() {
                o = o.with_min_width(kern.smooth_scale * 1e-3);
            }
            o
        };
        let f = |t: f64| -> Result<Complex64, QuadError> {
            let rho = self.rho_at(t).map_err(|e| QuadError::Integrand {
                at: t,
                message: e.to_string(),
            })?;
            Ok((kern.f)(t) * rho)
        };
        let mut est = quad::integrate_interval(f, lo, hi, kern.pole_x, opts, ctx)?;
        // account for mass beyond the reach of the substitution
        if hi.is_none() {
            est.error += invisible_tail(self.tail_pos.unwrap_or(f64::INFINITY), self.tail_coeff_pos, kern, TAN_REACH);
        }
        if lo.is_none() {
            est.error += invisible_tail(self.tail_neg.unwrap_or(f64::INFINITY), self.tail_coeff_neg, kern, TAN_REACH);
        }
        Ok(est)
    }
}

#[derive(Debug, Clone, Copy)]
struct SideIntegrability {
    abs_t_finite: bool,
    t2_finite: bool,
}

impl SideIntegrability {
    const FINITE: Self = Self {
        abs_t_finite: true,
        t2_finite: true,
    };

    fn and(self, other: Self) -> Self {
        Self {
            abs_t_finite: self.abs_t_finite && other.abs_t_finite,
            t2_finite: self.t2_finite && other.t2_finite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Atom(Atom),
    Train(AtomTrain),
    Density(DensityComponent),
}

/// Region of the line a moment is restricted to; `Neg`/`Pos` are the open
/// half-lines, so an atom at 0 belongs to neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Neg,
    Pos,
    All,
}

impl Region {
    fn contains(self, t: f64) -> bool {
        match self {
            Region::Neg => t < 0.0,
            Region::Pos => t > 0.0,
            Region::All => true,
        }
    }

    /// Intersects an interval with the region; None when empty.
    fn clip(self, lo: Option<f64>, hi: Option<f64>) -> Option<(Option<f64>, Option<f64>)> {
        match self {
            Region::All => Some((lo, hi)),
            Region::Pos => {
                if let Some(b) = hi {
                    if b <= 0.0 {
                        return None;
                    }
                }
                Some((Some(lo.map_or(0.0, |a| a.max(0.0))), hi))
            }
            Region::Neg => {
                if let Some(a) = lo {
                    if a >= 0.0 {
                        return None;
                    }
                }
                Some((lo, Some(hi.map_or(0.0, |b| b.min(0.0)))))
            }
        }
    }
}

/// A pointwise kernel t ↦ f(t) to be integrated against the measure, plus
/// the geometry the summation strategy needs: the projection of any complex
/// pole onto ℝ, its distance from the line, the kernel's spatial extent
/// (|z| for the Herglotz kernel), and a far-field bound
/// |f(t)| ≤ coeff·|t|^power used to account for mass beyond the reach of
/// the tan substitution (t ≈ 1.6e16 in f64).
pub(crate) struct KernelSpec<'a> {
    pub f: &'a dyn Fn(f64) -> Complex64,
    pub pole_x: Option<f64>,
    pub smooth_scale: f64,
    pub extent: f64,
    pub growth: (f64, f64),
}

/// Conservative lower bound on how far the tan substitution reaches.
const TAN_REACH: f64 = 1.0e16;

/// Bound on the part of a power-law tail that lies beyond the reach of the
/// substitution and is invisible to sampling.
fn invisible_tail(decay: f64, coeff: f64, kern: &KernelSpec<'_>, t_reach: f64) -> f64 {
    let (power, kcoeff) = kern.growth;
    let expo = decay - power - 1.0;
    if expo <= 0.0 || coeff == 0.0 {
        return if coeff == 0.0 { 0.0 } else { f64::INFINITY };
    }
    kcoeff * coeff * t_reach.powf(-expo) / expo
}

static ONE: fn(f64) -> Complex64 = |_t| Complex64::new(1.0, 0.0);
static T1: fn(f64) -> Complex64 = |t| Complex64::new(t, 0.0);
static T1_ABS: fn(f64) -> Complex64 = |t| Complex64::new(t.abs(), 0.0);
static T2: fn(f64) -> Complex64 = |t| Complex64::new(t * t, 0.0);

impl<'a> KernelSpec<'a> {
    pub fn mass() -> KernelSpec<'static> {
        KernelSpec {
            f: &ONE,
            pole_x: None,
            smooth_scale: f64::INFINITY,
            extent: 0.0,
            growth: (0.0, 1.0),
        }
    }

    pub fn moment(k: u8, absolute: bool) -> KernelSpec<'static> {
        let f: &'static dyn Fn(f64) -> Complex64 = match (k, absolute) {
            (1, false) => &T1,
            (1, true) => &T1_ABS,
            (2, _) => &T2,
            _ => unreachable!("moment order is 1 or 2"),
        };
        KernelSpec {
            f,
            pole_x: None,
            smooth_scale: f64::INFINITY,
            extent: 0.0,
            growth: (k as f64, 1.0),
        }
    }
}

impl Estimate {
    fn zero() -> Self {
        Estimate {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            abs_integral: 0.0,
        }
    }
}

/// Everything the classifier needs to know about a measure, decided from
/// declarations, structure, and (for finite values) numerics.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrabilityProfile {
    pub mass: f64,
    /// ∫|t| dμ < ∞.
    pub t_l1: bool,
    /// ∫ t dμ, present iff `t_l1`.
    pub moment1: Option<f64>,
    /// Whether `moment1` comes from closed-form provenance (atoms, finite
    /// trains, mirrored trains, even densities, declared density moments)
    /// rather than quadrature.
    pub moment1_exact: bool,
    pub t2_pos_finite: bool,
    pub t2_neg_finite: bool,
    pub abs_t_pos_finite: bool,
    pub abs_t_neg_finite: bool,
    pub symmetric: bool,
    pub support_upper: Option<f64>,
    pub support_lower: Option<f64>,
}

/// A finite positive measure, as a list of components. The empty list is the
/// zero measure (the associated map is then a pure translation).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    components: Vec<Component>,
    declared_symmetric: bool,
}

impl MeasureSpec {
    pub fn new(components: Vec<Component>, declared_symmetric: bool) -> Result<Self, MeasureError> {
        let m = Self {
            components,
            declared_symmetric,
        };
        if declared_symmetric {
            m.check_structural_symmetry()?;
        }
        if !m.is_zero() {
            // lenient tolerance: this is a sanity check, not a measurement
            let mass = m
                .sum_kernel(&KernelSpec::mass(), Region::All, RelTol(1e-6))?
                .value
                .re;
            if !mass.is_finite() || mass <= 0.0 {
                return Err(MeasureError::Invalid(format!(
                    "total mass must be positive and finite, got {mass}"
                )));
            }
        }
        Ok(m)
    }

    pub fn zero() -> Self {
        Self {
            components: Vec::new(),
            declared_symmetric: true,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn declared_symmetric(&self) -> bool {
        self.declared_symmetric
    }

    fn check_structural_symmetry(&self) -> Result<(), MeasureError> {
        let mut unpaired: Vec<&Atom> = Vec::new();
        for c in &self.components {
            match c {
                Component::Atom(a) => {
                    if a.t == 0.0 {
                        continue;
                    }
                    if let Some(i) = unpaired
                        .iter()
                        .position(|b| b.t == -a.t && b.w == a.w)
                    {
                        unpaired.swap_remove(i);
                    } else {
                        unpaired.push(a);
                    }
                }
                Component::Train(t) => {
                    if !t.mirrored {
                        return Err(MeasureError::Invalid(
                            "declared symmetric, but a train is not mirrored".into(),
                        ));
                    }
                }
                Component::Density(d) => {
                    if !d.structurally_even() {
                        return Err(MeasureError::Invalid(
                            "declared symmetric, but a density is not even with symmetric support"
                                .into(),
                        ));
                    }
                }
            }
        }
        if !unpaired.is_empty() {
            return Err(MeasureError::Invalid(format!(
                "declared symmetric, but {} atom(s) lack a mirror partner",
                unpaired.len()
            )));
        }
        Ok(())
    }

    /// Total mass, to relative accuracy 1e−10.
    pub fn total_mass(&self) -> Result<f64, MeasureError> {
        let est = self.sum_kernel(&KernelSpec::mass(), Region::All, RelTol(1e-10))?;
        Ok(est.value.re)
    }

    /// Mass restricted to an open half-line (atoms at 0 belong to neither).
    pub fn mass_in(&self, region: Region) -> Result<f64, MeasureError> {
        let est = self.sum_kernel(&KernelSpec::mass(), region, RelTol(1e-10))?;
        Ok(est.value.re)
    }

    /// k-th moment over a region. Finiteness is decided analytically from
    /// the declared tail data; when finite the value is computed to relative
    /// accuracy 1e−8.
    pub fn moment(
        &self,
        k: u8,
        region: Region,
        absolute: bool,
    ) -> Result<ExtendedReal, MeasureError> {
        assert!(k == 1 || k == 2, "moment order must be 1 or 2");
        let finite = self.components.iter().all(|c| {
            let side_pos = component_side(c, 1.0);
            let side_neg = component_side(c, -1.0);
            let fin = |s: SideIntegrability| if k == 1 { s.abs_t_finite } else { s.t2_finite };
            match region {
                Region::Pos => fin(side_pos),
                Region::Neg => fin(side_neg),
                Region::All => fin(side_pos) && fin(side_neg),
            }
        });
        if !finite {
            return Ok(ExtendedReal::PositiveInfinity);
        }
        let est = self.sum_kernel(&KernelSpec::moment(k, absolute), region, RelTol(1e-8))?;
        Ok(ExtendedReal::Finite(est.value.re))
    }

    /// The measure with every component reflected t ↦ −t. An involution.
    pub fn reflect(&self) -> MeasureSpec {
        let components = self
            .components
            .iter()
            .map(|c| match c {
                Component::Atom(a) => Component::Atom(Atom { t: -a.t, w: a.w }),
                Component::Train(t) => Component::Train(AtomTrain {
                    t0: -t.t0,
                    step: -t.step,
                    count: t.count,
                    weight: t.weight.clone(),
                    decay: t.decay,
                    mirrored: t.mirrored,
                    arg_negated: !t.arg_negated,
                    decay_coeff: t.decay_coeff,
                }),
                Component::Density(d) => Component::Density(DensityComponent {
                    rho: d.rho.clone(),
                    lower: d.upper.map(|b| -b),
                    upper: d.lower.map(|a| -a),
                    tail_neg: d.tail_pos,
                    tail_pos: d.tail_neg,
                    declared_moment1: d.declared_moment1.map(|m| -m),
                    arg_negated: !d.arg_negated,
                    tail_coeff_neg: d.tail_coeff_pos,
                    tail_coeff_pos: d.tail_coeff_neg,
                }),
            })
            .collect();
        MeasureSpec {
            components,
            declared_symmetric: self.declared_symmetric,
        }
    }

    /// Aggregated integrability data.
    pub fn integrability_profile(&self) -> Result<IntegrabilityProfile, MeasureError> {
        let mut pos = SideIntegrability::FINITE;
        let mut neg = SideIntegrability::FINITE;
        for c in &self.components {
            pos = pos.and(component_side(c, 1.0));
            neg = neg.and(component_side(c, -1.0));
        }
        let t_l1 = pos.abs_t_finite && neg.abs_t_finite;
        let (moment1, moment1_exact) = if t_l1 {
            let (v, exact) = self.first_moment_with_provenance()?;
            (Some(v), exact)
        } else {
            (None, false)
        };
        let mass = self.total_mass()?;
        let (mut support_lower, mut support_upper) = (Some(f64::INFINITY), Some(f64::NEG_INFINITY));
        for c in &self.components {
            let (lo, hi) = component_support(c);
            support_lower = match (support_lower, lo) {
                (Some(cur), Some(l)) => Some(cur.min(l)),
                _ => None,
            };
            support_upper = match (support_upper, hi) {
                (Some(cur), Some(h)) => Some(cur.max(h)),
                _ => None,
            };
        }
        if self.components.is_empty() {
            support_lower = None;
            support_upper = None;
        }
        Ok(IntegrabilityProfile {
            mass,
            t_l1,
            moment1,
            moment1_exact,
            t2_pos_finite: pos.t2_finite,
            t2_neg_finite: neg.t2_finite,
            abs_t_pos_finite: pos.abs_t_finite,
            abs_t_neg_finite: neg.abs_t_finite,
            symmetric: self.declared_symmetric,
            support_upper,
            support_lower,
        })
    }

    /// ∫ t dμ with an exactness flag; call only when t ∈ L¹.
    fn first_moment_with_provenance(&self) -> Result<(f64, bool), MeasureError> {
        let mut total = 0.0;
        let mut exact = true;
        for c in &self.components {
            match c {
                Component::Atom(a) => total += a.w * a.t,
                Component::Train(t) => {
                    if t.mirrored {
                        // paired atoms cancel exactly
                        continue;
                    }
                    match t.count {
                        TrainCount::Finite(n) => {
                            for k in 0..n {
                                let w = t.weight_at(k).map_err(|e| {
                                    MeasureError::Integrand(e.to_string())
                                })?;
                                total += w * t.position(k);
                            }
                        }
                        TrainCount::Infinite => {
                            let mut ctx = QuadCtx::from_env();
                            let est = train_kernel_sum(
                                t,
                                &KernelSpec::moment(1, false),
                                Region::All,
                                1e-12,
                                &mut ctx,
                            )?;
                            total += est.value.re;
                            exact = false;
                        }
                    }
                }
                Component::Density(d) => {
                    if let Some(m1) = d.declared_moment1 {
                        total += m1;
                    } else if d.structurally_even() {
                        // contributes exactly zero
                    } else {
                        let mut ctx = QuadCtx::from_env();
                        let est = d.kernel_sum(
                            &KernelSpec::moment(1, false),
                            Region::All,
                            1e-12,
                            &mut ctx,
                        )?;
                        total += est.value.re;
                        exact = false;
                    }
                }
            }
        }
        Ok((total, exact))
    }

    /// Integrates a kernel against the measure with a relative tolerance,
    /// summing over components. Used by the moment operations and by the
    /// Herglotz evaluator.
    pub(crate) fn sum_kernel(
        &self,
        kern: &KernelSpec<'_>,
        region: Region,
        tol: RelTol,
    ) -> Result<Estimate, MeasureError> {
        let mut ctx = QuadCtx::from_env();
        // first pass at a loose tolerance to learn the scale
        let rough = self.sum_kernel_abs(kern, region, 1e-5, &mut ctx)?;
        let scale = rough.value.norm().max(rough.abs_integral * 1e-3);
        let tol_abs = (tol.0 * scale).max(1e-15);
        if rough.error <= tol_abs {
            return Ok(rough);
        }
        let est = self.sum_kernel_abs(kern, region, tol_abs, &mut ctx)?;
        let floor = 100.0 * f64::EPSILON * est.abs_integral;
        if est.error > tol_abs.max(floor) * 4.0 {
            return Err(MeasureError::Quadrature(QuadratureFailure {
                requested: tol_abs,
                achieved: est.error,
                evals: ctx.used,
            }));
        }
        Ok(est)
    }

    pub(crate) fn sum_kernel_abs(
        &self,
        kern: &KernelSpec<'_>,
        region: Region,
        tol_abs: f64,
        ctx: &mut QuadCtx,
    ) -> Result<Estimate, MeasureError> {
        let mut total = Estimate::zero();
        let n = self.components.len().max(1);
        for c in &self.components {
            let est = match c {
                Component::Atom(a) => {
                    if region.contains(a.t) {
                        let v = (kern.f)(a.t) * a.w;
                        Estimate {
                            value: v,
                            error: 2.0 * f64::EPSILON * v.norm(),
                            abs_integral: v.norm(),
                        }
                    } else {
                        Estimate::zero()
                    }
                }
                Component::Train(t) => {
                    train_kernel_sum(t, kern, region, tol_abs / n as f64, ctx)?
                }
                Component::Density(d) => {
                    d.kernel_sum(kern, region, tol_abs / n as f64, ctx)?
                }
            };
            total.value += est.value;
            total.error += est.error;
            total.abs_integral += est.abs_integral;
        }
        Ok(total)
    }
}

/// Relative tolerance request for kernel sums.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelTol(pub f64);

fn component_side(c: &Component, dir: f64) -> SideIntegrability {
    match c {
        Component::Atom(_) => SideIntegrability::FINITE,
        Component::Density(d) => d.side_integrability(dir),
        Component::Train(t) => {
            if matches!(t.count, TrainCount::Finite(_)) {
                return SideIntegrability::FINITE;
            }
            // which directions carry infinitely many atoms
            let primary_dir = t.step.signum();
            let unbounded = dir == primary_dir || (t.mirrored && dir == -primary_dir);
            if unbounded {
                SideIntegrability {
                    abs_t_finite: t.decay > 2.0,
                    t2_finite: t.decay > 3.0,
                }
            } else {
                SideIntegrability::FINITE
            }
        }
    }
}

fn component_support(c: &Component) -> (Option<f64>, Option<f64>) {
    match c {
        Component::Atom(a) => (Some(a.t), Some(a.t)),
        Component::Density(d) => (d.lower, d.upper),
        Component::Train(t) => {
            let (lo, hi) = match t.count {
                TrainCount::Finite(n) => {
                    let last = t.position(n - 1);
                    (Some(t.t0.min(last)), Some(t.t0.max(last)))
                }
                TrainCount::Infinite => {
                    if t.step > 0.0 {
                        (Some(t.t0), None)
                    } else {
                        (None, Some(t.t0))
                    }
                }
            };
            if t.mirrored {
                let ml = hi.map(|h| -h);
                let mh = lo.map(|l| -l);
                (
                    match (lo, ml) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        _ => None,
                    },
                    match (hi, mh) {
                        (Some(a), Some(b)) => Some(a.max(b)),
                        _ => None,
                    },
                )
            } else {
                (lo, hi)
            }
        }
    }
}

/// Indices of one train side whose positions land in `region`. The position
/// progression is monotone, so the index set is a contiguous range
/// `[lo, hi)`; `hi = None` means unbounded.
fn side_region_indices(side: &Side, count: TrainCount, region: Region) -> (u64, Option<u64>) {
    let limit = match count {
        TrainCount::Finite(n) => Some(n),
        TrainCount::Infinite => None,
    };
    if matches!(region, Region::All) {
        return (0, limit);
    }
    let want_pos = matches!(region, Region::Pos);
    let going_up = side.pos_step > 0.0;
    // crossing index: positions switch sign at most once
    let cross = -side.pos0 / side.pos_step; // position zero at this real index
    let first_in = |k: u64| -> bool {
        let p = side.pos0 + k as f64 * side.pos_step;
        if want_pos {
            p > 0.0
        } else {
            p < 0.0
        }
    };
    if (going_up && want_pos) || (!going_up && !want_pos) {
        // region is reached for large k
        let mut k = cross.floor().max(0.0) as u64;
        while !first_in(k) {
            k += 1;
        }
        let k = if k > 0 && first_in(k - 1) { k - 1 } else { k };
        let lo = k.min(limit.unwrap_or(u64::MAX));
        (lo, limit)
    } else {
        // region covers small k only
        if !first_in(0) {
            return (0, Some(0));
        }
        let mut k = cross.ceil().max(0.0) as u64 + 1;
        if let Some(n) = limit {
            k = k.min(n);
        }
        while k > 0 && !first_in(k - 1) {
            k -= 1;
        }
        (0, Some(k))
    }
}

/// Kernel sum over one train. Direct head plus Euler–Maclaurin tail for
/// infinite sides; the head is sized so the tail boundary sits far from the
/// kernel's pole relative to the step.
fn train_kernel_sum(
    t: &AtomTrain,
    kern: &KernelSpec<'_>,
    region: Region,
    tol_abs: f64,
    ctx: &mut QuadCtx,
) -> Result<Estimate, MeasureError> {
    let mut total = Estimate::zero();
    let sides = t.sides();
    let per_side = tol_abs / sides.len() as f64;
    for side in &sides {
        let est = side_kernel_sum(t, side, kern, region, per_side, ctx)?;
        total.value += est.value;
        total.error += est.error;
        total.abs_integral += est.abs_integral;
    }
    Ok(total)
}

fn side_kernel_sum(
    t: &AtomTrain,
    side: &Side,
    kern: &KernelSpec<'_>,
    region: Region,
    tol_abs: f64,
    ctx: &mut QuadCtx,
) -> Result<Estimate, MeasureError> {
    let (k_lo, k_hi) = side_region_indices(side, t.count, region);
    if let Some(hi) = k_hi {
        if hi <= k_lo {
            return Ok(Estimate::zero());
        }
    }
    let weight_of = |u: f64| -> Result<f64, QuadError> {
        let arg = side.warg0 + u * side.warg_step;
        t.weight.eval(arg).map_err(|e| QuadError::Integrand {
            at: arg,
            message: e.to_string(),
        })
    };
    let term = |u: f64| -> Result<Complex64, QuadError> {
        let w = weight_of(u)?;
        let pos = side.pos0 + u * side.pos_step;
        Ok((kern.f)(pos) * w)
    };
    let step = side.pos_step.abs();

    match k_hi {
        Some(hi) => {
            // finite index range: direct when short, segment-EM when long
            let len = hi - k_lo;
            if len <= 100_000 {
                direct_sum(&term, k_lo, hi, ctx)
            } else {
                let head_end = k_lo + 64;
                let mut est = direct_sum(&term, k_lo, head_end, ctx)?;
                let opts = Adaptive::tol(tol_abs * 0.5);
                let feature = em_feature(side, kern);
                let seg = quad::em_segment(
                    &term,
                    head_end as f64,
                    (hi - 1) as f64,
                    feature,
                    opts,
                    ctx,
                )?;
                est.value += seg.value;
                est.error += seg.error;
                est.abs_integral += seg.abs_integral;
                Ok(est)
            }
        }
        None => {
            // infinite side: 64 head terms put the Euler-Maclaurin boundary
            // where the weights are already flat; a pole close to the line
            // additionally forces direct summation out past the pole region
            let head_len: u64 = if kern.pole_x.is_none() || kern.smooth_scale >= 30.0 * step {
                64
            } else {
                let reach = (2.0 * kern.extent).max(side.pos0.abs() + 64.0 * step);
                let idx = ((reach - side.pos0.abs()) / step).ceil().max(0.0);
                if idx > 4.0e6 {
                    return Err(MeasureError::Quadrature(QuadratureFailure {
                        requested: tol_abs,
                        achieved: f64::INFINITY,
                        evals: ctx.used,
                    }));
                }
                64 + idx as u64
            };
            let head_end = k_lo + head_len;
            let mut est = direct_sum(&term, k_lo, head_end, ctx)?;
            let opts = Adaptive::tol(tol_abs * 0.5);
            let feature = em_feature(side, kern);
            let tail = quad::em_tail(&term, head_end as f64, feature, opts, ctx)?;
            est.value += tail.value;
            est.error += tail.error;
            est.abs_integral += tail.abs_integral;
            // atoms beyond the substitution's reach
            est.error +=
                invisible_tail(t.decay, t.decay_coeff, kern, step * TAN_REACH) / step;
            Ok(est)
        }
    }
}

fn em_feature(side: &Side, kern: &KernelSpec<'_>) -> Option<f64> {
    kern.pole_x.map(|x| (x - side.pos0) / side.pos_step)
}

fn direct_sum(
    term: &dyn Fn(f64) -> Result<Complex64, QuadError>,
    from: u64,
    to: u64,
    ctx: &mut QuadCtx,
) -> Result<Estimate, MeasureError> {
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    ctx.used += to - from;
    for k in from..to {
        let v = term(k as f64)?;
        value += v;
        abs += v.norm();
    }
    Ok(Estimate {
        value,
        error: 4.0 * f64::EPSILON * abs,
        abs_integral: abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn ex1_density() -> DensityComponent {
        DensityComponent::new(
            Expr::parse("1/(pi*(1+t^2)^2)").unwrap(),
            None,
            None,
            Some(4.0),
            Some(4.0),
            None,
        )
        .unwrap()
    }

    fn ex2_density() -> DensityComponent {
        DensityComponent::new(
            Expr::parse("1/((1+t^2)*t)").unwrap(),
            Some(1.0),
            None,
            None,
            Some(3.0),
            Some(std::f64::consts::FRAC_PI_4),
        )
        .unwrap()
    }

    fn ex3_train() -> AtomTrain {
        AtomTrain::new(
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::PI,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^2)").unwrap(),
            2.0,
            true,
        )
        .unwrap()
    }

    fn ex4_density() -> DensityComponent {
        DensityComponent::new(
            Expr::parse("1/(1+t^2)").unwrap(),
            None,
            Some(0.0),
            Some(2.0),
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn atom_validation() {
        assert!(Atom::new(0.0, 2.0).is_ok());
        assert!(Atom::new(0.0, 0.0).is_err());
        assert!(Atom::new(0.0, -1.0).is_err());
        assert!(Atom::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn single_atom_mass() {
        let m = MeasureSpec::new(vec![Component::Atom(Atom::new(0.0, 2.0).unwrap())], true).unwrap();
        assert_eq!(m.total_mass().unwrap(), 2.0);
    }

    #[test]
    fn empty_measure_mass_is_zero() {
        let m = MeasureSpec::zero();
        assert_eq!(m.total_mass().unwrap(), 0.0);
    }

    #[test]
    fn ex1_mass_is_half() {
        let m = MeasureSpec::new(vec![Component::Density(ex1_density())], true).unwrap();
        let mass = m.total_mass().unwrap();
        assert!((mass - 0.5).abs() < 1e-10 * 0.5, "{mass}");
    }

    #[test]
    fn ex3_mass_is_tanh1() {
        let m = MeasureSpec::new(vec![Component::Train(ex3_train())], true).unwrap();
        let mass = m.total_mass().unwrap();
        assert!((mass - 1.0f64.tanh()).abs() < 1e-10, "{mass}");
    }

    #[test]
    fn ex2_moments() {
        let m = MeasureSpec::new(vec![Component::Density(ex2_density())], false).unwrap();
        // mass = log(2)/2
        let mass = m.total_mass().unwrap();
        assert!((mass - 0.5 * 2.0f64.ln()).abs() < 1e-10, "{mass}");
        let m1 = m.moment(1, Region::All, false).unwrap();
        assert!((m1.finite().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-8);
        assert_eq!(m.moment(2, Region::All, false).unwrap(), ExtendedReal::PositiveInfinity);
        assert_eq!(m.moment(2, Region::Pos, false).unwrap(), ExtendedReal::PositiveInfinity);
        let neg = m.moment(2, Region::Neg, false).unwrap();
        assert_eq!(neg.finite().unwrap(), 0.0);
    }

    #[test]
    fn ex1_profile() {
        let m = MeasureSpec::new(vec![Component::Density(ex1_density())], true).unwrap();
        let p = m.integrability_profile().unwrap();
        assert!(p.t_l1);
        assert_eq!(p.moment1, Some(0.0));
        assert!(p.moment1_exact);
        assert!(p.t2_pos_finite && p.t2_neg_finite);
        assert!(p.symmetric);
        assert_eq!(p.support_upper, None);
    }

    #[test]
    fn ex3_profile() {
        let m = MeasureSpec::new(vec![Component::Train(ex3_train())], true).unwrap();
        let p = m.integrability_profile().unwrap();
        assert!(p.symmetric);
        assert!(!p.t_l1);
        assert_eq!(p.moment1, None);
        assert_eq!(
            m.moment(1, Region::All, true).unwrap(),
            ExtendedReal::PositiveInfinity
        );
        assert_eq!(p.support_upper, None);
        assert_eq!(p.support_lower, None);
    }

    #[test]
    fn ex4_profile() {
        let m = MeasureSpec::new(vec![Component::Density(ex4_density())], false).unwrap();
        let p = m.integrability_profile().unwrap();
        assert!(!p.abs_t_neg_finite);
        assert!(p.abs_t_pos_finite);
        assert!(p.t2_pos_finite);
        assert!(!p.t2_neg_finite);
        assert_eq!(p.support_upper, Some(0.0));
        assert_eq!(p.support_lower, None);
        // mass = pi/2
        assert!((p.mass - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn reflect_involution_and_profile_swap() {
        let m = MeasureSpec::new(
            vec![
                Component::Density(ex4_density()),
                Component::Atom(Atom::new(1.5, 0.25).unwrap()),
            ],
            false,
        )
        .unwrap();
        let r = m.reflect();
        assert_eq!(r.reflect(), m);
        let p = m.integrability_profile().unwrap();
        let q = r.integrability_profile().unwrap();
        assert_eq!(q.support_lower, Some(-1.5));
        assert_eq!(q.abs_t_pos_finite, p.abs_t_neg_finite);
        assert_eq!(q.t2_neg_finite, p.t2_pos_finite);
        assert!((p.mass - q.mass).abs() < 1e-10);
    }

    #[test]
    fn reflect_of_symmetric_keeps_profile() {
        let m = MeasureSpec::new(vec![Component::Train(ex3_train())], true).unwrap();
        let r = m.reflect();
        let p = m.integrability_profile().unwrap();
        let q = r.integrability_profile().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn symmetric_declaration_is_checked() {
        // lopsided atom pair must be rejected
        let err = MeasureSpec::new(
            vec![
                Component::Atom(Atom::new(1.0, 1.0).unwrap()),
                Component::Atom(Atom::new(-1.0, 2.0).unwrap()),
            ],
            true,
        );
        assert!(err.is_err());
        // proper pair passes
        let ok = MeasureSpec::new(
            vec![
                Component::Atom(Atom::new(1.0, 1.0).unwrap()),
                Component::Atom(Atom::new(-1.0, 1.0).unwrap()),
            ],
            true,
        );
        assert!(ok.is_ok());
        let err = MeasureSpec::new(vec![Component::Density(ex4_density())], true);
        assert!(err.is_err());
    }

    #[test]
    fn train_decay_sanity_rejects_lies() {
        // weights ~ t^-2 but declared r = 4
        let err = AtomTrain::new(
            1.0,
            1.0,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^2)").unwrap(),
            4.0,
            false,
        );
        assert!(err.is_err());
        // r <= 1 rejected outright
        let err = AtomTrain::new(
            1.0,
            1.0,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^2)").unwrap(),
            0.9,
            false,
        );
        assert!(err.is_err());
    }

    #[test]
    fn declared_moment1_is_validated() {
        let bad = DensityComponent::new(
            Expr::parse("1/((1+t^2)*t)").unwrap(),
            Some(1.0),
            None,
            None,
            Some(3.0),
            Some(1.0), // truth is pi/4
        );
        assert!(bad.is_err());
    }

    #[test]
    fn mass_splits_across_regions() {
        let m = MeasureSpec::new(
            vec![
                Component::Atom(Atom::new(0.0, 0.5).unwrap()),
                Component::Density(ex1_density()),
                Component::Train(ex3_train()),
            ],
            true,
        )
        .unwrap();
        let total = m.total_mass().unwrap();
        let neg = m.mass_in(Region::Neg).unwrap();
        let pos = m.mass_in(Region::Pos).unwrap();
        let zero_atoms = 0.5;
        assert!(
            (total - (neg + pos + zero_atoms)).abs() < 1e-10 * total,
            "{total} vs {neg} + {pos} + {zero_atoms}"
        );
    }

    #[test]
    fn symmetric_l1_measure_has_zero_first_moment() {
        // mirrored train with fast decay: t in L1
        let train = AtomTrain::new(
            1.0,
            1.0,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^4)").unwrap(),
            4.0,
            true,
        )
        .unwrap();
        let m = MeasureSpec::new(vec![Component::Train(train)], true).unwrap();
        let p = m.integrability_profile().unwrap();
        assert!(p.t_l1);
        assert_eq!(p.moment1, Some(0.0));
        assert!(p.moment1_exact);
        let v = m.moment(1, Region::All, false).unwrap().finite().unwrap();
        assert!(v.abs() < 1e-8);
    }

    #[test]
    fn one_sided_train_moment_matches_reference() {
        // sum_{k>=0} t_k/(1+t_k^4), t_k = 1 + k: reference by large direct sum
        let train = AtomTrain::new(
            1.0,
            1.0,
            TrainCount::Infinite,
            Expr::parse("1/(1+t^4)").unwrap(),
            4.0,
            false,
        )
        .unwrap();
        let m = MeasureSpec::new(vec![Component::Train(train)], false).unwrap();
        let got = m.moment(1, Region::All, false).unwrap().finite().unwrap();
        let mut reference = 0.0;
        for k in 0..2_000_000u64 {
            let t = 1.0 + k as f64;
            reference += t / (1.0 + t.powi(4));
        }
        // remaining tail of the reference is ~ 1/(2 * 2e6^2)
        assert!((got - reference).abs() < 2e-7, "{got} vs {reference}");
    }

    #[test]
    fn region_moments_of_mirrored_train() {
        let m = MeasureSpec::new(vec![Component::Train(ex3_train())], true).unwrap();
        // t^2 infinite on both sides for r = 2
        assert_eq!(m.moment(2, Region::Pos, false).unwrap(), ExtendedReal::PositiveInfinity);
        assert_eq!(m.moment(2, Region::Neg, false).unwrap(), ExtendedReal::PositiveInfinity);
    }
}
