//! Orbit computation and the empirical diagnostics: pseudo-hyperbolic step
//! sequence, the Pommerenke limit b = lim (x_{n+1} − x_n)/y_n, y-growth,
//! tangentiality of escape, angular and drift probes along the imaginary
//! axis, and Abel-equation residuals.

use crate::halfplane::{pseudo_hyperbolic, HPoint};
use crate::herglotz::{eval_with_bound, HerglotzError, ParabolicMap};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Orbits stop with an overflow flag once |z_n| exceeds this.
pub const ORBIT_OVERFLOW: f64 = 1e300;

/// Default empirical threshold under which a tail of d_n counts as "going
/// to zero". CLI-tunable.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-3;

/// Relative decrease of d_n over the plateau window below which the step
/// sequence counts as stalled.
pub const PLATEAU_RELATIVE_DECREASE: f64 = 1e-4;

/// |b| below which the Pommerenke estimate counts as converged-to-zero.
/// Derived against the golden corpus at n = 1e5.
pub const B_ZERO_THRESHOLD: f64 = 2e-3;

/// Per-step slope of log y (over the trailing window) above which y counts
/// as diverging.
pub const Y_DIVERGENCE_SLOPE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("orbit needs at least one step")]
    EmptyOrbit,
    #[error("trace is invalid for this diagnostic: {0}")]
    InvalidTrace(String),
    #[error("degenerate base step |z_(k+1) - z_k| < 1e-14 at k = {0}")]
    DegenerateStep(usize),
    #[error(transparent)]
    Eval(#[from] HerglotzError),
}

/// Why an orbit stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitAbort {
    /// Quadrature could not meet the per-step tolerance.
    Quadrature { at_step: usize },
    /// |z_n| exceeded the overflow bound.
    Overflow { at_step: usize },
}

/// An orbit z_0..z_N with its derived sequences. `steps[k]` is the
/// pseudo-hyperbolic distance ρ(z_{k+1}, z_k), `b_seq[k]` is
/// (x_{k+1} − x_k)/y_k, `y_ratio[k]` is y_{k+1}/y_k, and `args[k]` is
/// arg z_k.
#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub points: Vec<HPoint>,
    pub steps: Vec<f64>,
    pub b_seq: Vec<f64>,
    pub y_ratio: Vec<f64>,
    pub args: Vec<f64>,
    pub eval_tol: f64,
    pub accumulated_error: f64,
    pub abort: Option<OrbitAbort>,
}

impl OrbitTrace {
    /// Number of completed steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_valid(&self) -> bool {
        self.abort.is_none()
    }

    /// Writes the trace as CSV with columns n,x,y,d,b,y_ratio,arg. The last
    /// row has no derived entries. Locale-independent: '.' decimal point,
    /// newline-terminated rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,x,y,d,b,y_ratio,arg")?;
        for (k, p) in self.points.iter().enumerate() {
            if k < self.steps.len() {
                writeln!(
                    w,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    k, p.x(), p.y(), self.steps[k], self.b_seq[k], self.y_ratio[k], self.args[k]
                )?;
            } else {
                writeln!(w, "{},{:.17e},{:.17e},,,,{:.17e}", k, p.x(), p.y(), self.args[k])?;
            }
        }
        Ok(())
    }
}

/// Iterates f from z0 for n steps. A quadrature failure or overflow aborts
/// the orbit; the partial trace is returned with the abort flagged rather
/// than discarded. The per-step tolerance is tol/n, floored at the machine
/// resolution of |z_n|-scale arithmetic.
pub fn orbit(f: &ParabolicMap, z0: HPoint, n: usize, tol: f64) -> Result<OrbitTrace, DynamicsError> {
    if n == 0 {
        return Err(DynamicsError::EmptyOrbit);
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut args = Vec::with_capacity(n + 1);
    let mut steps = Vec::with_capacity(n);
    let mut b_seq = Vec::with_capacity(n);
    let mut y_ratio = Vec::with_capacity(n);
    points.push(z0);
    args.push(z0.arg());
    let mut accumulated_error = 0.0;
    let mut abort = None;
    let mut z = z0;
    let base_tol = tol / n as f64;
    for k in 0..n {
        let step_tol = base_tol.max(48.0 * f64::EPSILON * (1.0 + z.abs()));
        let (w, err) = match eval_with_bound(f, z, step_tol) {
            Ok(r) => r,
            Err(HerglotzError::Measure(crate::measure::MeasureError::Quadrature(_))) => {
                abort = Some(OrbitAbort::Quadrature { at_step: k });
                break;
            }
            Err(e) => return Err(e.into()),
        };
        accumulated_error += err;
        steps.push(pseudo_hyperbolic(w, z));
        b_seq.push((w.x() - z.x()) / z.y());
        y_ratio.push(w.y() / z.y());
        points.push(w);
        args.push(w.arg());
        if w.abs() > ORBIT_OVERFLOW {
            abort = Some(OrbitAbort::Overflow { at_step: k });
            break;
        }
        z = w;
    }
    Ok(OrbitTrace {
        points,
        steps,
        b_seq,
        y_ratio,
        args,
        eval_tol: tol,
        accumulated_error,
        abort,
    })
}

/// Pommerenke's limit estimate with its convergence diagnosis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PommerenkeB {
    pub estimate: f64,
    pub dispersion: f64,
    pub converged: bool,
}

fn tail_slice(xs: &[f64]) -> &[f64] {
    let m = (xs.len() / 10).max(10).min(xs.len());
    &xs[xs.len() - m..]
}

/// Tail average of (x_{k+1} − x_k)/y_k over the last 10% of the orbit.
/// `converged` when the tail dispersion is below 10% of the estimate or the
/// estimate is below the zero threshold.
pub fn pommerenke_b(trace: &OrbitTrace) -> Result<PommerenkeB, DynamicsError> {
    if !trace.is_valid() {
        return Err(DynamicsError::InvalidTrace("orbit aborted".into()));
    }
    if trace.len() < 100 {
        return Err(DynamicsError::InvalidTrace(format!(
            "need at least 100 steps, got {}",
            trace.len()
        )));
    }
    let tail = tail_slice(&trace.b_seq);
    let estimate = tail.iter().sum::<f64>() / tail.len() as f64;
    let min = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dispersion = 0.5 * (max - min);
    let converged = dispersion < 0.1 * estimate.abs() || estimate.abs() < B_ZERO_THRESHOLD;
    Ok(PommerenkeB {
        estimate,
        dispersion,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepVerdict {
    ZeroHS,
    PositiveHS,
    Inconclusive,
}

/// Direction of tangential escape, when the argument tail shows one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Tangential {
    TowardZero,
    TowardPi,
}

/// The empirical classification of one orbit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalVerdict {
    pub verdict: StepVerdict,
    pub d_tail: f64,
    pub b_estimate: f64,
    pub y_final: f64,
    pub y_diverging: bool,
    pub tangential: Option<Tangential>,
}

/// Decides zero vs positive hyperbolic step from the computed trace alone.
///
/// ZeroHS: the step tail is below `zero_threshold` and still decreasing.
/// PositiveHS: the step sequence has stalled (relative decrease below 1e−4
/// over the window) above the threshold. Anything else is Inconclusive.
/// The y-divergence and tangentiality observations are recorded as
/// corroborating evidence but do not decide the verdict (boundedness of y
/// characterizes PHS only under t ∈ L¹).
pub fn empirical_step(
    trace: &OrbitTrace,
    zero_threshold: f64,
    plateau_window: usize,
) -> Result<EmpiricalVerdict, DynamicsError> {
    if !trace.is_valid() {
        return Err(DynamicsError::InvalidTrace("orbit aborted".into()));
    }
    let n = trace.len();
    if n < plateau_window.max(10) {
        return Err(DynamicsError::InvalidTrace(format!(
            "trace of length {n} is shorter than the plateau window {plateau_window}"
        )));
    }
    let d = &trace.steps;
    let tail = &d[n - plateau_window.max(10)..];
    let d_tail = tail.iter().sum::<f64>() / tail.len() as f64;
    let d_start = d[n - plateau_window.max(10)];
    let d_end = d[n - 1];
    let rel_decrease = if d_start > 0.0 {
        (d_start - d_end) / d_start
    } else {
        0.0
    };
    let still_decreasing = rel_decrease >= PLATEAU_RELATIVE_DECREASE;

    let b_estimate = pommerenke_b(trace).map(|b| b.estimate).unwrap_or(f64::NAN);
    let y_final = trace.points.last().unwrap().y();

    // log-y slope over the trailing decade
    let window = (n / 10).max(2);
    let y0 = trace.points[n - window].y();
    let slope = (y_final.ln() - y0.ln()) / window as f64;
    let y_diverging = slope > Y_DIVERGENCE_SLOPE;

    let args_tail = tail_slice(&trace.args);
    let arg_mean = args_tail.iter().sum::<f64>() / args_tail.len() as f64;
    let tangential = if arg_mean < 0.15 {
        Some(Tangential::TowardZero)
    } else if arg_mean > std::f64::consts::PI - 0.15 {
        Some(Tangential::TowardPi)
    } else {
        None
    };

    let verdict = if d_tail < zero_threshold && still_decreasing {
        StepVerdict::ZeroHS
    } else if d_tail > zero_threshold && !still_decreasing {
        StepVerdict::PositiveHS
    } else {
        StepVerdict::Inconclusive
    };

    Ok(EmpiricalVerdict {
        verdict,
        d_tail,
        b_estimate,
        y_final,
        y_diverging,
        tangential,
    })
}

/// Values i y (f(iy) − iy) along a grid of heights. For t ∈ L²(μ) with
/// balanced drift these converge to −∫(1+t²)dμ; otherwise they escape.
pub fn angular_probe(f: &ParabolicMap, y_grid: &[f64]) -> Result<Vec<Complex64>, DynamicsError> {
    assert!(!y_grid.is_empty(), "probe grid must not be empty");
    let mut out = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let z = HPoint::new(0.0, y).map_err(|e| DynamicsError::InvalidTrace(e.to_string()))?;
        let tol = (1e-7 / y.max(1.0)).min(1e-10);
        let w = crate::herglotz::eval(f, z, tol)?;
        let iy = Complex64::new(0.0, y);
        out.push(iy * (w.to_complex() - iy));
    }
    Ok(out)
}

/// Values f(iy) − iy along a grid; under t ∈ L¹ these converge to β̃.
pub fn drift_probe(f: &ParabolicMap, y_grid: &[f64]) -> Result<Vec<Complex64>, DynamicsError> {
    assert!(!y_grid.is_empty(), "probe grid must not be empty");
    let mut out = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let z = HPoint::new(0.0, y).map_err(|e| DynamicsError::InvalidTrace(e.to_string()))?;
        let tol = (1e-7 / y.max(1.0)).min(1e-10);
        let w = crate::herglotz::eval(f, z, tol)?;
        out.push(w.to_complex() - z.to_complex());
    }
    Ok(out)
}

/// Residuals r_k = |h_k(f(z)) − h_k(z) − 1| of the Baker–Pommerenke
/// quotients h_k(w) = (f^k(w) − z_k)/(z_{k+1} − z_k), where z_k is the orbit
/// of z0. For maps whose measure lives on a half-line these decay to zero.
pub fn abel_residual(
    f: &ParabolicMap,
    z: HPoint,
    z0: HPoint,
    n: usize,
) -> Result<Vec<f64>, DynamicsError> {
    if n < 2 {
        return Err(DynamicsError::InvalidTrace("need n >= 2".into()));
    }
    if z == z0 {
        return Err(DynamicsError::InvalidTrace(
            "probe point must differ from the base point".into(),
        ));
    }
    let tol = 1e-9;
    let upper = orbit(f, z, n + 1, tol)?;
    let base = orbit(f, z0, n + 1, tol)?;
    if !upper.is_valid() || !base.is_valid() {
        return Err(DynamicsError::InvalidTrace("orbit aborted".into()));
    }
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let dz = upper.points[k + 1].to_complex() - upper.points[k].to_complex();
        let dw = base.points[k + 1].to_complex() - base.points[k].to_complex();
        if dw.norm() < 1e-14 {
            return Err(DynamicsError::DegenerateStep(k));
        }
        out.push((dz / dw - 1.0).norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::measure::{Component, DensityComponent, MeasureSpec};

    fn translation(beta: f64) -> ParabolicMap {
        ParabolicMap::new(beta, MeasureSpec::zero()).unwrap()
    }

    fn ex1_map(beta: f64) -> ParabolicMap {
        let mu = MeasureSpec::new(
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
        .unwrap();
        ParabolicMap::new(beta, mu).unwrap()
    }

    #[test]
    fn translation_orbit_pins() {
        let f = translation(1.0);
        let t = orbit(&f, HPoint::i(), 3, 1e-10).unwrap();
        assert!(t.is_valid());
        assert_eq!(t.points.len(), 4);
        for (k, p) in t.points.iter().enumerate() {
            assert!((p.x() - k as f64).abs() < 1e-15);
            assert!((p.y() - 1.0).abs() < 1e-15);
        }
        let d = 1.0 / 5f64.sqrt();
        for s in &t.steps {
            assert!((s - d).abs() < 1e-14);
        }
        // b_n = 1 exactly, y ratio 1
        for (b, yr) in t.b_seq.iter().zip(&t.y_ratio) {
            assert!((b - 1.0).abs() < 1e-14);
            assert!((yr - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ex1_short_orbit_matches_closed_form() {
        // f(z) = z - 1/(z+i): i -> 1.5i -> 1.9i
        let f = ex1_map(0.0);
        let t = orbit(&f, HPoint::i(), 2, 1e-10).unwrap();
        assert!((t.points[1].y() - 1.5).abs() < 1e-9);
        assert!(t.points[1].x().abs() < 1e-9);
        assert!((t.points[2].y() - 1.9).abs() < 1e-9);
    }

    #[test]
    fn translation_probe_and_empirical() {
        let f = translation(1.0);
        let t = orbit(&f, HPoint::i(), 500, 1e-9).unwrap();
        let b = pommerenke_b(&t).unwrap();
        assert!((b.estimate - 1.0).abs() < 1e-12);
        assert!(b.converged);
        let v = empirical_step(&t, DEFAULT_ZERO_THRESHOLD, 50).unwrap();
        assert_eq!(v.verdict, StepVerdict::PositiveHS);
        assert!((v.d_tail - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(v.tangential, Some(Tangential::TowardZero));
        assert!(!v.y_diverging);

        let probe = drift_probe(&f, &[1.0, 10.0, 100.0]).unwrap();
        for v in probe {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let probe = angular_probe(&f, &[10.0]).unwrap();
        assert!((probe[0] - Complex64::new(0.0, 10.0)).norm() < 1e-10);
    }

    #[test]
    fn translation_abel_residual_is_zero() {
        let f = translation(1.0);
        let r = abel_residual(&f, HPoint::new(0.0, 2.0).unwrap(), HPoint::i(), 100).unwrap();
        for v in r {
            assert!(v < 1e-14);
        }
    }

    #[test]
    fn schwarz_pick_on_ex1() {
        let f = ex1_map(0.4);
        let t = orbit(&f, HPoint::i(), 400, 1e-8).unwrap();
        for w in t.steps.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn csv_shape() {
        let f = translation(1.0);
        let t = orbit(&f, HPoint::i(), 3, 1e-10).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,x,y,d,b,y_ratio,arg");
        assert_eq!(lines.len(), 5);
        assert!(text.ends_with('\n'));
        assert!(!text.contains(','.to_string().repeat(8).as_str()));
        // fourth data row (n = 3) has empty derived columns
        assert!(lines[4].contains(",,,,"));
    }

    #[test]
    fn abel_rejects_equal_points() {
        let f = translation(1.0);
        assert!(abel_residual(&f, HPoint::i(), HPoint::i(), 10).is_err());
    }
}
