//! Filippov trajectory integration: smooth arcs with surface events, sliding
//! segments in the graph chart, and tangency-exit concatenation.

use nalgebra::{SVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::PsvfError;
use crate::lie::{lie_derivative, lie_derivative_at};
use crate::poly::Poly;
use crate::system::{PiecewiseSystem, ScalarField, Side, SurfaceGraph, ToleranceConfig, VectorField};

/// Relative and absolute local-error targets of the adaptive stepper.
const RTOL: f64 = 1e-10;
const ATOL: f64 = 1e-12;
/// Largest accepted step; keeps single-step event refinement accurate.
const DT_MAX: f64 = 0.05;
/// Substep count for re-integration during event bisection.
const EVENT_SUBSTEPS: usize = 8;
/// Trajectories re-hitting M this often stop with a diagnostic.
const MAX_SURFACE_HITS: usize = 10_000;
/// States beyond this radius leave the working domain.
const DOMAIN_RADIUS: f64 = 1e6;

/// Which dynamics governs a trajectory segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Governing {
    XPlus,
    XMinus,
    Sliding,
}

impl fmt::Display for Governing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Governing::XPlus => "X_plus",
            Governing::XMinus => "X_minus",
            Governing::Sliding => "sliding",
        };
        write!(f, "{s}")
    }
}

/// Segment boundary events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowEvent {
    Start,
    SurfaceHit,
    SlidingEntry,
    SlidingExitAtTangency,
    TimeHorizon,
    LeftDomain,
    DegenerateStop,
}

/// One smooth or sliding piece of a Filippov trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub governing: Governing,
    /// Ordered (t, state) samples; first and last are the segment junctions.
    pub samples: Vec<(f64, [f64; 3])>,
    pub entry_event: FlowEvent,
    pub exit_event: FlowEvent,
}

impl TrajectorySegment {
    pub fn first(&self) -> (f64, Vector3<f64>) {
        let (t, s) = self.samples[0];
        (t, Vector3::from(s))
    }

    pub fn last(&self) -> (f64, Vector3<f64>) {
        let (t, s) = *self.samples.last().unwrap();
        (t, Vector3::from(s))
    }
}

/// Concatenated Filippov trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<TrajectorySegment>,
    pub total_time: f64,
    /// Set when integration stopped early or hit an ambiguous configuration.
    pub diagnostic: Option<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> Vector3<f64> {
        self.segments.last().map(|s| s.last().1).unwrap_or_else(Vector3::zeros)
    }

    /// CSV export with 17 significant digits per float.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,x3,segment_index,governing\n");
        for (i, seg) in self.segments.iter().enumerate() {
            for (t, s) in &seg.samples {
                out.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                    t, s[0], s[1], s[2], i, seg.governing
                ));
            }
        }
        out
    }
}

/// One Dormand-Prince 5(4) step; returns the 5th-order state and the scaled
/// error-norm estimate.
fn dopri_step<const N: usize, F: Fn(&SVector<f64, N>) -> SVector<f64, N>>(
    f: &F,
    y: &SVector<f64, N>,
    dt: f64,
) -> (SVector<f64, N>, f64) {
    let k1 = f(y);
    let k2 = f(&(y + k1 * (dt / 5.0)));
    let k3 = f(&(y + (k1 * 3.0 + k2 * 9.0) * (dt / 40.0)));
    let k4 = f(&(y + (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)) * dt));
    let k5 = f(&(y
        + (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0)
            - k4 * (212.0 / 729.0))
            * dt));
    let k6 = f(&(y
        + (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0) + k3 * (46732.0 / 5247.0)
            + k4 * (49.0 / 176.0)
            - k5 * (5103.0 / 18656.0))
            * dt));
    let y5 = y
        + (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0)
            - k5 * (2187.0 / 6784.0)
            + k6 * (11.0 / 84.0))
            * dt;
    let k7 = f(&y5);
    let y4 = y
        + (k1 * (5179.0 / 57600.0) + k3 * (7571.0 / 16695.0) + k4 * (393.0 / 640.0)
            - k5 * (92097.0 / 339200.0)
            + k6 * (187.0 / 2100.0)
            + k7 * (1.0 / 40.0))
            * dt;
    let mut err = 0.0f64;
    for i in 0..N {
        let sc = ATOL + RTOL * y[i].abs().max(y5[i].abs());
        err += ((y5[i] - y4[i]) / sc).powi(2);
    }
    (y5, (err / N as f64).sqrt())
}

/// Classical RK4 with n substeps; used to re-evaluate states inside an
/// accepted step during event bisection.
fn rk4_n<const N: usize, F: Fn(&SVector<f64, N>) -> SVector<f64, N>>(
    f: &F,
    y0: &SVector<f64, N>,
    dt: f64,
    n: usize,
) -> SVector<f64, N> {
    let mut y = *y0;
    let h = dt / n as f64;
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&(y + k1 * (h / 2.0)));
        let k3 = f(&(y + k2 * (h / 2.0)));
        let k4 = f(&(y + k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

/// Bisection on the step fraction for a scalar event function with a sign
/// change over [0, dt]; returns (tau, state at tau).
fn refine_event<const N: usize, F, G>(
    f: &F,
    y0: &SVector<f64, N>,
    dt: f64,
    g: &G,
    g0_positive: bool,
) -> (f64, SVector<f64, N>)
where
    F: Fn(&SVector<f64, N>) -> SVector<f64, N>,
    G: Fn(&SVector<f64, N>) -> f64,
{
    let mut lo = 0.0f64;
    let mut hi = dt;
    let mut y_hi = rk4_n(f, y0, dt, EVENT_SUBSTEPS);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let y_mid = rk4_n(f, y0, mid, EVENT_SUBSTEPS);
        if (g(&y_mid) > 0.0) == g0_positive {
            lo = mid;
        } else {
            hi = mid;
            y_hi = y_mid;
        }
        if hi - lo <= f64::EPSILON * dt {
            break;
        }
    }
    (hi, y_hi)
}

/// Newton polish along the field direction until |h| is far below event_tol.
fn polish_onto_surface(
    field: &impl Fn(&Vector3<f64>) -> Vector3<f64>,
    h: &ScalarField,
    q: &Vector3<f64>,
    tol: &ToleranceConfig,
) -> Vector3<f64> {
    let mut x = *q;
    for _ in 0..8 {
        let hv = h.eval(&x);
        if hv.abs() <= tol.event_tol * 1e-3 {
            break;
        }
        let v = field(&x);
        let dh = v.dot(&h.gradient(&x));
        if dh.abs() < 1e-14 {
            // Tangential arrival: fall back to a gradient projection.
            let g = h.gradient(&x);
            let g2 = g.norm_squared();
            if g2 == 0.0 {
                break;
            }
            x -= g * (hv / g2);
        } else {
            x -= v * (hv / dh);
        }
    }
    x
}

enum ArcExit {
    Surface(Vector3<f64>),
    Horizon(Vector3<f64>),
    LeftDomain(Vector3<f64>),
    Underflow(Vector3<f64>),
}

/// Integrates one smooth field from a point (possibly on M) until h crosses
/// zero again, the horizon, or the domain boundary.
fn run_smooth_arc(
    field: &impl Fn(&Vector3<f64>) -> Vector3<f64>,
    h: &ScalarField,
    start: &Vector3<f64>,
    t_start: f64,
    t_end: f64,
    tol: &ToleranceConfig,
    samples: &mut Vec<(f64, [f64; 3])>,
) -> (f64, ArcExit) {
    let mut y = *start;
    let mut t = t_start;
    let mut armed = h.eval(&y).abs() > 10.0 * tol.event_tol;
    let speed = field(&y).norm().max(1e-6);
    let mut dt = (1e-4 * (1.0 + y.norm()) / speed).min(DT_MAX);
    samples.push((t, [y.x, y.y, y.z]));
    loop {
        if t >= t_end {
            return (t, ArcExit::Horizon(y));
        }
        if y.norm() > DOMAIN_RADIUS {
            return (t, ArcExit::LeftDomain(y));
        }
        dt = dt.min(t_end - t).min(DT_MAX);
        if dt < 1e-14 * t.abs().max(1.0) {
            return (t, ArcExit::Underflow(y));
        }
        let h_before = h.eval(&y);
        let (y_next, err) = dopri_step(field, &y, dt);
        if err > 1.0 {
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }
        let h_after = h.eval(&y_next);
        if armed && (h_before > 0.0) != (h_after > 0.0) {
            let (tau, y_ev) =
                refine_event(field, &y, dt, &|s: &Vector3<f64>| h.eval(s), h_before > 0.0);
            let hit = polish_onto_surface(field, h, &y_ev, tol);
            let t_hit = t + tau;
            samples.push((t_hit, [hit.x, hit.y, hit.z]));
            return (t_hit, ArcExit::Surface(hit));
        }
        if !armed && h_after.abs() > 10.0 * tol.event_tol {
            armed = true;
        }
        y = y_next;
        t += dt;
        samples.push((t, [y.x, y.y, y.z]));
        dt *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
}

enum SlideExit {
    Tangency { side: Side, point: Vector3<f64> },
    Horizon(Vector3<f64>),
    Degenerate { point: Vector3<f64>, reason: String },
}

/// Integrates the time-correct Filippov field in the graph chart; exits when
/// a Lie derivative X(+/-)h reaches zero or the horizon arrives.
#[allow(clippy::too_many_arguments)]
fn run_sliding(
    sys: &PiecewiseSystem,
    graph: &SurfaceGraph,
    g_plus: &Poly,
    g_minus: &Poly,
    start: &Vector2<f64>,
    t_start: f64,
    t_end: f64,
    tol: &ToleranceConfig,
    samples: &mut Vec<(f64, [f64; 3])>,
) -> (f64, SlideExit) {
    let eval_g = |q: &Poly, u: &Vector2<f64>| q.eval(&Vector3::new(u.x, u.y, 0.0));
    let field = |u: &Vector2<f64>| -> Vector2<f64> {
        let p = graph.lift(u);
        let a = sys.x_plus_h(&p);
        let b = sys.x_minus_h(&p);
        let denom = b - a;
        if denom.abs() < 1e-300 {
            return Vector2::zeros();
        }
        let vp = sys.x_plus.eval(&p);
        let vm = sys.x_minus.eval(&p);
        Vector2::new((vp.x * b - vm.x * a) / denom, (vp.y * b - vm.y * a) / denom)
    };
    let mut u = *start;
    let mut t = t_start;
    let lifted = graph.lift(&u);
    samples.push((t, [lifted.x, lifted.y, lifted.z]));
    let mut dt = (1e-4 * (1.0 + u.norm()) / field(&u).norm().max(1e-6)).min(DT_MAX);
    // Arm each boundary function only once safely inside its region.
    let mut armed_p = eval_g(g_plus, &u).abs() > 10.0 * tol.event_tol;
    let mut armed_m = eval_g(g_minus, &u).abs() > 10.0 * tol.event_tol;
    loop {
        if t >= t_end {
            return (t, SlideExit::Horizon(graph.lift(&u)));
        }
        dt = dt.min(t_end - t).min(DT_MAX);
        if dt < 1e-14 * t.abs().max(1.0) {
            return (
                t,
                SlideExit::Degenerate {
                    point: graph.lift(&u),
                    reason: "step-size underflow during sliding".into(),
                },
            );
        }
        let p_before = eval_g(g_plus, &u);
        let m_before = eval_g(g_minus, &u);
        let (u_next, err) = dopri_step(&field, &u, dt);
        if err > 1.0 {
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }
        let p_after = eval_g(g_plus, &u_next);
        let m_after = eval_g(g_minus, &u_next);
        let p_crossed = armed_p && (p_before > 0.0) != (p_after > 0.0);
        let m_crossed = armed_m && (m_before > 0.0) != (m_after > 0.0);
        if p_crossed || m_crossed {
            // Resolve the earlier of the two candidate boundary events.
            let (side, gq) = if p_crossed && m_crossed {
                if p_before.abs() <= m_before.abs() {
                    (Side::Plus, g_plus)
                } else {
                    (Side::Minus, g_minus)
                }
            } else if p_crossed {
                (Side::Plus, g_plus)
            } else {
                (Side::Minus, g_minus)
            };
            let before = eval_g(gq, &u);
            let (tau, u_ev) =
                refine_event(&field, &u, dt, &|s: &Vector2<f64>| eval_g(gq, s), before > 0.0);
            let point = graph.lift(&u_ev);
            let t_hit = t + tau;
            samples.push((t_hit, [point.x, point.y, point.z]));
            return (t_hit, SlideExit::Tangency { side, point });
        }
        if !armed_p && p_after.abs() > 10.0 * tol.event_tol {
            armed_p = true;
        }
        if !armed_m && m_after.abs() > 10.0 * tol.event_tol {
            armed_m = true;
        }
        u = u_next;
        t += dt;
        let lifted = graph.lift(&u);
        samples.push((t, [lifted.x, lifted.y, lifted.z]));
        dt *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
}

enum NextMode {
    Smooth(Side),
    Slide(Option<String>),
    Stop(String),
}

/// Filippov dispatch at a surface point: pick the continuation mode from the
/// signs of both Lie derivatives, falling to tangency rules on boundaries.
fn resolve_on_surface(sys: &PiecewiseSystem, p: &Vector3<f64>, tol: &ToleranceConfig) -> NextMode {
    let e = tol.zero_eps;
    let a = sys.x_plus_h(p);
    let b = sys.x_minus_h(p);
    let za = a.abs() <= e;
    let zb = b.abs() <= e;
    if za && zb {
        return NextMode::Stop("reached a two-fold or doubly tangential point".into());
    }
    if za {
        let a2 = lie_derivative_at(&sys.x_plus, &lie_derivative(&sys.x_plus, sys.h.poly()), p);
        if a2 > e {
            return NextMode::Smooth(Side::Plus);
        }
        if a2.abs() <= e {
            return NextMode::Stop("degenerate tangency of the upper field".into());
        }
        // Invisible upper fold: continue along the other side's sign.
        return if b > e {
            NextMode::Slide(None)
        } else {
            NextMode::Smooth(Side::Minus)
        };
    }
    if zb {
        let b2 = lie_derivative_at(&sys.x_minus, &lie_derivative(&sys.x_minus, sys.h.poly()), p);
        if b2 < -e {
            return NextMode::Smooth(Side::Minus);
        }
        if b2.abs() <= e {
            return NextMode::Stop("degenerate tangency of the lower field".into());
        }
        return if a < -e {
            NextMode::Slide(None)
        } else {
            NextMode::Smooth(Side::Plus)
        };
    }
    if a > 0.0 && b > 0.0 {
        NextMode::Smooth(Side::Plus)
    } else if a < 0.0 && b < 0.0 {
        NextMode::Smooth(Side::Minus)
    } else if a < 0.0 {
        NextMode::Slide(None)
    } else {
        NextMode::Slide(Some(
            "unstable sliding: forward evolution follows the Filippov formula; \
             escaping solutions exist"
                .into(),
        ))
    }
}

/// Integrates the Filippov dynamics from p0 for t_max time units.
pub fn integrate(
    sys: &PiecewiseSystem,
    p0: &Vector3<f64>,
    t_max: f64,
    tol: &ToleranceConfig,
) -> Trajectory {
    let mut segments: Vec<TrajectorySegment> = Vec::new();
    let mut diagnostic: Option<String> = None;
    let mut notes: Vec<String> = Vec::new();
    let graph = sys.surface_graph().ok();
    let g_polys = graph.as_ref().map(|g| {
        (
            g.restrict(&lie_derivative(&sys.x_plus, sys.h.poly())),
            g.restrict(&lie_derivative(&sys.x_minus, sys.h.poly())),
        )
    });

    let mut t = 0.0f64;
    let mut state = *p0;
    let mut hits = 0usize;
    let mut entry = FlowEvent::Start;
    let h0 = sys.h.eval(&state);
    let mut mode = if h0.abs() > tol.event_tol {
        NextMode::Smooth(if h0 > 0.0 { Side::Plus } else { Side::Minus })
    } else {
        resolve_on_surface(sys, &state, tol)
    };

    while t < t_max {
        match mode {
            NextMode::Stop(reason) => {
                diagnostic = Some(reason);
                break;
            }
            NextMode::Smooth(side) => {
                let field = {
                    let f = sys.field(side).clone();
                    move |x: &Vector3<f64>| f.eval(x)
                };
                let mut samples = Vec::new();
                let (t_exit, exit) =
                    run_smooth_arc(&field, &sys.h, &state, t, t_max, tol, &mut samples);
                let governing = match side {
                    Side::Plus => Governing::XPlus,
                    Side::Minus => Governing::XMinus,
                };
                match exit {
                    ArcExit::Surface(q) => {
                        segments.push(TrajectorySegment {
                            governing,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::SurfaceHit,
                        });
                        hits += 1;
                        if hits >= MAX_SURFACE_HITS {
                            diagnostic =
                                Some("chattering guard: too many surface hits".into());
                            t = t_exit;
                            break;
                        }
                        state = q;
                        t = t_exit;
                        mode = resolve_on_surface(sys, &state, tol);
                        entry = match mode {
                            NextMode::Slide(_) => FlowEvent::SlidingEntry,
                            _ => FlowEvent::SurfaceHit,
                        };
                    }
                    ArcExit::Horizon(q) => {
                        segments.push(TrajectorySegment {
                            governing,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::TimeHorizon,
                        });
                        state = q;
                        t = t_max;
                        break;
                    }
                    ArcExit::LeftDomain(q) => {
                        segments.push(TrajectorySegment {
                            governing,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::LeftDomain,
                        });
                        state = q;
                        t = t_exit;
                        break;
                    }
                    ArcExit::Underflow(q) => {
                        segments.push(TrajectorySegment {
                            governing,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::DegenerateStop,
                        });
                        diagnostic = Some("step-size underflow".into());
                        state = q;
                        t = t_exit;
                        break;
                    }
                }
            }
            NextMode::Slide(note) => {
                if let Some(n) = note {
                    if !notes.contains(&n) {
                        notes.push(n);
                    }
                }
                let Some(graph) = graph.as_ref() else {
                    diagnostic =
                        Some("sliding requires a graph-form switching surface".into());
                    break;
                };
                let (g_plus, g_minus) = g_polys.as_ref().unwrap();
                let u0 = graph.project(&state);
                let mut samples = Vec::new();
                let (t_exit, exit) = run_sliding(
                    sys, graph, g_plus, g_minus, &u0, t, t_max, tol, &mut samples,
                );
                match exit {
                    SlideExit::Tangency { side, point } => {
                        segments.push(TrajectorySegment {
                            governing: Governing::Sliding,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::SlidingExitAtTangency,
                        });
                        // Departure rule: leave with the tangent field only if
                        // its second Lie derivative points off M.
                        let e = tol.zero_eps;
                        let depart = match side {
                            Side::Plus => {
                                let a2 = lie_derivative_at(
                                    &sys.x_plus,
                                    &lie_derivative(&sys.x_plus, sys.h.poly()),
                                    &point,
                                );
                                if a2 > e {
                                    Some(Side::Plus)
                                } else {
                                    None
                                }
                            }
                            Side::Minus => {
                                let b2 = lie_derivative_at(
                                    &sys.x_minus,
                                    &lie_derivative(&sys.x_minus, sys.h.poly()),
                                    &point,
                                );
                                if b2 < -e {
                                    Some(Side::Minus)
                                } else {
                                    None
                                }
                            }
                        };
                        state = point;
                        t = t_exit;
                        match depart {
                            Some(side) => {
                                mode = NextMode::Smooth(side);
                                entry = FlowEvent::SlidingExitAtTangency;
                            }
                            None => {
                                diagnostic = Some(
                                    "sliding boundary without a visible departure; \
                                     stopping at the degenerate tangency"
                                        .into(),
                                );
                                break;
                            }
                        }
                    }
                    SlideExit::Horizon(q) => {
                        segments.push(TrajectorySegment {
                            governing: Governing::Sliding,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::TimeHorizon,
                        });
                        state = q;
                        t = t_max;
                        break;
                    }
                    SlideExit::Degenerate { point, reason } => {
                        segments.push(TrajectorySegment {
                            governing: Governing::Sliding,
                            samples,
                            entry_event: entry,
                            exit_event: FlowEvent::DegenerateStop,
                        });
                        diagnostic = Some(reason);
                        state = point;
                        t = t_exit;
                        break;
                    }
                }
            }
        }
    }

    if diagnostic.is_none() && !notes.is_empty() {
        diagnostic = Some(notes.join("; "));
    }
    let _ = state;
    Trajectory { segments, total_time: t, diagnostic }
}

/// First return of one smooth field's orbit through p0 (on M) to M.
///
/// The time direction is resolved from the side: with X h(p0) carrying the
/// orbit into the requested side the arc runs forward, otherwise backward.
/// Returns the landing point and the signed flight time; |Xh(p0)| below
/// zero_eps returns p0 itself with zero time (fold fixed point).
pub fn orbit_return_to_m(
    x: &VectorField,
    h: &ScalarField,
    p0: &Vector3<f64>,
    side: Side,
    t_max: f64,
    tol: &ToleranceConfig,
) -> Result<(Vector3<f64>, f64), PsvfError> {
    let xh = lie_derivative_at(x, h.poly(), p0);
    if xh.abs() <= tol.zero_eps {
        return Ok((*p0, 0.0));
    }
    let entering = match side {
        Side::Plus => xh > 0.0,
        Side::Minus => xh < 0.0,
    };
    let dir = if entering { 1.0 } else { -1.0 };
    orbit_return_directed(x, h, p0, dir, t_max, tol)
}

/// First return with an explicit time direction (+1 forward, -1 backward).
///
/// Unlike the main arc runner this arms relative to the start residual and
/// knows the expected departure sign, so near-fold excursions with peak |h|
/// of order fd_step^2 are still resolved.
pub(crate) fn orbit_return_directed(
    x: &VectorField,
    h: &ScalarField,
    p0: &Vector3<f64>,
    dir: f64,
    t_max: f64,
    tol: &ToleranceConfig,
) -> Result<(Vector3<f64>, f64), PsvfError> {
    let field = {
        let f = x.clone();
        move |q: &Vector3<f64>| f.eval(q) * dir
    };
    let xh = dir * lie_derivative_at(x, h.poly(), p0);
    // Expected sign of h immediately after departure; 0 disables the
    // overshoot shortcut when the start is itself tangential.
    let s0 = if xh.abs() > tol.zero_eps { xh.signum() } else { 0.0 };
    let thr = (100.0 * h.eval(p0).abs()).max(1e-12);

    let mut y = *p0;
    let mut t = 0.0f64;
    let mut armed = false;
    let speed = field(&y).norm().max(1e-6);
    let mut dt = (1e-4 * (1.0 + y.norm()) / speed).min(DT_MAX);
    loop {
        if t >= t_max || y.norm() > DOMAIN_RADIUS {
            return Err(PsvfError::NoReturn);
        }
        dt = dt.min(t_max - t).min(DT_MAX);
        if dt < 1e-16 * t.abs().max(1.0) {
            return Err(PsvfError::NoReturn);
        }
        let h_before = h.eval(&y);
        let (y_next, err) = dopri_step(&field, &y, dt);
        if err > 1.0 {
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            continue;
        }
        let h_after = h.eval(&y_next);
        if armed && (h_before > 0.0) != (h_after > 0.0) {
            let (tau, y_ev) =
                refine_event(&field, &y, dt, &|s: &Vector3<f64>| h.eval(s), h_before > 0.0);
            let hit = polish_onto_surface(&field, h, &y_ev, tol);
            return Ok((hit, dir * (t + tau)));
        }
        if !armed && h_after.abs() > thr {
            if s0 == 0.0 || h_after.signum() == s0 {
                armed = true;
            } else {
                // The step jumped the whole excursion; the crossing is inside.
                let (tau, y_ev) =
                    refine_event(&field, &y, dt, &|s: &Vector3<f64>| h.eval(s), s0 > 0.0);
                let hit = polish_onto_surface(&field, h, &y_ev, tol);
                return Ok((hit, dir * (t + tau)));
            }
        }
        y = y_next;
        t += dt;
        dt *= (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
}
