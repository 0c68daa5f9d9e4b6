//! Phase portraits, near-boundary expansions, normal forms and caustic diagnostics.

use std::f64::consts::{PI, TAU};

use crate::boundary::{Curve, Regime};
use crate::dynamics::{arc_map, return_map, PhaseState};
use crate::error::{Error, Result};
use crate::geometry::{cross, wrap, wrap_centered, Vec2};
use crate::orbits::{iterate, OrbitTrace};
use crate::tolerances::{TOL_CAUSTIC, TOL_REGIME};

/// Grid of initial conditions for a phase portrait.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitSpec {
    /// Range of the native boundary parameter `phi`.
    pub phi_range: (f64, f64),
    pub u_range: (f64, f64),
    pub n_phi: usize,
    pub n_u: usize,
    pub iterations: usize,
    /// Keep every `decimation`-th iterate.
    pub decimation: usize,
}

impl PortraitSpec {
    pub fn new(n_phi: usize, n_u: usize, iterations: usize) -> Self {
        Self {
            phi_range: (0.0, TAU),
            u_range: (-0.98, 0.98),
            n_phi,
            n_u,
            iterations,
            decimation: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.u_range;
        if !(-1.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::InvalidParameter(format!("u range must lie in [-1, 1], got ({a}, {b})")));
        }
        if self.decimation == 0 {
            return Err(Error::InvalidParameter("decimation must be at least 1".into()));
        }
        Ok(())
    }

    /// Initial `(phi, u)` pairs in row-major order.
    pub fn initial_conditions(&self) -> Vec<(f64, f64)> {
        let spread = |(a, b): (f64, f64), n: usize, i: usize| {
            if n == 1 {
                0.5 * (a + b)
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.n_phi * self.n_u);
        for i in 0..self.n_phi {
            for j in 0..self.n_u {
                out.push((spread(self.phi_range, self.n_phi, i), spread(self.u_range, self.n_u, j)));
            }
        }
        out
    }
}

/// Points `(phi, u)` of one portrait orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitOrbit {
    pub id: usize,
    /// `(k, phi, u)` with `k` the return index.
    pub points: Vec<(usize, f64, f64)>,
    pub tangency: bool,
}

/// Orbit of one initial condition, reported in the native parameter.
pub fn portrait_orbit(curve: &Curve, mu: f64, id: usize, phi: f64, u: f64, iterations: usize, decimation: usize) -> Result<PortraitOrbit> {
    let s = curve.native_to_arclength(wrap(phi, TAU));
    let trace = iterate(curve, mu, &PhaseState::new(s, u)?, iterations)?;
    let points = trace
        .states
        .iter()
        .enumerate()
        .filter(|(k, _)| k % decimation.max(1) == 0)
        .map(|(k, st)| {
            let p = if k == 0 { phi } else { wrap(curve.arclength_to_native(st.s), TAU) };
            (k, p, st.u)
        })
        .collect();
    Ok(PortraitOrbit { id, points, tangency: trace.tangency.is_some() })
}

pub fn phase_portrait(curve: &Curve, mu: f64, spec: &PortraitSpec) -> Result<Vec<PortraitOrbit>> {
    spec.validate()?;
    spec.initial_conditions()
        .into_iter()
        .enumerate()
        .map(|(id, (phi, u))| portrait_orbit(curve, mu, id, phi, u, spec.iterations, spec.decimation))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u0: f64,
    /// Lifted `s2 = s_fixed + advance`.
    pub s2: f64,
    pub u2: f64,
}

/// A jump of the image that survives refinement of the `u0` interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discontinuity {
    pub u_lo: f64,
    pub u_hi: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    NonMonotone { turning_points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerticalLineImage {
    pub s_fixed: f64,
    pub points: Vec<ImagePoint>,
    pub discontinuities: Vec<Discontinuity>,
    /// Samples where the return itself reported a tangency.
    pub tangent_samples: Vec<f64>,
    pub turning_points: usize,
    pub verdict: Monotonicity,
}

impl VerticalLineImage {
    pub fn has_discontinuity(&self) -> bool {
        !self.discontinuities.is_empty() || !self.tangent_samples.is_empty()
    }
}

/// Image under `T` of the segment `{s_fixed} x u_samples`.
pub fn image_of_vertical_line(curve: &Curve, mu: f64, s_fixed: f64, u_samples: &[f64]) -> Result<VerticalLineImage> {
    if let Some(u) = u_samples.iter().find(|u| !(u.abs() < 1.0)) {
        return Err(Error::InvalidParameter(format!("vertical line samples must lie in (-1, 1), got {u}")));
    }
    let advance = |u: f64| return_map(curve, &PhaseState { s: s_fixed, u }, mu).map(|(n, r)| (r.advance(), n.u));
    let mut points = Vec::new();
    let mut tangent_samples = Vec::new();
    for &u in u_samples {
        match advance(u) {
            Ok((a, u2)) => points.push(ImagePoint { u0: u, s2: s_fixed + a, u2 }),
            Err(Error::TangencyDiscontinuity { .. }) => tangent_samples.push(u),
            Err(e) => return Err(e),
        }
    }
    let mut discontinuities = Vec::new();
    for w in points.windows(2) {
        let (mut a, mut b) = ((w[0].u0, w[0].s2), (w[1].u0, w[1].s2));
        let mut jump = (b.1 - a.1).abs();
        for _ in 0..60 {
            if jump < 1e-9 || b.0 - a.0 < 1e-15 {
                break;
            }
            let mid = 0.5 * (a.0 + b.0);
            let Ok((adv, _)) = advance(mid) else { break };
            let m = (mid, s_fixed + adv);
            if (m.1 - a.1).abs() >= (b.1 - m.1).abs() {
                b = m;
            } else {
                a = m;
            }
            jump = (b.1 - a.1).abs();
        }
        if jump > 1e-6 {
            discontinuities.push(Discontinuity { u_lo: a.0, u_hi: b.0, jump: b.1 - a.1 });
        }
    }
    let mut signs = Vec::new();
    for w in points.windows(2) {
        let d = w[1].s2 - w[0].s2;
        let inside_jump = discontinuities.iter().any(|j| j.u_lo >= w[0].u0 && j.u_hi <= w[1].u0);
        if !inside_jump && d.abs() > 1e-12 {
            signs.push(d > 0.0);
        }
    }
    let turning_points = signs.windows(2).filter(|p| p[0] != p[1]).count();
    let verdict = match (turning_points, signs.first()) {
        (0, Some(false)) => Monotonicity::Decreasing,
        (0, _) => Monotonicity::Increasing,
        (t, _) => Monotonicity::NonMonotone { turning_points: t },
    };
    Ok(VerticalLineImage { s_fixed, points, discontinuities, tangent_samples, turning_points, verdict })
}

/// Which edge of the annulus a Taylor expansion is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `u = -1`, expansion in `theta`.
    Minus,
    /// `u = +1`, expansion in `eta = pi - theta`.
    Plus,
}

pub const TAYLOR_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Measured versus predicted first-order coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCheck {
    pub predicted: f64,
    /// Difference quotients at the angles in [`TAYLOR_STEPS`].
    pub slopes: [f64; 3],
    pub extrapolated: f64,
    pub relative_error: f64,
    /// `|theta2 - theta1| / theta1` at the smallest angle (exit map only).
    pub angle_drift: f64,
    pub curvature: f64,
}

fn richardson(slopes: &[f64; 3]) -> f64 {
    (10.0 * slopes[2] - slopes[1]) / 9.0
}

fn denominator(mu: f64, kappa: f64, side: Side) -> Result<f64> {
    let d = match side {
        Side::Minus => 1.0 - mu * kappa,
        Side::Plus => 1.0 + mu * kappa,
    };
    if d.abs() < TOL_REGIME {
        return Err(Error::DenominatorSingular { value: d });
    }
    Ok(d)
}

fn small_angle_state(s: f64, eps: f64, side: Side) -> PhaseState {
    match side {
        Side::Minus => PhaseState::from_angle(s, eps),
        Side::Plus => PhaseState::from_angle(s, PI - eps),
    }
}

/// First-order coefficient of `s2 - s1` for the arc map near the boundary.
pub fn taylor_check_t2(curve: &Curve, mu: f64, s1: f64, side: Side) -> Result<TaylorCheck> {
    let kappa = curve.evaluate(s1).curvature;
    let predicted = 2.0 * mu / denominator(mu, kappa, side)?;
    let l = curve.length();
    let mut slopes = [0.0; 3];
    let mut drift = 0.0;
    for (slot, &eps) in slopes.iter_mut().zip(TAYLOR_STEPS.iter()) {
        let (_, arc) = arc_map(curve, &small_angle_state(s1, eps, side), mu)?;
        *slot = wrap_centered(arc.advance, l) / eps;
        drift = (arc.theta2 - arc.theta1).abs() / eps;
    }
    let extrapolated = richardson(&slopes);
    Ok(TaylorCheck {
        predicted,
        slopes,
        extrapolated,
        relative_error: ((extrapolated - predicted) / predicted).abs(),
        angle_drift: drift,
        curvature: kappa,
    })
}

/// First-order coefficient of `s2 - s0` for the full return near the boundary.
pub fn taylor_check_t(curve: &Curve, mu: f64, s0: f64, side: Side) -> Result<TaylorCheck> {
    let kappa = curve.evaluate(s0).curvature;
    let d = denominator(mu, kappa, side)?;
    let predicted = match side {
        Side::Minus => 2.0 / (kappa * d),
        Side::Plus => -2.0 / (kappa * d),
    };
    let l = curve.length();
    let mut slopes = [0.0; 3];
    let mut drift = 0.0;
    for (slot, &eps) in slopes.iter_mut().zip(TAYLOR_STEPS.iter()) {
        let (_, rec) = return_map(curve, &small_angle_state(s0, eps, side), mu)?;
        *slot = wrap_centered(rec.advance(), l) / eps;
        drift = (rec.theta2() - rec.theta0()).abs() / eps;
    }
    let extrapolated = richardson(&slopes);
    Ok(TaylorCheck {
        predicted,
        slopes,
        extrapolated,
        relative_error: ((extrapolated - predicted) / predicted).abs(),
        angle_drift: drift,
        curvature: kappa,
    })
}

/// Near-boundary coordinate systems in which the return is close to a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalFormCase {
    /// `phi = s - mu tau`, `r = 2 rho theta`, strong field near `u = -1`.
    StrongMinus,
    /// `phi = mu tau - s`, `r = 2 rho theta`, weak field near `u = -1`.
    WeakMinus,
    /// `phi = s + mu tau`, `r = 2 rho eta`, any regime near `u = +1`.
    AnyPlus,
}

#[derive(Debug, Clone)]
pub struct NormalForm<'a> {
    curve: &'a Curve,
    pub mu: f64,
    pub case: NormalFormCase,
    /// Period `M` of the angle `phi`.
    pub period: f64,
}

pub fn normal_form_coords(curve: &Curve, mu: f64, case: NormalFormCase) -> Result<NormalForm<'_>> {
    let regime = curve.classify_regime(mu);
    let l = curve.length();
    let period = match case {
        NormalFormCase::StrongMinus => {
            if regime != Regime::StrongField {
                return Err(Error::RegimeMismatch(format!("phi = s - mu tau needs the strong-field regime, found {regime}")));
            }
            l - TAU * mu
        }
        NormalFormCase::WeakMinus => {
            if regime != Regime::WeakField {
                return Err(Error::RegimeMismatch(format!("phi = mu tau - s needs the weak-field regime, found {regime}")));
            }
            TAU * mu - l
        }
        NormalFormCase::AnyPlus => l + TAU * mu,
    };
    Ok(NormalForm { curve, mu, case, period })
}

impl NormalForm<'_> {
    fn tau(&self, s: f64) -> f64 {
        self.curve.tau_lift(self.curve.arclength_to_native(s))
    }

    /// Angle coordinate of a lifted `s`.
    pub fn phi(&self, s: f64) -> f64 {
        match self.case {
            NormalFormCase::StrongMinus => s - self.mu * self.tau(s),
            NormalFormCase::WeakMinus => self.mu * self.tau(s) - s,
            NormalFormCase::AnyPlus => s + self.mu * self.tau(s),
        }
    }

    /// `(phi, r)` of a state; `r` uses `theta` or `eta` according to the case.
    pub fn forward(&self, state: &PhaseState, lifted_s: f64) -> (f64, f64) {
        let rho = 1.0 / self.curve.evaluate(lifted_s).curvature;
        let small = match self.case {
            NormalFormCase::AnyPlus => PI - state.theta(),
            _ => state.theta(),
        };
        (self.phi(lifted_s), 2.0 * rho * small)
    }

    /// Lifted `s` and the state with angle recovered from `(phi, r)`.
    pub fn backward(&self, phi: f64, r: f64) -> (f64, PhaseState) {
        // phi is increasing in s in every valid case.
        let dphi = |s: f64| {
            let k = self.curve.evaluate(s).curvature;
            match self.case {
                NormalFormCase::StrongMinus => 1.0 - self.mu * k,
                NormalFormCase::WeakMinus => self.mu * k - 1.0,
                NormalFormCase::AnyPlus => 1.0 + self.mu * k,
            }
        };
        let l = self.curve.length();
        let turns = (phi / self.period).floor();
        let target = phi - turns * self.period;
        let (mut lo, mut hi) = (-l, 2.0 * l);
        let mut s = target * l / self.period;
        for _ in 0..200 {
            let f = self.phi(s) - target;
            if f.abs() < 1e-14 || hi - lo < 1e-14 {
                break;
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let next = s - f / dphi(s);
            s = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        let s = s + turns * l;
        let rho = 1.0 / self.curve.evaluate(s).curvature;
        let small = r / (2.0 * rho);
        let theta = match self.case {
            NormalFormCase::AnyPlus => PI - small,
            _ => small,
        };
        (s, PhaseState::from_angle(wrap(s, l), theta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { min, max, mean: values.iter().sum::<f64>() / values.len() as f64 })
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

/// Points where consecutive chords (ordered along the boundary) cross.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordEnvelope {
    pub points: Vec<Vec2>,
    pub convex: bool,
    /// Total turning of the envelope polygon divided by `2pi`.
    pub winding: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausticReport {
    pub inner: Option<Stats>,
    /// Distance from the origin to each Larmor center plus `mu`. Experimental.
    pub outer: Option<Stats>,
    pub envelope: Option<ChordEnvelope>,
    pub guard_passed: bool,
    /// Inner caustic consistent with the trace.
    pub verdict: bool,
}

/// Inner and outer tangency statistics of a trace relative to `origin`.
pub fn caustic_report(curve: &Curve, trace: &OrbitTrace, origin: &Vec2) -> CausticReport {
    let inner: Vec<f64> = trace
        .records
        .iter()
        .map(|r| {
            let d = r.chord.p1 - r.chord.p0;
            cross(&d, &(origin - r.chord.p0)).abs() / d.norm()
        })
        .collect();
    let outer: Vec<f64> = trace
        .records
        .iter()
        .map(|r| (r.larmor_center() - origin).norm() + r.mu())
        .collect();
    let guard_passed = vanishing_curvature_guard(curve).passed;
    let inner_stats = Stats::of(&inner);
    let envelope = if curve.is_circle() { None } else { chord_envelope(trace) };
    let consistent = match (&envelope, inner_stats) {
        (Some(env), _) => env.convex && (env.winding - 1.0).abs() < 1e-6,
        (None, Some(st)) => curve.is_circle() && st.spread() < TOL_CAUSTIC,
        _ => false,
    };
    CausticReport {
        inner: inner_stats,
        outer: Stats::of(&outer),
        envelope,
        guard_passed,
        verdict: guard_passed && trace.tangency.is_none() && consistent,
    }
}

fn chord_envelope(trace: &OrbitTrace) -> Option<ChordEnvelope> {
    let mut chords: Vec<(f64, Vec2, Vec2)> = trace
        .records
        .iter()
        .map(|r| (r.entry().s, r.chord.p0, r.chord.p1))
        .collect();
    if chords.len() < 3 {
        return None;
    }
    chords.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = chords.len();
    let mut points = Vec::with_capacity(n);
    for j in 0..n {
        let (_, a0, a1) = chords[j];
        let (_, b0, b1) = chords[(j + 1) % n];
        let da = a1 - a0;
        let db = b1 - b0;
        let denom = cross(&da, &db);
        if denom.abs() < 1e-300 {
            return None;
        }
        let t = cross(&(b0 - a0), &db) / denom;
        points.push(a0 + da * t);
    }
    let mut turning = 0.0;
    let mut convex = true;
    for j in 0..n {
        let e1 = points[(j + 1) % n] - points[j];
        let e2 = points[(j + 2) % n] - points[(j + 1) % n];
        let turn = cross(&e1, &e2).atan2(e1.dot(&e2));
        if turn < -1e-9 {
            convex = false;
        }
        turning += turn;
    }
    Some(ChordEnvelope { points, convex, winding: turning / TAU })
}

/// Inner and outer caustic radii of the circle of radius `r` at entry angle `theta0`.
pub fn circle_caustic_radii(r: f64, mu: f64, theta0: f64) -> (f64, f64) {
    let inner = r * theta0.cos().abs();
    let outer = mu + (r * r + mu * mu - 2.0 * r * mu * theta0.cos()).sqrt();
    (inner, outer)
}

/// Larmor centers in order along the trace.
pub fn larmor_center_locus(trace: &OrbitTrace) -> Vec<Vec2> {
    trace.records.iter().map(|r| r.larmor_center()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardResult {
    pub passed: bool,
    pub kappa_min: f64,
}

/// Fails when the boundary curvature (nearly) vanishes somewhere.
pub fn vanishing_curvature_guard(curve: &Curve) -> GuardResult {
    let kappa_min = curve.kappa_min();
    GuardResult { passed: kappa_min >= TOL_REGIME, kappa_min }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::FourierCurve;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    #[test]
    fn portrait_trivia() {
        let c = Curve::circle(1.0).unwrap();
        let one = PortraitSpec { n_phi: 1, n_u: 1, iterations: 0, ..PortraitSpec::new(1, 1, 0) };
        let p = phase_portrait(&c, 0.5, &one).unwrap();
        assert_eq!(p[0].points, vec![(0, PI, 0.0)]);
        let lines = phase_portrait(&c, 0.5, &PortraitSpec::new(3, 4, 50)).unwrap();
        for orbit in lines {
            let u0 = orbit.points[0].2;
            assert!(orbit.points.iter().all(|p| (p.2 - u0).abs() < 1e-10));
        }
        assert!(phase_portrait(&c, 0.5, &PortraitSpec::new(0, 5, 10)).unwrap().is_empty());
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -0.995 + 1.99 * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn vertical_line_regimes() {
        let e = Curve::ellipse(2.0).unwrap();
        let strong = image_of_vertical_line(&e, 0.3, 0.0, &grid(80)).unwrap();
        assert_eq!(strong.verdict, Monotonicity::Increasing);
        assert!(!strong.has_discontinuity());
        let weak = image_of_vertical_line(&e, 5.0, 0.0, &grid(80)).unwrap();
        assert_eq!(weak.verdict, Monotonicity::NonMonotone { turning_points: 1 });
        assert!(!weak.has_discontinuity());
    }

    #[test]
    fn taylor_coefficients_at_vertex() {
        let e = Curve::ellipse(2.0).unwrap();
        let t2 = taylor_check_t2(&e, 0.3, 0.0, Side::Minus).unwrap();
        assert_relative_eq!(t2.predicted, 1.5, epsilon = 1e-12);
        assert!((t2.slopes[1] - 1.5).abs() < 0.015);
        assert!(t2.relative_error < 1e-2);
        let plus = taylor_check_t2(&e, 0.3, 0.0, Side::Plus).unwrap();
        assert_relative_eq!(plus.predicted, 0.375, epsilon = 1e-12);
        assert!(plus.relative_error < 1e-2);
        let t = taylor_check_t(&e, 0.3, 0.0, Side::Minus).unwrap();
        assert_relative_eq!(t.predicted, 2.5, epsilon = 1e-12);
        assert!(t.relative_error < 1e-2);
        assert!(matches!(taylor_check_t2(&e, 0.5, 0.0, Side::Minus), Err(Error::DenominatorSingular { .. })));
    }

    #[test]
    fn normal_form_periods_and_round_trip() {
        let e = Curve::ellipse(2.0).unwrap();
        let strong = normal_form_coords(&e, 0.3, NormalFormCase::StrongMinus).unwrap();
        assert_relative_eq!(strong.period, e.length() - TAU * 0.3, epsilon = 1e-12);
        assert_relative_eq!(strong.phi(1.0 + e.length()) - strong.phi(1.0), strong.period, epsilon = 1e-9);
        let weak = normal_form_coords(&e, 5.0, NormalFormCase::WeakMinus).unwrap();
        assert!(weak.period > 0.0);
        assert!(normal_form_coords(&e, 0.3, NormalFormCase::WeakMinus).is_err());
        for nf in [strong, weak, normal_form_coords(&e, 1.0, NormalFormCase::AnyPlus).unwrap()] {
            let st = if nf.case == NormalFormCase::AnyPlus {
                PhaseState::from_angle(2.0, PI - 1e-3)
            } else {
                PhaseState::from_angle(2.0, 1e-3)
            };
            let (phi, r) = nf.forward(&st, 2.0);
            let (s, back) = nf.backward(phi, r);
            assert_relative_eq!(s, 2.0, epsilon = 1e-10);
            assert_relative_eq!(back.u, st.u, epsilon = 1e-12);
        }
    }

    #[test]
    fn circle_caustics() {
        let c = Curve::circle(1.0).unwrap();
        let tr = iterate(&c, 0.5, &PhaseState { s: 0.0, u: -0.5 }, 50).unwrap();
        let rep = caustic_report(&c, &tr, &Vec2::zeros());
        let inner = rep.inner.unwrap();
        assert!((inner.min - 0.5).abs() < 1e-8 && (inner.max - 0.5).abs() < 1e-8);
        assert!(rep.verdict);
        let tr = iterate(&c, 0.5, &PhaseState { s: 0.0, u: 0.0 }, 20).unwrap();
        let outer = caustic_report(&c, &tr, &Vec2::zeros()).outer.unwrap();
        assert!((outer.max - 1.618033988749895).abs() < 1e-8 && outer.spread() < 1e-8);
        let centers = larmor_center_locus(&tr);
        for z in centers {
            assert_relative_eq!(z.norm(), 1.25f64.sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn ellipse_envelope_is_convex_near_boundary() {
        let e = Curve::ellipse(2.0).unwrap();
        let tr = iterate(&e, 0.3, &PhaseState { s: 0.0, u: -0.998 }, 400).unwrap();
        let rep = caustic_report(&e, &tr, &Vec2::zeros());
        let inner = rep.inner.unwrap();
        assert!(inner.spread() > 1e-3);
        assert!(rep.verdict, "{:?}", rep.envelope.map(|e| (e.convex, e.winding)));
    }

    #[test]
    fn guard() {
        assert!(vanishing_curvature_guard(&Curve::ellipse(2.0).unwrap()).passed);
        assert!(vanishing_curvature_guard(&Curve::circle(1.0).unwrap()).passed);
        let flat = FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.0], [0.25, 0.0, 0.0, 0.25]]).unwrap();
        let weak = Curve::parametric_weakly_convex(Arc::new(flat)).unwrap();
        assert!(!vanishing_curvature_guard(&weak).passed);
    }
}
