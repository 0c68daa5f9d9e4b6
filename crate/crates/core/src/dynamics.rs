//! The return map `T = T2 o T1` in Birkhoff coordinates and its Jacobians.
//!
//! `T1` follows the straight chord through the domain, `T2` the
//! counterclockwise Larmor arc of radius `mu` outside it. Velocities at entry
//! are `cos(theta) t + sin(theta) n`; at exit they are `cos(theta) t - sin(theta) n`,
//! so `theta` is always the angle to the tangent in `(0, pi)` and `u = -cos(theta)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::{Curve, CurveKind, Regime};
use crate::error::{Error, Result};
use crate::geometry::{cross, perp, rotate, signed_angle, wrap, Vec2};
use crate::tolerances::{TOL_CHI, TOL_TANGENT, TOL_TANGENT_SLOPE};

/// Birkhoff coordinates `(s, u)` with `u = -cos(theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub s: f64,
    pub u: f64,
}

impl PhaseState {
    pub fn new(s: f64, u: f64) -> Result<Self> {
        if !(s.is_finite() && (-1.0..=1.0).contains(&u)) {
            return Err(Error::InvalidParameter(format!("phase state needs finite s and u in [-1, 1], got ({s}, {u})")));
        }
        Ok(Self { s, u })
    }

    /// State with angle `theta` to the tangent.
    pub fn from_angle(s: f64, theta: f64) -> Self {
        Self { s, u: -theta.cos() }
    }

    pub fn theta(&self) -> f64 {
        (-self.u).clamp(-1.0, 1.0).acos()
    }

    /// True on the annulus boundary `u = -1` or `u = 1`.
    pub fn is_boundary(&self) -> bool {
        self.u.abs() > 1.0 - TOL_TANGENT
    }

    pub fn reduced(&self, length: f64) -> Self {
        Self { s: wrap(self.s, length), u: self.u }
    }
}

/// The interior chord of one return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordSegment {
    pub entry: PhaseState,
    pub exit: PhaseState,
    pub theta0: f64,
    pub theta1: f64,
    pub p0: Vec2,
    pub p1: Vec2,
    /// Native parameters; `phi1` is lifted into `(phi0, phi0 + 2pi)`.
    pub phi0: f64,
    pub phi1: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    /// `l1 = |P0 P1|`.
    pub length: f64,
    /// Lifted arc-length advance `s1 - s0`, in `(0, L)`.
    pub advance: f64,
}

/// The exterior Larmor arc of one return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSegment {
    pub exit: PhaseState,
    pub reentry: PhaseState,
    pub theta1: f64,
    pub theta2: f64,
    pub p1: Vec2,
    pub p2: Vec2,
    pub phi1: f64,
    /// Lifted consistently with `phi1` through the tangent angle.
    pub phi2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Exterior chord `l2 = |P1 P2|`.
    pub chord: f64,
    /// Half the traversed angle of the Larmor circle, in `(0, pi)`.
    pub chi: f64,
    pub center: Vec2,
    pub mu: f64,
    /// Lifted arc-length advance `s2 - s1`.
    pub advance: f64,
}

/// Geometric record of a full return `(s0, u0) -> (s2, u2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentRecord {
    pub chord: ChordSegment,
    pub arc: ArcSegment,
}

impl SegmentRecord {
    pub fn entry(&self) -> PhaseState {
        self.chord.entry
    }

    pub fn exit(&self) -> PhaseState {
        self.chord.exit
    }

    pub fn reentry(&self) -> PhaseState {
        self.arc.reentry
    }

    pub fn mu(&self) -> f64 {
        self.arc.mu
    }

    pub fn l1(&self) -> f64 {
        self.chord.length
    }

    pub fn l2(&self) -> f64 {
        self.arc.chord
    }

    pub fn chi(&self) -> f64 {
        self.arc.chi
    }

    /// Traversed arc angle `2 chi`.
    pub fn psi(&self) -> f64 {
        2.0 * self.arc.chi
    }

    /// Complementary angle `2pi - psi`.
    pub fn epsilon(&self) -> f64 {
        TAU - self.psi()
    }

    /// Base angle `pi/2 - chi` of the isosceles triangle `P1 C P2`.
    pub fn delta(&self) -> f64 {
        0.5 * PI - self.arc.chi
    }

    /// Length `mu psi` of the Larmor arc.
    pub fn gamma_length(&self) -> f64 {
        self.arc.mu * self.psi()
    }

    pub fn larmor_center(&self) -> Vec2 {
        self.arc.center
    }

    /// Polar angle of the exterior chord `P1 -> P2`.
    pub fn alpha1(&self) -> f64 {
        let d = self.arc.p2 - self.arc.p1;
        d.y.atan2(d.x)
    }

    /// Lifted advance `s2 - s0`.
    pub fn advance(&self) -> f64 {
        self.chord.advance + self.arc.advance
    }

    pub fn theta0(&self) -> f64 {
        self.chord.theta0
    }

    pub fn theta1(&self) -> f64 {
        self.chord.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.arc.theta2
    }
}

fn check_interior(state: &PhaseState) -> Result<()> {
    if !state.u.is_finite() || state.u.abs() > 1.0 - TOL_TANGENT {
        return Err(Error::TangentChord { u: state.u });
    }
    Ok(())
}

/// Interior chord `T1`.
pub fn chord_map(curve: &Curve, state: &PhaseState) -> Result<(PhaseState, ChordSegment)> {
    check_interior(state)?;
    let length = curve.length();
    let s0 = wrap(state.s, length);
    let phi0 = curve.arclength_to_native(s0);
    let b0 = curve.evaluate_native(phi0);
    let theta0 = state.theta();
    let v = b0.tangent * theta0.cos() + b0.normal * theta0.sin();
    let p0 = b0.position;

    // Angle from v to x(phi) - P0 increases from -theta0 to pi - theta0 over one turn.
    let h = |phi: f64| signed_angle(&v, &(curve.position_native(phi) - p0));
    let (mut lo, mut hi) = (phi0, phi0 + TAU);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + phi0.abs()) {
            break;
        }
    }
    let mut phi1 = 0.5 * (lo + hi);
    let f = |phi: f64| cross(&v, &(curve.position_native(phi) - p0));
    let fp = cross(&v, &curve.d1(phi1));
    if fp.abs() > 0.0 {
        let next = phi1 - f(phi1) / fp;
        if next > lo - 1e-12 && next < hi + 1e-12 && f(next).abs() <= f(phi1).abs() {
            phi1 = next;
        }
    }
    let b1 = curve.evaluate_native(phi1);
    let p1 = b1.position;
    let theta1 = (-v.dot(&b1.normal)).atan2(v.dot(&b1.tangent));
    let advance = curve.native_to_arclength(phi1) - curve.native_to_arclength(phi0);
    let exit = PhaseState { s: wrap(s0 + advance, length), u: -theta1.cos() };
    let seg = ChordSegment {
        entry: PhaseState { s: s0, u: state.u },
        exit,
        theta0,
        theta1,
        p0,
        p1,
        phi0,
        phi1,
        kappa0: b0.curvature,
        kappa1: b1.curvature,
        length: (p1 - p0).norm(),
        advance,
    };
    Ok((exit, seg))
}

/// Step size in Larmor angle for the crossing search.
fn arc_step(curve: &Curve, mu: f64) -> f64 {
    (PI / 16.0).min(curve.rho_min() / (4.0 * mu))
}

/// Exterior Larmor arc `T2` from an exit state.
pub fn arc_map(curve: &Curve, state: &PhaseState, mu: f64) -> Result<(PhaseState, ArcSegment)> {
    let phi1 = curve.arclength_to_native(wrap(state.s, curve.length()));
    arc_from_native(curve, phi1, state.theta(), mu)
}

fn arc_from_native(curve: &Curve, phi1: f64, theta1: f64, mu: f64) -> Result<(PhaseState, ArcSegment)> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("Larmor radius must be positive, got {mu}")));
    }
    let exit = PhaseState { s: wrap(curve.native_to_arclength(phi1), curve.length()), u: -theta1.cos() };
    check_interior(&exit)?;
    let b1 = curve.evaluate_native(phi1);
    let p1 = b1.position;
    let v = b1.tangent * theta1.cos() - b1.normal * theta1.sin();
    let center = p1 + perp(&v) * mu;
    let r1 = p1 - center;
    let q = |t: f64| center + rotate(&r1, t);
    // Desingularized so the departure point is not a root.
    let g = |t: f64| curve.inside(&q(t)) / (2.0 * mu * (0.5 * t).sin());

    let t_min = 1e-9;
    let t_max = TAU - 1e-9;
    let step = arc_step(curve, mu);
    let mut lo = t_min;
    let mut hi = None;
    if g(t_min) <= 0.0 {
        hi = Some(t_min);
        lo = 0.0;
    }
    while hi.is_none() {
        let t = (lo + step).min(t_max);
        if g(t) <= 0.0 {
            hi = Some(t);
        } else if t >= t_max {
            hi = Some(t_max);
        } else {
            lo = t;
        }
    }
    let mut hi = hi.unwrap_or(t_max);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let guess = q(0.5 * (lo + hi));
    let mut phi2 = curve.native_guess(&guess);
    let k = |phi: f64| (curve.position_native(phi) - center).norm_squared() - mu * mu;
    for _ in 0..4 {
        let kp = 2.0 * (curve.position_native(phi2) - center).dot(&curve.d1(phi2));
        if kp == 0.0 {
            break;
        }
        let dphi = (k(phi2) / kp).clamp(-1e-6, 1e-6);
        let next = phi2 - dphi;
        if k(next).abs() >= k(phi2).abs() {
            break;
        }
        phi2 = next;
    }
    let b2 = curve.evaluate_native(phi2);
    let p2 = b2.position;
    let r2 = p2 - center;
    let t_star = wrap(signed_angle(&r1, &r2), TAU);
    let chi = 0.5 * t_star;
    let v2 = rotate(&v, t_star);
    let theta2 = v2.dot(&b2.normal).atan2(v2.dot(&b2.tangent));
    if theta2.sin() < TOL_TANGENT_SLOPE && theta1.sin() > 1e3 * theta2.sin() {
        return Err(Error::TangencyDiscontinuity {
            s: curve.native_to_arclength(wrap(phi2, TAU)),
            crossing_sine: theta2.sin(),
        });
    }

    let target = curve.tau_lift(phi1) + 2.0 * chi - theta1 - theta2;
    let base = wrap(phi2, TAU);
    let turns = ((target - curve.tau_lift(base)) / TAU).round();
    let phi2 = base + turns * TAU;
    let advance = curve.native_to_arclength(phi2) - curve.native_to_arclength(phi1);
    let reentry = PhaseState { s: wrap(exit.s + advance, curve.length()), u: -theta2.cos() };
    let seg = ArcSegment {
        exit,
        reentry,
        theta1,
        theta2,
        p1,
        p2,
        phi1,
        phi2,
        kappa1: b1.curvature,
        kappa2: b2.curvature,
        chord: (p2 - p1).norm(),
        chi,
        center,
        mu,
        advance,
    };
    Ok((reentry, seg))
}

/// Full return map `T = T2 o T1`.
pub fn return_map(curve: &Curve, state: &PhaseState, mu: f64) -> Result<(PhaseState, SegmentRecord)> {
    let (_, chord) = chord_map(curve, state)?;
    let (next, arc) = arc_from_native(curve, chord.phi1, chord.theta1, mu)?;
    Ok((next, SegmentRecord { chord, arc }))
}

/// Derivative of a map step in `(s, u)` coordinates, `[[ds/ds, ds/du], [du/ds, du/du]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub ss: f64,
    pub su: f64,
    pub us: f64,
    pub uu: f64,
}

impl Jacobian2 {
    pub const IDENTITY: Self = Self { ss: 1.0, su: 0.0, us: 0.0, uu: 1.0 };

    pub fn det(&self) -> f64 {
        self.ss * self.uu - self.su * self.us
    }

    pub fn trace(&self) -> f64 {
        self.ss + self.uu
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            ss: self.ss * rhs.ss + self.su * rhs.us,
            su: self.ss * rhs.su + self.su * rhs.uu,
            us: self.us * rhs.ss + self.uu * rhs.us,
            uu: self.us * rhs.su + self.uu * rhs.uu,
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.ss, self.su, self.us, self.uu]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest entrywise difference, relative to the larger matrix scale.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let scale = self.max_abs().max(other.max_abs()).max(f64::MIN_POSITIVE);
        self.entries()
            .iter()
            .zip(other.entries())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }

    pub fn to_matrix(&self) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::new(self.ss, self.su, self.us, self.uu)
    }
}

/// Jacobian of `T1` from the chord record.
pub fn chord_jacobian(c: &ChordSegment) -> Jacobian2 {
    let (k0, k1, l1) = (c.kappa0, c.kappa1, c.length);
    let (s0, s1) = (c.theta0.sin(), c.theta1.sin());
    Jacobian2 {
        ss: (k0 * l1 - s0) / s1,
        su: l1 / (s0 * s1),
        us: k0 * k1 * l1 - k1 * s0 - k0 * s1,
        uu: (k1 * l1 - s1) / s0,
    }
}

/// Jacobian of `T2` and whether `chi` is within `TOL_CHI` of a right angle.
pub fn arc_jacobian(a: &ArcSegment) -> (Jacobian2, bool) {
    let (k1, k2, l2, chi) = (a.kappa1, a.kappa2, a.chord, a.chi);
    let (s1, s2) = (a.theta1.sin(), a.theta2.sin());
    let a1 = (2.0 * chi - a.theta1).sin();
    let a2 = (2.0 * chi - a.theta2).sin();
    let cos_chi = chi.cos();
    let near_right = cos_chi.abs() < TOL_CHI;
    let lead = if near_right {
        2.0 * chi.sin() * (2.0 * chi - a.theta1 - a.theta2).sin() / l2
    } else {
        (a1 * a2 - s1 * s2) / (l2 * cos_chi)
    };
    let jac = Jacobian2 {
        ss: (a1 - k1 * l2 * cos_chi) / s2,
        su: l2 * cos_chi / (s1 * s2),
        us: lead - k1 * a2 - k2 * a1 + k1 * k2 * l2 * cos_chi,
        uu: (a2 - k2 * l2 * cos_chi) / s1,
    };
    (jac, near_right)
}

/// Closed-form Jacobian of the full return from the record.
pub fn closed_form_jacobian(r: &SegmentRecord) -> Jacobian2 {
    let (k0, k2) = (r.chord.kappa0, r.arc.kappa2);
    let (l1, l2, chi) = (r.l1(), r.l2(), r.chi());
    let (s0, s1, s2) = (r.theta0().sin(), r.theta1().sin(), r.theta2().sin());
    let a1 = (2.0 * chi - r.theta1()).sin();
    let a2 = (2.0 * chi - r.theta2()).sin();
    let c = chi.cos();
    let w = 2.0 * chi.sin() * (2.0 * chi - r.theta1() - r.theta2()).sin();
    Jacobian2 {
        ss: (k0 * l1 * a1 - s0 * a1 - k0 * l2 * c * s1) / (s1 * s2),
        su: (l1 * a1 - l2 * c * s1) / (s0 * s1 * s2),
        us: k2 * s0 * a1 / s1 + w * (k0 * l1 - s0) / (l2 * s1) - k0 * (a2 + k2 * l1 * a1 / s1 - k2 * l2 * c),
        uu: (k2 * l2 * c - a2) / s0 + (l1 * w - k2 * l1 * l2 * a1) / (l2 * s0 * s1),
    }
}

pub fn jacobian_chord(curve: &Curve, state: &PhaseState) -> Result<Jacobian2> {
    let (_, c) = chord_map(curve, state)?;
    Ok(chord_jacobian(&c))
}

/// Jacobian of `T2` at an exit state, with the near-right-angle flag.
pub fn jacobian_arc(curve: &Curve, state: &PhaseState, mu: f64) -> Result<(Jacobian2, bool)> {
    let (_, a) = arc_map(curve, state, mu)?;
    Ok(arc_jacobian(&a))
}

/// Both evaluations of `DT` for one return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnJacobian {
    /// Chain product `DT2 * DT1`.
    pub product: Jacobian2,
    pub closed_form: Jacobian2,
    pub chi_near_right_angle: bool,
}

pub fn return_jacobian(r: &SegmentRecord) -> ReturnJacobian {
    let (d2, flag) = arc_jacobian(&r.arc);
    ReturnJacobian {
        product: d2.compose(&chord_jacobian(&r.chord)),
        closed_form: closed_form_jacobian(r),
        chi_near_right_angle: flag,
    }
}

pub fn jacobian_return(curve: &Curve, state: &PhaseState, mu: f64) -> Result<ReturnJacobian> {
    let (_, r) = return_map(curve, state, mu)?;
    Ok(return_jacobian(&r))
}

/// Outcome of the `mu`-intersection test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuIntersection {
    pub satisfied: bool,
    /// Most boundary crossings seen on one sampled circle (2 when decided by regime).
    pub worst_count: usize,
    /// True when decided by the curvature regime rather than sampling.
    pub by_regime: bool,
}

/// Whether circles of radius `mu` meet the boundary at most twice.
///
/// Outside the intermediate regime the answer follows from the curvature
/// bounds. Otherwise circles through random boundary points are sampled,
/// so a `true` result is only evidence.
pub fn mu_intersection_check(curve: &Curve, mu: f64, samples: usize, seed: u64) -> MuIntersection {
    match curve.classify_regime(mu) {
        Regime::StrongField | Regime::WeakField => {
            return MuIntersection { satisfied: true, worst_count: 2, by_regime: true };
        }
        _ => {}
    }
    if let CurveKind::Circle { .. } = curve.kind() {
        return MuIntersection { satisfied: true, worst_count: 2, by_regime: true };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 1440;
    let mut worst = 0;
    for _ in 0..samples {
        let s = rng.gen_range(0.0..curve.length());
        let beta = rng.gen_range(0.0..TAU);
        let p = curve.position(s);
        let center = p + Vec2::new(beta.cos(), beta.sin()) * mu;
        // Start half a step off the sampled point so it is not counted twice.
        let offset = beta + PI + 0.5 * TAU / steps as f64;
        let at = |k: usize| {
            let a = offset + k as f64 * TAU / steps as f64;
            curve.inside(&(center + Vec2::new(a.cos(), a.sin()) * mu)) > 0.0
        };
        let first = at(0);
        let mut prev = first;
        let mut count = 0;
        for k in 1..=steps {
            let cur = if k == steps { first } else { at(k) };
            if cur != prev {
                count += 1;
            }
            prev = cur;
        }
        worst = worst.max(count);
    }
    MuIntersection { satisfied: worst <= 2, worst_count: worst, by_regime: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn circle_chi(theta: f64, mu: f64) -> f64 {
        theta + (mu * theta.sin() / (1.0 + mu * mu - 2.0 * mu * theta.cos()).sqrt()).asin()
    }

    #[test]
    fn circle_chords() {
        let c = Curve::circle(1.0).unwrap();
        let (exit, seg) = chord_map(&c, &PhaseState::new(0.3, 0.0).unwrap()).unwrap();
        assert_relative_eq!(exit.s, 0.3 + PI, epsilon = 1e-12);
        assert_relative_eq!(seg.length, 2.0, epsilon = 1e-12);
        let (exit, seg) = chord_map(&c, &PhaseState::from_angle(0.0, PI / 3.0)).unwrap();
        assert_relative_eq!(exit.s, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(seg.length, 3f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(exit.u, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn ellipse_axis_chord() {
        let e = Curve::ellipse(2.0).unwrap();
        let (exit, seg) = chord_map(&e, &PhaseState::new(0.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(seg.length, 4.0, epsilon = 1e-12);
        assert_relative_eq!(exit.s, e.length() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn circle_arc_half_angle() {
        let c = Curve::circle(1.0).unwrap();
        let (next, arc) = arc_map(&c, &PhaseState::new(1.0, 0.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(arc.chi, PI / 2.0 + (0.5 / 1.25f64.sqrt()).asin(), epsilon = 1e-12);
        assert_relative_eq!(arc.chi, 2.034443935795703, epsilon = 1e-12);
        assert_relative_eq!(next.u, 0.0, epsilon = 1e-12);
        let (next, rec) = return_map(&c, &PhaseState::new(1.0, 0.0).unwrap(), 0.5).unwrap();
        assert_relative_eq!(rec.advance(), 2.0 * arc.chi, epsilon = 1e-12);
        assert_relative_eq!(next.s, wrap(1.0 + 2.0 * arc.chi, TAU), epsilon = 1e-12);
    }

    #[test]
    fn circle_advance_matches_closed_form() {
        let c = Curve::circle(1.0).unwrap();
        for mu in [0.1, 0.5, 0.9] {
            for k in 1..20 {
                let theta = k as f64 * PI / 20.0;
                let (next, rec) = return_map(&c, &PhaseState::from_angle(0.7, theta), mu).unwrap();
                assert_relative_eq!(rec.advance(), 2.0 * circle_chi(theta, mu), epsilon = 1e-10);
                assert_relative_eq!(next.u, -theta.cos(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn record_invariants() {
        let e = Curve::ellipse(2.0).unwrap();
        for mu in [0.3, 5.0] {
            for k in 1..12 {
                let st = PhaseState::new(0.37 * k as f64, -0.9 + 0.15 * k as f64).unwrap();
                let (_, r) = return_map(&e, &st, mu).unwrap();
                assert_relative_eq!(r.chi().sin(), r.l2() / (2.0 * mu), epsilon = 1e-10);
                assert_relative_eq!((r.arc.p2 - r.larmor_center()).norm(), mu, epsilon = 1e-12);
                assert_relative_eq!((r.arc.p1 - r.larmor_center()).norm(), mu, epsilon = 1e-12);
                assert!(e.inside(&r.arc.p2).abs() < 1e-12);
                assert_relative_eq!(r.gamma_length(), 2.0 * mu * r.chi(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn tangent_states_are_rejected() {
        let e = Curve::ellipse(2.0).unwrap();
        assert!(matches!(chord_map(&e, &PhaseState::new(0.0, 1.0).unwrap()), Err(Error::TangentChord { .. })));
        assert!(matches!(return_map(&e, &PhaseState::new(0.0, -1.0).unwrap(), 0.3), Err(Error::TangentChord { .. })));
    }

    #[test]
    fn near_boundary_returns_are_near_identity() {
        let e = Curve::ellipse(2.0).unwrap();
        for u in [-(1.0 - 1e-6), 1.0 - 1e-6] {
            let st = PhaseState::new(1.0, u).unwrap();
            let (next, r) = return_map(&e, &st, 0.3).unwrap();
            assert!((next.u - u).abs() < 1e-5);
            let ds = if u < 0.0 { r.advance() } else { r.advance() - e.length() };
            assert!(ds.abs() < 1e-2, "advance {ds}");
        }
    }

    #[test]
    fn circle_jacobians() {
        let c = Curve::circle(1.0).unwrap();
        let st = PhaseState::new(0.2, 0.3).unwrap();
        let d1 = jacobian_chord(&c, &st).unwrap();
        assert_relative_eq!(d1.ss, 1.0, epsilon = 1e-12);
        assert_relative_eq!(d1.us, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d1.uu, 1.0, epsilon = 1e-12);
        let (d2, _) = jacobian_arc(&c, &st, 0.5).unwrap();
        assert_relative_eq!(d2.us, 0.0, epsilon = 1e-10);
        assert_relative_eq!(d2.uu, 1.0, epsilon = 1e-10);
        let dt = jacobian_return(&c, &st, 0.5).unwrap();
        assert_relative_eq!(dt.product.ss, 1.0, epsilon = 1e-10);
        assert_relative_eq!(dt.product.us, 0.0, epsilon = 1e-10);
        assert_relative_eq!(dt.product.uu, 1.0, epsilon = 1e-10);
    }

    fn fd_return(curve: &Curve, st: &PhaseState, mu: f64, h: f64) -> Jacobian2 {
        let img = |s: f64, u: f64| {
            let (n, r) = return_map(curve, &PhaseState { s, u }, mu).unwrap();
            (s + r.advance(), n.u)
        };
        let (sp, up) = img(st.s + h, st.u);
        let (sm, um) = img(st.s - h, st.u);
        let (sp2, up2) = img(st.s, st.u + h);
        let (sm2, um2) = img(st.s, st.u - h);
        Jacobian2 {
            ss: (sp - sm) / (2.0 * h),
            su: (sp2 - sm2) / (2.0 * h),
            us: (up - um) / (2.0 * h),
            uu: (up2 - um2) / (2.0 * h),
        }
    }

    #[test]
    fn return_jacobian_matches_finite_differences() {
        let e = Curve::ellipse(2.0).unwrap();
        for mu in [0.3, 5.0] {
            for k in 0..8 {
                let st = PhaseState::new(0.8 * k as f64 + 0.1, -0.8 + 0.2 * k as f64).unwrap();
                let dt = jacobian_return(&e, &st, mu).unwrap();
                let fd = fd_return(&e, &st, mu, 1e-6);
                assert!(dt.product.relative_distance(&fd) < 1e-5, "{:?} vs {:?}", dt.product, fd);
                assert!(dt.product.relative_distance(&dt.closed_form) < 1e-9);
                assert!((dt.product.det() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn mu_intersection() {
        let e = Curve::ellipse(2.0).unwrap();
        assert!(mu_intersection_check(&e, 0.3, 10, 1).satisfied);
        assert!(mu_intersection_check(&e, 5.0, 10, 1).by_regime);
        let r = mu_intersection_check(&e, 1.0, 2000, 7);
        assert!(!r.satisfied);
        assert!(r.worst_count >= 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn determinants_are_one(s in 0.0..9.6f64, u in -0.98..0.98f64, mu in prop::sample::select(vec![0.3, 1.0, 5.0])) {
            let e = Curve::ellipse(2.0).unwrap();
            let st = PhaseState::new(s, u).unwrap();
            let (_, c) = chord_map(&e, &st).unwrap();
            prop_assert!((chord_jacobian(&c).det() - 1.0).abs() < 1e-8);
            if let Ok(j) = jacobian_return(&e, &st, mu) {
                prop_assert!((j.product.det() - 1.0).abs() < 1e-8);
                prop_assert!(j.product.relative_distance(&j.closed_form) < 1e-9);
            }
        }

        #[test]
        fn circle_conserves_u(s in 0.0..6.2f64, u in -0.99..0.99f64, mu in 0.05..3.0f64) {
            let c = Curve::circle(1.0).unwrap();
            if let Ok((next, _)) = return_map(&c, &PhaseState::new(s, u).unwrap(), mu) {
                prop_assert!((next.u - u).abs() < 1e-11);
            }
        }
    }
}
