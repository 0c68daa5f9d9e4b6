//! Generating function `G(s0, s2) = -l1 - |gamma| + S/mu` and its gradient.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::boundary::{Curve, CurveKind, Regime};
use crate::dynamics::{closed_form_jacobian, return_map, PhaseState, SegmentRecord};
use crate::error::{Error, Result};
use crate::geometry::{cross, rotate, wrap};
use crate::quadrature::integrate_adaptive;
use crate::tolerances::{TOL_AREA, TOL_TANGENT};

/// `G` split into its chord/area part `E` and the magnetic part `F_mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBreakdown {
    pub g: f64,
    /// `-l1 - A/mu`
    pub e: f64,
    /// `-|gamma| + Area(A u S)/mu`
    pub f_mu: f64,
    pub l1: f64,
    pub gamma_length: f64,
    /// Area between the exterior chord `P1 P2` and the boundary, inside the Larmor circle.
    pub area_a: f64,
    /// Area inside the Larmor arc and outside the domain.
    pub area_s: f64,
    pub chi: f64,
    pub l2: f64,
}

/// Circular segment `A u S` cut off by the exterior chord.
pub fn segment_area(mu: f64, chi: f64) -> f64 {
    mu * mu * (chi - chi.sin() * chi.cos())
}

/// `F_mu` from the half angle.
pub fn f_mu(mu: f64, chi: f64) -> f64 {
    -mu * (chi + chi.sin() * chi.cos())
}

/// `F_mu` from the exterior chord; `acute` selects the branch `chi <= pi/2`.
pub fn f_mu_from_chord(mu: f64, l2: f64, acute: bool) -> f64 {
    let root = (1.0 - l2 * l2 / (4.0 * mu * mu)).max(0.0).sqrt();
    let sign = if acute { 1.0 } else { -1.0 };
    -mu * (sign * root).acos() - sign * 0.5 * l2 * root
}

/// Areas `(A, S)` of one return.
pub fn segment_areas(curve: &Curve, record: &SegmentRecord) -> Result<(f64, f64)> {
    let arc = &record.arc;
    let phi1 = arc.phi1;
    let phi2 = phi1 + wrap(arc.phi2 - phi1, TAU);
    let p1 = arc.p1;
    let integrand = |phi: f64| {
        let d = curve.position_native(phi) - p1;
        0.5 * cross(&d, &curve.d1(phi))
    };
    let forward = if phi2 > phi1 {
        integrate_adaptive(integrand, phi1, phi2, 0.01 * TOL_AREA)?
    } else {
        0.0
    };
    // The region A lies on the same side of the chord as the Larmor arc.
    let chord = arc.p2 - p1;
    let arc_mid = arc.center + rotate(&(p1 - arc.center), arc.chi);
    let piece_mid = curve.position_native(0.5 * (phi1 + phi2));
    let same_side = cross(&chord, &(arc_mid - p1)) * cross(&chord, &(piece_mid - p1)) >= 0.0;
    let a = if same_side { forward } else { curve.area() - forward };
    let s = segment_area(arc.mu, arc.chi) - a;
    Ok((a, s))
}

/// Generating function of one return, with its decomposition.
pub fn generating_function(curve: &Curve, record: &SegmentRecord) -> Result<ActionBreakdown> {
    let mu = record.mu();
    let (a, s) = segment_areas(curve, record)?;
    let chi = record.chi();
    let l1 = record.l1();
    let gamma = record.gamma_length();
    let f = -gamma + segment_area(mu, chi) / mu;
    Ok(ActionBreakdown {
        g: -l1 - gamma + s / mu,
        e: -l1 - a / mu,
        f_mu: f,
        l1,
        gamma_length: gamma,
        area_a: a,
        area_s: s,
        chi,
        l2: record.l2(),
    })
}

/// Closed form of `G` on the ellipse `(lambda cos phi, sin phi)`, strong field only.
pub fn ellipse_generating_function(lambda: f64, mu: f64, record: &SegmentRecord) -> f64 {
    let c = |phi: f64| (lambda * lambda * phi.sin().powi(2) + phi.cos().powi(2)).sqrt();
    let phi0 = record.chord.phi0;
    let phi1 = record.chord.phi1;
    let phi2 = phi1 + wrap(record.arc.phi2 - phi1, TAU);
    let (m10, p10) = (0.5 * (phi1 - phi0), 0.5 * (phi1 + phi0));
    let (m21, p21) = (0.5 * (phi2 - phi1), 0.5 * (phi2 + phi1));
    let l2 = 2.0 * m21.sin() * c(p21);
    -2.0 * m10.sin() * c(p10) - lambda * (m21 - 0.5 * (2.0 * m21).sin()) / mu
        + f_mu_from_chord(mu, l2, record.chi() <= FRAC_PI_2)
}

/// Return connecting `s0` to `s0 + advance` in the strong-field regime.
///
/// The lifted advance is increasing in `u0` from 0 to `L`, so the
/// connecting `u0` is bracketed and bisected, then polished with `ds2/du0`.
pub fn shoot(curve: &Curve, mu: f64, s0: f64, advance: f64) -> Result<SegmentRecord> {
    let regime = curve.classify_regime(mu);
    if regime != Regime::StrongField {
        return Err(Error::NotTwist(format!("shooting needs the strong-field regime, found {regime}")));
    }
    let eval = |u: f64| return_map(curve, &PhaseState { s: s0, u }, mu).map(|(_, r)| r);
    let edge = 1.0 - 1e3 * TOL_TANGENT;
    let (mut lo, mut hi) = (-edge, edge);
    let not_realizable = || Error::NotRealizable { s0, s2: s0 + advance };
    if !(eval(lo)?.advance() < advance && eval(hi)?.advance() > advance) {
        return Err(not_realizable());
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid)?.advance() < advance {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    let mut rec = eval(u)?;
    for _ in 0..2 {
        let slope = closed_form_jacobian(&rec).su;
        if !(slope > 0.0) {
            break;
        }
        let next = (u - (rec.advance() - advance) / slope).clamp(lo - 1e-12, hi + 1e-12);
        let trial = eval(next)?;
        if (trial.advance() - advance).abs() >= (rec.advance() - advance).abs() {
            break;
        }
        u = next;
        rec = trial;
    }
    Ok(rec)
}

/// Gradient `(dG/ds0, dG/ds2) = (-u0, u2)` of a realizable strong-field pair.
pub fn action_gradient(curve: &Curve, mu: f64, s0: f64, s2: f64) -> Result<(f64, f64)> {
    let advance = wrap(s2 - s0, curve.length());
    let rec = shoot(curve, mu, s0, advance)?;
    Ok((-rec.entry().u, rec.reentry().u))
}

/// `G` as a function of the boundary pair, with `s2` taken as the lifted value.
pub fn generating_function_pair(curve: &Curve, mu: f64, s0: f64, s2: f64) -> Result<ActionBreakdown> {
    let rec = shoot(curve, mu, s0, s2 - s0)?;
    generating_function(curve, &rec)
}

/// Smallest `ds2/du0` found on a grid and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistMeasure {
    pub min_slope: f64,
    pub at: PhaseState,
    /// States skipped because the return was undefined there.
    pub skipped: usize,
}

/// Minimum over an `ns x nu` interior grid of the `ds2/du0` entry of `DT`.
pub fn twist_measure(curve: &Curve, mu: f64, ns: usize, nu: usize) -> TwistMeasure {
    let mut out = TwistMeasure { min_slope: f64::INFINITY, at: PhaseState { s: 0.0, u: 0.0 }, skipped: 0 };
    for i in 0..ns {
        let s = curve.length() * i as f64 / ns as f64;
        for j in 0..nu {
            let u = -1.0 + (2 * j + 1) as f64 / nu as f64;
            let st = PhaseState { s, u };
            match return_map(curve, &st, mu) {
                Ok((_, rec)) => {
                    let slope = closed_form_jacobian(&rec).su;
                    if slope < out.min_slope {
                        out.min_slope = slope;
                        out.at = st;
                    }
                }
                Err(_) => out.skipped += 1,
            }
        }
    }
    out
}

/// Ellipse axis ratio when the curve is an ellipse.
pub fn ellipse_lambda(curve: &Curve) -> Option<f64> {
    match curve.kind() {
        CurveKind::Ellipse { lambda } => Some(*lambda),
        _ => None,
    }
}
