//! Strictly convex boundary curves parametrized by arc length.
//!
//! Every curve carries a native parameter `phi` with period `2pi`
//! (polar angle for the circle, the eccentric angle `(lambda cos phi, sin phi)`
//! for the ellipse, the series parameter for Fourier curves) and an
//! arc-length coordinate `s` with period `L`. Orientation is counterclockwise,
//! so the normal `n = J t` points into the domain.

mod arclength;
pub mod fourier;

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{cross, perp, vec2, wrap, wrap_centered, Vec2};
use crate::tolerances::{TOL_GEOM, TOL_REGIME};

use arclength::{ArcLengthTable, DEFAULT_PANELS};
pub use fourier::FourierCurve;

/// A smooth `2pi`-periodic plane curve supplied by the user.
///
/// Only the position and its first two derivatives are required; curvature
/// is always derived from them.
pub trait Parametrization: Send + Sync + fmt::Debug {
    fn position(&self, phi: f64) -> Vec2;
    fn first_derivative(&self, phi: f64) -> Vec2;
    fn second_derivative(&self, phi: f64) -> Vec2;
}

#[derive(Debug, Clone)]
pub enum CurveKind {
    Circle { radius: f64 },
    /// `(lambda cos phi, sin phi)` with `lambda >= 1`.
    Ellipse { lambda: f64 },
    Parametric(Arc<dyn Parametrization>),
}

/// Differential geometry at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub position: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
    pub curvature: f64,
    /// Polar angle of the tangent in `[0, 2pi)`.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvaturePair {
    pub rho_min: f64,
    pub rho_max: f64,
    pub argmin_s: f64,
    pub argmax_s: f64,
}

/// Position of the Larmor radius relative to the radii of curvature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    StrongField,
    Intermediate,
    WeakField,
    Boundary,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Regime::StrongField => "StrongField",
            Regime::Intermediate => "Intermediate",
            Regime::WeakField => "WeakField",
            Regime::Boundary => "Boundary",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy)]
struct CurvatureSummary {
    kappa_min: f64,
    kappa_max: f64,
    phi_min: f64,
    phi_max: f64,
}

/// Immutable boundary curve with arc-length machinery.
#[derive(Debug, Clone)]
pub struct Curve {
    kind: CurveKind,
    length: f64,
    area: f64,
    table: Option<ArcLengthTable>,
    curvature: CurvatureSummary,
    smoothness: Option<u32>,
}

const CURVATURE_SAMPLES: usize = 4096;

impl Curve {
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("circle radius must be positive, got {radius}")));
        }
        Self::build(CurveKind::Circle { radius }, true)
    }

    pub fn ellipse(lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ellipse axis ratio lambda must satisfy lambda >= 1, got {lambda}"
            )));
        }
        Self::build(CurveKind::Ellipse { lambda }, true)
    }

    /// Generic curve; fails unless the sampled curvature is strictly positive.
    pub fn parametric(curve: Arc<dyn Parametrization>) -> Result<Self> {
        Self::build(CurveKind::Parametric(curve), true)
    }

    /// Generic curve that may have isolated points of vanishing curvature.
    ///
    /// Used for diagnostics such as [`crate::analysis::vanishing_curvature_guard`];
    /// the dynamics are not guaranteed on such curves.
    pub fn parametric_weakly_convex(curve: Arc<dyn Parametrization>) -> Result<Self> {
        Self::build(CurveKind::Parametric(curve), false)
    }

    pub fn fourier(curve: FourierCurve) -> Result<Self> {
        Self::parametric(Arc::new(curve))
    }

    /// Parse `"circle:R=1.0"` or `"ellipse:lambda=2.0"`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse { line: 1, message: m };
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        let mut params = std::collections::BTreeMap::new();
        for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value in curve spec, found {item:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|e| bad(format!("curve parameter {k}: {e}")))?;
            params.insert(k.trim().to_ascii_lowercase(), v);
        }
        let take = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| bad(format!("curve spec {name:?} is missing {key}")))
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "circle" => Self::circle(take("r")?),
            "ellipse" => Self::ellipse(take("lambda")?),
            other => Err(bad(format!("unknown curve kind {other:?}"))),
        }
    }

    /// Record the differentiability class claimed for the curve (not verified).
    pub fn with_claimed_smoothness(mut self, k: u32) -> Self {
        self.smoothness = Some(k);
        self
    }

    pub fn claimed_smoothness(&self) -> Option<u32> {
        self.smoothness
    }

    fn build(kind: CurveKind, strict: bool) -> Result<Self> {
        let mut curve = Self {
            kind,
            length: 0.0,
            area: 0.0,
            table: None,
            curvature: CurvatureSummary { kappa_min: 0.0, kappa_max: 0.0, phi_min: 0.0, phi_max: 0.0 },
            smoothness: None,
        };
        match curve.kind {
            CurveKind::Circle { radius } => {
                curve.length = TAU * radius;
                curve.area = std::f64::consts::PI * radius * radius;
                curve.smoothness = Some(u32::MAX);
            }
            _ => {
                if let CurveKind::Ellipse { .. } = curve.kind {
                    curve.smoothness = Some(u32::MAX);
                }
                let table = ArcLengthTable::build(
                    |phi| curve.speed(phi),
                    |phi| {
                        let d = curve.d1(phi);
                        d.y.atan2(d.x)
                    },
                    DEFAULT_PANELS,
                );
                curve.length = table.total_length();
                curve.table = Some(table);
                let area = crate::quadrature::GaussLegendre::new(32);
                let panels = 64;
                let w = TAU / panels as f64;
                curve.area = (0..panels)
                    .map(|k| {
                        area.integrate(
                            |phi| 0.5 * cross(&curve.position_native(phi), &curve.d1(phi)),
                            k as f64 * w,
                            (k + 1) as f64 * w,
                        )
                    })
                    .sum();
            }
        }
        if !(curve.area > 0.0) {
            return Err(Error::InvalidParameter(
                "boundary must be oriented counterclockwise (non-positive enclosed area)".into(),
            ));
        }
        if let Some(table) = &curve.table {
            let turning = table.tau_guess(TAU * (1.0 - 1e-15)) - table.tau_guess(0.0);
            if (turning - TAU).abs() > 1e-6 {
                return Err(Error::InvalidParameter(format!(
                    "boundary tangent must turn exactly once, turned {:.6} rad",
                    turning
                )));
            }
        }
        curve.curvature = curve.sample_curvature();
        let limit = if strict { TOL_GEOM } else { -TOL_GEOM };
        if curve.curvature.kappa_min <= limit {
            return Err(Error::ConvexityViolation {
                phi: curve.curvature.phi_min,
                curvature: curve.curvature.kappa_min,
            });
        }
        Ok(curve)
    }

    fn sample_curvature(&self) -> CurvatureSummary {
        if let CurveKind::Circle { radius } = self.kind {
            return CurvatureSummary { kappa_min: 1.0 / radius, kappa_max: 1.0 / radius, phi_min: 0.0, phi_max: 0.0 };
        }
        let h = TAU / CURVATURE_SAMPLES as f64;
        let values: Vec<f64> = (0..CURVATURE_SAMPLES)
            .map(|i| self.curvature_native(i as f64 * h))
            .collect();
        let (imin, imax) = values.iter().enumerate().fold((0, 0), |(a, b), (i, v)| {
            (if *v < values[a] { i } else { a }, if *v > values[b] { i } else { b })
        });
        let refine = |i: usize, sign: f64| {
            let f = |phi: f64| sign * self.curvature_native(phi);
            let (x, fx) = golden_section_min(f, (i as f64 - 1.0) * h, (i as f64 + 1.0) * h);
            (wrap(x, TAU), sign * fx)
        };
        let (phi_min, kappa_min) = refine(imin, 1.0);
        let (phi_max, kappa_max) = refine(imax, -1.0);
        CurvatureSummary {
            kappa_min: kappa_min.min(values[imin]),
            kappa_max: kappa_max.max(values[imax]),
            phi_min,
            phi_max,
        }
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// Total arc length `L`.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Enclosed area.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, CurveKind::Circle { .. })
    }

    pub fn position_native(&self, phi: f64) -> Vec2 {
        match &self.kind {
            CurveKind::Circle { radius } => vec2(radius * phi.cos(), radius * phi.sin()),
            CurveKind::Ellipse { lambda } => vec2(lambda * phi.cos(), phi.sin()),
            CurveKind::Parametric(p) => p.position(phi),
        }
    }

    pub fn d1(&self, phi: f64) -> Vec2 {
        match &self.kind {
            CurveKind::Circle { radius } => vec2(-radius * phi.sin(), radius * phi.cos()),
            CurveKind::Ellipse { lambda } => vec2(-lambda * phi.sin(), phi.cos()),
            CurveKind::Parametric(p) => p.first_derivative(phi),
        }
    }

    pub fn d2(&self, phi: f64) -> Vec2 {
        match &self.kind {
            CurveKind::Circle { radius } => vec2(-radius * phi.cos(), -radius * phi.sin()),
            CurveKind::Ellipse { lambda } => vec2(-lambda * phi.cos(), -phi.sin()),
            CurveKind::Parametric(p) => p.second_derivative(phi),
        }
    }

    /// `ds/dphi`.
    pub fn speed(&self, phi: f64) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius } => *radius,
            CurveKind::Ellipse { lambda } => {
                let (s, c) = phi.sin_cos();
                (lambda * lambda * s * s + c * c).sqrt()
            }
            CurveKind::Parametric(p) => p.first_derivative(phi).norm(),
        }
    }

    pub fn curvature_native(&self, phi: f64) -> f64 {
        let d1 = self.d1(phi);
        let d2 = self.d2(phi);
        cross(&d1, &d2) / d1.norm().powi(3)
    }

    pub fn evaluate_native(&self, phi: f64) -> BoundaryPoint {
        let d1 = self.d1(phi);
        let tangent = d1 / d1.norm();
        BoundaryPoint {
            position: self.position_native(phi),
            tangent,
            normal: perp(&tangent),
            curvature: self.curvature_native(phi),
            tau: wrap(tangent.y.atan2(tangent.x), TAU),
        }
    }

    /// Geometry at arc length `s` (any real, reduced mod `L`).
    pub fn evaluate(&self, s: f64) -> BoundaryPoint {
        self.evaluate_native(self.arclength_to_native(s))
    }

    pub fn position(&self, s: f64) -> Vec2 {
        self.position_native(self.arclength_to_native(s))
    }

    /// Arc length of native parameter `phi`; lifted so that `phi + 2pi` maps to `s + L`.
    pub fn native_to_arclength(&self, phi: f64) -> f64 {
        let turns = (phi / TAU).floor();
        let reduced = phi - turns * TAU;
        let base = match (&self.kind, &self.table) {
            (CurveKind::Circle { radius }, _) => radius * reduced,
            (_, Some(table)) => table.s_of_phi(&|p| self.speed(p), reduced.min(TAU)),
            _ => unreachable!("non-circular curves always carry a table"),
        };
        base + turns * self.length
    }

    /// Native parameter of arc length `s`; lifted like [`Self::native_to_arclength`].
    pub fn arclength_to_native(&self, s: f64) -> f64 {
        let turns = (s / self.length).floor();
        let reduced = s - turns * self.length;
        let base = match (&self.kind, &self.table) {
            (CurveKind::Circle { radius }, _) => reduced / radius,
            (_, Some(table)) => table.phi_of_s(&|p| self.speed(p), reduced),
            _ => unreachable!(),
        };
        base + turns * TAU
    }

    /// Tangent angle at a lifted native parameter, continuous in `phi`
    /// and increasing by `2pi` per turn.
    pub(crate) fn tau_lift(&self, phi: f64) -> f64 {
        let turns = (phi / TAU).floor();
        turns * TAU + self.tau_lifted_native(phi - turns * TAU)
    }

    fn tau_lifted_native(&self, phi: f64) -> f64 {
        let phi = phi.clamp(0.0, TAU);
        match (&self.kind, &self.table) {
            (CurveKind::Circle { .. }, _) => phi + FRAC_PI_2,
            (_, Some(table)) => {
                let guess = table.tau_guess(phi);
                let d = self.d1(phi);
                let raw = d.y.atan2(d.x);
                guess + wrap_centered(raw - guess, TAU)
            }
            _ => unreachable!(),
        }
    }

    pub fn curvature_extrema(&self) -> Result<CurvaturePair> {
        let c = self.curvature;
        if c.kappa_min <= TOL_GEOM {
            return Err(Error::ConvexityViolation { phi: c.phi_min, curvature: c.kappa_min });
        }
        Ok(CurvaturePair {
            rho_min: 1.0 / c.kappa_max,
            rho_max: 1.0 / c.kappa_min,
            argmin_s: self.native_to_arclength(c.phi_max),
            argmax_s: self.native_to_arclength(c.phi_min),
        })
    }

    pub fn kappa_min(&self) -> f64 {
        self.curvature.kappa_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.curvature.kappa_max
    }

    /// Smallest radius of curvature (`1 / kappa_max`).
    pub fn rho_min(&self) -> f64 {
        1.0 / self.curvature.kappa_max
    }

    pub fn classify_regime(&self, mu: f64) -> Regime {
        let rho_min = 1.0 / self.curvature.kappa_max;
        let rho_max = if self.curvature.kappa_min > 0.0 {
            1.0 / self.curvature.kappa_min
        } else {
            f64::INFINITY
        };
        let near = |rho: f64| rho.is_finite() && (mu - rho).abs() <= TOL_REGIME * rho;
        if near(rho_min) || near(rho_max) {
            Regime::Boundary
        } else if mu < rho_min {
            Regime::StrongField
        } else if mu > rho_max {
            Regime::WeakField
        } else {
            Regime::Intermediate
        }
    }

    /// Signed inside indicator: negative inside, positive outside, zero on the boundary.
    ///
    /// Exact implicit forms are used for the circle and ellipse; generic curves
    /// use the signed distance to the nearest boundary point.
    pub fn inside(&self, p: &Vec2) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius } => p.norm() - radius,
            CurveKind::Ellipse { lambda } => (p.x / lambda).hypot(p.y) - 1.0,
            CurveKind::Parametric(_) => {
                let phi = self.project(p);
                let q = self.position_native(phi);
                let d = p - q;
                let side = cross(&self.d1(phi), &d);
                if side > 0.0 {
                    -d.norm()
                } else {
                    d.norm()
                }
            }
        }
    }

    /// Native parameter of the boundary point nearest to `p`.
    pub fn project(&self, p: &Vec2) -> f64 {
        match &self.kind {
            CurveKind::Circle { .. } => wrap(p.y.atan2(p.x), TAU),
            _ => {
                let n = 512;
                let h = TAU / n as f64;
                let mut best = (0.0, f64::INFINITY);
                for i in 0..n {
                    let phi = i as f64 * h;
                    let d = (self.position_native(phi) - p).norm_squared();
                    if d < best.1 {
                        best = (phi, d);
                    }
                }
                let (lo, hi) = (best.0 - h, best.0 + h);
                let mut phi = best.0;
                for _ in 0..50 {
                    let r = self.position_native(phi) - p;
                    let d1 = self.d1(phi);
                    let g = r.dot(&d1);
                    let gp = d1.norm_squared() + r.dot(&self.d2(phi));
                    if gp <= 0.0 {
                        break;
                    }
                    let next = (phi - g / gp).clamp(lo, hi);
                    let done = (next - phi).abs() < 1e-15;
                    phi = next;
                    if done {
                        break;
                    }
                }
                wrap(phi, TAU)
            }
        }
    }

    /// Cheap native-parameter guess for a point on or near the boundary.
    pub(crate) fn native_guess(&self, p: &Vec2) -> f64 {
        match &self.kind {
            CurveKind::Circle { .. } => wrap(p.y.atan2(p.x), TAU),
            CurveKind::Ellipse { lambda } => wrap(p.y.atan2(p.x / lambda), TAU),
            CurveKind::Parametric(_) => self.project(p),
        }
    }
}

fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ellipse_kappa(lambda: f64, phi: f64) -> f64 {
        lambda / (lambda * lambda * phi.sin().powi(2) + phi.cos().powi(2)).powf(1.5)
    }

    #[test]
    fn circle_point_geometry() {
        let c = Curve::circle(1.0).unwrap();
        let p = c.evaluate(0.0);
        assert_relative_eq!(p.position, vec2(1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(p.tangent, vec2(0.0, 1.0), epsilon = 1e-15);
        assert_relative_eq!(p.normal, vec2(-1.0, 0.0), epsilon = 1e-15);
        assert_relative_eq!(p.curvature, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.native_to_arclength(1.234), 1.234, epsilon = 1e-15);
    }

    #[test]
    fn ellipse_curvature_at_vertices() {
        let e = Curve::ellipse(2.0).unwrap();
        assert_relative_eq!(e.curvature_native(0.0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(e.curvature_native(PI / 2.0), 0.25, epsilon = 1e-14);
        let s = e.native_to_arclength(PI / 2.0);
        assert_relative_eq!(e.evaluate(s).curvature, 0.25, epsilon = 1e-10);
    }

    #[test]
    fn ellipse_quarter_perimeter_by_symmetry() {
        let e = Curve::ellipse(2.0).unwrap();
        let l = e.length();
        assert_relative_eq!(e.native_to_arclength(PI / 2.0), l / 4.0, epsilon = 1e-12);
        assert_relative_eq!(e.native_to_arclength(PI), l / 2.0, epsilon = 1e-12);
        // Ramanujan-free check: perimeter of x^2/4 + y^2 = 1
        assert_relative_eq!(l, 9.688_448_220_547_675, epsilon = 1e-12);
        let unit = Curve::ellipse(1.0).unwrap();
        assert_relative_eq!(unit.native_to_arclength(2.5), 2.5, epsilon = 1e-13);
    }

    #[test]
    fn curvature_extrema_closed_forms() {
        let c = Curve::circle(2.0).unwrap().curvature_extrema().unwrap();
        assert_eq!((c.rho_min, c.rho_max), (2.0, 2.0));
        for lambda in [2.0, 1.05] {
            let e = Curve::ellipse(lambda).unwrap().curvature_extrema().unwrap();
            assert_relative_eq!(e.rho_min, 1.0 / lambda, epsilon = 1e-10);
            assert_relative_eq!(e.rho_max, lambda * lambda, epsilon = 1e-10);
        }
    }

    #[test]
    fn regimes_for_ellipse() {
        let e = Curve::ellipse(2.0).unwrap();
        assert_eq!(e.classify_regime(0.3), Regime::StrongField);
        assert_eq!(e.classify_regime(1.0), Regime::Intermediate);
        assert_eq!(e.classify_regime(5.0), Regime::WeakField);
        assert_eq!(e.classify_regime(0.5), Regime::Boundary);
        assert_eq!(Curve::circle(1.0).unwrap().classify_regime(1.0), Regime::Boundary);
    }

    #[test]
    fn inside_indicator_signs() {
        let c = Curve::circle(1.0).unwrap();
        assert!(c.inside(&vec2(0.0, 0.0)) < 0.0);
        assert!(c.inside(&vec2(2.0, 0.0)) > 0.0);
        let e = Curve::ellipse(2.0).unwrap();
        assert!(e.inside(&vec2(2.0, 0.0)).abs() < TOL_GEOM);
        let f = Curve::fourier(
            FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.0], [0.1, 0.0, 0.0, 0.1]]).unwrap(),
        )
        .unwrap();
        assert!(f.inside(&vec2(0.0, 0.0)) < 0.0);
        assert!(f.inside(&vec2(3.0, 0.0)) > 0.0);
        let on = f.position_native(2.0);
        assert!(f.inside(&on).abs() < 1e-12);
    }

    #[test]
    fn unit_speed_and_derivative_curvature_on_ellipse() {
        let e = Curve::ellipse(2.0).unwrap();
        let h = 1e-4;
        for i in 0..50 {
            let s = i as f64 * e.length() / 50.0 + 0.013;
            let fd = (e.position(s + h) - e.position(s - h)) / (2.0 * h);
            assert!((fd.norm() - 1.0).abs() < 1e-7, "speed {}", fd.norm());
            let phi = e.arclength_to_native(s);
            assert_relative_eq!(e.evaluate(s).curvature, ellipse_kappa(2.0, phi), epsilon = 1e-10);
        }
    }

    #[test]
    fn spec_strings() {
        assert!(Curve::from_spec("circle:R=1.0").unwrap().is_circle());
        let e = Curve::from_spec("ellipse:lambda=2.0").unwrap();
        assert!(matches!(e.kind(), CurveKind::Ellipse { lambda } if *lambda == 2.0));
        assert!(Curve::from_spec("ellipse:lambda=0.5").is_err());
        assert!(Curve::from_spec("square:a=1").is_err());
        assert!(Curve::from_spec("circle:R=abc").is_err());
    }

    #[test]
    fn non_convex_curves_are_rejected() {
        // z = e^{i phi} + a e^{2 i phi} has kappa_min proportional to (1 - 2a)(1 - 4a)
        let dented = FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.0], [0.35, 0.0, 0.0, 0.35]]).unwrap();
        assert!(matches!(Curve::fourier(dented), Err(Error::ConvexityViolation { .. })));
        let flat = FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.0], [0.25, 0.0, 0.0, 0.25]]).unwrap();
        assert!(Curve::fourier(flat.clone()).is_err());
        let weak = Curve::parametric_weakly_convex(Arc::new(flat)).unwrap();
        assert!(weak.kappa_min().abs() < 1e-9);
        assert!(weak.curvature_extrema().is_err());
        let clockwise = FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, -1.0]]).unwrap();
        assert!(Curve::fourier(clockwise).is_err());
    }
    fn moved(harmonics: &[[f64; 4]], angle: f64, shift: (f64, f64)) -> FourierCurve {
        let (c, s) = (angle.cos(), angle.sin());
        let mut out: Vec<[f64; 4]> = harmonics
            .iter()
            .map(|h| [c * h[0] - s * h[2], c * h[1] - s * h[3], s * h[0] + c * h[2], s * h[1] + c * h[3]])
            .collect();
        out[0][0] += shift.0;
        out[0][2] += shift.1;
        FourierCurve::new(out).unwrap()
    }

    #[test]
    fn regime_is_invariant_under_rigid_motions() {
        let base = [[0.0; 4], [1.3, 0.0, 0.0, 0.9], [0.05, 0.02, -0.03, 0.04], [0.0, 0.01, 0.01, 0.0]];
        let reference = Curve::fourier(moved(&base, 0.0, (0.0, 0.0))).unwrap();
        let ext = reference.curvature_extrema().unwrap();
        let probes = [0.5 * ext.rho_min, 0.5 * (ext.rho_min + ext.rho_max), 2.0 * ext.rho_max];
        for (angle, shift) in [(0.7, (1.0, -2.0)), (2.5, (-0.3, 0.4)), (-1.1, (5.0, 5.0))] {
            let curve = Curve::fourier(moved(&base, angle, shift)).unwrap();
            assert_relative_eq!(curve.length(), reference.length(), epsilon = 1e-10);
            for mu in probes {
                assert_eq!(curve.classify_regime(mu), reference.classify_regime(mu));
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(200))]

        #[test]
        fn arclength_round_trip(phi in 0.0..TAU, lambda in 1.0..3.0f64) {
            let e = Curve::ellipse(lambda).unwrap();
            let back = e.arclength_to_native(e.native_to_arclength(phi));
            proptest::prop_assert!((back - phi).abs() < crate::tolerances::TOL_PARAM);
        }

        #[test]
        fn unit_speed_in_arclength(s in -20.0..20.0f64) {
            let f = Curve::fourier(
                FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.2], [0.08, 0.0, 0.0, 0.05]]).unwrap(),
            )
            .unwrap();
            let phi = f.arclength_to_native(s);
            let speed = f.d1(phi).norm();
            let ds_dphi = f.speed(phi);
            proptest::prop_assert!((speed / ds_dphi - 1.0).abs() < TOL_GEOM);
            let h = 1e-5;
            let fd = (f.position(s + h) - f.position(s - h)) / (2.0 * h);
            proptest::prop_assert!((fd.norm() - 1.0).abs() < 1e-8);
            let p = f.evaluate(s);
            let q = f.evaluate(s + f.length());
            proptest::prop_assert!((p.position - q.position).norm() < 1e-9);
        }
    }
}
