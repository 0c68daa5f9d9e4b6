//! Default numerical tolerances shared across the crate.

/// Geometric queries (unit tangent norm, boundary membership).
pub const TOL_GEOM: f64 = 1e-10;
/// Native parameter round trips through the arc-length table.
pub const TOL_PARAM: f64 = 1e-9;
/// Relative band used to call a Larmor radius equal to a curvature extremum.
pub const TOL_REGIME: f64 = 1e-8;
/// Root refinement for chord and arc intersections.
pub const TOL_ROOT: f64 = 1e-12;
/// States with `1 - |u|` below this are treated as tangent to the boundary.
pub const TOL_TANGENT: f64 = 1e-12;
/// Minimal crossing sine accepted for a Larmor-circle reentry.
pub const TOL_TANGENT_SLOPE: f64 = 1e-7;
/// `|cos chi|` below which the alternative grouping of d(u2)/d(s1) is used.
pub const TOL_CHI: f64 = 1e-6;
/// Determinant check for map Jacobians.
pub const TOL_DET: f64 = 1e-8;
/// Area quadrature tolerance.
pub const TOL_AREA: f64 = 1e-10;
/// Phase-space residual for periodic orbits.
pub const TOL_ORBIT: f64 = 1e-10;
/// Maximal window spread for a converged rotation number.
pub const TOL_ROT: f64 = 1e-2;
/// Spread below which a trace is reported caustic-consistent.
pub const TOL_CAUSTIC: f64 = 1e-6;
