//! Small planar vector helpers on top of `nalgebra`.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Rotation by +90 degrees.
#[inline]
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[inline]
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// Signed angle from `a` to `b` in `(-pi, pi]`.
#[inline]
pub fn signed_angle(a: &Vec2, b: &Vec2) -> f64 {
    cross(a, b).atan2(a.dot(b))
}

/// Reduce `x` into `[0, period)`.
#[inline]
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Reduce a difference into `(-period/2, period/2]`.
#[inline]
pub fn wrap_centered(x: f64, period: f64) -> f64 {
    let r = wrap(x, period);
    if r > 0.5 * period {
        r - period
    } else {
        r
    }
}
