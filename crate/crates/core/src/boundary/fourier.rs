//! Boundary curves given by truncated Fourier series.
//!
//! Text format, one harmonic per line starting at k = 0:
//!
//! ```text
//! # comment
//! xc xs yc ys
//! ```
//!
//! so that `X(phi) = sum xc_k cos(k phi) + xs_k sin(k phi)` and likewise for `Y`.

use crate::boundary::Parametrization;
use crate::error::{Error, Result};
use crate::geometry::{vec2, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    /// `[xc, xs, yc, ys]` per harmonic.
    pub harmonics: Vec<[f64; 4]>,
}

impl FourierCurve {
    pub fn new(harmonics: Vec<[f64; 4]>) -> Result<Self> {
        if harmonics.len() < 2 {
            return Err(Error::InvalidParameter(
                "a Fourier curve needs at least the k = 1 harmonic".into(),
            ));
        }
        if harmonics.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Fourier coefficient".into()));
        }
        Ok(Self { harmonics })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut harmonics = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|e| Error::Parse {
                        line: i + 1,
                        message: format!("{t:?}: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != 4 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 4 coefficients (xc xs yc ys), found {}", values.len()),
                });
            }
            harmonics.push([values[0], values[1], values[2], values[3]]);
        }
        Self::new(harmonics)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# xc xs yc ys\n");
        for h in &self.harmonics {
            out.push_str(&format!("{} {} {} {}\n", h[0], h[1], h[2], h[3]));
        }
        out
    }

    fn eval(&self, phi: f64, order: u32) -> Vec2 {
        let mut p = vec2(0.0, 0.0);
        for (k, h) in self.harmonics.iter().enumerate() {
            let kf = k as f64;
            let (s, c) = (kf * phi).sin_cos();
            let (cx, sx) = match order {
                0 => (c, s),
                1 => (-kf * s, kf * c),
                _ => (-kf * kf * c, -kf * kf * s),
            };
            p.x += h[0] * cx + h[1] * sx;
            p.y += h[2] * cx + h[3] * sx;
        }
        p
    }
}

impl Parametrization for FourierCurve {
    fn position(&self, phi: f64) -> Vec2 {
        self.eval(phi, 0)
    }
    fn first_derivative(&self, phi: f64) -> Vec2 {
        self.eval(phi, 1)
    }
    fn second_derivative(&self, phi: f64) -> Vec2 {
        self.eval(phi, 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let c = FourierCurve::new(vec![[0.5, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 1.0], [0.1, 0.0, 0.0, 0.1]])
            .unwrap();
        assert_eq!(FourierCurve::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parse_reports_line() {
        let err = FourierCurve::parse("0 0 0 0\n1 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = FourierCurve::parse("0 0 0 0\n1 0 x 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = FourierCurve::new(vec![[0.0; 4], [1.0, 0.0, 0.0, 1.0], [0.2, 0.1, -0.05, 0.2]]).unwrap();
        let h = 1e-5;
        for phi in [0.0, 0.7, 2.9, 5.5] {
            let fd1 = (c.position(phi + h) - c.position(phi - h)) / (2.0 * h);
            let fd2 = (c.first_derivative(phi + h) - c.first_derivative(phi - h)) / (2.0 * h);
            assert!((fd1 - c.first_derivative(phi)).norm() < 1e-9);
            assert!((fd2 - c.second_derivative(phi)).norm() < 1e-9);
        }
    }
}
