//! Native-parameter <-> arc-length tables built from Gauss–Legendre panels.
//!
//! The table stores cumulative arc length at panel nodes; evaluating `s(phi)`
//! integrates the speed over the partial panel, so values are accurate to
//! rounding and smooth in `phi`. The inverse starts from linear interpolation
//! inside the bracketing panel and finishes with Newton steps.

use std::f64::consts::TAU;

use crate::quadrature::gauss_legendre_16;

pub const DEFAULT_PANELS: usize = 512;

#[derive(Debug, Clone)]
pub(crate) struct ArcLengthTable {
    width: f64,
    cumulative: Vec<f64>,
    /// Lifted tangent angle at panel nodes, used to unwrap `atan2` results.
    tau_nodes: Vec<f64>,
}

impl ArcLengthTable {
    pub fn build<S, T>(speed: S, tangent_angle: T, panels: usize) -> Self
    where
        S: Fn(f64) -> f64,
        T: Fn(f64) -> f64,
    {
        let rule = gauss_legendre_16();
        let width = TAU / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut tau_nodes = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        let mut tau_prev = tangent_angle(0.0);
        cumulative.push(0.0);
        tau_nodes.push(tau_prev);
        for k in 0..panels {
            let a = k as f64 * width;
            acc += rule.integrate(&speed, a, a + width);
            cumulative.push(acc);
            let raw = tangent_angle(a + width);
            let lifted = tau_prev + crate::geometry::wrap_centered(raw - tau_prev, TAU);
            tau_nodes.push(lifted);
            tau_prev = lifted;
        }
        Self { width, cumulative, tau_nodes }
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn panel_of_phi(&self, phi: f64) -> usize {
        ((phi / self.width) as usize).min(self.cumulative.len() - 2)
    }

    /// Arc length for `phi` in `[0, 2pi)`.
    pub fn s_of_phi<S: Fn(f64) -> f64>(&self, speed: &S, phi: f64) -> f64 {
        let k = self.panel_of_phi(phi);
        let a = k as f64 * self.width;
        self.cumulative[k] + gauss_legendre_16().integrate(speed, a, phi)
    }

    /// Native parameter for `s` in `[0, L)`.
    pub fn phi_of_s<S: Fn(f64) -> f64>(&self, speed: &S, s: f64) -> f64 {
        let k = match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.cumulative.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.cumulative.len() - 2),
        };
        let (c0, c1) = (self.cumulative[k], self.cumulative[k + 1]);
        let a = k as f64 * self.width;
        let mut phi = a + self.width * (s - c0) / (c1 - c0);
        for _ in 0..12 {
            let step = (self.s_of_phi(speed, phi.clamp(0.0, TAU - 1e-300)) - s) / speed(phi);
            phi -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        phi
    }

    /// Approximate lifted tangent angle at `phi` in `[0, 2pi)`, by interpolation.
    pub fn tau_guess(&self, phi: f64) -> f64 {
        let k = self.panel_of_phi(phi);
        let t = (phi - k as f64 * self.width) / self.width;
        self.tau_nodes[k] * (1.0 - t) + self.tau_nodes[k + 1] * t
    }
}
