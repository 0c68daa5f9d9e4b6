//! Orbits of the return map: lifted traces, rotation numbers and periodic orbits.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;

use crate::action::{generating_function, shoot};
use crate::boundary::{Curve, Regime};
use crate::dynamics::{closed_form_jacobian, return_jacobian, return_map, Jacobian2, PhaseState, SegmentRecord};
use crate::error::{Error, Result};
use crate::geometry::wrap;
use crate::tolerances::{TOL_ORBIT, TOL_ROT};

/// Sequence of returns with the lifted boundary coordinate.
#[derive(Debug, Clone)]
pub struct OrbitTrace {
    pub states: Vec<PhaseState>,
    /// `lifted_s[k]` reduces to `states[k].s` modulo `L`.
    pub lifted_s: Vec<f64>,
    /// One record per genuine return; empty for states on the annulus boundary.
    pub records: Vec<SegmentRecord>,
    /// Step at which iteration stopped on a tangency, with the error.
    pub tangency: Option<(usize, Error)>,
    pub regime: Regime,
    pub length: f64,
    pub mu: f64,
}

impl OrbitTrace {
    /// Number of completed returns.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }
}

/// Lifted advance of a state on `u = -1` or `u = 1`, where the map is the identity.
fn boundary_advance(u: f64, regime: Regime, length: f64) -> f64 {
    if u > 0.0 || regime == Regime::WeakField {
        length
    } else {
        0.0
    }
}

/// Iterate the return map `steps` times, stopping early at a tangency.
pub fn iterate(curve: &Curve, mu: f64, start: &PhaseState, steps: usize) -> Result<OrbitTrace> {
    let length = curve.length();
    let regime = curve.classify_regime(mu);
    let first = PhaseState::new(start.s, start.u)?.reduced(length);
    let mut trace = OrbitTrace {
        states: vec![first],
        lifted_s: vec![start.s],
        records: Vec::new(),
        tangency: None,
        regime,
        length,
        mu,
    };
    let mut state = first;
    let mut lifted = start.s;
    for k in 0..steps {
        if state.is_boundary() {
            lifted += boundary_advance(state.u, regime, length);
            trace.states.push(state);
            trace.lifted_s.push(lifted);
            continue;
        }
        match return_map(curve, &state, mu) {
            Ok((next, rec)) => {
                lifted += rec.advance();
                state = next;
                trace.states.push(next);
                trace.lifted_s.push(lifted);
                trace.records.push(rec);
            }
            Err(e @ Error::TangencyDiscontinuity { .. }) => {
                trace.tangency = Some((k, e));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationNumber {
    pub omega: f64,
    /// Spread of the averages over four consecutive blocks.
    pub spread: f64,
    pub converged: bool,
}

/// Average lifted advance per return divided by `L`.
pub fn rotation_number(trace: &OrbitTrace) -> Result<RotationNumber> {
    let n = trace.steps();
    if n < 100 {
        return Err(Error::InvalidParameter(format!("rotation number needs at least 100 returns, trace has {n}")));
    }
    let l = trace.length;
    let s = &trace.lifted_s;
    let omega = (s[n] - s[0]) / (n as f64 * l);
    let block = n / 4;
    let avgs: Vec<f64> = (0..4)
        .map(|b| (s[(b + 1) * block] - s[b * block]) / (block as f64 * l))
        .collect();
    let spread = avgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - avgs.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(RotationNumber { omega, spread, converged: spread <= TOL_ROT })
}

/// Sign pattern of the Hessian of the action sum at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalType {
    Maximum,
    Minimum,
    Saddle { negative: usize, positive: usize },
    /// Some eigenvalue vanishes to working precision (e.g. the circle's rotation).
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Variational,
    Shooting,
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    /// Winding and minimal period after removing common factors.
    pub m: u32,
    pub n: u32,
    /// Requested winding and number of returns.
    pub requested: (u32, u32),
    /// Lifted reentry positions `s_0 < s_1 < ...` over the requested number of returns.
    pub points: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub records: Vec<SegmentRecord>,
    pub residual: f64,
    /// `W = sum G` over the requested returns.
    pub action: f64,
    pub multipliers: [Complex64; 2],
    pub monodromy: Jacobian2,
    pub critical_type: Option<CriticalType>,
    pub method: SearchMethod,
    pub iterations: usize,
}

impl PeriodicOrbit {
    /// Half angles of the Larmor arcs along the orbit.
    pub fn chis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.chi()).collect()
    }

    pub fn rotation_number(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn validate_frequency(m: u32, n: u32) -> Result<(u32, u32)> {
    if !(m >= 1 && m < n) {
        return Err(Error::InvalidParameter(format!("need 1 <= m < n, got ({m}, {n})")));
    }
    let g = gcd(m, n);
    Ok((m / g, n / g))
}

fn multipliers(j: &Jacobian2) -> [Complex64; 2] {
    let tr = j.trace();
    let disc = Complex64::new(tr * tr - 4.0 * j.det(), 0.0).sqrt();
    [(tr + disc) / 2.0, (tr - disc) / 2.0]
}

fn monodromy(records: &[SegmentRecord]) -> Jacobian2 {
    records
        .iter()
        .fold(Jacobian2::IDENTITY, |acc, r| return_jacobian(r).product.compose(&acc))
}

/// Moore-Penrose solve, dropping singular values below `rcond` times the largest.
fn pseudo_solve(a: DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> Option<DVector<f64>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    svd.solve(b, rcond * smax).ok()
}

struct ChainEval {
    records: Vec<SegmentRecord>,
    grad: Vec<f64>,
}

fn evaluate_chain(curve: &Curve, mu: f64, s: &[f64], shift: f64) -> Result<ChainEval> {
    let n = s.len();
    let mut records = Vec::with_capacity(n);
    for j in 0..n {
        let next = if j + 1 < n { s[j + 1] } else { s[0] + shift };
        records.push(shoot(curve, mu, s[j], next - s[j])?);
    }
    let grad = (0..n)
        .map(|j| records[(j + n - 1) % n].reentry().u - records[j].entry().u)
        .collect();
    Ok(ChainEval { records, grad })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Critical point of the action sum `W = sum G(s_j, s_{j+1})` with `s_n = s_0 + mL`.
///
/// Starts from equally spaced points and applies damped Newton steps to the
/// gradient `u_arrival - u_departure`.
pub fn find_periodic_variational(curve: &Curve, mu: f64, m: u32, n: u32, seed_s0: f64) -> Result<PeriodicOrbit> {
    let (mr, nr) = validate_frequency(m, n)?;
    let regime = curve.classify_regime(mu);
    if regime != Regime::StrongField {
        return Err(Error::RegimeUnsupported(regime.to_string()));
    }
    let l = curve.length();
    let shift = m as f64 * l;
    let nn = n as usize;
    let mut s: Vec<f64> = (0..nn).map(|j| seed_s0 + j as f64 * shift / n as f64).collect();
    let mut chain = evaluate_chain(curve, mu, &s, shift)?;
    let mut norm = max_abs(&chain.grad);
    let mut iterations = 0;
    let max_iter = 50;
    while norm >= TOL_ORBIT {
        if iterations == max_iter {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
        iterations += 1;
        let h = hessian(&chain.records);
        let g = DVector::from_vec(chain.grad.clone());
        let step = pseudo_solve(h, &(-g), 1e-12).ok_or(Error::NoConvergence { iterations, residual: norm })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = s.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            if let Ok(c) = evaluate_chain(curve, mu, &trial, shift) {
                let nrm = max_abs(&c.grad);
                if nrm < norm {
                    s = trial;
                    chain = c;
                    norm = nrm;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations, residual: norm });
        }
    }
    let h = hessian(&chain.records);
    let critical_type = Some(classify_hessian(h));
    let mut action = 0.0;
    for r in &chain.records {
        action += generating_function(curve, r)?.g;
    }
    let mono = monodromy(&chain.records);
    Ok(PeriodicOrbit {
        m: mr,
        n: nr,
        requested: (m, n),
        states: chain.records.iter().map(|r| r.entry()).collect(),
        points: s,
        residual: norm,
        action,
        multipliers: multipliers(&mono),
        monodromy: mono,
        records: chain.records,
        critical_type,
        method: SearchMethod::Variational,
        iterations,
    })
}

/// Hessian of `W` from the return Jacobians along the chain.
fn hessian(records: &[SegmentRecord]) -> DMatrix<f64> {
    let n = records.len();
    let mut h = DMatrix::zeros(n, n);
    for (j, r) in records.iter().enumerate() {
        let d = closed_form_jacobian(r);
        let k = (j + 1) % n;
        // Pair j links s_j to s_{j+1}.
        h[(j, j)] += d.ss / d.su;
        h[(k, k)] += d.uu / d.su;
        h[(j, k)] -= 1.0 / d.su;
        h[(k, j)] -= 1.0 / d.su;
    }
    h
}

fn classify_hessian(h: DMatrix<f64>) -> CriticalType {
    let eig = SymmetricEigen::new(h);
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let mut neg = 0;
    let mut pos = 0;
    for &v in eig.eigenvalues.iter() {
        if v.abs() <= 1e-8 * scale {
            return CriticalType::Degenerate;
        }
        if v < 0.0 {
            neg += 1;
        } else {
            pos += 1;
        }
    }
    match (neg, pos) {
        (_, 0) => CriticalType::Maximum,
        (0, _) => CriticalType::Minimum,
        (negative, positive) => CriticalType::Saddle { negative, positive },
    }
}

fn orbit_n(curve: &Curve, mu: f64, x: &PhaseState, n: usize) -> Result<(f64, PhaseState, Vec<SegmentRecord>)> {
    let mut state = *x;
    let mut advance = 0.0;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, rec) = return_map(curve, &state, mu)?;
        advance += rec.advance();
        state = next;
        records.push(rec);
    }
    Ok((advance, state, records))
}

/// Seed for shooting: the `u` on a grid at `s0` whose `n`-return advance is closest to `mL`.
pub fn sweep_seed(curve: &Curve, mu: f64, m: u32, n: u32, s0: f64, samples: usize) -> Option<PhaseState> {
    let target = m as f64 * curve.length();
    let mut best: Option<(f64, PhaseState)> = None;
    for i in 0..samples {
        let u = -1.0 + 2.0 * (i as f64 + 0.5) / samples as f64;
        let st = PhaseState { s: s0, u };
        if let Ok((adv, _, _)) = orbit_n(curve, mu, &st, n as usize) {
            let miss = (adv - target).abs();
            if best.is_none_or(|(b, _)| miss < b) {
                best = Some((miss, st));
            }
        }
    }
    best.map(|(_, st)| st)
}

/// Newton's method on `F(x) = T^n(x) - x - (mL, 0)` from a seed state.
pub fn find_periodic_shooting(curve: &Curve, mu: f64, m: u32, n: u32, seed: &PhaseState) -> Result<PeriodicOrbit> {
    let (mr, nr) = validate_frequency(m, n)?;
    if seed.is_boundary() {
        return Err(Error::InvalidParameter("shooting seeds on u = -1 or u = 1 are fixed points of the boundary".into()));
    }
    let target = m as f64 * curve.length();
    let nn = n as usize;
    let residual_of = |x: &PhaseState| -> Result<(Vector2<f64>, Vec<SegmentRecord>)> {
        let (adv, end, recs) = orbit_n(curve, mu, x, nn)?;
        Ok((Vector2::new(adv - target, end.u - x.u), recs))
    };
    let mut x = *seed;
    let (mut f, mut recs) = residual_of(&x)?;
    let mut iterations = 0;
    let max_iter = 50;
    while f.amax() >= TOL_ORBIT {
        let mono = monodromy(&recs);
        if iterations == max_iter {
            return Err(Error::NoConvergence { iterations, residual: f.amax() });
        }
        iterations += 1;
        let j = mono.to_matrix() - Matrix2::identity();
        let dx = pseudo_solve(
            DMatrix::from_column_slice(2, 2, j.as_slice()),
            &DVector::from_column_slice((-f).as_slice()),
            1e-10,
        )
        .ok_or(Error::SingularNewton { trace: mono.trace() })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = PhaseState { s: x.s + t * dx[0], u: x.u + t * dx[1] };
            if trial.u.abs() < 1.0 && !trial.is_boundary() {
                if let Ok((ft, rt)) = residual_of(&trial) {
                    if ft.amax() < f.amax() {
                        x = trial;
                        f = ft;
                        recs = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            let tr = mono.trace();
            if (tr - 2.0).abs() < 1e-6 {
                return Err(Error::SingularNewton { trace: tr });
            }
            return Err(Error::NoConvergence { iterations, residual: f.amax() });
        }
    }
    let mono = monodromy(&recs);
    let mut action = 0.0;
    let mut points = Vec::with_capacity(nn);
    let mut lifted = x.s;
    for r in &recs {
        points.push(lifted);
        lifted += r.advance();
        action += generating_function(curve, r)?.g;
    }
    Ok(PeriodicOrbit {
        m: mr,
        n: nr,
        requested: (m, n),
        points,
        states: recs.iter().map(|r| r.entry()).collect(),
        residual: f.amax(),
        action,
        multipliers: multipliers(&mono),
        monodromy: mono,
        records: recs,
        critical_type: None,
        method: SearchMethod::Shooting,
        iterations,
    })
}

/// Reduce lifted points to the fundamental domain.
pub fn reduce_points(points: &[f64], length: f64) -> Vec<f64> {
    points.iter().map(|&s| wrap(s, length)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn circle_chi(theta: f64, mu: f64) -> f64 {
        theta + (mu * theta.sin() / (1.0 + mu * mu - 2.0 * mu * theta.cos()).sqrt()).asin()
    }

    fn theta_for_chi(target: f64, mu: f64) -> f64 {
        let (mut lo, mut hi) = (1e-9, PI - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if circle_chi(mid, mu) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn circle_period_three() {
        let c = Curve::circle(1.0).unwrap();
        let theta = theta_for_chi(PI / 3.0, 0.4);
        let tr = iterate(&c, 0.4, &PhaseState::from_angle(0.5, theta), 9).unwrap();
        for k in 0..6 {
            assert_relative_eq!(tr.states[k + 3].s, tr.states[k].s, epsilon = 1e-9);
        }
        assert_relative_eq!(tr.lifted_s[3] - tr.lifted_s[0], 2.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn boundary_traces_are_constant() {
        let e = Curve::ellipse(2.0).unwrap();
        for u in [-1.0, 1.0] {
            let tr = iterate(&e, 0.3, &PhaseState { s: 1.0, u }, 150).unwrap();
            assert!(tr.states.iter().all(|st| st.u == u && st.s == 1.0));
            let w = rotation_number(&tr).unwrap();
            assert_relative_eq!(w.omega, if u > 0.0 { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }

    #[test]
    fn near_boundary_u_is_nearly_invariant() {
        let e = Curve::ellipse(2.0).unwrap();
        let tr = iterate(&e, 0.3, &PhaseState { s: 0.0, u: -0.999 }, 2000).unwrap();
        assert!(tr.states.iter().all(|st| (st.u + 0.999).abs() < 1e-2));
    }

    #[test]
    fn circle_rotation_numbers() {
        let c = Curve::circle(1.0).unwrap();
        let mu = 0.3;
        let theta = theta_for_chi(1.0, mu);
        let tr = iterate(&c, mu, &PhaseState::from_angle(0.0, theta), 10_000).unwrap();
        let w = rotation_number(&tr).unwrap();
        assert!(w.converged);
        assert_relative_eq!(w.omega, 1.0 / PI, epsilon = 1e-6);
        let theta = theta_for_chi(2.0 * PI / 5.0, mu);
        let tr = iterate(&c, mu, &PhaseState::from_angle(0.0, theta), 200).unwrap();
        assert_relative_eq!(rotation_number(&tr).unwrap().omega, 0.4, epsilon = 1e-9);
    }

    #[test]
    fn circle_variational_orbits() {
        let c = Curve::circle(1.0).unwrap();
        for m in [1, 2, 4, 5, 7, 8] {
            let orbit = find_periodic_variational(&c, 0.5, m, 9, 0.2).unwrap();
            assert!(orbit.residual < 1e-8);
            for chi in orbit.chis() {
                assert_relative_eq!(chi, m as f64 * PI / 9.0, epsilon = 1e-8);
            }
        }
        let half = find_periodic_variational(&c, 0.5, 1, 2, 0.0).unwrap();
        assert_relative_eq!(half.chis()[0], PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn circle_shooting_agrees() {
        let c = Curve::circle(1.0).unwrap();
        let var = find_periodic_variational(&c, 0.5, 1, 9, 0.0).unwrap();
        let seed = sweep_seed(&c, 0.5, 1, 9, 0.0, 64).unwrap();
        let shot = find_periodic_shooting(&c, 0.5, 1, 9, &seed).unwrap();
        assert!(shot.residual < 1e-8);
        assert_relative_eq!(shot.states[0].u, var.states[0].u, epsilon = 1e-8);
        let theta = theta_for_chi(3.0 * PI / 7.0, 0.2);
        let exact = find_periodic_shooting(&c, 0.2, 3, 7, &PhaseState::from_angle(0.0, theta)).unwrap();
        assert!(exact.iterations <= 1);
        assert!(find_periodic_shooting(&c, 0.2, 3, 7, &PhaseState { s: 0.0, u: 1.0 }).is_err());
    }

    #[test]
    fn ellipse_orbits() {
        let e = Curve::ellipse(2.0).unwrap();
        for (m, n) in [(2, 4), (4, 5), (1, 3)] {
            let orbit = find_periodic_variational(&e, 0.3, m, n, 0.0).unwrap();
            assert!(orbit.residual < 1e-10);
            let prod = orbit.multipliers[0] * orbit.multipliers[1];
            assert!((prod.re - 1.0).abs() < 1e-6 && prod.im.abs() < 1e-6);
            let tr = iterate(&e, 0.3, &orbit.states[0], n as usize).unwrap();
            assert_relative_eq!(tr.lifted_s[n as usize] - tr.lifted_s[0], m as f64 * e.length(), epsilon = 1e-8);
        }
        assert!(matches!(find_periodic_variational(&e, 5.0, 1, 3, 0.0), Err(Error::RegimeUnsupported(_))));
    }
}
