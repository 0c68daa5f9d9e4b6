//! The subcommands. Each returns the lines it prints on success.

use std::f64::consts::TAU;

use imb_core::action::{ellipse_generating_function, ellipse_lambda, generating_function, generating_function_pair, twist_measure};
use imb_core::analysis::{
    caustic_report, circle_caustic_radii, image_of_vertical_line, larmor_center_locus, portrait_orbit, taylor_check_t,
    taylor_check_t2, Monotonicity, PortraitSpec, Side,
};
use imb_core::dynamics::{mu_intersection_check, return_jacobian, return_map, PhaseState, SegmentRecord};
use imb_core::geometry::rotate;
use imb_core::orbits::{find_periodic_shooting, find_periodic_variational, iterate, rotation_number, sweep_seed, PeriodicOrbit};
use imb_core::{Curve, CurveKind, Error, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Command, Method, MuSource, RunConfig};
use crate::output::{OutputDir, Table};
use crate::svg::{color, Plot};
use crate::CliError;

pub fn run(cfg: &RunConfig, command: &Command) -> Result<Vec<String>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let mut out = OutputDir::create(&cfg.out)?;
    let mut lines = pool.install(|| match command {
        Command::Info => info(cfg, &mut out),
        Command::Portrait { decimation } => portrait(cfg, *decimation, &mut out),
        Command::Orbit { s0, u0 } => orbit(cfg, *s0, *u0, &mut out),
        Command::Periodic { m, n, method, s0 } => periodic(cfg, m, *n, *method, *s0, &mut out),
        Command::Check { samples } => check(cfg, *samples, &mut out),
        Command::Caustic { s0, u0 } => caustic(cfg, *s0, *u0, &mut out),
    })?;
    lines.extend(out.written().iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

fn numerical(e: Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn boundary_outline(curve: &Curve, samples: usize) -> Vec<(f64, f64)> {
    (0..samples)
        .map(|i| {
            let p = curve.position(curve.length() * i as f64 / samples as f64);
            (p.x, p.y)
        })
        .collect()
}

fn arc_points(rec: &SegmentRecord, samples: usize) -> Vec<(f64, f64)> {
    let c = rec.larmor_center();
    let r = rec.arc.p1 - c;
    (0..=samples)
        .map(|i| {
            let q = c + rotate(&r, 2.0 * rec.chi() * i as f64 / samples as f64);
            (q.x, q.y)
        })
        .collect()
}

fn info(cfg: &RunConfig, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    let c = &cfg.curve;
    let regime = c.classify_regime(cfg.mu);
    let hit = mu_intersection_check(c, cfg.mu, 2000, cfg.seed);
    let mut rows: Vec<(&str, String)> = vec![
        ("curve", cfg.curve_spec.clone()),
        ("length", c.length().to_string()),
        ("area", c.area().to_string()),
        ("rho_min", c.rho_min().to_string()),
        ("rho_max", (1.0 / c.kappa_min()).to_string()),
        ("mu", cfg.mu.to_string()),
        ("regime", regime.to_string()),
        ("mu_intersection", if hit.satisfied { "satisfied" } else { "violated" }.to_string()),
        ("mu_intersection_max_crossings", hit.worst_count.to_string()),
        ("mu_intersection_by_regime", hit.by_regime.to_string()),
    ];
    if let MuSource::Physical { mass, charge, speed, field, energy } = cfg.mu_source {
        rows.push(("mass", mass.to_string()));
        rows.push(("charge", charge.to_string()));
        rows.push(("speed", speed.to_string()));
        rows.push(("B", field.to_string()));
        rows.push(("energy", energy.to_string()));
    }
    if regime == Regime::Boundary {
        rows.push(("warning", "mu equals a radius of curvature extremum".to_string()));
    }
    let mut table = Table::new("info", &["key", "value"]);
    for (k, v) in &rows {
        table.row(&[k, v]);
    }
    out.csv("info", &table)?;
    Ok(rows.iter().map(|(k, v)| format!("{k}: {v}")).collect())
}

fn portrait(cfg: &RunConfig, decimation: usize, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    let (n_phi, n_u) = cfg.grid.unwrap_or((20, 10));
    let mut spec = PortraitSpec::new(n_phi, n_u, cfg.iters.unwrap_or(300));
    spec.decimation = decimation;
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let orbits = spec
        .initial_conditions()
        .into_par_iter()
        .enumerate()
        .map(|(id, (phi, u))| portrait_orbit(&cfg.curve, cfg.mu, id, phi, u, spec.iterations, spec.decimation))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerical)?;
    let mut table = Table::new("portrait", &["orbit_id", "k", "phi", "u"]);
    let mut plot = Plot::new((0.0, TAU), (-1.0, 1.0), false);
    let mut stopped = 0;
    for orbit in &orbits {
        for (k, phi, u) in &orbit.points {
            table.row(&[&orbit.id, k, phi, u]);
        }
        let pts: Vec<(f64, f64)> = orbit.points.iter().map(|&(_, p, u)| (p, u)).collect();
        plot.points(&pts, color(orbit.id), 0.8);
        stopped += orbit.tangency as usize;
    }
    let title = format!("{} mu={} ({})", cfg.curve_spec, cfg.mu, cfg.curve.classify_regime(cfg.mu));
    out.plot("portrait", &table, &plot, (&title, "phi", "u"))?;
    Ok(vec![format!("{} orbits, {} stopped at a tangency", orbits.len(), stopped)])
}

fn record_row(table: &mut Table, k: usize, rec: &SegmentRecord) {
    let (e, c) = (rec.entry(), rec.larmor_center());
    table.row(&[
        &k, &e.s, &e.u, &rec.chord.p0.x, &rec.chord.p0.y, &rec.chord.p1.x, &rec.chord.p1.y, &rec.arc.p2.x, &rec.arc.p2.y,
        &c.x, &c.y, &rec.l1(), &rec.chi(), &rec.l2(), &rec.advance(),
    ]);
}

const RECORD_COLUMNS: [&str; 15] = ["k", "s", "u", "x0", "y0", "x1", "y1", "x2", "y2", "cx", "cy", "l1", "chi", "l2", "advance"];

fn trajectory_plot(curve: &Curve, records: &[SegmentRecord], arcs: bool) -> Plot {
    let outline = boundary_outline(curve, 400);
    let mut pts = outline.clone();
    let centers: Vec<(f64, f64)> = records.iter().map(|r| (r.larmor_center().x, r.larmor_center().y)).collect();
    if arcs {
        pts.extend(records.iter().flat_map(|r| arc_points(r, 4)));
    }
    pts.extend(centers.iter().cloned());
    let mut plot = Plot::fit(&pts, 0.05, true);
    plot.polyline(&outline, "black", 1.2, true);
    for r in records {
        plot.polyline(&[(r.chord.p0.x, r.chord.p0.y), (r.chord.p1.x, r.chord.p1.y)], color(0), 0.6, false);
        if arcs {
            plot.polyline(&arc_points(r, 48), color(1), 0.6, false);
        }
    }
    plot.points(&centers, color(2), 1.5);
    plot
}

fn orbit(cfg: &RunConfig, s0: f64, u0: f64, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    let start = PhaseState::new(s0, u0).map_err(|e| CliError::Config(e.to_string()))?;
    let trace = iterate(&cfg.curve, cfg.mu, &start, cfg.iters.unwrap_or(20)).map_err(numerical)?;
    let mut table = Table::new("orbit", &RECORD_COLUMNS);
    for (k, rec) in trace.records.iter().enumerate() {
        record_row(&mut table, k, rec);
    }
    let mut lines = vec![format!("{} returns in the {} regime", trace.steps(), trace.regime)];
    if let Some((k, e)) = &trace.tangency {
        table.comment(&format!("stopped at step {k}: {e}"));
        lines.push(format!("stopped at step {k}: {e}"));
    }
    let mut summary = Table::new("orbit", &["key", "value"]);
    summary.row(&[&"steps", &trace.steps()]);
    summary.row(&[&"lifted_advance", &(trace.lifted_s[trace.steps()] - trace.lifted_s[0])]);
    if let Ok(w) = rotation_number(&trace) {
        let converged = w.spread <= cfg.tol.rot;
        summary.row(&[&"rotation_number", &w.omega]);
        summary.row(&[&"rotation_spread", &w.spread]);
        summary.row(&[&"rotation_converged", &converged]);
        lines.push(format!("rotation number {} (spread {:.2e}, converged {converged})", w.omega, w.spread));
    }
    let plot = trajectory_plot(&cfg.curve, &trace.records, true);
    out.plot("orbit", &table, &plot, (&format!("{} mu={}", cfg.curve_spec, cfg.mu), "x", "y"))?;
    out.csv("orbit_summary", &summary)?;
    Ok(lines)
}

struct Attempt {
    m: u32,
    method: &'static str,
    result: Result<PeriodicOrbit, Error>,
}

fn periodic(cfg: &RunConfig, ms: &[u32], n: u32, method: Method, s0: f64, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    if n == 0 || ms.iter().any(|&m| m == 0 || m >= n) {
        return Err(CliError::Config(format!("need 0 < m < n, got m = {ms:?}, n = {n}")));
    }
    let mut jobs = Vec::new();
    for &m in ms {
        if method != Method::Shooting {
            jobs.push((m, "variational"));
        }
        if method != Method::Variational {
            jobs.push((m, "shooting"));
        }
    }
    let (curve, mu) = (&cfg.curve, cfg.mu);
    let attempts: Vec<Attempt> = jobs
        .into_par_iter()
        .map(|(m, method)| {
            let result = if method == "variational" {
                find_periodic_variational(curve, mu, m, n, s0)
            } else {
                sweep_seed(curve, mu, m, n, s0, 400)
                    .ok_or(Error::NoConvergence { iterations: 0, residual: f64::INFINITY })
                    .and_then(|seed| find_periodic_shooting(curve, mu, m, n, &seed))
            };
            Attempt { m, method, result }
        })
        .collect();

    let mut summary = Table::new(
        "periodic",
        &["m", "n", "method", "status", "residual", "action", "trace", "multiplier1_re", "multiplier1_im", "multiplier2_re", "multiplier2_im", "critical_type", "iterations", "message"],
    );
    let mut points = Table::new("periodic", &["m", "n", "method", "j", "s", "u", "x", "y", "cx", "cy", "chi"]);
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for a in &attempts {
        match &a.result {
            Ok(o) => {
                let ok = o.residual < cfg.tol.orbit;
                let kind = o.critical_type.map(|c| format!("{c:?}").replace(", ", " ")).unwrap_or_else(|| "-".into());
                let [l1, l2] = o.multipliers;
                let status = if ok { "ok" } else { "residual" };
                summary.row(&[
                    &a.m, &n, &a.method, &status, &o.residual, &o.action, &o.monodromy.trace(), &l1.re, &l1.im, &l2.re, &l2.im,
                    &kind, &o.iterations, &"",
                ]);
                for (j, (st, rec)) in o.states.iter().zip(&o.records).enumerate() {
                    let (p, c) = (rec.chord.p0, rec.larmor_center());
                    points.row(&[&a.m, &n, &a.method, &j, &st.s, &st.u, &p.x, &p.y, &c.x, &c.y, &rec.chi()]);
                }
                if a.method == "variational" || method == Method::Shooting {
                    records.extend(o.records.iter().cloned());
                }
                lines.push(format!(
                    "({}, {n}) {}: residual {:.2e}, action {}, trace {:.6}, {kind}",
                    a.m, a.method, o.residual, o.action, o.monodromy.trace()
                ));
                if !ok {
                    failures.push(format!("({}, {n}) {}: residual {:.2e} above {:.1e}", a.m, a.method, o.residual, cfg.tol.orbit));
                }
            }
            Err(e) => {
                let msg = e.to_string().replace(',', ";");
                summary.row(&[&a.m, &n, &a.method, &"failed", &"", &"", &"", &"", &"", &"", &"", &"", &"", &msg]);
                failures.push(format!("({}, {n}) {}: {e}", a.m, a.method));
            }
        }
    }
    out.csv("periodic", &summary)?;
    let plot = trajectory_plot(&cfg.curve, &records, true);
    out.plot("periodic_points", &points, &plot, (&format!("{} mu={} n={n}", cfg.curve_spec, cfg.mu), "x", "y"))?;
    if failures.is_empty() {
        Ok(lines)
    } else {
        lines.extend(failures);
        Err(CliError::Numerical(lines.join("\n")))
    }
}

struct CheckRow {
    suite: &'static str,
    metric: String,
    value: f64,
    threshold: f64,
    pass: bool,
    note: String,
}

impl CheckRow {
    fn below(suite: &'static str, metric: &str, value: f64, threshold: f64, note: String) -> Self {
        Self { suite, metric: metric.into(), value, threshold, pass: value < threshold, note }
    }
}

fn random_states(curve: &Curve, rng: &mut ChaCha8Rng, count: usize, umax: f64) -> Vec<PhaseState> {
    (0..count)
        .map(|_| PhaseState { s: rng.gen_range(0.0..curve.length()), u: rng.gen_range(-umax..umax) })
        .collect()
}

fn check(cfg: &RunConfig, samples: usize, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    let (curve, mu) = (&cfg.curve, cfg.mu);
    let regime = curve.classify_regime(mu);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();

    let states = random_states(curve, &mut rng, samples, 1.0);
    let results: Vec<_> = states.par_iter().map(|st| return_map(curve, st, mu)).collect();
    let (mut det, mut closed, mut used, mut skipped) = (0.0_f64, 0.0_f64, 0, 0);
    for r in &results {
        match r {
            Ok((_, rec)) => {
                let j = return_jacobian(rec);
                det = det.max((j.product.det() - 1.0).abs());
                closed = closed.max(j.product.relative_distance(&j.closed_form));
                used += 1;
            }
            Err(Error::TangencyDiscontinuity { .. } | Error::TangentChord { .. }) => skipped += 1,
            Err(e) => return Err(numerical(e.clone())),
        }
    }
    let note = format!("{used} states, {skipped} tangency-flagged");
    rows.push(CheckRow::below("jacobian", "max |det DT - 1|", det, cfg.tol.det, note.clone()));
    rows.push(CheckRow::below("jacobian", "product vs closed form", closed, 1e-9, note));

    if regime == Regime::StrongField {
        let h = 1e-7;
        let mut worst = 0.0_f64;
        let mut pairs = 0;
        for st in random_states(curve, &mut rng, (samples / 4).max(1), 0.95) {
            let Ok((next, rec)) = return_map(curve, &st, mu) else { continue };
            let (s0, s2) = (st.s, st.s + rec.advance());
            let g = |a: f64, b: f64| generating_function_pair(curve, mu, a, b).map(|x| x.g);
            let vals = [g(s0 + h, s2), g(s0 - h, s2), g(s0, s2 + h), g(s0, s2 - h)];
            let [Ok(a), Ok(b), Ok(c), Ok(d)] = vals else { continue };
            let fd = [(a - b) / (2.0 * h), (c - d) / (2.0 * h)];
            let scale = st.u.abs().max(next.u.abs());
            worst = worst.max((fd[0] + st.u).abs().max((fd[1] - next.u).abs()) / scale);
            pairs += 1;
        }
        rows.push(CheckRow::below("action", "gradient of G vs (-u0, u2)", worst, cfg.tol.gradient, format!("{pairs} pairs")));
    }
    if let Some(lambda) = ellipse_lambda(curve) {
        let mut worst = 0.0_f64;
        for r in results.iter().flatten().take(50) {
            let g = generating_function(curve, &r.1).map_err(numerical)?;
            worst = worst.max((g.g - ellipse_generating_function(lambda, mu, &r.1)).abs());
        }
        rows.push(CheckRow::below("action", "G vs ellipse closed form", worst, 1e-8, String::new()));
    }

    let mut taylor = 0.0_f64;
    let mut count = 0;
    for k in 0..3 {
        let s = curve.length() * k as f64 / 8.0;
        let sides: &[Side] = match regime {
            Regime::StrongField | Regime::WeakField => &[Side::Minus, Side::Plus],
            _ => &[Side::Plus],
        };
        for &side in sides {
            for t in [taylor_check_t2(curve, mu, s, side), taylor_check_t(curve, mu, s, side)] {
                match t {
                    Ok(t) => {
                        taylor = taylor.max(t.relative_error);
                        count += 1;
                    }
                    Err(Error::DenominatorSingular { .. }) => {}
                    Err(e) => return Err(numerical(e)),
                }
            }
        }
    }
    rows.push(CheckRow::below("taylor", "first-order coefficient rel err", taylor, cfg.tol.taylor, format!("{count} coefficients")));

    match regime {
        Regime::StrongField => {
            let t = twist_measure(curve, mu, 50, 50);
            rows.push(CheckRow {
                suite: "twist",
                metric: "min ds2/du0".into(),
                value: t.min_slope,
                threshold: 0.0,
                pass: t.min_slope > 0.0,
                note: format!("{} skipped", t.skipped),
            });
        }
        _ => {
            let grid: Vec<f64> = (0..120).map(|i| -0.99 + 1.98 * i as f64 / 119.0).collect();
            let (mut turning, mut jumps) = (Vec::new(), 0);
            for k in 0..8 {
                let img = image_of_vertical_line(curve, mu, curve.length() * k as f64 / 8.0 + 0.05, &grid).map_err(numerical)?;
                if let Monotonicity::NonMonotone { turning_points } = img.verdict {
                    turning.push(turning_points);
                }
                jumps += img.has_discontinuity() as usize;
            }
            if regime == Regime::WeakField {
                rows.push(CheckRow {
                    suite: "twist",
                    metric: "non-monotone vertical lines".into(),
                    value: turning.len() as f64,
                    threshold: 8.0,
                    pass: turning.len() == 8,
                    note: format!("turning points per line {turning:?}").replace(',', ""),
                });
            } else {
                rows.push(CheckRow {
                    suite: "twist",
                    metric: "lines with tangency jumps".into(),
                    value: jumps as f64,
                    threshold: 0.0,
                    pass: true,
                    note: format!("{regime} regime"),
                });
            }
        }
    }

    if let CurveKind::Circle { radius } = curve.kind() {
        let r = *radius;
        let (mut drift, mut adv) = (0.0_f64, 0.0_f64);
        for u0 in [-0.7, 0.1, 0.85] {
            let tr = iterate(curve, mu, &PhaseState { s: 0.3, u: u0 }, 1000).map_err(numerical)?;
            let theta = (-u0).acos();
            let m = mu / r;
            let chi = theta + (m * theta.sin() / (1.0 + m * m - 2.0 * m * theta.cos()).sqrt()).asin();
            for k in 1..tr.states.len() {
                drift = drift.max((tr.states[k].u - u0).abs());
                adv = adv.max((tr.lifted_s[k] - tr.lifted_s[k - 1] - 2.0 * chi * r).abs());
            }
        }
        rows.push(CheckRow::below("circle", "max |u_k - u_0|", drift, 1e-10, String::new()));
        rows.push(CheckRow::below("circle", "advance vs 2 chi R", adv, 1e-9, String::new()));
        if regime == Regime::StrongField {
            let u0 = -0.5;
            let tr = iterate(curve, mu, &PhaseState { s: 0.0, u: u0 }, 64).map_err(numerical)?;
            let rep = caustic_report(curve, &tr, &imb_core::vec2(0.0, 0.0));
            let (ri, ro) = circle_caustic_radii(r, mu, (-u0).acos());
            let (i, o) = (rep.inner.unwrap(), rep.outer.unwrap());
            let err = (i.max - ri).abs().max((i.min - ri).abs()).max((o.max - ro).abs()).max((o.min - ro).abs());
            rows.push(CheckRow::below("circle", "caustic radii", err, cfg.tol.caustic, String::new()));
        }
    }

    let mut table = Table::new("check", &["suite", "metric", "value", "threshold", "pass", "note"]);
    let mut lines = vec![format!("{} mu={} ({regime})", cfg.curve_spec, mu)];
    for r in &rows {
        table.row(&[&r.suite, &r.metric, &r.value, &r.threshold, &r.pass, &r.note.replace(',', ";")]);
        lines.push(format!(
            "{} {:<8} {:<34} {:.3e} (threshold {:.1e}) {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.suite,
            r.metric,
            r.value,
            r.threshold,
            r.note
        ));
    }
    out.csv("check", &table)?;
    if rows.iter().all(|r| r.pass) {
        Ok(lines)
    } else {
        Err(CliError::Numerical(lines.join("\n")))
    }
}

fn caustic(cfg: &RunConfig, s0: f64, u0: f64, out: &mut OutputDir) -> Result<Vec<String>, CliError> {
    let start = PhaseState::new(s0, u0).map_err(|e| CliError::Config(e.to_string()))?;
    let trace = iterate(&cfg.curve, cfg.mu, &start, cfg.iters.unwrap_or(2000)).map_err(numerical)?;
    let origin = imb_core::vec2(0.0, 0.0);
    let rep = caustic_report(&cfg.curve, &trace, &origin);
    let mut table = Table::new("caustic", &RECORD_COLUMNS);
    for (k, rec) in trace.records.iter().enumerate() {
        record_row(&mut table, k, rec);
    }
    let mut summary = Table::new("caustic", &["key", "value"]);
    let mut lines = Vec::new();
    let mut put = |k: &str, v: String| {
        lines.push(format!("{k}: {v}"));
        summary.row(&[&k, &v]);
    };
    put("returns", trace.records.len().to_string());
    if let Some((k, e)) = &trace.tangency {
        put("tangency", format!("step {k}: {}", e.to_string().replace(',', ";")));
    }
    if let Some(i) = rep.inner {
        put("inner_distance_min", i.min.to_string());
        put("inner_distance_max", i.max.to_string());
    }
    if let Some(o) = rep.outer {
        put("outer_radius_min", o.min.to_string());
        put("outer_radius_max", o.max.to_string());
    }
    if let Some(env) = &rep.envelope {
        put("envelope_convex", env.convex.to_string());
        put("envelope_winding", env.winding.to_string());
    }
    if let CurveKind::Circle { radius } = cfg.curve.kind() {
        let (ri, ro) = circle_caustic_radii(*radius, cfg.mu, (-u0).acos());
        put("circle_inner_radius", ri.to_string());
        put("circle_outer_radius", ro.to_string());
    }
    put("curvature_guard", rep.guard_passed.to_string());
    put("caustic_consistent", rep.verdict.to_string());

    let mut plot = trajectory_plot(&cfg.curve, &trace.records, false);
    if let Some(env) = &rep.envelope {
        let pts: Vec<(f64, f64)> = env.points.iter().map(|p| (p.x, p.y)).collect();
        plot.polyline(&pts, color(3), 1.0, true);
    }
    let centers = larmor_center_locus(&trace);
    if let (CurveKind::Circle { .. }, Some(i), Some(o)) = (cfg.curve.kind(), rep.inner, rep.outer) {
        plot.circle((0.0, 0.0), i.mean, color(3));
        plot.circle((0.0, 0.0), o.mean, color(4));
    }
    out.plot("caustic", &table, &plot, (&format!("{} mu={} ({} centers)", cfg.curve_spec, cfg.mu, centers.len()), "x", "y"))?;
    out.csv("caustic_summary", &summary)?;
    Ok(lines)
}
