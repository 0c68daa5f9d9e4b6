//! Run configuration: command-line flags merged over an optional key=value file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use imb_core::boundary::fourier::FourierCurve;
use imb_core::tolerances;
use imb_core::Curve;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "imb-lab", version, about = "Inverse magnetic billiards laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `circle:R=1`, `ellipse:lambda=2`, or a path to a Fourier coefficient file.
    #[arg(long, global = true)]
    pub curve: Option<String>,
    /// Larmor radius.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Magnetic field strength; with mass, charge and speed it replaces --mu.
    #[arg(long = "B", global = true, allow_hyphen_values = true)]
    pub field: Option<f64>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub charge: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub speed: Option<f64>,
    /// Number of returns to iterate.
    #[arg(long, global = true)]
    pub iters: Option<usize>,
    /// Grid size as `NPHIxNU`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override such as `orbit=1e-9`; repeatable.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    pub tol_override: Vec<String>,
    /// key=value file with defaults for the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Curve summary: length, curvature radii, regime.
    Info,
    /// Phase portrait in the (phi, u) plane.
    Portrait {
        /// Keep every k-th iterate.
        #[arg(long, default_value_t = 1)]
        decimation: usize,
    },
    /// Single trajectory with boundary points and Larmor centers.
    Orbit {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        u0: f64,
    },
    /// Periodic orbits of winding m and period n.
    Periodic {
        /// Comma-separated list of windings.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<u32>,
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
        /// Boundary position of the first seed point.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s0: f64,
    },
    /// Verification report over the module invariant suites.
    Check {
        /// Random states per sampled check.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Caustic diagnostics of one trajectory.
    Caustic {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s0: f64,
        #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
        u0: f64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Info => "info",
            Command::Portrait { .. } => "portrait",
            Command::Orbit { .. } => "orbit",
            Command::Periodic { .. } => "periodic",
            Command::Check { .. } => "check",
            Command::Caustic { .. } => "caustic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Variational,
    Shooting,
    Both,
}

/// Acceptance thresholds the front end applies to library results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub orbit: f64,
    pub rot: f64,
    pub caustic: f64,
    pub det: f64,
    pub taylor: f64,
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orbit: tolerances::TOL_ORBIT,
            rot: tolerances::TOL_ROT,
            caustic: tolerances::TOL_CAUSTIC,
            det: tolerances::TOL_DET,
            taylor: 1e-2,
            gradient: 1e-6,
        }
    }
}

impl Tolerances {
    fn set(&mut self, item: &str) -> Result<(), CliError> {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("tolerance override {item:?} is not KEY=VAL")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|e| CliError::Config(format!("tolerance {key}: {e}")))?;
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Config(format!("tolerance {key} must be positive, got {value}")));
        }
        let key = key.trim().to_ascii_lowercase();
        let slot = match key.strip_prefix("tol_").unwrap_or(&key) {
            "orbit" => &mut self.orbit,
            "rot" => &mut self.rot,
            "caustic" => &mut self.caustic,
            "det" => &mut self.det,
            "taylor" => &mut self.taylor,
            "gradient" => &mut self.gradient,
            other => {
                return Err(CliError::Config(format!(
                    "unknown tolerance {other:?} (known: orbit, rot, caustic, det, taylor, gradient)"
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// How the Larmor radius was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSource {
    Direct,
    /// `mu = m|v| / |e B|`, with the conserved energy `m v^2 / 2`.
    Physical { mass: f64, charge: f64, speed: f64, field: f64, energy: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub curve_spec: String,
    pub curve: Curve,
    pub mu: f64,
    pub mu_source: MuSource,
    pub iters: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub tol: Tolerances,
}

fn parse_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{}:{}: expected key = value, found {line:?}", path.display(), i + 1))
        })?;
        let key = k.trim().trim_start_matches("--").to_string();
        let value = v.trim().to_string();
        if key == "tol-override" {
            map.entry(key)
                .and_modify(|old: &mut String| {
                    old.push(';');
                    old.push_str(&value);
                })
                .or_insert(value);
        } else {
            map.insert(key, value);
        }
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    map.get(key)
        .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("config key {key}: {e}"))))
        .transpose()
}

fn parse_grid(text: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid must look like 20x10, got {text:?}"));
    let (a, b) = text.to_ascii_lowercase().split_once('x').map(|(a, b)| (a.to_string(), b.to_string())).ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn load_curve(spec: &str) -> Result<Curve, CliError> {
    let path = Path::new(spec);
    if !spec.contains(':') || path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("curve {spec:?} is neither a spec string nor a readable file: {e}")))?;
        let coeffs = FourierCurve::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return Curve::fourier(coeffs).map_err(|e| CliError::Config(e.to_string()));
    }
    Curve::from_spec(spec).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => parse_file(p)?,
            None => BTreeMap::new(),
        };
        let known = [
            "curve", "mu", "B", "mass", "charge", "speed", "iters", "grid", "seed", "jobs", "out", "tol-override",
        ];
        if let Some(k) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown config key {k:?}")));
        }
        let curve_spec = match &args.curve {
            Some(c) => c.clone(),
            None => file.get("curve").cloned().ok_or_else(|| CliError::Config("no curve given (use --curve)".into()))?,
        };
        let curve = load_curve(&curve_spec)?;

        let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>, CliError> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => from_file(&file, key),
            }
        };
        let flag_physical = [args.field, args.mass, args.charge, args.speed].iter().any(Option::is_some);
        let file_physical = ["B", "mass", "charge", "speed"].iter().any(|k| file.contains_key(*k));
        let use_physical = match (args.mu, flag_physical) {
            (Some(_), true) => {
                return Err(CliError::Config("give either --mu or --B/--mass/--charge/--speed, not both".into()))
            }
            (Some(_), false) => false,
            (None, true) => true,
            (None, false) => {
                if file.contains_key("mu") && file_physical {
                    return Err(CliError::Config("config file sets both mu and B/mass/charge/speed".into()));
                }
                file_physical
            }
        };
        let (mu, mu_source) = if use_physical {
            let need = |flag: Option<f64>, key: &str| -> Result<f64, CliError> {
                pick(flag, key)?.ok_or_else(|| CliError::Config(format!("--B, --mass, --charge and --speed are all needed; {key} is missing")))
            };
            let field = need(args.field, "B")?;
            let mass = need(args.mass, "mass")?;
            let charge = need(args.charge, "charge")?;
            let speed = need(args.speed, "speed")?;
            if mass <= 0.0 || speed == 0.0 || charge == 0.0 || field == 0.0 {
                return Err(CliError::Config("mass must be positive and B, charge, speed non-zero".into()));
            }
            let mu = mass * speed.abs() / (charge * field).abs();
            (mu, MuSource::Physical { mass, charge, speed, field, energy: 0.5 * mass * speed * speed })
        } else {
            let mu = pick(args.mu, "mu")?.ok_or_else(|| CliError::Config("no Larmor radius given (use --mu)".into()))?;
            (mu, MuSource::Direct)
        };
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(CliError::Config(format!("Larmor radius must be positive, got {mu}")));
        }

        let iters = match args.iters {
            Some(v) => Some(v),
            None => from_file(&file, "iters")?,
        };
        let grid = match args.grid.as_deref().or(file.get("grid").map(String::as_str)) {
            Some(g) => Some(parse_grid(g)?),
            None => None,
        };
        let seed = match args.seed {
            Some(v) => v,
            None => from_file(&file, "seed")?.unwrap_or(1),
        };
        let jobs = match args.jobs {
            Some(v) => v,
            None => from_file(&file, "jobs")?.unwrap_or(0),
        };
        let out = match &args.out {
            Some(p) => p.clone(),
            None => file.get("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("imb-out")),
        };
        let mut tol = Tolerances::default();
        if let Some(items) = file.get("tol-override") {
            for item in items.split(';') {
                tol.set(item)?;
            }
        }
        for item in &args.tol_override {
            tol.set(item)?;
        }
        Ok(Self { curve_spec, curve, mu, mu_source, iters, grid, seed, jobs, out, tol })
    }
}
