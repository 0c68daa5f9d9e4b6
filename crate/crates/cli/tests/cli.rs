use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imb-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn info_reports_ellipse_radii() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["info", "--curve", "ellipse:lambda=2", "--mu", "0.3"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("regime: StrongField"));
    assert!(text.contains("rho_min: 0.5"));
    assert!(text.contains("rho_max: 4"));
    let csv = std::fs::read_to_string(dir.path().join("info.csv")).unwrap();
    assert!(csv.starts_with("# imb-lab v0.1.0 info\nkey,value\n"));
}

#[test]
fn physical_parameters_convert_to_larmor_radius() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["info", "--curve", "circle:R=1", "--B", "2", "--mass", "1", "--charge", "-1", "--speed", "1"];
    let o = run(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("mu: 0.5\n"));
    assert!(text.contains("energy: 0.5\n"));
}

#[test]
fn unit_circle_at_mu_one_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["info", "--curve", "circle:R=1", "--mu", "1"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("rho_min: 1\n") && text.contains("rho_max: 1\n"));
    assert!(text.contains("regime: Boundary"));
}

#[test]
fn empty_grid_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["portrait", "--curve", "circle:R=1", "--mu", "0.5", "--grid", "0x0"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("portrait.csv")).unwrap();
    assert_eq!(csv, "# imb-lab v0.1.0 portrait\norbit_id,k,phi,u\n");
    assert!(dir.path().join("portrait.svg").exists());
}

#[test]
fn circle_portrait_rows_keep_u() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["portrait", "--curve", "circle:R=1", "--mu", "0.5", "--grid", "3x4", "--iters", "50"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("portrait.csv")).unwrap();
    let mut first_u = std::collections::HashMap::new();
    for line in csv.lines().skip(2) {
        let cells: Vec<&str> = line.split(',').collect();
        let u: f64 = cells[3].parse().unwrap();
        let u0 = *first_u.entry(cells[0].to_string()).or_insert(u);
        assert!((u - u0).abs() < 1e-10);
    }
    assert_eq!(first_u.len(), 12);
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["portrait", "--curve", "ellipse:lambda=2", "--mu", "0.3", "--grid", "6x5", "--iters", "80", "--seed", "7"];
    let one = run(&[&base[..], &["--jobs", "1"]].concat(), a.path());
    let four = run(&[&base[..], &["--jobs", "4"]].concat(), b.path());
    assert!(one.status.success() && four.status.success());
    for name in ["portrait.csv", "portrait.svg"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn check_is_deterministic_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["check", "--curve", "ellipse:lambda=2", "--mu", "0.3", "--seed", "11", "--samples", "40"];
    assert!(run(&args, a.path()).status.success());
    assert!(run(&args, b.path()).status.success());
    let x = std::fs::read(a.path().join("check.csv")).unwrap();
    let y = std::fs::read(b.path().join("check.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn circle_family_is_found_by_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["periodic", "--curve", "circle:R=1", "--mu", "0.5", "--m", "1,2,4", "--n", "9"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("periodic.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("ok")));
    assert!(dir.path().join("periodic_points.svg").exists());
}

#[test]
fn failures_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["periodic", "--curve", "ellipse:lambda=2", "--mu", "5", "--m", "1", "--n", "3", "--method", "variational"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let csv = std::fs::read_to_string(dir.path().join("periodic.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains("failed"));
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["info", "--curve", "circle:R=1"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["info", "--curve", "hexagon:R=1", "--mu", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["info", "--curve", "circle:R=1", "--mu", "1", "--tol-override", "nope=1"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(run(&["info", "--curve", "circle:R=1", "--mu", "-1"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\ncurve = ellipse:lambda=2\nmu = 5\n").unwrap();
    let from_file = run(&["info", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(stdout(&from_file).contains("regime: WeakField"));
    let overridden = run(&["info", "--config", cfg.to_str().unwrap(), "--mu", "0.3"], dir.path());
    assert!(stdout(&overridden).contains("regime: StrongField"));
}

#[test]
fn fourier_file_curves_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.txt");
    std::fs::write(&path, "# xc xs yc ys\n0 0 0 0\n1 0 0 1\n0 0 0 0\n0.03 0 0 -0.02\n").unwrap();
    let o = run(&["orbit", "--curve", path.to_str().unwrap(), "--mu", "0.2", "--u0", "-0.3", "--iters", "10"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn caustic_on_the_circle_matches_radii() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["caustic", "--curve", "circle:R=1", "--mu", "0.5", "--u0", "-0.6", "--iters", "200"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("caustic_consistent: true"));
    assert!(dir.path().join("caustic.csv").exists() && dir.path().join("caustic.svg").exists());
}
