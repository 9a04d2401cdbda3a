//! CSV and report writers. Numbers use the shortest representation that
//! round-trips to the same `f64`, `.` as decimal separator and LF endings.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dipbat::{GainVector, Trajectory};

use crate::error::CliError;
use crate::scenario::{ScenarioReport, SweepRow};

pub const TRAJECTORY_HEADER: &str = "t,x_c,theta1,theta2,xdot_c,theta1dot,theta2dot";
pub const SWEEP_HEADER: &str = "label,delay_s,wall_time_s,zeta,omega_n,best_fitness,stable";
pub const CONVERGENCE_HEADER: &str = "generation,best_fitness";
pub const MANIFEST: &str = "manifest.txt";
pub const REPORT: &str = "report.txt";
pub const SWEEP_SUMMARY: &str = "sweep_summary.csv";

/// Lines of `report.txt` carrying timing; everything else is reproducible.
pub const WALL_TIME_PREFIX: &str = "wall_time";

/// Shortest round-trip formatting, switching to exponent form for very
/// small or very large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    if traj.order() > 6 {
        s.push_str(",x7");
    }
    s.push_str(",u\n");
    for ((t, x), u) in traj.times.iter().zip(&traj.states).zip(&traj.inputs) {
        s.push_str(&num(*t));
        for v in x {
            s.push(',');
            s.push_str(&num(*v));
        }
        s.push(',');
        s.push_str(&num(*u));
        s.push('\n');
    }
    s
}

pub fn convergence_csv(history: &[f64]) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for (g, f) in history.iter().enumerate() {
        let _ = writeln!(s, "{},{}", g + 1, num(*f));
    }
    s
}

fn list(gain: &GainVector) -> String {
    gain.as_slice().iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "not_settled".to_string(), num)
}

pub fn report_text(r: &ScenarioReport) -> String {
    let s = &r.scenario;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("label", s.label.clone());
    kv("delay_s", num(s.delay));
    kv("design_model", s.design_model.name().into());
    kv(
        "pade_convention",
        match s.pade_convention {
            dipbat::PadeConvention::Stable => "stable",
            dipbat::PadeConvention::Unstable => "unstable",
        }
        .into(),
    );
    kv("zeta", num(r.zeta));
    kv("omega_n", num(r.omega_n));
    kv("best_fitness", num(r.best_fitness));
    kv("wall_time_s", num(r.wall_time));
    kv("evaluations", r.evaluations.to_string());
    kv("stable", r.stable().to_string());
    kv("spectral_abscissa", num(r.stability.spectral_abscissa));
    kv("spectral_abscissa_undelayed", num(r.stability_undelayed.spectral_abscissa));
    kv("settling_time_linear_s", opt(r.settling_linear));
    kv("settling_time_nonlinear_s", opt(r.settling_nonlinear));
    kv("settling_band", num(s.settling_band));
    kv("gain", list(&r.gain));
    kv("gain_undelayed", list(&r.gain_undelayed));

    let b = &s.bat;
    kv("bat.population_size", b.population_size.to_string());
    kv("bat.generations", b.generations.to_string());
    kv("bat.loudness", num(b.loudness));
    kv("bat.pulse_rate", num(b.pulse_rate));
    kv("bat.freq_min", num(b.freq_min));
    kv("bat.freq_max", num(b.freq_max));
    kv("bat.loudness_decay", num(b.loudness_decay));
    kv("bat.pulse_growth", num(b.pulse_growth));
    kv("bat.seed", b.seed.to_string());
    kv("bounds.zeta_min", num(s.bounds.lower[0]));
    kv("bounds.zeta_max", num(s.bounds.upper[0]));
    kv("bounds.omega_min", num(s.bounds.lower[1]));
    kv("bounds.omega_max", num(s.bounds.upper[1]));
    kv("fitness.cart", num(s.weights.cart));
    kv("fitness.lower", num(s.weights.lower));
    kv("fitness.upper", num(s.weights.upper));
    kv("sim.dt", num(s.sim.dt));
    kv("sim.horizon", num(s.sim.horizon));
    kv("sim.reference", num(s.sim.reference));

    let p = &s.params;
    for (k, v) in [
        ("params.cart_mass", p.cart_mass),
        ("params.link1_mass", p.link1_mass),
        ("params.link2_mass", p.link2_mass),
        ("params.link1_length", p.link1_length),
        ("params.link2_length", p.link2_length),
        ("params.link1_com", p.link1_com),
        ("params.link2_com", p.link2_com),
        ("params.link1_inertia", p.link1_inertia),
        ("params.link2_inertia", p.link2_inertia),
        ("params.cart_friction", p.cart_friction),
        ("params.gravity", p.gravity),
    ] {
        kv(k, num(v));
    }

    match &r.discrepancy {
        Ok(d) => {
            kv("closed_form_vs_jacobian.max_abs_a", num(d.max_abs_a));
            kv("closed_form_vs_jacobian.max_abs_b", num(d.max_abs_b));
            kv("closed_form_vs_jacobian.relative_a", num(d.relative_a));
            kv("closed_form_vs_jacobian.relative_b", num(d.relative_b));
        }
        Err(e) => kv("closed_form_vs_jacobian", format!("unavailable ({e})")),
    }
    out
}

/// Writes every artifact of a scenario into `dir` and returns their paths,
/// manifest last.
pub fn write_scenario(dir: &Path, r: &ScenarioReport) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let artifacts = [
        ("trajectory_linear_delayed.csv", trajectory_csv(&r.linear_delayed)),
        ("trajectory_linear_undelayed.csv", trajectory_csv(&r.linear_undelayed)),
        ("trajectory_nonlinear_delayed.csv", trajectory_csv(&r.nonlinear_delayed)),
        ("trajectory_nonlinear_undelayed.csv", trajectory_csv(&r.nonlinear_undelayed)),
        ("convergence.csv", convergence_csv(&r.fitness_history)),
        (REPORT, report_text(r)),
    ];
    let mut files = Vec::with_capacity(artifacts.len() + 1);
    let mut manifest = String::new();
    for (name, text) in artifacts {
        let path = dir.join(name);
        write(&path, &text)?;
        manifest.push_str(name);
        manifest.push('\n');
        files.push(path);
    }
    manifest.push_str(MANIFEST);
    manifest.push('\n');
    let path = dir.join(MANIFEST);
    write(&path, &manifest)?;
    files.push(path);
    Ok(files)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for row in rows {
        match &row.outcome {
            Ok(v) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    row.label,
                    num(row.delay),
                    num(v.wall_time),
                    num(v.zeta),
                    num(v.omega_n),
                    num(v.best_fitness),
                    v.stable
                );
            }
            Err(_) => {
                let _ = writeln!(s, "{},{},,,,,error", row.label, num(row.delay));
            }
        }
    }
    s
}

pub fn write_sweep_summary(out: &Path, rows: &[SweepRow]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join(SWEEP_SUMMARY);
    write(&path, &sweep_csv(rows))?;
    Ok(path)
}
