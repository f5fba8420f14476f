use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{RunConfig, StudySpec};
use crate::error::{Error, Result};
use crate::lab::{
    clt_study, holder_study, kernel_estimate_fits, ldp_diagnostics, mdp_scaling_sweep, Check,
    CltConfig, HolderConfig, KernelConfig, LdpConfig, MdpConfig, StudyReport, StudyStatus,
};
use crate::lab::target_path;
use crate::model::ModelSpec;
use crate::norms::sup_lp;
use crate::pde::{half_energy, solve_u0};
use crate::rate::rate_eval;
use crate::spectral::to_spectral;
use crate::spde::{generate_noise, solve_u_eps};
use crate::trajectory::Trajectory;

/// Environment variable consulted for the output root when `--output` is absent.
pub const OUTPUT_ROOT_ENV: &str = "CHLAB_OUTPUT_ROOT";

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const TRAJECTORY_BIN_FILE: &str = "trajectory.bin";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed_override: Option<u64>,
    /// Worker threads for replica cells; 0 uses the rayon default.
    pub jobs: usize,
    /// Directory under which a relative `output_dir` is resolved.
    pub output_root: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub status: Option<StudyStatus>,
    pub exit_code: i32,
    pub error: Option<String>,
    pub report: Option<StudyReport>,
}

pub fn exit_code(status: StudyStatus) -> i32 {
    match status {
        StudyStatus::Pass => 0,
        StudyStatus::Fail => 2,
        StudyStatus::Inconclusive => 3,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub study: String,
    pub seed: u64,
    pub config: RunConfig,
    /// The resolved configuration in its file dialect; parses back to `config`.
    pub config_toml: String,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
    pub artifacts: Vec<String>,
    pub jobs: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub study_seconds: f64,
    pub write_seconds: f64,
    pub total_seconds: f64,
}

/// Applies the seed override and resolves the run directory.
pub fn resolve(cfg: &RunConfig, opts: &RunOptions) -> (RunConfig, PathBuf) {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed_override {
        cfg.seed = seed;
    }
    let root = opts
        .output_root
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from));
    let dir = match root {
        Some(root) if cfg.output_dir.is_relative() => root.join(&cfg.output_dir),
        _ => cfg.output_dir.clone(),
    };
    (cfg, dir)
}

struct StudyOutput {
    report: StudyReport,
    trajectory: Option<Trajectory>,
}

fn run_study(cfg: &RunConfig, m: &ModelSpec, jobs: usize) -> Result<StudyOutput> {
    let report = match &cfg.study {
        StudySpec::Simulate { eps, .. } => return simulate(*eps, cfg, m),
        StudySpec::Clt {
            moment,
            holder_frames,
        } => {
            let mut c = CltConfig::new(cfg.scaling.eps.clone(), cfg.replicas, cfg.norms, cfg.seed);
            c.moment = moment.unwrap_or(cfg.norms.q);
            c.holder_frames = *holder_frames;
            c.jobs = jobs;
            clt_study(&c, m)?
        }
        StudySpec::Holder {
            process,
            lags,
            bases,
        } => {
            let mut c = HolderConfig::new(*process, cfg.replicas, cfg.norms, cfg.seed);
            c.lags = lags.clone();
            c.bases = *bases;
            c.jobs = jobs;
            holder_study(&c, m)?
        }
        StudySpec::Mdp { thetas } => mdp_scaling_sweep(
            &MdpConfig {
                thetas: thetas.clone(),
                eps: cfg.scaling.eps.clone(),
                replicas: cfg.replicas,
                seed: cfg.seed,
                jobs,
            },
            m,
        )?,
        StudySpec::Kernel {
            grids,
            window,
            lattice,
        } => kernel_estimate_fits(&KernelConfig {
            grids: grids.clone(),
            window: *window,
            lattice: lattice.clone(),
            seed: cfg.seed,
            ..KernelConfig::default()
        })?,
        StudySpec::Rate {
            amplitude,
            probe,
            probe_amplitude,
            radius_factor,
            min_hits,
        } => {
            let mut report = rate_round_trip(*amplitude, m)?;
            if *probe {
                let ldp = ldp_diagnostics(
                    &LdpConfig {
                        scaling: cfg.scaling.clone(),
                        replicas: cfg.replicas,
                        seed: cfg.seed,
                        jobs,
                        amplitude: *probe_amplitude,
                        radius_factor: *radius_factor,
                        min_hits: *min_hits,
                    },
                    m,
                )?;
                report.replicas = ldp.replicas;
                report.aborts = ldp.aborts;
                report.checks.extend(ldp.checks);
                report.records.extend(ldp.records);
            }
            report.finish()
        }
    };
    Ok(StudyOutput {
        report,
        trajectory: None,
    })
}

fn simulate(eps: f64, cfg: &RunConfig, m: &ModelSpec) -> Result<StudyOutput> {
    let traj = if eps == 0.0 {
        solve_u0(m)?
    } else {
        solve_u_eps(eps, &generate_noise(cfg.seed, &m.grid), m)?
    };
    let mut report = StudyReport::new("simulate");
    report.replicas = 1;
    let modes: Vec<f64> = (0..traj.len())
        .map(|j| to_spectral(&traj.frame_field(j)).mean_mode())
        .collect();
    let drift = modes.iter().map(|v| (v - modes[0]).abs()).fold(0.0, f64::max);
    report.record(format!("eps={eps}"), "mode0_drift", drift, 0.0);
    report.record(format!("eps={eps}"), "sup_lp", sup_lp(&traj, cfg.norms.p), 0.0);
    report.record(format!("eps={eps}"), "max_abs", traj.max_abs(), 0.0);
    report.check(Check::new(
        "finite",
        StudyStatus::Pass,
        format!("{} steps without blow-up", m.grid.nt),
    ));
    Ok(StudyOutput {
        report: report.finish(),
        trajectory: Some(traj),
    })
}

/// Rate of `g = Z^{v*}` for `v*(t, x) = amplitude sin(t) cos(x_1)` against
/// the control energy, and quadratic homogeneity for `c = 2, 4`.
fn rate_round_trip(amplitude: f64, m: &ModelSpec) -> Result<StudyReport> {
    let mut report = StudyReport::new("rate");
    let u0 = solve_u0(m)?;
    let v = Trajectory::from_fn(m.grid, |t, x| amplitude * t.sin() * x[0].cos())?;
    let energy = half_energy(&v);
    let g = target_path(amplitude, &u0, m)?;
    let rate = rate_eval(&g, &u0, m)?;
    let rel = (rate.value - energy).abs() / energy;
    report.record("target=g".into(), "rate", rate.value, 0.0);
    report.record("target=g".into(), "half_energy", energy, 0.0);
    report.record("target=g".into(), "relative_error", rel, 0.0);
    report.check(Check::new(
        "round-trip",
        StudyStatus::from_bool(rel <= 0.05),
        format!("I(g) = {:.6e}, energy of v* = {energy:.6e}, relative error {rel:.3e}", rate.value),
    ));
    for c in [2.0, 4.0] {
        let rc = rate_eval(&g.scaled(c), &u0, m)?.value;
        let ratio = rc / (c * c * rate.value);
        report.record(format!("target={c}g"), "rate", rc, 0.0);
        report.record(format!("target={c}g"), "homogeneity_ratio", ratio, 0.0);
        report.check(Check::new(
            format!("homogeneity-{c}"),
            StudyStatus::from_bool((ratio - 1.0).abs() <= 0.01),
            format!("I({c}g)/({c}^2 I(g)) = {ratio:.6}"),
        ));
    }
    Ok(report.finish())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = OpenOptions::new().write(true).create_new(true).open(path)?;
    Ok(BufWriter::new(f))
}

fn config_line(cfg: &RunConfig) -> Result<String> {
    Ok(serde_json::to_string(cfg)?)
}

fn write_header(w: &mut impl Write, cfg: &RunConfig) -> Result<()> {
    writeln!(w, "# seed: {}", cfg.seed)?;
    writeln!(w, "# config: {}", config_line(cfg)?)?;
    Ok(())
}

fn write_results(path: &Path, cfg: &RunConfig, report: Option<&StudyReport>, error: Option<&Error>) -> Result<()> {
    let mut w = create(path)?;
    write_header(&mut w, cfg)?;
    {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(&mut w);
        csv.write_record(["study", "cell", "quantity", "estimate", "stderr"])?;
        if let Some(r) = report {
            for rec in &r.records {
                csv.serialize(rec)?;
            }
        }
        if let Some(Error::BlowUp {
            time_index,
            time,
            value,
        }) = error
        {
            let study = cfg.study.name();
            let cell = format!("time_index={time_index};t={time}");
            csv.write_record([study, &cell, "blow_up", &value.to_string(), "0"])?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(path: &Path, cfg: &RunConfig, report: &StudyReport) -> Result<()> {
    let summary = json!({
        "study": report.study,
        "seed": cfg.seed,
        "status": report.status,
        "replicas": report.replicas,
        "aborts": report.aborts,
        "checks": report.checks,
        "slopes": report.slopes,
        "config": cfg,
    });
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// `t, mode0, u(x_0), ..., u(x_{N-1})` per row.
fn write_trajectory(path: &Path, cfg: &RunConfig, traj: &Trajectory) -> Result<()> {
    let mut w = create(path)?;
    write_header(&mut w, cfg)?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        let n = traj.grid().len();
        let mut header = vec!["t".to_string(), "mode0".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        csv.write_record(&header)?;
        for j in 0..traj.len() {
            let mode0 = to_spectral(&traj.frame_field(j)).mean_mode();
            let mut row = vec![traj.time(j).to_string(), mode0.to_string()];
            row.extend(traj.frame(j).iter().map(|v| v.to_string()));
            csv.write_record(&row)?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// Row-major little-endian `f64`: per instant, `t` followed by the field.
fn write_trajectory_bin(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = create(path)?;
    for j in 0..traj.len() {
        w.write_all(&traj.time(j).to_le_bytes())?;
        for v in traj.frame(j) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    let manifest = dir.join(MANIFEST_FILE);
    if manifest.exists() {
        return Err(Error::config(
            "output_dir",
            format!("{} already holds a run manifest; choose a fresh directory", dir.display()),
        ));
    }
    std::fs::create_dir_all(dir)?;
    for name in [RESULTS_FILE, SUMMARY_FILE, TRAJECTORY_FILE, TRAJECTORY_BIN_FILE] {
        if dir.join(name).exists() {
            return Err(Error::config(
                "output_dir",
                format!("{} already exists in {}", name, dir.display()),
            ));
        }
    }
    Ok(())
}

/// Validates, executes the study and writes every artifact into the run
/// directory. Errors before any artifact exists are returned as `Err`; a
/// failure mid-run still yields partial artifacts and an error manifest.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    let (cfg, dir) = resolve(cfg, opts);
    let model = cfg.resolve()?;
    let config_toml = cfg.to_toml_string()?;
    prepare_dir(&dir)?;

    let study = run_study(&cfg, &model, opts.jobs);
    let study_seconds = start.elapsed().as_secs_f64();
    let write_start = Instant::now();

    let mut artifacts = Vec::new();
    let (report, error) = match study {
        Ok(out) => {
            write_results(&dir.join(RESULTS_FILE), &cfg, Some(&out.report), None)?;
            artifacts.push(RESULTS_FILE.to_string());
            write_summary(&dir.join(SUMMARY_FILE), &cfg, &out.report)?;
            artifacts.push(SUMMARY_FILE.to_string());
            if let Some(traj) = &out.trajectory {
                write_trajectory(&dir.join(TRAJECTORY_FILE), &cfg, traj)?;
                artifacts.push(TRAJECTORY_FILE.to_string());
                if matches!(cfg.study, StudySpec::Simulate { binary: true, .. }) {
                    write_trajectory_bin(&dir.join(TRAJECTORY_BIN_FILE), traj)?;
                    artifacts.push(TRAJECTORY_BIN_FILE.to_string());
                }
            }
            (Some(out.report), None)
        }
        Err(e) => {
            write_results(&dir.join(RESULTS_FILE), &cfg, None, Some(&e))?;
            artifacts.push(RESULTS_FILE.to_string());
            (None, Some(e.to_string()))
        }
    };
    let status = report.as_ref().map(|r| r.status);
    let code = status.map(exit_code).unwrap_or(1);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        study: cfg.study.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        config_toml,
        status: status.map(|s| s.to_string()).unwrap_or_else(|| "error".into()),
        exit_code: code,
        error: error.clone(),
        artifacts,
        jobs: opts.jobs,
        timings: Timings {
            study_seconds,
            write_seconds: write_start.elapsed().as_secs_f64(),
            total_seconds: start.elapsed().as_secs_f64(),
        },
    };
    let mut w = create(&dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w)?;
    w.flush()?;

    Ok(RunOutcome {
        dir,
        status,
        exit_code: code,
        error,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(study: &str) -> RunConfig {
        RunConfig::from_toml_str(&format!(
            r#"
seed = 11
replicas = 4
output_dir = "run"
[grid]
d = 1
n = 16
horizon = 0.01
nt = 20
[scaling]
eps = [1e-2, 1e-3]
h = {{ kind = "one" }}
[study]
{study}
"#
        ))
        .unwrap()
    }

    fn opts(root: &Path) -> RunOptions {
        RunOptions {
            output_root: Some(root.to_path_buf()),
            ..RunOptions::default()
        }
    }

    #[test]
    fn simulate_writes_conserved_mode0() {
        let tmp = tempfile::tempdir().unwrap();
        let out = run(&config("kind = \"simulate\"\nbinary = true"), &opts(tmp.path())).unwrap();
        assert_eq!(out.exit_code, 0);
        let text = std::fs::read_to_string(out.dir.join(TRAJECTORY_FILE)).unwrap();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let col: Vec<f64> = rdr
            .records()
            .map(|r| r.unwrap()[1].parse().unwrap())
            .collect();
        assert_eq!(col.len(), 21);
        assert!(col.iter().all(|v| (v - col[0]).abs() < 1e-10));
        let bin = std::fs::metadata(out.dir.join(TRAJECTORY_BIN_FILE)).unwrap();
        assert_eq!(bin.len(), 21 * 17 * 8);
    }

    #[test]
    fn completed_manifest_is_never_overwritten() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config("kind = \"simulate\"");
        run(&cfg, &opts(tmp.path())).unwrap();
        let err = run(&cfg, &opts(tmp.path())).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "output_dir"));
    }

    #[test]
    fn manifest_echo_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config("kind = \"clt\"");
        let mut o = opts(tmp.path());
        o.seed_override = Some(99);
        let out = run(&cfg, &o).unwrap();
        assert_eq!(out.exit_code, 3);
        let m: Manifest =
            serde_json::from_str(&std::fs::read_to_string(out.dir.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.seed, 99);
        assert_eq!(RunConfig::from_toml_str(&m.config_toml).unwrap(), m.config);
        let results = std::fs::read_to_string(out.dir.join(RESULTS_FILE)).unwrap();
        assert!(results.starts_with("# seed: 99\n# config: {"));
        assert_eq!(results.matches("study,cell,quantity").count(), 1);
    }

    #[test]
    fn blow_up_leaves_error_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = config("kind = \"simulate\"");
        cfg.model.f = crate::model::Cubic([1.0, 0.0, 0.0, 0.0]);
        cfg.model.u0 = crate::model::InitialDatum::SingleMode { k: vec![1], amp: 1e3 };
        cfg.grid.horizon = 1.0;
        let out = run(&cfg, &opts(tmp.path())).unwrap();
        assert_eq!(out.exit_code, 1);
        let m: Manifest =
            serde_json::from_str(&std::fs::read_to_string(out.dir.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(m.status, "error");
        assert!(m.error.unwrap().contains("blow-up"));
        let results = std::fs::read_to_string(out.dir.join(RESULTS_FILE)).unwrap();
        assert!(results.contains("blow_up"));
    }
}
