//! End-to-end acceptance criteria. Each test writes one `PASS`/`FAIL` line
//! straight to stderr so the verdicts show up even when output is captured.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chlab::green::{semigroup_apply, EigenTable};
use chlab::lab::{
    clt_study, holder_study, kernel_estimate_fits, ldp_diagnostics, mdp_scaling_sweep, target_path,
    CltConfig, HolderConfig, KernelConfig, LdpConfig, MdpConfig, Process, StudyReport, StudyStatus,
};
use chlab::pde::{half_energy, solve_u0};
use chlab::rate::rate_eval;
use chlab::spde::{generate_noise, replica_seed, solve_u_eps};
use chlab::spectral::{to_physical, to_spectral};
use chlab::{Cubic, Field, GridSpec, InitialDatum, ModelSpec, NormSpec, Sigma, SpectralField, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, name: &str, ok: bool, detail: &str) {
    let line = format!("{} criterion {n} ({name}): {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn envelope() -> ModelSpec {
    ModelSpec::default_for(GridSpec::new(1, 64, 0.1, 2000).unwrap()).unwrap()
}

const EPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

fn check_ok(r: &StudyReport, name: &str) -> bool {
    r.find_check(name).is_some_and(|c| c.status == StudyStatus::Pass)
}

#[test]
fn criterion_1_transform_round_trip_and_parseval() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_rt = 0.0f64;
    let mut worst_pv = 0.0f64;
    for (d, n) in [(1usize, 64usize), (2, 32), (3, 12)] {
        let g = GridSpec::new(d, n, 1.0, 1).unwrap();
        for _ in 0..100 {
            let v: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = Field::new(g, v).unwrap();
            let c = to_spectral(&f);
            let back = to_physical(&c);
            let rt = f.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let phys: f64 = f.values().iter().map(|x| x * x).sum::<f64>() * g.weight();
            let pv = (phys - c.energy()).abs() / phys;
            worst_rt = worst_rt.max(rt);
            worst_pv = worst_pv.max(pv);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst_rt <= 1e-10 && worst_pv <= 1e-10 && secs < 5.0;
    verdict(
        1,
        "transform",
        ok,
        &format!("max round-trip error {worst_rt:.2e}, max relative Parseval defect {worst_pv:.2e}, {secs:.2} s"),
    );
}

#[test]
fn criterion_2_semigroup_algebra() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (d, n) in [(1usize, 32usize), (2, 16), (3, 8)] {
        let g = GridSpec::new(d, n, 1.0, 1).unwrap();
        let eig = EigenTable::new(&g);
        for flat in (0..g.len()).step_by((g.len() / 40).max(1)) {
            let k = g.multi_index(flat);
            let c = SpectralField::single_mode(g, &k[..d], 1.0).unwrap();
            let t = 1e-4;
            let s = semigroup_apply(&c, t, &eig).unwrap();
            worst = worst.max((s.coeffs()[flat] - (-eig.lambda()[flat] * t).exp()).abs());
        }
        let f = Field::from_fn(g, |x| x.iter().map(|xi| (xi - 1.0).powi(3)).sum()).unwrap();
        let c = to_spectral(&f);
        let (s, t) = (3e-4, 7e-4);
        let two = semigroup_apply(&semigroup_apply(&c, s, &eig).unwrap(), t, &eig).unwrap();
        let one = semigroup_apply(&c, s + t, &eig).unwrap();
        for (a, b) in two.coeffs().iter().zip(one.coeffs()) {
            worst = worst.max((a - b).abs());
        }
        worst = worst.max((one.mean_mode() - c.mean_mode()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "semigroup",
        worst <= 1e-12 && secs < 1.0,
        &format!("max eigen-action/composition/mass defect {worst:.2e}, {secs:.3} s"),
    );
}

#[test]
fn criterion_3_kernel_exponents() {
    let start = Instant::now();
    let r = kernel_estimate_fits(&KernelConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < 30.0;
    let mut parts = Vec::new();
    for tag in ["d=1;n=64", "d=2;n=32"] {
        for kind in ["profile", "spacetime"] {
            let name = format!("{kind}[{tag}]");
            let s = r.find_slope(&name).unwrap();
            ok &= check_ok(&r, &name);
            parts.push(format!("{name} {:.4}", s.slope));
        }
    }
    verdict(3, "kernel exponents", ok, &format!("{}, {secs:.2} s", parts.join(", ")));
}

#[test]
fn criterion_4_linear_spde_variance() {
    let start = Instant::now();
    let n = 32;
    let (horizon, nt, eps) = (1e-6, 100, 0.5);
    let m = ModelSpec::relaxed(
        GridSpec::new(1, n, horizon, nt).unwrap(),
        Cubic([0.0, 0.0, 0.0, 0.0]),
        Sigma::Constant { c: 1.0 },
        InitialDatum::Zero,
        1.0,
    )
    .unwrap();
    let replicas = 10_000;
    let mut sum2 = vec![0.0; n];
    for r in 0..replicas {
        let u = solve_u_eps(eps, &generate_noise(replica_seed(4, r), &m.grid), &m).unwrap();
        for (s, c) in sum2.iter_mut().zip(to_spectral(&u.last()).coeffs()) {
            *s += c * c;
        }
    }
    let mut worst = 0.0f64;
    for (k, s) in sum2.iter().enumerate() {
        let lambda = (k as f64).powi(4);
        let expect = if k == 0 {
            eps * horizon
        } else {
            eps * -(-2.0 * lambda * horizon).exp_m1() / (2.0 * lambda)
        };
        worst = worst.max((s / replicas as f64 / expect - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "OU variance",
        worst <= 0.05 && secs < 120.0,
        &format!("max relative deviation over {n} modes {:.2}% at {replicas} replicas, {secs:.1} s", 100.0 * worst),
    );
}

fn clt_config(moment: f64) -> CltConfig {
    let mut c = CltConfig::new(EPS.to_vec(), 200, NormSpec::new(2.0, 2.0, 0.2).unwrap(), 5);
    c.moment = moment;
    c
}

#[test]
fn criterion_5_clt_rate() {
    let start = Instant::now();
    let m = envelope();
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, band) in [(1.0, (0.35, 0.65)), (2.0, (0.8, 1.2))] {
        let r = clt_study(&clt_config(q), &m).unwrap();
        let s = r.find_slope("sup_lp_q").unwrap();
        ok &= s.slope >= band.0 && s.slope <= band.1 && r.aborts == 0;
        parts.push(format!(
            "q={q}: slope {:.4} ± {:.4} in [{}, {}], {} aborts",
            s.slope, s.stderr, band.0, band.1, r.aborts
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(5, "CLT rate", ok, &format!("{}; {secs:.1} s", parts.join("; ")));
}

#[test]
fn criterion_6_rate_round_trip() {
    let start = Instant::now();
    let m = envelope();
    let u0 = solve_u0(&m).unwrap();
    let v = Trajectory::from_fn(m.grid, |t, x| t.sin() * x[0].cos()).unwrap();
    let energy = half_energy(&v);
    let g = target_path(1.0, &u0, &m).unwrap();
    let i1 = rate_eval(&g, &u0, &m).unwrap().value;
    let round_trip = (i1 / energy - 1.0).abs();
    let mut homog = 0.0f64;
    for c in [2.0, 4.0] {
        let ic = rate_eval(&g.scaled(c), &u0, &m).unwrap().value;
        homog = homog.max((ic / (c * c * i1) - 1.0).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        6,
        "rate round trip",
        round_trip <= 0.05 && homog <= 0.01 && secs < 60.0,
        &format!(
            "I(g) = {i1:.6e} vs energy {energy:.6e} ({:.3}%), homogeneity defect {homog:.2e}, {secs:.1} s",
            100.0 * round_trip
        ),
    );
}

#[test]
fn criterion_7_mdp_diagnostics() {
    let start = Instant::now();
    let m = envelope();
    let sweep = mdp_scaling_sweep(
        &MdpConfig {
            thetas: vec![0.1, 0.25, 0.4],
            eps: EPS.to_vec(),
            replicas: 200,
            seed: 7,
            jobs: 0,
        },
        &m,
    )
    .unwrap();
    let ldp = ldp_diagnostics(&LdpConfig { seed: 7, ..LdpConfig::default() }, &m).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let names = [
        (&sweep, "shared-path"),
        (&ldp, "ordering"),
        (&ldp, "ball-monotone"),
        (&ldp, "eps-monotone"),
    ];
    let ok = names.iter().all(|(r, n)| check_ok(r, n)) && secs < 1800.0;
    let detail: Vec<String> = names
        .iter()
        .map(|(r, n)| format!("{n} {}", r.find_check(n).map_or("missing", |c| c.status.as_str())))
        .collect();
    verdict(7, "MDP diagnostics", ok, &format!("{}; {secs:.1} s", detail.join(", ")));
}

const CLT_RUN: &str = r#"
seed = 5
replicas = 200
output_dir = "clt"

[grid]
d = 1
n = 64
horizon = 0.1
nt = 2000

[scaling]
eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
h = { kind = "one" }

[norms]
p = 2.0
q = 2.0
alpha = 0.2

[study]
kind = "clt"
moment = 1.0
"#;

fn cli_run(cfg: &Path, root: &Path, jobs: &str) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_chlab"))
        .args(["run", "--config"])
        .arg(cfg)
        .args(["--jobs", jobs, "--output"])
        .arg(root)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap_or(-1)
}

#[test]
fn criterion_8_reproducibility() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("clt.toml");
    std::fs::write(&cfg, CLT_RUN).unwrap();
    let codes: Vec<i32> = [("first", "1"), ("second", "1"), ("jobs", "4")]
        .iter()
        .map(|(root, jobs)| cli_run(&cfg, &tmp.path().join(root), jobs))
        .collect();
    let read = |root: &str, f: &str| std::fs::read(tmp.path().join(root).join("clt").join(f)).unwrap();
    let same_seed = read("first", "results.csv") == read("second", "results.csv");
    let jobs_invariant = ["results.csv", "summary.json"]
        .iter()
        .all(|f| read("first", f) == read("jobs", f));
    verdict(
        8,
        "reproducibility",
        codes.iter().all(|&c| c == 0) && same_seed && jobs_invariant,
        &format!("exit codes {codes:?}, identical CSV for equal seeds: {same_seed}, jobs-invariant artifacts: {jobs_invariant}"),
    );
}

#[test]
fn criterion_9_holder_band() {
    let m = envelope();
    let norms = NormSpec::default();
    let y = holder_study(&HolderConfig::new(Process::Y, 200, norms, 9), &m).unwrap();
    let u0 = holder_study(&HolderConfig::new(Process::U0, 1, norms, 9), &m).unwrap();
    let sy = y.find_slope("increment_lp").unwrap();
    let su = u0.find_slope("increment_lp").unwrap();
    let ok = (0.25..=0.45).contains(&sy.slope) && su.slope >= 0.9 && y.aborts == 0;
    verdict(
        9,
        "Hölder band",
        ok,
        &format!("Y exponent {:.4} ± {:.4} in [0.25, 0.45], u0 exponent {:.4} >= 0.9", sy.slope, sy.stderr, su.slope),
    );
}
