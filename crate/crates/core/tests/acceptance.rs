//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Scenario A: d = 1, k = {−1, 2}, unit-width Gaussians centred at 0 and 2
//! with weights 1 and 0.8+0.3i, exponential kernel with λ = 1, L = 32π,
//! T = 0.5, ε = 2⁻² … 2⁻⁶. The scenario files live in `scenarios/`.
//!
//! Runs without the libtest harness so the criterion lines are always printed.
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL without failing the
//! run; any other FAIL exits nonzero.

use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use num_complex::Complex64;

use hartree_wkb::diagnostics::{
    residual_terms, shift_suite, submultiplicativity_suite, trilinear_suite, unitarity_suite, yr_bound_check,
};
use hartree_wkb::harness::report::records_to_csv;
use hartree_wkb::harness::sweep::{case_grid, case_solver, RatePoint};
use hartree_wkb::harness::{fit_rate, run_sweep, SweepConfig, SweepReport};
use hartree_wkb::kernels::{convolution_factor, Kernel, KernelFamily};
use hartree_wkb::solver::{free_evolution, propagate_fixed, strang_step, SolverConfig};
use hartree_wkb::spectral::{Field, Grid, GridSpec};
use hartree_wkb::wkb::{assemble_u_app, build_amplitudes, build_initial_data, ModeSpec, Variant};

/// Criteria expected to fail, with the reason printed next to the FAIL line.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "4b",
    "the exponential kernel multiplier decays like 2/ξ², so the cross terms at |ξ| ≈ 3/ε make ‖Y_R‖_W = O(ε²) and ‖Y_R‖_W/ε halves with ε",
)];

struct Verdict {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn verdict(id: &'static str, passed: bool, detail: String) -> Verdict {
    Verdict { id, passed, detail }
}

fn scenario(name: &str) -> SweepConfig {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", &format!("{name}.toml")].iter().collect();
    let mut cfg = SweepConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    cfg.output_dir = std::env::temp_dir().join("hartree-wkb-acceptance");
    cfg
}

fn beta(report: &SweepReport) -> f64 {
    report.fit.map(|f| f.beta).unwrap_or(f64::NAN)
}

fn describe(report: &SweepReport) -> String {
    match report.fit {
        Some(f) => format!("β̂ = {:.4} ± {:.4} ({} points, {} dropped)", f.beta, f.stderr, f.used, f.dropped),
        None => format!("no fit: {}", report.fit_note.as_deref().unwrap_or("?")),
    }
}

struct Sweeps {
    critical: SweepReport,
    subcritical: SweepReport,
    modulated: SweepReport,
    supercritical: SweepReport,
}

fn run_scenario_sweeps() -> Sweeps {
    let names = ["critical", "subcritical", "subcritical_modulated", "supercritical"];
    let mut reports: Vec<SweepReport> = thread::scope(|s| {
        let handles: Vec<_> = names
            .iter()
            .map(|n| s.spawn(move || run_sweep(&scenario(n)).unwrap_or_else(|e| panic!("{n}: {e}"))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep thread")).collect()
    });
    let supercritical = reports.pop().unwrap();
    let modulated = reports.pop().unwrap();
    let subcritical = reports.pop().unwrap();
    let critical = reports.pop().unwrap();
    Sweeps { critical, subcritical, modulated, supercritical }
}

fn criterion_1(s: &Sweeps) -> Verdict {
    let b = beta(&s.critical);
    verdict(
        "1",
        (0.80..=1.25).contains(&b),
        format!("α = 1 standard: {} in [0.80, 1.25], theory 1", describe(&s.critical)),
    )
}

fn criterion_2(s: &Sweeps) -> Verdict {
    let (b15, b25) = (beta(&s.subcritical), beta(&s.supercritical));
    verdict(
        "2",
        (0.35..=0.75).contains(&b15) && b25 >= 0.80,
        format!(
            "α = 1.5: {} in [0.35, 0.75], theory 0.5; α = 2.5: {} ≥ 0.80, theory 1",
            describe(&s.subcritical),
            describe(&s.supercritical)
        ),
    )
}

fn criterion_3(s: &Sweeps) -> Verdict {
    let (m, std) = (beta(&s.modulated), beta(&s.subcritical));
    verdict(
        "3",
        m >= std - 0.1,
        format!(
            "α = 1.5 ε-modulated: {} vs standard {std:.4} − 0.1; expected rate for the variant is 1",
            describe(&s.modulated)
        ),
    )
}

struct BoundTable {
    ratios: Vec<(f64, f64, f64)>,
    yr_over_eps: Vec<(f64, f64, f64)>,
}

fn bound_table() -> BoundTable {
    let cfg = scenario("critical");
    let modes = cfg.mode_spec();
    let mut ratios = Vec::new();
    let mut yr_over_eps = Vec::new();
    for eps in [0.125, 0.0625, 0.03125] {
        let grid = case_grid(&cfg, eps).expect("grid");
        let kernel = Kernel::new(cfg.kernel.family().expect("kernel"), &grid);
        for t in [0.1, 0.25, 0.5] {
            let amps = build_amplitudes(&modes, t, &kernel, 1.0, Variant::Standard).expect("amplitudes");
            let r = residual_terms(&amps, &modes, &kernel, eps, 1.0, t).expect("residuals");
            let b = yr_bound_check(&r, &amps, &modes, &kernel, eps).expect("bound");
            ratios.push((eps, t, b.ratio));
            yr_over_eps.push((eps, t, r.yr_wiener / eps));
        }
    }
    BoundTable { ratios, yr_over_eps }
}

fn criterion_4(table: &BoundTable) -> (Verdict, Verdict) {
    let worst = table.ratios.iter().map(|r| r.2).fold(0.0, f64::max);
    let a = verdict("4a", worst <= 1.0 + 1e-6, format!("max ‖Y_R‖_W / bound over 3 ε × 3 t = {worst:.3e} ≤ 1 + 1e-6"));
    let mut spread = 0.0f64;
    let mut rows = Vec::new();
    for t in [0.1, 0.25, 0.5] {
        let vals: Vec<f64> = table.yr_over_eps.iter().filter(|r| r.1 == t).map(|r| r.2).collect();
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        spread = spread.max(hi / lo);
        rows.push(format!("t={t}: {:?}", vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()));
    }
    let b = verdict(
        "4b",
        spread < 3.0,
        format!("max spread of ‖Y_R‖_W/ε across ε = {spread:.3} < 3 ({})", rows.join("; ")),
    );
    (a, b)
}

fn criterion_5(s: &Sweeps) -> Verdict {
    let all = [&s.critical, &s.subcritical, &s.modulated, &s.supercritical];
    let drift = all.iter().flat_map(|r| r.records.iter().map(|c| c.l2_drift)).fold(0.0, f64::max);
    let mass = all.iter().flat_map(|r| r.diagnostics.iter().map(|d| d.mode_mass_drift())).fold(0.0, f64::max);
    let cases: usize = all.iter().map(|r| r.records.len()).sum();
    verdict(
        "5",
        drift <= 1e-9 && mass <= 1e-10,
        format!(
            "{cases} trajectories: max L² drift {drift:.3e} ≤ 1e-9, max per-mode mass deviation {mass:.3e} ≤ 1e-10"
        ),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let seed = 20_240_601;
    let suites = [
        submultiplicativity_suite(100, seed),
        unitarity_suite(100, seed + 1),
        trilinear_suite(100, seed + 2),
        shift_suite(100, seed + 3),
    ];
    let elapsed = start.elapsed().as_secs_f64();
    let ok = suites.iter().all(|s| s.passed() && s.trials == 100) && elapsed <= 60.0;
    let parts: Vec<String> =
        suites.iter().map(|s| format!("{} {}/{}", s.name, s.trials - s.violations, s.trials)).collect();
    verdict("6", ok, format!("{} in {elapsed:.1}s", parts.join(", ")))
}

fn zero_kernel_rate() -> (f64, Vec<f64>) {
    let cfg = scenario("critical");
    let full = cfg.mode_spec();
    let modes = ModeSpec::new(vec![full.modes[0].clone()]);
    let t = 0.5;
    let eps_list = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
    let errors: Vec<f64> = eps_list
        .iter()
        .map(|&eps| {
            let grid = case_grid(&cfg, eps).expect("grid");
            let kernel = Kernel::new(KernelFamily::Zero, &grid);
            let u0 = build_initial_data(&modes, eps, &grid).expect("initial data");
            let exact = free_evolution(&u0, t, eps);
            let amps = build_amplitudes(&modes, t, &kernel, 1.0, Variant::Standard).expect("amplitudes");
            let u_app = assemble_u_app(&amps, &modes, t, eps).expect("u_app");
            exact.max_abs_diff(&u_app).expect("same grid")
        })
        .collect();
    let points: Vec<RatePoint> =
        eps_list.iter().zip(&errors).map(|(&epsilon, &error)| RatePoint { epsilon, error, floor: 0.0 }).collect();
    (fit_rate(&points).map(|f| f.beta).unwrap_or(f64::NAN), errors)
}

fn strang_ratio() -> (f64, [f64; 2]) {
    let cfg = scenario("critical");
    let eps = 0.125;
    let grid = case_grid(&cfg, eps).expect("grid");
    let solver = case_solver(&cfg, eps, &grid).expect("solver").with_snapshots(vec![cfg.final_time]);
    let u0 = build_initial_data(&cfg.mode_spec(), eps, &grid).expect("initial data");
    let run = |dt: f64| propagate_fixed(&solver, &u0, dt).expect("propagation").final_state;
    let (a, b, c) = (run(1.0 / 32.0), run(1.0 / 64.0), run(1.0 / 128.0));
    let d1 = a.max_abs_diff(&b).unwrap();
    let d2 = b.max_abs_diff(&c).unwrap();
    (d1 / d2, [d1, d2])
}

fn constant_mode_error() -> f64 {
    let grid = Grid::new(GridSpec::new(1, 1024, 32.0 * std::f64::consts::PI)).expect("grid");
    let eps = 1.0 / 16.0;
    let (k, a) = (1.0, Complex64::new(0.6, -0.3));
    let family = KernelFamily::Exponential1d { sign: 1.0, lambda: 1.0 };
    let v = a.norm_sqr() * convolution_factor(1) * family.multiplier_at(&[0.0]);
    let alpha = 1.5;
    let cfg = SolverConfig::new(eps, alpha, 1.0, Kernel::new(family, &grid));
    let mut u = Field::from_fn(&grid, |x| a * Complex64::from_polar(1.0, k * x[0] / eps));
    for _ in 0..64 {
        u = strang_step(&u, 1.0 / 64.0, &cfg).expect("step");
    }
    let t = 1.0;
    let closed = Field::from_fn(&grid, |x| {
        a * Complex64::from_polar(1.0, (k * x[0] - t * k * k / 2.0) / eps - eps.powf(alpha - 1.0) * t * v)
    });
    u.max_abs_diff(&closed).unwrap()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_7() -> Verdict {
    let (rate, errors) = zero_kernel_rate();
    let (ratio, diffs) = strang_ratio();
    let closed = constant_mode_error();
    verdict(
        "7",
        rate >= 0.8 && (3.5..=4.5).contains(&ratio) && closed <= 1e-8,
        format!(
            "zero-kernel WKB rate {rate:.4} ≥ 0.8 (errors {}); Strang ratio {ratio:.3} in [3.5, 4.5] (differences {}); constant mode error {closed:.3e} ≤ 1e-8",
            sci(&errors),
            sci(&diffs)
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut cfg = scenario("critical");
    cfg.timings = false;
    let csv = |workers: usize| {
        let mut c = cfg.clone();
        c.workers = workers;
        records_to_csv(&run_sweep(&c).expect("sweep").records)
    };
    let (one, eight) = (csv(1), csv(8));
    cfg.timings = true;
    cfg.workers = 8;
    let timed = run_sweep(&cfg).expect("sweep");
    let reference = hartree_wkb::harness::report::records_from_csv(&one).expect("csv");
    let numeric_same = timed.records.iter().zip(&reference).all(|(a, b)| {
        [a.epsilon, a.sup_error, a.yr_wiener, a.bound_ratio, a.l2_drift]
            .iter()
            .zip([b.epsilon, b.sup_error, b.yr_wiener, b.bound_ratio, b.l2_drift])
            .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    verdict(
        "8",
        one == eight && numeric_same,
        format!(
            "CSV bytes identical at 1 and 8 workers: {} ({} bytes); numeric columns identical with timings on: {numeric_same}",
            one == eight,
            one.len()
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let (sweeps, table, v6, v7, v8) = thread::scope(|s| {
        let sweeps = s.spawn(run_scenario_sweeps);
        let table = s.spawn(bound_table);
        let v6 = s.spawn(criterion_6);
        let v7 = s.spawn(criterion_7);
        let v8 = s.spawn(criterion_8);
        (
            sweeps.join().expect("sweeps"),
            table.join().expect("bound table"),
            v6.join().expect("criterion 6"),
            v7.join().expect("criterion 7"),
            v8.join().expect("criterion 8"),
        )
    });
    let (v4a, v4b) = criterion_4(&table);
    let verdicts =
        [criterion_1(&sweeps), criterion_2(&sweeps), criterion_3(&sweeps), v4a, v4b, criterion_5(&sweeps), v6, v7, v8];

    let mut unexpected = 0;
    for v in &verdicts {
        let known = KNOWN_FAILURES.iter().find(|(id, _)| *id == v.id);
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {}", v.id, v.detail);
        match (v.passed, known) {
            (false, Some((_, why))) => println!("     known failure: {why}"),
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("     listed as a known failure but passed"),
            _ => {}
        }
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    println!("{passed}/{} criteria passed in {:.1}s", verdicts.len(), start.elapsed().as_secs_f64());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    }
}
