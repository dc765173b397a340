//! Benchmark acceptance checks. Runs without the libtest harness so that every
//! check prints exactly one PASS/FAIL line; exits non-zero if any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nlfe::fem::{
    assemble, build_axisymmetric_rod, build_bar_1d, build_hex_cube, build_indentation, build_tube, LoadDirection,
    Problem, INDENTATION_EDGE, TUBE_LENGTH, TUBE_OUTER_RADIUS,
};
use nlfe::harness::{config::parse, run_sweep_config, SweepConfig};
use nlfe::materials::{Material, MrParams, StressMeasure, VwParams};
use nlfe::metrics::{
    comparison_region, local_nonlinearity, midpoint_grid, transformed_function, ScalarFunction, Transform,
};
use nlfe::solver::{scalar_newton, solve, LoadSchedule, SolveReport, SolverConfig, Termination};
use nlfe::transforms::{calibrate_alpha, modified_residual, ResidualPair, TransformKind, TransformSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use TransformKind::{Arctan, Identity, Log};

struct Outcome {
    pass: bool,
    detail: String,
}

/// Accumulates sub-checks of one criterion.
#[derive(Default)]
struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self, elapsed: Duration, budget: Duration) -> Outcome {
        let mut c = self;
        c.check(elapsed <= budget, format!("runtime {:.2?} (budget {budget:.0?})", elapsed));
        let pass = c.failures.is_empty();
        let detail = if pass {
            c.notes.join("; ")
        } else {
            format!("failed: {} | ok: {}", c.failures.join("; "), c.notes.join("; "))
        };
        Outcome { pass, detail }
    }
}

fn vw(a: f64, b: f64, k: f64) -> Material {
    Material::VerondaWestmann(VwParams::new(a, b, k).unwrap())
}

fn nh(mu: f64, k: f64) -> Material {
    Material::MooneyRivlin(MrParams::neo_hookean(mu, k).unwrap())
}

fn run(problem: &Problem, f1: f64, f2: f64, kind: TransformKind) -> SolveReport {
    solve(problem, &LoadSchedule::two_step(f1, f2).unwrap(), &SolverConfig::with_formulation(kind)).unwrap()
}

fn summary(r: &SolveReport) -> String {
    if r.converged() {
        format!("converged in {}", r.iterations())
    } else {
        format!("{} after {}", r.termination(), r.iterations())
    }
}

fn scalar_oracle() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let g = ScalarFunction::exponential(1.0, 5.0);
    let log = scalar_newton(&g, 100.0, 0.0, Log, None, 1e-12, 100);
    c.check(
        log.converged && log.iterations == 1,
        format!("log: converged={} in {}", log.converged, log.iterations),
    );
    let id = scalar_newton(&g, 100.0, 0.0, Identity, None, 1e-12, 100);
    c.check(
        !id.converged || id.iterations > 10,
        format!("identity: converged={} in {}", id.converged, id.iterations),
    );
    c.finish(t.elapsed(), Duration::from_secs(1))
}

fn vw_bar() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let p = build_bar_1d(10, vw(1.0, 100.0, 1.0)).unwrap();
    let id = run(&p, 1e-4, 5.0, Identity);
    c.check(
        matches!(id.termination(), Termination::MaxIterations | Termination::NegativeStretch),
        format!("identity at 5: {}", summary(&id)),
    );
    for f2 in [1.0, 10.0, 100.0] {
        let r = run(&p, 1e-4, f2, Log);
        c.check(r.converged() && r.iterations() <= 12, format!("log at {f2}: {}", summary(&r)));
    }
    c.finish(t.elapsed(), Duration::from_secs(5))
}

fn mr_bar() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let p = build_bar_1d(10, nh(1.0, 1.0)).unwrap();
    let id = run(&p, -1e-4, -10.0, Identity);
    c.check(!id.converged(), format!("identity at 10: {}", summary(&id)));
    for f2 in [10.0, 100.0] {
        let r = run(&p, -1e-4, -f2, Arctan);
        c.check(r.converged() && r.iterations() <= 12, format!("arctan at {f2}: {}", summary(&r)));
    }
    c.finish(t.elapsed(), Duration::from_secs(5))
}

fn rod_bracket() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let p = build_axisymmetric_rod(10, nh(1.0, 10.0)).unwrap();
    let at10 = run(&p, -1e-4, -10.0, Arctan);
    c.check(at10.converged(), format!("arctan at 10: {}", summary(&at10)));
    let at20 = run(&p, -1e-4, -20.0, Arctan);
    c.check(!at20.converged(), format!("arctan at 20: {}", summary(&at20)));
    c.finish(t.elapsed(), Duration::from_secs(10))
}

fn cube_extension() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let p = build_hex_cube(10, vw(1.0, 100.0, 10.0), LoadDirection::Tension).unwrap();
    let log = run(&p, 1e-4, 10.0, Log);
    c.check(log.converged() && log.iterations() <= 15, format!("log: {}", summary(&log)));
    let id = run(&p, 1e-4, 10.0, Identity);
    c.check(!id.converged(), format!("identity: {}", summary(&id)));
    c.finish(t.elapsed(), Duration::from_secs(300))
}

/// Mean relative radius change of the outer surface at mid-length.
fn outer_radius_increase(p: &Problem, u: &[f64], axial_spacing: f64) -> f64 {
    let (mut before, mut after) = (0.0, 0.0);
    for (i, x) in p.nodes().iter().enumerate() {
        let r = x[0].hypot(x[1]);
        if (r - TUBE_OUTER_RADIUS).abs() > 1e-9 || (x[2] - 0.5 * TUBE_LENGTH).abs() > 0.5 * axial_spacing + 1e-9 {
            continue;
        }
        let d = p.node_displacement(u, i);
        before += r;
        after += (x[0] + d[0]).hypot(x[1] + d[1]);
    }
    after / before - 1.0
}

fn tube() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let (nr, nc, na) = (4, 40, 25);
    let p = build_tube(VwParams::new(0.5, 50.0, 10.0).unwrap(), nr, nc, na).unwrap();
    let log = run(&p, 2e-5, 0.2, Log);
    c.check(
        log.converged() && (6..=10).contains(&log.iterations()),
        format!("log: {}", summary(&log)),
    );
    if log.converged() {
        let inc = outer_radius_increase(&p, &log.u, TUBE_LENGTH / na as f64);
        c.check((0.07..=0.09).contains(&inc), format!("outer radius +{:.2}%", 100.0 * inc));
    }
    let id = run(&p, 2e-5, 0.2, Identity);
    c.check(!id.converged(), format!("identity: {}", summary(&id)));
    c.finish(t.elapsed(), Duration::from_secs(600))
}

fn indentation() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let p = build_indentation(MrParams::neo_hookean(0.2, 1.0).unwrap(), 10, 0.04).unwrap();
    let arctan = run(&p, 0.036, 360.0, Arctan);
    c.check(
        arctan.converged() && (5..=9).contains(&arctan.iterations()),
        format!("arctan: {}", summary(&arctan)),
    );
    let id = run(&p, 0.036, 360.0, Identity);
    c.check(!id.converged(), format!("identity: {}", summary(&id)));
    c.finish(t.elapsed(), Duration::from_secs(600))
}

/// ‖K − FD(fⁱⁿᵗ)‖∞ / ‖K‖∞ with central differences.
fn fd_mismatch(problem: &Problem, u: &[f64], h: f64) -> f64 {
    let sys = assemble(problem, u, 0.0).unwrap();
    let k = sys.k.to_dense();
    let mut u = u.to_vec();
    let mut worst = 0.0f64;
    for j in 0..u.len() {
        let orig = u[j];
        u[j] = orig + h;
        let fp = assemble(problem, &u, 0.0).unwrap().f_int;
        u[j] = orig - h;
        let fm = assemble(problem, &u, 0.0).unwrap().f_int;
        u[j] = orig;
        for i in 0..u.len() {
            worst = worst.max((k[i][j] - (fp[i] - fm[i]) / (2.0 * h)).abs());
        }
    }
    worst / sys.k.max_abs()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den
}

fn property_suite() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    let families: Vec<(Problem, f64, f64)> = vec![
        (build_bar_1d(5, vw(1.0, 5.0, 1.0)).unwrap(), 0.05, 1e-7),
        (build_axisymmetric_rod(4, Material::MooneyRivlin(MrParams::new(1.0, 0.4, 10.0).unwrap())).unwrap(), 0.03, 1e-7),
        (build_hex_cube(2, vw(1.0, 3.0, 10.0), LoadDirection::Tension).unwrap(), 0.03, 1e-7),
        (build_tube(VwParams::new(0.5, 5.0, 10.0).unwrap(), 1, 8, 2).unwrap(), 0.01, 1e-7),
        (build_indentation(MrParams::neo_hookean(0.2, 1.0).unwrap(), 3, 0.2).unwrap(), 1.0, 1e-7 * INDENTATION_EDGE),
    ];
    let mut worst_fd = 0.0f64;
    for (p, scale, h) in &families {
        let u: Vec<f64> = (0..p.n_free()).map(|_| rng.random_range(-scale..*scale)).collect();
        worst_fd = worst_fd.max(fd_mismatch(p, &u, *h));
    }
    c.check(worst_fd < 1e-5, format!("stiffness vs FD {worst_fd:.1e}"));

    // Modified residuals agree with fᵉˣᵗ − fⁱⁿᵗ to first order.
    let mut worst_first = 0.0f64;
    for _ in 0..100 {
        let f_int = -rng.random_range(0.1..100.0);
        let r = ResidualPair::new(f_int, f_int * (1.0 + 1e-6));
        let mut spec = TransformSpec::mixed(vec![Log, Arctan]);
        spec.set_tol(1e-10);
        spec.set_alpha(1, Some(calibrate_alpha(f_int, rng.random_range(0.1..0.9)).unwrap()));
        for dof in 0..2 {
            worst_first = worst_first.max((modified_residual(r, &spec, dof) - r.standard()).abs() / f_int.abs());
        }
    }
    c.check(worst_first < 1e-10, format!("first-order equivalence {worst_first:.1e}"));

    // Converged solutions do not depend on the formulation.
    let tight = |kind| SolverConfig { disp_tol: 1e-9, ..SolverConfig::with_formulation(kind) };
    let pairs: Vec<(Problem, f64, f64, TransformKind)> = vec![
        (build_bar_1d(10, vw(1.0, 10.0, 1.0)).unwrap(), 1e-4, 1.0, Log),
        (build_bar_1d(10, nh(1.0, 1.0)).unwrap(), -1e-4, -1.0, Arctan),
        (build_axisymmetric_rod(10, nh(1.0, 10.0)).unwrap(), -1e-4, -2.0, Arctan),
        (build_hex_cube(3, vw(1.0, 10.0, 10.0), LoadDirection::Tension).unwrap(), 1e-4, 1.0, Log),
        (build_hex_cube(3, nh(1.0, 10.0), LoadDirection::Compression).unwrap(), 1e-4, 1.0, Arctan),
    ];
    let mut worst_equiv = 0.0f64;
    let mut all_converged = true;
    for (p, f1, f2, kind) in &pairs {
        let schedule = LoadSchedule::two_step(*f1, *f2).unwrap();
        let a = solve(p, &schedule, &tight(Identity)).unwrap();
        let b = solve(p, &schedule, &tight(*kind)).unwrap();
        all_converged &= a.converged() && b.converged();
        worst_equiv = worst_equiv.max(rel_diff(&b.u, &a.u));
    }
    c.check(all_converged && worst_equiv < 1e-6, format!("formulation equivalence {worst_equiv:.1e}"));

    // log(A e^{Bx}) is affine, so its nonlinearity measure vanishes.
    let log_exp = transformed_function(&ScalarFunction::exponential(2.0, 7.0), Transform::Log);
    let worst_lin = (0..100)
        .map(|_| local_nonlinearity(&log_exp, rng.random_range(-3.0..3.0)).unwrap())
        .fold(0.0f64, f64::max);
    c.check(worst_lin < 1e-10, format!("log-exp linearity {worst_lin:.1e}"));

    let sweep: SweepConfig = parse(
        r#"
[problem]
family = "axisymmetric"
elements = 10
direction = "tension"
[material]
model = "veronda_westmann"
nonlinearity = [10.0, 100.0]
bulk_ratio = [10.0]
[loads]
f1 = [1e-4]
f2 = { from = 1.0, to = 100.0, per_decade = 3 }
[sweep]
formulations = ["identity", "log"]
"#,
        "determinism sweep",
    )
    .unwrap();
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let outputs: Vec<Vec<u8>> = [1, 4, 4]
        .iter()
        .zip(&dirs)
        .map(|(jobs, d)| std::fs::read(run_sweep_config(&sweep, d.path(), *jobs).unwrap().file).unwrap())
        .collect();
    c.check(
        outputs.windows(2).all(|w| w[0] == w[1]),
        format!("sweep reruns byte-identical ({} bytes)", outputs[0].len()),
    );
    c.finish(t.elapsed(), Duration::from_secs(120))
}

fn metrics() -> Outcome {
    let t = Instant::now();
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (a, b) = (rng.random_range(0.1..10.0), rng.random_range(-20.0..20.0));
        let x = rng.random_range(-1.0..1.0);
        let got = local_nonlinearity(&ScalarFunction::exponential(a, b), x).unwrap();
        worst = worst.max((got - b.abs() / 2.0).abs() / (b.abs() / 2.0));
    }
    c.check(worst < 1e-12, format!("exponential measure error {worst:.1e}"));

    let cauchy = ScalarFunction::neo_hookean(StressMeasure::Cauchy);
    let arctan = transformed_function(&cauchy, Transform::arctan_with_beta_sq(3.0));
    let half_pi = std::f64::consts::FRAC_PI_2;
    let bounded = (1..=10_000)
        .map(|i| i as f64 / 10_001.0)
        .chain([1e-8, 1e-4, 1.0 - 1e-9])
        .all(|l| arctan.value(l).is_ok_and(|v| (-half_pi..=0.0).contains(&v)));
    c.check(bounded, "arctan Cauchy curve within [-pi/2, 0]");

    let grid = midpoint_grid(0.0, 1.0, 100);
    let region = comparison_region(&cauchy, Transform::arctan_with_beta_sq(3.0), &grid, &grid, 10_001);
    let frac = region.true_fraction();
    // Every cell where the standard form wins must touch the band near λ = 1.
    let near_one = region
        .cells
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, v)| (i, j, *v)))
        .filter(|(_, _, v)| *v == Some(true))
        .all(|(i, j, _)| region.xn[i].max(region.x[j]) > 0.5);
    c.check(frac < 0.25 && near_one, format!("standard-better fraction {:.2}%", 100.0 * frac));
    c.finish(t.elapsed(), Duration::from_secs(60))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("scalar exponential oracle", scalar_oracle),
        ("Veronda-Westmann bar", vw_bar),
        ("neo-Hookean bar in compression", mr_bar),
        ("axisymmetric arctan bracket", rod_bracket),
        ("cube extension", cube_extension),
        ("tube pressurization", tube),
        ("indentation", indentation),
        ("property suite", property_suite),
        ("nonlinearity metrics", metrics),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {} ({name}): {}", i + 1, outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
