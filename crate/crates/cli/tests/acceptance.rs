//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.
//!
//! Run with `cargo test -p casimir-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use casimir_core::experiments::{
    default_gradient, relative_error, run_cslice, run_cslice_with, run_divergence, run_empty_cavity,
};
use casimir_core::materials::{
    cslice_material, BoundarySpec, Filling, Layer, MaterialSpec, Profile, SliceRule, Stack,
};
use casimir_core::stress::{
    pressure_on_mirror, stress_integrand, stress_integrand_scalar, IntegrandForm, Integration,
    QuadratureConfig, Side,
};
use casimir_core::transfer::{
    airy_multilayer, fresnel_isotropic, interface_matrix, reflection_matrix, stack_transfer,
    ReflectionMatrix,
};
use casimir_core::wavesolver::SpectralPoint;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn failed(e: impl std::fmt::Display) -> Verdict {
    verdict(false, format!("error: {e}"))
}

fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-15
}

fn empty_cavity() -> Verdict {
    let cfg = QuadratureConfig::default();
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for d in [0.5, 1.0, 2.0] {
        let start = Instant::now();
        let r = match run_empty_cavity(d, &cfg) {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        slowest = slowest.max(start.elapsed());
        worst = worst.max(r.rel_err.unwrap_or(f64::INFINITY));
    }
    verdict(
        worst <= 1e-6 && slowest <= Duration::from_secs(5),
        format!(
            "max rel_err {worst:.3e} (tol 1e-6), slowest run {:.3} s (limit 5 s)",
            slowest.as_secs_f64()
        ),
    )
}

fn zero_scattering() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let ma = log_uniform(&mut rng, 0.05, 20.0);
        let mb = log_uniform(&mut rng, 0.05, 20.0);
        let kappa = log_uniform(&mut rng, 1e-3, 1e3);
        let kpar = if rng.gen_bool(0.05) {
            0.0
        } else {
            log_uniform(&mut rng, 1e-3, 1e3)
        };
        let sp = SpectralPoint::new(kappa, kpar).unwrap();
        let (a, b) = (cslice_material(ma).unwrap(), cslice_material(mb).unwrap());
        let r = match interface_matrix(&a, &b, sp).and_then(|t| reflection_matrix(&t)) {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        worst = worst.max(r.max_abs());
        // The same pair embedded between vacuum half-spaces.
        let stack = Stack::new(
            BoundarySpec::Vacuum,
            BoundarySpec::Vacuum,
            vec![Layer::new(1e-3, a), Layer::new(1e-3, b)],
        )
        .unwrap();
        match stack_transfer(&stack, 0, 3, sp).and_then(|t| reflection_matrix(&t)) {
            Ok(r) => worst = worst.max(r.max_abs()),
            Err(e) => return failed(e),
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max |r_pq| {worst:.3e} over 1000 pairs (tol 1e-12)"),
    )
}

fn polar() -> QuadratureConfig {
    QuadratureConfig {
        integration: Integration::Polar,
        ..Default::default()
    }
}

const N_LIST: [usize; 4] = [4, 16, 64, 256];

fn virtual_space_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for m in [0.5, 2.0] {
        let profile = Profile::constant((0.4, 0.6), m).unwrap();
        let reports = match run_cslice(1.0, &profile, &N_LIST, &polar()) {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        let p: Vec<f64> = reports.iter().map(|r| r.pressure_numeric).collect();
        let analytic = reports[0].pressure_analytic.unwrap();
        worst = reports
            .iter()
            .filter_map(|r| r.rel_err)
            .fold(worst, f64::max);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        spread = spread.max((hi - lo) / analytic.abs());
    }
    verdict(
        worst <= 1e-6 && spread <= 1e-8,
        format!("max rel_err {worst:.3e} (tol 1e-6), cross-N spread {spread:.3e} (tol 1e-8), m in {{0.5, 2}}, N in {N_LIST:?}"),
    )
}

fn inhomogeneous_cslice() -> Verdict {
    let profile = Profile::linear((0.4, 0.6), 1.0, 3.0).unwrap();
    let reports = match run_cslice(1.0, &profile, &N_LIST, &polar()) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let worst = reports.iter().filter_map(|r| r.rel_err).fold(0.0, f64::max);
    // Midpoint sampling converges to the same target as the slices refine.
    let radial = QuadratureConfig {
        integration: Integration::Radial,
        ..Default::default()
    };
    let midpoint = match run_cslice_with(1.0, &profile, &[1024], SliceRule::Midpoint, &radial) {
        Ok(r) => r[0].rel_err.unwrap(),
        Err(e) => return failed(e),
    };
    verdict(
        worst <= 1e-6 && midpoint <= 1e-6,
        format!(
            "linear m 1->3 on [0.4, 0.6]: target {:.10e}, max rel_err {worst:.3e} over N in {N_LIST:?}, midpoint N=1024 rel_err {midpoint:.3e} (tol 1e-6)",
            reports[0].pressure_analytic.unwrap()
        ),
    )
}

fn divergence_contrast() -> Verdict {
    let cfg = QuadratureConfig::default();
    let ns = [8, 16, 32, 64, 128];
    let gradient = match run_divergence(&default_gradient(1.0).unwrap(), 1.0, None, &ns, &cfg) {
        Ok(r) => r,
        Err(e) => return failed(e),
    };
    let monotone = gradient
        .windows(2)
        .all(|w| w[1].sigma_xx.abs() > w[0].sigma_xx.abs());
    let min_change = gradient[1..]
        .iter()
        .map(|r| r.rel_change_vs_prev)
        .fold(f64::INFINITY, f64::min);

    let flat = Filling::Dielectric(Profile::constant((0.0, 1.0), 1.0).unwrap());
    let wafer = Filling::CSlice(Profile::constant((0.0, 1.0), 2.0).unwrap());
    let mut control: f64 = 0.0;
    for filling in [flat, wafer] {
        match run_divergence(&filling, 1.0, None, &ns, &cfg) {
            Ok(rows) => {
                control = rows[1..]
                    .iter()
                    .map(|r| r.rel_change_vs_prev)
                    .fold(control, f64::max)
            }
            Err(e) => return failed(e),
        }
    }
    let sigma: Vec<String> = gradient
        .iter()
        .map(|r| format!("{:.3e}", r.sigma_xx))
        .collect();
    verdict(
        monotone && min_change >= 1e-3 && control <= 1e-8,
        format!(
            "eps = 1 + z/d: |sigma_xx| strictly increasing = {monotone} [{}], min rel_change {min_change:.3e} (floor 1e-3); homogeneous controls max rel_change {control:.3e} (tol 1e-8)",
            sigma.join(", ")
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed_0006);
    let mut airy_worst: f64 = 0.0;
    for _ in 0..100 {
        let layers = rng.gen_range(1..=5);
        let eps: Vec<f64> = (0..layers + 2).map(|_| rng.gen_range(1.0..6.0)).collect();
        let mu: Vec<f64> = (0..layers + 2).map(|_| rng.gen_range(1.0..2.5)).collect();
        let widths: Vec<f64> = (0..layers).map(|_| rng.gen_range(0.01..1.0)).collect();
        let sp =
            SpectralPoint::new(log_uniform(&mut rng, 0.05, 5.0), rng.gen_range(0.0..5.0)).unwrap();
        let iso = |i: usize| MaterialSpec::isotropic(eps[i], mu[i]).unwrap();
        let stack = Stack::new(
            BoundarySpec::HalfSpace(iso(0)),
            BoundarySpec::HalfSpace(iso(layers + 1)),
            (0..layers)
                .map(|i| Layer::new(widths[i], iso(i + 1)))
                .collect(),
        )
        .unwrap();
        let r = match stack_transfer(&stack, 0, layers + 1, sp).and_then(|t| reflection_matrix(&t))
        {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        let (rs, rp) = airy_multilayer(&eps, &mu, &widths, sp);
        for (a, b) in [(r.ss, rs), (r.pp, rp)] {
            airy_worst = airy_worst.max((a - b).abs() / (a.abs().max(b.abs()) + 1e-300));
            if !close(a, b, 1e-9) {
                return verdict(false, format!("Airy mismatch {a} vs {b}"));
            }
        }
    }
    let mut fresnel_worst: f64 = 0.0;
    for _ in 0..100 {
        let (e1, m1, e2, m2) = (
            rng.gen_range(0.2..10.0),
            rng.gen_range(0.2..10.0),
            rng.gen_range(0.2..10.0),
            rng.gen_range(0.2..10.0),
        );
        let sp =
            SpectralPoint::new(log_uniform(&mut rng, 1e-2, 1e2), rng.gen_range(0.0..50.0)).unwrap();
        let t = interface_matrix(
            &MaterialSpec::isotropic(e1, m1).unwrap(),
            &MaterialSpec::isotropic(e2, m2).unwrap(),
            sp,
        );
        let r = match t.and_then(|t| reflection_matrix(&t)) {
            Ok(r) => r,
            Err(e) => return failed(e),
        };
        let (rs, rp) = fresnel_isotropic(e1, m1, e2, m2, sp);
        for (a, b) in [(r.ss, rs), (r.pp, rp)] {
            if !close(a, b, 1e-12) {
                return verdict(false, format!("Fresnel mismatch {a} vs {b}"));
            }
            fresnel_worst = fresnel_worst.max((a - b).abs() / (a.abs().max(b.abs()) + 1e-300));
        }
    }
    verdict(
        true,
        format!("Airy max rel diff {airy_worst:.3e} (tol 1e-9, 100 stacks); Fresnel max rel diff {fresnel_worst:.3e} (tol 1e-12)"),
    )
}

fn reduction_identity() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed_0007);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut r = || rng.gen_range(-1.0..1.0);
        let rl = ReflectionMatrix::diagonal(r(), r());
        let rr = ReflectionMatrix::diagonal(r(), r());
        let w = log_uniform(&mut rng, 1e-3, 1e2);
        let gap = log_uniform(&mut rng, 1e-3, 10.0);
        let (a, b) = match (
            stress_integrand(&rl, &rr, w, gap),
            stress_integrand_scalar(&rl, &rr, w, gap),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return failed(e),
        };
        if a != 0.0 || b != 0.0 {
            worst = worst.max(relative_error(a, b));
        }
    }
    // End to end through a dielectric slab, whose reflection matrices are diagonal.
    let stack = Stack::new(
        BoundarySpec::IdealMirror,
        BoundarySpec::IdealMirror,
        vec![
            Layer::new(0.4, MaterialSpec::VACUUM),
            Layer::new(0.2, MaterialSpec::isotropic(3.0, 1.5).unwrap()),
            Layer::new(0.4, MaterialSpec::VACUUM),
        ],
    )
    .unwrap();
    let trace = pressure_on_mirror(&stack, Side::Left, &QuadratureConfig::default());
    let scalar = pressure_on_mirror(
        &stack,
        Side::Left,
        &QuadratureConfig {
            integrand: IntegrandForm::Scalar,
            ..Default::default()
        },
    );
    let full = match (trace, scalar) {
        (Ok(t), Ok(s)) => relative_error(t.sigma_xx, s.sigma_xx),
        (Err(e), _) | (_, Err(e)) => return failed(e),
    };
    verdict(
        worst <= 1e-12 && full <= 1e-12,
        format!("integrand max rel diff {worst:.3e}, slab-cavity pressure rel diff {full:.3e} (tol 1e-12)"),
    )
}

fn run_cli(dir: &Path, threads: &str, args: &[&str], name: &str) -> Result<Vec<u8>, String> {
    let out = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_casimir"))
        .args(args)
        .arg("--out")
        .arg(&out)
        .env("CASIMIR_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["--scenario", "empty", "--d", "1.0"],
        &[
            "--scenario",
            "cslice",
            "--profile",
            "linear:1,3",
            "--interval",
            "0.4,0.6",
            "--N",
            "4,16",
            "--integration",
            "polar",
        ],
        &["--scenario", "divergence", "--N", "8,16,32"],
    ];
    let mut checked = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for (j, threads) in ["1", "4", "4", "1"].iter().enumerate() {
            match run_cli(dir.path(), threads, args, &format!("run{i}-{j}.csv")) {
                Ok(bytes) => outputs.push(bytes),
                Err(e) => return failed(e),
            }
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return verdict(
                false,
                format!("{args:?} produced differing CSV across thread counts"),
            );
        }
        checked += outputs.len();
    }
    verdict(
        true,
        format!(
            "{checked} CLI runs over 3 scenarios, CASIMIR_THREADS in {{1, 4}}: byte-identical CSV"
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("empty-cavity benchmark", empty_cavity),
        ("zero internal scattering", zero_scattering),
        ("virtual-space equivalence", virtual_space_equivalence),
        ("inhomogeneous C-slice", inhomogeneous_cslice),
        ("divergence contrast", divergence_contrast),
        ("oracle equivalence", oracle_equivalence),
        ("reduction identity", reduction_identity),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failures += 1;
        }
        println!(
            "criterion {} {} {name}: {} [{:.2} s]",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
