//! End-to-end acceptance suite. Runs every criterion, prints one line per
//! criterion, and exits non-zero when any of them fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gsparse::distributions::{verify_cl_in_cg, verify_laplace_identity, ScalarDistribution};
use gsparse::experiments::{generate_problem, generate_problem_with, trial_seed, ProblemSpec};
use gsparse::linalg::{kernel_basis, Matrix, Vector};
use gsparse::nsp::{check_nsp, estimate_frontier, NspQuery, Sampling};
use gsparse::quadrature::QuadratureConfig;
use gsparse::regularizers::{
    check_convexity_h, check_properties, reconstruct_f, ConvexityGrid, ParametricMixing, Penalty, Regularizer,
    SampleSpec,
};
use gsparse::solvers::{
    bruteforce_min_r_over_gy, g_irls, theorem2_bound_check, GirlsConfig, GirlsResult, OracleGrid, SensingProblem,
};
use gsparse::sparsity::{sigma_bracket, sigma_bruteforce, tail_value};

type Outcome = Result<String, String>;

/// Invariant summary of every solver run made by the suite.
struct RunRecord {
    label: String,
    max_residual_excess: f64,
    eps_monotone: bool,
    max_loss_increase: f64,
}

static RUNS: Mutex<Vec<RunRecord>> = Mutex::new(Vec::new());

fn solve_recorded(label: String, problem: &SensingProblem, reg: &Regularizer, cfg: &GirlsConfig) -> GirlsResult {
    let cfg = GirlsConfig {
        record_trace: true,
        ..cfg.clone()
    };
    let result = g_irls(problem, reg, &cfg).unwrap_or_else(|e| panic!("{label}: {e}"));
    let trace = result.trace.as_ref().expect("trace requested");
    let tol = problem.feasibility_tolerance();
    let max_residual_excess = trace
        .iter()
        .map(|e| e.feasibility_residual - tol)
        .fold(f64::NEG_INFINITY, f64::max);
    let eps_monotone = trace.windows(2).all(|p| p[1].eps <= p[0].eps);
    let max_loss_increase = trace
        .windows(2)
        .map(|p| p[1].loss - p[0].loss)
        .fold(f64::NEG_INFINITY, f64::max);
    RUNS.lock().unwrap().push(RunRecord {
        label,
        max_residual_excess,
        eps_monotone,
        max_loss_increase,
    });
    result
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_error(a: &[f64], b: &Vector) -> f64 {
    let d: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.norm()
}

fn two_atom(n: usize) -> Regularizer {
    Regularizer::cl_discrete(vec![1.0; n], vec![0.5, 2.0], vec![0.5, 0.5]).unwrap()
}

fn classic_irls_recovery() -> Outcome {
    let (m, n, k_true) = (20, 50, 3);
    let cfg = GirlsConfig::new(m - 1, 1e-9, 1000);
    let mut successes = 0;
    let mut slowest = 0.0_f64;
    let mut worst_weight = 0.0_f64;
    for trial in 0..100 {
        let seed = trial_seed(2024, m, n, k_true, trial);
        let problem = generate_problem(&ProblemSpec::exact(m, n, k_true, seed)).map_err(|e| e.to_string())?;
        let reg = Regularizer::l1_norm(n).unwrap();
        let start = Instant::now();
        let result = solve_recorded(format!("recovery trial {trial}"), &problem, &reg, &cfg);
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let truth = problem.ground_truth.as_ref().unwrap();
        if rel_error(&result.c_bar, truth) <= 1e-6 {
            successes += 1;
        }
        let mut eps_prev = n as f64;
        for entry in result.trace.as_ref().unwrap() {
            for (c, w) in entry.c.iter().zip(&entry.w) {
                let classic = 1.0 / (c * c + eps_prev * eps_prev).sqrt();
                worst_weight = worst_weight.max((w - classic).abs() / classic);
            }
            eps_prev = entry.eps;
        }
    }
    ensure(successes >= 95, || format!("{successes}/100 recovered"))?;
    ensure(slowest < 2.0, || format!("slowest trial took {slowest:.3} s"))?;
    ensure(worst_weight <= 1e-12, || format!("weight deviates from 1/√(c²+ε²) by {worst_weight:e}"))?;
    Ok(format!(
        "{successes}/100 recovered, slowest trial {:.0} ms, max relative weight deviation {worst_weight:.1e}",
        slowest * 1e3
    ))
}

fn algorithm_invariants() -> Outcome {
    let runs = RUNS.lock().unwrap();
    ensure(!runs.is_empty(), || "no solver runs recorded".into())?;
    for r in runs.iter() {
        ensure(r.max_residual_excess <= 0.0, || {
            format!("{}: residual exceeds tolerance by {:e}", r.label, r.max_residual_excess)
        })?;
        ensure(r.eps_monotone, || format!("{}: ε increased", r.label))?;
        ensure(r.max_loss_increase <= 1e-10, || {
            format!("{}: loss increased by {:e}", r.label, r.max_loss_increase)
        })?;
    }
    let worst = runs.iter().map(|r| r.max_loss_increase).fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("{} runs feasible, ε and loss monotone (largest loss step {worst:.1e})", runs.len()))
}

fn laplace_monte_carlo() -> Outcome {
    let mut parts = Vec::new();
    for (i, (sigma, lambda)) in [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)].into_iter().enumerate() {
        let start = Instant::now();
        let rep = verify_laplace_identity(sigma, lambda, 1_000_000, 100 + i as u64).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        ensure(rep.ks_statistic < 0.003, || format!("(σ, λ) = ({sigma}, {lambda}): KS {}", rep.ks_statistic))?;
        ensure(secs < 10.0, || format!("(σ, λ) = ({sigma}, {lambda}) took {secs:.1} s"))?;
        parts.push(format!("KS({sigma},{lambda}) = {:.5}", rep.ks_statistic));
    }
    let mixing = ScalarDistribution::discrete_mixing(vec![1.0, 3.0], vec![0.4, 0.6]).unwrap();
    let start = Instant::now();
    let rep = verify_cl_in_cg(&mixing, 1.0, 1.0, 1_000_000, 7).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(rep.ks_statistic < 0.003, || format!("compound identity KS {}", rep.ks_statistic))?;
    ensure(secs < 10.0, || format!("compound identity took {secs:.1} s"))?;
    parts.push(format!("two-sample KS = {:.5}", rep.ks_statistic));
    Ok(parts.join(", "))
}

fn regularizer_properties() -> Outcome {
    let regs = [
        ("1 atom", Regularizer::cl_discrete(vec![1.0], vec![2.0], vec![1.0])),
        ("2 atoms", Regularizer::cl_discrete(vec![1.0, 0.7], vec![0.5, 3.0], vec![0.3, 0.7])),
        (
            "5 atoms",
            Regularizer::cl_discrete(
                vec![1.0, 2.0, 0.5],
                vec![0.1, 0.5, 1.0, 4.0, 10.0],
                vec![0.1, 0.2, 0.3, 0.25, 0.15],
            ),
        ),
    ];
    let spec = SampleSpec {
        count: 10_000,
        lo: -20.0,
        hi: 20.0,
        concavity_step: 1e-2,
    };
    let mut worst = f64::NEG_INFINITY;
    for (seed, (name, reg)) in regs.into_iter().enumerate() {
        let reg = reg.map_err(|e| e.to_string())?;
        let rep = check_properties(&reg, &spec, seed as u64).map_err(|e| e.to_string())?;
        ensure(rep.even_ok && rep.subadditive_ok && rep.concave_on_positive_ok, || {
            format!("{name}: {:?}", rep.witness)
        })?;
        worst = worst.max(rep.worst_violation);
    }
    Ok(format!("1, 2 and 5 atoms clean, largest excess over tolerance {worst:.1e}"))
}

fn quadrature_fidelity() -> Outcome {
    let bump = Regularizer::cl_quadrature(
        vec![1.0],
        Arc::new(ParametricMixing::Bump {
            center: 1.0,
            width: 1e-5,
        }),
        QuadratureConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let point = Regularizer::cl_discrete(vec![1.0], vec![1.0], vec![1.0]).unwrap();
    let l1 = Regularizer::l1_norm(1).unwrap();
    let mut worst = 0.0_f64;
    for k in 0..=200 {
        let x = -10.0 + 0.1 * k as f64;
        let q = bump.component(0, x).map_err(|e| e.to_string())?;
        let d = point.component(0, x).unwrap();
        let l = l1.component(0, x).unwrap();
        worst = worst.max((q - d).abs()).max((q - l).abs());
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation from point mass and ℓ1 {worst:.1e}"))
}

/// `min_{|S| ≤ K} Σ_{i ∉ S} R_i(x_i)` by enumerating every support.
fn tail_by_enumeration(reg: &Regularizer, x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let values: Vec<f64> = (0..n).map(|i| reg.component(i, x[i]).unwrap()).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let tail: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| values[i]).sum();
        best = best.min(tail);
    }
    best
}

fn random_regularizer(rng: &mut ChaCha8Rng, n: usize) -> Regularizer {
    let rates: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    if rng.random_bool(0.5) {
        Regularizer::l1(rates).unwrap()
    } else {
        Regularizer::cl_discrete(rates, vec![0.5, 2.0], vec![0.4, 0.6]).unwrap()
    }
}

fn sparsity_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for instance in 0..50 {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(0..=n);
        let reg = random_regularizer(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let fast = tail_value(&reg, &x, k).map_err(|e| e.to_string())?.value;
        let slow = tail_by_enumeration(&reg, &x, k);
        ensure(fast == slow, || format!("instance {instance}: tail {fast} vs enumeration {slow}"))?;
    }
    let slack = 1e-2;
    for instance in 0..20 {
        let n = rng.random_range(2..=4);
        let k = rng.random_range(0..n);
        let reg = random_regularizer(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let tail = tail_value(&reg, &x, k).unwrap().value;
        let eps = rng.random_range(0.0..=tail);
        let (lo, hi) = sigma_bracket(&reg, &x, k, eps).unwrap();
        let sigma = sigma_bruteforce(&reg, &x, k, eps, Some(1e-2)).map_err(|e| e.to_string())?;
        ensure(lo - slack <= sigma && sigma <= hi + slack, || {
            format!("instance {instance}: σ = {sigma} outside [{lo}, {hi}]")
        })?;
        ensure(tail <= sigma + eps + slack, || {
            format!("instance {instance}: tail {tail} > σ + ε = {}", sigma + eps)
        })?;
    }
    Ok("50 tails equal enumeration, 20 brute-force σ inside their brackets".into())
}

fn near_minimizers() -> Outcome {
    let problem = generate_problem(&ProblemSpec::exact(3, 6, 1, 77)).map_err(|e| e.to_string())?;
    let basis = kernel_basis(&problem.a).unwrap();
    let k = 1;
    let mut parts = Vec::new();
    for (name, reg) in [("ℓ1", Regularizer::l1_norm(6).unwrap()), ("two-atom", two_atom(6))] {
        let frontier = estimate_frontier(&problem.a, &reg, k, &[1.0], &Sampling::new(1000, 5).with_grid(201))
            .map_err(|e| e.to_string())?;
        let delta = frontier.delta_frontier[0].1;
        let oracle = bruteforce_min_r_over_gy(&problem, &reg, &OracleGrid::default()).map_err(|e| e.to_string())?;
        let slack = 2.0 * oracle.cell_modulus;
        let center = Vector::from_column_slice(&oracle.minimizer);
        let mut rng = ChaCha8Rng::seed_from_u64(78);
        let mut counterexamples = 0;
        let mut tightest = f64::INFINITY;
        for _ in 0..200 {
            let t = Vector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let x = &center + &basis * t;
            let eps = tail_value(&reg, x.as_slice(), k).unwrap().value;
            let margin = oracle.min_value + 2.0 * eps + delta + slack - reg.eval(x.as_slice()).unwrap();
            tightest = tightest.min(margin);
            if margin < 0.0 {
                counterexamples += 1;
            }
        }
        ensure(counterexamples == 0, || format!("{name}: {counterexamples} counterexamples"))?;
        parts.push(format!("{name}: δ̂ = {delta:.3e}, slack {slack:.3}, tightest margin {tightest:.3}"));
    }
    Ok(format!("200/200 near minimizers for each; {}", parts.join("; ")))
}

fn falsifier_soundness() -> Outcome {
    let l1 = Regularizer::l1_norm(2).unwrap();
    let a = Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
    let query = NspQuery {
        k: 1,
        gamma: 1.0,
        delta: 0.1,
    };
    let rep = check_nsp(&a, &l1, &query, &Sampling::new(1000, 8).with_radii(vec![0.01, 0.1, 1.0, 10.0]))
        .map_err(|e| e.to_string())?;
    ensure(!rep.holds_on_samples, || "no violation found on A = [1 2]".into())?;
    let w = rep.witness.clone().ok_or("violation without a witness")?;
    let s = rep.witness_support.clone().ok_or("violation without a support")?;
    // fresh arithmetic on the explicit restrictions
    let head: f64 = s.iter().map(|&i| w[i].abs()).sum();
    let tail: f64 = (0..2).filter(|i| !s.contains(i)).map(|i| w[i].abs()).sum();
    let recheck = head - query.gamma * tail - query.delta;
    ensure(recheck > 0.0, || format!("witness {w:?} does not reproduce the violation"))?;
    ensure((w[0] + 2.0 * w[1]).abs() < 1e-9, || format!("witness {w:?} is not in the kernel"))?;

    let rep = check_nsp(
        &Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
        &l1,
        &NspQuery {
            k: 1,
            gamma: 1.0,
            delta: 0.0,
        },
        &Sampling::new(10_000, 9),
    )
    .map_err(|e| e.to_string())?;
    ensure(rep.holds_on_samples, || format!("spurious violation on A = [1 1]: {:?}", rep.witness))?;
    Ok(format!(
        "witness deficit {recheck:.3} re-verified; A = [1 1] clean over {} samples",
        rep.samples_used
    ))
}

fn error_bound_consistency() -> Outcome {
    let (m, n, k, kappa, gamma) = (6, 8, 6, 1, 0.05);
    let mut checked = 0;
    for (name, reg) in [("ℓ1", Regularizer::l1_norm(n).unwrap()), ("two-atom", two_atom(n))] {
        for seed in 0..5 {
            let problem =
                generate_problem_with(&ProblemSpec::exact(m, n, kappa, 900 + seed), &reg).map_err(|e| e.to_string())?;
            let frontier = estimate_frontier(&problem.a, &reg, k, &[gamma], &Sampling::new(1000, seed).with_grid(201))
                .map_err(|e| e.to_string())?;
            let delta = frontier.delta_frontier[0].1;
            let result = solve_recorded(
                format!("bound {name} seed {seed}"),
                &problem,
                &reg,
                &GirlsConfig::new(k, 1e-9, 1000),
            );
            let check = theorem2_bound_check(result.eps_final, gamma, delta, k, kappa).map_err(|e| e.to_string())?;
            ensure(check.applicable, || format!("{name} seed {seed}: bound not applicable"))?;
            ensure(check.satisfied, || {
                format!("{name} seed {seed}: ε = {} exceeds bound {}", result.eps_final, check.bound)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} grid-certified runs within the bound"))
}

fn weight_consistency() -> Outcome {
    let gamma = Regularizer::cl_quadrature(
        vec![1.0],
        Arc::new(ParametricMixing::Gamma { shape: 2.0, scale: 1.0 }),
        QuadratureConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let regs = [("ℓ1", Regularizer::l1_norm(1).unwrap()), ("two-atom", two_atom(1)), ("gamma mixing", gamma)];
    let mut worst = 0.0_f64;
    for (name, reg) in &regs {
        let f = reconstruct_f(reg, 0).map_err(|e| format!("{name}: {e}"))?;
        for t in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let w = reg.weight(0, t).unwrap();
            let d = f.derivative(w).map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max((d + t).abs());
            ensure((d + t).abs() <= 1e-6, || format!("{name}, t = {t}: f'(w) = {d}"))?;
        }
    }
    for eps in [0.1, 1.0] {
        let rep = check_convexity_h(&regs[0].1, 0, eps, &ConvexityGrid::symmetric(5.0, 0.01)).map_err(|e| e.to_string())?;
        ensure(rep.is_strictly_convex, || format!("h not strictly convex at ε = {eps}: {rep:?}"))?;
    }
    Ok(format!("max |f'(w(t)) + t| = {worst:.1e}; h strictly convex at ε = 0.1 and 1"))
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        r#"{"grid": {"m": [10, 15], "n": [30], "K_true": [2, 3]}, "trials": 5,
            "solver": {"K": 9, "eps_bar": 1e-9, "max_iter": 500},
            "regularizer": {"kind": "l1", "lambda": [1.0]}, "base_seed": 31}"#,
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_gsparse"))
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .env_remove("GSPARSE_SEED")
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("sweep exited with {status}"))?;
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], || "CSV outputs differ".into())?;
    let rows = outputs[0].iter().filter(|b| **b == b'\n').count() - 1;
    ensure(rows == 20, || format!("expected 20 rows, found {rows}"))?;
    Ok(format!("two runs byte-identical ({} bytes, {rows} rows)", outputs[0].len()))
}

fn run(criterion: fn() -> Outcome) -> (Outcome, f64) {
    let start = Instant::now();
    let outcome = match panic::catch_unwind(AssertUnwindSafe(criterion)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    (outcome, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "classic IRLS reduction and recovery", classic_irls_recovery),
        (3, "Rayleigh-Gaussian Laplace identity", laplace_monte_carlo),
        (4, "regularizer structure", regularizer_properties),
        (5, "quadrature against point mass", quadrature_fidelity),
        (6, "sparsity oracles", sparsity_oracles),
        (7, "near minimizers under the null space property", near_minimizers),
        (8, "falsifier soundness", falsifier_soundness),
        (9, "smoothing error bound", error_bound_consistency),
        (10, "weight and auxiliary function consistency", weight_consistency),
        (11, "sweep determinism", sweep_determinism),
        // depends on the solver runs recorded by the criteria above
        (2, "solver invariants on every run", algorithm_invariants),
    ];
    let mut lines = Vec::new();
    for (id, name, f) in criteria {
        let (outcome, secs) = run(f);
        lines.push((id, name, outcome, secs));
    }
    lines.sort_by_key(|l| l.0);
    let mut failed = 0;
    for (id, name, outcome, secs) in &lines {
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS [{secs:6.1} s] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL [{secs:6.1} s] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
