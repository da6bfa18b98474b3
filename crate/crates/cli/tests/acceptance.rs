//! Acceptance suite: one pass/fail line per criterion.
//!
//! `cargo test -p sgmc-cli --test acceptance` runs everything; append
//! criterion numbers after `--` to run a subset, e.g. `-- 1 5 8`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use sgmc_core::alm::{self, init_state, step, MU_CEILING};
use sgmc_core::benchlab::{run_trial, sweep, trial_seed, LambdaPolicy, ScanAxis, XAxis, DEFAULT_SUCCESS_TOL};
use sgmc_core::masking::project;
use sgmc_core::numkit::{elementwise_norm, hamming_weight, inner_product, nuclear_norm, operator_norms, shrink, svd};
use sgmc_core::sgmca;
use sgmc_core::synthgen::generate;
use sgmc_core::{
    AlmConfig, CurveTable, DenseMatrix, ErrorModel, GreedyConfig, InstanceSpec, ObservationMask, PhaseValue, Solver,
    SweepSpec, TrialSpec,
};

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, rel: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= rel * want.abs().max(f64::MIN_POSITIVE), || {
        format!("{what}: got {got:e}, want {want:e}")
    })
}

fn gaussian(n: usize, rank: usize, density: f64, error_rate: f64, seed: u64) -> InstanceSpec {
    InstanceSpec {
        n,
        rank,
        density,
        error_rate,
        error_model: ErrorModel::AdditiveGaussian,
        additive: true,
        seed,
    }
}

fn seeded(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    use rand::SeedableRng;
    use rand_distr::Distribution;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rand_distr::StandardNormal.sample(&mut rng)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

fn operators() -> Check {
    let e = |r: sgmc_core::Result<f64>| r.map_err(|e| e.to_string());
    close(shrink(&3.0, 1.0).unwrap(), 2.0, 1e-12, "shrink(3, 1)")?;
    ensure(shrink(&-0.2, 0.5).unwrap() == 0.0, || "shrink(-0.2, 0.5) != 0".into())?;
    let m = DenseMatrix::from_rows(&[[-5.0, 0.5], [2.0, -1.0]]);
    ensure(shrink(&m, 2.0).unwrap() == DenseMatrix::from_rows(&[[-3.0, 0.0], [0.0, 0.0]]), || {
        "matrix shrink".into()
    })?;
    ensure(shrink(&1.0, -1.0).is_err(), || "negative epsilon accepted".into())?;

    close(e(elementwise_norm(&DenseMatrix::from_rows(&[[3.0, 4.0]]), 2.0))?, 5.0, 1e-12, "|[3 4]|_2")?;
    close(e(elementwise_norm(&DenseMatrix::from_rows(&[[1.0, -1.0], [1.0, -1.0]]), 1.0))?, 4.0, 1e-12, "|.|_1")?;
    close(e(elementwise_norm(&seeded(6, 6, 66), 0.5))?, 9.45803062504565105e2, 1e-12, "|6x6|_0.5")?;

    ensure(hamming_weight(&DenseMatrix::zeros(3, 3), 0.0).unwrap() == 0, || "hamming(0)".into())?;
    ensure(hamming_weight(&DenseMatrix::identity(3), 0.0).unwrap() == 3, || "hamming(I3)".into())?;
    let inst = generate(&gaussian(32, 2, 0.45, 17.0 / 461.0, 17)).map_err(|e| e.to_string())?;
    let errors = inst.observed.values().sub(&project(&inst.truth, inst.observed.mask()).unwrap()).unwrap();
    ensure(hamming_weight(&errors, 1e-12).unwrap() == 17, || "planted hamming weight".into())?;

    let sigma = svd(&DenseMatrix::identity(3)).unwrap().singular_values;
    ensure(sigma.iter().all(|&s| (s - 1.0).abs() <= 1e-8), || format!("svd(I3) = {sigma:?}"))?;
    let d = svd(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
    close(d.singular_values[0], 3.0, 1e-8, "svd diag σ1")?;
    close(d.singular_values[1], 1.0, 1e-8, "svd diag σ2")?;
    let oracle5x4 = [3.5925928882442877, 2.5713433885344448, 0.9226230354646001, 0.030118723494765832];
    for (k, (&got, want)) in svd(&seeded(5, 4, 54)).unwrap().singular_values.iter().zip(oracle5x4).enumerate() {
        close(got, want, 1e-8, &format!("σ{k} of seeded 5x4"))?;
    }

    close(e(nuclear_norm(&DenseMatrix::identity(3)))?, 3.0, 1e-8, "|I3|_*")?;
    let (u, v) = ([1.0, 2.0, 2.0], [3.0, 4.0]);
    let outer = DenseMatrix::from_fn(3, 2, |i, j| u[i] * v[j]).unwrap();
    close(e(nuclear_norm(&outer))?, 15.0, 1e-8, "|uv^T|_*")?;
    close(e(nuclear_norm(&seeded(8, 8, 88)))?, 1.57903895232206981e1, 1e-8, "|8x8|_*")?;

    let n3 = operator_norms(&DenseMatrix::identity(3)).unwrap();
    ensure((n3.spectral - 1.0).abs() <= 1e-8 && n3.op_inf == 1.0, || format!("norms(I3) = {n3:?}"))?;
    let t = operator_norms(&DenseMatrix::from_rows(&[[1.0, -2.0], [0.0, 3.0]])).unwrap();
    close(t.spectral, (7.0 + 2.0 * 10f64.sqrt()).sqrt(), 1e-8, "spectral [[1,-2],[0,3]]")?;
    close(t.op_inf, 3.0, 1e-12, "op_inf [[1,-2],[0,3]]")?;
    let dn = operator_norms(&DenseMatrix::from_diag(&[5.0, 2.0])).unwrap();
    close(dn.spectral, 5.0, 1e-8, "spectral diag(5,2)")?;
    close(dn.op_inf, 5.0, 1e-12, "op_inf diag(5,2)")?;

    let i2 = DenseMatrix::identity(2);
    close(e(inner_product(&i2, &i2))?, 2.0, 1e-12, "<I2, I2>")?;
    ensure(inner_product(&i2, &DenseMatrix::zeros(2, 2)).unwrap() == 0.0, || "<a, 0>".into())?;
    close(e(inner_product(&seeded(5, 5, 551), &seeded(5, 5, 552)))?, 3.67483770249323571, 1e-12, "<A, B>")?;
    let a = seeded(7, 3, 5);
    close(e(inner_product(&a, &a))?, a.frobenius_norm().powi(2), 1e-12, "<A, A>")?;
    Ok("shrink, |.|_p, |.|_0, svd, |.|_*, operator norms and <.,.> match".into())
}

fn clean_completion() -> Check {
    let (n, rank, density) = (100, 2, 0.9);
    let greedy = GreedyConfig::with_inner(AlmConfig::with_lambda(1.0 / (n as f64).sqrt()));
    let mut worst: (f64, usize) = (0.0, 0);
    for t in 0..10 {
        let r = run_trial(&TrialSpec {
            instance: gaussian(n, rank, density, 0.0, trial_seed(2, n, rank, density, t)),
            solver: Solver::AlmOnly,
            greedy: greedy.clone(),
            success_tol: DEFAULT_SUCCESS_TOL,
        })
        .map_err(|e| e.to_string())?;
        ensure(r.success, || format!("trial {t}: rel error {:e}", r.rel_error))?;
        ensure(r.total_svds <= 300, || format!("trial {t}: {} SVDs", r.total_svds))?;
        worst = (worst.0.max(r.rel_error), worst.1.max(r.total_svds));
    }
    Ok(format!("10/10 ALM successes, worst rel error {:.1e}, max {} SVDs", worst.0, worst.1))
}

fn robust_completion() -> Check {
    let (n, rank, density) = (100, 2, 0.9);
    let greedy = GreedyConfig::with_inner(AlmConfig::with_lambda(1.0 / (n as f64).sqrt()));
    let mut worst: f64 = 0.0;
    for t in 0..10 {
        let r = run_trial(&TrialSpec {
            instance: gaussian(n, rank, density, 0.05, trial_seed(3, n, rank, density, t)),
            solver: Solver::Sgmca,
            greedy: greedy.clone(),
            success_tol: DEFAULT_SUCCESS_TOL,
        })
        .map_err(|e| e.to_string())?;
        ensure(r.success, || format!("trial {t}: rel error {:e} ({:?})", r.rel_error, r.failure))?;
        worst = worst.max(r.rel_error);
    }
    Ok(format!("10/10 SGMCA successes, worst rel error {worst:.1e}"))
}

fn curve_text(table: &CurveTable, solver: Solver) -> String {
    let ys: Vec<String> = table.curve(solver).iter().map(|(_, y)| y.to_string()).collect();
    format!("{solver} [{}]", ys.join(", "))
}

fn rank_of(y: PhaseValue) -> f64 {
    y.value().unwrap_or(f64::NEG_INFINITY)
}

fn dominance() -> Check {
    let spec = SweepSpec {
        rank: 15,
        sizes: vec![128],
        x_axis: XAxis::Density,
        densities: vec![0.5, 0.6, 0.7, 0.8, 0.9],
        scan: ScanAxis::ErrorRate,
        grid: (0..=12).map(|k| k as f64 * 0.025).collect(),
        error_rate: 0.0,
        error_model: ErrorModel::AdditiveGaussian,
        additive: true,
        trials_per_point: 10,
        solvers: vec![Solver::AlmOnly, Solver::Sgmca],
        seed_base: 4,
        success_tol: DEFAULT_SUCCESS_TOL,
        lambda: LambdaPolicy::Fixed(0.2),
        greedy: GreedyConfig::default(),
    };
    let table = sweep(&spec).map_err(|e| e.to_string())?;
    let (alm, greedy) = (table.curve(Solver::AlmOnly), table.curve(Solver::Sgmca));
    let summary = format!("{}; {}", curve_text(&table, Solver::AlmOnly), curve_text(&table, Solver::Sgmca));
    let mut strict = 0;
    for ((x, ya), (_, yg)) in alm.iter().zip(&greedy) {
        ensure(rank_of(*yg) >= rank_of(*ya), || format!("density {x}: sgmca {yg} < alm {ya}; {summary}"))?;
        strict += usize::from(rank_of(*yg) > rank_of(*ya));
    }
    ensure(strict >= 1, || format!("no density where sgmca is strictly better; {summary}"))?;
    Ok(format!("strictly better at {strict}/5 densities; {summary}"))
}

fn equivalence() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let inst = generate(&gaussian(60, 3, 0.7, 0.1, 5000 + seed)).map_err(|e| e.to_string())?;
        let cfg = GreedyConfig {
            max_outer: 1,
            ..GreedyConfig::with_inner(AlmConfig::with_lambda(1.0 / 60f64.sqrt()))
        };
        let plain = alm::solve(&inst.observed, &cfg.inner).map_err(|e| e.to_string())?;
        let one = sgmca::solve(&inst.observed, &cfg).map_err(|e| e.to_string())?;
        let gap = one.a.sub(&plain.a).unwrap().max_abs() / plain.a.max_abs();
        ensure(gap <= 1e-12, || format!("seed {seed}: relative gap {gap:e}"))?;
        worst = worst.max(gap);
    }
    Ok(format!("5 instances, max relative gap {worst:e}"))
}

fn monotonicity() -> Check {
    let mut outer_total = 0;
    let mut alm_steps = 0;
    for seed in 0..20u64 {
        let density = 0.6 + 0.1 * (seed % 4) as f64;
        let error_rate = 0.05 + 0.05 * (seed % 3) as f64;
        let inst = generate(&gaussian(40, 2, density, error_rate, 6000 + seed)).map_err(|e| e.to_string())?;
        let cfg = GreedyConfig::with_inner(AlmConfig::with_lambda(1.0 / 40f64.sqrt()));

        let mut chain: Vec<(ObservationMask, f64)> = Vec::new();
        let mut problem = None;
        let result = sgmca::solve_observed(&inst.observed, &cfg, |s| {
            if let Some((prev, _)) = chain.last() {
                if !s.omega_k.is_subset_of(prev) && problem.is_none() {
                    problem = Some(format!("seed {seed}: Ω_{} is not inside Ω_{}", s.outer_k - 1, s.outer_k - 2));
                }
            }
            chain.push((s.omega_k.clone(), s.t_k));
        });
        if let Some(p) = problem {
            return Err(p);
        }
        if let Err(e) = result {
            ensure(e.is_numeric(), || format!("seed {seed}: {e}"))?;
        }
        ensure(chain[0].0 == *inst.observed.mask(), || format!("seed {seed}: Ω_0 is not the input mask"))?;
        let t1 = chain[0].1;
        for (k, (_, t)) in chain.iter().enumerate() {
            close(*t / t1, cfg.decay.powi(k as i32), 1e-12, &format!("seed {seed}: T_{}/T_1", k + 1))?;
        }
        outer_total += chain.len();

        // Inner schedule and multiplier support, one step at a time.
        let acfg = &cfg.inner;
        let m = &inst.observed;
        let mut state = init_state(m, acfg).map_err(|e| e.to_string())?;
        let mu0 = state.mu;
        let rho = acfg.rho(m.mask().density());
        let off: Vec<(usize, usize)> = m.mask().complement().entries().to_vec();
        while !state.converged && state.k < acfg.max_iter {
            state = step(state, m, acfg).map_err(|e| e.to_string())?;
            let want = (mu0 * rho.powi(state.k as i32)).min(MU_CEILING);
            close(state.mu, want, 1e-12, &format!("seed {seed}: μ_{}", state.k))?;
            ensure(off.iter().all(|&idx| state.y[idx] == 0.0), || {
                format!("seed {seed}: Y non-zero off Ω at iteration {}", state.k)
            })?;
            alm_steps += 1;
        }
    }
    Ok(format!("20 instances: {outer_total} outer iterations, {alm_steps} ALM steps checked"))
}

fn size_trend() -> Check {
    let spec = SweepSpec {
        rank: 2,
        sizes: vec![100, 200, 400],
        x_axis: XAxis::N,
        densities: vec![],
        scan: ScanAxis::ErasureRate,
        grid: vec![0.2, 0.35, 0.45, 0.55, 0.65, 0.75],
        error_rate: 0.1,
        error_model: ErrorModel::AdditiveGaussian,
        additive: true,
        trials_per_point: 10,
        solvers: vec![Solver::AlmOnly, Solver::Sgmca],
        seed_base: 7,
        success_tol: DEFAULT_SUCCESS_TOL,
        lambda: LambdaPolicy::default(),
        greedy: GreedyConfig::default(),
    };
    let table = sweep(&spec).map_err(|e| e.to_string())?;
    let summary = format!("{}; {}", curve_text(&table, Solver::AlmOnly), curve_text(&table, Solver::Sgmca));
    for solver in [Solver::AlmOnly, Solver::Sgmca] {
        let curve = table.curve(solver);
        for w in curve.windows(2) {
            ensure(rank_of(w[1].1) >= rank_of(w[0].1), || {
                format!("{solver}: n={} gives {} after n={} gave {}; {summary}", w[1].0, w[1].1, w[0].0, w[0].1)
            })?;
        }
    }
    Ok(format!("non-decreasing in n = 100, 200, 400; {summary}"))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sgmc"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("sgmc {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = dir.path();
    std::fs::write(
        p.join("sweep.toml"),
        "rank = 2\nsizes = [30]\nx_axis = \"density\"\ndensities = [0.8, 1.0]\nscan = \"error_rate\"\n\
         grid = [0.0, 0.05, 0.1]\ntrials_per_point = 3\nsolvers = [\"alm\", \"sgmca\"]\nseed_base = 8\n",
    )
    .map_err(|e| e.to_string())?;
    for run in ["1", "2"] {
        let f = |stem: &str, ext: &str| format!("{stem}{run}.{ext}");
        let (gauss, unif) = (f("gauss", "inst"), f("unif", "inst"));
        run_cli(p, &["generate", "--n", "40", "--rank", "2", "--density", "0.7", "--error-rate", "0.1", "--seed", "42", "--out", &gauss])?;
        run_cli(p, &["generate", "--n", "40", "--rank", "2", "--density", "0.7", "--error-rate", "0.1", "--model", "uniform", "--seed", "42", "--out", &unif])?;
        run_cli(p, &["solve", "--in", &gauss, "--solver", "sgmca", "--report", &f("report", "json"), "--dump", &f("est", "csv")])?;
        run_cli(p, &["sweep", "--config", "sweep.toml", "--out-csv", &f("sweep", "csv"), "--out-plot", &f("sweep", "svg")])?;
        run_cli(p, &["compare", "--config", "sweep.toml", "--out-csv", &f("compare", "csv")])?;
    }
    let artifacts = ["gauss.inst", "unif.inst", "report.json", "est.csv", "sweep.csv", "sweep.svg", "compare.csv"];
    for name in artifacts {
        let (stem, ext) = name.split_once('.').unwrap();
        let a = std::fs::read(p.join(format!("{stem}1.{ext}"))).map_err(|e| e.to_string())?;
        let b = std::fs::read(p.join(format!("{stem}2.{ext}"))).map_err(|e| e.to_string())?;
        ensure(!a.is_empty() && a == b, || format!("{name} differs between runs"))?;
    }
    Ok(format!("{} artifacts byte-identical across two runs", artifacts.len()))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "operator correctness", budget: Duration::from_secs(1), run: operators },
        Criterion { id: 2, name: "clean completion", budget: Duration::from_secs(30), run: clean_completion },
        Criterion { id: 3, name: "robust completion", budget: Duration::from_secs(120), run: robust_completion },
        Criterion { id: 4, name: "dominance at n=128, r=15", budget: Duration::from_secs(30 * 60), run: dominance },
        Criterion { id: 5, name: "max_outer=1 equals ALM", budget: Duration::from_secs(60), run: equivalence },
        Criterion { id: 6, name: "monotonicity suite", budget: Duration::from_secs(5 * 60), run: monotonicity },
        Criterion { id: 7, name: "size trend of admissible erasures", budget: Duration::from_secs(45 * 60), run: size_trend },
        Criterion { id: 8, name: "CLI determinism", budget: Duration::from_secs(5 * 60), run: determinism },
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => {
                Err(format!("over budget ({:.1} s > {} s); {detail}", elapsed.as_secs_f64(), c.budget.as_secs()))
            }
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {}. {} ({:.2} s): {detail}", c.id, c.name, elapsed.as_secs_f64());
        failed += usize::from(outcome.is_err());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
