use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cigraph::admm::{solve, PrecisionState, SolverConfig, SolverReport};
use cigraph::bench::{run_all, summarize, BenchConfig, Method, Tuning};
use cigraph::select::{select_edges, tune_run, GridPoint, TuneConfig};
use cigraph::spectral::{estimate_psd, window_for_count};
use cigraph::var::{generate_model, simulate, true_edges, BURN_IN, EDGE_THRESHOLD, GENERATOR};
use serde_json::json;

use crate::error::{code, CliError, CliResult};
use crate::io::{read_series, Artifact, Bundle, InputRecord, RunManifest};

#[derive(Debug, Clone, Copy)]
pub struct SolverFlags {
    pub rho0: f64,
    pub mu: f64,
    pub tau_abs: f64,
    pub tau_rel: f64,
    pub max_iter: usize,
}

impl SolverFlags {
    fn config(&self, lambda: f64, alpha: f64) -> SolverConfig {
        SolverConfig {
            lambda,
            alpha,
            rho0: self.rho0,
            mu: self.mu,
            tau_abs: self.tau_abs,
            tau_rel: self.tau_rel,
            max_iter: self.max_iter,
        }
    }
}

pub enum Window {
    K(usize),
    M(usize),
}

pub enum Penalty {
    Fixed { lambda: f64, alpha: f64 },
    Bic,
}

pub struct EstimateArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub window: Window,
    pub penalty: Penalty,
    pub has_header: bool,
    pub strict: bool,
    pub solver: SolverFlags,
}

/// Resolves `K` against the usable half-spectrum of an `n`-sample series.
fn resolve_window(window: &Window, n: usize) -> CliResult<(usize, usize)> {
    let n_even = n - n % 2;
    let usable = (n_even / 2).saturating_sub(1);
    match *window {
        Window::K(k) => {
            if k % 2 == 0 || k < 3 {
                return Err(CliError::usage(format!(
                    "--K must be an odd integer ≥ 3, got {k}"
                )));
            }
            if k > usable {
                return Err(CliError::new(
                    code::INCOMPATIBLE_WINDOW,
                    format!("--K {k} does not fit n = {n}: need K ≤ n/2 − 1 = {usable}"),
                ));
            }
            Ok((k, usable / k))
        }
        Window::M(m) => {
            let k = window_for_count(n_even, m).map_err(|e| {
                CliError::new(
                    code::INCOMPATIBLE_WINDOW,
                    format!("--M {m} at n = {n}: {e}"),
                )
            })?;
            Ok((k, m))
        }
    }
}

fn adjacency_csv(adj: &[Vec<f64>]) -> String {
    let mut s = String::new();
    for row in adj {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn bic_table_csv(rows: &[GridPoint]) -> String {
    let mut s = String::from("lambda,alpha,bic,edges,converged,iterations\n");
    for g in rows {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{},{},{}",
            g.lambda,
            g.alpha,
            g.bic,
            g.edges.len(),
            g.converged,
            g.iterations
        );
    }
    s
}

pub fn estimate(args: &EstimateArgs) -> CliResult<String> {
    let start = Instant::now();
    let (x, input_hash) = read_series(&args.input, args.has_header)?;
    x.validate_for_estimation()
        .map_err(|e| CliError::format(format!("{}: {e}", args.input.display())))?;
    let (window, m) = resolve_window(&args.window, x.n())?;
    let s = estimate_psd(&x, window)?;
    let psd_seconds = start.elapsed().as_secs_f64();

    let solve_start = Instant::now();
    let (lambda, alpha, state, report, table): (
        f64,
        f64,
        PrecisionState,
        SolverReport,
        Option<Vec<GridPoint>>,
    ) = match args.penalty {
        Penalty::Fixed { lambda, alpha } => {
            let (state, report) = solve(&s, &args.solver.config(lambda, alpha))?;
            (lambda, alpha, state, report, None)
        }
        Penalty::Bic => {
            let cfg = TuneConfig {
                solver: args.solver.config(0.0, 0.1),
                ..TuneConfig::default()
            };
            let run = tune_run(&s, &cfg)?;
            let sel = &run.selection;
            let fit = run
                .lambda_fits
                .iter()
                .chain(&run.alpha_fits)
                .find(|f| f.point.lambda == sel.lambda && f.point.alpha == sel.alpha)
                .expect("selected point was solved");
            (
                sel.lambda,
                sel.alpha,
                fit.state.clone(),
                fit.report,
                Some(sel.bic_table.clone()),
            )
        }
    };
    let solve_seconds = solve_start.elapsed().as_secs_f64();
    if !report.converged {
        let msg = format!(
            "solver stopped after {} iterations without meeting tolerances (primal {:.3e} > {:.3e} or dual {:.3e} > {:.3e})",
            report.iterations, report.primal_residual, report.tau_pri, report.dual_residual, report.tau_dual
        );
        if args.strict {
            return Err(CliError::new(code::NOT_CONVERGED, msg));
        }
        eprintln!("warning: {msg}");
    }

    let graph = select_edges(&state.w);
    let mut manifest = RunManifest::new(
        "estimate",
        json!({
            "n": x.n(),
            "p": x.p(),
            "K": window,
            "M": m,
            "lambda": lambda,
            "alpha": alpha,
            "tuning": if table.is_some() { "bic" } else { "fixed" },
            "rho0": args.solver.rho0,
            "mu": args.solver.mu,
            "tau_abs": args.solver.tau_abs,
            "tau_rel": args.solver.tau_rel,
            "max_iter": args.solver.max_iter,
            "header": args.has_header,
            "frequencies": s.grid.frequencies(),
        }),
    );
    manifest.inputs.push(InputRecord {
        path: args.input.display().to_string(),
        sha256: input_hash,
    });
    manifest.timings = Some(BTreeMap::from([
        ("psd_seconds".to_string(), psd_seconds),
        ("solve_seconds".to_string(), solve_seconds),
    ]));

    let mut bundle = Bundle::new(&args.out, manifest.clone());
    let edges: Vec<_> = graph
        .edges
        .iter()
        .zip(&graph.weights)
        .map(|(&(i, j), &w)| json!({ "i": i, "j": j, "weight": w }))
        .collect();
    bundle.add(
        "edges.json",
        Artifact::Json(json!({ "p": graph.p, "edges": edges, "manifest": manifest })),
    );
    bundle.add(
        "adjacency.csv",
        Artifact::Csv(adjacency_csv(&graph.weighted_adjacency)),
    );
    if let Some(rows) = &table {
        bundle.add("bic_table.csv", Artifact::Csv(bic_table_csv(rows)));
    }
    bundle.add(
        "report.json",
        Artifact::Json(json!({
            "converged": report.converged,
            "iterations": report.iterations,
            "primal_residual": report.primal_residual,
            "dual_residual": report.dual_residual,
            "tau_pri": report.tau_pri,
            "tau_dual": report.tau_dual,
            "objective": report.objective,
            "final_rho": report.final_rho,
            "lambda": lambda,
            "alpha": alpha,
            "K": window,
            "M": m,
            "edge_count": graph.edges.len(),
        })),
    );
    bundle.write()
}

pub struct SimulateArgs {
    pub seed: u64,
    pub communities: usize,
    pub community_size: usize,
    pub n: usize,
    pub out: PathBuf,
}

pub fn simulate_cmd(args: &SimulateArgs) -> CliResult<String> {
    if args.n <= BURN_IN {
        return Err(CliError::usage(format!(
            "--n must exceed the {BURN_IN}-sample burn-in, got {}",
            args.n
        )));
    }
    if args.communities == 0 || args.community_size == 0 {
        return Err(CliError::usage(
            "--communities and --community-size must be positive",
        ));
    }
    let model = generate_model(args.seed, args.communities, args.community_size)?;
    let retained = args.n - BURN_IN;
    let x = simulate(&model, retained, args.seed)?;
    let truth = true_edges(&model)?;

    let mut csv = (0..x.p())
        .map(|j| format!("x{j}"))
        .collect::<Vec<_>>()
        .join(",");
    csv.push('\n');
    for t in 0..x.n() {
        let cells: Vec<String> = x.row(t).iter().map(|v| format!("{v:?}")).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }

    let manifest = RunManifest::new(
        "simulate",
        json!({
            "seed": args.seed,
            "communities": args.communities,
            "community_size": args.community_size,
            "p": model.p,
            "n_total": args.n,
            "burn_in": BURN_IN,
            "n_retained": retained,
            "generator": GENERATOR,
        }),
    );
    let mut bundle = Bundle::new(&args.out, manifest);
    bundle.add("series.csv", Artifact::Csv(csv));
    bundle.add(
        "model.json",
        Artifact::Json(serde_json::to_value(&model).expect("model serializes")),
    );
    bundle.add(
        "truth_edges.json",
        Artifact::Json(json!({
            "p": truth.p,
            "edges": truth.edges,
            "density": truth.density(),
            "edge_threshold": EDGE_THRESHOLD,
            "frequencies": truth.frequencies,
        })),
    );
    bundle.write()
}

pub struct BenchmarkArgs {
    pub runs: usize,
    pub n_list: Vec<usize>,
    pub m: usize,
    pub methods: Vec<Method>,
    pub tunings: Vec<Tuning>,
    pub seed: u64,
    pub communities: usize,
    pub community_size: usize,
    pub out: Option<PathBuf>,
    pub runs_out: Option<PathBuf>,
    pub solver: SolverFlags,
}

pub fn benchmark(args: &BenchmarkArgs) -> CliResult<()> {
    for &n in &args.n_list {
        window_for_count(n, args.m).map_err(|e| {
            CliError::new(
                code::INCOMPATIBLE_WINDOW,
                format!("n = {n}, --M {}: {e}", args.m),
            )
        })?;
    }
    let cfg = BenchConfig {
        communities: args.communities,
        community_size: args.community_size,
        n_list: args.n_list.clone(),
        m: args.m,
        runs: args.runs,
        seed: args.seed,
        methods: args.methods.clone(),
        tunings: args.tunings.clone(),
        tune: TuneConfig {
            solver: args.solver.config(0.0, 0.1),
            ..TuneConfig::default()
        },
        ..BenchConfig::default()
    };
    let start = Instant::now();
    let rows = run_all(&cfg)?;
    let summary = summarize(&rows);

    let mut table = String::from("method,tuning,n,runs,f1_mean,f1_std,seconds_mean\n");
    for s in &summary {
        let _ = writeln!(
            table,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            s.method, s.tuning, s.n, s.runs, s.f1_mean, s.f1_std, s.seconds_mean
        );
    }
    let mut per_run =
        String::from("method,tuning,n,run,f1,lambda,alpha,edges,true_edges,seconds\n");
    for r in &rows {
        let _ = writeln!(
            per_run,
            "{},{},{},{},{:.6},{:.16e},{},{},{},{:.6}",
            r.method,
            r.tuning,
            r.n,
            r.run,
            r.f1,
            r.lambda,
            r.alpha,
            r.edges,
            r.true_edges,
            r.seconds
        );
    }

    let mut manifest = RunManifest::new(
        "benchmark",
        json!({
            "runs": args.runs,
            "n_list": args.n_list,
            "M": args.m,
            "K": args.n_list.iter().map(|&n| window_for_count(n, args.m).expect("checked above")).collect::<Vec<_>>(),
            "methods": args.methods,
            "tunings": args.tunings,
            "seed": args.seed,
            "communities": args.communities,
            "community_size": args.community_size,
            "rho0": args.solver.rho0,
            "mu": args.solver.mu,
            "tau_abs": args.solver.tau_abs,
            "tau_rel": args.solver.tau_rel,
            "max_iter": args.solver.max_iter,
            "generator": GENERATOR,
        }),
    );
    manifest
        .artifacts
        .insert("summary".into(), crate::io::sha256_hex(table.as_bytes()));
    manifest
        .artifacts
        .insert("runs".into(), crate::io::sha256_hex(per_run.as_bytes()));
    manifest.timings = Some(BTreeMap::from([(
        "total_seconds".to_string(),
        start.elapsed().as_secs_f64(),
    )]));
    let hash = manifest.hash();

    let stamp = |body: &str| format!("# manifest_sha256={hash}\n{body}");
    crate::io::write_stdout_or_file(args.out.as_deref(), &stamp(&table))?;
    if let Some(path) = &args.runs_out {
        crate::io::write_stdout_or_file(Some(path), &stamp(&per_run))?;
    }
    if let Some(path) = args.out.as_ref().or(args.runs_out.as_ref()) {
        let manifest_path = path.with_extension("manifest.json");
        std::fs::write(&manifest_path, manifest.to_json())
            .map_err(|e| CliError::io(&manifest_path, e))?;
    }
    Ok(())
}

pub fn print_done(command: &str, out: &Path, hash: &str) {
    eprintln!(
        "{command}: wrote {} (manifest {})",
        out.display(),
        &hash[..12]
    );
}
