//! Executors behind the subcommands: resolve inputs, call the library, write
//! the documented CSV outputs plus a JSON run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde_json::json;

use graphon_walks::config::GraphonConfig;
use graphon_walks::convergence::{
    run_study, ExperimentMode, ExperimentSpec, ExternalProblem, InitialCondition,
};
use graphon_walks::discretize::{
    quotient_graph, StepFunction, WeightedGraph, DEFAULT_CELL_SAMPLES,
};
use graphon_walks::solver::{
    build_kernel_matrix, kernel_spectrum, solve_ivp_exponential, solve_ivp_spectral,
    spectral_decomposition_of, GridField, IVPSolution, SolveMethod, ZERO_GAP_TOLERANCE,
    ZERO_MODE_TOLERANCE,
};
use graphon_walks::walks::{
    discrete_occupancy_histogram, discrete_walk, gillespie_walk, histogram_csv,
    occupancy_histogram, WalkMode,
};
use graphon_walks::{degree_function, Error, Graphon, Result};

use crate::manifest::Manifest;
use crate::svg::LineChart;
use crate::{
    CommonArgs, ConvergeArgs, DegreeArgs, LemmaCheckArgs, RunArgs, SolveArgs, SpectrumArgs,
    WalkArgs,
};

fn resolve_graphon(common: &CommonArgs) -> Result<(GraphonConfig, Graphon)> {
    let spec = common.graphon.as_deref().ok_or_else(|| {
        Error::InvalidConfig("a graphon is required (--graphon family:key=value or @file)".into())
    })?;
    let config = if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)?;
        if path.ends_with(".json") {
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{path}: {e}")))?
        } else {
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{path}: {e}")))?
        }
    } else {
        GraphonConfig::parse_compact(spec)?
    };
    let graphon = config.build()?;
    Ok((config, graphon))
}

fn resolve_seed(common: &CommonArgs) -> u64 {
    common
        .seed
        .or_else(|| {
            std::env::var("GRAPHONWALK_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0)
}

fn init_threads(common: &CommonArgs) {
    if common.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global();
    }
}

fn resolve_initial(g: &str) -> Result<InitialCondition> {
    if let Some(path) = g.strip_prefix('@') {
        Ok(InitialCondition::Step(StepFunction::read_csv(Path::new(
            path,
        ))?))
    } else {
        InitialCondition::parse(g)
    }
}

fn out_path(common: &CommonArgs, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}_{suffix}", common.output))
}

fn ensure_output_dir(prefix: &str) -> Result<()> {
    if let Some(parent) = Path::new(prefix).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

pub fn degree(args: &DegreeArgs) -> Result<()> {
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let (config, w) = resolve_graphon(&args.common)?;
    let mut manifest = Manifest::new("degree", json!({"graphon": config, "n": args.n}), None);

    let k = degree_function(&w, args.n);
    let mut csv = String::from("x,k\n");
    for (i, &v) in k.samples().iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{}",
            fmt(graphon_walks::grid::midpoint(args.n, i)),
            fmt(v)
        );
    }
    let path = out_path(&args.common, "degree.csv");
    std::fs::write(&path, csv)?;
    manifest.add_output(&path);

    if args.common.svg {
        let pts: Vec<(f64, f64)> = k
            .samples()
            .iter()
            .enumerate()
            .map(|(i, &v)| (graphon_walks::grid::midpoint(args.n, i), v))
            .collect();
        let chart = LineChart::new("degree function", "x", "k(x)").with_series("k", pts);
        let svg_path = out_path(&args.common, "degree.svg");
        std::fs::write(&svg_path, chart.render())?;
        manifest.add_output(&svg_path);
    }

    manifest.write(&args.common.output)?;
    println!(
        "degree: family {} at N = {}, min k = {:.6e}",
        w.family_name(),
        args.n,
        k.min_value()
    );
    Ok(())
}

pub fn spectrum(args: &SpectrumArgs) -> Result<()> {
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let (config, w) = resolve_graphon(&args.common)?;
    let mut manifest = Manifest::new(
        "spectrum",
        json!({"graphon": config, "n": args.n, "path": args.path}),
        None,
    );

    let route = match args.path.as_str() {
        "auto" => {
            let k = degree_function(&w, args.n);
            if w.has_closed_form_kernel() && k.min_value() < 1e-2 {
                "kernel"
            } else {
                "symmetric"
            }
        }
        "symmetric" => "symmetric",
        "kernel" => "kernel",
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown spectral path {other:?} (expected auto, symmetric, kernel)"
            )))
        }
    };

    let path = out_path(&args.common, "eigenvalues.csv");
    if route == "symmetric" {
        let dec = spectral_decomposition_of(&w, args.n)?;
        dec.write_eigenvalues_csv(&path)?;
        manifest.add_output(&path);
        let mult = dec.zero_multiplicity(ZERO_MODE_TOLERANCE);
        if dec.gap() > ZERO_GAP_TOLERANCE {
            println!(
                "spectrum: symmetric route, λ₂ = {:.6e}, gap = {:.6e}, relaxation time = {:.6e}",
                dec.lambdas()[1],
                dec.gap(),
                1.0 / dec.gap()
            );
        } else {
            println!(
                "spectrum: symmetric route, zero eigenvalue multiplicity {mult}; \
                 analyze components separately"
            );
        }
    } else {
        let km = build_kernel_matrix(&w, args.n)?;
        let (vals, _) = kernel_spectrum(&km)?;
        let max_imag = vals.iter().map(|v| v.im.abs()).fold(0.0_f64, f64::max);
        if max_imag > 1e-9 {
            eprintln!("spectrum: warning, imaginary parts up to {max_imag:.3e} discarded");
        }
        let mut csv = String::from("m,theta,lambda\n");
        for (m, v) in vals.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", m + 1, fmt(v.re), fmt(v.re - 1.0));
        }
        std::fs::write(&path, csv)?;
        manifest.add_output(&path);
        println!(
            "spectrum: kernel route, θ₁ = {:.12}, |θ₂| = {:.3e}",
            vals[0].re,
            vals.get(1).map(|v| v.norm()).unwrap_or(0.0)
        );
    }
    manifest.write(&args.common.output)?;
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let (config, w) = resolve_graphon(&args.common)?;
    let ic = resolve_initial(&args.g)?;
    let mut manifest = Manifest::new(
        "solve",
        json!({
            "graphon": config, "n": args.n, "g": args.g, "times": args.times,
            "method": args.method, "modes": args.modes, "binary": args.binary
        }),
        None,
    );
    let g = GridField::from_fn(args.n, |x| ic.at(x));
    let modes = if args.modes == 0 {
        Some(args.n)
    } else {
        Some(args.modes)
    };

    let spectral = || -> Result<IVPSolution> {
        let dec = spectral_decomposition_of(&w, args.n)?;
        solve_ivp_spectral(&g, &dec, &args.times, modes)
    };
    let exponential = || -> Result<IVPSolution> {
        let km = build_kernel_matrix(&w, args.n)?;
        let fields = args
            .times
            .iter()
            .map(|&t| solve_ivp_exponential(&g, &km, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(IVPSolution {
            times: args.times.clone(),
            fields,
            method: SolveMethod::Exponential,
            modes_used: 0,
        })
    };

    let sol = match args.method.as_str() {
        "spectral" => spectral()?,
        "exponential" => exponential()?,
        "both" => {
            let a = spectral()?;
            let b = exponential()?;
            let worst = a
                .fields
                .iter()
                .zip(b.fields.iter())
                .map(|(x, y)| x.l2_distance(y))
                .fold(0.0_f64, f64::max);
            let rel = worst / g.l2_norm().max(f64::MIN_POSITIVE);
            println!("solve: spectral vs exponential, worst relative L² gap = {rel:.3e}");
            if rel > 1e-8 {
                return Err(Error::Numeric(format!(
                    "solution routes disagree: relative L² gap {rel:.3e} > 1e-8"
                )));
            }
            a
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected spectral, exponential, both)"
            )))
        }
    };

    let csv_path = out_path(&args.common, "solution.csv");
    sol.write_csv(&csv_path)?;
    manifest.add_output(&csv_path);
    if args.binary {
        let bin_path = out_path(&args.common, "solution.bin");
        sol.write_binary(&bin_path)?;
        manifest.add_output(&bin_path);
    }
    if args.common.svg {
        let mut chart = LineChart::new("evolution", "x", "w(x, t)");
        for (ti, t) in sol.times.iter().enumerate() {
            let pts: Vec<(f64, f64)> = sol.fields[ti]
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| (graphon_walks::grid::midpoint(args.n, i), v))
                .collect();
            chart = chart.with_series(&format!("t={t}"), pts);
        }
        let svg_path = out_path(&args.common, "solution.svg");
        std::fs::write(&svg_path, chart.render())?;
        manifest.add_output(&svg_path);
    }
    manifest.write(&args.common.output)?;
    println!(
        "solve: {} route on {} at N = {}, {} time(s), mass drift {:.3e}",
        sol.method.name(),
        w.family_name(),
        args.n,
        sol.times.len(),
        (sol.fields.last().unwrap().l1_mass() - g.l1_mass()).abs()
    );
    Ok(())
}

pub fn walk(args: &WalkArgs) -> Result<()> {
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let seed = resolve_seed(&args.common);

    let (graph, graph_desc) = if let Some(path) = &args.graph {
        (
            WeightedGraph::read_csv(Path::new(path))?,
            json!({"file": path}),
        )
    } else {
        let (config, w) = resolve_graphon(&args.common)?;
        (
            quotient_graph(&w, args.n, DEFAULT_CELL_SAMPLES),
            json!({"graphon": config, "n": args.n}),
        )
    };
    let mut manifest = Manifest::new(
        "walk",
        json!({
            "graph": graph_desc, "mode": args.mode, "kappa": args.kappa,
            "t_max": args.t_max, "walkers": args.walkers, "start": args.start
        }),
        Some(seed),
    );

    enum Kind {
        Continuous(WalkMode),
        Discrete(usize),
    }
    let kind = match args.mode.as_str() {
        "node-centric" | "node_centric" => {
            Kind::Continuous(WalkMode::NodeCentric { kappa: args.kappa })
        }
        "edge-centric" | "edge_centric" => Kind::Continuous(WalkMode::EdgeCentric),
        "discrete" => Kind::Discrete(args.t_max.max(0.0).floor() as usize),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown walk mode {other:?} (expected node-centric, edge-centric, discrete)"
            )))
        }
    };

    if args.walkers == 1 {
        let traj = match &kind {
            Kind::Continuous(mode) => gillespie_walk(&graph, *mode, args.start, args.t_max, seed)?,
            Kind::Discrete(steps) => discrete_walk(&graph, args.start, *steps, seed)?,
        };
        let path = out_path(&args.common, "trajectory.csv");
        traj.write_csv(&path)?;
        manifest.add_output(&path);
        println!(
            "walk: one {} walker, {} jumps in [0, {}]",
            traj.mode.name(),
            traj.jump_count(),
            args.t_max
        );
    } else {
        let counts = match &kind {
            Kind::Continuous(mode) => {
                occupancy_histogram(&graph, *mode, args.start, args.t_max, args.walkers, seed)?
            }
            Kind::Discrete(steps) => {
                discrete_occupancy_histogram(&graph, args.start, *steps, args.walkers, seed)?
            }
        };
        let path = out_path(&args.common, "histogram.csv");
        std::fs::write(&path, histogram_csv(&counts))?;
        manifest.add_output(&path);
        let occupied = counts.iter().filter(|&&c| c > 0).count();
        println!(
            "walk: {} walkers over {} nodes, {} nodes visited at t = {}",
            args.walkers,
            graph.n(),
            occupied,
            args.t_max
        );
    }
    manifest.write(&args.common.output)?;
    Ok(())
}

pub fn converge(args: &ConvergeArgs) -> Result<()> {
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let (config, w) = resolve_graphon(&args.common)?;
    let ic = resolve_initial(&args.g)?;
    let n_ref = if args.n_ref == 0 {
        graphon_walks::convergence::default_n_ref(&args.ns)
    } else {
        args.n_ref
    };
    let mode = match args.mode.as_str() {
        "quotient" => ExperimentMode::Quotient,
        "sampled" => ExperimentMode::Sampled,
        "external" | "external_sequence" => {
            if args.graphs.len() != args.ns.len() || args.ics.len() != args.ns.len() {
                return Err(Error::InvalidConfig(format!(
                    "external mode needs one --graphs and one --ics entry per size ({} sizes, \
                     {} graphs, {} ics)",
                    args.ns.len(),
                    args.graphs.len(),
                    args.ics.len()
                )));
            }
            let problems = args
                .graphs
                .iter()
                .zip(&args.ics)
                .map(|(gpath, ipath)| {
                    Ok(ExternalProblem {
                        graph: WeightedGraph::read_csv(Path::new(gpath))?,
                        initial: StepFunction::read_csv(Path::new(ipath))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ExperimentMode::ExternalSequence(problems)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown mode {other:?} (expected quotient, sampled, external)"
            )))
        }
    };
    let mut manifest = Manifest::new(
        "converge",
        json!({
            "graphon": config, "g": args.g, "mode": args.mode, "ns": args.ns,
            "times": args.times, "n_ref": n_ref
        }),
        None,
    );

    let spec = ExperimentSpec::new(w, ic, mode, args.ns.clone(), args.times.clone(), n_ref);
    let report = run_study(&spec)?;

    let csv_path = out_path(&args.common, "report.csv");
    report.write_csv(&csv_path)?;
    manifest.add_output(&csv_path);
    let json_path = out_path(&args.common, "summary.json");
    report.write_summary_json(&json_path)?;
    manifest.add_output(&json_path);

    if args.common.svg {
        let mut chart = LineChart::new("convergence", "n", "L² error").log_log();
        for slope in &report.slopes {
            let t = slope.t;
            let err_pts: Vec<(f64, f64)> = report
                .errors_at(t)
                .into_iter()
                .map(|(n, e)| (n as f64, e))
                .collect();
            let bound_pts: Vec<(f64, f64)> = report
                .rows
                .iter()
                .filter(|r| r.t == t)
                .map(|r| (r.n as f64, r.bound))
                .collect();
            chart = chart
                .with_series(&format!("error t={t}"), err_pts)
                .with_series(&format!("bound t={t}"), bound_pts);
        }
        let svg_path = out_path(&args.common, "report.svg");
        std::fs::write(&svg_path, chart.render())?;
        manifest.add_output(&svg_path);
    }
    manifest.write(&args.common.output)?;

    for slope in &report.slopes {
        let s = slope
            .slope
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "n/a".into());
        println!("converge: t = {}, fitted log-log slope = {s}", slope.t);
    }
    println!(
        "converge: {} rows, monotone = {}, bound dominates = {}",
        report.rows.len(),
        report.errors_strictly_decreasing(),
        report.bound_dominates(1e-9)
    );
    Ok(())
}

pub fn lemma_check(args: &LemmaCheckArgs) -> Result<()> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    init_threads(&args.common);
    ensure_output_dir(&args.common.output)?;
    let seed = resolve_seed(&args.common);
    let mut manifest = Manifest::new(
        "lemma-check",
        json!({"which": args.which, "cases": args.cases}),
        Some(seed),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("case,passed\n");
    let mut failures = 0_usize;

    match args.which.as_str() {
        "step-kernel" => {
            for case in 0..args.cases {
                let n = *[4_usize, 8, 16].choose(&mut rng).unwrap();
                let big_n = n * 4 * (1 + rng.random_range(0..4));
                let mut a = ndarray::Array2::zeros((n, n));
                for i in 0..n {
                    for j in i..n {
                        let v: f64 = rng.random();
                        a[[i, j]] = v;
                        a[[j, i]] = v;
                    }
                }
                let graph = WeightedGraph::new(a)?;
                let (amp, freq): (f64, f64) = (rng.random(), rng.random::<f64>() * 9.0);
                let f = GridField::from_fn(big_n, |x| amp * (freq * x).sin() + x);
                let applications = 1 + rng.random_range(0..4);
                let passed =
                    graphon_walks::convergence::lemma_step_kernel_check(&graph, &f, applications)?;
                failures += usize::from(!passed);
                let _ = writeln!(csv, "{case},{passed}");
            }
        }
        "hs-difference" => {
            for case in 0..args.cases {
                let n = 32;
                let a = ndarray::Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
                let b = ndarray::Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
                let f = GridField::new(Array1::from_shape_fn(n, |_| {
                    rng.random::<f64>() * 2.0 - 1.0
                }));
                let applications = 1 + rng.random_range(0..4);
                let passed = graphon_walks::convergence::lemma_hs_difference_check(
                    &a,
                    &b,
                    &f,
                    applications,
                    1.0,
                );
                failures += usize::from(!passed);
                let _ = writeln!(csv, "{case},{passed}");
            }
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown check {other:?} (expected step-kernel, hs-difference)"
            )))
        }
    }

    let path = out_path(&args.common, "lemma.csv");
    std::fs::write(&path, csv)?;
    manifest.add_output(&path);
    manifest.write(&args.common.output)?;
    println!(
        "lemma-check: {} failures out of {} {} cases",
        failures, args.cases, args.which
    );
    if failures > 0 {
        return Err(Error::Numeric(format!(
            "{failures} of {} {} cases violated the estimate",
            args.cases, args.which
        )));
    }
    Ok(())
}

/// Execute a command described by a TOML record with fields `command`,
/// `graphon`, `params`, `output`, `seed` — the same names the flags use.
pub fn run_from_config(args: &RunArgs) -> Result<()> {
    use clap::Parser;

    #[derive(serde::Deserialize)]
    struct RunConfig {
        command: String,
        #[serde(default)]
        graphon: Option<GraphonConfig>,
        #[serde(default)]
        params: toml::Table,
        #[serde(default)]
        output: Option<String>,
        #[serde(default)]
        seed: Option<u64>,
    }

    let text = std::fs::read_to_string(&args.config)?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", args.config)))?;

    let mut argv: Vec<String> = vec!["gwalk".into(), config.command.clone()];
    if let Some(output) = &config.output {
        argv.push("--output".into());
        argv.push(output.clone());
    }
    if let Some(seed) = config.seed {
        argv.push("--seed".into());
        argv.push(seed.to_string());
    }
    for (key, value) in &config.params {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            toml::Value::Boolean(true) => argv.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                argv.push(flag);
                let parts: Vec<String> = items.iter().map(toml_scalar).collect::<Result<_>>()?;
                argv.push(parts.join(","));
            }
            other => {
                argv.push(flag);
                argv.push(toml_scalar(other)?);
            }
        }
    }

    // The graphon record is structured, so it bypasses the flag round trip.
    let cli = crate::Cli::try_parse_from(&argv)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", args.config)))?;
    let built = config
        .graphon
        .as_ref()
        .map(|g| -> Result<String> {
            // stash the record next to the outputs so the flag path can load it
            ensure_output_dir(config.output.as_deref().unwrap_or("gwalk"))?;
            let path = format!(
                "{}_graphon.json",
                config.output.as_deref().unwrap_or("gwalk")
            );
            std::fs::write(&path, serde_json::to_string_pretty(g).unwrap())?;
            Ok(format!("@{path}"))
        })
        .transpose()?;

    match cli.command {
        crate::Command::Degree(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            degree(&a)
        }
        crate::Command::Spectrum(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            spectrum(&a)
        }
        crate::Command::Solve(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            solve(&a)
        }
        crate::Command::Walk(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            walk(&a)
        }
        crate::Command::Converge(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            converge(&a)
        }
        crate::Command::LemmaCheck(mut a) => {
            a.common.graphon = built.or(a.common.graphon);
            lemma_check(&a)
        }
        crate::Command::Run(_) => Err(Error::InvalidConfig(
            "run configs cannot nest another run command".into(),
        )),
    }
}

fn toml_scalar(v: &toml::Value) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        other => Err(Error::InvalidConfig(format!(
            "unsupported parameter value {other:?}"
        ))),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}
