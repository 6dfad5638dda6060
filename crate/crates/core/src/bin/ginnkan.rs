use std::path::{Path, PathBuf};
use std::process::exit;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ginnkan::autodiff::{check_gradient_multi, Executor};
use ginnkan::bench;
use ginnkan::checkpoint::Checkpoint;
use ginnkan::config::RunConfig;
use ginnkan::model::{AnyModel, ModelKind};
use ginnkan::nn::{predict, supervised_term, GraphModel, TrainConfig};
use ginnkan::pinn::{self, PdeProblem, SolveResult};
use ginnkan::util::linspace;
use ginnkan::{Error, Result};

#[derive(Parser)]
#[command(name = "ginnkan", version, about = "Interpretable networks: symbolic regression and PDE solving")]
struct Cli {
    /// Adam steps (overrides the config file).
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Learning rate (overrides the config file).
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// Base RNG seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for CSVs, tables, checkpoints, and plots.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the 8-equation symbolic-regression study.
    Toy {
        /// Comma-separated model kinds (default: ginn,kan,ginn-kan).
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        /// Comma-separated seeds (default: from config).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Solve one PDE (or `all`) with physics-informed training.
    Pde {
        /// PDE id from the registry, or `all`.
        id: String,
        /// Model kind, or `all` (default: from config).
        #[arg(long)]
        model: Option<String>,
        /// Comma-separated seeds (default: from config).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Record wall time per run (breaks byte-reproducibility of the CSV).
        #[arg(long)]
        timed: bool,
    },
    /// Print the symbolic equation recovered from a checkpoint.
    Extract { checkpoint: PathBuf },
    /// Compare reverse-mode gradients against finite differences.
    Gradcheck,
    /// Rebuild tables and plots from a results CSV.
    Report { results: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e {
            Error::UnknownModelKind(_) | Error::UnknownPde(_) | Error::UnknownDataset(..) => 2,
            _ => 1,
        };
        exit(code);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(steps) = cli.steps {
        config.train.max_steps = steps;
    }
    if let Some(lr) = cli.lr {
        config.train.lr = lr;
    }
    if let Some(seed) = cli.seed {
        config.train.seed = seed;
    }
    config.validate()?;
    std::fs::create_dir_all(&cli.out_dir)?;

    match &cli.command {
        Command::Toy { models, seeds } => cmd_toy(&cli, &config, models, seeds),
        Command::Pde {
            id,
            model,
            seeds,
            timed,
        } => cmd_pde(&cli, &config, id, model.as_deref(), seeds, *timed),
        Command::Extract { checkpoint } => cmd_extract(checkpoint),
        Command::Gradcheck => cmd_gradcheck(&config.train),
        Command::Report { results } => cmd_report(&cli, results),
    }
}

fn parse_kinds(raw: &[String], default: &[ModelKind]) -> Result<Vec<ModelKind>> {
    if raw.is_empty() {
        return Ok(default.to_vec());
    }
    if raw.len() == 1 && raw[0] == "all" {
        return Ok(ModelKind::ALL.to_vec());
    }
    raw.iter().map(|s| s.parse()).collect()
}

/// File-name-safe version of a dataset/PDE id.
fn slug(id: &str) -> String {
    let mut out = String::new();
    for c in id.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn cmd_toy(cli: &Cli, config: &RunConfig, models: &[String], seeds: &[u64]) -> Result<()> {
    let kinds = parse_kinds(models, &ModelKind::INTERPRETABLE)?;
    let seeds = if seeds.is_empty() {
        config.suite.seeds.clone()
    } else {
        seeds.to_vec()
    };
    let ckpt_dir = cli.out_dir.join("checkpoints");
    std::fs::create_dir_all(&ckpt_dir)?;
    let first = seeds[0];
    let train = config.train.clone();
    let mut ckpt_err = None;
    let report = bench::run_toy_study_with(&kinds, &seeds, &config.train, &mut |id, kind, seed, model| {
        if seed == first && ckpt_err.is_none() {
            let path = ckpt_dir.join(format!("{}_{kind}.json", slug(id)));
            if let Err(e) = Checkpoint::new(model.clone(), train.clone()).save(&path) {
                ckpt_err = Some(e);
            }
        }
    })?;
    if let Some(e) = ckpt_err {
        return Err(e);
    }
    write_out(&cli.out_dir, "toy_results.csv", &bench::bench_csv(&report))?;
    let table = bench::bench_table(&report);
    write_out(&cli.out_dir, "toy_table.txt", &table)?;
    print!("{table}");
    emit_toy_plots(&cli.out_dir, &report)
}

fn emit_toy_plots(out_dir: &Path, report: &bench::BenchReport) -> Result<()> {
    if report.cells.iter().all(|c| c.mse.is_none()) {
        eprintln!("warning: no successful runs; skipping plots");
        return Ok(());
    }
    bench::plot::save_bar_chart(
        &out_dir.join("r2_success.png"),
        &report.r2_success_pct,
        100.0,
    )?;
    let mut legend = String::from("percentage of datasets with R^2 > 0.99, one bar per model\n");
    for (k, v) in report.kinds.iter().zip(&report.r2_success_pct) {
        legend.push_str(&format!("{k}: {v:.1}%\n"));
    }
    write_out(out_dir, "r2_success.txt", &legend)
}

fn cmd_pde(
    cli: &Cli,
    config: &RunConfig,
    id: &str,
    model: Option<&str>,
    seeds: &[u64],
    timed: bool,
) -> Result<()> {
    let problems: Vec<PdeProblem> = if id == "all" {
        if config.suite.pdes.is_empty() {
            pinn::registry()
        } else {
            config
                .suite
                .pdes
                .iter()
                .map(|p| pinn::get_problem(p))
                .collect::<Result<_>>()?
        }
    } else {
        vec![pinn::get_problem(id)?]
    };
    let kinds = match model {
        None => config.suite.models.clone(),
        Some("all") => ModelKind::ALL.to_vec(),
        Some(k) => vec![k.parse()?],
    };
    let seeds = if seeds.is_empty() {
        config.suite.seeds.clone()
    } else {
        seeds.to_vec()
    };
    let timed = timed || config.suite.timed;

    let ckpt_dir = cli.out_dir.join("checkpoints");
    let plot_dir = cli.out_dir.join("plots");
    std::fs::create_dir_all(&ckpt_dir)?;
    std::fs::create_dir_all(&plot_dir)?;
    let first = seeds[0];
    let train = config.train.clone();
    let mut side_err = None;
    let result = pinn::run_suite_with(
        &problems,
        &kinds,
        &seeds,
        &config.train,
        timed,
        &mut |problem, kind, seed, solved| {
            if seed != first || side_err.is_some() {
                return;
            }
            let stem = format!("{}_{kind}", slug(problem.id));
            let ckpt = Checkpoint::new(solved.model.clone(), train.clone());
            if let Err(e) = ckpt
                .save(&ckpt_dir.join(format!("{stem}.json")))
                .and_then(|()| emit_solution_heatmap(&plot_dir, &stem, problem, solved))
            {
                side_err = Some(e);
            }
        },
    );
    if let Some(e) = side_err {
        return Err(e);
    }
    write_out(&cli.out_dir, "pde_results.csv", &pinn::suite_csv(&result))?;
    let table = pinn::suite_table(&result);
    write_out(&cli.out_dir, "pde_table.txt", &table)?;
    print!("{table}");
    if result.records.iter().all(|r| r.mse.is_none()) {
        eprintln!("warning: no successful runs; skipping plots");
    }
    if result.records.iter().any(|r| r.mse.is_none()) {
        for r in result.records.iter().filter(|r| r.mse.is_none()) {
            eprintln!("warning: {}/{} seed {} failed: {}", r.pde, r.model, r.seed, r.note);
        }
    }
    Ok(())
}

const HEATMAP_GRID: usize = 48;

/// Prediction | analytical | absolute error over a uniform space-time grid,
/// plus a sidecar text legend (the panels themselves carry no labels).
fn emit_solution_heatmap(
    dir: &Path,
    stem: &str,
    problem: &PdeProblem,
    solved: &SolveResult,
) -> Result<()> {
    let xs = linspace(problem.x_lo, problem.x_hi, HEATMAP_GRID);
    let ts = linspace(0.0, problem.t_max, HEATMAP_GRID);
    let mut gx = Vec::with_capacity(HEATMAP_GRID * HEATMAP_GRID);
    let mut gt = Vec::with_capacity(HEATMAP_GRID * HEATMAP_GRID);
    for &t in &ts {
        for &x in &xs {
            gx.push(x);
            gt.push(t);
        }
    }
    let pred = predict(&solved.model, &[gx.clone(), gt.clone()])?;
    let truth: Vec<f64> = gx
        .iter()
        .zip(&gt)
        .map(|(&x, &t)| (problem.solution)(x, t))
        .collect();
    let emax = bench::plot::save_heatmap_triptych(
        &dir.join(format!("{stem}.png")),
        &pred,
        &truth,
        HEATMAP_GRID,
        HEATMAP_GRID,
    )?;
    let legend = format!(
        "{}: prediction | analytical | absolute error\n\
         x in [{}, {}] (left to right), t in [0, {}] (bottom to top)\n\
         max abs error: {emax:e}\nmse on training collocation: {:e}\nmse on holdout sample: {:e}\n",
        problem.id, problem.x_lo, problem.x_hi, problem.t_max, solved.mse, solved.mse_holdout,
    );
    write_out(dir, &format!("{stem}.txt"), &legend)
}

fn cmd_extract(path: &Path) -> Result<()> {
    let ckpt = Checkpoint::load(path)?;
    let expr = ckpt.model.extract_equation()?;
    println!("{}", expr.render());
    Ok(())
}

/// Elementary-op check via scalar graphs, then full parameter-gradient
/// checks through each model's supervised loss.
fn cmd_gradcheck(train: &TrainConfig) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let points: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..3).map(|_| rng.gen_range(0.5..2.0)).collect())
        .collect();
    let worst = check_gradient_multi(
        |g, xs| {
            let prod = g.mul(xs[0], xs[1]);
            let a = g.sin(prod);
            let e = g.exp(xs[2]);
            let l = g.ln(xs[0]);
            let b = g.mul(e, l);
            let th = g.tanh(xs[1]);
            let sg = g.sigmoid(xs[2]);
            let c = g.div(th, sg);
            let ab = g.add(a, b);
            g.add(ab, c)
        },
        &points,
        1e-6,
    )?;
    report_check("elementary ops", worst, 1e-6)?;

    let data = bench::generate_dataset("sin(x1)+x2", 64, train.seed)?;
    let (features, targets) = data.train_split();
    for kind in ModelKind::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
        let mut model = AnyModel::new(kind, &features, &mut rng);
        let worst = param_grad_error(&mut model, &features, &targets)?;
        report_check(&format!("{kind} loss gradient"), worst, 1e-3)?;
    }
    Ok(())
}

fn report_check(name: &str, worst: f64, tol: f64) -> Result<()> {
    if worst < tol {
        println!("ok   {name}: max rel err {worst:.2e}");
        Ok(())
    } else {
        println!("FAIL {name}: max rel err {worst:.2e} (tolerance {tol:.0e})");
        Err(Error::Msg(format!(
            "gradient check `{name}` exceeded tolerance"
        )))
    }
}

/// Worst relative error between reverse-mode parameter gradients of the
/// supervised MSE and central finite differences.
fn param_grad_error(model: &mut AnyModel, features: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    let term = supervised_term(model, features, targets)?;
    let n = targets.len();
    let cols: Vec<&[f64]> = term.inputs.iter().map(|c| c.as_slice()).collect();
    let mut exec = Executor::new(&term.graph, n);
    exec.forward_chunk(&term.graph, model.store(), &cols, 0, n)?;
    let mut pgrads = vec![0.0; term.graph.params().len()];
    exec.backward_chunk(&term.graph, term.term, 1.0 / n as f64, n, &mut pgrads);
    let mut grads = model.store().zeros_like();
    for (pref, gv) in term.graph.params().iter().zip(&pgrads) {
        grads.accumulate(&pref.name, pref.index, *gv)?;
    }

    let loss_at = |m: &AnyModel| -> Result<f64> {
        let ev = term.graph.evaluate(m.store(), &cols)?;
        Ok(ev.value(term.term).iter().sum::<f64>() / n as f64)
    };
    let h = 1e-6;
    let names: Vec<String> = model.store().names().cloned().collect();
    let mut worst: f64 = 0.0;
    for name in names {
        let len = model.store().get(&name)?.len();
        for i in (0..len).step_by(5) {
            let orig = model.store().get(&name)?[i];
            model.store_mut().get_mut(&name)?[i] = orig + h;
            let up = loss_at(model)?;
            model.store_mut().get_mut(&name)?[i] = orig - h;
            let down = loss_at(model)?;
            model.store_mut().get_mut(&name)?[i] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = grads
                .get(&name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?[i];
            let denom = fd.abs().max(an.abs()).max(1e-4);
            worst = worst.max(((fd - an) / denom).abs());
        }
    }
    Ok(worst)
}

fn cmd_report(cli: &Cli, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let table = match header {
        "dataset,model,seed,mse,r2" => report_bench(cli, lines)?,
        "pde,model,seed,mse,wall_time" => report_suite(lines)?,
        _ => {
            return Err(Error::Msg(format!(
                "unrecognized results header `{header}`"
            )))
        }
    };
    write_out(&cli.out_dir, "report_table.txt", &table)?;
    print!("{table}");
    Ok(())
}

/// Splits one results row into (name, model, seed, mse-or-None).
fn parse_row(line: &str, n_fields: usize) -> Result<(String, ModelKind, u64, Option<f64>)> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != n_fields {
        return Err(Error::Msg(format!("malformed results row `{line}`")));
    }
    let kind: ModelKind = fields[1].parse()?;
    let seed: u64 = fields[2]
        .parse()
        .map_err(|_| Error::Msg(format!("bad seed in `{line}`")))?;
    let mse = if fields[3].is_empty() {
        None
    } else {
        Some(
            fields[3]
                .parse()
                .map_err(|_| Error::Msg(format!("bad mse in `{line}`")))?,
        )
    };
    Ok((fields[0].to_string(), kind, seed, mse))
}

fn report_bench(cli: &Cli, lines: std::str::Lines) -> Result<String> {
    let known = bench::corpus_ids();
    let mut datasets: Vec<&'static str> = Vec::new();
    let mut kinds: Vec<ModelKind> = Vec::new();
    let mut cells = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let (ds, kind, seed, mse) = parse_row(line, 5)?;
        let r2 = if fields[4].is_empty() {
            None
        } else {
            Some(
                fields[4]
                    .parse()
                    .map_err(|_| Error::Msg(format!("bad r2 in `{line}`")))?,
            )
        };
        // The corpus ids are 'static; reuse them so BenchCell's borrow works.
        let id = known
            .iter()
            .find(|k| **k == ds)
            .copied()
            .ok_or_else(|| Error::UnknownDataset(ds.clone(), known.join(", ")))?;
        if !datasets.contains(&id) {
            datasets.push(id);
        }
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
        cells.push(bench::BenchCell {
            dataset: id,
            model: kind,
            seed,
            mse,
            r2,
            note: String::new(),
        });
    }
    if cells.is_empty() {
        eprintln!("warning: empty results; nothing to report");
        return Ok(String::new());
    }
    let lp: Vec<bool> = datasets
        .iter()
        .map(|d| bench::CORPUS.iter().any(|e| e.id == *d && e.lp))
        .collect();
    let report = bench::aggregate(&datasets, &lp, &kinds, cells);
    if report.cells.iter().any(|c| c.r2.is_some()) {
        emit_toy_plots(&cli.out_dir, &report)?;
    }
    Ok(bench::bench_table(&report))
}

fn report_suite(lines: std::str::Lines) -> Result<String> {
    let mut pdes: Vec<String> = Vec::new();
    let mut kinds: Vec<ModelKind> = Vec::new();
    let mut rows: Vec<(String, ModelKind, u64, Option<f64>)> = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let row = parse_row(line, 5)?;
        if !pdes.contains(&row.0) {
            pdes.push(row.0.clone());
        }
        if !kinds.contains(&row.1) {
            kinds.push(row.1);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        eprintln!("warning: empty results; nothing to report");
        return Ok(String::new());
    }
    let mut medians = Vec::with_capacity(pdes.len());
    let mut records = Vec::new();
    for pde in &pdes {
        let mut row = Vec::with_capacity(kinds.len());
        for &kind in &kinds {
            let mses: Vec<f64> = rows
                .iter()
                .filter(|r| &r.0 == pde && r.1 == kind)
                .filter_map(|r| r.3)
                .collect();
            row.push(if mses.is_empty() {
                f64::NAN
            } else {
                ginnkan::util::median(&mses)
            });
        }
        medians.push(row);
    }
    for (pde, kind, seed, mse) in rows {
        records.push(pinn::RunRecord {
            pde,
            model: kind,
            seed,
            mse,
            wall_time: None,
            note: String::new(),
        });
    }
    let lp: Vec<bool> = pdes
        .iter()
        .map(|p| pinn::get_problem(p).map(|p| p.lp).unwrap_or(false))
        .collect();
    let (mean_rank_all, mean_rank_excl_lp) = pinn::mean_ranks(&medians, &lp);
    let result = pinn::SuiteResult {
        pdes,
        lp,
        kinds,
        records,
        medians,
        mean_rank_all,
        mean_rank_excl_lp,
    };
    Ok(pinn::suite_table(&result))
}
