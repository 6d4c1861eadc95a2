use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use icd_core::dataset::{cohort_summary, load_csv, synthetic_dataset, FeatureSchema, LabeledDataset, SynthConfig};
use icd_core::models::{default_grid, grid_search, GridSpec, ModelConfig, ModelKind};
use icd_core::pipeline::{
    build_set, compare, export_plot_data, export_result, import_result, render_table, run_experiment, PipelineConfig,
    SetId,
};
use icd_core::transforms::{apply_mvae, apply_one_hot, apply_scaler, fit_mvae, fit_one_hot, fit_scaler, ScalerKind};

/// Preprocessing and evaluation harness for imbalanced clinical tables.
#[derive(Parser)]
#[command(name = "icd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cohort statistics by class, with p-values.
    Summarize {
        csv: PathBuf,
        schema: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Cross-validated pipeline run.
    Run(RunArgs),
    /// Hyperparameter grid search on the SET1 encoding of a dataset.
    Grid {
        #[arg(long)]
        model: String,
        /// Grid JSON; defaults to the built-in grid for the model.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired comparison of two results over aligned folds.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean ± std table for a result, optionally with plot CSVs.
    Report {
        result: PathBuf,
        #[arg(long)]
        plots: Option<PathBuf>,
    },
    /// Write the built-in synthetic cohort and its schema.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Defaults to <out>.schema.json
        #[arg(long)]
        schema_out: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, requires = "schema", conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Use the built-in synthetic cohort instead of a CSV.
    #[arg(long)]
    synthetic: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "pipeline", required_unless_present = "pipeline")]
    set: Option<String>,
    #[arg(long)]
    pipeline: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated model kinds replacing the configured models.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    icd_core::Error::Config(msg.into()).into()
}

fn load_data(args: &DataArgs) -> Result<LabeledDataset> {
    match (&args.data, &args.schema) {
        (Some(csv), Some(schema)) => {
            let schema = FeatureSchema::from_json_file(schema)
                .with_context(|| format!("reading schema {}", schema.display()))?;
            let (ds, report) = load_csv(csv, &schema).with_context(|| format!("reading {}", csv.display()))?;
            if report.rows_excluded_missing_label > 0 {
                eprintln!("excluded {} rows with a missing label", report.rows_excluded_missing_label);
            }
            Ok(ds)
        }
        _ if args.synthetic => Ok(synthetic_dataset(&SynthConfig::default())),
        _ => Err(config_error("give --data and --schema, or --synthetic")),
    }
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match (&args.set, &args.pipeline) {
        (Some(set), _) => build_set(SetId::parse(set)?),
        (None, Some(path)) => PipelineConfig::from_json_file(path)?,
        (None, None) => unreachable!("clap requires one of --set / --pipeline"),
    };
    if let Some(seed) = args.seed {
        cfg.cv.seed = seed;
    }
    if let Some(k) = args.k {
        cfg.cv.k = k;
    }
    if let Some(r) = args.repeats {
        cfg.cv.repeats = r;
    }
    if !args.models.is_empty() {
        cfg.models = args
            .models
            .iter()
            .map(|m| ModelKind::parse(m.trim()).map(ModelConfig::new))
            .collect::<icd_core::Result<_>>()?;
    }
    cfg.validate()?;
    let ds = load_data(&args.data)?;
    let result = run_experiment(&ds, &cfg)?;
    print!("{}", render_table(&result));
    if let Some(out) = &args.out {
        export_result(&result, out)?;
    }
    Ok(())
}

fn grid(model: &str, grid: Option<&Path>, data: &DataArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let kind = ModelKind::parse(model)?;
    let spec = match grid {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec: GridSpec = serde_json::from_str(&text).map_err(icd_core::Error::from)?;
            if spec.kind != kind {
                return Err(config_error(format!("grid file is for {}, not {kind}", spec.kind)));
            }
            spec
        }
        None => default_grid(kind),
    };
    let ds = load_data(data)?;
    // SET1 encoding fitted on the whole file; the search's own folds are inner.
    let mvae = fit_mvae(&ds.table)?;
    let t = apply_mvae(&mvae, &ds.table)?;
    let (t, _) = apply_one_hot(&fit_one_hot(&t), &t)?;
    let t = apply_scaler(&fit_scaler(ScalerKind::Standard, &t)?, &t)?;
    let result = grid_search(&spec, &ModelConfig::new(kind), &t.to_matrix()?, &ds.labels, seed)?;
    for e in &result.evaluations {
        let params: Vec<String> = e
            .params
            .iter()
            .map(|(k, v)| format!("{k}={}", v.map_or_else(|| "null".into(), |v| v.to_string())))
            .collect();
        println!("{:<40} {:?} {:.4}", params.join(" "), result.scoring, e.mean_score);
    }
    println!("best: {}", serde_json::to_string(&result.best.params)?);
    if let Some(out) = out {
        write_json(&result, out)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Summarize { csv, schema, json } => {
            let ds = load_data(&DataArgs {
                data: Some(csv),
                schema: Some(schema),
                synthetic: false,
            })?;
            let report = cohort_summary(&ds);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
        }
        Command::Run(args) => run(args)?,
        Command::Grid {
            model,
            grid: g,
            data,
            seed,
            out,
        } => grid(&model, g.as_deref(), &data, seed, out.as_deref())?,
        Command::Compare { a, b, out } => {
            let report = compare(&import_result(&a)?, &import_result(&b)?)?;
            print!("{}", report.render());
            if let Some(out) = out {
                write_json(&report, &out)?;
            }
        }
        Command::Report { result, plots } => {
            let r = import_result(&result)?;
            print!("{}", render_table(&r));
            if let Some(dir) = plots {
                std::fs::create_dir_all(&dir)?;
                let (bars, folds) = export_plot_data(&[&r], &dir)?;
                eprintln!("wrote {} and {}", bars.display(), folds.display());
            }
        }
        Command::Synth {
            out,
            schema_out,
            n,
            seed,
        } => {
            let ds = synthetic_dataset(&SynthConfig {
                n_rows: n,
                seed,
                ..SynthConfig::default()
            });
            ds.write_csv(&out)?;
            let schema_path = schema_out.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".schema.json");
                p.into()
            });
            write_json(&ds.schema, &schema_path)?;
        }
    }
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ICD_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => bail!(config_error(format!("ICD_THREADS must be a positive integer, got `{raw}`"))),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<icd_core::Error>() {
        Some(e) => e.exit_code() as u8,
        None if err.downcast_ref::<std::io::Error>().is_some() => 3,
        None => 2,
    }
}

// Core errors embed their source in their own message; skip repeats.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let s = cause.to_string();
        if !msg.contains(&s) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&s);
        }
    }
    msg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| execute(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
