use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use odf2nna::config::load_config;
use odf2nna::data::SplitName;
use odf2nna::manifest::{ArtifactPaths, RunManifest};
use odf2nna::model_io::{load_model, save_model, write_atomic, ModelEncoding};
use odf2nna::refine::{
    evaluate, refine_existing, scratch_control, train_general, ExperimentRecord, StageMetrics,
};
use odf2nna::{Error, Result};

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(
    name = "odf2nna",
    version,
    about = "Size, train, prune and refine dense feed-forward networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the full pipeline from a config file and write artifacts.
    Run {
        config: PathBuf,
        /// Output directory (default: $ODF2NNA_OUT_DIR or ./runs).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Refine this already-trained model instead of building one.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train once, refine at several epsilon values, emit a CSV table.
    Sweep {
        config: PathBuf,
        /// Comma-separated epsilon list, e.g. 0.1,0.3,0.5
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train the refined topology from scratch and compare against the
    /// refined metrics of a recorded run.
    Control {
        record: PathBuf,
        config: PathBuf,
    },
    /// Evaluate a saved model on a dataset split.
    Eval {
        model: PathBuf,
        config: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Print per-layer widths and parameter counts of a saved model.
    Inspect { model: PathBuf },
    /// Convert a model between binary and text encodings.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_parser = ["binary", "text"])]
        to: String,
    },
}

fn out_dir_or_default(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ODF2NNA_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn stage_line(name: &str, m: &StageMetrics) -> String {
    let mut parts = vec![format!("{name:<10}")];
    if let Some(a) = m.accuracy {
        parts.push(format!("acc {a:.4}"));
    }
    if let Some(f) = m.macro_f1 {
        parts.push(format!("macro-F1 {f:.4}"));
    }
    if let Some(f) = m.binary_f1 {
        parts.push(format!("F1+ {f:.4}"));
    }
    if let Some(a) = m.auc {
        parts.push(format!("AUC {a:.4}"));
    }
    if let Some(e) = m.mse {
        parts.push(format!("mse {e:.6e}"));
    }
    if let Some(e) = m.mae {
        parts.push(format!("mae {e:.6e}"));
    }
    parts.join("  ")
}

fn print_record(record: &ExperimentRecord) {
    println!("epsilon {:<8} seed {}", record.epsilon, record.seed);
    println!("{}", stage_line("original", &record.original));
    println!("{}", stage_line("pruned", &record.pruned_without_retrain));
    println!("{}", stage_line("refined", &record.refined));
    println!(
        "params {} -> {} ({:.2}% reduction), layers {} -> {}, retrain epochs {}",
        record.params_original,
        record.params_pruned,
        record.reduction_percent,
        record.layers_original,
        record.layers_pruned,
        record.retrain_epochs
    );
    if record.degenerate {
        println!("warning: degenerate pruning (all hidden layers collapsed)");
    }
}

const SWEEP_HEADER: &str = "epsilon,stage_or,stage_pwr,stage_pr,params_original,params_pruned,reduction_percent,layers_original,layers_pruned,seed";

fn sweep_row(r: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.epsilon,
        r.original.headline(),
        r.pruned_without_retrain.headline(),
        r.refined.headline(),
        r.params_original,
        r.params_pruned,
        r.reduction_percent,
        r.layers_original,
        r.layers_pruned,
        r.seed
    )
}

fn cmd_run(config_path: &Path, out_dir: Option<PathBuf>, model: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(config_path)?;
    let out = out_dir_or_default(out_dir);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;

    let data = cfg.build_dataset()?;
    let refine_cfg = cfg.refine_config(data.task);
    let (refined, record) = match model {
        Some(path) => {
            let net = load_model(&path)?;
            refine_existing(&net, &data, &refine_cfg)?
        }
        None => odf2nna::refine::odf2nna(&data, &refine_cfg)?,
    };

    let paths = ArtifactPaths {
        model: out.join("model.bin").display().to_string(),
        record: out.join("record.json").display().to_string(),
        manifest: out.join("manifest.json").display().to_string(),
    };
    save_model(&paths.model, &refined, ModelEncoding::Binary)?;
    write_atomic(
        Path::new(&paths.record),
        serde_json::to_string_pretty(&record)
            .expect("record serializes")
            .as_bytes(),
    )?;
    RunManifest::new(cfg, paths.clone())?.save(&paths.manifest)?;

    print_record(&record);
    println!("artifacts written to {}", out.display());
    Ok(())
}

fn cmd_sweep(config_path: &Path, epsilons: &[f64], out_dir: Option<PathBuf>) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::Config {
            field: "epsilons".into(),
            reason: "list must be non-empty".into(),
        });
    }
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::Config {
            field: "epsilons".into(),
            reason: format!("all values must be > 0, got {bad}"),
        });
    }
    let cfg = load_config(config_path)?;
    let out = out_dir_or_default(out_dir);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(out.display().to_string(), e))?;

    let data = cfg.build_dataset()?;
    let base = cfg.refine_config(data.task);
    let general = train_general(&data, &base)?;

    let mut lines = vec![SWEEP_HEADER.to_string()];
    for &eps in epsilons {
        let mut c = base.clone();
        c.epsilon = eps;
        let (_, record) = refine_existing(&general, &data, &c)?;
        lines.push(sweep_row(&record));
    }
    let table = lines.join("\n") + "\n";
    let path = out.join("sweep.csv");
    write_atomic(&path, table.as_bytes())?;
    print!("{table}");
    println!("sweep table written to {}", path.display());
    Ok(())
}

fn cmd_control(record_path: &Path, config_path: &Path) -> Result<()> {
    let record_text = std::fs::read_to_string(record_path)
        .map_err(|e| Error::io(record_path.display().to_string(), e))?;
    let record: ExperimentRecord = serde_json::from_str(&record_text)
        .map_err(|e| Error::ModelFormat(format!("bad record: {e}")))?;
    let cfg = load_config(config_path)?;
    let data = cfg.build_dataset()?;
    let base = cfg.train_config(data.task);
    let control = scratch_control(&record, &data, &base)?;
    println!("topology: {:?}", record.pruned_widths);
    println!("{}", stage_line("refined", &record.refined));
    println!("{}", stage_line("scratch", &control));
    Ok(())
}

fn cmd_eval(model_path: &Path, config_path: &Path, split: &str) -> Result<()> {
    let split = match split {
        "train" => SplitName::Train,
        "validation" => SplitName::Validation,
        "test" => SplitName::Test,
        other => {
            return Err(Error::Config {
                field: "split".into(),
                reason: format!("unknown split `{other}`"),
            })
        }
    };
    let net = load_model(model_path)?;
    let cfg = load_config(config_path)?;
    let data = cfg.build_dataset()?;
    let metrics = evaluate(&net, &data, split)?;
    println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize"));
    Ok(())
}

fn cmd_inspect(model_path: &Path) -> Result<()> {
    let net = load_model(model_path)?;
    println!("task: {:?}", net.task);
    println!("{:<7} {:>8} {:>8} {:>10} {:>12}", "layer", "in", "out", "act", "params");
    for (i, layer) in net.layers.iter().enumerate() {
        println!(
            "{:<7} {:>8} {:>8} {:>10} {:>12}",
            i,
            layer.in_dim(),
            layer.out_dim(),
            layer.activation.name(),
            layer.param_count()
        );
    }
    println!("total parameters: {}", net.param_count());
    Ok(())
}

fn cmd_convert(input: &Path, output: &Path, to: &str) -> Result<()> {
    let net = load_model(input)?;
    let encoding = if to == "text" {
        ModelEncoding::Text
    } else {
        ModelEncoding::Binary
    };
    save_model(output, &net, encoding)?;
    println!("wrote {} ({to})", output.display());
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::InvalidEpsilon(_)
        | Error::InvalidTrainConfig(_)
        | Error::InvalidSizing(_)
        | Error::BudgetBelowOutput { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out_dir,
            model,
        } => cmd_run(config, out_dir.clone(), model.clone()),
        Command::Sweep {
            config,
            epsilons,
            out_dir,
        } => cmd_sweep(config, epsilons, out_dir.clone()),
        Command::Control { record, config } => cmd_control(record, config),
        Command::Eval {
            model,
            config,
            split,
        } => cmd_eval(model, config, split),
        Command::Inspect { model } => cmd_inspect(model),
        Command::Convert { input, output, to } => cmd_convert(input, output, to),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
