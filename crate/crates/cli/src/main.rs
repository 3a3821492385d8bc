use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pfcert::config::{Model, RunConfig};
use pfcert::verify::{self, export, report, Report};
use pfcert::Error;

/// Build truncated Fock-space and Pauli-Fierz operators and certify their
/// identities and bounds numerically.
#[derive(Parser, Debug)]
#[command(name = "pfcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file; defaults describe the desk model.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Comma-separated check families to run.
    #[arg(long, global = true, value_name = "NAMES", value_delimiter = ',')]
    only: Option<Vec<String>>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "on|off")]
    dense_oracle: Option<Toggle>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the selected check families and write report.json.
    Verify,
    /// Relative-bound constants, Step-2 bound and ground energy across couplings.
    Sweep {
        /// Comma-separated coupling values; must include 0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        e: Option<Vec<f64>>,
    },
    /// Lowest eigenvalues of the Pauli-Fierz operator.
    Spectrum {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Write operators as `row col re im` triplets and the potential as binary.
    Export,
}

/// Exit code 2: the request itself is invalid.
struct Invalid(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Invalid {
    fn from(e: E) -> Self {
        Invalid(e.into())
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, Invalid> {
    let c = &cli.common;
    let mut config = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(only) = &c.only {
        config.only = only.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    if let Some(out) = &c.out {
        config.out = out.to_string_lossy().into_owned();
    }
    if let Some(t) = c.dense_oracle {
        config.dense_oracle = matches!(t, Toggle::On);
    }
    match &cli.command {
        Command::Sweep { e: Some(e) } => config.checks.sweep_e = e.clone(),
        Command::Spectrum { k: Some(k) } => config.checks.spectrum_k = *k,
        _ => {}
    }
    Ok(config)
}

fn init_threads(threads: Option<usize>) -> Result<(), Invalid> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(Invalid(anyhow::anyhow!("--threads must be at least 1")));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(model: &Model) -> anyhow::Result<PathBuf> {
    let dir = PathBuf::from(&model.config.out);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn verify_cmd(model: &Model) -> anyhow::Result<bool> {
    let checks = verify::run_checks(model);
    let rep = Report::new(model, checks, None);
    let dir = out_dir(model)?;
    let table = rep.table();
    write(&dir, "report.json", &rep.to_json())?;
    write(&dir, "report.txt", &table)?;
    print!("{table}");
    Ok(rep.all_passed())
}

fn sweep_cmd(model: &Model) -> anyhow::Result<bool> {
    let sweep = verify::coupling_sweep(model, &model.config.checks.sweep_e)?;
    let csv = report::sweep_csv(&sweep);
    let rep = Report::new(model, Vec::new(), Some(sweep));
    let dir = out_dir(model)?;
    write(&dir, "sweep.csv", &csv)?;
    write(&dir, "sweep.json", &rep.to_json())?;
    print!("{csv}");
    println!(
        "{}/{} sweep checks passed",
        rep.summary.passed, rep.summary.total
    );
    Ok(rep.all_passed())
}

fn spectrum_cmd(model: &Model) -> anyhow::Result<bool> {
    let spec = verify::spectrum(model, model.config.checks.spectrum_k)?;
    let dir = out_dir(model)?;
    let doc = serde_json::json!({ "config": model.config, "spectrum": spec });
    write(&dir, "spectrum.json", &serde_json::to_string_pretty(&doc)?)?;
    for (i, v) in spec.eigenvalues.iter().enumerate() {
        println!("{i:>4}  {:>24.16e}  residual {:.3e}", v.value, v.residual);
    }
    let tol = model.config.tolerances.iterative;
    Ok(spec.converged && spec.eigenvalues.iter().all(|v| v.value.is_finite() && v.residual <= tol))
}

fn export_cmd(model: &Model) -> anyhow::Result<bool> {
    let dir = out_dir(model)?;
    let manifest = export::export_all(model, &dir)?;
    let doc = serde_json::json!({ "config": model.config, "export": manifest });
    write(&dir, "export.json", &serde_json::to_string_pretty(&doc)?)?;
    for name in &manifest.written {
        println!("wrote {}", dir.join(name).display());
    }
    for (name, why) in &manifest.skipped {
        println!("skipped {name}: {why}");
    }
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool, Invalid> {
    let config = resolve(cli)?;
    init_threads(cli.common.threads)?;
    let model = config.build()?;
    if let Command::Spectrum { .. } = cli.command {
        let (k, dim) = (config.checks.spectrum_k, model.spin_space.dim());
        if k == 0 || k > dim {
            return Err(Invalid(anyhow::anyhow!("spectrum: k = {k} must lie in 1..={dim}")));
        }
    }
    let outcome = match cli.command {
        Command::Verify => verify_cmd(&model),
        Command::Sweep { .. } => sweep_cmd(&model),
        Command::Spectrum { .. } => spectrum_cmd(&model),
        Command::Export => export_cmd(&model),
    };
    match outcome {
        Ok(passed) => Ok(passed),
        Err(err) => match err.downcast_ref::<Error>() {
            Some(Error::NoConvergence { .. } | Error::Breakdown(_)) | None => {
                eprintln!("error: {err:#}");
                Ok(false)
            }
            Some(_) => Err(Invalid(err)),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Invalid(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
