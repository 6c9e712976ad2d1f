use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opad_cli::config::{ExperimentConfig, KernelChoice, TargetFamily};
use opad_cli::experiment::{build_model, read_kl_trace, run_and_persist};
use opad_cli::plot::render_svg;
use opad_cli::summary::{read_summary, summarize, write_summary};
use opad_core::datagen::{generate_bsl, generate_bvs, save_csv};
use opad_core::build_exact_target;

#[derive(Parser)]
#[command(name = "opad", version, about = "Optimal particle reweighting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by subcommands that need a full experiment config.
/// Anything given here overrides the config file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target: Option<TargetFamily>,
    #[arg(long)]
    kernel: Option<KernelChoice>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for parallel chains; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,

    #[arg(long)]
    ising_sites: Option<usize>,
    #[arg(long)]
    ising_beta: Option<f64>,
    #[arg(long)]
    ising_mu: Option<f64>,
    #[arg(long)]
    ising_coupling: Option<f64>,
    #[arg(long)]
    ising_field: Option<f64>,

    #[arg(long)]
    bvs_predictors: Option<usize>,
    #[arg(long)]
    bvs_rows: Option<usize>,
    #[arg(long)]
    bvs_rho: Option<f64>,
    #[arg(long)]
    bvs_g: Option<f64>,
    #[arg(long)]
    bvs_a: Option<f64>,
    #[arg(long)]
    bvs_b: Option<f64>,

    #[arg(long)]
    bsl_nodes: Option<usize>,
    #[arg(long)]
    bsl_degree: Option<usize>,
    #[arg(long)]
    bsl_rows: Option<usize>,

    #[arg(long)]
    data_seed: Option<u64>,
    /// Load this CSV instead of generating data.
    #[arg(long)]
    data_path: Option<PathBuf>,
    /// Response column name when loading BVS data.
    #[arg(long)]
    response: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! apply {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { config.$field = v.clone().into(); })*
            };
        }
        apply!(
            seed, chains, iterations, stride, out_dir, workers, ising_sites,
            ising_beta, ising_mu, ising_coupling, ising_field, bvs_predictors,
            bvs_rows, bvs_rho, bvs_a, bvs_b, bsl_nodes, bsl_degree, bsl_rows,
            data_seed,
        );
        if let Some(v) = self.target {
            config.target = v;
        }
        if let Some(v) = self.kernel {
            config.kernel = Some(v);
        }
        if let Some(v) = self.bvs_g {
            config.bvs_g = Some(v);
        }
        if let Some(v) = &self.data_path {
            config.data_path = Some(v.clone());
        }
        if let Some(v) = &self.response {
            config.response = Some(v.clone());
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured chains and write kl_trace.csv, summary.csv,
    /// plot.svg, and the resolved config manifest to the output directory.
    Run(ConfigArgs),
    /// Aggregate a kl_trace.csv across chains into summary.csv.
    Summarize {
        /// Trace file to read (default: <out-dir>/kl_trace.csv).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Render summary.csv to plot.svg.
    Plot {
        /// Summary file to read (default: <out-dir>/summary.csv).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print the exact support size and log normalizing constant of the
    /// configured target.
    ExactInfo(ConfigArgs),
    /// Generate a synthetic dataset and write it to CSV.
    GenData(ConfigArgs),
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let trace = run_and_persist(&config)?;
            let rows = summarize(&trace)?;
            write_summary(&rows, &config.out_dir.join("summary.csv"))?;
            std::fs::write(config.out_dir.join("plot.svg"), render_svg(&rows))?;
            println!(
                "wrote {} trace rows for {} chains to {}",
                trace.rows.len(),
                config.chains,
                config.out_dir.display()
            );
        }
        Command::Summarize { trace, out_dir } => {
            let trace_path = trace.unwrap_or_else(|| out_dir.join("kl_trace.csv"));
            let rows = summarize(&read_kl_trace(&trace_path)?)?;
            std::fs::create_dir_all(&out_dir)?;
            let out = out_dir.join("summary.csv");
            write_summary(&rows, &out)?;
            println!("wrote {} summary rows to {}", rows.len(), out.display());
        }
        Command::Plot { summary, out_dir } => {
            let summary_path = summary.unwrap_or_else(|| out_dir.join("summary.csv"));
            let rows = read_summary(&summary_path)?;
            std::fs::create_dir_all(&out_dir)?;
            let out = out_dir.join("plot.svg");
            std::fs::write(&out, render_svg(&rows))?;
            println!("wrote {}", out.display());
        }
        Command::ExactInfo(args) => {
            let config = args.resolve()?;
            let model = build_model(&config)?;
            let exact = build_exact_target(model.as_ref())?;
            println!("target: {:?}", config.target);
            println!("support size: {}", exact.len());
            println!("log Z: {}", exact.log_z());
        }
        Command::GenData(args) => {
            let config = args.resolve()?;
            let dataset = match config.target {
                TargetFamily::Bvs => {
                    generate_bvs(
                        config.bvs_predictors,
                        config.bvs_rows,
                        config.bvs_rho,
                        config.data_seed,
                    )?
                    .0
                }
                TargetFamily::Bsl => {
                    generate_bsl(
                        config.bsl_nodes,
                        config.bsl_degree,
                        config.bsl_rows,
                        config.data_seed,
                    )?
                    .0
                }
                TargetFamily::Ising => {
                    anyhow::bail!("the ising target takes no dataset");
                }
            };
            std::fs::create_dir_all(&config.out_dir)?;
            let out = config.out_dir.join("data.csv");
            save_csv(&dataset, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; everything else is misuse
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // config problems are usage errors; anything downstream is not
            let usage = e.is::<opad_cli::config::ConfigError>();
            eprintln!("error: {e:#}");
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
