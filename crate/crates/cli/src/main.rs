use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use odeprog_cli::dsl;
use odeprog_cli::run::{self, Flags, Format};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "odeprog", version, about = "Simulate and verify polynomial ODE programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Absolute and relative solver tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Taylor series order.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Precision for evaluating polynomial initial values (integration runs in doubles).
    #[arg(long, default_value_t = 53)]
    precision_bits: u32,
    /// Default simulation horizon when a directive gives none [default: 10].
    #[arg(long)]
    horizon: Option<f64>,
    /// Seed for randomized verification scenarios.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for traces, reports and witnesses.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Trace format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for independent verification scenarios (0 = all cores).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Common {
    fn flags(&self, base: &Path) -> Flags {
        Flags {
            tol: self.tol,
            order: self.order,
            precision_bits: self.precision_bits,
            horizon: self.horizon,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            format: self.format,
            jobs: self.jobs,
            base_dir: base.to_path_buf(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the directives of a program.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a program and print it in canonical form.
    Fmt {
        file: PathBuf,
        /// Rewrite the file instead of printing.
        #[arg(long)]
        write: bool,
    },
    /// Apply a witness transformation and write the result.
    Transform {
        /// One of atsp-to-alp, alp-to-atsp, atsp-as-awp, awp-to-arp, arp-to-asp, online.
        kind: String,
        /// Witness JSON file or builtin name (square_atsp, square_axp).
        source: String,
        /// Output file [default: <out-dir>/<name>-<class>.json].
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Witness files.
    Witness {
        #[command(subcommand)]
        command: WitnessCommand,
    },
}

#[derive(Subcommand)]
enum WitnessCommand {
    /// Verify a witness against its class bounds.
    Verify {
        /// Witness JSON file or builtin name.
        source: String,
        /// Number of domain points to run.
        #[arg(long, default_value_t = 3)]
        cases: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn read(file: &Path) -> Result<String> {
    std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))
}

fn base_of(file: &Path) -> PathBuf {
    file.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn witness_from(source: &str, flags: &Flags) -> Result<odeprog::pipelines::ComputabilityWitness> {
    run::resolve_witness(&dsl::Env::default(), source, flags)
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, common } => {
            let src = read(&file)?;
            let prog = dsl::parse(&src).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
            let env = dsl::elaborate(&prog).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
            let out = run::run_program(&prog, &env, &common.flags(&base_of(&file)))?;
            for line in &out.log {
                println!("{line}");
            }
            let failed = out.reports.iter().filter(|r| !r.report.pass).count();
            println!("{} check(s), {} failed", out.reports.len(), failed);
            Ok(out.all_pass())
        }
        Command::Fmt { file, write } => {
            let src = read(&file)?;
            let prog = dsl::parse_program(&src).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
            let text = dsl::print_program(&prog);
            if write {
                std::fs::write(&file, text)?;
            } else {
                print!("{text}");
            }
            Ok(true)
        }
        Command::Transform { kind, source, out, common } => {
            let flags = common.flags(Path::new("."));
            if !dsl::TRANSFORMS.contains(&kind.as_str()) {
                bail!("unknown transformation `{kind}`; expected one of {}", dsl::TRANSFORMS.join(", "));
            }
            let w = witness_from(&source, &flags)?;
            let t = run::apply_transform(&kind, &w)?;
            let path = match out {
                Some(p) => p,
                None => flags.out_dir.join(format!("{}-{}.json", t.name, t.class.name())),
            };
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, serde_json::to_string_pretty(&t.to_json())? + "\n")?;
            println!("{} ({}) -> {} ({}): {}", w.name, w.class.name(), t.name, t.class.name(), path.display());
            Ok(true)
        }
        Command::Witness { command: WitnessCommand::Verify { source, cases, common } } => {
            let flags = common.flags(Path::new("."));
            let w = witness_from(&source, &flags)?;
            let r = run::verify_witness(&w, cases, &flags)?;
            for (check, margin) in r.worst_by_check() {
                println!("  {check:<20} margin {margin:.3e}");
            }
            println!("{} witness {} ({}): margin {:.3e}", if r.pass { "PASS" } else { "FAIL" }, w.name, w.class.name(), r.min_margin);
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
