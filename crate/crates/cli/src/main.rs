use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use stlattice::cda::{beta_search, gaplus_order};
use stlattice::channel::{run_montecarlo, SimConfig};
use stlattice::lattice::{catalog, read_lattice};
use stlattice::Lattice;

#[derive(Parser)]
#[command(name = "stlattice", version, about = "Lattice space-time coding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment described by a key = value config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; a `.json` sidecar is written next to it.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Lattice utilities.
    Lattice {
        #[command(subcommand)]
        command: LatticeCommand,
    },
    /// Search the Golden+ order for elements of a given principal index.
    BetaSearch {
        #[arg(long)]
        target: u128,
        #[arg(long)]
        nu: i64,
        #[arg(long, default_value = "beta_search.csv")]
        output: PathBuf,
    },
    /// Write the codebook of the block code in a config.
    Codebook {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "codebook.csv")]
        output: PathBuf,
    },
    /// Write the coset-selector table of the trellis code in a config.
    Trellis {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "trellis.txt")]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum LatticeCommand {
    /// Print volume, minimum distance and coding gain.
    Info {
        /// Catalog name or generator file.
        name: String,
    },
}

fn load_lattice(name: &str) -> Result<Lattice> {
    match catalog(name) {
        Ok(l) => Ok(l),
        Err(e) if Path::new(name).exists() => {
            read_lattice(name).with_context(|| format!("reading lattice file `{name}` ({e})"))
        }
        Err(e) => Err(e.into()),
    }
}

fn read_config(path: &Path) -> Result<SimConfig> {
    let cfg = SimConfig::read(path).with_context(|| format!("reading config `{}`", path.display()))?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, output } => {
            let cfg = read_config(&config)?;
            let result = run_montecarlo(&cfg)?;
            let out = output.unwrap_or_else(|| config.with_extension("csv"));
            let meta = result.write(&out)?;
            print!("{}", result.to_csv());
            eprintln!("wrote {} and {}", out.display(), meta.display());
        }
        Command::Lattice {
            command: LatticeCommand::Info { name },
        } => {
            let l = load_lattice(&name)?;
            println!("dimension: {}", l.dim());
            println!("volume: {:.12}", l.fundamental_volume());
            println!("d_min: {:.12}", l.min_distance());
            println!("coding_gain: {:.12}", l.coding_gain());
        }
        Command::BetaSearch { target, nu, output } => {
            if target == 0 {
                bail!("--target must be positive");
            }
            if nu < 1 {
                bail!("--nu must be at least 1");
            }
            let search = beta_search(&gaplus_order(), target, nu)?;
            search.write_csv(&output)?;
            let best = search.best();
            let coords: Vec<String> = best.beta.coords.iter().map(|g| g.to_string()).collect();
            println!(
                "{} candidates; best beta ({}) norm {} coding gain {:.6}",
                search.candidates.len(),
                coords.join(", "),
                best.norm,
                best.coding_gain
            );
        }
        Command::Codebook { config, output } => {
            let cfg = read_config(&config)?;
            let code = cfg.build_slast()?;
            let u0 = nalgebra::DVector::zeros(code.dim());
            std::fs::write(&output, code.codebook_csv(&u0, cfg.ml_cap)?)?;
            println!("{} codewords written to {}", code.codebook_size().unwrap_or(0), output.display());
        }
        Command::Trellis { config, output } => {
            let cfg = read_config(&config)?;
            let scheme = cfg.build_tcm()?;
            scheme.selector().write_table(&output)?;
            println!(
                "{} states, {} input bits per block; {} information bits per packet",
                scheme.selector().num_states(),
                scheme.selector().input_bits(),
                scheme.info_bits()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
