//! `perfcem`: multiscale Poisson experiments on perforated domains.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perfcem::cem::Variant;
use perfcem_cli::config::{DomainConfig, LayersConfig, RunConfig};
use perfcem_cli::{run, CliError};

#[derive(Parser, Debug)]
#[command(name = "perfcem", version, about = "CEM-GMsFEM Poisson solver for perforated domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw random perforations and print the domain spec as JSON.
    Generate {
        #[command(flatten)]
        run: RunArgs,
        /// Number of disks.
        #[arg(long)]
        disks: Option<usize>,
    },
    /// Print mesh and coarse-grid statistics.
    MeshInfo {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fine and multiscale solve at the first coarse size; writes VTK and errors.csv.
    Solve {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Convergence and decay tables.
    Study {
        #[command(subcommand)]
        kind: StudyKind,
    },
    /// Write the multiscale basis functions of one coarse block as VTK.
    ExportBasis {
        #[command(flatten)]
        run: RunArgs,
        /// Coarse block index `bx + N·by`.
        #[arg(long, default_value_t = 0)]
        block: usize,
    },
}

#[derive(Subcommand, Debug)]
enum StudyKind {
    /// Errors over the (H, m) schedule.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Errors against m at the first coarse size.
    Decay {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Constraint,
    Relaxed,
    Both,
}

impl VariantArg {
    fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Constraint => vec![Variant::Constraint],
            VariantArg::Relaxed => vec![Variant::Relaxed],
            VariantArg::Both => vec![Variant::Constraint, Variant::Relaxed],
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
struct RunArgs {
    /// JSON run config or a previous `manifest.json`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    /// Integer, `log`, or a comma list (one per H; the m list for `study decay`).
    #[arg(long)]
    layers: Option<String>,
    /// Auxiliary eigenfunctions per block.
    #[arg(long)]
    eigs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fine_n: Option<usize>,
    /// Coarse sizes as a comma list, e.g. `1/8,1/16` or `0.125`.
    #[arg(long = "H", value_name = "LIST")]
    h: Option<String>,
    /// Domain spec JSON instead of generated disks.
    #[arg(long, conflicts_with = "mesh")]
    spec: Option<PathBuf>,
    /// Gmsh 2.2 mesh instead of a generated one.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Worker threads for basis construction (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall_ms in CSV output.
    #[arg(long)]
    timing: bool,
}

fn parse_h_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            let value = match item.split_once('/') {
                Some((a, b)) => a.trim().parse::<f64>().ok().zip(b.trim().parse::<f64>().ok()).map(|(a, b)| a / b),
                None => item.parse::<f64>().ok(),
            };
            value.ok_or_else(|| CliError::config(format!("cannot read coarse size '{item}'")))
        })
        .collect()
}

impl RunArgs {
    /// Config file (if any) with command-line overrides applied.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.variant {
            c.variants = v.variants();
        }
        if let Some(l) = self.eigs {
            c.eigs = l;
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(n) = self.fine_n {
            c.fine_n = n;
        }
        if let Some(h) = &self.h {
            c.h = parse_h_list(h)?;
        }
        if let Some(p) = &self.spec {
            c.domain = DomainConfig::SpecPath(p.clone());
        }
        if let Some(p) = &self.mesh {
            c.domain = DomainConfig::MshPath(p.clone());
        }
        if self.timing {
            c.timing = true;
        }
        Ok(c)
    }

    fn apply_layers(&self, c: &mut RunConfig) -> Result<(), CliError> {
        if let Some(text) = &self.layers {
            c.layers = LayersConfig::parse(text)?;
        }
        Ok(())
    }

    fn init_threads(&self) -> Result<(), CliError> {
        if let Some(t) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build_global()
                .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
        }
        Ok(())
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { run: args, disks } => {
            let mut c = args.resolve()?;
            if let Some(d) = disks {
                run::set_disks(&mut c, d)?;
            }
            let (spec, stats) = run::generate(&c, args.out.is_some())?;
            if args.out.is_none() {
                println!("{spec}");
            }
            eprintln!("{stats}");
        }
        Command::MeshInfo { run: args } => {
            let stats = run::mesh_info(&args.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
        }
        Command::Solve { run: args } => {
            let mut c = args.resolve()?;
            args.apply_layers(&mut c)?;
            run::single_cell_layers(&mut c);
            args.init_threads()?;
            for r in run::solve(&c)? {
                eprintln!("{}: e_L2 = {:.3e}, e_H1 = {:.3e}", r.variant, r.e_l2, r.e_h1);
            }
        }
        Command::Study { kind: StudyKind::Convergence { run: args } } => {
            let mut c = args.resolve()?;
            args.apply_layers(&mut c)?;
            args.init_threads()?;
            run::convergence(&c)?;
        }
        Command::Study { kind: StudyKind::Decay { run: args } } => {
            let mut c = args.resolve()?;
            if let Some(text) = &args.layers {
                c.decay_layers = match LayersConfig::parse(text)? {
                    LayersConfig::Uniform(m) => vec![m],
                    LayersConfig::Schedule(v) => v,
                    _ => return Err(CliError::config("study decay takes an integer or a list of layers")),
                };
            }
            args.init_threads()?;
            run::decay(&c)?;
        }
        Command::ExportBasis { run: args, block } => {
            let mut c = args.resolve()?;
            args.apply_layers(&mut c)?;
            run::single_cell_layers(&mut c);
            args.init_threads()?;
            run::export_basis(&c, block)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
