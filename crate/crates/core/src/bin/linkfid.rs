use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linkfid::cli::{self, BenchSpec, CliError, EvolveSpec, GrapeSpec, MetricsSpec, Overrides, ScenarioKind, ScenarioSpec};
use linkfid::network::{LinkSpec, NetworkSpec, NodeSpec};
use linkfid::scenario::{GridSpec, NoiseSpec, StateSpec};

/// Link-fidelity scenarios: trace distance, fidelity bounds, Lindblad
/// evolution, network protocols and pulse optimization.
#[derive(Parser)]
#[command(name = "linkfid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Timing {
    #[arg(long, default_value_t = 2.0)]
    t_end: f64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
}

#[derive(Args)]
struct Noise {
    #[arg(long, default_value_t = 1.0)]
    dephasing: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = 0.0)]
    depolarizing: f64,
}

impl Noise {
    fn spec(&self) -> NoiseSpec {
        NoiseSpec {
            dephasing: self.dephasing,
            damping: self.damping,
            depolarizing: self.depolarizing,
            ..NoiseSpec::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file
    Run {
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Overrides grid steps, bench points or grape iterations
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Static metrics for one pair of states
    Metrics {
        #[arg(long, default_value = "zero")]
        rho: String,
        #[arg(long, default_value = "plus")]
        sigma: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.5)]
        prior: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Trace distance and fidelity of two qubits under Lindblad noise
    Evolve {
        #[arg(long, default_value = "plus")]
        rho: String,
        #[arg(long, default_value = "minus")]
        sigma: String,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        timing: Timing,
        #[command(flatten)]
        common: Common,
    },
    /// Star network around an EPR source with noisy links
    Network {
        /// Non-source nodes
        #[arg(long, default_value_t = 2)]
        nodes: usize,
        #[command(flatten)]
        noise: Noise,
        #[command(flatten)]
        timing: Timing,
        #[command(flatten)]
        common: Common,
    },
    /// As-published bounds against the Fuchs–van de Graaf curves
    BenchFvdg {
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Qubit flip by gradient pulse optimization
    Grape {
        #[arg(long, default_value_t = 10)]
        slices: usize,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn empty(kind: ScenarioKind, seed: Option<u64>) -> ScenarioSpec {
    ScenarioSpec {
        kind,
        seed: seed.unwrap_or(0),
        grid: None,
        metrics: None,
        evolve: None,
        network: None,
        protocol: None,
        bench_fvdg: None,
        grape: None,
    }
}

fn grid(t: &Timing) -> Option<GridSpec> {
    Some(GridSpec {
        t_start: 0.0,
        t_end: t.t_end,
        steps: t.steps,
    })
}

/// Source at the origin, `n` nodes on a line at distances 1..=n, states
/// alternating |+⟩/|−⟩, one noisy link from the source to each node.
fn star_network(n: usize, noise: NoiseSpec) -> NetworkSpec {
    let mut nodes = vec![NodeSpec {
        id: "S".into(),
        position: [0.0, 0.0],
        state: Some(StateSpec::named("plus")),
        noise: None,
    }];
    let mut links = Vec::new();
    for k in 1..=n {
        let id = format!("N{k}");
        nodes.push(NodeSpec {
            id: id.clone(),
            position: [k as f64, 0.0],
            state: Some(StateSpec::named(if k % 2 == 1 { "minus" } else { "plus" })),
            noise: None,
        });
        links.push(LinkSpec {
            id: None,
            a: "S".into(),
            b: id,
            channel: None,
            noise: Some(noise.clone()),
        });
    }
    NetworkSpec {
        epr_source: "S".into(),
        nodes,
        links,
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let (spec, out) = match command {
        Command::Run { spec, common, steps } => {
            let report = cli::run(&spec, &common.out, Overrides { seed: common.seed, steps })?;
            print!("{}", report.summary);
            return Ok(());
        }
        Command::Metrics {
            rho,
            sigma,
            dim,
            prior,
            common,
        } => {
            let mut s = empty(ScenarioKind::Metrics, common.seed);
            s.metrics = Some(MetricsSpec {
                rho: StateSpec::Named(rho),
                sigma: StateSpec::Named(sigma),
                dim,
                prior,
                channel: None,
            });
            (s, common.out)
        }
        Command::Evolve {
            rho,
            sigma,
            noise,
            timing,
            common,
        } => {
            let mut s = empty(ScenarioKind::Evolve, common.seed);
            s.grid = grid(&timing);
            s.evolve = Some(EvolveSpec {
                rho: StateSpec::Named(rho),
                sigma: StateSpec::Named(sigma),
                noise: noise.spec(),
            });
            (s, common.out)
        }
        Command::Network {
            nodes,
            noise,
            timing,
            common,
        } => {
            let mut s = empty(ScenarioKind::Network, common.seed);
            s.grid = grid(&timing);
            s.network = Some(star_network(nodes, noise.spec()));
            (s, common.out)
        }
        Command::BenchFvdg { points, common } => {
            let mut s = empty(ScenarioKind::BenchFvdg, common.seed);
            s.bench_fvdg = Some(BenchSpec { grid: None, points });
            (s, common.out)
        }
        Command::Grape {
            slices,
            horizon,
            max_iters,
            common,
        } => {
            let mut s = empty(ScenarioKind::Grape, common.seed);
            s.grape = Some(GrapeSpec {
                slices,
                horizon,
                max_iters,
                ..GrapeSpec::default()
            });
            (s, common.out)
        }
    };
    let report = cli::execute(&spec)?;
    report.write(&out)?;
    print!("{}", report.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Cli::parse();
    match dispatch(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
