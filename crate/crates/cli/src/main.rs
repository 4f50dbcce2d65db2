//! `hydroloc`: run localization sweeps, dump scenarios and reproduce the shipped figures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hydroloc::completion::{build_graph, complete_matrix};
use hydroloc::config::ExperimentConfig;
use hydroloc::crlb::scenario_crlb;
use hydroloc::network::NodePose;
use hydroloc::recipes::{recipe, run_figure, FIGURE_IDS};
use hydroloc::sweep::{draw_trial, emit_csv, emit_plot_data, run_sweep, to_csv, Method};

#[derive(Parser)]
#[command(name = "hydroloc", version, about = "Hybrid underwater sensor-network localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep described by a TOML file.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo trials per sweep point.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated methods to run.
        #[arg(long, value_delimiter = ',', value_parser = parse_method)]
        methods: Option<Vec<Method>>,
        /// Output directory for results.csv and plot data; CSV goes to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one scenario and write its nodes and observations.
    ScenarioDump {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "scenario")]
        out: PathBuf,
        /// Also write the completed distance matrix.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Cramér-Rao bound of one scenario.
    Crlb {
        #[command(flatten)]
        common: Common,
        /// Print the bound of every node.
        #[arg(long)]
        per_node: bool,
    },
    /// Run a shipped figure recipe, or `all`, and check its trend.
    Recipe {
        /// One of fig3..fig9, or `all`.
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment TOML; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.scenario.seed = seed;
        }
        Ok(cfg)
    }
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: hydroloc::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep {
            common,
            trials,
            methods,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(t) = trials {
                cfg.sweep.trials = t;
            }
            if let Some(m) = methods {
                cfg.sweep.methods = m;
            }
            cfg.validate()?;
            let spec = cfg.sweep_spec();
            log::info!(
                "sweeping {} over {} points x {} trials",
                spec.axis.as_str(),
                spec.values.len(),
                spec.trials
            );
            let result = run_sweep(&spec)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    emit_csv(&result, &dir.join("results.csv"))?;
                    emit_plot_data(&result, &dir)?;
                    fs::write(dir.join("config.toml"), cfg.to_toml())
                        .with_context(|| format!("writing {}", dir.join("config.toml").display()))?;
                    let failed = result.rows.iter().filter(|r| !r.status.is_ok()).count();
                    eprintln!("{} rows ({failed} failed) written to {}", result.rows.len(), dir.display());
                }
                None => print!("{}", to_csv(&result.rows)),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ScenarioDump {
            common,
            out,
            dump_matrix,
        } => {
            let cfg = common.load()?;
            scenario_dump(&cfg, &out, dump_matrix)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Crlb { common, per_node } => {
            let cfg = common.load()?;
            let (nodes, obs) = draw_trial(&cfg.scenario)?;
            let report = scenario_crlb(
                &nodes,
                &obs,
                &cfg.scenario.noise_law(),
                &cfg.scenario.variance_multipliers,
            )?;
            println!("h_crlb_m {:.8e}", report.h_crlb);
            println!("trace_m2 {:.8e}", report.raw_trace);
            if per_node {
                println!("node,role,bound_m");
                for (n, b) in nodes.iter().zip(&report.per_node_bound) {
                    println!("{},{},{:.8e}", n.id, n.role.as_str(), b);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Recipe { id, out } => {
            let ids: Vec<&str> = if id == "all" {
                FIGURE_IDS.to_vec()
            } else {
                vec![id.as_str()]
            };
            let mut all_pass = true;
            for id in ids {
                let r = recipe(id)?;
                log::info!("{}: {}", r.id, r.description);
                let outcome = run_figure(&r, out.as_deref()).with_context(|| format!("recipe {id}"))?;
                let verdict = if outcome.check.passed { "PASS" } else { "FAIL" };
                println!("{id}: {verdict}");
                for line in outcome.check.detail.lines() {
                    println!("  {line}");
                }
                all_pass &= outcome.check.passed;
            }
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn scenario_dump(cfg: &ExperimentConfig, out: &Path, dump_matrix: bool) -> Result<()> {
    let (nodes, obs) = draw_trial(&cfg.scenario)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    write(&out.join("nodes.csv"), &nodes_csv(&nodes))?;

    let mut text = String::from("a,b,technology,measured_range,variance,weight\n");
    for o in &obs {
        let _ = writeln!(
            text,
            "{},{},{},{:.8e},{:.8e},{:.8e}",
            o.a,
            o.b,
            o.technology.as_str(),
            o.measured_range,
            o.variance,
            o.weight
        );
    }
    write(&out.join("observations.csv"), &text)?;

    if dump_matrix {
        let graph = build_graph(&obs, nodes.len())?;
        let components = graph.components();
        if components.len() > 1 {
            bail!(
                "network is disconnected into {} components; no complete matrix exists",
                components.len()
            );
        }
        complete_matrix(&graph)?.write_csv(&out.join("matrix.csv"))?;
    }
    eprintln!("{} nodes, {} observations written to {}", nodes.len(), obs.len(), out.display());
    Ok(())
}

fn nodes_csv(nodes: &[NodePose]) -> String {
    let mut text = String::from("id,role,x,y,z\n");
    for n in nodes {
        let p = n.position;
        let _ = writeln!(
            text,
            "{},{},{:.8e},{:.8e},{:.8e}",
            n.id,
            n.role.as_str(),
            p.x,
            p.y,
            p.z
        );
    }
    text
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
