mod config;
mod report;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use abnsynth::analysis::{describe, perturb, reachable_space, stable_states, Perturbation, StateDescription, DEFAULT_NODE_CAP};
use abnsynth::bootstrap::bootstrap;
use abnsynth::comp::{synthesize, Problem};
use abnsynth::direct::synthesize_direct;
use abnsynth::fixtures::{cmp_config, cmp_network, cmp_state_set, synthetic, SyntheticShape, CMP_BOUNDS};
use abnsynth::graph::{export_dot, export_graphml, select_subset, StateGraph, Subset};
use abnsynth::ingest::{discretize, ExpressionMatrix, LabeledStateSet};
use abnsynth::model::{GeneSet, Network, Rule, State};
use abnsynth::{Error, Stage};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{GeneOverride, Mode, Overrides, RunConfig};
use report::Results;

#[derive(Parser)]
#[command(name = "abnsynth", version, about = "Synthesise Boolean network models from observed expression states")]
struct Cli {
    /// More log output (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Summary,
    Dot,
    Graphml,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Cmp,
    Synthetic,
}

#[derive(Subcommand)]
enum Command {
    /// Binarise an expression CSV into a state file
    Discretize {
        input: PathBuf,
        /// Time label of the initial cells
        #[arg(long)]
        initial: String,
        /// Time label of the final cells
        #[arg(long = "final")]
        final_label: String,
        /// Values above this count as expressed
        #[arg(long, default_value_t = 0.0)]
        cutoff: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build the state graph and print or export it
    Graph {
        states: PathBuf,
        #[arg(long, default_value = "all")]
        subset: Subset,
        #[arg(long, value_enum, default_value = "summary")]
        format: GraphFormat,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesise candidate update functions
    Synthesize {
        states: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// State space and stable states of a network
    Analyze {
        #[command(flatten)]
        input: NetworkInput,
    },
    /// Compare stable states before and after fixing genes
    Perturb {
        #[command(flatten)]
        input: NetworkInput,
        /// `Gene=0` or `Gene=1`; repeatable
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
    },
    /// Rerun synthesis on random subsamples of the states
    Bootstrap {
        states: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Fraction of non-initial states kept per run
        #[arg(long, default_value_t = 2.0 / 3.0)]
        keep: f64,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a built-in instance: state file, network and run config
    Generate {
        #[arg(value_enum)]
        fixture: Fixture,
        /// Directory for states.json, network.txt and run.toml
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 33)]
        genes: usize,
        #[arg(long, default_value_t = 1400)]
        states: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Rules file, one `Gene = rule` per line
    #[arg(long)]
    network: Option<PathBuf>,
    /// Results JSON; the first candidate of each gene is used
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(clap::Args)]
struct NetworkInput {
    #[command(flatten)]
    source: Source,
    /// Start states in hex, comma separated (default: the results' initial states)
    #[arg(long, value_delimiter = ',')]
    initial: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    cap: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 input, 3 no models, 4 solver, 5 size limits.
fn exit_code(e: &anyhow::Error) -> u8 {
    let Some(err) = e.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 2;
    };
    match err {
        Error::NoModelsAtBounds { .. } | Error::RepairLimit { .. } => 3,
        Error::Solver(_) => 4,
        Error::DirectTooLarge { .. } | Error::StateCapExceeded { .. } => 5,
        _ => 2,
    }
}

fn write_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Discretize {
            input,
            initial,
            final_label,
            cutoff,
            output,
        } => {
            let m = ExpressionMatrix::load(&input)?;
            let set = discretize(&m, &initial, &final_label, cutoff)?;
            set.save(&output)?;
            println!(
                "{} unique states from {} cells ({} initial, {} final)",
                set.len(),
                m.cells.len(),
                set.initial.len(),
                set.final_states.len()
            );
            Ok(())
        }
        Command::Graph {
            states,
            subset,
            format,
            output,
        } => {
            let set = select_subset(&LabeledStateSet::load(&states)?, subset);
            let g = StateGraph::from_state_set(&set);
            let text = match format {
                GraphFormat::Summary => {
                    let comps = g.connected_components();
                    format!(
                        "{} states, {} edges, {} components (largest {})\n",
                        g.node_count(),
                        g.edges().len(),
                        comps.len(),
                        comps.iter().map(Vec::len).max().unwrap_or(0)
                    )
                }
                GraphFormat::Dot => export_dot(&g, &set.labels),
                GraphFormat::Graphml => export_graphml(&g, &set.labels),
            };
            match output {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Synthesize {
            states,
            overrides,
            output,
        } => {
            let set = LabeledStateSet::load(&states)?;
            let rc = RunConfig::resolve(&overrides)?;
            let results = synthesize_set(&set, rc)?;
            write_json(&results, output.as_deref())?;
            if !results.verified {
                bail!(
                    "verification failed for {} of {} checked networks",
                    results.verification.failures,
                    results.verification.checked
                );
            }
            Ok(())
        }
        Command::Analyze { input } => {
            let (genes, net, initial) = load_network(&input)?;
            write_json(&analyze(&genes, &net, &initial, input.cap)?, None)
        }
        Command::Perturb { input, sets } => {
            let (genes, net, initial) = load_network(&input)?;
            let mut after = net.clone();
            for s in &sets {
                let (name, value) = s
                    .split_once('=')
                    .with_context(|| format!("expected Gene=0 or Gene=1, got `{s}`"))?;
                let value = match value.trim() {
                    "0" => false,
                    "1" => true,
                    v => bail!("perturbation value must be 0 or 1, got `{v}`"),
                };
                let gene = genes.index_of(name.trim())?;
                after = perturb(&after, Perturbation { gene, value })?;
            }
            let before = analyze(&genes, &net, &initial, input.cap)?;
            let after = analyze(&genes, &after, &initial, input.cap)?;
            let stable = |a: &Analysis| a.stable_states.iter().map(|d| d.state).collect::<BTreeSet<_>>();
            let (b, a) = (stable(&before), stable(&after));
            #[derive(Serialize)]
            struct Diff {
                perturbations: Vec<String>,
                before: Analysis,
                after: Analysis,
                lost: Vec<State>,
                gained: Vec<State>,
            }
            write_json(
                &Diff {
                    perturbations: sets,
                    lost: b.difference(&a).copied().collect(),
                    gained: a.difference(&b).copied().collect(),
                    before,
                    after,
                },
                None,
            )
        }
        Command::Bootstrap {
            states,
            overrides,
            keep,
            runs,
            output,
        } => {
            let set = LabeledStateSet::load(&states)?;
            let rc = RunConfig::resolve(&overrides)?;
            let cfg = rc.synthesis(&set.genes)?;
            if rc.mode == Mode::Direct {
                bail!("bootstrap runs the compositional synthesis only");
            }
            let seeds: Vec<u64> = (rc.seed..rc.seed + runs).collect();
            let report = bootstrap(&set, rc.finals, &cfg, keep, &seeds)?;
            #[derive(Serialize)]
            struct Out {
                report: abnsynth::bootstrap::BootstrapReport,
                config: RunConfig,
            }
            write_json(&Out { report, config: rc }, output.as_deref())
        }
        Command::Generate {
            fixture,
            output,
            genes,
            states,
            seed,
        } => generate(fixture, &output, genes, states, seed),
    }
}

fn synthesize_set(set: &LabeledStateSet, rc: RunConfig) -> Result<Results> {
    let cfg = rc.synthesis(&set.genes)?;
    let g = StateGraph::from_state_set(set);
    let problem = Problem::from_set(&g, set, rc.finals)?;
    let (initial, finals) = (problem.initial_states(), problem.final_states());
    Ok(match rc.mode {
        Mode::Compositional => {
            let out = synthesize(&problem, &cfg)?;
            report::compositional(&g, &initial, &finals, out, rc)
        }
        Mode::Direct => {
            let out = synthesize_direct(&problem, &cfg, &rc.direct())?;
            if let Some(stage) = out.infeasible {
                return Err(Error::NoModelsAtBounds {
                    stage,
                    detail: match stage {
                        Stage::Reachability => "no network reaches every final state within the step bound".into(),
                        _ => "no in-bounds functions meet the thresholds".into(),
                    },
                }
                .into());
            }
            report::direct(&g, &initial, &finals, out, rc)
        }
    })
}

#[derive(Serialize)]
struct Analysis {
    initial: Vec<State>,
    states: usize,
    transitions: usize,
    stable_states: Vec<StateDescription>,
}

fn analyze(genes: &GeneSet, net: &Network, initial: &[State], cap: usize) -> Result<Analysis> {
    let ts = reachable_space(net, initial, cap)?;
    Ok(Analysis {
        initial: initial.to_vec(),
        states: ts.states.len(),
        transitions: ts.arcs.len(),
        stable_states: stable_states(&ts).into_iter().map(|s| describe(genes, s)).collect(),
    })
}

fn parse_network(text: &str) -> Result<(GeneSet, Network)> {
    let names: Vec<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .filter_map(|l| l.split_once('=').map(|(n, _)| n.trim().to_string()))
        .collect();
    let genes = GeneSet::new(names)?;
    let net = Network::parse(text, &genes)?;
    Ok((genes, net))
}

fn load_network(input: &NetworkInput) -> Result<(GeneSet, Network, Vec<State>)> {
    let (genes, net, default_initial) = if let Some(p) = &input.source.network {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let (genes, net) = parse_network(&text)?;
        (genes, net, Vec::new())
    } else {
        let p = input.source.results.as_ref().expect("clap requires one input");
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let results: Results = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let genes = GeneSet::new(results.genes.clone())?;
        let rules = results
            .candidate_functions(&genes)?
            .into_iter()
            .enumerate()
            .map(|(i, fs)| {
                fs.into_iter()
                    .next()
                    .map(Rule::Function)
                    .with_context(|| format!("no candidate for {}", genes.name(i)))
            })
            .collect::<Result<Vec<_>>>()?;
        (genes, Network::new(rules), results.initial)
    };
    let initial = if input.initial.is_empty() {
        default_initial
    } else {
        input
            .initial
            .iter()
            .map(|h| State::from_hex(h))
            .collect::<abnsynth::Result<Vec<_>>>()?
    };
    if initial.is_empty() {
        bail!("no start states; pass --initial");
    }
    let full = genes.full_mask();
    if let Some(s) = initial.iter().find(|s| s.0 & !full != 0) {
        bail!("state {} has bits beyond the {} genes", s.to_hex(), genes.len());
    }
    Ok((genes, net, initial))
}

fn generate(fixture: Fixture, dir: &Path, genes: usize, states: usize, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let (set, network, run) = match fixture {
        Fixture::Cmp => {
            let set = cmp_state_set();
            let cfg = cmp_config();
            let mut run = RunConfig {
                finals: abnsynth::comp::Targets::AllNonInitial,
                ..RunConfig::default()
            };
            for (i, &(a, r)) in CMP_BOUNDS.iter().enumerate() {
                run.genes.insert(
                    set.genes.name(i).to_string(),
                    GeneOverride {
                        max_activators: Some(a),
                        max_repressors: Some(r),
                        threshold: Some(cfg.genes[i].threshold),
                        ..GeneOverride::default()
                    },
                );
            }
            (set, cmp_network(), run)
        }
        Fixture::Synthetic => {
            let shape = SyntheticShape {
                genes,
                states,
                seed,
                ..SyntheticShape::default()
            };
            let p = synthetic(&shape)?;
            let mut run = RunConfig::default();
            for (i, gc) in p.config.genes.iter().enumerate() {
                let names = |ix: &[usize]| ix.iter().map(|&j| p.set.genes.name(j).to_string()).collect();
                run.genes.insert(
                    p.set.genes.name(i).to_string(),
                    GeneOverride {
                        activators: Some(names(&gc.activators)),
                        repressors: Some(names(&gc.repressors)),
                        max_activators: Some(gc.max_activators),
                        max_repressors: Some(gc.max_repressors),
                        threshold: Some(gc.threshold),
                    },
                );
            }
            (p.set, p.network, run)
        }
    };
    set.save(dir.join("states.json"))?;
    std::fs::write(dir.join("network.txt"), network.display(&set.genes))?;
    std::fs::write(dir.join("run.toml"), toml::to_string(&run)?)?;
    println!("{} states written to {}", set.len(), dir.display());
    Ok(())
}
