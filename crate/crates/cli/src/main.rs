//! `mixgraph` command-line front end.
//!
//! Exit codes: 0 success or affirmative verdict, 1 negative verdict or failed
//! synthesis, 2 usage or input error, 3 search budget exhausted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mixgraph::graph::format_sequence;
use mixgraph::hardness::{dinh_counterexample, reduce_3dm, reduce_3dm_sigma, ThreeDMInstance};
use mixgraph::oracle::{reachable_bfs, OracleStatus, DEFAULT_MAX_STATES};
use mixgraph::synthesis::{perfect_mix, StrategyRegistry, SynthesisError};
use mixgraph::{depth1_decide, is_perfectly_mixable, Configuration, MixingGraph};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mixgraph", version, about = "Perfect-mixing analysis and synthesis for droplet mixers")]
struct Cli {
    /// Output style on stdout.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide perfect mixability of a configuration file.
    Check { config: PathBuf },
    /// Synthesize a perfect-mixing graph.
    Synth {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long, default_value = "poly")]
        strategy: String,
        /// Print the mixing sequence, one `mix a b -> mid` line per step.
        #[arg(long)]
        log_steps: bool,
    },
    /// Run a graph on an input configuration.
    Simulate {
        graph: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Exhaustive reachability search; the target defaults to perfect mixing.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        extra_bits: u32,
        #[arg(long, default_value_t = DEFAULT_MAX_STATES)]
        max_states: usize,
    },
    /// Write the depth counterexample instance for parameter d.
    Counterexample {
        #[arg(long)]
        d: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Reduce a numerical 3D-matching instance to a reachability instance.
    #[command(name = "reduce-3dm")]
    Reduce3dm {
        instance: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Target depth; 1 gives the depth-one reduction.
        #[arg(long, default_value_t = 1)]
        sigma: u32,
    },
    /// Decide whether a depth-one graph converts one configuration into another.
    Depth1 { input: PathBuf, target: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type Outcome = Result<(u8, String), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<Configuration, Failure> {
    read(path)?
        .parse()
        .map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn json_text(v: serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("json value serializes");
    s.push('\n');
    s
}

fn check(config: &Path, format: Format) -> Outcome {
    let c = read_config(config)?;
    let v = is_perfectly_mixable(&c).map_err(|e| usage(e.to_string()))?;
    let code = if v.mixable { 0 } else { 1 };
    let out = match format {
        Format::Text => format!("{v}\n"),
        Format::Json => json_text(json!({ "configuration": c, "verdict": v })),
    };
    Ok((code, out))
}

fn synth(config: &Path, output: &Path, dot: Option<&Path>, strategy: &str, log_steps: bool, format: Format) -> Outcome {
    let c = read_config(config)?;
    if StrategyRegistry::with_defaults().get(strategy).is_none() {
        let names = StrategyRegistry::with_defaults().names().join(", ");
        return Err(usage(format!("unknown strategy `{strategy}` (available: {names})")));
    }
    let r = match perfect_mix(&c, strategy) {
        Ok(r) => r,
        Err(SynthesisError::Unmixable(v)) => {
            return Err(Failure {
                code: 1,
                message: v.to_string(),
            })
        }
        Err(e) => {
            return Err(Failure {
                code: 1,
                message: format!("synthesis failed: {e}"),
            })
        }
    };
    write(output, &r.graph.to_json())?;
    let sim = r.graph.simulate_config(&c).map_err(|e| usage(e.to_string()))?;
    if let Some(dot) = dot {
        write(dot, &r.graph.to_dot(Some(&sim.node_values)))?;
    }
    let m = r.graph.metrics_config(&c).map_err(|e| usage(e.to_string()))?;
    let out = match format {
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "strategy: {}", r.strategy).unwrap();
            writeln!(s, "{}", r.verdict).unwrap();
            writeln!(s, "steps: {}", r.steps()).unwrap();
            writeln!(s, "mixers: {}", m.mixers).unwrap();
            writeln!(s, "depth: {}", m.depth).unwrap();
            writeln!(s, "max precision: {}", m.max_precision).unwrap();
            writeln!(s, "output: {}", sim.outputs).unwrap();
            if log_steps {
                s.push_str(&format_sequence(&r.sequence));
            }
            s
        }
        Format::Json => {
            let mut v = json!({
                "strategy": r.strategy,
                "verdict": r.verdict,
                "path": r.path,
                "steps": r.steps(),
                "metrics": m,
                "output": sim.outputs,
            });
            if log_steps {
                v["sequence"] = json!(r.sequence);
            }
            json_text(v)
        }
    };
    Ok((0, out))
}

fn simulate(graph: &Path, input: &Path, format: Format) -> Outcome {
    let g = MixingGraph::from_json(&read(graph)?).map_err(|e| usage(format!("{}: {e}", graph.display())))?;
    let c = read_config(input)?;
    let sim = g.simulate_config(&c).map_err(|e| usage(e.to_string()))?;
    let m = g.metrics_config(&c).map_err(|e| usage(e.to_string()))?;
    let out = match format {
        Format::Text => format!(
            "output: {}\nmixers: {}\ndepth: {}\nmax precision: {}\n",
            sim.outputs, m.mixers, m.depth, m.max_precision
        ),
        Format::Json => json_text(json!({ "output": sim.outputs, "metrics": m })),
    };
    Ok((0, out))
}

fn oracle(config: &Path, target: Option<&Path>, extra_bits: u32, max_states: usize, format: Format) -> Outcome {
    let c = read_config(config)?;
    let t = match target {
        Some(p) => read_config(p)?,
        None => match c.mean() {
            Some(mu) => Configuration::uniform(c.n(), mu),
            None => {
                let msg = "average has no finite binary representation; unreachable\n";
                return Ok((1, msg.to_string()));
            }
        },
    };
    let v = reachable_bfs(&c, &t, extra_bits, max_states);
    let (code, label) = match &v.status {
        OracleStatus::Reachable(_) => (0, "reachable"),
        OracleStatus::UnreachableWithinBound => (1, "unreachable within precision bound"),
        OracleStatus::UnreachableProven => (1, "unreachable (proven)"),
        OracleStatus::BudgetExceeded => (3, "inconclusive: state budget exhausted"),
    };
    let out = match format {
        Format::Text => {
            let mut s = format!("{label}\nstates explored: {}\n", v.states_explored);
            if let Some(w) = v.witness() {
                s.push_str(&format_sequence(w));
            }
            s
        }
        Format::Json => json_text(json!({
            "target": t,
            "extra_bits": extra_bits,
            "verdict": v,
        })),
    };
    Ok((code, out))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))
}

fn counterexample(d: u32, dir: &Path, format: Format) -> Outcome {
    let c = dinh_counterexample(d).map_err(|e| usage(e.to_string()))?;
    ensure_dir(dir)?;
    write(&dir.join("inputs.txt"), &c.inputs.to_text())?;
    write(&dir.join("target.txt"), &c.target.to_text())?;
    write(&dir.join("graph.json"), &c.graph.to_json())?;
    let m = c.graph.metrics_config(&c.inputs).map_err(|e| usage(e.to_string()))?;
    let out = match format {
        Format::Text => format!(
            "inputs: {}\ntarget: {}\nmixers: {}\ndepth: {}\n",
            c.inputs, c.target, m.mixers, m.depth
        ),
        Format::Json => json_text(json!({ "inputs": c.inputs, "target": c.target, "metrics": m })),
    };
    Ok((0, out))
}

fn reduce(instance: &Path, dir: &Path, sigma: u32, format: Format) -> Outcome {
    let inst: ThreeDMInstance = read(instance)?
        .parse()
        .map_err(|e| usage(format!("{}: {e}", instance.display())))?;
    let (i, t) = if sigma == 1 {
        reduce_3dm(&inst)
    } else {
        reduce_3dm_sigma(&inst, sigma).map_err(|e| usage(e.to_string()))?
    };
    ensure_dir(dir)?;
    write(&dir.join("inputs.txt"), &i.to_text())?;
    write(&dir.join("target.txt"), &t.to_text())?;
    let out = match format {
        Format::Text => format!("inputs: {i}\ntarget: {t}\n"),
        Format::Json => json_text(json!({ "inputs": i, "target": t })),
    };
    Ok((0, out))
}

fn depth1(input: &Path, target: &Path, format: Format) -> Outcome {
    let i = read_config(input)?;
    let t = read_config(target)?;
    let m = depth1_decide(&i, &t);
    let code = if m.is_some() { 0 } else { 1 };
    let out = match (format, &m) {
        (Format::Json, _) => json_text(json!({ "reachable": m.is_some(), "matching": m })),
        (Format::Text, None) => "no depth-one graph\n".to_string(),
        (Format::Text, Some(m)) => {
            let mut s = String::from("depth-one graph found\n");
            for (a, b) in &m.pairs {
                writeln!(s, "mix {a} {b} -> {}", a.mid(b)).unwrap();
            }
            for w in &m.wires {
                writeln!(s, "wire {w}").unwrap();
            }
            s
        }
    };
    Ok((code, out))
}

fn run(cli: Cli) -> Outcome {
    let f = cli.format;
    match cli.command {
        Command::Check { config } => check(&config, f),
        Command::Synth {
            config,
            output,
            dot,
            strategy,
            log_steps,
        } => synth(&config, &output, dot.as_deref(), &strategy, log_steps, f),
        Command::Simulate { graph, input } => simulate(&graph, &input, f),
        Command::Oracle {
            config,
            target,
            extra_bits,
            max_states,
        } => oracle(&config, target.as_deref(), extra_bits, max_states, f),
        Command::Counterexample { d, output } => counterexample(d, &output, f),
        Command::Reduce3dm {
            instance,
            output,
            sigma,
        } => reduce(&instance, &output, sigma, f),
        Command::Depth1 { input, target } => depth1(&input, &target, f),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((code, out)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
