//! `tptg`: check, sweep, synthesize and simulate turn-based probabilistic
//! timed games.
//!
//! Exit codes: 0 on success, 1 on usage or model errors, 2 when value
//! iteration did not converge.

mod source;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use tptg::check::{build_games, check_property, CheckOptions, Checked};
use tptg::digital::{self, DEFAULT_STATE_LIMIT};
use tptg::dsl::Property;
use tptg::lab::{estimate, simulate, write_trace, MemorylessPolicy, Policy, UniformPolicy};
use tptg::solver::{profile_from_json, SolveOptions, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use tptg::{Diagnostic, Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use source::{parse_coalition, parse_rational, ModelArgs};

#[derive(Parser, Debug)]
#[command(name = "tptg", version, about = "Verification of turn-based probabilistic timed games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Debug)]
struct SolveArgs {
    /// Absolute tolerance of value iteration.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Largest number of digital states to explore.
    #[arg(long, env = "TPTG_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
    state_limit: usize,
}

impl SolveArgs {
    fn options(&self) -> Result<CheckOptions> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Usage(format!("--tol must be positive, got {}", self.tol)));
        }
        Ok(CheckOptions { solve: SolveOptions { tol: self.tol, max_iters: self.max_iters }, state_limit: self.state_limit })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Param {
    #[value(name = "T")]
    T,
    #[value(name = "p")]
    P,
    #[value(name = "k1")]
    K1,
    #[value(name = "k2")]
    K2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every property of the model (or those given with --prop).
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write the results as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Solve one property for a range of parameter values and write CSV.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_enum)]
        param: Param,
        /// Comma-separated values; integer ranges `a..b` are inclusive.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Semicolon-separated coalitions, one column each (e.g. `;O;O,R`).
        #[arg(long)]
        coalitions: Option<String>,
        /// Output file (default: standard output).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Solve one property and write the optimal strategy profile.
    Synth {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Output file (default: standard output).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Simulate a strategy profile on the game of one property.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, env = "TPTG_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: usize,
        /// Strategy JSON written by `synth`.
        #[arg(long, conflicts_with = "uniform", required_unless_present = "uniform")]
        strategy: Option<PathBuf>,
        /// Pick uniformly among the available actions everywhere.
        #[arg(long)]
        uniform: bool,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Write the first run as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the estimate as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Build the digital game and write it as JSON.
    ExportGame {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, env = "TPTG_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: usize,
        /// Output file (default: standard output).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Parse, compile and check the model assumptions.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Also build the digital game and report its size.
        #[arg(long)]
        build: bool,
        #[arg(long, env = "TPTG_STATE_LIMIT", default_value_t = DEFAULT_STATE_LIMIT)]
        state_limit: usize,
    },
}

/// Whether every solve converged.
type Converged = bool;

fn warn(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{d}");
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json(path: Option<&Path>, doc: &Value) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// `x` with 10 significant digits, fixed notation.
fn sig10(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (9 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn result_json(prop: &Property, c: &Checked) -> Value {
    let mut doc = c.result.to_json(&c.game);
    doc["property"] = json!(prop.to_string());
    doc["states"] = json!(c.digital.stats.states);
    doc
}

fn cmd_check(model: &ModelArgs, solve: &SolveArgs, json_path: Option<&Path>) -> Result<Converged> {
    let opts = solve.options()?;
    let compiled = model.load()?;
    warn(&compiled.warnings);
    if compiled.props.is_empty() {
        return Err(Error::Usage("the model has no property; give one with --prop".into()));
    }
    let mut all = true;
    let mut docs = Vec::new();
    for prop in &compiled.props {
        let c = check_property(&compiled.tptg, prop, &opts)?;
        warn(&c.warnings);
        let s = &c.digital.stats;
        println!("{prop}");
        println!("  value      {:.6}", c.value());
        println!(
            "  converged  {} ({} iterations, residual {:.3e})",
            if c.result.converged { "yes" } else { "NO" },
            c.result.iterations,
            c.result.residual
        );
        println!("  states     {} ({} transitions, {} deadlocks)", s.states, s.transitions, s.deadlocks);
        all &= c.result.converged;
        docs.push(result_json(prop, &c));
    }
    if let Some(path) = json_path {
        let doc = if docs.len() == 1 { docs.remove(0) } else { Value::Array(docs) };
        write_json(Some(path), &doc)?;
    }
    Ok(all)
}

fn sweep_values(param: Param, text: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let bad = || Error::Usage(format!("bad range `{item}`"));
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            out.extend((a..=b).map(|v| v.to_string()));
        } else {
            out.push(item.to_string());
        }
    }
    if param != Param::P {
        if let Some(bad) = out.iter().find(|v| v.parse::<u32>().is_err()) {
            return Err(Error::Usage(format!("`{bad}` is not a natural number")));
        }
    }
    Ok(out)
}

fn coalition_label(co: &[String]) -> String {
    format!("<{}>", co.join("+"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    model: &ModelArgs,
    solve: &SolveArgs,
    param: Param,
    values: &str,
    coalitions: Option<&str>,
    csv: Option<&Path>,
) -> Result<Converged> {
    let opts = solve.options()?;
    let values = sweep_values(param, values)?;
    let base = ModelArgs::one_prop(&model.load()?)?;
    let columns: Vec<Vec<String>> = match coalitions {
        Some(list) => list.split(';').map(parse_coalition).collect(),
        None => vec![base.coalition.clone()],
    };
    let mut out = output(csv)?;
    let name = match param {
        Param::T => "T",
        Param::P => "p",
        Param::K1 => "k1",
        Param::K2 => "k2",
    };
    let header: Vec<String> = std::iter::once(name.to_string()).chain(columns.iter().map(|c| coalition_label(c))).collect();
    writeln!(out, "{}", header.join(","))?;
    let mut all = true;
    let mut seen = std::collections::BTreeSet::new();
    for v in &values {
        let (p, k1, k2, bound) = match param {
            Param::T => (None, None, None, Some(v.parse::<u64>().expect("checked"))),
            Param::P => (Some(parse_rational(v)?), None, None, None),
            Param::K1 => (None, Some(v.parse::<u32>().expect("checked")), None, None),
            Param::K2 => (None, None, Some(v.parse::<u32>().expect("checked")), None),
        };
        let compiled = model.compile(model.model_with(p.as_ref(), k1, k2)?)?;
        let mut prop = ModelArgs::one_prop(&compiled)?;
        if bound.is_some() {
            prop.bound = bound;
        }
        let mut row = vec![v.clone()];
        for co in &columns {
            if let Some(bad) = co.iter().find(|c| !compiled.tptg.players.contains(c)) {
                return Err(Error::Usage(format!("unknown player `{bad}`")));
            }
            prop.coalition = co.clone();
            let c = check_property(&compiled.tptg, &prop, &opts)?;
            for d in &c.result.warnings {
                if seen.insert(d.to_string()) {
                    eprintln!("{d}");
                }
            }
            all &= c.result.converged;
            row.push(sig10(c.value()));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(all)
}

fn cmd_synth(model: &ModelArgs, solve: &SolveArgs, json_path: Option<&Path>) -> Result<Converged> {
    let opts = solve.options()?;
    let compiled = model.load()?;
    warn(&compiled.warnings);
    let prop = ModelArgs::one_prop(&compiled)?;
    let c = check_property(&compiled.tptg, &prop, &opts)?;
    warn(&c.warnings);
    if !c.result.converged {
        return Ok(false);
    }
    eprintln!("{prop}: value {:.6}", c.value());
    write_json(json_path, &result_json(&prop, &c))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    model: &ModelArgs,
    state_limit: usize,
    strategy: Option<&Path>,
    samples: usize,
    seed: u64,
    max_steps: usize,
    trace: Option<&Path>,
    json_path: Option<&Path>,
) -> Result<Converged> {
    if samples == 0 {
        return Err(Error::Usage("--samples must be at least 1".into()));
    }
    let compiled = model.load()?;
    warn(&compiled.warnings);
    let prop = ModelArgs::one_prop(&compiled)?;
    let (_, game, objective) = build_games(&compiled.tptg, &prop, state_limit)?;
    let target = game.target(&objective.target)?;
    let mut policy: Box<dyn Policy> = match strategy {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let doc: Value = serde_json::from_str(&text)?;
            let profile = profile_from_json(&game, &doc)?;
            let missing = (0..game.num_states()).filter(|&s| !game.choices[s].is_empty() && profile.choice[s].is_none());
            if let Some(s) = missing.into_iter().next() {
                return Err(Error::Usage(format!("strategy does not cover state {s} ({})", game.names[s])));
            }
            Box::new(MemorylessPolicy(profile))
        }
        None => Box::new(UniformPolicy),
    };
    let est = estimate(&game, policy.as_mut(), &target, samples, max_steps, seed)?;
    println!("seed         {seed}");
    println!("property     {prop}");
    println!("samples      {} ({} reached, {} deadlocked, {} censored)", est.samples, est.hits, est.deadlocks, est.censored);
    println!("probability  {} ± {} (99%)", sig10(est.probability.mean), sig10(est.probability.half_width));
    if let Some(p) = est.price {
        println!("price        {} ± {} (99%, over runs that reached)", sig10(p.mean), sig10(p.half_width));
    }
    if let Some(path) = trace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let run = simulate(&game, policy.as_mut(), &target, max_steps, &mut rng)?;
        let mut out = output(Some(path))?;
        write_trace(&game, &run, &mut out)?;
        out.flush()?;
    }
    if let Some(path) = json_path {
        let mut doc = serde_json::to_value(&est)?;
        doc["seed"] = json!(seed);
        doc["property"] = json!(prop.to_string());
        write_json(Some(path), &doc)?;
    }
    Ok(true)
}

fn cmd_export(model: &ModelArgs, state_limit: usize, json_path: Option<&Path>) -> Result<Converged> {
    let compiled = model.load()?;
    warn(&compiled.warnings);
    let dg = match compiled.props.as_slice() {
        [_] => build_games(&compiled.tptg, &compiled.props[0], state_limit)?.0,
        _ => digital::build(&compiled.tptg, (!compiled.tptg.price_names.is_empty()).then_some(0), state_limit)?,
    };
    warn(&dg.warnings);
    let mut out = output(json_path)?;
    writeln!(out, "{}", dg.game.to_json_string())?;
    out.flush()?;
    Ok(true)
}

fn cmd_validate(model: &ModelArgs, build: bool, state_limit: usize) -> Result<Converged> {
    let compiled = model.load()?;
    warn(&compiled.warnings);
    let m = &compiled.tptg;
    let k = m.max_constants();
    let clocks: Vec<String> = m.clocks.iter().zip(&k).map(|(c, k)| format!("{c} (k={k})")).collect();
    println!("players    {}", m.players.join(", "));
    println!("clocks     {}", clocks.join(", "));
    println!("prices     {}", m.price_names.join(", "));
    println!("locations  {}", m.locations.len());
    println!("edges      {}", m.num_edges());
    println!("labels     {}", m.labels.keys().cloned().collect::<Vec<_>>().join(", "));
    for p in &compiled.props {
        println!("property   {p}");
    }
    if build {
        let dg = digital::build(m, None, state_limit)?;
        warn(&dg.warnings);
        let s = &dg.stats;
        println!("states     {} ({} transitions, {} branches, {} deadlocks)", s.states, s.transitions, s.branches, s.deadlocks);
        for (player, n) in &s.states_per_player {
            println!("  {player:<8} {n}");
        }
    }
    println!("ok");
    Ok(true)
}

fn run(cli: Cli) -> Result<Converged> {
    match &cli.command {
        Command::Check { model, solve, json } => cmd_check(model, solve, json.as_deref()),
        Command::Sweep { model, solve, param, values, coalitions, csv } => {
            cmd_sweep(model, solve, *param, values, coalitions.as_deref(), csv.as_deref())
        }
        Command::Synth { model, solve, json } => cmd_synth(model, solve, json.as_deref()),
        Command::Simulate { model, state_limit, strategy, uniform: _, samples, seed, max_steps, trace, json } => {
            cmd_simulate(model, *state_limit, strategy.as_deref(), *samples, *seed, *max_steps, trace.as_deref(), json.as_deref())
        }
        Command::ExportGame { model, state_limit, json } => cmd_export(model, *state_limit, json.as_deref()),
        Command::Validate { model, build, state_limit } => cmd_validate(model, *build, *state_limit),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: value iteration did not converge");
            ExitCode::from(2)
        }
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn significant_digits() {
        assert_eq!(sig10(18.0), "18.00000000");
        assert_eq!(sig10(0.1), "0.1000000000");
        assert_eq!(sig10(1720.0), "1720.000000");
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(f64::INFINITY), "inf");
        assert_eq!(sig10(123456789012.0), "123456789012");
    }

    #[test]
    fn ranges_expand() {
        assert_eq!(sweep_values(Param::T, "1..3, 7").unwrap(), ["1", "2", "3", "7"]);
        assert!(sweep_values(Param::T, "").unwrap().is_empty());
        assert!(sweep_values(Param::K1, "0.5").is_err());
        assert_eq!(sweep_values(Param::P, "0.5,1/4").unwrap(), ["0.5", "1/4"]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn rational_values_reach_the_generator() {
        let r: BigRational = parse_rational("0.25").unwrap();
        assert_eq!(r, BigRational::new(1.into(), 4.into()));
    }
}
