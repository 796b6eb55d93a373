//! `qkd-star`: plan, simulate, calibrate and analyse star-topology QKD networks.
//!
//! Exit status: 0 when the command ran (aborted sessions and no-key outcomes
//! included), 1 for usage or configuration errors, 2 for internal errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use qkd_star::decoy::IntensityPair;
use qkd_star::report;
use qkd_star::scenario::{ExcessSetting, ScenarioFile, BEIJING_TOML};
use qkd_star::simulator::{self, DecoyOutcome, Mode, SimError};
use qkd_star::topology::{build_router_spec, color_complete_graph, route, RouterParams};

/// Scenario argument naming the bundled Beijing network instead of a file.
const BUILTIN_BEIJING: &str = "@beijing";

#[derive(Debug, Parser)]
#[command(name = "qkd-star", version, about = "Star-topology wavelength-routed QKD network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a wavelength plan and router description for N users.
    Plan {
        #[arg(long)]
        users: usize,
        /// Comma-separated channel wavelengths in nm; defaults to a 0.8 nm grid from 1550.12 nm.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Per-channel router through loss in dB.
        #[arg(long, default_value_t = 2.0)]
        insertion_loss_db: f64,
    },
    /// Run a scenario and print the session table.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<Mode>,
    },
    /// Solve each link's excess error from measured QBERs and write the scenario.
    Calibrate {
        /// Scenario file, or `@beijing` for the bundled network.
        scenario: String,
        /// Measured QBERs overriding the file, e.g. `A-B=0.077,A-C=0.041`.
        #[arg(long, value_delimiter = ',')]
        measured: Vec<String>,
        /// Where to write the calibrated scenario; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decoy-state key rate for one link of a scenario.
    Decoy {
        /// Scenario file, or `@beijing` for the bundled network.
        scenario: String,
        /// Link as SRC-DST; defaults to the scenario's [decoy] link.
        #[arg(long)]
        link: Option<String>,
        #[arg(long)]
        signal_mu: Option<f64>,
        #[arg(long)]
        decoy_mu: Option<f64>,
        #[arg(long)]
        f_ec: Option<f64>,
        #[arg(long)]
        sifting_factor: Option<f64>,
        /// Write the key-rate report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run single and concentration modes and compare them link by link.
    Compare {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Bundled scenarios.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file, or `@beijing` for the bundled network.
    scenario: String,
    /// Pulses per session; accepts forms such as 1e7.
    #[arg(long, value_parser = parse_pulses)]
    pulses: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write machine-readable JSON lines here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ScenarioAction {
    /// Print or write the bundled Beijing scenario.
    Beijing {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "single" => Ok(Mode::Single),
        "concentration" => Ok(Mode::Concentration),
        _ => Err(format!("expected 'single' or 'concentration', got '{s}'")),
    }
}

fn parse_pulses(s: &str) -> Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return if n > 0 { Ok(n) } else { Err("pulse count must be positive".into()) };
    }
    let x: f64 = s.parse().map_err(|_| format!("'{s}' is not a pulse count"))?;
    if x >= 1.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("'{s}' is not a positive whole number"))
    }
}

enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Internal(e.into())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Configuration(_) | SimError::Comparison(_) => usage(e),
        _ => internal(e),
    }
}

fn load(spec: &str) -> Result<ScenarioFile, Failure> {
    let text = if spec == BUILTIN_BEIJING {
        BEIJING_TOML.to_string()
    } else {
        fs::read_to_string(spec)
            .with_context(|| format!("cannot read scenario {spec}"))
            .map_err(usage)?
    };
    ScenarioFile::parse(&text)
        .with_context(|| format!("in {spec}"))
        .map_err(usage)
}

fn write_out(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(usage)
}

fn apply_run_overrides(file: &mut ScenarioFile, run: &RunArgs) {
    if let Some(p) = run.pulses {
        file.run.pulse_count = p;
    }
    if let Some(s) = run.seed {
        file.run.seed = s;
    }
}

fn cmd_plan(users: usize, grid: Option<Vec<f64>>, insertion_loss_db: f64) -> CmdResult {
    let plan = color_complete_graph(users).map_err(usage)?;
    let grid = grid.unwrap_or_else(|| (0..plan.n_colors()).map(|c| 1550.12 + 0.8 * c as f64).collect());
    let params = RouterParams::with_defaults(grid.clone(), vec![insertion_loss_db; grid.len()]);
    let spec = build_router_spec(&plan, &params).map_err(usage)?;
    println!("users {users}  channels {}", plan.n_colors());
    println!("{:<8} {:>6} {:>12} {:>8}", "pair", "colour", "nm", "WDM hops");
    for (pair, color) in plan.edges() {
        let hops = route(&spec, pair.lo(), pair.hi()).map_err(internal)?.wdm_hops();
        println!("{:<8} {:>6} {:>12.2} {:>8}", pair.to_string(), color, grid[color], hops);
    }
    println!("isolation matrix [input][output] dB:");
    for row in spec.isolation_matrix() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:6.2}")).collect();
        println!("  {}", cells.join(" "));
    }
    Ok(())
}

fn cmd_simulate(run: &RunArgs, mode: Option<Mode>) -> CmdResult {
    let mut file = load(&run.scenario)?;
    apply_run_overrides(&mut file, run);
    if let Some(m) = mode {
        file.run.mode = m;
    }
    let scenario = file.to_scenario().map_err(usage)?;
    let rep = simulator::run_scenario(&scenario).map_err(sim_failure)?;
    print!("{}", report::render_table(&rep));
    if let Some(out) = &run.out {
        write_out(out, &report::to_json_lines(&rep))?;
    }
    Ok(())
}

fn cmd_calibrate(spec: &str, measured: &[String], out: Option<&Path>) -> CmdResult {
    let mut file = load(spec)?;
    for m in measured {
        let (pair, q) = m
            .split_once('=')
            .ok_or_else(|| usage(anyhow!("--measured entry '{m}' is not PAIR=QBER")))?;
        let q: f64 = q
            .parse()
            .map_err(|_| usage(anyhow!("--measured entry '{m}' has a non-numeric QBER")))?;
        let i = file.link_entry_index(pair).map_err(usage)?;
        file.physics.link[i].measured_qber = Some(q);
        file.physics.link[i].excess_error = ExcessSetting::Keyword(qkd_star::scenario::Calibrate::Calibrate);
    }
    let (calibrated, rows) = file.resolve_calibration().map_err(usage)?;
    eprintln!("{:<8} {:>9} {:>9} {:>12}", "link", "measured", "floor", "excess err");
    for r in &rows {
        eprintln!(
            "{:<8} {:>8.3}% {:>8.3}% {:>12.6}",
            r.pair,
            100.0 * r.measured_qber,
            100.0 * r.floor_qber,
            r.excess_error
        );
    }
    let text = calibrated.to_toml_string();
    match out {
        Some(p) => write_out(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct DecoyArgs<'a> {
    link: Option<&'a str>,
    signal_mu: Option<f64>,
    decoy_mu: Option<f64>,
    f_ec: Option<f64>,
    sifting_factor: Option<f64>,
    out: Option<&'a Path>,
}

fn cmd_decoy(spec: &str, a: DecoyArgs<'_>) -> CmdResult {
    let file = load(spec)?;
    let section = file.decoy.clone();
    let pick = |v: Option<f64>, f: fn(&qkd_star::scenario::DecoySection) -> f64, name: &str| {
        v.or_else(|| section.as_ref().map(f))
            .ok_or_else(|| usage(anyhow!("--{name} is required when the scenario has no [decoy] section")))
    };
    let signal = pick(a.signal_mu, |d| d.signal_mu, "signal-mu")?;
    let decoy = pick(a.decoy_mu, |d| d.decoy_mu, "decoy-mu")?;
    let f_ec = pick(a.f_ec, |d| d.f_ec, "f-ec")?;
    let q = pick(a.sifting_factor, |d| d.sifting_factor, "sifting-factor")?;
    let link = a
        .link
        .map(str::to_string)
        .or_else(|| section.as_ref().map(|d| d.link.clone()))
        .ok_or_else(|| usage(anyhow!("--link is required when the scenario has no [decoy] section")))?;
    let intensities = IntensityPair::new(signal, decoy).map_err(usage)?;
    let scenario = file.to_scenario().map_err(usage)?;
    let (src, dst) = link
        .split_once('-')
        .and_then(|(s, d)| {
            let find = |l: &str| scenario.nodes.iter().position(|n| n.label == l);
            Some((find(s)?, find(d)?))
        })
        .ok_or_else(|| usage(anyhow!("link '{link}' does not name two scenario nodes")))?;
    let outcome = simulator::analyze_decoy(&scenario, src, dst, &intensities, q, f_ec).map_err(sim_failure)?;
    let rep = match &outcome {
        DecoyOutcome::Key(r) => {
            println!("link {link}: secure key");
            Some(r)
        }
        DecoyOutcome::NoKey { reason, report } => {
            println!("link {link}: no secure key ({reason})");
            report.as_ref()
        }
    };
    if let Some(r) = rep {
        let o = &r.observables;
        let b = &r.bounds;
        println!("  intensities     signal {}  decoy {}", r.intensities.signal_mu, r.intensities.decoy_mu);
        println!("  gains           signal {:.6e}  decoy {:.6e}", o.gain_signal, o.gain_decoy);
        println!("  QBERs           signal {:.4}  decoy {:.4}", o.qber_signal, o.qber_decoy);
        println!("  Y1 >= {:.6e}  e1 <= {:.6}  Q1 >= {:.6e}", b.y1_lower, b.e1_upper, b.q1_lower);
        if b.clamped.y1_clamped || b.clamped.e1_clamped {
            println!("  bounds clamped: y1 {}  e1 {}", b.clamped.y1_clamped, b.clamped.e1_clamped);
        }
        println!("  rate            {:.6e} per pulse  {:.6e} bit/s", r.rate_per_pulse, r.rate_bps);
        println!("  vacuum          {}", r.vacuum_treatment);
        if let Some(p) = a.out {
            let json = serde_json::to_string_pretty(r).map_err(internal)?;
            write_out(p, &json)?;
        }
    }
    Ok(())
}

fn cmd_compare(run: &RunArgs) -> CmdResult {
    let mut file = load(&run.scenario)?;
    apply_run_overrides(&mut file, run);
    let scenario = file.to_scenario().map_err(usage)?;
    let single = simulator::run_scenario(&scenario.with_mode(Mode::Single)).map_err(sim_failure)?;
    let conc = simulator::run_scenario(&scenario.with_mode(Mode::Concentration)).map_err(sim_failure)?;
    let cmp = simulator::compare_modes(&single, &conc).map_err(sim_failure)?;
    print!("{}", report::render_comparison(&cmp));
    if let Some(out) = &run.out {
        let mut text = report::to_json_lines(&single);
        text.push_str(&report::to_json_lines(&conc));
        write_out(out, &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Plan {
            users,
            grid,
            insertion_loss_db,
        } => cmd_plan(users, grid, insertion_loss_db),
        Command::Simulate { run, mode } => cmd_simulate(&run, mode),
        Command::Calibrate { scenario, measured, out } => cmd_calibrate(&scenario, &measured, out.as_deref()),
        Command::Decoy {
            scenario,
            link,
            signal_mu,
            decoy_mu,
            f_ec,
            sifting_factor,
            out,
        } => cmd_decoy(
            &scenario,
            DecoyArgs {
                link: link.as_deref(),
                signal_mu,
                decoy_mu,
                f_ec,
                sifting_factor,
                out: out.as_deref(),
            },
        ),
        Command::Compare { run } => cmd_compare(&run),
        Command::Scenario {
            action: ScenarioAction::Beijing { out },
        } => match out {
            Some(p) => write_out(&p, BEIJING_TOML),
            None => {
                print!("{BEIJING_TOML}");
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
