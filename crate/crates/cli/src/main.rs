use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use addm_core::addm::ThresholdStrategy;
use addm_core::io::{format_summary, generate_case, parse_deck, simulate, write_summary, Deck};
use addm_core::timeloop::{DtMode, Method};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

/// Adaptively coupled domain decomposition reservoir simulator.
#[derive(Parser)]
#[command(name = "addm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one deck with one method.
    Run {
        #[command(flatten)]
        input: Input,
        /// Override the deck's method (FIM, CDDM, ADDM01, ADDM02, ADDM03).
        #[arg(long)]
        method: Option<Method>,
    },
    /// Simulate one deck with all five methods and print the summary table.
    Compare {
        #[command(flatten)]
        input: Input,
    },
    /// Print the deck of a built-in case.
    GenCase {
        /// case1-mini:<scale> or case2-mini:<scale>, scale tiny, small or medium.
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write the deck here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Built-in case, e.g. case1-mini:small.
    #[arg(long, conflicts_with = "deck", required_unless_present = "deck")]
    case: Option<String>,
    /// TOML deck file.
    #[arg(long)]
    deck: Option<PathBuf>,
    /// Seed of randomized case generation.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Threads for the region solves.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the threshold strategy (A, B, C or D).
    #[arg(long, value_parser = parse_threshold)]
    threshold: Option<ThresholdStrategy>,
    /// Override the step-size mode (adaptive or fixed).
    #[arg(long, value_parser = parse_dt_mode)]
    dt_mode: Option<DtMode>,
    /// Override the initial (and, in fixed mode, every) step size, days.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time, days.
    #[arg(long)]
    end_time: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_threshold(s: &str) -> Result<ThresholdStrategy, String> {
    match s.to_ascii_uppercase().as_str() {
        "A" => Ok(ThresholdStrategy::A),
        "B" => Ok(ThresholdStrategy::B),
        "C" => Ok(ThresholdStrategy::C),
        "D" => Ok(ThresholdStrategy::D),
        _ => Err(format!("unknown threshold strategy `{s}` (expected A, B, C or D)")),
    }
}

fn parse_dt_mode(s: &str) -> Result<DtMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "adaptive" => Ok(DtMode::Adaptive),
        "fixed" => Ok(DtMode::Fixed),
        _ => Err(format!("unknown step mode `{s}` (expected adaptive or fixed)")),
    }
}

impl Input {
    fn load(&self) -> Result<Deck> {
        let mut deck = match (&self.case, &self.deck) {
            (Some(case), _) => generate_case(case, self.seed)?,
            (None, Some(path)) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                parse_deck(&text).with_context(|| format!("in {}", path.display()))?
            }
            (None, None) => bail!("either --case or --deck is required"),
        };
        if let Some(w) = self.workers {
            deck.solver.workers = w;
        }
        if let Some(t) = self.threshold {
            deck.solver.threshold = t;
        }
        if let Some(m) = self.dt_mode {
            deck.solver.dt.mode = m;
        }
        if let Some(dt) = self.dt {
            deck.solver.dt.dt_init = dt;
            deck.solver.dt.dt_max = deck.solver.dt.dt_max.max(dt);
            deck.solver.dt.dt_min = deck.solver.dt.dt_min.min(dt);
        }
        if let Some(t) = self.end_time {
            deck.schedule.end_time = t;
            deck.schedule.report_times.retain(|&r| r < t);
        }
        Ok(deck)
    }
}

fn with_method(deck: &Deck, method: Method) -> Result<Deck> {
    let mut d = deck.clone();
    d.solver.method = method;
    d.resolve()?;
    Ok(d)
}

fn run_one(deck: &Deck, out: &Path) -> Result<addm_core::io::SummaryLine> {
    let method = deck.solver.method;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("deck.toml"), deck.echo()).with_context(|| format!("writing deck echo in {}", out.display()))?;
    let outcome = simulate(deck, Some(out)).with_context(|| format!("{method} run failed"))?;
    log::info!("{method}: {} steps, {} cuts", outcome.stats.steps, outcome.stats.failed_steps);
    Ok(outcome.summary(method.name()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { input, method } => {
            let mut deck = input.load()?;
            if let Some(m) = method {
                deck = with_method(&deck, m)?;
            }
            let line = run_one(&deck, &input.out)?;
            let lines = [line];
            write_summary(&lines, &input.out.join("summary.txt"))?;
            print!("{}", format_summary(&lines));
        }
        Command::Compare { input } => {
            let deck = input.load()?;
            let mut lines = Vec::new();
            for m in Method::ALL {
                let d = with_method(&deck, m)?;
                lines.push(run_one(&d, &input.out.join(m.name()))?);
            }
            write_summary(&lines, &input.out.join("summary.txt"))?;
            print!("{}", format_summary(&lines));
        }
        Command::GenCase { case, seed, out } => {
            let text = generate_case(&case, seed)?.echo();
            match out {
                Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
