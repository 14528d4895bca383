//! `leggett`: command-line access to the qudit Leggett-type model toolkit.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input,
//! 3 not found, 4 I/O error.

mod format;
mod sweep;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use leggett::crypto::{
    basis_to_bloch, find_ncrit, leggett_l_analytic, leggett_l_mc, weak_lower_bound, HiddenMode,
    LocalModel,
};
use leggett::qcorr::{asymptotic_in, cglmp_bases, gamma, quantum_chained_in, ChainedSettings};
use leggett::rng::{SeedStream, DEFAULT_SEED};
use leggett::{bloch::OperatorBasis, Error};

use format::fmt12;
use sweep::SweepConfig;

#[derive(Parser)]
#[command(name = "leggett", version, about = "Chained correlations versus Leggett-type crypto-nonlocal bounds for qudits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic coefficient γ(d) of I_N ≈ 2γ/N
    Gamma {
        #[arg(long)]
        d: usize,
    },
    /// Quantum chained quantity I_N for the maximally entangled state
    In {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Print 2γ(d)/N instead of the exact value
        #[arg(long)]
        asymptotic: bool,
    },
    /// Lower bound on I_N implied by the model
    Bound {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Closed-form L for sphere-uniform hidden states
        #[arg(long, conflicts_with = "mc")]
        analytic: bool,
        /// Monte Carlo estimate of L with its standard error
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Mode::Sphere)]
        mode: Mode,
    },
    /// Smallest N at which I_N falls below the bound
    Ncrit {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 1000)]
        nmax: usize,
    },
    /// Tabulate I_N against the bound over a grid of (d, η, N)
    Sweep {
        /// Figure preset supplying defaults: 2 (d = 3, N = 2..30, η = 1) or
        /// 3 (d = 2..8, N = 2..500, η ∈ {0.5, 0.7, 0.9, 1})
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        fig: u8,
        /// Inclusive range `A..B`, `A..=B` or a single value
        #[arg(long)]
        d_range: Option<String>,
        /// Comma-separated purities
        #[arg(long)]
        eta_list: Option<String>,
        /// Inclusive range `A..B`, `A..=B` or a single value
        #[arg(long)]
        n_range: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Data file; a summary goes to standard output instead
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// JSON table `{"d", "n", "probs"}` checked instead of generated ones
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sphere,
    Haar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Theorem1,
    Lemma,
    Lhv,
    Contradiction,
}

enum Failure {
    Verification,
    Invalid(String),
    NotFound(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification => 1,
            Failure::Invalid(_) => 2,
            Failure::NotFound(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotFound { .. } => Failure::NotFound(e.to_string()),
            e => Failure::Invalid(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| Failure::Io(format!("standard output: {e}")))?
    };
}

fn check_eta(eta: f64) -> Outcome {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("eta must lie in (0, 1], got {eta}")))
    }
}

fn parse_range(s: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = || Failure::Invalid(format!("malformed range {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.strip_prefix('=').unwrap_or(hi)),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(Failure::Invalid(format!("empty range {s:?}")));
    }
    Ok((lo..=hi).collect())
}

fn parse_etas(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let etas = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Invalid(format!("malformed purity {t:?}"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for &eta in &etas {
        check_eta(eta)?;
    }
    Ok(etas)
}

fn run_sweep(
    fig: u8,
    d_range: Option<String>,
    eta_list: Option<String>,
    n_range: Option<String>,
    format: Format,
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Outcome {
    let mut config = SweepConfig::figure(fig);
    if let Some(s) = d_range {
        config.dims = parse_range(&s)?;
    }
    if let Some(s) = eta_list {
        config.etas = parse_etas(&s)?;
    }
    if let Some(s) = n_range {
        config.ns = parse_range(&s)?;
    }
    if config.ns.contains(&0) {
        return Err(Failure::Invalid("N must be at least 1".into()));
    }
    let rows = sweep::run(&config)?;
    let text = match format {
        Format::Csv => sweep::to_csv(&rows),
        Format::Json => sweep::to_json(&rows),
    };
    match out {
        None => write!(stdout, "{text}").map_err(|e| Failure::Io(format!("standard output: {e}")))?,
        Some(path) => {
            fs::write(&path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            say!(stdout, "wrote {} rows to {}", rows.len(), path.display());
            for (d, eta, first) in sweep::first_violations(&rows) {
                let first = first.map_or("none".to_string(), |n| n.to_string());
                say!(stdout, "d={d} eta={} first violated N={first}", fmt12(eta));
            }
        }
    }
    Ok(())
}

fn run_verify(
    suite: Suite,
    d: usize,
    n: usize,
    trials: u64,
    seed: u64,
    input: Option<PathBuf>,
    out: &mut dyn Write,
) -> Outcome {
    let seed = SeedStream::new(seed);
    let tables = || -> std::result::Result<_, Failure> {
        match &input {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                let fixture: verify::Fixture = serde_json::from_str(&text)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
                Ok(vec![fixture.into_distribution()?])
            }
            None => {
                if trials == 0 {
                    return Err(Failure::Invalid("need at least one trial".into()));
                }
                Ok(verify::corpus(d, n, trials, seed)?)
            }
        }
    };
    if input.is_some() && matches!(suite, Suite::Lhv | Suite::Contradiction) {
        return Err(Failure::Invalid("--input applies to the theorem1 and lemma suites".into()));
    }
    let report = match suite {
        Suite::Theorem1 => verify::theorem1(&tables()?)?,
        Suite::Lemma => verify::lemma(&tables()?)?,
        Suite::Lhv => verify::lhv(d, n)?,
        Suite::Contradiction => verify::contradiction(d, n, trials, seed)?,
    };
    for line in &report.lines {
        say!(out, "{line}");
    }
    if report.pass {
        say!(out, "PASS");
        Ok(())
    } else {
        say!(out, "FAIL");
        Err(Failure::Verification)
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Outcome {
    match cli.command {
        Command::Gamma { d } => say!(out, "{}", fmt12(gamma(d)?.gamma)),
        Command::In { d, n, asymptotic } => {
            let v = if asymptotic { asymptotic_in(d, n)? } else { quantum_chained_in(d, n)? };
            say!(out, "{}", fmt12(v));
        }
        Command::Bound {
            d,
            eta,
            analytic,
            mc,
            samples,
            seed,
            mode,
        } => {
            check_eta(eta)?;
            if analytic {
                say!(out, "{}", fmt12(leggett_l_analytic(d, eta)?.value));
            } else if mc {
                if samples == 0 {
                    return Err(Failure::Invalid("need at least one sample".into()));
                }
                let mode = match mode {
                    Mode::Sphere => HiddenMode::SphereUniform,
                    Mode::Haar => HiddenMode::HaarPure,
                };
                let model = LocalModel::new(d, eta, mode)?;
                let ops = OperatorBasis::generate(d)?;
                let bases = cglmp_bases(&ChainedSettings::new(d, 1)?);
                let basis = basis_to_bloch(&ops, &bases.alice[0])?;
                let est = leggett_l_mc(&basis, &model, samples, SeedStream::new(seed))?;
                say!(out, "{} ± {}", fmt12(est.value), fmt12(est.std_error));
            } else {
                say!(out, "{}", fmt12(weak_lower_bound(d, eta)?));
            }
        }
        Command::Ncrit { d, eta, nmax } => {
            check_eta(eta)?;
            match find_ncrit(d, eta, nmax) {
                Ok(n) => say!(out, "{n}"),
                Err(Error::NotFound { n_max, gap }) => {
                    say!(out, "NOT-FOUND nmax={n_max} gap={}", fmt12(gap));
                    return Err(Failure::NotFound(String::new()));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Sweep {
            fig,
            d_range,
            eta_list,
            n_range,
            format,
            out: path,
        } => run_sweep(fig, d_range, eta_list, n_range, format, path, out)?,
        Command::Verify {
            suite,
            d,
            n,
            trials,
            seed,
            input,
        } => run_verify(suite, d, n, trials, seed, input, out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let result = run(Cli::parse(), &mut lock).and_then(|()| {
        lock.flush().map_err(|e| Failure::Io(format!("standard output: {e}")))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Invalid(msg) | Failure::NotFound(msg) | Failure::Io(msg) if !msg.is_empty() => {
                    eprintln!("error: {msg}")
                }
                _ => {}
            }
            ExitCode::from(failure.code())
        }
    }
}
