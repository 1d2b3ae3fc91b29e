//! `qprs`: derive artifacts, generate sequences, verify, run fault campaigns.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input or
//! configuration, 3 internal soundness violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qprs::artifact::Artifact;
use qprs::backend::{self, Backend};
use qprs::block_parallel::Block;
use qprs::fault_lab::{run_campaign, CampaignSpec, FaultDistribution};
use qprs::lfsr_serial::period_with_limit;
use qprs::{exhaustion_limit, Error};

/// Largest q whose elements fit the 16-bit output format.
const BIN16_MAX_Q: u32 = 65521;

#[derive(Parser)]
#[command(
    name = "qprs",
    version,
    about = "q-valued pseudo-random sequences with fault detection"
)]
#[command(
    after_help = "Environment: QPRS_EXHAUSTION_LIMIT overrides the state-space limit (default 2^24)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive an artifact from a generating polynomial.
    Derive {
        /// Field size (prime).
        #[arg(long)]
        q: u32,
        /// Coefficients k_0,k_1,...,k_m of K(x), ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        poly: Vec<u64>,
        /// Check symbols per block for the linear code.
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Redundant residue moduli.
        #[arg(long, default_value_t = 1)]
        rns_extras: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a sequence.
    Gen {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, default_value = "serial")]
        backend: Backend,
        /// Initial register contents a_{m-1},...,a_0 (highest index first).
        #[arg(long, value_delimiter = ',', required = true)]
        seed: Vec<u64>,
        /// Number of elements.
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an artifact.
    Verify {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "consistency,full-period,cross-backend"
        )]
        check: Vec<Check>,
    },
    /// Run a fault-injection campaign and write the report.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Decimal, space separated.
    Text,
    /// Little-endian u16 per element.
    Bin16,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Check {
    Consistency,
    FullPeriod,
    CrossBackend,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Consistency => "consistency",
            Check::FullPeriod => "full-period",
            Check::CrossBackend => "cross-backend",
        }
    }
}

/// Campaign configuration file. `artifact` is relative to the file.
#[derive(Deserialize)]
struct CampaignConfig {
    artifact: PathBuf,
    #[serde(flatten)]
    spec: CampaignSpec,
}

struct Exit {
    code: u8,
    err: anyhow::Error,
}

type CmdResult = Result<(), Exit>;

trait OrExit<T> {
    fn or_exit(self, code: u8) -> Result<T, Exit>;
}

impl<T, E: Into<anyhow::Error>> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Exit> {
        self.map_err(|e| Exit {
            code,
            err: e.into(),
        })
    }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Soundness(_) => 3,
        _ => 2,
    }
}

fn load_artifact(path: &Path) -> Result<Artifact, Exit> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .or_exit(2)?;
    Artifact::from_json(&text)
        .with_context(|| format!("loading {}", path.display()))
        .or_exit(2)
}

fn write_out(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .or_exit(2)
}

fn derive(q: u32, poly: &[u64], r: usize, rns_extras: usize, out: &Path) -> CmdResult {
    let a = Artifact::derive(q, poly, r, rns_extras, exhaustion_limit()).or_exit(2)?;
    if !a.primitive {
        eprintln!(
            "warning: K(x) is not primitive over GF({q}); the period is shorter than q^m - 1"
        );
    }
    write_out(out, a.to_json().as_bytes())?;
    eprintln!(
        "wrote {} (q={}, m={}, moduli {:?}, eta={})",
        out.display(),
        a.q(),
        a.m(),
        a.rns.moduli(),
        a.rns.eta()
    );
    Ok(())
}

fn gen(
    artifact: &Path,
    backend: Backend,
    seed: &[u64],
    n: usize,
    format: Format,
    out: Option<&Path>,
) -> CmdResult {
    let a = load_artifact(artifact)?;
    let seed = Block::new(&a.field(), seed)
        .context("bad seed")
        .or_exit(2)?;
    if seed.len() != a.m() {
        return Err(Exit {
            code: 2,
            err: anyhow!("bad seed: {} elements, expected {}", seed.len(), a.m()),
        });
    }
    if matches!(format, Format::Bin16) && a.q() > BIN16_MAX_Q {
        return Err(Exit {
            code: 2,
            err: anyhow!(
                "bin16 output needs q <= {BIN16_MAX_Q}, artifact has q = {}",
                a.q()
            ),
        });
    }
    let seq = backend::generate(&a, backend, &seed, n).map_err(|e| Exit {
        code: code_for(&e),
        err: e.into(),
    })?;
    let bytes = match format {
        Format::Text if seq.is_empty() => Vec::new(),
        Format::Text => {
            let mut s = seq
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            s.push('\n');
            s.into_bytes()
        }
        Format::Bin16 => seq.iter().flat_map(|&e| (e as u16).to_le_bytes()).collect(),
    };
    match out {
        Some(p) => write_out(p, &bytes),
        None => std::io::stdout().write_all(&bytes).or_exit(2),
    }
}

fn run_check(a: &Artifact, check: Check, limit: u64) -> Result<String, String> {
    match check {
        Check::Consistency => {
            let failed: Vec<String> = a
                .consistency(limit)
                .into_iter()
                .filter_map(|(name, r)| r.err().map(|e| format!("{name}: {e}")))
                .collect();
            if failed.is_empty() {
                Ok("all derived tables match".into())
            } else {
                Err(failed.join("; "))
            }
        }
        Check::FullPeriod => {
            let p = period_with_limit(&a.fp, limit).map_err(|e| e.to_string())?;
            let full = (a.q() as u64).pow(a.m() as u32) - 1;
            if p == full {
                Ok(format!("period {p}"))
            } else {
                Err(format!("period {p}, expected {full}"))
            }
        }
        Check::CrossBackend => {
            let p = period_with_limit(&a.fp, limit).map_err(|e| e.to_string())?;
            let seed = Block::from(a.fp.unit_state());
            let n = p as usize + a.m();
            let reference =
                backend::generate(a, Backend::Serial, &seed, n).map_err(|e| e.to_string())?;
            for b in Backend::ALL {
                let s = backend::generate(a, b, &seed, n).map_err(|e| format!("{b}: {e}"))?;
                if let Some(i) = s.iter().zip(&reference).position(|(x, y)| x != y) {
                    return Err(format!("{b} differs from serial at element {i}"));
                }
            }
            Ok(format!(
                "{} backends agree over {n} elements",
                Backend::ALL.len()
            ))
        }
    }
}

fn verify(artifact: &Path, checks: &[Check]) -> CmdResult {
    let a = load_artifact(artifact)?;
    let limit = exhaustion_limit();
    let mut ok = true;
    let mut seen = Vec::new();
    for &c in checks {
        if seen.contains(&c) {
            continue;
        }
        seen.push(c);
        match run_check(&a, c, limit) {
            Ok(msg) => println!("{}: pass ({msg})", c.name()),
            Err(msg) => {
                ok = false;
                println!("{}: FAIL ({msg})", c.name());
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Exit {
            code: 1,
            err: anyhow!("verification failed"),
        })
    }
}

fn campaign(config: &Path, out: &Path) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .or_exit(2)?;
    let cfg: CampaignConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))
        .or_exit(2)?;
    if matches!(cfg.spec.distribution, FaultDistribution::Random { .. }) && cfg.spec.trials == 0 {
        return Err(Exit {
            code: 2,
            err: anyhow!("trials must be at least 1"),
        });
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let a = load_artifact(&base.join(&cfg.artifact))?;
    let report = run_campaign(&a, &cfg.spec, exhaustion_limit()).map_err(|e| Exit {
        code: code_for(&e),
        err: e.into(),
    })?;
    let mut json = report.to_json();
    json.push('\n');
    write_out(out, json.as_bytes())?;
    let t = &report.totals;
    eprintln!(
        "{} trials: injected {}, detected {}, missed {}, masked {}, corrected {}, ambiguous {}",
        t.trials, t.injected, t.detected, t.missed, t.masked, t.corrected, t.ambiguous
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Derive {
            q,
            poly,
            r,
            rns_extras,
            out,
        } => derive(*q, poly, *r, *rns_extras, out),
        Command::Gen {
            artifact,
            backend,
            seed,
            n,
            format,
            out,
        } => gen(artifact, *backend, seed, *n, *format, out.as_deref()),
        Command::Verify { artifact, check } => verify(artifact, check),
        Command::Campaign { config, out } => campaign(config, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
