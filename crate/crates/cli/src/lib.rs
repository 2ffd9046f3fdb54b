//! Command-line front end for `rotcocycle`: configuration, grammars and
//! JSON/CSV artifacts. Every subcommand calls one library operation.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rotcocycle::{Error, Session};

pub mod commands;
pub mod config;
pub mod out;
pub mod spec;

use config::{PhiConfig, SessionConfig};

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_UNDECIDABLE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::AuditFailure { .. }) => EXIT_AUDIT,
            CliError::Lib(Error::UndecidableAtCap(_) | Error::PrecisionExhausted) => EXIT_UNDECIDABLE,
            _ => EXIT_USAGE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "rotcocycle", version, about = "Exact computations with cocycles over irrational rotations")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by all subcommands; they override the config file.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON session configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Partial-quotient spec: golden, sqrt2m1, periodic:[..], list:[..], formula:poly:c0,c1,.., formula:pow2.
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Symbol registration NAME=VALUE (repeatable), e.g. g=indep:sqrt2m1, b=2*alpha-1, t=surrogate:digits:[0,1].
    #[arg(long = "sym", global = true)]
    pub syms: Vec<String>,
    /// Cocycle shorthand, e.g. 'indicator(1/2)', or @file.json with a cocycle spec.
    #[arg(long, global = true)]
    pub phi: Option<String>,
    /// Artifact directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampling operations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parallelism bound (the library runs sequentially, so any k >= 1 is honoured).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Precision cap in bits.
    #[arg(long, global = true)]
    pub cap_bits: Option<u32>,
    /// Minimal atom mass.
    #[arg(long, global = true)]
    pub delta: Option<String>,
    /// Limit-set threshold.
    #[arg(long, global = true)]
    pub tau: Option<String>,
    /// Scaled cluster radius.
    #[arg(long, global = true)]
    pub eps_cluster: Option<String>,
    /// wsd threshold.
    #[arg(long, global = true)]
    pub c_threshold: Option<String>,
    /// Convergent depth used by scans and the report.
    #[arg(long, global = true)]
    pub conv_depth: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergents and the continued-fraction identity audit.
    Cf {
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// Three-distance audit at q_n for the orbit of x.
    Orbit {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "0")]
        x: String,
    },
    /// Separation table min_{|j|<=q_n} ||beta - j alpha||.
    Separation {
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value = "1/100")]
        threshold: String,
    },
    /// Weyl averages of exp(2 pi i s.q_n beta).
    Weyl {
        /// Comma-separated forms.
        #[arg(long)]
        betas: String,
        /// Characters as rows, e.g. '1,0;0,1'. Default: all nonzero s with |s|_1 <= --max-norm.
        #[arg(long)]
        chars: Option<String>,
        #[arg(long, default_value_t = 3)]
        max_norm: i64,
        #[arg(long = "N", default_value_t = 2000)]
        big_n: usize,
    },
    /// Exact pushforward of phi_t; t = q_n with --n, or --time t.
    Pushforward {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        time: Option<i64>,
    },
    /// Denjoy-Koksma audit at q_n for the listed n.
    DkAudit {
        /// Indices, e.g. 1..=12 or 2,4,6.
        #[arg(long, default_value = "1..=12")]
        n: String,
    },
    /// Well-separated-discontinuities test.
    Wsd {
        #[arg(long, default_value = "1..=20")]
        n: String,
    },
    /// Cluster analysis at q_n.
    Clusters {
        #[arg(long)]
        n: usize,
        /// Window shifts j.
        #[arg(long, default_value = "0")]
        shifts: String,
    },
    /// Exact measure of A_{q,l} against the bound 1 - 2Dq l||q alpha||.
    Mesu {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        q: Option<i64>,
        #[arg(long, default_value_t = 1)]
        ell: i64,
    },
    /// The ||q_n beta|| -> 0 regime.
    Qn00 {
        #[arg(long)]
        rho: String,
        #[arg(long)]
        eta: String,
        #[arg(long, default_value = "1..=8")]
        n: String,
    },
    /// Ostrowski expansion of --beta, or the coboundary criterion with --ell.
    Ostrowski {
        #[arg(long)]
        beta: Option<String>,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Run the coboundary criterion for l*1_[0,beta) - 1_[0,l*beta).
        #[arg(long)]
        ell: Option<u64>,
        /// Digit rule instead of an expansion: const:c, list:[..], alternating:[..], formula:k=..,c=..,mask=..
        #[arg(long)]
        rule: Option<String>,
    },
    /// Finite-depth checks of the multiplicative-equation conditions.
    GpCheck {
        /// Jumps s_j, comma-separated forms.
        #[arg(long)]
        jumps: String,
        /// Points beta_j, comma-separated forms.
        #[arg(long)]
        points: String,
        /// Partition of the indices, e.g. '0,1;2'.
        #[arg(long)]
        partition: String,
        #[arg(long, default_value = "0")]
        t: String,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 50)]
        k_max: i64,
    },
    /// Rational reduction of a rational cocycle.
    Reduce {
        #[arg(long = "N", default_value_t = 20)]
        big_n: usize,
    },
    /// Essential-value witness search.
    Witness {
        /// Comma-separated components of g.
        #[arg(long)]
        g: String,
        #[arg(long, default_value = "1/10")]
        eps: String,
        /// Dyadic partition depth.
        #[arg(long, default_value_t = 3)]
        partition_depth: u32,
        #[arg(long = "Nmax")]
        n_max: Option<i64>,
    },
    /// Quasi-period scan at the listed times (or q_n for the listed n).
    Scan {
        #[arg(long)]
        n: Option<String>,
        #[arg(long)]
        times: Option<String>,
        /// Persistence radius.
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
    },
    /// Full regularity pipeline.
    Report,
    /// Checks F(Psi_{q_n}(x)) - q_n beta is an integer vector at seeded samples.
    DiagLine {
        #[arg(long)]
        betas: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

/// The effective configuration: file first, then flags.
pub fn effective_config(common: &Common) -> Result<SessionConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => SessionConfig::load(p)?,
        None => SessionConfig::default(),
    };
    if let Some(a) = &common.alpha {
        cfg.alpha = Some(a.clone());
    }
    for s in &common.syms {
        cfg.betas.push(spec::parse_sym_arg(s)?);
    }
    if let Some(p) = &common.phi {
        cfg.phi = Some(match p.strip_prefix('@') {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
                let spec = serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("cocycle spec error at line {}, column {}: {e}", e.line(), e.column())))?;
                PhiConfig::Spec(spec)
            }
            None => PhiConfig::Shorthand(p.clone()),
        });
    }
    if let Some(o) = &common.out {
        cfg.output = Some(o.display().to_string());
    }
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if common.cap_bits.is_some() {
        cfg.cap_bits = common.cap_bits;
    }
    let t = &mut cfg.thresholds;
    for (dst, src) in [(&mut t.delta, &common.delta), (&mut t.tau, &common.tau), (&mut t.eps_cluster, &common.eps_cluster), (&mut t.c_threshold, &common.c_threshold)] {
        if src.is_some() {
            *dst = src.clone();
        }
    }
    if common.conv_depth.is_some() {
        t.depth = common.conv_depth;
    }
    if cfg.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    Ok(cfg)
}

/// Session with `α`, the cap and every registered symbol.
pub fn build_session(cfg: &SessionConfig) -> Result<Session, CliError> {
    let alpha = cfg.alpha.as_deref().ok_or_else(|| CliError::Usage("no --alpha given".into()))?;
    let mut s = Session::new(spec::parse_alpha(alpha)?);
    if let Some(bits) = cfg.cap_bits {
        if bits < 64 {
            return Err(CliError::Usage("cap must be at least 64 bits".into()));
        }
        s = s.with_cap_bits(bits);
    }
    for b in &cfg.betas {
        spec::register(&mut s, b)?;
    }
    Ok(s)
}

/// Runs one invocation and returns the exit status. Diagnostics go to stderr.
pub fn run(cli: Cli) -> i32 {
    match commands::dispatch(&cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
