//! Command-line surface: state-file I/O, command dispatch, and JSON
//! rendering for every query the library answers.
//!
//! The file format is one JSON object per state or channel: `dims` (a pair
//! for states, a 4-tuple for channel Choi matrices), `matrix` as row-major
//! nested arrays of `[re, im]` pairs, and an optional `name`. Parse errors
//! carry a text location; validation errors from the domain types pass
//! through unchanged.
//!
//! Decision subcommands encode their verdict in the exit code so shell
//! pipelines can branch: 0 for true/feasible, 1 for false/infeasible, and 2
//! strictly for errors. Output is always JSON, byte-stable for fixed inputs,
//! with every number carrying at least 12 significant digits.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{self, ChoiChannel};
use crate::entropy::{self, DivergenceKind};
use crate::linalg::ComplexMatrix;
use crate::majorize::{self, CondMode};
use crate::states::{self, BipartiteState};
use crate::tol;
use crate::verify::{self, SuiteSizes, VerifyReport};

/// On-disk schema shared by states and channels: `dims` is a pair for
/// states and an (in A, in B, out A, out B) 4-tuple for channels; `matrix`
/// holds row-major `[re, im]` entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A malformed document, with the text or field location that failed.
#[derive(Debug, Error)]
#[error("parse error at {location}: {message}")]
pub struct ParseError {
    pub location: String,
    pub message: String,
}

/// Everything a command can fail with; all of these exit with code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    State(#[from] crate::states::StateError),
    #[error(transparent)]
    Channel(#[from] crate::channels::ChannelError),
    #[error(transparent)]
    Entropy(#[from] crate::entropy::EntropyError),
    #[error(transparent)]
    Majorize(#[from] crate::majorize::MajorizeError),
    #[error("{0}")]
    Flags(String),
}

// ---------------------------------------------------------------------------
// file parsing and serialization

/// Parses and validates a bipartite state document.
///
/// ```
/// use qcem::cli::{parse_state_file, render_state_file, state_to_file};
/// use qcem::states::maximally_entangled;
///
/// let text = render_state_file(&state_to_file(&maximally_entangled(2), None));
/// let back = parse_state_file(text.as_bytes()).unwrap();
/// assert_eq!((back.dim_a(), back.dim_b()), (2, 2));
/// ```
pub fn parse_state_file(bytes: &[u8]) -> Result<BipartiteState, CliError> {
    let file = parse_raw(bytes)?;
    if file.dims.len() != 2 {
        return Err(located(
            "dims",
            format!("a state needs 2 dimensions, found {}", file.dims.len()),
        ));
    }
    let (da, db) = (file.dims[0], file.dims[1]);
    let matrix = matrix_from_rows(&file.matrix, da * db)?;
    Ok(states::make_state(matrix, da, db)?)
}

/// Parses and validates a channel document (Choi matrix with 4-tuple dims).
pub fn parse_channel_file(bytes: &[u8]) -> Result<ChoiChannel, CliError> {
    let file = parse_raw(bytes)?;
    if file.dims.len() != 4 {
        return Err(located(
            "dims",
            format!("a channel needs 4 dimensions, found {}", file.dims.len()),
        ));
    }
    let dims = (file.dims[0], file.dims[1], file.dims[2], file.dims[3]);
    let side = dims.0 * dims.1 * dims.2 * dims.3;
    let matrix = matrix_from_rows(&file.matrix, side)?;
    Ok(ChoiChannel::new(matrix, dims)?)
}

/// The document form of a state, ready for [`render_state_file`].
pub fn state_to_file(rho: &BipartiteState, name: Option<String>) -> StateFile {
    StateFile {
        dims: vec![rho.dim_a(), rho.dim_b()],
        matrix: matrix_rows(rho.matrix()),
        name,
    }
}

/// The document form of a channel's Choi matrix.
pub fn channel_to_file(n: &ChoiChannel, name: Option<String>) -> StateFile {
    let (ia, ib) = n.input_dims();
    let (oa, ob) = n.output_dims();
    StateFile { dims: vec![ia, ib, oa, ob], matrix: matrix_rows(n.choi()), name }
}

/// Serializes a document; floats use the shortest representation that
/// round-trips exactly, so parse of render is the identity.
pub fn render_state_file(file: &StateFile) -> String {
    serde_json::to_string(file).expect("plain data serializes")
}

fn matrix_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn parse_raw(bytes: &[u8]) -> Result<StateFile, ParseError> {
    serde_json::from_slice(bytes).map_err(|e| {
        let mut message = e.to_string();
        // serde_json repeats the location in its message; the struct field
        // already carries it
        if let Some(cut) = message.find(" at line ") {
            message.truncate(cut);
        }
        ParseError {
            location: format!("line {}, column {}", e.line(), e.column()),
            message,
        }
    })
}

fn located(location: &str, message: String) -> CliError {
    CliError::Parse(ParseError { location: location.to_string(), message })
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>], n: usize) -> Result<ComplexMatrix, CliError> {
    if rows.len() != n {
        return Err(located(
            "matrix",
            format!("has {} rows, expected {n}", rows.len()),
        ));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(located(
                &format!("matrix[{r}]"),
                format!("has {} entries, expected {n}", row.len()),
            ));
        }
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

// ---------------------------------------------------------------------------
// the command surface

#[derive(Parser)]
#[command(
    name = "qcem",
    version,
    about = "Quantum conditional entropies, conditional majorization, and the channels that witness them"
)]
struct Cli {
    /// Emit JSON on standard output (the default and only format).
    #[arg(long, global = true)]
    json: bool,
    /// Decision threshold override; affects verdicts only, never the
    /// reported numbers.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional entropy H(A|B) of a state
    Entropy {
        /// State file (JSON)
        #[arg(long)]
        state: PathBuf,
        /// Divergence family defining the entropy
        #[arg(long, value_enum)]
        kind: KindFlag,
        /// Renyi order; required by petz and sandwiched, rejected otherwise
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Conditional min-entropy (closed form)
    Hmin {
        #[arg(long)]
        state: PathBuf,
    },
    /// Conditional min-entropy with optimized conditioning (SDP)
    HminUp {
        #[arg(long)]
        state: PathBuf,
    },
    /// Reduction criterion: does I (x) rho_B dominate rho_AB?
    Reduction {
        #[arg(long)]
        state: PathBuf,
    },
    /// Spectral majorization between two states
    Majorize {
        /// Candidate majorizing state
        #[arg(long)]
        from: PathBuf,
        /// Candidate majorized state
        #[arg(long)]
        to: PathBuf,
    },
    /// Conditional majorization: does a balanced channel map one state to
    /// the other?
    CondMajorize {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// Channel class the existence program quantifies over
        #[arg(long, value_enum, default_value_t = ModeFlag::Lb)]
        mode: ModeFlag,
    },
    /// CPTP and balance predicates of a channel file
    ChannelCheck {
        /// Channel file (JSON Choi matrix)
        #[arg(long)]
        from: PathBuf,
    },
    /// Run the verification suite and report every case
    Verify {
        /// Seed for the suite's random corpora
        #[arg(long, default_value_t = verify::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindFlag {
    Umegaki,
    Petz,
    Sandwiched,
    Max,
}

impl KindFlag {
    fn resolve(self, alpha: Option<f64>) -> Result<DivergenceKind, CliError> {
        match (self, alpha) {
            (KindFlag::Umegaki, None) => Ok(DivergenceKind::Umegaki),
            (KindFlag::Max, None) => Ok(DivergenceKind::MaxRelative),
            (KindFlag::Petz, Some(a)) => Ok(DivergenceKind::Petz(a)),
            (KindFlag::Sandwiched, Some(a)) => Ok(DivergenceKind::Sandwiched(a)),
            (KindFlag::Umegaki | KindFlag::Max, Some(_)) => Err(CliError::Flags(
                "--alpha applies only to the petz and sandwiched families".to_string(),
            )),
            (KindFlag::Petz | KindFlag::Sandwiched, None) => {
                Err(CliError::Flags("this family needs --alpha".to_string()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeFlag {
    /// Locally balanced: conditionally unital and semi-causal
    Lb,
    /// Conditionally unital only
    Cu,
}

/// Parses `argv` (including the program name), runs the command, prints its
/// JSON to standard output, and returns the exit code: 0 for success or a
/// true/feasible verdict, 1 for a false/infeasible verdict, 2 for errors
/// (which go to standard error).
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print on stdout and exit 0; real usage
            // errors print on stderr and exit 2
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match evaluate(cli) {
        Ok(out) => {
            println!("{}", out.json);
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

struct Output {
    json: String,
    exit: i32,
}

/// Test entry point: parse and evaluate without touching the process
/// streams.
fn evaluate_argv<I, T>(argv: I) -> Result<Output, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Flags(e.to_string()))?;
    evaluate(cli)
}

fn evaluate(cli: Cli) -> Result<Output, CliError> {
    let tol_flag = cli.tol;
    match cli.command {
        Command::Entropy { state, kind, alpha } => {
            let rho = load_state(&state)?;
            let kind = kind.resolve(alpha)?;
            let v = entropy::conditional_entropy(kind, &rho)?;
            Ok(Output { json: entropy_json(v.value, v.support_warning), exit: 0 })
        }
        Command::Hmin { state } => {
            let rho = load_state(&state)?;
            let v = entropy::hmin(&rho);
            Ok(Output { json: entropy_json(v.value, v.support_warning), exit: 0 })
        }
        Command::HminUp { state } => {
            let rho = load_state(&state)?;
            let v = entropy::hmin_up(&rho)?;
            Ok(Output { json: entropy_json(v.value, v.support_warning), exit: 0 })
        }
        Command::Reduction { state } => {
            let rho = load_state(&state)?;
            let (_, min_eig) = entropy::reduction_criterion(&rho);
            let holds = min_eig >= -tol_flag.unwrap_or(tol::EPS_PSD);
            let json = format!(
                "{{\"holds\":{holds},\"min_eigenvalue\":{}}}",
                js_num(min_eig)
            );
            Ok(Output { json, exit: (!holds) as i32 })
        }
        Command::Majorize { from, to } => {
            let rho = load_state(&from)?;
            let sigma = load_state(&to)?;
            let v = majorize::majorizes(&rho, &sigma)?;
            // spectral margin is the smallest partial-sum gap; it may dip
            // slightly negative for exact coincidences
            let holds = v.margin >= -tol_flag.unwrap_or(tol::EPS_MAJ);
            let json = format!("{{\"holds\":{holds},\"margin\":{}}}", js_num(v.margin));
            Ok(Output { json, exit: (!holds) as i32 })
        }
        Command::CondMajorize { from, to, mode } => {
            let rho = load_state(&from)?;
            let sigma = load_state(&to)?;
            let mode = match mode {
                ModeFlag::Lb => CondMode::LocallyBalanced,
                ModeFlag::Cu => CondMode::ConditionallyUnital,
            };
            let v = majorize::cond_majorizes(&rho, &sigma, mode)?;
            // the margin is the attained constraint slack; verdicts compare
            // it against the threshold, ties resolving to infeasible
            let feasible = v.margin < tol_flag.unwrap_or(tol::EPS_FEAS);
            let json =
                format!("{{\"feasible\":{feasible},\"margin\":{}}}", js_num(v.margin));
            Ok(Output { json, exit: (!feasible) as i32 })
        }
        Command::ChannelCheck { from } => {
            let n = load_channel(&from)?;
            let r = channels::check_properties(&n).residuals;
            let t = tol_flag.unwrap_or(tol::EPS_PROP);
            let cptp = r.cp <= t && r.tp <= t;
            let unital = r.unital <= t;
            let cu = r.conditionally_unital <= t;
            let sc = r.semi_causal <= t;
            let mut json = String::new();
            let _ = write!(
                json,
                "{{\"cptp\":{cptp},\"unital\":{unital},\"conditionally_unital\":{cu},\
                 \"semi_causal\":{sc},\"locally_balanced\":{}",
                cu && sc
            );
            let _ = write!(
                json,
                ",\"residuals\":{{\"cp\":{},\"tp\":{},\"unital\":{},\
                 \"conditionally_unital\":{},\"semi_causal\":{}}}}}",
                js_num(r.cp),
                js_num(r.tp),
                js_num(r.unital),
                js_num(r.conditionally_unital),
                js_num(r.semi_causal)
            );
            Ok(Output { json, exit: (!cptp) as i32 })
        }
        Command::Verify { seed } => {
            let report = verify::run_verification_suite(seed, &SuiteSizes::default());
            let exit = (!report.pass()) as i32;
            Ok(Output { json: render_verify_report(&report), exit })
        }
    }
}

fn load_state(path: &Path) -> Result<BipartiteState, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_state_file(&bytes)
}

fn load_channel(path: &Path) -> Result<ChoiChannel, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_channel_file(&bytes)
}

// ---------------------------------------------------------------------------
// JSON rendering

/// Formats a float with 16 significant digits in exponent form; non-finite
/// values become quoted strings since JSON has no literals for them.
fn js_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.15e}")
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else if x > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

fn js_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn entropy_json(value: f64, support_warning: bool) -> String {
    if support_warning {
        format!("{{\"value\":{},\"support_warning\":true}}", js_num(value))
    } else {
        format!("{{\"value\":{}}}", js_num(value))
    }
}

/// Renders the suite report: seed, overall verdict, tallies, and the cases
/// in id order.
pub fn render_verify_report(report: &VerifyReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{{\"seed\":{},\"pass\":{},\"summary\":{{\"total\":{},\"passed\":{},\"failed\":{}}},\"cases\":[",
        report.seed,
        report.pass(),
        report.summary.total,
        report.summary.passed,
        report.summary.failed
    );
    for (i, case) in report.cases.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(
            s,
            "{{\"id\":{},\"description\":{},\"expected\":{},\"actual\":{},\"tolerance\":{},\"pass\":{}}}",
            js_str(&case.id),
            js_str(&case.description),
            js_num(case.expected),
            js_num(case.actual),
            js_num(case.tolerance),
            case.pass
        );
    }
    s.push_str("]}");
    s
}
