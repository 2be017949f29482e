//! Command-line front ends for the client and server executables.
//!
//! Each command returns its process exit code; the binaries only forward
//! `std::env::args_os` and exit with the result.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;

use crate::engine::{crack_with, CrackOptions, CrackReport, EngineError, Progress};
use crate::hashers::Registry;
use crate::keyspace::{CorpusSource, KeyspaceError, KeyspaceSpec};
use crate::planner::plan_file::load_store;
use crate::planner::{expected_candidates_exact, Plan, PlanError, PlanRequest, DEFAULT_TOLERANCE};
use crate::potfile::{self, PotfileWriter};
use crate::predicate::PredicateVector;
use crate::protocol::{run_job, ClientSession, PlanSource, Server, ServerConfig, SessionError};
use crate::verifier::{chk_cs, verify, Outcome, VerifyOptions, DEFAULT_Z_THRESHOLD};

/// Process exit codes. Every command maps each outcome to exactly one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(i32)]
pub enum Exit {
    Ok = 0,
    /// The server could not bind its listen address.
    Bind = 1,
    /// Bad flags, unreadable or malformed input files.
    Usage = 2,
    NotCracked = 3,
    FoulPlay = 4,
    Connection = 5,
    Protocol = 6,
    Io = 7,
    /// No acceptable vector, or the target was already planned.
    Plan = 8,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

pub const CORPUS_DIR_ENV: &str = "THREEPC_CORPUS_DIR";
pub const DEFAULT_POTFILE: &str = "candidates.pot";

#[derive(Parser, Debug)]
#[command(name = "threepc-client", version, about = "Plan, run and verify privacy-preserving cracking jobs")]
struct ClientCli {
    #[command(subcommand)]
    cmd: ClientCmd,
}

#[derive(Subcommand, Debug)]
enum ClientCmd {
    /// Choose a decoy vector for a target and write a plan file.
    Plan(PlanArgs),
    /// Send a job to a server (or crack offline) and collect candidates.
    Run(RunArgs),
    /// Check a candidate set against its plan.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct JobArgs {
    /// Hash algorithm: crc32, sha256 or ntlm.
    #[arg(long)]
    algo: Option<String>,
    /// Target digest in hex. Never sent to the server.
    #[arg(long)]
    target: Option<String>,
    /// wordlist:<name>, mask:<tokens> or hybrid:<name>:<tokens>.
    #[arg(long)]
    keyspace: Option<String>,
    /// Number of candidates the server should return.
    #[arg(long)]
    r: Option<String>,
    /// Accepted relative error between the realized and ideal decoy-set size.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory holding wordlists named in --keyspace.
    #[arg(long, env = CORPUS_DIR_ENV)]
    corpus_dir: Option<PathBuf>,
    /// Keyspace size, for wordlists that exist only on the server.
    #[arg(long)]
    keyspace_size: Option<BigUint>,
    /// Use this vector (hex) instead of generating one.
    #[arg(long)]
    vector: Option<String>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Plan file to write; other plans in its directory form the plan store.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    job: JobArgs,
    /// Existing plan file; otherwise the job flags are planned in-session.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Server address, host:port.
    #[arg(long)]
    server: Option<String>,
    /// Crack in-process instead of contacting a server.
    #[arg(long)]
    offline: bool,
    /// Upload the local wordlist with the job.
    #[arg(long)]
    upload: bool,
    /// Engine threads for offline runs.
    #[arg(long)]
    workers: Option<usize>,
    /// Potfile to write.
    #[arg(long, default_value = DEFAULT_POTFILE)]
    out: PathBuf,
    /// Where to save an in-session plan (default: <out>.plan).
    #[arg(long)]
    plan_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value = DEFAULT_POTFILE)]
    potfile: PathBuf,
    #[arg(long, default_value_t = DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
    /// Pairs to re-hash (default: min(1000, hits)).
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Parser, Debug)]
#[command(name = "threepc-server", version, about = "Crack decoy sets for remote clients")]
struct ServerCli {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    #[arg(long, env = CORPUS_DIR_ENV)]
    corpus_dir: Option<PathBuf>,
    /// Engine threads per job (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

/// Error text plus the exit code it maps to.
struct Fail(Exit, String);

impl Fail {
    fn usage(msg: impl ToString) -> Self {
        Fail(Exit::Usage, msg.to_string())
    }
}

impl From<PlanError> for Fail {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::Io(_) => Exit::Io,
            PlanError::PlanFile(_)
            | PlanError::BadNumber(_)
            | PlanError::BadTolerance(_)
            | PlanError::NonPositiveR
            | PlanError::EmptyKeyspace
            | PlanError::PackingLength { .. }
            | PlanError::TargetOutsideVector => Exit::Usage,
            _ => Exit::Plan,
        };
        Fail(code, e.to_string())
    }
}

impl From<KeyspaceError> for Fail {
    fn from(e: KeyspaceError) -> Self {
        match e {
            KeyspaceError::Io(..) => Fail(Exit::Io, e.to_string()),
            _ => Fail::usage(e),
        }
    }
}

impl From<potfile::PotfileError> for Fail {
    fn from(e: potfile::PotfileError) -> Self {
        match e {
            potfile::PotfileError::Io(..) => Fail(Exit::Io, e.to_string()),
            potfile::PotfileError::Parse { .. } => Fail::usage(e),
        }
    }
}

impl From<SessionError> for Fail {
    fn from(e: SessionError) -> Self {
        if let SessionError::Plan(p) = e {
            return Fail::from(p);
        }
        let code = match &e {
            SessionError::Plan(_) => Exit::Plan,
            SessionError::Connect(_) | SessionError::ConnectionLost { .. } => Exit::Connection,
            SessionError::Server { .. }
            | SessionError::Protocol(_)
            | SessionError::DigestLength { .. } => Exit::Protocol,
            SessionError::Sink(_) | SessionError::Potfile(potfile::PotfileError::Io(..)) => Exit::Io,
            SessionError::Potfile(_) | SessionError::Hash(_) => Exit::Usage,
        };
        Fail(code, e.to_string())
    }
}

fn parse_or_usage<P: Parser>(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> Result<P, i32> {
    P::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        let text = e.render().to_string();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = write!(out, "{text}");
                Exit::Ok.code()
            }
            _ => {
                let _ = write!(err, "{text}");
                Exit::Usage.code()
            }
        }
    })
}

/// Entry point of `threepc-client`.
pub fn client_main(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli: ClientCli = match parse_or_usage(args, out, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let result = match cli.cmd {
        ClientCmd::Plan(a) => cmd_plan(&a, out),
        ClientCmd::Run(a) => cmd_run(&a, out, err),
        ClientCmd::Verify(a) => cmd_verify(&a, out),
    };
    match result {
        Ok(exit) => exit.code(),
        Err(Fail(exit, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            exit.code()
        }
    }
}

/// Entry point of `threepc-server`. Blocks while serving.
pub fn server_main(args: impl IntoIterator<Item = OsString>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli: ServerCli = match parse_or_usage(args, out, err) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(dir) = &cli.corpus_dir {
        if !dir.is_dir() {
            let _ = writeln!(err, "error: corpus directory {} does not exist", dir.display());
            return Exit::Usage.code();
        }
    }
    let mut config = ServerConfig {
        corpus_dir: cli.corpus_dir,
        ..ServerConfig::default()
    };
    if let Some(w) = cli.workers {
        if w == 0 {
            let _ = writeln!(err, "error: --workers must be at least 1");
            return Exit::Usage.code();
        }
        config.workers = w;
    }
    let workers = config.workers;
    let server = match Server::bind(&cli.listen, config) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: cannot listen on {}: {e}", cli.listen);
            return Exit::Bind.code();
        }
    };
    if let Ok(addr) = server.local_addr() {
        let _ = writeln!(out, "listening on {addr} with {workers} workers");
        let _ = out.flush();
    }
    server.run();
    Exit::Ok.code()
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, Fail> {
    v.as_deref().ok_or_else(|| Fail::usage(format!("--{flag} is required")))
}

fn corpus_source(job: &JobArgs) -> CorpusSource {
    job.corpus_dir.as_ref().map_or(CorpusSource::None, CorpusSource::dir)
}

/// `|DS|` from --keyspace-size, or by resolving the keyspace locally.
fn keyspace_size(job: &JobArgs, keyspace: &str) -> Result<BigUint, Fail> {
    if let Some(n) = &job.keyspace_size {
        return Ok(n.clone());
    }
    match KeyspaceSpec::parse(keyspace, &corpus_source(job)) {
        Ok(spec) => Ok(spec.cardinality().clone()),
        Err(KeyspaceError::UnknownCorpus(name)) => Err(Fail::usage(format!(
            "wordlist {name:?} is not in the local corpus directory; pass --corpus-dir or --keyspace-size"
        ))),
        Err(e) => Err(e.into()),
    }
}

fn plan_request(job: &JobArgs) -> Result<PlanRequest, Fail> {
    let algo = required(&job.algo, "algo")?;
    let hasher = Registry::default().get(algo).map_err(Fail::usage)?;
    let target = hasher
        .parse_digest(required(&job.target, "target")?)
        .map_err(Fail::usage)?;
    let keyspace = required(&job.keyspace, "keyspace")?;
    let keyspace_size = keyspace_size(job, keyspace)?;
    let r = match (&job.r, &job.vector) {
        (Some(r), _) => r.clone(),
        (None, Some(v)) => {
            // Report the vector's own expected count.
            let v = PredicateVector::from_hex(v).map_err(Fail::usage)?;
            let e = expected_candidates_exact(&v, &keyspace_size);
            format!("{}/{}", e.numer(), e.denom())
        }
        (None, None) => return Err(Fail::usage("--r is required")),
    };
    Ok(PlanRequest {
        algo: hasher.id().to_string(),
        target,
        keyspace: keyspace.to_string(),
        keyspace_size,
        r,
        tolerance: job.tolerance,
        seed: job.seed.unwrap_or_else(rand::random),
    })
}

fn make_plan(job: &JobArgs, store_dir: &Path) -> Result<Plan, Fail> {
    let req = plan_request(job)?;
    let mut store = load_store(store_dir)?;
    let plan = match &job.vector {
        Some(v) => {
            let v = PredicateVector::from_hex(v).map_err(Fail::usage)?;
            Plan::from_vector(req, v, &mut store)?
        }
        None => Plan::build(req, &mut store)?,
    };
    Ok(plan)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_plan(plan: &Plan, path: &Path) -> Result<(), Fail> {
    plan.write(path)
        .map_err(|e| Fail(Exit::Io, format!("{}: {e}", path.display())))
}

fn print_plan(plan: &Plan, path: &Path, out: &mut dyn Write) {
    let _ = writeln!(out, "plan: {}", path.display());
    if plan.nv_target.abs() >= 1e15 {
        let _ = writeln!(out, "nv_target: {:.6e}", plan.nv_target);
    } else {
        let _ = writeln!(out, "nv_target: {:.6}", plan.nv_target);
    }
    let _ = writeln!(out, "vector: {}", plan.vector);
    let _ = writeln!(out, "cardinality: {}", plan.cardinality);
    let _ = writeln!(out, "expected_candidates: {:.4}", plan.expected_candidates);
    let _ = writeln!(out, "deniability: {:e}", plan.deniability);
    let _ = writeln!(out, "seed: {}", plan.seed);
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<Exit, Fail> {
    let path = match &a.out {
        Some(p) => p.clone(),
        None => PathBuf::from(format!(
            "{}.plan",
            required(&a.job.target, "target")?.to_ascii_lowercase()
        )),
    };
    let plan = make_plan(&a.job, &parent_dir(&path))?;
    write_plan(&plan, &path)?;
    print_plan(&plan, &path, out);
    Ok(Exit::Ok)
}

fn print_report(out: &mut dyn Write, hashed: u64, hits: u64, skipped: Option<u64>, secs: f64) {
    let _ = writeln!(out, "hashed: {hashed}");
    let _ = writeln!(out, "hits: {hits}");
    if let Some(s) = skipped {
        let _ = writeln!(out, "skipped: {s}");
    }
    let _ = writeln!(out, "elapsed: {secs:.3} s");
    let rate = if secs > 0.0 { hashed as f64 / secs } else { 0.0 };
    let _ = writeln!(out, "rate: {rate:.0} H/s");
}

fn cmd_run(a: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<Exit, Fail> {
    if a.offline == a.server.is_some() {
        return Err(Fail::usage("exactly one of --offline or --server is required"));
    }
    if a.workers == Some(0) {
        return Err(Fail::usage("--workers must be at least 1"));
    }
    let plan_path = a.plan_out.clone().unwrap_or_else(|| {
        let mut p = a.out.as_os_str().to_owned();
        p.push(".plan");
        PathBuf::from(p)
    });
    let existing = match &a.plan {
        Some(p) => Some(Plan::read(p).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let registry = Registry::default();

    if let Some(server) = &a.server {
        let corpus = if a.upload {
            let plan_keyspace = existing
                .as_ref()
                .map(|p| p.keyspace.clone())
                .or_else(|| a.job.keyspace.clone())
                .ok_or_else(|| Fail::usage("--keyspace is required"))?;
            let spec = KeyspaceSpec::parse(&plan_keyspace, &corpus_source(&a.job))?;
            let words = spec
                .words()
                .ok_or_else(|| Fail::usage("--upload needs a wordlist or hybrid keyspace"))?;
            Some(words.to_bytes())
        } else {
            None
        };
        let mut session = ClientSession::connect(server.as_str())?;
        let outcome = match &existing {
            Some(plan) => run_job(&mut session, &registry, PlanSource::Plan(plan), corpus.as_deref(), &a.out),
            None => {
                let req = plan_request(&a.job)?;
                let mut store = load_store(&parent_dir(&plan_path))?;
                let source = match &a.job.vector {
                    Some(v) => PlanSource::Vector(req, PredicateVector::from_hex(v).map_err(Fail::usage)?, &mut store),
                    None => PlanSource::Request(req, &mut store),
                };
                let outcome = run_job(&mut session, &registry, source, corpus.as_deref(), &a.out);
                if let Ok(o) = &outcome {
                    write_plan(&o.plan, &plan_path)?;
                    print_plan(&o.plan, &plan_path, out);
                }
                outcome
            }
        };
        let o = outcome?;
        let _ = writeln!(out, "server_rate: {} H/s", o.info.rate_hps);
        print_report(out, o.summary.hashed, o.summary.hits, None, o.summary.elapsed_ms as f64 / 1000.0);
        if o.summary.received != o.summary.hits {
            let _ = writeln!(
                err,
                "warning: server reported {} hits but sent {}",
                o.summary.hits, o.summary.received
            );
        }
        let _ = writeln!(out, "potfile: {}", a.out.display());
        print_lookup(out, &o.lookup);
        return Ok(Exit::Ok);
    }

    let plan = match existing {
        Some(p) => p,
        None => {
            let plan = make_plan(&a.job, &parent_dir(&plan_path))?;
            write_plan(&plan, &plan_path)?;
            print_plan(&plan, &plan_path, out);
            plan
        }
    };
    let hasher = registry.get(&plan.algo).map_err(Fail::usage)?;
    let spec = KeyspaceSpec::parse(&plan.keyspace, &corpus_source(&a.job))?;
    potfile::clear_partial(&a.out)?;
    let writer = PotfileWriter::create(&a.out)?;
    let progress = |p: Progress| {
        eprintln!(
            "progress: {}/{} hashed, {:.0} H/s, eta {:.0} s",
            p.done,
            p.total,
            p.rate,
            p.eta.as_secs_f64()
        );
    };
    let opts = CrackOptions {
        workers: a.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        progress: Some(&progress),
        ..CrackOptions::default()
    };
    let report: CrackReport = match crack_with(&plan.vector, &spec, hasher.as_ref(), writer, &opts) {
        Ok(r) => r,
        Err(EngineError::Sink { source, .. }) => {
            potfile::mark_partial(&a.out)?;
            return Err(Fail(Exit::Io, format!("{}: {source}", a.out.display())));
        }
        Err(EngineError::Keyspace(e)) => return Err(e.into()),
        Err(e) => return Err(Fail::usage(e)),
    };
    print_report(out, report.hashed, report.hits, Some(report.skipped), report.elapsed.as_secs_f64());
    let _ = writeln!(out, "potfile: {}", a.out.display());
    let pairs = potfile::read_potfile(&a.out, hasher.digest_nibbles())?;
    print_lookup(out, &chk_cs(&pairs, &plan.target, hasher.as_ref()));
    Ok(Exit::Ok)
}

fn print_lookup(out: &mut dyn Write, lookup: &crate::verifier::TargetLookup) {
    let _ = writeln!(out, "cracked: {}", if lookup.cracked() { "yes" } else { "no" });
    for c in &lookup.cleartexts {
        let _ = writeln!(out, "cleartext: {}", String::from_utf8_lossy(c));
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<Exit, Fail> {
    let plan = Plan::read(&a.plan).map_err(|e| Fail::usage(format!("{}: {e}", a.plan.display())))?;
    let hasher = Registry::default().get(&plan.algo).map_err(Fail::usage)?;
    let pairs = match potfile::read_potfile(&a.potfile, hasher.digest_nibbles()) {
        Ok(p) => p,
        Err(e) => return Err(Fail::usage(format!("{}: {e}", a.potfile.display()))),
    };
    let expected = crate::planner::expected_candidates(&plan.vector, &plan.keyspace_size);
    let opts = VerifyOptions {
        z_threshold: a.z_threshold,
        sample_size: a.sample_size,
        seed: a.seed.unwrap_or_else(rand::random),
    };
    let mut verdict = verify(&pairs, &plan.target, &plan.vector, hasher.as_ref(), expected, &opts)
        .map_err(Fail::usage)?;
    verdict.partial = potfile::is_partial(&a.potfile);
    let _ = write!(out, "{verdict}");
    Ok(match verdict.outcome() {
        Outcome::Cracked => Exit::Ok,
        Outcome::NotCracked => Exit::NotCracked,
        Outcome::FoulPlay => Exit::FoulPlay,
    })
}
