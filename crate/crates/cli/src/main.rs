use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpir::audit::{
    audit_correctness, audit_privacy_exact, audit_privacy_sampled, audit_structure, AuditReport, Sampling,
    DEFAULT_BUCKETS,
};
use tpir::protocol::client_query_planned;
use tpir::transport::{fetch_all, serve};
use tpir::wire::{decode_records, encode_records};
use tpir::{build_plan, capacity, reconstruct, run_round, Error, Exec, MdsCode, Rate, RecordSet, SchemeParams};

/// T-private information retrieval: parameters, simulation and audits.
#[derive(Parser, Debug)]
#[command(name = "tpir", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the derived scheme parameters.
    Params {
        #[command(flatten)]
        shape: Shape,
    },
    /// Write a random database of M records of length L.
    Gendb {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrieve one record, in process or from running servers.
    Retrieve {
        #[arg(long)]
        db: PathBuf,
        #[arg(short = 'N')]
        servers: usize,
        #[arg(short = 'T')]
        collusion: usize,
        /// Record to retrieve, 1-based.
        #[arg(long)]
        theta: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Server addresses (host:port), one per server, in order.
        #[arg(long = "servers", value_name = "ENDPOINTS", value_delimiter = ',')]
        endpoints: Vec<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Answer queries against a database over TCP until killed.
    Serve {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
    },
    /// Run one of the audits and exit nonzero if it fails.
    Audit {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Transcripts per record for the sampled privacy audit.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_BUCKETS)]
        buckets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run on the calling thread only.
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Shape {
    /// Number of records.
    #[arg(short = 'M')]
    records: usize,
    /// Number of servers.
    #[arg(short = 'N')]
    servers: usize,
    /// Largest colluding coalition.
    #[arg(short = 'T')]
    collusion: usize,
    /// Field modulus, a prime at least N (default: the smallest such prime).
    #[arg(short = 'q')]
    modulus: Option<u64>,
}

impl Shape {
    fn params(&self) -> Result<SchemeParams, Failure> {
        let p = match self.modulus {
            Some(q) => SchemeParams::new(self.records, self.servers, self.collusion, q),
            None => SchemeParams::with_default_field(self.records, self.servers, self.collusion),
        };
        Ok(p?)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Structure,
    Correctness,
    PrivacyExact,
    PrivacySampled,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            // an infeasible request names the mode to use instead
            Error::Params(_) | Error::Infeasible(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn write_report(path: Option<&Path>, lines: &str) -> Result<(), Failure> {
    if let Some(path) = path {
        fs::write(path, lines).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

fn load_db(path: &Path) -> Result<RecordSet, Failure> {
    let bytes = fs::read(path).map_err(|e| io_failure(path, e))?;
    decode_records(&bytes).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn params(shape: &Shape) -> Result<bool, Failure> {
    let p = shape.params()?;
    println!("{p}");
    println!("capacity {}", capacity(p.records(), p.servers(), p.collusion())?);
    Ok(true)
}

fn gendb(shape: &Shape, seed: u64, out: &Path) -> Result<bool, Failure> {
    let p = shape.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let db = RecordSet::random(p.field(), p.records(), p.sub_packetization(), &mut rng);
    fs::write(out, encode_records(&db)).map_err(|e| io_failure(out, e))?;
    println!(
        "wrote {} records of length {} over F_{} to {}",
        db.count(),
        db.record_len(),
        p.field().modulus(),
        out.display()
    );
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn retrieve(
    db_path: &Path,
    servers: usize,
    collusion: usize,
    theta: usize,
    seed: u64,
    endpoints: &[String],
    report: Option<&Path>,
) -> Result<bool, Failure> {
    let db = load_db(db_path)?;
    let p = SchemeParams::new(db.count(), servers, collusion, db.field().modulus() as u64)?;
    if db.record_len() != p.sub_packetization() {
        return Err(Failure::Runtime(format!(
            "records have length {} but N = {servers}, T = {collusion} needs L = {}",
            db.record_len(),
            p.sub_packetization()
        )));
    }
    if theta == 0 || theta > p.records() {
        return Err(Failure::Usage(format!("theta must be in 1..={}, got {theta}", p.records())));
    }
    if !endpoints.is_empty() && endpoints.len() != servers {
        return Err(Failure::Usage(format!("{} endpoints for N = {servers} servers", endpoints.len())));
    }
    let code = MdsCode::new(servers, collusion, p.field())?;
    let plan = Arc::new(build_plan(&p, theta - 1)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (downloaded, recovered) = if endpoints.is_empty() {
        let round = run_round(&plan, &code, &db, &mut rng, Exec::default())?;
        (round.downloaded(), round.recovered)
    } else {
        let (state, queries) = client_query_planned(&plan, &code, &mut rng)?;
        let answers = fetch_all(endpoints, &queries)?;
        let downloaded = answers.iter().map(|a| a.len()).sum();
        (downloaded, reconstruct(&state, &answers, &code)?)
    };
    let success = recovered == db.record(theta - 1);
    let rate = Rate::new(p.sub_packetization() as u128, downloaded as u128);
    let verdict = if success { "SUCCESS" } else { "FAILURE" };
    println!("downloaded {downloaded} symbols, rate {rate}, {verdict}");
    write_report(
        report,
        &format!(
            "check=retrieve\nparams=M={} N={servers} T={collusion} q={}\ntheta={theta}\nseed={seed}\n\
             transport={}\ndownloaded={downloaded}\nrate={rate}\nverdict={}\n",
            p.records(),
            p.field().modulus(),
            if endpoints.is_empty() { "in-process" } else { "tcp" },
            if success { "pass" } else { "fail" },
        ),
    )?;
    Ok(success)
}

fn run_serve(db_path: &Path, bind: &str, port: u16) -> Result<bool, Failure> {
    let db = load_db(db_path)?;
    let listener = TcpListener::bind((bind, port)).map_err(|e| Failure::Runtime(format!("{bind}:{port}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| Failure::Runtime(e.to_string()))?;
    println!(
        "serving {} records of length {} over F_{} on {addr}",
        db.count(),
        db.record_len(),
        db.field().modulus()
    );
    std::io::stdout().flush().ok();
    serve(listener, Arc::new(db), |e| eprintln!("connection error: {e}"))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn audit(
    mode: Mode,
    shape: &Shape,
    trials: usize,
    samples: usize,
    buckets: usize,
    seed: u64,
    exec: Exec,
    report: Option<&Path>,
) -> Result<bool, Failure> {
    let p = shape.params()?;
    let result: AuditReport = match mode {
        Mode::Structure => audit_structure(&p),
        Mode::Correctness => audit_correctness(&p, trials, seed, exec)?,
        Mode::PrivacyExact => audit_privacy_exact(&p, exec)?,
        Mode::PrivacySampled => {
            if buckets == 0 {
                return Err(Failure::Usage("--buckets must be positive".into()));
            }
            let settings = Sampling { samples, buckets, seed };
            audit_privacy_sampled(&p, &settings, exec)?
        }
    };
    println!("{result}");
    write_report(report, &result.to_lines())?;
    Ok(result.pass)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Params { shape } => params(&shape),
        Command::Gendb { shape, seed, out } => gendb(&shape, seed, &out),
        Command::Retrieve {
            db,
            servers,
            collusion,
            theta,
            seed,
            endpoints,
            report,
        } => retrieve(&db, servers, collusion, theta, seed, &endpoints, report.as_deref()),
        Command::Serve { db, port, bind } => run_serve(&db, &bind, port),
        Command::Audit {
            mode,
            shape,
            trials,
            samples,
            buckets,
            seed,
            sequential,
            report,
        } => {
            let exec = if sequential { Exec::Sequential } else { Exec::Parallel };
            audit(mode, &shape, trials, samples, buckets, seed, exec, report.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
