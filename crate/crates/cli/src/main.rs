use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use topodof::inner::{verify_transmission_matrix, SrcConfig, TransmissionMatrix};
use topodof::outer::SearchFamily;
use topodof::report::{run_bounds, BoundsConfig};
use topodof::simulate::{lemma_match_oracle, poly_tail_check, simulate};
use topodof::topology::{ring_sample, six_cell_enumerate};
use topodof::Topology;

use topodof_cli::format::{self, rational_str, CertificatesJson, ReportRecord, CSV_HEADER};
use topodof_cli::survey::{self, AggregateJson, SurveyError, SurveyOptions};

#[derive(Parser)]
#[command(name = "topodof", version, about = "Degrees-of-freedom bounds for partially connected interference networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outer and inner bounds for one topology.
    Bounds {
        topology: PathBuf,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
        /// Print certificates even when the bounds meet.
        #[arg(long)]
        certificates: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check a transmission matrix against a topology.
    VerifyMatrix { topology: PathBuf, matrix: PathBuf },
    /// Monte Carlo decoding of a transmission matrix.
    Simulate {
        topology: PathBuf,
        matrix: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    #[command(subcommand)]
    Survey(SurveyCommand),
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Largest slot count tried by the repetition-coding search (default K+1).
    #[arg(long)]
    n_max: Option<usize>,
    /// Largest symbol count per user tried by the search.
    #[arg(long)]
    m_max: Option<usize>,
    /// Search nodes per topology, shared by all (m, n) candidates.
    #[arg(long, default_value_t = SrcConfig::default().node_budget)]
    node_budget: u64,
    #[arg(long, value_enum, default_value_t = Family::Adjacency)]
    family: Family,
    /// Drop the fractional terms from the outer bound.
    #[arg(long)]
    plain_outer: bool,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Directory for records, aggregate and CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from the records already in --out.
    #[arg(long, requires = "out")]
    resume: bool,
    #[arg(long)]
    jobs: Option<usize>,
    /// Only run this many evenly spaced distinct topologies.
    #[arg(long)]
    sample: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Subcommand)]
enum SurveyCommand {
    /// Every hexagonal six-cell topology.
    SixCell(RunArgs),
    /// Random clients around a ring of six base stations.
    Ring {
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Matching predicate against random-gain solvability.
    LemmaMatch {
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_rows: usize,
        #[arg(long, default_value_t = 6)]
        max_cols: usize,
    },
    /// Empirical small-value tails of random polynomials against the bound.
    PolyTail {
        #[arg(long)]
        vars: usize,
        #[arg(long, default_value_t = 20_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Adjacency,
    Extended,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Bounds {
            topology,
            json,
            csv,
            certificates,
            search,
        } => bounds(&topology, json, csv, certificates, &search),
        Command::VerifyMatrix { topology, matrix } => verify(&topology, &matrix),
        Command::Simulate {
            topology,
            matrix,
            trials,
            seed,
        } => run_simulate(&topology, &matrix, trials, seed),
        Command::Survey(SurveyCommand::SixCell(run)) => run_survey(six_cell_enumerate(), &run),
        Command::Survey(SurveyCommand::Ring {
            radius,
            samples,
            seed,
            run,
        }) => match ring_sample(radius, seed, samples) {
            Ok(s) => run_survey(s, &run),
            Err(e) => Err(Failure::input(e)),
        },
        Command::Oracle(OracleCommand::LemmaMatch {
            trials,
            seed,
            max_rows,
            max_cols,
        }) => oracle(trials, seed, max_rows, max_cols),
        Command::Oracle(OracleCommand::PolyTail { vars, trials, seed }) => poly_tail(vars, trials, seed),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_topology(path: &Path) -> Result<Topology, Failure> {
    format::parse_topology(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<TransmissionMatrix, Failure> {
    format::parse_matrix(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn config(s: &SearchArgs) -> BoundsConfig {
    let mut cfg = BoundsConfig::default();
    cfg.outer.family = match s.family {
        Family::Adjacency => SearchFamily::AdjacencySubsets,
        Family::Extended => SearchFamily::ExtendedSigned,
    };
    cfg.outer.fractional = !s.plain_outer;
    cfg.inner.src = SrcConfig {
        n_max: s.n_max,
        m_max: s.m_max,
        node_budget: s.node_budget,
    };
    cfg
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("plain data"));
}

fn bounds(path: &Path, json: bool, csv: bool, certificates: bool, search: &SearchArgs) -> Outcome {
    let t = read_topology(path)?;
    let mut cfg = config(search);
    cfg.certificates = true;
    let r = run_bounds(&t, &cfg).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut rec = ReportRecord::from_report(&r);
    let certs = rec.certificates.clone().expect("requested");
    if !certificates && r.tight {
        rec.certificates = None;
    }
    if json {
        print_json(&rec);
    } else if csv {
        let mut w = csv::Writer::from_writer(std::io::stdout());
        w.write_record(CSV_HEADER).and_then(|_| w.write_record(rec.csv_fields())).map_err(|e| Failure::Internal(e.to_string()))?;
        w.flush().map_err(|e| Failure::Internal(e.to_string()))?;
    } else {
        print_text(&rec, &certs, rec.certificates.is_some());
    }
    Ok(())
}

fn print_text(r: &ReportRecord, c: &CertificatesJson, full: bool) {
    let ex = |e: bool| if e { "" } else { "  (search budget hit)" };
    println!("users        {}", r.k);
    println!("cross links  {}", r.cross_links);
    println!("outer        {}{}", r.outer, ex(r.outer_exhaustive));
    println!("rgc          {}", r.rgc);
    println!("ia           {}", r.ia);
    println!("src          {}  (m = {}, n = {}){}", r.src, c.src.m, c.src.n, ex(r.src_exhaustive));
    println!("best inner   {}", r.best);
    println!("tight        {}", if r.tight { "yes" } else { "no" });
    println!("gain / rgc   {}", r.gain_rgc);
    println!("gain / ia    {}", r.gain_ia);
    println!("class        {}", r.canonical_hash);
    if full {
        println!("outer certificate");
        println!("  S      {:?}", c.outer.s);
        for (u, row) in c.outer.s.iter().zip(&c.outer.a) {
            println!("  A[{u}]   {row:?}");
        }
        println!("  order  {:?}", c.outer.order);
        for f in &c.outer.fractional {
            println!("  column {} decodes {:?} in order {:?}", f.col, f.s_prime, f.order);
        }
        println!("fractional coloring, chi_f = {}", c.coloring.chi_f);
        for w in &c.coloring.weights {
            println!("  {:?}  {}", w.set, w.weight);
        }
        println!("transmission matrix (m = {}, n = {})", c.src.m, c.src.n);
        for (l, row) in c.src.rows.iter().enumerate() {
            println!("  user {} symbol {}  {row}", l / c.src.m + 1, l % c.src.m + 1);
        }
    }
}

#[derive(Serialize)]
struct ReceiverJson {
    receiver: usize,
    matching_number: usize,
    failing_rows: Vec<usize>,
}

#[derive(Serialize)]
struct VerdictJson {
    ok: bool,
    ratio: String,
    receivers: Vec<ReceiverJson>,
}

fn verify(topology: &Path, matrix: &Path) -> Outcome {
    let t = read_topology(topology)?;
    let tm = read_matrix(matrix)?;
    let v = verify_transmission_matrix(&t, &tm).map_err(Failure::input)?;
    print_json(&VerdictJson {
        ok: v.ok,
        ratio: rational_str(&tm.ratio()),
        receivers: v
            .receivers
            .iter()
            .map(|r| ReceiverJson {
                receiver: r.receiver + 1,
                matching_number: r.matching_number,
                failing_rows: r.failing_rows.iter().map(|l| l + 1).collect(),
            })
            .collect(),
    });
    if v.ok {
        Ok(())
    } else {
        Err(Failure::Input("matrix is not decodable at every receiver".into()))
    }
}

#[derive(Serialize)]
struct SimulationJson {
    trials: u64,
    successes: u64,
    max_residual: f64,
    mean_log_norm: f64,
    violations: u64,
}

fn run_simulate(topology: &Path, matrix: &Path, trials: u64, seed: u64) -> Outcome {
    let t = read_topology(topology)?;
    let tm = read_matrix(matrix)?;
    verify_transmission_matrix(&t, &tm).map_err(Failure::input)?;
    let s = simulate(&t, &tm, trials, seed);
    print_json(&SimulationJson {
        trials: s.trials,
        successes: s.successes,
        max_residual: s.max_residual,
        mean_log_norm: s.mean_log_norm,
        violations: s.violations,
    });
    Ok(())
}

fn run_survey<I: IntoIterator<Item = Topology>>(topologies: I, run: &RunArgs) -> Outcome {
    let start = Instant::now();
    let (uniq, generated) = survey::dedup(topologies);
    let batch = match run.sample {
        Some(n) => survey::sample_evenly(&uniq, n),
        None => uniq,
    };
    eprintln!("{generated} topologies, {} distinct classes to run", batch.len());
    let opts = SurveyOptions {
        bounds: config(&run.search),
        jobs: run.jobs,
        out: run.out.clone(),
        resume: run.resume,
    };
    let out = survey::run(&batch, generated, &opts).map_err(|e| match e {
        SurveyError::Check { .. } => Failure::Internal(e.to_string()),
        e => Failure::Input(e.to_string()),
    })?;
    eprintln!("done in {:.1?}, {} taken from checkpoint", start.elapsed(), out.resumed);
    print_json(&AggregateJson::new(generated, &out.aggregate));
    Ok(())
}

#[derive(Serialize)]
struct OracleJson {
    trials: u64,
    agree_true: u64,
    agree_false: u64,
    disagreements: Vec<DisagreementJson>,
}

#[derive(Serialize)]
struct DisagreementJson {
    rows: Vec<String>,
    row: usize,
    matching: bool,
    solvable: bool,
}

fn oracle(trials: u64, seed: u64, max_rows: usize, max_cols: usize) -> Outcome {
    if max_rows == 0 || max_cols == 0 || max_cols > 32 {
        return Err(Failure::Input("need 1 <= rows and 1 <= cols <= 32".into()));
    }
    let r = lemma_match_oracle(trials, max_rows, max_cols, seed);
    let n = r.disagreements.len();
    print_json(&OracleJson {
        trials: r.trials,
        agree_true: r.agree_true,
        agree_false: r.agree_false,
        disagreements: r
            .disagreements
            .iter()
            .map(|d| DisagreementJson {
                rows: d.rows.iter().map(|&x| format::mask_to_bits(x, d.cols)).collect(),
                row: d.l + 1,
                matching: d.verdict.matching,
                solvable: d.verdict.solvable,
            })
            .collect(),
    });
    if n > 0 {
        return Err(Failure::Internal(format!("{n} disagreements")));
    }
    Ok(())
}

#[derive(Serialize)]
struct TailJson {
    epsilon: f64,
    estimate: f64,
    bound: f64,
    violated: bool,
}

fn poly_tail(vars: usize, trials: u64, seed: u64) -> Outcome {
    if vars == 0 || vars > 16 {
        return Err(Failure::Input("need 1 <= vars <= 16".into()));
    }
    let eps = [1e-3, 1e-2, 0.05, 0.1, 0.3];
    let r = poly_tail_check(vars, trials, &eps, seed);
    let points: Vec<Vec<TailJson>> = r
        .points
        .iter()
        .map(|(_, pts)| {
            pts.iter()
                .map(|p| TailJson {
                    epsilon: p.epsilon,
                    estimate: p.estimate,
                    bound: p.bound,
                    violated: p.violated,
                })
                .collect()
        })
        .collect();
    print_json(&serde_json::json!({ "vars": vars, "polynomials": points, "violations": r.violations }));
    if r.violations > 0 {
        return Err(Failure::Internal(format!("{} tail violations", r.violations)));
    }
    Ok(())
}
