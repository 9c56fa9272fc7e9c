//! Batch harness: deduplicate, run bounds in parallel, checkpoint, aggregate.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use topodof::report::{self, BoundsConfig, BoundsReport, ReportError, SurveyAggregate};
use topodof::topology::{Canonicalizer, CANON_MAX_USERS};
use topodof::Topology;

use crate::format::{self, FormatError, ReportRecord, CSV_HEADER};
use crate::store::Store;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const CSV_FILE: &str = "reports.csv";

#[derive(Debug, Error)]
pub enum SurveyError {
    #[error("{0} already holds records; pass --resume or choose another directory")]
    Exists(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("stored record does not parse: {0}")]
    Record(#[from] FormatError),
    #[error("certificate check failed on {} topologies, first {hash}: {error}", failures)]
    Check {
        failures: usize,
        hash: String,
        error: ReportError,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SurveyError + '_ {
    move |source| SurveyError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Clone, Debug, Default)]
pub struct SurveyOptions {
    pub bounds: BoundsConfig,
    /// Worker threads; `None` uses rayon's default.
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub resume: bool,
}

#[derive(Clone, Debug)]
pub struct SurveyOutcome {
    /// Topologies offered before deduplication.
    pub generated: u64,
    pub aggregate: SurveyAggregate,
    /// Sorted by canonical hash.
    pub reports: Vec<BoundsReport>,
    /// Reports taken from the checkpoint instead of being recomputed.
    pub resumed: usize,
}

/// Canonical representatives in first-seen order, one per isomorphism
/// class, plus the number of inputs.
pub fn dedup<I: IntoIterator<Item = Topology>>(topologies: I) -> (Vec<Topology>, u64) {
    let mut canon: BTreeMap<usize, Canonicalizer> = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut n = 0;
    for t in topologies {
        n += 1;
        let rep = if t.k() <= CANON_MAX_USERS {
            canon.entry(t.k()).or_insert_with(|| Canonicalizer::new(t.k())).canonicalize(&t).topology()
        } else {
            t
        };
        if seen.insert((rep.k(), rep.bit_string())) {
            out.push(rep);
        }
    }
    (out, n)
}

/// `count` items spread evenly over `items`, in order.
pub fn sample_evenly<T: Clone>(items: &[T], count: usize) -> Vec<T> {
    if count >= items.len() {
        return items.to_vec();
    }
    (0..count).map(|i| items[i * items.len() / count].clone()).collect()
}

fn key(t: &Topology) -> String {
    let h = if t.k() <= CANON_MAX_USERS {
        t.canonical_form().hash
    } else {
        t.bit_hash()
    };
    format::hash_str(h)
}

/// Runs the bounds on every topology not already in the checkpoint, then
/// aggregates over all records. `topologies` should already be deduplicated.
pub fn run(topologies: &[Topology], generated: u64, opts: &SurveyOptions) -> Result<SurveyOutcome, SurveyError> {
    let mut store = match &opts.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(RECORDS_FILE);
            let nonempty = fs::metadata(&path).map(|m| m.len() > 0).unwrap_or(false);
            if nonempty && !opts.resume {
                return Err(SurveyError::Exists(dir.clone()));
            }
            Some(Store::open(&path).map_err(io_err(&path))?)
        }
        None => None,
    };
    let pending: Vec<(String, &Topology)> = topologies
        .iter()
        .map(|t| (key(t), t))
        .filter(|(k, _)| store.as_ref().is_none_or(|s| !s.contains(k)))
        .collect();
    let resumed = topologies.len() - pending.len();

    let shared = Mutex::new((&mut store, BTreeMap::<String, ReportRecord>::new()));
    let failures = Mutex::new(Vec::<(String, ReportError)>::new());
    let write_error = Mutex::new(None::<SurveyError>);
    let work = || {
        pending.par_iter().for_each(|(k, t)| match report::run_bounds(t, &opts.bounds) {
            Ok(r) => {
                let rec = ReportRecord::from_report(&r);
                let mut g = shared.lock().unwrap();
                if let Some(s) = g.0.as_mut() {
                    if let Err(e) = s.append(&rec) {
                        let path = s.path().to_owned();
                        write_error.lock().unwrap().get_or_insert(SurveyError::Io { path, source: e });
                    }
                }
                g.1.insert(k.clone(), rec);
            }
            Err(e) => failures.lock().unwrap().push((k.clone(), e)),
        })
    };
    match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
    if let Some(e) = write_error.into_inner().unwrap() {
        return Err(e);
    }
    let mut failures = failures.into_inner().unwrap();
    if !failures.is_empty() {
        failures.sort_by(|a, b| a.0.cmp(&b.0));
        let n = failures.len();
        let (hash, error) = failures.swap_remove(0);
        return Err(SurveyError::Check {
            failures: n,
            hash,
            error,
        });
    }

    let (_, fresh) = shared.into_inner().unwrap();
    let mut records = fresh;
    if let Some(s) = &store {
        let wanted: HashSet<String> = topologies.iter().map(key).collect();
        for r in s.records().filter(|r| wanted.contains(&r.canonical_hash)) {
            records.entry(r.canonical_hash.clone()).or_insert_with(|| r.clone());
        }
    }
    let reports = records.values().map(ReportRecord::to_report).collect::<Result<Vec<_>, _>>()?;
    let aggregate = report::aggregate(&reports);
    if let Some(dir) = &opts.out {
        write_outputs(dir, generated, &aggregate, records.values())?;
    }
    Ok(SurveyOutcome {
        generated,
        aggregate,
        reports,
        resumed,
    })
}

fn write_outputs<'a>(
    dir: &Path,
    generated: u64,
    a: &SurveyAggregate,
    records: impl Iterator<Item = &'a ReportRecord>,
) -> Result<(), SurveyError> {
    let path = dir.join(CSV_FILE);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush().map_err(io_err(&path))?;
    let path = dir.join(AGGREGATE_FILE);
    let json = serde_json::to_string_pretty(&AggregateJson::new(generated, a)).expect("plain data");
    fs::write(&path, json + "\n").map_err(io_err(&path))
}

#[derive(Serialize)]
pub struct CrossLinkJson {
    pub count: u64,
    pub beats_rgc: u64,
    pub beats_ia: u64,
    pub beats_both: u64,
    pub win_fraction_both: f64,
}

/// Survey summary as written to `aggregate.json`.
#[derive(Serialize)]
pub struct AggregateJson {
    pub generated: u64,
    pub count: u64,
    pub tight: u64,
    pub non_tight: u64,
    pub dsym: BTreeMap<String, u64>,
    pub gain_rgc: BTreeMap<String, u64>,
    pub gain_ia: BTreeMap<String, u64>,
    pub beats_both: u64,
    pub max_gain_both: u64,
    pub by_cross_links: BTreeMap<usize, CrossLinkJson>,
    pub src_non_exhaustive: u64,
    pub outer_non_exhaustive: u64,
    pub gaps: Vec<ReportRecord>,
}

fn histogram(h: &BTreeMap<topodof::Rational, u64>) -> BTreeMap<String, u64> {
    h.iter().map(|(q, n)| (format::rational_str(q), *n)).collect()
}

impl AggregateJson {
    pub fn new(generated: u64, a: &SurveyAggregate) -> Self {
        Self {
            generated,
            count: a.count,
            tight: a.tight,
            non_tight: a.gaps.len() as u64,
            dsym: histogram(&a.dsym),
            gain_rgc: histogram(&a.gain_rgc),
            gain_ia: histogram(&a.gain_ia),
            beats_both: a.beats_both,
            max_gain_both: a.max_gain_both,
            by_cross_links: a
                .by_cross_links
                .iter()
                .map(|(&c, s)| {
                    (
                        c,
                        CrossLinkJson {
                            count: s.count,
                            beats_rgc: s.beats_rgc,
                            beats_ia: s.beats_ia,
                            beats_both: s.beats_both,
                            win_fraction_both: s.beats_both as f64 / s.count as f64,
                        },
                    )
                })
                .collect(),
            src_non_exhaustive: a.src_non_exhaustive,
            outer_non_exhaustive: a.outer_non_exhaustive,
            gaps: a.gaps.iter().map(ReportRecord::from_report).collect(),
        }
    }
}
