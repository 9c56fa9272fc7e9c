//! Text and JSON file formats.
//!
//! Users are numbered from 1 in every JSON document; the core crate counts
//! from 0. Rationals are always written as `"p/q"` strings.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use topodof::inner::{FractionalColoring, TransmissionMatrix};
use topodof::outer::{FractionalCertificate, GeneratorCertificate};
use topodof::report::{BoundsReport, Certificates};
use topodof::topology::MAX_USERS;
use topodof::{Rational, Topology};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("empty topology file")]
    Empty,
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("bad rational {0:?}")]
    Rational(String),
    #[error("bad bit-string {0:?}")]
    Bits(String),
    #[error("user label {0} out of range")]
    Label(usize),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Topology(#[from] topodof::topology::TopologyError),
    #[error(transparent)]
    Matrix(#[from] topodof::inner::TmError),
}

pub fn rational_str(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn parse_rational(s: &str) -> Result<Rational, FormatError> {
    let bad = || FormatError::Rational(s.to_owned());
    let (p, q) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
    let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
    let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
    if q == BigInt::from(0) {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

#[derive(Serialize, Deserialize)]
struct TopologyJson {
    k: usize,
    adj: Vec<Vec<u8>>,
}

/// Reads either format; a leading `{` selects JSON.
pub fn parse_topology(text: &str) -> Result<Topology, FormatError> {
    if text.trim_start().starts_with('{') {
        let j: TopologyJson = serde_json::from_str(text)?;
        if j.adj.len() != j.k || j.adj.iter().any(|r| r.len() != j.k) {
            return Err(FormatError::Line {
                line: 1,
                msg: format!("adj must be {0}x{0}", j.k),
            });
        }
        let adj: Vec<Vec<bool>> = j.adj.iter().map(|r| r.iter().map(|&x| x != 0).collect()).collect();
        return Ok(Topology::from_matrix(&adj)?);
    }
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (n0, first) = lines.next().ok_or(FormatError::Empty)?;
    let k: usize = first.parse().map_err(|_| FormatError::Line {
        line: n0,
        msg: format!("expected user count, found {first:?}"),
    })?;
    if k == 0 || k > MAX_USERS {
        return Err(FormatError::Line {
            line: n0,
            msg: format!("user count must be in 1..={MAX_USERS}"),
        });
    }
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let (n, l) = lines.next().ok_or(FormatError::Line {
            line: n0,
            msg: format!("expected {k} rows"),
        })?;
        if l.len() != k || !l.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(FormatError::Line {
                line: n,
                msg: format!("row must be {k} characters of 0/1"),
            });
        }
        rows.push(bits_to_mask(l));
    }
    if let Some((n, _)) = lines.next() {
        return Err(FormatError::Line {
            line: n,
            msg: "trailing content".into(),
        });
    }
    Ok(Topology::from_rows(rows)?)
}

pub fn topology_text(t: &Topology) -> String {
    let mut s = format!("{}\n", t.k());
    for &r in t.rows() {
        s.push_str(&mask_to_bits(r, t.k()));
        s.push('\n');
    }
    s
}

pub fn topology_json(t: &Topology) -> String {
    let adj = (0..t.k()).map(|i| (0..t.k()).map(|j| u8::from(t.get(i, j))).collect()).collect();
    serde_json::to_string(&TopologyJson { k: t.k(), adj }).expect("plain data")
}

fn bits_to_mask(s: &str) -> u32 {
    s.bytes().enumerate().fold(0, |m, (j, b)| m | (u32::from(b == b'1') << j))
}

pub fn mask_to_bits(mask: u32, len: usize) -> String {
    (0..len).map(|j| if mask >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// `rows[l]`, `l = i·m + r`, has character `s` set when symbol `r` of user
/// `i` goes out in slot `s`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MatrixJson {
    pub m: usize,
    pub n: usize,
    pub rows: Vec<String>,
}

impl MatrixJson {
    pub fn from_matrix(tm: &TransmissionMatrix) -> Self {
        Self {
            m: tm.m(),
            n: tm.n(),
            rows: tm.rows().iter().map(|&r| mask_to_bits(r, tm.n())).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<TransmissionMatrix, FormatError> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for r in &self.rows {
            if r.len() != self.n || !r.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(FormatError::Bits(r.clone()));
            }
            rows.push(bits_to_mask(r));
        }
        Ok(TransmissionMatrix::new(self.m, self.n, rows)?)
    }
}

pub fn parse_matrix(text: &str) -> Result<TransmissionMatrix, FormatError> {
    serde_json::from_str::<MatrixJson>(text)?.to_matrix()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FractionalJson {
    pub col: usize,
    #[serde(rename = "Sprime")]
    pub s_prime: Vec<usize>,
    pub order: Vec<usize>,
    pub witnesses: Vec<Vec<i8>>,
}

/// `A` is stored row-wise: row `r` belongs to the `r`-th user of `S`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CertificateJson {
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<i8>>,
    pub order: Vec<usize>,
    pub witnesses: Vec<Vec<i8>>,
    pub fractional: Vec<FractionalJson>,
}

fn labels(v: &[usize]) -> Vec<usize> {
    v.iter().map(|&u| u + 1).collect()
}

fn unlabel(v: &[usize]) -> Result<Vec<usize>, FormatError> {
    v.iter().map(|&u| u.checked_sub(1).ok_or(FormatError::Label(u))).collect()
}

impl CertificateJson {
    pub fn from_certificate(c: &GeneratorCertificate) -> Self {
        let a = (0..c.subset.len()).map(|r| c.columns.iter().map(|col| col[r]).collect()).collect();
        Self {
            s: labels(&c.subset),
            a,
            order: labels(&c.order),
            witnesses: c.witnesses.clone(),
            fractional: c
                .fractional
                .iter()
                .map(|f| FractionalJson {
                    col: f.column + 1,
                    s_prime: labels(&f.subset),
                    order: labels(&f.order),
                    witnesses: f.witnesses.clone(),
                })
                .collect(),
        }
    }

    pub fn to_certificate(&self) -> Result<GeneratorCertificate, FormatError> {
        let width = self.a.first().map_or(0, Vec::len);
        if self.a.len() != self.s.len() || self.a.iter().any(|r| r.len() != width) {
            return Err(FormatError::Line {
                line: 0,
                msg: "A must have one row per user of S".into(),
            });
        }
        let columns = (0..width).map(|c| self.a.iter().map(|r| r[c]).collect()).collect();
        let mut fractional = Vec::with_capacity(self.fractional.len());
        for f in &self.fractional {
            fractional.push(FractionalCertificate {
                column: f.col.checked_sub(1).ok_or(FormatError::Label(f.col))?,
                subset: unlabel(&f.s_prime)?,
                order: unlabel(&f.order)?,
                witnesses: f.witnesses.clone(),
            });
        }
        Ok(GeneratorCertificate {
            subset: unlabel(&self.s)?,
            columns,
            order: unlabel(&self.order)?,
            witnesses: self.witnesses.clone(),
            fractional,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ColorJson {
    pub set: Vec<usize>,
    pub weight: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ColoringJson {
    pub chi_f: String,
    pub weights: Vec<ColorJson>,
}

impl ColoringJson {
    pub fn from_coloring(c: &FractionalColoring) -> Self {
        Self {
            chi_f: rational_str(&c.chi_f),
            weights: c
                .weights
                .iter()
                .map(|(set, w)| ColorJson {
                    set: (0..32).filter(|v| set >> v & 1 == 1).map(|v| v + 1).collect(),
                    weight: rational_str(w),
                })
                .collect(),
        }
    }

    pub fn to_coloring(&self) -> Result<FractionalColoring, FormatError> {
        let mut weights = Vec::with_capacity(self.weights.len());
        for c in &self.weights {
            let mut set = 0u32;
            for &u in &c.set {
                if u == 0 || u > 32 {
                    return Err(FormatError::Label(u));
                }
                set |= 1 << (u - 1);
            }
            weights.push((set, parse_rational(&c.weight)?));
        }
        Ok(FractionalColoring {
            chi_f: parse_rational(&self.chi_f)?,
            weights,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CertificatesJson {
    pub outer: CertificateJson,
    pub coloring: ColoringJson,
    pub src: MatrixJson,
}

/// One checkpoint / report record. The hash is a 16-digit hex string.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReportRecord {
    pub canonical_hash: String,
    pub k: usize,
    pub cross_links: usize,
    pub outer: String,
    pub rgc: String,
    pub ia: String,
    pub src: String,
    pub best: String,
    pub tight: bool,
    pub gain_rgc: String,
    pub gain_ia: String,
    pub outer_exhaustive: bool,
    pub src_exhaustive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificatesJson>,
}

pub fn hash_str(h: u64) -> String {
    format!("{h:016x}")
}

impl ReportRecord {
    pub fn from_report(r: &BoundsReport) -> Self {
        Self {
            canonical_hash: hash_str(r.canonical_hash),
            k: r.k,
            cross_links: r.cross_links,
            outer: rational_str(&r.outer),
            rgc: rational_str(&r.rgc),
            ia: rational_str(&r.ia),
            src: rational_str(&r.src),
            best: rational_str(&r.best_inner),
            tight: r.tight,
            gain_rgc: rational_str(&r.gain_rgc),
            gain_ia: rational_str(&r.gain_ia),
            outer_exhaustive: r.outer_exhaustive,
            src_exhaustive: r.src_exhaustive,
            certificates: r.certificates.as_ref().map(|c| CertificatesJson {
                outer: CertificateJson::from_certificate(&c.outer),
                coloring: ColoringJson::from_coloring(&c.coloring),
                src: MatrixJson::from_matrix(&c.src),
            }),
        }
    }

    pub fn to_report(&self) -> Result<BoundsReport, FormatError> {
        let certificates = match &self.certificates {
            None => None,
            Some(c) => Some(Certificates {
                outer: c.outer.to_certificate()?,
                coloring: c.coloring.to_coloring()?,
                src: c.src.to_matrix()?,
            }),
        };
        Ok(BoundsReport {
            canonical_hash: u64::from_str_radix(&self.canonical_hash, 16)
                .map_err(|_| FormatError::Bits(self.canonical_hash.clone()))?,
            k: self.k,
            cross_links: self.cross_links,
            outer: parse_rational(&self.outer)?,
            rgc: parse_rational(&self.rgc)?,
            ia: parse_rational(&self.ia)?,
            src: parse_rational(&self.src)?,
            best_inner: parse_rational(&self.best)?,
            tight: self.tight,
            gain_rgc: parse_rational(&self.gain_rgc)?,
            gain_ia: parse_rational(&self.gain_ia)?,
            outer_exhaustive: self.outer_exhaustive,
            src_exhaustive: self.src_exhaustive,
            certificates,
        })
    }
}

pub const CSV_HEADER: [&str; 12] = [
    "canonical_hash",
    "k",
    "cross_links",
    "outer",
    "rgc",
    "ia",
    "src",
    "best",
    "tight",
    "gain_rgc",
    "gain_ia",
    "src_exhaustive",
];

impl ReportRecord {
    pub fn csv_fields(&self) -> [String; 12] {
        [
            self.canonical_hash.clone(),
            self.k.to_string(),
            self.cross_links.to_string(),
            self.outer.clone(),
            self.rgc.clone(),
            self.ia.clone(),
            self.src.clone(),
            self.best.clone(),
            self.tight.to_string(),
            self.gain_rgc.clone(),
            self.gain_ia.clone(),
            self.src_exhaustive.to_string(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use topodof::ratio;

    #[test]
    fn rationals_round_trip() {
        for (p, q) in [(0, 1), (2, 5), (-3, 7), (4, 2)] {
            let r = ratio(p, q);
            assert_eq!(parse_rational(&rational_str(&r)).unwrap(), r);
        }
        assert_eq!(rational_str(&ratio(1, 1)), "1/1");
        assert_eq!(parse_rational("3").unwrap(), ratio(3, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn text_and_json_topologies_agree() {
        let text = "# pentagon\n5\n10110\n01000\n00100\n11010\n01101\n";
        let t = parse_topology(text).unwrap();
        assert_eq!(parse_topology(&topology_text(&t)).unwrap(), t);
        assert_eq!(parse_topology(&topology_json(&t)).unwrap(), t);
        assert!(t.get(0, 2) && !t.get(2, 0));
    }

    #[test]
    fn malformed_topologies_are_rejected() {
        for bad in ["", "2\n10\n", "2\n10\n0x\n", "2\n101\n01\n", "2\n00\n01\n", "2\n10\n01\n11\n", "{\"k\":2,\"adj\":[[1]]}"] {
            assert!(parse_topology(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn matrix_json_round_trips() {
        let text = r#"{"m":1,"n":3,"rows":["100","010","101","101","110","010"]}"#;
        let tm = parse_matrix(text).unwrap();
        assert_eq!(tm.rows(), [0b001, 0b010, 0b101, 0b101, 0b011, 0b010]);
        assert_eq!(MatrixJson::from_matrix(&tm).to_matrix().unwrap(), tm);
        assert!(parse_matrix(r#"{"m":2,"n":2,"rows":["11","01"]}"#).is_err());
    }
}
