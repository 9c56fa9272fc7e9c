//! Per-topology bound reports and survey aggregates.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::One;
use thiserror::Error;

use crate::inner::{self, FractionalColoring, InnerConfig, TransmissionMatrix};
use crate::outer::{self, GeneratorCertificate, OuterConfig, ReplayError};
use crate::topology::{Topology, CANON_MAX_USERS};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BoundsConfig {
    pub outer: OuterConfig,
    pub inner: InnerConfig,
    /// Attach certificates to tight reports too.
    pub certificates: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificates {
    pub outer: GeneratorCertificate,
    pub coloring: FractionalColoring,
    pub src: TransmissionMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsReport {
    /// Canonical-form hash, or the plain bit-string hash above
    /// `CANON_MAX_USERS` users.
    pub canonical_hash: u64,
    pub k: usize,
    pub cross_links: usize,
    pub outer: Rational,
    pub rgc: Rational,
    pub ia: Rational,
    pub src: Rational,
    pub best_inner: Rational,
    pub tight: bool,
    pub gain_rgc: Rational,
    pub gain_ia: Rational,
    pub outer_exhaustive: bool,
    pub src_exhaustive: bool,
    /// Always present for non-tight reports.
    pub certificates: Option<Certificates>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("outer certificate does not replay: {0:?}")]
    OuterReplay(ReplayError),
    #[error("outer certificate replays to {replayed}, search reported {reported}")]
    OuterValue { reported: Rational, replayed: Rational },
    #[error("repetition-coding certificate fails verification")]
    SrcReplay,
    #[error("fractional coloring is not a cover of value {0}")]
    Coloring(Rational),
    #[error("inner bound {inner} exceeds outer bound {outer}")]
    Inconsistent { inner: Rational, outer: Rational },
}

/// All bounds for one topology. The SRC search is capped by the outer
/// bound, and every certificate is re-checked before the report is built.
pub fn run_bounds(t: &Topology, cfg: &BoundsConfig) -> Result<BoundsReport, ReportError> {
    let o = outer::outer_bound(t, &cfg.outer);
    let replayed = outer::replay(t, &o.certificate).map_err(ReportError::OuterReplay)?;
    if replayed != o.value {
        return Err(ReportError::OuterValue {
            reported: o.value,
            replayed,
        });
    }
    let mut icfg = cfg.inner.clone();
    icfg.cap = Some(match icfg.cap {
        Some(c) => c.min(o.value.clone()),
        None => o.value.clone(),
    });
    let r = inner::inner_bounds(t, &icfg);
    let verdict = inner::verify_transmission_matrix(t, &r.src_matrix).map_err(|_| ReportError::SrcReplay)?;
    if !verdict.ok || r.src_matrix.ratio() != r.src {
        return Err(ReportError::SrcReplay);
    }
    check_coloring(t, &r.coloring)?;
    if r.best > o.value {
        return Err(ReportError::Inconsistent {
            inner: r.best,
            outer: o.value,
        });
    }
    let tight = r.best == o.value;
    let certificates = (cfg.certificates || !tight).then(|| Certificates {
        outer: o.certificate.clone(),
        coloring: r.coloring.clone(),
        src: r.src_matrix.clone(),
    });
    Ok(BoundsReport {
        canonical_hash: if t.k() <= CANON_MAX_USERS {
            t.canonical_form().hash
        } else {
            t.bit_hash()
        },
        k: t.k(),
        cross_links: t.cross_links(),
        gain_rgc: &r.src / &r.rgc,
        gain_ia: &r.src / &r.ia,
        outer: o.value,
        rgc: r.rgc,
        ia: r.ia,
        src: r.src,
        best_inner: r.best,
        tight,
        outer_exhaustive: o.exhaustive,
        src_exhaustive: r.src_exhaustive,
        certificates,
    })
}

/// The weights must be independent sets covering every user at least once
/// with total `chi_f`.
fn check_coloring(t: &Topology, c: &FractionalColoring) -> Result<(), ReportError> {
    let g = t.conflict_graph();
    let total: Rational = c.weights.iter().map(|(_, w)| w.clone()).sum();
    let covered = (0..t.k()).all(|v| {
        let cover: Rational = c.weights.iter().filter(|(u, _)| u >> v & 1 == 1).map(|(_, w)| w.clone()).sum();
        cover >= Rational::one()
    });
    if total != c.chi_f || !covered || c.weights.iter().any(|(u, _)| !g.is_independent(*u)) {
        return Err(ReportError::Coloring(c.chi_f.clone()));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrossLinkStats {
    pub count: u64,
    pub beats_rgc: u64,
    pub beats_ia: u64,
    pub beats_both: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurveyAggregate {
    pub count: u64,
    pub tight: u64,
    /// Non-tight reports, by canonical hash.
    pub gaps: Vec<BoundsReport>,
    /// `d_sym` of tight topologies. Together with `gaps` this covers
    /// every topology.
    pub dsym: BTreeMap<Rational, u64>,
    /// Gains above one only.
    pub gain_rgc: BTreeMap<Rational, u64>,
    pub gain_ia: BTreeMap<Rational, u64>,
    /// SRC strictly above both benchmarks.
    pub beats_both: u64,
    /// Topologies attaining the largest gain over both benchmarks at once.
    pub max_gain_both: u64,
    pub by_cross_links: BTreeMap<usize, CrossLinkStats>,
    pub src_non_exhaustive: u64,
    pub outer_non_exhaustive: u64,
}

/// Order-independent summary of a set of reports.
pub fn aggregate<'a, I: IntoIterator<Item = &'a BoundsReport>>(reports: I) -> SurveyAggregate {
    let one = Rational::one();
    let mut a = SurveyAggregate::default();
    let mut all: Vec<&BoundsReport> = reports.into_iter().collect();
    all.sort_by_key(|r| r.canonical_hash);
    for r in &all {
        a.count += 1;
        if r.tight {
            a.tight += 1;
            *a.dsym.entry(r.outer.clone()).or_default() += 1;
        } else {
            a.gaps.push((*r).clone());
        }
        let (win_rgc, win_ia) = (r.gain_rgc > one, r.gain_ia > one);
        if win_rgc {
            *a.gain_rgc.entry(r.gain_rgc.clone()).or_default() += 1;
        }
        if win_ia {
            *a.gain_ia.entry(r.gain_ia.clone()).or_default() += 1;
        }
        let c = a.by_cross_links.entry(r.cross_links).or_default();
        c.count += 1;
        c.beats_rgc += u64::from(win_rgc);
        c.beats_ia += u64::from(win_ia);
        c.beats_both += u64::from(win_rgc && win_ia);
        a.beats_both += u64::from(win_rgc && win_ia);
        a.src_non_exhaustive += u64::from(!r.src_exhaustive);
        a.outer_non_exhaustive += u64::from(!r.outer_exhaustive);
    }
    if let (Some(g1), Some(g2)) = (a.gain_rgc.keys().last(), a.gain_ia.keys().last()) {
        a.max_gain_both = all.iter().filter(|r| &r.gain_rgc == g1 && &r.gain_ia == g2).count() as u64;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;
    use crate::testutil::{arb_topology, fixture};
    use proptest::prelude::*;

    #[test]
    fn report_goldens() {
        let cfg = BoundsConfig::default();
        let r = run_bounds(&fixture("six_user_repetition"), &cfg).unwrap();
        assert_eq!((r.outer.clone(), r.best_inner.clone()), (ratio(1, 3), ratio(1, 3)));
        assert!(r.tight && r.certificates.is_none());

        let r = run_bounds(&fixture("max_gain"), &cfg).unwrap();
        assert_eq!((r.outer.clone(), r.src.clone(), r.rgc.clone(), r.ia.clone()), (ratio(1, 2), ratio(1, 2), ratio(1, 4), ratio(1, 3)));
        assert_eq!((r.gain_rgc.clone(), r.gain_ia.clone()), (ratio(2, 1), ratio(3, 2)));

        let r = run_bounds(&Topology::identity(3), &cfg).unwrap();
        assert!(r.tight);
        assert_eq!((r.outer, r.rgc, r.ia, r.src), (ratio(1, 1), ratio(1, 1), ratio(1, 1), ratio(1, 1)));
    }

    #[test]
    fn gap_reports_carry_certificates() {
        let r = run_bounds(&fixture("wide_gap_a"), &BoundsConfig::default()).unwrap();
        assert!(!r.tight);
        let c = r.certificates.unwrap();
        let t = fixture("wide_gap_a");
        assert_eq!(outer::replay(&t, &c.outer).unwrap(), r.outer);
        assert!(inner::verify_transmission_matrix(&t, &c.src).unwrap().ok);
    }

    #[test]
    fn aggregate_counts() {
        let cfg = BoundsConfig::default();
        let reports: Vec<BoundsReport> = ["six_user_repetition", "max_gain", "wide_gap_a", "pentagon"]
            .iter()
            .map(|n| run_bounds(&fixture(n), &cfg).unwrap())
            .collect();
        let a = aggregate(&reports);
        assert_eq!(a.count, 4);
        assert_eq!(a.tight + a.gaps.len() as u64, a.count);
        assert_eq!(a.dsym.values().sum::<u64>(), a.tight);
        let winners = reports.iter().filter(|r| r.gain_rgc > Rational::one()).count() as u64;
        assert_eq!(a.gain_rgc.values().sum::<u64>(), winners);
        let mut rev = reports.clone();
        rev.reverse();
        assert_eq!(aggregate(&rev), a);
    }

    /// Dense random networks can need a long search to rule out the rates
    /// between the inner and outer bound, so property runs use a small budget.
    fn quick() -> BoundsConfig {
        let mut cfg = BoundsConfig::default();
        cfg.inner.src.node_budget = 50_000;
        cfg
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn inner_never_exceeds_outer(t in arb_topology(6)) {
            let r = run_bounds(&t, &quick()).unwrap();
            prop_assert!(r.best_inner <= r.outer);
            prop_assert!(r.rgc <= r.best_inner && r.ia <= r.best_inner);
        }

        #[test]
        fn bounds_are_relabeling_invariant(t in arb_topology(6), seed in any::<u64>()) {
            let k = t.k();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut s = seed;
            for i in (1..k).rev() {
                perm.swap(i, (s % (i as u64 + 1)) as usize);
                s /= i as u64 + 1;
            }
            let a = run_bounds(&t, &quick()).unwrap();
            let b = run_bounds(&t.relabel(&perm), &quick()).unwrap();
            prop_assert_eq!(a.canonical_hash, b.canonical_hash);
            prop_assert_eq!((&a.outer, &a.rgc, &a.ia), (&b.outer, &b.rgc, &b.ia));
            if a.src_exhaustive && b.src_exhaustive {
                prop_assert_eq!(a.src, b.src);
            }
        }
    }
}
