//! Generator and fractional-generator outer bounds on the symmetric DoF.
//!
//! A generator of a user set `S` is a `{0, ±1}` matrix `A` with `|S|` rows
//! whose column signals let a genie decode every user of `S` one after the
//! other: user `i` is decodable once `M_i^S ∈_i^± span(A, I_D)`, where `D`
//! holds the users decoded so far. Any generator gives `d_sym ≤ c(A)/|S|`;
//! a column `c` that also decodes a set `S'` of users on which it vanishes
//! (after adding `Σ_{k∈S'} e_k`) lowers that to
//! `c(A) / (|S| + Σ_i n_S(A_i))`.
//!
//! Decodability only grows with `D`, so a greedy fixed-point closure decides
//! whether some decoding order exists.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, ToPrimitive, Zero};

use crate::bits;
use crate::linalg::{search_signed, verify_sign_witness, RatMatrix, SignTarget, SpanBasis};
use crate::topology::Topology;
use crate::{ratio, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SearchFamily {
    /// `A = M_𝒜^S` for `𝒜 ⊆ S`.
    AdjacencySubsets,
    /// Adjacency subsets plus every single-entry sign flip of one column.
    ExtendedSigned,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterConfig {
    pub family: SearchFamily,
    /// Include the fractional-generator terms. Off gives the plain
    /// `c(A)/|S|` bound.
    pub fractional: bool,
    /// Sign-flip variants tried per `(S, 𝒜)` in the extended family. Hitting
    /// the cap marks the result non-exhaustive.
    pub max_signed_variants: usize,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            family: SearchFamily::AdjacencySubsets,
            fractional: true,
            max_signed_variants: 64,
        }
    }
}

/// Users of `S'` decoded by one column, with their order and witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalCertificate {
    /// Column index into the generator.
    pub column: usize,
    /// `S'` as global user indices, ascending.
    pub subset: Vec<usize>,
    pub order: Vec<usize>,
    pub witnesses: Vec<Vec<i8>>,
}

/// Replayable witness for an outer bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorCertificate {
    /// `S` as global user indices, ascending. Column entries follow this order.
    pub subset: Vec<usize>,
    /// Columns of `A`, each of length `|S|`.
    pub columns: Vec<Vec<i8>>,
    /// Decoding order of `S` (global indices).
    pub order: Vec<usize>,
    /// One witness per decoding step, each of length `|S|`.
    pub witnesses: Vec<Vec<i8>>,
    /// Per column, the maximizing `S'`. Empty when fractional terms are off.
    pub fractional: Vec<FractionalCertificate>,
}

impl GeneratorCertificate {
    /// `c(A) / (|S| + Σ |S'_i|)`.
    pub fn value(&self) -> Rational {
        let extra: usize = self.fractional.iter().map(|f| f.subset.len()).sum();
        ratio(self.columns.len() as i64, (self.subset.len() + extra) as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuterBoundResult {
    pub value: Rational,
    pub certificate: GeneratorCertificate,
    pub family: SearchFamily,
    pub exhaustive: bool,
    /// For adjacency-subset generators, the receivers `𝒜` whose columns form `A`.
    pub receivers: Option<Vec<usize>>,
}

/// Outcome of a decoding closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    /// Decoded users (global mask).
    pub decoded: u32,
    /// Global user indices in the order they were decoded.
    pub order: Vec<usize>,
    /// Witness per step, in the local coordinates of `S`.
    pub witnesses: Vec<Vec<i8>>,
}

/// User set `S` with precomputed restricted columns `M_i^S`.
struct Local {
    users: Vec<usize>,
    /// `targets[p]`: local mask of `M_{users[p]}^S`.
    targets: Vec<u32>,
}

impl Local {
    fn new(t: &Topology, set: u32) -> Self {
        let users = bits::to_vec(set);
        let targets = users.iter().map(|&u| localize(t.heard_by(u), &users)).collect();
        Self { users, targets }
    }

    fn s(&self) -> usize {
        self.users.len()
    }

    fn globalize(&self, local: u32) -> u32 {
        bits::ones(local).fold(0, |m, p| m | 1 << self.users[p])
    }
}

fn localize(mask: u32, users: &[usize]) -> u32 {
    users
        .iter()
        .enumerate()
        .fold(0, |m, (p, &u)| m | ((mask >> u & 1) << p))
}

fn project(col: &[i64], keep: &[usize]) -> Vec<i64> {
    keep.iter().map(|&c| col[c]).collect()
}

/// Greedy closure in local coordinates. `candidates` limits which users may
/// be decoded. Identity columns of decoded users are handled by projecting
/// their coordinates away; witnesses are zero there.
fn closure_local(local: &Local, candidates: u32, base: &[Vec<i64>]) -> (u32, Vec<usize>, Vec<Vec<i8>>) {
    let s = local.s();
    let full = (1u32 << s) - 1;
    let mut decoded = 0u32;
    let mut order = Vec::new();
    let mut witnesses = Vec::new();
    loop {
        let mut progress = false;
        for p in bits::ones(candidates & !decoded) {
            if decoded >> p & 1 == 1 {
                continue;
            }
            let keep: Vec<usize> = bits::to_vec(full & !decoded);
            let cols: Vec<Vec<i64>> = base.iter().map(|c| project(c, &keep)).collect();
            let span = SpanBasis::from_int_columns(keep.len(), &cols);
            let pos = |c: usize| keep.iter().position(|&x| x == c).unwrap();
            let free: Vec<usize> = bits::ones(local.targets[p] & !decoded & !(1 << p)).map(pos).collect();
            if let Some(w) = search_signed(&span, Some(pos(p)), &free, true) {
                let mut full_w = vec![0i8; s];
                for (&c, &x) in keep.iter().zip(&w) {
                    full_w[c] = x;
                }
                decoded |= 1 << p;
                order.push(p);
                witnesses.push(full_w);
                progress = true;
            }
        }
        if !progress || decoded & candidates == candidates {
            return (decoded, order, witnesses);
        }
    }
}

fn to_i64(col: &[i8]) -> Vec<i64> {
    col.iter().map(|&x| i64::from(x)).collect()
}

/// Fixed-point decoding closure of `set` from the generator columns `base`
/// (each of length `|set|`, entries in `{0, ±1}`).
///
/// Panics if a column has the wrong length.
pub fn decoding_closure(t: &Topology, set: u32, base: &[Vec<i8>]) -> Closure {
    let local = Local::new(t, set);
    assert!(base.iter().all(|c| c.len() == local.s()), "column length must equal |S|");
    let cols: Vec<Vec<i64>> = base.iter().map(|c| to_i64(c)).collect();
    let (decoded, order, witnesses) = closure_local(&local, (1 << local.s()) - 1, &cols);
    Closure {
        decoded: local.globalize(decoded),
        order: order.iter().map(|&p| local.users[p]).collect(),
        witnesses,
    }
}

/// Certificate (without fractional terms) if `columns` generate `set`.
pub fn is_generator(t: &Topology, set: u32, columns: &[Vec<i8>]) -> Option<GeneratorCertificate> {
    let c = decoding_closure(t, set, columns);
    (c.decoded == set).then(|| GeneratorCertificate {
        subset: bits::to_vec(set),
        columns: columns.to_vec(),
        order: c.order,
        witnesses: c.witnesses,
        fractional: Vec::new(),
    })
}

/// Largest `S' ⊆ {k ∈ S : c_k = 0}` decoded by `c + Σ_{k∈S'} e_k`, as local
/// `(mask, order, witnesses)`. Sizes are tried in descending order and
/// subsets lexicographically within a size.
fn n_s_local(local: &Local, column: &[i64]) -> (u32, Vec<usize>, Vec<Vec<i8>>) {
    let zeros = (0..local.s()).filter(|&p| column[p] == 0).fold(0u32, |m, p| m | 1 << p);
    for size in (1..=zeros.count_ones() as usize).rev() {
        let mut subs = bits::subsets_of_size(zeros, size);
        subs.sort_by_key(|&m| bits::to_vec(m));
        for sub in subs {
            let mut b = column.to_vec();
            for p in bits::ones(sub) {
                b[p] = 1;
            }
            let (decoded, order, w) = closure_local(local, sub, &[b]);
            if decoded == sub {
                return (sub, order, w);
            }
        }
    }
    (0, Vec::new(), Vec::new())
}

/// `n_S(c)`: the size of the largest set decoded by the fractional
/// generator `c`, with that set (global indices), its order and witnesses.
pub fn n_s(t: &Topology, set: u32, column: &[i8]) -> (usize, FractionalCertificate) {
    let local = Local::new(t, set);
    assert_eq!(column.len(), local.s(), "column length must equal |S|");
    let (sub, order, witnesses) = n_s_local(&local, &to_i64(column));
    let cert = FractionalCertificate {
        column: 0,
        subset: bits::to_vec(local.globalize(sub)),
        order: order.iter().map(|&p| local.users[p]).collect(),
        witnesses,
    };
    (sub.count_ones() as usize, cert)
}

/// Cached `n_S` data for one column within the current `S`.
#[derive(Clone)]
struct Frac {
    size: usize,
    sub: u32,
    order: Vec<usize>,
    witnesses: Vec<Vec<i8>>,
}

struct Best {
    value: Rational,
    cert: GeneratorCertificate,
    receivers: Option<Vec<usize>>,
}

/// Minimizes `c(A) / (|S| + Σ n_S(A_i))` over `S ⊆ [K]` and the configured
/// generator family.
///
/// Sets `S` and receiver sets `𝒜` run in ascending mask order with `|𝒜|`
/// ascending inside each `S`; only strict improvements replace the
/// incumbent. A pair `(|𝒜|, |S|)` is skipped once even the smallest value it
/// could reach (every `n_S` at its maximum `|S| - 1`) is no better.
pub fn outer_bound(t: &Topology, cfg: &OuterConfig) -> OuterBoundResult {
    let k = t.k();
    let mut best: Option<Best> = None;
    let mut exhaustive = true;
    for set in 1u32..(1 << k) {
        let local = Local::new(t, set);
        let s = local.s();
        let adj_cols: Vec<Vec<i64>> = (0..s)
            .map(|p| (0..s).map(|q| i64::from(local.targets[p] >> q & 1)).collect())
            .collect();
        let mut fracs: Vec<Option<Frac>> = vec![None; s];
        for a in 1..=s {
            let floor = if cfg.fractional {
                ratio(a as i64, (s + a * (s - 1)) as i64)
            } else {
                ratio(a as i64, s as i64)
            };
            if best.as_ref().is_some_and(|b| floor >= b.value) {
                break;
            }
            for recv in bits::subsets_of_size((1 << s) - 1, a) {
                let members = bits::to_vec(recv);
                let mut extra = 0;
                if cfg.fractional {
                    for &p in &members {
                        let f = fracs[p].get_or_insert_with(|| {
                            let (sub, order, witnesses) = n_s_local(&local, &adj_cols[p]);
                            Frac {
                                size: sub.count_ones() as usize,
                                sub,
                                order,
                                witnesses,
                            }
                        });
                        extra += f.size;
                    }
                }
                let value = ratio(a as i64, (s + extra) as i64);
                let improves = best.as_ref().is_none_or(|b| value < b.value);
                let cols: Vec<Vec<i64>> = members.iter().map(|&p| adj_cols[p].clone()).collect();
                if improves {
                    let (decoded, order, witnesses) = closure_local(&local, (1 << s) - 1, &cols);
                    if decoded == (1 << s) - 1 {
                        let frac: Vec<Option<Frac>> = members.iter().map(|&p| fracs[p].clone()).collect();
                        best = Some(make_best(&local, value, &cols, order, witnesses, &frac, cfg.fractional, Some(&members)));
                        continue;
                    }
                }
                if cfg.family == SearchFamily::ExtendedSigned {
                    let (found, capped) = search_flips(&local, &cols, cfg, best.as_ref().map(|b| &b.value));
                    exhaustive &= !capped;
                    if let Some(b) = found {
                        best = Some(b);
                    }
                }
            }
        }
    }
    let best = best.expect("singleton sets always give a bound");
    OuterBoundResult {
        value: best.value,
        certificate: best.cert,
        family: cfg.family,
        exhaustive,
        receivers: best.receivers,
    }
}

/// Tries single-entry sign flips of the columns `cols`; returns the best
/// strictly improving generator and whether the variant cap was hit.
fn search_flips(local: &Local, cols: &[Vec<i64>], cfg: &OuterConfig, incumbent: Option<&Rational>) -> (Option<Best>, bool) {
    let s = local.s();
    let mut best: Option<Best> = None;
    let mut tried = 0usize;
    for ci in 0..cols.len() {
        // Flipping the first nonzero entry only negates a two-entry column
        // pattern already covered by flipping the other, so skip it.
        let support: Vec<usize> = (0..s).filter(|&p| cols[ci][p] != 0).skip(1).collect();
        for p in support {
            if tried == cfg.max_signed_variants {
                return (best, true);
            }
            tried += 1;
            let mut v = cols.to_vec();
            v[ci][p] = -v[ci][p];
            let mut frac = Vec::with_capacity(v.len());
            let mut extra = 0;
            for c in &v {
                if cfg.fractional {
                    let (sub, order, witnesses) = n_s_local(local, c);
                    extra += sub.count_ones() as usize;
                    frac.push(Some(Frac {
                        size: sub.count_ones() as usize,
                        sub,
                        order,
                        witnesses,
                    }));
                } else {
                    frac.push(None);
                }
            }
            let value = ratio(v.len() as i64, (s + extra) as i64);
            let bar = best.as_ref().map(|b| &b.value).or(incumbent);
            if bar.is_some_and(|b| value >= *b) {
                continue;
            }
            let (decoded, order, witnesses) = closure_local(local, (1 << s) - 1, &v);
            if decoded == (1 << s) - 1 {
                best = Some(make_best(local, value, &v, order, witnesses, &frac, cfg.fractional, None));
            }
        }
    }
    (best, false)
}

#[allow(clippy::too_many_arguments)]
fn make_best(
    local: &Local,
    value: Rational,
    cols: &[Vec<i64>],
    order: Vec<usize>,
    witnesses: Vec<Vec<i8>>,
    frac: &[Option<Frac>],
    fractional: bool,
    members: Option<&[usize]>,
) -> Best {
    let columns = cols.iter().map(|c| c.iter().map(|&x| x as i8).collect()).collect();
    let fractional = if fractional {
        frac.iter()
            .enumerate()
            .map(|(i, f)| {
                let f = f.as_ref().expect("fractional data computed for every column");
                FractionalCertificate {
                    column: i,
                    subset: bits::to_vec(local.globalize(f.sub)),
                    order: f.order.iter().map(|&p| local.users[p]).collect(),
                    witnesses: f.witnesses.clone(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    Best {
        value,
        cert: GeneratorCertificate {
            subset: local.users.clone(),
            columns,
            order: order.iter().map(|&p| local.users[p]).collect(),
            witnesses,
            fractional,
        },
        receivers: members.map(|m| m.iter().map(|&p| local.users[p]).collect()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayError {
    Shape(&'static str),
    /// The witness for this user does not verify.
    Step { user: usize },
    /// A fractional witness for this user and column does not verify.
    FractionalStep { column: usize, user: usize },
}

/// Re-checks a certificate with the rational reference route and returns
/// the bound it proves.
pub fn replay(t: &Topology, cert: &GeneratorCertificate) -> Result<Rational, ReplayError> {
    let s = cert.subset.len();
    if s == 0 || cert.columns.is_empty() {
        return Err(ReplayError::Shape("empty subset or generator"));
    }
    if cert.subset.windows(2).any(|w| w[0] >= w[1]) || cert.subset.iter().any(|&u| u >= t.k()) {
        return Err(ReplayError::Shape("subset must be ascending user indices"));
    }
    let set = bits::from_slice(&cert.subset);
    let local = Local::new(t, set);
    let entries_ok = |c: &Vec<i8>| c.len() == s && c.iter().all(|x| x.unsigned_abs() <= 1);
    if !cert.columns.iter().all(entries_ok) {
        return Err(ReplayError::Shape("columns must have |S| entries in {0, ±1}"));
    }
    let cols: Vec<Vec<i64>> = cert.columns.iter().map(|c| to_i64(c)).collect();
    let base = RatMatrix::from_int_columns(s, &cols).map_err(|_| ReplayError::Shape("columns"))?;
    replay_steps(&local, &base, &cert.order, &cert.witnesses, set).map_err(|user| ReplayError::Step { user })?;

    let mut extra = 0usize;
    if !cert.fractional.is_empty() {
        if cert.fractional.len() != cert.columns.len()
            || cert.fractional.iter().enumerate().any(|(i, f)| f.column != i)
        {
            return Err(ReplayError::Shape("one fractional entry per column, in order"));
        }
        for f in &cert.fractional {
            let sub = bits::from_slice(&f.subset);
            if sub & !set != 0 {
                return Err(ReplayError::Shape("fractional subset outside S"));
            }
            let lsub = localize(sub, &local.users);
            let mut b = cols[f.column].clone();
            for p in bits::ones(lsub) {
                if b[p] != 0 {
                    return Err(ReplayError::Shape("fractional generator nonzero on its subset"));
                }
                b[p] = 1;
            }
            let base = RatMatrix::from_int_columns(s, &[b]).map_err(|_| ReplayError::Shape("column"))?;
            replay_steps(&local, &base, &f.order, &f.witnesses, sub)
                .map_err(|user| ReplayError::FractionalStep { column: f.column, user })?;
            extra += f.subset.len();
        }
    }
    Ok(ratio(cert.columns.len() as i64, (s + extra) as i64))
}

/// Verifies a decoding sequence over exactly the users of `expect`. Returns
/// the offending user on failure.
fn replay_steps(
    local: &Local,
    base: &RatMatrix,
    order: &[usize],
    witnesses: &[Vec<i8>],
    expect: u32,
) -> Result<(), usize> {
    let s = local.s();
    let mut decoded: Vec<usize> = Vec::new();
    let mut seen = 0u32;
    if order.len() != witnesses.len() {
        return Err(order.first().copied().unwrap_or(usize::MAX));
    }
    for (&user, w) in order.iter().zip(witnesses) {
        let Some(p) = local.users.iter().position(|&u| u == user) else {
            return Err(user);
        };
        if seen >> user & 1 == 1 || w.len() != s {
            return Err(user);
        }
        let pattern: Vec<bool> = (0..s).map(|q| local.targets[p] >> q & 1 == 1).collect();
        let target = SignTarget::new(pattern, p).map_err(|_| user)?;
        let basis = base.with_identity_columns(&decoded);
        if !verify_sign_witness(&target, &basis, w).unwrap_or(false) {
            return Err(user);
        }
        decoded.push(p);
        seen |= 1 << user;
    }
    if seen != expect {
        return Err(bits::ones(expect & !seen).next().unwrap_or(usize::MAX));
    }
    Ok(())
}

/// `true` iff `value` is a plausible bound value in `(0, 1]`.
pub fn in_unit_interval(value: &Rational) -> bool {
    *value > Rational::zero() && *value <= Rational::one() && value.to_f64().is_some()
}
