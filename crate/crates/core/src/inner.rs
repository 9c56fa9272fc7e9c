//! Achievable symmetric DoF: random Gaussian coding (`1/Δ_R`), interference
//! avoidance (`1/χ_f` of the conflict graph) and structured repetition
//! coding (SRC) certified by matching numbers.
//!
//! A transmission matrix `T` has `mK` rows (row `i·m + r` is symbol `r` of
//! transmitter `i`, zero-based) and `n` columns (time slots), stored as slot
//! masks. Receiver `j` sees only the rows of transmitters it hears; it can
//! decode its own symbols iff removing any one of its own rows lowers the
//! matching number of that effective matrix by one.

use alloc::vec;
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::bits;
use crate::lp;
use crate::topology::{ConflictGraph, Topology};
use crate::{ratio, Rational};

/// `1 / Δ_R`, the random Gaussian coding inner bound.
pub fn rgc(t: &Topology) -> Rational {
    ratio(1, t.max_receiver_degree() as i64)
}

/// All maximal independent sets, sorted by their ascending member lists.
///
/// Bron–Kerbosch with pivoting on the complement graph.
pub fn maximal_independent_sets(g: &ConflictGraph) -> Vec<u32> {
    let k = g.k();
    let all = if k == 0 { 0 } else { u32::MAX >> (32 - k) };
    let non_nbrs: Vec<u32> = (0..k).map(|v| all & !g.neighbours(v) & !(1 << v)).collect();
    let mut out = Vec::new();
    bron_kerbosch(&non_nbrs, 0, all, 0, &mut out);
    out.sort_by_key(|&m| bits::to_vec(m));
    out
}

fn bron_kerbosch(nbrs: &[u32], r: u32, mut p: u32, mut x: u32, out: &mut Vec<u32>) {
    if p == 0 {
        if x == 0 {
            out.push(r);
        }
        return;
    }
    let pivot = bits::ones(p | x).max_by_key(|&u| (nbrs[u] & p).count_ones()).unwrap();
    for v in bits::ones(p & !nbrs[pivot]) {
        bron_kerbosch(nbrs, r | 1 << v, p & nbrs[v], x & nbrs[v], out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}

/// Optimal fractional coloring: `chi_f` and the weight of every maximal
/// independent set that carries a positive weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FractionalColoring {
    pub chi_f: Rational,
    pub weights: Vec<(u32, Rational)>,
}

/// Fractional chromatic number by exact simplex on the packing dual
/// `max Σ y_v  s.t.  Σ_{v∈U} y_v ≤ 1` over maximal independent sets `U`.
/// The covering weights are read off the final objective row.
pub fn fractional_chromatic(g: &ConflictGraph) -> FractionalColoring {
    let sets = maximal_independent_sets(g);
    let k = g.k();
    let one = Rational::one();
    let a: Vec<Vec<Rational>> = sets
        .iter()
        .map(|&u| (0..k).map(|v| if u >> v & 1 == 1 { one.clone() } else { Rational::zero() }).collect())
        .collect();
    let b = vec![one.clone(); sets.len()];
    let c = vec![one; k];
    let sol = lp::maximize(&a, &b, &c).expect("every vertex lies in some independent set");
    let weights = sets
        .iter()
        .zip(sol.dual)
        .filter(|(_, w)| !w.is_zero())
        .map(|(&u, w)| (u, w))
        .collect();
    FractionalColoring {
        chi_f: sol.value,
        weights,
    }
}

/// Maximum bipartite matching of rows against columns (`rows[r]` is the
/// column mask of row `r`). Returns the matched column per row.
pub fn maximum_matching(rows: &[u32]) -> Vec<Option<usize>> {
    let mut col_owner = [usize::MAX; 32];
    for r in 0..rows.len() {
        let mut seen = 0u32;
        augment(rows, r, &mut seen, &mut col_owner);
    }
    let mut out = vec![None; rows.len()];
    for (c, &r) in col_owner.iter().enumerate() {
        if r != usize::MAX {
            out[r] = Some(c);
        }
    }
    out
}

fn augment(rows: &[u32], r: usize, seen: &mut u32, owner: &mut [usize; 32]) -> bool {
    for c in bits::ones(rows[r] & !*seen) {
        *seen |= 1 << c;
        if owner[c] == usize::MAX || augment(rows, owner[c], seen, owner) {
            owner[c] = r;
            return true;
        }
    }
    false
}

/// Size of a maximum matching.
pub fn matching_number(rows: &[u32]) -> usize {
    let mut owner = [usize::MAX; 32];
    let mut size = 0;
    for r in 0..rows.len() {
        if rows[r] == 0 {
            continue;
        }
        let mut seen = 0u32;
        if augment(rows, r, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TmError {
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("need 1 <= m <= n <= 32, got m = {m}, n = {n}")]
    Dimensions { m: usize, n: usize },
    #[error("row {row} uses slots beyond n")]
    SlotRange { row: usize },
    #[error("transmitter {transmitter} sends two symbols in slot {slot}")]
    BlockConflict { transmitter: usize, slot: usize },
    #[error("symbol row {row} is never sent")]
    EmptySymbol { row: usize },
}

/// Structured repetition coding schedule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransmissionMatrix {
    m: usize,
    n: usize,
    rows: Vec<u32>,
}

impl TransmissionMatrix {
    /// Validates the shape, the one-symbol-per-slot rule and that every
    /// symbol is sent at least once.
    pub fn new(m: usize, n: usize, rows: Vec<u32>) -> Result<Self, TmError> {
        if m == 0 || n == 0 || m > n || n > 32 {
            return Err(TmError::Dimensions { m, n });
        }
        if rows.len() % m != 0 {
            return Err(TmError::RowCount {
                expected: rows.len().next_multiple_of(m),
                found: rows.len(),
            });
        }
        let full = if n == 32 { u32::MAX } else { (1 << n) - 1 };
        for (l, &r) in rows.iter().enumerate() {
            if r & !full != 0 {
                return Err(TmError::SlotRange { row: l });
            }
        }
        for (i, block) in rows.chunks(m).enumerate() {
            let mut used = 0u32;
            for &r in block {
                if let Some(slot) = bits::ones(used & r).next() {
                    return Err(TmError::BlockConflict { transmitter: i, slot });
                }
                used |= r;
            }
        }
        if let Some(l) = rows.iter().position(|&r| r == 0) {
            return Err(TmError::EmptySymbol { row: l });
        }
        Ok(Self { m, n, rows })
    }

    /// Builds a matrix from per-transmitter slot values (`0` silent,
    /// `1..=m` the symbol sent).
    pub fn from_schedules(m: usize, n: usize, schedules: &[Vec<u8>]) -> Result<Self, TmError> {
        let mut rows = vec![0u32; m * schedules.len()];
        for (i, s) in schedules.iter().enumerate() {
            for (slot, &v) in s.iter().enumerate().take(n) {
                if v as usize > m {
                    return Err(TmError::Dimensions { m, n });
                }
                if v > 0 {
                    rows[i * m + v as usize - 1] |= 1 << slot;
                }
            }
        }
        Self::new(m, n, rows)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    /// Number of transmitters.
    pub fn users(&self) -> usize {
        self.rows.len() / self.m
    }

    pub fn ratio(&self) -> Rational {
        ratio(self.m as i64, self.n as i64)
    }

    /// Slot values of transmitter `i` (`0` silent, `r + 1` for symbol `r`).
    pub fn schedule(&self, i: usize) -> Vec<u8> {
        let mut s = vec![0u8; self.n];
        for r in 0..self.m {
            for slot in bits::ones(self.rows[i * self.m + r]) {
                s[slot] = r as u8 + 1;
            }
        }
        s
    }

    /// Applies a user relabeling: block `a` of the result is block
    /// `perm[a]` here.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let rows = perm
            .iter()
            .flat_map(|&p| self.rows[p * self.m..(p + 1) * self.m].iter().copied())
            .collect();
        Self { rows, ..self.clone() }
    }

    /// Applies a slot permutation: slot `s` moves to `perm[s]`.
    pub fn permute_slots(&self, perm: &[usize]) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|&r| bits::ones(r).fold(0, |m, s| m | 1 << perm[s]))
            .collect();
        Self { rows, ..self.clone() }
    }
}

/// `T̄^j`: rows of transmitters not heard by receiver `j` zeroed.
pub fn effective_matrix(t: &Topology, tm: &TransmissionMatrix, j: usize) -> Vec<u32> {
    let heard = t.heard_by(j);
    tm.rows
        .iter()
        .enumerate()
        .map(|(l, &r)| if heard >> (l / tm.m) & 1 == 1 { r } else { 0 })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceiverCheck {
    pub receiver: usize,
    pub matching_number: usize,
    /// Own symbol rows whose removal does not lower the matching number.
    pub failing_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmVerdict {
    pub ok: bool,
    pub receivers: Vec<ReceiverCheck>,
}

/// Checks `μ(Ḡ^j) − μ(Ḡ^j ∖ l) = 1` for every receiver `j` and own row `l`.
pub fn verify_transmission_matrix(t: &Topology, tm: &TransmissionMatrix) -> Result<TmVerdict, TmError> {
    if tm.users() != t.k() {
        return Err(TmError::RowCount {
            expected: t.k() * tm.m,
            found: tm.rows.len(),
        });
    }
    let tm = TransmissionMatrix::new(tm.m, tm.n, tm.rows.clone())?;
    let mut receivers = Vec::with_capacity(t.k());
    for j in 0..t.k() {
        let eff = effective_matrix(t, &tm, j);
        let mu = matching_number(&eff);
        let mut failing_rows = Vec::new();
        for l in j * tm.m..(j + 1) * tm.m {
            let mut without = eff.clone();
            without[l] = 0;
            if mu - matching_number(&without) != 1 {
                failing_rows.push(l);
            }
        }
        receivers.push(ReceiverCheck {
            receiver: j,
            matching_number: mu,
            failing_rows,
        });
    }
    Ok(TmVerdict {
        ok: receivers.iter().all(|r| r.failing_rows.is_empty()),
        receivers,
    })
}

/// Transmission matrix realising a fractional coloring: with `D` the common
/// denominator of the weights, set `U` gets `w_U·D` consecutive slots, and
/// every user sends its `D` symbols in the first `D` slots of the sets that
/// contain it.
pub fn ia_embedding(coloring: &FractionalColoring, k: usize) -> Option<TransmissionMatrix> {
    let d = coloring
        .weights
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    let m = d.to_usize()?;
    let mut slots_of: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut next = 0usize;
    for (u, w) in &coloring.weights {
        let count = (w * Rational::from_integer(d.clone())).to_integer().to_usize()?;
        for _ in 0..count {
            for v in bits::ones(*u) {
                slots_of[v].push(next);
            }
            next += 1;
        }
    }
    if next > 32 || m > next {
        return None;
    }
    let mut rows = vec![0u32; m * k];
    for (v, slots) in slots_of.iter().enumerate() {
        for (r, &s) in slots.iter().take(m).enumerate() {
            rows[v * m + r] = 1 << s;
        }
    }
    TransmissionMatrix::new(m, next, rows).ok()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrcConfig {
    /// Largest number of slots; `None` means `K + 1`.
    pub n_max: Option<usize>,
    /// Largest number of symbols per user; `None` leaves it at `n`.
    pub m_max: Option<usize>,
    /// Search nodes (complete transmitter rows tried) before giving up.
    pub node_budget: u64,
}

impl Default for SrcConfig {
    fn default() -> Self {
        Self {
            n_max: None,
            m_max: None,
            node_budget: 20_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrcResult {
    /// Best ratio found strictly inside `(floor, cap]`, with its matrix.
    pub found: Option<(Rational, TransmissionMatrix)>,
    /// No candidate above the returned value was cut by the budget.
    pub exhaustive: bool,
    pub nodes: u64,
}

/// `(m, n)` pairs with `floor < m/n ≤ cap`, by decreasing ratio and then
/// increasing `n`.
pub fn src_candidates(n_max: usize, floor: Option<&Rational>, cap: Option<&Rational>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for m in 1..=n {
            let r = ratio(m as i64, n as i64);
            if floor.is_some_and(|f| r <= *f) || cap.is_some_and(|c| r > *c) {
                continue;
            }
            out.push((m, n));
        }
    }
    out.sort_by(|a, b| {
        let ra = ratio(a.0 as i64, a.1 as i64);
        let rb = ratio(b.0 as i64, b.1 as i64);
        rb.cmp(&ra).then(a.1.cmp(&b.1))
    });
    out
}

/// Finds the largest SRC ratio `m/n` with `n ≤ n_max` in `(floor, cap]`.
pub fn src_search(t: &Topology, cfg: &SrcConfig, floor: Option<&Rational>, cap: Option<&Rational>) -> SrcResult {
    let n_max = cfg.n_max.unwrap_or(t.k() + 1).min(32);
    // A receiver with an interferer needs 2m independent slots.
    let half = ratio(1, 2);
    let cap = match cap {
        Some(c) if t.cross_links() > 0 => Some(c.clone().min(half)),
        Some(c) => Some(c.clone()),
        None if t.cross_links() > 0 => Some(half),
        None => None,
    };
    let mut nodes = 0u64;
    let mut exhaustive = true;
    let m_max = cfg.m_max.unwrap_or(usize::MAX);
    for (m, n) in src_candidates(n_max, floor, cap.as_ref()).into_iter().filter(|&(m, _)| m <= m_max) {
        let mut s = Search::new(t, m, n, cfg.node_budget.saturating_sub(nodes));
        let hit = s.run();
        nodes += s.nodes;
        exhaustive &= !s.cut;
        if let Some(tm) = hit {
            return SrcResult {
                found: Some((ratio(m as i64, n as i64), tm)),
                exhaustive,
                nodes,
            };
        }
        if nodes >= cfg.node_budget {
            exhaustive = false;
            break;
        }
    }
    SrcResult {
        found: None,
        exhaustive,
        nodes,
    }
}

/// Depth-first search for one fixed `(m, n)`.
///
/// Symmetry breaking, transmitters taken in `order`:
/// * a transmitter's symbols first appear in increasing label order;
/// * within a run of slots whose columns agree on all earlier transmitters,
///   the current transmitter's values are non-decreasing under
///   `1 < 2 < … < m < silent`.
///
/// Some representative of every solution class satisfies both. Adding rows
/// can only break a receiver's condition, so a receiver is checked as soon
/// as it and any of its heard transmitters are placed.
struct Search<'a> {
    t: &'a Topology,
    m: usize,
    n: usize,
    order: Vec<usize>,
    heard: Vec<u32>,
    rows: Vec<u32>,
    /// Per slot, `true` when it continues the run of the previous slot.
    same_run: Vec<Vec<bool>>,
    vals: Vec<Vec<u8>>,
    /// Receivers other than `i` that hear transmitter `i`.
    listeners: Vec<u32>,
    full: u32,
    assigned: u32,
    budget: u64,
    nodes: u64,
    cut: bool,
}

impl<'a> Search<'a> {
    fn new(t: &'a Topology, m: usize, n: usize, budget: u64) -> Self {
        let k = t.k();
        Self {
            t,
            m,
            n,
            order: transmitter_order(t),
            heard: t.columns(),
            rows: vec![0; m * k],
            same_run: vec![vec![false; n]; k + 1],
            vals: vec![vec![0; n]; k],
            listeners: (0..k).map(|i| t.rows()[i] & !(1 << i)).collect(),
            full: if n == 32 { u32::MAX } else { (1 << n) - 1 },
            assigned: 0,
            budget,
            nodes: 0,
            cut: false,
        }
    }

    fn run(&mut self) -> Option<TransmissionMatrix> {
        for s in 1..self.n {
            self.same_run[0][s] = true;
        }
        if self.dfs(0) {
            let tm = TransmissionMatrix::new(self.m, self.n, self.rows.clone()).expect("search builds valid rows");
            debug_assert!(verify_transmission_matrix(self.t, &tm).unwrap().ok);
            Some(tm)
        } else {
            None
        }
    }

    fn key(&self, v: u8) -> u8 {
        if v == 0 {
            self.m as u8 + 1
        } else {
            v
        }
    }

    fn dfs(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        self.fill(depth, 0, 0)
    }

    /// Chooses the value of slot `slot` for transmitter `order[depth]`.
    /// The transmitter's rows are kept up to date slot by slot.
    fn fill(&mut self, depth: usize, slot: usize, max_used: u8) -> bool {
        if self.cut {
            return false;
        }
        let m = self.m as u8;
        if slot == self.n {
            if max_used != m {
                return false;
            }
            return self.place(depth);
        }
        // Unused symbols still need a slot each.
        if (m - max_used) as usize > self.n - slot {
            return false;
        }
        let i = self.order[depth];
        let run = self.same_run[depth][slot];
        let prev_key = if run { self.key(self.vals[depth][slot - 1]) } else { 0 };
        let top = (max_used + 1).min(m);
        for v in (1..=top).chain(core::iter::once(0)) {
            if self.key(v) < prev_key {
                continue;
            }
            self.vals[depth][slot] = v;
            let row = (i * self.m + v as usize).wrapping_sub(1);
            if v > 0 {
                self.rows[row] |= 1 << slot;
            }
            let found = self.partial_ok(i, slot + 1, v > 0) && self.fill(depth, slot + 1, max_used.max(v));
            if found {
                return true;
            }
            if v > 0 {
                self.rows[row] &= !(1 << slot);
            }
            if self.cut {
                return false;
            }
        }
        false
    }

    /// Necessary conditions on a partial row of transmitter `i` whose slots
    /// from `next` on are still open. Interferer rank only grows as slots
    /// fill, and must leave `m` slots to every receiver hearing `i`; the
    /// own receiver must reach rank gain `m` even if every open slot were
    /// added to every own row.
    fn partial_ok(&self, i: usize, next: usize, grew: bool) -> bool {
        let m = self.m;
        if grew {
            for j in bits::ones(self.listeners[i]) {
                let eff: Vec<u32> = bits::ones((self.heard[j] & self.assigned | 1 << i) & !(1 << j))
                    .flat_map(|x| self.rows[x * m..(x + 1) * m].iter().copied())
                    .collect();
                if matching_number(&eff) + m > self.n {
                    return false;
                }
            }
        }
        let open = if next >= 32 { 0 } else { !0u32 << next } & self.full;
        let mut eff: Vec<u32> = self.rows[i * m..(i + 1) * m].iter().map(|r| r | open).collect();
        for x in bits::ones(self.heard[i] & self.assigned & !(1 << i)) {
            eff.extend_from_slice(&self.rows[x * m..(x + 1) * m]);
        }
        matching_number(&eff) - matching_number(&eff[m..]) == m
    }

    /// Marks transmitter `order[depth]` as placed, checks the receivers
    /// it affects and recurses.
    fn place(&mut self, depth: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.cut = true;
            return false;
        }
        let i = self.order[depth];
        self.assigned |= 1 << i;
        let ok = (0..self.t.k()).all(|j| {
            if self.heard[j] >> i & 1 == 0 {
                true
            } else if self.assigned >> j & 1 == 1 {
                self.receiver_ok(j)
            } else {
                self.room_left(j)
            }
        });
        if ok {
            for s in 1..self.n {
                self.same_run[depth + 1][s] = self.same_run[depth][s] && self.vals[depth][s] == self.vals[depth][s - 1];
            }
            if self.dfs(depth + 1) {
                return true;
            }
        }
        self.assigned &= !(1 << i);
        false
    }

    /// Own rows all essential given the placed transmitters heard by `j`:
    /// `μ(all) − μ(interferers only) = m`.
    fn receiver_ok(&self, j: usize) -> bool {
        let m = self.m;
        let mut eff: Vec<u32> = Vec::with_capacity(m * 4);
        eff.extend_from_slice(&self.rows[j * m..(j + 1) * m]);
        for i in bits::ones(self.heard[j] & self.assigned & !(1 << j)) {
            eff.extend_from_slice(&self.rows[i * m..(i + 1) * m]);
        }
        matching_number(&eff) - matching_number(&eff[m..]) == m
    }

    /// Receiver `j` is not placed yet: its interferers must leave `m`
    /// independent slots for its own symbols.
    fn room_left(&self, j: usize) -> bool {
        let m = self.m;
        let eff: Vec<u32> = bits::ones(self.heard[j] & self.assigned & !(1 << j))
            .flat_map(|i| self.rows[i * m..(i + 1) * m].iter().copied())
            .collect();
        matching_number(&eff) + m <= self.n
    }
}

/// Greedy order: next is the transmitter with most conflict edges into the
/// placed set, then highest degree, then lowest index.
fn transmitter_order(t: &Topology) -> Vec<usize> {
    let g = t.conflict_graph();
    let k = t.k();
    let mut placed = 0u32;
    let mut order = Vec::with_capacity(k);
    for _ in 0..k {
        let next = (0..k)
            .filter(|&i| placed >> i & 1 == 0)
            .max_by_key(|&i| {
                let nb = g.neighbours(i);
                ((nb & placed).count_ones(), nb.count_ones(), core::cmp::Reverse(i))
            })
            .unwrap();
        placed |= 1 << next;
        order.push(next);
    }
    order
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct InnerConfig {
    pub src: SrcConfig,
    /// A known outer bound. SRC ratios above it cannot be feasible and are
    /// skipped.
    pub cap: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerBoundsResult {
    pub rgc: Rational,
    pub ia: Rational,
    pub coloring: FractionalColoring,
    /// Best SRC ratio certified by `src_matrix`.
    pub src: Rational,
    pub src_matrix: TransmissionMatrix,
    pub best: Rational,
    /// No SRC candidate above `src` was cut by the node budget.
    pub src_exhaustive: bool,
    pub src_nodes: u64,
}

/// All three inner bounds. The SRC search only tries ratios above
/// `max(rgc, ia)` (`ia` counts only if its schedule fits in `n_max` slots);
/// the reported SRC value is the best certified matrix, which includes the
/// embedded interference-avoidance schedule.
pub fn inner_bounds(t: &Topology, cfg: &InnerConfig) -> InnerBoundsResult {
    let rgc = rgc(t);
    let coloring = fractional_chromatic(&t.conflict_graph());
    let ia = coloring.chi_f.recip();
    let n_max = cfg.src.n_max.unwrap_or(t.k() + 1);
    let embedded = ia_embedding(&coloring, t.k()).filter(|tm| tm.n() <= n_max);
    let floor = match &embedded {
        Some(_) => rgc.clone().max(ia.clone()),
        None => rgc.clone(),
    };
    let mut res = src_search(t, &cfg.src, Some(&floor), cfg.cap.as_ref());
    let mut nodes = res.nodes;
    let (src, src_matrix) = match (res.found.take(), embedded) {
        (Some((v, tm)), _) => (v, tm),
        (None, Some(tm)) => (ia.clone(), tm),
        (None, None) => {
            // Nothing beats rgc: find the best SRC matrix at or below it.
            let low = src_search(t, &cfg.src, None, Some(&floor));
            nodes += low.nodes;
            res.exhaustive &= low.exhaustive;
            let (v, tm) = low.found.unwrap_or_else(|| {
                let tm = tdma(t.k());
                (tm.ratio(), tm)
            });
            (v, tm)
        }
    };
    let best = rgc.clone().max(ia.clone()).max(src.clone());
    InnerBoundsResult {
        rgc,
        ia,
        coloring,
        src,
        src_matrix,
        best,
        src_exhaustive: res.exhaustive,
        src_nodes: nodes,
    }
}

/// One slot per user.
pub fn tdma(k: usize) -> TransmissionMatrix {
    TransmissionMatrix::new(1, k, (0..k).map(|i| 1 << i).collect()).expect("valid time-division schedule")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{arb_topology, fixture};
    use proptest::prelude::*;

    fn sets(v: &[&[usize]]) -> Vec<u32> {
        v.iter().map(|s| bits::from_slice(&s.iter().map(|x| x - 1).collect::<Vec<_>>())).collect()
    }

    /// The 6x3 schedule quoted for the six-user repetition example.
    fn quoted_schedule() -> TransmissionMatrix {
        let slots: [&[usize]; 6] = [&[1], &[2], &[1, 3], &[1, 3], &[1, 2], &[2]];
        let rows = slots.iter().map(|s| s.iter().fold(0, |m, &x| m | 1 << (x - 1))).collect();
        TransmissionMatrix::new(1, 3, rows).unwrap()
    }

    #[test]
    fn rgc_examples() {
        assert_eq!(rgc(&fixture("four_user_chain")), ratio(1, 3));
        assert_eq!(rgc(&fixture("six_user_repetition")), ratio(1, 4));
        assert_eq!(rgc(&Topology::identity(3)), ratio(1, 1));
    }

    #[test]
    fn independent_set_examples() {
        let g = fixture("pentagon").conflict_graph();
        assert_eq!(maximal_independent_sets(&g), sets(&[&[1, 2], &[1, 5], &[2, 3], &[3, 4], &[4, 5]]));
        let g = fixture("six_user_repetition").conflict_graph();
        assert_eq!(maximal_independent_sets(&g), sets(&[&[1, 5, 6], &[2, 5, 6], &[3], &[4, 6]]));
        assert_eq!(maximal_independent_sets(&ConflictGraph::complete(4)), sets(&[&[1], &[2], &[3], &[4]]));
    }

    #[test]
    fn fractional_chromatic_examples() {
        let c = fractional_chromatic(&fixture("pentagon").conflict_graph());
        assert_eq!(c.chi_f, ratio(5, 2));
        assert_eq!(fractional_chromatic(&ConflictGraph::complete(5)).chi_f, ratio(5, 1));
        assert_eq!(fractional_chromatic(&ConflictGraph::edgeless(4)).chi_f, ratio(1, 1));
        let tm = ia_embedding(&c, 5).unwrap();
        assert_eq!((tm.m(), tm.n()), (2, 5));
        assert!(verify_transmission_matrix(&fixture("pentagon"), &tm).unwrap().ok);
    }

    #[test]
    fn matching_examples() {
        // Effective matrix of receiver 4 in the quoted schedule.
        let eff = [0, 0, 0b101, 0b101, 0b011, 0];
        assert_eq!(matching_number(&eff), 3);
        let mut without = eff;
        without[3] = 0;
        assert_eq!(matching_number(&without), 2);
        assert_eq!(matching_number(&[0, 0]), 0);
        let mm = maximum_matching(&eff);
        assert_eq!(mm.iter().flatten().count(), 3);
    }

    #[test]
    fn quoted_schedule_verifies() {
        let t = fixture("six_user_repetition");
        let tm = quoted_schedule();
        assert_eq!(bits::to_vec(t.interferers(3)), [2, 4]);
        assert_eq!(effective_matrix(&t, &tm, 3), [0, 0, 0b101, 0b101, 0b011, 0]);
        assert!(verify_transmission_matrix(&t, &tm).unwrap().ok);
    }

    #[test]
    fn malformed_matrices_rejected() {
        assert_eq!(TransmissionMatrix::new(1, 3, vec![0; 6]), Err(TmError::EmptySymbol { row: 0 }));
        assert_eq!(
            TransmissionMatrix::new(2, 3, vec![0b1, 0b11]),
            Err(TmError::BlockConflict { transmitter: 0, slot: 0 })
        );
        let id = Topology::identity(3);
        let all_on = TransmissionMatrix::new(1, 1, vec![1, 1, 1]).unwrap();
        assert!(verify_transmission_matrix(&id, &all_on).unwrap().ok);
    }

    #[test]
    fn src_search_examples() {
        let t = fixture("six_user_repetition");
        let r = src_search(&t, &SrcConfig::default(), None, Some(&ratio(1, 3)));
        let (v, tm) = r.found.unwrap();
        assert_eq!(v, ratio(1, 3));
        assert!(r.exhaustive);
        assert!(verify_transmission_matrix(&t, &tm).unwrap().ok);
        let r = src_search(&Topology::identity(3), &SrcConfig::default(), None, None);
        assert_eq!(r.found.unwrap().0, ratio(1, 1));
        let r = src_search(&fixture("pentagon"), &SrcConfig::default(), None, Some(&ratio(2, 5)));
        assert_eq!(r.found.unwrap().0, ratio(2, 5));
    }

    #[test]
    fn inner_bound_goldens() {
        let r = inner_bounds(&fixture("six_user_repetition"), &InnerConfig::default());
        assert_eq!((r.rgc.clone(), r.ia.clone(), r.src.clone()), (ratio(1, 4), ratio(1, 4), ratio(1, 3)));
        assert_eq!(r.best, ratio(1, 3));
        let r = inner_bounds(&fixture("four_user_chain"), &InnerConfig::default());
        assert_eq!((r.rgc.clone(), r.ia.clone(), r.best.clone()), (ratio(1, 3), ratio(1, 4), ratio(1, 3)));
        let r = inner_bounds(&Topology::identity(4), &InnerConfig::default());
        assert_eq!((r.rgc, r.ia, r.src, r.best), (ratio(1, 1), ratio(1, 1), ratio(1, 1), ratio(1, 1)));
    }

    #[test]
    fn candidates_order() {
        let c = src_candidates(4, Some(&ratio(1, 3)), None);
        assert_eq!(c[0], (1, 1));
        assert_eq!(&c[c.len() - 2..], [(1, 2), (2, 4)]);
        assert!(c.iter().all(|&(m, n)| ratio(m as i64, n as i64) > ratio(1, 3)));
    }

    fn arb_graph(max_k: usize) -> impl Strategy<Value = ConflictGraph> {
        (1..=max_k).prop_flat_map(|k| {
            prop::collection::vec(any::<bool>(), k * k).prop_map(move |e| {
                let edges: Vec<(usize, usize)> = (0..k)
                    .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
                    .filter(|&(a, b)| e[a * k + b])
                    .collect();
                ConflictGraph::from_edges(k, &edges)
            })
        })
    }

    fn clique_number(g: &ConflictGraph) -> usize {
        (0u32..1 << g.k())
            .filter(|&s| bits::ones(s).all(|v| (g.neighbours(v) | 1 << v) & s == s))
            .map(|s| s.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    fn greedy_colors(g: &ConflictGraph) -> usize {
        let mut color = vec![usize::MAX; g.k()];
        for v in 0..g.k() {
            let used: Vec<usize> = bits::ones(g.neighbours(v)).map(|u| color[u]).collect();
            color[v] = (0..).find(|c| !used.contains(c)).unwrap();
        }
        color.iter().max().map_or(0, |c| c + 1)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn independent_sets_are_maximal(g in arb_graph(8)) {
            let all = (1u32 << g.k()) - 1;
            let sets = maximal_independent_sets(&g);
            for &s in &sets {
                prop_assert!(g.is_independent(s));
                for v in bits::ones(all & !s) {
                    prop_assert!(!g.is_independent(s | 1 << v));
                }
            }
            let brute = (1u32..=all)
                .filter(|&s| g.is_independent(s) && bits::ones(all & !s).all(|v| !g.is_independent(s | 1 << v)))
                .count();
            prop_assert_eq!(sets.len(), brute);
        }

        #[test]
        fn fractional_chromatic_bracket(g in arb_graph(7)) {
            let c = fractional_chromatic(&g);
            prop_assert!(c.chi_f >= ratio(clique_number(&g) as i64, 1));
            prop_assert!(c.chi_f <= ratio(greedy_colors(&g) as i64, 1));
            // The weights are a feasible covering with the optimal total.
            let total = c.weights.iter().fold(Rational::zero(), |a, (_, w)| a + w);
            prop_assert_eq!(&total, &c.chi_f);
            for v in 0..g.k() {
                let cover = c.weights.iter().filter(|(u, _)| u >> v & 1 == 1).fold(Rational::zero(), |a, (_, w)| a + w);
                prop_assert!(cover >= Rational::one());
            }
        }

        #[test]
        fn ia_embedding_is_feasible(t in arb_topology(7)) {
            let c = fractional_chromatic(&t.conflict_graph());
            if let Some(tm) = ia_embedding(&c, t.k()) {
                prop_assert_eq!(tm.ratio(), c.chi_f.recip());
                prop_assert!(verify_transmission_matrix(&t, &tm).unwrap().ok);
            }
        }

        #[test]
        fn verdict_is_relabel_and_slot_covariant(
            t in arb_topology(5),
            seed in any::<u64>(),
        ) {
            let k = t.k();
            let cap = crate::outer::outer_bound(&t, &Default::default()).value;
            let cfg = SrcConfig { node_budget: 50_000, ..Default::default() };
            let r = src_search(&t, &cfg, None, Some(&cap));
            let (_, tm) = r.found.unwrap();
            prop_assert!(verify_transmission_matrix(&t, &tm).unwrap().ok);
            let perm: Vec<usize> = (0..k).map(|i| (i + seed as usize) % k).collect();
            prop_assert!(verify_transmission_matrix(&t.relabel(&perm), &tm.relabel(&perm)).unwrap().ok);
            let n = tm.n();
            let sp: Vec<usize> = (0..n).map(|s| (s + (seed >> 8) as usize) % n).collect();
            prop_assert!(verify_transmission_matrix(&t, &tm.permute_slots(&sp)).unwrap().ok);
        }
    }
}
