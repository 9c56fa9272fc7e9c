//! Network topologies, conflict graphs, canonical forms and the two scenario
//! generators (the six-cell grid and the random ring layout).
//!
//! Orientation: `M[i][j] = 1` iff transmitter `i` reaches receiver `j`. A row
//! is what one transmitter reaches, a column is what one receiver hears.
//! Users are zero-based here; file formats and reports print them as stored.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits;

/// Largest supported user count (bit rows are `u32`, canonical forms `u128`).
pub const MAX_USERS: usize = 11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("topology must have at least one user")]
    Empty,
    #[error("{0} users exceeds the supported maximum of {MAX_USERS}")]
    TooManyUsers(usize),
    #[error("direct link missing: M[{0}][{0}] must be 1")]
    MissingDirectLink(usize),
    #[error("row {row} has bits outside the {k} users")]
    StrayBits { row: usize, k: usize },
    #[error("coverage radius must lie strictly between 0 and 1, got {0}")]
    InvalidRadius(f64),
}

/// A `K`-user network. `rows[i]` has bit `j` set iff `M[i][j] = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Topology {
    k: usize,
    rows: Vec<u32>,
}

impl Topology {
    /// Builds a validated topology from transmitter rows.
    pub fn from_rows(rows: Vec<u32>) -> Result<Self, TopologyError> {
        let t = Self::from_rows_unchecked(rows);
        t.validate()?;
        Ok(t)
    }

    /// Builds a topology without checking the diagonal.
    pub fn from_rows_unchecked(rows: Vec<u32>) -> Self {
        Self { k: rows.len(), rows }
    }

    /// Builds a validated topology from receiver columns: `cols[j]` has bit
    /// `i` set iff receiver `j` hears transmitter `i`.
    pub fn from_columns(cols: &[u32]) -> Result<Self, TopologyError> {
        Self::from_rows(transpose(cols))
    }

    /// Builds a topology from a dense `0/1` matrix (`adj[i][j] = M_ij`).
    pub fn from_matrix<R: AsRef<[bool]>>(adj: &[R]) -> Result<Self, TopologyError> {
        let k = adj.len();
        let mut rows = Vec::with_capacity(k);
        for (i, r) in adj.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != k {
                return Err(TopologyError::StrayBits { row: i, k });
            }
            rows.push(r.iter().enumerate().fold(0u32, |m, (j, &b)| m | (u32::from(b) << j)));
        }
        Self::from_rows(rows)
    }

    pub fn identity(k: usize) -> Self {
        Self::from_rows_unchecked((0..k).map(|i| 1 << i).collect())
    }

    pub fn fully_connected(k: usize) -> Self {
        let all = full_mask(k);
        Self::from_rows_unchecked(vec![all; k])
    }

    /// Checks the diagonal and the shape; reports the first offending index.
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.k == 0 {
            return Err(TopologyError::Empty);
        }
        if self.k > MAX_USERS {
            return Err(TopologyError::TooManyUsers(self.k));
        }
        let all = full_mask(self.k);
        for (i, &r) in self.rows.iter().enumerate() {
            if r & !all != 0 {
                return Err(TopologyError::StrayBits { row: i, k: self.k });
            }
            if r >> i & 1 == 0 {
                return Err(TopologyError::MissingDirectLink(i));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    /// Transmitters heard by receiver `j` (column `j` of `M`, as a mask).
    pub fn heard_by(&self, j: usize) -> u32 {
        self.rows
            .iter()
            .enumerate()
            .fold(0, |m, (i, &r)| m | ((r >> j & 1) << i))
    }

    /// All columns of `M` as masks.
    pub fn columns(&self) -> Vec<u32> {
        transpose(&self.rows)
    }

    /// `IF_j`: the transmitters other than `j` that reach receiver `j`.
    pub fn interferers(&self, j: usize) -> u32 {
        self.heard_by(j) & !(1 << j)
    }

    /// Number of off-diagonal ones.
    pub fn cross_links(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum::<usize>() - self.k
    }

    /// Largest column sum.
    pub fn max_receiver_degree(&self) -> usize {
        self.columns().iter().map(|c| c.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn conflict_graph(&self) -> ConflictGraph {
        let cols = self.columns();
        let adj = (0..self.k)
            .map(|i| (self.rows[i] | cols[i]) & !(1 << i))
            .collect();
        ConflictGraph { k: self.k, adj }
    }

    /// `P M Pᵀ` with `N[a][b] = M[perm[a]][perm[b]]`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.k);
        let rows = (0..self.k)
            .map(|a| {
                let src = self.rows[perm[a]];
                (0..self.k).fold(0, |m, b| m | ((src >> perm[b] & 1) << b))
            })
            .collect();
        Self { k: self.k, rows }
    }

    /// Row-major bit-string of `M`, first entry most significant.
    pub fn bit_string(&self) -> u128 {
        let mut out = 0u128;
        for &r in &self.rows {
            out = (out << self.k) | u128::from(msb_first(r, self.k));
        }
        out
    }

    /// Hash of [`Self::bit_string`], with the same digest as canonical forms.
    pub fn bit_hash(&self) -> u64 {
        fnv1a(self.k, self.bit_string())
    }

    /// Canonical form without lookup tables. Use a [`Canonicalizer`] when
    /// canonicalizing many topologies of one size.
    pub fn canonical_form(&self) -> CanonicalForm {
        Canonicalizer::untabled(self.k).canonicalize(self)
    }
}

fn full_mask(k: usize) -> u32 {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

fn transpose(rows: &[u32]) -> Vec<u32> {
    let k = rows.len();
    (0..k)
        .map(|j| (0..k).fold(0, |m, i| m | ((rows[i] >> j & 1) << i)))
        .collect()
}

/// Row mask with column 0 moved to the most significant of `k` bits.
fn msb_first(r: u32, k: usize) -> u32 {
    (0..k).fold(0, |m, j| m | ((r >> j & 1) << (k - 1 - j)))
}

/// Undirected graph on the users; `adj[i]` is the neighbour mask of `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConflictGraph {
    k: usize,
    adj: Vec<u32>,
}

impl ConflictGraph {
    /// Builds a graph from an edge list. Self-loops are ignored.
    pub fn from_edges(k: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![0u32; k];
        for &(a, b) in edges {
            if a != b {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
        }
        Self { k, adj }
    }

    pub fn complete(k: usize) -> Self {
        let all = full_mask(k);
        Self {
            k,
            adj: (0..k).map(|i| all & !(1 << i)).collect(),
        }
    }

    pub fn edgeless(k: usize) -> Self {
        Self { k, adj: vec![0; k] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbours(&self, v: usize) -> u32 {
        self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.k {
            for b in bits::ones(self.adj[a]) {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_independent(&self, set: u32) -> bool {
        bits::ones(set).all(|v| self.adj[v] & set == 0)
    }

    /// Graph with vertex `a` of the result being vertex `perm[a]` here.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let adj = (0..self.k)
            .map(|a| {
                let src = self.adj[perm[a]];
                (0..self.k).fold(0, |m, b| m | ((src >> perm[b] & 1) << b))
            })
            .collect();
        Self { k: self.k, adj }
    }
}

/// Isomorphism-class representative: the smallest row-major bit-string over
/// all simultaneous row/column permutations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    pub k: usize,
    pub bits: u128,
    pub hash: u64,
}

impl CanonicalForm {
    fn new(k: usize, bits: u128) -> Self {
        Self {
            k,
            bits,
            hash: fnv1a(k, bits),
        }
    }

    /// The representative topology.
    pub fn topology(&self) -> Topology {
        let k = self.k;
        let rows = (0..k)
            .map(|a| {
                let row = (self.bits >> ((k - 1 - a) * k)) as u32 & full_mask(k);
                msb_first(row, k)
            })
            .collect();
        Topology::from_rows_unchecked(rows)
    }
}

fn fnv1a(k: usize, bits: u128) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    eat(k as u8);
    for b in bits.to_be_bytes() {
        eat(b);
    }
    h
}

/// Canonicalization for a fixed user count with precomputed permutations.
///
/// Up to seven users every permutation carries a lookup table mapping a row
/// mask to its permuted, MSB-first image.
#[derive(Clone, Debug)]
pub struct Canonicalizer {
    k: usize,
    perms: Vec<Vec<usize>>,
    tables: Vec<Vec<u16>>,
}

const TABLE_LIMIT: usize = 7;

/// Brute force over `K!` permutations stops being practical past this size.
pub const CANON_MAX_USERS: usize = 9;

impl Canonicalizer {
    pub fn new(k: usize) -> Self {
        Self::build(k, k <= TABLE_LIMIT)
    }

    fn untabled(k: usize) -> Self {
        Self::build(k, false)
    }

    fn build(k: usize, tabled: bool) -> Self {
        assert!(k <= CANON_MAX_USERS, "canonicalization supports at most {CANON_MAX_USERS} users");
        let perms = permutations(k);
        let tables = if tabled {
            perms
                .iter()
                .map(|p| {
                    (0..1u32 << k)
                        .map(|r| (0..k).fold(0u16, |m, b| m | (((r >> p[b] & 1) as u16) << (k - 1 - b))))
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        Self { k, perms, tables }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn canonicalize(&self, t: &Topology) -> CanonicalForm {
        assert_eq!(t.k, self.k, "canonicalizer built for a different user count");
        let k = self.k;
        let mut best = vec![u32::MAX; k];
        let mut cur = vec![0u32; k];
        for (pi, p) in self.perms.iter().enumerate() {
            // Build rows in order, abandoning as soon as the prefix is larger.
            let mut less = false;
            let mut worse = false;
            for a in 0..k {
                let src = t.rows[p[a]];
                let row = if self.tables.is_empty() {
                    (0..k).fold(0u32, |m, b| m | ((src >> p[b] & 1) << (k - 1 - b)))
                } else {
                    u32::from(self.tables[pi][src as usize])
                };
                cur[a] = row;
                if !less {
                    if row > best[a] {
                        worse = true;
                        break;
                    }
                    if row < best[a] {
                        less = true;
                    }
                }
            }
            if !worse && less {
                best.copy_from_slice(&cur);
            }
        }
        let bits = best.iter().fold(0u128, |acc, &r| (acc << k) | u128::from(r));
        CanonicalForm::new(k, bits)
    }
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Six-cell grid, two rows of three:
///
/// ```text
///   1  3  5
///   2  4  6
/// ```
///
/// Per receiver, the allowed interferer sets: corner cells take any nonempty
/// subset of their three neighbouring base stations; the middle cells take
/// any nonempty subset of either their left or their right neighbour triple.
pub fn six_cell_options() -> [Vec<u32>; 6] {
    let tri = |a: usize, b: usize, c: usize| bits::from_slice(&[a - 1, b - 1, c - 1]);
    let nonempty = |m: u32| -> Vec<u32> { (1..=m).filter(|&s| s & !m == 0).collect() };
    let union = |l: u32, r: u32| -> Vec<u32> {
        let mut v = nonempty(l);
        v.extend(nonempty(r));
        v.sort_unstable();
        v.dedup();
        v
    };
    [
        nonempty(tri(2, 3, 4)),
        nonempty(tri(1, 3, 4)),
        union(tri(1, 2, 4), tri(4, 5, 6)),
        union(tri(1, 2, 3), tri(3, 5, 6)),
        nonempty(tri(3, 4, 6)),
        nonempty(tri(3, 4, 5)),
    ]
}

/// Iterator over every raw six-cell topology (`7^4 * 13^2` of them).
#[derive(Clone, Debug)]
pub struct SixCell {
    options: [Vec<u32>; 6],
    digits: [usize; 6],
    done: bool,
}

pub fn six_cell_enumerate() -> SixCell {
    SixCell {
        options: six_cell_options(),
        digits: [0; 6],
        done: false,
    }
}

impl Iterator for SixCell {
    type Item = Topology;

    fn next(&mut self) -> Option<Topology> {
        if self.done {
            return None;
        }
        let cols: Vec<u32> = (0..6)
            .map(|j| self.options[j][self.digits[j]] | (1 << j))
            .collect();
        let mut pos = 6;
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.digits[pos] += 1;
            if self.digits[pos] < self.options[pos].len() {
                break;
            }
            self.digits[pos] = 0;
        }
        Some(Topology::from_rows_unchecked(transpose(&cols)))
    }
}

/// Base station positions of the ring layout: one at the origin, five on
/// the unit circle at angles `2πk/5`.
pub fn ring_base_stations() -> [(f64, f64); 6] {
    let mut out = [(0.0, 0.0); 6];
    for (k, p) in out.iter_mut().enumerate().skip(1) {
        let a = 2.0 * PI * (k - 1) as f64 / 5.0;
        *p = (libm::cos(a), libm::sin(a));
    }
    out
}

/// Topology induced by client positions: `M_ij = 1` iff client `j` lies
/// within `r` of base station `i`.
pub fn ring_topology(r: f64, clients: &[(f64, f64); 6]) -> Topology {
    let bs = ring_base_stations();
    let rows = bs
        .iter()
        .map(|&(bx, by)| {
            clients.iter().enumerate().fold(0u32, |m, (j, &(cx, cy))| {
                let d = libm::hypot(bx - cx, by - cy);
                m | (u32::from(d <= r) << j)
            })
        })
        .collect();
    Topology::from_rows_unchecked(rows)
}

/// Random ring instances. Each client is uniform in the disk of radius `r`
/// around its own base station (radius `r·√U`, angle `2πV`).
///
/// The generator is ChaCha8 seeded with `seed_from_u64(seed)`; draws happen
/// client by client, radius before angle.
#[derive(Clone, Debug)]
pub struct RingSampler {
    rng: ChaCha8Rng,
    r: f64,
    remaining: usize,
}

pub fn ring_sample(r: f64, seed: u64, count: usize) -> Result<RingSampler, TopologyError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(TopologyError::InvalidRadius(r));
    }
    Ok(RingSampler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        r,
        remaining: count,
    })
}

impl Iterator for RingSampler {
    type Item = Topology;

    fn next(&mut self) -> Option<Topology> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let bs = ring_base_stations();
        let mut clients = [(0.0, 0.0); 6];
        for (c, &(bx, by)) in clients.iter_mut().zip(&bs) {
            let rho = self.r * libm::sqrt(self.rng.random::<f64>());
            let theta = 2.0 * PI * self.rng.random::<f64>();
            *c = (bx + rho * libm::cos(theta), by + rho * libm::sin(theta));
        }
        Some(ring_topology(self.r, &clients))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::testutil::arb_topology;
    use std::collections::HashSet;

    /// Five-user network whose conflict graph is the pentagon.
    fn pentagon() -> Topology {
        let heard: [&[usize]; 5] = [&[1, 3, 4], &[2], &[3], &[1, 2, 4], &[2, 3, 5]];
        let cols: Vec<u32> = heard
            .iter()
            .map(|h| h.iter().fold(0, |m, &i| m | 1 << (i - 1)))
            .collect();
        Topology::from_columns(&cols).unwrap()
    }

    #[test]
    fn validate_reports_missing_diagonal() {
        assert!(Topology::identity(3).validate().is_ok());
        assert!(pentagon().validate().is_ok());
        let t = Topology::from_rows_unchecked(vec![0b001, 0b000, 0b100]);
        assert_eq!(t.validate(), Err(TopologyError::MissingDirectLink(1)));
        assert_eq!(Topology::from_rows(vec![]), Err(TopologyError::Empty));
    }

    #[test]
    fn interferer_sets() {
        assert_eq!(bits::to_vec(pentagon().interferers(0)), [2, 3]);
        assert_eq!(Topology::identity(4).interferers(2), 0);
        assert_eq!(bits::to_vec(Topology::fully_connected(3).interferers(1)), [0, 2]);
    }

    #[test]
    fn conflict_graph_examples() {
        assert_eq!(
            pentagon().conflict_graph().edges(),
            [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)]
        );
        assert!(Topology::identity(4).conflict_graph().edges().is_empty());
        assert_eq!(Topology::fully_connected(4).conflict_graph(), ConflictGraph::complete(4));
    }

    #[test]
    fn canonical_form_of_identity_is_itself() {
        let t = Topology::identity(5);
        let c = t.canonical_form();
        assert_eq!(c.bits, t.bit_string());
        assert_eq!(c.topology(), t);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(0).len(), 1);
        let p = permutations(3);
        assert_eq!(p[0], [0, 1, 2]);
        assert_eq!(p[5], [2, 1, 0]);
    }

    #[test]
    fn table_and_brute_force_agree() {
        let t = Topology::from_rows(vec![0b0000_0011, 0b0000_0110, 0b0000_1100, 0b0001_1000, 0b0011_0000, 0b0110_0000, 0b1100_0000, 0b1000_0001]).unwrap();
        let c = Canonicalizer::new(8).canonicalize(&t);
        let rot = t.relabel(&[3, 4, 5, 6, 7, 0, 1, 2]);
        assert_eq!(Canonicalizer::new(8).canonicalize(&rot), c);
        // Cycle structure: canonical representative is itself a directed cycle.
        assert_eq!(c.topology().cross_links(), 8);
    }

    #[test]
    fn six_cell_options_have_expected_sizes() {
        let sizes: Vec<usize> = six_cell_options().iter().map(Vec::len).collect();
        assert_eq!(sizes, [7, 7, 13, 13, 7, 7]);
        let o = six_cell_options();
        // Receiver 2 may hear any nonempty subset of base stations 1, 3, 4.
        assert!(o[1].contains(&bits::from_slice(&[0, 2, 3])));
        // Receiver 4 may not mix its left and right triples.
        assert!(!o[3].contains(&bits::from_slice(&[0, 4])));
    }

    #[test]
    fn six_cell_stream_is_valid() {
        let mut n = 0usize;
        for t in six_cell_enumerate().step_by(97) {
            assert!(t.validate().is_ok());
            for c in t.columns() {
                assert!((2..=4).contains(&c.count_ones()));
            }
            n += 1;
        }
        assert_eq!(n, 405_769usize.div_ceil(97));
    }

    #[test]
    fn ring_geometry_examples() {
        let bs = ring_base_stations();
        let mut clients = bs;
        clients[0] = (0.0, 0.0);
        let t = ring_topology(0.8, &clients);
        assert_eq!(t.heard_by(0), 1);
        clients[0] = (bs[1].0 / 2.0, bs[1].1 / 2.0);
        let t = ring_topology(0.8, &clients);
        assert_eq!(t.heard_by(0), 0b11);
    }

    #[test]
    fn ring_sampler_rejects_bad_radius_and_is_deterministic() {
        assert!(ring_sample(0.0, 1, 1).is_err());
        assert!(ring_sample(1.0, 1, 1).is_err());
        let a: Vec<_> = ring_sample(0.8, 7, 50).unwrap().collect();
        let b: Vec<_> = ring_sample(0.8, 7, 50).unwrap().collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| t.validate().is_ok()));
        let distinct: HashSet<_> = a.iter().map(|t| t.canonical_form()).collect();
        assert!(distinct.len() > 1);
    }

    fn arb_with_perm(max_k: usize) -> impl Strategy<Value = (Topology, Vec<usize>)> {
        arb_topology(max_k).prop_flat_map(|t| {
            let k = t.k();
            (Just(t), Just((0..k).collect::<Vec<_>>()).prop_shuffle())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn canonical_form_is_class_invariant((t, p) in arb_with_perm(7)) {
            let c = t.canonical_form();
            prop_assert_eq!(t.relabel(&p).canonical_form(), c);
            // Idempotent, and the representative is a member of the class.
            prop_assert_eq!(c.topology().canonical_form(), c);
            prop_assert!(c.bits <= t.bit_string());
        }

        #[test]
        fn conflict_graph_commutes_with_relabel((t, p) in arb_with_perm(7)) {
            prop_assert_eq!(t.relabel(&p).conflict_graph(), t.conflict_graph().relabel(&p));
        }

        #[test]
        fn columns_round_trip(t in arb_topology(8)) {
            prop_assert_eq!(Topology::from_columns(&t.columns()).unwrap(), t.clone());
            for j in 0..t.k() {
                prop_assert_eq!(t.heard_by(j), t.columns()[j]);
            }
        }
    }
}
