//! Monte Carlo checks against the channel model: random-gain decoding of
//! transmission matrices, the matching/solvability equivalence, and the
//! small-ball tail bound for multilinear polynomials of Gaussian gains.
//!
//! Every trial draws from `ChaCha8Rng::seed_from_u64(seed)` with the stream
//! set to the trial index, so serial and parallel runs agree.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bits;
use crate::inner::{effective_matrix, matching_number, maximum_matching, TransmissionMatrix};
use crate::topology::Topology;

/// Residual tolerance for a decoded system.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Pivot threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-7;

/// A gain distribution together with the supremum of its modulus density.
pub trait GainSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64;
    fn f_max(&self) -> f64;
}

/// `CN(0, 1)`: independent real and imaginary parts of variance 1/2.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexGaussian;

impl GainSampler for ComplexGaussian {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
    }

    /// The modulus has density `2r exp(-r²)`, maximal at `r = 1/√2`.
    fn f_max(&self) -> f64 {
        libm::sqrt(2.0 / core::f64::consts::E)
    }
}

/// RNG for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One gain per (transmitter, receiver, slot) on the links of `t`; zero
/// elsewhere.
#[derive(Clone, Debug)]
pub struct GainSample {
    k: usize,
    n: usize,
    gains: Vec<Complex64>,
}

impl GainSample {
    pub fn draw<S: GainSampler, R: Rng + ?Sized>(t: &Topology, n: usize, sampler: &S, rng: &mut R) -> Self {
        let k = t.k();
        let mut gains = vec![Complex64::new(0.0, 0.0); k * k * n];
        for i in 0..k {
            for j in bits::ones(t.rows()[i]) {
                for s in 0..n {
                    gains[(i * k + j) * n + s] = sampler.sample(rng);
                }
            }
        }
        Self { k, n, gains }
    }

    pub fn gain(&self, i: usize, j: usize, slot: usize) -> Complex64 {
        self.gains[(i * self.k + j) * self.n + slot]
    }

    /// `G^j`: row `l` of transmitter `i = l / m` carries `g_ij[s]` in every
    /// slot `s` where `T̄^j` has a one.
    pub fn receiver_matrix(&self, t: &Topology, tm: &TransmissionMatrix, j: usize) -> Vec<Vec<Complex64>> {
        effective_matrix(t, tm, j)
            .iter()
            .enumerate()
            .map(|(l, &row)| {
                let i = l / tm.m();
                (0..self.n)
                    .map(|s| if row >> s & 1 == 1 { self.gain(i, j, s) } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolOutcome {
    pub receiver: usize,
    pub row: usize,
    pub solved: bool,
    /// `max |G^j u − e_l|` over all rows; infinite when no `u` was built.
    pub residual: f64,
    pub norm_sq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub symbols: Vec<SymbolOutcome>,
}

impl DecodeOutcome {
    pub fn all_solved(&self) -> bool {
        self.symbols.iter().all(|s| s.solved)
    }

    pub fn max_residual(&self) -> f64 {
        self.symbols.iter().map(|s| s.residual).fold(0.0, f64::max)
    }
}

/// Decodes every own symbol at every receiver for one gain draw.
pub fn decode_trial(t: &Topology, tm: &TransmissionMatrix, seed: u64) -> DecodeOutcome {
    decode_with(t, tm, &ComplexGaussian, &mut trial_rng(seed, 0))
}

/// Samples gains from `rng` and, for each receiver `j` and own row `l`,
/// takes a maximum matching of `Ḡ^j` covering `l`, inverts the matched
/// square submatrix against `e_l`, zero-pads the unmatched slots and checks
/// the full system `G^j u = e_l`.
pub fn decode_with<S: GainSampler, R: Rng + ?Sized>(
    t: &Topology,
    tm: &TransmissionMatrix,
    sampler: &S,
    rng: &mut R,
) -> DecodeOutcome {
    let gains = GainSample::draw(t, tm.n(), sampler, rng);
    let m = tm.m();
    let mut symbols = Vec::with_capacity(t.k() * m);
    for j in 0..t.k() {
        let g = gains.receiver_matrix(t, tm, j);
        let pattern = effective_matrix(t, tm, j);
        for l in j * m..(j + 1) * m {
            symbols.push(solve_symbol(&g, &pattern, l, tm.n(), j));
        }
    }
    DecodeOutcome { symbols }
}

fn solve_symbol(g: &[Vec<Complex64>], pattern: &[u32], l: usize, n: usize, j: usize) -> SymbolOutcome {
    let fail = SymbolOutcome {
        receiver: j,
        row: l,
        solved: false,
        residual: f64::INFINITY,
        norm_sq: f64::INFINITY,
    };
    let Some((rows, cols)) = matching_covering(pattern, l) else {
        return fail;
    };
    let sub: Vec<Vec<Complex64>> = rows.iter().map(|&r| cols.iter().map(|&c| g[r][c]).collect()).collect();
    let mut rhs = vec![Complex64::new(0.0, 0.0); rows.len()];
    rhs[rows.iter().position(|&r| r == l).unwrap()] = Complex64::new(1.0, 0.0);
    let Some(x) = solve(sub, rhs) else {
        return fail;
    };
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    for (&c, v) in cols.iter().zip(x) {
        u[c] = v;
    }
    let residual = g
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let target = if r == l { 1.0 } else { 0.0 };
            let dot: Complex64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            (dot - target).norm()
        })
        .fold(0.0, f64::max);
    SymbolOutcome {
        receiver: j,
        row: l,
        solved: residual < RESIDUAL_TOL,
        residual,
        norm_sq: u.iter().map(|z| z.norm_sqr()).sum(),
    }
}

/// Rows and columns of a maximum matching that covers row `l`, or `None`
/// if no maximum matching does.
pub fn matching_covering(pattern: &[u32], l: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    // Augmenting paths never unmatch a row, so matching `l` first keeps it.
    let order: Vec<usize> = core::iter::once(l).chain((0..pattern.len()).filter(|&r| r != l)).collect();
    let permuted: Vec<u32> = order.iter().map(|&r| pattern[r]).collect();
    let matched = maximum_matching(&permuted);
    matched[0]?;
    let mut pairs: Vec<(usize, usize)> = matched
        .iter()
        .enumerate()
        .filter_map(|(p, c)| c.map(|c| (order[p], c)))
        .collect();
    pairs.sort_unstable();
    Some(pairs.into_iter().unzip())
}

/// Gaussian elimination with partial pivoting on a square system.
fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))?;
        if a[p][col].norm() < RANK_TOL {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let s: Complex64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Rank by complete pivoting, pivots below `RANK_TOL` times the largest
/// entry counting as zero.
pub fn numeric_rank(mut a: Vec<Vec<Complex64>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    while rank < rows.min(cols) {
        let mut best = (0.0, 0, 0);
        for r in rank..rows {
            for c in rank..cols {
                let v = a[r][c].norm();
                if v > best.0 {
                    best = (v, r, c);
                }
            }
        }
        if best.0 < RANK_TOL * scale {
            break;
        }
        a.swap(rank, best.1);
        for row in a.iter_mut() {
            row.swap(rank, best.2);
        }
        for r in rank + 1..rows {
            let f = a[r][rank] / a[rank][rank];
            for c in rank..cols {
                let v = a[rank][c];
                a[r][c] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSummary {
    pub trials: u64,
    /// Trials where every symbol decoded within tolerance.
    pub successes: u64,
    /// Undecoded (trial, receiver, symbol) triples.
    pub violations: u64,
    pub max_residual: f64,
    pub mean_log_norm: f64,
    pub max_log_norm: f64,
}

/// Runs `trials` independent decoding trials.
pub fn simulate(t: &Topology, tm: &TransmissionMatrix, trials: u64, seed: u64) -> SimSummary {
    let mut s = SimSummary {
        trials,
        successes: 0,
        violations: 0,
        max_residual: 0.0,
        mean_log_norm: 0.0,
        max_log_norm: f64::NEG_INFINITY,
    };
    let mut count = 0u64;
    let mut sum = 0.0;
    for trial in 0..trials {
        let out = decode_with(t, tm, &ComplexGaussian, &mut trial_rng(seed, trial));
        let bad = out.symbols.iter().filter(|x| !x.solved).count() as u64;
        s.violations += bad;
        if bad == 0 {
            s.successes += 1;
        }
        s.max_residual = s.max_residual.max(out.max_residual());
        for x in out.symbols.iter().filter(|x| x.solved) {
            let v = libm::log(x.norm_sq);
            sum += v;
            count += 1;
            s.max_log_norm = s.max_log_norm.max(v);
        }
    }
    s.mean_log_norm = if count > 0 { sum / count as f64 } else { f64::NAN };
    s
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogNormStats {
    pub samples: u64,
    pub mean: f64,
    pub max: f64,
    pub all_finite: bool,
}

/// Mean and max of `ln ‖u_l‖²` over all decoded symbols of all trials.
pub fn log_norm_estimate(t: &Topology, tm: &TransmissionMatrix, trials: u64, seed: u64) -> LogNormStats {
    let mut stats = LogNormStats {
        samples: 0,
        mean: 0.0,
        max: f64::NEG_INFINITY,
        all_finite: true,
    };
    let mut sum = 0.0;
    for trial in 0..trials {
        let out = decode_with(t, tm, &ComplexGaussian, &mut trial_rng(seed, trial));
        for x in out.symbols.iter().filter(|x| x.solved) {
            let v = libm::log(x.norm_sq);
            stats.all_finite &= v.is_finite();
            stats.max = stats.max.max(v);
            sum += v;
            stats.samples += 1;
        }
    }
    stats.mean = sum / stats.samples.max(1) as f64;
    stats
}

/// Both sides of the matching lemma for one instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LemmaVerdict {
    /// `μ(G) − μ(G ∖ l) = 1`.
    pub matching: bool,
    /// `e_l` lies in the column span of the gain-weighted matrix.
    pub solvable: bool,
}

/// Evaluates both predicates on the 0/1 pattern `rows` (`cols` columns)
/// with fresh gains on its support.
pub fn lemma_match_instance<R: Rng + ?Sized>(rows: &[u32], cols: usize, l: usize, rng: &mut R) -> LemmaVerdict {
    let mut without = rows.to_vec();
    without[l] = 0;
    let matching = matching_number(rows) - matching_number(&without) == 1;
    let zero = Complex64::new(0.0, 0.0);
    let g: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|&r| (0..cols).map(|c| if r >> c & 1 == 1 { ComplexGaussian.sample(rng) } else { zero }).collect())
        .collect();
    let augmented: Vec<Vec<Complex64>> = g
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut row = row.clone();
            row.push(if r == l { Complex64::new(1.0, 0.0) } else { zero });
            row
        })
        .collect();
    LemmaVerdict {
        matching,
        solvable: numeric_rank(augmented) == numeric_rank(g),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaInstance {
    pub rows: Vec<u32>,
    pub cols: usize,
    pub l: usize,
    pub verdict: LemmaVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleReport {
    pub trials: u64,
    pub agree_true: u64,
    pub agree_false: u64,
    pub disagreements: Vec<LemmaInstance>,
}

/// Random patterns with `1..=max_rows` rows and `1..=max_cols` columns
/// (each at most 32), a random density per instance and a random row `l`.
pub fn lemma_match_oracle(trials: u64, max_rows: usize, max_cols: usize, seed: u64) -> OracleReport {
    let mut report = OracleReport {
        trials,
        agree_true: 0,
        agree_false: 0,
        disagreements: Vec::new(),
    };
    let max_cols = max_cols.min(32);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let r = rng.random_range(1..=max_rows);
        let c = rng.random_range(1..=max_cols);
        let density: f64 = rng.random_range(0.15..0.85);
        let rows: Vec<u32> = (0..r)
            .map(|_| (0..c).filter(|_| rng.random_bool(density)).fold(0, |m, s| m | 1 << s))
            .collect();
        let l = rng.random_range(0..r);
        let verdict = lemma_match_instance(&rows, c, l, &mut rng);
        match (verdict.matching, verdict.solvable) {
            (true, true) => report.agree_true += 1,
            (false, false) => report.agree_false += 1,
            _ => report.disagreements.push(LemmaInstance { rows, cols: c, l, verdict }),
        }
    }
    report
}

/// `Σ a_i Π_{j ∈ S_i} X_j` over distinct monomials `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub n_vars: usize,
    pub terms: Vec<(u32, Complex64)>,
}

impl Polynomial {
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|&(mono, a)| bits::ones(mono).fold(a, |p, j| p * x[j]))
            .sum()
    }

    /// A random multilinear polynomial in `n_vars` variables: a random
    /// nonempty set of monomials, coefficient moduli in `[1, 2)` and
    /// uniform phases. Redrawn until some monomial is not constant.
    pub fn random<R: Rng + ?Sized>(n_vars: usize, rng: &mut R) -> Self {
        let count = 1u32 << n_vars;
        loop {
            let mut terms = Vec::new();
            for mono in 0..count {
                if rng.random_bool(0.5) {
                    let r: f64 = rng.random_range(1.0..2.0);
                    let phi: f64 = rng.random_range(0.0..core::f64::consts::TAU);
                    terms.push((mono, Complex64::from_polar(r, phi)));
                }
            }
            if terms.iter().any(|&(m, _)| m != 0) {
                return Self { n_vars, terms };
            }
        }
    }
}

/// `2^{n+1} f_max ε^{1/2^{n−1}}`.
pub fn tail_bound(n_vars: usize, f_max: f64, eps: f64) -> f64 {
    let root = 1.0 / libm::pow(2.0, n_vars as f64 - 1.0);
    libm::pow(2.0, n_vars as f64 + 1.0) * f_max * libm::pow(eps, root)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailPoint {
    pub epsilon: f64,
    pub estimate: f64,
    pub bound: f64,
    /// Binomial standard deviation at the bound.
    pub sigma: f64,
    pub violated: bool,
}

/// Estimates `Pr[|p| ≤ ε]` for each `ε` from `trials` Gaussian draws and
/// flags estimates above the bound by more than three standard deviations.
/// A bound of at least one passes trivially.
pub fn tail_check_polynomial<R: Rng + ?Sized>(p: &Polynomial, trials: u64, epsilons: &[f64], rng: &mut R) -> Vec<TailPoint> {
    let mut hits = vec![0u64; epsilons.len()];
    let mut x = vec![Complex64::new(0.0, 0.0); p.n_vars];
    for _ in 0..trials {
        for v in x.iter_mut() {
            *v = ComplexGaussian.sample(rng);
        }
        let a = p.eval(&x).norm();
        for (h, &e) in hits.iter_mut().zip(epsilons) {
            if a <= e {
                *h += 1;
            }
        }
    }
    epsilons
        .iter()
        .zip(hits)
        .map(|(&eps, h)| {
            let estimate = h as f64 / trials as f64;
            let bound = tail_bound(p.n_vars, ComplexGaussian.f_max(), eps);
            let b = bound.min(1.0);
            let sigma = libm::sqrt(b * (1.0 - b) / trials as f64);
            TailPoint {
                epsilon: eps,
                estimate,
                bound,
                sigma,
                violated: bound < 1.0 && estimate > bound + 3.0 * sigma,
            }
        })
        .collect()
}

/// Number of random polynomials drawn per tail check.
pub const TAIL_POLYNOMIALS: u64 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub points: Vec<(Polynomial, Vec<TailPoint>)>,
    pub violations: usize,
}

/// Tail check on `TAIL_POLYNOMIALS` random polynomials in `n_vars ≤ 4`
/// variables, `trials` draws each.
pub fn poly_tail_check(n_vars: usize, trials: u64, epsilons: &[f64], seed: u64) -> TailReport {
    assert!((1..=4).contains(&n_vars), "tail check supports 1 to 4 variables");
    let mut points = Vec::new();
    let mut violations = 0;
    for i in 0..TAIL_POLYNOMIALS {
        let mut rng = trial_rng(seed, i);
        let p = Polynomial::random(n_vars, &mut rng);
        let pts = tail_check_polynomial(&p, trials, epsilons, &mut rng);
        violations += pts.iter().filter(|x| x.violated).count();
        points.push((p, pts));
    }
    TailReport { points, violations }
}
