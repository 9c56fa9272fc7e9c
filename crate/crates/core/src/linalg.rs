//! Exact rational linear algebra and the sign-tolerant span predicates.
//!
//! Two routes answer "is `v` in the span of these columns?":
//!
//! * [`rank`] / [`in_span`] run Gaussian elimination over [`Rational`]s and
//!   serve as the reference implementation (and as the replay path for
//!   certificates).
//! * [`SpanBasis`] precomputes a reduced echelon form once and then answers
//!   membership for many small integer vectors. It works in checked `i64`
//!   arithmetic and silently moves to rationals if anything would overflow.
//!
//! The search routines behind [`sign_member`] and [`sign_member_exact`] go
//! through [`SpanBasis`]; tests check them against [`in_span`].

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact fraction in lowest terms with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pivot {pivot} lies outside the support of the target")]
    PivotOutsideSupport { pivot: usize },
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Rational>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    /// Builds a matrix from integer rows. All rows must have equal length.
    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&x| Rational::from_integer(x.into())));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a `rows x cols.len()` matrix whose columns are the given integer vectors.
    pub fn from_int_columns<C: AsRef<[i64]>>(rows: usize, cols: &[C]) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
            for (i, &x) in c.iter().enumerate() {
                m.data[i * m.cols + j] = Rational::from_integer(x.into());
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: Rational) {
        self.data[r * self.cols + c] = value;
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    /// Appends a column. The column length must equal `rows`.
    pub fn push_column(&mut self, col: &[Rational]) -> Result<(), LinalgError> {
        if col.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows,
                found: col.len(),
            });
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
            data.push(col[r].clone());
        }
        self.cols += 1;
        self.data = data;
        Ok(())
    }

    /// `[self | I_idx]`: appends the identity columns `e_i` for each index.
    pub fn with_identity_columns(&self, idx: &[usize]) -> Self {
        let mut m = self.clone();
        for &i in idx {
            let mut e = vec![Rational::zero(); self.rows];
            e[i] = Rational::one();
            m.push_column(&e).expect("identity column has matching length");
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        t
    }

    fn row_vecs(&self) -> Vec<Vec<Rational>> {
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec())
            .collect()
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, " ")?;
            for c in 0..self.cols {
                write!(f, " {}", self.get(r, c))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// In-place rational row reduction; returns the pivot columns.
fn rref_rational(rows: &mut [Vec<Rational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let inv = rows[rank][col].recip();
        for x in rows[rank].iter_mut() {
            *x = &*x * &inv;
        }
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    pivots
}

/// Rank over the rationals by exact Gaussian elimination.
pub fn rank(a: &RatMatrix) -> usize {
    let mut rows = a.row_vecs();
    rref_rational(&mut rows, a.cols).len()
}

/// `v ∈ span(columns of basis)`, decided as `rank([basis | v]) == rank(basis)`.
pub fn in_span(v: &[Rational], basis: &RatMatrix) -> Result<bool, LinalgError> {
    if v.len() != basis.rows {
        return Err(LinalgError::DimensionMismatch {
            expected: basis.rows,
            found: v.len(),
        });
    }
    let mut ext = basis.clone();
    ext.push_column(v)?;
    Ok(rank(&ext) == rank(basis))
}

/// Convenience wrapper of [`in_span`] for `{0, ±1}` vectors.
pub fn in_span_signed(v: &[i8], basis: &RatMatrix) -> Result<bool, LinalgError> {
    let v: Vec<Rational> = v.iter().map(|&x| Rational::from_integer(x.into())).collect();
    in_span(&v, basis)
}

/// Target of the `∈_i^±` relation: the support pattern of a `{0,1}` vector
/// together with the coordinate that must be hit with magnitude one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignTarget {
    pattern: Vec<bool>,
    pivot: usize,
}

impl SignTarget {
    pub fn new(pattern: Vec<bool>, pivot: usize) -> Result<Self, LinalgError> {
        if pivot >= pattern.len() || !pattern[pivot] {
            return Err(LinalgError::PivotOutsideSupport { pivot });
        }
        Ok(Self { pattern, pivot })
    }

    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn len(&self) -> usize {
        self.pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pattern.is_empty()
    }
}

/// Column span prepared for repeated membership queries of integer vectors.
#[derive(Clone, Debug)]
pub struct SpanBasis {
    dim: usize,
    form: Form,
}

#[derive(Clone, Debug)]
enum Form {
    /// `v ∈ span` iff for every non-pivot `q`:
    /// `scale * v[q] == Σ_p v[pivots[p]] * weights[p][q_idx]`.
    Small {
        pivots: Vec<usize>,
        nonpivots: Vec<usize>,
        weights: Vec<Vec<i64>>,
        scale: i64,
    },
    /// Rational RREF rows (pivot entries equal to one).
    Big {
        pivots: Vec<usize>,
        nonpivots: Vec<usize>,
        rows: Vec<Vec<Rational>>,
    },
}

impl SpanBasis {
    /// Span of the given integer column vectors, each of length `dim`.
    pub fn from_int_columns<C: AsRef<[i64]>>(dim: usize, cols: &[C]) -> Self {
        let gens: Vec<Vec<i64>> = cols.iter().map(|c| c.as_ref().to_vec()).collect();
        debug_assert!(gens.iter().all(|g| g.len() == dim));
        match small_form(dim, gens.clone()) {
            Some(form) => Self { dim, form },
            None => {
                let rows = gens
                    .into_iter()
                    .map(|g| g.into_iter().map(|x| Rational::from_integer(x.into())).collect())
                    .collect();
                Self {
                    dim,
                    form: big_form(dim, rows),
                }
            }
        }
    }

    /// Span of the columns of a rational matrix.
    pub fn from_matrix(basis: &RatMatrix) -> Self {
        let t = basis.transpose();
        let integral = t.data.iter().all(|x| x.is_integer() && x.numer().to_i64().is_some());
        if integral {
            let cols: Vec<Vec<i64>> = (0..t.rows)
                .map(|r| (0..t.cols).map(|c| t.get(r, c).numer().to_i64().unwrap()).collect())
                .collect();
            Self::from_int_columns(basis.rows, &cols)
        } else {
            Self {
                dim: basis.rows,
                form: big_form(basis.rows, t.row_vecs()),
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        match &self.form {
            Form::Small { pivots, .. } | Form::Big { pivots, .. } => pivots.len(),
        }
    }

    /// Membership of an integer vector of length `dim`.
    pub fn contains(&self, v: &[i64]) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        match &self.form {
            Form::Small {
                pivots,
                nonpivots,
                weights,
                scale,
            } => {
                let mut acc = [0i128; 64];
                let acc = &mut acc[..nonpivots.len().min(64)];
                if nonpivots.len() > 64 {
                    return self.contains_slow(v);
                }
                for (p, &pc) in pivots.iter().enumerate() {
                    let x = v[pc] as i128;
                    if x == 0 {
                        continue;
                    }
                    for (a, &w) in acc.iter_mut().zip(&weights[p]) {
                        *a += x * w as i128;
                    }
                }
                nonpivots
                    .iter()
                    .zip(acc.iter())
                    .all(|(&q, &a)| a == (*scale as i128) * v[q] as i128)
            }
            Form::Big { .. } => self.contains_slow(v),
        }
    }

    fn contains_slow(&self, v: &[i64]) -> bool {
        match &self.form {
            Form::Big {
                pivots,
                nonpivots,
                rows,
            } => nonpivots.iter().all(|&q| {
                let mut s = Rational::zero();
                for (p, &pc) in pivots.iter().enumerate() {
                    if v[pc] != 0 && !rows[p][q].is_zero() {
                        s += &rows[p][q] * Rational::from_integer(v[pc].into());
                    }
                }
                s == Rational::from_integer(v[q].into())
            }),
            Form::Small {
                pivots,
                nonpivots,
                weights,
                scale,
            } => nonpivots.iter().enumerate().all(|(qi, &q)| {
                let mut s = BigInt::zero();
                for (p, &pc) in pivots.iter().enumerate() {
                    s += BigInt::from(v[pc]) * BigInt::from(weights[p][qi]);
                }
                s == BigInt::from(*scale) * BigInt::from(v[q])
            }),
        }
    }
}

/// Fraction-free RREF in checked `i64`; `None` on overflow.
fn small_form(dim: usize, mut rows: Vec<Vec<i64>>) -> Option<Form> {
    let mut rank = 0;
    let mut pivots = Vec::new();
    for col in 0..dim {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len())
            .filter(|&r| rows[r][col] != 0)
            .min_by_key(|&r| rows[r][col].unsigned_abs())
        else {
            continue;
        };
        rows.swap(rank, p);
        if rows[rank][col] < 0 {
            for x in rows[rank].iter_mut() {
                *x = x.checked_neg()?;
            }
        }
        let pivot_row = rows[rank].clone();
        let pv = pivot_row[col];
        for (r, row) in rows.iter_mut().enumerate() {
            if r == rank || row[col] == 0 {
                continue;
            }
            let g = pv.gcd(&row[col]);
            let (a, b) = (pv / g, row[col] / g);
            for (x, &y) in row.iter_mut().zip(&pivot_row) {
                *x = x.checked_mul(a)?.checked_sub(y.checked_mul(b)?)?;
            }
            normalize(row);
        }
        pivots.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    let nonpivots: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
    let mut scale: i64 = 1;
    for (row, &pc) in rows.iter().zip(&pivots) {
        scale = scale.checked_mul(row[pc] / scale.gcd(&row[pc]))?;
    }
    let mut weights = Vec::with_capacity(rank);
    for (row, &pc) in rows.iter().zip(&pivots) {
        let f = scale / row[pc];
        let mut w = Vec::with_capacity(nonpivots.len());
        for &q in &nonpivots {
            w.push(row[q].checked_mul(f)?);
        }
        weights.push(w);
    }
    // Keep the i128 accumulation in `contains` safely inside range.
    let bound = weights.iter().flatten().map(|w| w.unsigned_abs()).max().unwrap_or(0);
    if bound.checked_mul(dim as u64 + 1).is_none_or(|b| b > (1u64 << 62)) || scale > (1i64 << 62) {
        return None;
    }
    Some(Form::Small {
        pivots,
        nonpivots,
        weights,
        scale,
    })
}

fn normalize(row: &mut [i64]) {
    let g = row.iter().fold(0i64, |g, &x| g.gcd(&x));
    if g > 1 {
        for x in row.iter_mut() {
            *x /= g;
        }
    }
}

fn big_form(dim: usize, mut rows: Vec<Vec<Rational>>) -> Form {
    let pivots = rref_rational(&mut rows, dim);
    rows.truncate(pivots.len());
    let nonpivots = (0..dim).filter(|c| !pivots.contains(c)).collect();
    Form::Big {
        pivots,
        nonpivots,
        rows,
    }
}

/// Enumerates `{0, ±1}` candidates and returns the first one inside `span`.
///
/// The candidate is `+1` at `pivot`, ranges over `{0, +1, -1}` (or `{+1, -1}`
/// when `allow_zero` is false) at each coordinate of `free`, and is zero
/// elsewhere. Candidates are tried in lexicographic order over `free` with
/// value order `0 < +1 < -1`.
pub(crate) fn search_signed(
    span: &SpanBasis,
    pivot: Option<usize>,
    free: &[usize],
    allow_zero: bool,
) -> Option<Vec<i8>> {
    let values: &[i64] = if allow_zero { &[0, 1, -1] } else { &[1, -1] };
    let mut v = vec![0i64; span.dim()];
    if let Some(p) = pivot {
        v[p] = 1;
    }
    let mut digits = vec![0usize; free.len()];
    loop {
        for (&c, &d) in free.iter().zip(&digits) {
            v[c] = values[d];
        }
        if span.contains(&v) {
            return Some(v.iter().map(|&x| x as i8).collect());
        }
        // Odometer: the last free coordinate turns fastest.
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return None;
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < values.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected != found {
        return Err(LinalgError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Sign-tolerant membership `v ∈_i^± span(basis)`.
///
/// Returns a witness `w ∈ span(basis)` with `w[pivot] = 1`, `w[j] ∈ {0, ±1}`
/// on the rest of the support and `w[j] = 0` off the support, or `None` if
/// no such vector exists. The pivot sign is fixed because spans are closed
/// under negation.
pub fn sign_member(target: &SignTarget, basis: &RatMatrix) -> Result<Option<Vec<i8>>, LinalgError> {
    check_len(basis.rows(), target.len())?;
    let span = SpanBasis::from_matrix(basis);
    Ok(sign_member_in(target, &span))
}

/// [`sign_member`] against a prepared [`SpanBasis`].
pub fn sign_member_in(target: &SignTarget, span: &SpanBasis) -> Option<Vec<i8>> {
    let free: Vec<usize> = (0..target.len())
        .filter(|&j| j != target.pivot && target.pattern[j])
        .collect();
    search_signed(span, Some(target.pivot), &free, true)
}

/// Exact sign-tolerant membership `v ∈^± span(basis)`: every support entry
/// must be matched with magnitude one.
pub fn sign_member_exact(pattern: &[bool], basis: &RatMatrix) -> Result<bool, LinalgError> {
    check_len(basis.rows(), pattern.len())?;
    let span = SpanBasis::from_matrix(basis);
    let support: Vec<usize> = (0..pattern.len()).filter(|&j| pattern[j]).collect();
    let Some((&first, rest)) = support.split_first() else {
        return Ok(true);
    };
    Ok(search_signed(&span, Some(first), rest, false).is_some())
}

/// Checks that `w` is a valid `∈_i^±` witness for `target` against the rational
/// reference route (used when replaying certificates).
pub fn verify_sign_witness(
    target: &SignTarget,
    basis: &RatMatrix,
    w: &[i8],
) -> Result<bool, LinalgError> {
    check_len(target.len(), w.len())?;
    if w[target.pivot].unsigned_abs() != 1 {
        return Ok(false);
    }
    let shape_ok = w.iter().zip(&target.pattern).all(|(&x, &on)| {
        if on {
            x.unsigned_abs() <= 1
        } else {
            x == 0
        }
    });
    Ok(shape_ok && in_span_signed(w, basis)?)
}

/// `|x|` for a rational.
pub fn abs(x: &Rational) -> Rational {
    x.abs()
}
