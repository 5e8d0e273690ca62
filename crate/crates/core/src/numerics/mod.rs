//! Scalar fields, dense matrices and the rank predicates every certification
//! step is built on.
//!
//! Two numeric modes share one generic code path: [`f64`] for speed and
//! [`Rational`] (arbitrary precision) for bit-exact answers. A matrix is
//! always homogeneous in its mode because [`Mat`] is generic over a single
//! [`Scalar`] type.

mod float;
mod mat;
mod rational;

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, NumAssignRef, NumRef, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mat::Mat;

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericsError {
    #[error("matrix is empty ({rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Which scalar field a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Float,
    Rational,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Float => f.write_str("float"),
            Mode::Rational => f.write_str("rational"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "float" => Ok(Mode::Float),
            "rational" => Ok(Mode::Rational),
            other => Err(format!("unknown mode `{other}` (expected float|rational)")),
        }
    }
}

/// Thresholds used by Float-mode predicates. Rational mode ignores both and
/// compares exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Singular values at or below `rel_rank_tol * sigma_max * max(rows, cols)`
    /// count as zero.
    pub rel_rank_tol: f64,
    /// Max-norm threshold for column equality, relative to the target
    /// column's magnitude (floored at 1).
    pub col_match_tol: f64,
}

pub const DEFAULT_REL_RANK_TOL: f64 = 1e-9;
pub const DEFAULT_COL_MATCH_TOL: f64 = 1e-8;

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel_rank_tol: DEFAULT_REL_RANK_TOL, col_match_tol: DEFAULT_COL_MATCH_TOL }
    }
}

impl Tolerance {
    pub fn new(rel_rank_tol: f64, col_match_tol: f64) -> Result<Self> {
        for (name, v) in [("rel_rank_tol", rel_rank_tol), ("col_match_tol", col_match_tol)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(NumericsError::InvalidTolerance(format!(
                    "{name} must be finite and strictly positive, got {v}"
                )));
            }
        }
        Ok(Self { rel_rank_tol, col_match_tol })
    }
}

/// A field element usable by every matrix routine in the crate.
pub trait Scalar:
    Num + NumRef + NumAssignRef + Neg<Output = Self> + Clone + Debug + Send + Sync + 'static
{
    const MODE: Mode;

    /// Exact conversion where the field allows it (every finite `f64` is a
    /// dyadic rational).
    fn from_f64(x: f64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;

    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// Zero in Rational mode; `|x| < tol` in Float mode.
    fn is_negligible(&self, tol: f64) -> bool;

    /// Equality in Rational mode; `|a - b| <= tol * scale` in Float mode.
    fn close_to(&self, other: &Self, tol: f64, scale: f64) -> bool;

    /// Rank of a matrix with at least one row and one column.
    fn rank_nonempty(m: &Mat<Self>, tol: &Tolerance) -> usize;

    fn powu(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= &base;
            }
            exp >>= 1;
            if exp > 0 {
                let b = base.clone();
                base *= &b;
            }
        }
        acc
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        <BigRational as FromPrimitive>::from_f64(*self).expect("finite float")
    }
    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() < tol
    }
    fn close_to(&self, other: &Self, tol: f64, scale: f64) -> bool {
        (self - other).abs() <= tol * scale
    }
    fn rank_nonempty(m: &Mat<Self>, tol: &Tolerance) -> usize {
        float::svd_rank(m, tol.rel_rank_tol)
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite float")
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn magnitude(&self) -> f64 {
        Scalar::to_f64(&self.abs())
    }
    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn close_to(&self, other: &Self, _tol: f64, _scale: f64) -> bool {
        self == other
    }
    fn rank_nonempty(m: &Mat<Self>, _tol: &Tolerance) -> usize {
        rational::exact_rank(m)
    }
    // Powers of a reduced fraction stay reduced, so no gcd is needed.
    fn powu(&self, exp: u32) -> Self {
        BigRational::new_raw(num_traits::pow(self.numer().clone(), exp as usize), num_traits::pow(self.denom().clone(), exp as usize))
    }
}

/// Rank of a nonempty matrix: exact fraction-free elimination in Rational
/// mode, singular-value count in Float mode.
pub fn rank<S: Scalar>(m: &Mat<S>, tol: &Tolerance) -> Result<usize> {
    if m.is_empty() {
        return Err(NumericsError::EmptyMatrix { rows: m.rows(), cols: m.cols() });
    }
    Ok(S::rank_nonempty(m, tol))
}

/// Rank that treats matrices with no rows or no columns as rank zero.
pub(crate) fn rank_or_zero<S: Scalar>(m: &Mat<S>, tol: &Tolerance) -> usize {
    if m.is_empty() {
        0
    } else {
        S::rank_nonempty(m, tol)
    }
}

/// `span(a) ⊆ span(b)`, decided as `rank([a | b]) == rank(b)`.
pub fn subspace_contains<S: Scalar>(a: &Mat<S>, b: &Mat<S>, tol: &Tolerance) -> Result<bool> {
    if a.rows() != b.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "subspace_contains: {} rows vs {} rows",
            a.rows(),
            b.rows()
        )));
    }
    if a.cols() == 0 {
        return Ok(true);
    }
    // Exact column equality already proves containment.
    if S::MODE == Mode::Rational && columns_subset_of(a, b, &Tolerance::default())? {
        return Ok(true);
    }
    let joined = Mat::hcat(a.rows(), &[a, b])?;
    Ok(rank_or_zero(&joined, tol) == rank_or_zero(b, tol))
}

/// Every column of `a` equals some column of `b`: exactly in Rational mode,
/// within `col_match_tol * max(1, |b_ij|)` entrywise in Float mode.
pub fn columns_subset_of<S: Scalar>(a: &Mat<S>, b: &Mat<S>, tol: &Tolerance) -> Result<bool> {
    if a.rows() != b.rows() {
        return Err(NumericsError::DimensionMismatch(format!(
            "columns_subset_of: {} rows vs {} rows",
            a.rows(),
            b.rows()
        )));
    }
    let targets: Vec<Vec<S>> = (0..b.cols()).map(|j| b.column(j)).collect();
    Ok((0..a.cols()).all(|j| {
        let col = a.column(j);
        targets.iter().any(|target| {
            col.iter().zip(target).all(|(x, y)| x.close_to(y, tol.col_match_tol, y.magnitude().max(1.0)))
        })
    }))
}

fn pivot_threshold<S: Scalar>(a: &Mat<S>, tol: &Tolerance) -> f64 {
    match S::MODE {
        Mode::Rational => 0.0,
        Mode::Float => tol.rel_rank_tol * a.max_magnitude() * a.rows().max(1) as f64,
    }
}

/// Solves `a x = b` for square `a` by Gauss-Jordan elimination with partial
/// pivoting. Zero multipliers are skipped, so block-sparse systems stay cheap
/// and keep their exact zero pattern.
pub fn solve<S: Scalar>(a: &Mat<S>, b: &Mat<S>, tol: &Tolerance) -> Result<Mat<S>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "solve: coefficient matrix is {}x{}, not square",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "solve: right-hand side has {} rows, expected {n}",
            b.rows()
        )));
    }
    if n == 0 {
        return Err(NumericsError::EmptyMatrix { rows: 0, cols: 0 });
    }
    let threshold = pivot_threshold(a, tol);
    let width = n + b.cols();
    let mut rows: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut r = a.row(i);
            r.extend(b.row(i));
            r
        })
        .collect();

    for c in 0..n {
        let (p, mag) = (c..n)
            .filter(|&i| !rows[i][c].is_zero())
            .map(|i| (i, rows[i][c].magnitude()))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if p == usize::MAX || mag <= threshold {
            return Err(NumericsError::Singular);
        }
        rows.swap(c, p);
        let inv = S::one() / rows[c][c].clone();
        for k in c..width {
            if !rows[c][k].is_zero() {
                rows[c][k] *= &inv;
            }
        }
        let pivot_row = rows[c].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == c || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for k in c..width {
                if !pivot_row[k].is_zero() {
                    let delta = factor.clone() * &pivot_row[k];
                    row[k] -= &delta;
                }
            }
        }
    }
    let data = rows.into_iter().flat_map(|r| r.into_iter().skip(n)).collect();
    Mat::from_vec(n, b.cols(), data)
}

/// Determinant of a square matrix by Gaussian elimination.
pub fn determinant<S: Scalar>(a: &Mat<S>) -> Result<S> {
    let n = a.rows();
    if a.cols() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "determinant of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if n == 0 {
        return Err(NumericsError::EmptyMatrix { rows: 0, cols: 0 });
    }
    let mut rows: Vec<Vec<S>> = (0..n).map(|i| a.row(i)).collect();
    let mut det = S::one();
    for c in 0..n {
        let Some(p) = (c..n)
            .filter(|&i| !rows[i][c].is_zero())
            .max_by(|&x, &y| rows[x][c].magnitude().total_cmp(&rows[y][c].magnitude()))
        else {
            return Ok(S::zero());
        };
        if p != c {
            rows.swap(c, p);
            det = -det;
        }
        det *= &rows[c][c];
        let pivot_row = rows[c].clone();
        for row in rows.iter_mut().skip(c + 1) {
            if row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone() / pivot_row[c].clone();
            for k in c..n {
                if !pivot_row[k].is_zero() {
                    let delta = factor.clone() * &pivot_row[k];
                    row[k] -= &delta;
                }
            }
        }
    }
    Ok(det)
}
