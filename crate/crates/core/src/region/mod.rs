//! The uplink DoF polytope of the two-base-station Sigma channel, held in
//! exact rational arithmetic.
//!
//! Coordinates are laid out as `[a.., b1.., b2.., c..]`: Group A messages to
//! BS 1, Group B messages to BS 1, Group B messages to BS 2, Group C messages
//! to BS 2. The polytope is cut out by
//!
//! * `a_j <= 1`, `c_j <= 1` and `b1_j + b2_j <= 1` (single-antenna mobiles),
//! * `sum(a) + sum(b1) + sum_{j in J2} b2_j <= N1` for every `J2` with
//!   `|J2| <= N1`,
//! * `sum(c) + sum(b2) + sum_{j in J1} b1_j <= N2` for every `J1` with
//!   `|J1| <= N2`.
//!
//! The empty subset is a member of both families.

mod lp;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::numerics::Rational;
use crate::ratio::{self, format_rational};

pub use lp::{maximize, LpError, LpSolution};

/// Default ceiling on the number of subset constraints generated per query.
pub const DEFAULT_SUBSET_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegionError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative DoF {value} for message {message}")]
    NegativeDof { message: MessageId, value: String },
    #[error("subset enumeration needs {needed} constraints, cap is {cap}")]
    SubsetExplosion { needed: u128, cap: u64 },
    #[error("weights must be nonnegative")]
    NegativeWeight,
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Shape of the network: antennas per base station and group sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SigmaConfig {
    pub n1: usize,
    pub n2: usize,
    pub la: usize,
    pub lb: usize,
    pub lc: usize,
}

impl SigmaConfig {
    pub fn new(n1: usize, n2: usize, la: usize, lb: usize, lc: usize) -> Result<Self> {
        let cfg = Self { n1, n2, la, lb, lc };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(RegionError::InvalidConfig("both base stations need at least one antenna".into()));
        }
        if self.message_count() == 0 {
            return Err(RegionError::InvalidConfig("the network carries no messages".into()));
        }
        Ok(())
    }

    /// `L = La + 2 Lb + Lc`.
    pub fn message_count(&self) -> usize {
        self.la + 2 * self.lb + self.lc
    }

    pub fn antennas(&self, bs: BaseStation) -> usize {
        match bs {
            BaseStation::One => self.n1,
            BaseStation::Two => self.n2,
        }
    }

    /// Message ids in coordinate order.
    pub fn messages(&self) -> Vec<MessageId> {
        let mut out = Vec::with_capacity(self.message_count());
        out.extend((0..self.la).map(MessageId::A));
        out.extend((0..self.lb).map(MessageId::B1));
        out.extend((0..self.lb).map(MessageId::B2));
        out.extend((0..self.lc).map(MessageId::C));
        out
    }

    /// Coordinate index of a message.
    pub fn index_of(&self, m: MessageId) -> usize {
        match m {
            MessageId::A(j) => j,
            MessageId::B1(j) => self.la + j,
            MessageId::B2(j) => self.la + self.lb + j,
            MessageId::C(j) => self.la + 2 * self.lb + j,
        }
    }

    /// The configuration with the roles of the two base stations exchanged.
    pub fn mirrored(&self) -> Self {
        Self { n1: self.n2, n2: self.n1, la: self.lc, lb: self.lb, lc: self.la }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseStation {
    One,
    Two,
}

impl BaseStation {
    pub fn other(self) -> Self {
        match self {
            BaseStation::One => BaseStation::Two,
            BaseStation::Two => BaseStation::One,
        }
    }

    pub fn number(self) -> usize {
        match self {
            BaseStation::One => 1,
            BaseStation::Two => 2,
        }
    }
}

/// One message of the network. Indices are zero-based; the text form is
/// one-based (`a1`, `b1_2`, `b2_2`, `c1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageId {
    /// Group A mobile `j` to BS 1.
    A(usize),
    /// Group B mobile `j` to BS 1.
    B1(usize),
    /// Group B mobile `j` to BS 2.
    B2(usize),
    /// Group C mobile `j` to BS 2.
    C(usize),
}

impl MessageId {
    pub fn destination(self) -> BaseStation {
        match self {
            MessageId::A(_) | MessageId::B1(_) => BaseStation::One,
            MessageId::B2(_) | MessageId::C(_) => BaseStation::Two,
        }
    }

    pub fn mobile(self) -> usize {
        match self {
            MessageId::A(j) | MessageId::B1(j) | MessageId::B2(j) | MessageId::C(j) => j,
        }
    }
}

impl fmt::Display for MessageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageId::A(j) => write!(f, "a{}", j + 1),
            MessageId::B1(j) => write!(f, "b1_{}", j + 1),
            MessageId::B2(j) => write!(f, "b2_{}", j + 1),
            MessageId::C(j) => write!(f, "c{}", j + 1),
        }
    }
}

impl FromStr for MessageId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("unknown message id `{s}`");
        let (ctor, digits): (fn(usize) -> MessageId, &str) = if let Some(r) = s.strip_prefix("b1_") {
            (MessageId::B1, r)
        } else if let Some(r) = s.strip_prefix("b2_") {
            (MessageId::B2, r)
        } else if let Some(r) = s.strip_prefix('a') {
            (MessageId::A, r)
        } else if let Some(r) = s.strip_prefix('c') {
            (MessageId::C, r)
        } else {
            return Err(bad());
        };
        let j: usize = digits.parse().map_err(|_| bad())?;
        if j == 0 {
            return Err(bad());
        }
        Ok(ctor(j - 1))
    }
}

impl Serialize for MessageId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MessageId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-message DoF targets as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DofPoint {
    #[serde(with = "ratio::vec_as_string", default)]
    pub a: Vec<Rational>,
    #[serde(with = "ratio::vec_as_string", default)]
    pub b1: Vec<Rational>,
    #[serde(with = "ratio::vec_as_string", default)]
    pub b2: Vec<Rational>,
    #[serde(with = "ratio::vec_as_string", default)]
    pub c: Vec<Rational>,
}

impl DofPoint {
    pub fn new(a: Vec<Rational>, b1: Vec<Rational>, b2: Vec<Rational>, c: Vec<Rational>) -> Result<Self> {
        let d = Self { a, b1, b2, c };
        d.check_nonnegative()?;
        Ok(d)
    }

    pub fn zeros(cfg: &SigmaConfig) -> Self {
        let z = |n| vec![Rational::zero(); n];
        Self { a: z(cfg.la), b1: z(cfg.lb), b2: z(cfg.lb), c: z(cfg.lc) }
    }

    /// Splits a coordinate vector laid out in `cfg.messages()` order.
    pub fn from_flat(cfg: &SigmaConfig, x: &[Rational]) -> Result<Self> {
        if x.len() != cfg.message_count() {
            return Err(RegionError::DimensionMismatch(format!(
                "{} coordinates for {} messages",
                x.len(),
                cfg.message_count()
            )));
        }
        let (a, rest) = x.split_at(cfg.la);
        let (b1, rest) = rest.split_at(cfg.lb);
        let (b2, c) = rest.split_at(cfg.lb);
        Self::new(a.to_vec(), b1.to_vec(), b2.to_vec(), c.to_vec())
    }

    pub fn flat(&self) -> Vec<Rational> {
        self.a.iter().chain(&self.b1).chain(&self.b2).chain(&self.c).cloned().collect()
    }

    pub fn get(&self, m: MessageId) -> &Rational {
        match m {
            MessageId::A(j) => &self.a[j],
            MessageId::B1(j) => &self.b1[j],
            MessageId::B2(j) => &self.b2[j],
            MessageId::C(j) => &self.c[j],
        }
    }

    pub fn scaled(&self, t: &Rational) -> Self {
        let s = |v: &[Rational]| v.iter().map(|x| x * t).collect();
        Self { a: s(&self.a), b1: s(&self.b1), b2: s(&self.b2), c: s(&self.c) }
    }

    /// Swaps the roles of the two base stations, matching [`SigmaConfig::mirrored`].
    pub fn mirrored(&self) -> Self {
        Self { a: self.c.clone(), b1: self.b2.clone(), b2: self.b1.clone(), c: self.a.clone() }
    }

    pub fn check_dims(&self, cfg: &SigmaConfig) -> Result<()> {
        let expect = [("a", self.a.len(), cfg.la), ("b1", self.b1.len(), cfg.lb), ("b2", self.b2.len(), cfg.lb), ("c", self.c.len(), cfg.lc)];
        for (name, got, want) in expect {
            if got != want {
                return Err(RegionError::DimensionMismatch(format!(
                    "DoF vector `{name}` has {got} entries, configuration needs {want}"
                )));
            }
        }
        self.check_nonnegative()
    }

    fn check_nonnegative(&self) -> Result<()> {
        let groups: [(&[Rational], fn(usize) -> MessageId); 4] =
            [(&self.a, MessageId::A), (&self.b1, MessageId::B1), (&self.b2, MessageId::B2), (&self.c, MessageId::C)];
        for (values, id) in groups {
            if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
                return Err(RegionError::NegativeDof { message: id(j), value: format_rational(v) });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `a_j <= 1`.
    SingleA { j: usize },
    /// `b1_j + b2_j <= 1`.
    PairB { j: usize },
    /// `c_j <= 1`.
    SingleC { j: usize },
    /// Sum bound at BS 1 with the listed Group B messages to BS 2 added.
    Bs1Sum { subset: Vec<usize> },
    /// Sum bound at BS 2 with the listed Group B messages to BS 1 added.
    Bs2Sum { subset: Vec<usize> },
}

/// A half-space `coeffs · d <= bound` with 0/1 coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    #[serde(with = "ratio::vec_as_string")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "ratio::as_string")]
    pub bound: Rational,
    pub label: String,
    pub kind: ConstraintKind,
}

impl Constraint {
    fn build(cfg: &SigmaConfig, kind: ConstraintKind) -> Self {
        let mut coeffs = vec![Rational::zero(); cfg.message_count()];
        let mut set = |m: MessageId| coeffs[cfg.index_of(m)] = Rational::one();
        let one = Rational::one();
        let (bound, label) = match &kind {
            ConstraintKind::SingleA { j } => {
                set(MessageId::A(*j));
                (one, format!("single a{} <= 1", j + 1))
            }
            ConstraintKind::SingleC { j } => {
                set(MessageId::C(*j));
                (one, format!("single c{} <= 1", j + 1))
            }
            ConstraintKind::PairB { j } => {
                set(MessageId::B1(*j));
                set(MessageId::B2(*j));
                (one, format!("pair b1_{0} + b2_{0} <= 1", j + 1))
            }
            ConstraintKind::Bs1Sum { subset } => {
                (0..cfg.la).for_each(|j| set(MessageId::A(j)));
                (0..cfg.lb).for_each(|j| set(MessageId::B1(j)));
                subset.iter().for_each(|&j| set(MessageId::B2(j)));
                (Rational::from_integer(cfg.n1.into()), format!("bs1 J2={} <= {}", fmt_subset(subset), cfg.n1))
            }
            ConstraintKind::Bs2Sum { subset } => {
                (0..cfg.lc).for_each(|j| set(MessageId::C(j)));
                (0..cfg.lb).for_each(|j| set(MessageId::B2(j)));
                subset.iter().for_each(|&j| set(MessageId::B1(j)));
                (Rational::from_integer(cfg.n2.into()), format!("bs2 J1={} <= {}", fmt_subset(subset), cfg.n2))
            }
        };
        Self { coeffs, bound, label, kind }
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .fold(Rational::zero(), |acc, (c, v)| acc + c * v)
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        self.lhs(x) <= self.bound
    }

    pub fn is_tight(&self, x: &[Rational]) -> bool {
        self.lhs(x) == self.bound
    }
}

fn fmt_subset(subset: &[usize]) -> String {
    format!("{{{}}}", subset.iter().map(|j| (j + 1).to_string()).join(","))
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of subset constraints both sum families contribute.
pub fn subset_constraint_count(cfg: &SigmaConfig) -> u128 {
    let family = |n: usize| -> u128 {
        (0..=n.min(cfg.lb)).map(|k| binomial(cfg.lb as u64, k as u64)).sum()
    };
    family(cfg.n1) + family(cfg.n2)
}

/// The complete list of inequalities, single/pair bounds first, then the BS 1
/// family and the BS 2 family, each ordered by subset size and then
/// lexicographically.
pub fn enumerate_constraints(cfg: &SigmaConfig, cap: u64) -> Result<Vec<Constraint>> {
    cfg.validate()?;
    let needed = subset_constraint_count(cfg);
    if needed > cap as u128 {
        return Err(RegionError::SubsetExplosion { needed, cap });
    }
    let mut out = Vec::with_capacity(cfg.la + cfg.lb + cfg.lc + needed as usize);
    out.extend((0..cfg.la).map(|j| Constraint::build(cfg, ConstraintKind::SingleA { j })));
    out.extend((0..cfg.lb).map(|j| Constraint::build(cfg, ConstraintKind::PairB { j })));
    out.extend((0..cfg.lc).map(|j| Constraint::build(cfg, ConstraintKind::SingleC { j })));
    for k in 0..=cfg.n1.min(cfg.lb) {
        for subset in (0..cfg.lb).combinations(k) {
            out.push(Constraint::build(cfg, ConstraintKind::Bs1Sum { subset }));
        }
    }
    for k in 0..=cfg.n2.min(cfg.lb) {
        for subset in (0..cfg.lb).combinations(k) {
            out.push(Constraint::build(cfg, ConstraintKind::Bs2Sum { subset }));
        }
    }
    Ok(out)
}

/// Verdict of a membership query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: Vec<Constraint>,
}

/// Indices of the `k` largest entries, ties broken toward smaller indices,
/// returned in ascending index order.
pub fn top_k_indices(values: &[Rational], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| match values[y].cmp(&values[x]) {
        Ordering::Equal => x.cmp(&y),
        other => other,
    });
    let mut top: Vec<usize> = idx.into_iter().take(k).collect();
    top.sort_unstable();
    top
}

/// Exact membership test.
///
/// Each subset family collapses to one inequality: since every coefficient is
/// nonnegative, the binding subset is the one holding the largest entries. The
/// violated list therefore carries every failing single/pair bound plus, for
/// each sum family that fails, its most-violated subset.
pub fn check_point(cfg: &SigmaConfig, d: &DofPoint) -> Result<Feasibility> {
    cfg.validate()?;
    d.check_dims(cfg)?;
    let x = d.flat();
    let mut violated = Vec::new();
    let mut test = |kind: ConstraintKind| {
        let c = Constraint::build(cfg, kind);
        if !c.holds(&x) {
            violated.push(c);
        }
    };
    (0..cfg.la).for_each(|j| test(ConstraintKind::SingleA { j }));
    (0..cfg.lb).for_each(|j| test(ConstraintKind::PairB { j }));
    (0..cfg.lc).for_each(|j| test(ConstraintKind::SingleC { j }));
    test(ConstraintKind::Bs1Sum { subset: top_k_indices(&d.b2, cfg.n1.min(cfg.lb)) });
    test(ConstraintKind::Bs2Sum { subset: top_k_indices(&d.b1, cfg.n2.min(cfg.lb)) });
    Ok(Feasibility { feasible: violated.is_empty(), violated })
}

/// Membership by evaluating every enumerated constraint.
pub fn check_point_bruteforce(cfg: &SigmaConfig, d: &DofPoint, cap: u64) -> Result<Feasibility> {
    d.check_dims(cfg)?;
    let x = d.flat();
    let violated: Vec<Constraint> =
        enumerate_constraints(cfg, cap)?.into_iter().filter(|c| !c.holds(&x)).collect();
    Ok(Feasibility { feasible: violated.is_empty(), violated })
}

/// Least common multiple of all denominators: the smallest positive integer
/// that makes every scaled DoF an integer.
pub fn mu0(d: &DofPoint) -> BigInt {
    d.a.iter()
        .chain(&d.b1)
        .chain(&d.b2)
        .chain(&d.c)
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Optimum of a weighted DoF sum over the region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSum {
    pub value: Rational,
    pub point: DofPoint,
    /// Labels of the constraints tight at `point`.
    pub tight: Vec<String>,
}

/// Maximizes `weights · d` over the region with an exact simplex method.
pub fn max_sum_dof(cfg: &SigmaConfig, weights: &[Rational], cap: u64) -> Result<MaxSum> {
    if weights.len() != cfg.message_count() {
        return Err(RegionError::DimensionMismatch(format!(
            "{} weights for {} messages",
            weights.len(),
            cfg.message_count()
        )));
    }
    if weights.iter().any(Signed::is_negative) {
        return Err(RegionError::NegativeWeight);
    }
    let constraints = enumerate_constraints(cfg, cap)?;
    let rows: Vec<Vec<Rational>> = constraints.iter().map(|c| c.coeffs.clone()).collect();
    let bounds: Vec<Rational> = constraints.iter().map(|c| c.bound.clone()).collect();
    let sol = lp::maximize(weights, &rows, &bounds)?;
    let tight = constraints.iter().filter(|c| c.is_tight(&sol.x)).map(|c| c.label.clone()).collect();
    Ok(MaxSum { value: sol.value, point: DofPoint::from_flat(cfg, &sol.x)?, tight })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn cfg(n1: usize, n2: usize, la: usize, lb: usize, lc: usize) -> SigmaConfig {
        SigmaConfig::new(n1, n2, la, lb, lc).unwrap()
    }

    #[test]
    fn x_network_has_eight_constraints() {
        let cs = enumerate_constraints(&cfg(1, 1, 0, 2, 0), DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(cs.len(), 8);
        let pairs = cs.iter().filter(|c| matches!(c.kind, ConstraintKind::PairB { .. })).count();
        assert_eq!(pairs, 2);
        for c in &cs {
            assert!(c.coeffs.iter().all(|x| x.is_zero() || x.is_one()));
            assert!(c.bound.is_one());
        }
    }

    #[test]
    fn single_user_mac_constraints() {
        let cs = enumerate_constraints(&cfg(1, 1, 1, 0, 0), DEFAULT_SUBSET_CAP).unwrap();
        // a1 <= 1, the BS 1 sum with J2 = {} and the BS 2 sum with J1 = {}.
        assert_eq!(cs[0].label, "single a1 <= 1");
        let bs1: Vec<_> = cs.iter().filter(|c| matches!(c.kind, ConstraintKind::Bs1Sum { .. })).collect();
        assert_eq!(bs1.len(), 1);
        assert_eq!(bs1[0].coeffs, vec![q(1, 1)]);
        assert_eq!(bs1[0].bound, q(1, 1));
    }

    #[test]
    fn bs1_family_counts_binomials() {
        let cs = enumerate_constraints(&cfg(2, 2, 0, 3, 0), DEFAULT_SUBSET_CAP).unwrap();
        let bs1 = cs.iter().filter(|c| matches!(c.kind, ConstraintKind::Bs1Sum { .. })).count();
        assert_eq!(bs1, 1 + 3 + 3);
    }

    #[test]
    fn subset_cap_is_enforced() {
        let err = enumerate_constraints(&cfg(10, 10, 0, 30, 0), DEFAULT_SUBSET_CAP).unwrap_err();
        assert!(matches!(err, RegionError::SubsetExplosion { .. }));
        assert!(matches!(
            max_sum_dof(&cfg(10, 10, 0, 30, 0), &vec![q(1, 1); 60], 1000),
            Err(RegionError::SubsetExplosion { .. })
        ));
    }

    #[test]
    fn origin_is_feasible() {
        let c = cfg(2, 1, 2, 2, 1);
        assert!(check_point(&c, &DofPoint::zeros(&c)).unwrap().feasible);
        assert!(check_point_bruteforce(&c, &DofPoint::zeros(&c), DEFAULT_SUBSET_CAP).unwrap().feasible);
    }

    #[test]
    fn x_network_third_point_is_feasible_and_tight() {
        let c = cfg(1, 1, 0, 2, 0);
        let d = DofPoint::new(vec![], vec![q(1, 3); 2], vec![q(1, 3); 2], vec![]).unwrap();
        assert!(check_point(&c, &d).unwrap().feasible);
        let x = d.flat();
        let cs = enumerate_constraints(&c, DEFAULT_SUBSET_CAP).unwrap();
        assert!(cs.iter().all(|k| k.holds(&x)));
        let tight_bs1 = cs
            .iter()
            .filter(|k| matches!(k.kind, ConstraintKind::Bs1Sum { ref subset } if subset.len() == 1))
            .all(|k| k.is_tight(&x));
        assert!(tight_bs1);
    }

    #[test]
    fn over_budget_point_violates_top_pair() {
        let c = cfg(2, 2, 0, 3, 0);
        let d = DofPoint::new(vec![], vec![q(1, 2); 3], vec![q(1, 2); 3], vec![]).unwrap();
        let fast = check_point(&c, &d).unwrap();
        assert!(!fast.feasible);
        let bs1 = fast.violated.iter().find(|k| matches!(k.kind, ConstraintKind::Bs1Sum { .. })).unwrap();
        assert_eq!(bs1.kind, ConstraintKind::Bs1Sum { subset: vec![0, 1] });
        assert_eq!(bs1.lhs(&d.flat()), q(5, 2));
        let brute = check_point_bruteforce(&c, &d, DEFAULT_SUBSET_CAP).unwrap();
        assert!(!brute.feasible);
        assert!(brute.violated.iter().any(|k| k.label == bs1.label));
    }

    #[test]
    fn dimension_and_sign_errors() {
        let c = cfg(1, 1, 0, 2, 0);
        let short = DofPoint { b1: vec![q(1, 3)], b2: vec![q(1, 3); 2], ..Default::default() };
        assert!(matches!(check_point(&c, &short), Err(RegionError::DimensionMismatch(_))));
        assert!(matches!(
            DofPoint::new(vec![q(-1, 2)], vec![], vec![], vec![]),
            Err(RegionError::NegativeDof { .. })
        ));
        assert!(SigmaConfig::new(0, 1, 1, 0, 0).is_err());
        assert!(SigmaConfig::new(1, 1, 0, 0, 0).is_err());
    }

    #[test]
    fn mu0_is_lcm_of_denominators() {
        let d = DofPoint::new(vec![], vec![q(1, 3); 2], vec![q(1, 3); 2], vec![]).unwrap();
        assert_eq!(mu0(&d), BigInt::from(3));
        let ints = DofPoint::new(vec![q(1, 1), q(0, 1)], vec![], vec![], vec![q(2, 1)]).unwrap();
        assert_eq!(mu0(&ints), BigInt::from(1));
        let mixed = DofPoint::new(vec![q(1, 2)], vec![], vec![], vec![q(1, 3)]).unwrap();
        assert_eq!(mu0(&mixed), BigInt::from(6));
    }

    #[test]
    fn max_sum_examples() {
        let x = cfg(1, 1, 0, 2, 0);
        let best = max_sum_dof(&x, &vec![q(1, 1); 4], DEFAULT_SUBSET_CAP).unwrap();
        assert_eq!(best.value, q(4, 3));
        assert!(check_point(&x, &best.point).unwrap().feasible);
        assert!(!best.tight.is_empty());

        let mac = cfg(2, 1, 3, 0, 0);
        assert_eq!(max_sum_dof(&mac, &vec![q(1, 1); 3], DEFAULT_SUBSET_CAP).unwrap().value, q(2, 1));

        let zero = max_sum_dof(&x, &vec![q(0, 1); 4], DEFAULT_SUBSET_CAP).unwrap();
        assert!(zero.value.is_zero());
    }

    #[test]
    fn message_ids_round_trip_through_text() {
        let c = cfg(1, 1, 2, 2, 1);
        for m in c.messages() {
            assert_eq!(m.to_string().parse::<MessageId>().unwrap(), m);
        }
        assert_eq!(MessageId::B2(0).to_string(), "b2_1");
        assert!("b3_1".parse::<MessageId>().is_err());
        assert!("a0".parse::<MessageId>().is_err());
    }
}
