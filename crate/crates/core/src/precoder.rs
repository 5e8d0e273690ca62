//! Alignment plans and the structured monomial precoders.
//!
//! Naming follows the message, not the base station where alignment happens:
//!
//! * interference is aligned at BS 1 when `Lb > N1`. The Group B messages to
//!   BS 2 in the set `s2` (`|s2| = N1`) span it, and the precoders are
//!   `p21` (wide exponent range) and `p22` (narrow range). Both are built from
//!   the `T^(1j)` matrices of the out-of-set mobiles, `gamma1 = N1 (Lb - N1)`
//!   of them.
//! * the mirror at BS 2 when `Lb > N2`: set `s1`, precoders `p11`/`p12` from
//!   `T^(2j)`, `gamma2 = N2 (Lb - N2)`.
//!
//! With `mu_n = mu0 (n+1)^(gamma1+gamma2)` slots, message `m` gets
//! `mu0 n^e (n+1)^f d_m` beamforming columns, where `(e, f)` is
//! `(gamma1, gamma2)` for `s1` members to BS 1, `(gamma2, gamma1)` for `s2`
//! members to BS 2, and `(gamma1 + gamma2, 0)` for everything else.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelDraw, ChannelError, Distribution, StackedChannel, TMatrices};
use crate::numerics::{self, Mat, NumericsError, Rational, Scalar, Tolerance};
use crate::region::{self, BaseStation, DofPoint, MessageId, RegionError, SigmaConfig};

/// Largest slot count a plan may request.
pub const MAX_MU_N: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecoderError {
    #[error("DoF point is outside the region; violated: {}", .0.join("; "))]
    InfeasiblePoint(Vec<String>),
    #[error("n must be at least 1")]
    ZeroN,
    #[error("time expansion of {0} slots exceeds the supported maximum")]
    ExpansionTooLarge(String),
    #[error("inconsistent plan: {0}")]
    InconsistentPlan(String),
    #[error("random beamformer for {0} is rank deficient after one retry")]
    RankDeficientRandom(MessageId),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, PrecoderError>;

mod one_based {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|j| j + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        v.into_iter()
            .map(|j| j.checked_sub(1).ok_or_else(|| serde::de::Error::custom("indices are 1-based")))
            .collect()
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
            v.map(|j| j + 1).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
            Option::<usize>::deserialize(d)?
                .map(|j| j.checked_sub(1).ok_or_else(|| serde::de::Error::custom("indices are 1-based")))
                .transpose()
        }
    }
}

/// Alignment sets and their smallest-DoF members. Indices are zero-based in
/// memory and one-based when serialized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetSelection {
    /// Group B mobiles whose BS 1 messages span the interference at BS 2.
    #[serde(with = "one_based")]
    pub s1: Vec<usize>,
    /// Group B mobiles whose BS 2 messages span the interference at BS 1.
    #[serde(with = "one_based")]
    pub s2: Vec<usize>,
    #[serde(with = "one_based::option")]
    pub delta1: Option<usize>,
    #[serde(with = "one_based::option")]
    pub delta2: Option<usize>,
    pub need_align_bs1: bool,
    pub need_align_bs2: bool,
}

impl SetSelection {
    /// Alignment set whose messages span the interference at `bs`.
    pub fn set_at(&self, bs: BaseStation) -> &[usize] {
        match bs {
            BaseStation::One => &self.s2,
            BaseStation::Two => &self.s1,
        }
    }

    pub fn delta_at(&self, bs: BaseStation) -> Option<usize> {
        match bs {
            BaseStation::One => self.delta2,
            BaseStation::Two => self.delta1,
        }
    }

    pub fn aligns_at(&self, bs: BaseStation) -> bool {
        match bs {
            BaseStation::One => self.need_align_bs1,
            BaseStation::Two => self.need_align_bs2,
        }
    }

    /// The alignment set at `bs` ordered with its delta member last; this is
    /// the column order of the stacked channel.
    pub fn beta_order(&self, bs: BaseStation) -> Vec<usize> {
        let set = self.set_at(bs);
        let delta = self.delta_at(bs);
        let mut order: Vec<usize> = set.iter().copied().filter(|&j| Some(j) != delta).collect();
        order.extend(delta);
        order
    }

    /// Group B mobiles outside the alignment set at `bs`, ascending.
    pub fn out_of_set(&self, bs: BaseStation, lb: usize) -> Vec<usize> {
        if !self.aligns_at(bs) {
            return Vec::new();
        }
        let set = self.set_at(bs);
        (0..lb).filter(|j| !set.contains(j)).collect()
    }
}

fn require_feasible(cfg: &SigmaConfig, d: &DofPoint) -> Result<()> {
    let verdict = region::check_point(cfg, d)?;
    if !verdict.feasible {
        return Err(PrecoderError::InfeasiblePoint(verdict.violated.into_iter().map(|c| c.label).collect()));
    }
    Ok(())
}

fn pick_set(values: &[Rational], size: usize) -> (Vec<usize>, Option<usize>) {
    let set = region::top_k_indices(values, size);
    let delta = set.iter().copied().min_by(|&x, &y| values[x].cmp(&values[y]).then(x.cmp(&y)));
    (set, delta)
}

/// Picks the lexicographically smallest maximizing sets and their smallest
/// minimizing members.
pub fn select_sets(cfg: &SigmaConfig, d: &DofPoint) -> Result<SetSelection> {
    require_feasible(cfg, d)?;
    let need_align_bs1 = cfg.lb > cfg.n1;
    let need_align_bs2 = cfg.lb > cfg.n2;
    let (s2, delta2) = if need_align_bs1 { pick_set(&d.b2, cfg.n1) } else { (Vec::new(), None) };
    let (s1, delta1) = if need_align_bs2 { pick_set(&d.b1, cfg.n2) } else { (Vec::new(), None) };
    Ok(SetSelection { s1, s2, delta1, delta2, need_align_bs1, need_align_bs2 })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentPlan {
    #[serde(flatten)]
    pub sets: SetSelection,
    pub gamma1: u32,
    pub gamma2: u32,
    pub mu0: u64,
    pub n: u64,
    pub mu_n: usize,
    /// Exponent blocks of `p11`/`p12`.
    pub b1: usize,
    /// Exponent blocks of `p21`/`p22`.
    pub b2: usize,
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

fn to_count(q: &Rational, what: &str) -> Result<usize> {
    if !q.is_integer() {
        return Err(PrecoderError::InconsistentPlan(format!("{what} = {q} is not an integer")));
    }
    q.to_integer()
        .to_usize()
        .ok_or_else(|| PrecoderError::ExpansionTooLarge(format!("{what} = {q}")))
}

pub fn plan(cfg: &SigmaConfig, d: &DofPoint, n: u64) -> Result<AlignmentPlan> {
    if n == 0 {
        return Err(PrecoderError::ZeroN);
    }
    let sets = select_sets(cfg, d)?;
    let gamma1 = if sets.need_align_bs1 { (cfg.n1 * (cfg.lb - cfg.n1)) as u32 } else { 0 };
    let gamma2 = if sets.need_align_bs2 { (cfg.n2 * (cfg.lb - cfg.n2)) as u32 } else { 0 };
    let mu0_big = region::mu0(d);
    let mu0 = mu0_big.to_u64().ok_or_else(|| PrecoderError::ExpansionTooLarge(format!("mu0 = {mu0_big}")))?;
    let mu_n = checked_pow(n + 1, gamma1 + gamma2)
        .and_then(|p| p.checked_mul(mu0))
        .filter(|&m| m <= MAX_MU_N)
        .ok_or_else(|| PrecoderError::ExpansionTooLarge(format!("mu0 {mu0} (n+1)^{}", gamma1 + gamma2)))?;
    let scale = |exp: u32| -> Result<Rational> {
        let p = checked_pow(n, exp).ok_or_else(|| PrecoderError::ExpansionTooLarge(format!("{n}^{exp}")))?;
        Ok(Rational::from_integer(BigInt::from(mu0) * BigInt::from(p)))
    };
    let b1 = match sets.delta1 {
        Some(delta) if sets.need_align_bs2 => to_count(&(scale(gamma1)? * &d.b1[delta]), "b1")?,
        _ => 0,
    };
    let b2 = match sets.delta2 {
        Some(delta) if sets.need_align_bs1 => to_count(&(scale(gamma2)? * &d.b2[delta]), "b2")?,
        _ => 0,
    };
    Ok(AlignmentPlan { sets, gamma1, gamma2, mu0, n, mu_n: mu_n as usize, b1, b2 })
}

impl AlignmentPlan {
    /// `(e, f)` with `bar_d = mu0 n^e (n+1)^f d`.
    pub fn bar_exponents(&self, m: MessageId) -> (u32, u32) {
        let (g1, g2) = (self.gamma1, self.gamma2);
        match m {
            MessageId::B1(j) if self.sets.need_align_bs2 && self.sets.s1.contains(&j) => (g1, g2),
            MessageId::B2(j) if self.sets.need_align_bs1 && self.sets.s2.contains(&j) => (g2, g1),
            _ => (g1 + g2, 0),
        }
    }

    /// Exponent `k` of the achieved/target ratio `(n/(n+1))^k`.
    pub fn ratio_exponent(&self, m: MessageId) -> u32 {
        self.bar_exponents(m).0
    }

    /// Whether `m` is the message to BS `i` from a member of that BS's
    /// structured set (so its beamformer starts with `p_i1`).
    pub fn in_structured_set(&self, m: MessageId) -> bool {
        match m {
            MessageId::B1(j) => self.sets.need_align_bs2 && self.sets.s1.contains(&j),
            MessageId::B2(j) => self.sets.need_align_bs1 && self.sets.s2.contains(&j),
            _ => false,
        }
    }

    pub fn constraint_count(&self) -> u32 {
        self.gamma1 + self.gamma2
    }
}

/// Beamforming column counts per message over `mu_n` slots.
pub fn target_bar_dofs(cfg: &SigmaConfig, plan: &AlignmentPlan, d: &DofPoint) -> Result<BTreeMap<MessageId, usize>> {
    let n = BigInt::from(plan.n);
    let mu0 = BigInt::from(plan.mu0);
    cfg.messages()
        .into_iter()
        .map(|m| {
            let (e, f) = plan.bar_exponents(m);
            let factor = &mu0 * num_traits::pow(n.clone(), e as usize) * num_traits::pow(&n + 1, f as usize);
            let bar = Rational::from_integer(factor) * d.get(m);
            Ok((m, to_count(&bar, &format!("bar d of {m}"))?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `alpha in {mn+m+1, ..., (m+1)n+m+1}`, `n + 1` values.
    Wide,
    /// `alpha in {mn+m+1, ..., (m+1)n+m}`, `n` values.
    Narrow,
}

/// Exponents of one monomial precoder column: block `m` and one exponent per
/// `(l, j)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentTuple {
    pub m: usize,
    pub alphas: Vec<u32>,
}

/// All tuples for blocks `m = 0..b`, lexicographic in `(m, alphas)`.
pub fn exponent_tuples(b: usize, n: u64, gamma: u32, form: Form) -> Vec<ExponentTuple> {
    let n = n as u32;
    let mut out = Vec::new();
    for m in 0..b {
        let mu = m as u32;
        let lo = mu * n + mu + 1;
        let hi = match form {
            Form::Wide => (mu + 1) * n + mu + 1,
            Form::Narrow => (mu + 1) * n + mu,
        };
        if hi < lo {
            continue;
        }
        let mut alphas = vec![lo; gamma as usize];
        loop {
            out.push(ExponentTuple { m, alphas: alphas.clone() });
            // Odometer increment, last position fastest.
            let mut pos = alphas.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                if alphas[pos] < hi {
                    alphas[pos] += 1;
                    alphas[pos + 1..].iter_mut().for_each(|a| *a = lo);
                    break;
                }
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || alphas.is_empty() {
                break;
            }
        }
    }
    out
}

/// Monomial precoder: column `k` is `prod_p T_p^{alpha_kp} 1`, evaluated
/// entrywise on the diagonals.
pub fn build_p<S: Scalar>(t_mats: &[&Mat<S>], tuples: &[ExponentTuple], mu_n: usize) -> Result<Mat<S>> {
    if let Some(bad) = t_mats.iter().find(|t| t.rows() != mu_n || t.cols() != mu_n) {
        return Err(NumericsError::DimensionMismatch(format!(
            "T matrix is {}x{}, expected {mu_n}x{mu_n}",
            bad.rows(),
            bad.cols()
        ))
        .into());
    }
    if let Some(bad) = tuples.iter().find(|t| t.alphas.len() != t_mats.len()) {
        return Err(NumericsError::DimensionMismatch(format!(
            "tuple with {} exponents for {} T matrices",
            bad.alphas.len(),
            t_mats.len()
        ))
        .into());
    }
    let diags: Vec<Vec<S>> = t_mats.iter().map(|t| t.diagonal()).collect();
    Ok(Mat::from_fn(mu_n, tuples.len(), |row, k| {
        tuples[k]
            .alphas
            .iter()
            .zip(&diags)
            .fold(S::one(), |acc, (&alpha, diag)| acc * diag[row].powu(alpha))
    }))
}

/// Stacked channel and `T` matrices for one aligning base station.
#[derive(Debug, Clone, PartialEq)]
pub struct SideChannels<S> {
    pub stacked: StackedChannel<S>,
    /// One entry per out-of-set mobile, ascending.
    pub t: Vec<TMatrices<S>>,
}

impl<S: Scalar> SideChannels<S> {
    /// The `(l, j)` pairs in lexicographic order with their `T` matrices.
    pub fn pairs(&self) -> Vec<(usize, usize, &Mat<S>)> {
        let n = self.stacked.members.len();
        (0..n).flat_map(|l| self.t.iter().map(move |tm| (l, tm.j, &tm.blocks[l]))).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentChannels<S> {
    pub bs1: Option<SideChannels<S>>,
    pub bs2: Option<SideChannels<S>>,
}

impl<S> AlignmentChannels<S> {
    pub fn side(&self, bs: BaseStation) -> Option<&SideChannels<S>> {
        match bs {
            BaseStation::One => self.bs1.as_ref(),
            BaseStation::Two => self.bs2.as_ref(),
        }
    }
}

/// Stacks and solves for every `T` matrix the plan needs.
pub fn alignment_channels<S: Scalar>(
    cfg: &SigmaConfig,
    plan: &AlignmentPlan,
    draw: &ChannelDraw<S>,
    tol: &Tolerance,
) -> std::result::Result<AlignmentChannels<S>, ChannelError> {
    let side = |bs: BaseStation| -> std::result::Result<Option<SideChannels<S>>, ChannelError> {
        if !plan.sets.aligns_at(bs) {
            return Ok(None);
        }
        let stacked = draw.stack(bs, &plan.sets.beta_order(bs), tol)?;
        let t = plan
            .sets
            .out_of_set(bs, cfg.lb)
            .into_iter()
            .map(|j| draw.compute_t(&stacked, j, tol))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Some(SideChannels { stacked, t }))
    };
    Ok(AlignmentChannels { bs1: side(BaseStation::One)?, bs2: side(BaseStation::Two)? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPrecoder<S> {
    pub matrix: Mat<S>,
    pub tuples: Vec<ExponentTuple>,
}

/// Structured precoders plus every message's beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<S> {
    pub p11: Option<StructuredPrecoder<S>>,
    pub p12: Option<StructuredPrecoder<S>>,
    pub p21: Option<StructuredPrecoder<S>>,
    pub p22: Option<StructuredPrecoder<S>>,
    pub v: BTreeMap<MessageId, Mat<S>>,
    /// Random extension blocks of structured-set members.
    pub q: BTreeMap<MessageId, Mat<S>>,
    /// Columns of `p12`/`p22` drawn by out-of-set messages.
    pub picks: BTreeMap<MessageId, Vec<usize>>,
}

impl<S> PrecoderSet<S> {
    /// `(wide, narrow)` precoders used for alignment at `bs`.
    pub fn structured_at(&self, bs: BaseStation) -> (Option<&StructuredPrecoder<S>>, Option<&StructuredPrecoder<S>>) {
        match bs {
            BaseStation::One => (self.p21.as_ref(), self.p22.as_ref()),
            BaseStation::Two => (self.p11.as_ref(), self.p12.as_ref()),
        }
    }
}

/// Random stream separate from the channel draw of the same seed.
pub const BEAMFORMER_STREAM: u64 = 1;

fn random_full_rank<S: Scalar>(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    dist: Distribution,
    tol: &Tolerance,
    owner: MessageId,
) -> Result<Mat<S>> {
    if cols > rows {
        return Err(PrecoderError::InconsistentPlan(format!("{owner} needs {cols} columns in {rows} slots")));
    }
    for _ in 0..2 {
        let m = Mat::from_fn(rows, cols, |_, _| dist.sample(rng));
        if numerics::rank_or_zero(&m, tol) == cols {
            return Ok(m);
        }
    }
    Err(PrecoderError::RankDeficientRandom(owner))
}

/// Builds the structured precoders and assigns every beamformer.
pub fn assemble<S: Scalar>(
    cfg: &SigmaConfig,
    plan: &AlignmentPlan,
    d: &DofPoint,
    channels: &AlignmentChannels<S>,
    seed: u64,
    dist: Distribution,
    tol: &Tolerance,
) -> Result<PrecoderSet<S>> {
    let mu = plan.mu_n;
    let bar = target_bar_dofs(cfg, plan, d)?;
    let structured = |bs: BaseStation, blocks: usize, gamma: u32| -> Result<Option<(StructuredPrecoder<S>, StructuredPrecoder<S>)>> {
        if !plan.sets.aligns_at(bs) {
            return Ok(None);
        }
        let side = channels
            .side(bs)
            .ok_or_else(|| PrecoderError::InconsistentPlan(format!("no T matrices for BS {}", bs.number())))?;
        let pairs = side.pairs();
        if pairs.len() != gamma as usize {
            return Err(PrecoderError::InconsistentPlan(format!(
                "{} alignment pairs at BS {}, plan expects {gamma}",
                pairs.len(),
                bs.number()
            )));
        }
        let mats: Vec<&Mat<S>> = pairs.iter().map(|p| p.2).collect();
        let build = |form: Form| -> Result<StructuredPrecoder<S>> {
            let tuples = exponent_tuples(blocks, plan.n, gamma, form);
            Ok(StructuredPrecoder { matrix: build_p(&mats, &tuples, mu)?, tuples })
        };
        Ok(Some((build(Form::Wide)?, build(Form::Narrow)?)))
    };
    let (p21, p22) = structured(BaseStation::One, plan.b2, plan.gamma1)?.unzip();
    let (p11, p12) = structured(BaseStation::Two, plan.b1, plan.gamma2)?.unzip();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BEAMFORMER_STREAM);
    let mut v = BTreeMap::new();
    let mut q = BTreeMap::new();
    let mut picks = BTreeMap::new();
    for m in cfg.messages() {
        let cols = bar[&m];
        let (wide, narrow, delta) = match m {
            MessageId::B1(_) if plan.sets.need_align_bs2 => (&p11, &p12, plan.sets.delta1.map(MessageId::B1)),
            MessageId::B2(_) if plan.sets.need_align_bs1 => (&p21, &p22, plan.sets.delta2.map(MessageId::B2)),
            _ => {
                v.insert(m, random_full_rank(&mut rng, mu, cols, dist, tol, m)?);
                continue;
            }
        };
        let (Some(wide), Some(narrow), Some(delta)) = (wide, narrow, delta) else {
            return Err(PrecoderError::InconsistentPlan(format!("missing structured precoder for {m}")));
        };
        if plan.in_structured_set(m) {
            let base = bar[&delta];
            if cols < base || wide.matrix.cols() != base {
                return Err(PrecoderError::InconsistentPlan(format!(
                    "{m}: {cols} columns, shared block has {} (delta needs {base})",
                    wide.matrix.cols()
                )));
            }
            let extra: Mat<S> = random_full_rank(&mut rng, mu, cols - base, dist, tol, m)?;
            v.insert(m, Mat::hcat(mu, &[&wide.matrix, &extra])?);
            q.insert(m, extra);
        } else {
            let available = narrow.matrix.cols();
            if cols > available {
                return Err(PrecoderError::InconsistentPlan(format!(
                    "{m} needs {cols} columns, narrow precoder has {available}"
                )));
            }
            let mut chosen = index::sample(&mut rng, available, cols).into_vec();
            chosen.sort_unstable();
            v.insert(m, narrow.matrix.select_columns(&chosen));
            picks.insert(m, chosen);
        }
    }
    Ok(PrecoderSet { p11, p12, p21, p22, v, q, picks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn cfg(n1: usize, n2: usize, la: usize, lb: usize, lc: usize) -> SigmaConfig {
        SigmaConfig::new(n1, n2, la, lb, lc).unwrap()
    }

    fn s1_point() -> (SigmaConfig, DofPoint) {
        (cfg(1, 1, 0, 2, 0), DofPoint::new(vec![], vec![q(1, 3); 2], vec![q(1, 3); 2], vec![]).unwrap())
    }

    #[test]
    fn ties_pick_smallest_indices() {
        let (c, d) = s1_point();
        let s = select_sets(&c, &d).unwrap();
        assert_eq!((s.s1.clone(), s.s2.clone()), (vec![0], vec![0]));
        assert_eq!((s.delta1, s.delta2), (Some(0), Some(0)));
    }

    #[test]
    fn unique_maximum_is_selected() {
        let c = cfg(1, 1, 0, 2, 0);
        let d = DofPoint::new(vec![], vec![q(0, 1), q(0, 1)], vec![q(1, 4), q(1, 2)], vec![]).unwrap();
        let s = select_sets(&c, &d).unwrap();
        assert_eq!(s.s2, vec![1]);
        assert_eq!(s.delta2, Some(1));
    }

    #[test]
    fn no_alignment_when_antennas_suffice() {
        let c = cfg(2, 2, 0, 1, 0);
        let d = DofPoint::new(vec![], vec![q(1, 2)], vec![q(1, 2)], vec![]).unwrap();
        let s = select_sets(&c, &d).unwrap();
        assert!(!s.need_align_bs1 && !s.need_align_bs2);
        assert!(s.s1.is_empty() && s.delta2.is_none());
    }

    #[test]
    fn infeasible_points_are_rejected() {
        let c = cfg(2, 2, 0, 3, 0);
        let d = DofPoint::new(vec![], vec![q(1, 2); 3], vec![q(1, 2); 3], vec![]).unwrap();
        assert!(matches!(select_sets(&c, &d), Err(PrecoderError::InfeasiblePoint(_))));
        assert!(matches!(plan(&c, &d, 1), Err(PrecoderError::InfeasiblePoint(_))));
    }

    #[test]
    fn x_network_plan_arithmetic() {
        let (c, d) = s1_point();
        let p = plan(&c, &d, 1).unwrap();
        assert_eq!((p.mu0, p.gamma1, p.gamma2, p.mu_n, p.b1, p.b2), (3, 1, 1, 12, 1, 1));
        let bar = target_bar_dofs(&c, &p, &d).unwrap();
        assert_eq!(bar[&MessageId::B1(0)], 2);
        assert_eq!(bar[&MessageId::B1(1)], 1);
        assert_eq!(bar[&MessageId::B2(0)], 2);
        assert_eq!(bar[&MessageId::B2(1)], 1);
    }

    #[test]
    fn no_expansion_without_alignment() {
        let c = cfg(3, 2, 1, 2, 1);
        let d = DofPoint::new(vec![q(1, 2)], vec![q(1, 4); 2], vec![q(1, 4); 2], vec![q(1, 2)]).unwrap();
        let p = plan(&c, &d, 5).unwrap();
        assert_eq!((p.gamma1, p.gamma2), (0, 0));
        assert_eq!(p.mu_n as u64, p.mu0);
        assert_eq!(p.mu0, 4);
    }

    #[test]
    fn two_antenna_plan_uses_96_slots() {
        let c = cfg(2, 2, 0, 3, 0);
        let d = DofPoint::new(vec![], vec![q(1, 6); 3], vec![q(1, 6); 3], vec![]).unwrap();
        let p = plan(&c, &d, 1).unwrap();
        assert_eq!((p.gamma1, p.gamma2, p.mu0, p.mu_n), (2, 2, 6, 96));
    }

    #[test]
    fn group_a_bar_dof() {
        // La = 1 with d = 1/2 next to an aligned X network: gamma1 + gamma2 = 2,
        // mu0 = 2, n = 2 gives 2 * 4 * 1/2 = 4 columns over 18 slots.
        let c = cfg(1, 1, 1, 2, 0);
        let d = DofPoint::new(vec![q(1, 2)], vec![q(0, 1); 2], vec![q(1, 2), q(0, 1)], vec![]).unwrap();
        let p = plan(&c, &d, 2).unwrap();
        assert_eq!((p.mu0, p.gamma1 + p.gamma2, p.mu_n), (2, 2, 18));
        assert_eq!(target_bar_dofs(&c, &p, &d).unwrap()[&MessageId::A(0)], 4);
    }

    #[test]
    fn exponent_tuple_examples() {
        let wide = exponent_tuples(1, 1, 1, Form::Wide);
        assert_eq!(wide, vec![ExponentTuple { m: 0, alphas: vec![1] }, ExponentTuple { m: 0, alphas: vec![2] }]);
        assert_eq!(exponent_tuples(1, 1, 1, Form::Narrow), vec![ExponentTuple { m: 0, alphas: vec![1] }]);
        for form in [Form::Wide, Form::Narrow] {
            let t = exponent_tuples(3, 2, 0, form);
            assert_eq!(t.len(), 3);
            assert!(t.iter().all(|x| x.alphas.is_empty()));
        }
    }

    #[test]
    fn exponent_tuple_counts_and_order() {
        for (b, n, gamma) in [(1, 1, 2), (2, 3, 2), (3, 2, 1), (2, 1, 4)] {
            let wide = exponent_tuples(b, n, gamma, Form::Wide);
            let narrow = exponent_tuples(b, n, gamma, Form::Narrow);
            assert_eq!(wide.len(), b * (n as usize + 1).pow(gamma));
            assert_eq!(narrow.len(), b * (n as usize).pow(gamma));
            assert!(wide.windows(2).all(|w| w[0] < w[1]));
            assert!(narrow.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn empty_tuple_builds_ones_column() {
        let t: Vec<&Mat<f64>> = Vec::new();
        let p = build_p(&t, &[ExponentTuple { m: 0, alphas: vec![] }], 4).unwrap();
        assert_eq!(p, Mat::from_fn(4, 1, |_, _| 1.0));
    }

    #[test]
    fn build_p_matches_dense_matrix_powers() {
        let tm = Mat::<Rational>::from_diagonal(&[q(1, 2), q(3, 4), q(5, 3)]);
        let tm2 = Mat::<Rational>::from_diagonal(&[q(2, 1), q(7, 8), q(9, 11)]);
        let tuples = exponent_tuples(2, 2, 2, Form::Wide);
        let p = build_p(&[&tm, &tm2], &tuples, 3).unwrap();
        let ones = Mat::<Rational>::from_fn(3, 1, |_, _| q(1, 1));
        for (k, tup) in tuples.iter().enumerate() {
            let mut acc = Mat::<Rational>::identity(3);
            for (t, &a) in [&tm, &tm2].iter().zip(&tup.alphas) {
                for _ in 0..a {
                    acc = acc.mul(t).unwrap();
                }
            }
            assert_eq!(acc.mul(&ones).unwrap().column(0), p.column(k));
        }
        assert!(build_p(&[&tm], &tuples, 3).is_err());
        assert!(build_p(&[&tm, &tm2], &tuples, 4).is_err());
    }

    #[test]
    fn x_network_precoders() {
        let (c, d) = s1_point();
        let tol = Tolerance::default();
        let p = plan(&c, &d, 1).unwrap();
        let draw = channel::draw::<Rational>(&c, p.mu_n, 3);
        let ch = alignment_channels(&c, &p, &draw, &tol).unwrap();
        let set = assemble(&c, &p, &d, &ch, 3, Distribution::default_for(numerics::Mode::Rational), &tol).unwrap();
        let p21 = &set.p21.as_ref().unwrap().matrix;
        let p22 = &set.p22.as_ref().unwrap().matrix;
        assert_eq!((p21.cols(), p22.cols()), (2, 1));
        let t = ch.bs1.as_ref().unwrap().t[0].diagonal(0);
        for r in 0..12 {
            assert_eq!(p21.get(r, 0), &t[r]);
            assert_eq!(p21.get(r, 1), &(t[r].clone() * &t[r]));
            assert_eq!(p22.get(r, 0), &t[r]);
        }
        assert_eq!(set.v[&MessageId::B1(0)], set.p11.as_ref().unwrap().matrix);
        assert_eq!(set.v[&MessageId::B1(0)].cols(), 2);
        assert_eq!(set.q[&MessageId::B1(0)].cols(), 0);
        assert_eq!(set.v[&MessageId::B1(1)].cols(), 1);
        let bar = target_bar_dofs(&c, &p, &d).unwrap();
        for (m, v) in &set.v {
            assert_eq!(v.cols(), bar[m]);
        }
    }

    #[test]
    fn unstructured_branch_is_fully_random() {
        let c = cfg(2, 2, 1, 2, 1);
        let d = DofPoint::new(vec![q(1, 2)], vec![q(1, 2), q(1, 4)], vec![q(1, 4), q(1, 2)], vec![q(1, 3)]).unwrap();
        let tol = Tolerance::default();
        let p = plan(&c, &d, 1).unwrap();
        let draw = channel::draw::<f64>(&c, p.mu_n, 1);
        let ch = alignment_channels(&c, &p, &draw, &tol).unwrap();
        assert!(ch.bs1.is_none() && ch.bs2.is_none());
        let set = assemble(&c, &p, &d, &ch, 1, Distribution::LogUniform, &tol).unwrap();
        assert!(set.p11.is_none() && set.p22.is_none());
        let bar = target_bar_dofs(&c, &p, &d).unwrap();
        for m in c.messages() {
            let expect = (Rational::from_integer(p.mu0.into()) * d.get(m)).to_integer();
            assert_eq!(BigInt::from(bar[&m]), expect);
            assert_eq!(set.v[&m].cols(), bar[&m]);
        }
        assert!(set.picks.is_empty());
    }

    #[test]
    fn zero_dof_delta_yields_empty_precoders() {
        let c = cfg(1, 1, 0, 2, 0);
        let d = DofPoint::new(vec![], vec![q(1, 2), q(0, 1)], vec![q(0, 1); 2], vec![]).unwrap();
        let tol = Tolerance::default();
        let p = plan(&c, &d, 1).unwrap();
        assert_eq!(p.b2, 0);
        let draw = channel::draw::<f64>(&c, p.mu_n, 2);
        let ch = alignment_channels(&c, &p, &draw, &tol).unwrap();
        let set = assemble(&c, &p, &d, &ch, 2, Distribution::LogUniform, &tol).unwrap();
        assert_eq!(set.p21.as_ref().unwrap().matrix.cols(), 0);
        assert_eq!(set.v[&MessageId::B2(1)].cols(), 0);
    }
}
