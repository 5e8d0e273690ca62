//! Certification of a construction: alignment containments, per-mobile
//! beamformer rank, full column rank of `Λ1`/`Λ2`, DoF accounting and the
//! monomial full-rank property tester.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelDraw, ChannelError, Distribution, Path};
use crate::numerics::{self, Mat, Mode, NumericsError, Rational, Scalar, Tolerance};
use crate::precoder::{self, AlignmentChannels, AlignmentPlan, PrecoderError, PrecoderSet};
use crate::ratio;
use crate::region::{BaseStation, DofPoint, MessageId, SigmaConfig};

/// Extra attempts (with `seed + 1`, `seed + 2`, ...) after a singular stack.
pub const MAX_RETRIES: u32 = 3;

/// Coefficient grid of the exact-mode monomial tester. Much finer than the
/// channel grid because the tested matrices are square.
pub const LEMMA1_GRID_DENOMINATOR: u32 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("DoF point is outside the region; violated: {}", .0.join("; "))]
    InfeasiblePoint(Vec<String>),
    #[error("Λ{bs} has {cols} columns but only {rows} rows")]
    TallnessViolated { bs: usize, rows: usize, cols: usize },
    #[error("channel draws stayed singular for seeds {first}..={last}: {reason}")]
    RetriesExhausted { first: u64, last: u64, reason: String },
    #[error("exponent generator asserted validity but row {row} repeats an exponent vector")]
    InvalidGenerator { row: usize },
    #[error("{0}")]
    Generator(String),
    #[error(transparent)]
    Precoder(PrecoderError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl From<PrecoderError> for VerifyError {
    fn from(e: PrecoderError) -> Self {
        match e {
            PrecoderError::InfeasiblePoint(v) => VerifyError::InfeasiblePoint(v),
            PrecoderError::Channel(c) => VerifyError::Channel(c),
            PrecoderError::Numerics(n) => VerifyError::Numerics(n),
            other => VerifyError::Precoder(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCheck {
    /// Span containment for every pair.
    pub alignment_ok: bool,
    /// Column-for-column containment for every pair.
    pub column_subset_ok: bool,
    pub constraints_checked: u32,
    /// Largest max-norm distance from a shifted column to its nearest
    /// structured column; exactly zero in Rational mode when aligned.
    pub max_residual: f64,
}

/// Identical columns count as exactly zero; other distances are measured in
/// `f64`, which keeps Rational mode from subtracting huge fractions.
fn nearest_column_residual<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> f64 {
    let targets: Vec<Vec<S>> = (0..b.cols()).map(|k| b.column(k)).collect();
    let approx: Vec<Vec<f64>> = targets.iter().map(|c| c.iter().map(Scalar::to_f64).collect()).collect();
    (0..a.cols())
        .map(|i| {
            let col = a.column(i);
            if targets.contains(&col) {
                return 0.0;
            }
            let col: Vec<f64> = col.iter().map(Scalar::to_f64).collect();
            approx
                .iter()
                .map(|t| col.iter().zip(t).map(|(x, y)| (x - y).abs()).fold(0.0_f64, f64::max))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0_f64, f64::max)
}

/// Checks `T_l^(ij) P_narrow ⊂ P_wide` for every `(l, j)` pair at every
/// aligning base station.
pub fn check_alignment<S: Scalar>(
    plan: &AlignmentPlan,
    precoders: &PrecoderSet<S>,
    channels: &AlignmentChannels<S>,
    tol: &Tolerance,
) -> Result<AlignmentCheck> {
    let mut out = AlignmentCheck { alignment_ok: true, column_subset_ok: true, constraints_checked: 0, max_residual: 0.0 };
    for bs in [BaseStation::One, BaseStation::Two] {
        if !plan.sets.aligns_at(bs) {
            continue;
        }
        let (Some(wide), Some(narrow), Some(side)) = (precoders.structured_at(bs).0, precoders.structured_at(bs).1, channels.side(bs))
        else {
            return Err(PrecoderError::InconsistentPlan(format!("missing structured precoders at BS {}", bs.number())).into());
        };
        for (_, _, t) in side.pairs() {
            let shifted = t.mul(&narrow.matrix)?;
            out.alignment_ok &= numerics::subspace_contains(&shifted, &wide.matrix, tol)?;
            out.column_subset_ok &= numerics::columns_subset_of(&shifted, &wide.matrix, tol)?;
            out.max_residual = out.max_residual.max(nearest_column_residual(&shifted, &wide.matrix));
            out.constraints_checked += 1;
        }
    }
    Ok(out)
}

/// Every Group B mobile's two beamformers are jointly full column rank.
pub fn check_pairwise<S: Scalar>(cfg: &SigmaConfig, precoders: &PrecoderSet<S>, tol: &Tolerance) -> Result<bool> {
    for j in 0..cfg.lb {
        let (v1, v2) = (beamformer(precoders, MessageId::B1(j))?, beamformer(precoders, MessageId::B2(j))?);
        let joined = Mat::hcat(v1.rows(), &[v1, v2])?;
        if numerics::rank_or_zero(&joined, tol) != joined.cols() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn beamformer<S>(precoders: &PrecoderSet<S>, m: MessageId) -> Result<&Mat<S>> {
    precoders
        .v
        .get(&m)
        .ok_or_else(|| PrecoderError::InconsistentPlan(format!("no beamformer for {m}")).into())
}

/// Signal and interference columns seen at one base station.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaParts<S> {
    pub bs: BaseStation,
    /// Own single-cell group (A at BS 1, C at BS 2).
    pub a_block: Mat<S>,
    /// Group B messages intended for this base station.
    pub b_block: Mat<S>,
    /// Interference: `[H Q~, H P~]` when aligned, the raw cross terms otherwise.
    pub c_block: Mat<S>,
    pub assembled: Mat<S>,
    /// Block-diagonal extension blocks, zero block for the delta member.
    pub q_tilde: Option<Mat<S>>,
    /// Block-diagonal copies of the wide precoder.
    pub p_tilde: Option<Mat<S>>,
    /// Alignment-set message whose extension block is the empty one.
    pub q_excluded: Option<MessageId>,
}

fn own_messages(cfg: &SigmaConfig, bs: BaseStation) -> (Vec<MessageId>, Vec<MessageId>, Vec<MessageId>) {
    match bs {
        BaseStation::One => (
            (0..cfg.la).map(MessageId::A).collect(),
            (0..cfg.lb).map(MessageId::B1).collect(),
            (0..cfg.lb).map(MessageId::B2).collect(),
        ),
        BaseStation::Two => (
            (0..cfg.lc).map(MessageId::C).collect(),
            (0..cfg.lb).map(MessageId::B2).collect(),
            (0..cfg.lb).map(MessageId::B1).collect(),
        ),
    }
}

fn received<S: Scalar>(draw: &ChannelDraw<S>, precoders: &PrecoderSet<S>, bs: BaseStation, msgs: &[MessageId]) -> Result<Mat<S>> {
    let rows = draw.cfg.antennas(bs) * draw.mu_n;
    let parts: Vec<Mat<S>> = msgs
        .iter()
        .map(|&m| {
            let path = match m {
                MessageId::A(j) => Path::A { j },
                MessageId::C(j) => Path::C { j },
                MessageId::B1(j) | MessageId::B2(j) => Path::B { bs, j },
            };
            Ok(draw.expand(path)?.mul(beamformer(precoders, m)?)?)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&Mat<S>> = parts.iter().collect();
    Ok(Mat::hcat(rows, &refs)?)
}

pub fn build_lambda<S: Scalar>(
    bs: BaseStation,
    plan: &AlignmentPlan,
    draw: &ChannelDraw<S>,
    channels: &AlignmentChannels<S>,
    precoders: &PrecoderSet<S>,
) -> Result<LambdaParts<S>> {
    let cfg = &draw.cfg;
    let rows = cfg.antennas(bs) * draw.mu_n;
    let (own, group_b, cross) = own_messages(cfg, bs);
    let a_block = received(draw, precoders, bs, &own)?;
    let b_block = received(draw, precoders, bs, &group_b)?;
    let cross_id = |j: usize| match bs {
        BaseStation::One => MessageId::B2(j),
        BaseStation::Two => MessageId::B1(j),
    };

    let (c_block, q_tilde, p_tilde, q_excluded) = if plan.sets.aligns_at(bs) {
        let side = channels
            .side(bs)
            .ok_or_else(|| PrecoderError::InconsistentPlan(format!("no stacked channel at BS {}", bs.number())))?;
        let wide = precoders
            .structured_at(bs)
            .0
            .ok_or_else(|| PrecoderError::InconsistentPlan(format!("no wide precoder at BS {}", bs.number())))?;
        let members = &side.stacked.members;
        let (leading, delta) = members.split_at(members.len() - 1);
        let empty = Mat::zeros(draw.mu_n, 0);
        let mut q_parts: Vec<&Mat<S>> = leading
            .iter()
            .map(|&j| precoders.q.get(&cross_id(j)).ok_or_else(|| PrecoderError::InconsistentPlan(format!("no Q block for {}", cross_id(j)))))
            .collect::<std::result::Result<_, _>>()?;
        q_parts.push(&empty);
        let q_tilde = Mat::block_diag(&q_parts);
        let p_tilde = Mat::block_diag(&vec![&wide.matrix; members.len()]);
        let hq = side.stacked.matrix.mul(&q_tilde)?;
        let hp = side.stacked.matrix.mul(&p_tilde)?;
        (Mat::hcat(rows, &[&hq, &hp])?, Some(q_tilde), Some(p_tilde), Some(cross_id(delta[0])))
    } else {
        let cross_ids: Vec<MessageId> = cross.clone();
        (received(draw, precoders, bs, &cross_ids)?, None, None, None)
    };

    let assembled = Mat::hcat(rows, &[&a_block, &b_block, &c_block])?;
    if assembled.cols() > rows {
        return Err(VerifyError::TallnessViolated { bs: bs.number(), rows, cols: assembled.cols() });
    }
    Ok(LambdaParts { bs, a_block, b_block, c_block, assembled, q_tilde, p_tilde, q_excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaCheck {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub full: bool,
}

pub fn check_lambda<S: Scalar>(parts: &LambdaParts<S>, tol: &Tolerance) -> LambdaCheck {
    let m = &parts.assembled;
    let rank = numerics::rank_or_zero(m, tol);
    LambdaCheck { rows: m.rows(), cols: m.cols(), rank, full: rank == m.cols() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AchievedDof {
    pub bar_dof: usize,
    #[serde(with = "ratio::as_string")]
    pub per_slot: Rational,
    #[serde(with = "ratio::as_string")]
    pub target: Rational,
    /// `per_slot / target`; absent when the target is zero.
    #[serde(with = "ratio::option_as_string")]
    pub ratio: Option<Rational>,
    /// `k` in the closed form `(n/(n+1))^k`.
    pub ratio_exponent: u32,
    #[serde(with = "ratio::as_string")]
    pub closed_form: Rational,
}

/// `(n/(n+1))^k` as an exact rational.
pub fn closed_form_ratio(n: u64, k: u32) -> Rational {
    Rational::new(num_traits::pow(BigInt::from(n), k as usize), num_traits::pow(BigInt::from(n + 1), k as usize))
}

/// Per-message DoF over `mu_n` slots and their total.
pub fn achieved_dof<S: Scalar>(
    cfg: &SigmaConfig,
    plan: &AlignmentPlan,
    d: &DofPoint,
    precoders: &PrecoderSet<S>,
) -> Result<(BTreeMap<MessageId, AchievedDof>, Rational)> {
    let mu = Rational::from_integer(BigInt::from(plan.mu_n));
    let mut total = Rational::from_integer(BigInt::from(0));
    let mut out = BTreeMap::new();
    for m in cfg.messages() {
        let bar_dof = beamformer(precoders, m)?.cols();
        let per_slot = Rational::from_integer(BigInt::from(bar_dof)) / &mu;
        let target = d.get(m).clone();
        let ratio = (target != Rational::from_integer(BigInt::from(0))).then(|| &per_slot / &target);
        let k = plan.ratio_exponent(m);
        total += &per_slot;
        out.insert(m, AchievedDof { bar_dof, per_slot, target, ratio, ratio_exponent: k, closed_form: closed_form_ratio(plan.n, k) });
    }
    Ok((out, total))
}

/// Everything the checks need for one realized construction.
#[derive(Debug, Clone)]
pub struct Construction<S> {
    pub plan: AlignmentPlan,
    pub draw: ChannelDraw<S>,
    pub channels: AlignmentChannels<S>,
    pub precoders: PrecoderSet<S>,
    pub seed_used: u64,
    pub retries: u32,
}

/// Plans, draws (retrying singular stacks) and assembles.
pub fn construct<S: Scalar>(
    cfg: &SigmaConfig,
    d: &DofPoint,
    n: u64,
    seed: u64,
    dist: Distribution,
    tol: &Tolerance,
) -> Result<Construction<S>> {
    let plan = precoder::plan(cfg, d, n)?;
    let mut last = String::new();
    for retries in 0..=MAX_RETRIES {
        let seed_used = seed.wrapping_add(u64::from(retries));
        let draw = channel::draw_with::<S>(cfg, plan.mu_n, seed_used, dist);
        let channels = match precoder::alignment_channels(cfg, &plan, &draw, tol) {
            Ok(c) => c,
            Err(e @ ChannelError::SingularStack { .. }) => {
                last = e.to_string();
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let precoders = precoder::assemble(cfg, &plan, d, &channels, seed_used, dist, tol)?;
        return Ok(Construction { plan, draw, channels, precoders, seed_used, retries });
    }
    Err(VerifyError::RetriesExhausted { first: seed, last: seed.wrapping_add(u64::from(MAX_RETRIES)), reason: last })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub alignment: AlignmentCheck,
    pub pairwise_ok: bool,
    pub lambda1: LambdaCheck,
    pub lambda2: LambdaCheck,
}

impl Certification {
    pub fn pass(&self) -> bool {
        self.alignment.alignment_ok && self.pairwise_ok && self.lambda1.full && self.lambda2.full
    }
}

pub fn certify<S: Scalar>(c: &Construction<S>, tol: &Tolerance) -> Result<Certification> {
    let alignment = check_alignment(&c.plan, &c.precoders, &c.channels, tol)?;
    let pairwise_ok = check_pairwise(&c.draw.cfg, &c.precoders, tol)?;
    let l1 = build_lambda(BaseStation::One, &c.plan, &c.draw, &c.channels, &c.precoders)?;
    let l2 = build_lambda(BaseStation::Two, &c.plan, &c.draw, &c.channels, &c.precoders)?;
    Ok(Certification { alignment, pairwise_ok, lambda1: check_lambda(&l1, tol), lambda2: check_lambda(&l2, tol) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: SigmaConfig,
    pub dof: DofPoint,
    pub n: u64,
    pub seed: u64,
    pub seed_used: u64,
    pub retries: u32,
    pub mode: Mode,
    pub tolerance: Tolerance,
    pub distribution: Distribution,
    pub distribution_text: String,
    pub plan: AlignmentPlan,
    /// Alignment-set messages whose extension block is the empty one.
    pub q_excluded: Vec<MessageId>,
    pub alignment_ok: bool,
    pub column_subset_ok: bool,
    pub constraints_checked: u32,
    pub max_alignment_residual: f64,
    pub pairwise_ok: bool,
    pub lambda1: LambdaCheck,
    pub lambda2: LambdaCheck,
    pub achieved: BTreeMap<MessageId, AchievedDof>,
    #[serde(with = "ratio::as_string")]
    pub sum_per_slot: Rational,
    pub pass: bool,
}

pub fn run_experiment(cfg: &SigmaConfig, d: &DofPoint, n: u64, seed: u64, mode: Mode, tol: &Tolerance) -> Result<VerificationReport> {
    let dist = Distribution::default_for(mode);
    match mode {
        Mode::Float => run_experiment_with::<f64>(cfg, d, n, seed, dist, tol),
        Mode::Rational => run_experiment_with::<Rational>(cfg, d, n, seed, dist, tol),
    }
}

pub fn run_experiment_with<S: Scalar>(
    cfg: &SigmaConfig,
    d: &DofPoint,
    n: u64,
    seed: u64,
    dist: Distribution,
    tol: &Tolerance,
) -> Result<VerificationReport> {
    let c = construct::<S>(cfg, d, n, seed, dist, tol)?;
    let cert = certify(&c, tol)?;
    let (achieved, sum_per_slot) = achieved_dof(cfg, &c.plan, d, &c.precoders)?;
    let q_excluded = [BaseStation::One, BaseStation::Two]
        .into_iter()
        .filter_map(|bs| {
            let delta = c.plan.sets.delta_at(bs)?;
            Some(match bs {
                BaseStation::One => MessageId::B2(delta),
                BaseStation::Two => MessageId::B1(delta),
            })
        })
        .collect();
    Ok(VerificationReport {
        config: *cfg,
        dof: d.clone(),
        n,
        seed,
        seed_used: c.seed_used,
        retries: c.retries,
        mode: S::MODE,
        tolerance: *tol,
        distribution: dist,
        distribution_text: dist.describe(),
        plan: c.plan.clone(),
        q_excluded,
        alignment_ok: cert.alignment.alignment_ok,
        column_subset_ok: cert.alignment.column_subset_ok,
        constraints_checked: cert.alignment.constraints_checked,
        max_alignment_residual: cert.alignment.max_residual,
        pairwise_ok: cert.pairwise_ok,
        lambda1: cert.lambda1,
        lambda2: cert.lambda2,
        pass: cert.pass(),
        achieved,
        sum_per_slot,
    })
}

/// Reruns a Float experiment in exact arithmetic on the very same draws:
/// log-uniform samples are converted to rationals without rounding.
pub fn replay_exact(cfg: &SigmaConfig, d: &DofPoint, n: u64, seed: u64, tol: &Tolerance) -> Result<VerificationReport> {
    run_experiment_with::<Rational>(cfg, d, n, seed, Distribution::LogUniform, tol)
}

/// Deliberate corruptions used as negative controls.
pub mod controls {
    use super::*;

    /// Scales one entry of the narrow precoder at `bs` by `1 + eps`.
    pub fn perturb_narrow<S: Scalar>(c: &mut Construction<S>, bs: BaseStation, eps: S) -> bool {
        let narrow = match bs {
            BaseStation::One => c.precoders.p22.as_mut(),
            BaseStation::Two => c.precoders.p12.as_mut(),
        };
        let Some(narrow) = narrow else { return false };
        if narrow.matrix.is_empty() {
            return false;
        }
        let x = narrow.matrix.get(0, 0).clone();
        let v = x.clone() + x * eps;
        narrow.matrix.set(0, 0, v);
        true
    }

    /// Forces `V_2j := V_1j` (trimmed or padded with its own columns to keep
    /// the width).
    pub fn duplicate_pair<S: Scalar>(c: &mut Construction<S>, j: usize) -> bool {
        let Some(v1) = c.precoders.v.get(&MessageId::B1(j)).cloned() else { return false };
        let Some(v2) = c.precoders.v.get_mut(&MessageId::B2(j)) else { return false };
        if v1.cols() == 0 || v2.cols() == 0 {
            return false;
        }
        let idx: Vec<usize> = (0..v2.cols()).map(|k| k % v1.cols()).collect();
        *v2 = v1.select_columns(&idx);
        true
    }

    /// Replaces the B block of an assembled `Λ` with zeros.
    pub fn zero_b_block<S: Scalar>(parts: &mut LambdaParts<S>) -> bool {
        if parts.b_block.cols() == 0 {
            return false;
        }
        let start = parts.a_block.cols();
        for c in start..start + parts.b_block.cols() {
            for r in 0..parts.assembled.rows() {
                parts.assembled.set(r, c, S::zero());
            }
        }
        true
    }
}

/// Exponent source for the monomial full-rank tester.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExponentGen {
    /// Per row, `M` distinct vectors from `{0..=max_exp}^K`.
    Distinct { max_exp: u32 },
    /// As `Distinct`, then column 2 copies column 1 in every row.
    DuplicateColumns { max_exp: u32 },
    /// Explicit `[row][column][variable]` exponents.
    Fixed { exponents: Vec<Vec<Vec<u32>>>, asserted_valid: bool },
}

impl ExponentGen {
    /// Smallest `max_exp` with at least `m` distinct vectors in `k` variables.
    pub fn distinct_for(m: usize, k: usize) -> Self {
        ExponentGen::Distinct { max_exp: min_exponent(m, k) }
    }

    pub fn duplicate_for(m: usize, k: usize) -> Self {
        ExponentGen::DuplicateColumns { max_exp: min_exponent(m, k) }
    }

    fn asserts_valid(&self) -> bool {
        match self {
            ExponentGen::Distinct { .. } => true,
            ExponentGen::DuplicateColumns { .. } => false,
            ExponentGen::Fixed { asserted_valid, .. } => *asserted_valid,
        }
    }

    pub fn generate(&self, m: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<Vec<u32>>>> {
        let distinct = |max_exp: u32, rng: &mut ChaCha8Rng| -> Result<Vec<Vec<Vec<u32>>>> {
            let base = max_exp as usize + 1;
            let space = u32::try_from(k)
                .ok()
                .and_then(|k| base.checked_pow(k))
                .ok_or_else(|| VerifyError::Generator(format!("{base}^{k} exponent vectors is too many")))?;
            if space < m {
                return Err(VerifyError::Generator(format!("only {space} distinct exponent vectors for {m} columns")));
            }
            Ok((0..m)
                .map(|_| {
                    index::sample(rng, space, m)
                        .into_iter()
                        .map(|mut code| {
                            (0..k)
                                .map(|_| {
                                    let e = (code % base) as u32;
                                    code /= base;
                                    e
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect())
        };
        match self {
            ExponentGen::Distinct { max_exp } => distinct(*max_exp, rng),
            ExponentGen::DuplicateColumns { max_exp } => {
                if m < 2 {
                    return Err(VerifyError::Generator("duplicate columns need M >= 2".into()));
                }
                let mut e = distinct(*max_exp, rng)?;
                for row in &mut e {
                    row[1] = row[0].clone();
                }
                Ok(e)
            }
            ExponentGen::Fixed { exponents, .. } => {
                let shaped = exponents.len() == m && exponents.iter().all(|r| r.len() == m && r.iter().all(|v| v.len() == k));
                if !shaped {
                    return Err(VerifyError::Generator(format!("fixed exponents are not {m}x{m}x{k}")));
                }
                Ok(exponents.clone())
            }
        }
    }
}

fn min_exponent(m: usize, k: usize) -> u32 {
    let mut e = 0u32;
    while (e as usize + 1).checked_pow(k as u32).is_some_and(|s| s < m) {
        e += 1;
    }
    e.max(1)
}

/// Index of the first row that repeats an exponent vector.
pub fn first_repeating_row(exponents: &[Vec<Vec<u32>>]) -> Option<usize> {
    exponents.iter().position(|row| {
        let mut sorted: Vec<&Vec<u32>> = row.iter().collect();
        sorted.sort();
        sorted.windows(2).any(|w| w[0] == w[1])
    })
}

/// Builds `a_ij = prod_k (x_i^[k])^{alpha_ij^[k]}` with random `x` and
/// reports whether the `M x M` matrix has full rank.
pub fn lemma1_test(m: usize, k: usize, gen: &ExponentGen, seed: u64, mode: Mode, tol: &Tolerance) -> Result<bool> {
    match mode {
        Mode::Float => lemma1_test_with::<f64>(m, k, gen, seed, Distribution::LogUniform, tol),
        Mode::Rational => {
            lemma1_test_with::<Rational>(m, k, gen, seed, Distribution::Grid { denominator: LEMMA1_GRID_DENOMINATOR }, tol)
        }
    }
}

pub fn lemma1_test_with<S: Scalar>(m: usize, k: usize, gen: &ExponentGen, seed: u64, dist: Distribution, tol: &Tolerance) -> Result<bool> {
    Ok(lemma1_matrix::<S>(m, k, gen, seed, dist)?.is_some_and(|a| numerics::rank_or_zero(&a, tol) == m))
}

/// The tested matrix, or `None` when `M = 0`.
pub fn lemma1_matrix<S: Scalar>(m: usize, k: usize, gen: &ExponentGen, seed: u64, dist: Distribution) -> Result<Option<Mat<S>>> {
    if m == 0 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exps = gen.generate(m, k, &mut rng)?;
    if gen.asserts_valid() {
        if let Some(row) = first_repeating_row(&exps) {
            return Err(VerifyError::InvalidGenerator { row });
        }
    }
    let x: Vec<Vec<S>> = (0..m).map(|_| (0..k).map(|_| dist.sample(&mut rng)).collect()).collect();
    Ok(Some(Mat::from_fn(m, m, |i, j| {
        exps[i][j].iter().zip(&x[i]).fold(S::one(), |acc, (&e, xi)| acc * xi.powu(e))
    })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Summary {
    pub m: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    pub valid_full_rank: usize,
    pub negative_rank_deficient: usize,
}

/// Runs `trials` valid and `trials` duplicate-column draws with seeds
/// `seed, seed + 1, ...`. The negative side is skipped when `M < 2`.
pub fn lemma1_suite(m: usize, k: usize, trials: usize, seed: u64, mode: Mode, tol: &Tolerance) -> Result<Lemma1Summary> {
    let valid = ExponentGen::distinct_for(m, k);
    let negative = ExponentGen::duplicate_for(m, k);
    let mut summary = Lemma1Summary { m, k, trials, seed, mode, valid_full_rank: 0, negative_rank_deficient: 0 };
    for t in 0..trials as u64 {
        let s = seed.wrapping_add(t);
        summary.valid_full_rank += usize::from(lemma1_test(m, k, &valid, s, mode, tol)?);
        if m >= 2 {
            summary.negative_rank_deficient += usize::from(!lemma1_test(m, k, &negative, s, mode, tol)?);
        }
    }
    Ok(summary)
}

/// Draws a uniform seed; kept here so callers need no RNG of their own.
pub fn fresh_seed() -> u64 {
    rand::thread_rng().gen()
}
