//! Seeded time-varying channels, their block-diagonal time expansion and the
//! diagonal `T` matrices the alignment precoders are built from.
//!
//! Channels are real-valued. Coefficients are i.i.d. over users, slots and
//! antennas from a bounded distribution on `[1/2, 2]`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, Mat, Mode, NumericsError, Scalar, Tolerance};
use crate::region::{BaseStation, SigmaConfig};

/// Denominator of the Rational-mode coefficient grid.
pub const CHANNEL_GRID_DENOMINATOR: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("unknown channel path: {0}")]
    UnknownPath(String),
    /// `slot` is `None` when elimination on the full stack lost its pivot.
    #[error("stacked channel at BS {bs} is singular (slot {slot:?})")]
    SingularStack { bs: usize, slot: Option<usize> },
    #[error("stack at BS {bs} needs {expected} members, got {got}")]
    StackSize { bs: usize, expected: usize, got: usize },
    #[error("mobile {j} is a member of the stack at BS {bs}")]
    MemberOfStack { bs: usize, j: usize },
    #[error("T block {l} for mobile {j} at BS {bs} has off-diagonal magnitude {magnitude:e}")]
    NotDiagonal { bs: usize, j: usize, l: usize, magnitude: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Bounded coefficient distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// `exp(U(ln 1/2, ln 2))`.
    LogUniform,
    /// `k / denominator` with `k` uniform on `{denominator/2, ..., 2*denominator}`.
    Grid { denominator: u32 },
}

impl Distribution {
    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Float => Distribution::LogUniform,
            Mode::Rational => Distribution::Grid { denominator: CHANNEL_GRID_DENOMINATOR },
        }
    }

    pub fn sample<S: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        match *self {
            Distribution::LogUniform => {
                let (lo, hi) = (0.5_f64.ln(), 2.0_f64.ln());
                let x = rng.gen_range(lo..=hi).exp().clamp(0.5, 2.0);
                S::from_f64(x)
            }
            Distribution::Grid { denominator } => {
                let den = i64::from(denominator);
                let k = rng.gen_range(den / 2..=2 * den);
                S::from_ratio(k, den)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Distribution::LogUniform => "log-uniform on [1/2, 2]".to_string(),
            Distribution::Grid { denominator } => {
                format!("uniform on {{k/{denominator} : {} <= k <= {}}}", denominator / 2, 2 * denominator)
            }
        }
    }
}

/// A channel path: which mobile, and to which base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Path {
    A { j: usize },
    B { bs: BaseStation, j: usize },
    C { j: usize },
}

impl Path {
    pub fn base_station(&self) -> BaseStation {
        match self {
            Path::A { .. } => BaseStation::One,
            Path::B { bs, .. } => *bs,
            Path::C { .. } => BaseStation::Two,
        }
    }
}

/// Per-slot channel vectors, indexed `[mobile][slot][antenna]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw<S> {
    pub seed: u64,
    pub mu_n: usize,
    pub distribution: Distribution,
    pub cfg: SigmaConfig,
    pub h_a: Vec<Vec<Vec<S>>>,
    pub h_b1: Vec<Vec<Vec<S>>>,
    pub h_b2: Vec<Vec<Vec<S>>>,
    pub h_c: Vec<Vec<Vec<S>>>,
}

/// Draws with the mode's default distribution.
pub fn draw<S: Scalar>(cfg: &SigmaConfig, mu_n: usize, seed: u64) -> ChannelDraw<S> {
    draw_with(cfg, mu_n, seed, Distribution::default_for(S::MODE))
}

/// Deterministic in `(cfg, mu_n, seed, distribution)`. Coefficients are drawn
/// in the order A, B→BS1, B→BS2, C; mobile, slot, antenna.
pub fn draw_with<S: Scalar>(cfg: &SigmaConfig, mu_n: usize, seed: u64, distribution: Distribution) -> ChannelDraw<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group = |users: usize, antennas: usize| -> Vec<Vec<Vec<S>>> {
        (0..users)
            .map(|_| (0..mu_n).map(|_| (0..antennas).map(|_| distribution.sample(&mut rng)).collect()).collect())
            .collect()
    };
    let h_a = group(cfg.la, cfg.n1);
    let h_b1 = group(cfg.lb, cfg.n1);
    let h_b2 = group(cfg.lb, cfg.n2);
    let h_c = group(cfg.lc, cfg.n2);
    ChannelDraw { seed, mu_n, distribution, cfg: *cfg, h_a, h_b1, h_b2, h_c }
}

impl<S: Scalar> ChannelDraw<S> {
    /// Re-expresses every coefficient in another field. Float→Rational is
    /// exact; Rational→Float is exact for dyadic grids such as `k/64`.
    pub fn convert<T: Scalar>(&self) -> ChannelDraw<T> {
        let conv = |g: &Vec<Vec<Vec<S>>>| -> Vec<Vec<Vec<T>>> {
            g.iter()
                .map(|u| u.iter().map(|slot| slot.iter().map(|x| T::from_rational(&x.to_rational())).collect()).collect())
                .collect()
        };
        ChannelDraw {
            seed: self.seed,
            mu_n: self.mu_n,
            distribution: self.distribution,
            cfg: self.cfg,
            h_a: conv(&self.h_a),
            h_b1: conv(&self.h_b1),
            h_b2: conv(&self.h_b2),
            h_c: conv(&self.h_c),
        }
    }

    fn slots(&self, path: Path) -> Result<&[Vec<S>]> {
        let (group, j) = match path {
            Path::A { j } => (&self.h_a, j),
            Path::B { bs: BaseStation::One, j } => (&self.h_b1, j),
            Path::B { bs: BaseStation::Two, j } => (&self.h_b2, j),
            Path::C { j } => (&self.h_c, j),
        };
        group.get(j).map(Vec::as_slice).ok_or_else(|| ChannelError::UnknownPath(format!("{path:?}")))
    }

    /// `N_i mu_n x mu_n` block-diagonal matrix whose block `t` is the slot-`t`
    /// channel vector.
    pub fn expand(&self, path: Path) -> Result<Mat<S>> {
        let slots = self.slots(path)?;
        let antennas = self.cfg.antennas(path.base_station());
        let mut m = Mat::zeros(antennas * self.mu_n, self.mu_n);
        for (t, h) in slots.iter().enumerate() {
            for (a, v) in h.iter().enumerate() {
                m.set(t * antennas + a, t, v.clone());
            }
        }
        Ok(m)
    }

    /// Square `N_i mu_n` matrix `[H_{i,beta_1}, ..., H_{i,beta_N}]` over the
    /// Group B members in the order given.
    pub fn stack(&self, bs: BaseStation, members: &[usize], tol: &Tolerance) -> Result<StackedChannel<S>> {
        let antennas = self.cfg.antennas(bs);
        if members.len() != antennas {
            return Err(ChannelError::StackSize { bs: bs.number(), expected: antennas, got: members.len() });
        }
        let per_member: Vec<&[Vec<S>]> =
            members.iter().map(|&j| self.slots(Path::B { bs, j })).collect::<Result<_>>()?;
        // The stack is a row/column permutation of diag(slot blocks), so it is
        // invertible iff every N x N slot block is.
        for t in 0..self.mu_n {
            let block = Mat::from_fn(antennas, antennas, |a, l| per_member[l][t][a].clone());
            if numerics::rank(&block, tol)? < antennas {
                return Err(ChannelError::SingularStack { bs: bs.number(), slot: Some(t) });
            }
        }
        let blocks: Vec<Mat<S>> =
            members.iter().map(|&j| self.expand(Path::B { bs, j })).collect::<Result<_>>()?;
        let refs: Vec<&Mat<S>> = blocks.iter().collect();
        let matrix = Mat::hcat(antennas * self.mu_n, &refs)?;
        Ok(StackedChannel { bs, members: members.to_vec(), matrix })
    }

    /// Solves `H^(i) [T_1; ...; T_N] = H_{ij}` and returns the `N` diagonal
    /// `mu_n x mu_n` blocks. Off-diagonal entries must be negligible.
    pub fn compute_t(&self, stacked: &StackedChannel<S>, j: usize, tol: &Tolerance) -> Result<TMatrices<S>> {
        let bs = stacked.bs;
        if stacked.members.contains(&j) {
            return Err(ChannelError::MemberOfStack { bs: bs.number(), j });
        }
        let target = self.expand(Path::B { bs, j })?;
        let solution = numerics::solve(&stacked.matrix, &target, tol).map_err(|e| match e {
            NumericsError::Singular => ChannelError::SingularStack { bs: bs.number(), slot: None },
            other => ChannelError::Numerics(other),
        })?;
        let mu = self.mu_n;
        let mut blocks = Vec::with_capacity(stacked.members.len());
        for l in 0..stacked.members.len() {
            let block = solution.block(l * mu, 0, mu, mu);
            let mut worst: f64 = 0.0;
            let mut clean = true;
            for r in 0..mu {
                for c in 0..mu {
                    if r != c {
                        let v = block.get(r, c);
                        worst = worst.max(v.magnitude());
                        clean &= v.is_negligible(tol.col_match_tol);
                    }
                }
            }
            if !clean {
                return Err(ChannelError::NotDiagonal { bs: bs.number(), j, l, magnitude: worst });
            }
            blocks.push(block);
        }
        Ok(TMatrices { bs, j, blocks })
    }
}

/// The square stacked channel of the alignment-set members at one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedChannel<S> {
    pub bs: BaseStation,
    pub members: Vec<usize>,
    pub matrix: Mat<S>,
}

/// The `T_l^{(ij)}` blocks for one out-of-set mobile `j` at base station `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TMatrices<S> {
    pub bs: BaseStation,
    pub j: usize,
    pub blocks: Vec<Mat<S>>,
}

impl<S: Scalar> TMatrices<S> {
    pub fn diagonal(&self, l: usize) -> Vec<S> {
        self.blocks[l].diagonal()
    }

    /// `H^(i) [T_1; ...; T_N]`, which should reproduce `H_{ij}`.
    pub fn reconstruct(&self, stacked: &StackedChannel<S>) -> Result<Mat<S>> {
        let mu = self.blocks.first().map_or(0, Mat::cols);
        let refs: Vec<&Mat<S>> = self.blocks.iter().collect();
        let stacked_t = Mat::vcat(mu, &refs)?;
        Ok(stacked.matrix.mul(&stacked_t)?)
    }
}
