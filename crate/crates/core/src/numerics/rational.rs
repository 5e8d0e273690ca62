use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{Mat, Rational};

/// Primes below `2^63` used for the modular shortcut.
const PRIMES: [u64; 3] = [(1 << 61) - 1, (1 << 62) - 57, (1 << 63) - 25];

/// Exact rank. The rank modulo a prime never exceeds the rank over the
/// rationals, so a modular rank of `min(rows, cols)` settles the question;
/// anything lower is recomputed with Bareiss elimination.
pub(super) fn exact_rank(m: &Mat<Rational>) -> usize {
    let full = m.rows().min(m.cols());
    if let Some(r) = PRIMES.iter().find_map(|&p| modular_rank(m, p)) {
        if r == full {
            return r;
        }
    }
    bareiss_rank(m)
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

fn reduce(x: &BigInt, p: u64) -> u64 {
    x.mod_floor(&BigInt::from(p)).to_u64().expect("residue below p")
}

/// Rank over `Z/p`, or `None` when some denominator vanishes mod `p`.
pub(super) fn modular_rank(m: &Mat<Rational>, p: u64) -> Option<usize> {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = Vec::with_capacity(rows * cols);
    for x in m.entries() {
        let den = reduce(x.denom(), p);
        if den == 0 {
            return None;
        }
        a.push(mul_mod(reduce(x.numer(), p), pow_mod(den, p - 2, p), p));
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(piv) = (rank..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        for k in 0..cols {
            a.swap(rank * cols + k, piv * cols + k);
        }
        let inv = pow_mod(a[rank * cols + c], p - 2, p);
        for i in rank + 1..rows {
            let f = mul_mod(a[i * cols + c], inv, p);
            if f == 0 {
                continue;
            }
            for k in c..cols {
                let sub = mul_mod(f, a[rank * cols + k], p);
                a[i * cols + k] = (a[i * cols + k] + p - sub) % p;
            }
        }
        rank += 1;
    }
    Some(rank)
}

/// Exact rank by Bareiss fraction-free elimination.
///
/// Each row is first scaled by the lcm of its denominators, which leaves the
/// rank unchanged and moves the whole computation into the integers. Every
/// intermediate entry is then a minor of the integer matrix, so the division
/// by the previous pivot is always exact.
pub(super) fn bareiss_rank(m: &Mat<Rational>) -> usize {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a: Vec<Vec<BigInt>> = (0..rows)
        .map(|i| {
            let row = m.row(i);
            let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
        })
        .collect();

    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (head, tail) = a.split_at_mut(rank + 1);
        let pivot_row = &head[rank];
        let pivot = &pivot_row[c];
        for row in tail.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for k in c + 1..cols {
                let v = pivot * &row[k] - &lead * &pivot_row[k];
                row[k] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = pivot.clone();
        rank += 1;
    }
    rank
}
