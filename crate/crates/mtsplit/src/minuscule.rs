//! The catalog of minuscule weights of the classical simple Lie algebras.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::root_systems::{Family, SimpleRootSystem, WeightLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MinusculeError {
    #[error("{weight} is not a minuscule weight of {system}")]
    NotMinuscule { system: SimpleRootSystem, weight: WeightLabel },
    #[error("integer overflow computing an invariant of {0}")]
    Overflow(SimpleRootSystem),
}

/// Frobenius-Schur type of a minuscule module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Duality {
    Orthogonal,
    Symplectic,
    NotSelfDual,
}

impl Duality {
    pub fn sign(self) -> i8 {
        match self {
            Duality::Orthogonal => 1,
            Duality::Symplectic => -1,
            Duality::NotSelfDual => 0,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Duality> {
        match sign {
            1 => Some(Duality::Orthogonal),
            -1 => Some(Duality::Symplectic),
            0 => Some(Duality::NotSelfDual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinusculeEntry {
    pub system: SimpleRootSystem,
    pub weight: WeightLabel,
    pub dimension: u128,
    pub duality: Duality,
}

pub fn minuscule_weights(s: SimpleRootSystem) -> Vec<WeightLabel> {
    let l = s.rank();
    let indices: Vec<u32> = match s.family() {
        Family::A => (1..=l).collect(),
        Family::B => vec![l],
        Family::C => vec![1],
        Family::D => vec![1, l - 1, l],
    };
    indices.into_iter().map(WeightLabel).collect()
}

pub fn is_minuscule(s: SimpleRootSystem, w: WeightLabel) -> bool {
    minuscule_weights(s).contains(&w)
}

fn check(s: SimpleRootSystem, w: WeightLabel) -> Result<(), MinusculeError> {
    if is_minuscule(s, w) {
        Ok(())
    } else {
        Err(MinusculeError::NotMinuscule { system: s, weight: w })
    }
}

pub fn binomial(n: u32, k: u32) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

fn pow2(e: u32) -> Option<u128> {
    1u128.checked_shl(e).filter(|_| e < 128)
}

pub fn minuscule_dimension(s: SimpleRootSystem, w: WeightLabel) -> Result<u128, MinusculeError> {
    check(s, w)?;
    let l = s.rank();
    let dim = match s.family() {
        Family::A => binomial(l + 1, w.index()),
        Family::B => pow2(l),
        Family::C => Some(2 * u128::from(l)),
        Family::D if w.index() == 1 => Some(2 * u128::from(l)),
        Family::D => pow2(l - 1),
    };
    dim.ok_or(MinusculeError::Overflow(s))
}

pub fn duality_indicator(s: SimpleRootSystem, w: WeightLabel) -> Result<Duality, MinusculeError> {
    check(s, w)?;
    let l = s.rank();
    let r = w.index();
    Ok(match s.family() {
        Family::A if 2 * r == l + 1 => {
            if r.is_multiple_of(2) {
                Duality::Orthogonal
            } else {
                Duality::Symplectic
            }
        }
        Family::A => Duality::NotSelfDual,
        Family::B => match l % 4 {
            0 | 3 => Duality::Orthogonal,
            _ => Duality::Symplectic,
        },
        Family::C => Duality::Symplectic,
        Family::D if r == 1 => Duality::Orthogonal,
        Family::D => match l % 4 {
            0 => Duality::Orthogonal,
            2 => Duality::Symplectic,
            _ => Duality::NotSelfDual,
        },
    })
}

pub fn entry(s: SimpleRootSystem, w: WeightLabel) -> Result<MinusculeEntry, MinusculeError> {
    Ok(MinusculeEntry {
        system: s,
        weight: w,
        dimension: minuscule_dimension(s, w)?,
        duality: duality_indicator(s, w)?,
    })
}

/// All entries for canonical systems of rank at most `max_rank`.
pub fn catalog(max_rank: u32) -> Result<Vec<MinusculeEntry>, MinusculeError> {
    let mut out = Vec::new();
    for s in SimpleRootSystem::all_up_to(max_rank) {
        for w in minuscule_weights(s) {
            out.push(entry(s, w)?);
        }
    }
    Ok(out)
}

pub fn has_odd_dimensional_nontrivial_minuscule(s: SimpleRootSystem) -> bool {
    minuscule_weights(s)
        .into_iter()
        .any(|w| minuscule_dimension(s, w).is_ok_and(|d| d % 2 == 1))
}

fn factorial(n: u32) -> Option<u128> {
    (1..=u128::from(n)).try_fold(1u128, |acc, k| acc.checked_mul(k))
}

/// `|W|` for a possibly non-canonical classical type; rank 0 is the trivial group.
fn weyl_order(family: Family, rank: u32) -> Option<u128> {
    if rank == 0 {
        return Some(1);
    }
    match family {
        Family::A => factorial(rank + 1),
        Family::B | Family::C => pow2(rank)?.checked_mul(factorial(rank)?),
        Family::D if rank == 1 => Some(1),
        Family::D => pow2(rank - 1)?.checked_mul(factorial(rank)?),
    }
}

/// Components of the Dynkin diagram with node `r` deleted.
fn stabilizer_components(s: SimpleRootSystem, r: u32) -> Vec<(Family, u32)> {
    let l = s.rank();
    match s.family() {
        Family::A => vec![(Family::A, r - 1), (Family::A, l - r)],
        Family::B => vec![(Family::A, r - 1), (Family::B, l - r)],
        Family::C => vec![(Family::A, r - 1), (Family::C, l - r)],
        Family::D if r + 1 >= l => vec![(Family::A, l - 1)],
        Family::D => vec![(Family::A, r - 1), (Family::D, l - r)],
    }
}

/// Size of the Weyl orbit of `ω_r`, as `|W| / |W_P|`.
pub fn weyl_orbit_size(s: SimpleRootSystem, w: WeightLabel) -> Result<u128, MinusculeError> {
    let overflow = MinusculeError::Overflow(s);
    let whole = weyl_order(s.family(), s.rank()).ok_or(overflow.clone())?;
    let stab = stabilizer_components(s, w.index())
        .into_iter()
        .try_fold(1u128, |acc, (f, k)| acc.checked_mul(weyl_order(f, k)?))
        .ok_or(overflow)?;
    Ok(whole / stab)
}

/// How a table row selects weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSelector {
    EveryIndex,
    First,
    Last,
    LastTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimensionRule {
    /// `binom(l+1, r)`
    BinomialLPlusOneR,
    /// `2^l`
    TwoToL,
    /// `2l`
    TwoL,
    /// `2^(l-1)`
    TwoToLMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualityRule {
    /// `(-1)^r` when `r = (l+1)/2`, otherwise 0.
    MiddleSign,
    /// Sign by `l mod modulus`, indexed by residue.
    ByResidue { modulus: u32, signs: &'static [i8] },
    Constant(i8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub family: Family,
    pub min_rank: u32,
    pub weights: WeightSelector,
    pub dimension: DimensionRule,
    pub duality: DualityRule,
}

/// The classical minuscule table, one row per printed line.
pub const MINUSCULE_TABLE: &[TableRow] = &[
    TableRow {
        family: Family::A,
        min_rank: 1,
        weights: WeightSelector::EveryIndex,
        dimension: DimensionRule::BinomialLPlusOneR,
        duality: DualityRule::MiddleSign,
    },
    TableRow {
        family: Family::B,
        min_rank: 2,
        weights: WeightSelector::Last,
        dimension: DimensionRule::TwoToL,
        duality: DualityRule::ByResidue { modulus: 4, signs: &[1, -1, -1, 1] },
    },
    TableRow {
        family: Family::C,
        min_rank: 3,
        weights: WeightSelector::First,
        dimension: DimensionRule::TwoL,
        duality: DualityRule::Constant(-1),
    },
    TableRow {
        family: Family::D,
        min_rank: 4,
        weights: WeightSelector::First,
        dimension: DimensionRule::TwoL,
        duality: DualityRule::Constant(1),
    },
    TableRow {
        family: Family::D,
        min_rank: 4,
        weights: WeightSelector::LastTwo,
        dimension: DimensionRule::TwoToLMinusOne,
        duality: DualityRule::ByResidue { modulus: 4, signs: &[1, 0, -1, 0] },
    },
];

/// A `(system, weight, dimension, duality sign)` tuple read off the literal table.
pub type TableEntry = (SimpleRootSystem, WeightLabel, u128, i8);

/// Expands [`MINUSCULE_TABLE`] into explicit entries up to `max_rank`, sorted like [`catalog`].
pub fn table_entries(max_rank: u32) -> Vec<TableEntry> {
    let mut out = Vec::new();
    for row in MINUSCULE_TABLE {
        for l in row.min_rank..=max_rank {
            let s = SimpleRootSystem::new(row.family, l).expect("table rows are canonical");
            let indices: Vec<u32> = match row.weights {
                WeightSelector::EveryIndex => (1..=l).collect(),
                WeightSelector::First => vec![1],
                WeightSelector::Last => vec![l],
                WeightSelector::LastTwo => vec![l - 1, l],
            };
            for r in indices {
                let dim = match row.dimension {
                    DimensionRule::BinomialLPlusOneR => binomial(l + 1, r).expect("small"),
                    DimensionRule::TwoToL => 1u128 << l,
                    DimensionRule::TwoL => 2 * u128::from(l),
                    DimensionRule::TwoToLMinusOne => 1u128 << (l - 1),
                };
                let sign = match row.duality {
                    DualityRule::MiddleSign if 2 * r == l + 1 => {
                        if r % 2 == 0 {
                            1
                        } else {
                            -1
                        }
                    }
                    DualityRule::MiddleSign => 0,
                    DualityRule::ByResidue { modulus, signs } => signs[(l % modulus) as usize],
                    DualityRule::Constant(c) => c,
                };
                out.push((s, WeightLabel(r), dim, sign));
            }
        }
    }
    out.sort_by_key(|e| (e.0, e.1));
    out
}
