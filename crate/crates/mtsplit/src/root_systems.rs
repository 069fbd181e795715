//! Classical root systems, their finite sums, Dynkin diagram automorphisms
//! and the short-root restriction `Φ ↦ Φ⁰`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::minuscule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RootSystemError {
    #[error("root system of rank 0")]
    RankZero,
    #[error("{0} is not in canonical form")]
    NotCanonical(RawSystem),
    #[error("weight w{weight} out of range for {system}")]
    WeightOutOfRange { system: SimpleRootSystem, weight: u32 },
    #[error("w{weight} is not a minuscule weight of {system}")]
    NotMinuscule { system: SimpleRootSystem, weight: u32 },
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::A, Family::B, Family::C, Family::D];

    pub fn letter(self) -> char {
        match self {
            Family::A => 'A',
            Family::B => 'B',
            Family::C => 'C',
            Family::D => 'D',
        }
    }

    /// Smallest rank at which the family is listed without coincidence.
    pub fn min_canonical_rank(self) -> u32 {
        match self {
            Family::A => 1,
            Family::B => 2,
            Family::C => 3,
            Family::D => 4,
        }
    }

    fn from_letter(c: char) -> Option<Family> {
        match c.to_ascii_uppercase() {
            'A' => Some(Family::A),
            'B' => Some(Family::B),
            'C' => Some(Family::C),
            'D' => Some(Family::D),
            _ => None,
        }
    }
}

/// A family/rank pair that may still be a low-rank coincidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RawSystem {
    pub family: Family,
    pub rank: u32,
}

impl RawSystem {
    pub fn new(family: Family, rank: u32) -> Self {
        RawSystem { family, rank }
    }
}

impl fmt::Display for RawSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family.letter(), self.rank)
    }
}

/// A simple root system in canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimpleRootSystem {
    family: Family,
    rank: u32,
}

impl SimpleRootSystem {
    /// Builds a canonical system, rejecting low-rank coincidences.
    pub fn new(family: Family, rank: u32) -> Result<Self, RootSystemError> {
        if rank == 0 {
            return Err(RootSystemError::RankZero);
        }
        if rank < family.min_canonical_rank() {
            return Err(RootSystemError::NotCanonical(RawSystem::new(family, rank)));
        }
        Ok(SimpleRootSystem { family, rank })
    }

    pub fn a(rank: u32) -> Self {
        Self::new(Family::A, rank).expect("canonical A")
    }
    pub fn b(rank: u32) -> Self {
        Self::new(Family::B, rank).expect("canonical B")
    }
    pub fn c(rank: u32) -> Self {
        Self::new(Family::C, rank).expect("canonical C")
    }
    pub fn d(rank: u32) -> Self {
        Self::new(Family::D, rank).expect("canonical D")
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn raw(&self) -> RawSystem {
        RawSystem::new(self.family, self.rank)
    }

    pub fn weight(&self, index: u32) -> Result<WeightLabel, RootSystemError> {
        if index == 0 || index > self.rank {
            return Err(RootSystemError::WeightOutOfRange { system: *self, weight: index });
        }
        Ok(WeightLabel(index))
    }

    /// All canonical systems of rank at most `max_rank`, in canonical order.
    pub fn all_up_to(max_rank: u32) -> Vec<SimpleRootSystem> {
        let mut out = Vec::new();
        for family in Family::ALL {
            for rank in family.min_canonical_rank()..=max_rank {
                out.push(SimpleRootSystem { family, rank });
            }
        }
        out
    }
}

impl fmt::Display for SimpleRootSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family.letter(), self.rank)
    }
}

impl FromStr for SimpleRootSystem {
    type Err = RootSystemError;

    /// Parses a single simple system, normalizing coincidences (`C2` reads as `B2`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let sum: RootSystemSum = s.parse()?;
        match sum.factors() {
            [one] => Ok(*one),
            _ => Err(RootSystemError::Parse {
                column: 1,
                message: format!("`{s}` is not a simple root system"),
            }),
        }
    }
}

impl Serialize for SimpleRootSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimpleRootSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Fundamental weight `ω_r` in Bourbaki numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightLabel(pub u32);

impl WeightLabel {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for WeightLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

impl FromStr for WeightLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix('w')
            .or_else(|| s.strip_prefix("ω"))
            .ok_or_else(|| format!("weight label `{s}` must look like w3"))?;
        match digits.parse::<u32>() {
            Ok(r) if r >= 1 => Ok(WeightLabel(r)),
            _ => Err(format!("weight label `{s}` must have a positive index")),
        }
    }
}

impl Serialize for WeightLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeightLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sorted multiset of canonical simple systems.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootSystemSum {
    factors: Vec<SimpleRootSystem>,
}

impl RootSystemSum {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_factors(mut factors: Vec<SimpleRootSystem>) -> Self {
        factors.sort();
        RootSystemSum { factors }
    }

    pub fn single(s: SimpleRootSystem) -> Self {
        RootSystemSum { factors: vec![s] }
    }

    pub fn factors(&self) -> &[SimpleRootSystem] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_rank(&self) -> u32 {
        self.factors.iter().map(|s| s.rank).sum()
    }

    pub fn plus(&self, other: &RootSystemSum) -> RootSystemSum {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Self::from_factors(factors)
    }

    /// Multiset difference, or `None` when `other` is not contained in `self`.
    fn minus(&self, other: &RootSystemSum) -> Option<RootSystemSum> {
        let mut rest = self.factors.clone();
        for s in &other.factors {
            let pos = rest.iter().position(|t| t == s)?;
            rest.remove(pos);
        }
        Some(RootSystemSum { factors: rest })
    }
}

impl fmt::Display for RootSystemSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.factors.len() {
            let s = self.factors[i];
            let mut j = i;
            while j < self.factors.len() && self.factors[j] == s {
                j += 1;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match j - i {
                1 => write!(f, "{s}")?,
                k => write!(f, "{k}*{s}")?,
            }
            i = j;
        }
        Ok(())
    }
}

impl FromStr for RootSystemSum {
    type Err = RootSystemError;

    /// Accepts strings like `A3+B2+2*A1`, in any order and with coincidences.
    /// `0` or an empty string is the empty sum.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sum(s)
    }
}

impl Serialize for RootSystemSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RootSystemSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_sum(input: &str) -> Result<RootSystemSum, RootSystemError> {
    let chars: Vec<(usize, char)> = input.chars().enumerate().collect();
    let err = |column: usize, message: String| RootSystemError::Parse { column, message };
    if input.trim().is_empty() || input.trim() == "0" {
        return Ok(RootSystemSum::empty());
    }
    let mut factors = Vec::new();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < chars.len() && chars[*pos].1.is_whitespace() {
            *pos += 1;
        }
    };
    let read_number = |pos: &mut usize| -> Option<u32> {
        let start = *pos;
        while *pos < chars.len() && chars[*pos].1.is_ascii_digit() {
            *pos += 1;
        }
        if start == *pos {
            return None;
        }
        chars[start..*pos].iter().map(|(_, c)| c).collect::<String>().parse().ok()
    };
    loop {
        skip_ws(&mut pos);
        let term_start = pos + 1;
        let mut count = 1;
        if pos < chars.len() && chars[pos].1.is_ascii_digit() {
            count = read_number(&mut pos).ok_or_else(|| err(term_start, "multiplicity too large".into()))?;
            skip_ws(&mut pos);
            if pos >= chars.len() || chars[pos].1 != '*' {
                return Err(err(pos + 1, "expected `*` after multiplicity".into()));
            }
            pos += 1;
            skip_ws(&mut pos);
            if count == 0 {
                return Err(err(term_start, "multiplicity must be positive".into()));
            }
        }
        let family = match chars.get(pos) {
            Some((_, c)) => Family::from_letter(*c)
                .ok_or_else(|| err(pos + 1, format!("expected a family letter A-D, found `{c}`")))?,
            None => return Err(err(pos + 1, "expected a family letter A-D".into())),
        };
        pos += 1;
        let rank_col = pos + 1;
        let rank = read_number(&mut pos).ok_or_else(|| err(rank_col, "expected a rank".into()))?;
        let normalized = normalize(RawSystem::new(family, rank)).map_err(|e| err(rank_col, e.to_string()))?;
        for _ in 0..count {
            factors.extend_from_slice(normalized.factors());
        }
        skip_ws(&mut pos);
        match chars.get(pos) {
            None => break,
            Some((_, '+')) => pos += 1,
            Some((_, c)) => return Err(err(pos + 1, format!("expected `+`, found `{c}`"))),
        }
    }
    Ok(RootSystemSum::from_factors(factors))
}

/// Canonical form under `B₁ = C₁ = A₁`, `C₂ = B₂`, `D₂ = A₁ + A₁`, `D₃ = A₃`.
pub fn normalize(s: RawSystem) -> Result<RootSystemSum, RootSystemError> {
    use Family::*;
    let canon = |family, rank| RootSystemSum::single(SimpleRootSystem { family, rank });
    match (s.family, s.rank) {
        (_, 0) => Err(RootSystemError::RankZero),
        (B, 1) | (C, 1) => Ok(canon(A, 1)),
        (C, 2) => Ok(canon(B, 2)),
        (D, 1) => Err(RootSystemError::NotCanonical(s)),
        (D, 2) => Ok(RootSystemSum::from_factors(vec![SimpleRootSystem::a(1), SimpleRootSystem::a(1)])),
        (D, 3) => Ok(canon(A, 3)),
        (family, rank) => Ok(canon(family, rank)),
    }
}

/// Transports a fundamental weight of a raw simple system to its canonical
/// form. `None` when the canonical form is not simple (`D₂`) or `D₁`.
pub fn normalize_weight(s: RawSystem, r: u32) -> Option<(SimpleRootSystem, WeightLabel)> {
    use Family::*;
    if r == 0 || r > s.rank {
        return None;
    }
    let out = match (s.family, s.rank) {
        (B, 1) | (C, 1) => (SimpleRootSystem::a(1), 1),
        // C₂ short/long nodes swap roles in B₂.
        (C, 2) => (SimpleRootSystem::b(2), 3 - r),
        // D₃: node 1 is the branch node, matching the middle node of A₃.
        (D, 3) => (SimpleRootSystem::a(3), [2, 1, 3][r as usize - 1]),
        (D, 1) | (D, 2) | (_, 0) => return None,
        (family, rank) => (SimpleRootSystem { family, rank }, r),
    };
    Some((out.0, WeightLabel(out.1)))
}

/// `A_l⁰ = A_l`, `B_l⁰ = l·A₁`, `C_l⁰ = D_l`, `D_l⁰ = D_l`.
pub fn short_root_restriction(s: SimpleRootSystem) -> RootSystemSum {
    match s.family {
        Family::A | Family::D => RootSystemSum::single(s),
        Family::B => RootSystemSum::from_factors(vec![SimpleRootSystem::a(1); s.rank as usize]),
        Family::C => normalize(RawSystem::new(Family::D, s.rank)).expect("C rank >= 3"),
    }
}

pub fn short_root_restriction_sum(sum: &RootSystemSum) -> RootSystemSum {
    sum.factors
        .iter()
        .fold(RootSystemSum::empty(), |acc, s| acc.plus(&short_root_restriction(*s)))
}

/// Every canonical sum with factors of rank at most `max_rank` whose
/// short-root restriction equals `target`.
pub fn phi0_preimage(target: &RootSystemSum, max_rank: u32) -> BTreeSet<RootSystemSum> {
    let candidates: Vec<(SimpleRootSystem, RootSystemSum)> = SimpleRootSystem::all_up_to(max_rank)
        .into_iter()
        .map(|s| (s, short_root_restriction(s)))
        .filter(|(_, image)| target.minus(image).is_some())
        .collect();
    let mut out = BTreeSet::new();
    let mut chosen = Vec::new();
    preimage_search(&candidates, 0, target, &mut chosen, &mut out);
    out
}

fn preimage_search(
    candidates: &[(SimpleRootSystem, RootSystemSum)],
    start: usize,
    remaining: &RootSystemSum,
    chosen: &mut Vec<SimpleRootSystem>,
    out: &mut BTreeSet<RootSystemSum>,
) {
    if remaining.is_empty() {
        out.insert(RootSystemSum::from_factors(chosen.clone()));
        return;
    }
    for (i, (s, image)) in candidates.iter().enumerate().skip(start) {
        if let Some(rest) = remaining.minus(image) {
            chosen.push(*s);
            preimage_search(candidates, i, &rest, chosen, out);
            chosen.pop();
        }
    }
}

/// A finite permutation group on fundamental-weight indices `1..=rank`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramAutomorphisms {
    pub order: usize,
    /// Each generator lists the image of indices `1..=rank` in order.
    pub generators: Vec<Vec<u32>>,
}

impl DiagramAutomorphisms {
    fn from_generators(rank: u32, generators: Vec<Vec<u32>>) -> Self {
        let identity: Vec<u32> = (1..=rank).collect();
        let mut seen = BTreeSet::from([identity.clone()]);
        let mut queue = VecDeque::from([identity]);
        while let Some(p) = queue.pop_front() {
            for g in &generators {
                let composed: Vec<u32> = p.iter().map(|&i| g[i as usize - 1]).collect();
                if seen.insert(composed.clone()) {
                    queue.push_back(composed);
                }
            }
        }
        DiagramAutomorphisms { order: seen.len(), generators }
    }

    pub fn fixes(&self, index: u32) -> bool {
        self.generators.iter().all(|g| g[index as usize - 1] == index)
    }
}

pub fn diagram_automorphism_group(s: SimpleRootSystem) -> DiagramAutomorphisms {
    let l = s.rank;
    let identity: Vec<u32> = (1..=l).collect();
    let generators = match s.family {
        Family::A if l >= 2 => vec![(1..=l).map(|r| l + 1 - r).collect()],
        Family::D if l == 4 => vec![vec![3, 2, 1, 4], vec![4, 2, 3, 1]],
        Family::D => {
            let mut swap = identity;
            swap.swap(l as usize - 2, l as usize - 1);
            vec![swap]
        }
        _ => vec![],
    };
    DiagramAutomorphisms::from_generators(l, generators)
}

pub fn is_weight_automorphism_stable(s: SimpleRootSystem, w: WeightLabel) -> bool {
    diagram_automorphism_group(s).fixes(w.0)
}

/// Self-duality of a minuscule module, via the action of `-w₀` on the diagram.
pub fn is_self_dual(s: SimpleRootSystem, w: WeightLabel) -> Result<bool, RootSystemError> {
    if !minuscule::is_minuscule(s, w) {
        return Err(RootSystemError::NotMinuscule { system: s, weight: w.0 });
    }
    let l = s.rank;
    Ok(match s.family {
        Family::A => l + 1 - w.0 == w.0,
        Family::B | Family::C => true,
        Family::D => l.is_multiple_of(2) || (w.0 != l - 1 && w.0 != l),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(s: &str) -> RootSystemSum {
        s.parse().unwrap()
    }

    #[test]
    fn coincidences() {
        assert_eq!(normalize(RawSystem::new(Family::D, 3)).unwrap(), sum("A3"));
        assert_eq!(normalize(RawSystem::new(Family::B, 5)).unwrap(), sum("B5"));
        assert_eq!(normalize(RawSystem::new(Family::D, 2)).unwrap(), sum("2*A1"));
        assert_eq!(normalize(RawSystem::new(Family::C, 2)).unwrap(), sum("B2"));
        assert_eq!(normalize(RawSystem::new(Family::A, 0)), Err(RootSystemError::RankZero));
    }

    #[test]
    fn restriction_examples() {
        assert_eq!(short_root_restriction(SimpleRootSystem::b(3)), sum("3*A1"));
        assert_eq!(short_root_restriction(SimpleRootSystem::c(4)), sum("D4"));
        assert_eq!(short_root_restriction(SimpleRootSystem::c(3)), sum("A3"));
        assert_eq!(short_root_restriction_sum(&sum("B2+C4")), sum("A1+A1+D4"));
        assert_eq!(short_root_restriction_sum(&RootSystemSum::empty()), RootSystemSum::empty());
        assert_eq!(short_root_restriction_sum(&sum("A2+A4")), sum("A2+A4"));
    }

    #[test]
    fn preimage_examples() {
        assert_eq!(phi0_preimage(&sum("A2"), 8), BTreeSet::from([sum("A2")]));
        assert_eq!(phi0_preimage(&sum("A1"), 8), BTreeSet::from([sum("A1")]));
        assert_eq!(
            phi0_preimage(&sum("A1+A1"), 8),
            BTreeSet::from([sum("2*A1"), sum("B2")])
        );
        assert_eq!(phi0_preimage(&sum("D4"), 8), BTreeSet::from([sum("D4"), sum("C4")]));
        assert!(phi0_preimage(&sum("B2"), 8).is_empty());
    }

    #[test]
    fn automorphism_examples() {
        let d4 = diagram_automorphism_group(SimpleRootSystem::d(4));
        assert_eq!(d4.order, 6);
        assert!(d4.fixes(2) && !d4.fixes(1) && !d4.fixes(3) && !d4.fixes(4));
        assert_eq!(diagram_automorphism_group(SimpleRootSystem::c(5)).order, 1);
        let a3 = diagram_automorphism_group(SimpleRootSystem::a(3));
        assert_eq!(a3.order, 2);
        assert_eq!(a3.generators, vec![vec![3, 2, 1]]);
        assert!(is_weight_automorphism_stable(SimpleRootSystem::a(3), WeightLabel(2)));
        assert!(!is_weight_automorphism_stable(SimpleRootSystem::d(4), WeightLabel(1)));
        assert!(is_weight_automorphism_stable(SimpleRootSystem::d(5), WeightLabel(1)));
    }

    #[test]
    fn self_duality_examples() {
        assert_eq!(is_self_dual(SimpleRootSystem::a(3), WeightLabel(2)), Ok(true));
        assert_eq!(is_self_dual(SimpleRootSystem::a(4), WeightLabel(1)), Ok(false));
        assert_eq!(is_self_dual(SimpleRootSystem::d(5), WeightLabel(5)), Ok(false));
        assert!(is_self_dual(SimpleRootSystem::b(3), WeightLabel(1)).is_err());
    }

    #[test]
    fn parsing_and_display() {
        assert_eq!(sum("A3+B2+2*A1").to_string(), "2*A1+A3+B2");
        assert_eq!(sum(" d3 + C2 ").to_string(), "A3+B2");
        assert_eq!(sum("D2").to_string(), "2*A1");
        assert_eq!(sum("0"), RootSystemSum::empty());
        match "A3+X2".parse::<RootSystemSum>() {
            Err(RootSystemError::Parse { column, .. }) => assert_eq!(column, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!("A0".parse::<RootSystemSum>().is_err());
        assert!("D1".parse::<RootSystemSum>().is_err());
        assert!("A3+".parse::<RootSystemSum>().is_err());
        assert!("0*A3".parse::<RootSystemSum>().is_err());
    }

    #[test]
    fn weight_transport() {
        assert_eq!(
            normalize_weight(RawSystem::new(Family::C, 2), 1),
            Some((SimpleRootSystem::b(2), WeightLabel(2)))
        );
        assert_eq!(
            normalize_weight(RawSystem::new(Family::D, 3), 1),
            Some((SimpleRootSystem::a(3), WeightLabel(2)))
        );
        assert_eq!(normalize_weight(RawSystem::new(Family::D, 2), 1), None);
    }
}
