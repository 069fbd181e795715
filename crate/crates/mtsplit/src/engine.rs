//! Rule engine deciding whether the monodromy group of a product splits as
//! the product of the groups of its factors, and whether the Mumford-Tate
//! conjecture follows, with a replayable trace of every rule used.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::albert::{is_prime, validate, FactorDescriptor, FieldContext, Violation};
#[cfg(test)]
use crate::albert::AlbertType;
use crate::lie_model::{build_model_set, hazama_hypotheses_hold, shares_simple_factor_type, GroupModelCandidate, ModelSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid catalog: {}", .0.join("; "))]
    InvalidCatalog(Vec<String>),
    #[error("Mumford-Tate verdicts cover total dimension at most 5, got {0}; use decide for products")]
    MtDimensionOutOfScope(u64),
    #[error("Mumford-Tate verdicts are only defined in characteristic 0")]
    MtRequiresCharacteristicZero,
    #[error("trace does not replay: {0}")]
    Replay(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splits {
    Yes,
    /// Reserved for a nonzero homomorphism between factors; never produced
    /// because non-isogeny is declared by the catalog.
    NoHomNonzero,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MtStatus {
    Holds,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    SingleFactor,
    DimAtMostTwo,
    ProductSurfaces,
    Ichikawa,
    IchikawaCharP,
    SemisimpleTimesCm,
    DifferentSimpleFactors,
    Hazama,
    HazamaCharP,
    CmProducts,
    NonIsogeny,
    EllipticCurveMt,
    PrimeDimensionMt,
    FourfoldMt,
    FourfoldOpen,
    CmMt,
    CmImpliesMt,
    ProductImpliesMt,
    LefschetzFourfold,
    TypeIvFourfoldNoSl2,
    SimplePrimeIv21,
    EndZFourfoldTimesCurve,
    Inconclusive,
}

impl RuleId {
    pub fn anchor(self) -> &'static str {
        use RuleId::*;
        match self {
            SingleFactor => "a single factor: nothing to split",
            DimAtMostTwo => "corollary on factors of dimension at most 2",
            ProductSurfaces => "corollary: no type IV factor and every dimension 2 or odd",
            Ichikawa => "Ichikawa-type theorem: factors of odd relative dimension",
            IchikawaCharP => "Ichikawa-type theorem in positive characteristic: ordinary reduction in dimension 1",
            SemisimpleTimesCm => "lemma: B of CM type and A without type IV factors",
            DifferentSimpleFactors => "proposition: no common simple factor",
            Hazama => "Hazama-type theorem: either Hom(A1, A2) != 0 or the group splits",
            HazamaCharP => "Hazama-type theorem in positive characteristic: no simple factors of type IV",
            CmProducts => "products of CM factors of dimension at most 2 (Hodge group statement plus MT for CM)",
            NonIsogeny => "pairwise non-isogeny over the algebraic closure is a declared hypothesis",
            EllipticCurveMt => "Mumford-Tate holds for elliptic curves",
            PrimeDimensionMt => "Mumford-Tate holds for absolutely simple varieties of prime dimension",
            FourfoldMt => "Mumford-Tate holds for simple fourfolds with End != Z",
            FourfoldOpen => "simple fourfold with End = Z: Sp8 or a form of SL2^3",
            CmMt => "Mumford-Tate holds for CM abelian varieties",
            CmImpliesMt => "lemma: Mumford-Tate for A and B CM implies it for A x B",
            ProductImpliesMt => "lemma: Mumford-Tate for the factors and a split product imply it for the product",
            LefschetzFourfold => "fourfold not of type IV with End != Z is of general Lefschetz type",
            TypeIvFourfoldNoSl2 => "type IV fourfold other than IV(2,1) has no simple factor sl2",
            SimplePrimeIv21 => "IV(2,1): Q-simple derived group, simple at some prime, rank additivity",
            EndZFourfoldTimesCurve => "End = Z fourfold x elliptic curve: Sp8 by Hazama, SL2^3 by a simple prime",
            Inconclusive => "no encoded rule applies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    /// The block equal to the union of `parts` splits as the product over the parts.
    Split { parts: Vec<Vec<String>> },
    MtHolds { labels: Vec<String> },
    MtOpen { labels: Vec<String> },
    Note,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule: RuleId,
    pub anchor: String,
    pub details: String,
    #[serde(flatten)]
    pub effect: Effect,
}

impl RuleFiring {
    fn new(rule: RuleId, details: String, effect: Effect) -> Self {
        RuleFiring { rule, anchor: rule.anchor().to_string(), details, effect }
    }

    fn note(rule: RuleId, details: String) -> Self {
        Self::new(rule, details, Effect::Note)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub splits: Splits,
    pub mt: MtStatus,
    /// Finest proven decomposition of the distinct factors.
    pub blocks: Vec<Vec<String>>,
    pub trace: Vec<RuleFiring>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub factors: Vec<FactorDescriptor>,
    #[serde(default)]
    pub context: FieldContext,
}

impl Catalog {
    pub fn new(factors: Vec<FactorDescriptor>, context: FieldContext) -> Self {
        Catalog { factors, context }
    }

    pub fn total_dimension(&self) -> u64 {
        self.factors.iter().map(|f| u64::from(f.dimension) * u64::from(f.multiplicity)).sum()
    }

    pub fn labels(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.label.clone()).collect()
    }

    /// Human-readable violations; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        if !self.context.is_valid() {
            out.push(format!("characteristic {} is neither 0 nor prime", self.context.characteristic));
        }
        for f in &self.factors {
            if f.label.is_empty() {
                out.push("empty label".to_string());
            }
            if !seen.insert(f.label.as_str()) {
                out.push(format!("duplicate label `{}`", f.label));
            }
            let mut per = validate(f, &self.context);
            per.retain(|v| *v != Violation::InvalidCharacteristic);
            out.extend(per.into_iter().map(|v| format!("{}: {v}", f.label)));
        }
        out
    }
}

/// Rank bookkeeping: the whole group's rank is pinned to the sum of the parts.
pub fn rank_additivity_check(whole_rank_bounds: (u32, u32), part_ranks: &[u32]) -> bool {
    let sum: u32 = part_ranks.iter().sum();
    whole_rank_bounds.0 == whole_rank_bounds.1 && whole_rank_bounds.0 == sum
}

type Partition = Vec<Vec<String>>;

struct Engine<'a> {
    ctx: FieldContext,
    order: Vec<String>,
    factors: BTreeMap<String, &'a FactorDescriptor>,
    models: BTreeMap<String, ModelSet>,
    memo: RefCell<HashMap<Vec<String>, Vec<RuleFiring>>>,
}

fn join(labels: &[String]) -> String {
    labels.join(", ")
}

fn show_parts(parts: &[Vec<String>]) -> String {
    parts.iter().map(|p| format!("{{{}}}", join(p))).collect::<Vec<_>>().join(" x ")
}

impl<'a> Engine<'a> {
    fn new(cat: &'a Catalog) -> Result<Self, EngineError> {
        let violations = cat.violations();
        if !violations.is_empty() {
            return Err(EngineError::InvalidCatalog(violations));
        }
        let mut factors = BTreeMap::new();
        let mut models = BTreeMap::new();
        for f in &cat.factors {
            factors.insert(f.label.clone(), f);
            let ms = build_model_set(f, &cat.context).expect("validated descriptor");
            models.insert(f.label.clone(), ms);
        }
        Ok(Engine {
            ctx: cat.context,
            order: cat.labels(),
            factors,
            models,
            memo: RefCell::new(HashMap::new()),
        })
    }

    fn f(&self, label: &str) -> &FactorDescriptor {
        self.factors[label]
    }

    fn cands(&self, label: &str) -> Option<&[GroupModelCandidate]> {
        self.models[label].candidates()
    }

    fn index(&self, label: &str) -> usize {
        self.order.iter().position(|l| l == label).unwrap_or(usize::MAX)
    }

    fn sorted(&self, mut labels: Vec<String>) -> Vec<String> {
        labels.sort_by_key(|l| self.index(l));
        labels
    }

    fn normalize_parts(&self, parts: &[Vec<String>]) -> Partition {
        let mut out: Partition = parts.iter().map(|p| self.sorted(p.clone())).collect();
        out.sort_by_key(|p| p.first().map(|l| self.index(l)).unwrap_or(usize::MAX));
        out
    }

    fn require_char0(&self) -> Result<(), String> {
        if self.ctx.is_char0() {
            Ok(())
        } else {
            Err("requires characteristic 0".to_string())
        }
    }

    fn all(&self, labels: &[String], pred: impl Fn(&FactorDescriptor) -> bool) -> bool {
        labels.iter().all(|l| pred(self.f(l)))
    }

    fn semisimple(&self, side: &[String]) -> bool {
        side.iter()
            .all(|l| self.cands(l).is_some_and(|cs| cs.iter().all(|c| c.center_rank == 0)))
    }

    fn ichikawa_parts(&self, labels: &[String]) -> Partition {
        let mut parts: Partition = labels
            .iter()
            .filter(|l| !self.f(l).is_type_iv())
            .map(|l| vec![l.clone()])
            .collect();
        let iv: Vec<String> = labels.iter().filter(|l| self.f(l).is_type_iv()).cloned().collect();
        if !iv.is_empty() {
            parts.push(iv);
        }
        self.normalize_parts(&parts)
    }

    /// Checks the premises of a splitting rule on `parts`. On success returns
    /// the details string recorded in the trace.
    fn split_premise(&self, rule: RuleId, parts: &[Vec<String>]) -> Result<String, String> {
        use RuleId::*;
        if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
            return Err("a split needs at least two nonempty parts".to_string());
        }
        let members: Vec<String> = parts.iter().flatten().cloned().collect();
        let singletons = parts.iter().all(|p| p.len() == 1);
        match rule {
            DimAtMostTwo => {
                self.require_char0()?;
                if !self.all(&members, |f| f.dimension <= 2) {
                    return Err("some factor has dimension above 2".to_string());
                }
                if !singletons {
                    return Err("the corollary splits into single factors".to_string());
                }
                Ok(format!("all of {} have dimension at most 2", join(&members)))
            }
            ProductSurfaces => {
                if let Some(f) = members.iter().map(|l| self.f(l)).find(|f| f.is_type_iv()) {
                    return Err(format!("{} is of type IV", f.label));
                }
                if let Some(f) = members
                    .iter()
                    .map(|l| self.f(l))
                    .find(|f| f.dimension != 2 && f.dimension % 2 == 0)
                {
                    return Err(format!("{} has dimension {}", f.label, f.dimension));
                }
                if !singletons {
                    return Err("the corollary splits into single factors".to_string());
                }
                Ok(format!("{} have no type IV factor and dimensions 2 or odd", join(&members)))
            }
            Ichikawa | IchikawaCharP => {
                if rule == Ichikawa {
                    self.require_char0()?;
                } else if self.ctx.is_char0() {
                    return Err("requires positive characteristic".to_string());
                } else if !self.ctx.ordinary_reduction_dim1 {
                    return Err("requires ordinary reduction in dimension 1".to_string());
                }
                if let Some(f) = members
                    .iter()
                    .map(|l| self.f(l))
                    .find(|f| f.relative_dimension_checked().is_none_or(|h| h % 2 == 0))
                {
                    return Err(format!("{} has even relative dimension", f.label));
                }
                let expected = self.ichikawa_parts(&members);
                if self.normalize_parts(parts) != expected {
                    return Err("parts must be the non-type-IV factors and one type IV block".to_string());
                }
                Ok(format!("odd relative dimensions; split {}", show_parts(&expected)))
            }
            SemisimpleTimesCm => {
                self.require_char0()?;
                let [a, b] = two(parts)?;
                let ok = |x: &[String], y: &[String]| {
                    self.all(y, |f| f.cm) && self.all(x, |f| !f.is_type_iv())
                };
                let (ss, cm) = if ok(a, b) {
                    (a, b)
                } else if ok(b, a) {
                    (b, a)
                } else {
                    return Err("needs one CM side and one side without type IV".to_string());
                };
                let der: Option<u32> = ss.iter().try_fold(0, |acc, l| {
                    let cs = self.cands(l)?;
                    let r = cs.first()?.semisimple_rank();
                    cs.iter().all(|c| c.semisimple_rank() == r).then_some(acc + r)
                });
                let center: u32 = cm.iter().map(|l| self.f(l).e0).sum();
                let rank_note = match der {
                    Some(d) => format!(
                        "; rank {} + {} additive: {}",
                        d,
                        center,
                        rank_additivity_check((d + center, d + center), &[d, center])
                    ),
                    None => String::new(),
                };
                Ok(format!("{} is CM, {} has no type IV factor{rank_note}", join(cm), join(ss)))
            }
            DifferentSimpleFactors => {
                self.require_char0()?;
                let [a, b] = two(parts)?;
                if !members.iter().all(|l| self.cands(l).is_some()) {
                    return Err("some factor is unclassified".to_string());
                }
                if !self.semisimple(a) && !self.semisimple(b) {
                    return Err("neither side is semisimple".to_string());
                }
                for x in a {
                    for y in b {
                        for cx in self.cands(x).unwrap() {
                            for cy in self.cands(y).unwrap() {
                                if shares_simple_factor_type(cx, cy) {
                                    return Err(format!("{x} and {y} may share a simple factor"));
                                }
                            }
                        }
                    }
                }
                Ok(format!("{} and {} have no common simple factor type", join(a), join(b)))
            }
            Hazama | HazamaCharP => {
                if rule == Hazama {
                    self.require_char0()?;
                } else {
                    if self.ctx.is_char0() {
                        return Err("requires positive characteristic".to_string());
                    }
                    if let Some(l) = members.iter().find(|l| self.f(l).is_type_iv()) {
                        return Err(format!("{l} is of type IV"));
                    }
                }
                two(parts)?;
                self.hazama_members(&members)?;
                Ok(format!(
                    "hypotheses 1-3 hold for every candidate model of {}",
                    show_parts(parts)
                ))
            }
            CmProducts => {
                self.require_char0()?;
                if !self.all(&members, |f| f.cm && f.dimension <= 2) {
                    return Err("needs CM factors of dimension at most 2".to_string());
                }
                Ok(format!("{} are CM of dimension at most 2", join(&members)))
            }
            LefschetzFourfold | TypeIvFourfoldNoSl2 | SimplePrimeIv21 | EndZFourfoldTimesCurve => {
                self.require_char0()?;
                let (x, e) = self.fourfold_and_curve(parts)?;
                let fx = self.f(x);
                match rule {
                    LefschetzFourfold if !fx.is_type_iv() && !fx.has_trivial_endomorphisms() => {
                        Ok(format!("{x} is of general Lefschetz type without D4; {e} is a non-CM curve"))
                    }
                    TypeIvFourfoldNoSl2 if fx.is_type_iv() && !fx.cm && !(fx.e0 == 2 && fx.d == 1) => {
                        Ok(format!("{x} has no simple factor sl2, {e} has sl2"))
                    }
                    SimplePrimeIv21 if fx.is_type_iv() && !fx.cm && fx.e0 == 2 && fx.d == 1 => {
                        let ok = rank_additivity_check((3, 3), &[2, 1]);
                        Ok(format!(
                            "H({x})^der is a Q-simple form of SL2^2, simple at some prime; rank 2 + 1 additive: {ok}"
                        ))
                    }
                    EndZFourfoldTimesCurve if fx.has_trivial_endomorphisms() => self.end_z_fourfold_split(x, e),
                    _ => Err(format!("{x} does not have the shape required by this rule")),
                }
            }
            _ => Err("not a splitting rule".to_string()),
        }
    }

    fn fourfold_and_curve<'p>(&self, parts: &'p [Vec<String>]) -> Result<(&'p str, &'p str), String> {
        let [a, b] = two(parts)?;
        let (x, e) = match (a.as_slice(), b.as_slice()) {
            ([x], [e]) if self.f(x).dimension == 4 && self.f(e).dimension == 1 => (x, e),
            ([e], [x]) if self.f(x).dimension == 4 && self.f(e).dimension == 1 => (x, e),
            _ => return Err("needs a fourfold and an elliptic curve".to_string()),
        };
        if self.f(e).cm {
            return Err(format!("{e} has CM"));
        }
        Ok((x, e))
    }

    fn end_z_fourfold_split(&self, x: &str, e: &str) -> Result<String, String> {
        let cx = self.cands(x).ok_or("fourfold unclassified")?;
        let ce = self.cands(e).ok_or("curve unclassified")?;
        let mut notes = Vec::new();
        for m in cx {
            if !m.tensor {
                if !ce.iter().all(|c| hazama_hypotheses_hold(m, c).holds()) {
                    return Err("Sp8 candidate fails the Hazama hypotheses".to_string());
                }
                notes.push("Sp8 candidate: Hazama hypotheses hold".to_string());
            } else {
                let simple_prime = m.factors.len() <= 3;
                let re = ce.iter().map(GroupModelCandidate::rank).max().unwrap_or(0);
                let rx = m.rank();
                if !simple_prime || rx == re {
                    return Err("SL2^3 candidate: simple-prime argument unavailable".to_string());
                }
                let ok = rank_additivity_check((rx + re, rx + re), &[rx, re]);
                notes.push(format!(
                    "SL2^3 candidate: simple at some prime, ranks {rx} != {re}, additive: {ok}"
                ));
            }
        }
        Ok(notes.join("; "))
    }

    /// Hazama hypotheses for every combination of candidates of `members`,
    /// checked one factor and one pair of factors at a time.
    fn hazama_members(&self, members: &[String]) -> Result<(), String> {
        let empty = GroupModelCandidate::torus(0);
        for l in members {
            let cs = self.cands(l).ok_or(format!("{l} is unclassified"))?;
            for c in cs {
                let r = hazama_hypotheses_hold(c, &empty);
                if !r.holds() {
                    return Err(format!("{l}: {}", r.failures.join(", ")));
                }
            }
        }
        for (i, x) in members.iter().enumerate() {
            for y in &members[i + 1..] {
                for cx in self.cands(x).unwrap() {
                    for cy in self.cands(y).unwrap() {
                        let r = hazama_hypotheses_hold(cx, cy);
                        if !r.holds() {
                            return Err(format!("{x} vs {y}: {}", r.failures.join(", ")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn has_mt(&self, prior: &[RuleFiring], labels: &[String]) -> bool {
        let want: BTreeSet<&String> = labels.iter().collect();
        prior.iter().any(|f| match &f.effect {
            Effect::MtHolds { labels } => labels.iter().collect::<BTreeSet<_>>() == want,
            _ => false,
        })
    }

    /// Premises of a Mumford-Tate rule, given the firings before it.
    fn mt_premise(&self, rule: RuleId, labels: &[String], prior: &[RuleFiring]) -> Result<String, String> {
        use RuleId::*;
        self.require_char0()?;
        if labels.is_empty() {
            return Err("no factors".to_string());
        }
        let single = match labels {
            [one] => Some(self.f(one)),
            _ => None,
        };
        match rule {
            EllipticCurveMt => match single {
                Some(f) if f.dimension == 1 => Ok(format!("{} is an elliptic curve", f.label)),
                _ => Err("needs a single elliptic curve".to_string()),
            },
            PrimeDimensionMt => match single {
                Some(f) if is_prime(u64::from(f.dimension)) => {
                    Ok(format!("{} is simple of prime dimension {}", f.label, f.dimension))
                }
                _ => Err("needs a single factor of prime dimension".to_string()),
            },
            FourfoldMt => match single {
                Some(f) if f.dimension == 4 && !f.has_trivial_endomorphisms() => {
                    Ok(format!("{} is a simple fourfold with End != Z", f.label))
                }
                _ => Err("needs a simple fourfold with End != Z".to_string()),
            },
            FourfoldOpen => {
                match labels.iter().find(|l| self.f(l).dimension == 4 && self.f(l).has_trivial_endomorphisms()) {
                    Some(l) => Ok(format!("{l} is a simple fourfold with End = Z")),
                    None => Err("needs a fourfold with End = Z".to_string()),
                }
            }
            CmMt => {
                if self.all(labels, |f| f.cm) {
                    Ok(format!("{} are CM", join(labels)))
                } else {
                    Err("needs CM factors".to_string())
                }
            }
            CmImpliesMt => {
                let b: Vec<String> = labels.iter().filter(|l| !self.f(l).cm).cloned().collect();
                let c: Vec<String> = labels.iter().filter(|l| self.f(l).cm).cloned().collect();
                if c.is_empty() {
                    return Err("needs a CM part".to_string());
                }
                if !b.is_empty() && !self.has_mt(prior, &b) {
                    return Err(format!("Mumford-Tate for {} not yet established", join(&b)));
                }
                Ok(format!("Mumford-Tate for {{{}}} and {{{}}} CM", join(&b), join(&c)))
            }
            ProductImpliesMt => {
                if let Some(l) = labels.iter().find(|l| !self.has_mt(prior, std::slice::from_ref(*l))) {
                    return Err(format!("Mumford-Tate for {l} not yet established"));
                }
                Ok(format!("Mumford-Tate for each of {} and the product splits", join(labels)))
            }
            DimAtMostTwo => {
                if self.all(labels, |f| f.dimension <= 2) {
                    Ok(format!("{} have dimension at most 2", join(labels)))
                } else {
                    Err("some factor has dimension above 2".to_string())
                }
            }
            ProductSurfaces => {
                if self.all(labels, |f| !f.is_type_iv() && (f.dimension == 2 || f.dimension % 2 == 1)) {
                    Ok(format!("{} have no type IV factor and dimensions 2 or odd", join(labels)))
                } else {
                    Err("needs non-type-IV factors of dimension 2 or odd".to_string())
                }
            }
            _ => Err("not a Mumford-Tate rule".to_string()),
        }
    }

    fn try_split(&self, rule: RuleId, parts: Partition) -> Option<RuleFiring> {
        let parts = self.normalize_parts(&parts);
        let details = self.split_premise(rule, &parts).ok()?;
        Some(RuleFiring::new(rule, details, Effect::Split { parts }))
    }

    fn try_mt(&self, rule: RuleId, labels: &[String], prior: &[RuleFiring]) -> Option<RuleFiring> {
        let labels = self.sorted(labels.to_vec());
        let details = self.mt_premise(rule, &labels, prior).ok()?;
        let effect = if rule == RuleId::FourfoldOpen {
            Effect::MtOpen { labels }
        } else {
            Effect::MtHolds { labels }
        };
        Some(RuleFiring::new(rule, details, effect))
    }

    fn hazama_rule(&self) -> RuleId {
        if self.ctx.is_char0() {
            RuleId::Hazama
        } else {
            RuleId::HazamaCharP
        }
    }

    fn pair_rules(&self) -> [RuleId; 4] {
        [RuleId::SemisimpleTimesCm, RuleId::DifferentSimpleFactors, self.hazama_rule(), RuleId::CmProducts]
    }

    /// Firings that split `set` as finely as the rules allow.
    fn decide_set(&self, set: &[String]) -> Vec<RuleFiring> {
        let set = self.sorted(set.to_vec());
        if set.len() < 2 {
            return Vec::new();
        }
        if let Some(hit) = self.memo.borrow().get(&set) {
            return hit.clone();
        }
        let out = self.decide_set_uncached(&set);
        self.memo.borrow_mut().insert(set, out.clone());
        out
    }

    fn decide_set_uncached(&self, set: &[String]) -> Vec<RuleFiring> {
        let singletons: Partition = set.iter().map(|l| vec![l.clone()]).collect();
        for rule in [RuleId::DimAtMostTwo, RuleId::ProductSurfaces] {
            if let Some(firing) = self.try_split(rule, singletons.clone()) {
                let mut out = vec![firing];
                out.extend(self.try_mt(rule, set, &[]));
                return out;
            }
        }
        let ichikawa = if self.ctx.is_char0() { RuleId::Ichikawa } else { RuleId::IchikawaCharP };
        let parts = self.ichikawa_parts(set);
        if parts.len() >= 2 {
            if let Some(firing) = self.try_split(ichikawa, parts.clone()) {
                let mut out = vec![firing];
                if let Some(block) = parts.iter().find(|p| p.len() > 1) {
                    out.extend(self.decide_set(block));
                }
                return out;
            }
        }
        for f in set {
            let rest: Vec<String> = set.iter().filter(|l| *l != f).cloned().collect();
            let sub = self.decide_set(&rest);
            let rest_split = fully_split(&rest, &sub);
            for rule in self.pair_rules() {
                if matches!(rule, RuleId::Hazama | RuleId::HazamaCharP) && !rest_split {
                    continue;
                }
                if let Some(firing) = self.try_split(rule, vec![vec![f.clone()], rest.clone()]) {
                    let mut out = vec![firing];
                    if matches!(rule, RuleId::Hazama | RuleId::HazamaCharP) {
                        out.push(self.non_isogeny_note(set));
                    }
                    out.extend(sub);
                    return out;
                }
            }
        }
        Vec::new()
    }

    fn non_isogeny_note(&self, set: &[String]) -> RuleFiring {
        RuleFiring::note(
            RuleId::NonIsogeny,
            format!("Hom = 0 between distinct factors of {{{}}} by declaration", join(set)),
        )
    }

    fn audit_globals(&self, set: &[String], trace: &mut Vec<RuleFiring>) {
        if set.len() < 2 {
            return;
        }
        let used: BTreeSet<RuleId> = trace.iter().map(|f| f.rule).collect();
        let singletons: Partition = set.iter().map(|l| vec![l.clone()]).collect();
        let ichikawa = if self.ctx.is_char0() { RuleId::Ichikawa } else { RuleId::IchikawaCharP };
        let checks = [
            (RuleId::DimAtMostTwo, singletons.clone()),
            (RuleId::ProductSurfaces, singletons),
            (ichikawa, self.ichikawa_parts(set)),
        ];
        for (rule, parts) in checks {
            if used.contains(&rule) {
                continue;
            }
            let details = match self.split_premise(rule, &self.normalize_parts(&parts)) {
                Ok(d) => format!("audit: also applicable ({d})"),
                Err(reason) => format!("audit: not applicable ({reason})"),
            };
            trace.push(RuleFiring::note(rule, details));
        }
    }

    fn distinct_labels(&self) -> Vec<String> {
        self.order.clone()
    }

    fn finish(&self, trace: Vec<RuleFiring>) -> Verdict {
        summarize(&self.distinct_labels(), trace).expect("engine traces replay")
    }

    fn decide_product(&self) -> Verdict {
        let labels = self.distinct_labels();
        let mut trace = Vec::new();
        if labels.len() == 1 {
            trace.push(RuleFiring::note(RuleId::SingleFactor, format!("{} alone", labels[0])));
            return self.finish(trace);
        }
        trace.extend(self.decide_set(&labels));
        self.audit_globals(&labels, &mut trace);
        self.note_open_blocks(&labels, &mut trace);
        self.finish(trace)
    }

    fn note_open_blocks(&self, labels: &[String], trace: &mut Vec<RuleFiring>) {
        if let Ok(p) = fold(labels, trace) {
            for block in p.into_iter().filter(|b| b.len() > 1) {
                trace.push(RuleFiring::note(
                    RuleId::Inconclusive,
                    format!("no rule splits {{{}}}", join(&block)),
                ));
            }
        }
    }

    fn decide_pair(&self) -> Verdict {
        let labels = self.distinct_labels();
        let parts = vec![vec![labels[0].clone()], vec![labels[1].clone()]];
        let mut trace = Vec::new();
        let mut won = false;
        for rule in self.pair_rules() {
            match self.split_premise(rule, &parts) {
                Ok(details) if !won => {
                    won = true;
                    trace.push(RuleFiring::new(rule, details, Effect::Split { parts: parts.clone() }));
                    if matches!(rule, RuleId::Hazama | RuleId::HazamaCharP) {
                        trace.push(self.non_isogeny_note(&labels));
                    }
                }
                Ok(details) => trace.push(RuleFiring::note(rule, format!("audit: also applicable ({details})"))),
                Err(reason) => trace.push(RuleFiring::note(rule, format!("audit: not applicable ({reason})"))),
            }
        }
        if !won && !self.ctx.is_char0() && self.all(&labels, |f| f.cm) {
            trace.push(RuleFiring::note(
                RuleId::Inconclusive,
                "CM factors in positive characteristic: no analogue of the dimension <= 2 corollary".to_string(),
            ));
        } else if !won {
            trace.push(RuleFiring::note(RuleId::Inconclusive, format!("no rule splits {}", join(&labels))));
        }
        self.finish(trace)
    }

    fn simple_mt(&self, label: &str, prior: &[RuleFiring]) -> RuleFiring {
        let one = [label.to_string()];
        [RuleId::CmMt, RuleId::EllipticCurveMt, RuleId::PrimeDimensionMt, RuleId::FourfoldMt, RuleId::FourfoldOpen]
            .into_iter()
            .find_map(|r| self.try_mt(r, &one, prior))
            .expect("every simple factor of dimension <= 5 has a Mumford-Tate rule")
    }

    /// The case analysis for total dimension at most 5, on distinct factors.
    fn mt_tree(&self, set: &[String]) -> Vec<RuleFiring> {
        let set = self.sorted(set.to_vec());
        let mut t: Vec<RuleFiring> = Vec::new();
        if set.len() == 1 {
            t.push(self.simple_mt(&set[0], &t));
            return t;
        }
        if let Some(split) = self.try_split(RuleId::DimAtMostTwo, set.iter().map(|l| vec![l.clone()]).collect()) {
            t.push(split);
            t.extend(self.try_mt(RuleId::DimAtMostTwo, &set, &[]));
            return t;
        }
        let dims: BTreeMap<&String, u32> = set.iter().map(|l| (l, self.f(l).dimension)).collect();
        let total: u32 = dims.values().sum();
        let cm: Vec<String> = set.iter().filter(|l| self.f(l).cm).cloned().collect();
        let non_cm: Vec<String> = set.iter().filter(|l| !self.f(l).cm).cloned().collect();
        if total == 4 {
            // A threefold times an elliptic curve.
            for l in &set {
                let firing = self.simple_mt(l, &t);
                t.push(firing);
            }
            let curve = set.iter().find(|l| dims[l] == 1).expect("curve");
            if !self.f(curve).cm {
                t.extend(self.try_split(RuleId::Ichikawa, self.ichikawa_parts(&set)));
                t.extend(self.try_mt(RuleId::ProductImpliesMt, &set, &t.clone()));
            } else {
                t.extend(self.try_mt(RuleId::CmImpliesMt, &set, &t.clone()));
            }
            return t;
        }
        if !cm.is_empty() {
            if non_cm.is_empty() {
                t.extend(self.try_mt(RuleId::CmMt, &set, &[]));
                return t;
            }
            t.extend(self.mt_tree(&non_cm));
            if self.has_mt(&t, &non_cm) {
                t.extend(self.try_mt(RuleId::CmImpliesMt, &set, &t.clone()));
            } else {
                t.extend(self.try_split(RuleId::SemisimpleTimesCm, vec![non_cm.clone(), cm.clone()]));
                t.extend(self.try_mt(RuleId::FourfoldOpen, &set, &[]));
            }
            return t;
        }
        for l in &set {
            let firing = self.simple_mt(l, &t);
            t.push(firing);
        }
        let mut shape: Vec<u32> = dims.values().copied().collect();
        shape.sort_unstable_by(|a, b| b.cmp(a));
        let pair = |a: &String, b: &String| vec![vec![a.clone()], vec![b.clone()]];
        let split = match shape.as_slice() {
            [3, 1, 1] => self.try_split(RuleId::Ichikawa, self.ichikawa_parts(&set)),
            [3, 2] => {
                let x = set.iter().find(|l| dims[l] == 3).unwrap();
                let y = set.iter().find(|l| dims[l] == 2).unwrap();
                [RuleId::Ichikawa, RuleId::ProductSurfaces, RuleId::DifferentSimpleFactors]
                    .into_iter()
                    .find_map(|r| {
                        let parts = if r == RuleId::Ichikawa { self.ichikawa_parts(&set) } else { pair(x, y) };
                        self.try_split(r, parts)
                    })
            }
            [4, 1] => {
                let x = set.iter().find(|l| dims[l] == 4).unwrap();
                let e = set.iter().find(|l| dims[l] == 1).unwrap();
                [
                    RuleId::LefschetzFourfold,
                    RuleId::TypeIvFourfoldNoSl2,
                    RuleId::SimplePrimeIv21,
                    RuleId::EndZFourfoldTimesCurve,
                ]
                .into_iter()
                .find_map(|r| self.try_split(r, pair(x, e)))
            }
            _ => None,
        };
        t.extend(split);
        if let Some(open) = self.try_mt(RuleId::FourfoldOpen, &set, &[]) {
            t.push(open);
        } else {
            t.extend(self.try_mt(RuleId::ProductImpliesMt, &set, &t.clone()));
        }
        t
    }

    fn mt_verdict(&self) -> Verdict {
        let labels = self.distinct_labels();
        let mut trace = self.mt_tree(&labels);
        let has_split = trace.iter().any(|f| matches!(f.effect, Effect::Split { .. }));
        if labels.len() == 1 {
            trace.insert(0, RuleFiring::note(RuleId::SingleFactor, format!("{} alone", labels[0])));
        } else if !has_split {
            trace.extend(self.decide_set(&labels));
            self.note_open_blocks(&labels, &mut trace);
        }
        self.finish(trace)
    }

    /// Re-checks every firing's premises against the catalog.
    fn check_trace(&self, trace: &[RuleFiring]) -> Result<(), String> {
        fold(&self.distinct_labels(), trace)?;
        for (i, firing) in trace.iter().enumerate() {
            if firing.anchor != firing.rule.anchor() {
                return Err(format!("firing {i}: anchor does not match rule"));
            }
            let known = |l: &String| self.factors.contains_key(l);
            match &firing.effect {
                Effect::Split { parts } => {
                    if !parts.iter().flatten().all(known) {
                        return Err(format!("firing {i}: unknown label"));
                    }
                    self.split_premise(firing.rule, parts).map_err(|e| format!("firing {i}: {e}"))?;
                    if matches!(firing.rule, RuleId::Hazama | RuleId::HazamaCharP)
                        && !parts.iter().all(|p| fully_split(p, trace))
                    {
                        return Err(format!("firing {i}: Hazama needs every side fully split"));
                    }
                }
                Effect::MtHolds { labels: ls } | Effect::MtOpen { labels: ls } => {
                    if !ls.iter().all(known) {
                        return Err(format!("firing {i}: unknown label"));
                    }
                    self.mt_premise(firing.rule, ls, &trace[..i]).map_err(|e| format!("firing {i}: {e}"))?;
                    if firing.rule == RuleId::ProductImpliesMt && !fully_split(ls, trace) {
                        return Err(format!("firing {i}: product not shown to split"));
                    }
                    let open = firing.rule == RuleId::FourfoldOpen;
                    if open != matches!(firing.effect, Effect::MtOpen { .. }) {
                        return Err(format!("firing {i}: wrong effect for rule"));
                    }
                }
                Effect::Note => {}
            }
        }
        Ok(())
    }
}

fn two(parts: &[Vec<String>]) -> Result<[&Vec<String>; 2], String> {
    match parts {
        [a, b] => Ok([a, b]),
        _ => Err("needs exactly two sides".to_string()),
    }
}

/// Finest decomposition of `scope` implied by the split facts in `trace`.
/// Each split states that the group of the union of its parts is the product
/// over the parts; facts are composed until nothing changes.
fn fold(scope: &[String], trace: &[RuleFiring]) -> Result<Partition, String> {
    let mut facts: Vec<(BTreeSet<&String>, &Vec<Vec<String>>)> = Vec::new();
    for firing in trace {
        if let Effect::Split { parts } = &firing.effect {
            let union: BTreeSet<&String> = parts.iter().flatten().collect();
            if union.len() != parts.iter().map(Vec::len).sum::<usize>() {
                return Err(format!("overlapping parts in {}", show_parts(parts)));
            }
            facts.push((union, parts));
        }
    }
    let mut partition: Partition = vec![scope.to_vec()];
    loop {
        let hit = partition.iter().enumerate().find_map(|(i, b)| {
            let block: BTreeSet<&String> = b.iter().collect();
            facts.iter().find(|(u, _)| *u == block).map(|(_, parts)| (i, *parts))
        });
        let Some((i, parts)) = hit else { break };
        partition.remove(i);
        for part in parts {
            let mut p = part.clone();
            p.sort_by_key(|l| scope.iter().position(|x| x == l));
            partition.push(p);
        }
    }
    partition.sort_by_key(|b| b.first().and_then(|l| scope.iter().position(|x| x == l)));
    Ok(partition)
}

fn fully_split(scope: &[String], trace: &[RuleFiring]) -> bool {
    scope.len() <= 1 || fold(scope, trace).is_ok_and(|p| p.iter().all(|b| b.len() == 1))
}

/// Derives the verdict from a trace alone.
fn summarize(labels: &[String], trace: Vec<RuleFiring>) -> Result<Verdict, String> {
    let blocks = fold(labels, &trace)?;
    let splits = if blocks.iter().all(|b| b.len() == 1) { Splits::Yes } else { Splits::Inconclusive };
    let all: BTreeSet<&String> = labels.iter().collect();
    let mt_holds = trace.iter().any(|f| match &f.effect {
        Effect::MtHolds { labels } => labels.iter().collect::<BTreeSet<_>>() == all,
        _ => false,
    });
    Ok(Verdict {
        splits,
        mt: if mt_holds { MtStatus::Holds } else { MtStatus::Inconclusive },
        blocks,
        trace,
    })
}

/// Splitting verdict for a whole catalog.
pub fn decide_product(c: &Catalog) -> Result<Verdict, EngineError> {
    Ok(Engine::new(c)?.decide_product())
}

/// Splitting verdict for two factors using the pairwise rules only.
pub fn decide_pair(f1: &FactorDescriptor, f2: &FactorDescriptor, ctx: &FieldContext) -> Result<Verdict, EngineError> {
    let cat = Catalog::new(vec![f1.clone(), f2.clone()], *ctx);
    Ok(Engine::new(&cat)?.decide_pair())
}

/// Mumford-Tate verdict for catalogs of total dimension at most 5 in characteristic 0.
pub fn mt_verdict(c: &Catalog) -> Result<Verdict, EngineError> {
    let engine = Engine::new(c)?;
    if !c.context.is_char0() {
        return Err(EngineError::MtRequiresCharacteristicZero);
    }
    let dim = c.total_dimension();
    if dim > 5 {
        return Err(EngineError::MtDimensionOutOfScope(dim));
    }
    Ok(engine.mt_verdict())
}

/// Recomputes a verdict from `trace`, re-checking every rule premise against `c`.
pub fn replay(c: &Catalog, trace: &[RuleFiring]) -> Result<Verdict, EngineError> {
    let engine = Engine::new(c)?;
    engine.check_trace(trace).map_err(EngineError::Replay)?;
    summarize(&engine.distinct_labels(), trace.to_vec()).map_err(EngineError::Replay)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ec(l: &str) -> FactorDescriptor {
        FactorDescriptor::elliptic(l)
    }

    fn cat(fs: Vec<FactorDescriptor>) -> Catalog {
        Catalog::new(fs, FieldContext::char0())
    }

    fn fourfold_end_z() -> FactorDescriptor {
        FactorDescriptor::new("F", 4, AlbertType::I, 1, 1, 1)
    }

    #[test]
    fn rank_additivity() {
        assert!(rank_additivity_check((4, 4), &[3, 1]));
        assert!(!rank_additivity_check((3, 4), &[3, 1]));
    }

    #[test]
    fn pair_examples() {
        let c0 = FieldContext::char0();
        let v = decide_pair(&ec("E1"), &ec("E2"), &c0).unwrap();
        assert_eq!(v.splits, Splits::Yes);
        let v = decide_pair(&FactorDescriptor::cm("Y", 3), &FactorDescriptor::cm("E", 1), &c0).unwrap();
        assert_eq!(v.splits, Splits::Inconclusive);
        let cp = FieldContext::char_p(5, true);
        let v = decide_pair(&FactorDescriptor::cm("E1", 1), &FactorDescriptor::cm("E2", 1), &cp).unwrap();
        assert_eq!(v.splits, Splits::Inconclusive);
        let v = decide_pair(&FactorDescriptor::cm("E1", 1), &FactorDescriptor::cm("E2", 1), &c0).unwrap();
        assert_eq!(v.splits, Splits::Yes);
        assert_eq!(v.trace[0].rule, RuleId::SemisimpleTimesCm);
        assert!(matches!(v.trace[0].effect, Effect::Note));
    }

    #[test]
    fn product_examples() {
        let single = decide_product(&cat(vec![ec("E")])).unwrap();
        assert_eq!(single.splits, Splits::Yes);
        let ii6 = FactorDescriptor::new("A1", 6, AlbertType::II, 1, 2, 1);
        let iv3 = FactorDescriptor::new("A2", 3, AlbertType::IV, 2, 1, 1);
        let c = cat(vec![ii6.clone(), ec("E"), iv3.clone()]);
        let v = decide_product(&c).unwrap();
        assert_eq!(v.splits, Splits::Yes);
        assert_eq!(v.trace[0].rule, RuleId::Ichikawa);
        let cp = Catalog::new(vec![ii6, ec("E"), iv3], FieldContext::char_p(7, false));
        assert_eq!(decide_product(&cp).unwrap().splits, Splits::Inconclusive);
    }

    #[test]
    fn mt_examples() {
        let v = mt_verdict(&cat(vec![fourfold_end_z(), ec("E")])).unwrap();
        assert_eq!((v.splits, v.mt), (Splits::Yes, MtStatus::Inconclusive));
        let iv21 = FactorDescriptor::new("X", 4, AlbertType::IV, 4, 1, 2);
        let v = mt_verdict(&cat(vec![iv21, ec("E")])).unwrap();
        assert_eq!((v.splits, v.mt), (Splits::Yes, MtStatus::Holds));
        let five: Vec<_> = (1..=5).map(|i| ec(&format!("E{i}"))).collect();
        let v = mt_verdict(&cat(five)).unwrap();
        assert_eq!(v.mt, MtStatus::Holds);
        let v = mt_verdict(&cat(vec![fourfold_end_z()])).unwrap();
        assert_eq!(v.mt, MtStatus::Inconclusive);
        let shioda = mt_verdict(&cat(vec![FactorDescriptor::cm("Y", 3), FactorDescriptor::cm("E", 1)])).unwrap();
        assert_eq!((shioda.splits, shioda.mt), (Splits::Inconclusive, MtStatus::Holds));
    }

    #[test]
    fn mt_errors() {
        let big = cat(vec![FactorDescriptor::new("X", 6, AlbertType::I, 1, 1, 1)]);
        assert!(matches!(mt_verdict(&big), Err(EngineError::MtDimensionOutOfScope(6))));
        let p = Catalog::new(vec![ec("E")], FieldContext::char_p(3, true));
        assert_eq!(mt_verdict(&p), Err(EngineError::MtRequiresCharacteristicZero));
        let dup = cat(vec![ec("E"), ec("E")]);
        assert!(matches!(decide_product(&dup), Err(EngineError::InvalidCatalog(_))));
    }

    #[test]
    fn replay_roundtrip_and_tamper() {
        let c = cat(vec![fourfold_end_z(), ec("E")]);
        let v = mt_verdict(&c).unwrap();
        assert_eq!(replay(&c, &v.trace).unwrap(), v);
        let mut bad = v.trace.clone();
        bad.retain(|f| f.rule != RuleId::EndZFourfoldTimesCurve);
        bad.push(RuleFiring::new(
            RuleId::ProductImpliesMt,
            String::new(),
            Effect::MtHolds { labels: vec!["F".into(), "E".into()] },
        ));
        assert!(replay(&c, &bad).is_err());
    }
}
