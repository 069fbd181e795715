//! Symbolic models of connected reductive monodromy groups: a central torus
//! rank plus simple factors, each with its module of minuscule weights.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::albert::{validate, AlbertType, FactorDescriptor, FieldContext, Violation};
use crate::minuscule::{self, minuscule_dimension};
use crate::root_systems::{
    is_weight_automorphism_stable, normalize_weight, Family, RawSystem, SimpleRootSystem, WeightLabel,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LieModelError {
    #[error("descriptor `{label}` is invalid: {violations:?}")]
    InvalidDescriptor { label: String, violations: Vec<Violation> },
}

/// A simple factor with the isotypic decomposition of the module it acts on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactorAction {
    pub system: SimpleRootSystem,
    pub module: Vec<(WeightLabel, u32)>,
}

impl FactorAction {
    pub fn new(system: SimpleRootSystem, mut module: Vec<(WeightLabel, u32)>) -> Self {
        module.sort();
        FactorAction { system, module }
    }

    pub fn weights(&self) -> BTreeSet<WeightLabel> {
        self.module.iter().map(|(w, _)| *w).collect()
    }

    pub fn dimension(&self) -> u128 {
        self.module
            .iter()
            .map(|(w, m)| u128::from(*m) * minuscule_dimension(self.system, *w).unwrap_or(0))
            .sum()
    }

    /// Dimension of the commutant of this factor on its module.
    pub fn commutant_dimension(&self) -> u32 {
        self.module.iter().map(|(_, m)| m * m).sum()
    }

    pub fn is_well_formed(&self) -> bool {
        !self.module.is_empty()
            && self
                .module
                .iter()
                .all(|(w, m)| *m > 0 && w.index() >= 1 && w.index() <= self.system.rank())
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupModelCandidate {
    pub center_rank: u32,
    pub factors: Vec<FactorAction>,
    /// The factors do not act on separate summands; used for the triple
    /// tensor product model of a fourfold.
    #[serde(default, skip_serializing_if = "is_false")]
    pub tensor: bool,
}

impl GroupModelCandidate {
    pub fn new(center_rank: u32, mut factors: Vec<FactorAction>) -> Self {
        factors.sort();
        GroupModelCandidate { center_rank, factors, tensor: false }
    }

    pub fn torus(center_rank: u32) -> Self {
        Self::new(center_rank, Vec::new())
    }

    pub fn semisimple_rank(&self) -> u32 {
        self.factors.iter().map(|f| f.system.rank()).sum()
    }

    pub fn rank(&self) -> u32 {
        self.center_rank + self.semisimple_rank()
    }

    pub fn module_dimension(&self) -> u128 {
        if self.tensor {
            self.factors.iter().map(FactorAction::dimension).product()
        } else {
            self.factors.iter().map(FactorAction::dimension).sum()
        }
    }

    pub fn systems(&self) -> BTreeSet<SimpleRootSystem> {
        self.factors.iter().map(|f| f.system).collect()
    }

    /// Model of a product whose group is known to be the product of groups.
    pub fn product(models: &[&GroupModelCandidate]) -> GroupModelCandidate {
        let mut out = GroupModelCandidate::new(
            models.iter().map(|m| m.center_rank).sum(),
            models.iter().flat_map(|m| m.factors.iter().cloned()).collect(),
        );
        out.tensor = models.iter().any(|m| m.tensor);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSet {
    Candidates(Vec<GroupModelCandidate>),
    Unclassified { reason: String },
}

impl ModelSet {
    pub fn candidates(&self) -> Option<&[GroupModelCandidate]> {
        match self {
            ModelSet::Candidates(c) => Some(c),
            ModelSet::Unclassified { .. } => None,
        }
    }

    fn unclassified(reason: &str) -> ModelSet {
        ModelSet::Unclassified { reason: reason.to_string() }
    }
}

/// One simple factor shape with its total dimension and commutant dimension.
#[derive(Debug, Clone)]
struct Shape {
    action: FactorAction,
    dim: u128,
    comm: u32,
}

impl Shape {
    fn new(action: FactorAction) -> Self {
        Shape { dim: action.dimension(), comm: action.commutant_dimension(), action }
    }
}

enum CommutantBound {
    Exactly(u32),
    AtLeast(u32),
}

/// Multisets of shapes filling exactly `total` dimensions.
fn fill(shapes: &[Shape], total: u128, bound: CommutantBound) -> Vec<Vec<FactorAction>> {
    fn go(
        shapes: &[Shape],
        start: usize,
        left: u128,
        chosen: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(chosen.clone());
            return;
        }
        for i in start..shapes.len() {
            if shapes[i].dim <= left {
                chosen.push(i);
                go(shapes, i, left - shapes[i].dim, chosen, out);
                chosen.pop();
            }
        }
    }
    let mut picks = Vec::new();
    go(shapes, 0, total, &mut Vec::new(), &mut picks);
    picks
        .into_iter()
        .filter(|p| {
            let comm: u32 = p.iter().map(|&i| shapes[i].comm).sum();
            match bound {
                CommutantBound::Exactly(c) => comm == c,
                CommutantBound::AtLeast(c) => comm >= c,
            }
        })
        .map(|p| p.into_iter().map(|i| shapes[i].action.clone()).collect())
        .collect()
}

fn canonical_action(raw: RawSystem, r: u32, mult: u32) -> Option<FactorAction> {
    let (s, w) = normalize_weight(raw, r)?;
    Some(FactorAction::new(s, vec![(w, mult)]))
}

/// Copies of one weight with every multiplicity that fits.
fn isotypic_shapes(raw: RawSystem, r: u32, total: u128) -> Vec<Shape> {
    let mut out = Vec::new();
    let mut m = 1;
    while let Some(a) = canonical_action(raw, r, m) {
        let s = Shape::new(a);
        if s.dim == 0 || s.dim > total {
            break;
        }
        out.push(s);
        m += 1;
    }
    out
}

/// Every nonempty multiset of minuscule weights of `s` of total dimension at most `total`.
fn mixed_shapes(s: SimpleRootSystem, total: u128) -> Vec<Shape> {
    let weights: Vec<(WeightLabel, u128)> = minuscule::minuscule_weights(s)
        .into_iter()
        .filter_map(|w| minuscule_dimension(s, w).ok().map(|d| (w, d)))
        .collect();
    fn go(
        weights: &[(WeightLabel, u128)],
        i: usize,
        left: u128,
        current: &mut Vec<(WeightLabel, u32)>,
        out: &mut Vec<Vec<(WeightLabel, u32)>>,
    ) {
        if i == weights.len() {
            if !current.is_empty() {
                out.push(current.clone());
            }
            return;
        }
        go(weights, i + 1, left, current, out);
        let (w, d) = weights[i];
        let mut m = 1u32;
        while u128::from(m) * d <= left {
            current.push((w, m));
            go(weights, i + 1, left - u128::from(m) * d, current, out);
            current.pop();
            m += 1;
        }
    }
    let mut modules = Vec::new();
    go(&weights, 0, total, &mut Vec::new(), &mut modules);
    modules.into_iter().map(|m| Shape::new(FactorAction::new(s, m))).collect()
}

fn is_pow2(n: u32) -> bool {
    n.is_power_of_two()
}

/// Within the scope where classification input is available in positive characteristic
/// without ordinarity: type I or II of dimension 2 or odd.
fn product_surfaces_scope(f: &FactorDescriptor) -> bool {
    matches!(f.albert_type, AlbertType::I | AlbertType::II) && (f.dimension == 2 || f.dimension % 2 == 1)
}

/// Candidate models permitted by the classification results for `f`.
pub fn build_model_set(f: &FactorDescriptor, ctx: &FieldContext) -> Result<ModelSet, LieModelError> {
    let violations = validate(f, ctx);
    if !violations.is_empty() {
        return Err(LieModelError::InvalidDescriptor { label: f.label.clone(), violations });
    }
    if f.cm {
        return Ok(ModelSet::Candidates(vec![GroupModelCandidate::torus(f.e0)]));
    }
    if !ctx.is_char0() && !ctx.ordinary_reduction_dim1 && !product_surfaces_scope(f) {
        return Ok(ModelSet::unclassified(
            "positive characteristic without ordinary reduction in dimension 1",
        ));
    }
    let g = f.dimension;
    let two_g = 2 * u128::from(g);
    let h = f.relative_dimension_checked().expect("validated");
    let a1 = SimpleRootSystem::a(1);
    if g == 1 {
        return Ok(ModelSet::Candidates(vec![GroupModelCandidate::new(
            0,
            vec![FactorAction::new(a1, vec![(WeightLabel(1), 1)])],
        )]));
    }
    if f.has_trivial_endomorphisms() && g == 2 {
        return Ok(ModelSet::Candidates(vec![GroupModelCandidate::new(
            0,
            vec![FactorAction::new(SimpleRootSystem::b(2), vec![(WeightLabel(2), 1)])],
        )]));
    }
    if f.has_trivial_endomorphisms() && g == 4 {
        if !ctx.is_char0() {
            return Ok(ModelSet::unclassified("fourfold with End = Z outside characteristic 0"));
        }
        let sp8 = GroupModelCandidate::new(
            0,
            vec![FactorAction::new(SimpleRootSystem::c(4), vec![(WeightLabel(1), 1)])],
        );
        let mut sl2_cubed = GroupModelCandidate::new(
            0,
            vec![FactorAction::new(a1, vec![(WeightLabel(1), 1)]); 3],
        );
        sl2_cubed.tensor = true;
        return Ok(ModelSet::Candidates(vec![sp8, sl2_cubed]));
    }
    // Faltings: the commutant has dimension d²·e.
    let faltings = f.d * f.d * f.e;
    let mut candidates: BTreeSet<GroupModelCandidate> = BTreeSet::new();
    match f.albert_type {
        AlbertType::I | AlbertType::II if h % 2 == 1 || h == 2 => {
            let shapes = isotypic_shapes(RawSystem::new(Family::C, h), 1, two_g);
            for factors in fill(&shapes, two_g, CommutantBound::Exactly(faltings)) {
                candidates.insert(GroupModelCandidate::new(0, factors));
            }
        }
        AlbertType::III if h % 2 == 1 => {
            let mut shapes = Vec::new();
            if h >= 3 {
                shapes.extend(isotypic_shapes(RawSystem::new(Family::D, h), 1, two_g));
            }
            let mut l = 1;
            while minuscule::binomial(l + 1, l.div_ceil(2)).is_some_and(|d| d <= two_g) {
                if is_pow2(l + 1) {
                    shapes.extend(isotypic_shapes(RawSystem::new(Family::A, l), l.div_ceil(2), two_g));
                }
                l += 1;
            }
            for factors in fill(&shapes, two_g, CommutantBound::Exactly(faltings)) {
                candidates.insert(GroupModelCandidate::new(0, factors));
            }
        }
        AlbertType::IV if h % 2 == 1 => {
            let mut shapes = Vec::new();
            for l in 2..=2 * g {
                if !is_pow2(l + 1) && u128::from(l + 1) <= two_g {
                    shapes.extend(mixed_shapes(SimpleRootSystem::a(l), two_g));
                }
            }
            for factors in fill(&shapes, two_g, CommutantBound::AtLeast(faltings)) {
                for c in 1..=f.e0 {
                    candidates.insert(GroupModelCandidate::new(c, factors.clone()));
                }
            }
        }
        _ => {
            return Ok(ModelSet::unclassified(&format!(
                "no classification for type {} of relative dimension {h}",
                f.albert_type
            )))
        }
    }
    if candidates.is_empty() {
        return Ok(ModelSet::unclassified("no candidate satisfies the dimension constraints"));
    }
    Ok(ModelSet::Candidates(candidates.into_iter().collect()))
}

pub fn is_general_lefschetz(m: &GroupModelCandidate) -> bool {
    if m.center_rank != 0 || m.tensor {
        return false;
    }
    m.factors.iter().all(|fa| {
        let l = fa.system.rank();
        let expected = match fa.system.family() {
            Family::A if l % 2 == 1 => l.div_ceil(2),
            Family::A => return false,
            Family::B => l,
            Family::C | Family::D => 1,
        };
        fa.module.iter().all(|(w, _)| w.index() == expected)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HazamaReport {
    pub centers_trivial: bool,
    pub componentwise_faithful: bool,
    pub weights_stable: bool,
    pub failures: Vec<String>,
}

impl HazamaReport {
    pub fn holds(&self) -> bool {
        self.centers_trivial && self.componentwise_faithful && self.weights_stable
    }
}

/// The three structural hypotheses of the Hazama-type splitting theorem.
pub fn hazama_hypotheses_hold(m1: &GroupModelCandidate, m2: &GroupModelCandidate) -> HazamaReport {
    let mut failures = Vec::new();
    let centers_trivial = m1.center_rank == 0 && m2.center_rank == 0;
    if !centers_trivial {
        failures.push(format!("center ranks {} and {}", m1.center_rank, m2.center_rank));
    }
    let componentwise_faithful = [m1, m2]
        .iter()
        .all(|m| !m.tensor && m.factors.iter().all(FactorAction::is_well_formed));
    if !componentwise_faithful {
        failures.push("some factor does not act componentwise and faithfully".to_string());
    }
    let mut by_system: BTreeMap<SimpleRootSystem, (usize, BTreeSet<WeightLabel>)> = BTreeMap::new();
    for fa in m1.factors.iter().chain(&m2.factors) {
        let entry = by_system.entry(fa.system).or_default();
        entry.0 += 1;
        entry.1.extend(fa.weights());
    }
    let mut weights_stable = true;
    for (s, (count, weights)) in &by_system {
        if *count < 2 {
            continue;
        }
        if weights.len() != 1 {
            weights_stable = false;
            failures.push(format!("{s} occurs with several weights"));
            continue;
        }
        let w = *weights.iter().next().expect("one weight");
        if !is_weight_automorphism_stable(*s, w) {
            weights_stable = false;
            failures.push(format!("{w} of {s} is moved by a diagram automorphism"));
        }
    }
    HazamaReport { centers_trivial, componentwise_faithful, weights_stable, failures }
}

pub fn shares_simple_factor_type(m1: &GroupModelCandidate, m2: &GroupModelCandidate) -> bool {
    !m1.systems().is_disjoint(&m2.systems())
}
