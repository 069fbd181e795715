use std::sync::OnceLock;

use mtsplit::albert::{enumerate_valid, validate, AlbertType, FactorDescriptor, FieldContext};
use mtsplit::engine::{decide_product, mt_verdict, replay, Catalog, Effect, MtStatus, RuleFiring, RuleId, Splits, Verdict};
use mtsplit::lie_model::{build_model_set, is_general_lefschetz, ModelSet};
use mtsplit::minuscule::{
    catalog, duality_indicator, has_odd_dimensional_nontrivial_minuscule, minuscule_weights, Duality,
};
use mtsplit::oracle::{bracket_closure, builtin_fixtures, commutant, full_block_algebra, verify_ribet, ExactMatrix};
use mtsplit::root_systems::{
    diagram_automorphism_group, is_self_dual, normalize, phi0_preimage, short_root_restriction_sum, Family,
    RawSystem, RootSystemSum, SimpleRootSystem,
};
use proptest::prelude::*;

fn shapes() -> &'static [FactorDescriptor] {
    static SHAPES: OnceLock<Vec<FactorDescriptor>> = OnceLock::new();
    SHAPES.get_or_init(|| enumerate_valid(6, &FieldContext::char0()))
}

fn shapes_p() -> &'static [FactorDescriptor] {
    static SHAPES: OnceLock<Vec<FactorDescriptor>> = OnceLock::new();
    SHAPES.get_or_init(|| enumerate_valid(6, &FieldContext::char_p(3, true)))
}

fn build_catalog(pool: &[FactorDescriptor], picks: &[(usize, u32)], ctx: FieldContext) -> Catalog {
    let factors = picks
        .iter()
        .enumerate()
        .map(|(i, &(k, mult))| {
            let s = &pool[k % pool.len()];
            FactorDescriptor { label: format!("{}#{i}", s.label), ..s.clone() }.with_multiplicity(mult)
        })
        .collect();
    Catalog::new(factors, ctx)
}

fn context() -> impl Strategy<Value = FieldContext> {
    prop_oneof![
        Just(FieldContext::char0()),
        (prop::sample::select(vec![2u64, 3, 5, 7]), any::<bool>()).prop_map(|(p, o)| FieldContext::char_p(p, o)),
    ]
}

fn catalog_strategy(max_factors: usize) -> impl Strategy<Value = Catalog> {
    (context(), prop::collection::vec((any::<usize>(), 1u32..4), 1..=max_factors)).prop_map(|(ctx, picks)| {
        let pool = if ctx.is_char0() { shapes() } else { shapes_p() };
        build_catalog(pool, &picks, ctx)
    })
}

fn simple_system() -> impl Strategy<Value = SimpleRootSystem> {
    prop::sample::select(SimpleRootSystem::all_up_to(6))
}

fn root_sum(max_factors: usize) -> impl Strategy<Value = RootSystemSum> {
    prop::collection::vec(simple_system(), 0..=max_factors).prop_map(RootSystemSum::from_factors)
}

fn with_multiplicity_one(c: &Catalog) -> Catalog {
    let factors = c.factors.iter().map(|f| f.clone().with_multiplicity(1)).collect();
    Catalog::new(factors, c.context)
}

// Root systems.

#[test]
fn normalize_is_idempotent_up_to_rank_12() {
    // D1 is not semisimple and is rejected.
    assert!(normalize(RawSystem::new(Family::D, 1)).is_err());
    for family in Family::ALL {
        let first = if family == Family::D { 2 } else { 1 };
        for rank in first..=12 {
            let once = normalize(RawSystem::new(family, rank)).unwrap();
            for f in once.factors() {
                assert_eq!(normalize(f.raw()).unwrap(), RootSystemSum::single(*f));
            }
        }
    }
}

#[test]
fn canonical_forms_exclude_coincidences() {
    let banned = ["B1", "C1", "C2", "D2", "D3"];
    for s in SimpleRootSystem::all_up_to(12) {
        assert!(!banned.contains(&s.to_string().as_str()), "{s}");
    }
    for (family, rank) in [(Family::B, 1), (Family::C, 1), (Family::C, 2), (Family::D, 2), (Family::D, 3)] {
        assert!(SimpleRootSystem::new(family, rank).is_err());
    }
}

#[test]
fn diagram_automorphism_orders() {
    for s in SimpleRootSystem::all_up_to(12) {
        let expected = match (s.family(), s.rank()) {
            (Family::A, 1) => 1,
            (Family::A, _) => 2,
            (Family::B | Family::C, _) => 1,
            (Family::D, 4) => 6,
            (Family::D, _) => 2,
        };
        assert_eq!(diagram_automorphism_group(s).order, expected, "{s}");
    }
}

proptest! {
    #[test]
    fn restriction_is_idempotent(s in root_sum(4)) {
        let once = short_root_restriction_sum(&s);
        prop_assert_eq!(short_root_restriction_sum(&once), once);
    }

    #[test]
    fn preimage_is_sound(t in root_sum(3)) {
        let target = short_root_restriction_sum(&t);
        prop_assume!(target.total_rank() <= 6);
        let pre = phi0_preimage(&target, 7);
        prop_assert!(pre.contains(&t) || t.total_rank() > 7);
        for s in pre {
            prop_assert_eq!(short_root_restriction_sum(&s), target.clone());
            prop_assert!(s.total_rank() <= 7);
        }
    }

    #[test]
    fn sum_display_roundtrip(s in root_sum(5)) {
        let text = s.to_string();
        prop_assert_eq!(text.parse::<RootSystemSum>().unwrap(), s.clone());
        let json = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<RootSystemSum>(&json).unwrap(), s);
    }

    #[test]
    fn parser_canonicalizes_shuffled_input(mut parts in prop::collection::vec(simple_system(), 1..5)) {
        let sorted = RootSystemSum::from_factors(parts.clone());
        parts.reverse();
        let text: Vec<String> = parts.iter().map(|p| p.to_string().to_lowercase()).collect();
        prop_assert_eq!(text.join(" + ").parse::<RootSystemSum>().unwrap(), sorted);
    }

    // Minuscule data.

    #[test]
    fn parity_theorem(l in 1u32..=31) {
        let all_even = (1..=l).all(|r| mtsplit::minuscule::binomial(l + 1, r).unwrap().is_multiple_of(2));
        prop_assert_eq!(all_even, (l + 1).is_power_of_two());
        prop_assert_eq!(has_odd_dimensional_nontrivial_minuscule(SimpleRootSystem::a(l)), !all_even);
    }
}

#[test]
fn duality_consistency() {
    for e in catalog(12).unwrap() {
        let self_dual = is_self_dual(e.system, e.weight).unwrap();
        assert_eq!(e.duality == Duality::NotSelfDual, !self_dual, "{} {}", e.system, e.weight);
    }
    for l in 3..=12 {
        let c = SimpleRootSystem::c(l);
        assert_eq!(duality_indicator(c, c.weight(1).unwrap()).unwrap(), Duality::Symplectic);
    }
}

// Albert data.

#[test]
fn relative_dimension_round_trip() {
    for ctx in [FieldContext::char0(), FieldContext::char_p(5, false)] {
        for f in enumerate_valid(8, &ctx) {
            let h = f.relative_dimension().unwrap();
            assert_eq!(h * f.d * f.e0, f.dimension, "{}", f.label);
        }
    }
}

#[test]
fn validate_accepts_quantified_shapes() {
    let c0 = FieldContext::char0();
    let mut quantified = vec![
        FactorDescriptor::elliptic("E"),
        FactorDescriptor::new("II", 2, AlbertType::II, 1, 2, 1),
        FactorDescriptor::new("RM", 2, AlbertType::I, 2, 1, 2),
        FactorDescriptor::new("IV21", 4, AlbertType::IV, 4, 1, 2),
        FactorDescriptor::new("IV3", 3, AlbertType::IV, 2, 1, 1),
        FactorDescriptor::new("II6", 6, AlbertType::II, 1, 2, 1),
    ];
    for g in 1..=5 {
        quantified.push(FactorDescriptor::cm("cm", g));
        quantified.push(FactorDescriptor::new("endz", g, AlbertType::I, 1, 1, 1));
    }
    for f in quantified {
        assert!(validate(&f, &c0).is_empty(), "{}: {:?}", f.label, validate(&f, &c0));
    }
}

// Group models.

#[test]
fn model_invariants() {
    for ctx in [FieldContext::char0(), FieldContext::char_p(7, true)] {
        for f in enumerate_valid(6, &ctx) {
            let ModelSet::Candidates(cs) = build_model_set(&f, &ctx).unwrap() else { continue };
            let h = f.relative_dimension().unwrap();
            for c in &cs {
                for a in &c.factors {
                    for w in a.weights() {
                        assert!(minuscule_weights(a.system).contains(&w), "{}: {} {w}", f.label, a.system);
                    }
                }
                if f.cm {
                    assert!(c.factors.is_empty(), "{}", f.label);
                    continue;
                }
                if !c.tensor {
                    assert_eq!(c.module_dimension(), 2 * u128::from(f.dimension), "{}", f.label);
                }
                if h % 2 == 1 && f.albert_type != AlbertType::IV {
                    assert!(is_general_lefschetz(c), "{}", f.label);
                    assert!(c.factors.iter().all(|a| a.system != SimpleRootSystem::d(4)), "{}", f.label);
                }
                if h % 2 == 1 && f.albert_type == AlbertType::IV {
                    for a in &c.factors {
                        let l = a.system.rank();
                        assert_eq!(a.system.family(), Family::A);
                        assert!(!(l + 1).is_power_of_two());
                        assert!(has_odd_dimensional_nontrivial_minuscule(a.system));
                    }
                }
            }
        }
    }
}

#[test]
fn type_ii_surface_commutant_matches_quaternions() {
    let f = FactorDescriptor::new("S", 2, AlbertType::II, 1, 2, 1);
    let ms = build_model_set(&f, &FieldContext::char0()).unwrap();
    let c = &ms.candidates().unwrap()[0];
    assert_eq!(c.factors.len(), 1);
    assert_eq!(c.factors[0].system, SimpleRootSystem::a(1));
    assert_eq!(c.factors[0].module.iter().map(|m| m.1).sum::<u32>(), 2);
    // sl2 acting on Std + Std inside one 4-dimensional block.
    let e = ExactMatrix::from_integers(&[&[0, 1], &[0, 0]]).unwrap();
    let fm = ExactMatrix::from_integers(&[&[0, 0], &[1, 0]]).unwrap();
    let gens: Vec<ExactMatrix> = [e, fm].iter().map(|x| ExactMatrix::block_diagonal(&[x.clone(), x.clone()])).collect();
    let g = bracket_closure(&gens, &[4]).unwrap();
    assert_eq!(g.dimension(), 3);
    assert_eq!(commutant(&g).dimension as u32, f.d * f.d);
}

// Oracle.

#[test]
fn closure_is_idempotent() {
    for fx in builtin_fixtures() {
        let g = fx.algebra().unwrap();
        let again = bracket_closure(g.basis(), g.block_dims()).unwrap();
        assert_eq!(again.dimension(), g.dimension(), "{}", fx.name);
        let mut joint = g.basis().to_vec();
        joint.extend(fx.generators.iter().cloned());
        assert_eq!(bracket_closure(&joint, g.block_dims()).unwrap().dimension(), g.dimension());
    }
}

#[test]
fn lemma_soundness_on_fixtures() {
    for fx in builtin_fixtures() {
        let r = verify_ribet(&fx.algebra().unwrap()).report().cloned().expect("applicable");
        if r.condition_b1 && r.condition_b2 {
            assert!(r.conclusion, "{}", fx.name);
        }
        if r.condition_a {
            assert!(r.conclusion, "{}", fx.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn full_block_commutant_is_block_scalars(dims in prop::collection::vec(1usize..=3, 1..=3)) {
        let g = full_block_algebra(&dims).unwrap();
        prop_assert_eq!(commutant(&g).dimension, dims.len());
    }
}

// Engine.

fn mt5_catalogs() -> Vec<Catalog> {
    let pool = enumerate_valid(5, &FieldContext::char0());
    let mut out = Vec::new();
    fn go(pool: &[FactorDescriptor], start: usize, left: u32, acc: &mut Vec<(usize, u32)>, out: &mut Vec<Catalog>) {
        if !acc.is_empty() {
            out.push(build_catalog(pool, acc, FieldContext::char0()));
        }
        for i in start..pool.len() {
            let g = pool[i].dimension;
            for mult in 1..=left / g {
                acc.push((i, mult));
                go(pool, i, left - g * mult, acc, out);
                acc.pop();
            }
        }
    }
    go(&pool, 0, 5, &mut Vec::new(), &mut out);
    out
}

#[test]
fn mt_traces_replay() {
    for c in mt5_catalogs() {
        let v = mt_verdict(&c).unwrap();
        assert_eq!(replay(&c, &v.trace).unwrap(), v, "{:?}", c.labels());
    }
}

#[test]
fn cm_monotonicity() {
    for c in mt5_catalogs() {
        let v = mt_verdict(&c).unwrap();
        if v.mt != MtStatus::Holds {
            continue;
        }
        for g in 1..=5 - c.total_dimension().min(5) as u32 {
            let mut bigger = c.clone();
            bigger.factors.push(FactorDescriptor::cm("added-cm", g));
            assert_eq!(mt_verdict(&bigger).unwrap().mt, MtStatus::Holds, "{:?} + CM{g}", c.labels());
        }
    }
}

#[test]
fn replay_rejects_tampered_traces() {
    let c = Catalog::new(
        vec![FactorDescriptor::new("X", 3, AlbertType::I, 1, 1, 1), FactorDescriptor::elliptic("E")],
        FieldContext::char0(),
    );
    let v = mt_verdict(&c).unwrap();
    assert_eq!(v.mt, MtStatus::Holds);
    let without_split: Vec<RuleFiring> =
        v.trace.iter().filter(|f| !matches!(f.effect, Effect::Split { .. })).cloned().collect();
    assert!(replay(&c, &without_split).is_err());
    let mut relabeled = v.trace.clone();
    for f in relabeled.iter_mut() {
        if f.rule == RuleId::Ichikawa {
            f.rule = RuleId::DimAtMostTwo;
            f.anchor = RuleId::DimAtMostTwo.anchor().to_string();
        }
    }
    assert!(replay(&c, &relabeled).is_err());
    let mut forged = v.trace.clone();
    forged[0].anchor = "something else".to_string();
    assert!(replay(&c, &forged).is_err());
}

fn split_rules(v: &Verdict) -> Vec<RuleId> {
    v.trace.iter().filter(|f| matches!(f.effect, Effect::Split { .. })).map(|f| f.rule).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn decide_traces_replay(c in catalog_strategy(4)) {
        let v = decide_product(&c).unwrap();
        prop_assert_eq!(replay(&c, &v.trace).unwrap(), v);
    }

    #[test]
    fn multiplicity_invariance(c in catalog_strategy(4)) {
        let one = with_multiplicity_one(&c);
        prop_assert_eq!(decide_product(&c).unwrap(), decide_product(&one).unwrap());
        if c.context.is_char0() && c.total_dimension() <= 5 {
            prop_assert_eq!(mt_verdict(&c).unwrap(), mt_verdict(&one).unwrap());
        }
    }

    #[test]
    fn shioda_guard(dims in prop::collection::vec(1u32..=5, 2..=4), ctx in context()) {
        let factors = dims.iter().enumerate().map(|(i, &g)| FactorDescriptor::cm(&format!("C{i}"), g)).collect();
        let c = Catalog::new(factors, ctx);
        let v = decide_product(&c).unwrap();
        if v.splits == Splits::Yes {
            prop_assert!(ctx.is_char0());
            prop_assert!(dims.iter().all(|&g| g <= 2));
            for r in split_rules(&v) {
                prop_assert!(matches!(r, RuleId::DimAtMostTwo | RuleId::CmProducts), "{:?}", r);
            }
        }
    }

    #[test]
    fn verdict_json_roundtrip(c in catalog_strategy(3)) {
        let v = decide_product(&c).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        prop_assert_eq!(serde_json::from_str::<Verdict>(&json).unwrap(), v);
        let cj = serde_json::to_string(&c).unwrap();
        prop_assert_eq!(serde_json::from_str::<Catalog>(&cj).unwrap(), c.clone());
        for f in &c.factors {
            let ms = build_model_set(f, &c.context).unwrap();
            let mj = serde_json::to_string(&ms).unwrap();
            prop_assert_eq!(serde_json::from_str::<ModelSet>(&mj).unwrap(), ms);
        }
    }
}
