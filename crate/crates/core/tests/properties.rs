use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use treelineage::automaton::compile_query;
use treelineage::circuit::{build_lineage_circuit, check_ddnnf, with_fanin_two, Circuit, LineageCircuit};
use treelineage::decomposition::{
    decompose_pathwidth, decompose_treewidth, tree_encode, validate_decomposition,
};
use treelineage::fixtures::{corpus_queries, parity_bdta, parity_instance};
use treelineage::model::{generate_instance, FactSet, Family, Instance, InstanceJson, ProbabilityValuation};
use treelineage::obdd::{compile_to_obdd, Obdd};
use treelineage::probability::{brute_force_circuit_probability, circuit_probability, ddnnf_probability};
use treelineage::query::{evaluate_on, Expr, InversionFreeExpression, UcqNeq};
use treelineage::unfold::{is_ranked, unfold};

fn random_instance(elements: usize, density: f64, seed: u64) -> Instance {
    generate_instance(&Family::Random {
        elements,
        relations: vec![("R".into(), 2, density), ("S".into(), 2, density / 2.0), ("T".into(), 1, 0.5)],
        seed,
    })
    .unwrap()
}

fn small_instance() -> impl Strategy<Value = Instance> {
    (2usize..6, 0.1f64..0.4, any::<u64>()).prop_filter_map("at most 10 facts", |(e, d, s)| {
        let inst = random_instance(e, d, s);
        (inst.len() <= 10).then_some(inst)
    })
}

fn query() -> impl Strategy<Value = UcqNeq> {
    let queries: Vec<UcqNeq> = corpus_queries().into_iter().map(|(_, q)| q).collect();
    prop::sample::select(queries)
}

fn lineage(q: &UcqNeq, inst: &Instance) -> LineageCircuit {
    let enc = tree_encode(inst, &decompose_treewidth(inst, None)).unwrap();
    build_lineage_circuit(&compile_query(q, enc.width()).unwrap(), &enc).unwrap()
}

fn probabilities(n: usize) -> impl Strategy<Value = ProbabilityValuation> {
    prop::collection::vec((0i64..=8, 1i64..=8), n).prop_map(|v| {
        ProbabilityValuation::new(
            v.into_iter()
                .map(|(a, b)| BigRational::new(BigInt::from(a.min(b)), BigInt::from(b)))
                .collect(),
        )
        .unwrap()
    })
}

fn agrees(c: &Circuit, o: &Obdd) -> bool {
    let n = c.fact_count();
    (0..1u64 << n).all(|m| {
        let v = FactSet::from_mask(m, n);
        c.evaluate(&v).unwrap() == o.evaluate(&v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decompositions_are_valid(inst in small_instance()) {
        let td = decompose_treewidth(&inst, None);
        validate_decomposition(&inst, &td, Some(td.width())).unwrap();
        let pd = decompose_pathwidth(&inst);
        prop_assert!(pd.width() >= td.width());
        validate_decomposition(&inst, &pd.into_tree(), None).unwrap();
    }

    #[test]
    fn encoding_places_each_fact_once(inst in small_instance()) {
        let enc = tree_encode(&inst, &decompose_treewidth(&inst, None)).unwrap();
        prop_assert!(enc.is_binary());
        let mut seen: Vec<usize> = enc.nodes().iter().filter_map(|n| n.fact_id.map(|f| f.0)).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..inst.len()).collect::<Vec<_>>());
        let decoded = enc.decode();
        prop_assert_eq!((decoded.len(), decoded.domain_size()), (inst.len(), inst.domain_size()));
        for i in enc.fact_nodes() {
            let f = enc.node(i).fact_id.unwrap();
            prop_assert_eq!(enc.witnessed_fact(i), Some(inst.fact(f).clone()));
        }
    }

    #[test]
    fn lineage_is_the_query_on_every_valuation(inst in small_instance(), q in query()) {
        let lc = lineage(&q, &inst);
        lc.circuit.check_decomposition(&lc.decomposition).unwrap();
        let n = inst.len();
        for m in 0..1u64 << n {
            let v = FactSet::from_mask(m, n);
            prop_assert_eq!(lc.circuit.evaluate(&v).unwrap(), evaluate_on(&q, &inst, &v));
        }
        prop_assert!(check_ddnnf(&lc.circuit).unwrap().is_ddnnf());
    }

    #[test]
    fn query_is_monotone(inst in small_instance(), q in query(), a in any::<u64>(), b in any::<u64>()) {
        let n = inst.len();
        let mask = (1u64 << n) - 1;
        let small = FactSet::from_mask(a & b & mask, n);
        let large = FactSet::from_mask((a | b) & mask, n);
        prop_assert!(!evaluate_on(&q, &inst, &small) || evaluate_on(&q, &inst, &large));
    }

    #[test]
    fn engines_agree((inst, pi) in small_instance().prop_flat_map(|i| { let n = i.len(); (Just(i), probabilities(n)) }), q in query()) {
        let lc = lineage(&q, &inst);
        let brute = brute_force_circuit_probability(&lc.circuit, &pi).unwrap();
        prop_assert_eq!(&circuit_probability(&lc.circuit, &lc.decomposition, &pi).unwrap(), &brute);
        prop_assert_eq!(&ddnnf_probability(&lc.circuit, &pi).unwrap(), &brute);
        let o = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();
        prop_assert_eq!(&o.probability(&pi).unwrap(), &brute);
    }

    #[test]
    fn obdd_is_canonical_and_equivalent(inst in small_instance(), q in query()) {
        let lc = lineage(&q, &inst);
        let o = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();
        prop_assert!(agrees(&lc.circuit, &o));
        o.check_canonical(16).unwrap();
        let back = Obdd::from_json(&o.to_json()).unwrap();
        prop_assert_eq!(back, o);
    }

    #[test]
    fn fanin_two_preserves_the_function(inst in small_instance(), q in query()) {
        let lc = lineage(&q, &inst);
        let (c, cd) = with_fanin_two(&lc.circuit, &lc.decomposition);
        c.check_decomposition(&cd).unwrap();
        prop_assert!(c.gates().iter().all(|g| g.inputs().len() <= 2));
        prop_assert_eq!(c.truth_table(), lc.circuit.truth_table());
    }

    #[test]
    fn circuit_json_round_trips(inst in small_instance(), q in query()) {
        let lc = lineage(&q, &inst);
        let (c, cd) = Circuit::from_json(&lc.circuit.to_json(Some(&lc.decomposition))).unwrap();
        prop_assert_eq!(c.truth_table(), lc.circuit.truth_table());
        prop_assert_eq!(cd.unwrap(), lc.decomposition);
    }

    #[test]
    fn instance_json_round_trips(inst in small_instance()) {
        let j = InstanceJson::from_instance(&inst, None);
        let text = serde_json::to_string(&j).unwrap();
        let back: InstanceJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_instance().unwrap().to_string(), inst.to_string());
    }

    #[test]
    fn fact_sets_round_trip(n in 1usize..64, mask in any::<u64>()) {
        let mask = if n == 64 { mask } else { mask & ((1u64 << n) - 1) };
        let s = FactSet::from_mask(mask, n);
        prop_assert_eq!(s.count(), mask.count_ones() as usize);
        let back = FactSet::from_indices(n, s.iter());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn parity_lineage_counts_odd_subsets(n in 1usize..12) {
        let inst = parity_instance(n);
        let enc = tree_encode(&inst, &decompose_pathwidth(&inst).into_tree()).unwrap();
        let lc = build_lineage_circuit(&parity_bdta(), &enc).unwrap();
        let o = compile_to_obdd(&lc.circuit, &lc.decomposition).unwrap();
        let labels = n.div_ceil(2) as u32;
        let edges = (n - 1) as u32;
        let expected = (1u64 << (labels - 1)) << edges;
        prop_assert_eq!(o.model_count(), num_bigint::BigUint::from(expected));
    }

    #[test]
    fn unfolding_is_a_ranked_forest(edges in prop::collection::btree_set((0usize..6, 0usize..6), 1..10)) {
        let mut inst = Instance::new(treelineage::model::Signature::new([("S", 2)]).unwrap());
        for (a, b) in edges {
            if a < b {
                inst.add_fact("S", &[format!("v{a}"), format!("v{b}")]).unwrap();
            }
        }
        prop_assume!(!inst.is_empty());
        let mut names: Vec<String> = inst.elements().map(|(_, n)| n.to_string()).collect();
        names.sort();
        inst.set_order(&names).unwrap();
        is_ranked(&inst).unwrap();
        let e = InversionFreeExpression::new(Expr::exists("x", Expr::exists("y", Expr::atom("S", &["x", "y"]))))
            .validate()
            .unwrap();
        let u = unfold(&inst, &e).unwrap();
        u.check(&inst).unwrap();
        prop_assert_eq!(u.instance.len(), inst.len());
        prop_assert!(u.height() <= 2);
    }
}
