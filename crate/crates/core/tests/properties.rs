use std::collections::HashSet;

use proptest::prelude::*;

use snac::mssp::{build_model, count_nacs, CaseStudy, RowGroup};
use snac::oracle::{full_pair_count, min_nac_exhaustive, verify};
use snac::reduce::{run_snac, NacGraph};
use snac::scenario::{space_size, ScenarioSet, Tau};
use snac::uncertainty::{enumerate_event_lattice, EventVector, GradualParameter};

fn make_param(kind: u8, id: usize) -> GradualParameter {
    match kind {
        0 => GradualParameter::stage_failure(id, 2).unwrap(),
        1 => GradualParameter::stage_failure(id, 3).unwrap(),
        2 => GradualParameter::split_chain(
            id,
            &[
                vec![vec![1, 2, 3, 4]],
                vec![vec![1, 2], vec![3, 4]],
                vec![vec![1], vec![2], vec![3], vec![4]],
            ],
        )
        .unwrap(),
        _ => GradualParameter::stage_failure(id, 2).unwrap().with_schedule(vec![1, 2]).unwrap(),
    }
}

/// Small scenario sets over 2-3 parameters of mixed kinds.
fn small_set(max_scenarios: usize) -> impl Strategy<Value = ScenarioSet> {
    (prop::collection::vec(0u8..4, 2..=3), any::<u64>(), 1..=max_scenarios).prop_map(|(kinds, seed, n)| {
        let params: Vec<_> = kinds.iter().enumerate().map(|(i, &k)| make_param(k, i)).collect();
        let n = (n as u128).min(space_size(&params)) as u64;
        ScenarioSet::sample(params, n, seed).unwrap()
    })
}

/// Stage-failure only sets, as the planning model requires.
fn stage_set(drugs: usize, trials: u32, max_scenarios: usize) -> impl Strategy<Value = ScenarioSet> {
    (any::<u64>(), 1..=max_scenarios).prop_map(move |(seed, n)| {
        let params: Vec<_> = (0..drugs).map(|i| GradualParameter::stage_failure(i, trials).unwrap()).collect();
        let n = (n as u128).min(space_size(&params)) as u64;
        ScenarioSet::sample(params, n, seed).unwrap()
    })
}

fn refines(fine: &[Vec<usize>], coarse: &[Vec<usize>]) -> bool {
    fine.iter().all(|b| {
        coarse.iter().any(|c| {
            let c: HashSet<_> = c.iter().collect();
            b.iter().all(|x| c.contains(x))
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn snac_is_sufficient_necessary_and_minimum(set in small_set(6)) {
        let graph = run_snac(&set);
        let report = verify(&set, &graph, 6).unwrap();
        prop_assert!(report.sufficient, "violations: {:?}", report.violations);
        prop_assert!(report.all_necessary());
        prop_assert_eq!(report.min_cardinality, Some(graph.len()));
    }

    #[test]
    fn deeper_cuts_refine_partitions(set in small_set(8)) {
        let lattice = enumerate_event_lattice(set.params()).unwrap();
        let cuts: Vec<_> = lattice.iter().cloned().collect();
        for c in &cuts {
            let coarse = set.partition(c).unwrap();
            for d in cuts.iter().filter(|d| c.is_subset_of(d)) {
                let fine = set.partition(d).unwrap();
                prop_assert!(refines(&fine.blocks, &coarse.blocks), "{} vs {}", c, d);
            }
        }
    }

    #[test]
    fn lattice_shape(kinds in prop::collection::vec(0u8..4, 1..=3)) {
        let params: Vec<_> = kinds.iter().enumerate().map(|(i, &k)| make_param(k, i)).collect();
        let lattice = enumerate_event_lattice(&params).unwrap();
        let expected: usize = params.iter().map(|p| p.chain_length() as usize + 1).product();
        prop_assert_eq!(lattice.len(), expected);
        let orders: Vec<u32> = lattice.iter().map(EventVector::order).collect();
        prop_assert!(orders.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(lattice.iter().all(|c| c.is_valid_for(&params)));
        let distinct: HashSet<_> = lattice.iter().collect();
        prop_assert_eq!(distinct.len(), expected);
    }

    #[test]
    fn differentiators_decide_block_membership(set in small_set(8)) {
        let lattice = enumerate_event_lattice(set.params()).unwrap();
        for r in 0..set.len() {
            for s in r + 1..set.len() {
                let psi = set.differentiator_set(r, s).unwrap();
                prop_assert!(!psi.is_empty());
                for c in lattice.iter() {
                    let p = set.partition(c).unwrap();
                    let together = p.block_of(r) == p.block_of(s);
                    let separated = psi.events.iter().any(|&(param, q)| c.0[param] >= q);
                    prop_assert_eq!(together, !separated);
                }
            }
        }
    }

    #[test]
    fn tau_is_symmetric(set in small_set(8)) {
        let exogenous = set.params().iter().any(|p| p.is_exogenous());
        for r in 0..set.len() {
            for s in r + 1..set.len() {
                if !exogenous {
                    prop_assert!(set.tau(r, s).is_err());
                    continue;
                }
                let a = set.tau(r, s).unwrap();
                prop_assert_eq!(a, set.tau(s, r).unwrap());
                let same_exogenous = set
                    .params()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.is_exogenous())
                    .all(|(i, _)| set.outcomes(r)[i] == set.outcomes(s)[i]);
                match a {
                    Tau::Never => prop_assert!(same_exogenous),
                    Tau::At(t) => prop_assert!(!same_exogenous && t < 2),
                }
            }
        }
    }

    #[test]
    fn graphs_are_simple_and_no_larger_than_full(set in small_set(16)) {
        let graph = run_snac(&set);
        let n = set.len();
        prop_assert!(graph.len() as u64 <= full_pair_count(n as u64));
        let pairs: HashSet<_> = graph.pairs().map(|(a, b)| (a.min(b), a.max(b))).collect();
        prop_assert_eq!(pairs.len(), graph.len());
        prop_assert!(pairs.iter().all(|&(a, b)| a < b && b < n));
        prop_assert_eq!(run_snac(&set).to_text(true), graph.to_text(true));
    }

    #[test]
    fn text_formats_round_trip(set in small_set(16)) {
        let back = ScenarioSet::parse_text(set.params().to_vec(), &set.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), set.to_text());
        let graph = run_snac(&set);
        for provenance in [false, true] {
            let parsed = NacGraph::parse_text(&graph.to_text(provenance)).unwrap();
            prop_assert_eq!(parsed.pairs().collect::<Vec<_>>(), graph.pairs().collect::<Vec<_>>());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_distinct(seed in any::<u64>(), n in 1u64..=64) {
        let params: Vec<_> = (0..3).map(|i| GradualParameter::stage_failure(i, 3).unwrap()).collect();
        let a = ScenarioSet::sample(params.clone(), n, seed).unwrap();
        let b = ScenarioSet::sample(params, n, seed).unwrap();
        prop_assert_eq!(a.len() as u64, n);
        prop_assert_eq!(a.to_text(), b.to_text());
        let distinct: HashSet<_> = a.scenarios().iter().map(|s| s.outcomes.clone()).collect();
        prop_assert_eq!(distinct.len() as u64, n);
    }

    #[test]
    fn removing_any_edge_breaks_sufficiency(set in small_set(6)) {
        let graph = run_snac(&set);
        for k in 0..graph.len() {
            let report = verify(&set, &graph.without_edge(k), 0).unwrap();
            prop_assert!(!report.sufficient);
            prop_assert!(!report.violations.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nac_rows_match_closed_form(set in stage_set(3, 3, 10), full in any::<bool>()) {
        let case = CaseStudy::builtin("three-drug").unwrap();
        let graph = if full { NacGraph::complete(set.len()) } else { run_snac(&set) };
        let pairs: Vec<_> = graph.pairs().collect();
        let model = build_model(&case, &set, &pairs).unwrap();
        let counts = model.row_counts();
        prop_assert_eq!(counts.nac(), count_nacs(pairs.len() as u64, 3, 3, 12, set.len() as u64));
        prop_assert_eq!(counts.get(RowGroup::NacFirstPeriod), 3 * set.len() as u64);
        let total: f64 = model.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_minimum_never_beats_snac(set in stage_set(2, 2, 5)) {
        let (min, witness) = min_nac_exhaustive(&set, 6).unwrap();
        prop_assert_eq!(min, run_snac(&set).len());
        let graph = NacGraph::from_pairs(set.len(), witness).unwrap();
        prop_assert!(verify(&set, &graph, 0).unwrap().sufficient);
    }
}
