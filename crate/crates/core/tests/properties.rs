use std::collections::HashSet;

use proptest::prelude::*;

use polarsim::dynamics::{run, DynamicsParams, UpdateRule};
use polarsim::graph::{elite_set, generate_scale_free, GraphSpec};
use polarsim::metrics::{aggregate_runs, time_to_max, RunTimeSeries};
use polarsim::population::{assign_parties, init_affect, right_count, Party, PopulationSpec};
use polarsim::survey::{aggregate_responses, Affiliation, Likert, SurveyResponse};

fn small_graph() -> impl Strategy<Value = GraphSpec> {
    (4usize..40, any::<u64>(), 2.1f64..3.5, 2.1f64..3.5).prop_flat_map(|(n, seed, gi, go)| {
        (0..=n * (n - 1) / 4).prop_map(move |m| GraphSpec {
            n,
            m,
            gamma_in: gi,
            gamma_out: go,
            seed,
        })
    })
}

fn series(values: Vec<f64>) -> RunTimeSeries<f64> {
    RunTimeSeries {
        ipa_mean: values.iter().map(|v| 50.0 + v / 2.0).collect(),
        opa_mean: values.iter().map(|v| 50.0 - v / 2.0).collect(),
        ap: values,
    }
}

fn likert() -> impl Strategy<Value = Likert> {
    prop_oneof![(1u8..=5).prop_map(Likert::Score), Just(Likert::DontKnow)]
}

fn response() -> impl Strategy<Value = SurveyResponse> {
    (
        0usize..3,
        prop::sample::select(vec!["A", "B", "C"]),
        any::<bool>(),
        likert(),
        likert(),
        0u8..=100,
    )
        .prop_map(|(party, outlet, recognized, trust, share, affect)| SurveyResponse {
            respondent_id: String::new(),
            party: [Affiliation::Dem, Affiliation::Rep, Affiliation::Ind][party],
            outlet: outlet.to_string(),
            recognized,
            trust: Some(trust),
            share: Some(share),
            affect: Some(affect),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graphs_are_simple(spec in small_graph()) {
        let g = generate_scale_free(&spec).unwrap();
        prop_assert_eq!(g.n(), spec.n);
        prop_assert_eq!(g.edge_count(), spec.m);
        let mut seen = HashSet::new();
        for &(u, v) in g.edges() {
            prop_assert_ne!(u, v);
            prop_assert!(seen.insert((u, v)));
        }
        prop_assert_eq!(g.in_degrees().iter().sum::<usize>(), spec.m);
        prop_assert_eq!(g.out_degrees().iter().sum::<usize>(), spec.m);
        let again = generate_scale_free(&spec).unwrap();
        prop_assert_eq!(again.edges(), g.edges());
    }

    #[test]
    fn stratum_counts_are_exact(spec in small_graph(), p_b in 0.0f64..=1.0, p_eb in 0.0f64..=1.0, seed: u64) {
        let g = generate_scale_free(&spec).unwrap();
        let elites = elite_set(&g).unwrap();
        let parties = assign_parties(&g, &elites, &PopulationSpec { p_b, p_eb, seed }).unwrap();
        let elite_right = elites.iter().filter(|&&v| parties[v as usize] == Party::Right).count();
        let all_right = parties.iter().filter(|&&p| p == Party::Right).count();
        prop_assert_eq!(elite_right, right_count(p_eb, elites.len()));
        prop_assert_eq!(all_right - elite_right, right_count(p_b, g.n() - elites.len()));
    }

    #[test]
    fn selective_runs_stay_bounded_and_monotone(
        spec in small_graph(),
        p_b in 0.0f64..=1.0,
        alpha in 1.0f64..20.0,
        p_e in 0.0f64..=1.0,
        p_re in 0.0f64..=1.0,
        seed: u64,
    ) {
        let g = generate_scale_free(&spec).unwrap();
        let parties = assign_parties(&g, &elite_set(&g).unwrap(), &PopulationSpec { p_b, p_eb: p_b, seed }).unwrap();
        let params = DynamicsParams::new(p_e, 1.0, p_re, alpha);
        let s = run(&g, init_affect::<f64>(&parties, seed), &params, 30, seed ^ 1).unwrap();
        prop_assert_eq!(s.len(), 31);
        for t in 0..s.len() {
            prop_assert!((50.0..=100.0).contains(&s.ipa_mean[t]));
            prop_assert!((0.0..=50.0).contains(&s.opa_mean[t]));
            if t > 0 {
                prop_assert!(s.ap[t] >= s.ap[t - 1]);
            }
        }
    }

    #[test]
    fn joint_runs_stay_bounded(spec in small_graph(), alpha in 1.0f64..20.0, seed: u64) {
        let g = generate_scale_free(&spec).unwrap();
        let parties = assign_parties(&g, &elite_set(&g).unwrap(), &PopulationSpec { p_b: 0.5, p_eb: 0.5, seed }).unwrap();
        let mut params = DynamicsParams::new(0.3, 1.0, 0.5, alpha);
        params.rule = UpdateRule::Joint;
        let s = run(&g, init_affect::<f64>(&parties, seed), &params, 20, seed).unwrap();
        for t in 0..s.len() {
            prop_assert!((50.0..=100.0).contains(&s.ipa_mean[t]));
            prop_assert!((0.0..=50.0).contains(&s.opa_mean[t]));
        }
    }

    #[test]
    fn label_swap_with_mirrored_slants_is_exact(spec in small_graph(), p_b in 0.0f64..=1.0, seed: u64) {
        let g = generate_scale_free(&spec).unwrap();
        let parties = assign_parties(&g, &elite_set(&g).unwrap(), &PopulationSpec { p_b, p_eb: 1.0 - p_b, seed }).unwrap();
        let swapped: Vec<Party> = parties.iter().map(|p| p.opposite()).collect();
        let params = DynamicsParams::new(0.2, 1.0, 0.5, 5.0);
        let mut mirrored = params;
        mirrored.mirror_slants = true;
        let a = run(&g, init_affect::<f64>(&parties, seed), &params, 25, seed).unwrap();
        let b = run(&g, init_affect::<f64>(&swapped, seed), &mirrored, 25, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn aggregate_ignores_run_order(
        runs in prop::collection::vec(prop::collection::vec(0.0f64..100.0, 12), 2..8),
        rotate in 0usize..8,
    ) {
        let forward: Vec<_> = runs.iter().cloned().map(series).collect();
        let mut permuted = forward.clone();
        permuted.reverse();
        let k = rotate % permuted.len();
        permuted.rotate_left(k);
        prop_assert_eq!(aggregate_runs(&forward).unwrap(), aggregate_runs(&permuted).unwrap());
    }

    #[test]
    fn time_to_max_monotone_in_fraction(ap in prop::collection::vec(0.0f64..100.0, 1..60), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        let (a, b) = (time_to_max(&ap, 100.0, lo), time_to_max(&ap, 100.0, hi));
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!(a <= b),
            (None, Some(_)) => prop_assert!(false, "lower threshold never reached"),
            _ => {}
        }
    }

    #[test]
    fn survey_rows_order_invariant(mut rows in prop::collection::vec(response(), 0..40), seed: u64) {
        let a = aggregate_responses(&rows, 4);
        let k = (seed as usize) % (rows.len() + 1);
        let k = k.min(rows.len());
        rows.rotate_left(k);
        rows.reverse();
        prop_assert_eq!(a, aggregate_responses(&rows, 4));
    }

    #[test]
    fn survey_party_swap_mirrors_columns(rows in prop::collection::vec(response(), 0..40)) {
        let swapped: Vec<SurveyResponse> = rows
            .iter()
            .cloned()
            .map(|mut r| {
                r.party = match r.party {
                    Affiliation::Dem => Affiliation::Rep,
                    Affiliation::Rep => Affiliation::Dem,
                    Affiliation::Ind => Affiliation::Ind,
                };
                r
            })
            .collect();
        let mut a = aggregate_responses(&rows, 4);
        let mut b = aggregate_responses(&swapped, 4);
        a.sort_by(|x, y| x.outlet.cmp(&y.outlet));
        b.sort_by(|x, y| x.outlet.cmp(&y.outlet));
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.n_dem, x.n_rep), (y.n_rep, y.n_dem));
            prop_assert_eq!((x.trust_dem, x.trust_rep), (y.trust_rep, y.trust_dem));
            prop_assert_eq!((x.share_dem, x.share_rep), (y.share_rep, y.share_dem));
            prop_assert_eq!((x.affect_dem, x.affect_rep), (y.affect_rep, y.affect_dem));
        }
    }
}
