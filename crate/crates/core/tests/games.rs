use proptest::prelude::*;
use spoa_core::bounds::{spoa_bound, UtilityRule, WelfareCurve};
use spoa_core::combinatorics::Label;
use spoa_core::error::GameError;
use spoa_core::games::*;
use spoa_core::rational::{int, ratio, Rational};

fn ring3() -> ResourceGame {
    ring_game(3, WelfareCurve::indicator(3)).unwrap()
}

fn all(n: usize, a: usize) -> JointAction {
    JointAction::uniform(n, a)
}

#[test]
fn ring_welfare_by_direct_count() {
    let g = ring3();
    assert_eq!(g.welfare(&all(3, 0)).unwrap(), int(3));
    assert_eq!(g.welfare(&all(3, 1)).unwrap(), int(6));
    assert_eq!(g.objective(&all(3, 1)).unwrap(), int(6));
}

#[test]
fn unused_resource_contributes_nothing() {
    let g = ResourceGame::new(
        vec![
            Resource {
                id: "a".into(),
                value: int(5),
            },
            Resource {
                id: "b".into(),
                value: int(7),
            },
        ],
        vec![vec![vec![0]]],
        WelfareCurve::indicator(1),
        None,
    )
    .unwrap();
    assert_eq!(g.welfare(&all(1, 0)).unwrap(), int(5));
}

#[test]
fn indicator_utility_over_identity_welfare() {
    let base = ring_game(3, WelfareCurve::identity(3)).unwrap();
    let mut json = base.to_json();
    json["utility"] = serde_json::json!(["0", "1", "1", "1"]);
    let g = ResourceGame::from_json_str(&json.to_string()).unwrap();
    assert_eq!(g.objective(&all(3, 1)).unwrap(), int(6));
    assert_eq!(g.welfare(&all(3, 1)).unwrap(), int(6));
}

#[test]
fn pair_of_ring_players_improves_jointly() {
    let g = ring3();
    let a = all(3, 0);
    let b = g.coalition_best_response(&a, &[0, 1]).unwrap();
    assert_eq!(b, JointAction(vec![1, 1, 0]));
    // Covered after the switch: r2, r3, s1, s2.
    assert_eq!(g.welfare(&b).unwrap(), int(4));
}

#[test]
fn uniquely_optimal_single_player_stays() {
    let g = ring3();
    let a = all(3, 1);
    assert_eq!(g.coalition_best_response(&a, &[2]).unwrap(), a);
}

#[test]
fn grand_coalition_reaches_optimum() {
    let g = ring3();
    let b = g.coalition_best_response(&all(3, 0), &[0, 1, 2]).unwrap();
    assert_eq!(g.welfare(&b).unwrap(), int(6));
}

#[test]
fn ring_equilibrium_levels() {
    let g = ring3();
    assert!(g.is_k_strong_ne(&all(3, 0), 1).unwrap().is_stable());
    match g.is_k_strong_ne(&all(3, 0), 2).unwrap() {
        Verdict::Improvable(d) => {
            assert_eq!(d.coalition.len(), 2);
            assert!(d.after > d.before);
        }
        Verdict::Stable => panic!("pair deviation exists"),
    }
    for k in 1..=3 {
        assert!(g.is_k_strong_ne(&all(3, 1), k).unwrap().is_stable());
    }
    assert!(matches!(
        g.is_k_strong_ne(&all(3, 0), 0),
        Err(GameError::CoalitionSize { .. })
    ));
    assert!(matches!(
        g.is_k_strong_ne(&all(3, 0), 4),
        Err(GameError::CoalitionSize { .. })
    ));
}

#[test]
fn ring_dynamics() {
    let g = ring3();
    let t = g
        .run_dynamics(&all(3, 0), 2, DynamicsMode::Deterministic, None)
        .unwrap();
    assert_eq!(t.final_welfare, int(6));
    let t = g
        .run_dynamics(&all(3, 0), 1, DynamicsMode::Deterministic, None)
        .unwrap();
    assert!(t.steps.is_empty());
    assert_eq!(t.final_action, all(3, 0));
    let t = g
        .run_dynamics(&all(3, 1), 3, DynamicsMode::Asynchronous, Some(3))
        .unwrap();
    assert!(t.steps.is_empty());
}

#[test]
fn asynchronous_dynamics_are_seeded() {
    let g = ring3();
    let a = g
        .run_dynamics(&all(3, 0), 2, DynamicsMode::Asynchronous, Some(7))
        .unwrap();
    let b = g
        .run_dynamics(&all(3, 0), 2, DynamicsMode::Asynchronous, Some(7))
        .unwrap();
    assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    assert!(g.is_k_strong_ne(&a.final_action, 2).unwrap().is_stable());
}

#[test]
fn ring_equilibrium_sets() {
    let g = ring3();
    let caps = BruteForceCaps::default();
    let full = g.enumerate_ksne(3, &caps).unwrap();
    assert!(!full.is_empty());
    for a in &full {
        assert_eq!(g.welfare(a).unwrap(), int(6));
    }
    assert!(g.enumerate_ksne(1, &caps).unwrap().contains(&all(3, 0)));
    assert_eq!(g.brute_force_spoa(1, &caps).unwrap(), ratio(1, 2));
    assert_eq!(g.brute_force_spoa(3, &caps).unwrap(), int(1));
}

#[test]
fn single_player_spoa_is_one() {
    let g = ResourceGame::new(
        vec![
            Resource {
                id: "a".into(),
                value: int(2),
            },
            Resource {
                id: "b".into(),
                value: int(3),
            },
        ],
        vec![vec![vec![0], vec![1]]],
        WelfareCurve::indicator(1),
        None,
    )
    .unwrap();
    assert_eq!(
        g.brute_force_spoa(1, &BruteForceCaps::default()).unwrap(),
        int(1)
    );
}

#[test]
fn state_cap_fails_loudly() {
    let g = ring3();
    let caps = BruteForceCaps {
        states: 7,
        permutations: 1,
    };
    assert!(matches!(
        g.enumerate_ksne(1, &caps),
        Err(GameError::TooLarge { required: 8, .. })
    ));
    assert!(matches!(
        g.deviation_sum_oracle(&all(3, 0), &all(3, 1), 1, &caps),
        Err(GameError::TooLarge { required: 3, .. })
    ));
}

#[test]
fn ring_labels() {
    let g = ring3();
    let theta = g.label_resources(&all(3, 0), &all(3, 1)).unwrap();
    assert_eq!(theta.get(&Label::new(1, 0, 1)), int(3));
    assert_eq!(theta.get(&Label::new(0, 0, 1)), int(3));
    assert_eq!(theta.support().count(), 2);
    let same = g.label_resources(&all(3, 0), &all(3, 0)).unwrap();
    assert!(same
        .support()
        .all(|(l, _)| l.eq_only == 0 && l.opt_only == 0));
}

#[test]
fn oracle_matches_expansion_on_ring() {
    let g = ring3();
    let theta = g.label_resources(&all(3, 0), &all(3, 1)).unwrap();
    let caps = BruteForceCaps::default();
    for zeta in 1..=3 {
        let direct = g
            .deviation_sum_oracle(&all(3, 0), &all(3, 1), zeta, &caps)
            .unwrap();
        assert_eq!(direct, theta.deviation_welfare(g.welfare_curve(), zeta));
    }
}

#[test]
fn two_player_ring_deviations_are_neutral() {
    let g = ring_game(2, WelfareCurve::indicator(2)).unwrap();
    let ne = all(2, 0);
    let w = g.welfare(&ne).unwrap();
    let sum = g
        .deviation_sum_oracle(&ne, &all(2, 1), 1, &BruteForceCaps::default())
        .unwrap();
    assert_eq!(sum, w * int(2));
}

#[test]
fn loader_reports_paths() {
    let bad = r#"{"resources":[{"id":"a","value":"1"}],"players":[{"actions":[["a"],["b"]]}],"welfare":["0","1"]}"#;
    match ResourceGame::from_json_str(bad) {
        Err(GameError::Invalid { path, .. }) => assert_eq!(path, "players[0].actions[1][0]"),
        other => panic!("unexpected {other:?}"),
    }
    let bad = r#"{"resources":[{"id":"a","value":"x"}],"players":[{"actions":[["a"]]}],"welfare":["0","1"]}"#;
    assert!(
        matches!(ResourceGame::from_json_str(bad), Err(GameError::Invalid { path, .. }) if path == "resources[0].value")
    );
    let bad = r#"{"resources":[{"id":"a","value":"1"}],"players":[{"actions":[["a"]]}],"welfare":["0","1","1"]}"#;
    assert!(
        matches!(ResourceGame::from_json_str(bad), Err(GameError::Invalid { path, .. }) if path == "welfare")
    );
    let bad =
        r#"{"resources":[{"id":"a","value":"1"}],"players":[{"actions":[]}],"welfare":["0","1"]}"#;
    assert!(
        matches!(ResourceGame::from_json_str(bad), Err(GameError::Invalid { path, .. }) if path == "players[0].actions")
    );
}

#[test]
fn json_round_trip() {
    let g = ring3();
    let back = ResourceGame::from_json_str(&g.to_json().to_string()).unwrap();
    assert_eq!(back, g);
}

fn small_game() -> impl Strategy<Value = ResourceGame> {
    (1usize..=3, 1usize..=4, any::<bool>()).prop_flat_map(|(n, m, indicator)| {
        let values = proptest::collection::vec(0i64..=4, m);
        let actions = proptest::collection::vec(
            proptest::collection::vec(proptest::collection::vec(any::<bool>(), m), 1..=2),
            n,
        );
        let curve = proptest::collection::vec((1i64..=6, 1i64..=3), n);
        (values, actions, curve).prop_map(move |(values, actions, curve)| {
            let resources = values
                .iter()
                .enumerate()
                .map(|(r, &v)| Resource {
                    id: format!("r{r}"),
                    value: int(v),
                })
                .collect();
            let actions = actions
                .into_iter()
                .map(|player| {
                    player
                        .into_iter()
                        .map(|mask| (0..m).filter(|&r| mask[r]).collect())
                        .collect()
                })
                .collect();
            let w = if indicator {
                WelfareCurve::indicator(n)
            } else {
                let mut values = vec![int(0)];
                values.extend(curve.iter().map(|&(p, q)| ratio(p, q)));
                WelfareCurve::new(values).unwrap()
            };
            ResourceGame::new(resources, actions, w, None).unwrap()
        })
    })
}

fn joint_actions(g: &ResourceGame) -> Vec<JointAction> {
    let mut out = vec![vec![]];
    for i in 0..g.players() {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..g.actions(i).len()).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(JointAction).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_matches_expansion(g in small_game()) {
        let caps = BruteForceCaps::default();
        let actions = joint_actions(&g);
        for ne in &actions {
            for opt in &actions {
                let theta = g.label_resources(ne, opt).unwrap();
                for zeta in 1..=g.players() {
                    let direct = g.deviation_sum_oracle(ne, opt, zeta, &caps).unwrap();
                    prop_assert_eq!(direct, theta.deviation_welfare(g.welfare_curve(), zeta));
                }
            }
        }
    }

    #[test]
    fn labels_scale_linearly(g in small_game()) {
        let mut json = g.to_json();
        for r in json["resources"].as_array_mut().unwrap() {
            let v: i64 = r["value"].as_str().unwrap().parse().unwrap();
            r["value"] = serde_json::json!((2 * v).to_string());
        }
        let doubled = ResourceGame::from_json_str(&json.to_string()).unwrap();
        let ne = JointAction::uniform(g.players(), 0);
        let opt = JointAction(g.players_last_actions());
        let a = g.label_resources(&ne, &opt).unwrap().scaled(&int(2));
        prop_assert_eq!(a, doubled.label_resources(&ne, &opt).unwrap());
    }

    #[test]
    fn dynamics_and_nesting(g in small_game(), seed in any::<u64>()) {
        let caps = BruteForceCaps::default();
        let n = g.players();
        let mut previous: Option<Vec<JointAction>> = None;
        for k in 1..=n {
            let start = JointAction::uniform(n, 0);
            for mode in [DynamicsMode::Deterministic, DynamicsMode::Asynchronous] {
                let t = g.run_dynamics(&start, k, mode, Some(seed)).unwrap();
                prop_assert!(g.is_k_strong_ne(&t.final_action, k).unwrap().is_stable());
                for s in &t.steps {
                    prop_assert!(s.new_objective > s.old_objective);
                }
                if mode == DynamicsMode::Deterministic {
                    let rounds = g.joint_action_count() as usize;
                    prop_assert!(t.steps.len() <= rounds * g.coalitions(k).len());
                }
            }
            let ksne = g.enumerate_ksne(k, &caps).unwrap();
            prop_assert!(!ksne.is_empty());
            if let Some(weaker) = &previous {
                for a in &ksne {
                    prop_assert!(weaker.contains(a));
                }
            }
            previous = Some(ksne);
        }
        let best = joint_actions(&g).into_iter().map(|a| g.welfare(&a).unwrap()).max().unwrap();
        let full: Vec<Rational> = previous.unwrap().iter().map(|a| g.welfare(a).unwrap()).collect();
        prop_assert!(full.iter().all(|w| *w == best));
    }

    #[test]
    fn brute_force_respects_bound(g in small_game()) {
        let caps = BruteForceCaps::default();
        for k in 1..=g.players() {
            let bound = spoa_bound(g.players(), g.welfare_curve(), k).unwrap();
            prop_assert!(g.brute_force_spoa(k, &caps).unwrap() >= bound.spoa);
        }
    }

    #[test]
    fn utility_scaling_keeps_equilibria(g in small_game(), p in 1i64..5, q in 1i64..5) {
        let caps = BruteForceCaps::default();
        let rule = UtilityRule::from(g.welfare_curve()).scaled(&ratio(p, q));
        let mut json = g.to_json();
        json["utility"] = serde_json::json!(rule.values().iter().map(spoa_core::rational::exact_string).collect::<Vec<_>>());
        let scaled = ResourceGame::from_json_str(&json.to_string()).unwrap();
        for k in 1..=g.players() {
            prop_assert_eq!(g.enumerate_ksne(k, &caps).unwrap(), scaled.enumerate_ksne(k, &caps).unwrap());
        }
    }
}

trait LastActions {
    fn players_last_actions(&self) -> Vec<usize>;
}

impl LastActions for ResourceGame {
    fn players_last_actions(&self) -> Vec<usize> {
        (0..self.players())
            .map(|i| self.actions(i).len() - 1)
            .collect()
    }
}
