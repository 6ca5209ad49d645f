use gtt_core::analysis::{expected_losses, asymmetric_bound, symmetric_bound};
use gtt_core::envs::{random_mdp, Transition};
use gtt_core::mdp::{bellman_operator, greedy_policy, optimal_q, policy_iteration};
use gtt_core::ode::{Learner, OdeModel};
use gtt_core::tabular::{agt2_ql_step, sgt2_ql_step};
use gtt_core::{seeded_rng, BehaviorDistribution, QPair, QTable, TabularMdp};
use proptest::prelude::*;
use rand::Rng;

fn mdp_strategy() -> impl Strategy<Value = TabularMdp> {
    (1usize..5, 1usize..4, 0.0f64..0.99, any::<u64>()).prop_map(|(s, a, g, seed)| random_mdp(s, a, g, seed).unwrap())
}

fn table(mdp: &TabularMdp, seed: u64, scale: f64) -> QTable {
    let mut rng = seeded_rng(seed);
    QTable::random(mdp.n_states(), mdp.n_actions(), -scale, scale, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bellman_is_a_gamma_contraction(mdp in mdp_strategy(), s1: u64, s2: u64) {
        let (q1, q2) = (table(&mdp, s1, 10.0), table(&mdp, s2, 10.0));
        let lhs = bellman_operator(&q1, &mdp).unwrap().sup_dist(&bellman_operator(&q2, &mdp).unwrap());
        prop_assert!(lhs <= mdp.gamma() * q1.sup_dist(&q2) + 1e-12);
    }

    #[test]
    fn optimal_q_is_fixed_point_and_agrees_with_policy_iteration(mdp in mdp_strategy()) {
        let q = optimal_q(&mdp, 1e-10);
        prop_assert!(bellman_operator(&q, &mdp).unwrap().sup_dist(&q) < 1e-9);
        let (_, q_pi) = policy_iteration(&mdp);
        prop_assert!(q.sup_dist(&q_pi) < 1e-8);
    }

    #[test]
    fn greedy_policy_is_scale_invariant(mdp in mdp_strategy(), seed: u64, c in 1e-3f64..1e3) {
        let q = table(&mdp, seed, 1.0);
        prop_assert_eq!(greedy_policy(&q), greedy_policy(&q.scaled(c)));
    }

    #[test]
    fn transition_times_policy_is_row_stochastic(mdp in mdp_strategy(), seed: u64) {
        let beh = BehaviorDistribution::uniform(mdp.n_states(), mdp.n_actions());
        let model = OdeModel::new(&mdp, &beh).unwrap();
        let pi = greedy_policy(&table(&mdp, seed, 1.0));
        let ppi = model.p_matrix() * pi.dense();
        for i in 0..ppi.nrows() {
            let row = ppi.row(i);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn tabular_steps_touch_only_the_visited_entry(
        mdp in mdp_strategy(), seed: u64, alpha in 0.0f64..1.0, beta in 0.01f64..10.0, done: bool,
    ) {
        let mut rng = seeded_rng(seed);
        let s = rng.random_range(0..mdp.n_states());
        let a = rng.random_range(0..mdp.n_actions());
        let t = Transition::new(s, a, rng.random(), mdp.sample_next(s, a, &mut rng), done);
        let pair = QPair::new(table(&mdp, seed ^ 1, 1.0), table(&mdp, seed ^ 2, 1.0)).unwrap();
        let i = pair.q_a.index(s, a);
        for symmetric in [false, true] {
            let mut p = pair.clone();
            if symmetric {
                sgt2_ql_step(&mut p, &t, alpha, beta, mdp.gamma()).unwrap();
            } else {
                agt2_ql_step(&mut p, &t, alpha, beta, mdp.gamma()).unwrap();
            }
            for j in (0..pair.q_a.len()).filter(|&j| j != i) {
                prop_assert_eq!(p.q_a.values()[j], pair.q_a.values()[j]);
                prop_assert_eq!(p.q_b.values()[j], pair.q_b.values()[j]);
            }
        }
    }

    #[test]
    fn bounds_grow_with_loss_and_shrink_with_beta(
        eps in 1e-6f64..1.0, d_eps in 1e-6f64..1.0, beta in 0.01f64..10.0, d_beta in 0.01f64..10.0,
        gamma in 0.0f64..0.99, n in 1usize..64,
    ) {
        let (a1, a2) = asymmetric_bound(eps, beta, gamma, n).unwrap();
        let (b1, b2) = asymmetric_bound(eps + d_eps, beta, gamma, n).unwrap();
        let (c1, c2) = asymmetric_bound(eps, beta + d_beta, gamma, n).unwrap();
        prop_assert!(b1 > a1 && b2 > a2);
        prop_assert!(c1 <= a1 && c2 <= a2);
        prop_assert!(a2 >= a1);
        prop_assert_eq!(symmetric_bound(eps, beta, gamma, n).unwrap(), a1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Monte Carlo over `s' ~ P(.|s, a)` for every pair, compared with the
    /// exact enumeration within five standard errors.
    #[test]
    fn expected_losses_agree_with_sampling(mdp in mdp_strategy(), seed: u64, beta in 0.1f64..5.0) {
        let pair = QPair::new(table(&mdp, seed, 2.0), table(&mdp, seed ^ 7, 2.0)).unwrap();
        let mut rng = seeded_rng(seed ^ 11);
        let samples = 4000;
        for learner in [Learner::Agt2, Learner::Sgt2] {
            let (l1, _) = expected_losses(&pair, &mdp, beta, learner).unwrap();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let n = mdp.n_pairs() as f64;
            for _ in 0..samples {
                // One draw of the pair-averaged residual.
                let mut draw = 0.0;
                for s in 0..mdp.n_states() {
                    for a in 0..mdp.n_actions() {
                        let s2 = mdp.sample_next(s, a, &mut rng);
                        let y = mdp.reward(s, a) + mdp.gamma() * pair.q_b.max(s2);
                        let qa = pair.q_a.get(s, a);
                        let mut v = (y - qa).powi(2);
                        if learner == Learner::Sgt2 {
                            v += 0.5 * beta * (qa - pair.q_b.get(s, a)).powi(2);
                        }
                        draw += v / n;
                    }
                }
                sum += draw;
                sum_sq += draw * draw;
            }
            let m = sum / samples as f64;
            let se = ((sum_sq / samples as f64 - m * m).max(0.0) / samples as f64).sqrt();
            // Deterministic rows give se = 0; the floor covers summation rounding.
            let tol = 5.0 * se + 1e-10 * l1.abs().max(1.0);
            prop_assert!((m - l1).abs() <= tol, "{learner}: mc {m} exact {l1} se {se}");
        }
    }
}
