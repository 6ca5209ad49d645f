use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gtt_bench::{batch, mdp, network, pair, transitions};
use gtt_core::mdp::{bellman_operator, value_iteration};
use gtt_core::nn::dqn::{agt2_loss_grads, dqn_loss_grad, sgt2_loss_grads};
use gtt_core::ode::{Learner, OdeField, System};
use gtt_core::tabular::{agt2_ql_step, q_learning_step, sgt2_ql_step};
use gtt_core::BehaviorDistribution;

fn bellman(c: &mut Criterion) {
    let mut g = c.benchmark_group("bellman");
    for n in [10, 100] {
        let m = mdp(n, 4);
        let q = pair(&m).q_a;
        g.bench_with_input(BenchmarkId::new("operator", n), &n, |b, _| {
            b.iter(|| bellman_operator(black_box(&q), &m).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("value_iteration", n), &n, |b, _| {
            b.iter(|| value_iteration(black_box(&m), 1e-8))
        });
    }
    g.finish();
}

fn learner_steps(c: &mut Criterion) {
    let m = mdp(50, 4);
    let ts = transitions(&m, 1000);
    let start = pair(&m);
    let mut g = c.benchmark_group("learner_1000_steps");
    g.bench_function("q_learning", |b| {
        b.iter(|| {
            let mut q = start.q_a.clone();
            for t in &ts {
                q_learning_step(&mut q, t, 0.1, 0.9).unwrap();
            }
            q
        })
    });
    g.bench_function("agt2_ql", |b| {
        b.iter(|| {
            let mut p = start.clone();
            for t in &ts {
                agt2_ql_step(&mut p, t, 0.1, 1.0, 0.9).unwrap();
            }
            p
        })
    });
    g.bench_function("sgt2_ql", |b| {
        b.iter(|| {
            let mut p = start.clone();
            for t in &ts {
                sgt2_ql_step(&mut p, t, 0.1, 1.0, 0.9).unwrap();
            }
            p
        })
    });
    g.finish();
}

fn ode_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("ode_eval");
    for n in [2, 20] {
        let m = mdp(n, 3);
        let beh = BehaviorDistribution::uniform(n, 3);
        for learner in [Learner::Agt2, Learner::Sgt2] {
            let field = OdeField::from_mdp(learner, System::Original, &m, &beh, 1.0).unwrap();
            let x: Vec<f64> = (0..field.dim()).map(|i| (i as f64).sin()).collect();
            let mut out = vec![0.0; field.dim()];
            g.bench_function(BenchmarkId::new(learner.to_string(), n), |b| {
                b.iter(|| field.eval(black_box(&x), &mut out))
            });
        }
    }
    g.finish();
}

fn mlp(c: &mut Criterion) {
    let net = network(&[64, 64]);
    let target = net.clone();
    let bt = batch(64);
    let mut g = c.benchmark_group("mlp_batch64");
    g.bench_function("forward", |b| b.iter(|| net.forward(black_box(bt.obs.view())).unwrap()));
    g.bench_function("forward_backward", |b| {
        b.iter(|| {
            let cache = net.forward_cached(bt.obs.view()).unwrap();
            net.backward(&cache, cache.output().view()).unwrap()
        })
    });
    g.bench_function("dqn_loss_grad", |b| b.iter(|| dqn_loss_grad(&net, &target, &bt, 0.99).unwrap()));
    g.bench_function("agt2_loss_grads", |b| {
        b.iter(|| agt2_loss_grads(&net, &target, &bt, 1.0, 0.99).unwrap())
    });
    g.bench_function("sgt2_loss_grads", |b| {
        b.iter(|| sgt2_loss_grads(&net, &target, &bt, 1.0, 0.99).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bellman, learner_steps, ode_eval, mlp);
criterion_main!(benches);
