//! Shared fixtures for the integration and acceptance tests.
#![allow(dead_code)]

use coinmec::orra::learner::{LearnerConfig, QLearner};
use coinmec::orra::net::Mlp;
use coinmec::orra::replay::Transition;
use coinmec::rng;
use rand::Rng;

/// Largest relative error between backprop and central differences for
/// the loss `sum_o w_o y_o` on a small random ReLU net.
pub fn gradient_check(seed: u64) -> f64 {
    let mut r = rng::stream(seed, &[42]);
    let sizes = [4, 6, 5, 3];
    let mut net = Mlp::new(&sizes, &mut r);
    let x: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
    let weights = [(0usize, 0.7), (2usize, -1.3)];
    let loss = |net: &Mlp| {
        let y = net.forward(&x);
        weights.iter().map(|&(o, w)| w * y[o]).sum::<f64>()
    };
    let mut grad = vec![0.0; net.params().len()];
    let acts = net.hidden(&x);
    net.backward(&acts, &weights, &mut grad);

    let h = 1e-6;
    let mut worst = 0.0f64;
    for (i, &g) in grad.iter().enumerate() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = loss(&net);
        net.params_mut()[i] = orig - h;
        let down = loss(&net);
        net.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = g.abs().max(numeric.abs());
        if scale > 1e-7 {
            worst = worst.max((g - numeric).abs() / scale);
        }
    }
    worst
}

/// Loss after each of `steps` updates on a single terminal transition.
pub fn overfit_losses(steps: usize) -> Vec<f64> {
    let cfg = LearnerConfig {
        hidden: vec![32, 32],
        learn_rate: 1e-4,
        ..Default::default()
    };
    let mut l = QLearner::new(cfg, 3, 2, 4, 11);
    let t = Transition {
        state: vec![0.0, 1.0, 0.0],
        actions: vec![3, 1],
        head_rewards: vec![4.0, -3.0],
        reward: 1.0,
        next_state: vec![1.0, 0.0, 0.0],
        terminal: true,
    };
    let mut losses = vec![l.loss(&[&t])];
    for _ in 0..steps {
        l.train_on(&[&t]);
        losses.push(l.loss(&[&t]));
    }
    losses
}

/// Two-state, two-action deterministic MDP.
///
/// From state 0, action 0 pays 1 and moves to state 1; action 1 pays 0 and
/// stays. From state 1, action 0 pays 0 and moves to state 0; action 1
/// pays 2 and stays.
pub fn toy_step(s: usize, a: usize) -> (f64, usize) {
    match (s, a) {
        (0, 0) => (1.0, 1),
        (0, _) => (0.0, 0),
        (_, 0) => (0.0, 0),
        _ => (2.0, 1),
    }
}

/// Optimal action values by value iteration.
pub fn toy_optimal_q(discount: f64) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..2000 {
        let v = [q[0][0].max(q[0][1]), q[1][0].max(q[1][1])];
        for (s, row) in q.iter_mut().enumerate() {
            for (a, cell) in row.iter_mut().enumerate() {
                let (r, next) = toy_step(s, a);
                *cell = r + discount * v[next];
            }
        }
    }
    q
}

fn onehot(s: usize) -> Vec<f64> {
    let mut v = vec![0.0; 2];
    v[s] = 1.0;
    v
}

/// Trains on the toy MDP under a uniform behaviour policy and returns the
/// learned action values after `steps` updates.
pub fn toy_learned_q(steps: usize, seed: u64) -> [[f64; 2]; 2] {
    let cfg = LearnerConfig {
        hidden: vec![32],
        learn_rate: 5e-3,
        batch_size: 32,
        target_sync: 50,
        discount: 0.9,
        ..Default::default()
    };
    let mut l = QLearner::new(cfg, 2, 1, 2, seed);
    let mut r = rng::stream(seed, &[43]);
    let mut s = 0;
    for _ in 0..steps {
        let a = r.random_range(0..2);
        let (reward, next) = toy_step(s, a);
        l.remember(Transition {
            state: onehot(s),
            actions: vec![a],
            head_rewards: vec![reward],
            reward,
            next_state: onehot(next),
            terminal: false,
        });
        l.train_step();
        s = next;
    }
    let q0 = l.q_values(&onehot(0));
    let q1 = l.q_values(&onehot(1));
    [[q0[0], q0[1]], [q1[0], q1[1]]]
}

pub fn max_rel_err(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    let mut worst = 0.0f64;
    for s in 0..2 {
        for x in 0..2 {
            worst = worst.max((a[s][x] - b[s][x]).abs() / b[s][x].abs());
        }
    }
    worst
}
