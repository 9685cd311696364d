//! Property-based invariants of the controller, solvers and networks.

use difflab_core::nn::{Network, NetworkSpec, Padding};
use difflab_core::operators::*;
use difflab_core::refine::{replay, CheckpointSeed, Controller, Decision, RefineConfig};
use difflab_core::solvers::*;
use proptest::prelude::*;

fn config() -> impl Strategy<Value = RefineConfig> {
    (0.5f64..=1.0, 0.5f64..=1.0, 1usize..5, 1usize..10, 1usize..4, 1usize..5, 0usize..20, any::<bool>(), any::<bool>()).prop_map(
        |(tau_step, tau_stop, delta, ema_window, k0, delta_k, extra, grace, unbounded)| RefineConfig {
            tau_step,
            tau_stop,
            delta,
            ema_window,
            k0,
            delta_k,
            k_cap: k0 + extra,
            grace_after_refine: grace,
            checkpoint_seed: if unbounded { CheckpointSeed::Unbounded } else { CheckpointSeed::FirstValue },
            stop_is_final: true,
        },
    )
}

fn history() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3f64..10.0, 1..80)
}

proptest! {
    #[test]
    fn budget_is_monotone_bounded_and_granular(cfg in config(), h in history()) {
        let log = replay(cfg, &h).unwrap();
        let mut prev = cfg.k0;
        for rec in &log {
            prop_assert!(rec.k >= prev && rec.k <= cfg.k_cap);
            if rec.k != prev {
                prop_assert_eq!(rec.decision, Decision::Refine);
                prop_assert!(rec.k - prev == cfg.delta_k || rec.k == cfg.k_cap);
            }
            prev = rec.k;
        }
    }

    #[test]
    fn stop_is_permanent(cfg in config(), h in history()) {
        let log = replay(cfg, &h).unwrap();
        if let Some(first) = log.iter().position(|r| r.decision == Decision::Stop) {
            let k = log[first].k;
            for rec in &log[first..] {
                prop_assert_eq!(rec.decision, Decision::Stop);
                prop_assert_eq!(rec.k, k);
            }
        }
    }

    #[test]
    fn replay_is_deterministic_and_prefix_stable(cfg in config(), h in history(), cut in 0usize..80) {
        let a = replay(cfg, &h).unwrap();
        prop_assert_eq!(&a, &replay(cfg, &h).unwrap());
        let cut = cut.min(h.len());
        let b = replay(cfg, &h[..cut]).unwrap();
        prop_assert_eq!(&a[..cut], &b[..]);
    }

    #[test]
    fn smoothed_history_tracks_raw(cfg in config(), h in history()) {
        let mut c = Controller::new(cfg).unwrap();
        for &v in &h {
            c.observe(v).unwrap();
        }
        prop_assert_eq!(c.raw_history().len(), c.smoothed_history().len());
        let (lo, hi) = h.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        for &s in c.smoothed_history() {
            prop_assert!(s >= lo * (1.0 - 1e-12) && s <= hi * (1.0 + 1e-12));
        }
    }

    #[test]
    fn jacobi_residuals_decrease_on_heat(n in 3usize..20, nu in 1e-4f64..1e-2, dt in 0.1f64..2.0, seed in any::<u64>()) {
        let g = Grid::dirichlet(1, n).unwrap();
        let u = noise(seed, n);
        let p = assemble_heat_btcs(&g, nu, dt, &u).unwrap();
        let k = 200;
        let r = solve(SolverKind::Jacobi, &p, &SolveConfig::with_iterations(k)).unwrap();
        prop_assert!(r.iterations_used <= k);
        for w in r.residual_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert_eq!(r.converged, r.final_residual() < 1e-5);
        prop_assert!((relative_residual(&p, &r.solution).unwrap() - r.final_residual()).abs() < 1e-9);
    }

    #[test]
    fn steepest_descent_energy_error_decreases(n in 3usize..20, seed in any::<u64>()) {
        let g = Grid::dirichlet(2, n.min(8)).unwrap();
        let u = noise(seed, g.points());
        let p = assemble_heat_btcs(&g, 0.002, 1.0, &u).unwrap();
        let exact = direct_solve(&p).unwrap();
        let cfg = SolveConfig { max_iterations: 30, tolerance: 1e-14, gmres_restart: 1, store_iterates: true };
        let r = solve(SolverKind::SteepestDescent, &p, &cfg).unwrap();
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
            let ae = p.matvec(&e);
            e.iter().zip(&ae).map(|(a, b)| a * b).sum::<f64>()
        };
        let its = r.iterates.unwrap();
        for w in its.windows(2) {
            prop_assert!(energy(&w[1]) <= energy(&w[0]) * (1.0 + 1e-10) + 1e-300);
        }
    }

    #[test]
    fn gmres_restart_residuals_do_not_increase(n in 4usize..24, m in 1usize..5, seed in any::<u64>()) {
        let g = Grid::periodic(1, n).unwrap();
        let w = noise(seed, n);
        let p = assemble_burgers_oseen(&g, 0.001, 0.01, &w).unwrap();
        let cfg = SolveConfig { max_iterations: 50, tolerance: 1e-10, gmres_restart: m, store_iterates: false };
        let r = solve(SolverKind::Gmres, &p, &cfg).unwrap();
        for pair in r.residual_history.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn network_input_gradient_matches_differences(seed in 0u64..1000, conv in any::<bool>()) {
        let spec = if conv {
            NetworkSpec::ConvResNet { spatial_dim: 1, resolution: 6, channels_in: 1, channels_out: 1, blocks: 1, hidden_channels: 3, kernel_size: 3, padding: Padding::Circular }
        } else {
            NetworkSpec::Mlp { input: 6, output: 6, hidden_width: 5, hidden_layers: 2 }
        };
        let net = Network::<f64>::init(spec, seed).unwrap();
        let x = noise(seed ^ 0xabc, 6);
        let ybar = noise(seed ^ 0x123, 6);
        let (_, tape) = net.forward_tape(&x).unwrap();
        let mut grad = vec![0.0; net.param_count()];
        let xbar = net.backward(&tape, &ybar, &mut grad).unwrap();
        let f = |x: &[f64]| net.forward(x).unwrap().iter().zip(&ybar).map(|(a, b)| a * b).sum::<f64>();
        let f0 = f(&x);
        for i in 0..6 {
            let h = 1e-6;
            let mut p = x.clone();
            p[i] += h;
            let right = (f(&p) - f0) / h;
            p[i] -= 2.0 * h;
            let left = (f0 - f(&p)) / h;
            // one-sided slopes disagree only when a ReLU kink lies within h
            if (right - left).abs() > 1e-3 * (1.0 + right.abs()) {
                continue;
            }
            let fd = 0.5 * (left + right);
            prop_assert!((fd - xbar[i]).abs() < 1e-5 * (1.0 + fd.abs()), "i {} fd {} ad {}", i, fd, xbar[i]);
        }
    }
}

fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed | 1;
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

#[test]
fn golden_replay() {
    let text = include_str!("golden/controller_replay.txt");
    let rows: Vec<(usize, f64, &str, usize)> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2], f[3].parse().unwrap())
        })
        .collect();
    let cfg = RefineConfig {
        tau_step: 0.95,
        tau_stop: 0.9,
        delta: 3,
        ema_window: 1,
        k0: 1,
        delta_k: 2,
        k_cap: 6,
        grace_after_refine: false,
        checkpoint_seed: CheckpointSeed::FirstValue,
        stop_is_final: true,
    };
    let history: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let log = replay(cfg, &history).unwrap();
    for (rec, (interval, raw, decision, k)) in log.iter().zip(&rows) {
        assert_eq!(rec.interval, *interval);
        assert_eq!(rec.raw, *raw);
        assert_eq!(rec.decision.name(), *decision, "interval {interval}");
        assert_eq!(rec.k, *k, "interval {interval}");
    }
}

#[test]
fn boundary_ratios_are_exact() {
    let cfg = RefineConfig { tau_step: 0.5, tau_stop: 0.25, delta: 2, ema_window: 1, k0: 1, delta_k: 1, k_cap: 5, ..RefineConfig::default() };
    // r = 0.5 / 1 = τ_step exactly: hold
    let log = replay(cfg, &[1.0, 1.0, 0.5]).unwrap();
    assert_eq!(log[2].decision, Decision::Hold);
    // r = 1 > τ_step and r_c = 0.25 / 1 = τ_stop exactly: stop
    let log = replay(cfg, &[1.0, 0.25, 0.25]).unwrap();
    assert_eq!(log[2].r, Some(1.0));
    assert_eq!(log[2].r_c, Some(0.25));
    assert_eq!(log[2].decision, Decision::Stop);
    // r_c just below τ_stop refines
    let log = replay(cfg, &[1.0, 0.125, 0.125]).unwrap();
    assert_eq!(log[2].decision, Decision::Refine);
}
