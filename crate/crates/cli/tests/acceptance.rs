//! End-to-end acceptance checks for the decoder stack: incremental
//! bookkeeping against full recomputation, fast-path equivalence, cached
//! product and heap oracles, quaternary reductions and normalization,
//! classification against coset enumeration, the learned-schedule benefit
//! on the d=3 toric code, decimation accounting, and CLI determinism.
//!
//! Run with `--nocapture` to see one measurement line per check.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use qldpc_core::binary_decoder::{
    apply_hard_flip, decode_svns, init_state, recompute_residual, recompute_sigma, run_flooding,
    svns_update, ScheduleSource,
};
use qldpc_core::channel::{sample_bitflip, sample_depolarizing};
use qldpc_core::code_model::registry_code;
use qldpc_core::quaternary_decoder::{
    belief_from_scores, decode_qsvns, init_quat_state, log_likelihood, quat_svns_update, PAULIS,
};
use qldpc_core::scheduler_rl::train_binary;
use qldpc_core::{
    decode_fast, decode_gd, train_quat, trial_rng, wilson_interval, BitMatrix, BitVec, BpConfig,
    CheckCache, DepolPrior, GdConfig, GdTrace, InnerDecoder, OutcomeKind, QTable, QVariant,
    QuatProblem, Schedule, SchedulerHeap, TannerAdjacency, TrainConfig, DEFAULT_LLR_CLIP,
    DEFAULT_MAX_ITERS,
};

const Z95: f64 = 1.959963984540054;

fn toy_graphs() -> Vec<TannerAdjacency> {
    ["steane", "toric3"]
        .iter()
        .map(|name| {
            let code = registry_code(name).unwrap();
            TannerAdjacency::from_matrix(code.h_a())
        })
        .collect()
}

#[test]
fn a01_incremental_flip_bookkeeping_matches_full_recompute() {
    let graphs = toy_graphs();
    let mut rng = trial_rng(101, 0, 0);
    let started = Instant::now();
    let flips = 1000usize;
    for t in 0..flips {
        let adj = &graphs[t % graphs.len()];
        let n = adj.n_vars();
        let syn_bits: Vec<bool> = (0..adj.n_checks()).map(|_| rng.gen_bool(0.5)).collect();
        let syndrome = BitVec::from_bools(&syn_bits);
        let priors: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let mut state = init_state(adj, &syndrome, &priors, DEFAULT_LLR_CLIP);
        for k in 0..adj.n_edges() {
            state.msg_v2c[k] = rng.gen_range(-6.0..6.0);
            state.msg_c2v[k] = rng.gen_range(-6.0..6.0);
        }
        for i in 0..n {
            state.belief[i] = rng.gen_range(-6.0..6.0);
            state.hard.set(i, rng.gen_bool(0.5));
        }
        let (delta, w) = recompute_residual(adj, &syndrome, &state.hard);
        state.sigma = recompute_sigma(adj, &delta);
        state.delta = delta;
        state.w = w;

        let i = rng.gen_range(0..n);
        apply_hard_flip(&mut state, adj, i);

        let (want_delta, want_w) = recompute_residual(adj, &syndrome, &state.hard);
        let want_sigma = recompute_sigma(adj, &want_delta);
        assert_eq!(state.delta, want_delta, "residual diverged at flip {t}");
        assert_eq!(state.w, want_w, "weight diverged at flip {t}");
        assert_eq!(state.sigma, want_sigma, "sigma diverged at flip {t}");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "{flips} flips took {elapsed:?}, budget is 10s"
    );
    println!("{flips} random flips, zero mismatches, {elapsed:?}");
}

#[test]
fn a02_sigma_fixture_updates_bit_exactly_after_one_flip() {
    let h = BitMatrix::from_rows(&[
        vec![1, 1, 1, 0],
        vec![1, 0, 1, 1],
        vec![0, 1, 0, 0],
        vec![0, 0, 1, 0],
        vec![0, 0, 0, 1],
    ]);
    let adj = TannerAdjacency::from_matrix(&h);
    let syndrome = BitVec::from_bools(&[true, false, true, false, true]);
    let priors = vec![2.0; 4];
    let mut state = init_state(&adj, &syndrome, &priors, DEFAULT_LLR_CLIP);
    assert_eq!(state.delta, syndrome, "all-zero start leaves delta = s");
    assert_eq!(state.w, 3);
    assert_eq!(state.sigma, vec![1, 3, 1, 2]);

    apply_hard_flip(&mut state, &adj, 0);
    assert_eq!(state.sigma, vec![2, 2, 2, 3]);
    assert_eq!(
        state.delta,
        BitVec::from_bools(&[false, true, true, false, true])
    );
    assert_eq!(state.w, 3);
    println!("sigma (1,3,1,2) -> (2,2,2,3) after flipping variable 0, bit-exact");
}

#[test]
fn a03_fast_engine_replays_the_reference_greedy_decoder() {
    let mut compared = 0usize;
    for name in ["steane", "toric3"] {
        let code = registry_code(name).unwrap();
        let adj = TannerAdjacency::from_matrix(code.h_a());
        let n = code.n();
        let cfg = BpConfig {
            max_iters: DEFAULT_MAX_ITERS,
            llr_clip: DEFAULT_LLR_CLIP,
            schedule: Schedule::GreedyRlSvns,
        };
        let trained = train_binary(
            &adj,
            &TrainConfig {
                episodes: 10_000,
                seed: 31,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let zero = QTable::new(QVariant::Binary, adj.state_count(), n);
        for (pi, p) in [(0u64, 0.03f64), (1, 0.07)] {
            let q = ((1.0 - p) / p).ln().min(DEFAULT_LLR_CLIP);
            let priors = vec![q; n];
            for trial in 0..5_000u64 {
                let mut rng = trial_rng(32, pi, trial);
                let e = sample_bitflip(n, p, &mut rng);
                let syndrome = adj.syndrome_of(&e);
                for table in [&zero, &trained] {
                    let mut ref_trace = Default::default();
                    let mut src = ScheduleSource::Greedy(table);
                    let reference =
                        decode_svns(&adj, &syndrome, &priors, &cfg, &mut src, Some(&mut ref_trace));
                    let mut fast_trace = Default::default();
                    let fast =
                        decode_fast(&adj, table, &syndrome, &priors, &cfg, Some(&mut fast_trace));
                    assert_eq!(
                        ref_trace.steps, fast_trace.steps,
                        "{name} p={p} trial {trial}: action sequences diverged"
                    );
                    assert_eq!(reference, fast, "{name} p={p} trial {trial}: results diverged");
                    compared += 1;
                }
            }
        }
    }
    println!("{compared} decode pairs (2 codes x 2 p x 2 tables x 5000 frames), zero divergences");
}

#[test]
fn a04_cached_check_products_stay_within_relative_tolerance() {
    let code = registry_code("toric3").unwrap();
    let adj = TannerAdjacency::from_matrix(code.h_a());
    let mut rng = trial_rng(104, 0, 0);
    let msgs: Vec<f64> = (0..adj.n_edges()).map(|_| rng.gen_range(-6.0..6.0)).collect();
    let mut cache = CheckCache::new(&adj, &msgs);
    let direct = |cache: &CheckCache, j: usize| -> f64 {
        let mut p = 1.0;
        for &k in adj.check_edges(j) {
            p *= cache.x(k);
        }
        p
    };
    let rounds = 10_000usize;
    let mut worst = 0.0f64;
    for round in 0..rounds {
        for j in 0..adj.n_checks() {
            let &k = &adj.check_edges(j)[rng.gen_range(0..adj.check_degree(j))];
            let x_new = if round % 37 == 0 {
                rng.gen_range(-1e-13..1e-13)
            } else {
                rng.gen_range(-0.999..0.999)
            };
            cache.set_x(&adj, k, x_new);
        }
        for j in 0..adj.n_checks() {
            let want = direct(&cache, j);
            let got = cache.prod(j);
            if want == 0.0 {
                assert_eq!(got, 0.0, "round {round} check {j}");
            } else {
                let rel = (got - want).abs() / want.abs();
                worst = worst.max(rel);
                assert!(rel < 1e-9, "round {round} check {j}: relative error {rel:e}");
            }
        }
    }
    for j in 0..adj.n_checks() {
        cache.rebuild_check(&adj, j);
        let want = direct(&cache, j);
        assert_eq!(
            cache.prod(j).to_bits(),
            want.to_bits(),
            "check {j} not exact after forced rebuild"
        );
    }
    println!(
        "{rounds} ratio updates per check, worst relative error {worst:.3e}, exact after rebuild"
    );
}

#[test]
fn a05_scheduler_heap_extracts_the_linear_scan_argmax() {
    let mut rng = trial_rng(105, 0, 0);
    let mut extractions = 0usize;
    for frame in 0..100 {
        let n = rng.gen_range(1..=32usize);
        let mut heap = SchedulerHeap::new(n);
        let members: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(0.8)).collect();
        let quantize = |r: f64| (r * 4.0).round() / 4.0;
        let mut keys: Vec<f64> = (0..n).map(|_| quantize(rng.gen_range(-2.0..2.0))).collect();
        heap.rebuild(&members, |u| keys[u as usize]);
        let mut live = members.clone();
        while !live.is_empty() {
            for _ in 0..rng.gen_range(0..=2usize) {
                let u = live[rng.gen_range(0..live.len())];
                let key = quantize(rng.gen_range(-2.0..2.0));
                keys[u as usize] = key;
                heap.change_key(u, key);
            }
            // Highest key wins, equal keys go to the lowest variable index.
            let mut expected = live[0];
            for &u in &live[1..] {
                let (ku, kb) = (keys[u as usize], keys[expected as usize]);
                if ku > kb || (ku == kb && u < expected) {
                    expected = u;
                }
            }
            let got = heap.extract_max().expect("heap tracks live members");
            assert_eq!(got, expected, "frame {frame}: heap disagrees with linear scan");
            live.retain(|&u| u != got);
            extractions += 1;
        }
        assert_eq!(heap.extract_max(), None, "frame {frame}: heap should be empty");
    }
    println!("100 random frames, {extractions} extractions, all equal to the linear-scan argmax");
}

#[test]
fn a06_unit_kappa_streams_follow_standalone_binary_updates() {
    let code = registry_code("toric3").unwrap();
    let adj_a = TannerAdjacency::from_matrix(code.h_a());
    let adj_b = TannerAdjacency::from_matrix(code.h_b());
    let n = code.n();
    let p = 0.05;
    let prior = DepolPrior::unit_kappa(p).unwrap();
    let priors = vec![prior.mu_dep; n];
    let mut worst = 0.0f64;
    for t in 0..100u64 {
        let mut rng = trial_rng(106, 0, t);
        let e_a = sample_bitflip(n, p, &mut rng);
        let e_b = sample_bitflip(n, p, &mut rng);
        let s_a = adj_a.syndrome_of(&e_a);
        let s_b = adj_b.syndrome_of(&e_b);
        let prob = QuatProblem {
            adj_a: &adj_a,
            adj_b: &adj_b,
            s_a: &s_a,
            s_b: &s_b,
            priors_a: &priors,
            priors_b: &priors,
            prior: &prior,
        };
        let mut joint = init_quat_state(&prob, DEFAULT_LLR_CLIP);
        let mut solo_a = init_state(&adj_a, &s_a, &priors, DEFAULT_LLR_CLIP);
        let mut solo_b = init_state(&adj_b, &s_b, &priors, DEFAULT_LLR_CLIP);
        for _ in 0..120 {
            let i = rng.gen_range(0..n);
            let (flip_a, flip_b) = quat_svns_update(&mut joint, &prob, DEFAULT_LLR_CLIP, i);
            let solo_flip_a = svns_update(&mut solo_a, &adj_a, &s_a, &priors, DEFAULT_LLR_CLIP, i);
            let solo_flip_b = svns_update(&mut solo_b, &adj_b, &s_b, &priors, DEFAULT_LLR_CLIP, i);
            assert_eq!((flip_a, flip_b), (solo_flip_a, solo_flip_b), "frame {t}");
            for (joint_stream, solo) in [(&joint.a, &solo_a), (&joint.b, &solo_b)] {
                for k in 0..joint_stream.msg_v2c.len() {
                    let dv = (joint_stream.msg_v2c[k] - solo.msg_v2c[k]).abs();
                    let dc = (joint_stream.msg_c2v[k] - solo.msg_c2v[k]).abs();
                    worst = worst.max(dv).max(dc);
                    assert!(dv <= 1e-12 && dc <= 1e-12, "frame {t} edge {k}");
                }
                for i in 0..n {
                    let db = (joint_stream.belief[i] - solo.belief[i]).abs();
                    worst = worst.max(db);
                    assert!(db <= 1e-12, "frame {t} var {i}");
                }
            }
        }
        assert_eq!(joint.a.hard, solo_a.hard, "frame {t}: stream a decisions");
        assert_eq!(joint.b.hard, solo_b.hard, "frame {t}: stream b decisions");
    }
    println!("100 frames x 120 updates, per-stream trajectories within {worst:.3e} of standalone");
}

#[test]
fn a07_depolarizing_scores_and_beliefs_stay_normalized() {
    let mut rng = trial_rng(107, 0, 0);
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for percent in 1..=74u32 {
        let p = f64::from(percent) / 100.0;
        let prior = DepolPrior::new(p).unwrap();
        let total: f64 = PAULIS
            .iter()
            .map(|&q| {
                prior.kappa[q.index()]
                    * prior.pi_a[q.comp_a() as usize]
                    * prior.pi_b[q.comp_b() as usize]
            })
            .sum();
        assert!(
            (total - 1.0).abs() <= 1e-12,
            "p={p}: sum kappa_q pi_a pi_b = {total}"
        );
        for _ in 0..300 {
            let l_a = rng.gen_range(-DEFAULT_LLR_CLIP..DEFAULT_LLR_CLIP);
            let l_b = rng.gen_range(-DEFAULT_LLR_CLIP..DEFAULT_LLR_CLIP);
            let mut scores = [0.0f64; 4];
            for &q in &PAULIS {
                scores[q.index()] = prior.kappa[q.index()].ln() + log_likelihood(q, l_a, l_b);
            }
            let belief = belief_from_scores(&scores);
            let sum: f64 = belief.iter().sum();
            worst = worst.max((sum - 1.0).abs());
            assert!((sum - 1.0).abs() <= 1e-12, "p={p} l_a={l_a} l_b={l_b}: sum {sum}");
            for b in belief {
                assert!((0.0..=1.0).contains(&b), "p={p}: component {b} out of range");
            }
            pairs += 1;
        }
    }
    println!("74 priors, {pairs} LLR pairs, worst normalization error {worst:.3e}");
}

#[test]
fn a08_binary_classification_agrees_with_coset_enumeration() {
    let code = registry_code("steane").unwrap();
    let n = code.n();
    let h_b = code.h_b();
    let key = |v: &BitVec| -> u64 { (0..v.len()).map(|i| (v.get(i) as u64) << i).sum() };
    let mut rowspace = HashSet::new();
    for mask in 0..(1u32 << h_b.rows()) {
        let mut member = BitVec::zeros(n);
        for row in 0..h_b.rows() {
            if mask >> row & 1 == 1 {
                member.xor_assign(&h_b.row_vec(row));
            }
        }
        rowspace.insert(key(&member));
    }
    assert_eq!(rowspace.len(), 8, "steane stabilizer rows are independent");

    let zeros = BitVec::zeros(n);
    let mut trivial = 0usize;
    for r in 0..(1u64 << n) {
        let residual = BitVec::from_int(r, n);
        let want_trivial = rowspace.contains(&key(&residual));
        let got = code.classify_binary(&residual, &zeros, true);
        let want = if want_trivial {
            OutcomeKind::Converged
        } else {
            OutcomeKind::LogicalError
        };
        assert_eq!(got, want, "residual {r:07b}");
        assert_eq!(
            code.classify_binary(&residual, &zeros, false),
            OutcomeKind::NonConvergence,
            "residual {r:07b} without convergence"
        );
        trivial += want_trivial as usize;
    }
    println!("all 128 residuals agree with coset enumeration ({trivial} trivial, 120 logical)");
}

#[test]
fn a09_learned_schedule_holds_fer_and_cuts_iterations() {
    let started = Instant::now();
    let code = registry_code("toric3").unwrap();
    let adj_a = TannerAdjacency::from_matrix(code.h_a());
    let adj_b = TannerAdjacency::from_matrix(code.h_b());
    let n = code.n();
    let table = train_quat(
        &adj_a,
        &adj_b,
        &TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        },
    )
    .unwrap();

    let p = 0.05;
    let frames = 100_000usize;
    let eval_seed = 3u64;
    let prior = DepolPrior::new(p).unwrap();
    let priors = vec![prior.mu_dep; n];
    let greedy_cfg = BpConfig {
        max_iters: 12,
        llr_clip: DEFAULT_LLR_CLIP,
        schedule: Schedule::GreedyRlSvns,
    };
    let random_cfg = BpConfig {
        max_iters: 12,
        llr_clip: DEFAULT_LLR_CLIP,
        schedule: Schedule::RandomSvns,
    };

    // (failures, iteration sum, iteration square sum) per decoder.
    let mut stats = [(0usize, 0.0f64, 0.0f64); 2];
    for trial in 0..frames {
        for which in 0..2 {
            let mut rng = trial_rng(eval_seed, 0, trial as u64);
            let e = sample_depolarizing(n, p, &mut rng);
            let s_a = adj_a.syndrome_of(&e.e_a);
            let s_b = adj_b.syndrome_of(&e.e_b);
            let prob = QuatProblem {
                adj_a: &adj_a,
                adj_b: &adj_b,
                s_a: &s_a,
                s_b: &s_b,
                priors_a: &priors,
                priors_b: &priors,
                prior: &prior,
            };
            let out = if which == 0 {
                let mut src = ScheduleSource::Greedy(&table);
                decode_qsvns(&prob, &greedy_cfg, &mut src, None)
            } else {
                let mut src = ScheduleSource::Random(&mut rng);
                decode_qsvns(&prob, &random_cfg, &mut src, None)
            };
            let fail = code.classify_quaternary(&e, &out.frame, out.converged)
                != OutcomeKind::Converged;
            stats[which].0 += fail as usize;
            stats[which].1 += out.iterations as f64;
            stats[which].2 += (out.iterations as f64) * (out.iterations as f64);
        }
    }

    let summarize = |s: &(usize, f64, f64)| {
        let (lo, hi) = wilson_interval(s.0, frames);
        let mean = s.1 / frames as f64;
        let var = s.2 / frames as f64 - mean * mean;
        let half = Z95 * (var / frames as f64).sqrt();
        (s.0, lo, hi, mean, mean - half, mean + half)
    };
    let (k_rl, fer_lo_rl, fer_hi_rl, it_rl, it_lo_rl, it_hi_rl) = summarize(&stats[0]);
    let (k_rd, fer_lo_rd, fer_hi_rd, it_rd, it_lo_rd, it_hi_rd) = summarize(&stats[1]);
    println!(
        "learned:  fer {:.5} [{fer_lo_rl:.5},{fer_hi_rl:.5}]  iters {it_rl:.4} [{it_lo_rl:.4},{it_hi_rl:.4}]",
        k_rl as f64 / frames as f64
    );
    println!(
        "random:   fer {:.5} [{fer_lo_rd:.5},{fer_hi_rd:.5}]  iters {it_rd:.4} [{it_lo_rd:.4},{it_hi_rd:.4}]",
        k_rd as f64 / frames as f64
    );

    let iter_verdict = if it_hi_rl < it_lo_rd {
        "decisively fewer iterations (disjoint 95% intervals)"
    } else if stats[0].1 == stats[1].1 {
        "exactly tied iteration counts"
    } else {
        panic!(
            "learned schedule failed the iteration clause: [{it_lo_rl:.4},{it_hi_rl:.4}] vs [{it_lo_rd:.4},{it_hi_rd:.4}]"
        );
    };
    let fer_verdict = if fer_hi_rl < fer_lo_rd {
        "decisively lower FER (disjoint 95% intervals)"
    } else if fer_lo_rl > fer_hi_rd {
        panic!(
            "learned schedule has decisively higher FER: [{fer_lo_rl:.5},{fer_hi_rl:.5}] vs [{fer_lo_rd:.5},{fer_hi_rd:.5}]"
        );
    } else {
        "statistically tied FER (overlapping 95% intervals)"
    };
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1800.0,
        "train + paired eval took {elapsed:?}, budget is 30 minutes"
    );
    println!("verdict: {iter_verdict}; {fer_verdict}; total {elapsed:?}");
}

// Decimation reimplemented as a plain loop: fresh flooding start per block,
// freeze the largest |L| among untouched variables toward its decision.
fn naive_gd(
    adj: &TannerAdjacency,
    syndrome: &BitVec,
    priors: &[f64],
    cfg: &GdConfig,
) -> (BitVec, bool, usize, Vec<(u32, bool)>) {
    let n = adj.n_vars();
    let bp = BpConfig {
        max_iters: cfg.inner_iters,
        llr_clip: cfg.llr_clip,
        schedule: Schedule::Flooding,
    };
    let mut working = priors.to_vec();
    let mut pinned: Vec<(u32, bool)> = Vec::new();
    let mut frozen = vec![false; n];
    let mut blocks = 0usize;
    loop {
        blocks += 1;
        let mut state = init_state(adj, syndrome, &working, cfg.llr_clip);
        let (converged, _) = run_flooding(&mut state, adj, syndrome, &working, &bp);
        if converged || pinned.len() == n {
            return (state.hard, converged, blocks, pinned);
        }
        let mut best = 0usize;
        let mut best_mag = f64::NEG_INFINITY;
        for i in 0..n {
            if !frozen[i] && state.belief[i].abs() > best_mag {
                best_mag = state.belief[i].abs();
                best = i;
            }
        }
        let bit = state.hard.get(best);
        working[best] = if bit {
            -cfg.freeze_magnitude
        } else {
            cfg.freeze_magnitude
        };
        frozen[best] = true;
        pinned.push((best as u32, bit));
    }
}

#[test]
fn a10_decimation_blocks_match_hand_traces_and_a_naive_mirror() {
    let steane = registry_code("steane").unwrap();
    let adj7 = TannerAdjacency::from_matrix(steane.h_a());
    let toric = registry_code("toric3").unwrap();
    let adj18 = TannerAdjacency::from_matrix(toric.h_a());
    let cfg = GdConfig {
        inner: InnerDecoder::Flooding,
        inner_iters: 5,
        ..GdConfig::default()
    };

    // Zero syndrome: one block, zero iterations, nothing frozen.
    let priors7 = vec![2.0; 7];
    let mut trace = GdTrace::default();
    let out = decode_gd(&adj7, None, &BitVec::zeros(3), &priors7, &cfg, Some(&mut trace));
    assert!(out.converged);
    assert_eq!((out.decimations, out.iterations), (1, 0));
    assert_eq!(trace.blocks.len(), 1);
    assert_eq!(
        (trace.blocks[0].iterations, trace.blocks[0].w_after, trace.blocks[0].frozen),
        (0, 0, None)
    );

    // Satisfiable syndrome: converges within the first block, nothing frozen.
    let e0 = BitVec::from_int(1, 7);
    let s0 = adj7.syndrome_of(&e0);
    let mut trace = GdTrace::default();
    let out = decode_gd(&adj7, None, &s0, &priors7, &cfg, Some(&mut trace));
    assert!(out.converged);
    assert_eq!(out.decimations, 1);
    assert_eq!(adj7.syndrome_of(&out.e_hat), s0);
    assert_eq!(trace.blocks[0].frozen, None);

    // Unsatisfiable weight-1 toric syndrome: every variable gets frozen,
    // every block burns the full budget, and the run stops at n+1 blocks.
    let n = adj18.n_vars();
    let mut s1 = BitVec::zeros(adj18.n_checks());
    s1.set(0, true);
    let priors18 = vec![2.0; n];
    let mut trace = GdTrace::default();
    let out = decode_gd(&adj18, None, &s1, &priors18, &cfg, Some(&mut trace));
    assert!(!out.converged);
    assert_eq!(out.decimations, n + 1);
    assert_eq!(out.iterations, (n + 1) * cfg.inner_iters);
    assert_eq!(trace.blocks.len(), n + 1);
    let mut seen = vec![false; n];
    for block in &trace.blocks[..n] {
        assert_eq!(block.iterations, cfg.inner_iters);
        assert!(block.w_after > 0);
        let (v, bit) = block.frozen.expect("every non-terminal block freezes");
        assert!(!seen[v as usize], "variable {v} frozen twice");
        seen[v as usize] = true;
        assert_eq!(
            out.e_hat.get(v as usize),
            bit,
            "frozen variable {v} changed its decision"
        );
    }
    assert!(seen.iter().all(|&s| s));
    assert_eq!(trace.blocks[n].frozen, None);

    // Randomized frames against the naive reimplementation.
    let tight = GdConfig {
        inner: InnerDecoder::Flooding,
        inner_iters: 1,
        ..GdConfig::default()
    };
    let mut rng = trial_rng(110, 0, 0);
    let mut frames = 0usize;
    for _ in 0..200 {
        let e = sample_bitflip(7, 0.3, &mut rng);
        let s = adj7.syndrome_of(&e);
        let mut trace = GdTrace::default();
        let out = decode_gd(&adj7, None, &s, &priors7, &tight, Some(&mut trace));
        let (want_hard, want_conv, want_blocks, want_pins) =
            naive_gd(&adj7, &s, &priors7, &tight);
        assert_eq!(out.e_hat, want_hard);
        assert_eq!(out.converged, want_conv);
        assert_eq!(out.decimations, want_blocks);
        assert!(out.decimations <= 8, "more than n+1 blocks");
        let pins: Vec<(u32, bool)> =
            trace.blocks.iter().filter_map(|b| b.frozen).collect();
        assert_eq!(pins, want_pins);
        for (v, bit) in pins {
            assert_eq!(out.e_hat.get(v as usize), bit);
        }
        frames += 1;
    }
    println!("hand-traced zero/satisfiable/unsatisfiable cases and {frames} mirrored frames agree");
}

fn qldpc(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_qldpc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "qldpc {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn a11_cli_runs_are_byte_identical_across_reruns_and_threads() {
    let root = tempfile::tempdir().unwrap();
    let r1 = root.path().join("r1");
    let r2 = root.path().join("r2");
    std::fs::create_dir_all(&r1).unwrap();
    std::fs::create_dir_all(&r2).unwrap();

    let commands: Vec<Vec<&str>> = vec![
        vec!["gen-code", "--toy", "toric3", "--out", "codes"],
        vec!["gen-code", "--bb", "12", "6", "x3+y+y2", "y3+x+x2", "--out", "codes"],
        vec!["train", "--code", "steane", "--channel", "bitflip", "--episodes", "400", "--seed", "9", "--out", "steane.qt"],
        vec!["train", "--code", "codes/toric3.manifest", "--channel", "depolarizing", "--episodes", "200", "--seed", "9", "--out", "toric3q.qt"],
        vec!["eval", "--code", "steane", "--decoder", "bp", "--p-grid", "0.04,0.09", "--frames", "400", "--seed", "4", "--out", "eval_bp.csv"],
        vec!["eval", "--code", "steane", "--decoder", "bp", "--p-grid", "0.04,0.09", "--frames", "400", "--seed", "4", "--threads", "4", "--out", "eval_bp_t4.csv"],
        vec!["eval", "--code", "steane", "--decoder", "rl-svns", "--qtable", "steane.qt", "--p-grid", "0.05", "--frames", "300", "--seed", "6", "--target-errors", "40", "--out", "eval_rl.csv"],
        vec!["decode", "--code", "steane", "--decoder", "svns", "--syndrome", "101", "--p", "0.1", "--seed", "11", "--verbose"],
        vec!["decode", "--code", "toric3", "--decoder", "bpgd", "--syndrome", "100000000", "--p", "0.1", "--max-iters", "20", "--verbose"],
        vec!["decode", "--code", "toric3", "--decoder", "rl-qsvns", "--qtable", "toric3q.qt", "--syndrome-a", "110000000", "--syndrome-b", "000000000", "--p", "0.05", "--verbose"],
        vec!["inspect-qtable", "--qtable", "steane.qt", "--top", "5"],
    ];
    let files = [
        "codes/toric3.manifest",
        "codes/toric3_a.alist",
        "codes/toric3_b.alist",
        "codes/bb12x6.manifest",
        "codes/bb12x6_a.alist",
        "codes/bb12x6_b.alist",
        "steane.qt",
        "toric3q.qt",
        "eval_bp.csv",
        "eval_bp_t4.csv",
        "eval_rl.csv",
    ];

    for (i, args) in commands.iter().enumerate() {
        let out1 = qldpc(&r1, args);
        let out2 = qldpc(&r2, args);
        assert_eq!(out1, out2, "command {i} {:?}: stdout differs between runs", args);
    }
    for file in files {
        let b1 = std::fs::read(r1.join(file)).unwrap_or_else(|_| panic!("{file} missing in r1"));
        let b2 = std::fs::read(r2.join(file)).unwrap_or_else(|_| panic!("{file} missing in r2"));
        assert_eq!(b1, b2, "{file} differs between identical runs");
    }
    let single = std::fs::read(r1.join("eval_bp.csv")).unwrap();
    let threaded = std::fs::read(r1.join("eval_bp_t4.csv")).unwrap();
    assert_eq!(single, threaded, "4-thread evaluation drifted from single-thread");
    println!(
        "{} commands x 2 runs byte-identical ({} files compared, threaded eval matches single)",
        commands.len(),
        files.len()
    );
}
