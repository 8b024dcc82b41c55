//! Cross-module invariants: node symmetries, quantizer algebra, pruning,
//! loss bounds, channel symmetry and model persistence.

use pbnbp::codes::{min_weight_dual_checks, rm_code, sample_overcomplete, LinearCode, SampleOptions};
use pbnbp::gf2::BitVec;
use pbnbp::model::{ModelFile, Provenance};
use pbnbp::msgpass::{cn_update_exact, cn_update_minsum, cn_update_noms, cn_update_oms, Decoder, M_CLIP};
use pbnbp::pruning::{
    apply_prune, finalize_decoder, initial_decoder, prune_loop, select_candidates, DecoderKind, Family, GroupSchedule,
    PruneConfig, PruneStop, Strategy as PruneStrategy,
};
use pbnbp::quant::{quantize_decoder, BitWidths, QuantMode, QuantizerSpec};
use pbnbp::simulation::{awgn_llr_unclipped, noise_variance};
use pbnbp::training::{multiloss, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn messages() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-25.0f64..25.0, 1..12)
}

fn random_weights(d: &mut Decoder<f64>, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = d.weights().values().iter().map(|_| rng.random_range(0.2..1.6)).collect();
    d.set_weight_values(&vals);
}

fn clipped_llrs(code: &LinearCode, bits: &[u8], ebn0_db: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut llr = vec![0.0; code.n()];
    awgn_llr_unclipped(bits, noise_variance(ebn0_db, code.rate()), rng, &mut llr);
    llr.iter().map(|x| x.clamp(-M_CLIP, M_CLIP)).collect()
}

proptest! {
    #[test]
    fn negating_one_input_negates_every_cn_rule(m in messages(), pick in 0usize..12) {
        let i = pick % m.len();
        let mut neg = m.clone();
        neg[i] = -neg[i];
        // sign(0) is +1, so a zero input has no negation to mirror
        prop_assume!(m[i] != 0.0);
        prop_assert_eq!(cn_update_exact(&neg, 1.0), -cn_update_exact(&m, 1.0));
        prop_assert_eq!(cn_update_minsum(&neg), -cn_update_minsum(&m));
        prop_assert_eq!(cn_update_oms(&neg, 0.0), -cn_update_oms(&m, 0.0));
        prop_assert_eq!(cn_update_noms(&neg, 0.0), -cn_update_noms(&m, 0.0));
    }

    #[test]
    fn min_sum_keeps_sign_and_overestimates(m in messages()) {
        let e = cn_update_exact(&m, 1.0);
        let s = cn_update_minsum(&m);
        prop_assert_eq!(e >= 0.0, s >= 0.0);
        prop_assert!(s.abs() >= e.abs());
    }

    #[test]
    fn quantizer_is_odd_monotone_and_bounded(
        bits in 2u32..7,
        max in 0.5f64..20.0,
        a in -40.0f64..40.0,
        b in -40.0f64..40.0,
    ) {
        let q = QuantizerSpec::uniform(bits, max).unwrap();
        prop_assert_eq!(q.quantize(-a), -q.quantize(a));
        prop_assert_eq!(q.quantize(q.quantize(a)), q.quantize(a));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(q.quantize(lo) <= q.quantize(hi));
        prop_assert!(q.quantize(a).abs() <= q.max_level());
        let g = q.grad_levels(a);
        let nz: Vec<f64> = g.iter().copied().filter(|&x| x != 0.0).collect();
        prop_assert!(nz.len() <= 1);
        prop_assert!(nz.iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn min_weight_selection_takes_the_smallest(seed in any::<u64>(), count in 1usize..40) {
        let code = rm_code(1, 4).unwrap();
        let mut d = initial_decoder::<f64>(min_weight_dual_checks(&code).unwrap(), 3, Family::Nbp).unwrap();
        random_weights(&mut d, seed);
        let victims = select_candidates(d.plan(), d.weights(), count).unwrap();
        prop_assert_eq!(victims.len(), count);
        let w = |l: usize, c: usize| {
            let pos = d.plan().active_checks(l).iter().position(|&x| x == c).unwrap();
            d.weights().cn(l)[pos].abs()
        };
        let worst_victim = victims.iter().map(|&(l, c)| w(l, c)).fold(0.0, f64::max);
        let best_survivor = (0..3)
            .flat_map(|l| d.plan().active_checks(l).into_iter().map(move |c| (l, c)))
            .filter(|v| !victims.contains(v))
            .map(|(l, c)| w(l, c))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(worst_victim <= best_survivor);
    }
}

#[test]
fn overcomplete_rows_are_dual_codewords() {
    for code in [rm_code(1, 4).unwrap(), rm_code(2, 5).unwrap()] {
        let rows = |h: &pbnbp::codes::ParityCheckMatrix| {
            h.rows().iter().map(|r| BitVec::from_indices(code.n(), r)).collect::<Vec<_>>()
        };
        assert!(code.is_dual_rows(&rows(&min_weight_dual_checks(&code).unwrap())));
        let s = sample_overcomplete(&code, 8, 40, 3, SampleOptions::default()).unwrap();
        assert!(code.is_dual_rows(&rows(&s)));
    }
}

#[test]
fn enumeration_ignores_generator_row_order() {
    let code = rm_code(2, 5).unwrap();
    let mut g = code.generator().to_vec();
    g.reverse();
    g.swap(1, 7);
    let shuffled = LinearCode::from_generator("shuffled", code.n(), g).unwrap();
    assert_eq!(
        min_weight_dual_checks(&code).unwrap().rows(),
        min_weight_dual_checks(&shuffled).unwrap().rows()
    );
}

#[test]
fn pruning_a_cn_equals_zeroing_its_weight() {
    let code = rm_code(1, 4).unwrap();
    for family in [Family::Nbp, Family::Noms] {
        let mut d = initial_decoder::<f64>(min_weight_dual_checks(&code).unwrap(), 3, family).unwrap();
        random_weights(&mut d, 5);
        let (l, c) = (1, 17);
        let mut zeroed = d.clone();
        let mut ws = zeroed.weights().clone();
        ws.cn_mut(l)[c] = 0.0;
        zeroed.replace_weights(ws).unwrap();
        let pruned = apply_prune(&d, &[(l, c)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mu = clipped_llrs(&code, &vec![0; code.n()], 1.0, &mut rng);
            assert_eq!(zeroed.decode(&mu).unwrap().hard, pruned.decode(&mu).unwrap().hard);
        }
    }
}

#[test]
fn cn_evals_and_loss_bounds() {
    let code = rm_code(1, 4).unwrap();
    let mut d = initial_decoder::<f64>(min_weight_dual_checks(&code).unwrap(), 4, Family::Nbp).unwrap();
    random_weights(&mut d, 1);
    let d = apply_prune(&d, &[(2, 3), (3, 0), (3, 9)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let zeros = vec![0u8; code.n()];
    let first = d.decode(&clipped_llrs(&code, &zeros, 0.0, &mut rng)).unwrap().cn_evals;
    for _ in 0..200 {
        let t = d.decode(&clipped_llrs(&code, &zeros, rng.random_range(-2.0..6.0), &mut rng)).unwrap();
        assert_eq!(t.cn_evals, first);
        for eta in [1.0, 0.5, 1e-3] {
            let loss = multiloss(&t.o, &zeros, eta);
            assert!((0.0..=1.0).contains(&loss));
        }
    }
}

/// Mean and standard error of the per-block multiloss.
fn loss_stats(d: &Decoder<f64>, code: &LinearCode, blocks: usize, all_zero: bool, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let losses: Vec<f64> = (0..blocks)
        .map(|_| {
            let bits = if all_zero {
                vec![0; code.n()]
            } else {
                let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
                code.encode(&info)
            };
            let t = d.decode(&clipped_llrs(code, &bits, 1.0, &mut rng)).unwrap();
            multiloss(&t.o, &bits, 1.0)
        })
        .collect();
    let n = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / n;
    let var = losses.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn all_zero_training_loss_matches_random_codewords() {
    let code = rm_code(1, 4).unwrap();
    for family in [Family::Nbp, Family::Noms] {
        let mut d = initial_decoder::<f64>(min_weight_dual_checks(&code).unwrap(), 3, family).unwrap();
        random_weights(&mut d, 4);
        let (m0, s0) = loss_stats(&d, &code, 10_000, true, 10);
        let (m1, s1) = loss_stats(&d, &code, 10_000, false, 11);
        assert!((m0 - m1).abs() <= 3.0 * (s0 * s0 + s1 * s1).sqrt(), "{family:?}: {m0} vs {m1}");
    }
}

fn assert_round_trip(code: &LinearCode, d: &Decoder<f64>, what: &str) {
    let m = ModelFile::new(code, d, Provenance::default()).unwrap();
    let path = std::env::temp_dir().join(format!("pbnbp-roundtrip-{}-{what}.json", std::process::id()));
    m.save(&path).unwrap();
    let loaded = ModelFile::<f64>::load(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let (code2, d2) = loaded.build().unwrap();
    assert_eq!(code2.generator(), code.generator(), "{what}");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let mu = clipped_llrs(code, &code.encode(&info), 2.0, &mut rng);
        let (a, b) = (d.decode(&mu).unwrap(), d2.decode(&mu).unwrap());
        assert_eq!(a.hard, b.hard, "{what}");
        assert_eq!(a.mu_post, b.mu_post, "{what}");
    }
}

#[test]
fn models_round_trip_for_every_kind_and_quantization_mode() {
    let code = rm_code(1, 4).unwrap();
    let tcfg = TrainConfig {
        batch_size: 8,
        max_batches: 3,
        plateau_window: 2,
        train_ebn0_db: 2.0,
        ..Default::default()
    };
    let cfg = PruneConfig {
        stop_rule: PruneStop::TargetCnCount { target: 150 },
        group_schedule: GroupSchedule(vec![(0, 40)]),
        strategy: PruneStrategy::MinWeight,
        probe: None,
    };
    for family in [Family::Nbp, Family::Noms] {
        let d0 = initial_decoder::<f64>(min_weight_dual_checks(&code).unwrap(), 3, family).unwrap();
        let d1 = prune_loop(&code, &d0, &cfg, &tcfg, |_, _| {}).unwrap().decoder;
        for kind in [DecoderKind::D1, DecoderKind::D2, DecoderKind::D3] {
            let (d, _) = finalize_decoder(&d1, kind, &code, &tcfg).unwrap();
            assert_round_trip(&code, &d, &format!("{family:?}-{kind:?}"));
        }
        let bits = BitWidths { q_ch: 4, q_m: 4, q_w: 5 };
        for mode in [
            QuantMode::Joint,
            QuantMode::Qat,
            QuantMode::PostUniform { clip: 8.0 },
            QuantMode::PostLloyd { calibration_batches: 2 },
        ] {
            let (q, _) = quantize_decoder(&d1, &code, bits, mode, &tcfg).unwrap();
            assert!(q.quantization().is_some());
            assert_round_trip(&code, &q, &format!("{family:?}-{mode:?}"));
        }
    }
}
