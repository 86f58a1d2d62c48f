use asymcause_core::montecarlo::{empirical_size, simulate_replication, CausalFeedback, DgpConfig};
use asymcause_core::pipeline::{analyze, EstimatorChoice, LagChoice, PipelineOptions};
use asymcause_core::sure::{block_criterion, Criterion};
use asymcause_core::wald::HypothesisId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn fixed_options() -> PipelineOptions {
    PipelineOptions {
        lags: LagChoice::Fixed { positive: 1, negative: 1 },
        estimator: EstimatorChoice::Fgls,
        arch_diagnostic: false,
        ..PipelineOptions::default()
    }
}

#[test]
fn white_noise_blocks_select_the_smallest_order() {
    let seeds = 30;
    let mut hits = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block: Vec<Vec<f64>> = (0..2).map(|_| (0..300).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let refs: Vec<&[f64]> = block.iter().map(Vec::as_slice).collect();
        let crit: Vec<f64> = (1..=6).map(|p| block_criterion(&refs, p, 6, Criterion::Sbc).unwrap()).collect();
        let best = crit.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 + 1;
        if best == 1 {
            hits += 1;
        }
    }
    assert!(hits * 2 > seeds, "order 1 chosen in {hits} of {seeds}");
}

#[test]
fn positive_feedback_is_detected_by_the_relevant_hypotheses() {
    let mut cfg = DgpConfig::independent_walks(2, 0.1, 2000, 77);
    cfg.causal_feedback = Some(CausalFeedback::positive_into_first(0.5));
    let seeds = 20;
    let mut counts = [0usize; 10];
    for r in 0..seeds {
        let series = simulate_replication(&cfg, r).unwrap();
        let analysis = analyze(&series, &fixed_options()).unwrap();
        for res in &analysis.results {
            if res.p_value < 0.01 {
                counts[res.hypothesis.id.index()] += 1;
            }
        }
    }
    for id in [HypothesisId::H1, HypothesisId::H3, HypothesisId::H4, HypothesisId::H9, HypothesisId::H10] {
        let rate = counts[id.index()] as f64 / seeds as f64;
        assert!(rate >= 0.95, "{id} rejected in {rate}");
    }
}

#[test]
fn null_p_values_look_uniform() {
    let cfg = DgpConfig::independent_walks(2, 0.2, 300, 5);
    let reps = 200;
    let mut sums = [0.0f64; 10];
    for r in 0..reps {
        let series = simulate_replication(&cfg, r).unwrap();
        for res in analyze(&series, &fixed_options()).unwrap().results {
            sums[res.hypothesis.id.index()] += res.p_value;
        }
    }
    for (i, s) in sums.iter().enumerate() {
        let mean = s / reps as f64;
        // sd of a mean of 200 uniforms is about 0.02
        assert!((mean - 0.5).abs() < 0.1, "H{} mean p-value {mean}", i + 1);
    }
}

#[test]
fn size_study_is_reproducible_and_reasonable() {
    let cfg = DgpConfig::independent_walks(2, 0.1, 300, 11);
    let a = empirical_size(&cfg, 100, 0.05, &fixed_options()).unwrap();
    let b = empirical_size(&cfg, 100, 0.05, &fixed_options()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.failures, 0);
    for r in &a.rates {
        assert!(r.rate <= 0.2, "{:?}", r);
    }
}

#[test]
fn lag_selection_inside_the_pipeline() {
    let cfg = DgpConfig::independent_walks(2, 0.1, 500, 3);
    let opts = PipelineOptions {
        lags: LagChoice::Select { p_max: 6, criterion: Criterion::Sbc },
        ..fixed_options()
    };
    let mut hits = 0;
    for r in 0..20 {
        let a = analyze(&simulate_replication(&cfg, r).unwrap(), &opts).unwrap();
        let sel = a.lag_selection.unwrap();
        if (sel.positive, sel.negative) == (1, 1) {
            hits += 1;
        }
        assert_eq!(sel.trace.len(), 6);
        assert_eq!(a.system.lag_orders, (sel.positive, sel.negative));
    }
    assert!(hits >= 18, "lag 1 chosen in {hits} of 20");
}

#[test]
fn auto_estimator_keeps_fgls_on_homoskedastic_data() {
    let cfg = DgpConfig::independent_walks(2, 0.1, 300, 21);
    let opts = PipelineOptions { estimator: EstimatorChoice::Auto, ..fixed_options() };
    let mut fgls = 0;
    for r in 0..20 {
        let a = analyze(&simulate_replication(&cfg, r).unwrap(), &opts).unwrap();
        assert!(a.arch.is_some());
        if a.garch.is_none() {
            fgls += 1;
        }
    }
    assert!(fgls >= 15, "fgls kept in {fgls} of 20");
}
