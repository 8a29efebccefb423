//! Monte-Carlo behaviour of the samplers and testers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wit_core::generators::{build_qstar, make_grid, paninski_pair, random_simplex};
use wit_core::harness::{run_trials, ExperimentConfig, PSource, QSource, SpaceSource};
use wit_core::l1::{L1Context, L1TestInstance, L1Tester, SampleBatch, TesterKind};
use wit_core::metric::{Distribution, PointMetric};
use wit_core::sampling::{multinomial_counts, SampleOracle, WeightedSampler};
use wit_core::wit::WitConfig;

#[test]
fn qstar_frequencies_match_induced_law() {
    let g = make_grid(2, 0.25, PointMetric::Linf).unwrap();
    let h = g.hierarchy(0.25).unwrap();
    let p = Distribution::uniform(g.space().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let q = random_simplex(4, &mut rng);
    let mut qs = build_qstar(&p, &h, -1, WeightedSampler::new(&q, 5).unwrap(), 6).unwrap();
    let law = qs.induced(&q).unwrap();
    let n = 100_000u64;
    let mut counts = vec![0u64; g.len()];
    for x in qs.draw(n).unwrap() {
        counts[x] += 1;
    }
    for (x, &c) in counts.iter().enumerate() {
        let m = law.mass()[x];
        let sd = (n as f64 * m * (1.0 - m)).sqrt();
        assert!((c as f64 - n as f64 * m).abs() <= 3.0 * sd + 1e-9, "point {x}: {c} vs {}", n as f64 * m);
    }
}

#[test]
fn l1_null_rejection_stays_near_delta() {
    let ctx = L1Context { trials: 2000, ..Default::default() };
    let (p, q) = paninski_pair(40, 0.6).unwrap();
    let delta = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in [TesterKind::Worst, TesterKind::Instance] {
        let tester = L1Tester::new(L1TestInstance::new(p.clone(), 0.6, delta).unwrap(), kind, &ctx).unwrap();
        let s = 400;
        let trials = 1000;
        let mut null_rejects = 0;
        let mut alt_rejects = 0;
        for _ in 0..trials {
            if !tester.decide(&SampleBatch::from_counts(multinomial_counts(&mut rng, &p, s))).unwrap().accepted() {
                null_rejects += 1;
            }
            if !tester.decide(&SampleBatch::from_counts(multinomial_counts(&mut rng, &q, s))).unwrap().accepted() {
                alt_rejects += 1;
            }
        }
        let rate = null_rejects as f64 / trials as f64;
        assert!(rate <= delta + 0.04, "{kind}: null rejection {rate}");
        assert!(alt_rejects as f64 / trials as f64 >= 0.9, "{kind}: power {alt_rejects}");
    }
}

#[test]
fn weighted_sampler_is_unbiased() {
    let w = [0.1, 0.2, 0.3, 0.4];
    let mut s = WeightedSampler::new(&w, 8).unwrap();
    let n = 50_000;
    let mut c = [0u64; 4];
    for x in s.draw(n).unwrap() {
        c[x] += 1;
    }
    for j in 0..4 {
        let sd = (n as f64 * w[j] * (1.0 - w[j])).sqrt();
        assert!((c[j] as f64 - n as f64 * w[j]).abs() <= 4.0 * sd);
    }
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        space: SpaceSource::Grid { dim: 2, h: 0.25, metric: PointMetric::Linf },
        p: PSource::Uniform,
        q: QSource::EqualToP,
        epsilon: 0.25,
        trials: 20,
        seed: 77,
        mode: TesterKind::Worst,
        output: None,
        tester: WitConfig::default(),
    }
}

#[test]
fn identical_config_gives_identical_reports() {
    let a = run_trials(&base_config()).unwrap();
    let b = run_trials(&base_config()).unwrap();
    assert_eq!(a, b);
    let c = run_trials(&ExperimentConfig { seed: 78, ..base_config() }).unwrap();
    assert_ne!(a.reports[0].seed, c.reports[0].seed);
}

#[test]
fn single_trial_passes_report_through() {
    let s = run_trials(&ExperimentConfig { trials: 1, ..base_config() }).unwrap();
    assert_eq!(s.reports.len(), 1);
    assert_eq!(s.accepts + s.rejects, 1);
    assert_eq!(s.reports[0].verdict.accepted(), s.accepts == 1);
    assert!(s.reports[0].total_samples <= s.reports[0].budget_formula_value);
}

#[test]
fn uncertified_far_label_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    // uniform q equals p: W = 0
    std::fs::write(&path, "0.04\n".repeat(25)).unwrap();
    let cfg = ExperimentConfig { q: QSource::File { path, far: true }, ..base_config() };
    assert!(matches!(run_trials(&cfg), Err(wit_core::WitError::NotCertifiedFar { .. })));
}

#[test]
fn instance_mode_uses_fewer_samples_on_concentrated_reference() {
    let cfg = ExperimentConfig {
        space: SpaceSource::Grid { dim: 2, h: 0.125, metric: PointMetric::Linf },
        p: PSource::Concentrated { at: 40, weight: 0.9 },
        epsilon: 0.2,
        trials: 100,
        ..base_config()
    };
    let worst = run_trials(&cfg).unwrap();
    let inst = run_trials(&ExperimentConfig { mode: TesterKind::Instance, ..cfg }).unwrap();
    assert!(inst.budget < worst.budget);
    assert!(inst.accept_rate >= 0.6, "{}", inst.accept_rate);
    assert!(inst.reports.iter().all(|r| !r.doubling_warning));
}
