mod common;

use common::*;
use rt4sc::config::{AttackKind, ExperimentConfig, Family, GraphSource};
use rt4sc::metrics::{auc, mean_std, precision_at_k};
use rt4sc::pipeline::run_pipeline;
use rt4sc::synth::{generate_planted, PlantedSpec};

#[test]
fn auc_matches_pair_count() {
    let mut r = rng(77);
    let mut checked = 0;
    for case in 0..300u64 {
        let len = 2 + (case as usize * 7) % 199;
        // Coarse scores so that ties are frequent.
        let scores: Vec<f64> = (0..len)
            .map(|_| (rand::Rng::random_range(&mut r, 0..20) as f64) / 7.0)
            .collect();
        let labels: Vec<bool> = (0..len)
            .map(|_| rand::Rng::random_bool(&mut r, 0.4))
            .collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            assert!(auc(&scores, &labels).is_err());
            continue;
        }
        let got = auc(&scores, &labels).unwrap();
        assert!(
            (got - brute_auc(&scores, &labels)).abs() <= 1e-12,
            "case {case}"
        );
        checked += 1;
    }
    assert!(checked >= 100);
    assert_eq!(
        auc(&[0.9, 0.4, 0.5, 0.1], &[true, true, false, false]).unwrap(),
        0.75
    );
}

#[test]
fn precision_at_k_breaks_ties_by_index() {
    assert_eq!(
        precision_at_k(&[0.9, 0.8, 0.7], &[true, false, true], 2).unwrap(),
        0.5
    );
    assert_eq!(
        precision_at_k(&[0.5, 0.5, 0.5], &[false, true, true], 1).unwrap(),
        0.0
    );
    assert_eq!(
        precision_at_k(&[0.5, 0.5, 0.5], &[false, true, true], 3).unwrap(),
        2.0 / 3.0
    );
    assert!(precision_at_k(&[0.5], &[true], 0).is_err());
}

#[test]
fn equal_edge_probabilities_give_equal_densities() {
    let spec = PlantedSpec {
        n: 40,
        communities: 4,
        p_in: 0.15,
        p_out: 0.15,
        ..Default::default()
    };
    // Pooled 2x2 table: (within, between) x (edge, non-edge).
    let (mut we, mut wn, mut be, mut bn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..50 {
        let p = generate_planted(&spec, seed).unwrap();
        for u in 0..spec.n {
            for v in u + 1..spec.n {
                let within = p.labels[u] == p.labels[v];
                match (within, p.graph.has_edge(u, v)) {
                    (true, true) => we += 1.0,
                    (true, false) => wn += 1.0,
                    (false, true) => be += 1.0,
                    (false, false) => bn += 1.0,
                }
            }
        }
    }
    let total = we + wn + be + bn;
    let mut chi2 = 0.0;
    for (obs, row, col) in [
        (we, we + wn, we + be),
        (wn, we + wn, wn + bn),
        (be, be + bn, we + be),
        (bn, be + bn, wn + bn),
    ] {
        let expected = row * col / total;
        chi2 += (obs - expected).powi(2) / expected;
    }
    // 99th percentile of chi-squared with one degree of freedom.
    assert!(chi2 < 6.635, "chi2 {chi2}");
}

fn planted_cfg(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default().with_seed(seed);
    cfg.source = GraphSource::Planted(PlantedSpec {
        n: 60,
        communities: 2,
        p_in: 0.3,
        p_out: 0.02,
        ..Default::default()
    });
    cfg
}

#[test]
fn mf_distance_attack_beats_chance() {
    let mut aucs = Vec::new();
    for seed in 0..10 {
        let mut cfg = planted_cfg(seed);
        cfg.families = vec![Family::Mf];
        cfg.attacks = vec![AttackKind::Distance];
        let report = run_pipeline(&cfg).unwrap();
        assert_eq!(report.rows.len(), 1);
        aucs.push(report.rows[0].auc);
    }
    let (mean, std) = mean_std(&aucs);
    assert!(mean - 3.0 * std > 0.5, "mean {mean} std {std}: {aucs:?}");
}

#[test]
fn small_plumbing_run_has_one_row() {
    let mut cfg = ExperimentConfig::default().with_seed(4);
    cfg.source = GraphSource::Planted(PlantedSpec {
        n: 30,
        ..Default::default()
    });
    cfg.families = vec![Family::Mf];
    cfg.attacks = vec![AttackKind::Distance];
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!((0.0..=1.0).contains(&report.rows[0].auc));
}

#[test]
fn full_grid_is_exhaustive_and_reproducible() {
    let mut cfg = planted_cfg(2);
    cfg.attacks = vec![
        AttackKind::Distance,
        AttackKind::Decoder,
        AttackKind::Membership,
    ];
    let a = run_pipeline(&cfg).unwrap();
    assert_eq!(a.rows.len(), 9);
    for f in [Family::Mf, Family::MfTopo, Family::Snn] {
        for k in [
            AttackKind::Distance,
            AttackKind::Decoder,
            AttackKind::Membership,
        ] {
            assert!(a.get(f, k).is_some(), "{f:?} {k:?}");
        }
    }
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
}
