mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crisis_triage::actionability::{
    grid_search, train_ensemble, ActionSet, ActionabilityType, Ensemble, SvmHyperparams, DEFAULT_C_GRID,
    DEFAULT_GAMMA_GRID,
};
use crisis_triage::evaluation::{confusion, metrics};
use crisis_triage::features::FeatureConfig;
use crisis_triage::text::{tokenize, TokenSequence};

fn corpus(msgs: &[common::WorldMessage]) -> Vec<(TokenSequence, ActionSet)> {
    msgs.iter()
        .map(|m| (tokenize(m.message.text()), m.actions.clone()))
        .collect()
}

fn trained() -> Ensemble {
    let table = common::world_embeddings();
    let train = corpus(&common::world_messages(400, 5, 1));
    let (ensemble, reports) = train_ensemble(
        &train,
        &common::world_keywords(),
        &table,
        &FeatureConfig::default(),
        &SvmHyperparams::default(),
        17,
    )
    .unwrap();
    for r in &reports {
        assert_eq!(r.positives, r.negatives_used, "{:?}", r.category);
        assert!(r.missing_keywords.is_empty());
    }
    ensemble
}

#[test]
fn ensemble_tags_held_out_messages() {
    let ensemble = trained();
    let table = common::world_embeddings();
    let test = common::world_messages(300, 5, 2);
    for t in ActionabilityType::ALL {
        let (mut p, mut g) = (Vec::new(), Vec::new());
        for m in &test {
            let set = ensemble.classify_actionability(m.message.text(), &table, None).unwrap();
            p.push(if set.contains(t) { 1 } else { -1 });
            g.push(if m.actions.contains(t) { 1 } else { -1 });
        }
        let r = metrics(&confusion(&p, &g).unwrap());
        assert!(r.f1 >= 0.8 && r.recall >= 0.9, "{t}: {r:?}");
    }
}

#[test]
fn need_plus_location_message() {
    let ensemble = trained();
    let table = common::world_embeddings();
    let set = ensemble
        .classify_actionability(
            "There are people camped out between Lincoln and fifth who need water",
            &table,
            None,
        )
        .unwrap();
    assert!(set.contains(ActionabilityType::Needs), "{set:?}");
    assert!(set.contains(ActionabilityType::GeographicMention), "{set:?}");
    let again = ensemble
        .classify_actionability(
            "There are people camped out between Lincoln and fifth who need water",
            &table,
            None,
        )
        .unwrap();
    assert_eq!(set, again);
    let none = ensemble
        .classify_actionability("just now the update is here", &table, None)
        .unwrap();
    assert!(none.is_empty(), "{none:?}");
}

#[test]
fn ensemble_file_round_trip() {
    let ensemble = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("act.bin");
    ensemble.save(&path).unwrap();
    let back = Ensemble::load(&path).unwrap();
    assert_eq!(back, ensemble);
    assert_eq!(back.to_bytes().unwrap(), std::fs::read(&path).unwrap());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] ^= 1;
    assert!(Ensemble::from_bytes(&bytes).is_err());
}

#[test]
fn ensemble_training_is_deterministic() {
    assert_eq!(trained().to_bytes().unwrap(), trained().to_bytes().unwrap());
}

/// Keyword-like features: one informative dimension, the rest noise, with
/// one positive for every three negatives.
fn imbalanced(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let positive = i % 4 == 0;
        let signal: f64 = if positive { 0.55 } else { 0.3 } + rng.gen_range(-0.2..0.2);
        let mut v = vec![signal.clamp(0.0, 1.0)];
        v.extend((0..6).map(|_| rng.gen_range(0.0..0.6)));
        x.push(v);
        y.push(if positive { 1.0 } else { -1.0 });
    }
    (x, y)
}

#[test]
fn grid_best_cell_is_argmax() {
    let (x, y) = imbalanced(1, 120);
    let r = grid_search(&x, &y, &DEFAULT_C_GRID, &DEFAULT_GAMMA_GRID, 4, 3).unwrap();
    assert_eq!(r.cells.len(), 30);
    assert!(r.cells.iter().any(|c| c.c == 20.0 && c.gamma == 3.0));
    for c in &r.cells {
        assert!(r.best.mean_f1 >= c.mean_f1);
    }
    let csv = r.heatmap_csv();
    assert_eq!(csv.lines().count(), 31);
    assert!(csv.starts_with("C,gamma,mean_f1\n"));
}

#[test]
fn large_gamma_hurts_on_noisy_imbalanced_data() {
    let (x, y) = imbalanced(2, 160);
    let gammas = [0.1, 1.0, 10.0, 100.0];
    let r = grid_search(&x, &y, &[50.0], &gammas, 4, 5).unwrap();
    let f1: Vec<f64> = r.cells.iter().map(|c| c.mean_f1).collect();
    for w in f1.windows(2) {
        assert!(w[1] <= w[0] + 0.02, "{f1:?}");
    }
    assert!(f1[0] > f1[3] + 0.1, "{f1:?}");
}
