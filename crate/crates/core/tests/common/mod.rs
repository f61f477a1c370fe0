//! Synthetic fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

pub mod qp;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crisis_triage::actionability::{ActionSet, ActionabilityType};
use crisis_triage::corpus::{BinaryInformativeness, LabeledMessage, Message, Source};
use crisis_triage::features::{default_keyword_lists, KeywordList};
use crisis_triage::informativeness::{CnnConfig, ConvLayer};
use crisis_triage::text::{EmbeddingTable, DEFAULT_DIMENSION};

/// Topic words per category; the first six form the test keyword list.
pub const TOPICS: [&[&str]; 9] = [
    &["water", "food", "shelter", "need", "supplies", "blankets", "medicine", "diapers", "hungry", "thirsty", "formula", "generator"],
    &["redcross", "firefighters", "police", "volunteers", "army", "responders", "rescuers", "paramedics", "crews", "sheriff", "guard", "medics"],
    &["looting", "scam", "explosion", "gas", "leak", "threat", "sniper", "unsafe", "dangerous", "powerline", "thieves", "arson"],
    &["street", "bridge", "blocked", "closed", "avoid", "alert", "roadway", "overpass", "closure", "detour", "impassable", "gridlock"],
    &["damage", "destroyed", "roof", "homes", "damaged", "wrecked", "ruined", "debris", "outage", "collapsed", "shattered", "flattened"],
    &["lincoln", "fifth", "downtown", "calgary", "avenue", "county", "riverside", "canmore", "boulevard", "district", "elbow", "bowness"],
    &["rain", "river", "rising", "levels", "storm", "wind", "surge", "tide", "snow", "forecast", "creek", "downpour"],
    &["rescued", "evacuated", "evacuation", "saved", "trapped", "airlifted", "boat", "helicopter", "stranded", "survivors", "found", "pulled"],
    &["i", "people", "please", "pray", "worried", "god", "hope", "feel", "sad", "omg", "heart", "thoughts"],
];

pub const FILLER: [&str; 24] = [
    "the", "a", "is", "on", "at", "and", "of", "to", "in", "for", "this", "that", "was", "just", "now", "today",
    "here", "there", "some", "with", "near", "from", "after", "update",
];

/// Embeddings where every topic word points near its category axis and
/// filler words point into the remaining dimensions.
pub fn world_embeddings() -> EmbeddingTable {
    let d = DEFAULT_DIMENSION;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut table = EmbeddingTable::new(d);
    let defaults = default_keyword_lists();
    let add = |word: &str, axis: Option<usize>, table: &mut EmbeddingTable, rng: &mut ChaCha8Rng| {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.12..0.12)).collect();
        match axis {
            Some(a) => v[a] += 1.0,
            None => {
                for x in v.iter_mut().skip(9) {
                    *x += rng.gen_range(-1.0..1.0);
                }
            }
        }
        table.insert(word, v).unwrap();
    };
    for (axis, words) in TOPICS.iter().enumerate() {
        for w in *words {
            add(w, Some(axis), &mut table, &mut rng);
        }
    }
    for list in &defaults {
        for w in list.keywords() {
            if !table.contains(w) {
                add(w, Some(list.category().index()), &mut table, &mut rng);
            }
        }
    }
    for w in FILLER {
        add(w, None, &mut table, &mut rng);
    }
    table
}

pub fn world_keywords() -> Vec<KeywordList> {
    ActionabilityType::ALL
        .iter()
        .map(|&t| KeywordList::new(t, TOPICS[t.index()][..6].iter().copied()))
        .collect()
}

/// A tagged synthetic message built from its categories' topic words.
#[derive(Clone, Debug)]
pub struct WorldMessage {
    pub message: Message,
    pub actions: ActionSet,
}

pub const DAY: i64 = 86_400;
pub const T0: i64 = 1_371_081_600; // 2013-06-13T00:00:00Z

/// `n` messages with 0–2 categories each, spread over `days` days.
pub fn world_messages(n: usize, days: i64, seed: u64) -> Vec<WorldMessage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let k = [0usize, 1, 1, 1, 2][rng.gen_range(0..5)];
            let mut cats: Vec<ActionabilityType> = ActionabilityType::ALL.to_vec();
            cats.shuffle(&mut rng);
            cats.truncate(k);
            let mut words: Vec<&str> = Vec::new();
            for c in &cats {
                for _ in 0..2 {
                    words.push(TOPICS[c.index()].choose(&mut rng).unwrap());
                }
            }
            for _ in 0..rng.gen_range(3..7) {
                words.push(FILLER.choose(&mut rng).unwrap());
            }
            words.shuffle(&mut rng);
            let t = T0 + rng.gen_range(0..days * DAY);
            WorldMessage {
                message: Message::new(format!("m{i:04}"), words.join(" ")).unwrap().with_timestamp(t),
                actions: cats.into_iter().collect(),
            }
        })
        .collect()
}

/// Small network used wherever a trained gate is needed quickly.
pub fn small_cnn(seed: u64) -> CnnConfig {
    CnnConfig {
        max_len: 48,
        conv: vec![ConvLayer {
            filters: 8,
            width: 3,
            pool: 2,
        }],
        hidden: vec![8],
        learning_rate: 0.05,
        batch_size: 8,
        max_epochs: 30,
        seed,
        ..CnnConfig::default()
    }
}

fn labeled(id: String, text: String, informative: bool) -> LabeledMessage {
    LabeledMessage {
        message: Message::new(id, text).unwrap().with_source(Source::Other),
        label: if informative {
            BinaryInformativeness::Informative
        } else {
            BinaryInformativeness::NotInformative
        },
    }
}

/// Class A texts contain 'x', class B texts contain 'q'; nothing else differs.
pub fn xq_corpus(n: usize, seed: u64) -> Vec<LabeledMessage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = "abcdefghijklmnoprstuvwyz ";
    (0..n)
        .map(|i| {
            let informative = i % 2 == 0;
            let len = rng.gen_range(12..30);
            let mut chars: Vec<char> = (0..len)
                .map(|_| base.chars().nth(rng.gen_range(0..base.len())).unwrap())
                .collect();
            let marker = if informative { 'x' } else { 'q' };
            for _ in 0..rng.gen_range(1..4) {
                let pos = rng.gen_range(0..chars.len());
                chars[pos] = marker;
            }
            labeled(format!("xq{i}"), chars.into_iter().collect(), informative)
        })
        .collect()
}

/// Ten training texts and a validation set written in a disjoint alphabet,
/// so fitting the training set cannot help validation.
pub fn overfit_corpus() -> (Vec<LabeledMessage>, Vec<LabeledMessage>) {
    let train_words = ["abc", "bca", "cab", "acb", "bac", "cba", "aab", "bba", "abb", "baa"];
    let train = train_words
        .iter()
        .enumerate()
        .map(|(i, w)| labeled(format!("t{i}"), format!("{w} {w} {w}"), i % 2 == 0))
        .collect();
    let val_words = ["xyz", "zyx", "yzx", "xzy", "zxy", "yxz", "xxy", "yyz", "zzx", "xyy"];
    let validation = val_words
        .iter()
        .enumerate()
        .map(|(i, w)| labeled(format!("v{i}"), format!("{w} {w} {w}"), i % 2 == 1))
        .collect();
    (train, validation)
}

/// Gate training data: a message is informative when it carries any tag.
pub fn world_labeled(msgs: &[WorldMessage]) -> Vec<LabeledMessage> {
    msgs.iter()
        .map(|m| LabeledMessage {
            message: m.message.clone(),
            label: if m.actions.is_empty() {
                BinaryInformativeness::NotInformative
            } else {
                BinaryInformativeness::Informative
            },
        })
        .collect()
}

pub fn world_ensemble(seed: u64) -> crisis_triage::actionability::Ensemble {
    use crisis_triage::actionability::{train_ensemble, SvmHyperparams};
    let train: Vec<_> = world_messages(400, 5, 1)
        .iter()
        .map(|m| (crisis_triage::text::tokenize(m.message.text()), m.actions.clone()))
        .collect();
    train_ensemble(
        &train,
        &world_keywords(),
        &world_embeddings(),
        &crisis_triage::features::FeatureConfig::default(),
        &SvmHyperparams::default(),
        seed,
    )
    .unwrap()
    .0
}

pub fn world_gate(seed: u64, epochs: usize) -> crisis_triage::informativeness::CnnModel {
    use crisis_triage::informativeness::{init_model, train_split};
    let labeled = world_labeled(&world_messages(200, 5, 3));
    let split = crisis_triage::corpus::Split {
        train: labeled[..150].to_vec(),
        validation: labeled[150..].to_vec(),
    };
    let model = init_model(&CnnConfig {
        max_epochs: epochs,
        ..small_cnn(seed)
    })
    .unwrap();
    train_split(&model, &split).unwrap().0
}

/// Everything one end-to-end run produces, as bytes.
#[derive(Debug, PartialEq)]
pub struct RunOutput {
    pub gate: Vec<u8>,
    pub ensemble: Vec<u8>,
    pub classified: Vec<u8>,
    pub svg: String,
    pub csv: String,
}

/// Train both stages, classify a dated stream and render its profile.
pub fn full_run(seed: u64) -> RunOutput {
    use crisis_triage::pipeline::Pipeline;
    use crisis_triage::profile::{build_profile, render_chart, DEFAULT_BUCKET_WIDTH};
    let gate = world_gate(seed, 8);
    let ensemble = world_ensemble(seed);
    let gate_bytes = gate.to_bytes().unwrap();
    let ensemble_bytes = ensemble.to_bytes().unwrap();
    let pipeline = Pipeline::new(gate, ensemble, world_embeddings(), 0.5).unwrap();
    let stream = world_messages(300, 5, 11);
    let mut input = Vec::new();
    for m in &stream {
        let record = crisis_triage::corpus::MessageRecord::from_message(&m.message);
        input.extend(serde_json::to_vec(&record).unwrap());
        input.push(b'\n');
    }
    let mut classified = Vec::new();
    pipeline.classify_stream(&input[..], &mut classified).unwrap();
    let tagged: Vec<(Message, ActionSet)> = stream
        .iter()
        .map(|m| (m.message.clone(), pipeline.classify_text(m.message.text()).unwrap().1))
        .collect();
    let chart = render_chart(&build_profile(&tagged, DEFAULT_BUCKET_WIDTH).unwrap()).unwrap();
    RunOutput {
        gate: gate_bytes,
        ensemble: ensemble_bytes,
        classified,
        svg: chart.svg,
        csv: chart.csv,
    }
}

/// Per-bucket tag proportions by direct counting.
pub fn profile_oracle(tagged: &[(Message, ActionSet)], width: i64) -> Vec<[f64; 9]> {
    let t0 = tagged.iter().map(|(m, _)| m.timestamp().unwrap()).min().unwrap();
    let mut counts: std::collections::BTreeMap<i64, [usize; 9]> = Default::default();
    for (m, set) in tagged {
        let b = (m.timestamp().unwrap() - t0).div_euclid(width);
        let row = counts.entry(b).or_default();
        for t in set.iter() {
            row[t.index()] += 1;
        }
    }
    let last = *counts.keys().last().unwrap();
    (0..=last)
        .map(|b| {
            let row = counts.get(&b).copied().unwrap_or_default();
            let total: usize = row.iter().sum();
            row.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        })
        .collect()
}

/// Read segment heights back out of a rendered chart. Returns the number of
/// segments found and the largest gap, in display units, from the expected
/// `proportion * BAR_HEIGHT`.
pub fn segment_deviation(svg: &str, proportions: &[[f64; 9]]) -> (usize, f64) {
    let rect = regex::Regex::new(
        r#"data-bucket="(\d+)" data-category="([A-I])" x="[^"]+" y="[^"]+" width="[^"]+" height="([^"]+)""#,
    )
    .unwrap();
    let mut seen = 0;
    let mut worst: f64 = 0.0;
    for cap in rect.captures_iter(svg) {
        let b: usize = cap[1].parse().unwrap();
        let t = ActionabilityType::from_code(cap[2].chars().next().unwrap()).unwrap();
        let h: f64 = cap[3].parse().unwrap();
        let expected = proportions[b][t.index()] * crisis_triage::profile::BAR_HEIGHT;
        worst = worst.max((h - expected).abs());
        seen += 1;
    }
    (seen, worst)
}
