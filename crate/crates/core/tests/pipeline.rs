mod common;

use crisis_triage::actionability::ActionSet;
use crisis_triage::corpus::Message;
use crisis_triage::informativeness::init_model;
use crisis_triage::pipeline::Pipeline;
use crisis_triage::profile::{build_profile, render_chart, DEFAULT_BUCKET_WIDTH};

/// An untrained gate with the threshold at the median probability, so the
/// stream is split roughly in half.
fn half_open_pipeline(stream: &[common::WorldMessage]) -> Pipeline {
    let gate = init_model(&common::small_cnn(21)).unwrap();
    let mut p = Pipeline::new(gate, common::world_ensemble(4), common::world_embeddings(), 0.5).unwrap();
    let mut probs: Vec<f64> = stream
        .iter()
        .map(|m| p.screen(m.message.text()).unwrap().probability_informative)
        .collect();
    probs.sort_by(f64::total_cmp);
    p.set_threshold(probs[probs.len() / 2]).unwrap();
    p
}

#[test]
fn rejected_messages_never_reach_the_tagger() {
    let stream = common::world_messages(200, 5, 8);
    let pipeline = half_open_pipeline(&stream);
    let mut accepted = 0;
    for m in &stream {
        let before = pipeline.actionability_calls();
        let (decision, actions) = pipeline.classify_text(m.message.text()).unwrap();
        let after = pipeline.actionability_calls();
        if decision.decision.is_informative() {
            accepted += 1;
            assert_eq!(after, before + 1);
        } else {
            assert_eq!(after, before, "{}", m.message.id());
            assert!(actions.is_empty());
        }
    }
    assert!(accepted > 0 && accepted < 200, "{accepted}");
    assert_eq!(pipeline.actionability_calls(), accepted);
}

#[test]
fn stream_output_keeps_order_and_gates() {
    let stream = common::world_messages(200, 5, 9);
    let pipeline = half_open_pipeline(&stream);
    let mut input = Vec::new();
    for m in &stream {
        let record = crisis_triage::corpus::MessageRecord::from_message(&m.message);
        input.extend(serde_json::to_vec(&record).unwrap());
        input.push(b'\n');
    }
    let mut out = Vec::new();
    assert_eq!(pipeline.classify_stream(&input[..], &mut out).unwrap(), 200);
    let lines: Vec<serde_json::Value> = out
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 200);
    let accepted = lines.iter().filter(|v| v["informative"] == true).count();
    assert_eq!(pipeline.actionability_calls(), accepted);
    for (v, m) in lines.iter().zip(&stream) {
        assert_eq!(v["id"], m.message.id());
        if v["informative"] == false {
            assert_eq!(v["actions"], serde_json::json!([]));
        }
    }
}

#[test]
fn malformed_stream_line_is_an_error() {
    let stream = common::world_messages(10, 1, 1);
    let pipeline = half_open_pipeline(&stream);
    let input = b"{\"id\":\"a\",\"text\":\"ok\"}\n{\"id\":\"b\"}\n";
    let err = pipeline.classify_stream(&input[..], Vec::new()).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

fn five_day_stream() -> Vec<(Message, ActionSet)> {
    common::world_messages(500, 5, 12)
        .into_iter()
        .map(|m| (m.message, m.actions))
        .collect()
}

#[test]
fn profile_matches_counting_oracle() {
    let tagged = five_day_stream();
    let profile = build_profile(&tagged, DEFAULT_BUCKET_WIDTH).unwrap();
    let expected = common::profile_oracle(&tagged, DEFAULT_BUCKET_WIDTH);
    assert_eq!(profile.proportions.len(), 5);
    assert_eq!(profile.proportions, expected);
    for row in &profile.proportions {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn svg_segments_follow_proportions() {
    let tagged = five_day_stream();
    let profile = build_profile(&tagged, DEFAULT_BUCKET_WIDTH).unwrap();
    let chart = render_chart(&profile).unwrap();
    let (seen, worst) = common::segment_deviation(&chart.svg, &profile.proportions);
    assert!(worst <= 0.5, "{worst}");
    let nonzero = profile.proportions.iter().flatten().filter(|p| **p > 0.0).count();
    assert_eq!(seen, nonzero);
    assert_eq!(chart.csv.lines().count(), 6);
}

#[test]
fn end_to_end_runs_are_byte_identical() {
    let a = common::full_run(5);
    let b = common::full_run(5);
    assert_eq!(a, b);
    assert!(!a.classified.is_empty());
}
