use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use crisis_triage::actionability::{train_ensemble, ActionSet, ActionabilityType, SvmHyperparams};
use crisis_triage::features::{FeatureConfig, KeywordList};
use crisis_triage::informativeness::{init_model, CnnConfig, ConvLayer};
use crisis_triage::text::{tokenize, EmbeddingTable};
use crisis_triage_ffi::*;

/// Tiny models on a two-word world: "flood" tags category A, "road" tags D.
fn write_models(dir: &Path) {
    let mut table = EmbeddingTable::new(3);
    table.insert("flood", vec![1.0, 0.0, 0.1]).unwrap();
    table.insert("road", vec![0.0, 1.0, 0.1]).unwrap();
    table.insert("hello", vec![0.0, 0.1, 1.0]).unwrap();
    std::fs::write(dir.join("emb.txt"), table.to_text()).unwrap();
    let lists: Vec<KeywordList> = ActionabilityType::ALL
        .iter()
        .map(|&t| {
            let word = if t == ActionabilityType::AccessibilityChange { "road" } else { "flood" };
            KeywordList::new(t, [word])
        })
        .collect();
    let set = |codes: &[ActionabilityType]| codes.iter().copied().collect::<ActionSet>();
    let corpus = vec![
        (tokenize("flood flood"), set(&[ActionabilityType::Needs])),
        (tokenize("flood"), set(&[ActionabilityType::Needs])),
        (tokenize("road road"), set(&[ActionabilityType::AccessibilityChange])),
        (tokenize("road"), set(&[ActionabilityType::AccessibilityChange])),
        (tokenize("hello"), ActionSet::new()),
        (tokenize("hello hello"), ActionSet::new()),
    ];
    // Categories other than A and D need both classes too.
    let mut corpus = corpus;
    for t in ActionabilityType::ALL {
        if t != ActionabilityType::Needs && t != ActionabilityType::AccessibilityChange {
            corpus.push((tokenize("flood road"), set(&[t])));
        }
    }
    let (ensemble, _) =
        train_ensemble(&corpus, &lists, &table, &FeatureConfig::default(), &SvmHyperparams::default(), 1).unwrap();
    ensemble.save(dir.join("act.bin")).unwrap();
    let gate = init_model(&CnnConfig {
        max_len: 16,
        conv: vec![ConvLayer {
            filters: 2,
            width: 3,
            pool: 2,
        }],
        hidden: vec![4],
        ..CnnConfig::default()
    })
    .unwrap();
    gate.save(dir.join("inf.bin")).unwrap();
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = ct_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Opened {
    _dir: tempfile::TempDir,
    handle: *mut CtPipeline,
}

impl Drop for Opened {
    fn drop(&mut self) {
        unsafe { ct_pipeline_free(self.handle) };
    }
}

fn open(threshold: f64) -> Opened {
    let dir = tempfile::tempdir().unwrap();
    write_models(dir.path());
    let path = |n: &str| c(dir.path().join(n).to_str().unwrap());
    let mut handle = ptr::null_mut();
    let status = unsafe {
        ct_pipeline_open(
            path("inf.bin").as_ptr(),
            path("act.bin").as_ptr(),
            path("emb.txt").as_ptr(),
            3,
            threshold,
            &mut handle,
        )
    };
    assert_eq!(status, CtStatus::Ok, "{}", last_error());
    assert!(!handle.is_null());
    Opened { _dir: dir, handle }
}

#[test]
fn classify_matches_the_library() {
    let p = open(0.01);
    let mut out = CtClassification::default();
    let text = c("flood flood");
    assert_eq!(unsafe { ct_classify(p.handle, text.as_ptr(), &mut out) }, CtStatus::Ok);
    assert_eq!(out.informative, 1);
    assert!(out.probability_informative > 0.0 && out.probability_informative < 1.0);
    assert_ne!(out.actions & 1, 0, "{out:?}");
    assert_eq!(out.actions >> CT_CATEGORY_COUNT, 0);
    assert_eq!(unsafe { ct_pipeline_actionability_calls(p.handle) }, 1);

    let mut json = ptr::null_mut();
    let id = c("m1");
    assert_eq!(unsafe { ct_classify_json(p.handle, id.as_ptr(), text.as_ptr(), &mut json) }, CtStatus::Ok);
    let s = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { ct_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["id"], "m1");
    assert_eq!(v["informative"], true);
    assert!(v["actions"].as_array().unwrap().contains(&serde_json::json!("A")));
}

#[test]
fn closed_gate_reports_no_actions() {
    let p = open(0.999_999);
    let mut out = CtClassification::default();
    let text = c("flood flood");
    assert_eq!(unsafe { ct_classify(p.handle, text.as_ptr(), &mut out) }, CtStatus::Ok);
    assert_eq!(out.informative, 0);
    assert_eq!(out.actions, 0);
    assert_eq!(unsafe { ct_pipeline_actionability_calls(p.handle) }, 0);
}

#[test]
fn errors_carry_status_and_message() {
    let mut handle = ptr::null_mut();
    let missing = c("/nonexistent/inf.bin");
    let status = unsafe { ct_pipeline_open(missing.as_ptr(), missing.as_ptr(), missing.as_ptr(), 0, 0.5, &mut handle) };
    assert_eq!(status, CtStatus::Io);
    assert!(handle.is_null());
    assert!(last_error().contains("/nonexistent/inf.bin"));

    let status = unsafe { ct_pipeline_open(ptr::null(), missing.as_ptr(), missing.as_ptr(), 0, 0.5, &mut handle) };
    assert_eq!(status, CtStatus::NullArgument);
    assert!(last_error().contains("informativeness_model"));

    let p = open(0.5);
    assert_eq!(unsafe { ct_pipeline_set_threshold(p.handle, 1.5) }, CtStatus::InvalidArgument);
    assert_eq!(unsafe { ct_pipeline_set_threshold(p.handle, 0.3) }, CtStatus::Ok);
    let bad = [0xffu8, 0xfe, 0];
    let mut out = CtClassification::default();
    assert_eq!(unsafe { ct_classify(p.handle, bad.as_ptr().cast(), &mut out) }, CtStatus::InvalidUtf8);
    assert_eq!(unsafe { ct_classify(ptr::null(), bad.as_ptr().cast(), &mut out) }, CtStatus::NullArgument);
    let text = c("x");
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ct_classify_json(p.handle, ptr::null(), text.as_ptr(), &mut json) }, CtStatus::NullArgument);
    assert!(json.is_null());
    assert!(last_error().contains("id"));
}

#[test]
fn category_table() {
    for i in 0..CT_CATEGORY_COUNT {
        let t = ActionabilityType::ALL[i as usize];
        assert_eq!(ct_category_code(i) as u8 as char, t.code());
        let name = unsafe { CStr::from_ptr(ct_category_name(i)) };
        assert_eq!(name.to_str().unwrap(), t.name());
    }
    assert_eq!(ct_category_code(9), 0);
    assert!(ct_category_name(9).is_null());
    let v = unsafe { CStr::from_ptr(ct_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/crisis_triage.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ct_pipeline_open",
        "ct_pipeline_free",
        "ct_classify",
        "ct_classify_json",
        "ct_string_free",
        "ct_last_error",
        "CT_STATUS_OK",
        "typedef struct CtPipeline CtPipeline",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // Syntax check with the system C compiler when one is installed.
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
