use std::path::PathBuf;

use gsttcm::config::Library;
use gsttcm::trellis::{enumerate_simple_error_events, shortest_events, validate_code};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn shipped() -> Library {
    Library::load(&config("gsttcm.cfg")).expect("shipped configuration loads")
}

#[test]
fn codes_have_declared_structure() {
    let lib = shipped();
    let expected: [(&str, usize, &[u64], f64); 4] = [
        ("e8_4", 2, &[1, 2], 7.0),
        ("e8_16", 3, &[2, 1, 2], 7.0),
        ("l8_16", 3, &[4, 1, 2], 6.0),
        ("l8_64", 4, &[4, 1, 2, 4], 6.0),
    ];
    for (name, s, profile, rate) in expected {
        let cfg = lib.gsttcm(name, 120).unwrap();
        assert!(cfg.boundary_aware);
        let report = validate_code(&cfg, Some(profile), Some(rate));
        assert!(report.ok(), "{name}: {:?}", report.checks);
        let events = enumerate_simple_error_events(&cfg, s + 1).unwrap();
        let se = shortest_events(&events).unwrap();
        assert_eq!(se.length, s, "{name}");
        assert_eq!(se.profile, profile, "{name}");
        assert!(se.sequences.contains(&profile.to_vec()), "{name}");
    }
}

#[test]
fn det_sequences_match_trellis_tables() {
    let lib = shipped();
    for name in ["e8_4", "e8_16", "l8_16", "l8_64"] {
        let spec = lib.code(name).unwrap();
        let cfg = lib.gsttcm(name, 120).unwrap();
        let report = validate_code(&cfg, None, None);
        let profile = report.shortest.unwrap().profile;
        assert_eq!(spec.det_sequences, vec![profile], "{name}");
        assert_eq!(cfg.trellis.num_states(), spec.states);
    }
}

#[test]
fn analysis_grid_has_both_tables() {
    let lib = shipped();
    let cases = lib.analysis_cases().unwrap();
    assert_eq!(cases.len(), 24);
    assert!(cases.iter().all(|c| c.frame_len == 120 && c.published.is_some()));
    let blocks: Vec<usize> = cases.iter().take(6).map(|c| c.n).collect();
    assert_eq!(blocks, [1, 3, 5, 20, 40, 120]);
}

#[test]
fn plan_references_shipped_code() {
    let lib = shipped();
    let plan = gsttcm::config::SimulationPlan::load(&config("plan.cfg")).unwrap();
    assert!(lib.code(&plan.code).is_ok());
    assert!(plan.block_lens.iter().all(|n| plan.frame_len % n == 0));
}
