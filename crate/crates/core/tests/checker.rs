mod support;

use std::fs;

use viewnet::checker::{check_model, check_network, check_refinement, write_bundle, Strategy, VerdictKind};
use viewnet::structural::Bounds;
use viewnet::Error;

use support::*;

fn bounds() -> Bounds {
    Bounds::default()
}

#[test]
fn strategies_agree_on_every_network() {
    for (rel, net, expected) in NETWORKS {
        let g = graph(rel);
        let a = check_network(&g, net, Strategy::Incremental, &bounds(), None).unwrap();
        let b = check_network(&g, net, Strategy::Monolithic, &bounds(), None).unwrap();
        assert_eq!(a.verdict, b.verdict, "{rel} {net}");
        assert_eq!(a.verdict == VerdictKind::Consistent, *expected, "{rel} {net}");
    }
}

#[test]
fn inconsistent_verdicts_carry_a_reason() {
    let r = check_network(&graph("atm_mutated/atm.dol"), "N", Strategy::Monolithic, &bounds(), None).unwrap();
    assert_eq!(r.verdict, VerdictKind::Inconsistent);
    assert!(r.detail.unwrap().contains("ATM_Bank_Interaction"));
    assert!(r.verdict_full.unwrap().witness().is_none());
}

#[test]
fn bundles_round_trip_through_the_decentralized_strategy() {
    let g = graph("atm/atm.dol");
    let r = check_network(&g, "N", Strategy::Incremental, &bounds(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), r.verdict_full.as_ref().unwrap().witness().unwrap(), "User_Interface").unwrap();
    for f in ["init.od", "trace.txt", "ts.txt", "realizations.txt"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let back = check_network(&g, "N", Strategy::Decentralized, &bounds(), Some(dir.path())).unwrap();
    assert_eq!(back.verdict, VerdictKind::Consistent);
    assert_eq!(back.witness, r.witness);
}

#[test]
fn tampered_bundles_are_rejected() {
    let g = graph("atm/atm.dol");
    let r = check_network(&g, "N", Strategy::Incremental, &bounds(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), r.verdict_full.as_ref().unwrap().witness().unwrap(), "User_Interface").unwrap();
    let digests = dir.path().join("ts.txt");
    let text = fs::read_to_string(&digests).unwrap();
    let forged: String = text
        .lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split('\t').collect();
            let zeros = "0".repeat(cols[4].len());
            cols[4] = &zeros;
            cols.join("\t") + "\n"
        })
        .collect();
    fs::write(&digests, forged).unwrap();
    let err = check_network(&g, "N", Strategy::Decentralized, &bounds(), Some(dir.path())).unwrap_err();
    assert!(matches!(err, Error::Witness(_)), "{err}");
}

#[test]
fn decentralized_needs_a_bundle() {
    let err = check_network(&graph("atm/atm.dol"), "N", Strategy::Decentralized, &bounds(), None).unwrap_err();
    assert!(matches!(err, Error::Witness(_)));
}

#[test]
fn models_and_links_are_checked_on_their_own() {
    let g = graph("atm_mutated/atm.dol");
    for m in ["User_Interface", "ATM_stm", "Bank_stm", "System", "ATM_Bank_Interaction"] {
        assert_eq!(check_model(&g, m, &bounds()).unwrap().0.kind(), VerdictKind::Consistent, "{m}");
    }
    assert_eq!(check_refinement(&g, "r1", &bounds()).unwrap().0.kind(), VerdictKind::Consistent);
    assert_eq!(check_refinement(&g, "r2", &bounds()).unwrap().0.kind(), VerdictKind::Inconsistent);
    assert!(check_refinement(&g, "nope", &bounds()).is_err());
}

#[test]
fn unknown_networks_are_errors() {
    let err = check_network(&graph("atm/atm.dol"), "Nope", Strategy::Incremental, &bounds(), None).unwrap_err();
    assert!(matches!(err, Error::UnknownNetwork(_)), "{err}");
}

#[test]
fn structured_reports_have_the_expected_keys() {
    let r = check_network(&graph("pairwise/pairwise.dol"), "All", Strategy::Incremental, &bounds(), None).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for k in ["network", "strategy", "verdict", "models", "links", "bounds", "stats", "taxonomy"] {
        assert!(v.get(k).is_some(), "{k}");
    }
    assert_eq!(v["verdict"], "INCONSISTENT");
    assert!(v["stats"]["exploredCompletely"].as_bool().unwrap());
}

#[test]
fn reports_are_deterministic() {
    let g = graph("atm/atm.dol");
    let a = check_network(&g, "N", Strategy::Incremental, &bounds(), None).unwrap();
    let b = check_network(&g, "N", Strategy::Incremental, &bounds(), None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_text(), b.to_text());
}
