use std::path::{Path, PathBuf};

use viewnet::kernel::InstitutionId;
use viewnet::netlang::{export_dot, parse_dol, resolve, resolve_file, Library};
use viewnet::Error;

fn corpus(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(rel)
}

#[test]
fn atm_resolves() {
    let g = resolve_file(&corpus("atm/atm.dol")).unwrap();
    assert!(g.nodes.len() >= 6);
    assert_eq!(g.links.len(), 2);
    let n = g.network("N").unwrap();
    assert_eq!(n.nodes.len(), 5);
    assert_eq!(n.links, ["r1", "r2"]);
    assert_eq!(g.node("System").unwrap().institution(), InstitutionId::Cmp);
    assert_eq!(g.node("ATM_stm").unwrap().institution(), InstitutionId::Stm);
    assert_eq!(g.node("ATM_Bank_Interaction_cd").unwrap().institution(), InstitutionId::Cd);
    let r2 = g.link("r2").unwrap();
    assert_eq!(g.node(&r2.concrete_node).unwrap().institution(), InstitutionId::Sd);
}

#[test]
fn corpus_files_round_trip() {
    {
        let f = "atm/atm.dol";
        let text = std::fs::read_to_string(corpus(f)).unwrap();
        let ast = parse_dol(&text).unwrap();
        assert_eq!(parse_dol(&ast.to_string()).unwrap(), ast);
    }
}

#[test]
fn self_reference_is_a_cycle() {
    let spec = parse_dol("model A = A and A end").unwrap();
    assert!(matches!(resolve(&spec, Library::new(corpus("atm"))), Err(Error::Cycle(_))));
}

#[test]
fn refinement_without_hide_is_a_mismatch() {
    let spec = parse_dol(
        "model System = ATM_stm with translation stm2cmp with cid |-> atm and Bank_stm with translation stm2cmp with cid |-> bank then cmp end
         model ATM_stm = User_Interface with translation cd2stm then ATM_stm_definition end
         model Bank_stm = User_Interface with translation cd2stm then Bank_stm_definition end
         refinement r2 = ATM_Bank_Interaction refined to System end",
    )
    .unwrap();
    let e = resolve(&spec, Library::new(corpus("atm"))).unwrap_err();
    assert!(matches!(e, Error::SignatureMismatch(_)), "{e}");
}

#[test]
fn unknown_reference() {
    let spec = parse_dol("model A = Nowhere end").unwrap();
    assert!(matches!(resolve(&spec, Library::new(corpus("atm"))), Err(Error::Unresolved(_))));
}

#[test]
fn dot_export() {
    let g = resolve_file(&corpus("atm/atm.dol")).unwrap();
    let dot = export_dot(&g);
    assert_eq!(dot, export_dot(&resolve_file(&corpus("atm/atm.dol")).unwrap()));
    for r in ["r1", "r2"] {
        assert!(dot.lines().any(|l| l.contains("style=dashed") && l.contains(&format!("label=\"{r}\""))));
    }
    assert!(dot.contains("\"System:CMP\""));
    let empty = resolve(&parse_dol("").unwrap(), Library::new(".")).unwrap();
    assert_eq!(export_dot(&empty), "digraph development {\n}\n");
}
