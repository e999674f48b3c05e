//! Parser for network specifications.

use std::collections::BTreeSet;

use crate::error::{Diagnostic, Error, Result};
use crate::syntax::{Cursor, Tok};

use super::ast::{Decl, ModelExpr, NetSpec};

fn annotations(c: &mut Cursor, out: &mut Vec<String>) {
    while let Some(Tok::Annot(a)) = c.peek() {
        out.push(a.clone());
        c.bump();
    }
}

fn primary(c: &mut Cursor) -> Result<ModelExpr> {
    if c.eat_punct("{") {
        let e = expr(c)?;
        c.expect_punct("}")?;
        return Ok(ModelExpr::Group(Box::new(e)));
    }
    Ok(ModelExpr::Ref(c.expect_ident()?))
}

fn postfix(c: &mut Cursor) -> Result<ModelExpr> {
    let mut e = primary(c)?;
    loop {
        if c.is_kw("with") && c.is_kw_at(1, "translation") {
            c.bump();
            c.bump();
            let comorphism = c.expect_ident()?;
            let mut map = Vec::new();
            if c.is_kw("with") && !c.is_kw_at(1, "translation") {
                c.bump();
                loop {
                    let a = c.expect_ident()?;
                    c.expect_punct("|->")?;
                    let b = c.expect_ident()?;
                    map.push((a, b));
                    if !c.eat_punct(",") {
                        break;
                    }
                }
            }
            e = ModelExpr::Translate {
                base: Box::new(e),
                comorphism,
                map,
            };
        } else if c.eat_kw("hide") {
            c.expect_kw("along")?;
            e = ModelExpr::Hide {
                base: Box::new(e),
                morphism: c.expect_ident()?,
            };
        } else if c.eat_kw("reveal") {
            let mut symbols = vec![c.expect_ident()?];
            while c.eat_punct(",") {
                symbols.push(c.expect_ident()?);
            }
            e = ModelExpr::Reveal {
                base: Box::new(e),
                symbols,
            };
        } else {
            return Ok(e);
        }
    }
}

fn expr(c: &mut Cursor) -> Result<ModelExpr> {
    let mut e = postfix(c)?;
    loop {
        if c.eat_kw("and") {
            e = ModelExpr::And(Box::new(e), Box::new(postfix(c)?));
        } else if c.eat_kw("then") {
            e = ModelExpr::Then(Box::new(e), c.expect_ident()?);
        } else {
            return Ok(e);
        }
    }
}

pub fn parse_dol(text: &str) -> Result<NetSpec> {
    let mut c = Cursor::new(text)?;
    let mut spec = NetSpec::default();
    let mut names = BTreeSet::new();
    let mut diags = Vec::new();
    loop {
        c.skip_semis();
        let mut anns = Vec::new();
        annotations(&mut c, &mut anns);
        if c.at_end() {
            if !anns.is_empty() {
                return Err(c.error("annotation without a declaration"));
            }
            break;
        }
        let (line, col) = c.loc();
        let decl = if c.eat_kw("model") {
            let name = c.expect_ident()?;
            c.expect_punct("=")?;
            annotations(&mut c, &mut anns);
            let e = expr(&mut c)?;
            c.expect_kw("end")?;
            Decl::Model {
                name,
                annotations: anns,
                expr: e,
            }
        } else if c.eat_kw("refinement") {
            let name = c.expect_ident()?;
            c.expect_punct("=")?;
            annotations(&mut c, &mut anns);
            let a = expr(&mut c)?;
            c.expect_kw("refined")?;
            c.expect_kw("to")?;
            let b = expr(&mut c)?;
            c.expect_kw("end")?;
            Decl::Refinement {
                name,
                annotations: anns,
                abstract_side: a,
                concrete_side: b,
            }
        } else if c.eat_kw("network") {
            let name = c.expect_ident()?;
            c.expect_punct("=")?;
            annotations(&mut c, &mut anns);
            let mut elements = Vec::new();
            if !c.is_kw("end") {
                elements.push(c.expect_ident()?);
                while c.eat_punct(",") {
                    elements.push(c.expect_ident()?);
                }
            }
            c.expect_kw("end")?;
            Decl::Network {
                name,
                annotations: anns,
                elements,
            }
        } else if c.eat_kw("library") {
            if !anns.is_empty() {
                return Err(Error::at(line, col, "libraries take no annotations"));
            }
            c.expect_punct("{")?;
            let mut entries = Vec::new();
            loop {
                while c.eat_punct(";") || c.eat_punct(",") {}
                if c.eat_punct("}") {
                    break;
                }
                let n = c.expect_ident()?;
                c.expect_punct("=")?;
                entries.push((n, c.expect_str()?));
            }
            Decl::Library { entries }
        } else {
            return Err(c.unexpected());
        };
        if let Some(n) = decl.name() {
            if !names.insert(n.to_string()) {
                diags.push(Diagnostic::new(line, col, format!("duplicate declaration {n}")));
            }
        }
        spec.decls.push(decl);
    }
    if !diags.is_empty() {
        return Err(Error::Diagnostics(diags));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hide_along() {
        let s = parse_dol("model ATM_Bank_Interaction_cd = ATM_Bank_Interaction hide along sd2cd end").unwrap();
        assert_eq!(
            s.decls[0],
            Decl::Model {
                name: "ATM_Bank_Interaction_cd".into(),
                annotations: vec![],
                expr: ModelExpr::Hide {
                    base: Box::new(ModelExpr::Ref("ATM_Bank_Interaction".into())),
                    morphism: "sd2cd".into()
                }
            }
        );
    }

    #[test]
    fn refinement_with_group() {
        let s = parse_dol(
            "refinement r1 = { User_Interface reveal ATM_Bank_Interaction_cd } refined to ATM_Bank_Interaction_cd end",
        )
        .unwrap();
        let Decl::Refinement { abstract_side, .. } = &s.decls[0] else {
            panic!("not a refinement")
        };
        assert!(matches!(abstract_side, ModelExpr::Group(_)));
    }

    #[test]
    fn network_annotation_in_either_place() {
        let a = parse_dol("network N = %consistent A, B, r1 end").unwrap();
        let b = parse_dol("%consistent network N = A, B, r1 end").unwrap();
        assert_eq!(a, b);
        let Decl::Network { annotations, elements, .. } = &a.decls[0] else {
            panic!("not a network")
        };
        assert_eq!(annotations, &["consistent"]);
        assert_eq!(elements.len(), 3);
    }

    #[test]
    fn precedence() {
        let s = parse_dol(
            "model System = A with translation stm2cmp with cid |-> atm and B with translation stm2cmp with cid |-> bank then cmp end",
        )
        .unwrap();
        let Decl::Model { expr, .. } = &s.decls[0] else {
            panic!("not a model")
        };
        let ModelExpr::Then(lhs, native) = expr else {
            panic!("then is outermost")
        };
        assert_eq!(native, "cmp");
        assert!(matches!(**lhs, ModelExpr::And(_, _)));
    }

    #[test]
    fn duplicates_are_reported() {
        let e = parse_dol("model A = X end model A = Y end").unwrap_err();
        assert_eq!(e.diagnostics()[0].line, 1);
    }

    #[test]
    fn printer_round_trip() {
        let src = "library { cmp = \"views/cmp.cmp\" }
            model S = { A reveal x, y } and B hide along sd2cd then T end
            refinement r = A refined to { S with translation cd2stm } end
            network N = %consistent A, r end";
        let s = parse_dol(src).unwrap();
        assert_eq!(parse_dol(&s.to_string()).unwrap(), s);
    }
}
