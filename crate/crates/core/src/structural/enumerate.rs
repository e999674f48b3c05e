//! Bounded enumeration of conformant snapshots, one per isomorphism class.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::expr::Value;
use crate::kernel::{Sentence, Theory};

use super::snapshot::{conforms, multiplicity_holds, Object, Snapshot};
use super::ts::Bounds;

type LinkKey = Vec<(usize, usize, usize)>;

/// All conformant snapshots with at most `b.max_objects_per_class` objects
/// per class, in canonical order: fewer objects first, then per-class
/// valuation lists, then links. Object ids are `{class}{n}` in lower case.
pub fn enumerate_snapshots(th: &Theory, b: &Bounds) -> Result<Vec<Snapshot>> {
    let sig = &th.signature;
    let classes: Vec<&String> = sig.classes.keys().collect();
    // valuations per class, in type order
    let vals: Vec<Vec<Vec<(String, Value)>>> = classes
        .iter()
        .map(|c| {
            let mut acc: Vec<Vec<(String, Value)>> = vec![Vec::new()];
            for (_, a, t) in sig.all_attrs(c) {
                let mut next = Vec::new();
                for prefix in &acc {
                    for v in t.values() {
                        let mut p = prefix.clone();
                        p.push((a.clone(), v));
                        next.push(p);
                    }
                }
                acc = next;
            }
            acc
        })
        .collect();
    let per_class: Vec<Vec<Vec<usize>>> = vals
        .iter()
        .map(|v| multisets(v.len(), b.max_objects_per_class))
        .collect();

    let mut out: Vec<(usize, Vec<Vec<usize>>, LinkKey, Snapshot)> = Vec::new();
    let mut choice = vec![0usize; classes.len()];
    loop {
        let picks: Vec<Vec<usize>> = choice.iter().enumerate().map(|(k, i)| per_class[k][*i].clone()).collect();
        expand(th, &classes, &vals, &picks, &mut out)?;
        // odometer over per-class choices
        let mut k = 0;
        loop {
            if k == choice.len() {
                out.sort_by(|x, y| (x.0, &x.1, &x.2).cmp(&(y.0, &y.1, &y.2)));
                return Ok(out.into_iter().map(|x| x.3).collect());
            }
            choice[k] += 1;
            if choice[k] < per_class[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// Nondecreasing index vectors of length 0..=max over `n` items.
fn multisets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &layer {
            let start = m.last().copied().unwrap_or(0);
            for i in start..n {
                let mut v = m.clone();
                v.push(i);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn expand(
    th: &Theory,
    classes: &[&String],
    vals: &[Vec<Vec<(String, Value)>>],
    picks: &[Vec<usize>],
    out: &mut Vec<(usize, Vec<Vec<usize>>, LinkKey, Snapshot)>,
) -> Result<()> {
    let sig = &th.signature;
    let mut base = Snapshot::default();
    // (object id, class index, valuation index)
    let mut objs: Vec<(String, usize, usize)> = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        for (n, vi) in picks[k].iter().enumerate() {
            let id = format!("{}{}", c.to_lowercase(), n + 1);
            base.objects.insert(
                id.clone(),
                Object {
                    class: (*c).clone(),
                    attrs: vals[k][*vi].iter().cloned().collect(),
                },
            );
            objs.push((id, k, *vi));
        }
    }
    let assocs: Vec<&String> = sig.assocs.keys().collect();
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (ai, name) in assocs.iter().enumerate() {
        let a = &sig.assocs[*name];
        for (i, (_, ci, _)) in objs.iter().enumerate() {
            if !sig.is_subclass(classes[*ci], &a.a.class) {
                continue;
            }
            for (j, (_, cj, _)) in objs.iter().enumerate() {
                if sig.is_subclass(classes[*cj], &a.b.class) {
                    candidates.push((ai, i, j));
                }
            }
        }
    }
    // permutations within blocks of same class and equal valuation
    let perms = block_permutations(&objs);
    let total = objs.len();
    let mults: Vec<&Sentence> = th
        .sentences
        .iter()
        .filter(|s| matches!(s, Sentence::Multiplicity { .. }))
        .collect();
    let subsets = 1u64 << candidates.len().min(63);
    for mask in 0..subsets {
        let chosen: LinkKey = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| *l)
            .collect();
        if !is_minimal(&chosen, &perms) {
            continue;
        }
        let mut s = base.clone();
        for (ai, i, j) in &chosen {
            s.add_link(assocs[*ai].clone(), objs[*i].0.clone(), objs[*j].0.clone());
        }
        let mut ok = true;
        for m in &mults {
            if let Sentence::Multiplicity { assoc, end, mult } = m {
                if !multiplicity_holds(&s, sig, assoc, *end, mult)? {
                    ok = false;
                    break;
                }
            }
        }
        if ok && conforms(&s, th)? {
            out.push((total, picks.to_vec(), chosen, s));
        }
    }
    Ok(())
}

fn block_permutations(objs: &[(String, usize, usize)]) -> Vec<Vec<usize>> {
    let mut blocks: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, (_, c, v)) in objs.iter().enumerate() {
        blocks.entry((*c, *v)).or_default().push(i);
    }
    let mut perms: Vec<Vec<usize>> = vec![(0..objs.len()).collect()];
    for members in blocks.values().filter(|m| m.len() > 1) {
        let mut next = Vec::new();
        for p in &perms {
            for order in permutations(members) {
                let mut q = p.clone();
                for (from, to) in members.iter().zip(&order) {
                    q[*from] = *to;
                }
                next.push(q);
            }
        }
        perms = next;
    }
    perms
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn is_minimal(links: &LinkKey, perms: &[Vec<usize>]) -> bool {
    perms.iter().all(|p| {
        let mut img: LinkKey = links.iter().map(|(a, i, j)| (*a, p[*i], p[*j])).collect();
        img.sort();
        img >= *links
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structural::parse_cd;

    fn theory(src: &str) -> Theory {
        parse_cd(src).unwrap().theory().unwrap()
    }

    fn bounds(n: usize) -> Bounds {
        Bounds {
            max_objects_per_class: n,
            ..Bounds::default()
        }
    }

    #[test]
    fn one_bool_class_single_object() {
        let th = theory("classdiagram D class C { attr b: Bool }");
        let all = enumerate_snapshots(&th, &bounds(1)).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all[0].objects.is_empty());
        assert_eq!(all[1].objects["c1"].attrs["b"], Value::Bool(false));
        assert_eq!(all[2].objects["c1"].attrs["b"], Value::Bool(true));
    }

    #[test]
    fn one_bool_class_two_objects() {
        let th = theory("classdiagram D class C { attr b: Bool }");
        assert_eq!(enumerate_snapshots(&th, &bounds(2)).unwrap().len(), 6);
    }

    #[test]
    fn invariant_filters() {
        let th = theory("classdiagram D class C { attr b: Bool } inv C : self.b");
        let all = enumerate_snapshots(&th, &bounds(2)).unwrap();
        assert_eq!(all.len(), 3);
        for s in &all {
            assert!(s.objects.values().all(|o| o.attrs["b"] == Value::Bool(true)));
        }
    }

    #[test]
    fn symmetric_links_are_reduced() {
        // two indistinguishable A objects and one B: linking either A is the same
        let th = theory("classdiagram D class A class B assoc r : A [*] a -- b [*] B");
        let all = enumerate_snapshots(&th, &bounds(2)).unwrap();
        let two_a_one_b: Vec<_> = all
            .iter()
            .filter(|s| s.objects.len() == 3 && s.objects.contains_key("a2"))
            .collect();
        // links from {a1,a2} to b1: none, one, both
        assert_eq!(two_a_one_b.len(), 3);
    }

    #[test]
    fn multisets_count() {
        assert_eq!(multisets(2, 2).len(), 1 + 2 + 3);
        assert_eq!(multisets(0, 2).len(), 1);
    }
}
