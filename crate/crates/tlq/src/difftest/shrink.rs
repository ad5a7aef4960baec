//! Greedy counterexample minimisation by subterm replacement and row
//! deletion. Every candidate program is re-typechecked before it is tried.

use tlq_core::model::{Bag, Term, Time};

use super::gen::well_typed_in;
use super::Trial;

/// Upper bound on how many candidates one shrink may evaluate.
const BUDGET: usize = 2000;

fn node_at(t: &Term, idx: usize) -> Option<&Term> {
    fn go<'t>(t: &'t Term, idx: &mut usize) -> Option<&'t Term> {
        if *idx == 0 {
            return Some(t);
        }
        *idx -= 1;
        for c in t.children() {
            if let Some(found) = go(c, idx) {
                return Some(found);
            }
        }
        None
    }
    go(t, &mut idx.clone())
}

fn replace_at(t: &Term, idx: usize, new: &Term) -> Term {
    fn go(t: &mut Term, idx: &mut usize, new: &Term) -> bool {
        if *idx == 0 {
            *t = new.clone();
            return true;
        }
        *idx -= 1;
        for c in t.children_mut() {
            if go(c, idx, new) {
                return true;
            }
        }
        false
    }
    let mut out = t.clone();
    go(&mut out, &mut idx.clone(), new);
    out
}

fn fillers() -> Vec<Term> {
    vec![
        Term::EmptyBag,
        Term::unit(),
        Term::int(0),
        Term::bool(true),
        Term::bool(false),
        Term::str("a"),
        Term::time(Time::new(0)),
    ]
}

/// Smaller programs derived from `t`: each node replaced by one of its
/// children or grandchildren, or by a constant.
pub fn candidates(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    for idx in 0..t.size() {
        let node = node_at(t, idx).expect("index in range");
        let mut subs: Vec<Term> = Vec::new();
        for c in node.children() {
            subs.push(c.clone());
            for g in c.children() {
                subs.push(g.clone());
            }
        }
        for f in fillers() {
            if f.size() < node.size() || (node.size() == 1 && f != *node) {
                subs.push(f);
            }
        }
        for s in subs {
            let cand = replace_at(t, idx, &s);
            if cand.size() <= t.size() && cand != *t {
                out.push(cand);
            }
        }
    }
    out.sort_by_key(Term::size);
    out.dedup();
    out
}

/// Shrinks `trial` while `fails` keeps reporting a failure.
pub fn shrink(trial: &Trial, fails: &dyn Fn(&Trial) -> bool) -> Trial {
    let mut cur = trial.clone();
    let mut spent = 0;
    'outer: loop {
        for cand in candidates(&cur.term) {
            if spent >= BUDGET {
                break 'outer;
            }
            if !well_typed_in(&cur.schema, cur.dialect, &cand) {
                continue;
            }
            spent += 1;
            let next = Trial {
                term: cand,
                ..cur.clone()
            };
            if fails(&next) {
                cur = next;
                continue 'outer;
            }
        }
        break;
    }
    // Then drop database rows one at a time.
    'rows: loop {
        let tables: Vec<(String, Bag)> = cur
            .db
            .tables
            .iter()
            .map(|(n, b)| (n.clone(), b.clone()))
            .collect();
        for (name, rows) in tables {
            for row in rows.counts().map(|(v, _)| v.clone()) {
                if spent >= BUDGET {
                    break 'rows;
                }
                spent += 1;
                let mut fewer = Bag::new();
                let mut skipped = false;
                for v in rows.iter() {
                    if !skipped && *v == row {
                        skipped = true;
                    } else {
                        fewer.insert(v.clone());
                    }
                }
                let mut next = cur.clone();
                next.db.set_table(name.clone(), fewer);
                if fails(&next) {
                    cur = next;
                    continue 'rows;
                }
            }
        }
        break;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use tlq_core::model::PrimOp;

    #[test]
    fn replacement_addresses_nodes_in_preorder() {
        let t = Term::binop(PrimOp::Add, Term::int(1), Term::int(2));
        assert_eq!(node_at(&t, 2), Some(&Term::int(2)));
        let r = replace_at(&t, 1, &Term::int(7));
        assert_eq!(r, Term::binop(PrimOp::Add, Term::int(7), Term::int(2)));
        let c = candidates(&t);
        assert!(c.contains(&Term::int(1)));
        assert!(c.iter().all(|x| x.size() <= t.size()));
    }
}
