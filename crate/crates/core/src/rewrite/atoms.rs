//! The per-atom rewriting: everything the ontology says entails an atom.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::reasoner::TBoxIndex;
use crate::syntax::{Atom, ConceptExpr, Role};

use super::{FreshVars, PeBody};

/// Render a role atom `r(x, y)`, normalising inverses.
pub fn role_atom(r: &Role, x: &str, y: &str) -> Atom {
    if r.inverted {
        Atom::Binary(r.name.clone(), y.to_string(), x.to_string())
    } else {
        Atom::Binary(r.name.clone(), x.to_string(), y.to_string())
    }
}

/// PE-rewriting of a single query atom: the disjunction of all atoms the
/// ontology knows to entail it.
pub fn atom_rewriting(idx: &TBoxIndex, atom: &Atom, fresh: &mut FreshVars) -> PeBody {
    match atom {
        Atom::Binary(p, x, y) => {
            let disjuncts: Vec<PeBody> = idx
                .roles_below(&Role::new(p.clone()))
                .into_iter()
                .map(|r| PeBody::Atom(role_atom(&r, x, y)))
                .collect();
            or(disjuncts)
        }
        Atom::Unary(a, x) => {
            let disjuncts: Vec<PeBody> = idx
                .concepts_below(&ConceptExpr::Atomic(a.clone()))
                .into_iter()
                .map(|c| concept_atom(c, x, fresh))
                .collect();
            or(disjuncts)
        }
    }
}

/// PE-rewriting of `∃y ρ(z, y)`.
pub fn exists_rewriting(idx: &TBoxIndex, r: &Role, z: &str, fresh: &mut FreshVars) -> PeBody {
    let disjuncts: Vec<PeBody> = idx
        .concepts_below(&ConceptExpr::Exists(r.clone()))
        .into_iter()
        .map(|c| concept_atom(c, z, fresh))
        .collect();
    or(disjuncts)
}

fn concept_atom(c: ConceptExpr, x: &str, fresh: &mut FreshVars) -> PeBody {
    match c {
        ConceptExpr::Atomic(b) => PeBody::Atom(Atom::Unary(b, x.to_string())),
        ConceptExpr::Exists(r) => {
            let v = fresh.next("w");
            PeBody::Exists(alloc::vec![v.clone()], alloc::boxed::Box::new(PeBody::Atom(role_atom(&r, x, &v))))
        }
    }
}

fn or(mut xs: Vec<PeBody>) -> PeBody {
    if xs.len() == 1 {
        xs.pop().unwrap()
    } else {
        PeBody::Or(xs)
    }
}

/// The concrete atoms backing [`atom_rewriting`], for the datalog rules:
/// each disjunct as a bare atom, with `None` or a fresh variable in the
/// second position of existential disjuncts.
pub fn atom_rewriting_disjuncts(
    idx: &TBoxIndex,
    atom: &Atom,
    fresh: &mut FreshVars,
) -> Vec<Atom> {
    match atom {
        Atom::Binary(p, x, y) => idx
            .roles_below(&Role::new(p.clone()))
            .into_iter()
            .map(|r| role_atom(&r, x, y))
            .collect(),
        Atom::Unary(a, x) => idx
            .concepts_below(&ConceptExpr::Atomic(a.clone()))
            .into_iter()
            .map(|c| match c {
                ConceptExpr::Atomic(b) => Atom::Unary(b, x.to_string()),
                ConceptExpr::Exists(r) => {
                    let v = fresh.next("w");
                    role_atom(&r, x, &v)
                }
            })
            .collect(),
    }
}

/// Same for `∃y ρ(z, y)`.
pub fn exists_rewriting_disjuncts(
    idx: &TBoxIndex,
    r: &Role,
    z: &str,
    fresh: &mut FreshVars,
) -> Vec<Atom> {
    idx.concepts_below(&ConceptExpr::Exists(r.clone()))
        .into_iter()
        .map(|c| match c {
            ConceptExpr::Atomic(b) => Atom::Unary(b, z.to_string()),
            ConceptExpr::Exists(s) => {
                let v = fresh.next("w");
                role_atom(&s, z, &v)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_ontology, parse_query};

    #[test]
    fn binary_atom_collects_subroles() {
        let t = parse_ontology("P(x,y) -> R(x,y)\n").unwrap();
        let q = parse_query("q(u,v) :- R(u,v)").unwrap();
        let idx = TBoxIndex::for_query(&t, &q);
        let mut fresh = FreshVars::new(q.vars());
        let pe = atom_rewriting(&idx, &Atom::Binary("R".into(), "u".into(), "v".into()), &mut fresh);
        match pe {
            PeBody::Or(ds) => {
                assert_eq!(ds.len(), 2);
                assert!(ds.contains(&PeBody::Atom(Atom::Binary("R".into(), "u".into(), "v".into()))));
                assert!(ds.contains(&PeBody::Atom(Atom::Binary("P".into(), "u".into(), "v".into()))));
            }
            other => panic!("expected a disjunction, got {other:?}"),
        }
    }

    #[test]
    fn empty_ontology_is_identity() {
        let t = parse_ontology("").unwrap();
        let q = parse_query("q(u) :- B(u)").unwrap();
        let idx = TBoxIndex::for_query(&t, &q);
        let mut fresh = FreshVars::new(q.vars());
        let pe = atom_rewriting(&idx, &Atom::Unary("B".into(), "u".into()), &mut fresh);
        assert_eq!(pe, PeBody::Atom(Atom::Unary("B".into(), "u".into())));
    }

    #[test]
    fn unary_atom_collects_existential_causes() {
        let t = parse_ontology("exists P(_,x) -> B(x)\n").unwrap();
        let q = parse_query("q(u) :- B(u)").unwrap();
        let idx = TBoxIndex::for_query(&t, &q);
        let mut fresh = FreshVars::new(q.vars());
        let pe = atom_rewriting(&idx, &Atom::Unary("B".into(), "u".into()), &mut fresh);
        // B(u) ∨ ∃w P(w, u)
        match pe {
            PeBody::Or(ds) => {
                assert_eq!(ds.len(), 2);
                assert!(ds.iter().any(|d| matches!(d, PeBody::Atom(Atom::Unary(p, _)) if p == "B")));
                assert!(ds.iter().any(|d| matches!(
                    d,
                    PeBody::Exists(_, inner)
                        if matches!(&**inner, PeBody::Atom(Atom::Binary(p, _, u)) if p == "P" && u == "u")
                )));
            }
            other => panic!("expected a disjunction, got {other:?}"),
        }
    }
}
