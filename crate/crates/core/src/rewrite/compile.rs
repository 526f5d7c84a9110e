//! Compiling Boolean programs over tree-witness variables into rewritings,
//! and reading rewritings back as Boolean functions over predicate names.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::vec;

use crate::boolprog::{Circuit, Formula, Gate};
use crate::reasoner::TBoxIndex;
use crate::syntax::{Atom, ConjunctiveQuery};
use crate::witness::TreeWitness;

use super::atoms::{atom_rewriting, atom_rewriting_disjuncts, exists_rewriting, exists_rewriting_disjuncts};
use super::{FreshPreds, FreshVars, NdlAtom, NdlProgram, NdlRule, PeBody, PeQuery, RewriteError, TwVariable};

/// Substitute a formula over tree-witness variables into a positive
/// existential rewriting of the query.
pub fn formula_to_pe(
    q: &ConjunctiveQuery,
    idx: &TBoxIndex,
    witnesses: &[TreeWitness],
    chi: &Formula<TwVariable>,
) -> PeQuery {
    let mut fresh = FreshVars::new(q.vars());
    let body = subst(chi, idx, witnesses, &mut fresh);
    let evars = q.existential_vars();
    let body = if evars.is_empty() { body } else { PeBody::Exists(evars, Box::new(body)) };
    PeQuery { answer_vars: q.answer_vars.clone(), body }
}

fn subst(
    f: &Formula<TwVariable>,
    idx: &TBoxIndex,
    witnesses: &[TreeWitness],
    fresh: &mut FreshVars,
) -> PeBody {
    match f {
        Formula::Const(b) => {
            if *b {
                PeBody::And(vec![])
            } else {
                PeBody::Or(vec![])
            }
        }
        Formula::And(xs) => PeBody::And(xs.iter().map(|x| subst(x, idx, witnesses, fresh)).collect()),
        Formula::Or(xs) => PeBody::Or(xs.iter().map(|x| subst(x, idx, witnesses, fresh)).collect()),
        Formula::Var(TwVariable::Atom(a)) => atom_rewriting(idx, a, fresh),
        Formula::Var(TwVariable::Eq(a, b)) => PeBody::Eq(a.clone(), b.clone()),
        Formula::Var(TwVariable::Gen(z, r)) => exists_rewriting(idx, r, z, fresh),
        Formula::Var(TwVariable::Witness(i)) => witness_to_pe(&witnesses[*i], idx, fresh),
    }
}

/// `⋁_ρ ∃z (ρ_ρ(z) ∧ ⋀_{z'∈roots} z'=z)`, with the witness variable
/// unified onto the first root when one exists.
fn witness_to_pe(w: &TreeWitness, idx: &TBoxIndex, fresh: &mut FreshVars) -> PeBody {
    let mut disjuncts = Vec::new();
    for g in &w.generators {
        if let Some(z0) = w.roots.iter().next() {
            let mut conj = vec![exists_rewriting(idx, g, z0, fresh)];
            for z in w.roots.iter().skip(1) {
                conj.push(PeBody::Eq(z0.clone(), z.clone()));
            }
            disjuncts.push(PeBody::And(conj));
        } else {
            let z = fresh.next("w");
            disjuncts.push(PeBody::Exists(
                vec![z.clone()],
                Box::new(exists_rewriting(idx, g, &z, fresh)),
            ));
        }
    }
    PeBody::Or(disjuncts)
}

/// Compile a monotone circuit over tree-witness variables into a
/// nonrecursive datalog rewriting with one intensional predicate per gate.
pub fn circuit_to_ndl(
    q: &ConjunctiveQuery,
    idx: &TBoxIndex,
    witnesses: &[TreeWitness],
    c: &Circuit<TwVariable>,
) -> Result<NdlProgram, RewriteError> {
    if !c.is_monotone() {
        return Err(RewriteError::NotMonotone);
    }
    let mut user_preds: Vec<String> = idx.unary_names().iter().cloned().collect();
    user_preds.extend(idx.all_roles().iter().map(|r| r.name.clone()));
    let mut preds = FreshPreds::new(user_preds.clone());
    let d0 = preds.claim("d0");
    let d = preds.claim("d");
    let goal = preds.claim("goal");
    let qvars = q.vars();
    let mut rules: Vec<NdlRule> = Vec::new();

    // the active-domain predicate, one rule per predicate position
    {
        let mut sig_rules = Vec::new();
        for a in idx.unary_names() {
            sig_rules.push(NdlRule {
                head: NdlAtom { pred: d0.clone(), args: vec!["u".into()] },
                body: vec![NdlAtom { pred: a.clone(), args: vec!["u".into()] }],
            });
        }
        let mut binaries: Vec<String> =
            idx.all_roles().iter().filter(|r| !r.inverted).map(|r| r.name.clone()).collect();
        binaries.dedup();
        for p in binaries {
            sig_rules.push(NdlRule {
                head: NdlAtom { pred: d0.clone(), args: vec!["u".into()] },
                body: vec![NdlAtom { pred: p.clone(), args: vec!["u".into(), "v".into()] }],
            });
            sig_rules.push(NdlRule {
                head: NdlAtom { pred: d0.clone(), args: vec!["u".into()] },
                body: vec![NdlAtom { pred: p, args: vec!["v".into(), "u".into()] }],
            });
        }
        rules.extend(sig_rules);
    }
    rules.push(NdlRule {
        head: NdlAtom { pred: d.clone(), args: qvars.clone() },
        body: qvars.iter().map(|z| NdlAtom { pred: d0.clone(), args: vec![z.clone()] }).collect(),
    });

    let gate_pred: Vec<String> = (0..c.gates.len()).map(|i| preds.claim(&alloc::format!("g{i}"))).collect();
    let datom = |args: &[String]| NdlAtom { pred: d.clone(), args: args.to_vec() };
    let to_ndl_atom = |a: &Atom| match a {
        Atom::Unary(p, x) => NdlAtom { pred: p.clone(), args: vec![x.clone()] },
        Atom::Binary(p, x, y) => NdlAtom { pred: p.clone(), args: vec![x.clone(), y.clone()] },
    };
    let mut fresh = FreshVars::new(qvars.iter().cloned());
    for (i, gate) in c.gates.iter().enumerate() {
        let head_pred = gate_pred[i].clone();
        match gate {
            Gate::Const(false) => {}
            Gate::Const(true) => rules.push(NdlRule {
                head: NdlAtom { pred: head_pred, args: qvars.clone() },
                body: vec![datom(&qvars)],
            }),
            Gate::And(ins) => {
                let mut body: Vec<NdlAtom> =
                    ins.iter().map(|&j| NdlAtom { pred: gate_pred[j].clone(), args: qvars.clone() }).collect();
                body.push(datom(&qvars));
                rules.push(NdlRule {
                    head: NdlAtom { pred: head_pred, args: qvars.clone() },
                    body,
                });
            }
            Gate::Or(ins) => {
                for &j in ins {
                    rules.push(NdlRule {
                        head: NdlAtom { pred: head_pred.clone(), args: qvars.clone() },
                        body: vec![
                            NdlAtom { pred: gate_pred[j].clone(), args: qvars.clone() },
                            datom(&qvars),
                        ],
                    });
                }
            }
            Gate::Input(lit) => {
                debug_assert!(!lit.negated);
                match &lit.var {
                    TwVariable::Eq(a, b) => {
                        // unify b onto a in head and body
                        let theta = |v: &String| if v == b { a.clone() } else { v.clone() };
                        let args: Vec<String> = qvars.iter().map(theta).collect();
                        rules.push(NdlRule {
                            head: NdlAtom { pred: head_pred, args: args.clone() },
                            body: vec![datom(&args)],
                        });
                    }
                    TwVariable::Atom(at) => {
                        for disj in atom_rewriting_disjuncts(idx, at, &mut fresh) {
                            rules.push(NdlRule {
                                head: NdlAtom { pred: head_pred.clone(), args: qvars.clone() },
                                body: vec![to_ndl_atom(&disj), datom(&qvars)],
                            });
                        }
                    }
                    TwVariable::Gen(z, r) => {
                        for disj in exists_rewriting_disjuncts(idx, r, z, &mut fresh) {
                            rules.push(NdlRule {
                                head: NdlAtom { pred: head_pred.clone(), args: qvars.clone() },
                                body: vec![to_ndl_atom(&disj), datom(&qvars)],
                            });
                        }
                    }
                    TwVariable::Witness(wi) => {
                        let w = &witnesses[*wi];
                        for g in &w.generators {
                            if let Some(z0) = w.roots.iter().next() {
                                // unify all roots onto the first
                                let theta = |v: &String| {
                                    if w.roots.contains(v) {
                                        z0.clone()
                                    } else {
                                        v.clone()
                                    }
                                };
                                let args: Vec<String> = qvars.iter().map(theta).collect();
                                for disj in exists_rewriting_disjuncts(idx, g, z0, &mut fresh) {
                                    rules.push(NdlRule {
                                        head: NdlAtom { pred: head_pred.clone(), args: args.clone() },
                                        body: vec![to_ndl_atom(&disj), datom(&args)],
                                    });
                                }
                            } else {
                                let z = fresh.next("w");
                                for disj in exists_rewriting_disjuncts(idx, g, &z, &mut fresh) {
                                    rules.push(NdlRule {
                                        head: NdlAtom { pred: head_pred.clone(), args: qvars.clone() },
                                        body: vec![to_ndl_atom(&disj), datom(&qvars)],
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    rules.push(NdlRule {
        head: NdlAtom { pred: goal.clone(), args: q.answer_vars.clone() },
        body: vec![NdlAtom { pred: gate_pred[c.output].clone(), args: qvars }],
    });
    let program = NdlProgram { rules, goal, goal_arity: q.answer_vars.len() };
    debug_assert!(program.validate_safety().is_ok());
    debug_assert!(program.validate_nonrecursive().is_ok());
    Ok(program)
}

/// Collapse a constant-free PE-rewriting onto a single individual,
/// producing a formula over predicate-name variables.
pub fn pe_to_boolfn(q: &PeQuery) -> Formula<String> {
    fn go(b: &PeBody) -> Formula<String> {
        match b {
            PeBody::Atom(Atom::Unary(p, _)) => Formula::Var(p.clone()),
            PeBody::Atom(Atom::Binary(p, _, _)) => Formula::Var(p.clone()),
            PeBody::Eq(_, _) => Formula::Const(true),
            PeBody::And(xs) => Formula::And(xs.iter().map(go).collect()),
            PeBody::Or(xs) => Formula::Or(xs.iter().map(go).collect()),
            PeBody::Exists(_, inner) => go(inner),
        }
    }
    go(&q.body)
}

/// Collapse an NDL-rewriting onto a single individual: an OR gate per
/// intensional predicate over its rules, an AND gate per rule body.
pub fn ndl_to_boolfn(p: &NdlProgram) -> Circuit<String> {
    let order = p.validate_nonrecursive().expect("rewriting is nonrecursive");
    let idb = p.idb_predicates();
    let mut c: Circuit<String> = Circuit::new();
    let mut gate_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut input_of: BTreeMap<String, usize> = BTreeMap::new();
    for pred in order {
        let mut bodies = Vec::new();
        for r in p.rules.iter().filter(|r| r.head.pred == pred) {
            let mut conj = Vec::new();
            for at in &r.body {
                if idb.contains(&at.pred) {
                    conj.push(gate_of[&at.pred]);
                } else {
                    let g = *input_of.entry(at.pred.clone()).or_insert_with(|| {
                        c.push(Gate::Input(crate::boolprog::Literal::pos(at.pred.clone())))
                    });
                    conj.push(g);
                }
            }
            bodies.push(c.push(Gate::And(conj)));
        }
        let g = c.push(Gate::Or(bodies));
        gate_of.insert(pred, g);
    }
    c.output = *gate_of.get(&p.goal).expect("goal has rules");
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolprog::Formula;
    use crate::syntax::{parse_ontology, parse_query};

    #[test]
    fn single_atom_pe_collapses_to_its_predicate() {
        let t = parse_ontology("").unwrap();
        let q = parse_query("q(x) :- A(x)").unwrap();
        let idx = TBoxIndex::for_query(&t, &q);
        let chi = Formula::Var(TwVariable::Atom(Atom::Unary("A".into(), "x".into())));
        let pe = formula_to_pe(&q, &idx, &[], &chi);
        assert_eq!(pe_to_boolfn(&pe), Formula::Var("A".to_string()));
    }

    #[test]
    fn one_rule_ndl_collapses_to_its_predicate() {
        let p = NdlProgram {
            rules: vec![NdlRule {
                head: NdlAtom { pred: "goal".into(), args: vec![] },
                body: vec![NdlAtom { pred: "A".into(), args: vec!["x".into()] }],
            }],
            goal: "goal".into(),
            goal_arity: 0,
        };
        let c = ndl_to_boolfn(&p);
        let mut m = BTreeMap::new();
        m.insert("A".to_string(), true);
        assert!(c.eval(&m));
        m.insert("A".to_string(), false);
        assert!(!c.eval(&m));
    }

    #[test]
    fn ndl_validators_accept_generated_programs() {
        let t = parse_ontology("P(x,y) -> R(x,y)\n").unwrap();
        let q = parse_query("q(u) :- R(u,v)").unwrap();
        let idx = TBoxIndex::for_query(&t, &q);
        let chi = Formula::Var(TwVariable::Atom(Atom::Binary("R".into(), "u".into(), "v".into())));
        let circuit = chi.to_circuit();
        let p = circuit_to_ndl(&q, &idx, &[], &circuit).unwrap();
        assert!(p.validate_safety().is_ok());
        assert!(p.validate_nonrecursive().is_ok());
    }
}
