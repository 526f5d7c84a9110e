//! Evaluation of compiled rewritings over data instances, the direct
//! answering procedures for tree-shaped queries (frontier expansion with a
//! guess set, and the stack-based bounded-leaf variant), and the engine
//! dispatcher.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::vec;

use crate::canonical::{answer_depth_bound, all_tuples, certain_answers_brute_with};
use crate::reasoner::TBoxIndex;
use crate::rewrite::shape::query_shape;
use crate::rewrite::{NdlError, NdlProgram, PeBody, PeQuery, RewriteError, Strategy};
use crate::syntax::{Atom, ConjunctiveQuery, DataInstance, Fact, Ontology, Role};

// ---------------------------------------------------------------------------
// Positive existential evaluation.

/// Evaluate a PE query over the plain interpretation of a data instance.
pub fn eval_pe(pe: &PeQuery, a: &DataInstance) -> BTreeSet<Vec<String>> {
    let inds: Vec<String> = a.inds().into_iter().collect();
    let facts = FactIndex::new(a);
    let mut out = BTreeSet::new();
    for tuple in all_tuples(&inds, pe.answer_vars.len()) {
        let mut bind: BTreeMap<String, String> = BTreeMap::new();
        for (v, c) in pe.answer_vars.iter().zip(tuple.iter()) {
            bind.insert(v.clone(), c.clone());
        }
        if eval_pe_body(&pe.body, &facts, &inds, &mut bind) {
            out.insert(tuple);
        }
    }
    out
}

struct FactIndex {
    unary: BTreeSet<(String, String)>,
    binary: BTreeSet<(String, String, String)>,
}

impl FactIndex {
    fn new(a: &DataInstance) -> Self {
        let mut unary = BTreeSet::new();
        let mut binary = BTreeSet::new();
        for f in &a.facts {
            match f {
                Fact::Unary(p, x) => {
                    unary.insert((p.clone(), x.clone()));
                }
                Fact::Binary(p, x, y) => {
                    binary.insert((p.clone(), x.clone(), y.clone()));
                }
            }
        }
        FactIndex { unary, binary }
    }

    fn holds(&self, at: &Atom, bind: &BTreeMap<String, String>) -> Option<bool> {
        match at {
            Atom::Unary(p, x) => {
                let vx = bind.get(x)?;
                Some(self.unary.contains(&(p.clone(), vx.clone())))
            }
            Atom::Binary(p, x, y) => {
                let vx = bind.get(x)?;
                let vy = bind.get(y)?;
                Some(self.binary.contains(&(p.clone(), vx.clone(), vy.clone())))
            }
        }
    }
}

fn eval_pe_body(
    b: &PeBody,
    facts: &FactIndex,
    inds: &[String],
    bind: &mut BTreeMap<String, String>,
) -> bool {
    match b {
        PeBody::Atom(at) => facts.holds(at, bind).unwrap_or(false),
        PeBody::Eq(x, y) => match (bind.get(x), bind.get(y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        },
        PeBody::And(xs) => xs.iter().all(|x| eval_pe_body(x, facts, inds, bind)),
        PeBody::Or(xs) => xs.iter().any(|x| eval_pe_body(x, facts, inds, bind)),
        PeBody::Exists(vs, inner) => {
            let unbound: Vec<&String> = vs.iter().filter(|v| !bind.contains_key(*v)).collect();
            exists_loop(&unbound, 0, inner, facts, inds, bind)
        }
    }
}

fn exists_loop(
    vs: &[&String],
    i: usize,
    inner: &PeBody,
    facts: &FactIndex,
    inds: &[String],
    bind: &mut BTreeMap<String, String>,
) -> bool {
    if i == vs.len() {
        return eval_pe_body(inner, facts, inds, bind);
    }
    for c in inds {
        bind.insert(vs[i].clone(), c.clone());
        if exists_loop(vs, i + 1, inner, facts, inds, bind) {
            bind.remove(vs[i]);
            return true;
        }
    }
    bind.remove(vs[i]);
    false
}

// ---------------------------------------------------------------------------
// Nonrecursive datalog evaluation.

/// Bottom-up evaluation in dependency order; exact minimal-model semantics.
pub fn eval_ndl(p: &NdlProgram, a: &DataInstance) -> Result<BTreeSet<Vec<String>>, NdlError> {
    p.validate_safety()?;
    let order = p.validate_nonrecursive()?;
    let mut rels: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for f in &a.facts {
        match f {
            Fact::Unary(pred, x) => {
                rels.entry(pred.clone()).or_default().insert(vec![x.clone()]);
            }
            Fact::Binary(pred, x, y) => {
                rels.entry(pred.clone()).or_default().insert(vec![x.clone(), y.clone()]);
            }
        }
    }
    let idb = p.idb_predicates();
    for f in &a.facts {
        let pred = match f {
            Fact::Unary(pred, _) | Fact::Binary(pred, _, _) => pred,
        };
        debug_assert!(!idb.contains(pred), "data must not assert intensional predicates");
    }
    for pred in order {
        let mut tuples: BTreeSet<Vec<String>> = BTreeSet::new();
        for rule in p.rules.iter().filter(|r| r.head.pred == pred) {
            let mut bind: BTreeMap<String, String> = BTreeMap::new();
            rule_matches(&rule.body, 0, &rels, &mut bind, &mut |bind| {
                tuples.insert(rule.head.args.iter().map(|v| bind[v].clone()).collect());
            });
        }
        rels.insert(pred, tuples);
    }
    Ok(rels.remove(&p.goal).unwrap_or_default())
}

fn rule_matches(
    body: &[crate::rewrite::NdlAtom],
    i: usize,
    rels: &BTreeMap<String, BTreeSet<Vec<String>>>,
    bind: &mut BTreeMap<String, String>,
    emit: &mut dyn FnMut(&BTreeMap<String, String>),
) {
    if i == body.len() {
        emit(bind);
        return;
    }
    let at = &body[i];
    let Some(rel) = rels.get(&at.pred) else { return };
    'tuples: for t in rel {
        if t.len() != at.args.len() {
            continue;
        }
        let mut added: Vec<String> = Vec::new();
        for (v, c) in at.args.iter().zip(t.iter()) {
            match bind.get(v) {
                Some(existing) if existing != c => {
                    for v in added {
                        bind.remove(&v);
                    }
                    continue 'tuples;
                }
                Some(_) => {}
                None => {
                    bind.insert(v.clone(), c.clone());
                    added.push(v.clone());
                }
            }
        }
        rule_matches(body, i + 1, rels, bind, emit);
        for v in added {
            bind.remove(&v);
        }
    }
}

// ---------------------------------------------------------------------------
// The guess set shared by the direct procedures.

/// An element of the guess set: an individual or a realizable anonymous
/// word hanging under one.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GuessElem {
    pub base: String,
    pub word: Vec<Role>,
}

impl GuessElem {
    fn ind(base: &str) -> Self {
        GuessElem { base: base.to_string(), word: vec![] }
    }

    fn is_individual(&self) -> bool {
        self.word.is_empty()
    }
}

struct Procs<'a> {
    idx: &'a TBoxIndex,
    a: &'a DataInstance,
    q: &'a ConjunctiveQuery,
    inds: Vec<String>,
    bound: usize,
}

impl<'a> Procs<'a> {
    fn map_core(&self, answers: &BTreeMap<String, String>, v: &str, u: &str) -> bool {
        if let Some(b) = answers.get(v) {
            if b != u {
                return false;
            }
        }
        for at in &self.q.atoms {
            match at {
                Atom::Unary(p, x) if x == v => {
                    if !crate::reasoner::entailed_unary_fact(self.idx, self.a, p, u) {
                        return false;
                    }
                }
                Atom::Binary(p, x, y) if x == v && y == v => {
                    if !self.idx.pair_roles(self.a, u, u).contains(&Role::new(p.clone())) {
                        return false;
                    }
                }
                _ => {}
            }
        }
        true
    }

    fn map_anon(&self, answers: &BTreeMap<String, String>, v: &str, r: &Role) -> bool {
        if answers.contains_key(v) {
            return false;
        }
        for at in &self.q.atoms {
            match at {
                Atom::Unary(p, x) if x == v => {
                    if !self.idx.entails_concept(
                        &crate::syntax::ConceptExpr::Exists(r.inv()),
                        &crate::syntax::ConceptExpr::Atomic(p.clone()),
                    ) {
                        return false;
                    }
                }
                Atom::Binary(_, x, y) if x == v && y == v => return false,
                _ => {}
            }
        }
        true
    }

    /// all atoms between `v1` and `v2`, as roles oriented `v1 → v2`
    fn edge_roles(&self, v1: &str, v2: &str) -> Vec<Role> {
        let mut out = Vec::new();
        for at in &self.q.atoms {
            if let Atom::Binary(p, x, y) = at {
                if x == v1 && y == v2 {
                    out.push(Role::new(p.clone()));
                }
                if x == v2 && y == v1 {
                    out.push(Role::inverse(p.clone()));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// TreeQuery: frontier expansion over the guess set.

/// Does the candidate tuple satisfy the tree-shaped query? Determinized by
/// exhaustive backtracking over the guess set, with memoization per
/// (variable, element).
pub fn tree_query(
    t: &Ontology,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    tuple: &[String],
) -> Result<bool, RewriteError> {
    let idx = TBoxIndex::for_query(t, q);
    tree_query_with(&idx, a, q, tuple)
}

pub fn tree_query_with(
    idx: &TBoxIndex,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    tuple: &[String],
) -> Result<bool, RewriteError> {
    let shape = query_shape(q);
    if !shape.tree_shaped || !shape.connected {
        return Err(RewriteError::NotTreeShaped);
    }
    let procs = Procs {
        idx,
        a,
        q,
        inds: a.inds().into_iter().collect(),
        bound: answer_depth_bound(&idx.ontology, q),
    };
    let answers: BTreeMap<String, String> =
        q.answer_vars.iter().cloned().zip(tuple.iter().cloned()).collect();
    let (root, children) = root_and_children(q);
    let mut memo: BTreeMap<(String, GuessElem), bool> = BTreeMap::new();
    // guess where the root goes: any individual or any realizable word
    for u0 in root_candidates(&procs) {
        if check_vertex(&procs, &answers, &root, &u0)
            && accept(&procs, &answers, &children, &root, &u0, &mut memo)
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Root the query tree at its lowest-index leaf (in first-occurrence
/// order); parents map each variable to its children.
fn root_and_children(q: &ConjunctiveQuery) -> (String, BTreeMap<String, Vec<String>>) {
    let vars = q.vars();
    let edges = q.graph_edges();
    let degree = |v: &String| edges.iter().filter(|(a, b)| a == v || b == v).count();
    let root = vars
        .iter()
        .find(|v| degree(v) == 1)
        .or_else(|| vars.first())
        .expect("query has a variable")
        .clone();
    let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    seen.insert(root.clone());
    let mut queue = vec![root.clone()];
    while let Some(v) = queue.pop() {
        let mut cs = Vec::new();
        for (x, y) in &edges {
            let other = if x == &v {
                y
            } else if y == &v {
                x
            } else {
                continue;
            };
            if seen.insert(other.clone()) {
                cs.push(other.clone());
                queue.push(other.clone());
            }
        }
        children.insert(v, cs);
    }
    (root, children)
}

fn root_candidates(p: &Procs<'_>) -> Vec<GuessElem> {
    let mut out: Vec<GuessElem> = p.inds.iter().map(|i| GuessElem::ind(i)).collect();
    for ind in &p.inds {
        let mut stack: Vec<Vec<Role>> = p
            .idx
            .generated_at_individual(p.a, ind)
            .into_iter()
            .map(|r| vec![r])
            .collect();
        while let Some(word) = stack.pop() {
            if word.len() < p.bound {
                for s in p.idx.successors(word.last().unwrap()) {
                    let mut next = word.clone();
                    next.push(s.clone());
                    stack.push(next);
                }
            }
            out.push(GuessElem { base: ind.clone(), word });
        }
    }
    out
}

fn check_vertex(
    p: &Procs<'_>,
    answers: &BTreeMap<String, String>,
    v: &str,
    u: &GuessElem,
) -> bool {
    if u.is_individual() {
        p.map_core(answers, v, &u.base)
    } else {
        p.map_anon(answers, v, u.word.last().unwrap())
    }
}

fn accept(
    p: &Procs<'_>,
    answers: &BTreeMap<String, String>,
    children: &BTreeMap<String, Vec<String>>,
    v: &str,
    u: &GuessElem,
    memo: &mut BTreeMap<(String, GuessElem), bool>,
) -> bool {
    let key = (v.to_string(), u.clone());
    if let Some(&r) = memo.get(&key) {
        return r;
    }
    let mut ok = true;
    for c in children.get(v).map(Vec::as_slice).unwrap_or(&[]) {
        let roles = p.edge_roles(v, c);
        let mut found = false;
        for u2 in neighbor_candidates(p, u, &roles) {
            if check_vertex(p, answers, c, &u2) && accept(p, answers, children, c, &u2, memo) {
                found = true;
                break;
            }
        }
        if !found {
            ok = false;
            break;
        }
    }
    memo.insert(key, ok);
    ok
}

/// Where can the child go, given where the parent went? Individuals can
/// reach entailed partners and their own fresh children; anonymous
/// elements reach their parent and children.
fn neighbor_candidates(p: &Procs<'_>, u: &GuessElem, roles: &[Role]) -> Vec<GuessElem> {
    let mut out = Vec::new();
    if u.is_individual() {
        for d in &p.inds {
            if roles.iter().all(|r| p.idx.pair_roles(p.a, &u.base, d).contains(r)) {
                out.push(GuessElem::ind(d));
            }
        }
        for r in p.idx.generated_at_individual(p.a, &u.base) {
            if roles.iter().all(|s| p.idx.entails_role(&r, s)) {
                out.push(GuessElem { base: u.base.clone(), word: vec![r] });
            }
        }
    } else {
        let last = u.word.last().unwrap();
        // up to the parent
        if roles.iter().all(|s| p.idx.entails_role(&last.inv(), s)) {
            let mut w = u.word.clone();
            w.pop();
            out.push(GuessElem { base: u.base.clone(), word: w });
        }
        if u.word.len() < p.bound {
            for r in p.idx.successors(last) {
                if roles.iter().all(|s| p.idx.entails_role(r, s)) {
                    let mut w = u.word.clone();
                    w.push(r.clone());
                    out.push(GuessElem { base: u.base.clone(), word: w });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// BLQuery: the stack-based procedure.

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct BlState {
    /// (parent var, child var, constant, stack position)
    frontier: BTreeSet<(String, String, String, usize)>,
    stack: Vec<Role>,
    height: usize,
}

/// The bounded-leaf procedure: same result as [`tree_query`], computed
/// with an explicit shared stack. Loop invariants are asserted in debug
/// builds.
pub fn bl_query(
    t: &Ontology,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    tuple: &[String],
) -> Result<bool, RewriteError> {
    let idx = TBoxIndex::for_query(t, q);
    bl_query_with(&idx, a, q, tuple)
}

pub fn bl_query_with(
    idx: &TBoxIndex,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    tuple: &[String],
) -> Result<bool, RewriteError> {
    let shape = query_shape(q);
    if !shape.tree_shaped || !shape.connected {
        return Err(RewriteError::NotTreeShaped);
    }
    let procs = Procs {
        idx,
        a,
        q,
        inds: a.inds().into_iter().collect(),
        bound: answer_depth_bound(&idx.ontology, q),
    };
    let answers: BTreeMap<String, String> =
        q.answer_vars.iter().cloned().zip(tuple.iter().cloned()).collect();
    let (root, children) = root_and_children(q);
    let mut memo: BTreeMap<BlState, bool> = BTreeMap::new();
    for u0 in root_candidates(&procs) {
        if !check_vertex(&procs, &answers, &root, &u0) {
            continue;
        }
        let frontier: BTreeSet<(String, String, String, usize)> = children
            .get(&root)
            .map(Vec::as_slice)
            .unwrap_or(&[])
            .iter()
            .map(|c| (root.clone(), c.clone(), u0.base.clone(), u0.word.len()))
            .collect();
        let state =
            BlState { frontier, stack: u0.word.clone(), height: u0.word.len() };
        if bl_search(&procs, &answers, &children, state, &mut memo, &mut BTreeSet::new()) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn bl_search(
    p: &Procs<'_>,
    answers: &BTreeMap<String, String>,
    children: &BTreeMap<String, Vec<String>>,
    state: BlState,
    memo: &mut BTreeMap<BlState, bool>,
    added_pairs: &mut BTreeSet<(String, String)>,
) -> bool {
    // loop invariants: the stack height bookkeeping and frontier positions
    debug_assert_eq!(state.height, state.stack.len());
    debug_assert!(state.frontier.iter().all(|(_, _, _, n)| *n <= state.height));
    debug_assert!(
        state.frontier.is_empty() || state.frontier.iter().any(|(_, _, _, n)| *n == state.height)
    );
    {
        let cs: BTreeSet<&String> =
            state.frontier.iter().filter(|(_, _, _, n)| *n > 0).map(|(_, _, c, _)| c).collect();
        debug_assert!(cs.len() <= 1, "all deep tuples share their constant");
    }
    if state.frontier.is_empty() {
        return true;
    }
    if let Some(&r) = memo.get(&state) {
        return r;
    }
    let mut accepted = false;

    // Option 1: step in the core
    'opt1: for t in state.frontier.iter().filter(|(_, _, _, n)| *n == 0).cloned() {
        let (v1, v2, c, _) = t.clone();
        let roles = p.edge_roles(&v1, &v2);
        for d in &p.inds {
            if !roles.iter().all(|r| p.idx.pair_roles(p.a, &c, d).contains(r)) {
                continue;
            }
            if !p.map_core(answers, &v2, d) {
                continue;
            }
            let mut next = state.clone();
            next.frontier.remove(&t);
            for v3 in children.get(&v2).map(Vec::as_slice).unwrap_or(&[]) {
                next.frontier.insert((v2.clone(), v3.clone(), d.clone(), 0));
                if !added_pairs.insert((v2.clone(), v3.clone())) {
                    debug_assert!(false, "a frontier pair may only ever be added once");
                }
            }
            let r = bl_search(p, answers, children, next, memo, added_pairs);
            for v3 in children.get(&v2).map(Vec::as_slice).unwrap_or(&[]) {
                added_pairs.remove(&(v2.clone(), v3.clone()));
            }
            if r {
                accepted = true;
                break 'opt1;
            }
        }
    }

    // Option 2: step forward in the anonymous part
    if !accepted && state.height < p.bound {
        'opt2: for t in state.frontier.iter().filter(|(_, _, _, n)| *n == state.height).cloned() {
            let (v1, v2, c, _) = t.clone();
            let roles = p.edge_roles(&v1, &v2);
            for s in p.idx.all_roles().to_vec() {
                let deeper_ok = if state.height == 0 {
                    p.idx
                        .individual_concepts(p.a, &c)
                        .contains(&crate::syntax::ConceptExpr::Exists(s.clone()))
                } else {
                    let r = state.stack.last().unwrap();
                    p.idx.entails_concept(
                        &crate::syntax::ConceptExpr::Exists(r.inv()),
                        &crate::syntax::ConceptExpr::Exists(s.clone()),
                    )
                };
                if !deeper_ok
                    || !roles.iter().all(|pr| p.idx.entails_role(&s, pr))
                    || !p.map_anon(answers, &v2, &s)
                {
                    continue;
                }
                let mut next = state.clone();
                next.frontier.remove(&t);
                let kids = children.get(&v2).map(Vec::as_slice).unwrap_or(&[]);
                if !kids.is_empty() {
                    next.stack.push(s.clone());
                    next.height += 1;
                    for v3 in kids {
                        next.frontier.insert((v2.clone(), v3.clone(), c.clone(), next.height));
                        if !added_pairs.insert((v2.clone(), v3.clone())) {
                            debug_assert!(false, "a frontier pair may only ever be added once");
                        }
                    }
                } else {
                    pop_to_frontier(&mut next);
                }
                let r = bl_search(p, answers, children, next, memo, added_pairs);
                for v3 in kids {
                    added_pairs.remove(&(v2.clone(), v3.clone()));
                }
                if r {
                    accepted = true;
                    break 'opt2;
                }
            }
        }
    }

    // Option 3: step backward in the anonymous part, for all deepest tuples
    if !accepted && state.height > 0 {
        let deepest: Vec<(String, String, String, usize)> = state
            .frontier
            .iter()
            .filter(|(_, _, _, n)| *n == state.height)
            .cloned()
            .collect();
        let mut next = state.clone();
        let popped = next.stack.pop().unwrap();
        next.height -= 1;
        let mut ok = true;
        for (v1, v2, c, _) in &deepest {
            let fine = if next.height == 0 {
                p.map_core(answers, v2, c)
            } else {
                p.map_anon(answers, v2, next.stack.last().unwrap())
            };
            let roles = p.edge_roles(v1, v2);
            if !fine || !roles.iter().all(|pr| p.idx.entails_role(&popped.inv(), pr)) {
                ok = false;
                break;
            }
        }
        if ok {
            for t in &deepest {
                next.frontier.remove(t);
            }
            let mut new_pairs = Vec::new();
            let has_nonleaf = deepest
                .iter()
                .any(|(_, v2, _, _)| !children.get(v2).map(Vec::as_slice).unwrap_or(&[]).is_empty());
            if has_nonleaf {
                for (_, v2, c, _) in &deepest {
                    for v3 in children.get(v2).map(Vec::as_slice).unwrap_or(&[]) {
                        next.frontier.insert((v2.clone(), v3.clone(), c.clone(), next.height));
                        new_pairs.push((v2.clone(), v3.clone()));
                        if !added_pairs.insert((v2.clone(), v3.clone())) {
                            debug_assert!(false, "a frontier pair may only ever be added once");
                        }
                    }
                }
            } else {
                pop_to_frontier(&mut next);
            }
            if bl_search(p, answers, children, next, memo, added_pairs) {
                accepted = true;
            }
            for pr in new_pairs {
                added_pairs.remove(&pr);
            }
        }
    }

    memo.insert(state, accepted);
    accepted
}

/// After finishing a leaf, pop the stack down to the deepest remaining
/// frontier position.
fn pop_to_frontier(state: &mut BlState) {
    let max = state.frontier.iter().map(|(_, _, _, n)| *n).max().unwrap_or(0);
    let delta = state.height - max;
    for _ in 0..delta {
        state.stack.pop();
    }
    state.height -= delta;
}

// ---------------------------------------------------------------------------
// Engine dispatch.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Brute,
    Pe,
    Ndl,
    Tree,
    Bl,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnswerError {
    Rewrite(RewriteError),
    Ndl(NdlError),
}

impl From<RewriteError> for AnswerError {
    fn from(e: RewriteError) -> Self {
        AnswerError::Rewrite(e)
    }
}

impl From<NdlError> for AnswerError {
    fn from(e: NdlError) -> Self {
        AnswerError::Ndl(e)
    }
}

impl core::fmt::Display for AnswerError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            AnswerError::Rewrite(e) => write!(f, "{e}"),
            AnswerError::Ndl(e) => write!(f, "{e}"),
        }
    }
}

/// Answer a query with the chosen engine; inconsistent KBs yield every
/// tuple over the individuals.
pub fn answer(
    t: &Ontology,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    engine: Engine,
    strategy: Strategy,
) -> Result<BTreeSet<Vec<String>>, AnswerError> {
    let idx = TBoxIndex::for_query(t, q);
    let inds: Vec<String> = a.inds().into_iter().collect();
    if !idx.is_consistent(a) {
        return Ok(all_tuples(&inds, q.answer_vars.len()));
    }
    match engine {
        Engine::Brute => {
            Ok(certain_answers_brute_with(&idx, a, q, answer_depth_bound(t, q)))
        }
        Engine::Pe => {
            let pe = crate::rewrite::compile_pe(t, q, strategy)?;
            Ok(eval_pe(&pe, a))
        }
        Engine::Ndl => {
            let ndl = crate::rewrite::compile_ndl(t, q, strategy)?;
            Ok(eval_ndl(&ndl, a)?)
        }
        Engine::Tree => per_tuple_engine(&idx, a, q, &inds, false),
        Engine::Bl => per_tuple_engine(&idx, a, q, &inds, true),
    }
}

/// Tree and bounded-leaf engines: split into connected components, solve
/// each per candidate tuple (with a unary-atom prefilter), and join.
fn per_tuple_engine(
    idx: &TBoxIndex,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    inds: &[String],
    use_bl: bool,
) -> Result<BTreeSet<Vec<String>>, AnswerError> {
    let comps = components(q);
    let mut per_comp: Vec<(Vec<String>, BTreeSet<Vec<String>>)> = Vec::new();
    for comp in comps {
        let avars: Vec<String> =
            q.answer_vars.iter().filter(|v| comp.vars.contains(*v)).cloned().collect();
        let sub = ConjunctiveQuery { answer_vars: avars.clone(), atoms: comp.atoms };
        let comp_idx = TBoxIndex::for_query(&idx.ontology, &sub);
        let mut found: BTreeSet<Vec<String>> = BTreeSet::new();
        for tuple in candidate_tuples(&comp_idx, a, &sub, inds) {
            let ok = if use_bl {
                bl_query_with(&comp_idx, a, &sub, &tuple)?
            } else {
                tree_query_with(&comp_idx, a, &sub, &tuple)?
            };
            if ok {
                found.insert(tuple);
            }
        }
        per_comp.push((avars, found));
    }
    // join the per-component answers back into full tuples
    let mut tuples: BTreeSet<BTreeMap<String, String>> = BTreeSet::new();
    tuples.insert(BTreeMap::new());
    for (avars, found) in per_comp {
        if found.is_empty() {
            return Ok(BTreeSet::new());
        }
        let mut next = BTreeSet::new();
        for base in &tuples {
            for t in &found {
                let mut merged = base.clone();
                for (v, c) in avars.iter().zip(t.iter()) {
                    merged.insert(v.clone(), c.clone());
                }
                next.insert(merged);
            }
        }
        tuples = next;
    }
    Ok(tuples
        .into_iter()
        .map(|m| q.answer_vars.iter().map(|v| m[v].clone()).collect())
        .collect())
}

struct Component {
    vars: BTreeSet<String>,
    atoms: BTreeSet<Atom>,
}

fn components(q: &ConjunctiveQuery) -> Vec<Component> {
    let vars = q.vars();
    let mut comp_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut comps: Vec<Component> = Vec::new();
    for v in &vars {
        if comp_of.contains_key(v) {
            continue;
        }
        let id = comps.len();
        let mut vs = BTreeSet::new();
        let mut stack = vec![v.clone()];
        while let Some(x) = stack.pop() {
            if !vs.insert(x.clone()) {
                continue;
            }
            comp_of.insert(x.clone(), id);
            for (a, b) in q.graph_edges() {
                if a == x && !vs.contains(&b) {
                    stack.push(b);
                } else if b == x && !vs.contains(&a) {
                    stack.push(a);
                }
            }
        }
        let atoms: BTreeSet<Atom> =
            q.atoms.iter().filter(|at| at.vars().iter().any(|w| vs.contains(*w))).cloned().collect();
        comps.push(Component { vars: vs, atoms });
    }
    comps
}

/// Candidate answer tuples with a per-variable unary-atom prefilter.
fn candidate_tuples(
    idx: &TBoxIndex,
    a: &DataInstance,
    q: &ConjunctiveQuery,
    inds: &[String],
) -> Vec<Vec<String>> {
    let mut per_var: Vec<Vec<String>> = Vec::new();
    for v in &q.answer_vars {
        let unary_preds: Vec<&String> = q
            .atoms
            .iter()
            .filter_map(|at| match at {
                Atom::Unary(p, x) if x == v => Some(p),
                _ => None,
            })
            .collect();
        let cands: Vec<String> = inds
            .iter()
            .filter(|c| {
                unary_preds.iter().all(|p| crate::reasoner::entailed_unary_fact(idx, a, p, c))
            })
            .cloned()
            .collect();
        per_var.push(cands);
    }
    let mut out: Vec<Vec<String>> = vec![Vec::new()];
    for cands in per_var {
        let mut next = Vec::new();
        for base in &out {
            for c in &cands {
                let mut t = base.clone();
                t.push(c.clone());
                next.push(t);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{NdlAtom, NdlRule};
    use crate::syntax::{parse_data, parse_ontology, parse_query};

    fn kb0() -> (Ontology, DataInstance, ConjunctiveQuery) {
        let t = parse_ontology(
            "P(x,y) -> R(x,y)\n\
             P(x,y) -> U(y,x)\n\
             A(x) -> exists P(x,_)\n\
             exists P(_,x) -> exists S(x,_)\n\
             exists S(_,x) -> exists R(x,_)\n\
             exists S(_,x) -> exists T(_,x)\n\
             exists P(_,x) -> B(x)\n",
        )
        .unwrap();
        let a = parse_data("A(a). R(a,c).").unwrap();
        let q = parse_query("q(x1,x2) :- P(y2,y1), S(y1,y3), R(y2,x1), S(y4,y3), T(y5,y3), U(y4,x2)")
            .unwrap();
        (t, a, q)
    }

    #[test]
    fn simple_ndl_program() {
        let p = NdlProgram {
            rules: vec![NdlRule {
                head: NdlAtom { pred: "goal".into(), args: vec!["X".into()] },
                body: vec![NdlAtom { pred: "A".into(), args: vec!["X".into()] }],
            }],
            goal: "goal".into(),
            goal_arity: 1,
        };
        let a = parse_data("A(a). B(b).").unwrap();
        let ans = eval_ndl(&p, &a).unwrap();
        assert_eq!(ans, [vec!["a".to_string()]].into_iter().collect());
    }

    #[test]
    fn tree_query_golden_case() {
        let (t, a, q) = kb0();
        assert_eq!(tree_query(&t, &a, &q, &["c".into(), "a".into()]), Ok(true));
        assert_eq!(tree_query(&t, &a, &q, &["a".into(), "c".into()]), Ok(false));
    }

    #[test]
    fn bl_query_golden_case() {
        let (t, a, q) = kb0();
        assert_eq!(bl_query(&t, &a, &q, &["c".into(), "a".into()]), Ok(true));
        assert_eq!(bl_query(&t, &a, &q, &["a".into(), "c".into()]), Ok(false));
    }

    #[test]
    fn single_atom_queries() {
        let t = Ontology::default();
        let a = parse_data("A(a).").unwrap();
        let q = parse_query("q(v0) :- A(v0)").unwrap();
        assert_eq!(tree_query(&t, &a, &q, &["a".into()]), Ok(true));
        assert_eq!(bl_query(&t, &a, &q, &["a".into()]), Ok(true));
    }

    #[test]
    fn tree_and_bl_engines_agree_on_kb0() {
        let (t, a, q) = kb0();
        let tree = answer(&t, &a, &q, Engine::Tree, Strategy::Auto).unwrap();
        let bl = answer(&t, &a, &q, Engine::Bl, Strategy::Auto).unwrap();
        let brute = answer(&t, &a, &q, Engine::Brute, Strategy::Auto).unwrap();
        let expected: BTreeSet<Vec<String>> =
            [vec!["c".to_string(), "a".to_string()]].into_iter().collect();
        assert_eq!(tree, expected);
        assert_eq!(bl, expected);
        assert_eq!(brute, expected);
    }

    #[test]
    fn empty_data_no_answers() {
        let (t, _, q) = kb0();
        let a = DataInstance::default();
        assert!(answer(&t, &a, &q, Engine::Tree, Strategy::Auto).unwrap().is_empty());
    }

    #[test]
    fn inconsistent_kb_all_tuples() {
        let t = parse_ontology("A(x), B(x) -> false\n").unwrap();
        let a = parse_data("A(a). B(a). C(c).").unwrap();
        let q = parse_query("q(x) :- C(x)").unwrap();
        let ans = answer(&t, &a, &q, Engine::Tree, Strategy::Auto).unwrap();
        assert_eq!(ans.len(), 2);
    }
}
