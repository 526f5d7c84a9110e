//! Query rewriting: the tree-witness Boolean functions, their compilation
//! into positive-existential queries and nonrecursive datalog programs,
//! and the per-class strategies (generic, bounded-leaf, bounded-treewidth,
//! depth-one).

pub mod atoms;
pub mod bounded_leaf;
pub mod btw;
pub mod compile;
pub mod depth1;
pub mod ftw;
pub mod shape;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Atom, Role};
use crate::witness::WitnessOverflow;

/// Propositional variables of the tree-witness functions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TwVariable {
    /// `p_η` — the atom holds in the core
    Atom(Atom),
    /// `p_t` — witness `t` (by index into the enumerated list) folds into
    /// an anonymous tree
    Witness(usize),
    /// `p_{z=z'}` — two variables map to the same individual
    Eq(String, String),
    /// `p_z^ρ` — the individual under `z` entails `∃ρ`
    Gen(String, Role),
}

impl TwVariable {
    pub fn eq(a: &str, b: &str) -> Self {
        if a <= b {
            TwVariable::Eq(a.to_string(), b.to_string())
        } else {
            TwVariable::Eq(b.to_string(), a.to_string())
        }
    }
}

impl fmt::Display for TwVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwVariable::Atom(a) => write!(f, "p[{a}]"),
            TwVariable::Witness(i) => write!(f, "tw{i}"),
            TwVariable::Eq(a, b) => write!(f, "eq[{a}={b}]"),
            TwVariable::Gen(z, r) => write!(f, "gen[{z}:{r}]"),
        }
    }
}

// ---------------------------------------------------------------------------
// Positive existential queries.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PeBody {
    Atom(Atom),
    Eq(String, String),
    And(Vec<PeBody>),
    Or(Vec<PeBody>),
    Exists(Vec<String>, alloc::boxed::Box<PeBody>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeQuery {
    pub answer_vars: Vec<String>,
    pub body: PeBody,
}

impl PeBody {
    /// Symbol count: connectives, atoms, argument and quantifier positions.
    pub fn size(&self) -> usize {
        match self {
            PeBody::Atom(Atom::Unary(_, _)) => 2,
            PeBody::Atom(Atom::Binary(_, _, _)) => 3,
            PeBody::Eq(_, _) => 3,
            PeBody::And(xs) | PeBody::Or(xs) => 1 + xs.iter().map(PeBody::size).sum::<usize>(),
            PeBody::Exists(vs, b) => 1 + vs.len() + b.size(),
        }
    }
}

impl PeQuery {
    pub fn size(&self) -> usize {
        1 + self.answer_vars.len() + self.body.size()
    }
}

/// Prefix rendering (`exists`, `and`, `or`, `=`) used by the CLI.
pub fn print_pe(q: &PeQuery) -> String {
    let mut s = String::from("q(");
    s.push_str(&q.answer_vars.join(","));
    s.push_str(") := ");
    fn go(b: &PeBody, out: &mut String) {
        match b {
            PeBody::Atom(Atom::Unary(p, x)) => out.push_str(&alloc::format!("({p} {x})")),
            PeBody::Atom(Atom::Binary(p, x, y)) => out.push_str(&alloc::format!("({p} {x} {y})")),
            PeBody::Eq(x, y) => out.push_str(&alloc::format!("(= {x} {y})")),
            PeBody::And(xs) => {
                out.push_str("(and");
                for x in xs {
                    out.push(' ');
                    go(x, out);
                }
                out.push(')');
            }
            PeBody::Or(xs) => {
                out.push_str("(or");
                for x in xs {
                    out.push(' ');
                    go(x, out);
                }
                out.push(')');
            }
            PeBody::Exists(vs, inner) => {
                out.push_str(&alloc::format!("(exists ({})", vs.join(" ")));
                out.push(' ');
                go(inner, out);
                out.push(')');
            }
        }
    }
    go(&q.body, &mut s);
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Nonrecursive datalog.

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NdlAtom {
    pub pred: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdlRule {
    pub head: NdlAtom,
    pub body: Vec<NdlAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NdlProgram {
    pub rules: Vec<NdlRule>,
    pub goal: String,
    pub goal_arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NdlError {
    UnsafeRule(usize),
    Recursive,
}

impl fmt::Display for NdlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NdlError::UnsafeRule(i) => write!(f, "rule {i} has a head variable missing from its body"),
            NdlError::Recursive => write!(f, "program has a cycle in its dependence relation"),
        }
    }
}

impl NdlProgram {
    pub fn idb_predicates(&self) -> BTreeSet<String> {
        self.rules.iter().map(|r| r.head.pred.clone()).collect()
    }

    pub fn size(&self) -> usize {
        self.rules
            .iter()
            .map(|r| {
                let a = |at: &NdlAtom| 1 + at.args.len();
                a(&r.head) + r.body.iter().map(a).sum::<usize>()
            })
            .sum()
    }

    /// Safety: every head variable occurs in the body.
    pub fn validate_safety(&self) -> Result<(), NdlError> {
        for (i, r) in self.rules.iter().enumerate() {
            let body_vars: BTreeSet<&String> = r.body.iter().flat_map(|a| a.args.iter()).collect();
            if !r.head.args.iter().all(|v| body_vars.contains(v)) {
                return Err(NdlError::UnsafeRule(i));
            }
        }
        Ok(())
    }

    /// Nonrecursiveness: the head-to-body dependence relation is acyclic.
    /// On success returns the IDB predicates in evaluation order.
    pub fn validate_nonrecursive(&self) -> Result<Vec<String>, NdlError> {
        let idb = self.idb_predicates();
        let mut deps: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
        for r in &self.rules {
            let e = deps.entry(&r.head.pred).or_default();
            for b in &r.body {
                if idb.contains(&b.pred) {
                    e.insert(&b.pred);
                }
            }
        }
        let mut order = Vec::new();
        let mut state: BTreeMap<&String, u8> = BTreeMap::new();
        fn visit<'a>(
            p: &'a String,
            deps: &BTreeMap<&'a String, BTreeSet<&'a String>>,
            state: &mut BTreeMap<&'a String, u8>,
            order: &mut Vec<String>,
        ) -> Result<(), NdlError> {
            match state.get(p) {
                Some(1) => return Err(NdlError::Recursive),
                Some(2) => return Ok(()),
                _ => {}
            }
            state.insert(p, 1);
            if let Some(ds) = deps.get(p) {
                for d in ds.clone() {
                    visit(d, deps, state, order)?;
                }
            }
            state.insert(p, 2);
            order.push(p.clone());
            Ok(())
        }
        for p in idb.iter() {
            visit(p, &deps, &mut state, &mut order)?;
        }
        Ok(order)
    }
}

/// Datalog text rendering, one rule per line.
pub fn print_ndl(p: &NdlProgram) -> String {
    let mut out = String::new();
    let atom = |a: &NdlAtom| {
        if a.args.is_empty() {
            alloc::format!("{}()", a.pred)
        } else {
            alloc::format!("{}({})", a.pred, a.args.join(","))
        }
    };
    for r in &p.rules {
        out.push_str(&atom(&r.head));
        out.push_str(" :- ");
        let body: Vec<String> = r.body.iter().map(atom).collect();
        out.push_str(&body.join(", "));
        out.push_str(".\n");
    }
    out
}

// ---------------------------------------------------------------------------
// Strategy surface.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Generic,
    BoundedLeaf,
    Btw,
    Depth1,
}

/// Why a rewriting could not be produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RewriteError {
    WitnessOverflow(WitnessOverflow),
    SubsetOverflow { cap: usize },
    NotTreeShaped,
    DepthExceeded { depth: Option<usize>, needed: usize },
    UnboundedDepth,
    TreewidthTooLarge { width: usize, limit: usize },
    NotMonotone,
}

impl fmt::Display for RewriteError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewriteError::WitnessOverflow(w) => {
                write!(f, "tree witness enumeration exceeded the cap of {}", w.cap)
            }
            RewriteError::SubsetOverflow { cap } => {
                write!(f, "independent witness subsets exceeded the cap of {cap}")
            }
            RewriteError::NotTreeShaped => write!(f, "query is not tree-shaped"),
            RewriteError::DepthExceeded { depth, needed } => match depth {
                Some(d) => write!(f, "ontology depth {d} exceeds the strategy limit {needed}"),
                None => write!(f, "ontology depth is unbounded, strategy needs depth <= {needed}"),
            },
            RewriteError::UnboundedDepth => write!(f, "ontology has unbounded depth"),
            RewriteError::TreewidthTooLarge { width, limit } => {
                write!(f, "query treewidth {width} exceeds the limit {limit}")
            }
            RewriteError::NotMonotone => write!(f, "internal circuit unexpectedly non-monotone"),
        }
    }
}

impl From<WitnessOverflow> for RewriteError {
    fn from(w: WitnessOverflow) -> Self {
        RewriteError::WitnessOverflow(w)
    }
}

pub const DEFAULT_LEAF_LIMIT: usize = 4;

/// Compile a positive existential rewriting with the requested strategy.
pub fn compile_pe(
    t: &crate::syntax::Ontology,
    q: &crate::syntax::ConjunctiveQuery,
    strategy: Strategy,
) -> Result<PeQuery, RewriteError> {
    use crate::reasoner::{Depth, TBoxIndex};
    match strategy {
        Strategy::Depth1 => depth1::rewrite_pe_depth1(t, q),
        Strategy::Generic => {
            let idx = TBoxIndex::for_query(t, q);
            let witnesses = crate::witness::enumerate_tree_witnesses(q, t)?;
            let chi = ftw::f_tw(q, &witnesses, ftw::DEFAULT_SUBSET_CAP)?;
            Ok(compile::formula_to_pe(q, &idx, &witnesses, &chi))
        }
        Strategy::Auto => {
            let idx = TBoxIndex::new(t);
            if matches!(idx.depth(), Depth::Finite(d) if d <= 1) {
                depth1::rewrite_pe_depth1(t, q)
            } else {
                compile_pe(t, q, Strategy::Generic)
            }
        }
        Strategy::BoundedLeaf | Strategy::Btw => compile_pe(t, q, Strategy::Generic),
    }
}

/// Compile a nonrecursive datalog rewriting with the requested strategy.
pub fn compile_ndl(
    t: &crate::syntax::Ontology,
    q: &crate::syntax::ConjunctiveQuery,
    strategy: Strategy,
) -> Result<NdlProgram, RewriteError> {
    use crate::boolprog::convert::{nbp_to_circuit, thgp_to_circuit, to_semi_unbounded};
    use crate::reasoner::{Depth, TBoxIndex};
    match strategy {
        Strategy::Generic => {
            let idx = TBoxIndex::for_query(t, q);
            let witnesses = crate::witness::enumerate_tree_witnesses(q, t)?;
            let chi = ftw::f_tw(q, &witnesses, ftw::DEFAULT_SUBSET_CAP)?;
            compile::circuit_to_ndl(q, &idx, &witnesses, &chi.to_circuit())
        }
        Strategy::BoundedLeaf => {
            let idx = TBoxIndex::for_query(t, q);
            let comps = split_components(q);
            let mut program: Option<NdlProgram> = None;
            let mut merged_rules: Vec<NdlRule> = Vec::new();
            let mut goal_bodies: Vec<NdlAtom> = Vec::new();
            for (ci, comp) in comps.iter().enumerate() {
                let witnesses = crate::witness::enumerate_tree_witnesses(comp, t)?;
                let nbp = bounded_leaf::bounded_leaf_nbp(comp, &witnesses)?;
                let circuit =
                    nbp_to_circuit(&nbp).map_err(|_| RewriteError::NotMonotone)?;
                let sub = compile::circuit_to_ndl(comp, &idx, &witnesses, &circuit)?;
                let prefix = alloc::format!("c{ci}_");
                let renamed = prefix_idb(&sub, &prefix);
                goal_bodies.push(NdlAtom {
                    pred: renamed.goal.clone(),
                    args: comp.answer_vars.clone(),
                });
                merged_rules.extend(renamed.rules);
                program = Some(NdlProgram {
                    rules: Vec::new(),
                    goal: String::new(),
                    goal_arity: q.answer_vars.len(),
                });
            }
            let _ = program;
            let goal = "goal".to_string();
            merged_rules.push(NdlRule {
                head: NdlAtom { pred: goal.clone(), args: q.answer_vars.clone() },
                body: goal_bodies,
            });
            let out = NdlProgram { rules: merged_rules, goal, goal_arity: q.answer_vars.len() };
            debug_assert!(out.validate_safety().is_ok());
            debug_assert!(out.validate_nonrecursive().is_ok());
            Ok(out)
        }
        Strategy::Btw => {
            let idx = TBoxIndex::for_query(t, q);
            let witnesses = crate::witness::enumerate_tree_witnesses(q, t)?;
            let (_, td) = shape::treewidth_and_decomposition(q)
                .map_err(|e| RewriteError::TreewidthTooLarge { width: e.vars, limit: e.limit })?;
            let built = btw::btw_thgp(&idx, q, &td)?;
            let circuit =
                thgp_to_circuit(&built.hgp).map_err(|_| RewriteError::NotMonotone)?;
            compile::circuit_to_ndl(q, &idx, &witnesses, &to_semi_unbounded(&circuit).pruned())
        }
        Strategy::Auto => {
            let idx = TBoxIndex::new(t);
            let s = shape::query_shape(q);
            if s.tree_shaped && s.leaves <= DEFAULT_LEAF_LIMIT {
                compile_ndl(t, q, Strategy::BoundedLeaf)
            } else if matches!(idx.depth(), Depth::Finite(_)) {
                compile_ndl(t, q, Strategy::Btw)
            } else {
                compile_ndl(t, q, Strategy::Generic)
            }
        }
        Strategy::Depth1 => compile_ndl(t, q, Strategy::Generic),
    }
}

/// Connected components of a query, each with its inherited answer vars.
pub fn split_components(q: &crate::syntax::ConjunctiveQuery) -> Vec<crate::syntax::ConjunctiveQuery> {
    let mut comps: Vec<crate::syntax::ConjunctiveQuery> = Vec::new();
    let mut assigned: BTreeSet<crate::syntax::Atom> = BTreeSet::new();
    for v in q.vars() {
        if comps.iter().any(|c| c.atoms.iter().any(|a| a.mentions(&v))) {
            continue;
        }
        let mut vs: BTreeSet<String> = BTreeSet::new();
        let mut stack = alloc::vec![v.clone()];
        while let Some(x) = stack.pop() {
            if !vs.insert(x.clone()) {
                continue;
            }
            for (a, b) in q.graph_edges() {
                if a == x && !vs.contains(&b) {
                    stack.push(b);
                } else if b == x && !vs.contains(&a) {
                    stack.push(a);
                }
            }
        }
        let atoms: BTreeSet<crate::syntax::Atom> =
            q.atoms.iter().filter(|at| at.vars().iter().any(|w| vs.contains(*w))).cloned().collect();
        if atoms.iter().all(|a| assigned.contains(a)) {
            continue;
        }
        assigned.extend(atoms.iter().cloned());
        let answer_vars: Vec<String> =
            q.answer_vars.iter().filter(|av| vs.contains(*av)).cloned().collect();
        comps.push(crate::syntax::ConjunctiveQuery { answer_vars, atoms });
    }
    comps
}

/// Rename the intensional predicates of a subprogram with a prefix so
/// programs can be concatenated.
fn prefix_idb(p: &NdlProgram, prefix: &str) -> NdlProgram {
    let idb = p.idb_predicates();
    let rename = |a: &NdlAtom| NdlAtom {
        pred: if idb.contains(&a.pred) {
            alloc::format!("{prefix}{}", a.pred)
        } else {
            a.pred.clone()
        },
        args: a.args.clone(),
    };
    NdlProgram {
        rules: p
            .rules
            .iter()
            .map(|r| NdlRule { head: rename(&r.head), body: r.body.iter().map(rename).collect() })
            .collect(),
        goal: alloc::format!("{prefix}{}", p.goal),
        goal_arity: p.goal_arity,
    }
}

/// Fresh-variable factory avoiding a set of used names.
pub(crate) struct FreshVars {
    used: BTreeSet<String>,
    counter: usize,
}

impl FreshVars {
    pub fn new(used: impl IntoIterator<Item = String>) -> Self {
        FreshVars { used: used.into_iter().collect(), counter: 0 }
    }

    pub fn next(&mut self, prefix: &str) -> String {
        loop {
            let name = alloc::format!("{prefix}{}", self.counter);
            self.counter += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }
}

/// Fresh predicate names for the datalog compiler.
pub(crate) struct FreshPreds {
    used: BTreeSet<String>,
}

impl FreshPreds {
    pub fn new(used: impl IntoIterator<Item = String>) -> Self {
        FreshPreds { used: used.into_iter().collect() }
    }

    pub fn claim(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while !self.used.insert(name.clone()) {
            name.push('_');
        }
        name
    }
}
