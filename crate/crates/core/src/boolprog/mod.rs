//! Boolean program representations: monotone formulas, circuits,
//! nondeterministic branching programs (NBPs) and hypergraph programs
//! (HGPs), plus evaluators for all of them. The translations between the
//! representations live in [`convert`].

pub mod convert;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

pub use convert::{circuit_to_thgp, nbp_to_circuit, nbp_to_interval_hgp, thgp_to_circuit};

/// A possibly negated propositional variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal<V> {
    pub var: V,
    pub negated: bool,
}

impl<V: Ord> Literal<V> {
    pub fn pos(var: V) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: V) -> Self {
        Literal { var, negated: true }
    }

    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> bool {
        let v = assignment.get(&self.var).copied().unwrap_or(false);
        v != self.negated
    }
}

/// An edge or vertex label: `0`, `1`, or a conjunction of literals
/// (the empty conjunction is `1`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label<V> {
    Const(bool),
    Conj(Vec<Literal<V>>),
}

impl<V: Ord + Clone> Label<V> {
    pub fn truth() -> Self {
        Label::Const(true)
    }

    pub fn falsity() -> Self {
        Label::Const(false)
    }

    pub fn lit(l: Literal<V>) -> Self {
        Label::Conj(vec![l])
    }

    pub fn conj(mut lits: Vec<Literal<V>>) -> Self {
        lits.sort();
        lits.dedup();
        if lits.is_empty() {
            Label::Const(true)
        } else {
            Label::Conj(lits)
        }
    }

    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> bool {
        match self {
            Label::Const(b) => *b,
            Label::Conj(lits) => lits.iter().all(|l| l.eval(assignment)),
        }
    }

    pub fn is_monotone(&self) -> bool {
        match self {
            Label::Const(_) => true,
            Label::Conj(lits) => lits.iter().all(|l| !l.negated),
        }
    }

    pub fn vars(&self) -> BTreeSet<V> {
        match self {
            Label::Const(_) => BTreeSet::new(),
            Label::Conj(lits) => lits.iter().map(|l| l.var.clone()).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Formulas.

/// Negation-free Boolean formula.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Formula<V> {
    Var(V),
    Const(bool),
    And(Vec<Formula<V>>),
    Or(Vec<Formula<V>>),
}

impl<V: Ord + Clone> Formula<V> {
    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> bool {
        match self {
            Formula::Var(v) => assignment.get(v).copied().unwrap_or(false),
            Formula::Const(b) => *b,
            Formula::And(xs) => xs.iter().all(|x| x.eval(assignment)),
            Formula::Or(xs) => xs.iter().any(|x| x.eval(assignment)),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        match self {
            Formula::Var(_) | Formula::Const(_) => 1,
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    pub fn vars(&self) -> BTreeSet<V> {
        match self {
            Formula::Var(v) => [v.clone()].into_iter().collect(),
            Formula::Const(_) => BTreeSet::new(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().flat_map(Formula::vars).collect(),
        }
    }

    /// Structural conversion into a circuit.
    pub fn to_circuit(&self) -> Circuit<V> {
        let mut c = Circuit::new();
        let out = self.build(&mut c);
        c.output = out;
        c
    }

    fn build(&self, c: &mut Circuit<V>) -> usize {
        match self {
            Formula::Var(v) => c.push(Gate::Input(Literal::pos(v.clone()))),
            Formula::Const(b) => c.push(Gate::Const(*b)),
            Formula::And(xs) => {
                let ins: Vec<usize> = xs.iter().map(|x| x.build(c)).collect();
                c.push(Gate::And(ins))
            }
            Formula::Or(xs) => {
                let ins: Vec<usize> = xs.iter().map(|x| x.build(c)).collect();
                c.push(Gate::Or(ins))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Circuits.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate<V> {
    /// input gate carrying a literal; a negated literal is the only place
    /// negation may occur
    Input(Literal<V>),
    Const(bool),
    And(Vec<usize>),
    Or(Vec<usize>),
}

/// A Boolean circuit with gates in topological order (every gate only
/// references earlier gates).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Circuit<V> {
    pub gates: Vec<Gate<V>>,
    pub output: usize,
}

impl<V: Ord + Clone> Circuit<V> {
    pub fn new() -> Self {
        Circuit { gates: Vec::new(), output: 0 }
    }

    pub fn push(&mut self, g: Gate<V>) -> usize {
        if let Gate::And(ins) | Gate::Or(ins) = &g {
            for &i in ins {
                assert!(i < self.gates.len(), "gate inputs must precede the gate");
            }
        }
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.gates.iter().all(|g| match g {
            Gate::Input(l) => !l.negated,
            _ => true,
        })
    }

    /// AND gates of fan-in two, negation only at inputs.
    pub fn is_semi_unbounded(&self) -> bool {
        self.gates.iter().all(|g| match g {
            Gate::And(ins) => ins.len() == 2,
            _ => true,
        })
    }

    pub fn vars(&self) -> BTreeSet<V> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Input(l) => Some(l.var.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> bool {
        let mut val = vec![false; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            val[i] = match g {
                Gate::Input(l) => l.eval(assignment),
                Gate::Const(b) => *b,
                Gate::And(ins) => ins.iter().all(|&j| val[j]),
                Gate::Or(ins) => ins.iter().any(|&j| val[j]),
            };
        }
        val[self.output]
    }

    /// Full expansion into a formula (exponential in general; test use).
    pub fn expand(&self) -> Formula<V> {
        assert!(self.is_monotone(), "expansion is defined for monotone circuits");
        fn go<V: Ord + Clone>(c: &Circuit<V>, i: usize) -> Formula<V> {
            match &c.gates[i] {
                Gate::Input(l) => Formula::Var(l.var.clone()),
                Gate::Const(b) => Formula::Const(*b),
                Gate::And(ins) => Formula::And(ins.iter().map(|&j| go(c, j)).collect()),
                Gate::Or(ins) => Formula::Or(ins.iter().map(|&j| go(c, j)).collect()),
            }
        }
        go(self, self.output)
    }

    /// Gates that feed (transitively) into the output.
    pub fn live_gates(&self) -> BTreeSet<usize> {
        let mut live = BTreeSet::new();
        let mut stack = vec![self.output];
        while let Some(i) = stack.pop() {
            if live.insert(i) {
                if let Gate::And(ins) | Gate::Or(ins) = &self.gates[i] {
                    stack.extend(ins.iter().copied());
                }
            }
        }
        live
    }

    /// Drop gates not feeding the output, preserving order.
    pub fn pruned(&self) -> Circuit<V> {
        let live = self.live_gates();
        let mut map = BTreeMap::new();
        let mut out = Circuit::new();
        for (i, g) in self.gates.iter().enumerate() {
            if !live.contains(&i) {
                continue;
            }
            let g2 = match g {
                Gate::And(ins) => Gate::And(ins.iter().map(|j| map[j]).collect()),
                Gate::Or(ins) => Gate::Or(ins.iter().map(|j| map[j]).collect()),
                other => other.clone(),
            };
            map.insert(i, out.push(g2));
        }
        out.output = map[&self.output];
        out
    }
}

// ---------------------------------------------------------------------------
// Nondeterministic branching programs.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NbpEdge<V> {
    pub from: usize,
    pub to: usize,
    pub label: Label<V>,
}

/// An edge-labelled digraph accepting an assignment iff some `s`→`t` path
/// has all labels true.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nbp<V> {
    pub vertices: usize,
    pub edges: Vec<NbpEdge<V>>,
    pub s: usize,
    pub t: usize,
}

impl<V: Ord + Clone> Nbp<V> {
    pub fn is_monotone(&self) -> bool {
        self.edges.iter().all(|e| e.label.is_monotone())
    }

    pub fn vars(&self) -> BTreeSet<V> {
        self.edges.iter().flat_map(|e| e.label.vars()).collect()
    }

    /// `|V| + |E| + |variables|`.
    pub fn size(&self) -> usize {
        self.vertices + self.edges.len() + self.vars().len()
    }

    /// BFS over the satisfied edges.
    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> bool {
        let mut seen = vec![false; self.vertices];
        let mut queue = vec![self.s];
        seen[self.s] = true;
        while let Some(v) = queue.pop() {
            if v == self.t {
                return true;
            }
            for e in &self.edges {
                if e.from == v && !seen[e.to] && e.label.eval(assignment) {
                    seen[e.to] = true;
                    queue.push(e.to);
                }
            }
        }
        seen[self.t]
    }
}

// ---------------------------------------------------------------------------
// Hypergraph programs.

/// The tree a THGP's hypergraph vertices live on: hypergraph vertex `i`
/// is skeleton edge `edges[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Skeleton {
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == v || *b == v).count()
    }

    pub fn incident(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| *a == v || *b == v)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.vertices).filter(|&v| self.degree(v) == 1).collect()
    }

    /// Is the skeleton a tree (connected, acyclic)?
    pub fn is_tree(&self) -> bool {
        if self.vertices == 0 {
            return false;
        }
        if self.edges.len() + 1 != self.vertices {
            return false;
        }
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v { b } else if b == v { a } else { continue };
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.vertices
    }
}

/// A hypergraph program: labelled vertices, hyperedges as vertex sets.
/// `f(α) = 1` iff an independent (pairwise disjoint) subset of the
/// hyperedges covers every vertex whose label evaluates to 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hgp<V> {
    pub labels: Vec<Label<V>>,
    pub hyperedges: Vec<BTreeSet<usize>>,
    pub skeleton: Option<Skeleton>,
}

impl<V: Ord + Clone> Hgp<V> {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_monotone(&self) -> bool {
        self.labels.iter().all(Label::is_monotone)
    }

    pub fn vars(&self) -> BTreeSet<V> {
        self.labels.iter().flat_map(Label::vars).collect()
    }

    pub fn size(&self) -> usize {
        self.labels.len() + self.hyperedges.len() + self.vars().len()
    }

    /// THGP validity: a tree skeleton whose edges are the vertices, every
    /// hyperedge nonempty and connected (hence a generalized interval), and
    /// every boundary vertex of a hyperedge of degree 2 in the tree.
    pub fn is_valid_thgp(&self) -> bool {
        let Some(sk) = &self.skeleton else {
            return false;
        };
        if !sk.is_tree() || sk.edges.len() != self.labels.len() {
            return false;
        }
        self.hyperedges.iter().all(|h| {
            !h.is_empty() && edge_set_connected(sk, h) && boundary_degrees_ok(sk, h)
        })
    }

    /// Interval HGP: a valid THGP over a path.
    pub fn is_valid_interval_hgp(&self) -> bool {
        self.is_valid_thgp()
            && self.skeleton.as_ref().is_some_and(|sk| sk.leaves().len() == 2 || sk.edges.is_empty())
    }

    /// Exact evaluation by branch-and-bound over the zero vertices.
    pub fn eval(&self, assignment: &BTreeMap<V, bool>) -> Result<bool, HgpTooLarge> {
        self.eval_limited(assignment, DEFAULT_HGP_ZERO_LIMIT)
    }

    pub fn eval_limited(
        &self,
        assignment: &BTreeMap<V, bool>,
        zero_limit: usize,
    ) -> Result<bool, HgpTooLarge> {
        let zeros: Vec<usize> = (0..self.labels.len())
            .filter(|&i| !self.labels[i].eval(assignment))
            .collect();
        if zeros.len() > zero_limit {
            return Err(HgpTooLarge { zeros: zeros.len(), limit: zero_limit });
        }
        let zero_set: BTreeSet<usize> = zeros.iter().copied().collect();
        // hyperedges touching a zero are the only useful ones
        let useful: Vec<&BTreeSet<usize>> =
            self.hyperedges.iter().filter(|h| h.iter().any(|v| zero_set.contains(v))).collect();
        let mut used: BTreeSet<usize> = BTreeSet::new();
        Ok(cover_zeros(&zeros, 0, &useful, &mut used))
    }
}

pub const DEFAULT_HGP_ZERO_LIMIT: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HgpTooLarge {
    pub zeros: usize,
    pub limit: usize,
}

impl fmt::Display for HgpTooLarge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "hypergraph program has {} zero vertices, exact search limit is {}", self.zeros, self.limit)
    }
}

fn cover_zeros(
    zeros: &[usize],
    i: usize,
    hyperedges: &[&BTreeSet<usize>],
    used: &mut BTreeSet<usize>,
) -> bool {
    let Some(&z) = zeros.get(i) else {
        return true;
    };
    if used.contains(&z) {
        return cover_zeros(zeros, i + 1, hyperedges, used);
    }
    for h in hyperedges {
        if !h.contains(&z) || h.iter().any(|v| used.contains(v)) {
            continue;
        }
        used.extend(h.iter().copied());
        if cover_zeros(zeros, i + 1, hyperedges, used) {
            return true;
        }
        for v in h.iter() {
            used.remove(v);
        }
    }
    false
}

fn edge_set_connected(sk: &Skeleton, h: &BTreeSet<usize>) -> bool {
    let Some(&first) = h.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::new();
    let mut stack = vec![first];
    seen.insert(first);
    while let Some(e) = stack.pop() {
        let (a, b) = sk.edges[e];
        for &f in h {
            if seen.contains(&f) {
                continue;
            }
            let (c, d) = sk.edges[f];
            if a == c || a == d || b == c || b == d {
                seen.insert(f);
                stack.push(f);
            }
        }
    }
    seen.len() == h.len()
}

fn boundary_degrees_ok(sk: &Skeleton, h: &BTreeSet<usize>) -> bool {
    for v in 0..sk.vertices {
        let inc = sk.incident(v);
        let inside = inc.iter().filter(|e| h.contains(e)).count();
        if inside > 0 && inside < inc.len() {
            // boundary vertex
            if inc.len() != 2 {
                return false;
            }
        }
    }
    true
}

/// Human-readable label rendering used by the JSON layer and CLI:
/// `"0"`, `"1"`, or `"x1&!x2"`.
pub fn render_label<V: fmt::Display>(l: &Label<V>) -> alloc::string::String {
    match l {
        Label::Const(false) => "0".into(),
        Label::Const(true) => "1".into(),
        Label::Conj(lits) => {
            let parts: Vec<alloc::string::String> = lits
                .iter()
                .map(|l| if l.negated { format!("!{}", l.var) } else { format!("{}", l.var) })
                .collect();
            parts.join("&")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn asg(pairs: &[(&str, bool)]) -> BTreeMap<String, bool> {
        pairs.iter().map(|(k, v)| (String::from(*k), *v)).collect()
    }

    #[test]
    fn formula_eval() {
        let f = Formula::And(vec![
            Formula::Var(String::from("x")),
            Formula::Or(vec![Formula::Var(String::from("y")), Formula::Var(String::from("z"))]),
        ]);
        assert!(f.eval(&asg(&[("x", true), ("y", false), ("z", true)])));
        assert!(!f.eval(&asg(&[("x", false), ("y", true), ("z", true)])));
        assert_eq!(f.size(), 5);
    }

    #[test]
    fn circuit_matches_expansion() {
        let f = Formula::Or(vec![
            Formula::And(vec![Formula::Var(String::from("a")), Formula::Var(String::from("b"))]),
            Formula::Const(false),
        ]);
        let c = f.to_circuit();
        for a in [false, true] {
            for b in [false, true] {
                let m = asg(&[("a", a), ("b", b)]);
                assert_eq!(c.eval(&m), f.eval(&m));
            }
        }
    }

    #[test]
    fn nbp_chain() {
        let p = Nbp {
            vertices: 3,
            edges: vec![
                NbpEdge { from: 0, to: 1, label: Label::lit(Literal::pos(String::from("x"))) },
                NbpEdge { from: 1, to: 2, label: Label::lit(Literal::pos(String::from("y"))) },
            ],
            s: 0,
            t: 2,
        };
        assert!(p.eval(&asg(&[("x", true), ("y", true)])));
        assert!(!p.eval(&asg(&[("x", false), ("y", true)])));
        let trivial = Nbp::<String> { vertices: 1, edges: vec![], s: 0, t: 0 };
        assert!(trivial.eval(&BTreeMap::new()));
    }

    #[test]
    fn hgp_eval_basics() {
        // all-ones program accepts with the empty cover
        let p = Hgp::<String> {
            labels: vec![Label::truth(), Label::truth()],
            hyperedges: vec![],
            skeleton: None,
        };
        assert_eq!(p.eval(&BTreeMap::new()), Ok(true));
        // a zero vertex in no hyperedge rejects
        let p = Hgp::<String> {
            labels: vec![Label::falsity()],
            hyperedges: vec![],
            skeleton: None,
        };
        assert_eq!(p.eval(&BTreeMap::new()), Ok(false));
        // overlapping hyperedges cannot both be used
        let p = Hgp::<String> {
            labels: vec![Label::falsity(), Label::falsity(), Label::falsity()],
            hyperedges: vec![
                [0, 1].into_iter().collect(),
                [1, 2].into_iter().collect(),
                [2].into_iter().collect(),
            ],
            skeleton: None,
        };
        assert_eq!(p.eval(&BTreeMap::new()), Ok(true)); // {0,1} + {2}
        let p2 = Hgp { hyperedges: vec![p.hyperedges[0].clone(), p.hyperedges[1].clone()], ..p };
        assert_eq!(p2.eval(&BTreeMap::new()), Ok(false));
    }

    #[test]
    fn thgp_validity() {
        // path on 4 vertices, hypergraph vertices = 3 edges
        let sk = Skeleton { vertices: 4, edges: vec![(0, 1), (1, 2), (2, 3)] };
        let good = Hgp::<String> {
            labels: vec![Label::truth(); 3],
            hyperedges: vec![[0, 1].into_iter().collect()],
            skeleton: Some(sk.clone()),
        };
        assert!(good.is_valid_thgp());
        assert!(good.is_valid_interval_hgp());
        // a disconnected hyperedge is not an interval
        let bad = Hgp::<String> {
            labels: vec![Label::truth(); 3],
            hyperedges: vec![[0, 2].into_iter().collect()],
            skeleton: Some(sk),
        };
        assert!(!bad.is_valid_thgp());
        // a star: hyperedge holding one of three edges at the centre has a
        // degree-3 boundary vertex
        let star = Skeleton { vertices: 4, edges: vec![(0, 1), (0, 2), (0, 3)] };
        let bad2 = Hgp::<String> {
            labels: vec![Label::truth(); 3],
            hyperedges: vec![[0].into_iter().collect()],
            skeleton: Some(star.clone()),
        };
        assert!(!bad2.is_valid_thgp());
        let full = Hgp::<String> {
            labels: vec![Label::truth(); 3],
            hyperedges: vec![[0, 1, 2].into_iter().collect()],
            skeleton: Some(star),
        };
        assert!(full.is_valid_thgp());
        assert!(!full.is_valid_interval_hgp());
    }
}
