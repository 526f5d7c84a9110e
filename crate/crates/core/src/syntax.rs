//! KB and query syntax: ontologies (TBoxes), data instances (ABoxes),
//! conjunctive queries, and the line-oriented text formats for all three.
//!
//! Binary atoms over an inverse role are normalised away at construction:
//! an atom `P-(x,y)` is stored as `P(y,x)`, so data and queries only ever
//! mention plain predicate names while axioms may mention inverses.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt;

/// A binary predicate or its inverse.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role {
    pub name: String,
    pub inverted: bool,
}

impl Role {
    pub fn new(name: impl Into<String>) -> Self {
        Role { name: name.into(), inverted: false }
    }

    pub fn inverse(name: impl Into<String>) -> Self {
        Role { name: name.into(), inverted: true }
    }

    /// `inv(inv(r)) = r`.
    pub fn inv(&self) -> Role {
        Role { name: self.name.clone(), inverted: !self.inverted }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}-", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// Left- or right-hand side of a concept inclusion: `A(x)` or `exists ρ(x,_)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConceptExpr {
    Atomic(String),
    /// `Exists(ρ)` is the set of `x` with `∃y ρ(x,y)`; `∃y ρ(y,x)` is
    /// represented as `Exists(inv(ρ))`.
    Exists(Role),
}

impl fmt::Display for ConceptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConceptExpr::Atomic(a) => write!(f, "{a}"),
            ConceptExpr::Exists(r) => write!(f, "exists {r}"),
        }
    }
}

/// The four axiom forms of the fragment.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    ConceptIncl(ConceptExpr, ConceptExpr),
    RoleIncl(Role, Role),
    ConceptDisj(ConceptExpr, ConceptExpr),
    RoleDisj(Role, Role),
}

/// A TBox: an ordered list of axioms. Order is kept for printing only.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ontology {
    pub axioms: Vec<Axiom>,
}

impl Ontology {
    pub fn new(axioms: Vec<Axiom>) -> Self {
        Ontology { axioms }
    }

    /// Unary predicate names occurring in the axioms.
    pub fn unary_sig(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        let mut add = |c: &ConceptExpr| {
            if let ConceptExpr::Atomic(a) = c {
                s.insert(a.clone());
            }
        };
        for ax in &self.axioms {
            match ax {
                Axiom::ConceptIncl(l, r) | Axiom::ConceptDisj(l, r) => {
                    add(l);
                    add(r);
                }
                _ => {}
            }
        }
        s
    }

    /// Binary predicate names occurring in the axioms.
    pub fn binary_sig(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        let addc = |c: &ConceptExpr, s: &mut BTreeSet<String>| {
            if let ConceptExpr::Exists(r) = c {
                s.insert(r.name.clone());
            }
        };
        for ax in &self.axioms {
            match ax {
                Axiom::ConceptIncl(l, r) | Axiom::ConceptDisj(l, r) => {
                    addc(l, &mut s);
                    addc(r, &mut s);
                }
                Axiom::RoleIncl(l, r) | Axiom::RoleDisj(l, r) => {
                    s.insert(l.name.clone());
                    s.insert(r.name.clone());
                }
            }
        }
        s
    }

    /// Symbol count used in the depth and homomorphism-image bounds. Counts
    /// one per predicate occurrence plus one per inverse marker, so it only
    /// ever overestimates the number of written symbols, which keeps every
    /// `2|T|`-style bound safe.
    pub fn size(&self) -> usize {
        let rsize = |r: &Role| 1 + usize::from(r.inverted);
        let csize = |c: &ConceptExpr| match c {
            ConceptExpr::Atomic(_) => 1,
            ConceptExpr::Exists(r) => 1 + rsize(r),
        };
        self.axioms
            .iter()
            .map(|ax| match ax {
                Axiom::ConceptIncl(l, r) | Axiom::ConceptDisj(l, r) => csize(l) + csize(r),
                Axiom::RoleIncl(l, r) | Axiom::RoleDisj(l, r) => rsize(l) + rsize(r),
            })
            .sum()
    }
}

/// A ground fact of a data instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fact {
    Unary(String, String),
    Binary(String, String, String),
}

/// An ABox: a set of ground facts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataInstance {
    pub facts: BTreeSet<Fact>,
}

impl DataInstance {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        DataInstance { facts: facts.into_iter().collect() }
    }

    /// Individual constants occurring in the facts.
    pub fn inds(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for f in &self.facts {
            match f {
                Fact::Unary(_, a) => {
                    s.insert(a.clone());
                }
                Fact::Binary(_, a, b) => {
                    s.insert(a.clone());
                    s.insert(b.clone());
                }
            }
        }
        s
    }
}

/// A query atom; binary atoms may be reflexive but never mention constants.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Unary(String, String),
    Binary(String, String, String),
}

impl Atom {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Atom::Unary(_, x) => vec![x],
            Atom::Binary(_, x, y) => {
                if x == y {
                    vec![x]
                } else {
                    vec![x, y]
                }
            }
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.vars().contains(&v)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Unary(p, x) => write!(f, "{p}({x})"),
            Atom::Binary(p, x, y) => write!(f, "{p}({x},{y})"),
        }
    }
}

/// A conjunctive query: an answer tuple of variables and a set of atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub answer_vars: Vec<String>,
    pub atoms: BTreeSet<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(answer_vars: Vec<String>, atoms: impl IntoIterator<Item = Atom>) -> Self {
        ConjunctiveQuery { answer_vars, atoms: atoms.into_iter().collect() }
    }

    /// All variables, in first-occurrence order: answer variables first,
    /// then body variables in atom order.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for v in &self.answer_vars {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
        for at in &self.atoms {
            for v in at.vars() {
                if seen.insert(v.to_string()) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    pub fn existential_vars(&self) -> Vec<String> {
        let avars: BTreeSet<_> = self.answer_vars.iter().cloned().collect();
        self.vars().into_iter().filter(|v| !avars.contains(v)).collect()
    }

    pub fn is_answer_var(&self, v: &str) -> bool {
        self.answer_vars.iter().any(|a| a == v)
    }

    /// Undirected graph on the variables with an edge per non-reflexive
    /// binary atom.
    pub fn graph_edges(&self) -> BTreeSet<(String, String)> {
        let mut e = BTreeSet::new();
        for at in &self.atoms {
            if let Atom::Binary(_, x, y) = at {
                if x != y {
                    let (a, b) = if x < y { (x, y) } else { (y, x) };
                    e.insert((a.clone(), b.clone()));
                }
            }
        }
        e
    }

    pub fn unary_sig(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .filter_map(|a| match a {
                Atom::Unary(p, _) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn binary_sig(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .filter_map(|a| match a {
                Atom::Binary(p, _, _) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    /// Symbol count: one per atom predicate plus one per argument position.
    pub fn size(&self) -> usize {
        self.atoms
            .iter()
            .map(|a| match a {
                Atom::Unary(_, _) => 2,
                Atom::Binary(_, _, _) => 3,
            })
            .sum()
    }
}

/// Parse failure, with 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

// ---------------------------------------------------------------------------
// Tokenizer shared by the three formats.

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Sym(char),
    Arrow,     // ->
    Implies,   // :-
    Underscore,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Lexer { src, chars: src.char_indices().collect(), pos: 0, line, line_start: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let col = self
            .chars
            .get(self.pos)
            .map(|(i, _)| *i)
            .unwrap_or(self.src.len())
            .saturating_sub(self.line_start)
            + 1;
        ParseError { line: self.line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c == '#' {
                self.pos = self.chars.len();
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<Tok> {
        let save = self.pos;
        let t = self.next_tok().ok().flatten();
        self.pos = save;
        t
    }

    fn next_tok(&mut self) -> Result<Option<Tok>, ParseError> {
        self.skip_ws();
        let Some(&(_, c)) = self.chars.get(self.pos) else {
            return Ok(None);
        };
        if c == '-' {
            if let Some(&(_, '>')) = self.chars.get(self.pos + 1) {
                self.pos += 2;
                return Ok(Some(Tok::Arrow));
            }
            self.pos += 1;
            return Ok(Some(Tok::Sym('-')));
        }
        if c == ':' {
            if let Some(&(_, '-')) = self.chars.get(self.pos + 1) {
                self.pos += 2;
                return Ok(Some(Tok::Implies));
            }
            self.pos += 1;
            return Ok(Some(Tok::Sym(':')));
        }
        if c == '_' {
            // `_` only ever stands alone as the anonymous position.
            if let Some(&(_, d)) = self.chars.get(self.pos + 1) {
                if d.is_alphanumeric() || d == '_' {
                    self.pos += 1;
                    return Err(self.err("identifiers may not start with '_'"));
                }
            }
            self.pos += 1;
            return Ok(Some(Tok::Underscore));
        }
        if c.is_alphanumeric() {
            let start = self.pos;
            while let Some(&(_, d)) = self.chars.get(self.pos) {
                if d.is_alphanumeric() || d == '_' || d == '\'' {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            let s: String = self.chars[start..self.pos].iter().map(|(_, d)| *d).collect();
            return Ok(Some(Tok::Ident(s)));
        }
        if "(),.=".contains(c) {
            self.pos += 1;
            return Ok(Some(Tok::Sym(c)));
        }
        Err(self.err(format!("unexpected character '{c}'")))
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.next_tok()? {
            Some(Tok::Ident(s)) => Ok(s),
            other => Err(self.err(format!("expected identifier, found {other:?}"))),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        match self.next_tok()? {
            Some(Tok::Sym(d)) if d == c => Ok(()),
            other => Err(self.err(format!("expected '{c}', found {other:?}"))),
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }
}

fn is_constant_like(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_digit())
}

// ---------------------------------------------------------------------------
// Ontology format.

#[derive(Clone, Debug)]
enum LhsAtom {
    Concept(ConceptExpr, String),
    Role(Role, String, String),
}

// `A(x)` | `exists P(x,_)` | `exists P(_,x)` | `P(x,y)`
fn parse_tbox_atom(lx: &mut Lexer) -> Result<LhsAtom, ParseError> {
    let first = lx.expect_ident()?;
    if first == "exists" {
        let pred = lx.expect_ident()?;
        lx.expect_sym('(')?;
        let t1 = lx.next_tok()?;
        lx.expect_sym(',')?;
        let t2 = lx.next_tok()?;
        lx.expect_sym(')')?;
        match (t1, t2) {
            (Some(Tok::Ident(v)), Some(Tok::Underscore)) => {
                Ok(LhsAtom::Concept(ConceptExpr::Exists(Role::new(pred)), v))
            }
            (Some(Tok::Underscore), Some(Tok::Ident(v))) => {
                Ok(LhsAtom::Concept(ConceptExpr::Exists(Role::inverse(pred)), v))
            }
            _ => Err(lx.err("exists atom needs exactly one named position and one '_'")),
        }
    } else {
        lx.expect_sym('(')?;
        let v1 = lx.expect_ident()?;
        match lx.next_tok()? {
            Some(Tok::Sym(')')) => Ok(LhsAtom::Concept(ConceptExpr::Atomic(first), v1)),
            Some(Tok::Sym(',')) => {
                let v2 = lx.expect_ident()?;
                lx.expect_sym(')')?;
                if v1 == v2 {
                    return Err(lx.err("role atom in an axiom needs two distinct variables"));
                }
                Ok(LhsAtom::Role(Role::new(first), v1, v2))
            }
            other => Err(lx.err(format!("expected ')' or ',', found {other:?}"))),
        }
    }
}

fn parse_axiom_line(line: &str, lineno: usize) -> Result<Option<Axiom>, ParseError> {
    let mut lx = Lexer::new(line, lineno);
    if lx.at_end() {
        return Ok(None);
    }
    let a1 = parse_tbox_atom(&mut lx)?;
    let next = lx.next_tok()?;
    match next {
        Some(Tok::Sym(',')) => {
            // disjointness: `lhs1, lhs2 -> false`
            let a2 = parse_tbox_atom(&mut lx)?;
            match lx.next_tok()? {
                Some(Tok::Arrow) => {}
                other => return Err(lx.err(format!("expected '->', found {other:?}"))),
            }
            let kw = lx.expect_ident()?;
            if kw != "false" {
                return Err(lx.err("disjointness axiom must end in 'false'"));
            }
            if !lx.at_end() {
                return Err(lx.err("trailing input after axiom"));
            }
            match (a1, a2) {
                (LhsAtom::Concept(c1, v1), LhsAtom::Concept(c2, v2)) => {
                    if v1 != v2 {
                        return Err(lx.err("disjoint concepts must share their variable"));
                    }
                    Ok(Some(Axiom::ConceptDisj(c1, c2)))
                }
                (LhsAtom::Role(r1, x1, y1), LhsAtom::Role(r2, x2, y2)) => {
                    let rhs = if x1 == x2 && y1 == y2 {
                        r2
                    } else if x1 == y2 && y1 == x2 {
                        r2.inv()
                    } else {
                        return Err(lx.err("disjoint roles must use the same pair of variables"));
                    };
                    Ok(Some(Axiom::RoleDisj(r1, rhs)))
                }
                _ => Err(lx.err("disjointness mixes a concept with a role")),
            }
        }
        Some(Tok::Arrow) => {
            let a2 = parse_tbox_atom(&mut lx)?;
            if !lx.at_end() {
                return Err(lx.err("trailing input after axiom"));
            }
            match (a1, a2) {
                (LhsAtom::Concept(c1, v1), LhsAtom::Concept(c2, v2)) => {
                    if v1 != v2 {
                        return Err(lx.err("concept inclusion must use one variable"));
                    }
                    Ok(Some(Axiom::ConceptIncl(c1, c2)))
                }
                (LhsAtom::Role(r1, x1, y1), LhsAtom::Role(r2, x2, y2)) => {
                    let rhs = if x1 == x2 && y1 == y2 {
                        r2
                    } else if x1 == y2 && y1 == x2 {
                        r2.inv()
                    } else {
                        return Err(lx.err("role inclusion must reuse the body variables"));
                    };
                    Ok(Some(Axiom::RoleIncl(r1, rhs)))
                }
                _ => Err(lx.err("inclusion mixes a concept with a role")),
            }
        }
        other => Err(lx.err(format!("expected '->' or ',', found {other:?}"))),
    }
}

/// Parse the `.dl` ontology format: one axiom per line, `#` comments.
pub fn parse_ontology(text: &str) -> Result<Ontology, ParseError> {
    let mut axioms = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(ax) = parse_axiom_line(line, i + 1)? {
            axioms.push(ax);
        }
    }
    let t = Ontology::new(axioms);
    if let Some(name) = t.unary_sig().intersection(&t.binary_sig()).next() {
        return Err(ParseError {
            line: 1,
            col: 1,
            msg: format!("predicate '{name}' is used with two different arities"),
        });
    }
    Ok(t)
}

fn role_atom_str(r: &Role, x: &str, y: &str) -> String {
    if r.inverted {
        format!("{}({},{})", r.name, y, x)
    } else {
        format!("{}({},{})", r.name, x, y)
    }
}

fn concept_atom_str(c: &ConceptExpr, v: &str) -> String {
    match c {
        ConceptExpr::Atomic(a) => format!("{a}({v})"),
        ConceptExpr::Exists(r) => {
            if r.inverted {
                format!("exists {}(_,{})", r.name, v)
            } else {
                format!("exists {}({},_)", r.name, v)
            }
        }
    }
}

/// Print in the `.dl` format; `parse_ontology` inverts this exactly.
pub fn print_ontology(t: &Ontology) -> String {
    let mut out = String::new();
    for ax in &t.axioms {
        let line = match ax {
            Axiom::ConceptIncl(l, r) => {
                format!("{} -> {}", concept_atom_str(l, "x"), concept_atom_str(r, "x"))
            }
            Axiom::RoleIncl(l, r) => {
                format!("{} -> {}", role_atom_str(l, "x", "y"), role_atom_str(r, "x", "y"))
            }
            Axiom::ConceptDisj(l, r) => {
                format!("{}, {} -> false", concept_atom_str(l, "x"), concept_atom_str(r, "x"))
            }
            Axiom::RoleDisj(l, r) => {
                format!("{}, {} -> false", role_atom_str(l, "x", "y"), role_atom_str(r, "x", "y"))
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Data format.

/// Parse the `.abox` format: dot-terminated facts, `#` comments.
pub fn parse_data(text: &str) -> Result<DataInstance, ParseError> {
    let mut facts = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let mut lx = Lexer::new(line, i + 1);
        while !lx.at_end() {
            let pred = lx.expect_ident()?;
            lx.expect_sym('(')?;
            let a = lx.expect_ident()?;
            match lx.next_tok()? {
                Some(Tok::Sym(')')) => {
                    facts.insert(Fact::Unary(pred, a));
                }
                Some(Tok::Sym(',')) => {
                    let b = lx.expect_ident()?;
                    lx.expect_sym(')')?;
                    facts.insert(Fact::Binary(pred, a, b));
                }
                other => return Err(lx.err(format!("expected ')' or ',', found {other:?}"))),
            }
            lx.expect_sym('.')?;
        }
    }
    Ok(DataInstance { facts })
}

/// Print in the `.abox` format, one fact per line, sorted.
pub fn print_data(a: &DataInstance) -> String {
    let mut out = String::new();
    for f in &a.facts {
        match f {
            Fact::Unary(p, x) => out.push_str(&format!("{p}({x}).\n")),
            Fact::Binary(p, x, y) => out.push_str(&format!("{p}({x},{y}).\n")),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Query format.

/// Parse the `.cq` format: `q(x1,...,xn) :- atom, atom, ...`.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery, ParseError> {
    let mut body_line = None;
    let mut lineno = 0;
    for (i, line) in text.lines().enumerate() {
        let mut probe = Lexer::new(line, i + 1);
        if !probe.at_end() {
            if body_line.is_some() {
                return Err(ParseError {
                    line: i + 1,
                    col: 1,
                    msg: "query file must contain a single definition".to_string(),
                });
            }
            body_line = Some(line);
            lineno = i + 1;
        }
    }
    let Some(line) = body_line else {
        return Err(ParseError { line: 1, col: 1, msg: "empty query file".to_string() });
    };
    let mut lx = Lexer::new(line, lineno);
    let _head = lx.expect_ident()?;
    lx.expect_sym('(')?;
    let mut answer_vars = Vec::new();
    loop {
        match lx.next_tok()? {
            Some(Tok::Sym(')')) => break,
            Some(Tok::Ident(v)) => {
                if is_constant_like(&v) {
                    return Err(lx.err("constants are not allowed in queries"));
                }
                answer_vars.push(v);
                match lx.peek() {
                    Some(Tok::Sym(',')) => {
                        lx.next_tok()?;
                    }
                    Some(Tok::Sym(')')) => {}
                    other => return Err(lx.err(format!("expected ',' or ')', found {other:?}"))),
                }
            }
            other => return Err(lx.err(format!("expected variable or ')', found {other:?}"))),
        }
    }
    {
        let mut seen = BTreeSet::new();
        for v in &answer_vars {
            if !seen.insert(v) {
                return Err(lx.err(format!("repeated answer variable '{v}'")));
            }
        }
    }
    match lx.next_tok()? {
        Some(Tok::Implies) => {}
        other => return Err(lx.err(format!("expected ':-', found {other:?}"))),
    }
    let mut atoms = BTreeSet::new();
    loop {
        let pred = lx.expect_ident()?;
        lx.expect_sym('(')?;
        let x = lx.expect_ident()?;
        if is_constant_like(&x) {
            return Err(lx.err("constants are not allowed in queries"));
        }
        match lx.next_tok()? {
            Some(Tok::Sym(')')) => {
                atoms.insert(Atom::Unary(pred, x));
            }
            Some(Tok::Sym(',')) => {
                let y = lx.expect_ident()?;
                if is_constant_like(&y) {
                    return Err(lx.err("constants are not allowed in queries"));
                }
                lx.expect_sym(')')?;
                atoms.insert(Atom::Binary(pred, x, y));
            }
            other => return Err(lx.err(format!("expected ')' or ',', found {other:?}"))),
        }
        if lx.at_end() {
            break;
        }
        lx.expect_sym(',')?;
    }
    let q = ConjunctiveQuery { answer_vars, atoms };
    let body_vars: BTreeSet<String> = q.atoms.iter().flat_map(|a| a.vars()).map(String::from).collect();
    for v in &q.answer_vars {
        if !body_vars.contains(v) {
            return Err(ParseError {
                line: lineno,
                col: 1,
                msg: format!("answer variable '{v}' does not occur in the body"),
            });
        }
    }
    Ok(q)
}

/// Print in the `.cq` format; atoms come out sorted.
pub fn print_query(q: &ConjunctiveQuery) -> String {
    let mut s = String::from("q(");
    s.push_str(&q.answer_vars.join(","));
    s.push_str(") :- ");
    let body: Vec<String> = q.atoms.iter().map(|a| a.to_string()).collect();
    s.push_str(&body.join(", "));
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The running example TBox used throughout the test suite.
    pub fn kb0() -> (Ontology, DataInstance, ConjunctiveQuery) {
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
    fn axiom_forms_round_trip() {
        let src = "A(x) -> B(x)\n\
                   A(x) -> exists P(x,_)\n\
                   exists P(_,x) -> A(x)\n\
                   exists P(x,_) -> exists R(x,_)\n\
                   P(x,y) -> R(x,y)\n\
                   P(x,y) -> R(y,x)\n\
                   A(x), B(x) -> false\n\
                   P(x,y), R(x,y) -> false\n";
        let t = parse_ontology(src).unwrap();
        assert_eq!(t.axioms.len(), 8);
        assert_eq!(t.axioms[0], Axiom::ConceptIncl(ConceptExpr::Atomic("A".into()), ConceptExpr::Atomic("B".into())));
        assert_eq!(
            t.axioms[1],
            Axiom::ConceptIncl(ConceptExpr::Atomic("A".into()), ConceptExpr::Exists(Role::new("P")))
        );
        assert_eq!(t.axioms[5], Axiom::RoleIncl(Role::new("P"), Role::inverse("R")));
        assert_eq!(t.axioms[7], Axiom::RoleDisj(Role::new("P"), Role::new("R")));
        assert_eq!(parse_ontology(&print_ontology(&t)).unwrap(), t);
    }

    #[test]
    fn kb0_shapes() {
        let (t, a, q) = kb0();
        assert_eq!(t.axioms.len(), 7);
        assert_eq!(a.facts.len(), 2);
        assert_eq!(a.inds().len(), 2);
        assert_eq!(q.atoms.len(), 6);
        assert_eq!(q.vars().len(), 7);
        // acyclic graph on 7 vertices with 6 edges
        assert_eq!(q.graph_edges().len(), 6);
    }

    #[test]
    fn query_edge_cases() {
        let q = parse_query("q() :- A(y)").unwrap();
        assert!(q.answer_vars.is_empty());
        assert_eq!(q.atoms.len(), 1);
        let q = parse_query("q(x) :- A(x), A(x)").unwrap();
        assert_eq!(q.atoms.len(), 1);
        assert!(parse_query("q(x) :- A(y)").is_err());
        assert!(parse_query("q(x) :- A(1x)").is_err());
        assert!(parse_query("q(x,x) :- A(x)").is_err());
    }

    #[test]
    fn data_edge_cases() {
        let a = parse_data("").unwrap();
        assert!(a.inds().is_empty());
        let a = parse_data("# comment\nA(a). R(a,c).\n").unwrap();
        assert_eq!(a.facts.len(), 2);
        assert_eq!(parse_data(&print_data(&a)).unwrap(), a);
    }

    #[test]
    fn role_inversion_is_involution() {
        let r = Role::inverse("P");
        assert_eq!(r.inv().inv(), r);
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_ontology("A(x) => B(x)").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.col > 1);
        assert!(parse_ontology("A(x) -> B(y)").is_err());
        assert!(parse_ontology("A(x,y) -> B(x)").is_err());
    }
}
