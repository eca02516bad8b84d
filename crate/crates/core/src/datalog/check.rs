use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Literal, Program, Term};
use super::DatalogError;

/// The sort of an argument position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Sym,
    Num,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredSchema {
    pub arity: usize,
    pub sorts: Vec<Sort>,
    pub idb: bool,
}

/// Arity and per-position sort of every predicate a program mentions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub preds: BTreeMap<String, PredSchema>,
}

/// Every head variable and every variable of a negated literal or `<=`
/// constraint must occur in a positive body atom.
pub fn check_safety(p: &Program) -> Result<(), DatalogError> {
    for (i, r) in p.rules.iter().enumerate() {
        let bound: BTreeSet<&str> = r
            .body
            .iter()
            .filter_map(|l| match l {
                Literal::Pos(a) => Some(a),
                _ => None,
            })
            .flat_map(|a| a.args.iter().filter_map(Term::variable))
            .collect();
        let needed = r.head.args.iter().filter_map(Term::variable).chain(r.body.iter().flat_map(|l| {
            let vars: Vec<&str> = match l {
                Literal::Pos(_) => vec![],
                Literal::Neg(a) => a.args.iter().filter_map(Term::variable).collect(),
                Literal::Le(v, _) => vec![v.as_str()],
            };
            vars
        }));
        for v in needed {
            if !bound.contains(v) {
                return Err(DatalogError::Unsafe { rule: i, var: v.to_string() });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Node<'a> {
    Pos(&'a str, usize),
    Var(usize, &'a str),
}

struct Unify<'a> {
    ids: HashMap<Node<'a>, usize>,
    parent: Vec<usize>,
    sort: Vec<Option<Sort>>,
    witness: Vec<Option<(String, usize)>>,
}

impl<'a> Unify<'a> {
    fn node(&mut self, n: Node<'a>) -> usize {
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        let i = self.parent.len();
        self.parent.push(i);
        self.sort.push(None);
        self.witness.push(match n {
            Node::Pos(p, k) => Some((p.to_string(), k)),
            Node::Var(..) => None,
        });
        self.ids.insert(n, i);
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn conflict(&self, a: usize, b: usize) -> DatalogError {
        let (pred, pos) = self.witness[a]
            .clone()
            .or_else(|| self.witness[b].clone())
            .unwrap_or_else(|| ("?".into(), 0));
        DatalogError::SortConflict { pred, pos }
    }

    fn mark(&mut self, i: usize, s: Sort) -> Result<(), DatalogError> {
        let r = self.find(i);
        match self.sort[r] {
            Some(t) if t != s => Err(self.conflict(r, i)),
            _ => {
                self.sort[r] = Some(s);
                Ok(())
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> Result<(), DatalogError> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let merged = match (self.sort[ra], self.sort[rb]) {
            (Some(x), Some(y)) if x != y => return Err(self.conflict(ra, rb)),
            (x, y) => x.or(y),
        };
        self.parent[rb] = ra;
        self.sort[ra] = merged;
        if self.witness[ra].is_none() {
            self.witness[ra] = self.witness[rb].clone();
        }
        Ok(())
    }
}

/// Checks arities and infers sorts. `edb` gives the arity and known column
/// sorts of input relations; unconstrained positions default to symbols.
pub fn analyze(p: &Program, edb: &BTreeMap<String, (usize, Vec<Option<Sort>>)>) -> Result<Schema, DatalogError> {
    let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
    let idb = p.idb_predicates();
    for r in &p.rules {
        for a in std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)) {
            let expected = *arity.entry(&a.pred).or_insert(a.arity());
            if expected != a.arity() {
                return Err(DatalogError::ArityMismatch { pred: a.pred.clone(), expected, found: a.arity() });
            }
        }
        if let Some(t) = r.head.args.iter().find(|t| matches!(t, Term::Minus(..))) {
            return Err(DatalogError::MalformedCounter(format!("`{t}` in the head of `{}`", r.head)));
        }
    }
    for (pred, &(n, _)) in edb {
        if let Some(&a) = arity.get(pred.as_str()) {
            if a != n {
                return Err(DatalogError::ArityMismatch { pred: pred.clone(), expected: a, found: n });
            }
        }
    }

    let mut u = Unify { ids: HashMap::new(), parent: vec![], sort: vec![], witness: vec![] };
    for (i, r) in p.rules.iter().enumerate() {
        for a in std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)) {
            for (k, t) in a.args.iter().enumerate() {
                let pos = u.node(Node::Pos(&a.pred, k));
                match t {
                    Term::Var(v) => {
                        let var = u.node(Node::Var(i, v));
                        u.union(pos, var)?;
                    }
                    Term::Minus(v, _) => {
                        let var = u.node(Node::Var(i, v));
                        u.union(pos, var)?;
                        u.mark(pos, Sort::Num)?;
                    }
                    Term::Int(_) => u.mark(pos, Sort::Num)?,
                    Term::Const(_) => u.mark(pos, Sort::Sym)?,
                }
            }
        }
        for l in &r.body {
            if let Literal::Le(v, _) = l {
                let var = u.node(Node::Var(i, v));
                u.mark(var, Sort::Num).map_err(|_| {
                    DatalogError::MalformedCounter(format!("`{v}` is compared with `<=` but holds a symbol"))
                })?;
            }
        }
    }
    for (pred, (_, sorts)) in edb {
        if !arity.contains_key(pred.as_str()) {
            continue;
        }
        for (k, s) in sorts.iter().enumerate() {
            if let Some(s) = s {
                let pos = u.node(Node::Pos(pred, k));
                u.mark(pos, *s)?;
            }
        }
    }

    let mut preds = BTreeMap::new();
    for (&pred, &n) in &arity {
        let sorts = (0..n)
            .map(|k| {
                let i = u.node(Node::Pos(pred, k));
                let r = u.find(i);
                u.sort[r].unwrap_or(Sort::Sym)
            })
            .collect();
        preds.insert(pred.to_string(), PredSchema { arity: n, sorts, idb: idb.contains(pred) });
    }
    Ok(Schema { preds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_program;

    fn schema(text: &str) -> Result<Schema, DatalogError> {
        analyze(&parse_program(text).unwrap(), &BTreeMap::new())
    }

    #[test]
    fn safety() {
        assert!(matches!(
            parse_program("G(X) :- P(X).\nH(X,Y) :- P(X)."),
            Err(DatalogError::Unsafe { rule: 1, .. })
        ));
        assert!(matches!(parse_program("G(X) :- P(X), N <= 3."), Err(DatalogError::Unsafe { .. })));
        parse_program("C(X,N) :- C(X,N-1), P(X), N <= cmax.").unwrap();
        parse_program("A :- !B.").unwrap();
    }

    #[test]
    fn sorts_flow_through_variables() {
        let s = schema("C(X,N) :- S0(X,Y), C(Y,N-1), N <= cmax.\nC(X,1) :- P(X).\nG(X) :- C(X,3).").unwrap();
        assert_eq!(s.preds["C"].sorts, vec![Sort::Sym, Sort::Num]);
        assert_eq!(s.preds["S0"].sorts, vec![Sort::Sym, Sort::Sym]);
        assert!(s.preds["C"].idb && !s.preds["S0"].idb);
    }

    #[test]
    fn conflicts() {
        assert!(matches!(schema("G(X) :- P(X), C(a,X), C(X-1,Y)."), Err(DatalogError::SortConflict { .. })));
        assert!(matches!(schema("G(X) :- P(X,a), P(X,2)."), Err(DatalogError::SortConflict { .. })));
        assert!(matches!(schema("G(X) :- P(X).\nG(X,Y) :- P(X), P(Y)."), Err(DatalogError::ArityMismatch { .. })));
        assert!(matches!(
            analyze(&parse_program("G(X) :- P(X).").unwrap(), &BTreeMap::from([("P".to_string(), (2, vec![None, None]))])),
            Err(DatalogError::ArityMismatch { .. })
        ));
        assert!(matches!(schema("G(X) :- P(X), P(a), X <= 3."), Err(DatalogError::MalformedCounter(_))));
        assert!(matches!(schema("G(X) :- P(X), C(X,N), C(X,N-1)."), Ok(_)));
    }
}
