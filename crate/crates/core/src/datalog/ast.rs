use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A rule argument.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Uppercase identifier.
    Var(String),
    /// Lowercase identifier.
    Const(String),
    /// Counter literal.
    Int(u32),
    /// `N-k`: the counter value `k` below variable `N`.
    Minus(String, u32),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    /// The variable this term mentions, if any.
    pub fn variable(&self) -> Option<&str> {
        match self {
            Term::Var(v) | Term::Minus(v, _) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: pred.to_string(), args }
    }

    /// An atom whose arguments are all variables.
    pub fn vars(pred: &str, vars: &[&str]) -> Atom {
        Atom::new(pred, vars.iter().map(|v| Term::var(v)).collect())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

/// Upper bound of a counter constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    /// The evaluation's `c_max`.
    CMax,
    Int(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    /// `N <= bound`.
    Le(String, Bound),
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Le(..) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Rule {
        Rule { head, body }
    }

    pub fn fact(head: Atom) -> Rule {
        Rule { head, body: vec![] }
    }

    /// Whether the rule uses `N-k` terms or `<=` constraints.
    pub fn uses_counters(&self) -> bool {
        let minus = |a: &Atom| a.args.iter().any(|t| matches!(t, Term::Minus(..)));
        minus(&self.head)
            || self.body.iter().any(|l| match l {
                Literal::Le(..) => true,
                Literal::Pos(a) | Literal::Neg(a) => minus(a),
            })
    }
}

/// A set of rules with a distinguished goal predicate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub goal: String,
}

impl Program {
    pub fn new(rules: Vec<Rule>, goal: &str) -> Program {
        Program { rules, goal: goal.to_string() }
    }

    /// Predicates that head some rule.
    pub fn idb_predicates(&self) -> BTreeSet<&str> {
        self.rules.iter().map(|r| r.head.pred.as_str()).collect()
    }

    /// Predicates used in bodies that head no rule.
    pub fn edb_predicates(&self) -> BTreeSet<&str> {
        let idb = self.idb_predicates();
        self.rules
            .iter()
            .flat_map(|r| r.body.iter().filter_map(Literal::atom))
            .map(|a| a.pred.as_str())
            .filter(|p| !idb.contains(p))
            .collect()
    }

    /// Every predicate with the arity of its first occurrence.
    pub fn predicates(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for r in &self.rules {
            for a in std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)) {
                m.entry(a.pred.as_str()).or_insert(a.arity());
            }
        }
        m
    }

    pub fn uses_counters(&self) -> bool {
        self.rules.iter().any(Rule::uses_counters)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::Int(n) => write!(f, "{n}"),
            Term::Minus(v, k) => write!(f, "{v}-{k}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "!{a}"),
            Literal::Le(v, Bound::CMax) => write!(f, "{v} <= cmax"),
            Literal::Le(v, Bound::Int(n)) => write!(f, "{v} <= {n}"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            write!(f, "{l}")?;
        }
        f.write_str(".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "% goal: {}", self.goal)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Renders a program in the syntax accepted by [`super::parse_program`].
pub fn render_program(p: &Program) -> String {
    p.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display() {
        let r = Rule::new(
            Atom::new("C", vec![Term::var("X"), Term::var("N")]),
            vec![
                Literal::Pos(Atom::vars("S0", &["X", "Y"])),
                Literal::Neg(Atom::vars("2S", &["X"])),
                Literal::Pos(Atom::new("C", vec![Term::var("Y"), Term::Minus("N".into(), 1)])),
                Literal::Le("N".into(), Bound::Int(3)),
            ],
        );
        assert_eq!(r.to_string(), "C(X,N) :- S0(X,Y), !2S(X), C(Y,N-1), N <= 3.");
        assert!(r.uses_counters());
        assert_eq!(Rule::fact(Atom::new("A", vec![])).to_string(), "A.");
    }

    #[test]
    fn idb_edb_partition() {
        let p = Program::new(
            vec![
                Rule::new(Atom::vars("G", &["X"]), vec![Literal::Pos(Atom::vars("P", &["X"]))]),
                Rule::new(Atom::vars("H", &["X"]), vec![Literal::Neg(Atom::vars("G", &["X"])), Literal::Pos(Atom::vars("Q", &["X"]))]),
            ],
            "H",
        );
        assert_eq!(p.idb_predicates(), BTreeSet::from(["G", "H"]));
        assert_eq!(p.edb_predicates(), BTreeSet::from(["P", "Q"]));
    }
}
