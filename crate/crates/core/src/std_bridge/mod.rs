//! The STD fragment of stratified Datalog: operator trees, the translations
//! to and from CTL, flattening to rules, and recognition of flattened rules.

mod recognize;

use std::fmt;

use thiserror::Error;

use crate::ctl::{AtomTable, Formula};
use crate::datalog::{Atom, Literal, Program, Rule, Term};

pub use recognize::recognize_std;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StdError {
    #[error("{kind} takes {expected} operand(s), got {found}")]
    Arity { kind: &'static str, expected: usize, found: usize },
    #[error("atom p{atom} is outside the {n} declared unary predicates")]
    AtomOutOfRange { atom: usize, n: usize },
    #[error("operands declare {found} unary predicates, expected {expected}")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("formula is not in existential normal form: {0}")]
    NotEnf(String),
    #[error("not in STD: {0}")]
    NotStd(String),
}

/// A node of an STD operator tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StdNode {
    /// `G(x) <- P_i(x)`
    Atom(usize),
    /// `G(x) <- W(x)` plus the domain rules.
    Top,
    Not(Box<StdNode>),
    And(Box<StdNode>, Box<StdNode>),
    Next(Box<StdNode>),
    Until(Box<StdNode>, Box<StdNode>),
    UntilTilde(Box<StdNode>, Box<StdNode>),
}

/// Operator kinds accepted by [`build_std`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StdKind {
    Atom(usize),
    Top,
    Not,
    And,
    Next,
    Until,
    UntilTilde,
}

impl StdKind {
    fn name(self) -> &'static str {
        match self {
            StdKind::Atom(_) => "atom",
            StdKind::Top => "top",
            StdKind::Not => "not",
            StdKind::And => "and",
            StdKind::Next => "next",
            StdKind::Until => "until",
            StdKind::UntilTilde => "until-tilde",
        }
    }

    fn operands(self) -> usize {
        match self {
            StdKind::Atom(_) | StdKind::Top => 0,
            StdKind::Not | StdKind::Next => 1,
            StdKind::And | StdKind::Until | StdKind::UntilTilde => 2,
        }
    }
}

impl StdNode {
    pub fn children(&self) -> Vec<&StdNode> {
        match self {
            StdNode::Atom(_) | StdNode::Top => vec![],
            StdNode::Not(a) | StdNode::Next(a) => vec![a],
            StdNode::And(a, b) | StdNode::Until(a, b) | StdNode::UntilTilde(a, b) => vec![a, b],
        }
    }

    /// Number of operator nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(StdNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(StdNode::depth).max().unwrap_or(0)
    }

    fn max_atom(&self) -> Option<usize> {
        match self {
            StdNode::Atom(i) => Some(*i),
            _ => self.children().into_iter().filter_map(StdNode::max_atom).max(),
        }
    }

    fn any(&self, pred: &impl Fn(&StdNode) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }
}

/// An operator tree over the unary predicates `P0 .. P{atom_count-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StdProgram {
    pub root: StdNode,
    pub atom_count: usize,
}

impl StdProgram {
    pub fn new(root: StdNode, atom_count: usize) -> Result<StdProgram, StdError> {
        if let Some(a) = root.max_atom().filter(|&a| a >= atom_count) {
            return Err(StdError::AtomOutOfRange { atom: a, n: atom_count });
        }
        Ok(StdProgram { root, atom_count })
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Applies one operator to already built programs.
pub fn build_std(kind: StdKind, children: Vec<StdProgram>, n: usize) -> Result<StdProgram, StdError> {
    if children.len() != kind.operands() {
        return Err(StdError::Arity { kind: kind.name(), expected: kind.operands(), found: children.len() });
    }
    if let Some(c) = children.iter().find(|c| c.atom_count != n) {
        return Err(StdError::AtomCountMismatch { expected: n, found: c.atom_count });
    }
    let mut it = children.into_iter().map(|c| Box::new(c.root));
    let mut next = || it.next().expect("operand count checked");
    let root = match kind {
        StdKind::Atom(i) => StdNode::Atom(i),
        StdKind::Top => StdNode::Top,
        StdKind::Not => StdNode::Not(next()),
        StdKind::Next => StdNode::Next(next()),
        StdKind::And => StdNode::And(next(), next()),
        StdKind::Until => StdNode::Until(next(), next()),
        StdKind::UntilTilde => StdNode::UntilTilde(next(), next()),
    };
    StdProgram::new(root, n)
}

/// Translates a formula in existential normal form.
pub fn ctl_to_std(f: &Formula, n: usize) -> Result<StdProgram, StdError> {
    fn go(f: &Formula) -> Result<StdNode, StdError> {
        let b = |g: &Formula| go(g).map(Box::new);
        Ok(match f {
            Formula::True => StdNode::Top,
            Formula::Atom(i) => StdNode::Atom(*i),
            Formula::Not(g) => StdNode::Not(b(g)?),
            Formula::And(l, r) => StdNode::And(b(l)?, b(r)?),
            Formula::ExistsNext(g) => StdNode::Next(b(g)?),
            Formula::ExistsUntil(l, r) => StdNode::Until(b(l)?, b(r)?),
            Formula::ExistsUntilTilde(l, r) => StdNode::UntilTilde(b(l)?, b(r)?),
            Formula::False => return Err(StdError::NotEnf("`false` must be written as `!true`".into())),
            Formula::Or(..) => return Err(StdError::NotEnf("disjunction".into())),
            _ => return Err(StdError::NotEnf("universal path quantifier".into())),
        })
    }
    StdProgram::new(go(f)?, n)
}

/// The formula an operator tree expresses.
pub fn std_to_ctl(p: &StdProgram) -> Formula {
    fn go(n: &StdNode) -> Formula {
        match n {
            StdNode::Atom(i) => Formula::Atom(*i),
            StdNode::Top => Formula::True,
            StdNode::Not(a) => Formula::not(go(a)),
            StdNode::And(a, b) => Formula::and(go(a), go(b)),
            StdNode::Next(a) => Formula::ex(go(a)),
            StdNode::Until(a, b) => Formula::eu(go(a), go(b)),
            StdNode::UntilTilde(a, b) => Formula::eut(go(a), go(b)),
        }
    }
    go(&p.root)
}

fn var(v: &str) -> Term {
    Term::var(v)
}

fn pos(pred: &str, vars: &[&str]) -> Literal {
    Literal::Pos(Atom::vars(pred, vars))
}

fn neg(pred: &str, vars: &[&str]) -> Literal {
    Literal::Neg(Atom::vars(pred, vars))
}

fn unary_rule(head: &str, body: Vec<Literal>) -> Rule {
    Rule::new(Atom::new(head, vec![var("X")]), body)
}

/// The domain rules: `W` holds at every constant of `R` and `P0 ..`.
pub(crate) fn domain_rules(binary: &[&str], n: usize) -> Vec<Rule> {
    let mut rules = Vec::new();
    for r in binary {
        rules.push(unary_rule("W", vec![pos(r, &["X", "Y"])]));
        rules.push(unary_rule("W", vec![pos(r, &["Y", "X"])]));
    }
    for i in 0..n {
        rules.push(unary_rule("W", vec![pos(&format!("P{i}"), &["X"])]));
    }
    rules
}

/// Goal and `B` names: the root is `G` (and its `B` is `B`); every other
/// node gets `G1, G2, ..` and every other until-tilde node `B1, B2, ..`,
/// both in post-order.
struct Names {
    goal: Vec<String>,
    b: Vec<Option<String>>,
}

fn name_nodes(root: &StdNode) -> Names {
    fn walk<'a>(n: &'a StdNode, order: &mut Vec<&'a StdNode>) {
        for c in n.children() {
            walk(c, order);
        }
        order.push(n);
    }
    let mut order = Vec::new();
    walk(root, &mut order);
    let last = order.len() - 1;
    let mut b_count = 0;
    let mut names = Names { goal: Vec::new(), b: Vec::new() };
    for (i, n) in order.iter().enumerate() {
        names.goal.push(if i == last { "G".to_string() } else { format!("G{}", i + 1) });
        names.b.push(match n {
            StdNode::UntilTilde(..) if i == last => Some("B".to_string()),
            StdNode::UntilTilde(..) => {
                b_count += 1;
                Some(format!("B{b_count}"))
            }
            _ => None,
        });
    }
    names
}

/// Flattens an operator tree into rules.
///
/// Rules of each node are emitted root first (pre-order), followed by the
/// shared `A` rule and the shared domain rules when some node needs them.
pub fn flatten(p: &StdProgram) -> Program {
    let names = name_nodes(&p.root);
    let mut rules = Vec::new();
    // Post-order index of each node, recovered while walking pre-order.
    fn emit(n: &StdNode, next_id: &mut usize, names: &Names, rules: &mut Vec<Rule>) -> usize {
        let mut child_ids = Vec::new();
        let at = rules.len();
        for c in n.children() {
            child_ids.push(emit(c, next_id, names, rules));
        }
        let id = *next_id;
        *next_id += 1;
        let g = names.goal[id].as_str();
        let c = |k: usize| names.goal[child_ids[k]].as_str();
        let own: Vec<Rule> = match n {
            StdNode::Atom(i) => vec![unary_rule(g, vec![pos(&format!("P{i}"), &["X"])])],
            StdNode::Top => vec![unary_rule(g, vec![pos("W", &["X"])])],
            StdNode::Not(_) => vec![unary_rule(g, vec![pos("W", &["X"]), neg(c(0), &["X"])])],
            StdNode::And(..) => vec![unary_rule(g, vec![pos(c(0), &["X"]), pos(c(1), &["X"])])],
            StdNode::Next(_) => vec![
                unary_rule(g, vec![pos(c(0), &["X"]), neg("A", &["X"])]),
                unary_rule(g, vec![pos("R", &["X", "Y"]), pos(c(0), &["Y"])]),
            ],
            StdNode::Until(..) => vec![
                unary_rule(g, vec![pos(c(1), &["X"])]),
                unary_rule(g, vec![pos(c(0), &["X"]), pos("R", &["X", "Y"]), pos(g, &["Y"])]),
            ],
            StdNode::UntilTilde(..) => {
                let b = names.b[id].as_deref().expect("until-tilde nodes are named");
                let (g1, g2) = (c(0), c(1));
                vec![
                    unary_rule(g, vec![pos(g1, &["X"]), pos(g2, &["X"])]),
                    unary_rule(g, vec![pos(g2, &["X"]), neg("A", &["X"])]),
                    unary_rule(g, vec![pos(b, &["X", "X"])]),
                    unary_rule(g, vec![pos(g2, &["X"]), pos("R", &["X", "Y"]), pos(g, &["Y"])]),
                    Rule::new(
                        Atom::vars(b, &["X", "Y"]),
                        vec![pos(g2, &["X"]), pos("R", &["X", "Y"]), pos(g2, &["Y"])],
                    ),
                    Rule::new(
                        Atom::vars(b, &["X", "Y"]),
                        vec![pos(g2, &["X"]), pos("R", &["X", "U"]), pos(b, &["U", "Y"])],
                    ),
                ]
            }
        };
        rules.splice(at..at, own);
        id
    }
    emit(&p.root, &mut 0, &names, &mut rules);
    if p.root.any(&|n| matches!(n, StdNode::Next(_) | StdNode::UntilTilde(..))) {
        rules.push(unary_rule("A", vec![pos("R", &["X", "Y"])]));
    }
    if p.root.any(&|n| matches!(n, StdNode::Top | StdNode::Not(_))) {
        rules.extend(domain_rules(&["R"], p.atom_count));
    }
    Program::new(rules, "G")
}

/// S-expression form, e.g. `(not (atom p))`. Atoms print as `p0 ..` unless
/// a table is given.
pub fn render_sexpr(p: &StdProgram, atoms: Option<&AtomTable>) -> String {
    struct S<'a>(&'a StdNode, Option<&'a AtomTable>);
    impl fmt::Display for S<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let kids = |f: &mut fmt::Formatter<'_>, name: &str, c: Vec<&StdNode>| {
                write!(f, "({name}")?;
                for c in c {
                    write!(f, " {}", S(c, self.1))?;
                }
                f.write_str(")")
            };
            match self.0 {
                StdNode::Atom(i) => match self.1.and_then(|t| t.name(*i)) {
                    Some(name) => write!(f, "(atom {name})"),
                    None => write!(f, "(atom p{i})"),
                },
                StdNode::Top => f.write_str("(top)"),
                StdNode::Not(a) => kids(f, "not", vec![a]),
                StdNode::And(a, b) => kids(f, "and", vec![a, b]),
                StdNode::Next(a) => kids(f, "next", vec![a]),
                StdNode::Until(a, b) => kids(f, "until", vec![a, b]),
                StdNode::UntilTilde(a, b) => kids(f, "until-tilde", vec![a, b]),
            }
        }
    }
    S(&p.root, atoms).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::{parse_formula, to_enf};
    use crate::datalog::render_program;

    fn atom(i: usize, n: usize) -> StdProgram {
        build_std(StdKind::Atom(i), vec![], n).unwrap()
    }

    fn rules(p: &StdProgram) -> Vec<String> {
        flatten(p).rules.iter().map(|r| r.to_string()).collect()
    }

    #[test]
    fn operator_examples() {
        let not = build_std(StdKind::Not, vec![atom(0, 1)], 1).unwrap();
        assert_eq!(
            rules(&not),
            [
                "G(X) :- W(X), !G1(X).",
                "G1(X) :- P0(X).",
                "W(X) :- R(X,Y).",
                "W(X) :- R(Y,X).",
                "W(X) :- P0(X).",
            ]
        );
        let next = build_std(StdKind::Next, vec![atom(0, 1)], 1).unwrap();
        assert_eq!(
            rules(&next),
            ["G(X) :- G1(X), !A(X).", "G(X) :- R(X,Y), G1(Y).", "G1(X) :- P0(X).", "A(X) :- R(X,Y)."]
        );
        let and = build_std(StdKind::And, vec![atom(0, 2), atom(1, 2)], 2).unwrap();
        assert_eq!(rules(&and), ["G(X) :- G1(X), G2(X).", "G1(X) :- P0(X).", "G2(X) :- P1(X)."]);
        assert_eq!(rules(&atom(0, 1)), ["G(X) :- P0(X)."]);
    }

    #[test]
    fn build_errors() {
        assert!(matches!(build_std(StdKind::Not, vec![], 1), Err(StdError::Arity { .. })));
        assert!(matches!(build_std(StdKind::Atom(2), vec![], 2), Err(StdError::AtomOutOfRange { .. })));
        assert!(matches!(
            build_std(StdKind::And, vec![atom(0, 1), atom(0, 2)], 1),
            Err(StdError::AtomCountMismatch { .. })
        ));
    }

    #[test]
    fn example_three_shape() {
        let (f, _) = parse_formula("E[ false ~U p ]").unwrap();
        let p = ctl_to_std(&to_enf(&f), 1).unwrap();
        assert_eq!(render_sexpr(&p, None), "(until-tilde (not (top)) (atom p0))");
        let text = render_program(&flatten(&p));
        let expected = "% goal: G\n\
            G(X) :- G2(X), G3(X).\nG(X) :- G3(X), !A(X).\nG(X) :- B(X,X).\nG(X) :- G3(X), R(X,Y), G(Y).\n\
            B(X,Y) :- G3(X), R(X,Y), G3(Y).\nB(X,Y) :- G3(X), R(X,U), B(U,Y).\n\
            G2(X) :- W(X), !G1(X).\nG1(X) :- W(X).\nG3(X) :- P0(X).\nA(X) :- R(X,Y).\n\
            W(X) :- R(X,Y).\nW(X) :- R(Y,X).\nW(X) :- P0(X).\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn nested_until_tilde_names() {
        let (f, t) = parse_formula("E[ E[ p ~U q ] ~U !r ]").unwrap();
        let p = ctl_to_std(&f, t.len()).unwrap();
        let prog = flatten(&p);
        let heads: Vec<&str> = prog.rules.iter().map(|r| r.head.pred.as_str()).collect();
        assert!(heads.contains(&"B") && heads.contains(&"B1"));
        assert_eq!(prog.rules.len(), 6 + 6 + 1 + 3 + 1 + 5);
    }

    #[test]
    fn translation_round_trip_and_errors() {
        let (f, t) = parse_formula("!E[ !p ~U !q ] & EX E[ p U true ]").unwrap();
        let p = ctl_to_std(&f, t.len()).unwrap();
        assert_eq!(std_to_ctl(&p), f);
        assert_eq!(p.size(), f.size());
        let (g, _) = parse_formula("A[ p U q ]").unwrap();
        assert!(matches!(ctl_to_std(&g, 2), Err(StdError::NotEnf(_))));
        assert!(matches!(ctl_to_std(&Formula::False, 0), Err(StdError::NotEnf(_))));
        assert!(matches!(ctl_to_std(&Formula::atom(3), 2), Err(StdError::AtomOutOfRange { .. })));
    }
}
