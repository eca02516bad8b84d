//! The TDS fragment of Datalog with successor: operator trees over positive
//! normal form, flattening to rules over `S0`/`S1`, and evaluation of CTL
//! through that route.

use std::fmt;

use thiserror::Error;

use crate::ctl::{to_pnf, AtomTable, Formula, StateSet};
use crate::datalog::{run, Atom, Database, Bound, DatalogError, EvalOptions, Literal, Program, Rule, Term};
use crate::kripke::{split_outdegree2, ChildOrder, KripkeError, KripkeStructure, StateId};
use crate::std_bridge::domain_rules;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TdsError {
    #[error("{kind} takes {expected} operand(s), got {found}")]
    Arity { kind: &'static str, expected: usize, found: usize },
    #[error("atom p{atom} is outside the {n} declared unary predicates")]
    AtomOutOfRange { atom: usize, n: usize },
    #[error("operands declare {found} unary predicates, expected {expected}")]
    AtomCountMismatch { expected: usize, found: usize },
    #[error("formula is not in positive normal form: {0}")]
    NotPnf(String),
    #[error("c_max must be at least 1")]
    ZeroCMax,
    #[error("the first-child encoding only supports {0}")]
    Unsupported(String),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
}

/// A node of a TDS operator tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TdsNode {
    Atom(usize),
    /// `G(x) <- !P_i(x)`
    NegAtom(usize),
    Top,
    And(Box<TdsNode>, Box<TdsNode>),
    Or(Box<TdsNode>, Box<TdsNode>),
    ExNext(Box<TdsNode>),
    AllNext(Box<TdsNode>),
    ExUntil(Box<TdsNode>, Box<TdsNode>),
    AllUntil(Box<TdsNode>, Box<TdsNode>),
    ExUntilTilde(Box<TdsNode>, Box<TdsNode>),
    AllUntilTilde(Box<TdsNode>, Box<TdsNode>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdsKind {
    Atom(usize),
    NegAtom(usize),
    Top,
    And,
    Or,
    ExNext,
    AllNext,
    ExUntil,
    AllUntil,
    ExUntilTilde,
    AllUntilTilde,
}

impl TdsKind {
    fn name(self) -> &'static str {
        match self {
            TdsKind::Atom(_) => "atom",
            TdsKind::NegAtom(_) => "neg-atom",
            TdsKind::Top => "top",
            TdsKind::And => "and",
            TdsKind::Or => "or",
            TdsKind::ExNext => "ex-next",
            TdsKind::AllNext => "all-next",
            TdsKind::ExUntil => "ex-until",
            TdsKind::AllUntil => "all-until",
            TdsKind::ExUntilTilde => "ex-until-tilde",
            TdsKind::AllUntilTilde => "all-until-tilde",
        }
    }

    fn operands(self) -> usize {
        match self {
            TdsKind::Atom(_) | TdsKind::NegAtom(_) | TdsKind::Top => 0,
            TdsKind::ExNext | TdsKind::AllNext => 1,
            _ => 2,
        }
    }
}

impl TdsNode {
    pub fn children(&self) -> Vec<&TdsNode> {
        match self {
            TdsNode::Atom(_) | TdsNode::NegAtom(_) | TdsNode::Top => vec![],
            TdsNode::ExNext(a) | TdsNode::AllNext(a) => vec![a],
            TdsNode::And(a, b)
            | TdsNode::Or(a, b)
            | TdsNode::ExUntil(a, b)
            | TdsNode::AllUntil(a, b)
            | TdsNode::ExUntilTilde(a, b)
            | TdsNode::AllUntilTilde(a, b) => vec![a, b],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(TdsNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().into_iter().map(TdsNode::depth).max().unwrap_or(0)
    }

    fn max_atom(&self) -> Option<usize> {
        match self {
            TdsNode::Atom(i) | TdsNode::NegAtom(i) => Some(*i),
            _ => self.children().into_iter().filter_map(TdsNode::max_atom).max(),
        }
    }

    fn any(&self, pred: &impl Fn(&TdsNode) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TdsProgram {
    pub root: TdsNode,
    pub atom_count: usize,
}

impl TdsProgram {
    pub fn new(root: TdsNode, atom_count: usize) -> Result<TdsProgram, TdsError> {
        if let Some(a) = root.max_atom().filter(|&a| a >= atom_count) {
            return Err(TdsError::AtomOutOfRange { atom: a, n: atom_count });
        }
        Ok(TdsProgram { root, atom_count })
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Whether flattening needs counters.
    pub fn uses_counters(&self) -> bool {
        self.root.any(&|n| matches!(n, TdsNode::AllUntilTilde(..)))
    }
}

pub fn build_tds(kind: TdsKind, children: Vec<TdsProgram>, n: usize) -> Result<TdsProgram, TdsError> {
    if children.len() != kind.operands() {
        return Err(TdsError::Arity { kind: kind.name(), expected: kind.operands(), found: children.len() });
    }
    if let Some(c) = children.iter().find(|c| c.atom_count != n) {
        return Err(TdsError::AtomCountMismatch { expected: n, found: c.atom_count });
    }
    let mut it = children.into_iter().map(|c| Box::new(c.root));
    let mut next = || it.next().expect("operand count checked");
    let root = match kind {
        TdsKind::Atom(i) => TdsNode::Atom(i),
        TdsKind::NegAtom(i) => TdsNode::NegAtom(i),
        TdsKind::Top => TdsNode::Top,
        TdsKind::And => TdsNode::And(next(), next()),
        TdsKind::Or => TdsNode::Or(next(), next()),
        TdsKind::ExNext => TdsNode::ExNext(next()),
        TdsKind::AllNext => TdsNode::AllNext(next()),
        TdsKind::ExUntil => TdsNode::ExUntil(next(), next()),
        TdsKind::AllUntil => TdsNode::AllUntil(next(), next()),
        TdsKind::ExUntilTilde => TdsNode::ExUntilTilde(next(), next()),
        TdsKind::AllUntilTilde => TdsNode::AllUntilTilde(next(), next()),
    };
    TdsProgram::new(root, n)
}

/// Translates a formula in positive normal form.
///
/// The operator set has no leaf for `false`; `false` and `!true` become
/// `p0 & !p0`, so they need `n >= 1`.
pub fn ctl_to_tds(f: &Formula, n: usize) -> Result<TdsProgram, TdsError> {
    fn bottom() -> TdsNode {
        TdsNode::And(Box::new(TdsNode::Atom(0)), Box::new(TdsNode::NegAtom(0)))
    }
    fn go(f: &Formula) -> Result<TdsNode, TdsError> {
        let b = |g: &Formula| go(g).map(Box::new);
        Ok(match f {
            Formula::True => TdsNode::Top,
            Formula::False => bottom(),
            Formula::Atom(i) => TdsNode::Atom(*i),
            Formula::Not(g) => match &**g {
                Formula::Atom(i) => TdsNode::NegAtom(*i),
                Formula::True => bottom(),
                _ => return Err(TdsError::NotPnf("negation above a compound formula".into())),
            },
            Formula::And(l, r) => TdsNode::And(b(l)?, b(r)?),
            Formula::Or(l, r) => TdsNode::Or(b(l)?, b(r)?),
            Formula::ExistsNext(g) => TdsNode::ExNext(b(g)?),
            Formula::ForallNext(g) => TdsNode::AllNext(b(g)?),
            Formula::ExistsUntil(l, r) => TdsNode::ExUntil(b(l)?, b(r)?),
            Formula::ForallUntil(l, r) => TdsNode::AllUntil(b(l)?, b(r)?),
            Formula::ExistsUntilTilde(l, r) => TdsNode::ExUntilTilde(b(l)?, b(r)?),
            Formula::ForallUntilTilde(l, r) => TdsNode::AllUntilTilde(b(l)?, b(r)?),
        })
    }
    TdsProgram::new(go(f)?, n)
}

/// The formula an operator tree expresses.
pub fn tds_to_ctl(p: &TdsProgram) -> Formula {
    fn go(n: &TdsNode) -> Formula {
        let c = |x: &TdsNode| go(x);
        match n {
            TdsNode::Atom(i) => Formula::Atom(*i),
            TdsNode::NegAtom(i) => Formula::not(Formula::Atom(*i)),
            TdsNode::Top => Formula::True,
            TdsNode::And(a, b) => Formula::and(c(a), c(b)),
            TdsNode::Or(a, b) => Formula::or(c(a), c(b)),
            TdsNode::ExNext(a) => Formula::ex(c(a)),
            TdsNode::AllNext(a) => Formula::ax(c(a)),
            TdsNode::ExUntil(a, b) => Formula::eu(c(a), c(b)),
            TdsNode::AllUntil(a, b) => Formula::au(c(a), c(b)),
            TdsNode::ExUntilTilde(a, b) => Formula::eut(c(a), c(b)),
            TdsNode::AllUntilTilde(a, b) => Formula::aut(c(a), c(b)),
        }
    }
    go(&p.root)
}

fn x() -> Term {
    Term::var("X")
}

fn pos(pred: &str, vars: &[&str]) -> Literal {
    Literal::Pos(Atom::vars(pred, vars))
}

fn neg(pred: &str, vars: &[&str]) -> Literal {
    Literal::Neg(Atom::vars(pred, vars))
}

fn unary(head: &str, body: Vec<Literal>) -> Rule {
    Rule::new(Atom::new(head, vec![x()]), body)
}

fn counter(pred: &str, node: &str, n: Term) -> Atom {
    Atom::new(pred, vec![Term::var(node), n])
}

const TWO_S: &str = "2S";

fn two_s_rule() -> Rule {
    unary(TWO_S, vec![pos("S0", &["X", "Y"]), pos("S1", &["X", "Z"])])
}

/// Fresh names in post-order: the root is `G`, others `G1, G2, ..`; each
/// `B` and `C` helper is named after its node the same way (`B`/`C` at the
/// root, `B1`/`C1`, .. elsewhere).
fn name_nodes<'a>(root: &'a TdsNode) -> Vec<(&'a TdsNode, String, Option<String>)> {
    fn walk<'a>(n: &'a TdsNode, order: &mut Vec<&'a TdsNode>) {
        for c in n.children() {
            walk(c, order);
        }
        order.push(n);
    }
    let mut order = Vec::new();
    walk(root, &mut order);
    let last = order.len() - 1;
    let (mut b, mut c) = (0, 0);
    order
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let helper = |prefix: &str, count: &mut usize| {
                if i == last {
                    prefix.to_string()
                } else {
                    *count += 1;
                    format!("{prefix}{count}")
                }
            };
            let extra = match n {
                TdsNode::ExUntilTilde(..) => Some(helper("B", &mut b)),
                TdsNode::AllUntilTilde(..) => Some(helper("C", &mut c)),
                _ => None,
            };
            let g = if i == last { "G".to_string() } else { format!("G{}", i + 1) };
            (n, g, extra)
        })
        .collect()
}

/// Emits rules root first, as the STD flattening does. `own` produces the
/// rules of one node from its goal name, its children's goal names, and its
/// helper name.
fn emit_tree(root: &TdsNode, own: &dyn Fn(&TdsNode, &str, &[&str], Option<&str>) -> Vec<Rule>) -> Vec<Rule> {
    let names = name_nodes(root);
    fn emit(
        n: &TdsNode,
        next_id: &mut usize,
        names: &[(&TdsNode, String, Option<String>)],
        own: &dyn Fn(&TdsNode, &str, &[&str], Option<&str>) -> Vec<Rule>,
        rules: &mut Vec<Rule>,
    ) -> usize {
        let at = rules.len();
        let kids: Vec<usize> = n.children().into_iter().map(|c| emit(c, next_id, names, own, rules)).collect();
        let id = *next_id;
        *next_id += 1;
        let kid_names: Vec<&str> = kids.iter().map(|&k| names[k].1.as_str()).collect();
        let mine = own(n, &names[id].1, &kid_names, names[id].2.as_deref());
        rules.splice(at..at, mine);
        id
    }
    let mut rules = Vec::new();
    emit(root, &mut 0, &names, own, &mut rules);
    rules
}

/// Flattens an operator tree into Datalog with successor. `c_max` is
/// written into the counter guards and the goal rule `G(x) <- C(x, c_max)`.
pub fn flatten_tds(p: &TdsProgram, c_max: u32) -> Result<Program, TdsError> {
    if c_max == 0 {
        return Err(TdsError::ZeroCMax);
    }
    let own = |n: &TdsNode, g: &str, c: &[&str], helper: Option<&str>| -> Vec<Rule> {
        let s = |i: usize, a: &str, b: &str| pos(&format!("S{i}"), &[a, b]);
        match n {
            TdsNode::Atom(i) => vec![unary(g, vec![pos(&format!("P{i}"), &["X"])])],
            TdsNode::NegAtom(i) => vec![unary(g, vec![pos("W", &["X"]), neg(&format!("P{i}"), &["X"])])],
            TdsNode::Top => vec![unary(g, vec![pos("W", &["X"])])],
            TdsNode::And(..) => vec![unary(g, vec![pos(c[0], &["X"]), pos(c[1], &["X"])])],
            TdsNode::Or(..) => vec![unary(g, vec![pos(c[0], &["X"])]), unary(g, vec![pos(c[1], &["X"])])],
            TdsNode::ExNext(_) => (0..2).map(|i| unary(g, vec![s(i, "X", "Y"), pos(c[0], &["Y"])])).collect(),
            TdsNode::AllNext(_) => vec![
                unary(g, vec![s(0, "X", "Y"), neg(TWO_S, &["X"]), pos(c[0], &["Y"])]),
                unary(g, vec![s(0, "X", "Y"), s(1, "X", "Z"), pos(c[0], &["Y"]), pos(c[0], &["Z"])]),
            ],
            TdsNode::ExUntil(..) => {
                let mut r = vec![unary(g, vec![pos(c[1], &["X"])])];
                r.extend((0..2).map(|i| unary(g, vec![pos(c[0], &["X"]), s(i, "X", "Y"), pos(g, &["Y"])])));
                r
            }
            TdsNode::AllUntil(..) => vec![
                unary(g, vec![pos(c[1], &["X"])]),
                unary(g, vec![pos(c[0], &["X"]), s(0, "X", "Y"), neg(TWO_S, &["X"]), pos(g, &["Y"])]),
                unary(
                    g,
                    vec![pos(c[0], &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), pos(g, &["Y"]), pos(g, &["Z"])],
                ),
            ],
            TdsNode::ExUntilTilde(..) => {
                let b = helper.expect("until-tilde nodes are named");
                let (g1, g2) = (c[0], c[1]);
                let mut r = vec![unary(g, vec![pos(g1, &["X"]), pos(g2, &["X"])]), unary(g, vec![pos(b, &["X", "X"])])];
                r.extend((0..2).map(|i| unary(g, vec![pos(g2, &["X"]), s(i, "X", "Y"), pos(g, &["Y"])])));
                let b_rule = |body| Rule::new(Atom::vars(b, &["X", "Y"]), body);
                r.extend((0..2).map(|i| b_rule(vec![pos(g2, &["X"]), s(i, "X", "Y"), pos(g2, &["Y"])])));
                r.extend((0..2).map(|i| b_rule(vec![pos(g2, &["X"]), s(i, "X", "U"), pos(b, &["U", "Y"])])));
                r
            }
            TdsNode::AllUntilTilde(..) => {
                let cp = helper.expect("until-tilde nodes are named");
                let (g1, g2) = (c[0], c[1]);
                let prev = |v: &str| Literal::Pos(counter(cp, v, Term::Minus("N".into(), 1)));
                let guard = Literal::Le("N".into(), Bound::Int(c_max));
                let c_head = |n: Term, body| Rule::new(counter(cp, "X", n), body);
                let n = || Term::var("N");
                vec![
                    unary(g, vec![pos(g1, &["X"]), pos(g2, &["X"])]),
                    Rule::new(Atom::new(g, vec![x()]), vec![Literal::Pos(counter(cp, "X", Term::Int(c_max)))]),
                    unary(g, vec![pos(g2, &["X"]), s(0, "X", "Y"), neg(TWO_S, &["X"]), pos(g, &["Y"])]),
                    unary(
                        g,
                        vec![pos(g2, &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), pos(g, &["Y"]), pos(g, &["Z"])],
                    ),
                    c_head(n(), vec![pos(g2, &["X"]), s(0, "X", "Y"), neg(TWO_S, &["X"]), prev("Y"), guard.clone()]),
                    c_head(
                        n(),
                        vec![pos(g2, &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), prev("Y"), prev("Z"), guard.clone()],
                    ),
                    c_head(
                        n(),
                        vec![pos(g2, &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), pos(g, &["Y"]), prev("Z"), guard.clone()],
                    ),
                    c_head(
                        n(),
                        vec![pos(g2, &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), prev("Y"), pos(g, &["Z"]), guard],
                    ),
                    c_head(Term::Int(1), vec![pos(g2, &["X"]), s(0, "X", "Y"), neg(TWO_S, &["X"]), pos(g2, &["Y"])]),
                    c_head(
                        Term::Int(1),
                        vec![pos(g2, &["X"]), s(0, "X", "Y"), s(1, "X", "Z"), pos(g2, &["Y"]), pos(g2, &["Z"])],
                    ),
                ]
            }
        }
    };
    let mut rules = emit_tree(&p.root, &own);
    let r = &p.root;
    if r.any(&|n| matches!(n, TdsNode::AllNext(_) | TdsNode::AllUntil(..) | TdsNode::AllUntilTilde(..))) {
        rules.push(two_s_rule());
    }
    if r.any(&|n| matches!(n, TdsNode::Top | TdsNode::NegAtom(_))) {
        rules.extend(domain_rules(&["S0", "S1"], p.atom_count));
    }
    Ok(Program::new(rules, "G"))
}

/// Atom count used when translating `f` on its own: at least one, so that
/// `false` has an encoding.
pub fn tds_atom_count(f: &Formula, k: &KripkeStructure) -> usize {
    f.atom_count().max(k.ap().len()).max(1)
}

/// Evaluates `f` on `k` by translating to TDS and running the rules on the
/// `S0`/`S1` encoding of `k` with `c_max = |W|`.
pub fn eval_tds(f: &Formula, k: &KripkeStructure, order: &ChildOrder) -> Result<StateSet, TdsError> {
    let c_max = u32::try_from(k.num_states()).map_err(|_| KripkeError::Invalid("too many states".into()))?;
    eval_tds_with_bound(f, k, order, c_max.max(1))
}

/// As [`eval_tds`] with an explicit counter bound. The result agrees with
/// model checking whenever `c_max` is at least the number of states
/// reachable from any single state, so a disjoint union of small structures
/// can be evaluated with the size of its largest part.
pub fn eval_tds_with_bound(
    f: &Formula,
    k: &KripkeStructure,
    order: &ChildOrder,
    c_max: u32,
) -> Result<StateSet, TdsError> {
    TdsEncoding::new(k, order, tds_atom_count(f, k))?.eval(f, c_max)
}

/// The `S0`/`S1` encoding of a structure, built once and shared by many
/// formulas over at most `atoms` atoms.
pub struct TdsEncoding {
    db: Database,
    atoms: usize,
    /// State id for each database symbol.
    state_of: Vec<StateId>,
    states: usize,
}

impl TdsEncoding {
    pub fn new(k: &KripkeStructure, order: &ChildOrder, atoms: usize) -> Result<TdsEncoding, TdsError> {
        let atoms = atoms.max(k.ap().len()).max(1);
        let db = split_outdegree2(k, order)?.with_unary_count(atoms).to_database();
        let symbols = db.symbols();
        let state_of = (0..symbols.len() as u32)
            .map(|id| {
                let name = symbols.name(id);
                k.state_id(name).ok_or_else(|| KripkeError::Invalid(format!("unknown state `{name}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(TdsEncoding { db, atoms, state_of, states: k.num_states() })
    }

    pub fn eval(&self, f: &Formula, c_max: u32) -> Result<StateSet, TdsError> {
        let p = ctl_to_tds(&to_pnf(f), self.atoms)?;
        let prog = flatten_tds(&p, c_max)?;
        let ev = run(&prog, &self.db, &EvalOptions { c_max: Some(c_max), stratification: None })?;
        let states = ev.goal_ids().into_iter().map(|id| self.state_of[id as usize]);
        Ok(StateSet::from_states(self.states, states))
    }
}

/// Rules for `A[p1 U p2]` over a first-child / next-sibling encoding (`S0`
/// and `Next`), which handles any finite outdegree. The operands may only
/// use atoms, negated atoms, `true`, conjunction, disjunction and nested
/// `A[. U .]`.
pub fn unbounded_au_translate(p1: &TdsProgram, p2: &TdsProgram) -> Result<Program, TdsError> {
    if p1.atom_count != p2.atom_count {
        return Err(TdsError::AtomCountMismatch { expected: p1.atom_count, found: p2.atom_count });
    }
    let root = TdsNode::AllUntil(Box::new(p1.root.clone()), Box::new(p2.root.clone()));
    let allowed = |n: &TdsNode| {
        matches!(
            n,
            TdsNode::Atom(_) | TdsNode::NegAtom(_) | TdsNode::Top | TdsNode::And(..) | TdsNode::Or(..) | TdsNode::AllUntil(..)
        )
    };
    if root.any(&|n| !allowed(n)) {
        return Err(TdsError::Unsupported("atoms, negated atoms, true, & , | and A[. U .]".into()));
    }
    let names = name_nodes(&root);
    let b_names: Vec<Option<String>> = {
        let mut count = 0;
        let last = names.len() - 1;
        names
            .iter()
            .enumerate()
            .map(|(i, (n, _, _))| match n {
                TdsNode::AllUntil(..) if i == last => Some("B".to_string()),
                TdsNode::AllUntil(..) => {
                    count += 1;
                    Some(format!("B{count}"))
                }
                _ => None,
            })
            .collect()
    };
    let own = |n: &TdsNode, g: &str, c: &[&str], _: Option<&str>| -> Vec<Rule> {
        match n {
            TdsNode::Atom(i) => vec![unary(g, vec![pos(&format!("P{i}"), &["X"])])],
            TdsNode::NegAtom(i) => vec![unary(g, vec![pos("W", &["X"]), neg(&format!("P{i}"), &["X"])])],
            TdsNode::Top => vec![unary(g, vec![pos("W", &["X"])])],
            TdsNode::And(..) => vec![unary(g, vec![pos(c[0], &["X"]), pos(c[1], &["X"])])],
            TdsNode::Or(..) => vec![unary(g, vec![pos(c[0], &["X"])]), unary(g, vec![pos(c[1], &["X"])])],
            TdsNode::AllUntil(..) => {
                let id = names.iter().position(|(_, name, _)| name == g).expect("named node");
                let b = b_names[id].as_deref().expect("until nodes are named");
                vec![
                    unary(g, vec![pos(c[1], &["X"])]),
                    unary(g, vec![pos(c[0], &["X"]), pos("S0", &["X", "Y"]), pos(g, &["Y"]), pos(b, &["Y"])]),
                    unary(b, vec![pos("W", &["X"]), neg("N", &["X"])]),
                    unary(b, vec![pos("Next", &["X", "Y"]), pos(g, &["Y"]), pos(b, &["Y"])]),
                ]
            }
            _ => unreachable!("checked above"),
        }
    };
    let mut rules = emit_tree(&root, &own);
    rules.push(unary("N", vec![pos("Next", &["X", "Y"])]));
    rules.extend(domain_rules(&["S0", "Next"], p1.atom_count));
    Ok(Program::new(rules, "G"))
}

/// S-expression form, e.g. `(all-next (atom p0))`.
pub fn render_tds_sexpr(p: &TdsProgram, atoms: Option<&AtomTable>) -> String {
    struct S<'a>(&'a TdsNode, Option<&'a AtomTable>);
    impl fmt::Display for S<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let atom = |i: usize| match self.1.and_then(|t| t.name(i)) {
                Some(name) => name.to_string(),
                None => format!("p{i}"),
            };
            let head = match self.0 {
                TdsNode::Atom(i) => return write!(f, "(atom {})", atom(*i)),
                TdsNode::NegAtom(i) => return write!(f, "(neg-atom {})", atom(*i)),
                TdsNode::Top => "top",
                TdsNode::And(..) => "and",
                TdsNode::Or(..) => "or",
                TdsNode::ExNext(_) => "ex-next",
                TdsNode::AllNext(_) => "all-next",
                TdsNode::ExUntil(..) => "ex-until",
                TdsNode::AllUntil(..) => "all-until",
                TdsNode::ExUntilTilde(..) => "ex-until-tilde",
                TdsNode::AllUntilTilde(..) => "all-until-tilde",
            };
            write!(f, "({head}")?;
            for c in self.0.children() {
                write!(f, " {}", S(c, self.1))?;
            }
            f.write_str(")")
        }
    }
    S(&p.root, atoms).to_string()
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::ctl::{model_check, parse_formula, parse_formula_in};
    use crate::datalog::{check_safety, evaluate_succ};
    use crate::kripke::{first_child_next_sibling, parse_kripke};

    fn atom(i: usize, n: usize) -> TdsProgram {
        build_tds(TdsKind::Atom(i), vec![], n).unwrap()
    }

    fn rules(p: &TdsProgram, c_max: u32) -> Vec<String> {
        flatten_tds(p, c_max).unwrap().rules.iter().map(|r| r.to_string()).collect()
    }

    #[test]
    fn operator_examples() {
        let ax = build_tds(TdsKind::AllNext, vec![atom(0, 1)], 1).unwrap();
        assert_eq!(
            rules(&ax, 1),
            [
                "G(X) :- S0(X,Y), !2S(X), G1(Y).",
                "G(X) :- S0(X,Y), S1(X,Z), G1(Y), G1(Z).",
                "G1(X) :- P0(X).",
                "2S(X) :- S0(X,Y), S1(X,Z).",
            ]
        );
        let or = build_tds(TdsKind::Or, vec![atom(0, 2), atom(1, 2)], 2).unwrap();
        assert_eq!(rules(&or, 1)[..2], ["G(X) :- G1(X).", "G(X) :- G2(X)."]);
        let eut = build_tds(TdsKind::ExUntilTilde, vec![atom(0, 2), atom(1, 2)], 2).unwrap();
        let r = rules(&eut, 1);
        assert_eq!(r.len(), 8 + 2);
        assert!(r.contains(&"G(X) :- B(X,X).".to_string()));
        assert_eq!(r.iter().filter(|r| r.starts_with("B(")).count(), 4);
        let aut = build_tds(TdsKind::AllUntilTilde, vec![atom(0, 2), atom(1, 2)], 2).unwrap();
        let r = rules(&aut, 3);
        assert_eq!(r.len(), 11 + 2);
        assert!(r.contains(&"G(X) :- C(X,3).".to_string()));
        assert_eq!(r.iter().filter(|r| r.contains("N <= 3")).count(), 4);
        assert_eq!(r.iter().filter(|r| r.starts_with("C(X,1)")).count(), 2);
        assert!(!flatten_tds(&or, 2).unwrap().uses_counters());
        assert!(matches!(flatten_tds(&or, 0), Err(TdsError::ZeroCMax)));
    }

    #[test]
    fn leaves_and_pnf() {
        let (f, t) = parse_formula("!p").unwrap();
        let p = ctl_to_tds(&f, t.len()).unwrap();
        assert_eq!(p.root, TdsNode::NegAtom(0));
        assert_eq!(rules(&p, 1)[0], "G(X) :- W(X), !P0(X).");
        let (f, t) = parse_formula("A[ p U q ]").unwrap();
        assert_eq!(render_tds_sexpr(&ctl_to_tds(&f, t.len()).unwrap(), Some(&t)), "(all-until (atom p) (atom q))");
        let (f, t) = parse_formula("!(p & q)").unwrap();
        assert!(matches!(ctl_to_tds(&f, t.len()), Err(TdsError::NotPnf(_))));
        assert!(matches!(ctl_to_tds(&Formula::False, 0), Err(TdsError::AtomOutOfRange { .. })));
        for text in ["A[ p ~U !q ] | EX true", "false"] {
            let (f, t) = parse_formula(text).unwrap();
            let prog = flatten_tds(&ctl_to_tds(&to_pnf(&f), t.len().max(1)).unwrap(), 4).unwrap();
            check_safety(&prog).unwrap();
        }
    }

    #[test]
    fn eval_examples() {
        let k = parse_kripke("state a\nstate b p\nedge a b\nedge b b").unwrap();
        let f = parse_formula_in("AX p", k.ap()).unwrap();
        assert_eq!(eval_tds(&f, &k, &ChildOrder::ByName).unwrap(), StateSet::full(2));
        let k = parse_kripke("state a p\nstate b p\nedge a b\nedge b a\nedge a a").unwrap();
        let f = parse_formula_in("A[ p ~U p ]", k.ap()).unwrap();
        assert_eq!(eval_tds(&f, &k, &ChildOrder::ByName).unwrap(), StateSet::full(2));
        let k = parse_kripke("ap p q\nstate a q\nstate b\nstate c p\nedge a b\nedge a c\nedge b b\nedge c a").unwrap();
        for text in ["A[ q ~U !p ]", "E[ q ~U !p ]", "A[ !p U q ]", "false", "EX EX p | AX q", "A[ false ~U !p ]"] {
            let f = parse_formula_in(text, k.ap()).unwrap();
            let want = model_check(&k, &f).unwrap();
            assert_eq!(eval_tds(&f, &k, &ChildOrder::ByName).unwrap(), want, "{text}");
            assert_eq!(eval_tds(&f, &k, &ChildOrder::ByNameDescending).unwrap(), want, "{text}");
        }
        let k4 = parse_kripke("state a\nedge a a").unwrap();
        assert_eq!(eval_tds(&Formula::True, &k4, &ChildOrder::ByName).unwrap(), StateSet::full(1));
    }

    #[test]
    fn unbounded_until() {
        let k = parse_kripke(
            "ap p q\nstate r p\nstate a q\nstate b p\nstate c q\nstate d p\nstate z\n\
             edge r a\nedge r b\nedge r c\nedge a z\nedge b c\nedge c z\nedge d d\nedge z z",
        )
        .unwrap();
        let db = first_child_next_sibling(&k, &ChildOrder::ByName).unwrap().to_fact_store();
        let leaf = |i| TdsProgram::new(TdsNode::Atom(i), 2).unwrap();
        let prog = unbounded_au_translate(&leaf(0), &leaf(1)).unwrap();
        assert_eq!(prog.rules.iter().filter(|r| r.head.pred == "B").count(), 2);
        let goal = |prog: &Program| {
            let out = evaluate_succ(prog, &db, 1).unwrap();
            out.unary_names(&prog.goal)
        };
        let check = |text: &str, prog: &Program| {
            let f = parse_formula_in(text, k.ap()).unwrap();
            let want: BTreeSet<String> = model_check(&k, &f).unwrap().iter().map(|s| k.state_name(s).to_string()).collect();
            assert_eq!(goal(prog).into_iter().collect::<BTreeSet<_>>(), want, "{text}");
        };
        check("A[ p U q ]", &prog);
        assert!(goal(&prog).contains("r"));
        assert!(!goal(&prog).contains("d"));
        let inner = ctl_to_tds(&parse_formula_in("A[ p U q ]", k.ap()).unwrap(), 2).unwrap();
        let nested = unbounded_au_translate(&leaf(0), &inner).unwrap();
        check("A[ p U A[ p U q ] ]", &nested);
        let ex = TdsProgram::new(TdsNode::ExNext(Box::new(TdsNode::Top)), 2).unwrap();
        assert!(matches!(unbounded_au_translate(&ex, &leaf(1)), Err(TdsError::Unsupported(_))));
    }
}
