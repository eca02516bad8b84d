use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::{Bound, Literal, Program, Rule, Term};
use super::check::check_safety;
use super::facts::{FactStore, Value};
use super::stratify::stratify;
use super::DatalogError;

type Facts = BTreeMap<String, BTreeSet<Vec<Value>>>;
type Binding = HashMap<String, Value>;

struct Naive<'a> {
    consts: HashMap<&'a str, Value>,
    c_max: Option<u32>,
}

impl Naive<'_> {
    fn unify(&self, t: &Term, v: Value, b: &mut Binding) -> bool {
        match t {
            Term::Const(c) => self.consts[c.as_str()] == v,
            Term::Int(n) => v == Value::Num(*n),
            Term::Var(x) => match b.get(x) {
                Some(&w) => w == v,
                None => {
                    b.insert(x.clone(), v);
                    true
                }
            },
            Term::Minus(x, k) => {
                let Value::Num(m) = v else { return false };
                match b.get(x) {
                    Some(&Value::Num(n)) => n.checked_sub(*k) == Some(m),
                    Some(_) => false,
                    None => {
                        let n = m + k;
                        if self.c_max.is_some_and(|c| n > c) {
                            return false;
                        }
                        b.insert(x.clone(), Value::Num(n));
                        true
                    }
                }
            }
        }
    }

    fn ground(&self, t: &Term, b: &Binding) -> Option<Value> {
        match t {
            Term::Const(c) => Some(self.consts[c.as_str()]),
            Term::Int(n) => Some(Value::Num(*n)),
            Term::Var(x) => b.get(x).copied(),
            Term::Minus(x, k) => match b.get(x) {
                Some(&Value::Num(n)) => n.checked_sub(*k).map(Value::Num),
                _ => None,
            },
        }
    }

    /// All bindings satisfying the positive literals, in written order.
    fn matches(&self, r: &Rule, facts: &Facts) -> Vec<Binding> {
        let mut bindings = vec![Binding::new()];
        for l in &r.body {
            let Literal::Pos(a) = l else { continue };
            let empty = BTreeSet::new();
            let rel = facts.get(&a.pred).unwrap_or(&empty);
            let mut next = Vec::new();
            for b in &bindings {
                for t in rel {
                    let mut b2 = b.clone();
                    if t.len() == a.args.len() && a.args.iter().zip(t).all(|(term, &v)| self.unify(term, v, &mut b2)) {
                        next.push(b2);
                    }
                }
            }
            bindings = next;
        }
        bindings
    }

    fn filters_hold(&self, r: &Rule, b: &Binding, facts: &Facts) -> bool {
        r.body.iter().all(|l| match l {
            Literal::Pos(_) => true,
            Literal::Neg(a) => {
                let t: Option<Vec<Value>> = a.args.iter().map(|t| self.ground(t, b)).collect();
                t.is_none_or(|t| !facts.get(&a.pred).is_some_and(|rel| rel.contains(&t)))
            }
            Literal::Le(x, bound) => {
                let limit = match bound {
                    Bound::Int(n) => *n,
                    Bound::CMax => self.c_max.expect("checked before evaluation"),
                };
                matches!(b.get(x), Some(&Value::Num(n)) if n <= limit)
            }
        })
    }

    fn head(&self, r: &Rule, b: &Binding) -> Option<Vec<Value>> {
        let t: Vec<Value> = r.head.args.iter().map(|t| self.ground(t, b)).collect::<Option<_>>()?;
        let in_range = |v: &Value| match (v, self.c_max) {
            (Value::Num(n), Some(c)) => (1..=c).contains(n),
            _ => true,
        };
        t.iter().all(in_range).then_some(t)
    }
}

/// A direct reference evaluator: every rule of a stratum is re-applied to
/// the whole database until nothing changes. Slow; meant for differential
/// testing of [`super::evaluate`].
pub fn evaluate_naive(p: &Program, d: &FactStore, c_max: Option<u32>) -> Result<FactStore, DatalogError> {
    check_safety(p)?;
    if c_max.is_none() && p.uses_counters() {
        return Err(DatalogError::CounterNeedsSucc);
    }
    let strat = stratify(p)?;
    let mut symbols = d.symbols().clone();
    let mut consts = HashMap::new();
    for r in &p.rules {
        for a in std::iter::once(&r.head).chain(r.body.iter().filter_map(Literal::atom)) {
            for t in &a.args {
                if let Term::Const(c) = t {
                    consts.insert(c.as_str(), Value::Sym(symbols.intern(c)));
                }
            }
        }
    }
    let mut facts: Facts = d.predicates().map(|q| (q.to_string(), d.relation(q).unwrap().iter().map(|t| t.to_vec()).collect())).collect();
    let ev = Naive { consts, c_max };
    for layer in strat.layers() {
        let rules: Vec<&Rule> = p.rules.iter().filter(|r| layer.contains(&r.head.pred)).collect();
        loop {
            let mut new = Vec::new();
            for r in &rules {
                for b in ev.matches(r, &facts) {
                    if !ev.filters_hold(r, &b, &facts) {
                        continue;
                    }
                    if let Some(t) = ev.head(r, &b) {
                        if !facts.get(&r.head.pred).is_some_and(|rel| rel.contains(&t)) {
                            new.push((r.head.pred.clone(), t));
                        }
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            for (q, t) in new {
                facts.entry(q).or_default().insert(t);
            }
        }
    }
    let mut out = FactStore::with_symbols(symbols);
    for (q, arity) in p.predicates() {
        out.declare(q, arity)?;
    }
    for (q, rel) in facts {
        for t in rel {
            out.insert(&q, t.into_iter().collect())?;
        }
    }
    Ok(out)
}
