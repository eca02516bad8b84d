use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use crate::datalog::{parse_program, Atom, Literal, Program, Rule, Term};

use super::{StdError, StdNode, StdProgram};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shape {
    Atom,
    Top,
    Not,
    And,
    Next,
    Until,
    UntilTilde,
}

const SHAPES: [(Shape, &str); 7] = [
    (Shape::Atom, "G(X) :- P(X)."),
    (Shape::Top, "G(X) :- W(X)."),
    (Shape::Not, "G(X) :- W(X), !G1(X)."),
    (Shape::And, "G(X) :- G1(X), G2(X)."),
    (Shape::Next, "G(X) :- G1(X), !A(X).\nG(X) :- R(X,Y), G1(Y)."),
    (Shape::Until, "G(X) :- G2(X).\nG(X) :- G1(X), R(X,Y), G(Y)."),
    (
        Shape::UntilTilde,
        "G(X) :- G1(X), G2(X).\nG(X) :- G2(X), !A(X).\nG(X) :- B(X,X).\nG(X) :- G2(X), R(X,Y), G(Y).\n\
         B(X,Y) :- G2(X), R(X,Y), G2(Y).\nB(X,Y) :- G2(X), R(X,U), B(U,Y).",
    ),
];

fn templates() -> &'static Vec<(Shape, Program)> {
    static T: OnceLock<Vec<(Shape, Program)>> = OnceLock::new();
    T.get_or_init(|| SHAPES.iter().map(|(s, text)| (*s, parse_program(text).expect("valid template"))).collect())
}

fn a_template() -> &'static Rule {
    static T: OnceLock<Rule> = OnceLock::new();
    T.get_or_init(|| parse_program("A(X) :- R(X,Y).").unwrap().rules.remove(0))
}

fn w_templates() -> &'static Vec<Rule> {
    static T: OnceLock<Vec<Rule>> = OnceLock::new();
    T.get_or_init(|| parse_program("W(X) :- R(X,Y).\nW(X) :- R(Y,X).").unwrap().rules)
}

fn p_index(pred: &str) -> Option<usize> {
    let digits = pred.strip_prefix('P')?;
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) || (digits.len() > 1 && digits.starts_with('0')) {
        return None;
    }
    digits.parse().ok()
}

/// Template predicate placeholders bound to actual predicate names.
type Binding = HashMap<String, String>;

struct Matcher<'a> {
    groups: &'a BTreeMap<&'a str, Vec<&'a Rule>>,
}

impl Matcher<'_> {
    fn bind_pred(&self, tp: &str, ap: &str, b: &mut Binding) -> bool {
        if tp == "R" {
            return ap == "R";
        }
        if tp == "P" {
            if p_index(ap).is_none() || self.groups.contains_key(ap) {
                return false;
            }
        } else if ap == "R" || (p_index(ap).is_some() && !self.groups.contains_key(ap)) {
            return false;
        }
        match b.get(tp) {
            Some(prev) => prev == ap,
            None => {
                if b.values().any(|v| v == ap) {
                    return false;
                }
                b.insert(tp.to_string(), ap.to_string());
                true
            }
        }
    }

    fn bind_atom<'r>(&self, t: &'r Atom, a: &'r Atom, b: &mut Binding, vars: &mut HashMap<&'r str, &'r str>) -> bool {
        if t.arity() != a.arity() || !self.bind_pred(&t.pred, &a.pred, b) {
            return false;
        }
        for (tt, at) in t.args.iter().zip(&a.args) {
            let (Term::Var(tv), Term::Var(av)) = (tt, at) else { return false };
            match vars.get(tv.as_str()) {
                Some(&prev) if prev != av => return false,
                Some(_) => {}
                None => {
                    if vars.values().any(|v| *v == av) {
                        return false;
                    }
                    vars.insert(tv, av);
                }
            }
        }
        true
    }

    /// Every way to match the template literals against the actual ones.
    fn match_body<'r>(
        &self,
        t: &'r [Literal],
        a: &'r [Literal],
        used: &mut Vec<bool>,
        b: &Binding,
        vars: &HashMap<&'r str, &'r str>,
        out: &mut Vec<Binding>,
    ) {
        let Some((first, rest)) = t.split_first() else {
            out.push(b.clone());
            return;
        };
        for (i, l) in a.iter().enumerate() {
            if used[i] {
                continue;
            }
            let (ta, aa) = match (first, l) {
                (Literal::Pos(x), Literal::Pos(y)) | (Literal::Neg(x), Literal::Neg(y)) => (x, y),
                _ => continue,
            };
            let mut b2 = b.clone();
            let mut v2 = vars.clone();
            if !self.bind_atom(ta, aa, &mut b2, &mut v2) {
                continue;
            }
            used[i] = true;
            self.match_body(rest, a, used, &b2, &v2, out);
            used[i] = false;
        }
    }

    /// Matches one template rule against one rule, literals in any order.
    fn match_rule(&self, t: &Rule, r: &Rule, b: &Binding) -> Vec<Binding> {
        let mut out = Vec::new();
        if t.body.len() != r.body.len() {
            return out;
        }
        let mut b2 = b.clone();
        let mut vars = HashMap::new();
        if self.bind_atom(&t.head, &r.head, &mut b2, &mut vars) {
            self.match_body(&t.body, &r.body, &mut vec![false; r.body.len()], &b2, &vars, &mut out);
        }
        dedup(out)
    }

    /// Bijections between template rules and actual rules.
    fn match_set(&self, t: &[&Rule], a: &[&Rule], used: &mut Vec<bool>, b: &Binding, out: &mut Vec<Binding>) {
        let Some((first, rest)) = t.split_first() else {
            out.push(b.clone());
            return;
        };
        for (i, r) in a.iter().enumerate() {
            if used[i] {
                continue;
            }
            for b2 in self.match_rule(first, r, b) {
                used[i] = true;
                self.match_set(rest, a, used, &b2, out);
                used[i] = false;
            }
        }
    }

    /// Matches every rule group of `template`, starting from the one headed by
    /// `G`, which is bound to `goal`.
    fn match_template(&self, template: &Program, goal: &str) -> Vec<Binding> {
        let mut heads = vec!["G"];
        for r in &template.rules {
            if !heads.contains(&r.head.pred.as_str()) {
                heads.push(&r.head.pred);
            }
        }
        let mut cands = vec![Binding::from([("G".to_string(), goal.to_string())])];
        for h in heads {
            let t: Vec<&Rule> = template.rules.iter().filter(|r| r.head.pred == h).collect();
            let mut next = Vec::new();
            for b in &cands {
                let Some(a) = b.get(h).and_then(|name| self.groups.get(name.as_str())) else { continue };
                if a.len() == t.len() {
                    self.match_set(&t, a, &mut vec![false; a.len()], b, &mut next);
                }
            }
            cands = dedup(next);
        }
        cands
    }
}

fn dedup(bs: Vec<Binding>) -> Vec<Binding> {
    let mut seen = BTreeSet::new();
    bs.into_iter()
        .filter(|b| {
            let mut key: Vec<(String, String)> = b.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
            key.sort();
            seen.insert(key)
        })
        .collect()
}

struct Decoder<'a> {
    m: Matcher<'a>,
    used: BTreeSet<String>,
    w: Option<String>,
    a: Option<String>,
    max_atom: Option<usize>,
}

impl Decoder<'_> {
    fn shared(&mut self, slot: fn(&mut Self) -> &mut Option<String>, name: &str, what: &str) -> Result<(), StdError> {
        match slot(self) {
            Some(prev) if prev != name => Err(StdError::NotStd(format!(
                "two different {what} predicates `{prev}` and `{name}`"
            ))),
            Some(_) => Ok(()),
            s @ None => {
                *s = Some(name.to_string());
                Ok(())
            }
        }
    }

    fn decode(&mut self, g: &str) -> Result<StdNode, StdError> {
        if self.used.contains(g) {
            return Err(StdError::NotStd(format!("`{g}` is shared between operands")));
        }
        let Some(group) = self.m.groups.get(g) else {
            return Err(StdError::NotStd(format!("no rules define `{g}`")));
        };
        let mut last_err = None;
        for (shape, template) in templates() {
            for b in self.m.match_template(template, g) {
                let saved = (self.used.clone(), self.w.clone(), self.a.clone(), self.max_atom);
                match self.finish(*shape, g, &b) {
                    Ok(node) => return Ok(node),
                    Err(e) => {
                        (self.used, self.w, self.a, self.max_atom) = saved;
                        last_err = Some(e);
                    }
                }
            }
        }
        Err(last_err.unwrap_or_else(|| {
            StdError::NotStd(format!("no operator shape matches the rules for `{g}`, e.g. `{}`", group[0]))
        }))
    }

    fn finish(&mut self, shape: Shape, g: &str, b: &Binding) -> Result<StdNode, StdError> {
        self.used.insert(g.to_string());
        if let Some(w) = b.get("W") {
            self.shared(|d| &mut d.w, w, "domain")?;
        }
        if let Some(a) = b.get("A") {
            self.shared(|d| &mut d.a, a, "successor")?;
        }
        if let Some(bp) = b.get("B") {
            if !self.used.insert(bp.clone()) {
                return Err(StdError::NotStd(format!("`{bp}` is shared between operands")));
            }
        }
        let mut child = |k: &str| -> Result<Box<StdNode>, StdError> { Ok(Box::new(self.decode(&b[k])?)) };
        Ok(match shape {
            Shape::Atom => {
                let i = p_index(&b["P"]).expect("matched a P predicate");
                self.max_atom = self.max_atom.max(Some(i));
                StdNode::Atom(i)
            }
            Shape::Top => StdNode::Top,
            Shape::Not => StdNode::Not(child("G1")?),
            Shape::And => {
                let l = child("G1")?;
                StdNode::And(l, child("G2")?)
            }
            Shape::Next => StdNode::Next(child("G1")?),
            Shape::Until => {
                let l = child("G1")?;
                StdNode::Until(l, child("G2")?)
            }
            Shape::UntilTilde => {
                let l = child("G1")?;
                StdNode::UntilTilde(l, child("G2")?)
            }
        })
    }

    /// Number of unary predicates named by the domain rules.
    fn domain_size(&self, w: &str) -> Result<usize, StdError> {
        let bad = || StdError::NotStd(format!("rules for `{w}` are not the domain rules"));
        let group = &self.m.groups[w];
        let b = Binding::from([("W".to_string(), w.to_string())]);
        let fixed: Vec<&Rule> = w_templates().iter().collect();
        let (binary, unary): (Vec<&Rule>, Vec<&Rule>) =
            group.iter().partition(|r| r.body.len() == 1 && r.body[0].atom().is_some_and(|a| a.pred == "R"));
        let mut found = Vec::new();
        if binary.len() == 2 {
            self.m.match_set(&fixed, &binary, &mut vec![false; 2], &b, &mut found);
        }
        if found.is_empty() {
            return Err(bad());
        }
        let mut seen = BTreeSet::new();
        for r in unary {
            let i = match (&r.head.args[..], &r.body[..]) {
                ([Term::Var(x)], [Literal::Pos(a)]) if a.args == [Term::Var(x.clone())] && !self.m.groups.contains_key(a.pred.as_str()) => {
                    p_index(&a.pred).ok_or_else(bad)?
                }
                _ => return Err(bad()),
            };
            if !seen.insert(i) {
                return Err(bad());
            }
        }
        if seen.iter().copied().eq(0..seen.len()) {
            Ok(seen.len())
        } else {
            Err(bad())
        }
    }
}

/// Recovers the operator tree of a program that is, up to renaming of
/// derived predicates and reordering of rules and body literals, the
/// flattening of some tree.
pub fn recognize_std(p: &Program) -> Result<StdProgram, StdError> {
    let mut groups: BTreeMap<&str, Vec<&Rule>> = BTreeMap::new();
    for r in &p.rules {
        groups.entry(r.head.pred.as_str()).or_default().push(r);
    }
    let mut d = Decoder { m: Matcher { groups: &groups }, used: BTreeSet::new(), w: None, a: None, max_atom: None };
    let root = d.decode(&p.goal)?;
    if let Some(a) = d.a.clone() {
        let ok = groups.get(a.as_str()).is_some_and(|g| {
            g.len() == 1 && !d.m.match_rule(a_template(), g[0], &Binding::from([("A".into(), a.clone())])).is_empty()
        });
        if !ok {
            return Err(StdError::NotStd(format!("rules for `{a}` are not `A(X) :- R(X,Y).`")));
        }
        d.used.insert(a);
    }
    let atom_count = match d.w.clone() {
        Some(w) => {
            if !groups.contains_key(w.as_str()) {
                return Err(StdError::NotStd(format!("no rules define `{w}`")));
            }
            let n = d.domain_size(&w)?;
            d.used.insert(w);
            n
        }
        None => d.max_atom.map_or(0, |m| m + 1),
    };
    if let Some(extra) = groups.keys().find(|k| !d.used.contains(**k)) {
        return Err(StdError::NotStd(format!("rules for `{extra}` are not part of any operator, e.g. `{}`", groups[extra][0])));
    }
    StdProgram::new(root, atom_count).map_err(|e| StdError::NotStd(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::{parse_formula, to_enf};
    use crate::std_bridge::{ctl_to_std, flatten};

    fn std_of(text: &str) -> StdProgram {
        let (f, t) = parse_formula(text).unwrap();
        ctl_to_std(&to_enf(&f), t.len()).unwrap()
    }

    #[test]
    fn flattened_programs_are_recognized() {
        for f in ["p", "true", "!p", "p & q", "EX p", "E[ p U q ]", "E[ false ~U p ]", "E[ E[ p ~U q ] ~U !r ]", "A[ p U EX q ]"] {
            let p = std_of(f);
            assert_eq!(recognize_std(&flatten(&p)).unwrap(), p, "{f}");
        }
    }

    #[test]
    fn renamed_and_shuffled() {
        let p = std_of("E[ !p ~U EX q ] & true");
        let text = flatten(&p).to_string();
        let renamed = text
            .replace("G1(", "Foo(")
            .replace("B(", "Path(")
            .replace("W(", "Dom(")
            .replace("A(", "Succ(")
            .replace("G(", "Goal(")
            .replace("% goal: G", "% goal: Goal");
        let mut prog = parse_program(&renamed).unwrap();
        prog.rules.reverse();
        for r in &mut prog.rules {
            r.body.reverse();
        }
        let got = recognize_std(&prog).unwrap();
        assert_eq!(got.atom_count, 2);
        assert_eq!(got.size(), p.size());
    }

    #[test]
    fn rejections() {
        let bad = |t: &str| recognize_std(&parse_program(t).unwrap());
        assert!(matches!(bad("G(X) :- R(X,Y)."), Err(StdError::NotStd(_))));
        assert!(matches!(bad("G(X) :- P0(X).\nH(X) :- P1(X)."), Err(StdError::NotStd(_))));
        assert!(matches!(bad("G(X) :- G1(X), G1(X).\nG1(X) :- P0(X)."), Err(StdError::NotStd(_))));
        assert!(matches!(bad("G(X) :- W(X).\nW(X) :- R(X,Y)."), Err(StdError::NotStd(_))));
        assert!(matches!(bad("G(X) :- G1(X), !A(X).\nG(X) :- R(X,Y), G1(Y).\nG1(X) :- P0(X).\nA(X) :- P0(X)."), Err(StdError::NotStd(_))));
        let e = bad("G(X) :- R(X,Y).").unwrap_err().to_string();
        assert!(e.starts_with("not in STD"), "{e}");
    }

    #[test]
    fn persistence_listing_without_dead_end_rules() {
        // The listing as printed, which omits the `!A` rule and `A`.
        let text = "G1(X) :- W(X).\nG2(X) :- W(X), !G1(X).\nG3(X) :- P0(X).\nG(X) :- G2(X), G3(X).\n\
                    G(X) :- B(X,X).\nG(X) :- G3(X), R(X,Y), G(Y).\nB(X,Y) :- G3(X), R(X,Y), G3(Y).\n\
                    B(X,Y) :- G3(X), R(X,U), B(U,Y).\nW(X) :- R(X,Y).\nW(X) :- R(Y,X).\nW(X) :- P0(X).";
        assert!(recognize_std(&parse_program(text).unwrap()).is_err());
        let completed = format!("{text}\nG(X) :- G3(X), !A(X).\nA(X) :- R(X,Y).");
        let p = recognize_std(&parse_program(&completed).unwrap()).unwrap();
        assert_eq!(p, std_of("E[ false ~U p ]"));
    }
}
