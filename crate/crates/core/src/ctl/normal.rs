use super::formula::Formula;

/// Negation that cancels an existing top-level negation.
fn negate(f: Formula) -> Formula {
    match f {
        Formula::Not(g) => *g,
        g => Formula::not(g),
    }
}

/// Rewrites `f` into existential normal form: no `A`, no `∨`, `⊥` as `¬⊤`.
///
/// Double negations produced by the rewrite are cancelled, so the result is
/// at most four times the size of the input.
pub fn to_enf(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        True => True,
        False => Formula::not(True),
        Atom(i) => Atom(*i),
        Not(g) => negate(to_enf(g)),
        And(l, r) => Formula::and(to_enf(l), to_enf(r)),
        Or(l, r) => negate(Formula::and(negate(to_enf(l)), negate(to_enf(r)))),
        ExistsNext(g) => Formula::ex(to_enf(g)),
        ForallNext(g) => negate(Formula::ex(negate(to_enf(g)))),
        ExistsUntil(l, r) => Formula::eu(to_enf(l), to_enf(r)),
        ForallUntil(l, r) => negate(Formula::eut(negate(to_enf(l)), negate(to_enf(r)))),
        ExistsUntilTilde(l, r) => Formula::eut(to_enf(l), to_enf(r)),
        ForallUntilTilde(l, r) => negate(Formula::eu(negate(to_enf(l)), negate(to_enf(r)))),
    }
}

/// Rewrites `f` into positive normal form by pushing negations down to atoms
/// and `⊤`. The output has the same number of temporal and boolean nodes as
/// the input.
pub fn to_pnf(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        True => True,
        False => Formula::not(True),
        Atom(i) => Atom(*i),
        Not(g) => pnf_negated(g),
        And(l, r) => Formula::and(to_pnf(l), to_pnf(r)),
        Or(l, r) => Formula::or(to_pnf(l), to_pnf(r)),
        ExistsNext(g) => Formula::ex(to_pnf(g)),
        ForallNext(g) => Formula::ax(to_pnf(g)),
        ExistsUntil(l, r) => Formula::eu(to_pnf(l), to_pnf(r)),
        ForallUntil(l, r) => Formula::au(to_pnf(l), to_pnf(r)),
        ExistsUntilTilde(l, r) => Formula::eut(to_pnf(l), to_pnf(r)),
        ForallUntilTilde(l, r) => Formula::aut(to_pnf(l), to_pnf(r)),
    }
}

/// PNF of `¬f`.
fn pnf_negated(f: &Formula) -> Formula {
    use Formula::*;
    let n = pnf_negated;
    match f {
        True => Formula::not(True),
        False => True,
        Atom(i) => Formula::not(Atom(*i)),
        Not(g) => to_pnf(g),
        And(l, r) => Formula::or(n(l), n(r)),
        Or(l, r) => Formula::and(n(l), n(r)),
        ExistsNext(g) => Formula::ax(n(g)),
        ForallNext(g) => Formula::ex(n(g)),
        ExistsUntil(l, r) => Formula::aut(n(l), n(r)),
        ForallUntil(l, r) => Formula::eut(n(l), n(r)),
        ExistsUntilTilde(l, r) => Formula::au(n(l), n(r)),
        ForallUntilTilde(l, r) => Formula::eu(n(l), n(r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctl::parse_formula_with;
    use crate::ctl::AtomTable;

    fn f(text: &str) -> Formula {
        let mut t = AtomTable::from_names(["p", "q"]);
        parse_formula_with(text, &mut t).unwrap()
    }

    #[test]
    fn enf_examples() {
        assert_eq!(to_enf(&f("A[ p U q ]")), f("!E[ !p ~U !q ]"));
        assert_eq!(to_enf(&f("false")), f("!true"));
        assert_eq!(to_enf(&f("E[ p U q ]")), f("E[ p U q ]"));
        assert_eq!(to_enf(&f("AX !p")), f("!EX p"));
        assert_eq!(to_enf(&f("p | q")), f("!(!p & !q)"));
        assert_eq!(to_enf(&f("A[ p ~U q ]")), f("!E[ !p U !q ]"));
    }

    #[test]
    fn pnf_examples() {
        assert_eq!(to_pnf(&f("!E[ p U q ]")), f("A[ !p ~U !q ]"));
        assert_eq!(to_pnf(&f("!!p")), f("p"));
        assert_eq!(to_pnf(&f("!(p & EX q)")), f("!p | AX !q"));
        assert_eq!(to_pnf(&f("!false")), f("true"));
        assert_eq!(to_pnf(&f("false")), f("!true"));
        assert_eq!(to_pnf(&f("!A[ p ~U q ]")), f("E[ !p U !q ]"));
    }

    #[test]
    fn outputs_are_in_their_fragments() {
        for text in ["A[ p U !(q | false) ]", "!AX A[ p ~U EX q ]", "!(p | !E[ true ~U false ])"] {
            assert!(to_enf(&f(text)).is_enf(), "{text}");
            assert!(to_pnf(&f(text)).is_pnf(), "{text}");
        }
    }
}
