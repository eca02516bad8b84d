use std::fmt;

use super::formula::{AtomTable, Formula};

pub(crate) struct Rendered<'a> {
    pub(crate) formula: &'a Formula,
    pub(crate) atoms: Option<&'a AtomTable>,
}

/// Binding strength: `|` < `&` < prefix operators < atoms and brackets.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 0,
        Formula::And(..) => 1,
        Formula::Not(_) | Formula::ExistsNext(_) | Formula::ForallNext(_) => 2,
        _ => 3,
    }
}

impl Rendered<'_> {
    fn write(&self, f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if prec(f) < min {
            out.write_str("(")?;
            self.write(f, 0, out)?;
            return out.write_str(")");
        }
        match f {
            Formula::True => out.write_str("true"),
            Formula::False => out.write_str("false"),
            Formula::Atom(i) => match self.atoms.and_then(|t| t.name(*i)) {
                Some(name) => out.write_str(name),
                None => write!(out, "p{i}"),
            },
            Formula::Not(g) => {
                out.write_str("!")?;
                self.write(g, 2, out)
            }
            Formula::ExistsNext(g) => {
                out.write_str("EX ")?;
                self.write(g, 2, out)
            }
            Formula::ForallNext(g) => {
                out.write_str("AX ")?;
                self.write(g, 2, out)
            }
            Formula::And(l, r) => {
                self.write(l, 1, out)?;
                out.write_str(" & ")?;
                self.write(r, 2, out)
            }
            Formula::Or(l, r) => {
                self.write(l, 0, out)?;
                out.write_str(" | ")?;
                self.write(r, 1, out)
            }
            Formula::ExistsUntil(l, r) => self.bracket("E", "U", l, r, out),
            Formula::ForallUntil(l, r) => self.bracket("A", "U", l, r, out),
            Formula::ExistsUntilTilde(l, r) => self.bracket("E", "~U", l, r, out),
            Formula::ForallUntilTilde(l, r) => self.bracket("A", "~U", l, r, out),
        }
    }

    fn bracket(
        &self,
        q: &str,
        op: &str,
        l: &Formula,
        r: &Formula,
        out: &mut fmt::Formatter<'_>,
    ) -> fmt::Result {
        write!(out, "{q}[ ")?;
        self.write(l, 0, out)?;
        write!(out, " {op} ")?;
        self.write(r, 0, out)?;
        out.write_str(" ]")
    }
}

impl fmt::Display for Rendered<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, 0, out)
    }
}

/// Renders `f` in the concrete syntax accepted by [`super::parse_formula`],
/// using the fewest parentheses that preserve the tree.
pub fn render_formula(f: &Formula, atoms: &AtomTable) -> String {
    f.display(atoms).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pq() -> AtomTable {
        AtomTable::from_names(["p", "q"])
    }

    #[test]
    fn spec_examples() {
        let t = pq();
        assert_eq!(render_formula(&Formula::True, &t), "true");
        assert_eq!(render_formula(&Formula::ex(Formula::atom(0)), &t), "EX p");
        assert_eq!(
            render_formula(&Formula::aut(Formula::atom(0), Formula::atom(1)), &t),
            "A[ p ~U q ]"
        );
    }

    #[test]
    fn parenthesizes_only_when_needed() {
        let t = pq();
        let (p, q) = (Formula::atom(0), Formula::atom(1));
        let f = Formula::and(Formula::or(p.clone(), q.clone()), Formula::not(Formula::and(p.clone(), q.clone())));
        assert_eq!(render_formula(&f, &t), "(p | q) & !(p & q)");
        let g = Formula::or(p.clone(), Formula::or(q.clone(), p.clone()));
        assert_eq!(render_formula(&g, &t), "p | (q | p)");
        let h = Formula::or(Formula::or(p.clone(), q.clone()), Formula::and(p, q));
        assert_eq!(render_formula(&h, &t), "p | q | p & q");
        assert_eq!(Formula::ex(Formula::not(Formula::atom(3))).to_string(), "EX !p3");
    }
}
