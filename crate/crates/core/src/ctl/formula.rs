use std::collections::HashMap;
use std::fmt;

/// Index of an atomic proposition `p_i`.
pub type AtomId = usize;

/// A CTL state formula.
///
/// `Ũ` ("until-tilde") is the dual of until: `E[f ~U g]` holds when some path
/// keeps `g` forever, or keeps `g` up to and including the first state where
/// `f` holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(AtomId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    ExistsNext(Box<Formula>),
    ForallNext(Box<Formula>),
    ExistsUntil(Box<Formula>, Box<Formula>),
    ForallUntil(Box<Formula>, Box<Formula>),
    ExistsUntilTilde(Box<Formula>, Box<Formula>),
    ForallUntilTilde(Box<Formula>, Box<Formula>),
}

/// Which syntactic fragment a formula belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalFormTag {
    Raw,
    /// Existential normal form: no `A`, no `∨`, no `⊥`.
    Enf,
    /// Positive normal form: negation only directly above atoms or `⊤`.
    Pnf,
}

impl Formula {
    pub fn atom(id: AtomId) -> Self {
        Formula::Atom(id)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn ex(f: Formula) -> Self {
        Formula::ExistsNext(Box::new(f))
    }

    pub fn ax(f: Formula) -> Self {
        Formula::ForallNext(Box::new(f))
    }

    pub fn eu(l: Formula, r: Formula) -> Self {
        Formula::ExistsUntil(Box::new(l), Box::new(r))
    }

    pub fn au(l: Formula, r: Formula) -> Self {
        Formula::ForallUntil(Box::new(l), Box::new(r))
    }

    pub fn eut(l: Formula, r: Formula) -> Self {
        Formula::ExistsUntilTilde(Box::new(l), Box::new(r))
    }

    pub fn aut(l: Formula, r: Formula) -> Self {
        Formula::ForallUntilTilde(Box::new(l), Box::new(r))
    }

    /// Direct subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            True | False | Atom(_) => vec![],
            Not(f) | ExistsNext(f) | ForallNext(f) => vec![f],
            And(l, r)
            | Or(l, r)
            | ExistsUntil(l, r)
            | ForallUntil(l, r)
            | ExistsUntilTilde(l, r)
            | ForallUntilTilde(l, r) => vec![l, r],
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Length of the longest root-to-leaf path, counting nodes (a leaf has depth 1).
    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .into_iter()
            .map(Formula::depth)
            .max()
            .unwrap_or(0)
    }

    /// One past the largest atom index mentioned, or 0 for atom-free formulas.
    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Atom(i) => i + 1,
            _ => self
                .children()
                .into_iter()
                .map(Formula::atom_count)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn is_enf(&self) -> bool {
        use Formula::*;
        match self {
            True | Atom(_) => true,
            False | Or(..) | ForallNext(_) | ForallUntil(..) | ForallUntilTilde(..) => false,
            Not(f) | ExistsNext(f) => f.is_enf(),
            And(l, r) | ExistsUntil(l, r) | ExistsUntilTilde(l, r) => l.is_enf() && r.is_enf(),
        }
    }

    pub fn is_pnf(&self) -> bool {
        use Formula::*;
        match self {
            True | Atom(_) => true,
            False => false,
            Not(f) => matches!(**f, Atom(_) | True),
            ExistsNext(f) | ForallNext(f) => f.is_pnf(),
            And(l, r)
            | Or(l, r)
            | ExistsUntil(l, r)
            | ForallUntil(l, r)
            | ExistsUntilTilde(l, r)
            | ForallUntilTilde(l, r) => l.is_pnf() && r.is_pnf(),
        }
    }

    pub fn normal_form(&self) -> NormalFormTag {
        if self.is_enf() {
            NormalFormTag::Enf
        } else if self.is_pnf() {
            NormalFormTag::Pnf
        } else {
            NormalFormTag::Raw
        }
    }

    /// Renders with the atom names from `atoms`; see [`crate::ctl::render_formula`].
    pub fn display<'a>(&'a self, atoms: &'a AtomTable) -> impl fmt::Display + 'a {
        super::render::Rendered {
            formula: self,
            atoms: Some(atoms),
        }
    }
}

impl fmt::Display for Formula {
    /// Renders atoms as `p0`, `p1`, ...
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        super::render::Rendered {
            formula: self,
            atoms: None,
        }
        .fmt(f)
    }
}

/// Dense mapping between atom names and indices, in first-declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomTable {
    names: Vec<String>,
    index: HashMap<String, AtomId>,
}

impl AtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Table with names `p0 .. p{n-1}`.
    pub fn numbered(n: usize) -> Self {
        let mut t = Self::new();
        for i in 0..n {
            t.intern(&format!("p{i}"));
        }
        t
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut t = Self::new();
        for n in names {
            t.intern(n.as_ref());
        }
        t
    }

    pub fn intern(&mut self, name: &str) -> AtomId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<AtomId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: AtomId) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_counts_nodes() {
        let f = Formula::and(Formula::ex(Formula::atom(0)), Formula::eu(Formula::atom(1), Formula::atom(2)));
        assert_eq!(f.size(), 6);
        assert_eq!(f.depth(), 3);
        assert_eq!(f.atom_count(), 3);
        assert_eq!(Formula::True.size(), 1);
    }

    #[test]
    fn fragment_membership() {
        let enf = Formula::not(Formula::eut(Formula::not(Formula::atom(0)), Formula::True));
        assert!(enf.is_enf());
        assert!(!enf.is_pnf());
        let pnf = Formula::or(Formula::not(Formula::atom(0)), Formula::ax(Formula::not(Formula::True)));
        assert!(pnf.is_pnf());
        assert!(!pnf.is_enf());
        assert!(!Formula::False.is_enf());
        assert!(!Formula::False.is_pnf());
        assert_eq!(Formula::atom(3).normal_form(), NormalFormTag::Enf);
        assert_eq!(Formula::not(Formula::or(Formula::True, Formula::True)).normal_form(), NormalFormTag::Raw);
    }
}
