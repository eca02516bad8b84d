use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::ctl::{AtomId, AtomTable, StateSet};

use super::KripkeError;

pub type StateId = u32;

/// A finite Kripke structure `⟨W, R, V⟩` over a declared atom list.
///
/// States are numbered `0..n` in declaration order. Successor lists are kept
/// sorted and duplicate-free, so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeStructure {
    names: Vec<String>,
    succ_off: Vec<u32>,
    succ: Vec<StateId>,
    ap: AtomTable,
    /// For each atom, the states where it holds.
    labels: Vec<StateSet>,
    by_name: HashMap<String, StateId>,
}

impl KripkeStructure {
    /// Builds a structure from parts. Edges may arrive in any order and may repeat.
    pub fn new(
        names: Vec<String>,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
        ap: AtomTable,
        labels: Vec<StateSet>,
    ) -> Result<Self, KripkeError> {
        let n = names.len();
        let mut seen = HashSet::with_capacity(n);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(KripkeError::DuplicateState { line: 0, name: name.clone() });
            }
        }
        if labels.len() != ap.len() {
            return Err(KripkeError::Invalid(format!(
                "{} label sets for {} atoms",
                labels.len(),
                ap.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|l| l.universe() != n) {
            return Err(KripkeError::Invalid(format!(
                "label set over {} states in a structure with {n}",
                bad.universe()
            )));
        }
        let mut edges: Vec<(StateId, StateId)> = edges.into_iter().collect();
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a as usize >= n || b as usize >= n) {
            return Err(KripkeError::Invalid(format!("edge ({a},{b}) leaves the {n} declared states")));
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self::from_sorted_edges(names, &edges, ap, labels))
    }

    /// `edges` must be sorted, duplicate-free and in range.
    pub(crate) fn from_sorted_edges(
        names: Vec<String>,
        edges: &[(StateId, StateId)],
        ap: AtomTable,
        labels: Vec<StateSet>,
    ) -> Self {
        let n = names.len();
        let mut succ_off = vec![0u32; n + 1];
        for &(a, _) in edges {
            succ_off[a as usize + 1] += 1;
        }
        for i in 0..n {
            succ_off[i + 1] += succ_off[i];
        }
        let succ = edges.iter().map(|&(_, b)| b).collect();
        let by_name = names.iter().enumerate().map(|(i, n)| (n.clone(), i as StateId)).collect();
        KripkeStructure { names, succ_off, succ, ap, labels, by_name }
    }

    /// Structure with states named `s0 .. s{n-1}` and atoms `p0 .. p{m-1}`,
    /// where `label(state, atom)` decides the valuation.
    pub fn numbered(
        n: usize,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
        atoms: usize,
        label: impl Fn(StateId, AtomId) -> bool,
    ) -> Result<Self, KripkeError> {
        let names = (0..n).map(|i| format!("s{i}")).collect();
        let labels = (0..atoms)
            .map(|a| StateSet::from_states(n, (0..n as u32).filter(|&s| label(s, a))))
            .collect();
        Self::new(names, edges, AtomTable::numbered(atoms), labels)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.len()
    }

    /// `|W| + |R|`.
    pub fn size(&self) -> usize {
        self.num_states() + self.num_edges()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.names[s as usize]
    }

    pub fn state_names(&self) -> &[String] {
        &self.names
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.by_name.get(name).copied()
    }

    #[inline]
    pub fn successors(&self, s: StateId) -> &[StateId] {
        let s = s as usize;
        &self.succ[self.succ_off[s] as usize..self.succ_off[s + 1] as usize]
    }

    pub fn outdegree(&self, s: StateId) -> usize {
        self.successors(s).len()
    }

    pub fn max_outdegree(&self) -> usize {
        (0..self.num_states() as StateId)
            .map(|s| self.outdegree(s))
            .max()
            .unwrap_or(0)
    }

    /// All transitions in `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        (0..self.num_states() as StateId).flat_map(move |s| self.successors(s).iter().map(move |&t| (s, t)))
    }

    pub fn has_edge(&self, a: StateId, b: StateId) -> bool {
        self.successors(a).binary_search(&b).is_ok()
    }

    pub fn ap(&self) -> &AtomTable {
        &self.ap
    }

    /// The states where atom `a` holds.
    pub fn atom_states(&self, a: AtomId) -> &StateSet {
        &self.labels[a]
    }

    pub fn holds(&self, s: StateId, a: AtomId) -> bool {
        self.labels.get(a).is_some_and(|l| l.contains(s))
    }

    pub fn atoms_at(&self, s: StateId) -> Vec<AtomId> {
        (0..self.ap.len()).filter(|&a| self.labels[a].contains(s)).collect()
    }

    /// First state without a successor, if any.
    pub fn first_dead_end(&self) -> Option<StateId> {
        (0..self.num_states() as StateId).find(|&s| self.outdegree(s) == 0)
    }

    /// Whether every state has a successor.
    pub fn is_total(&self) -> bool {
        self.first_dead_end().is_none()
    }

    /// Predecessor lists in CSR form: `(offsets, sources)`.
    pub(crate) fn predecessors_csr(&self) -> (Vec<u32>, Vec<StateId>) {
        let n = self.num_states();
        let mut off = vec![0u32; n + 1];
        for &t in &self.succ {
            off[t as usize + 1] += 1;
        }
        for i in 0..n {
            off[i + 1] += off[i];
        }
        let mut fill = off.clone();
        let mut src = vec![0; self.succ.len()];
        for (s, t) in self.edges() {
            src[fill[t as usize] as usize] = s;
            fill[t as usize] += 1;
        }
        (off, src)
    }

    /// Same structure with the atom list replaced by the first `n` atoms,
    /// padding with atoms that hold nowhere.
    pub fn with_atom_count(&self, n: usize) -> KripkeStructure {
        let mut ap = AtomTable::new();
        let mut labels = Vec::with_capacity(n);
        for a in 0..n {
            match self.ap.name(a) {
                Some(name) => ap.intern(name),
                None => ap.intern(&format!("p{a}")),
            };
            labels.push(
                self.labels
                    .get(a)
                    .cloned()
                    .unwrap_or_else(|| StateSet::empty(self.num_states())),
            );
        }
        KripkeStructure { ap, labels, ..self.clone() }
    }
}

/// Incremental construction by state name.
#[derive(Debug, Default)]
pub struct KripkeBuilder {
    names: Vec<String>,
    index: HashMap<String, StateId>,
    edges: Vec<(StateId, StateId)>,
    ap: AtomTable,
    marks: Vec<(StateId, AtomId)>,
}

impl KripkeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends atoms to the declared atom list.
    pub fn declare_atoms<S: AsRef<str>>(&mut self, atoms: impl IntoIterator<Item = S>) -> &mut Self {
        for a in atoms {
            self.ap.intern(a.as_ref());
        }
        self
    }

    /// Adds a state, or extends its label set if it already exists.
    pub fn state<S: AsRef<str>>(&mut self, name: &str, atoms: impl IntoIterator<Item = S>) -> StateId {
        let id = self.ensure_state(name);
        for a in atoms {
            let atom = self.ap.intern(a.as_ref());
            self.marks.push((id, atom));
        }
        id
    }

    fn ensure_state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as StateId;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn contains_state(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Adds an edge, creating either endpoint if needed.
    pub fn edge(&mut self, from: &str, to: &str) -> &mut Self {
        let a = self.ensure_state(from);
        let b = self.ensure_state(to);
        self.edges.push((a, b));
        self
    }

    pub fn build(&self) -> KripkeStructure {
        let n = self.names.len();
        let mut labels = vec![StateSet::empty(n); self.ap.len()];
        for &(s, a) in &self.marks {
            labels[a].insert(s);
        }
        let mut edges = self.edges.clone();
        edges.sort_unstable();
        edges.dedup();
        KripkeStructure::from_sorted_edges(self.names.clone(), &edges, self.ap.clone(), labels)
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses the line-based structure format:
///
/// ```text
/// # comment
/// ap p q          # optional: fixes atom order, may declare unused atoms
/// state a p
/// state b
/// edge a b
/// edge b b
/// ```
pub fn parse_kripke(text: &str) -> Result<KripkeStructure, KripkeError> {
    let mut b = KripkeBuilder::new();
    let mut pending_edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut words = content.split_whitespace();
        let Some(kw) = words.next() else { continue };
        let rest: Vec<&str> = words.collect();
        if let Some(bad) = rest.iter().find(|w| !valid_name(w)) {
            return Err(KripkeError::Syntax { line, message: format!("invalid name `{bad}`") });
        }
        match kw {
            "ap" => {
                b.declare_atoms(rest);
            }
            "state" => {
                let Some((name, atoms)) = rest.split_first() else {
                    return Err(KripkeError::Syntax { line, message: "`state` needs a name".into() });
                };
                if b.contains_state(name) {
                    return Err(KripkeError::DuplicateState { line, name: name.to_string() });
                }
                b.state(name, atoms.iter().copied());
            }
            "edge" => {
                if rest.len() != 2 {
                    return Err(KripkeError::Syntax {
                        line,
                        message: format!("`edge` takes two states, got {}", rest.len()),
                    });
                }
                pending_edges.push((line, rest[0].to_string(), rest[1].to_string()));
            }
            other => {
                return Err(KripkeError::Syntax { line, message: format!("unknown directive `{other}`") })
            }
        }
    }
    for (line, from, to) in pending_edges {
        for name in [&from, &to] {
            if !b.contains_state(name) {
                return Err(KripkeError::UnknownState { line, name: name.clone() });
            }
        }
        b.edge(&from, &to);
    }
    Ok(b.build())
}

/// Inverse of [`parse_kripke`]; the output re-parses to an equal structure.
pub fn render_kripke(k: &KripkeStructure) -> String {
    let mut out = String::new();
    if !k.ap().is_empty() {
        out.push_str("ap");
        for a in k.ap().names() {
            out.push(' ');
            out.push_str(a);
        }
        out.push('\n');
    }
    for s in 0..k.num_states() as StateId {
        out.push_str("state ");
        out.push_str(k.state_name(s));
        for a in k.atoms_at(s) {
            out.push(' ');
            out.push_str(k.ap().name(a).unwrap_or("?"));
        }
        out.push('\n');
    }
    for (a, b) in k.edges() {
        let _ = writeln!(out, "edge {} {}", k.state_name(a), k.state_name(b));
    }
    out
}

/// Places the structures side by side. Component `i` occupies states
/// `offsets[i] .. offsets[i+1]`, with names prefixed `k{i}_`. All inputs
/// must share the same atom list.
pub fn disjoint_union(parts: &[KripkeStructure]) -> Result<(KripkeStructure, Vec<u32>), KripkeError> {
    let ap = parts.first().map(|k| k.ap().clone()).unwrap_or_default();
    if let Some(k) = parts.iter().find(|k| *k.ap() != ap) {
        return Err(KripkeError::Invalid(format!(
            "atom lists differ: {:?} vs {:?}",
            ap.names(),
            k.ap().names()
        )));
    }
    let mut offsets = Vec::with_capacity(parts.len() + 1);
    let mut total = 0u32;
    for k in parts {
        offsets.push(total);
        total += k.num_states() as u32;
    }
    offsets.push(total);
    let n = total as usize;
    let mut names = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(parts.iter().map(|k| k.num_edges()).sum());
    let mut labels = vec![StateSet::empty(n); ap.len()];
    for (i, k) in parts.iter().enumerate() {
        let off = offsets[i];
        names.extend(k.state_names().iter().map(|s| format!("k{i}_{s}")));
        edges.extend(k.edges().map(|(a, b)| (a + off, b + off)));
        for (a, l) in labels.iter_mut().enumerate() {
            for s in k.atom_states(a).iter() {
                l.insert(s + off);
            }
        }
    }
    Ok((KripkeStructure::from_sorted_edges(names, &edges, ap, labels), offsets))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = "# a -> b -> b\nstate a\nstate b p\nedge a b\nedge b b\n";

    #[test]
    fn parse_and_render_round_trip() {
        let k = parse_kripke(TWO).unwrap();
        assert_eq!(k.num_states(), 2);
        assert_eq!(k.successors(0), &[1]);
        assert!(k.holds(1, 0) && !k.holds(0, 0));
        assert!(k.is_total());
        let text = render_kripke(&k);
        assert_eq!(text, "ap p\nstate a\nstate b p\nedge a b\nedge b b\n");
        assert_eq!(parse_kripke(&text).unwrap(), k);
    }

    #[test]
    fn ap_directive_fixes_order_and_allows_unused_atoms() {
        let k = parse_kripke("ap q p r\nstate a p\nedge a a").unwrap();
        assert_eq!(k.ap().names(), ["q", "p", "r"]);
        assert_eq!(k.atoms_at(0), vec![1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse_kripke("state a\nedge a b"),
            Err(KripkeError::UnknownState { line: 2, .. })
        ));
        assert!(matches!(
            parse_kripke("state a\nstate a"),
            Err(KripkeError::DuplicateState { line: 2, .. })
        ));
        assert!(matches!(parse_kripke("node a"), Err(KripkeError::Syntax { line: 1, .. })));
        assert!(matches!(parse_kripke("edge a"), Err(KripkeError::Syntax { .. })));
        assert!(matches!(parse_kripke("state a(b)"), Err(KripkeError::Syntax { .. })));
    }

    #[test]
    fn non_total_detected() {
        let k = parse_kripke("state a\nstate b\nedge a b").unwrap();
        assert_eq!(k.first_dead_end(), Some(1));
    }

    #[test]
    fn union_offsets() {
        let k = parse_kripke(TWO).unwrap();
        let (u, off) = disjoint_union(&[k.clone(), k]).unwrap();
        assert_eq!(off, vec![0, 2, 4]);
        assert_eq!(u.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 1), (2, 3), (3, 3)]);
        assert_eq!(u.atom_states(0).iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(u.state_name(2), "k1_a");
    }
}
