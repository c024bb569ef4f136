//! Symbols, multisets and point mutations.
//!
//! A [`Multiset`] is an immutable value: every operation that changes the
//! content returns a fresh multiset. Entries are kept sorted by symbol id so
//! equality, hashing and ordering are canonical.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Interned symbol; equality is by id within one [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u32);

impl Symbol {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Cell label of a tissue system, an index into the system's cell table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId(pub(crate) u32);

impl CellId {
    pub fn new(index: usize) -> Self {
        CellId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MultisetError {
    #[error("invalid symbol name {0:?}")]
    InvalidName(String),
    #[error("rule {0} is not applicable")]
    NotApplicable(String),
    #[error("rule set is not jointly applicable")]
    NotJointlyApplicable,
    #[error("no polarization for symbol #{0}")]
    MissingPolarization(usize),
}

/// Characters that the text formats use as punctuation.
const RESERVED_CHARS: &[char] = &[':', '{', '}', '*', '@', '"', ';'];
const RESERVED_TOKENS: &[&str] = &["+", "-", "->", "=>"];

/// Whether `name` can be used as a symbol name.
pub fn valid_symbol_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || RESERVED_CHARS.contains(&c))
        && !RESERVED_TOKENS.contains(&name)
}

/// Interning table for the symbols of one system.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, Symbol>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name`, returning the existing symbol if already present.
    pub fn intern(&mut self, name: &str) -> Result<Symbol, MultisetError> {
        if let Some(&sym) = self.index.get(name) {
            return Ok(sym);
        }
        if !valid_symbol_name(name) {
            return Err(MultisetError::InvalidName(name.to_string()));
        }
        let sym = Symbol(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), sym);
        Ok(sym)
    }

    pub fn get(&self, name: &str) -> Option<Symbol> {
        self.index.get(name).copied()
    }

    pub fn name(&self, sym: Symbol) -> &str {
        &self.names[sym.index()]
    }

    pub fn contains(&self, sym: Symbol) -> bool {
        sym.index() < self.names.len()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Symbols in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.names.len()).map(|i| Symbol(i as u32))
    }
}

/// Finite multiset over interned symbols.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiset {
    // sorted by symbol, counts strictly positive
    entries: Vec<(Symbol, u64)>,
    size: u64,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts<I: IntoIterator<Item = (Symbol, u64)>>(counts: I) -> Self {
        let mut entries: Vec<(Symbol, u64)> = Vec::new();
        let mut sorted: Vec<(Symbol, u64)> = counts.into_iter().filter(|&(_, n)| n > 0).collect();
        sorted.sort_by_key(|&(s, _)| s);
        for (s, n) in sorted {
            match entries.last_mut() {
                Some((last, count)) if *last == s => *count += n,
                _ => entries.push((s, n)),
            }
        }
        let size = entries.iter().map(|&(_, n)| n).sum();
        Multiset { entries, size }
    }

    pub fn from_symbols<I: IntoIterator<Item = Symbol>>(symbols: I) -> Self {
        Self::from_counts(symbols.into_iter().map(|s| (s, 1)))
    }

    pub fn count(&self, sym: Symbol) -> u64 {
        match self.entries.binary_search_by_key(&sym, |&(s, _)| s) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    /// Total number of symbol occurrences.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// `(symbol, count)` pairs sorted by symbol id.
    pub fn iter(&self) -> impl Iterator<Item = (Symbol, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.entries.iter().map(|&(s, _)| s)
    }

    /// Whether `self` is contained in `other` (pointwise `<=`).
    pub fn is_subset_of(&self, other: &Multiset) -> bool {
        self.entries.iter().all(|&(s, n)| other.count(s) >= n)
    }

    pub fn union(&self, other: &Multiset) -> Multiset {
        Multiset::from_counts(self.iter().chain(other.iter()))
    }

    fn adjusted(&self, removed: &[Symbol], added: &[Symbol]) -> Multiset {
        let mut counts: Vec<(Symbol, i64)> =
            self.entries.iter().map(|&(s, n)| (s, n as i64)).collect();
        let mut bump =
            |sym: Symbol, delta: i64| match counts.binary_search_by_key(&sym, |&(s, _)| s) {
                Ok(i) => counts[i].1 += delta,
                Err(i) => counts.insert(i, (sym, delta)),
            };
        for &s in removed {
            bump(s, -1);
        }
        for &s in added {
            bump(s, 1);
        }
        debug_assert!(counts.iter().all(|&(_, n)| n >= 0));
        let entries: Vec<(Symbol, u64)> = counts
            .into_iter()
            .filter(|&(_, n)| n > 0)
            .map(|(s, n)| (s, n as u64))
            .collect();
        let size = entries.iter().map(|&(_, n)| n).sum();
        Multiset { entries, size }
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> MultisetDisplay<'a> {
        MultisetDisplay {
            set: self,
            alphabet,
        }
    }
}

/// Renders a multiset as `{a*2 b}`.
pub struct MultisetDisplay<'a> {
    set: &'a Multiset,
    alphabet: &'a Alphabet,
}

impl fmt::Display for MultisetDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (s, n)) in self.set.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(self.alphabet.name(s))?;
            if n > 1 {
                write!(f, "*{n}")?;
            }
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MutationKind {
    Insert,
    Delete,
    Substitute,
}

/// A point mutation `a -> b` where at most one side is empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mutation {
    Insert(Symbol),
    Delete(Symbol),
    Substitute(Symbol, Symbol),
}

impl Mutation {
    pub fn kind(self) -> MutationKind {
        match self {
            Mutation::Insert(_) => MutationKind::Insert,
            Mutation::Delete(_) => MutationKind::Delete,
            Mutation::Substitute(..) => MutationKind::Substitute,
        }
    }

    pub fn lhs(self) -> Option<Symbol> {
        match self {
            Mutation::Insert(_) => None,
            Mutation::Delete(a) | Mutation::Substitute(a, _) => Some(a),
        }
    }

    pub fn rhs(self) -> Option<Symbol> {
        match self {
            Mutation::Delete(_) => None,
            Mutation::Insert(b) | Mutation::Substitute(_, b) => Some(b),
        }
    }

    pub fn symbols(self) -> impl Iterator<Item = Symbol> {
        self.lhs().into_iter().chain(self.rhs())
    }

    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> MutationDisplay<'a> {
        MutationDisplay {
            mutation: *self,
            alphabet,
        }
    }
}

/// Renders a mutation in the rule syntax of the text format.
pub struct MutationDisplay<'a> {
    mutation: Mutation,
    alphabet: &'a Alphabet,
}

impl fmt::Display for MutationDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |s| self.alphabet.name(s);
        match self.mutation {
            Mutation::Insert(b) => write!(f, "+ {} ->", name(b)),
            Mutation::Delete(a) => write!(f, "{} - ->", name(a)),
            Mutation::Substitute(a, b) => write!(f, "{} => {}", name(a), name(b)),
        }
    }
}

pub fn applicable(w: &Multiset, m: Mutation) -> bool {
    match m.lhs() {
        None => true,
        Some(a) => w.count(a) >= 1,
    }
}

pub fn apply_one(w: &Multiset, m: Mutation) -> Result<Multiset, MultisetError> {
    if !applicable(w, m) {
        return Err(MultisetError::NotApplicable(format!("{m:?}")));
    }
    let removed: Vec<Symbol> = m.lhs().into_iter().collect();
    let added: Vec<Symbol> = m.rhs().into_iter().collect();
    Ok(w.adjusted(&removed, &added))
}

/// Left-hand sides of all non-insertion rules, as a multiset.
fn demand<'a, I: IntoIterator<Item = &'a Mutation>>(ms: I) -> Multiset {
    Multiset::from_symbols(ms.into_iter().filter_map(|m| m.lhs()))
}

/// Total-demand containment: every lhs occurrence needs its own copy in `w`.
pub fn jointly_applicable(w: &Multiset, ms: &[Mutation]) -> bool {
    demand(ms).is_subset_of(w)
}

pub fn apply_set(w: &Multiset, ms: &[Mutation]) -> Result<Multiset, MultisetError> {
    if !jointly_applicable(w, ms) {
        return Err(MultisetError::NotJointlyApplicable);
    }
    let removed: Vec<Symbol> = ms.iter().filter_map(|m| m.lhs()).collect();
    let added: Vec<Symbol> = ms.iter().filter_map(|m| m.rhs()).collect();
    Ok(w.adjusted(&removed, &added))
}

/// All maximal subsets of `candidates` that are jointly applicable to `w`.
///
/// Subsets are returned as sorted index lists into `candidates`, in
/// lexicographic order of the include/exclude decisions (include first).
/// Duplicated candidates are treated as distinct rules.
pub fn maximal_applicable_subsets(w: &Multiset, candidates: &[Mutation]) -> Vec<Vec<usize>> {
    // A rule that is not applicable alone can never join a set.
    let live: Vec<usize> = (0..candidates.len())
        .filter(|&i| applicable(w, candidates[i]))
        .collect();
    if live.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    let mut used: HashMap<Symbol, u64> = HashMap::new();
    subsets_rec(w, candidates, &live, 0, &mut chosen, &mut used, &mut out);
    out
}

fn fits(w: &Multiset, used: &HashMap<Symbol, u64>, m: Mutation) -> bool {
    match m.lhs() {
        None => true,
        Some(a) => used.get(&a).copied().unwrap_or(0) < w.count(a),
    }
}

fn subsets_rec(
    w: &Multiset,
    candidates: &[Mutation],
    live: &[usize],
    pos: usize,
    chosen: &mut Vec<usize>,
    used: &mut HashMap<Symbol, u64>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == live.len() {
        let maximal = live
            .iter()
            .filter(|i| !chosen.contains(i))
            .all(|&i| !fits(w, used, candidates[i]));
        if maximal {
            out.push(chosen.clone());
        }
        return;
    }
    let idx = live[pos];
    let m = candidates[idx];
    if fits(w, used, m) {
        chosen.push(idx);
        if let Some(a) = m.lhs() {
            *used.entry(a).or_insert(0) += 1;
        }
        subsets_rec(w, candidates, live, pos + 1, chosen, used, out);
        if let Some(a) = m.lhs() {
            *used.get_mut(&a).expect("counted above") -= 1;
        }
        chosen.pop();
    }
    subsets_rec(w, candidates, live, pos + 1, chosen, used, out);
}

/// Parikh vector of `w` over `order`; symbols outside `order` are ignored.
pub fn parikh(w: &Multiset, order: &[Symbol]) -> Vec<u64> {
    order.iter().map(|&s| w.count(s)).collect()
}

/// Elementary polarization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative,
    Neutral,
    Positive,
}

impl Polarity {
    pub fn value(self) -> i64 {
        match self {
            Polarity::Negative => -1,
            Polarity::Neutral => 0,
            Polarity::Positive => 1,
        }
    }

    pub fn sign_of(value: i64) -> Polarity {
        match value.signum() {
            -1 => Polarity::Negative,
            0 => Polarity::Neutral,
            _ => Polarity::Positive,
        }
    }

    /// `-1`, `0` or `+1`.
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Negative => "-1",
            Polarity::Neutral => "0",
            Polarity::Positive => "+1",
        }
    }

    /// `−`, `0` or `+`, as used in graph annotations.
    pub fn glyph(self) -> &'static str {
        match self {
            Polarity::Negative => "\u{2212}",
            Polarity::Neutral => "0",
            Polarity::Positive => "+",
        }
    }

    pub fn parse(text: &str) -> Option<Polarity> {
        match text {
            "-1" | "-" => Some(Polarity::Negative),
            "0" => Some(Polarity::Neutral),
            "+1" | "1" | "+" => Some(Polarity::Positive),
            _ => None,
        }
    }
}

/// Polarizations of cells and symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolarizationTable {
    cells: Vec<Polarity>,
    symbols: Vec<Polarity>,
}

impl PolarizationTable {
    /// `cells[i]` is the polarization of cell `i`, `symbols[s]` that of symbol `s`.
    pub fn new(cells: Vec<Polarity>, symbols: Vec<Polarity>) -> Self {
        PolarizationTable { cells, symbols }
    }

    pub fn cell(&self, cell: CellId) -> Option<Polarity> {
        self.cells.get(cell.index()).copied()
    }

    pub fn symbol(&self, sym: Symbol) -> Option<Polarity> {
        self.symbols.get(sym.index()).copied()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }
}

/// The sum evaluation: total of the symbol polarizations, counted with multiplicity.
pub fn evaluate_sum(w: &Multiset, pol: &PolarizationTable) -> Result<i64, MultisetError> {
    w.iter().try_fold(0i64, |acc, (s, n)| {
        let p = pol
            .symbol(s)
            .ok_or(MultisetError::MissingPolarization(s.index()))?;
        Ok(acc + p.value() * n as i64)
    })
}

pub fn sign(value: i64) -> Polarity {
    Polarity::sign_of(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms(names: &[&str]) -> (Alphabet, Vec<Symbol>) {
        let mut a = Alphabet::new();
        let s = names.iter().map(|n| a.intern(n).unwrap()).collect();
        (a, s)
    }

    #[test]
    fn interning_is_by_name() {
        let mut a = Alphabet::new();
        let x = a.intern("x").unwrap();
        assert_eq!(a.intern("x").unwrap(), x);
        assert_ne!(a.intern("y").unwrap(), x);
        assert_eq!(a.name(x), "x");
        // the trap symbol is an ordinary name
        assert!(a.intern("#").is_ok());
        assert!(a.intern("a:b").is_err());
        assert!(a.intern("->").is_err());
        assert!(a.intern("").is_err());
    }

    #[test]
    fn applicability() {
        let (_, s) = syms(&["a", "b"]);
        let (a, b) = (s[0], s[1]);
        let empty = Multiset::new();
        assert!(applicable(&empty, Mutation::Insert(b)));
        assert!(!applicable(&empty, Mutation::Delete(a)));
        let two_a = Multiset::from_counts([(a, 2)]);
        assert!(applicable(&two_a, Mutation::Substitute(a, b)));
    }

    #[test]
    fn apply_one_examples() {
        let (_, s) = syms(&["p", "q", "a"]);
        let (p, q, a) = (s[0], s[1], s[2]);
        let w = Multiset::from_counts([(p, 1)]);
        assert_eq!(
            apply_one(&w, Mutation::Substitute(p, q)).unwrap(),
            Multiset::from_counts([(q, 1)])
        );
        let w = Multiset::from_counts([(a, 3)]);
        assert_eq!(
            apply_one(&w, Mutation::Delete(a)).unwrap(),
            Multiset::from_counts([(a, 2)])
        );
        let w = Multiset::from_counts([(a, 1)]);
        assert_eq!(
            apply_one(&w, Mutation::Insert(a)).unwrap(),
            Multiset::from_counts([(a, 2)])
        );
        // input untouched
        assert_eq!(w.count(a), 1);
        assert!(apply_one(&Multiset::new(), Mutation::Delete(a)).is_err());
    }

    #[test]
    fn joint_applicability_examples() {
        let (_, s) = syms(&["s", "a", "#", "b", "c"]);
        let (sl, a, trap, b, c) = (s[0], s[1], s[2], s[3], s[4]);
        let w = Multiset::from_counts([(sl, 1), (a, 2)]);
        assert!(jointly_applicable(
            &w,
            &[Mutation::Substitute(sl, sl), Mutation::Substitute(a, trap)]
        ));
        let w = Multiset::from_counts([(a, 1)]);
        assert!(!jointly_applicable(
            &w,
            &[Mutation::Delete(a), Mutation::Substitute(a, b)]
        ));
        assert!(jointly_applicable(
            &Multiset::new(),
            &[Mutation::Insert(b), Mutation::Insert(c)]
        ));
    }

    #[test]
    fn apply_set_examples() {
        let (_, s) = syms(&["s", "a", "#", "x", "b"]);
        let (sl, a, trap, x, b) = (s[0], s[1], s[2], s[3], s[4]);
        let w = Multiset::from_counts([(sl, 1), (a, 1)]);
        let out = apply_set(
            &w,
            &[Mutation::Substitute(sl, sl), Mutation::Substitute(a, trap)],
        )
        .unwrap();
        assert_eq!(out, Multiset::from_counts([(sl, 1), (trap, 1)]));
        let w = Multiset::from_counts([(x, 1)]);
        assert_eq!(apply_set(&w, &[]).unwrap(), w);
        let w = Multiset::from_counts([(a, 2)]);
        let out = apply_set(&w, &[Mutation::Delete(a), Mutation::Insert(b)]).unwrap();
        assert_eq!(out, Multiset::from_counts([(a, 1), (b, 1)]));
        let w = Multiset::from_counts([(a, 1)]);
        assert_eq!(
            apply_set(&w, &[Mutation::Delete(a), Mutation::Delete(a)]),
            Err(MultisetError::NotJointlyApplicable)
        );
    }

    #[test]
    fn parikh_examples() {
        let (_, s) = syms(&["a1", "a2", "p"]);
        let (a1, a2, p) = (s[0], s[1], s[2]);
        assert_eq!(
            parikh(&Multiset::from_counts([(a1, 2), (a2, 1)]), &[a1, a2]),
            vec![2, 1]
        );
        assert_eq!(parikh(&Multiset::new(), &[a1]), vec![0]);
        assert_eq!(
            parikh(&Multiset::from_counts([(a1, 1), (p, 5)]), &[a1]),
            vec![1]
        );
    }

    #[test]
    fn evaluate_sum_examples() {
        let (_, s) = syms(&["p+", "a", "p-", "a+"]);
        use Polarity::*;
        let table = PolarizationTable::new(vec![], vec![Positive, Neutral, Negative, Positive]);
        assert_eq!(evaluate_sum(&Multiset::new(), &table).unwrap(), 0);
        assert_eq!(sign(0), Neutral);
        let w = Multiset::from_counts([(s[0], 1), (s[1], 3)]);
        assert_eq!(evaluate_sum(&w, &table).unwrap(), 1);
        let w = Multiset::from_counts([(s[2], 2), (s[3], 1)]);
        let v = evaluate_sum(&w, &table).unwrap();
        assert_eq!((v, sign(v)), (-1, Negative));
        let short = PolarizationTable::new(vec![], vec![Positive]);
        assert!(matches!(
            evaluate_sum(&w, &short),
            Err(MultisetError::MissingPolarization(_))
        ));
    }

    #[test]
    fn maximal_subsets_respect_supply() {
        let (_, s) = syms(&["a", "b", "c"]);
        let (a, b, c) = (s[0], s[1], s[2]);
        let w = Multiset::from_counts([(a, 1), (b, 1)]);
        let rules = [
            Mutation::Delete(a),
            Mutation::Substitute(a, c),
            Mutation::Substitute(b, c),
            Mutation::Insert(c),
        ];
        let sets = maximal_applicable_subsets(&w, &rules);
        assert_eq!(sets, vec![vec![0, 2, 3], vec![1, 2, 3]]);
        assert!(maximal_applicable_subsets(&Multiset::new(), &[Mutation::Delete(a)]).is_empty());
    }

    #[test]
    fn display_format() {
        let (alpha, s) = syms(&["a", "b"]);
        let w = Multiset::from_counts([(s[1], 1), (s[0], 2)]);
        assert_eq!(w.display(&alpha).to_string(), "{a*2 b}");
        assert_eq!(Multiset::new().display(&alpha).to_string(), "{}");
        assert_eq!(Mutation::Insert(s[0]).display(&alpha).to_string(), "+ a ->");
    }
}
