//! Line-oriented text formats for machines and systems.
//!
//! Lines starting with `#` are comments. Machine files:
//!
//! ```text
//! registers 1
//! outputs 1
//! kind general
//! init l0
//! l0: ADD 1 l0 l1
//! l1: HALT
//! ```
//!
//! System files:
//!
//! ```text
//! cells 0 h
//! alphabet p q:+1
//! terminals p
//! init 0 { p*2 }
//! output h
//! cellpol 0 0
//! edge 0 h
//! rule 0 : + p -> @h
//! rule 0 : p - -> @h
//! rule 0 : p => q @h
//! ```
//!
//! `cellpol` lines make a system polarized; `edge` lines make it undirected,
//! in which case rules carry no `@target`.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::multiset::{
    valid_symbol_name, Alphabet, CellId, Multiset, Mutation, Polarity, PolarizationTable, Symbol,
};
use crate::ptpv::{Communication, PtpvSystem};
use crate::regmach::{Instruction, MachineError, MachineKind, MachineProgram, ProgramBuilder};
use crate::tpv::{valid_cell_name, TpvRule, TpvSystem};

/// A parse or validation failure. `line` is 1-based; 0 means the whole file.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{}", self.render())]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn at(tok: &Token, message: impl Into<String>) -> Self {
        ParseError {
            line: tok.line,
            column: tok.column,
            token: tok.text.clone(),
            message: message.into(),
        }
    }

    fn file(message: impl Into<String>) -> Self {
        ParseError {
            line: 0,
            column: 0,
            token: String::new(),
            message: message.into(),
        }
    }

    fn eol(line: &[Token], message: impl Into<String>) -> Self {
        let last = line.last().expect("lines are non-empty");
        ParseError {
            line: last.line,
            column: last.column + last.text.chars().count(),
            token: String::new(),
            message: message.into(),
        }
    }

    fn render(&self) -> String {
        match (self.line, self.token.is_empty()) {
            (0, _) => self.message.clone(),
            (_, true) => format!(
                "line {}, column {}: {}",
                self.line, self.column, self.message
            ),
            (_, false) => format!(
                "line {}, column {}: {} (at {:?})",
                self.line, self.column, self.message, self.token
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Token {
    text: String,
    line: usize,
    column: usize,
}

/// Splits into non-comment lines of tokens; `{` and `}` are always tokens.
fn tokenize(text: &str) -> Vec<Vec<Token>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim_start().starts_with('#') {
            continue;
        }
        let mut toks = Vec::new();
        let mut cur = String::new();
        let mut start = 0;
        let flush = |cur: &mut String, start: usize, toks: &mut Vec<Token>| {
            if !cur.is_empty() {
                toks.push(Token {
                    text: std::mem::take(cur),
                    line: i + 1,
                    column: start + 1,
                });
            }
        };
        for (col, c) in raw.chars().enumerate() {
            if c.is_whitespace() {
                flush(&mut cur, start, &mut toks);
            } else if c == '{' || c == '}' {
                flush(&mut cur, start, &mut toks);
                toks.push(Token {
                    text: c.to_string(),
                    line: i + 1,
                    column: col + 1,
                });
            } else {
                if cur.is_empty() {
                    start = col;
                }
                cur.push(c);
            }
        }
        flush(&mut cur, start, &mut toks);
        if !toks.is_empty() {
            lines.push(toks);
        }
    }
    lines
}

fn number(tok: &Token, what: &str) -> Result<u64, ParseError> {
    tok.text
        .parse()
        .map_err(|_| ParseError::at(tok, format!("expected {what}")))
}

fn arity(line: &[Token], n: usize, usage: &str) -> Result<(), ParseError> {
    if line.len() < n {
        return Err(ParseError::eol(line, format!("expected `{usage}`")));
    }
    if line.len() > n {
        return Err(ParseError::at(
            &line[n],
            format!("unexpected token, expected `{usage}`"),
        ));
    }
    Ok(())
}

/// Whether `name` can be used as a machine label.
pub fn valid_label_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('#')
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '{' | '}'))
}

fn header_once<'a>(slot: &mut Option<&'a [Token]>, line: &'a [Token]) -> Result<(), ParseError> {
    if slot.is_some() {
        return Err(ParseError::at(&line[0], "header given twice"));
    }
    *slot = Some(line);
    Ok(())
}

pub fn parse_machine(text: &str) -> Result<MachineProgram, ParseError> {
    let lines = tokenize(text);
    let (mut registers, mut outputs, mut kind, mut init) = (None, None, None, None);
    let mut body: Vec<&[Token]> = Vec::new();
    for line in &lines {
        let head = &line[0];
        match head.text.as_str() {
            "registers" => header_once(&mut registers, line)?,
            "outputs" => header_once(&mut outputs, line)?,
            "kind" => header_once(&mut kind, line)?,
            "init" => header_once(&mut init, line)?,
            t if t.len() > 1 && t.ends_with(':') => body.push(line),
            _ => {
                return Err(ParseError::at(
                    head,
                    "expected a header or `<label>: <instruction>`",
                ))
            }
        }
    }
    let need = |slot: Option<&[Token]>, usage: &str| -> Result<Token, ParseError> {
        let line = slot.ok_or_else(|| ParseError::file(format!("missing `{usage}` line")))?;
        arity(line, 2, usage)?;
        Ok(line[1].clone())
    };
    let m_tok = need(registers, "registers <m>")?;
    let m = number(&m_tok, "a register count")? as usize;
    let k_tok = need(outputs, "outputs <k>")?;
    let k = number(&k_tok, "an output count")? as usize;
    if k > m {
        return Err(ParseError::at(
            &k_tok,
            format!("output count exceeds register count {m}"),
        ));
    }
    let kind_tok = need(kind, "kind general|blind")?;
    let kind = match kind_tok.text.as_str() {
        "general" => MachineKind::General,
        "blind" => MachineKind::PartiallyBlind,
        _ => return Err(ParseError::at(&kind_tok, "expected `general` or `blind`")),
    };
    let init_tok = need(init, "init <label>")?;

    let label_of = |tok: &Token| -> Result<String, ParseError> {
        if valid_label_name(&tok.text) {
            Ok(tok.text.clone())
        } else {
            Err(ParseError::at(tok, "invalid label"))
        }
    };
    let register_of = |tok: &Token| -> Result<usize, ParseError> {
        let r = number(tok, "a register index")? as usize;
        if r == 0 || r > m {
            return Err(ParseError::at(
                tok,
                format!("unknown register, expected 1..={m}"),
            ));
        }
        Ok(r)
    };
    let mut b = ProgramBuilder::new();
    let mut halt_line: Option<&Token> = None;
    for line in &body {
        let head = &line[0];
        let name = &head.text[..head.text.len() - 1];
        if !valid_label_name(name) {
            return Err(ParseError::at(head, "invalid label"));
        }
        b.label(name);
    }
    for line in &body {
        let head = &line[0];
        let at = &head.text[..head.text.len() - 1];
        let op = line
            .get(1)
            .ok_or_else(|| ParseError::eol(line, "expected an instruction"))?;
        match op.text.as_str() {
            "ADD" => {
                arity(line, 5, "<label>: ADD <r> <q> <s>")?;
                let r = register_of(&line[2])?;
                b.add(at, r, &label_of(&line[3])?, &label_of(&line[4])?);
            }
            "SUB" if kind == MachineKind::General => {
                arity(line, 5, "<label>: SUB <r> <q> <s> (general machine)")?;
                let r = register_of(&line[2])?;
                b.sub(at, r, &label_of(&line[3])?, &label_of(&line[4])?);
            }
            "SUB" => {
                arity(line, 4, "<label>: SUB <r> <q> (blind machine)")?;
                let r = register_of(&line[2])?;
                b.sub_blind(at, r, &label_of(&line[3])?);
            }
            "HALT" => {
                arity(line, 2, "<label>: HALT")?;
                if let Some(prev) = halt_line {
                    if prev.text != head.text {
                        return Err(ParseError::at(
                            head,
                            format!("second HALT label (first is {:?})", prev.text),
                        ));
                    }
                }
                halt_line = Some(head);
                b.halt(at);
            }
            _ => return Err(ParseError::at(op, "expected ADD, SUB or HALT")),
        }
    }
    if halt_line.is_none() {
        return Err(ParseError::file("missing HALT instruction"));
    }
    let init = label_of(&init_tok)?;
    b.build(kind, m, k, &init).map_err(|e| match e {
        MachineError::UnknownLabel(name) if name == init => {
            ParseError::at(&init_tok, "unknown label")
        }
        e => ParseError::file(e.to_string()),
    })
}

/// Canonical machine text: headers, then instructions grouped by label.
pub fn print_machine(p: &MachineProgram) -> String {
    let mut out = String::new();
    let kind = match p.kind() {
        MachineKind::General => "general",
        MachineKind::PartiallyBlind => "blind",
    };
    let _ = writeln!(out, "registers {}", p.registers());
    let _ = writeln!(out, "outputs {}", p.outputs());
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "init {}", p.label_name(p.init()));
    for (l, ins) in p.instructions() {
        let name = |l| p.label_name(l);
        let _ = match ins {
            Instruction::Add {
                register,
                next,
                alt,
            } => {
                writeln!(
                    out,
                    "{}: ADD {register} {} {}",
                    name(l),
                    name(next),
                    name(alt)
                )
            }
            Instruction::Sub {
                register,
                next,
                zero,
            } => {
                writeln!(
                    out,
                    "{}: SUB {register} {} {}",
                    name(l),
                    name(next),
                    name(zero)
                )
            }
            Instruction::SubBlind { register, next } => {
                writeln!(out, "{}: SUB {register} {}", name(l), name(next))
            }
            Instruction::Halt => writeln!(out, "{}: HALT", name(l)),
        };
    }
    out
}

/// A parsed system file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemFile {
    Plain(TpvSystem),
    Polarized(PtpvSystem),
}

impl SystemFile {
    pub fn base(&self) -> &TpvSystem {
        match self {
            SystemFile::Plain(s) => s,
            SystemFile::Polarized(s) => s.base(),
        }
    }
}

struct Scope {
    cells: HashMap<String, CellId>,
    alphabet: Alphabet,
}

impl Scope {
    fn cell(&self, tok: &Token) -> Result<CellId, ParseError> {
        self.cells
            .get(&tok.text)
            .copied()
            .ok_or_else(|| ParseError::at(tok, "unknown cell"))
    }

    fn sym(&self, tok: &Token) -> Result<Symbol, ParseError> {
        self.alphabet
            .get(&tok.text)
            .ok_or_else(|| ParseError::at(tok, "symbol not in alphabet"))
    }
}

fn polarity(tok: &Token, text: &str) -> Result<Polarity, ParseError> {
    Polarity::parse(text).ok_or_else(|| ParseError::at(tok, "expected polarization -1, 0 or +1"))
}

/// Parses `{ a*2 b }` starting at `toks[0]`; returns the multiset.
fn parse_multiset(scope: &Scope, line: &[Token], toks: &[Token]) -> Result<Multiset, ParseError> {
    let open = toks
        .first()
        .ok_or_else(|| ParseError::eol(line, "expected `{`"))?;
    if open.text != "{" {
        return Err(ParseError::at(open, "expected `{`"));
    }
    let mut counts: Vec<(Symbol, u64)> = Vec::new();
    let mut rest = toks[1..].iter();
    loop {
        let tok = rest
            .next()
            .ok_or_else(|| ParseError::eol(line, "expected `}`"))?;
        if tok.text == "}" {
            break;
        }
        let (name, count) = match tok.text.split_once('*') {
            Some((name, n)) => (
                name,
                n.parse::<u64>()
                    .map_err(|_| ParseError::at(tok, "expected `<symbol>*<count>`"))?,
            ),
            None => (tok.text.as_str(), 1),
        };
        let sym = scope
            .alphabet
            .get(name)
            .ok_or_else(|| ParseError::at(tok, "symbol not in alphabet"))?;
        counts.push((sym, count));
    }
    if let Some(extra) = rest.next() {
        return Err(ParseError::at(extra, "unexpected token after `}`"));
    }
    Ok(Multiset::from_counts(counts))
}

pub fn parse_system(text: &str) -> Result<SystemFile, ParseError> {
    let lines = tokenize(text);
    let mut cells_line = None;
    let mut alphabet_line = None;
    let mut terminals_line = None;
    let mut init_line = None;
    let mut output_line = None;
    let mut cellpols: Vec<&[Token]> = Vec::new();
    let mut edges: Vec<&[Token]> = Vec::new();
    let mut rules: Vec<&[Token]> = Vec::new();
    for line in &lines {
        match line[0].text.as_str() {
            "cells" => header_once(&mut cells_line, line)?,
            "alphabet" => header_once(&mut alphabet_line, line)?,
            "terminals" => header_once(&mut terminals_line, line)?,
            "init" => header_once(&mut init_line, line)?,
            "output" => header_once(&mut output_line, line)?,
            "cellpol" => cellpols.push(line),
            "edge" => edges.push(line),
            "rule" => rules.push(line),
            _ => return Err(ParseError::at(&line[0], "unknown directive")),
        }
    }
    let polarized = !cellpols.is_empty();
    let undirected = !edges.is_empty();
    if undirected && !polarized {
        return Err(ParseError::at(
            &edges[0][0],
            "`edge` requires a polarized system (`cellpol` lines)",
        ));
    }

    let cells_line = cells_line.ok_or_else(|| ParseError::file("missing `cells` line"))?;
    if cells_line.len() < 2 {
        return Err(ParseError::eol(cells_line, "expected at least one cell"));
    }
    let mut cell_names = Vec::new();
    let mut cells = HashMap::new();
    for tok in &cells_line[1..] {
        if !valid_cell_name(&tok.text) {
            return Err(ParseError::at(tok, "invalid cell name"));
        }
        if cells
            .insert(tok.text.clone(), CellId::new(cell_names.len()))
            .is_some()
        {
            return Err(ParseError::at(tok, "duplicate cell"));
        }
        cell_names.push(tok.text.clone());
    }

    let alphabet_line = alphabet_line.ok_or_else(|| ParseError::file("missing `alphabet` line"))?;
    if alphabet_line.len() < 2 {
        return Err(ParseError::eol(
            alphabet_line,
            "expected at least one symbol",
        ));
    }
    let mut alphabet = Alphabet::new();
    let mut symbol_pols = Vec::new();
    for tok in &alphabet_line[1..] {
        let (name, pol) = match tok.text.split_once(':') {
            Some((name, pol)) => (name, polarity(tok, pol)?),
            None => (tok.text.as_str(), Polarity::Neutral),
        };
        if !valid_symbol_name(name) {
            return Err(ParseError::at(tok, "invalid symbol name"));
        }
        if alphabet.get(name).is_some() {
            return Err(ParseError::at(tok, "duplicate symbol"));
        }
        if pol != Polarity::Neutral && !polarized {
            return Err(ParseError::at(
                tok,
                "symbol polarization in a system without `cellpol` lines",
            ));
        }
        alphabet
            .intern(name)
            .map_err(|e| ParseError::at(tok, e.to_string()))?;
        symbol_pols.push(pol);
    }
    let scope = Scope { cells, alphabet };

    let mut terminals = Vec::new();
    if let Some(line) = terminals_line {
        for tok in &line[1..] {
            let s = scope.sym(tok)?;
            if terminals.contains(&s) {
                return Err(ParseError::at(tok, "terminal listed twice"));
            }
            if symbol_pols[s.index()] != Polarity::Neutral {
                return Err(ParseError::at(
                    tok,
                    "terminal symbols must have polarization 0",
                ));
            }
            terminals.push(s);
        }
    }

    let init_line = init_line.ok_or_else(|| ParseError::file("missing `init` line"))?;
    let init_cell_tok = init_line
        .get(1)
        .ok_or_else(|| ParseError::eol(init_line, "expected `init <cell> { ... }`"))?;
    let init_cell = scope.cell(init_cell_tok)?;
    let init_multiset = parse_multiset(&scope, init_line, &init_line[2..])?;

    let output_line = output_line.ok_or_else(|| ParseError::file("missing `output` line"))?;
    arity(output_line, 2, "output <cell>")?;
    let output_cell = scope.cell(&output_line[1])?;

    let mut cell_pols = vec![Polarity::Neutral; cell_names.len()];
    let mut pol_seen = HashSet::new();
    for line in &cellpols {
        arity(line, 3, "cellpol <cell> <pol>")?;
        let c = scope.cell(&line[1])?;
        if !pol_seen.insert(c) {
            return Err(ParseError::at(&line[1], "cell polarization given twice"));
        }
        cell_pols[c.index()] = polarity(&line[2], &line[2].text)?;
    }
    if polarized {
        if cell_pols[output_cell.index()] != Polarity::Neutral {
            return Err(ParseError::at(
                &output_line[1],
                "output cell must have polarization 0",
            ));
        }
        let value: i64 = init_multiset
            .iter()
            .map(|(s, n)| symbol_pols[s.index()].value() * n as i64)
            .sum();
        let expected = Polarity::sign_of(value);
        if cell_pols[init_cell.index()] != expected {
            return Err(ParseError::at(
                init_cell_tok,
                format!(
                    "initial multiset has sign {} but the cell has polarization {}",
                    expected.as_str(),
                    cell_pols[init_cell.index()].as_str()
                ),
            ));
        }
    }

    let mut edge_list = Vec::new();
    for line in &edges {
        arity(line, 3, "edge <cell> <cell>")?;
        edge_list.push((scope.cell(&line[1])?, scope.cell(&line[2])?));
    }

    let mut directed_rules = Vec::new();
    let mut targetless = Vec::new();
    for line in &rules {
        let usage = if undirected {
            "rule <cell> : <mutation>"
        } else {
            "rule <cell> : <mutation> @<cell>"
        };
        let source = scope.cell(
            line.get(1)
                .ok_or_else(|| ParseError::eol(line, format!("expected `{usage}`")))?,
        )?;
        match line.get(2) {
            Some(t) if t.text == ":" => {}
            Some(t) => return Err(ParseError::at(t, "expected `:`")),
            None => return Err(ParseError::eol(line, "expected `:`")),
        }
        let mut body = &line[3..];
        let target = match body.last() {
            Some(t) if t.text.starts_with('@') => {
                if undirected {
                    return Err(ParseError::at(
                        t,
                        "rule target given in an undirected system",
                    ));
                }
                let name = &t.text[1..];
                let c = scope
                    .cells
                    .get(name)
                    .copied()
                    .ok_or_else(|| ParseError::at(t, "unknown cell"))?;
                body = &body[..body.len() - 1];
                Some(c)
            }
            _ => None,
        };
        let texts: Vec<&str> = body.iter().map(|t| t.text.as_str()).collect();
        let mutation = match texts.as_slice() {
            ["+", _, "->"] => Mutation::Insert(scope.sym(&body[1])?),
            [_, "-", "->"] => Mutation::Delete(scope.sym(&body[0])?),
            [_, "=>", _] => Mutation::Substitute(scope.sym(&body[0])?, scope.sym(&body[2])?),
            _ => {
                let tok = body.first().unwrap_or(&line[2]);
                return Err(ParseError::at(
                    tok,
                    "expected `+ <b> ->`, `<a> - ->` or `<a> => <b>`",
                ));
            }
        };
        match (target, undirected) {
            (Some(target), _) => directed_rules.push(TpvRule {
                source,
                mutation,
                target,
            }),
            (None, true) => targetless.push((source, mutation)),
            (None, false) => return Err(ParseError::eol(line, "expected `@<cell>` target")),
        }
    }

    let file_error = |e: crate::tpv::SystemError| ParseError::file(e.to_string());
    let Scope { alphabet, .. } = scope;
    if !polarized {
        let sys = TpvSystem::new(
            cell_names,
            alphabet,
            terminals,
            directed_rules,
            init_cell,
            init_multiset,
            output_cell,
        )
        .map_err(file_error)?;
        return Ok(SystemFile::Plain(sys));
    }
    let pol = PolarizationTable::new(cell_pols, symbol_pols);
    let sys = if undirected {
        PtpvSystem::undirected(
            cell_names,
            alphabet,
            terminals,
            targetless,
            edge_list,
            init_cell,
            init_multiset,
            output_cell,
            pol,
        )
    } else {
        TpvSystem::new(
            cell_names,
            alphabet,
            terminals,
            directed_rules,
            init_cell,
            init_multiset,
            output_cell,
        )
        .and_then(|base| PtpvSystem::directed(base, pol))
    }
    .map_err(file_error)?;
    Ok(SystemFile::Polarized(sys))
}

struct Printer<'a> {
    base: &'a TpvSystem,
    pol: Option<&'a PolarizationTable>,
}

impl Printer<'_> {
    fn cell(&self, c: CellId) -> &str {
        self.base.cell_name(c)
    }

    fn header(&self, out: &mut String) -> fmt::Result {
        let base = self.base;
        write!(out, "cells")?;
        for c in base.cells() {
            write!(out, " {}", self.cell(c))?;
        }
        write!(out, "\nalphabet")?;
        for s in base.alphabet().symbols() {
            write!(out, " {}", base.alphabet().name(s))?;
            match self.pol.and_then(|p| p.symbol(s)) {
                Some(Polarity::Positive) => write!(out, ":+1")?,
                Some(Polarity::Negative) => write!(out, ":-1")?,
                _ => {}
            }
        }
        write!(out, "\nterminals")?;
        for &t in base.terminals() {
            write!(out, " {}", base.alphabet().name(t))?;
        }
        writeln!(out)?;
        let init = base.init_multiset().display(base.alphabet()).to_string();
        let inner = init.trim_start_matches('{').trim_end_matches('}');
        if inner.is_empty() {
            writeln!(out, "init {} {{ }}", self.cell(base.init_cell()))?;
        } else {
            writeln!(out, "init {} {{ {inner} }}", self.cell(base.init_cell()))?;
        }
        writeln!(out, "output {}", self.cell(base.output_cell()))?;
        if let Some(pol) = self.pol {
            for c in base.cells() {
                let p = pol.cell(c).unwrap_or(Polarity::Neutral);
                writeln!(out, "cellpol {} {}", self.cell(c), p.as_str())?;
            }
        }
        Ok(())
    }
}

/// Canonical text of a plain system.
pub fn print_tpv(sys: &TpvSystem) -> String {
    let mut out = String::new();
    let p = Printer {
        base: sys,
        pol: None,
    };
    p.header(&mut out).expect("writing to a string");
    for r in sys.rules() {
        let _ = writeln!(
            out,
            "rule {} : {} @{}",
            p.cell(r.source),
            r.mutation.display(sys.alphabet()),
            p.cell(r.target)
        );
    }
    out
}

/// Canonical text of a polarized system.
pub fn print_ptpv(sys: &PtpvSystem) -> String {
    let mut out = String::new();
    let base = sys.base();
    let p = Printer {
        base,
        pol: Some(sys.polarization()),
    };
    p.header(&mut out).expect("writing to a string");
    match sys.communication() {
        Communication::Directed => {
            for r in base.rules() {
                let _ = writeln!(
                    out,
                    "rule {} : {} @{}",
                    p.cell(r.source),
                    r.mutation.display(base.alphabet()),
                    p.cell(r.target)
                );
            }
        }
        Communication::Undirected { edges, rules } => {
            for &(i, j) in edges {
                let _ = writeln!(out, "edge {} {}", p.cell(i), p.cell(j));
            }
            for (c, m) in rules {
                let _ = writeln!(out, "rule {} : {}", p.cell(*c), m.display(base.alphabet()));
            }
        }
    }
    out
}

pub fn print_system(file: &SystemFile) -> String {
    match file {
        SystemFile::Plain(s) => print_tpv(s),
        SystemFile::Polarized(s) => print_ptpv(s),
    }
}
