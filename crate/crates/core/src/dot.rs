//! Graphviz export of communication graphs.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::multiset::CellId;
use crate::ptpv::Communication;
use crate::text::SystemFile;
use crate::tpv::comm_graph;

/// DOT text: a `digraph` for rule-directed systems, a `graph` for
/// undirected ones. Polarized nodes carry their polarization as `⟨+⟩`,
/// `⟨0⟩` or `⟨−⟩`.
pub fn emit_dot(file: &SystemFile) -> String {
    let base = file.base();
    let pol = match file {
        SystemFile::Plain(_) => None,
        SystemFile::Polarized(s) => Some(s),
    };
    let (keyword, arrow, edges): (&str, &str, BTreeSet<(CellId, CellId)>) =
        match pol.map(|s| s.communication()) {
            Some(Communication::Undirected { edges, .. }) => ("graph", "--", edges.clone()),
            _ => (
                "digraph",
                "->",
                comm_graph(base).edges.into_iter().collect(),
            ),
        };
    let mut out = String::new();
    let _ = writeln!(out, "{keyword} vesicle {{");
    for c in base.cells() {
        let name = base.cell_name(c);
        match pol {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "  \"{name}\" [label=\"{name} ⟨{}⟩\"];",
                    s.cell_polarity(c).glyph()
                );
            }
            None => {
                let _ = writeln!(out, "  \"{name}\";");
            }
        }
    }
    for (i, j) in edges {
        let _ = writeln!(
            out,
            "  \"{}\" {arrow} \"{}\";",
            base.cell_name(i),
            base.cell_name(j)
        );
    }
    out.push_str("}\n");
    out
}
