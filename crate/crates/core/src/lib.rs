//! Vesicle systems: multisets moving between cells under point mutations.

pub mod cli;
pub mod constructions;
pub mod dot;
pub mod multiset;
pub mod ptpv;
pub mod regmach;
pub mod search;
pub mod text;
pub mod tpv;
pub mod trace;
