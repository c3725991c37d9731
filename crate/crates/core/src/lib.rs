//! Multilingual call-graph construction for codebases mixing C, Python and
//! JavaScript.

pub mod callgraph;
pub mod dataflow;
pub mod dot;
pub mod expr;
pub mod frontend;
pub mod model;
pub mod table;
pub mod interop;
pub mod merge;
pub mod pipeline;
