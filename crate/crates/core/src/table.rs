//! Tabular files exchanged between stages.
//!
//! Every table is RFC-4180 CSV, UTF-8, with a mandatory header row and LF
//! line endings. Rows are written and read back in order.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::dataflow::DefSite;
use crate::expr::{decode_args, encode_args, Expr};
use crate::model::{Label, Language, NodeFlag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub header: &'static [&'static str],
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.csv", self.name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{schema}: expected header {expected:?}, found {found:?}")]
    SchemaMismatch {
        schema: Schema,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{schema}: row {row} has {found} fields, expected {expected}")]
    ColumnCount {
        schema: Schema,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{schema}: row {row}, column `{column}`: {message}")]
    InvalidField {
        schema: Schema,
        row: usize,
        column: &'static str,
        message: String,
    },
    #[error("{schema}: malformed CSV: {message}")]
    MalformedCsv { schema: Schema, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl TableError {
    /// True for the header/column-count family of errors.
    pub fn is_schema_mismatch(&self) -> bool {
        matches!(self, TableError::SchemaMismatch { .. } | TableError::ColumnCount { .. })
    }
}

/// Raised by [`TableRow::from_fields`]; the reader attaches the row number.
#[derive(Debug)]
pub struct FieldError {
    pub column: &'static str,
    pub message: String,
}

impl FieldError {
    pub fn new(column: &'static str, message: impl fmt::Display) -> Self {
        FieldError {
            column,
            message: message.to_string(),
        }
    }
}

pub trait TableRow: Sized {
    const SCHEMA: Schema;

    fn to_fields(&self) -> Vec<String>;

    fn from_fields(fields: &[&str]) -> Result<Self, FieldError>;
}

pub fn write_table<R: TableRow>(rows: &[R]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_table_to(&mut buf, rows).expect("writing to a Vec cannot fail");
    buf
}

pub fn write_table_to<R: TableRow, W: Write>(out: W, rows: &[R]) -> Result<(), TableError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(out);
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => TableError::Io(io),
        other => TableError::MalformedCsv {
            schema: R::SCHEMA,
            message: format!("{other:?}"),
        },
    };
    w.write_record(R::SCHEMA.header).map_err(csv_err)?;
    for r in rows {
        let fields = r.to_fields();
        debug_assert_eq!(fields.len(), R::SCHEMA.header.len());
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table<R: TableRow>(bytes: &[u8]) -> Result<Vec<R>, TableError> {
    let schema = R::SCHEMA;
    let text = std::str::from_utf8(bytes).map_err(|e| TableError::MalformedCsv {
        schema,
        message: format!("not UTF-8: {e}"),
    })?;
    // Quotes in RFC-4180 come in pairs; an odd count means an unterminated field.
    if text.bytes().filter(|&b| b == b'"').count() % 2 == 1 {
        return Err(TableError::MalformedCsv {
            schema,
            message: "unbalanced quotes".into(),
        });
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| TableError::MalformedCsv {
            schema,
            message: e.to_string(),
        })?,
        None => {
            return Err(TableError::SchemaMismatch {
                schema,
                expected: schema.header.iter().map(|s| s.to_string()).collect(),
                found: Vec::new(),
            })
        }
    };
    if header.iter().ne(schema.header.iter().copied()) {
        return Err(TableError::SchemaMismatch {
            schema,
            expected: schema.header.iter().map(|s| s.to_string()).collect(),
            found: header.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| TableError::MalformedCsv {
            schema,
            message: e.to_string(),
        })?;
        if rec.len() != schema.header.len() {
            return Err(TableError::ColumnCount {
                schema,
                row,
                expected: schema.header.len(),
                found: rec.len(),
            });
        }
        let fields: Vec<&str> = rec.iter().collect();
        let parsed = R::from_fields(&fields).map_err(|e| TableError::InvalidField {
            schema,
            row,
            column: e.column,
            message: e.message,
        })?;
        out.push(parsed);
    }
    Ok(out)
}

pub fn read_table_file<R: TableRow>(path: &std::path::Path) -> Result<Vec<R>, TableError> {
    read_table(&std::fs::read(path)?)
}

pub fn write_table_file<R: TableRow>(path: &std::path::Path, rows: &[R]) -> Result<(), TableError> {
    std::fs::write(path, write_table(rows))?;
    Ok(())
}

fn parse_index(column: &'static str, s: &str) -> Result<usize, FieldError> {
    s.parse::<usize>().map_err(|e| FieldError::new(column, format!("`{s}`: {e}")))
}

fn parse_lang(column: &'static str, s: &str) -> Result<Language, FieldError> {
    Language::from_str(s).map_err(|e| FieldError::new(column, e))
}

fn parse_opt_lang(column: &'static str, s: &str) -> Result<Option<Language>, FieldError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_lang(column, s).map(Some)
    }
}

fn parse_args(column: &'static str, s: &str) -> Result<Vec<Expr>, FieldError> {
    decode_args(s).map_err(|e| FieldError::new(column, e))
}

fn opt_lang(l: Option<Language>) -> String {
    l.map(|l| l.as_str().to_string()).unwrap_or_default()
}

/// `calls.csv`: one row per call site (after interop: per rewritten node).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallRow {
    pub unit_id: String,
    pub language: Language,
    pub label: Label,
    pub callee: String,
    pub args: Vec<Expr>,
    pub flag: NodeFlag,
    pub target_language: Option<Language>,
}

impl TableRow for CallRow {
    const SCHEMA: Schema = Schema {
        name: "calls",
        header: &["unit_id", "language", "scope", "index", "callee", "args", "flag", "target_language"],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.unit_id.clone(),
            self.language.to_string(),
            self.label.scope.clone(),
            self.label.index.to_string(),
            self.callee.clone(),
            encode_args(&self.args),
            self.flag.as_str().to_string(),
            opt_lang(self.target_language),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        Ok(CallRow {
            unit_id: f[0].to_string(),
            language: parse_lang("language", f[1])?,
            label: Label::new(f[2], parse_index("index", f[3])?),
            callee: f[4].to_string(),
            args: parse_args("args", f[5])?,
            flag: f[6].parse().map_err(|e: String| FieldError::new("flag", e))?,
            target_language: parse_opt_lang("target_language", f[7])?,
        })
    }
}

/// Right-hand-side shape tag stored next to the encoded value.
pub fn rhs_kind(e: &Expr) -> &'static str {
    match e {
        Expr::StringLiteral(_) => "literal",
        Expr::VarRef(_) => "var",
        Expr::Concat(..) => "concat",
        Expr::Call { .. } => "call",
        Expr::Dynamic(_) => "dynamic",
    }
}

/// `assigns.csv`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignRow {
    pub unit_id: String,
    pub label: Label,
    pub variable: String,
    pub rhs: Expr,
}

impl TableRow for AssignRow {
    const SCHEMA: Schema = Schema {
        name: "assigns",
        header: &["unit_id", "scope", "index", "variable", "rhs_kind", "rhs_value"],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.unit_id.clone(),
            self.label.scope.clone(),
            self.label.index.to_string(),
            self.variable.clone(),
            rhs_kind(&self.rhs).to_string(),
            self.rhs.encode(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        let rhs = Expr::decode(f[5]).map_err(|e| FieldError::new("rhs_value", e))?;
        if rhs_kind(&rhs) != f[4] {
            return Err(FieldError::new(
                "rhs_kind",
                format!("`{}` does not match value kind `{}`", f[4], rhs_kind(&rhs)),
            ));
        }
        Ok(AssignRow {
            unit_id: f[0].to_string(),
            label: Label::new(f[1], parse_index("index", f[2])?),
            variable: f[3].to_string(),
            rhs,
        })
    }
}

/// `rflow.csv`: an edge of the reverse control-flow graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FlowRow {
    pub unit_id: String,
    pub scope: String,
    pub from_index: usize,
    pub to_index: usize,
}

impl TableRow for FlowRow {
    const SCHEMA: Schema = Schema {
        name: "rflow",
        header: &["unit_id", "scope", "from_index", "to_index"],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.unit_id.clone(),
            self.scope.clone(),
            self.from_index.to_string(),
            self.to_index.to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        Ok(FlowRow {
            unit_id: f[0].to_string(),
            scope: f[1].to_string(),
            from_index: parse_index("from_index", f[2])?,
            to_index: parse_index("to_index", f[3])?,
        })
    }
}

/// `rdefs.csv`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RdefRow {
    pub unit_id: String,
    pub scope: String,
    pub use_index: usize,
    pub variable: String,
    pub def: DefSite,
}

impl TableRow for RdefRow {
    const SCHEMA: Schema = Schema {
        name: "rdefs",
        header: &["unit_id", "scope", "use_index", "variable", "def_index"],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.unit_id.clone(),
            self.scope.clone(),
            self.use_index.to_string(),
            self.variable.clone(),
            self.def.to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        Ok(RdefRow {
            unit_id: f[0].to_string(),
            scope: f[1].to_string(),
            use_index: parse_index("use_index", f[2])?,
            variable: f[3].to_string(),
            def: f[4].parse().map_err(|e| FieldError::new("def_index", e))?,
        })
    }
}

/// `mcg.csv`: one row per node of the final graph, root first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McgRow {
    pub node_id: String,
    pub parent_id: Option<String>,
    pub proc: String,
    pub unit_id: String,
    pub label: Label,
    pub language: Language,
    pub target_language: Option<Language>,
    pub args: Vec<Expr>,
    pub flag: NodeFlag,
}

impl TableRow for McgRow {
    const SCHEMA: Schema = Schema {
        name: "mcg",
        header: &[
            "node_id",
            "parent_id",
            "proc",
            "unit_id",
            "scope",
            "index",
            "language",
            "target_language",
            "args",
            "flag",
        ],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.node_id.clone(),
            self.parent_id.clone().unwrap_or_default(),
            self.proc.clone(),
            self.unit_id.clone(),
            self.label.scope.clone(),
            self.label.index.to_string(),
            self.language.to_string(),
            opt_lang(self.target_language),
            encode_args(&self.args),
            self.flag.as_str().to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        if f[0].is_empty() {
            return Err(FieldError::new("node_id", "empty node id"));
        }
        Ok(McgRow {
            node_id: f[0].to_string(),
            parent_id: (!f[1].is_empty()).then(|| f[1].to_string()),
            proc: f[2].to_string(),
            unit_id: f[3].to_string(),
            label: Label::new(f[4], parse_index("index", f[5])?),
            language: parse_lang("language", f[6])?,
            target_language: parse_opt_lang("target_language", f[7])?,
            args: parse_args("args", f[8])?,
            flag: f[9].parse().map_err(|e: String| FieldError::new("flag", e))?,
        })
    }
}

/// `unit.csv`: per-unit manifest (id, language, path, defined procedures).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitRow {
    pub unit_id: String,
    pub language: Language,
    pub path: String,
    pub procs: BTreeSet<String>,
}

impl TableRow for UnitRow {
    const SCHEMA: Schema = Schema {
        name: "unit",
        header: &["unit_id", "language", "path", "procs"],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.unit_id.clone(),
            self.language.to_string(),
            self.path.clone(),
            serde_json::to_string(&self.procs).expect("string set serializes"),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        Ok(UnitRow {
            unit_id: f[0].to_string(),
            language: parse_lang("language", f[1])?,
            path: f[2].to_string(),
            procs: serde_json::from_str(f[3]).map_err(|e| FieldError::new("procs", e))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn call_row(args: Vec<Expr>) -> CallRow {
        CallRow {
            unit_id: "main.c".into(),
            language: Language::C,
            label: Label::main(3),
            callee: "f".into(),
            args,
            flag: NodeFlag::None,
            target_language: None,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let bytes = write_table::<CallRow>(&[]);
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "unit_id,language,scope,index,callee,args,flag,target_language\n"
        );
        assert!(read_table::<CallRow>(&bytes).unwrap().is_empty());
    }

    #[test]
    fn comma_in_argument_survives() {
        let rows = vec![call_row(vec![Expr::literal("a,b")])];
        let bytes = write_table(&rows);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(r#""[""\""a,b\""""]""#));
        assert_eq!(read_table::<CallRow>(&bytes).unwrap(), rows);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let err = read_table::<CallRow>(b"unit_id,language\nx,C\n").unwrap_err();
        assert!(err.is_schema_mismatch(), "{err}");
        let err = read_table::<FlowRow>(b"").unwrap_err();
        assert!(err.is_schema_mismatch());
    }

    #[test]
    fn wrong_column_count_is_reported() {
        let err = read_table::<FlowRow>(b"unit_id,scope,from_index,to_index\nu,s,1\n").unwrap_err();
        assert!(matches!(err, TableError::ColumnCount { row: 1, found: 3, .. }), "{err}");
    }

    #[test]
    fn unbalanced_quotes_are_malformed() {
        let err = read_table::<FlowRow>(b"unit_id,scope,from_index,to_index\n\"u,s,1,0\n").unwrap_err();
        assert!(matches!(err, TableError::MalformedCsv { .. }), "{err}");
    }

    #[test]
    fn bad_field_names_column() {
        let err = read_table::<FlowRow>(b"unit_id,scope,from_index,to_index\nu,s,x,0\n").unwrap_err();
        assert!(matches!(err, TableError::InvalidField { column: "from_index", .. }), "{err}");
    }

    #[test]
    fn rhs_kind_must_agree() {
        let err = read_table::<AssignRow>(b"unit_id,scope,index,variable,rhs_kind,rhs_value\nu,main-body,0,x,var,\"\"\"a\"\"\"\n")
            .unwrap_err();
        assert!(matches!(err, TableError::InvalidField { column: "rhs_kind", .. }), "{err}");
    }

    fn arb_flat_expr() -> impl Strategy<Value = Expr> {
        prop_oneof![
            "[ -~]{0,12}".prop_map(Expr::StringLiteral),
            "[a-z_][a-z0-9_]{0,5}".prop_map(Expr::VarRef),
            "[ -~\n]{0,12}".prop_map(Expr::Dynamic),
            ("[ -~]{0,4}", "[a-z]{1,4}").prop_map(|(a, b)| Expr::concat(Expr::literal(a), Expr::var(b))),
        ]
    }

    fn arb_call_row() -> impl Strategy<Value = CallRow> {
        (
            "[a-z/]{1,8}\\.(c|py|js)",
            prop::sample::select(Language::ALL.to_vec()),
            "[a-z-]{1,6}",
            0usize..50,
            "[A-Za-z_.]{1,10}",
            prop::collection::vec(arb_flat_expr(), 0..4),
            prop::sample::select(vec![NodeFlag::None, NodeFlag::AnonymousDynamic, NodeFlag::Recursive]),
            prop::option::of(prop::sample::select(Language::ALL.to_vec())),
        )
            .prop_map(|(unit_id, language, scope, index, callee, args, flag, target_language)| CallRow {
                unit_id,
                language,
                label: Label::new(scope, index),
                callee,
                args,
                flag,
                target_language,
            })
    }

    proptest! {
        #[test]
        fn call_rows_round_trip_in_order(rows in prop::collection::vec(arb_call_row(), 0..12)) {
            let back: Vec<CallRow> = read_table(&write_table(&rows)).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
