//! The table of interoperability APIs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::model::Language;
use crate::table::{read_table, FieldError, Schema, TableError, TableRow};

/// The registry shipped with the crate.
pub const DEFAULT_REGISTRY: &str = include_str!("../../registry/default.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ApiClass {
    /// Executes a code string.
    Anonymous,
    /// Executes a file by name.
    FileBased,
    /// Calls a named procedure.
    ProcedureBased,
}

impl ApiClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ApiClass::Anonymous => "Anonymous",
            ApiClass::FileBased => "FileBased",
            ApiClass::ProcedureBased => "ProcedureBased",
        }
    }
}

impl fmt::Display for ApiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ApiClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Anonymous" => Ok(ApiClass::Anonymous),
            "FileBased" => Ok(ApiClass::FileBased),
            "ProcedureBased" => Ok(ApiClass::ProcedureBased),
            other => Err(format!("unknown api class `{other}`")),
        }
    }
}

/// The call that binds a handle (or file object) to a name, and which of its
/// arguments carries the name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binder {
    pub api: String,
    pub name_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiEntry {
    pub api_name: String,
    pub source_language: Language,
    pub target_language: Language,
    pub api_class: ApiClass,
    pub payload_arg_index: usize,
    pub binder: Option<Binder>,
    pub arg_packer: Option<String>,
}

impl TableRow for ApiEntry {
    const SCHEMA: Schema = Schema {
        name: "registry",
        header: &[
            "api_name",
            "source_language",
            "target_language",
            "api_class",
            "payload_arg_index",
            "binder_api",
            "binder_name_index",
            "arg_packer",
        ],
    };

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.api_name.clone(),
            self.source_language.to_string(),
            self.target_language.to_string(),
            self.api_class.to_string(),
            self.payload_arg_index.to_string(),
            self.binder.as_ref().map(|b| b.api.clone()).unwrap_or_default(),
            self.binder.as_ref().map(|b| b.name_index.to_string()).unwrap_or_default(),
            self.arg_packer.clone().unwrap_or_default(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, FieldError> {
        let lang = |col: &'static str, s: &str| s.parse::<Language>().map_err(|e| FieldError::new(col, e));
        let index = |col: &'static str, s: &str| {
            s.parse::<usize>()
                .map_err(|e| FieldError::new(col, format!("`{s}`: {e}")))
        };
        if f[0].is_empty() {
            return Err(FieldError::new("api_name", "empty"));
        }
        let binder = match (f[5], f[6]) {
            ("", "") => None,
            ("", _) => return Err(FieldError::new("binder_api", "name index given without a binder")),
            (api, idx) => Some(Binder {
                api: api.to_string(),
                name_index: if idx.is_empty() { 0 } else { index("binder_name_index", idx)? },
            }),
        };
        Ok(ApiEntry {
            api_name: f[0].to_string(),
            source_language: lang("source_language", f[1])?,
            target_language: lang("target_language", f[2])?,
            api_class: f[3].parse().map_err(|e| FieldError::new("api_class", e))?,
            payload_arg_index: index("payload_arg_index", f[4])?,
            binder,
            arg_packer: (!f[7].is_empty()).then(|| f[7].to_string()),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("registry: {0}")]
    Table(#[from] TableError),
    #[error("registry entry {index} ({api}): {message}")]
    Entry {
        /// Zero-based position among the data rows.
        index: usize,
        api: String,
        message: String,
    },
}

impl RegistryError {
    /// Zero-based entry index the error refers to, when known.
    pub fn index(&self) -> Option<usize> {
        match self {
            RegistryError::Entry { index, .. } => Some(*index),
            RegistryError::Table(TableError::ColumnCount { row, .. } | TableError::InvalidField { row, .. }) => {
                Some(row - 1)
            }
            RegistryError::Table(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiRegistry {
    entries: Vec<ApiEntry>,
}

impl ApiRegistry {
    pub fn new(entries: Vec<ApiEntry>) -> Result<Self, RegistryError> {
        let mut keys = BTreeSet::new();
        for (index, e) in entries.iter().enumerate() {
            let bad = |message: &str| RegistryError::Entry {
                index,
                api: e.api_name.clone(),
                message: message.to_string(),
            };
            if !keys.insert((e.source_language, e.api_name.clone(), e.api_class)) {
                return Err(bad("duplicate (source_language, api_name, api_class)"));
            }
            if e.source_language == e.target_language {
                return Err(bad("source and target language are equal"));
            }
            if !e.source_language.has_frontend() {
                return Err(bad("source language has no frontend"));
            }
            match e.api_class {
                ApiClass::Anonymous if e.binder.is_some() || e.arg_packer.is_some() => {
                    return Err(bad("Anonymous entries take no binder or packer"));
                }
                ApiClass::FileBased if e.arg_packer.is_some() => {
                    return Err(bad("FileBased entries take no packer"));
                }
                _ => {}
            }
        }
        // an API with several roles needs a binder on all but one of them
        for (index, e) in entries.iter().enumerate() {
            let unbound = entries
                .iter()
                .filter(|o| o.source_language == e.source_language && o.api_name == e.api_name && o.binder.is_none())
                .count();
            let roles = entries
                .iter()
                .filter(|o| o.source_language == e.source_language && o.api_name == e.api_name)
                .count();
            if roles > 1 && unbound > 1 {
                return Err(RegistryError::Entry {
                    index,
                    api: e.api_name.clone(),
                    message: "several roles of one API without a binder to tell them apart".into(),
                });
            }
        }
        Ok(ApiRegistry { entries })
    }

    /// The shipped registry.
    pub fn builtin() -> Self {
        load_registry(DEFAULT_REGISTRY).expect("shipped registry is valid")
    }

    pub fn entries(&self) -> &[ApiEntry] {
        &self.entries
    }

    /// Entries for a callee in a source language, in registry order.
    pub fn lookup(&self, language: Language, callee: &str) -> Vec<&ApiEntry> {
        self.entries
            .iter()
            .filter(|e| e.source_language == language && e.api_name == callee)
            .collect()
    }

    pub fn matches(&self, language: Language, callee: &str) -> bool {
        self.entries
            .iter()
            .any(|e| e.source_language == language && e.api_name == callee)
    }

    /// Target languages reachable through the registry.
    pub fn target_languages(&self) -> BTreeSet<Language> {
        self.entries.iter().map(|e| e.target_language).collect()
    }
}

pub fn load_registry(text: &str) -> Result<ApiRegistry, RegistryError> {
    let entries: Vec<ApiEntry> = read_table(text.as_bytes())?;
    ApiRegistry::new(entries)
}
