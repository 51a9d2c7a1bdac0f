//! The `.qdn.json` network definition format and result table emission.
//!
//! A document carries the register rank chain, the initial monomial, the
//! per-stage rewrite rules with explicit (re, im) coefficient pairs, and an
//! optional outcome query list. Monomials always serialize as ascending
//! index lists. Parsing performs structural checks only (index ranges, rank
//! chaining); semi-unitarity is the job of program validation.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use num_complex::Complex64;

use crate::error::QdnError;
use crate::register::{ProbabilityTable, SignalMonomial};
use crate::stage::{NetworkProgram, Passthrough, RewriteRule, StageMap};

/// The only understood document version.
pub const NETDEF_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetdefError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported document version {0} (expected {NETDEF_VERSION})")]
    Version(u32),
    #[error("{path}: {message}")]
    Structure { path: String, message: String },
    #[error("document is not valid UTF-8")]
    Utf8,
}

fn structure<T: fmt::Display>(path: String, message: T) -> NetdefError {
    NetdefError::Structure {
        path,
        message: message.to_string(),
    }
}

/// A parsed network definition document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDefDocument {
    pub version: u32,
    /// Register ranks r_0..r_N; stage n maps rank r_n to rank r_{n+1}.
    pub register_ranks: Vec<u32>,
    /// Initial monomial as an ascending index list over the first register.
    pub initial: Vec<u32>,
    pub stages: Vec<StageDef>,
    /// Optional outcome selection; `"all"` or a list of monomials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<Queries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDef {
    pub rules: Vec<RuleDef>,
    pub passthrough: PassthroughDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDef {
    /// Source monomial (must be a single generator index).
    pub from: Vec<u32>,
    pub to: Vec<TargetDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDef {
    pub re: f64,
    pub im: f64,
    pub monomial: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassthroughDef {
    Strict,
    Identity,
}

/// Outcome queries: everything in the final support, or a fixed list.
#[derive(Debug, Clone, PartialEq)]
pub enum Queries {
    All,
    Monomials(Vec<Vec<u32>>),
}

impl Serialize for Queries {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Queries::All => serializer.serialize_str("all"),
            Queries::Monomials(list) => list.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for Queries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct QueriesVisitor;

        impl<'de> Visitor<'de> for QueriesVisitor {
            type Value = Queries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("the string \"all\" or a list of monomial index lists")
            }

            fn visit_str<E: de::Error>(self, value: &str) -> Result<Queries, E> {
                if value == "all" {
                    Ok(Queries::All)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(value), &self))
                }
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Queries, A::Error> {
                let mut list = Vec::new();
                while let Some(item) = seq.next_element::<Vec<u32>>()? {
                    list.push(item);
                }
                Ok(Queries::Monomials(list))
            }
        }

        deserializer.deserialize_any(QueriesVisitor)
    }
}

/// Parses and structurally validates a document.
pub fn parse_netdef(bytes: &[u8]) -> Result<NetDefDocument, NetdefError> {
    let text = std::str::from_utf8(bytes).map_err(|_| NetdefError::Utf8)?;
    let document: NetDefDocument = serde_json::from_str(text).map_err(|e| NetdefError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate_document(&document)?;
    Ok(document)
}

/// Serializes a document deterministically (pretty JSON, trailing newline).
pub fn serialize_netdef(document: &NetDefDocument) -> Vec<u8> {
    let mut bytes =
        serde_json::to_vec_pretty(document).expect("document serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

fn ascending(indices: &[u32]) -> bool {
    indices.windows(2).all(|pair| pair[0] < pair[1])
}

/// Structural checks: version, rank chaining, index ranges, rule shapes.
pub fn validate_document(document: &NetDefDocument) -> Result<(), NetdefError> {
    if document.version != NETDEF_VERSION {
        return Err(NetdefError::Version(document.version));
    }
    if document.register_ranks.is_empty() {
        return Err(structure(
            "register_ranks".into(),
            "at least one register rank is required",
        ));
    }
    for (i, &rank) in document.register_ranks.iter().enumerate() {
        if rank == 0 || rank > 64 {
            return Err(structure(
                format!("register_ranks[{i}]"),
                format!("rank {rank} out of range (1..=64)"),
            ));
        }
    }
    if document.stages.len() + 1 != document.register_ranks.len() {
        return Err(structure(
            "stages".into(),
            format!(
                "{} register ranks declare {} stages, found {}",
                document.register_ranks.len(),
                document.register_ranks.len() - 1,
                document.stages.len()
            ),
        ));
    }
    if !ascending(&document.initial) {
        return Err(structure(
            "initial".into(),
            "indices must be strictly ascending",
        ));
    }
    let first_rank = document.register_ranks[0];
    for (i, &index) in document.initial.iter().enumerate() {
        if index >= first_rank {
            return Err(structure(
                format!("initial[{i}]"),
                format!("index {index} out of declared rank {first_rank}"),
            ));
        }
    }
    for (s, stage) in document.stages.iter().enumerate() {
        let in_rank = document.register_ranks[s];
        let out_rank = document.register_ranks[s + 1];
        let mut sources = std::collections::BTreeSet::new();
        for (r, rule) in stage.rules.iter().enumerate() {
            let path = format!("stages[{s}].rules[{r}]");
            if rule.from.len() != 1 {
                return Err(structure(
                    format!("{path}.from"),
                    "rule source must be a single generator index",
                ));
            }
            let from = rule.from[0];
            if from >= in_rank {
                return Err(structure(
                    format!("{path}.from"),
                    format!("index {from} out of declared rank {in_rank}"),
                ));
            }
            if !sources.insert(from) {
                return Err(structure(
                    format!("{path}.from"),
                    format!("duplicate rule for generator {from}"),
                ));
            }
            if rule.to.is_empty() {
                return Err(structure(format!("{path}.to"), "rule has no targets"));
            }
            let mut seen = std::collections::BTreeSet::new();
            for (t, target) in rule.to.iter().enumerate() {
                let target_path = format!("{path}.to[{t}]");
                if !target.re.is_finite() || !target.im.is_finite() {
                    return Err(structure(
                        target_path,
                        "coefficient must be finite".to_string(),
                    ));
                }
                if !ascending(&target.monomial) {
                    return Err(structure(
                        format!("{target_path}.monomial"),
                        "indices must be strictly ascending",
                    ));
                }
                for &index in &target.monomial {
                    if index >= out_rank {
                        return Err(structure(
                            format!("{target_path}.monomial"),
                            format!("index {index} out of declared rank {out_rank}"),
                        ));
                    }
                }
                if !seen.insert(target.monomial.clone()) {
                    return Err(structure(
                        format!("{path}.to"),
                        "target monomials must be pairwise distinct",
                    ));
                }
            }
        }
    }
    if let Some(Queries::Monomials(list)) = &document.queries {
        let last_rank = *document.register_ranks.last().expect("nonempty");
        for (i, monomial) in list.iter().enumerate() {
            if !ascending(monomial) {
                return Err(structure(
                    format!("queries[{i}]"),
                    "indices must be strictly ascending",
                ));
            }
            for &index in monomial {
                if index >= last_rank {
                    return Err(structure(
                        format!("queries[{i}]"),
                        format!("index {index} out of declared rank {last_rank}"),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Compiles a structurally valid document into an executable program.
/// Total on parse-valid documents; semantic failures surface later, at
/// program validation.
pub fn compile(document: &NetDefDocument) -> Result<NetworkProgram, NetdefError> {
    validate_document(document)?;
    let raise = |e: QdnError| structure("document".into(), e);
    let initial = SignalMonomial::from_indices(&document.initial).map_err(raise)?;
    let mut stages = Vec::with_capacity(document.stages.len());
    for (s, stage) in document.stages.iter().enumerate() {
        let mut rules = Vec::with_capacity(stage.rules.len());
        for rule in &stage.rules {
            let targets = rule
                .to
                .iter()
                .map(|t| {
                    SignalMonomial::from_indices(&t.monomial)
                        .map(|m| (Complex64::new(t.re, t.im), m))
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(raise)?;
            rules.push(RewriteRule::for_generator(rule.from[0], targets).map_err(raise)?);
        }
        let passthrough = match stage.passthrough {
            PassthroughDef::Strict => Passthrough::Strict,
            PassthroughDef::Identity => Passthrough::Identity,
        };
        stages.push(
            StageMap::new(
                document.register_ranks[s],
                document.register_ranks[s + 1],
                rules,
                passthrough,
            )
            .map_err(raise)?,
        );
    }
    NetworkProgram::new(initial, document.register_ranks[0], stages).map_err(raise)
}

/// Renders a program back into a document (the inverse of [`compile`]).
pub fn document_from_program(
    program: &NetworkProgram,
    queries: Option<Queries>,
) -> NetDefDocument {
    let stages = program
        .stages()
        .iter()
        .map(|stage| StageDef {
            rules: stage
                .rules()
                .map(|(generator, rule)| RuleDef {
                    from: vec![generator],
                    to: rule
                        .targets()
                        .iter()
                        .map(|(coeff, monomial)| TargetDef {
                            re: coeff.re,
                            im: coeff.im,
                            monomial: monomial.indices(),
                        })
                        .collect(),
                })
                .collect(),
            passthrough: match stage.passthrough() {
                Passthrough::Strict => PassthroughDef::Strict,
                Passthrough::Identity => PassthroughDef::Identity,
            },
        })
        .collect();
    NetDefDocument {
        version: NETDEF_VERSION,
        register_ranks: program.ranks().to_vec(),
        initial: program.initial().indices(),
        stages,
        queries,
    }
}

/// Applies a document's query selection to a run's probability table.
pub fn apply_queries(
    table: &ProbabilityTable,
    queries: Option<&Queries>,
) -> Result<ProbabilityTable, NetdefError> {
    match queries {
        None | Some(Queries::All) => Ok(table.clone()),
        Some(Queries::Monomials(list)) => {
            let monomials = list
                .iter()
                .enumerate()
                .map(|(i, indices)| {
                    SignalMonomial::from_indices(indices)
                        .map_err(|e| structure(format!("queries[{i}]"), e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(table.restricted_to(&monomials))
        }
    }
}

/// Output encodings for probability tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultsFormat {
    Json,
    Csv,
}

#[derive(Serialize)]
struct ResultsJson {
    register_rank: u32,
    rows: Vec<ResultsRowJson>,
}

#[derive(Serialize)]
struct ResultsRowJson {
    monomial: Vec<u32>,
    basis_index: u64,
    amp_re: f64,
    amp_im: f64,
    probability: f64,
}

/// Emits a probability table deterministically, rows in ascending
/// basis-index order as produced by the engine.
pub fn emit_results(table: &ProbabilityTable, format: ResultsFormat) -> Vec<u8> {
    match format {
        ResultsFormat::Json => {
            let payload = ResultsJson {
                register_rank: table.register_rank,
                rows: table
                    .rows
                    .iter()
                    .map(|row| ResultsRowJson {
                        monomial: row.monomial.indices(),
                        basis_index: row.basis_index,
                        amp_re: row.amplitude.re,
                        amp_im: row.amplitude.im,
                        probability: row.probability,
                    })
                    .collect(),
            };
            let mut bytes =
                serde_json::to_vec_pretty(&payload).expect("table serialization cannot fail");
            bytes.push(b'\n');
            bytes
        }
        ResultsFormat::Csv => {
            let mut out = String::from("monomial,basis_index,amp_re,amp_im,probability\n");
            for row in &table.rows {
                let indices = row
                    .monomial
                    .indices()
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(";");
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    indices, row.basis_index, row.amplitude.re, row.amplitude.im, row.probability
                ));
            }
            out.into_bytes()
        }
    }
}
