//! Batch compiler and validator for structured assurance cases.
//!
//! The pipeline turns a directory of CSV template worksheets into a typed
//! claims-argument-evidence graph, audits it for completeness and structural
//! soundness, and emits canonical JSON, DOT diagrams, and Markdown reports.
//!
//! Modules follow the pipeline order: [`taxonomy`] defines the decomposition
//! frame, [`ingest`] parses workbooks, [`builder`] constructs the
//! [`model::AssuranceCase`], [`validate`] audits it, [`emit`] serializes.

pub mod builder;
pub mod cli;
pub mod emit;
pub mod ingest;
pub mod model;
mod par;
pub mod taxonomy;
pub mod validate;
