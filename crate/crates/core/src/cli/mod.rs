//! Document formats and the `pms` command surface.

pub mod commands;
pub mod document;

pub use commands::run;
pub use document::{
    parse_document, serialize_document, DocError, Document, Meta, ParseOptions, Payload, Report,
};
