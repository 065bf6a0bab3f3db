//! Political bias auditing toolkit for language models.
//!
//! The crate is organized around six areas:
//!
//! * [`model`] holds the shared domain types: statement banks, headline
//!   corpora, topic registries, and language codes.
//! * [`stance`] turns classifier confidences into signed stance scores,
//!   ordinal labels, and compass coordinates with bias verdicts.
//! * [`framing`] computes media framing tables: frame ratios, entity
//!   prominence, sentiment aggregation, lexical polarity, and polarization.
//! * [`stats`] covers agreement and uncertainty: Fleiss and Cohen kappa,
//!   bootstrap confidence intervals, confidence-weighted means, and prompt
//!   sensitivity summaries.
//! * [`gateway`] is the HTTP client for model endpoints with on-disk response
//!   caching, retries, rate limiting, and a deterministic mock server.
//! * [`pipeline`] wires it all into resumable audit runs behind the CLI.

pub mod framing;
pub mod gateway;
pub mod model;
pub mod pipeline;
pub mod stance;
pub mod stats;
