//! Topic-occurrence and price-jump event streams with a discrete-time
//! multivariate Hawkes network fitted by Gibbs sampling.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`ingest`] and [`corpus`] turn submission dumps into bag-of-words
//!    documents; [`topics`] fits slice-chained LDA and thresholds the
//!    per-document mixtures into topic-occurrence counts.
//! 2. [`events`] buckets occurrence counts and exchange ticks on a shared
//!    grid, takes log-returns and keeps percentile jumps as event streams.
//! 3. [`hawkes`] fits background rates, excitation weights and impulse
//!    kernels over those streams.
//!
//! [`pipeline`] wires the stages together behind a TOML configuration and
//! writes every report; [`synth`] generates fixtures for all of it.

pub mod corpus;
pub mod events;
pub mod hawkes;
pub mod ingest;
pub mod pipeline;
pub mod synth;
pub mod topics;
