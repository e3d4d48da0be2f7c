//! Batch analysis of polarized retweet networks and their hidden audience.
//!
//! The pipeline reads newline-delimited tweet records ([`ingest`]), builds the
//! weighted retweet network ([`graph`]), places users on a latent ideology axis
//! by correspondence analysis ([`ideology`]), scores shared news domains
//! ([`mediabias`]), measures Active Engagement, the ratio of visible actions to
//! impressions ([`engagement`]), and writes plot-ready tables ([`echoreport`]).
//! [`synthgen`] produces seeded synthetic corpora with known ground truth.

pub mod echoreport;
pub mod engagement;
pub mod error;
pub mod graph;
pub mod ideology;
pub mod ingest;
pub mod mediabias;
pub mod numeric;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};
