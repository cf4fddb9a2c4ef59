//! Agents that coordinate on word meanings by inferring each partner's
//! lexicon, adapting online, and generalizing across partners through a
//! community-level prior.
//!
//! The crate is organized bottom-up:
//!
//! - [`domain`]: referents, taxonomies, utterances, lexicons and their Boolean semantics.
//! - [`prior`]: enumerable lexicon spaces and lexicon priors, including the
//!   collapsed Dirichlet-Multinomial community layer.
//! - [`rsa`]: literal listener, pragmatic speaker, and the expected-utility
//!   speaker and listener that marginalize over lexical uncertainty.
//! - [`inference`]: decayed likelihoods, exact posteriors and a
//!   systematic-scan Gibbs sampler for the hierarchical model.
//! - [`agent`]: the adaptive agent and its pooling variants.
//! - [`harness`]: schedules, trajectories, batches and parameter sweeps.
//! - [`stats`]: accuracy, length and vocabulary curves, alignment, swap
//!   statistics, t-tests and bootstrap intervals.
//! - [`io`]: run configs, CSV schemas, plot specs and the command line.

pub mod agent;
pub mod domain;
pub mod error;
pub mod harness;
pub mod inference;
pub mod io;
pub mod prior;
pub mod rsa;
pub mod stats;

pub use error::{ChaiError, Result};
