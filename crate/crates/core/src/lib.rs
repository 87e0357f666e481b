//! Classification of natural-language requirements as security-related or
//! not, trained on heterogeneous multi-project corpora.
//!
//! The pipeline is: [`textproc`] (normalisation, stop words, Porter
//! stemming) → [`vectorize`] (TF-IDF) → [`balance`] (SMOTE on training rows
//! only) → [`forest`] (Gini random forest) → [`evaluate`] (hold-out and
//! leave-one-specification-out validation with Fβ reporting). [`tune`] runs a
//! random hyper-parameter search and [`cli`] wires everything into the
//! `secreq` binary.

pub mod balance;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod forest;
pub mod seed;
pub mod textproc;
pub mod tune;
pub mod vectorize;

pub use error::{Error, Result};
