//! Parser, interpreter and static analyses for RPL workflow models.
//!
//! The pipeline is: [`lang::preprocess`] substitutes profile placeholders,
//! [`parser::parse`] builds a validated [`lang::Program`], and then one of the
//! three tools runs on it: [`sim`] (timed simulation), [`peak`] (simultaneous
//! resource allocation) or [`time`] (closed-form execution time bounds).

pub mod corpus;
pub mod lang;
pub mod parser;
pub mod peak;
pub mod sim;
pub mod time;
