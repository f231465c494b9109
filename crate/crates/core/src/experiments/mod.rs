//! Configuration, initial data, persistence, and the verification drivers
//! behind the command-line verbs.

pub mod checkpoint;
pub mod config;
pub mod csv;
pub mod initial;
pub mod mms;
pub mod normcheck;
pub mod splitting;
pub mod sweep;
