//! File formats, batch pipeline, reports and the command line around
//! [`pwbsi_core`].

pub mod cli;
pub mod config;
pub mod driver;
pub mod manifest;
pub mod numfmt;
pub mod pipeline;
pub mod population;
pub mod report;
pub mod svg;
pub mod table;
pub mod touchstone;

pub use pwbsi_core as core;
