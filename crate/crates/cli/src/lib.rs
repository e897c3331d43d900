//! File formats, reports and the command-line front end for `admm-spectra`.

pub mod app;
pub mod format;
pub mod output;
