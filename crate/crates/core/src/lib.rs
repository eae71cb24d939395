//! Time-evolving correlation networks for equity panels.
//!
//! The pipeline runs from prices to portfolios:
//!
//! * [`data`] loads or synthesises price panels and computes log returns;
//! * [`corrnet`] turns returns into rolling-window correlation matrices;
//! * [`pmfg`] filters each matrix into a planar maximally filtered graph and
//!   measures its topology;
//! * [`temporal`] couples the window graphs through per-stock autoregressive
//!   fits and ranks stocks by temporal eigenvector centrality;
//! * [`portfolio`] selects central or peripheral stocks and optimises
//!   mean-variance and expected-shortfall portfolios;
//! * [`backtest`] runs complete experiments and writes reports;
//! * [`cli`] is the command-line front end.

pub mod backtest;
pub mod cli;
pub mod corrnet;
pub mod data;
pub mod error;
pub mod graph;
pub mod pmfg;
pub mod portfolio;
pub mod temporal;

pub use error::{Error, Result};
