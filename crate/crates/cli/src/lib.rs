//! Command-line front end for the road-RFID simulator: configuration
//! loading, output emission, audit tables, and reproducible experiment
//! recipes.

pub mod config;
pub mod csvio;
pub mod outputs;
pub mod recipes;
pub mod timing;
