//! Deterministic discrete-event simulation of vehicle-mounted UHF RFID
//! readers interrogating passive tags embedded in road infrastructure.

pub mod engine;
pub mod lane;
pub mod gen2;
pub mod geometry;
pub mod rflink;
pub mod rng;
pub mod sensing;
