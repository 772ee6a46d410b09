pub mod backend;
pub mod cli;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod network;
pub mod oracles;
pub mod protocol;
pub mod report;
pub mod sandbox;
pub mod session;
pub mod store;
pub mod tasks;
