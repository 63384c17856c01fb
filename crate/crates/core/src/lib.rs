pub mod crypto;
pub mod ledger;
pub mod types;
pub mod trust;
pub mod config;
pub mod rng;
pub mod netsim;
pub mod workload;
pub mod consensus;
pub mod engine;
pub mod experiment;
