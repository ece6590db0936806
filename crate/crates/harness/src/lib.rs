//! Experiment harness: configuration, on-disk store, pipeline stages, the
//! completion client, the episode ingestion server and a scripted mock of
//! the completion endpoint.

pub mod client;
pub mod config;
pub mod fixture;
pub mod mock;
pub mod pipeline;
pub mod serve;
pub mod server;
pub mod store;
