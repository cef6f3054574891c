//! Simulation library for MinUsageTime dynamic vector bin packing: replay
//! VM traces through online placement strategies and measure total bin
//! usage time against a lower bound.

pub mod engine;
pub mod experiment;
pub mod ingest;
pub mod predictor;
pub mod reporting;
pub mod strategy;
pub mod testkit;
pub mod types;

pub use engine::{simulate, simulate_logged, Knowledge, RunLog, RunReport, SimError};
pub use strategy::{KnowledgeNeed, Strategy, StrategySpec};
pub use types::{BinId, Instance, Item, ItemId, Norm, SizeVector, TimePoint};
