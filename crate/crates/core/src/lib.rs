pub mod editcost;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod model;
pub mod params;
pub mod selector;
pub mod shotgen;
pub mod stabilize;
