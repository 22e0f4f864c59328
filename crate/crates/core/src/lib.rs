pub mod bounds;
pub mod config;
pub mod data;
pub mod experiment;
pub mod group;
pub mod models;
pub mod plot;
pub mod rademacher;
pub mod seed;
pub mod spectral;
pub mod stats;
pub mod training;
pub mod verify;
