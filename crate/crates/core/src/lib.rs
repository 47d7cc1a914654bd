//! Cookie notice discovery, opt-out planning and enforcement export.

pub mod dom;
pub mod driver;
pub mod sim;
pub mod decision;
pub mod roles;
pub mod detector;
pub mod analyzer;
pub mod db;
pub mod measure;
pub mod fixtures;
