//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod dbscan_oracle;
pub mod fixtures;
pub mod route_oracle;
