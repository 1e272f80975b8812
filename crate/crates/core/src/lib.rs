pub mod cover;
pub mod forest;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod params;
pub mod pipeline;
pub mod setcover;
pub mod sim;
