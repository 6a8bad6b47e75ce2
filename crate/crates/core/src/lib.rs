pub mod bytes;
pub mod cloud;
pub mod ply;
pub mod spatial;
pub mod entropy;
pub mod geometry;
pub mod attribute;
pub mod metrics;
pub mod vpcc;
pub mod bench;
