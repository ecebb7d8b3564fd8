pub mod analysis;
pub mod dataset;
pub mod experiments;
pub mod field;
pub mod rsv;
pub mod ske;
