pub mod emit;
pub mod runner;
pub mod scenario;
