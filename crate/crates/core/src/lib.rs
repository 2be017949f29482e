pub mod cli;
pub mod engine;
pub mod hashers;
pub mod keyspace;
pub mod planner;
pub mod potfile;
pub mod predicate;
pub mod protocol;
pub mod verifier;
