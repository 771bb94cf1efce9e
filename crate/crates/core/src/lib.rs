//! Robust day-ahead time-of-use pricing and dispatch for a virtual power
//! plant whose customers' price elasticity is uncertain and depends on the
//! chosen prices.

pub mod model;
pub mod network;
pub mod uncertainty;
pub mod ccg;
pub mod parallel;
pub mod oracle;
pub mod experiments;
