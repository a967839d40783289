//! Translation of serverless functions between languages with an LLM
//! pipeline, plus the build, test and energy measurement machinery around it.

pub mod bench;
pub mod corpus;
pub mod energy;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod runner;

pub use model::*;
