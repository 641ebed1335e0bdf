pub mod dataset;
pub mod domain;
pub mod llm;
pub mod pipeline;
pub mod schema;
pub mod service;
