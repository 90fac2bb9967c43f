//! HTTP JSON facade over `cmu-core`.
//!
//! [`api`] holds the request and response documents, [`ops`] the pure
//! operations behind each endpoint (also used by the command-line tool), and
//! [`server`] the axum router.

pub mod api;
pub mod ops;
pub mod server;

pub use api::{ApiError, Limits};
pub use server::{router, serve, ServiceConfig, ENDPOINTS};
