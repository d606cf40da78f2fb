//! HTTP service and operator command line for the request-a-copy repository.

pub mod cli;
pub mod clock;
pub mod http;
