//! Live trial service: image registry, session store with an append-only
//! event log, and the JSON HTTP API used by the browser client.

pub mod clock;
pub mod error;
pub mod http;
pub mod persist;
pub mod registry;
pub mod session;
pub mod store;

pub use error::ServiceError;
pub use registry::ImageRegistry;
pub use session::{SessionConfig, SessionState};
pub use store::SessionStore;
