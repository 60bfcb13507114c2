//! Service and command-line layer over `advisor_core`.

pub mod analyze;
pub mod resources;
pub mod script;
pub mod server;
pub mod store;

pub use resources::Resources;
pub use store::SessionStore;
