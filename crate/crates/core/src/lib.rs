pub mod bench;
pub mod config;
pub mod dsu;
pub mod error;
pub mod mssp;
pub mod oracle;
pub mod scenario;
pub mod reduce;
pub mod uncertainty;

pub use error::{Error, Result};
