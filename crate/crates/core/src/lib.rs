pub mod cli;
pub mod error;
pub mod finite;
pub mod fusion;
pub mod io;
pub mod partial_group;
pub mod ptoral;
pub mod reconstruction;
pub mod report;
pub mod transporter;

pub use error::{Error, Result};
