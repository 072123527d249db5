pub mod algebra;
pub mod error;
pub mod lattice;
pub mod gauge;
pub mod io;
pub mod laxmono;
pub mod poisson;
pub mod sov;
pub mod verify;

pub use error::{Error, Result};
