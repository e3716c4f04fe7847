pub mod broadwell;
pub mod error;
pub mod imex_bgk;
pub mod kinetic;
pub mod reference;
pub mod setups;
pub mod space_fv;
pub mod stability;
pub mod tableau;

pub use error::{Error, Result};
