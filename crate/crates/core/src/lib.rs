pub mod error;
pub mod hermlin;
pub mod maxcone;
pub mod mincone;
pub mod opsys;
pub mod quotientmaps;
pub mod riesz;
pub mod sdpfeas;
pub mod wepchecks;

pub use error::{Error, LinalgError, Result};
