// negated float comparisons below are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basemap;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod render;
pub mod sampling;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use types::{validate_params, Itinerary, MapParams, Point, TrayIndex};
