//! Locally Nil metric patches: recognition, the canonical frame and the developing map into Nil.

pub mod develop;
pub mod error;
pub mod frame;
pub mod patch;
pub mod verify;

pub use develop::{develop, develop_with, Development, DevelopOptions};
pub use error::{DevelopError, Result};
pub use frame::{find_frame, NilFrame};
pub use patch::{MetricPatch, Orientation};
pub use verify::{verify_local_nil, verify_local_nil_with, LocalNilReport, LOCAL_NIL_TOLERANCE};
