//! Language core: syntax tree, runtime values, resources, and profiles.

pub mod ast;
pub mod preprocess;
pub mod profile;
pub mod resources;
pub mod value;

pub use ast::*;
pub use preprocess::{preprocess, preprocess_symbolic, PreprocessError};
pub use profile::{FieldError, Profile, Tool};
pub use resources::{apply_availability, ResourceDescriptor, ResourceGroup, ResourcePool};
pub use value::{FutureId, ObjectId, Rational, Value};
