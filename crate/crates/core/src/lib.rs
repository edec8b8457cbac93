pub mod error;
pub mod evolve;
pub mod grid;
pub mod model;
pub mod perturb;
pub mod specfun;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
pub use evolve::{decay_fit, physical_oracle, tune_t, Evolver, State, Trajectory};
pub use grid::{build_grid, Grid};
pub use model::{Params, RadialPair, RelativeData};
pub use spectral::{assemble_l, OperatorMatrices, SpectrumReport};
