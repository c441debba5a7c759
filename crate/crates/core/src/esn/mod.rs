//! Echo state networks: a fixed sparse random reservoir with leaky tanh
//! units and a ridge-regression linear readout.

mod config;
mod container;
mod readout;
mod reservoir;
mod sparse;
mod spectral;

pub use config::EsnConfig;
pub use container::{ByteReader, ByteWriter, EarcModel};
pub use readout::{apply_readout, nrmse, train_readout, Readout, RidgeAccumulator};
pub use reservoir::{init_reservoir, run, step, Esn, StateTrajectory};
pub use sparse::CsrMatrix;
pub use spectral::{spectral_radius, spectral_radius_with};
