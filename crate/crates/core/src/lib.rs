//! Recurrence quantification analysis with microstate entropy.
//!
//! The crate is organised bottom-up:
//!
//! * [`signals`]: seedable test signals (white noise, noisy sine, logistic
//!   map, Lorenz flow), min-max normalization and CSV ingestion.
//! * [`recurrence`]: bit-packed thresholded recurrence plots and windowing.
//! * [`rqa`]: line-length distributions and the classic quantifiers
//!   RR, DET, LAM, ENTR and DIV.
//! * [`microstates`]: sampling of N×N recurrence microstates, their Shannon
//!   entropy and popcount class decomposition.
//! * [`experiments`]: reproducible parameter sweeps with CSV/JSON export.

pub mod error;
pub mod experiments;
pub mod microstates;
pub mod recurrence;
pub mod rng;
pub mod rqa;
pub mod signals;

pub use error::{Error, Result};
pub use microstates::{ClassBreakdown, MicrostateHistogram, MicrostateSampler};
pub use recurrence::{Norm, RecurrencePlot, WindowSpec};
pub use rqa::{LineDistribution, LineKind, RqaSummary};
pub use signals::{LorenzComponent, LorenzParams, TimeSeries};
