//! Exact simulation of signal machines: one-dimensional geometric
//! computation where signals move at constant speeds and collision rules
//! replace the signals that meet.
//!
//! Scalars are exact: rationals, or elements of one quadratic field
//! `Q(√d)`. Floating point appears only in [`render`].
//!
//! ```
//! use sigmach::analysis::detect_contraction;
//! use sigmach::presets::build_sm4;
//! use sigmach::simulator::{run, RunLimits};
//! use sigmach::Rational;
//!
//! let (machine, config) = build_sm4::<Rational>();
//! let diagram = run(&machine, &config, &RunLimits::events(20));
//! let cert = detect_contraction(&diagram, 16).unwrap();
//! assert_eq!(cert.limit_time, Rational::from_integer(2.into()));
//! ```

pub mod analysis;
pub mod corpus;
pub mod format;
pub mod machine;
pub mod mesh;
pub mod presets;
pub mod render;
pub mod scalar;
pub mod simulator;
pub mod verify;

pub use machine::{AffineMap, InitialConfiguration, SignalId, SignalMachine, SignalSet, Site};
pub use scalar::{ExactScalar, FieldContext, Quadratic, Rational, ScalarError};
pub use simulator::{run, run_with, Event, HaltReason, RunLimits, RunState, SpaceTimeDiagram};

/// Default scalar: covers every machine the format can express.
pub type Scalar = Quadratic;
pub type Machine = SignalMachine<Scalar>;
pub type Configuration = InitialConfiguration<Scalar>;
pub type Diagram = SpaceTimeDiagram<Scalar>;
pub type RationalMachine = SignalMachine<Rational>;
