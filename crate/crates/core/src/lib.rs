//! Agent-based simulation of affective polarization driven by partisan news
//! cascades on a directed scale-free follower graph.
//!
//! The core is generic over the floating-point type; the aliases below fix
//! it to `f64` (the default used by the experiment driver and CLI) or `f32`.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod metrics;
pub mod population;
pub mod scalar;
pub mod survey;

pub use dynamics::{affect_delta, apply_exposure, run, run_observed, DynamicsParams, SimState, UpdateRule};
pub use error::{Error, Result};
pub use experiment::{run_sweep, SeedScheme, SimConfig, SweepConfig};
pub use graph::{elite_set, generate_scale_free, DirectedGraph, GraphSpec, Vertex};
pub use metrics::{group_ap, time_to_90, RunTimeSeries};
pub use population::{AgentState, Party, PopulationSpec};
pub use scalar::Scalar;

pub type Agent = AgentState<f64>;
pub type AgentF32 = AgentState<f32>;
pub type Params = DynamicsParams<f64>;
pub type ParamsF32 = DynamicsParams<f32>;
pub type Series = RunTimeSeries<f64>;
pub type SeriesF32 = RunTimeSeries<f32>;
pub type Sim = SimState<f64>;
pub type SimF32 = SimState<f32>;
