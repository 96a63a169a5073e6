//! Evolution of cooperation under cascading, Hawkes-timed actions.
//!
//! Agents on a periodic square lattice play a donation game. In the
//! standard model every agent acts once per generation; in the point-process
//! models each agent's actions follow an exponential-kernel Hawkes process,
//! excited by its own actions (`Endo`), its neighbors' actions (`Exo`), or
//! neither (`Poisson`). After each donation stage agents imitate the
//! best-scoring strategy in their neighborhood, with mutation.

pub mod error;
pub mod experiment;
pub mod game;
pub mod lattice;
pub mod metrics;
pub mod point_process;
pub mod sampler;
pub mod seed;

pub use error::{Error, Result};
pub use experiment::{
    aggregate, cells, run_cell, run_sweep, Cell, CellSummary, ExperimentConfig, Preset,
    ReplicateRow, Scale, SweepResult,
};
pub use game::{
    ActionCounting, AgentState, Engine, GameParams, HistoryMode, Population, Strategy, TrialSummary,
};
pub use lattice::Lattice;
pub use metrics::{GenerationStats, SigmaForm};
pub use point_process::{CaseKind, Excitation, KernelParams};
pub use sampler::{sample_lattice, sample_single, Event, EventTimeline, LatticeSampler};
