//! Distributed model predictive control for multi-agent double integrators.
//!
//! Agents agree on a joint plan through consensus ADMM. Each local problem
//! keeps collision avoidance smooth by carrying dual certificates that prove
//! a neighbor's position lies outside the agent's cube.

pub mod cli;
pub mod consensus;
pub mod costs;
pub mod dynamics;
pub mod geometry;
pub mod harness;
pub mod local_solver;
pub mod planner;

/// Any error raised by the library, tagged with the module it came from.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dynamics: {0}")]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("geometry: {0}")]
    Geometry(#[from] geometry::GeometryError),
    #[error("costs: {0}")]
    Costs(#[from] costs::CostError),
    #[error("local_solver: {0}")]
    Solver(#[from] local_solver::SolverError),
    #[error("consensus: {0}")]
    Consensus(#[from] consensus::ConsensusError),
    #[error("planner: {0}")]
    Planner(#[from] planner::PlannerError),
    #[error("harness: {0}")]
    Harness(#[from] harness::HarnessError),
    #[error("cli: {0}")]
    Cli(#[from] cli::CliError),
}
