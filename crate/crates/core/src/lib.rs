//! Single-item auctions on social networks where buyers both bid and decide
//! whom to tell about the sale.
//!
//! * [`model`]: networks, actions, the feasibility transform and utilities.
//! * [`graph`]: diffusion graphs, dominator trees, critical nodes and
//!   dependent sets.
//! * [`mechanisms`]: second price among the seller's neighbors, network VCG
//!   and the information diffusion mechanism (IDM).
//! * [`verifier`]: exhaustive and sampled checks of IR, IC, budget balance
//!   and revenue dominance.
//!
//! Money is exact: [`Value`] is a fixed-point decimal with nine places.

pub mod generators;
pub mod graph;
pub mod mechanisms;
pub mod model;
pub mod scenario;
pub mod value;
pub mod verifier;

pub use graph::{build_diffusion_graph, dominator_analysis, DiffusionAnalysis, DiffusionGraph, GraphError};
pub use mechanisms::{BuyerStatus, Mechanism, MechanismError, MechanismKind, Outcome, TieBreak};
pub use model::{
    feasibility_transform, truthful_profile, utility, Action, ActionProfile, AgentId, ModelError, SocialNetwork,
};
pub use scenario::{Scenario, ScenarioError, ScenarioFile};
pub use value::{Value, ValueError};
