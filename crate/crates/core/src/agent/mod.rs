//! The learner: actor, director and twin critics with their targets.

mod checkpoint;
mod config;
mod ctd3;
pub mod gradcheck;
mod objectives;
mod report;
mod td3;

pub use config::{director_weight, AgentConfig, CriticAction, CriticSchedule, TargetSchedule, AGENT_KEYS};
pub use ctd3::{CriticUnit, Ctd3Agent};
pub use objectives::{actor_objective_and_grad, critic_loss_and_grad, director_objective_and_grad, Actor, Policy};
pub use report::StepReport;
pub use td3::Td3Agent;

pub(crate) use config::{parse_bool, parse_value};
