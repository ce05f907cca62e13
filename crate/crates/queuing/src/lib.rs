//! Queuing and resource-allocation instances of the constrained
//! compositional problem, with their regularity constants and parameter
//! presets.

pub mod cloud;
pub mod constants;
pub mod effective;
pub mod ergodic;
pub mod mm1;
pub mod outage;
pub mod presets;
pub mod safeguard;
pub mod utility;
pub mod wired;

pub use cloud::{Cloud, CloudInstance};
pub use constants::{ConstantReport, QueuingProblem, ReportsConstants};
pub use effective::{EffectiveCapacity, EffectiveCapacityInstance};
pub use ergodic::{Mg1Ergodic, Mg1ErgodicInstance};
pub use mm1::{mm1_optimal_mu, mm1_utility, Mm1Problem};
pub use outage::{Outage, OutageInstance};
pub use presets::{InstanceConfig, PRESET_NAMES};
pub use utility::UtilityWeights;
pub use wired::{Mg1Wired, Mg1WiredInstance};
