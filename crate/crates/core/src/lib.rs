pub mod continuation;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod restricted3body;
mod roots;
pub mod timemap;
pub mod tori;

pub use effective::{CircularData, EffectiveOscillator, TurningPoints};
pub use error::{OrbitaError, Result};
pub use potentials::{PotentialSpec, PowerTerm, RadialPotential};
pub use timemap::{RegularizedMap, TimeMapValues, TimeMaps};
pub use tori::{ActionAngleChart, TorusConfig, TorusSolution};
