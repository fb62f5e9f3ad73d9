//! Real forms of holomorphic Hamiltonian systems on the complex 2-sphere.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: biquaternions, 2×2 complex matrices, quaternion units.
//! * [`phase`]: C²⊕C² with its holomorphic symplectic form, the scalar and
//!   SU(2) actions, momentum maps and the three biquaternion identifications.
//! * [`orbit`]: the complex spheres CS² and iCS² as coadjoint orbits, the KKS
//!   bracket, the reduced spaces, Φ: CS² → T*CP¹ and the bundle map.
//! * [`realstruct`]: the involution catalogue and its verifications.
//! * [`dynamics`]: the complexified spherical pendulum on CS²×CS² and flows.
//! * [`emom`]: energy-momentum maps of the real forms T*S² and S²×S².

pub mod algebra;
pub mod dynamics;
pub mod emom;
pub mod error;
pub mod io;
pub mod orbit;
pub mod phase;
pub mod realstruct;
pub mod report;
pub mod sample;
pub mod scalar;
pub mod verify;

pub use algebra::{biquat_mul, conjugate_adjoint, pauli_basis, Biquaternion, Mat2, Mat2C};
pub use dynamics::{ProductPoint, Trajectory};
pub use error::{Error, Result};
pub use orbit::{CotangentPoint, OrbitPoint};
pub use phase::{Axis, PhasePoint};
pub use realstruct::{FixedSetLabel, RealStructureId};
pub use report::CheckReport;
pub use scalar::C;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
