//! Potential theory on Denjoy domains `ℂ ∖ E`, `E` a closed union of real
//! intervals.
//!
//! * [`realset`]: sets, example families, homogeneity and logarithmic length
//! * [`greenpot`]: Green function, critical values, Widom sums, harmonic measure
//! * [`reflect`]: reflectionless functions, the comb `Π` and the λ-family
//! * [`extremal`]: boundary L¹ norms and hypothesis certificates
//! * [`discriminant`]: the Hill-type discriminant, its bands and the failure
//!   of the Cauchy identity off them

pub mod discriminant;
pub mod error;
pub mod extremal;
pub mod greenpot;
pub mod quad;
pub mod realset;
pub mod reflect;
pub mod roots;
pub mod table;

pub use error::{Error, Result};
pub use quad::{QuadratureSpec, Scheme};
pub use realset::{build_named_set, GapSystem, NamedSet, RealSet, SetMeta, Verdict};

pub use num_complex::Complex64;
