//! Dense complex linear algebra and the scalar numerics the other modules
//! build on.

pub mod eigen;
pub mod expm;
pub mod line_search;
pub mod lu;
pub mod matrix;
pub mod norms;
pub mod quadrature;
pub mod svd;

pub use eigen::{eigenvalues, eigenvalues_with, eigenvector, spectral_abscissa, EigenConfig};
pub use expm::expm;
pub use line_search::{golden_max, maximize_on_line, LineMax, LineSearch};
pub use lu::{inverse, resolvent_apply, Lu};
pub use matrix::{vec_norm2, ComplexMatrix, C64};
pub use norms::{induced_norm, induced_norm_upper_bound, induced_norm_with, induced_pnorm, InducedNorm, NormSpec, SphereSearch};
pub use quadrature::{integrate_decaying, integrate_interval, DecayEnvelope, Quadrature, QuadratureResult};
pub use svd::{norm2, singular_values, svd, Svd};
