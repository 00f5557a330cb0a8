//! Certified spectral analysis of bounded positive kernels on discrete
//! state spaces: Doeblin splits, uniform-integrability tail functionals,
//! drift/minorization renewal bounds, and essential-spectral-radius
//! certificates, all validated against dense eigenvalue oracles.
//!
//! The numeric core is generic over the floating scalar ([`Scalar`], `f32`
//! or `f64`) and over the entry type (real or complex). Concrete `f64`
//! aliases are exported at the crate root.
//!
//! ```
//! use doeblin::drift::{DriftCertificate, MinorizationCertificate, RbOptions, SplitEngine};
//! use doeblin::space::StateSet;
//! use doeblin::{Kernel64, Measure64, StateSpace, WeightFn};
//!
//! // Reflected walk with down-probability 0.7 on the window 0..=100.
//! let sp = StateSpace::windowed(100);
//! let mut rows = vec![Measure64::new(sp, vec![(0, 0.7), (1, 0.3)], 0.0).unwrap()];
//! for x in 1..=100 {
//!     rows.push(Measure64::new(sp, vec![(x - 1, 0.7), (x + 1, 0.3)], 0.0).unwrap());
//! }
//! let p = Kernel64::positive(sp, rows, true).unwrap();
//!
//! // Drift function w(x) = z^x with z = sqrt(q/p) plus the one-step
//! // minorization at the origin certify r_e^w(P) <= 2 sqrt(pq).
//! let z = (0.7f64 / 0.3).sqrt();
//! let w = WeightFn::geometric(sp, z).unwrap();
//! let r1 = 1.0 / (2.0 * (0.3f64 * 0.7).sqrt());
//! let c = StateSet::new(sp, vec![0]).unwrap();
//! let drift = DriftCertificate::new(c.clone(), w, r1, r1 * (0.7 + 0.3 * z)).unwrap();
//! let nu = Measure64::new(sp, vec![(0, 0.7), (1, 0.3)], 0.0).unwrap();
//! let minor = MinorizationCertificate::with_unit_density(c, 1.0, nu).unwrap();
//!
//! let engine = SplitEngine::new(p, drift, minor).unwrap();
//! let profile = engine.compute_rb(&RbOptions::default()).unwrap();
//! let bound = profile.ess_bound().hi;
//! assert!((bound - 2.0 * (0.3f64 * 0.7).sqrt()).abs() < 1e-9);
//! ```

pub mod decompose;
pub mod drift;
pub mod eigen;
pub mod ergodic;
pub mod error;
pub mod essrad;
pub mod interval;
pub mod kernel;
pub mod measure;
pub mod multiplier;
pub mod scalar;
pub mod space;
pub mod weight;

pub use error::{Error, Result};
pub use interval::Interval;
pub use kernel::{Applied, Kernel, SpectralRadiusBound};
pub use measure::{AtomicMeasure, WindowFn};
pub use multiplier::{fourier_kernel, multiplier_kernel, Multiplier, MultiplierForm};
pub use scalar::{Entry, Scalar};
pub use space::StateSpace;
pub use weight::{GeometricTail, WeightFn};

use num_complex::Complex;

/// `f64` aliases for the common concrete instantiations.
pub type Interval64 = Interval<f64>;
pub type Measure64 = AtomicMeasure<f64>;
pub type ComplexMeasure64 = AtomicMeasure<f64, Complex<f64>>;
pub type Kernel64 = Kernel<f64>;
pub type ComplexKernel64 = Kernel<f64, Complex<f64>>;
pub type WeightFn64 = WeightFn<f64>;
pub type WindowFn64 = WindowFn<f64>;
