//! Wiener kernel regression.
//!
//! Kernel ridge regression in which the i.i.d. additive measurement noise is
//! represented by an exact two-term polynomial chaos expansion. The fitted
//! predictor is a random variable whose variance isolates the part of the
//! predictive uncertainty caused by noisy targets; a classical Gaussian-process
//! posterior is computed from the same factorization for comparison.
//!
//! ```
//! use wiener_kernel::{fit, Dataset, Kernel, NoiseModel, Point};
//!
//! let data = Dataset::scalar(&[-1.0, 0.0, 1.0], &[0.2, -0.1, 0.4]).unwrap();
//! let model = fit(
//!     data,
//!     Kernel::squared_exponential(1.0, 1.0).unwrap(),
//!     1.0,
//!     NoiseModel::gaussian(1.0).unwrap(),
//! )
//! .unwrap();
//! let x = Point::scalar(0.5);
//! let gp = model.gp_predict(&x).unwrap();
//! let wk = model.wk_variance(&x).unwrap();
//! assert!(wk.variance <= gp.var_gp);
//! ```

pub mod error;
pub mod experiments;
pub mod kernel;
pub mod linalg;
pub mod montecarlo;
pub mod noise;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
pub use kernel::{Kernel, Monomial, Point};
pub use linalg::{cholesky, CholFactor, SymMatrix};
pub use noise::{moments_from_pce, two_term_pce, NoiseModel, NoiseSpec, Pce2};
pub use regression::{
    fit, weight_space_predict, weight_space_solve, wk_moments, Dataset, FittedModel, GpPrediction,
    PcePrediction, Warning, WkVariance,
};
