//! Thermodynamic formalism for open one-dimensional expanding maps.
//!
//! The crate follows one pipeline end to end:
//!
//! 1. model a piecewise-monotone map with exact branch data ([`map`]);
//! 2. detect hyperbolic/zooming times along orbits ([`zooming`]);
//! 3. enumerate regular pre-images, shave balls into nested collections and
//!    carve holes ([`nested`]);
//! 4. build the first-return induced full Markov scheme on a nested set,
//!    adapted to the hole ([`inducing`]);
//! 5. do thermodynamics on the resulting countable full shift: induced
//!    potentials, Gurevich pressure, Gibbs and conformal eigendata
//!    ([`thermo`]);
//! 6. solve for topological pressure, project equilibrium states back with
//!    Abramov's formulas, spread conformal measures, and estimate escape
//!    rates ([`equilibrium`]).
//!
//! ```
//! use zoomtherm::map::MapModel;
//! use zoomtherm::inducing::{first_return_scheme, FirstReturnOptions};
//! use zoomtherm::equilibrium::{pressure_solve, PotentialSpec};
//! use zoomtherm::interval::Interval;
//!
//! let map = MapModel::doubling();
//! let scheme = first_return_scheme(
//!     &map,
//!     &Interval::open(0.0, 1.0),
//!     &FirstReturnOptions::plain(1),
//! ).unwrap();
//! let p = pressure_solve(&map, &scheme, &PotentialSpec::Zero, (0.1, 2.0), 1e-6, &Default::default()).unwrap();
//! assert!((p.p_star - 2f64.ln()).abs() < 1e-3);
//! ```

pub mod error;
pub mod interval;
pub mod map;
pub mod tol;
pub mod zooming;

pub mod nested;

pub mod inducing;

pub mod thermo;

pub mod equilibrium;

mod guide;

pub use error::{Error, Result};
