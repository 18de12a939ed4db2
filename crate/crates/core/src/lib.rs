//! Equilibrium menus, tariffs, advertising budgets and surplus for a
//! marketplace where a platform steers consumers to sellers using data
//! the consumers themselves do not have.
//!
//! Sellers post a menu of (quality, price) pairs on the platform and
//! another off it. Cost of quality `q` is `q²/2` and a consumer with value
//! `θ` gets `θq`. The modules follow the objects of the model:
//!
//! * [`dist`]: value and expectation laws, order statistics, stochastic orders;
//! * [`screening`]: baseline menus, rents, tariffs, ironing, the binary example;
//! * [`surplus`]: seller profits, outside options, budgets, consumer surplus;
//! * [`regimes`]: symmetric information, organic links, cohort targeting;
//! * [`infodesign`]: the platform's information design with uninformed consumers;
//! * [`oracle`]: Monte Carlo market simulation and brute-force checks.

pub mod band;
pub mod dist;
pub mod error;
pub mod grid;
pub mod infodesign;
pub mod measure;
pub mod num;
pub mod oracle;
pub mod regimes;
pub mod screening;
pub mod surplus;

pub use error::{Error, Result};
