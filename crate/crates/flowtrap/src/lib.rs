//! Zero-order search for approximate stationary points of smooth functions.
//!
//! The crate provides
//! - [`oracle`]: function oracles with metadata and atomic query counters;
//! - [`geometry`]: hyperrectangles, nice delta-nets and the unreachability test;
//! - [`gfpt`]: the parallel-trap solver (unconstrained and on the unit cube) and a
//!   gradient-descent baseline;
//! - [`hardfn`]: ITER successor instances, the adaptive adversary, and the periodic
//!   bicubic hard function whose only near-stationary regions encode ITER solutions;
//! - [`plsred`]: the grid reduction from stationary points to local optimization;
//! - [`bench`]: epsilon sweeps with log-log slope fits;
//! - [`families`]: the test functions used by the CLI and the benchmarks.
//!
//! ```
//! use flowtrap::{gfpt::{gfpt_unconstrained, SolverConfig}, oracle::OracleSpec};
//!
//! let f = OracleSpec::from_fns(2, 1.0, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x| x.to_vec());
//! let out = gfpt_unconstrained(&f, &[1.0, 1.0], &SolverConfig::new(1e-2, 1.0)).unwrap();
//! let g = f.gradient(&out.point).unwrap();
//! assert!(flowtrap::geometry::norm2(&g) <= 1e-2);
//! ```

pub mod bench;
pub mod error;
pub mod families;
pub mod geometry;
pub mod gfpt;
pub mod hardfn;
pub mod oracle;
pub mod plsred;

pub use error::{Error, Result};
pub use geometry::{is_unreachable, nice_delta_net, rect_split_planes, HyperRect, Point};
pub use oracle::{counting_oracle, DomainKind, Objective, OracleSpec, QueryCounts, QueryStats};
