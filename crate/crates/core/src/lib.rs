//! First-passage (ladder-epoch) analysis for random walks with small
//! negative drift.
//!
//! For a walk S_k = X_1 + … + X_k whose increments have mean −a < 0,
//! the ladder epoch τ = min{k ≥ 1 : S_k < 0} exhibits a transition
//! phenomenon as a → 0: on horizons n ≪ a^{−α/(α−1)} the tail
//! P(τ > n) tracks the zero-drift walk, on comparable horizons it picks
//! up a correction factor 1 − F_{α,β}(an/c_n) built from the Lévy
//! meander of the limiting stable process, and on much longer horizons
//! it decays at a large-deviation rate. This crate computes P(τ > n)
//! along independent routes — exact lattice dynamic programming, the
//! fluctuation-theoretic recurrence, brute-force path enumeration,
//! Monte Carlo with optional exponential tilting — together with the
//! asymptotic predictors for each regime, and cross-validates them
//! against one another.
//!
//! Module map:
//! * [`increments`] — increment models, truncated second moment V(u),
//!   norming sequence c_n, the boundary index n_a, cumulants;
//! * [`ladder`] — exact tail tables (DP, recurrence, enumeration) and
//!   the generating-function identity check;
//! * [`stable`] — the limiting stable law: ρ, density, tail, sampling;
//! * [`limits`] — the transition correction 1 − F_{α,β}, its Laplace
//!   and integral-equation characterisations, moment asymptotics;
//! * [`large_dev`] — Cramér-series rate ξ(a), large-deviation
//!   predictors, the Fuk–Nagaev bound, regime classification;
//! * [`monte_carlo`] — reproducible parallel simulation;
//! * [`verify`] — the cross-route acceptance checks as a callable suite.

pub mod error;
pub mod increments;
pub mod ladder;
pub mod large_dev;
pub mod limits;
pub mod monte_carlo;
pub mod numeric;
pub mod stable;
pub mod verify;

pub use error::{Error, Result};
