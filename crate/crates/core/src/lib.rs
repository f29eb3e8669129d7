//! Heath-Jarrow-Morton forward-rate modelling under volatility uncertainty.
//!
//! The driver is a one-dimensional G-Brownian motion: a Brownian motion
//! whose volatility is only known to lie in a band `[sigma_low, sigma_high]`.
//! Each admissible volatility path is a [`VolatilityScenario`]; a finite
//! [`scenario_family`] stands in for the full set of beliefs, so every
//! supremum reported over a family is a lower bound for the sublinear
//! expectation.
//!
//! Modules:
//! - [`scenario`]: volatility bands, scenarios, simulated [`GPath`]s.
//! - [`hjm`]: forward-surface evolution, bond ladders, path-wise identities.
//! - [`drift`]: the drift condition (generation, market-price shift, check).
//! - [`affine`]: robust Ho-Lee / Hull-White term structures and the Vasicek
//!   obstruction.
//! - [`robust`]: scenario-family expectations, martingale and moment checks.
//! - [`export`]: CSV writers for every report.

pub mod affine;
pub mod coefficients;
pub mod curve;
pub mod drift;
pub mod error;
pub mod export;
pub mod field;
pub mod grid;
pub mod hjm;
pub mod robust;
pub mod scenario;

pub use affine::{
    affine_bond_price, affine_vs_hjm_crosscheck, simulate_short_rate, vasicek_impossibility, AffineModel,
    AffineTermStructure, CrosscheckTable, ShortRateState, VasicekSpreadReport,
};
pub use coefficients::HjmCoefficients;
pub use curve::InitialCurve;
pub use drift::{
    apply_market_prices, check_drift_condition, classical_reduction_check, generate_risk_neutral, DriftResidualReport,
    MarketPrices, DEFAULT_DRIFT_TOLERANCE,
};
pub use error::{Error, Result};
pub use field::CoefficientField;
pub use grid::{TimeGrid, TriangularField};
pub use hjm::{
    bond_ladder, evolve_surface, fubini_check, log_discounted_bond_two_ways, product_rule_check, BondLadder,
    ForwardSurface, IdentityPair,
};
pub use robust::{
    martingale_check, novikov_bound_check, robust_expect, MartingaleReport, NovikovReport, RobustEstimate,
};
pub use scenario::{generate_path, scenario_family, GPath, VolatilityBand, VolatilityScenario};
