pub mod auction;
pub mod equilibrium;
pub mod bundle;
pub mod error;
pub mod lp;
pub mod multiunit;
pub mod rat;
pub mod tugame;
pub mod value;

pub use auction::{Allocation, BundleAuction, MultiUnitAuction, PriceVector, ValuationTable};
pub use bundle::{coalition_bundle, Bundle, Cube};
pub use equilibrium::{
    decide_existence, decide_existence_with, verify_equilibrium, EquilibriumCertificate,
    ExistenceVerdict, ImprovingMixture, VerificationMode, VerificationReport,
};
pub use error::{Error, Result};
pub use lp::{
    farkas_certificate, lp_solve, FarkasCertificate, FeasibilityOutcome, LinearProgramSpec,
    LpSolution, LpStatus, Relation, Sense, VarBound,
};
pub use multiunit::{decide_existence_multiunit, expand, UnitExpansion};
pub use rat::{rat, Rat};
pub use tugame::{
    brute_force_matching_core, decide_matching_core, induce_bundle_auction, is_in_matching_core,
    Coalition, CoreVerdict, InducedAuction, MatchingOutcome, TuGame,
};
pub use value::{
    build_value_function, build_value_function_with_budget, ValueFunction, WeakMonotonicityReport,
};
