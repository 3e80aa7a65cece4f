//! Partial theta function `θ(q, z) = Σ_{j≥0} q^{j(j+1)/2} z^j`: certified
//! evaluation, zero location, double-zero spectrum and numeric checks of the
//! zero-containment bounds.

pub mod certificates;
pub mod domain;
pub mod error;
pub mod mp;
pub mod product;
pub mod report;
pub mod series;
pub mod spectrum;
pub mod zeros;

pub use certificates::{
    certify, certify_part1, certify_part2_k, certify_part2_l, certify_small_q, factor_partition, q_product_bound,
    r_bound_check, sampled_dominance, sharp_count_bound, technical_zeta_check, CertifyParams, FactorPartition,
    IntervalIndex, LemmaSelector, LogProduct, ProofConstants, SampledLemma, Segment,
};
pub use domain::{
    domain_membership, exterior_certificates, margin_box, scan_q_grid, verify_theorem_at, ClusterAt, Coverage,
    PairCount, ScanError, ScanOptions, ScanReport, TheoremDomain, DEFAULT_R_LEFT,
};
pub use error::{Result, ThetaError};
pub use mp::{BigComplex, Precision, Radius};
pub use product::{theta_star_product, ThetaContext};
pub use report::{CertificateReport, Inequality, Status};
pub use series::{
    g_eval, theta_dq, theta_dz, theta_eval, theta_partial, theta_star_series, truncation_cutoff, EvaluatedValue,
    QParam, TruncationPlan,
};
pub use spectrum::{
    asymptotic_estimate, double_zero_solve, spectrum_table, spectrum_table_with, AsymptoticEstimate, SpectrumEntry,
};
pub use zeros::{
    default_floor, find_zeros, refine_zero, rouche_certify, search_zeros, winding_count, Cluster, Contour, HalfPlane,
    Region, SearchOptions, WindingResult, ZeroRecord, ZeroSearch,
};
