//! regulab: a numerical laboratory for regularization nets on model
//! manifolds. Seminorm nets over geometric epsilon grids are classified as
//! moderate or negligible by log-log tail fits; smoothing operators on
//! discretized S^1 and T^2 carry Sobolev-graded Hilbert-Schmidt norms; units
//! built from spectral plateau multipliers, Euclidean and Heisenberg
//! mollifiers, and the integrated Schrodinger representation are validated
//! against rapid-convergence contracts; and distributions are classified by
//! tameness degree, Sobolev order, singular support, and wavefront flags.

pub mod error;
pub mod evaluator;
pub mod fixtures;
pub mod grid;
pub mod heisenberg;
pub mod mollifier;
pub mod net;
pub mod plateau;
pub mod regularity;
pub mod report;
pub mod sampled;
pub mod spectral;
pub mod stft;
pub mod units;

pub use error::{LabError, Result};
pub use evaluator::{
    aligned_rank_one, for_each_family_op, psido_shift_check, regular_signature, tameness_fit, verify_pt_bound,
    DistributionEvaluator, EvaluatorKind, FamilyConfig, OpMoments, PtReport, ShiftCheck,
    SignatureOptions, SignatureReport, SignatureVerdict, TamenessEstimate, TamenessFit,
    TamenessOptions,
};
pub use fixtures::{
    circle_suite, complex_gaussian, lab_rng, random_row_decay_op, torus_delta, torus_gaussian,
    torus_sawtooth_x, torus_tensor_jump, Fixture, FixtureClass, SUITE_SEED,
};
pub use grid::{make_eps_grid, EpsilonGrid};
pub use heisenberg::{
    heis_compose, heis_convergence_net, heis_convolve, heis_convolve_left, heis_dist,
    heis_dist_report, heis_inverse, heis_smallest_usable_eps, symplectic_form,
    HeisConvergenceReport, HeisDistReport, HeisenbergPoint,
};
pub use mollifier::{
    build_mollifier, discrete_delta_mollifier, euclid_convolve, fit_decay_above_floor,
    gauss_moment_transform, gaussian_moment_mollifier, scale_mollifier, Mollifier,
    MollifierConstruction, MollifierDiagnostics, ScaleReport, DEFAULT_MOLLIFIER_HALF,
    DEFAULT_MOLLIFIER_STEP, MOLLIFIER_MASS_TOL, MOLLIFIER_MOMENT_TOL,
};
pub use net::{
    assess_net, classify_net, classify_net_report, classify_single, estimate_order,
    gen_scalar_add, gen_scalar_mul, pushforward_net, sharp_valuation, Classification,
    ClassifyThresholds, FunctionNet, GeneralizedScalar, NetAssessment, NetReport, OrderEstimate,
    ScalarNet,
};
pub use plateau::{PlateauFunction, PlateauProfile};
pub use sampled::{AxisGrid, ComplexSampledFunction, SampledFunction};
pub use report::{
    classification_report, distribution_from_json, distribution_to_json, op_from_json, op_to_json,
    read_net_csv, read_sampled, tameness_json, unit_from_json, unit_to_json, write_net_csv,
    write_sampled, ClassificationReport, OperatorEntries, OperatorJson, SpectralJson, UnitJson,
    SAMPLED_MAGIC, SAMPLED_VERSION,
};
pub use regularity::{
    cone_bin_angle, cone_weight, singular_support_map, sobolev_order_estimate, wavefront_estimate,
    ConeCell, SingularSupportOptions, SingularSupportReport, SobolevOrderEstimate, WavefrontReport,
    WindowFamily, WindowVerdict, CONE_BIN_COUNT, TORUS_WAVEFRONT_SLOTS, WINDOW_CENTERS,
    WINDOW_DEGREE,
};
pub use spectral::{
    apply_op, compose_with_psido, laplacian_power, mult_operator, multiplier_psido,
    multiply_truncated, op_graded_norm, op_trace, restrict_coeffs, restrict_distribution,
    restrict_op, sobolev_norm, tensor_evaluator, trace_action, weighted_hs_norm,
    weighted_hs_norm_s, GradingConfig, Manifold, SmoothingOp, SpectralDistribution,
    SpectralFunction, SpectralModel,
};
pub use stft::{
    cheap_factorize, schrodinger_apply, schrodinger_kernel, schrodinger_mollifier_kernel,
    schrodinger_unit, stft, stft_invert, SchrodingerSymbol, SchrodingerUnitReport,
    WindowedTransformConfig, TAU_MASS_TOL, WINDOW_NORM_TOL,
};
pub use units::{
    composition_op, embed_distribution, functional_calculus_unit, locality_decompose,
    pushforward_distribution, pushforward_unit,
    spectral_unit, transfer_of_regularity_check, validate_mau, CircleDiffeo, Displacement,
    LocalityOptions, LocalityReport, MauOptions, MauReport, PushforwardReport, TransferOptions,
    TransferReport, TransferSignature, UnitNet, UnitProvenance,
};
