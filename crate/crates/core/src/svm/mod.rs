//! Classical dual oracle, the variational SVM and the least-squares
//! baseline, plus the error-analysis verifiers.

mod dual;
mod lsqsvm;
mod model;
mod variational;
mod verify;

pub use dual::{classical_dual_solve, classical_dual_solve_with, BiasMode, DualSolution, MAX_DUAL_SIZE};
pub use lsqsvm::{lsqsvm_solve, lsqsvm_solve_and_classify, LsqsvmSolution};
pub use model::{AlphaMode, AlphaModel, SupportExtraction};
pub use variational::{
    alpha_ansatz, ansatz_amplitudes, ansatz_parameter_count, classify_svqsvm, default_threshold, estimate_sign_test,
    fault_tolerant_sign, objective_breakdown, svqsvm_objective, train_svqsvm, EstimationMode,
    Prediction, SvmObjectiveBreakdown, SvqsvmConfig, DEFAULT_PENALTY,
};
pub use verify::{
    distinguishability_histogram, fit_line, perturbation_trial, uniform_decision_value,
    verify_shot_budget_lemmas, verify_theorem1_scaling, write_histograms_csv,
    DistinguishabilityHistogram, KernelSource, PerturbationTrial, ScalingReport, ScalingRow,
    ShotBudgetReport, ShotBudgetRow, SMALL_VALUE,
};
