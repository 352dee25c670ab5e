//! Tensor complementarity problems TCP(q, A): model, solvers, structured-tensor
//! witness search and tensor eigenpairs.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases below name the concrete instantiations.

mod error;
mod linalg;
mod newton;
mod scalar;
pub mod property_checkers;
pub mod repro;
pub mod solvers;
pub mod spectral;
pub mod tcp;
pub mod tensor;

pub use error::{Result, TcpError};
pub use property_checkers::{
    check_property, diagonal_positivity, implication_audit, p_tensor_check, r_tensor_check,
    ssp_check, strong_p_check, uniform_p_modulus, AuditReport, CheckOptions, Property,
    PropertyVerdict, VerdictStatus, Witness,
};
pub use repro::{run_all, run_repro, ReproCase, ReproReport};
pub use scalar::Scalar;
pub use solvers::{
    boundedness_probe, enumerate_solutions, gus_probe, solve_active_set, solve_iterative,
    ActiveSet, GusReport, GusVerdict, IterativeSolution, SolutionSet, SolverOptions,
};
pub use spectral::{
    eigen_residual, eigenpairs, h_eigenpairs, positivity_report, z_eigenpairs, EigenKind,
    EigenOptions, EigenPair, EigenReport,
};
pub use tcp::{plus_part, ResidualReport, TcpInstance, DEFAULT_SOLUTION_TOL};
pub use tensor::Tensor;

pub type TensorF64 = Tensor<f64>;
pub type TensorF32 = Tensor<f32>;
pub type TcpInstanceF64 = TcpInstance<f64>;
pub type TcpInstanceF32 = TcpInstance<f32>;
pub type SolutionSetF64 = SolutionSet<f64>;
pub type SolutionSetF32 = SolutionSet<f32>;
pub type PropertyVerdictF64 = PropertyVerdict<f64>;
pub type PropertyVerdictF32 = PropertyVerdict<f32>;
pub type EigenReportF64 = EigenReport<f64>;
pub type EigenReportF32 = EigenReport<f32>;
