pub mod circuit;
pub mod compiler;
pub mod error;
pub mod kak;
pub mod model;
pub mod mpo;
pub mod mps;
pub mod noise;
pub mod pipeline;
pub mod reference;
pub mod statevector;
pub mod tensor;

mod chain;

pub use circuit::{CircuitKind, CircuitState, Gate, Init, StaircaseCircuit};
pub use compiler::{polar_update, qmpo_compile, qmpo_compile_target, qmpo_environment, qmpo_trajectory, qmps_compile, qmps_environment, qmps_trajectory, CompileReport, SweepConfig, TrajectoryPoint};
pub use error::{Error, Result};
pub use kak::{kak_decompose, KakFactors};
pub use model::{local_terms, neel_product_state, trotter_step_gates, Spin, TfimParams, TrotterSchedule};
pub use mpo::{frobenius_fidelity, identity_mpo, max_useful_layers, trotter_propagator_mpo, MatrixProductOperator, Side};
pub use mps::{overlap, t_max_detect, tebd_evolve, tebd_evolve_with, EntropyTrace, MatrixProductState, TebdOptions, TebdResult};
pub use noise::{
    advantage_classify, alpha, cumulated_error, infidelity_per_site, noisy_expectation_z, noisy_fidelity, operator_entropy,
    MethodFidelities, NoiseModel, NoisyState, Region,
};
pub use pipeline::{compose_qmpso, run_experiment, QmpsoSchedule, RunConfig};
pub use reference::{exact_propagate, fine_trotter_reference, local_magnetization, DenseHamiltonian};
pub use statevector::Statevector;
pub use tensor::{contract, herm_exp, svd_truncated, ComplexTensor, SvdResult, C64};
