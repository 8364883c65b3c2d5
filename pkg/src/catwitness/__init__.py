"""Fidelity estimation with cat-like and squeezed Fock states from homodyne data.

The package turns homodyne quadrature records into fidelity estimates by
averaging closed-form sampling functions, evaluates Wigner-negativity and
quantum non-Gaussianity witnesses, and designs phase schedules that minimize
the statistical variance of those estimates.
"""

from catwitness.specfun import dawson, erfi_scaled, oscillator_eigenfunction
from catwitness.states import (
    CatSpec,
    FockDensityMatrix,
    SqueezedFockSpec,
    SqueezedThermalSpec,
    cat_density_matrix,
    fidelity_oracle,
    lund_fidelity,
    mean_photon,
    optimize_squeezing,
    quadrature_pdf,
    squeezed_fock_density_matrix,
    squeezed_thermal_density_matrix,
    wigner_origin,
)
from catwitness.kernels import (
    CatKernel,
    HusimiKernel,
    KernelEvaluation,
    MeanPhotonKernel,
    SqueezedFockKernel,
    SqueezedFrame,
    ThresholdError,
    kernel_fsq,
    kernel_mean_photon,
    kernel_SF,
    kernel_SQ,
    kernel_SQ_squeezed,
    pattern_f0,
    pattern_f1,
    squeezed_frame,
)
from catwitness.simulator import PhaseSchedule, QuadratureRecords, fold_phase, sample_records
from catwitness.estimator import (
    Estimate,
    WitnessVerdict,
    estimate,
    null_diagnostic,
    witness_negativity,
    witness_qng,
)
from catwitness.scheduler import (
    VarianceProfile,
    empirical_variance_profile,
    optimal_schedule,
    predicted_variances,
    squeezed_thermal_schedule,
)

__version__ = "0.1.0"
