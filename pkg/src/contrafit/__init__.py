"""Contraction-principle step scaling for classical iterative learners.

Five online learner families (LMS, kernel LMS, RLS, backprop MLP, and
stochastic subgradient solvers for L1-regularized regression) implemented
side by side with their step-scaled variants, plus a BPSK
channel-equalization benchmark harness that compares the two over averaged
Monte Carlo runs.
"""

from .contraction import (
    DesignConstants,
    FactorPolicy,
    contraction_bound,
    design_min_step,
    predicted_mse_floor,
    scalar_output_factor,
    step_factor,
)
from .core import (
    ContractionViolationError,
    Dataset,
    DivergenceError,
    InvalidInputError,
    LabeledSample,
    LearningCurve,
    NumericalBreakdownError,
    PreconditionError,
    RngStream,
    WeightState,
    average_curves,
    l1_norm,
    linf_norm,
    mse,
)
from .kernel_filters import (
    KlmsModel,
    gaussian_kernel,
    klms_predict,
    klms_step_recursive,
    klms_update,
)
from .linear_filters import LmsState, RlsState, lms_step, rls_step, run_online
from .neural import Mlp, backprop_deltas, forward, train_epochs, update_weights
from .sparse import (
    SparseState,
    dantzig_objective,
    dantzig_subgradient,
    lasso_objective,
    lasso_subgradient,
    sgd_step,
)
from .bench import (
    PRESETS,
    ChannelSpec,
    ExperimentPreset,
    add_awgn,
    apply_fir,
    apply_nonlinearity,
    embed,
    gen_bpsk,
    make_dataset,
    run_monte_carlo,
    run_single,
)

__version__ = "0.1.0"
