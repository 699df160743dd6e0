"""Desk-scale laboratory for weighted Morrey-space operator bounds.

Builds truncated-lattice surrogates of multilinear singular and
fractional integral operators, computes the weight-class constants and
function-space norms governing their mapping properties, and runs
ratio-boundedness experiments over deterministic function corpora.
"""

from .lattice import (
    Ball,
    BallFamily,
    BallFamilySpec,
    GridFunction,
    Lattice,
    integrate,
    make_ball_family,
    make_lattice,
    split_at_ball,
)
from .operators import (
    KernelClassReport,
    KernelSamplingPlan,
    KernelSpec,
    TruncationPolicy,
    angular_jump_kernel,
    apply_czo,
    apply_fractional,
    fractional_size_kernel,
    homogeneous_odd_kernel,
    tail_majorant,
    verify_kernel_class,
)
from .spaces import (
    MorreyParams,
    NormReport,
    lebesgue_norm,
    morrey_norm,
    two_weight_morrey_norm,
    weak_lebesgue_norm,
    weak_morrey_norm,
)
from .weights import (
    EstimateReport,
    ExponentVector,
    FractionalParams,
    PowerWeight,
    SampledWeight,
    Weight,
    WeightDiagnostics,
    ainfty_diagnostics,
    apq_constant,
    conjugate_exponent,
    doubling_constant,
    muckenhoupt_constant,
    multi_ap_constant,
    multi_apq_constant,
    nu_weight,
    random_sampled_weight,
    unit_weight,
    weight_measure,
)
from .harness import (
    THEOREM_IDS,
    ConfigError,
    CorollaryReport,
    ExperimentConfig,
    FunctionInstance,
    LemmaReport,
    RatioReport,
    TailCheckReport,
    check_corollaries,
    check_product_lemma,
    check_tail_bounds,
    default_config,
    render_sweep_svg,
    sweep,
    theorem_ratio,
    write_sweep_csv,
    write_sweep_json,
)

__version__ = "0.1.0"
