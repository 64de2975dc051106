"""Elementary-effects (Morris) screening with second-order interaction effects."""

__version__ = "0.1.0"

from .design import (  # noqa: E402
    DesignPlan,
    GridPoint,
    PairBlock,
    ParameterSpec,
    Trajectory,
    delta_for,
    make_plan,
    reduce,
    restore,
    sample_first_order,
    sample_second_order,
    step_sign,
)
from .effects import (  # noqa: E402
    EffectSample,
    EffectsSummary,
    aggregate,
    compute_effects,
    first_order_effects,
    second_order_effects,
)
from .estimator import MorrisScreening  # noqa: E402
from .ledger import EvaluationRecord, Ledger, evaluate_plan  # noqa: E402
from .models import AnalyticModel, ExternalModelSpec  # noqa: E402
from .report import classify, classify_all, emit_scatter_svg, monotonicity_ratios  # noqa: E402
from .transforms import TransformSpec, apply, apply_chain, transformed_outputs  # noqa: E402
