"""Buy-and-sell prophet-inequality policies: exact analytics and simulation."""

__version__ = "0.1.0"

from .distributions import (  # noqa: F401
    DiscreteFinite,
    MixtureDist,
    Perturbed,
    UniformInterval,
    dist_from_json,
    dist_to_json,
    expected_abs_diff,
    expected_abs_dev,
    expected_straddle,
    median,
    sample,
    sample_many,
)
from .dp_optimal import (  # noqa: F401
    DPValue,
    dp_fixed_order,
    dp_value_iid,
    dp_value_k_items,
    dp_value_revealed_order,
)
from .errors import DomainError  # noqa: F401
from .exact_analytics import (  # noqa: F401
    ExactReport,
    check_two_medians,
    exact_expected_alg,
    exact_expected_opt,
    exact_expected_opt_bandit,
    exact_report,
)
from .instances import (  # noqa: F401
    BanditInstance,
    Instance,
    Order,
    Trace,
    builtin_instance,
    draw_trace,
    instance_from_json,
    instance_to_json,
    random_walk_trace,
)
from .offline_oracle import (  # noqa: F401
    Action,
    ActionSeq,
    opt_actions,
    opt_bandit,
    opt_budgeted,
    opt_profit,
    opt_profit_k,
)
from .policies import (  # noqa: F401
    PolicyRun,
    PolicySpec,
    ThresholdSpec,
    best_threshold,
    iid_median_threshold,
    mixture_median_threshold,
    run_bandit_policy,
    run_budgeted_threshold,
    run_sample_policy,
    run_single_sample_policy,
    run_threshold,
    run_unknown_dist_policy,
    sixteenth_threshold,
)
from .sim_harness import (  # noqa: F401
    SimReport,
    estimate_policy,
    estimate_ratio,
    estimate_walk_threshold,
)
