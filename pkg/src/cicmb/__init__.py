"""Competitive misinformation/truth cascades with user bias and truth-campaigner selection."""

__version__ = "0.1.0"

from .graph import (  # noqa: E402
    Dag,
    DirectedGraph,
    EdgeListParseError,
    assign_edge_probabilities,
    build_dag,
    load_edge_list,
    topological_order,
    undirected_diameter,
)
from .propagation import (  # noqa: E402
    BiasTable,
    BiasUpdateRule,
    CascadeResult,
    NodeState,
    get_bias_rule,
    monte_carlo_states,
    run_cicmb,
    simulate_final_states,
)
from .truthscore import (  # noqa: E402
    ProbSchedule,
    compute_mval,
    compute_tval,
    select_top_k_truthscore,
    truth_score,
    truthscore_ranking,
)
from .baselines import tib_select, tmb_select, random_select  # noqa: E402
from .experiments import (  # noqa: E402
    ExperimentConfig,
    assign_biases,
    percent_saved,
    pick_seed_sets,
    run_suite,
)
