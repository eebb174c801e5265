"""Bayesian posteriors of network-structure features.

Estimates how likely structural features of a discrete Bayesian
network (edges, Markov-blanket membership, directed paths) are under
the full Bayesian posterior over structures, using closed-form sums
over all bounded-indegree networks consistent with a variable ordering
and MCMC over orderings. Ships a direct structure sampler, greedy
search, a bootstrap baseline, and brute-force enumeration oracles for
verification.
"""

from .dag import Dag, empty_dag
from .data import (
    CountTable,
    Dataset,
    GroundTruthNetwork,
    counts,
    forward_sample,
    load_csv,
    load_network,
    random_network,
    save_csv,
    save_network,
)
from .errors import (
    BnposteriorError,
    CapExceededError,
    DataFormatError,
    ScoreUnderflowError,
)
from .evaluation import FeatureLabelTable, label_features, tradeoff_curve, write_curve
from .exact import (
    enumerate_dags,
    exact_feature_posterior_dags,
    exact_feature_posterior_orders,
    exact_feature_tables_dags,
    exact_feature_tables_orders,
)
from .features import (
    FeaturePosteriorTable,
    McmcTraceRecord,
    read_feature_table,
    write_feature_table,
    write_trace,
)
from .order_mcmc import OrderMcmcConfig, accept, estimate_features, propose, run_chain
from .ordering import (
    OrderScoreState,
    consistent_families,
    edge_posterior,
    family_posterior,
    flip_update,
    log_marginal_given_order,
    markov_posterior,
    sample_dag_given_order,
)
from .scoring import (
    PAPER_SETTINGS,
    FamilyCache,
    ScoredFamily,
    ScoreParams,
    build_family_cache,
    enumerate_families_pruned,
    log_family_score,
    log_rho,
    oracle_cache,
    select_candidates,
)
from .search import bootstrap_confidence, greedy_hill_climb
from .structure_mcmc import (
    StructureMcmcConfig,
    estimate_structure_features,
    legal_moves,
    run_structure_chain,
    structure_step,
)

__version__ = "0.1.0"
