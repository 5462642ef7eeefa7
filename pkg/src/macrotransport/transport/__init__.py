"""Discrete optimal transport on lattice sites and on configuration space."""

from .configs import (
    HopGraphTooLarge,
    config_cost,
    config_cost_table,
    hop_graph,
    wasserstein_configs,
    wasserstein_configs_from_basis,
)
from .network_simplex import SimplexError, solve_transport
from .wasserstein import (
    TransportPlan,
    c_transform,
    duality_gap,
    lipschitz_violation,
    region_transfer_lower_bound,
    wasserstein_dual,
    wasserstein_primal,
)
