"""Speed limits for macroscopic boson transport on long-range lattices.

Exact evolution in fixed-N Fock sectors, discrete optimal transport, the
closed-form transfer bounds and the staged protocols that approach them.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundParams,
    BoundReport,
    kappa1,
    kappa2,
    markov_corollary,
    min_time_bound,
    optimal_mu_prime,
    probability_bound,
    riemann_zeta,
    theorem1_check,
    theorem2_check,
    unified_speed_limit_check,
    velocity_upper_bound,
)
from .evolve import Stage, Trajectory, evolve, site_flows, velocity_term
from .fock import FockBasis, StateEnsemble, enumerate_basis, mott_state, random_state
from .hamiltonian import (
    BoseHubbard,
    HamiltonianModel,
    HoppingSpec,
    TunnelingSpec,
    build_lemma_hamiltonian,
    materialize,
    power_law_hopping,
)
from .lattice import LatticeGeometry, build_lattice, cost_matrix, set_distance, shell_constant
from .protocols import (
    ProtocolSchedule,
    execute_protocol,
    finite_U_convergence,
    sequential_mott_transfer,
    stage_time,
    supersonic_transfer,
)
from .transport import wasserstein_dual, wasserstein_primal
