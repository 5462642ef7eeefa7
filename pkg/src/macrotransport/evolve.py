"""Exact evolution under piecewise-constant Hamiltonians and flow observables.

Each stage holds one :class:`HamiltonianModel` for a fixed duration. Small
sectors (dim <= ``DENSE_DIM``) are propagated through a dense eigendecomposition,
larger ones through a Lanczos approximation of exp(-iHt)v with a per-step
error target.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .fock import DENSITY_DIM_CAP, FockBasis, StateEnsemble, check_state, diagonal_weights
from .hamiltonian import HamiltonianModel, hop_entries, materialize

logger = logging.getLogger(__name__)

DENSE_DIM = 512
KRYLOV_TOL = 1e-11
NORM_ABORT = 1e-8


class EvolutionError(RuntimeError):
    """Norm or trace drifted beyond tolerance during propagation."""


@dataclass(frozen=True)
class Stage:
    model: HamiltonianModel
    duration: float
    label: str = ""
    target: tuple | None = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"stage duration must be positive, got {self.duration}")


# -- propagators ---------------------------------------------------------------


def lanczos_expm_multiply(H, v: np.ndarray, t: float, tol: float = KRYLOV_TOL, m_max: int = 40) -> np.ndarray:
    """exp(-i H t) v for Hermitian ``H`` by restarted Lanczos sub-steps.

    Each sub-step of length ``tau`` is accepted when the standard a-posteriori
    estimate beta * h_{m+1,m} * |[exp(-i tau T_m)]_{m,0}| is below
    ``tol * tau / |t|``.
    """
    w = np.asarray(v, dtype=complex).copy()
    n = len(w)
    m_max = min(m_max, n)
    remaining = float(t)
    step = remaining
    sign = 1.0 if t >= 0 else -1.0
    while abs(remaining) > 0:
        beta = np.linalg.norm(w)
        if beta == 0:
            return w
        V = np.zeros((n, m_max + 1), dtype=complex)
        alpha = np.zeros(m_max)
        offd = np.zeros(m_max)
        V[:, 0] = w / beta
        m = m_max
        breakdown = False
        for j in range(m_max):
            u = H @ V[:, j]
            alpha[j] = np.vdot(V[:, j], u).real
            u = u - alpha[j] * V[:, j] - (offd[j - 1] * V[:, j - 1] if j else 0)
            # full reorthogonalisation keeps the basis orthonormal at m ~ 40
            u -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ u)
            offd[j] = np.linalg.norm(u)
            if offd[j] < 1e-14 * max(1.0, abs(alpha[j])):
                m = j + 1
                breakdown = True
                break
            V[:, j + 1] = u / offd[j]
        Tm = np.diag(alpha[:m]) + np.diag(offd[: m - 1], 1) + np.diag(offd[: m - 1], -1)
        evals, evecs = np.linalg.eigh(Tm)
        tau = sign * min(abs(step), abs(remaining))
        while True:
            coef = evecs @ (np.exp(-1j * evals * tau) * evecs[0].conj())
            err = 0.0 if breakdown else beta * offd[m - 1] * abs(coef[m - 1])
            if err <= tol * abs(tau) / max(abs(t), 1e-300) or abs(tau) < 1e-12 * abs(t):
                break
            tau /= 2
        w = beta * (V[:, :m] @ coef)
        remaining -= tau
        step = 2 * tau
        if abs(remaining) < 1e-15 * abs(t):
            break
    return w


class StagePropagator:
    """exp(-i H t) for one constant stage Hamiltonian."""

    def __init__(self, H: sp.spmatrix, dense_dim: int = DENSE_DIM):
        self.H = H
        self.dim = H.shape[0]
        self.dense = self.dim <= dense_dim
        if self.dense:
            self.evals, self.evecs = la.eigh(H.toarray())

    def unitary(self, t: float) -> np.ndarray:
        if not self.dense:
            raise ValueError("full unitary requested for a Krylov-propagated stage")
        return (self.evecs * np.exp(-1j * self.evals * t)) @ self.evecs.conj().T

    def apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        if self.dense:
            return self.evecs @ (np.exp(-1j * self.evals * t) * (self.evecs.conj().T @ psi))
        return lanczos_expm_multiply(self.H, psi, t)

    def apply_many(self, psi: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """States at every time in ``ts`` as columns of a (dim, len(ts)) array."""
        ts = np.asarray(ts, dtype=float)
        if self.dense:
            c = self.evecs.conj().T @ psi
            return self.evecs @ (np.exp(-1j * np.outer(self.evals, ts)) * c[:, None])
        out = np.empty((self.dim, len(ts)), dtype=complex)
        cur, t_prev = psi, 0.0
        for k, t in enumerate(ts):
            if t != t_prev:
                cur = lanczos_expm_multiply(self.H, cur, t - t_prev)
                t_prev = t
            out[:, k] = cur
        return out

    def conjugate(self, rho: np.ndarray, t: float) -> np.ndarray:
        U = self.unitary(t)
        return U @ rho @ U.conj().T


# -- observables -----------------------------------------------------------------


class FlowOperator:
    """Maps states to site flows phi_ij = (2/N) Im <A_ij>, A_ij the part of H moving j -> i.

    For pure hopping A_ij = J_ij b_i^+ b_j; tunnelling adds T_ij b_i^+ (n_i + n_j) b_j.
    """

    def __init__(self, model: HamiltonianModel, t: float = 0.0):
        e = hop_entries(model, t)
        L = model.basis.n_sites
        self.L = L
        self.N = model.basis.total
        self.entries = e
        pair = e.dst * L + e.src
        self.scatter = sp.csr_matrix(
            (np.ones(len(pair)), (pair, np.arange(len(pair)))), shape=(L * L, len(pair))
        )

    def pure(self, psis: np.ndarray) -> np.ndarray:
        """(K, L, L) flows for the columns of a (dim, K) array of pure states."""
        psis = psis.reshape(psis.shape[0], -1)
        e = self.entries
        im = np.imag(psis[e.rows].conj() * e.values[:, None] * psis[e.cols])
        flat = self.scatter @ im if len(e.rows) else np.zeros((self.L * self.L, psis.shape[1]))
        return (2.0 / self.N) * np.asarray(flat).T.reshape(-1, self.L, self.L)

    def density(self, rho: np.ndarray) -> np.ndarray:
        e = self.entries
        im = np.imag(e.values * rho[e.cols, e.rows])
        flat = self.scatter @ im
        return (2.0 / self.N) * np.asarray(flat).reshape(self.L, self.L)

    def __call__(self, state) -> np.ndarray:
        if isinstance(state, StateEnsemble):
            per = self.pure(state.vectors)
            return np.tensordot(state.weights, per, axes=1)
        state = np.asarray(state)
        if state.ndim == 1:
            return self.pure(state[:, None])[0]
        return self.density(state)


def site_flows(state, model: HamiltonianModel, t: float = 0.0) -> np.ndarray:
    """Antisymmetric matrix of site flows; row sums give dx_i/dt."""
    return FlowOperator(model, t)(state)


def velocity_term(flows: np.ndarray, cost) -> np.ndarray:
    """Phi = (1/2) sum_{i != j} c_ij |phi_ij|; accepts (L, L) or (K, L, L) flows."""
    c = np.asarray(cost, dtype=float)
    return 0.5 * (np.abs(flows) * c).sum(axis=(-2, -1))


def config_currents(state, model: HamiltonianModel, t: float = 0.0) -> sp.csr_matrix:
    """Probability currents between neighbouring configurations.

    Entry [N, N'] is the rate at which weight flows from N' into N, so the
    row sums reproduce dp_N/dt. Only tunnelling-free models are supported.
    """
    if model.has_tunneling:
        raise ValueError("configuration currents are defined for tunnelling-free models only")
    e = hop_entries(model, t)
    dim = model.basis.dim
    if isinstance(state, StateEnsemble):
        cur = sum(w * np.imag(v[e.rows].conj() * v[e.cols]) for w, v in state.members())
    else:
        state = np.asarray(state)
        if state.ndim == 1:
            cur = np.imag(state[e.rows].conj() * state[e.cols])
        else:
            cur = -np.imag(state[e.rows, e.cols])
    vals = 2.0 * e.values * cur
    out = sp.coo_matrix((vals, (e.rows, e.cols)), shape=(dim, dim)).tocsr()
    out.sum_duplicates()
    return out


def energy(state, H) -> float:
    if isinstance(state, StateEnsemble):
        return float(sum(w * np.vdot(v, H @ v).real for w, v in state.members()))
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.vdot(state, H @ state).real)
    return float(np.real(np.trace(H @ state)))


# -- trajectories ------------------------------------------------------------------


@dataclass
class Trajectory:
    """Sampled evolution. Stage boundaries appear twice (end of one, start of next)."""

    times: np.ndarray
    stage_index: np.ndarray
    concentrations: np.ndarray
    flows: np.ndarray
    velocity: np.ndarray | None
    probabilities: np.ndarray | None
    fidelity: np.ndarray | None
    initial: object
    final: object
    stages: list
    states: np.ndarray | None = field(default=None, repr=False)

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.stages))

    @property
    def has_tunneling(self) -> bool:
        return any(s.model.has_tunneling for s in self.stages)

    def to_csv(self, path, precision: int = 12) -> None:
        L = self.concentrations.shape[1]
        header = ["t"] + [f"x_{i}" for i in range(L)] + ["Phi", "fidelity"]
        rows = []
        for k, t in enumerate(self.times):
            phi = "" if self.velocity is None else f"{self.velocity[k]:.{precision}g}"
            fid = "" if self.fidelity is None else f"{self.fidelity[k]:.{precision}g}"
            xs = [f"{v:.{precision}g}" for v in self.concentrations[k]]
            rows.append(",".join([f"{t:.{precision}g}", *xs, phi, fid]))
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            fh.write("\n".join(rows) + "\n")


def _norm_of(state) -> float:
    if isinstance(state, StateEnsemble):
        return float(np.linalg.norm(state.vectors, axis=0) @ state.weights)
    state = np.asarray(state)
    if state.ndim == 1:
        return float(np.linalg.norm(state) ** 2)
    return float(np.trace(state).real)


def evolve(
    initial,
    stages,
    samples_per_stage: int = 64,
    cost=None,
    target=None,
    record_probabilities: bool = False,
    record_states: bool = False,
) -> Trajectory:
    """Propagate ``initial`` through ``stages`` and sample observables.

    ``samples_per_stage`` points (endpoints included) are taken uniformly in
    every stage. ``cost`` enables the velocity term; ``target`` (a basis
    index or a configuration tuple) enables the fidelity column.
    """
    if not stages:
        raise ValueError("need at least one stage")
    check_state(initial)
    basis: FockBasis = stages[0].model.basis
    if isinstance(initial, np.ndarray) and initial.ndim == 2 and basis.dim > DENSITY_DIM_CAP:
        raise ValueError(f"density matrices are capped at dim {DENSITY_DIM_CAP}; use a StateEnsemble")
    n = max(2, int(samples_per_stage))
    tgt = None
    if target is not None:
        tgt = target if isinstance(target, (int, np.integer)) else basis.index_of(target)

    times, idx, flows, probs, kept = [], [], [], [], []
    state = initial
    t0 = 0.0
    norm0 = _norm_of(initial)
    for s, stage in enumerate(stages):
        if stage.model.basis is not basis and stage.model.basis.dim != basis.dim:
            raise ValueError("all stages must act on the same Fock sector")
        H = materialize(stage.model, t0)
        prop = StagePropagator(H)
        flow_op = FlowOperator(stage.model, t0)
        ts = np.linspace(0.0, stage.duration, n)
        batch_p, batch_f = _sample_stage(prop, flow_op, state, ts, kept if record_states else None)
        times.append(t0 + ts)
        idx.append(np.full(n, s))
        probs.append(batch_p)
        flows.append(batch_f)
        state = _advance(prop, state, stage.duration)
        drift = abs(_norm_of(state) - norm0)
        if drift > NORM_ABORT:
            raise EvolutionError(f"norm drift {drift:.2e} after stage {s} ({stage.label or 'unnamed'})")
        t0 += stage.duration

    probs = np.vstack(probs)
    flows = np.concatenate(flows)
    xs = probs @ basis.configs / basis.total
    velocity = velocity_term(flows, cost) if cost is not None else None
    return Trajectory(
        times=np.concatenate(times),
        stage_index=np.concatenate(idx),
        concentrations=xs,
        flows=flows,
        velocity=velocity,
        probabilities=probs if record_probabilities else None,
        fidelity=None if tgt is None else probs[:, tgt].copy(),
        initial=initial,
        final=state,
        stages=list(stages),
        states=np.array(kept) if record_states else None,
    )


def _advance(prop: StagePropagator, state, t: float):
    if isinstance(state, StateEnsemble):
        vecs = np.column_stack([prop.apply(v, t) for v in state.vectors.T])
        return StateEnsemble(state.weights, vecs)
    state = np.asarray(state)
    if state.ndim == 1:
        return prop.apply(state, t)
    return prop.conjugate(state, t)


def _sample_stage(prop, flow_op, state, ts, keep):
    if isinstance(state, StateEnsemble):
        p = np.zeros((len(ts), prop.dim))
        f = np.zeros((len(ts), flow_op.L, flow_op.L))
        for w, v in state.members():
            psis = prop.apply_many(v, ts)
            p += w * (np.abs(psis) ** 2).T
            f += w * flow_op.pure(psis)
        if keep is not None:
            keep.extend([None] * len(ts))
        return p, f
    state = np.asarray(state)
    if state.ndim == 1:
        psis = prop.apply_many(state, ts)
        if keep is not None:
            keep.extend(psis.T)
        return (np.abs(psis) ** 2).T, flow_op.pure(psis)
    p, f = [], []
    for t in ts:
        rho = prop.conjugate(state, t)
        if keep is not None:
            keep.append(rho)
        p.append(np.real(np.diag(rho)))
        f.append(flow_op.density(rho))
    return np.array(p), np.array(f)


def final_state(initial, stages):
    """State after all stages, without sampling."""
    state = initial
    t0 = 0.0
    for stage in stages:
        prop = StagePropagator(materialize(stage.model, t0))
        state = _advance(prop, state, stage.duration)
        t0 += stage.duration
    return state


def fidelity(state, target_index: int) -> float:
    return float(diagonal_weights(state)[target_index])
