"""The acceptance matrix: ten end-to-end criteria with fixed tolerances and time budgets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    budget: float
    detail: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.runtime < self.budget

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_budget else "FAIL"
        extra = "" if self.within_budget else f" (over budget {self.budget:g}s)"
        return f"[{status}] {self.number:2d} {self.name}: {self.runtime:.2f}s{extra}"


def _timed(number, name, budget, func, threads=1):
    t0 = time.perf_counter()
    passed, detail = func(threads)
    return CriterionResult(number, name, bool(passed), time.perf_counter() - t0, budget, detail)


def c1_kr_duality(threads=1):
    from .sweeps import kr_duality_sweep

    rows = kr_duality_sweep(200, seed=0)
    worst = max(r["gap"] / max(1.0, r["primal"]) for r in rows)
    return worst <= 1e-9, {"instances": len(rows), "max_relative_gap": worst}


def c2_unified_speed_limit(threads=1):
    from .sweeps import speed_limit_sweep

    reps = speed_limit_sweep(range(100), L=5, N=3, alpha=2.5, horizon=10.0, threads=threads)
    viol = [r for r in reps if r.status != "pass"]
    rel = max(r.details["relative_quadrature_error"] for r in reps)
    ok = not viol and rel <= 1e-6
    return ok, {"protocols": len(reps), "violations": len(viol), "max_relative_quadrature_error": rel,
                "min_ratio_tau_over_bound": min(r.measured / r.bound_value for r in reps if r.bound_value > 0)}


def c3_exact_transfer(threads=1):
    from ..protocols import execute_protocol, lemma_schedule

    worst1 = max(1 - execute_protocol(lemma_schedule(1, M)).fidelity for M in range(3, 9))
    worst3 = max(1 - execute_protocol(lemma_schedule(3, M)).fidelity for M in range(3, 9))
    return max(worst1, worst3) <= 1e-10, {"lemma1_max_infidelity": worst1, "lemma3_max_infidelity": worst3}


def c4_finite_U(threads=1):
    from ..protocols import finite_U_convergence

    worst = 1.0
    decreasing = True
    fits = []
    for lemma in (2, 4):
        for M in range(3, 7):
            for k in range(1, M + 1):
                tab = finite_U_convergence(lemma, M, k, 1.0, [1e3, 1e4, 1e5, 1e6])
                inf = [r["infidelity"] for r in tab["rows"]]
                worst = min(worst, tab["rows"][-1]["fidelity"])
                # infidelity falls at every step in U, and the fitted power law agrees
                decreasing &= all(b < a for a, b in zip(inf, inf[1:])) and tab["fit"]["exponent"] > 0
                fits.append(tab["fit"])
    return worst >= 0.999 and decreasing, {
        "min_fidelity_at_1e6": worst,
        "exponent_range": [min(f["exponent"] for f in fits), max(f["exponent"] for f in fits)],
        "max_fit_residual": max(f["residual"] for f in fits),
    }


def c5_sylvester_kac(threads=1):
    from ..kac import (
        binomial_identity_suite,
        biorthogonality_exact,
        corner_amplitude,
        integer_spectrum_residual,
    )

    spec = max(integer_spectrum_residual(M) for M in range(1, 26))
    bio = all(biorthogonality_exact(M) for M in range(1, 26))
    corner = max(abs(abs(corner_amplitude(M)) - 1) for M in range(3, 16, 2))
    binom = all(binomial_identity_suite(M) for M in range(2, 31))
    ok = spec <= 1e-10 and bio and corner <= 1e-8 and binom
    return ok, {"spectrum_residual": spec, "biorthogonal_exact": bio, "corner_modulus_error": corner,
                "binomial_identities": binom}


def c6_supersonic(threads=1):
    from ..bounds import BoundParams, theorem1_check
    from ..lattice import build_lattice
    from ..protocols import execute_protocol, supersonic_transfer

    # (pi/2J)(L-1)(1/L + 2/L^1.5) < pi/J  <=>  2(L-1) < (L+1) sqrt(L)  <=>  4(L-1)^2 < (L+1)^2 L,
    # an integer comparison
    def under_budget(L):
        return 4 * (L - 1) ** 2 < (L + 1) ** 2 * L

    budget_ok = all(under_budget(L) for L in range(3, 65))
    fids, scopes = {}, {}
    for L in (3, 4, 5):
        res = execute_protocol(supersonic_transfer(L, 1.0, 1e5))
        fids[L] = res.fidelity
        rep = theorem1_check(res.trajectory, build_lattice(1, [L]), [0], [L - 1], BoundParams(1.0, 3.0))
        scopes[L] = rep.status
    ok = budget_ok and min(fids.values()) >= 0.99 and all(s == "out_of_scope" for s in scopes.values())
    return ok, {"budget_exact": budget_ok, "fidelity": fids, "theorem1_status": scopes}


def c7_theorem1(threads=1):
    from ..bounds import BoundParams, theorem1_check
    from ..lattice import build_lattice, hypercubic_shell_constant
    from ..protocols import execute_protocol, sequential_mott_transfer

    sched = sequential_mott_transfer(6, 4, 1.0, 1e5)
    res = execute_protocol(sched)
    g = build_lattice(1, [6])
    p = BoundParams(1.0, 3.0, 1, gamma=hypercubic_shell_constant(1))
    rep = theorem1_check(res.trajectory, g, [0], [5], p)
    ok = rep.status == "pass" and min(res.stage_fidelities) >= 0.99
    return ok, {"tau": rep.measured, "bound": rep.bound_value, "ratio": rep.details.get("ratio"),
                "min_stage_fidelity": min(res.stage_fidelities), "final_fidelity": res.fidelity}


def c8_theorem2(threads=1):
    from .sweeps import theorem2_sweep

    reps = theorem2_sweep(range(100), threads=threads)
    viol = [r for r in reps if r.status != "pass"]
    return not viol, {"protocols": len(reps), "violations": len(viol),
                      "max_ratio": max(r.details["max_ratio"] for r in reps),
                      "max_dim": max(r.details["dim"] for r in reps)}


def c9_velocity(threads=1):
    from .sweeps import velocity_sweep

    rep, ratios = velocity_sweep(500, seed=0)
    viol = sum(r > 1.0 for r in ratios)
    return viol == 0, {"samples": len(ratios), "violations": int(viol), "max_ratio": max(ratios)}


def c10_markov(threads=1):
    from .sweeps import markov_sweep

    rows = markov_sweep(50, seed=0)
    diff = max(r["diff"] for r in rows)
    looser = all(r["corollary"] <= r["theorem1"] for r in rows)
    return diff <= 1e-8 and looser, {"max_optimizer_diff": diff, "corollary_never_exceeds": looser}


CRITERIA = [
    (1, "KR duality", 5.0, c1_kr_duality),
    (2, "unified speed limit", 60.0, c2_unified_speed_limit),
    (3, "exact two-site transfer (lemmas 1, 3)", 5.0, c3_exact_transfer),
    (4, "finite-U transfer (lemmas 2, 4)", 30.0, c4_finite_U),
    (5, "Sylvester-Kac oracles", 10.0, c5_sylvester_kac),
    (6, "supersonic protocol", 120.0, c6_supersonic),
    (7, "macroscopic transfer time bound", 60.0, c7_theorem1),
    (8, "transfer probability bound", 120.0, c8_theorem2),
    (9, "velocity ceiling", 10.0, c9_velocity),
    (10, "Markov corollary", 1.0, c10_markov),
]


def run_criterion(number: int, threads: int = 1) -> CriterionResult:
    for n, name, budget, func in CRITERIA:
        if n == number:
            return _timed(n, name, budget, func, threads)
    raise KeyError(number)


def run_suite(threads: int = 1, numbers=None) -> list[CriterionResult]:
    return [run_criterion(n, threads) for n, *_ in CRITERIA if numbers is None or n in numbers]
