"""Subchannel discrimination and exclusion games played with a state-measurement pair.

Figures of merit with optimal classical post-processing::

    P_succ(Psi, rho, M) = sum_a max_x Tr[M_a Psi_x(rho)]
    P_err (Psi, rho, M) = sum_a min_x Tr[M_a Psi_x(rho)]

The post-processing polytope has deterministic relabellings as its vertices, so
the optimum is attained by ``g(a) = argmax_x`` (resp. ``argmin_x``) and ties go
to the lowest subchannel index.

Witness games: from a state witness ``Z_rho`` and measurement witnesses
``Z_x`` the discrimination game has ``k`` trace-and-prepare subchannels
``eta -> alpha Tr(Z_rho eta) Z_x`` followed by ``n`` identical fillers
``eta -> (1 - F(eta)) xi / n``; the exclusion game uses the weight witnesses,
``beta`` and one filler preparing ``xi_M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import quantifiers as qf
from .errors import DegenerateWitnessError, InvalidInputError, PreconditionError
from .freesets import FreeMeasurementSet, FreeStateSet
from .linalg import (
    CPTP_TOL,
    Povm,
    SubchannelSet,
    density_matrix,
    hermitian,
    make_trace_and_prepare,
    maximally_mixed,
    trace_norm,
)

DEFAULT_N_TARGET = 1e3
RESOURCE_THRESHOLD = 1e-6


def _payoff_table(game: SubchannelSet, rho, povm: Povm) -> np.ndarray:
    """``T[a, x] = Tr[M_a Psi_x(rho)]``."""
    if not isinstance(povm, Povm):
        povm = Povm(povm)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (game.d_in, game.d_in):
        raise InvalidInputError(f"state has dim {rho.shape[0]}, game input dim is {game.d_in}")
    if povm.dim != game.d_out:
        raise InvalidInputError(f"POVM has dim {povm.dim}, game output dim is {game.d_out}")
    outs = game.outputs(rho)
    return np.real(np.einsum("aij,xji->ax", povm.elements, outs))


def eval_discrimination(game: SubchannelSet, rho, povm: Povm):
    """``(P_succ, g)`` with ``g[a]`` the guess assigned to outcome ``a``."""
    t = _payoff_table(game, rho, povm)
    g = np.argmax(t, axis=1)
    return float(np.sum(t[np.arange(t.shape[0]), g])), tuple(int(x) for x in g)


def eval_exclusion(game: SubchannelSet, rho, povm: Povm):
    """``(P_err, g)`` with ``g[a]`` the excluded subchannel for outcome ``a``."""
    t = _payoff_table(game, rho, povm)
    g = np.argmin(t, axis=1)
    return float(np.sum(t[np.arange(t.shape[0]), g])), tuple(int(x) for x in g)


def evaluate(game, rho, povm, kind):
    if kind == "discrimination":
        return eval_discrimination(game, rho, povm)
    if kind == "exclusion":
        return eval_exclusion(game, rho, povm)
    raise InvalidInputError(f"kind must be 'discrimination' or 'exclusion', got {kind!r}")


def cpp_coarse_grain(povm: Povm, k: int) -> Povm:
    """Keep the first ``k - 1`` effects and merge the rest into the last one."""
    if k < 1 or k > povm.outcomes:
        raise InvalidInputError(f"cannot coarse-grain {povm.outcomes} outcomes to {k}")
    if k == povm.outcomes:
        return povm
    els = np.array(povm.elements[:k])
    els[k - 1] = povm.elements[k - 1:].sum(axis=0)
    return Povm(els)


@dataclass(eq=False)
class GameBlueprint:
    """A witness game together with the data it was built from."""

    kind: str
    instrument: SubchannelSet
    coefficient: float
    n: Optional[int]
    state_witness: np.ndarray
    measurement_witnesses: np.ndarray
    completion_state: np.ndarray
    prior: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return len(self.measurement_witnesses)

    @property
    def free_bound(self) -> float:
        """Analytic best free value: ``alpha + 1/n`` (discrimination) or ``beta`` (exclusion)."""
        if self.kind == "discrimination":
            return self.coefficient + 1.0 / self.n
        return self.coefficient

    def recompute_coefficient(self) -> float:
        total = float(np.real(np.trace(self.measurement_witnesses.sum(axis=0))))
        norm = trace_norm(self.state_witness)
        if self.kind == "discrimination":
            return 1.0 / (norm * total)
        return 1.0 / (2.0 * norm * total)

    def normaliser(self, eta) -> float:
        """``F(eta)`` (discrimination) or ``G(eta)`` (exclusion): total weight of the first k subchannels."""
        total = float(np.real(np.trace(self.measurement_witnesses.sum(axis=0))))
        return self.coefficient * float(np.real(np.trace(self.state_witness @ eta))) * total


def _prepare_witnesses(state_witness, measurement_witnesses):
    zr = qf.psd_witness(hermitian(state_witness, "state witness"))
    zm = qf.psd_witness(np.asarray(measurement_witnesses, dtype=complex))
    if zm.ndim != 3:
        raise InvalidInputError("measurement witnesses must be a (k, d, d) array")
    norm = trace_norm(zr)
    total = float(np.real(np.trace(zm.sum(axis=0))))
    if norm <= 1e-12:
        raise DegenerateWitnessError("state witness is zero: the state is free and no separating game exists")
    if total <= 1e-12:
        raise DegenerateWitnessError("measurement witnesses have zero total trace: the measurement is free")
    return zr, zm, norm, total


def default_n(alpha, target=DEFAULT_N_TARGET) -> int:
    """Smallest ``n`` with ``1/(n alpha) <= 1/target``."""
    return int(math.ceil(target / alpha))


def build_discrimination_game(state_witness, measurement_witnesses, n=None, xi=None) -> GameBlueprint:
    zr, zm, norm, total = _prepare_witnesses(state_witness, measurement_witnesses)
    alpha = 1.0 / (norm * total)
    if n is None:
        n = default_n(alpha)
    if int(n) < 1:
        raise InvalidInputError("n must be a positive integer")
    n = int(n)
    d_in, d_out = zr.shape[0], zm.shape[1]
    xi = maximally_mixed(d_out) if xi is None else density_matrix(xi)
    firsts = [make_trace_and_prepare(alpha * zr, z) for z in zm]
    # 1 - F(eta) = Tr[(1 - Z_rho / ||Z_rho||_1) eta]
    filler = make_trace_and_prepare((np.eye(d_in) - zr / norm) / n, xi)
    inst = SubchannelSet(tuple(firsts) + (filler,) * n)
    return GameBlueprint("discrimination", inst, alpha, n, zr, zm, xi)


def build_exclusion_game(state_witness, measurement_witnesses, prior=None) -> GameBlueprint:
    zr, zm, norm, total = _prepare_witnesses(state_witness, measurement_witnesses)
    k = zm.shape[0]
    prior = np.full(k, 1.0 / k) if prior is None else np.asarray(prior, dtype=float)
    if prior.shape != (k,) or np.any(prior < 0) or abs(prior.sum() - 1) > 1e-12:
        raise InvalidInputError("prior must be a probability vector with one entry per witness")
    denom = float(np.real(sum(p * np.trace(z) for p, z in zip(prior, zm))))
    if denom <= 1e-12:
        raise DegenerateWitnessError("prior puts no weight on the measurement witnesses")
    xi_m = np.einsum("x,xij->ij", prior, zm) / denom
    beta = 1.0 / (2.0 * norm * total)
    d_in = zr.shape[0]
    firsts = [make_trace_and_prepare(beta * zr, z) for z in zm]
    filler = make_trace_and_prepare(np.eye(d_in) - zr / (2 * norm), xi_m)
    inst = SubchannelSet(tuple(firsts) + (filler,))
    return GameBlueprint("exclusion", inst, beta, None, zr, zm, xi_m, prior)


@dataclass
class FreePairOptimum:
    value: float
    state: np.ndarray
    povm: np.ndarray
    method: str
    analytic_bound: Optional[float] = None


def free_pair_optimum(game: SubchannelSet, free_state: FreeStateSet, free_povm: FreeMeasurementSet,
                      kind, restarts=20, rng=None, blueprint: Optional[GameBlueprint] = None) -> FreePairOptimum:
    """Best free pair for ``game``: max ``P_succ`` (discrimination) or min ``P_err`` (exclusion).

    The free measurement set is post-processing closed, so post-processing is
    absorbed and the objective ``sum_x Tr[N_x Psi_x(sigma)]`` is bilinear. Its
    optimum over ``N`` is a convex (concave) function of ``sigma``, hence
    attained at a vertex of the free state set. Starting the see-saw from every
    vertex therefore yields the exact optimum; ``restarts`` extra random
    starts are only used when the state set has no vertex list.
    """
    sense = "max" if kind == "discrimination" else "min"
    if kind not in ("discrimination", "exclusion"):
        raise InvalidInputError(f"unknown game kind {kind!r}")
    k = len(game)
    fm = free_povm.with_outcomes(k)
    better = (lambda a, b: a > b) if sense == "max" else (lambda a, b: a < b)

    def best_n(sigma):
        return fm.best_response(game.outputs(sigma), sense)

    def best_sigma(n_ops):
        def objective(sig):
            return float(np.real(np.einsum("xij,xji->", n_ops, game.outputs(sig))))
        return free_state.best_vertex(objective, sense)

    starts = list(free_state.vertices())
    method = "vertex-enumeration"
    best = None
    for sigma in starts:
        val, n_ops = best_n(sigma)
        # see-saw polish: alternate until the value stalls
        for _ in range(50):
            v2, s2 = best_sigma(n_ops)
            v3, n2 = best_n(s2)
            if not better(v3, val + (1e-12 if sense == "max" else -1e-12)):
                break
            val, sigma, n_ops = v3, s2, n2
        if best is None or better(val, best.value):
            best = FreePairOptimum(val, sigma, n_ops, method)
    if blueprint is not None:
        best.analytic_bound = blueprint.free_bound
    return best


@dataclass
class Result1Report:
    discrimination_value: float
    discrimination_free_bound: float
    discrimination_gap: float
    discrimination_gap_normalised: float
    exclusion_value: float
    exclusion_free_bound: float
    exclusion_gap: float
    exclusion_gap_normalised: float
    alpha: float
    beta: float
    n: int
    quantifiers: dict

    @property
    def certified(self) -> bool:
        return self.discrimination_gap > 0 and self.exclusion_gap > 0


def _quantify_pair(rho, povm, free_state, free_povm, solver_opts=None):
    opts = solver_opts or {}
    return {
        "robustness_state": qf.robustness_state(rho, free_state, **opts),
        "robustness_measurement": qf.robustness_measurement(povm, free_povm, **opts),
        "weight_state": qf.weight_state(rho, free_state, **opts),
        "weight_measurement": qf.weight_measurement(povm, free_povm, **opts),
    }


def certify_result1(rho, povm, free_state, free_povm, n=None, n_target=DEFAULT_N_TARGET,
                    solver_opts=None) -> Result1Report:
    """Build both witness games and compare the pair against the analytic free bounds."""
    rho = density_matrix(rho)
    povm = povm if isinstance(povm, Povm) else Povm(povm)
    q = _quantify_pair(rho, povm, free_state, free_povm, solver_opts)
    if q["robustness_state"].value <= RESOURCE_THRESHOLD:
        raise PreconditionError("pair is not fully resourceful: the state is free")
    if q["robustness_measurement"].value <= RESOURCE_THRESHOLD:
        raise PreconditionError("pair is not fully resourceful: the measurement is free")
    zr, zm = q["robustness_state"].witness, q["robustness_measurement"].witness
    alpha = _prepare_alpha(zr, zm)
    disc = build_discrimination_game(zr, zm, n=n if n is not None else default_n(alpha, n_target))
    excl = build_exclusion_game(q["weight_state"].witness, q["weight_measurement"].witness)
    pd, _ = eval_discrimination(disc.instrument, rho, povm)
    pe, _ = eval_exclusion(excl.instrument, rho, povm)
    dgap = pd - disc.free_bound
    egap = excl.free_bound - pe
    return Result1Report(
        pd, disc.free_bound, dgap, dgap / disc.coefficient,
        pe, excl.free_bound, egap, egap / excl.coefficient,
        disc.coefficient, excl.coefficient, disc.n, {k: v.value for k, v in q.items()},
    )


def _prepare_alpha(zr, zm):
    _, _, norm, total = _prepare_witnesses(zr, zm)
    return 1.0 / (norm * total)


@dataclass
class Result2Report:
    robustness_product: float
    weight_product: float
    discrimination_value: float
    alpha: float
    n: int
    discrimination_ratio_interval: tuple
    discrimination_ratio_limit: float
    exclusion_value: float
    beta: float
    exclusion_ratio: float
    random_games: list = field(default_factory=list)
    quantifiers: dict = field(default_factory=dict)
    tol: float = 1e-7

    @property
    def interval_contains_product(self) -> bool:
        lo, hi = self.discrimination_ratio_interval
        return lo - self.tol <= self.robustness_product <= hi + self.tol

    @property
    def interval_width_relative(self) -> float:
        lo, hi = self.discrimination_ratio_interval
        return (hi - lo) / self.robustness_product

    @property
    def bounds_hold(self) -> bool:
        return all(g["discrimination_ok"] and g["exclusion_ok"] for g in self.random_games)

    @property
    def certified(self) -> bool:
        return (self.interval_contains_product and self.bounds_hold
                and abs(self.exclusion_ratio - self.weight_product) <= 1e-5)


def certify_result2(rho, povm, free_state, free_povm, n=None, n_target=DEFAULT_N_TARGET,
                    random_games=20, rng=None, game_size=None, tol=1e-7, solver_opts=None) -> Result2Report:
    """Witness-game ratios against the robustness/weight products, plus the upper/lower bound
    chains on ``random_games`` random instruments."""
    from .sampling import random_instrument

    rng = np.random.default_rng(rng)
    rho = density_matrix(rho)
    povm = povm if isinstance(povm, Povm) else Povm(povm)
    q = _quantify_pair(rho, povm, free_state, free_povm, solver_opts)
    rr, rm = q["robustness_state"].value, q["robustness_measurement"].value
    wr, wm = q["weight_state"].value, q["weight_measurement"].value
    rprod = (1 + rr) * (1 + rm)
    wprod = (1 - wr) * (1 - wm)

    zr, zm = q["robustness_state"].witness, q["robustness_measurement"].witness
    alpha = _prepare_alpha(zr, zm)
    disc = build_discrimination_game(zr, zm, n=n if n is not None else default_n(alpha, n_target))
    pd, _ = eval_discrimination(disc.instrument, rho, povm)
    interval = (pd / disc.free_bound, pd / disc.coefficient)

    excl = build_exclusion_game(q["weight_state"].witness, q["weight_measurement"].witness)
    pe, _ = eval_exclusion(excl.instrument, rho, povm)

    games = []
    for i in range(random_games):
        k = int(game_size) if game_size else int(rng.integers(2, 5))
        game = random_instrument(rho.shape[0], povm.dim, k, rng)
        ps, _ = eval_discrimination(game, rho, povm)
        pf = free_pair_optimum(game, free_state, free_povm, "discrimination").value
        pe_g, _ = eval_exclusion(game, rho, povm)
        pf_e = free_pair_optimum(game, free_state, free_povm, "exclusion").value
        games.append({
            "index": i, "k": k,
            "p_succ": ps, "free_p_succ": pf, "discrimination_bound": rprod * pf,
            "discrimination_ok": ps <= rprod * pf + tol,
            "p_err": pe_g, "free_p_err": pf_e, "exclusion_bound": wprod * pf_e,
            "exclusion_ok": pe_g >= wprod * pf_e - tol,
        })
    return Result2Report(
        rprod, wprod, pd, disc.coefficient, disc.n, interval, pd / disc.coefficient,
        pe, excl.coefficient, pe / excl.coefficient, games,
        {"robustness_state": rr, "robustness_measurement": rm, "weight_state": wr, "weight_measurement": wm},
        tol,
    )
