"""Order plus/minus infinity entropies and mutual informations, in bits.

For a joint ``p(x, g)`` with marginal ``p(x)``::

    I_+inf = log( sum_g max_x p(x,g) / max_x p(x) )
    I_-inf = log( min_x p(x) / sum_g min_x p(x,g) )

Symbols ``x`` with ``p(x) = 0`` are dropped before either quantity is formed:
they never occur, and keeping them would make every ``min`` vanish.
``I_-inf`` is ``+inf`` exactly when ``sum_g min_x p(x,g) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .freesets import FreeMeasurementSet, FreeStateSet
from .games import eval_discrimination, eval_exclusion, free_pair_optimum
from .linalg import ChannelEnsemble, Povm, SubchannelSet, density_matrix, scaled

INF = math.inf
JOINT_TOL = 1e-10


def log2(x) -> float:
    return math.log2(x) if x > 0 else -INF


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """``probs[x, g] = p(x, g)``; ``prior`` is the row marginal."""

    probs: np.ndarray
    prior: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        prior = np.asarray(self.prior, dtype=float)
        if p.ndim != 2 or prior.shape != (p.shape[0],):
            raise InvalidInputError("probs must be (k, o) with a length-k prior")
        if np.any(p < -JOINT_TOL):
            raise InvalidInputError("joint distribution has negative entries")
        if abs(p.sum() - 1.0) > JOINT_TOL:
            raise InvalidInputError(f"joint distribution sums to {p.sum()!r}, not 1")
        if np.max(np.abs(p.sum(axis=1) - prior)) > JOINT_TOL:
            raise InvalidInputError("row sums of the joint distribution differ from the prior")
        object.__setattr__(self, "probs", np.clip(p, 0.0, None))
        object.__setattr__(self, "prior", prior)

    @classmethod
    def from_probs(cls, probs):
        p = np.asarray(probs, dtype=float)
        return cls(p, p.sum(axis=1))

    def support(self) -> np.ndarray:
        """Rows with nonzero prior."""
        return self.probs[self.prior > 0]

    def coarse_grain(self, g1, g2) -> "JointDistribution":
        """Merge guess columns ``g1`` and ``g2``."""
        p = self.probs.copy()
        p[:, g1] += p[:, g2]
        return JointDistribution(np.delete(p, g2, axis=1), self.prior)


def joint_from_task(ensemble: ChannelEnsemble, rho, povm) -> JointDistribution:
    """``p(x, g) = p(x) Tr[M_g Lambda_x(rho)]``."""
    rho = density_matrix(rho)
    povm = povm if isinstance(povm, Povm) else Povm(povm)
    chans = ensemble.channels
    if rho.shape[0] != chans[0].d_in:
        raise InvalidInputError(f"state has dim {rho.shape[0]}, channels take dim {chans[0].d_in}")
    if povm.dim != chans[0].d_out:
        raise InvalidInputError(f"POVM has dim {povm.dim}, channels output dim {chans[0].d_out}")
    cond = np.array([[np.real(np.trace(m @ c(rho))) for m in povm] for c in chans])
    probs = np.clip(cond, 0.0, None) * ensemble.prior[:, None]
    # absorb rounding so the joint is exactly normalised per row
    rows = probs.sum(axis=1, keepdims=True)
    probs = np.where(rows > 0, probs * (ensemble.prior[:, None] / np.where(rows > 0, rows, 1.0)), 0.0)
    return JointDistribution(probs, ensemble.prior)


def entropy_plus(prior) -> float:
    return -log2(float(np.max(prior)))


def entropy_minus(prior) -> float:
    prior = np.asarray(prior)
    return -log2(float(np.min(prior[prior > 0])))


def conditional_entropy_plus(j: JointDistribution) -> float:
    return -log2(float(np.sum(np.max(j.support(), axis=0))))


def conditional_entropy_minus(j: JointDistribution) -> float:
    """``+inf`` when some guess never has all symbols possible."""
    return -log2(float(np.sum(np.min(j.support(), axis=0))))


def mutual_info_plus(j: JointDistribution) -> float:
    s = float(np.sum(np.max(j.support(), axis=0)))
    return max(0.0, math.log2(s / float(np.max(j.prior))))


def mutual_info_minus(j: JointDistribution) -> float:
    s = float(np.sum(np.min(j.support(), axis=0)))
    if s <= 0.0:
        return INF
    pmin = float(np.min(j.prior[j.prior > 0]))
    return max(0.0, math.log2(pmin / s))


def extended_sub(a, b):
    """``a - b`` on the extended reals; ``None`` for ``inf - inf``."""
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        return None
    return a - b


def fmt_ext(x) -> object:
    """JSON-friendly extended real."""
    if x is None:
        return "indeterminate"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class EnsembleCertificate:
    index: int
    k: int
    i_plus: float
    i_plus_free: float
    gap_plus: float
    bound_plus: float
    ok_plus: bool
    i_minus: float
    i_minus_free: float
    gap_minus: object
    bound_minus: float
    ok_minus: bool
    status_minus: str
    identity_plus_error: float
    identity_minus_error: float

    @property
    def saturation_plus(self) -> float:
        return self.gap_plus / self.bound_plus if self.bound_plus > 0 else 0.0


@dataclass
class Result3Report:
    robustness_bound: float
    weight_bound: float
    ensembles: list = field(default_factory=list)
    tol: float = 1e-6

    @property
    def bounds_hold(self) -> bool:
        return all(e.ok_plus and e.ok_minus for e in self.ensembles)

    @property
    def max_identity_error(self) -> float:
        return max((max(e.identity_plus_error, e.identity_minus_error) for e in self.ensembles), default=0.0)

    @property
    def max_saturation(self) -> float:
        """Largest observed ``gap / bound`` on the plus side (reported, not claimed tight)."""
        return max((e.saturation_plus for e in self.ensembles), default=0.0)


def _neg_log_bound(w) -> float:
    return INF if w >= 1.0 else -math.log2(1.0 - w)


def certify_ensemble(index, ensemble, rho, povm, free_state, free_povm, quantifiers, tol=1e-6):
    """Check both information-gap inequalities on one ensemble; ``quantifiers`` holds R and W values."""
    j = joint_from_task(ensemble, rho, povm)
    support = ensemble.prior > 0
    if support.sum() < 2:
        raise InvalidInputError(f"ensemble {index} needs at least two symbols with nonzero prior")
    game = SubchannelSet(tuple(scaled(c, p) for c, p, keep in
                               zip(ensemble.channels, ensemble.prior, support) if keep))
    p_succ, _ = eval_discrimination(game, rho, povm)
    p_err, _ = eval_exclusion(game, rho, povm)

    h_plus = conditional_entropy_plus(j)
    h_minus = conditional_entropy_minus(j)
    id_plus = abs(h_plus - (-log2(p_succ)))
    ref_minus = -log2(p_err)
    if math.isinf(h_minus) or math.isinf(ref_minus):
        id_minus = 0.0 if h_minus == ref_minus else INF
    else:
        id_minus = abs(h_minus - ref_minus)

    pmax = float(np.max(ensemble.prior))
    pmin = float(np.min(ensemble.prior[support]))

    i_plus = mutual_info_plus(j)
    best_free_succ = free_pair_optimum(game, free_state, free_povm, "discrimination").value
    i_plus_free = max(0.0, math.log2(best_free_succ / pmax))
    gap_plus = i_plus - i_plus_free
    bound_plus = math.log2(1 + quantifiers["robustness_state"]) + math.log2(1 + quantifiers["robustness_measurement"])
    ok_plus = gap_plus <= bound_plus + tol

    i_minus = mutual_info_minus(j)
    worst_free_err = free_pair_optimum(game, free_state, free_povm, "exclusion").value
    i_minus_free = INF if worst_free_err <= 0 else max(0.0, math.log2(pmin / worst_free_err))
    bound_minus = _neg_log_bound(quantifiers["weight_state"]) + _neg_log_bound(quantifiers["weight_measurement"])
    gap_minus = extended_sub(i_minus, i_minus_free)
    if gap_minus is None:
        ok_minus, status = True, "indeterminate"
    elif math.isinf(bound_minus):
        ok_minus, status = True, "vacuous"
    elif math.isinf(gap_minus):
        ok_minus = gap_minus < 0
        status = "satisfied" if ok_minus else "violated"
    else:
        ok_minus = gap_minus <= bound_minus + tol
        status = "satisfied" if ok_minus else "violated"

    return EnsembleCertificate(
        index, len(ensemble), i_plus, i_plus_free, gap_plus, bound_plus, ok_plus,
        i_minus, i_minus_free, gap_minus, bound_minus, ok_minus, status, id_plus, id_minus,
    )


def certify_result3(rho, povm, free_state: FreeStateSet, free_povm: FreeMeasurementSet, ensembles,
                    tol=1e-6, solver_opts=None) -> Result3Report:
    """Per-ensemble check of both information-gap bounds (the max over all ensembles is not computable)."""
    from . import quantifiers as qf

    rho = density_matrix(rho)
    povm = povm if isinstance(povm, Povm) else Povm(povm)
    fm = free_povm.with_outcomes(povm.outcomes)
    opts = solver_opts or {}
    q = {
        "robustness_state": qf.robustness_state(rho, free_state, **opts).value,
        "robustness_measurement": qf.robustness_measurement(povm, fm, **opts).value,
        "weight_state": qf.weight_state(rho, free_state, **opts).value,
        "weight_measurement": qf.weight_measurement(povm, fm, **opts).value,
    }
    rep = Result3Report(
        math.log2(1 + q["robustness_state"]) + math.log2(1 + q["robustness_measurement"]),
        _neg_log_bound(q["weight_state"]) + _neg_log_bound(q["weight_measurement"]),
        tol=tol,
    )
    for i, ens in enumerate(ensembles):
        rep.ensembles.append(certify_ensemble(i, ens, rho, povm, free_state, free_povm, q, tol))
    return rep
