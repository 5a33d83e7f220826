"""Convex free sets of states and measurements.

Every set is described two ways:

* an affine description (linear functionals that vanish on the cone generated by
  the set), used in the primal robustness/weight programs and for membership;
* its finite list of extreme points, used to turn the universally quantified
  dual constraints ("for all free sigma") into finitely many linear
  constraints, and to optimise linear functionals over the set exactly.

Built-ins are the incoherent states (diagonal in a fixed basis), the trivial
measurements (every effect proportional to the identity) and the incoherent
measurements (every effect diagonal). ``custom-affine`` sets take user supplied
functionals and, optionally, extreme points.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedFreeSetError
from .linalg import Povm, hermitian, ket, projector
from .sdp import hermitian_basis

MEMBERSHIP_TOL = 1e-8
MAX_VERTEX_D = 4
MAX_VERTEX_K = 4


def _offdiag_functionals(d) -> list:
    basis = hermitian_basis(d)
    return [e for e in basis[d:]]


def _traceless_diag_functionals(d) -> list:
    out = []
    for i in range(d - 1):
        e = np.zeros((d, d), dtype=complex)
        e[i, i], e[i + 1, i + 1] = 1, -1
        out.append(e / np.sqrt(2))
    return out


@dataclass(frozen=True)
class WitnessConstraint:
    """``sum_x Re Tr(coeffs[x] Z_x)  <=  bound`` (or ``>=`` for weight witnesses)."""

    coeffs: tuple
    bound: float
    sense: str


@dataclass(frozen=True, eq=False)
class FreeStateSet:
    """Closed convex set of free states.

    ``kind='incoherent'`` is the set of states diagonal in ``basis`` (columns of a
    unitary, computational basis by default). ``kind='custom-affine'`` is
    ``{rho : Tr(A_j rho) = b_j}``; supply ``vertices`` to enable dual programs
    and exact free optimisation.
    """

    kind: str
    dim: int
    basis: Optional[np.ndarray] = None
    functionals: tuple = ()
    vertex_states: tuple = ()

    def __post_init__(self):
        if self.kind not in ("incoherent", "custom-affine"):
            raise UnsupportedFreeSetError(f"unknown free state set kind {self.kind!r}")
        if self.basis is not None:
            u = np.asarray(self.basis, dtype=complex)
            if u.shape != (self.dim, self.dim) or not np.allclose(u.conj().T @ u, np.eye(self.dim), atol=1e-10):
                raise InvalidInputError("basis must be a unitary matrix of the set dimension")
            object.__setattr__(self, "basis", u)
        if self.kind == "custom-affine":
            fun = tuple((hermitian(a), float(b)) for a, b in self.functionals)
            object.__setattr__(self, "functionals", fun)
            if not self.contains(np.eye(self.dim) / self.dim) and not self.vertex_states:
                raise InvalidInputError("custom free state set does not contain the maximally mixed state")

    def _rotate(self, op):
        return op if self.basis is None else self.basis @ op @ self.basis.conj().T

    def cone_functionals(self) -> list:
        """Hermitian ``C_j`` with ``cone(F) = {tau >= 0 : Tr(C_j tau) = 0 for all j}``."""
        if self.kind == "incoherent":
            return [self._rotate(e) for e in _offdiag_functionals(self.dim)]
        d = self.dim
        return [a - b * np.eye(d) for a, b in self.functionals]

    def vertices(self) -> list:
        if self.kind == "incoherent":
            return [self._rotate(projector(ket(i, self.dim))) for i in range(self.dim)]
        if not self.vertex_states:
            raise UnsupportedFreeSetError("custom-affine free set needs explicit vertices for this operation")
        return [hermitian(v) for v in self.vertex_states]

    def distance(self, rho) -> float:
        """Frobenius distance from ``rho`` to the affine hull of the free set (unit trace slice)."""
        rho = hermitian(rho)
        if rho.shape != (self.dim, self.dim):
            raise InvalidInputError(f"state has dim {rho.shape[0]}, free set has dim {self.dim}")
        funcs = self.cone_functionals() + [np.eye(self.dim)]
        targets = np.array([-np.trace(c @ rho).real for c in funcs[:-1]] + [0.0])
        return _least_norm_correction(funcs, targets, self.dim)

    def contains(self, rho, tol=MEMBERSHIP_TOL) -> bool:
        return self.distance(rho) <= tol

    def witness_constraints(self, weight=False) -> list:
        """Finite equivalent of ``Tr(Z sigma) <= 1`` (``Tr(Y sigma) >= 1`` if weight) for all free sigma."""
        sense = ">=" if weight else "<="
        return [WitnessConstraint((v,), 1.0, sense) for v in self.vertices()]

    def best_vertex(self, objective, sense="max"):
        """Exact optimum of the linear map ``sigma -> objective(sigma)`` over the set."""
        best, arg = None, None
        for v in self.vertices():
            val = objective(v)
            if best is None or (val > best if sense == "max" else val < best):
                best, arg = val, v
        return best, arg

    def descriptor(self) -> dict:
        if self.kind == "custom-affine" or self.basis is not None:
            raise UnsupportedFreeSetError("only computational-basis built-ins have a JSON descriptor")
        return {"kind": self.kind, "dim": self.dim}


def _least_norm_correction(funcs, targets, d) -> float:
    """Norm of the smallest Hermitian ``D`` with ``Re Tr(C_j D) = t_j``."""
    basis = hermitian_basis(d)
    a = np.array([[np.trace(c @ e).real for e in basis] for c in funcs])
    sol, *_ = np.linalg.lstsq(a, targets, rcond=None)
    resid = a @ sol - targets
    if np.max(np.abs(resid), initial=0.0) > 1e-9:
        return float("inf")
    return float(np.linalg.norm(sol))


@dataclass(frozen=True, eq=False)
class FreeMeasurementSet:
    """Closed convex, post-processing closed set of free POVMs with ``outcomes`` effects.

    ``kind`` is ``'trivial'`` (``N_a = q(a) 1``), ``'incoherent'`` (diagonal
    effects) or ``'custom-affine'`` (``functionals`` are pairs ``(coeffs, b)``
    meaning ``sum_a Tr(coeffs[a] N_a) = b``; optional explicit ``vertex_povms``).
    """

    kind: str
    dim: int
    outcomes: int
    basis: Optional[np.ndarray] = None
    functionals: tuple = ()
    vertex_povms: tuple = ()

    def __post_init__(self):
        if self.kind == "incoherent-povm":
            object.__setattr__(self, "kind", "incoherent")
        if self.kind not in ("trivial", "incoherent", "custom-affine"):
            raise UnsupportedFreeSetError(f"unknown free measurement set kind {self.kind!r}")
        if self.outcomes < 1:
            raise InvalidInputError("outcomes must be positive")
        if self.basis is not None:
            u = np.asarray(self.basis, dtype=complex)
            if u.shape != (self.dim, self.dim) or not np.allclose(u.conj().T @ u, np.eye(self.dim), atol=1e-10):
                raise InvalidInputError("basis must be a unitary matrix of the set dimension")
            object.__setattr__(self, "basis", u)

    def with_outcomes(self, k) -> "FreeMeasurementSet":
        if k == self.outcomes:
            return self
        if self.kind == "custom-affine":
            raise UnsupportedFreeSetError("custom-affine measurement sets have a fixed outcome count")
        return FreeMeasurementSet(self.kind, self.dim, k, self.basis)

    def _rotate(self, op):
        return op if self.basis is None else self.basis @ op @ self.basis.conj().T

    def element_functionals(self) -> list:
        """Per-effect ``C_j`` with ``Tr(C_j tau_a) = 0`` on the cone of free effects (built-ins)."""
        d = self.dim
        if self.kind == "trivial":
            return _offdiag_functionals(d) + _traceless_diag_functionals(d)
        if self.kind == "incoherent":
            return [self._rotate(e) for e in _offdiag_functionals(d)]
        raise UnsupportedFreeSetError("custom-affine sets use joint_functionals()")

    def joint_functionals(self) -> list:
        """List of per-outcome coefficient tuples vanishing on ``{(1+r) N : N free}``.

        The normalisation ``sum_a tau_a = (1+r) 1`` is imposed by the callers, so
        for custom sets ``sum_a Tr(C_a N_a) = b`` homogenises with ``Tr(sum tau)/d``.
        """
        k, d = self.outcomes, self.dim
        out = []
        if self.kind != "custom-affine":
            for a in range(k):
                for c in self.element_functionals():
                    coeffs = [np.zeros((d, d), dtype=complex)] * k
                    coeffs = list(coeffs)
                    coeffs[a] = c
                    out.append(tuple(coeffs))
            return out
        for coeffs, b in self.functionals:
            out.append(tuple(hermitian(c) - (b / d) * np.eye(d) for c in coeffs))
        return out

    def vertices(self) -> list:
        """Extreme points as ``(k, d, d)`` arrays."""
        k, d = self.outcomes, self.dim
        if self.kind == "trivial":
            out = []
            for a in range(k):
                v = np.zeros((k, d, d), dtype=complex)
                v[a] = np.eye(d)
                out.append(v)
            return out
        if self.kind == "incoherent":
            if d > MAX_VERTEX_D or k > MAX_VERTEX_K:
                raise UnsupportedFreeSetError(
                    f"incoherent measurement vertices need d <= {MAX_VERTEX_D} and k <= {MAX_VERTEX_K} "
                    f"(got d={d}, k={k}: {k}**{d} extreme points)"
                )
            projs = [self._rotate(projector(ket(i, d))) for i in range(d)]
            out = []
            for f in itertools.product(range(k), repeat=d):
                v = np.zeros((k, d, d), dtype=complex)
                for i, a in enumerate(f):
                    v[a] += projs[i]
                out.append(v)
            return out
        if not self.vertex_povms:
            raise UnsupportedFreeSetError("custom-affine free set needs explicit vertices for this operation")
        return [np.asarray(v, dtype=complex) for v in self.vertex_povms]

    def distance(self, povm: Povm) -> float:
        if povm.dim != self.dim or povm.outcomes != self.outcomes:
            raise InvalidInputError(
                f"POVM has (d={povm.dim}, k={povm.outcomes}), free set expects (d={self.dim}, k={self.outcomes})"
            )
        if self.kind == "trivial":
            d = self.dim
            dev = [m - np.trace(m).real / d * np.eye(d) for m in povm]
            return float(np.sqrt(sum(np.linalg.norm(x) ** 2 for x in dev)))
        if self.kind == "incoherent":
            dev = [self._rotate(np.triu(self._rotate_back(m), 1)) for m in povm]
            return float(np.sqrt(2 * sum(np.linalg.norm(x) ** 2 for x in dev)))
        d, k = self.dim, self.outcomes
        basis = hermitian_basis(d)
        rows, targets = [], []
        for coeffs, b in self.functionals:
            row = np.concatenate([[np.trace(hermitian(c) @ e).real for e in basis] for c in coeffs])
            rows.append(row)
            targets.append(b - sum(np.trace(hermitian(c) @ m).real for c, m in zip(coeffs, povm)))
        # corrections must keep the effects summing to the identity
        for e in basis:
            row = np.zeros(k * d * d)
            for a in range(k):
                row[a * d * d:(a + 1) * d * d] = [np.trace(e @ f).real for f in basis]
            rows.append(row)
            targets.append(0.0)
        a = np.array(rows)
        sol, *_ = np.linalg.lstsq(a, np.array(targets), rcond=None)
        if np.max(np.abs(a @ sol - targets)) > 1e-9:
            return float("inf")
        return float(np.linalg.norm(sol))

    def _rotate_back(self, op):
        return op if self.basis is None else self.basis.conj().T @ op @ self.basis

    def contains(self, povm: Povm, tol=MEMBERSHIP_TOL) -> bool:
        return self.distance(povm) <= tol

    def witness_constraints(self, weight=False) -> list:
        """Finite equivalent of ``sum_x Tr(Z_x N_x) <= 1`` (``>= 1`` if weight) over the free set."""
        sense = ">=" if weight else "<="
        return [WitnessConstraint(tuple(v), 1.0, sense) for v in self.vertices()]

    def best_response(self, operators, sense="max"):
        """Exact ``max`` (or ``min``) of ``sum_x Tr(N_x O_x)`` over free ``N`` with ``len(operators)`` outcomes.

        Returns ``(value, N)`` where ``N`` is an extreme free POVM.
        """
        ops = np.asarray(operators, dtype=complex)
        k, d = ops.shape[0], ops.shape[1]
        pick = np.argmax if sense == "max" else np.argmin
        if self.kind == "trivial":
            tr = np.real(np.einsum("xii->x", ops))
            a = int(pick(tr))
            n = np.zeros((k, d, d), dtype=complex)
            n[a] = np.eye(d)
            return float(tr[a]), n
        if self.kind == "incoherent":
            rot = np.stack([self._rotate_back(o) for o in ops])
            diag = np.real(np.einsum("xii->xi", rot))
            choice = pick(diag, axis=0)
            n = np.zeros((k, d, d), dtype=complex)
            for i, a in enumerate(choice):
                n[a] += self._rotate(projector(ket(i, d)))
            return float(np.sum(diag[choice, np.arange(d)])), n
        best, arg = None, None
        for v in self.with_outcomes(k).vertices():
            val = float(np.real(np.einsum("xij,xji->", v, ops)))
            if best is None or (val > best if sense == "max" else val < best):
                best, arg = val, v
        return best, arg

    def descriptor(self) -> dict:
        if self.kind == "custom-affine" or self.basis is not None:
            raise UnsupportedFreeSetError("only computational-basis built-ins have a JSON descriptor")
        kind = "incoherent-povm" if self.kind == "incoherent" else self.kind
        return {"kind": kind, "dim": self.dim, "outcomes": self.outcomes}


def state_membership(free: FreeStateSet, rho, tol=MEMBERSHIP_TOL):
    """``(is_free, distance)``."""
    dist = free.distance(rho)
    return dist <= tol, dist


def measurement_membership(free: FreeMeasurementSet, povm: Povm, tol=MEMBERSHIP_TOL):
    dist = free.distance(povm)
    return dist <= tol, dist


def emit_witness_constraints_state(free: FreeStateSet, weight=False) -> list:
    return free.witness_constraints(weight=weight)


def emit_witness_constraints_measurement(free: FreeMeasurementSet, outcomes=None, weight=False) -> list:
    if outcomes is not None:
        free = free.with_outcomes(outcomes)
    return free.witness_constraints(weight=weight)


def free_set_from_descriptor(desc, dim=None, outcomes=None, measurement=None):
    """Build a built-in free set from its JSON descriptor (or bare kind string).

    ``measurement`` disambiguates ``"incoherent"``; by default it names the
    state set, and ``"incoherent-povm"`` names the measurement set.
    """
    if isinstance(desc, str):
        desc = {"kind": desc}
    kind = desc.get("kind")
    dim = desc.get("dim", dim)
    if dim is None:
        raise InvalidInputError("free-set descriptor needs a dimension")
    if kind == "incoherent" and measurement:
        kind = "incoherent-povm"
    if kind == "incoherent":
        return FreeStateSet("incoherent", int(dim))
    if kind in ("trivial", "incoherent-povm"):
        if measurement is False:
            raise InvalidInputError(f"{kind!r} is a measurement free set, a state free set was expected")
        k = desc.get("outcomes", outcomes)
        if k is None:
            raise InvalidInputError(f"free-set descriptor {kind!r} needs an outcome count")
        return FreeMeasurementSet(kind, int(dim), int(k))
    raise UnsupportedFreeSetError(f"unknown free-set kind {kind!r}")
