"""Generalised robustness and weight of resource for states and measurements.

Each quantifier is computed from a linear primal program whose dual slack on
the "general" block is an optimal witness:

* robustness of a state: minimise ``Tr S`` over ``S >= 0`` with ``rho + S`` in
  the cone of free states; ``S = r rho_G`` and the witness ``Z`` is the dual
  slack of ``S`` (``Tr(Z rho) = 1 + r``, ``Tr(Z sigma) <= 1`` on free states);
* weight of a state: minimise ``Tr T`` over ``T >= 0`` with ``rho - T`` in the
  free cone; ``T = w rho_G`` and ``Y`` is the dual slack of ``T``
  (``Tr(Y rho) = 1 - w``, ``Tr(Y sigma) >= 1``);
* measurements: the same per effect, with ``sum_a S_a = r 1`` (resp.
  ``sum_a T_a = w 1``) so the general object is itself a POVM.

``*_dual`` functions solve the witness programs directly against the finite
vertex constraints of the free set; they are an independent route to the same
numbers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidInputError, SolverError
from .freesets import FreeMeasurementSet, FreeStateSet
from .linalg import Povm, clip_psd, density_matrix
from .sdp import ConicProgram, solve

VALUE_TOL = 1e-7


@dataclass
class QuantifierResult:
    """Value of a quantifier with the primal decomposition and the dual witness.

    ``decomposition`` holds ``general`` (rho_G or the POVM M_G as an array),
    ``free`` (sigma or N) and ``parameter`` (r or w). ``witness`` is a matrix for
    states and a ``(k, d, d)`` array for measurements.
    """

    kind: str
    value: float
    decomposition: dict
    witness: Any
    gap: float
    dual_value: float
    residuals: dict = field(default_factory=dict)


def _require_optimal(report, what):
    if not report.optimal:
        raise SolverError(
            f"{what}: solver status {report.status} (gap {report.duality_gap:.2e}, residuals {report.residuals})",
            report,
        )


def _clip(value, lo, hi=None, tol=VALUE_TOL):
    """Snap values within ``tol`` of a boundary onto it (from either side)."""
    if abs(value - lo) < tol:
        value = lo
    if hi is not None and abs(value - hi) < tol:
        value = hi
    return float(value)


def _check_state_dims(rho, free):
    rho = density_matrix(rho)
    if rho.shape[0] != free.dim:
        raise InvalidInputError(f"state has dim {rho.shape[0]}, free set has dim {free.dim}")
    return rho


def _check_povm_dims(povm, free):
    if not isinstance(povm, Povm):
        povm = Povm(povm)
    if povm.dim != free.dim:
        raise InvalidInputError(f"POVM has dim {povm.dim}, free set has dim {free.dim}")
    return povm, free.with_outcomes(povm.outcomes)


def robustness_state(rho, free: FreeStateSet, gap_tol=1e-8, feas_tol=1e-9) -> QuantifierResult:
    rho = _check_state_dims(rho, free)
    d = rho.shape[0]
    prog = ConicProgram("min")
    s = prog.block("S", d)
    prog.objective({s: np.eye(d)})
    for j, c in enumerate(free.cone_functionals()):
        prog.add_eq({s: c}, -np.trace(c @ rho).real, label=f"free[{j}]")
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "robustness of state")
    r = _clip(rep.objective, 0.0)
    smat = rep.primal_values["S"]
    general = smat / r if r > VALUE_TOL else rho
    return QuantifierResult(
        "robustness-state", r,
        {"general": general, "free": (rho + smat) / (1 + rep.objective), "parameter": r},
        rep.dual_slacks["S"], rep.duality_gap, rep.dual_objective, rep.residuals,
    )


def weight_state(rho, free: FreeStateSet, gap_tol=1e-8, feas_tol=1e-9) -> QuantifierResult:
    rho = _check_state_dims(rho, free)
    d = rho.shape[0]
    prog = ConicProgram("min")
    t = prog.block("T", d)
    u = prog.block("U", d)
    prog.objective({t: np.eye(d)})
    prog.add_matrix_eq({t: 1.0, u: 1.0}, rho, label="split")
    for j, c in enumerate(free.cone_functionals()):
        prog.add_eq({u: c}, 0.0, label=f"free[{j}]")
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "weight of state")
    w = _clip(rep.objective, 0.0, 1.0)
    tmat, umat = rep.primal_values["T"], rep.primal_values["U"]
    general = tmat / w if w > VALUE_TOL else rho
    free_part = umat / (1 - w) if w < 1 - VALUE_TOL else np.eye(d) / d
    return QuantifierResult(
        "weight-state", w, {"general": general, "free": free_part, "parameter": w},
        rep.dual_slacks["T"], rep.duality_gap, rep.dual_objective, rep.residuals,
    )


def robustness_measurement(povm, free: FreeMeasurementSet, gap_tol=1e-8, feas_tol=1e-9) -> QuantifierResult:
    povm, free = _check_povm_dims(povm, free)
    k, d = povm.outcomes, povm.dim
    prog = ConicProgram("min")
    blocks = [prog.block(f"S{a}", d) for a in range(k)]
    r = prog.scalar("r")
    prog.objective({r: 1.0})
    terms = {b: 1.0 for b in blocks}
    terms[r] = -np.eye(d)
    prog.add_matrix_eq(terms, np.zeros((d, d)), label="normalisation")
    for j, coeffs in enumerate(free.joint_functionals()):
        row = {b: c for b, c in zip(blocks, coeffs) if np.any(c)}
        rhs = -sum(np.trace(c @ m).real for c, m in zip(coeffs, povm))
        prog.add_eq(row, rhs, label=f"free[{j}]")
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "robustness of measurement")
    rv = _clip(rep.objective, 0.0)
    smats = np.stack([rep.primal_values[f"S{a}"] for a in range(k)])
    general = smats / rv if rv > VALUE_TOL else povm.elements.copy()
    return QuantifierResult(
        "robustness-measurement", rv,
        {"general": general, "free": (povm.elements + smats) / (1 + rep.objective), "parameter": rv},
        np.stack([rep.dual_slacks[f"S{a}"] for a in range(k)]),
        rep.duality_gap, rep.dual_objective, rep.residuals,
    )


def weight_measurement(povm, free: FreeMeasurementSet, gap_tol=1e-8, feas_tol=1e-9) -> QuantifierResult:
    povm, free = _check_povm_dims(povm, free)
    k, d = povm.outcomes, povm.dim
    prog = ConicProgram("min")
    ts = [prog.block(f"T{a}", d) for a in range(k)]
    us = [prog.block(f"U{a}", d) for a in range(k)]
    w = prog.scalar("w")
    prog.objective({w: 1.0})
    for a in range(k):
        prog.add_matrix_eq({ts[a]: 1.0, us[a]: 1.0}, povm[a], label=f"split{a}")
    terms = {t: 1.0 for t in ts}
    terms[w] = -np.eye(d)
    prog.add_matrix_eq(terms, np.zeros((d, d)), label="normalisation")
    for j, coeffs in enumerate(free.joint_functionals()):
        row = {u: c for u, c in zip(us, coeffs) if np.any(c)}
        prog.add_eq(row, 0.0, label=f"free[{j}]")
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "weight of measurement")
    wv = _clip(rep.objective, 0.0, 1.0)
    tm = np.stack([rep.primal_values[f"T{a}"] for a in range(k)])
    um = np.stack([rep.primal_values[f"U{a}"] for a in range(k)])
    general = tm / wv if wv > VALUE_TOL else povm.elements.copy()
    free_part = um / (1 - wv) if wv < 1 - VALUE_TOL else np.stack([np.eye(d) / k] * k)
    return QuantifierResult(
        "weight-measurement", wv, {"general": general, "free": free_part, "parameter": wv},
        np.stack([rep.dual_slacks[f"T{a}"] for a in range(k)]),
        rep.duality_gap, rep.dual_objective, rep.residuals,
    )


# Witness programs solved directly against the vertex constraints.

def _witness_program(targets, constraints, weight, dims):
    prog = ConicProgram("max")
    blocks = [prog.block(f"Z{x}", d) for x, d in enumerate(dims)]
    sign = -1.0 if weight else 1.0
    prog.objective({b: sign * t for b, t in zip(blocks, targets)}, constant=1.0 if weight else -1.0)
    for j, con in enumerate(constraints):
        row = {b: (-c if weight else c) for b, c in zip(blocks, con.coeffs)}
        prog.add_ineq(row, -con.bound if weight else con.bound, label=f"vertex[{j}]")
    return prog, blocks


def robustness_state_dual(rho, free: FreeStateSet, gap_tol=1e-8, feas_tol=1e-9):
    """``max Tr(Z rho) - 1`` over ``Z >= 0`` with ``Tr(Z sigma) <= 1`` on free vertices; returns ``(value, Z)``."""
    rho = _check_state_dims(rho, free)
    prog, _ = _witness_program([rho], free.witness_constraints(), False, [free.dim])
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "robustness witness program")
    return rep.objective, rep.primal_values["Z0"]


def weight_state_dual(rho, free: FreeStateSet, gap_tol=1e-8, feas_tol=1e-9):
    """``max 1 - Tr(Y rho)`` over ``Y >= 0`` with ``Tr(Y sigma) >= 1`` on free vertices."""
    rho = _check_state_dims(rho, free)
    prog, _ = _witness_program([rho], free.witness_constraints(weight=True), True, [free.dim])
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "weight witness program")
    return rep.objective, rep.primal_values["Z0"]


def robustness_measurement_dual(povm, free: FreeMeasurementSet, gap_tol=1e-8, feas_tol=1e-9):
    povm, free = _check_povm_dims(povm, free)
    prog, _ = _witness_program(list(povm), free.witness_constraints(), False, [povm.dim] * povm.outcomes)
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "measurement robustness witness program")
    return rep.objective, np.stack([rep.primal_values[f"Z{x}"] for x in range(povm.outcomes)])


def weight_measurement_dual(povm, free: FreeMeasurementSet, gap_tol=1e-8, feas_tol=1e-9):
    povm, free = _check_povm_dims(povm, free)
    prog, _ = _witness_program(list(povm), free.witness_constraints(weight=True), True, [povm.dim] * povm.outcomes)
    rep = solve(prog, gap_tol=gap_tol, feas_tol=feas_tol)
    _require_optimal(rep, "measurement weight witness program")
    return rep.objective, np.stack([rep.primal_values[f"Z{x}"] for x in range(povm.outcomes)])


def psd_witness(witness) -> np.ndarray:
    """Project solver noise off a witness (matrix or stack of matrices)."""
    w = np.asarray(witness)
    if w.ndim == 2:
        return clip_psd(w)
    return np.stack([clip_psd(x) for x in w])
