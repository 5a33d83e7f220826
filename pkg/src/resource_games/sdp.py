"""Small dense semidefinite programs over Hermitian matrix variables.

A :class:`ConicProgram` is assembled from Hermitian PSD blocks and real scalars,
linear functionals on them (``Re Tr(C X)`` for a block, ``c t`` for a scalar),
equalities and ``<=`` inequalities. :func:`solve` maps it to the real
standard form ``min c'x  s.t.  Gx + s = h, Ax = b, s in K`` and runs the
primal-dual interior point method of ``cvxopt.solvers.conelp`` (Nesterov-Todd
scaling, self-dual embedding for infeasibility detection). Every Hermitian
block enters the cone through its real symmetric embedding (:func:`realify`).

The returned :class:`SolverReport` carries the primal blocks, the multipliers
of every constraint, and the dual slack matrix of every block, which is what the
resource witnesses are read from.
"""
from __future__ import annotations

import contextlib
import csv
import io
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Union

import numpy as np
import scipy.linalg

from .errors import MalformedProgramError, SolverError


@dataclass(frozen=True)
class Block:
    name: str
    dim: int


@dataclass(frozen=True)
class Scalar:
    name: str
    nonneg: bool = False


Var = Union[Block, Scalar]


@dataclass
class _Constraint:
    terms: dict
    rhs: float
    label: str


def realify(op) -> np.ndarray:
    """Real symmetric embedding ``[[Re, -Im], [Im, Re]]`` of a Hermitian matrix."""
    op = np.asarray(op, dtype=complex)
    return np.block([[op.real, -op.imag], [op.imag, op.real]])


def unrealify_dual(zr) -> np.ndarray:
    """Hermitian ``W`` with ``Re Tr(W X) = Tr(zr realify(X))`` for every Hermitian ``X``."""
    zr = np.asarray(zr, dtype=float)
    d = zr.shape[0] // 2
    p, q, s = zr[:d, :d], zr[:d, d:], zr[d:, d:]
    w = (p + s) + 1j * (q.T - q)
    return 0.5 * (w + w.conj().T)


@lru_cache(maxsize=None)
def hermitian_basis(d) -> np.ndarray:
    """Orthonormal basis (Hilbert-Schmidt) of d x d Hermitian matrices, shape ``(d*d, d, d)``."""
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1
        basis.append(e)
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = s
            basis.append(e)
            e = np.zeros((d, d), dtype=complex)
            e[i, j], e[j, i] = -1j * s, 1j * s
            basis.append(e)
    out = np.stack(basis)
    out.setflags(write=False)
    return out


class ConicProgram:
    """Builder for a small SDP; see the module docstring."""

    def __init__(self, sense="min"):
        if sense not in ("min", "max"):
            raise MalformedProgramError(f"sense must be 'min' or 'max', got {sense!r}")
        self.sense = sense
        self.blocks: Dict[str, Block] = {}
        self.scalars: Dict[str, Scalar] = {}
        self.objective_terms: dict = {}
        self.objective_constant = 0.0
        self.eq_constraints: list = []
        self.ineq_constraints: list = []

    # declarations
    def block(self, name, dim) -> Block:
        if name in self.blocks or name in self.scalars:
            raise MalformedProgramError(f"duplicate variable name {name!r}")
        if int(dim) < 1:
            raise MalformedProgramError("block dimension must be positive")
        b = Block(name, int(dim))
        self.blocks[name] = b
        return b

    def scalar(self, name, nonneg=False) -> Scalar:
        if name in self.blocks or name in self.scalars:
            raise MalformedProgramError(f"duplicate variable name {name!r}")
        s = Scalar(name, nonneg)
        self.scalars[name] = s
        return s

    def _check_terms(self, terms) -> dict:
        out = {}
        for var, coeff in terms.items():
            if isinstance(var, Block):
                if self.blocks.get(var.name) != var:
                    raise MalformedProgramError(f"undeclared block {var.name!r}")
                c = np.asarray(coeff, dtype=complex)
                if c.shape != (var.dim, var.dim):
                    raise MalformedProgramError(
                        f"coefficient for block {var.name!r} has shape {c.shape}, expected {(var.dim, var.dim)}"
                    )
                c = 0.5 * (c + c.conj().T)
            elif isinstance(var, Scalar):
                if self.scalars.get(var.name) != var:
                    raise MalformedProgramError(f"undeclared scalar {var.name!r}")
                c = float(np.real(coeff))
            else:
                raise MalformedProgramError(f"unknown variable {var!r}")
            out[var] = out[var] + c if var in out else c
        return out

    def objective(self, terms, constant=0.0):
        self.objective_terms = self._check_terms(terms)
        self.objective_constant = float(constant)

    def add_eq(self, terms, rhs, label=None):
        label = label or f"eq{len(self.eq_constraints)}"
        self.eq_constraints.append(_Constraint(self._check_terms(terms), float(rhs), label))

    def add_ineq(self, terms, rhs, label=None):
        """``sum of terms <= rhs``."""
        label = label or f"ineq{len(self.ineq_constraints)}"
        self.ineq_constraints.append(_Constraint(self._check_terms(terms), float(rhs), label))

    def add_matrix_eq(self, terms, rhs, label=None):
        """Hermitian matrix identity ``sum c_B * B + sum t * H_t == rhs``.

        Block coefficients are real scalars, scalar coefficients are Hermitian
        matrices. Expanded into one real equation per Hermitian basis element.
        """
        rhs = np.asarray(rhs, dtype=complex)
        d = rhs.shape[0]
        label = label or f"meq{len(self.eq_constraints)}"
        for k, e in enumerate(hermitian_basis(d)):
            row = {}
            for var, c in terms.items():
                if isinstance(var, Block):
                    if var.dim != d:
                        raise MalformedProgramError(f"block {var.name!r} has dim {var.dim}, expected {d}")
                    row[var] = float(c) * e
                else:
                    row[var] = float(np.real(np.trace(e @ np.asarray(c, dtype=complex))))
            self.add_eq(row, float(np.real(np.trace(e @ rhs))), label=f"{label}[{k}]")

    @property
    def n_variables(self) -> int:
        return sum(b.dim ** 2 for b in self.blocks.values()) + len(self.scalars)


@dataclass
class SolverReport:
    """``dual_values[label]`` is the sensitivity of the optimum to that constraint's right-hand side."""

    status: str
    primal_values: dict
    dual_values: dict
    dual_slacks: dict
    objective: float
    dual_objective: float
    duality_gap: float
    residuals: dict
    iterations: int = 0
    log: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Layout:
    """Column offsets of every variable in the real vector ``x``."""

    def __init__(self, prog: ConicProgram):
        self.offsets = {}
        k = 0
        for b in prog.blocks.values():
            self.offsets[b] = k
            k += b.dim ** 2
        for s in prog.scalars.values():
            self.offsets[s] = k
            k += 1
        self.n = k

    def row(self, terms) -> np.ndarray:
        r = np.zeros(self.n)
        for var, c in terms.items():
            o = self.offsets[var]
            if isinstance(var, Block):
                basis = hermitian_basis(var.dim)
                r[o:o + var.dim ** 2] += np.real(np.einsum("kij,ji->k", basis, c))
            else:
                r[o] += c
        return r


_LOG_LINE = re.compile(
    r"^\s*(\d+):\s+([-+0-9.eE]+)\s+([-+0-9.eE]+)\s+([-+0-9.eE]+)\s+([-+0-9.eE]+)\s+([-+0-9.eE]+)"
)


def _independent_rows(a, tol=1e-10):
    if a.shape[0] == 0:
        return np.arange(0)
    _, r, piv = scipy.linalg.qr(a.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(1.0, diag[0]))) if diag.size else 0
    return np.sort(piv[:rank])


def solve(prog: ConicProgram, gap_tol=1e-8, feas_tol=1e-9, max_iter=200, log_path=None) -> SolverReport:
    """Solve ``prog``; see :class:`SolverReport` for what comes back.

    ``status`` is ``optimal`` only when the final point meets ``gap_tol`` on
    the duality gap and ``feas_tol`` on the primal/dual residuals (measured
    here, independently of the solver's own stopping test). A run that stops on
    the iteration cap or numerical stall without meeting them is ``max-iter``.
    """
    import cvxopt
    import cvxopt.solvers

    if prog.n_variables == 0:
        raise MalformedProgramError("program has no variables")
    lay = _Layout(prog)
    n = lay.n
    sign = 1.0 if prog.sense == "min" else -1.0
    c = sign * lay.row(prog.objective_terms)

    # linear cone rows: nonneg scalars (-t <= 0) then inequalities
    lin_rows, lin_h, lin_tags = [], [], []
    for s in prog.scalars.values():
        if s.nonneg:
            r = np.zeros(n)
            r[lay.offsets[s]] = -1.0
            lin_rows.append(r)
            lin_h.append(0.0)
            lin_tags.append(("scalar", s.name))
    for con in prog.ineq_constraints:
        lin_rows.append(lay.row(con.terms))
        lin_h.append(con.rhs)
        lin_tags.append(("ineq", con.label))

    # PSD cone rows: -realify(X) + s = 0
    psd_rows, psd_dims = [], []
    for b in prog.blocks.values():
        d2 = 2 * b.dim
        g = np.zeros((d2 * d2, n))
        o = lay.offsets[b]
        for k, e in enumerate(hermitian_basis(b.dim)):
            g[:, o + k] = -realify(e).reshape(-1, order="F")
        psd_rows.append(g)
        psd_dims.append(d2)

    G = np.vstack(([np.array(lin_rows)] if lin_rows else []) + psd_rows) if (lin_rows or psd_rows) else np.zeros((0, n))
    h = np.concatenate([np.array(lin_h, dtype=float)] + [np.zeros(g.shape[0]) for g in psd_rows]) if G.shape[0] else np.zeros(0)

    A_full = np.array([lay.row(con.terms) for con in prog.eq_constraints]).reshape(-1, n)
    b_full = np.array([con.rhs for con in prog.eq_constraints], dtype=float)
    keep = _independent_rows(A_full)
    A, b = A_full[keep], b_full[keep]

    if G.shape[0] == 0:
        raise MalformedProgramError("program has no conic constraints")
    if np.linalg.matrix_rank(np.vstack([G, A])) < n:
        raise MalformedProgramError("variables are not determined by the constraints (rank([G; A]) < n)")

    dims = {"l": len(lin_rows), "q": [], "s": psd_dims}
    def attempt(tol):
        options = {
            "show_progress": True,
            "maxiters": int(max_iter),
            "abstol": tol,
            "reltol": tol,
            "feastol": tol,
            "refinement": 2,
        }
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            try:
                sol = cvxopt.solvers.conelp(
                    cvxopt.matrix(c),
                    cvxopt.matrix(G),
                    cvxopt.matrix(h),
                    dims,
                    cvxopt.matrix(A) if A.shape[0] else None,
                    cvxopt.matrix(b) if A.shape[0] else None,
                    options=options,
                )
            except ValueError as exc:
                raise MalformedProgramError(f"solver rejected the program: {exc}") from exc

        log = []
        for line in buf.getvalue().splitlines():
            m = _LOG_LINE.match(line)
            if m:
                it, pcost, dcost, gap, pres, dres = m.groups()
                degree = dims["l"] + sum(psd_dims)
                log.append({
                    "iter": int(it), "mu": float(gap) / degree, "primal_res": float(pres),
                    "dual_res": float(dres), "gap": float(gap),
                })
        if log_path is not None:
            with open(log_path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["iter", "mu", "primal_res", "dual_res", "gap"])
                w.writeheader()
                w.writerows(log)

        raw_status = sol["status"]
        if raw_status == "primal infeasible":
            return SolverReport("infeasible", {}, {}, {}, np.nan, np.nan, np.nan, {}, sol["iterations"], log)
        if raw_status == "dual infeasible":
            return SolverReport("unbounded", {}, {}, {}, np.nan, np.nan, np.nan, {}, sol["iterations"], log)

        x = np.array(sol["x"]).ravel()
        z = np.array(sol["z"]).ravel()
        y_red = np.array(sol["y"]).ravel() if A.shape[0] else np.zeros(0)
        y = np.zeros(len(prog.eq_constraints))
        y[keep] = y_red

        # independent residuals in the original (unreduced) data
        primal_eq = float(np.max(np.abs(A_full @ x - b_full))) if A_full.shape[0] else 0.0
        slack = h - G @ x
        lin_viol = float(max(0.0, -np.min(slack[: dims["l"]]))) if dims["l"] else 0.0
        cone_viol, off = 0.0, dims["l"]
        for d2 in psd_dims:
            m = slack[off: off + d2 * d2].reshape(d2, d2, order="F")
            cone_viol = max(cone_viol, float(max(0.0, -np.linalg.eigvalsh(0.5 * (m + m.T))[0])))
            off += d2 * d2
        dual_stat = c + G.T @ z + (A_full.T @ y if A_full.shape[0] else 0.0)
        dual_res = float(np.max(np.abs(dual_stat)))
        zl = z[: dims["l"]]
        dual_cone = float(max(0.0, -np.min(zl))) if zl.size else 0.0
        off = dims["l"]
        for d2 in psd_dims:
            m = z[off: off + d2 * d2].reshape(d2, d2, order="F")
            dual_cone = max(dual_cone, float(max(0.0, -np.linalg.eigvalsh(0.5 * (m + m.T))[0])))
            off += d2 * d2

        pobj = float(c @ x)
        dobj = float(-h @ z - b_full @ y)
        gap = abs(pobj - dobj)
        residuals = {
            "primal": max(primal_eq, lin_viol, cone_viol),
            "dual": max(dual_res, dual_cone),
        }
        ok = gap <= gap_tol and residuals["primal"] <= feas_tol and residuals["dual"] <= feas_tol
        status = "optimal" if ok else "max-iter"

        primal_values = {}
        for bk in prog.blocks.values():
            o = lay.offsets[bk]
            primal_values[bk.name] = np.einsum("k,kij->ij", x[o:o + bk.dim ** 2], hermitian_basis(bk.dim))
        for s in prog.scalars.values():
            primal_values[s.name] = float(x[lay.offsets[s]])

        dual_values = {}
        for con, yv in zip(prog.eq_constraints, y):
            dual_values[con.label] = -sign * float(yv)
        dual_slacks = {}
        for (kind, tag), zv in zip(lin_tags, zl):
            if kind == "ineq":
                dual_values[tag] = -sign * float(zv)
            else:
                dual_slacks[tag] = float(zv)
        off = dims["l"]
        for bk, d2 in zip(prog.blocks.values(), psd_dims):
            m = z[off: off + d2 * d2].reshape(d2, d2, order="F")
            dual_slacks[bk.name] = unrealify_dual(0.5 * (m + m.T))
            off += d2 * d2

        objective = sign * pobj + prog.objective_constant
        dual_objective = sign * dobj + prog.objective_constant
        return SolverReport(
            status, primal_values, dual_values, dual_slacks, objective, dual_objective,
            gap, residuals, sol["iterations"], log,
        )

    # Degenerate (rank-deficient) optima can make cvxopt stall or break down when
    # pushed to 1e-11. Back off; acceptance is always our own residual test.
    best, last_exc = None, None
    for tol in _TOL_SCHEDULE:
        try:
            rep = attempt(tol)
        except ArithmeticError as exc:
            last_exc = exc
            continue
        if rep.status in ("optimal", "infeasible", "unbounded"):
            return rep
        if best is None or _badness(rep) < _badness(best):
            best = rep
    if best is None:
        raise SolverError(f"interior-point iteration broke down: {last_exc}")
    return best


_TOL_SCHEDULE = (1e-11, 1e-10, 1e-9, 1e-8)


def _badness(rep):
    return max(rep.duality_gap, rep.residuals.get("primal", np.inf), rep.residuals.get("dual", np.inf))
