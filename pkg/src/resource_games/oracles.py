"""Brute-force reference values for small cases.

Nothing here calls the SDP engine or the game evaluator. PSD tests use
principal minors, 2x2 eigenvalues are closed form, maps are applied by block
slicing their Choi matrices, and optimisation is grid search plus bisection.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UnsupportedFreeSetError

MAX_GRID_POINTS = 10 ** 8
MAX_MAPS = 10 ** 6
BISECTION_TOL = 1e-6
BISECTION_ITERS = 60


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with step ``resolution`` on each of ``n_params`` parameters in ``bounds``."""

    resolution: float = 1e-4
    bounds: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not self.resolution > 0:
            raise InvalidInputError("grid resolution must be positive")

    @property
    def steps(self) -> int:
        lo, hi = self.bounds
        return int(round((hi - lo) / self.resolution))

    def line(self) -> np.ndarray:
        lo, hi = self.bounds
        _guard(self.steps + 1)
        return np.linspace(lo, hi, self.steps + 1)

    def simplex(self, k) -> np.ndarray:
        """All points of the ``k``-simplex with coordinates in multiples of ``1/steps``."""
        n = self.steps
        count = _comb(n + k - 1, k - 1)
        _guard(count)
        if k == 1:
            return np.ones((1, 1))
        if k == 2:
            a = np.arange(n + 1) / n
            return np.column_stack([a, 1 - a])
        pts = []
        for bars in itertools.combinations(range(n + k - 1), k - 1):
            prev, row = -1, []
            for b in bars:
                row.append(b - prev - 1)
                prev = b
            row.append(n + k - 2 - prev)
            pts.append(row)
        return np.array(pts, dtype=float) / n


def _comb(n, r):
    out = 1
    for i in range(r):
        out = out * (n - i) // (i + 1)
    return out


def _guard(points):
    if points > MAX_GRID_POINTS:
        raise InvalidInputError(f"grid has {points} points, above the {MAX_GRID_POINTS} guard")


def _lambda_2x2(m):
    """Eigenvalues (min, max) of a 2x2 Hermitian matrix, closed form."""
    a, d = m[0, 0].real, m[1, 1].real
    b = m[0, 1]
    half = 0.5 * np.sqrt((a - d) ** 2 + 4 * abs(b) ** 2)
    mid = 0.5 * (a + d)
    return mid - half, mid + half


def _det3(m):
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])).real


def psd_by_minors(m, tol=1e-12) -> bool:
    """All principal minors nonnegative (d <= 3)."""
    d = m.shape[0]
    if d > 3:
        raise UnsupportedFreeSetError("minor test implemented for d <= 3")
    for size in range(1, d + 1):
        for idx in itertools.combinations(range(d), size):
            sub = m[np.ix_(idx, idx)]
            if size == 1:
                v = sub[0, 0].real
            elif size == 2:
                v = (sub[0, 0] * sub[1, 1] - sub[0, 1] * sub[1, 0]).real
            else:
                v = _det3(sub)
            if v < -tol:
                return False
    return True


def _bisect(feasible, lo, hi):
    """Smallest value in ``[lo, hi]`` with ``feasible`` true (monotone)."""
    while not feasible(hi):
        lo, hi = hi, 2 * hi + 1
        if hi > 1e6:
            raise InvalidInputError("bisection bracket did not close")
    if feasible(lo):
        return lo
    for _ in range(BISECTION_ITERS):
        if hi - lo <= BISECTION_TOL:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _check_qubit(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise UnsupportedFreeSetError("qubit oracle needs a 2x2 input")
    return rho


def _qubit_diag_feasible(rho, scale, s):
    """Vectorised over the grid ``s``: ``scale * diag(s, 1-s) - rho >= 0`` (``scale`` may be negative)."""
    a = scale * s - rho[0, 0].real
    d = scale * (1 - s) - rho[1, 1].real
    c2 = abs(rho[0, 1]) ** 2
    tol = 1e-12
    return np.any((a >= -tol) & (d >= -tol) & (a * d - c2 >= -tol))


def grid_robustness_state_qubit_incoherent(rho, grid: GridSpec = GridSpec()) -> float:
    """``min r`` with ``(1+r) diag(s, 1-s) - rho >= 0`` for some grid ``s``."""
    rho = _check_qubit(rho)
    s = grid.line()
    return _bisect(lambda r: _qubit_diag_feasible(rho, 1 + r, s), 0.0, 1.0)


def grid_weight_state_qubit_incoherent(rho, grid: GridSpec = GridSpec()) -> float:
    """``1 - max t`` with ``rho - t diag(s, 1-s) >= 0`` for some grid ``s``."""
    rho = _check_qubit(rho)
    s = grid.line()

    def ok(w):
        t = 1.0 - w
        a = rho[0, 0].real - t * s
        d = rho[1, 1].real - t * (1 - s)
        c2 = abs(rho[0, 1]) ** 2
        return bool(np.any((a >= -1e-12) & (d >= -1e-12) & (a * d - c2 >= -1e-12)))
    return _bisect(ok, 0.0, 1.0)


def grid_robustness_state_qutrit_incoherent(rho, grid: GridSpec = GridSpec(1 / 60)) -> float:
    """Qutrit version over a simplex grid of diagonal states (use a step count divisible by 3)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise UnsupportedFreeSetError("qutrit oracle needs a 3x3 input")
    p = grid.simplex(3)
    off = {(i, j): abs(rho[i, j]) ** 2 for i in range(3) for j in range(i + 1, 3)}
    tol = 1e-12

    def ok(r):
        # principal minors of (1+r) diag(p) - rho, vectorised over the grid
        a = (1 + r) * p - np.real(np.diag(rho))
        good = np.all(a >= -tol, axis=1)
        for (i, j), c2 in off.items():
            good &= a[:, i] * a[:, j] - c2 >= -tol
        m = -rho.copy()
        det = (a[:, 0] * a[:, 1] * a[:, 2]
               - a[:, 0] * off[(1, 2)] - a[:, 1] * off[(0, 2)] - a[:, 2] * off[(0, 1)]
               + 2 * np.real(m[0, 1] * m[1, 2] * m[2, 0]))
        good &= det >= -tol
        return bool(np.any(good))

    return _bisect(ok, 0.0, 2.0)


def _check_trivial_povm(povm):
    els = np.asarray(getattr(povm, "elements", povm), dtype=complex)
    if els.ndim != 3 or els.shape[1:] != (2, 2):
        raise UnsupportedFreeSetError("measurement oracle needs a qubit POVM")
    if els.shape[0] > 4:
        raise UnsupportedFreeSetError("measurement oracle supports at most 4 outcomes")
    return els


def grid_robustness_measurement_qubit_trivial(povm, grid: GridSpec = GridSpec(1e-5)) -> float:
    """``min r`` with ``(1+r) q_a 1 - M_a >= 0`` for all ``a`` and some grid ``q``."""
    els = _check_trivial_povm(povm)
    lmax = np.array([_lambda_2x2(m)[1] for m in els])
    q = grid.simplex(els.shape[0])
    return _bisect(lambda r: bool(np.any(np.all((1 + r) * q >= lmax - 1e-12, axis=1))), 0.0, 1.0)


def grid_weight_measurement_qubit_trivial(povm, grid: GridSpec = GridSpec(1e-5)) -> float:
    """``1 - max t`` with ``M_a - t q_a 1 >= 0`` for all ``a`` and some grid ``q``."""
    els = _check_trivial_povm(povm)
    lmin = np.array([_lambda_2x2(m)[0] for m in els])
    q = grid.simplex(els.shape[0])
    return _bisect(lambda w: bool(np.any(np.all((1 - w) * q <= lmin + 1e-12, axis=1))), 0.0, 1.0)


def apply_choi(choi, d_in, d_out, rho) -> np.ndarray:
    """``sum_ij rho_ij * J[(i, .), (j, .)]`` by block slicing."""
    choi = np.asarray(choi)
    out = np.zeros((d_out, d_out), dtype=complex)
    for i in range(d_in):
        for j in range(d_in):
            out += rho[i, j] * choi[i * d_out:(i + 1) * d_out, j * d_out:(j + 1) * d_out]
    return out


def _choi_list(game):
    subs = getattr(game, "subchannels", game)
    return [(np.asarray(s.choi), s.d_in, s.d_out) for s in subs]


def _table(game, rho, povm_elements):
    """``T[a, x] = Tr[M_a Psi_x(rho)]``, each distinct subchannel applied once."""
    rho = np.asarray(rho, dtype=complex)
    cache, cols = {}, []
    for choi, d_in, d_out in _choi_list(game):
        key = id(choi)
        if key not in cache:
            cache[key] = apply_choi(choi, d_in, d_out, rho)
        out = cache[key]
        cols.append([float(np.real(np.sum(m * out.T))) for m in povm_elements])
    return np.array(cols).T


def enumerate_post_processings(game, rho, povm, kind):
    """Exact optimum over all deterministic relabellings ``a -> g(a)``; returns ``(value, map)``."""
    els = np.asarray(getattr(povm, "elements", povm), dtype=complex)
    k, o = len(_choi_list(game)), els.shape[0]
    if k ** o > MAX_MAPS:
        raise InvalidInputError(f"{k}**{o} deterministic maps exceed the {MAX_MAPS} guard")
    t = _table(game, rho, els)
    if kind not in ("discrimination", "exclusion"):
        raise InvalidInputError(f"unknown kind {kind!r}")
    better = (lambda a, b: a > b) if kind == "discrimination" else (lambda a, b: a < b)
    best, arg = None, None
    for g in itertools.product(range(k), repeat=o):
        v = 0.0
        for a, x in enumerate(g):
            v += t[a, x]
        if best is None or better(v, best):
            best, arg = v, g
    return best, arg


def grid_free_pair_value(game, free_state, free_povm, kind, grid: GridSpec = GridSpec(1e-3)) -> float:
    """Extremum over ``sigma = diag(s, 1-s)`` and trivial ``N_a = q_a 1`` (``a < k``) on a grid,
    with the post-processing optimised by enumeration."""
    if getattr(free_state, "kind", None) != "incoherent" or getattr(free_state, "dim", None) != 2:
        raise UnsupportedFreeSetError("grid free-pair oracle needs the qubit incoherent state set")
    if getattr(free_povm, "kind", None) != "trivial" or free_povm.dim != 2:
        raise UnsupportedFreeSetError("grid free-pair oracle needs the qubit trivial measurement set")
    chois = _choi_list(game)
    k = len(chois)
    if k > 4:
        raise UnsupportedFreeSetError("grid free-pair oracle supports k <= 4")
    s = grid.line()
    q = grid.simplex(k)
    _guard(len(s) * len(q))
    # Tr Psi_x(diag(s, 1-s)) is affine in s
    tr0 = np.array([np.trace(apply_choi(c, di, do, np.diag([1.0, 0.0]))).real for c, di, do in chois])
    tr1 = np.array([np.trace(apply_choi(c, di, do, np.diag([0.0, 1.0]))).real for c, di, do in chois])
    maps = np.array(list(itertools.product(range(k), repeat=k)))
    best = None
    for sv in s:
        tr = sv * tr0 + (1 - sv) * tr1
        # value[q, map] = sum_a q_a tr[map[a]]
        vals = q @ tr[maps].T
        inner = vals.max(axis=1) if kind == "discrimination" else vals.min(axis=1)
        v = inner.max() if kind == "discrimination" else inner.min()
        if best is None or (v > best if kind == "discrimination" else v < best):
            best = float(v)
    return best
