"""Validated dense representations of states, POVMs, subchannels and instruments.

Operators are plain complex ``numpy`` arrays. States and Hermitian operators are
returned by the constructor functions :func:`hermitian` and
:func:`density_matrix`; measurements, subchannels and instruments are small
frozen dataclasses that validate on construction.

Maps are stored as Choi matrices with the input factor first::

    J = sum_ij |i><j| (x) Phi(|i><j|),      Phi(rho) = Tr_in[(rho^T (x) 1) J]
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    CompletionInfeasibleError,
    InvalidInputError,
    NotTraceNonincreasingError,
)

PSD_TOL = 1e-9
HERMITIAN_TOL = 1e-12
CPTP_TOL = 1e-8


def _as_square(a, name="operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def hermitian(a, name="operator") -> np.ndarray:
    """Return the Hermitian part of ``a``.

    Asymmetry far above round-off (relative 1e-6) is treated as a caller bug and
    raises; anything smaller is removed by symmetrisation so the result is
    Hermitian to machine precision.
    """
    a = _as_square(a, name)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > 1e-6 * scale:
        raise InvalidInputError(f"{name} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def eigvalsh(a) -> np.ndarray:
    return np.linalg.eigvalsh(a)


def is_psd(a, tol=PSD_TOL) -> bool:
    return bool(eigvalsh(hermitian(a))[0] >= -tol)


def clip_psd(a) -> np.ndarray:
    """Zero out negative eigenvalues (projection onto the PSD cone)."""
    w, v = np.linalg.eigh(hermitian(a))
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


def trace_norm(op) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    return float(np.sum(np.abs(eigvalsh(hermitian(op)))))


def density_matrix(a, tol=PSD_TOL) -> np.ndarray:
    """Validate a density matrix; eigenvalues in ``[-tol, 0)`` are clipped and the trace restored."""
    rho = hermitian(a, "state")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise InvalidInputError(f"state has trace {np.trace(rho).real!r}, expected 1")
    w, v = np.linalg.eigh(rho)
    if w[0] < -tol:
        raise InvalidInputError(f"state is not PSD (min eigenvalue {w[0]:.3e})")
    if w[0] < -1e-12:  # leave round-off alone so reloading is idempotent
        w = np.clip(w, 0.0, None)
        rho = (v * w) @ v.conj().T
        rho = rho / np.trace(rho).real
    return rho


def ket(i, d) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def maximally_mixed(d) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def maximally_coherent(d) -> np.ndarray:
    return np.full((d, d), 1.0 / d, dtype=complex)


@dataclass(frozen=True, eq=False)
class Povm:
    """Ordered list of PSD effects summing to the identity, stored as an ``(o, d, d)`` array."""

    elements: np.ndarray

    def __post_init__(self):
        els = np.asarray(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1] != els.shape[2]:
            raise InvalidInputError(f"POVM elements must have shape (o, d, d), got {els.shape}")
        if els.shape[0] < 2:
            raise InvalidInputError("a POVM needs at least two outcomes")
        els = np.stack([hermitian(e, f"POVM element {a}") for a, e in enumerate(els)])
        for a, e in enumerate(els):
            if eigvalsh(e)[0] < -PSD_TOL:
                raise InvalidInputError(f"POVM element {a} is not PSD")
        if np.max(np.abs(els.sum(axis=0) - np.eye(els.shape[1]))) > PSD_TOL:
            raise InvalidInputError("POVM elements do not sum to the identity")
        els.setflags(write=False)
        object.__setattr__(self, "elements", els)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def outcomes(self) -> int:
        return self.elements.shape[0]

    def __len__(self):
        return self.outcomes

    def __getitem__(self, a):
        return self.elements[a]

    def __iter__(self):
        return iter(self.elements)

    def post_process(self, stochastic) -> "Povm":
        """Relabel outcomes: ``N_x = sum_a q(x|a) M_a`` with ``stochastic[x, a] = q(x|a)``."""
        q = np.asarray(stochastic, dtype=float)
        if q.ndim != 2 or q.shape[1] != self.outcomes:
            raise InvalidInputError(f"stochastic map must have shape (k, {self.outcomes})")
        if np.any(q < -1e-12) or np.max(np.abs(q.sum(axis=0) - 1)) > 1e-10:
            raise InvalidInputError("post-processing columns must be probability vectors")
        return Povm(np.einsum("xa,aij->xij", q, self.elements))


def computational_povm(d) -> Povm:
    return Povm(np.stack([projector(ket(i, d)) for i in range(d)]))


@dataclass(frozen=True, eq=False)
class Subchannel:
    """Completely positive, trace-nonincreasing map held as its Choi matrix."""

    choi: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        choi = hermitian(self.choi, "Choi matrix")
        if choi.shape[0] != self.d_in * self.d_out:
            raise InvalidInputError(
                f"Choi matrix has dim {choi.shape[0]}, expected {self.d_in}*{self.d_out}"
            )
        if eigvalsh(choi)[0] < -PSD_TOL:
            raise InvalidInputError("Choi matrix is not PSD: map is not completely positive")
        if eigvalsh(_trace_out(choi, self.d_in, self.d_out))[-1] > 1 + PSD_TOL:
            raise NotTraceNonincreasingError("map increases trace on some input")
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)

    @property
    def tensor(self) -> np.ndarray:
        return self.choi.reshape(self.d_in, self.d_out, self.d_in, self.d_out)

    def __call__(self, state) -> np.ndarray:
        return apply_subchannel(self, state)

    def trace_effect(self) -> np.ndarray:
        """Effect ``E`` with ``Tr Phi(rho) = Tr(E rho)``."""
        return _trace_out(self.choi, self.d_in, self.d_out).T

    def is_trace_preserving(self, tol=CPTP_TOL) -> bool:
        return bool(np.max(np.abs(self.trace_effect() - np.eye(self.d_in))) <= tol)


def _trace_out(choi, d_in, d_out) -> np.ndarray:
    return np.einsum("iaja->ij", np.asarray(choi).reshape(d_in, d_out, d_in, d_out))


def apply_subchannel(sub: Subchannel, state) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape != (sub.d_in, sub.d_in):
        raise InvalidInputError(f"state has shape {state.shape}, map expects input dim {sub.d_in}")
    out = np.einsum("ij,iajb->ab", state, sub.tensor)
    return 0.5 * (out + out.conj().T)


def choi_from_kraus(kraus: Sequence[np.ndarray]) -> np.ndarray:
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d_in = kraus[0].shape
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        # vec with input index first: |K>> = sum_i |i> (x) K|i>
        v = k.T.reshape(-1)
        choi += np.outer(v, v.conj())
    return choi


def subchannel_from_kraus(kraus) -> Subchannel:
    k0 = np.asarray(kraus[0])
    return Subchannel(choi_from_kraus(kraus), d_in=k0.shape[1], d_out=k0.shape[0])


def identity_channel(d) -> Subchannel:
    return subchannel_from_kraus([np.eye(d)])


def zero_subchannel(d_in, d_out) -> Subchannel:
    n = d_in * d_out
    return Subchannel(np.zeros((n, n), dtype=complex), d_in, d_out)


def scaled(sub: Subchannel, factor: float) -> Subchannel:
    return Subchannel(factor * sub.choi, sub.d_in, sub.d_out)


def make_trace_and_prepare(weight_op, prepared) -> Subchannel:
    """Choi matrix of ``eta -> Tr(weight_op eta) * prepared``."""
    w = hermitian(weight_op, "weight operator")
    p = hermitian(prepared, "prepared operator")
    if eigvalsh(w)[0] < -PSD_TOL or eigvalsh(p)[0] < -PSD_TOL:
        raise InvalidInputError("trace-and-prepare operators must be PSD")
    if trace_norm(w) * np.trace(p).real > 1 + PSD_TOL:
        # ||W||_1 Tr P is the tight bound only for full-rank W, so check the actual effect too
        if eigvalsh(w)[-1] * np.trace(p).real > 1 + PSD_TOL:
            raise NotTraceNonincreasingError(
                f"trace-and-prepare map has maximal output trace {eigvalsh(w)[-1] * np.trace(p).real:.6g} > 1"
            )
    return Subchannel(np.kron(w.T, p), w.shape[0], p.shape[0])


@dataclass(frozen=True, eq=False)
class SubchannelSet:
    """An instrument (a game): subchannels whose sum is trace preserving.

    The same :class:`Subchannel` object may appear many times; validation and
    evaluation work per distinct object.
    """

    subchannels: tuple

    def __post_init__(self):
        subs = tuple(self.subchannels)
        if len(subs) < 2:
            raise InvalidInputError("a set of subchannels needs at least two members")
        d_in, d_out = subs[0].d_in, subs[0].d_out
        if any((s.d_in, s.d_out) != (d_in, d_out) for s in subs):
            raise InvalidInputError("subchannels must share input and output dimensions")
        total = sum_choi(subs)
        effect = _trace_out(total, d_in, d_out)
        if np.max(np.abs(effect - np.eye(d_in))) > CPTP_TOL:
            raise InvalidInputError("subchannels do not sum to a trace-preserving map")
        object.__setattr__(self, "subchannels", subs)

    @property
    def d_in(self) -> int:
        return self.subchannels[0].d_in

    @property
    def d_out(self) -> int:
        return self.subchannels[0].d_out

    def __len__(self):
        return len(self.subchannels)

    def __getitem__(self, x):
        return self.subchannels[x]

    def __iter__(self):
        return iter(self.subchannels)

    def outputs(self, state) -> np.ndarray:
        """Stack of unnormalised outputs ``Psi_x(state)``, shape ``(k, d_out, d_out)``."""
        cache = {}
        out = np.empty((len(self), self.d_out, self.d_out), dtype=complex)
        for x, s in enumerate(self.subchannels):
            key = id(s)
            if key not in cache:
                cache[key] = apply_subchannel(s, state)
            out[x] = cache[key]
        return out


def sum_choi(subs) -> np.ndarray:
    counts = Counter(id(s) for s in subs)
    seen = {}
    for s in subs:
        seen.setdefault(id(s), s)
    return sum(counts[key] * s.choi for key, s in seen.items())


def complete_to_instrument(partial: Sequence[Subchannel], reference_channel: Subchannel) -> SubchannelSet:
    """Append ``reference_channel - sum(partial)`` so the collection becomes an instrument."""
    if not reference_channel.is_trace_preserving():
        raise InvalidInputError("reference channel must be trace preserving")
    partial = list(partial)
    if partial:
        rest = reference_channel.choi - sum_choi(partial)
    else:
        rest = reference_channel.choi
    if eigvalsh(hermitian(rest))[0] < -PSD_TOL:
        raise CompletionInfeasibleError(
            "reference channel minus the partial maps is not completely positive"
        )
    last = Subchannel(clip_psd(rest), reference_channel.d_in, reference_channel.d_out)
    return SubchannelSet(tuple(partial) + (last,))


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    """Channels ``Lambda_x`` drawn with prior ``p(x)``."""

    channels: tuple
    prior: np.ndarray

    def __post_init__(self):
        chans = tuple(self.channels)
        prior = np.asarray(self.prior, dtype=float)
        if len(chans) == 0 or prior.shape != (len(chans),):
            raise InvalidInputError("prior must have one entry per channel")
        if np.any(prior < 0) or abs(prior.sum() - 1) > 1e-12:
            raise InvalidInputError("prior must be a probability vector")
        for x, c in enumerate(chans):
            if not c.is_trace_preserving():
                raise InvalidInputError(f"channel {x} is not trace preserving")
            if (c.d_in, c.d_out) != (chans[0].d_in, chans[0].d_out):
                raise InvalidInputError("channels must share dimensions")
        prior = prior.copy()
        prior.setflags(write=False)
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "prior", prior)

    def __len__(self):
        return len(self.channels)

    def as_game(self) -> SubchannelSet:
        """The subchannels ``p(x) Lambda_x``."""
        return SubchannelSet(tuple(scaled(c, p) for c, p in zip(self.channels, self.prior)))
