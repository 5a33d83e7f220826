"""Seeded random objects for tests, sweeps and the CLI. Every function takes a numpy Generator."""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .freesets import FreeMeasurementSet, FreeStateSet
from .linalg import ChannelEnsemble, Povm, SubchannelSet, subchannel_from_kraus


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def ginibre(rows, cols, rng) -> np.ndarray:
    rng = _rng(rng)
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_isometry(d_big, d_small, rng) -> np.ndarray:
    """``V`` with ``V^dag V = 1``, shape ``(d_big, d_small)``."""
    q, r = np.linalg.qr(ginibre(d_big, d_small, rng))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unitary(d, rng) -> np.ndarray:
    return random_isometry(d, d, rng)


def random_state(d, rng, rank=None) -> np.ndarray:
    """Density matrix from the induced measure (full rank by default)."""
    g = ginibre(d, rank or d, rng)
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    return 0.5 * (rho + rho.conj().T)


def random_pure_state(d, rng) -> np.ndarray:
    return random_state(d, rng, rank=1)


def random_povm(d, k, rng) -> Povm:
    """``M_a = S^{-1/2} G_a G_a^dag S^{-1/2}`` with ``S = sum_a G_a G_a^dag``."""
    gs = [ginibre(d, d, rng) for _ in range(k)]
    ps = [g @ g.conj().T for g in gs]
    w, v = np.linalg.eigh(sum(ps))
    s = v @ np.diag(w ** -0.5) @ v.conj().T
    els = np.stack([s @ p @ s for p in ps])
    els = 0.5 * (els + np.conj(np.transpose(els, (0, 2, 1))))
    # make the sum exactly the identity
    els[-1] += np.eye(d) - els.sum(axis=0)
    return Povm(els)


def random_stochastic(rows, cols, rng) -> np.ndarray:
    """Column-stochastic ``(rows, cols)`` matrix: entry ``[x, a]`` is ``p(x|a)``."""
    m = _rng(rng).random((rows, cols))
    return m / m.sum(axis=0, keepdims=True)


def random_instrument(d_in, d_out, k, rng, kraus_rank=2) -> SubchannelSet:
    """``k`` subchannels carved out of one random Stinespring isometry."""
    v = random_isometry(k * kraus_rank * d_out, d_in, rng)
    blocks = v.reshape(k, kraus_rank, d_out, d_in)
    return SubchannelSet(tuple(subchannel_from_kraus(list(b)) for b in blocks))


def random_channel(d_in, d_out, rng, kraus_rank=2):
    v = random_isometry(kraus_rank * d_out, d_in, rng)
    return subchannel_from_kraus(list(v.reshape(kraus_rank, d_out, d_in)))


def random_ensemble(d, k, rng, prior=None) -> ChannelEnsemble:
    rng = _rng(rng)
    chans = tuple(random_channel(d, d, rng) for _ in range(k))
    if prior is None:
        prior = rng.dirichlet(np.ones(k))
    return ChannelEnsemble(chans, prior)


def sample_free_state(free: FreeStateSet, rng) -> np.ndarray:
    """Random convex combination of the free vertices."""
    verts = free.vertices()
    w = _rng(rng).dirichlet(np.ones(len(verts)))
    return sum(p * v for p, v in zip(w, verts))


def sample_free_povm(free: FreeMeasurementSet, rng) -> Povm:
    rng = _rng(rng)
    k, d = free.outcomes, free.dim
    if free.kind == "trivial":
        q = rng.dirichlet(np.ones(k))
        return Povm(np.stack([qa * np.eye(d) for qa in q]).astype(complex))
    if free.kind == "incoherent":
        # a column of p(a|i) per basis vector
        p = random_stochastic(k, d, rng)
        els = np.zeros((k, d, d), dtype=complex)
        for i in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, i] = 1.0
            e = free._rotate(e)
            for a in range(k):
                els[a] += p[a, i] * e
        return Povm(els)
    verts = free.vertices()
    w = rng.dirichlet(np.ones(len(verts)))
    return Povm(sum(p * v for p, v in zip(w, verts)))


def random_resourceful_pair(d, k, free_state, free_povm, rng, threshold=0.05, max_tries=200):
    """Random ``(rho, M)`` with both robustnesses and weights at least ``threshold``."""
    from . import quantifiers as qf

    rng = _rng(rng)
    fm = free_povm.with_outcomes(k)
    for _ in range(max_tries):
        rho = random_state(d, rng, rank=int(rng.integers(1, d + 1)))
        povm = random_povm(d, k, rng)
        vals = (qf.robustness_state(rho, free_state).value, qf.weight_state(rho, free_state).value,
                qf.robustness_measurement(povm, fm).value, qf.weight_measurement(povm, fm).value)
        if min(vals) >= threshold:
            return rho, povm
    raise InvalidInputError(f"no pair with all quantifiers >= {threshold} in {max_tries} draws")
