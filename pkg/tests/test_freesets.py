import numpy as np
import pytest

from resource_games.errors import InvalidInputError, UnsupportedFreeSetError
from resource_games.freesets import (
    FreeMeasurementSet,
    FreeStateSet,
    emit_witness_constraints_measurement,
    emit_witness_constraints_state,
    free_set_from_descriptor,
    measurement_membership,
    state_membership,
)
from resource_games.linalg import Povm, computational_povm, maximally_mixed
from resource_games.sampling import random_povm, random_stochastic, sample_free_povm, sample_free_state


def test_state_membership_examples(plus, inc2):
    ok, dist = state_membership(inc2, np.diag([0.3, 0.7]))
    assert ok and dist == pytest.approx(0.0, abs=1e-15)
    ok, dist = state_membership(inc2, plus)
    assert not ok and dist == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert state_membership(FreeStateSet("incoherent", 3), maximally_mixed(3))[0]
    with pytest.raises(InvalidInputError):
        state_membership(inc2, maximally_mixed(3))


def test_measurement_membership_examples(proj, noisy, triv2):
    assert measurement_membership(triv2, Povm(np.stack([0.4 * np.eye(2), 0.6 * np.eye(2)]).astype(complex)))[0]
    assert not measurement_membership(triv2, proj)[0]
    assert measurement_membership(FreeMeasurementSet("incoherent", 2, 2), noisy)[0]
    with pytest.raises(InvalidInputError):
        measurement_membership(FreeMeasurementSet("trivial", 2, 3), proj)


def test_state_witness_constraints(inc2):
    cons = emit_witness_constraints_state(inc2)
    assert len(cons) == 2 and all(c.sense == "<=" and c.bound == 1.0 for c in cons)
    assert np.allclose(cons[0].coeffs[0], np.diag([1, 0]))
    assert len(emit_witness_constraints_state(FreeStateSet("incoherent", 3))) == 3
    assert all(c.sense == ">=" for c in emit_witness_constraints_state(inc2, weight=True))


def test_measurement_witness_constraints(triv2):
    cons = emit_witness_constraints_measurement(triv2, 2)
    assert len(cons) == 2
    # trivial vertex a pairs Z_a with the identity: Tr(Z_a) <= 1
    assert np.allclose(cons[0].coeffs[0], np.eye(2)) and np.allclose(cons[0].coeffs[1], 0)
    assert all(c.sense == ">=" for c in emit_witness_constraints_measurement(triv2, 2, weight=True))
    assert len(emit_witness_constraints_measurement(FreeMeasurementSet("incoherent", 2, 2))) == 4


def test_incoherent_vertex_guard():
    with pytest.raises(UnsupportedFreeSetError):
        FreeMeasurementSet("incoherent", 5, 2).vertices()
    with pytest.raises(UnsupportedFreeSetError):
        FreeMeasurementSet("incoherent", 2, 5).vertices()


@pytest.mark.parametrize("kind", ["trivial", "incoherent"])
def test_witness_constraints_sound_and_complete(kind, rng):
    free = FreeMeasurementSet(kind, 2, 2)
    cons = free.witness_constraints()
    members = [sample_free_povm(free, rng) for _ in range(1000)]
    for _ in range(20):
        z = rng.standard_normal((2, 2, 2))
        z = np.einsum("xij->xij", z + z.transpose(0, 2, 1)).astype(complex)
        worst = max(sum(np.trace(c @ zx).real for c, zx in zip(con.coeffs, z)) for con in cons)
        z = z / max(worst, 1e-3)
        vals = [sum(np.trace(zx @ nx).real for zx, nx in zip(z, m)) for m in members]
        if worst > 0:
            assert max(vals) <= 1 + 1e-9
    # completeness: a vertex violating its own constraint is a free member violating the condition
    z = np.stack([1.5 * np.eye(2), np.zeros((2, 2))]).astype(complex)
    verts = free.vertices()
    assert max(sum(np.trace(zx @ vx).real for zx, vx in zip(z, v)) for v in verts) > 1


def test_state_witness_soundness(rng):
    free = FreeStateSet("incoherent", 3)
    members = [sample_free_state(free, rng) for _ in range(1000)]
    for _ in range(20):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        z = g @ g.conj().T
        z = z / np.max(np.real(np.diag(z)))
        assert max(np.trace(z @ s).real for s in members) <= 1 + 1e-9


@pytest.mark.parametrize("kind", ["trivial", "incoherent"])
def test_cpp_closure(kind, rng):
    free = FreeMeasurementSet(kind, 2, 3)
    for _ in range(100):
        m = sample_free_povm(free, rng)
        for _ in range(20):
            k2 = int(rng.integers(2, 5))
            q = random_stochastic(k2, 3, rng)
            assert free.with_outcomes(k2).distance(m.post_process(q)) <= 1e-9


def test_convexity(rng):
    inc3 = FreeStateSet("incoherent", 3)
    fm = FreeMeasurementSet("incoherent", 3, 2)
    for _ in range(20):
        a, b = sample_free_state(inc3, rng), sample_free_state(inc3, rng)
        assert inc3.contains((a + b) / 2)
        m, n = sample_free_povm(fm, rng), sample_free_povm(fm, rng)
        assert fm.contains(Povm((m.elements + n.elements) / 2))


def test_best_response_matches_vertex_enumeration(rng):
    for kind in ("trivial", "incoherent"):
        free = FreeMeasurementSet(kind, 2, 3)
        for _ in range(20):
            ops = random_povm(2, 3, rng).elements * rng.random(3)[:, None, None]
            val, n = free.best_response(ops)
            brute = max(np.real(np.einsum("xij,xji->", v, ops)) for v in free.vertices())
            assert val == pytest.approx(brute, abs=1e-12)
            assert free.contains(Povm(n))


def test_rotated_basis_membership():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    free = FreeStateSet("incoherent", 2, basis=h)
    plus = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert free.contains(plus)
    assert not free.contains(np.diag([1.0, 0.0]))


def test_descriptors():
    assert free_set_from_descriptor("incoherent", dim=2).kind == "incoherent"
    m = free_set_from_descriptor({"kind": "incoherent-povm", "dim": 2, "outcomes": 2})
    assert isinstance(m, FreeMeasurementSet) and m.kind == "incoherent"
    assert free_set_from_descriptor("incoherent", 2, 3, measurement=True).outcomes == 3
    with pytest.raises(InvalidInputError):
        free_set_from_descriptor({"kind": "incoherent"})
    with pytest.raises(UnsupportedFreeSetError):
        FreeStateSet("separable", 4)
    assert FreeMeasurementSet("trivial", 2, 2).descriptor() == {"kind": "trivial", "dim": 2, "outcomes": 2}


def test_computational_povm_not_trivial():
    assert FreeMeasurementSet("trivial", 3, 3).distance(computational_povm(3)) > 0.5
