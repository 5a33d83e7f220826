import numpy as np
import pytest

from resource_games import quantifiers as qf
from resource_games.errors import InvalidInputError
from resource_games.freesets import FreeMeasurementSet, FreeStateSet
from resource_games.linalg import Povm, maximally_coherent, maximally_mixed
from resource_games.sampling import (
    random_povm,
    random_state,
    random_stochastic,
    sample_free_povm,
    sample_free_state,
)

TOL = 1e-6
inc3 = FreeStateSet("incoherent", 3)


def _uniform(d, k, q=None):
    q = np.full(k, 1 / k) if q is None else np.asarray(q)
    return Povm(np.stack([qa * np.eye(d) for qa in q]).astype(complex))


def test_state_known_values(plus, mixed_coherent, inc2):
    assert qf.robustness_state(np.diag([0.3, 0.7]), inc2).value == pytest.approx(0.0, abs=TOL)
    assert qf.robustness_state(plus, inc2).value == pytest.approx(1.0, abs=TOL)
    assert qf.robustness_state(maximally_coherent(3), inc3).value == pytest.approx(2.0, abs=TOL)
    assert qf.weight_state(maximally_mixed(2), inc2).value == pytest.approx(0.0, abs=TOL)
    assert qf.weight_state(plus, inc2).value == pytest.approx(1.0, abs=TOL)
    assert qf.weight_state(mixed_coherent, inc2).value == pytest.approx(0.5, abs=TOL)


def test_measurement_known_values(proj, noisy, triv2):
    assert qf.robustness_measurement(_uniform(2, 2, [0.4, 0.6]), triv2).value == pytest.approx(0.0, abs=TOL)
    assert qf.robustness_measurement(proj, triv2).value == pytest.approx(1.0, abs=TOL)
    assert qf.robustness_measurement(noisy, triv2).value == pytest.approx(0.5, abs=TOL)
    assert qf.weight_measurement(_uniform(2, 2), triv2).value == pytest.approx(0.0, abs=TOL)
    assert qf.weight_measurement(proj, triv2).value == pytest.approx(1.0, abs=TOL)
    assert qf.weight_measurement(noisy, triv2).value == pytest.approx(0.5, abs=TOL)


def test_dimension_mismatch(plus, proj):
    with pytest.raises(InvalidInputError):
        qf.robustness_state(plus, inc3)
    with pytest.raises(InvalidInputError):
        qf.weight_measurement(proj, FreeMeasurementSet("trivial", 3, 2))


def _is_free_state(free, s):
    return free.contains(s, tol=1e-7) and np.min(np.linalg.eigvalsh(s)) >= -1e-7


def test_state_decompositions(rng):
    for d, free in ((2, FreeStateSet("incoherent", 2)), (3, inc3)):
        for _ in range(10):
            rho = random_state(d, rng)
            r = qf.robustness_state(rho, free)
            dec = r.decomposition
            assert np.allclose(rho + r.value * dec["general"], (1 + r.value) * dec["free"], atol=1e-7)
            assert _is_free_state(free, dec["free"])
            w = qf.weight_state(rho, free)
            dec = w.decomposition
            assert np.allclose(rho, w.value * dec["general"] + (1 - w.value) * dec["free"], atol=1e-7)
            assert np.min(np.linalg.eigvalsh(dec["general"])) >= -1e-7
            assert _is_free_state(free, dec["free"])


@pytest.mark.parametrize("kind", ["trivial", "incoherent"])
def test_measurement_decompositions(kind, rng):
    for k in (2, 3):
        free = FreeMeasurementSet(kind, 2, k)
        for _ in range(8):
            m = random_povm(2, k, rng)
            r = qf.robustness_measurement(m, free)
            dec = r.decomposition
            assert np.allclose(m.elements + r.value * dec["general"], (1 + r.value) * dec["free"], atol=1e-7)
            assert free.contains(Povm(dec["free"]), tol=1e-7)
            w = qf.weight_measurement(m, free)
            dec = w.decomposition
            assert np.allclose(m.elements, w.value * dec["general"] + (1 - w.value) * dec["free"], atol=1e-7)
            if w.value < 1 - 1e-6:
                assert free.contains(Povm(dec["free"]), tol=1e-6)


def test_state_witnesses(rng):
    free = FreeStateSet("incoherent", 2)
    samples = [sample_free_state(free, rng) for _ in range(200)]
    for _ in range(10):
        rho = random_state(2, rng)
        r = qf.robustness_state(rho, free)
        z = qf.psd_witness(r.witness)
        assert np.trace(z @ rho).real - 1 == pytest.approx(r.value, abs=1e-7)
        assert all(np.trace(c.coeffs[0] @ z).real <= 1 + 1e-7 for c in free.witness_constraints())
        assert np.trace(z @ rho).real > 1
        w = qf.weight_state(rho, free)
        y = qf.psd_witness(w.witness)
        assert 1 - np.trace(y @ rho).real == pytest.approx(w.value, abs=1e-7)
        assert np.trace(y @ rho).real < 1
        assert min(np.trace(y @ s).real for s in samples) >= 1 - 1e-7


def test_measurement_witnesses(rng):
    free = FreeMeasurementSet("trivial", 2, 3)
    for _ in range(10):
        m = random_povm(2, 3, rng)
        r = qf.robustness_measurement(m, free)
        z = qf.psd_witness(r.witness)
        pairing = sum(np.trace(a @ b).real for a, b in zip(z, m))
        assert pairing - 1 == pytest.approx(r.value, abs=1e-7)
        for c in free.witness_constraints():
            assert sum(np.trace(a @ b).real for a, b in zip(c.coeffs, z)) <= 1 + 1e-7
        w = qf.weight_measurement(m, free)
        y = qf.psd_witness(w.witness)
        assert 1 - sum(np.trace(a @ b).real for a, b in zip(y, m)) == pytest.approx(w.value, abs=1e-7)
        for c in free.witness_constraints(weight=True):
            assert sum(np.trace(a @ b).real for a, b in zip(c.coeffs, y)) >= 1 - 1e-7


def test_primal_dual_agree(rng):
    free = FreeStateSet("incoherent", 3)
    fm = FreeMeasurementSet("incoherent", 2, 3)
    for _ in range(5):
        rho = random_state(3, rng)
        m = random_povm(2, 3, rng)
        assert qf.robustness_state(rho, free).value == pytest.approx(qf.robustness_state_dual(rho, free)[0], abs=1e-6)
        assert qf.weight_state(rho, free).value == pytest.approx(qf.weight_state_dual(rho, free)[0], abs=1e-6)
        assert qf.robustness_measurement(m, fm).value == pytest.approx(qf.robustness_measurement_dual(m, fm)[0], abs=1e-6)
        assert qf.weight_measurement(m, fm).value == pytest.approx(qf.weight_measurement_dual(m, fm)[0], abs=1e-6)


def test_faithfulness(rng):
    free, fm = FreeStateSet("incoherent", 2), FreeMeasurementSet("trivial", 2, 2)
    for i in range(40):
        rho = sample_free_state(free, rng) if i % 2 else random_state(2, rng)
        for q in (qf.robustness_state, qf.weight_state):
            assert (q(rho, free).value <= 1e-7) == free.contains(rho)
        m = sample_free_povm(fm, rng) if i % 2 else random_povm(2, 2, rng)
        for q in (qf.robustness_measurement, qf.weight_measurement):
            assert (q(m, fm).value <= 1e-7) == fm.contains(m)


def test_convexity(rng):
    free = FreeStateSet("incoherent", 2)
    fm = FreeMeasurementSet("trivial", 2, 2)
    for _ in range(5):
        a, b = random_state(2, rng), random_state(2, rng)
        m, n = random_povm(2, 2, rng), random_povm(2, 2, rng)
        for lam in (0.25, 0.5, 0.75):
            for q in (qf.robustness_state, qf.weight_state):
                mix = q(lam * a + (1 - lam) * b, free).value
                assert mix <= lam * q(a, free).value + (1 - lam) * q(b, free).value + 1e-7
            for q in (qf.robustness_measurement, qf.weight_measurement):
                mix = q(Povm(lam * m.elements + (1 - lam) * n.elements), fm).value
                assert mix <= lam * q(m, fm).value + (1 - lam) * q(n, fm).value + 1e-7


@pytest.mark.parametrize("kind", ["trivial", "incoherent"])
def test_cpp_monotonicity(kind, rng):
    free = FreeMeasurementSet(kind, 2, 3)
    for _ in range(10):
        m = random_povm(2, 3, rng)
        k2 = int(rng.integers(2, 4))
        pm = m.post_process(random_stochastic(k2, 3, rng))
        for q in (qf.robustness_measurement, qf.weight_measurement):
            assert q(pm, free).value <= q(m, free).value + 1e-7
