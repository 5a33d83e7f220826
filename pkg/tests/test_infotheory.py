import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resource_games import infotheory as it
from resource_games.errors import InvalidInputError
from resource_games.freesets import FreeMeasurementSet, FreeStateSet
from resource_games.games import eval_discrimination, eval_exclusion
from resource_games.linalg import (
    ChannelEnsemble,
    Povm,
    SubchannelSet,
    computational_povm,
    make_trace_and_prepare,
    scaled,
)
from resource_games.sampling import random_ensemble, random_povm, random_state


def prepare(state):
    return make_trace_and_prepare(np.eye(state.shape[0]), state)


joints = st.integers(2, 4).flatmap(
    lambda k: st.integers(2, 4).flatmap(
        lambda o: st.lists(st.floats(0.01, 1.0), min_size=k * o, max_size=k * o).map(
            lambda v: (np.array(v) / sum(v)).reshape(k, o)
        )
    )
)


def test_joint_examples(rng):
    ens = random_ensemble(2, 2, rng, prior=[0.5, 0.5])
    j = it.joint_from_task(ens, random_state(2, rng), Povm(np.stack([np.eye(2) / 2] * 2).astype(complex)))
    assert np.allclose(j.probs, 0.25)
    basis = ChannelEnsemble((prepare(np.diag([1.0, 0])), prepare(np.diag([0, 1.0]))), [0.5, 0.5])
    j = it.joint_from_task(basis, np.eye(2) / 2, computational_povm(2))
    assert np.allclose(j.probs, np.diag([0.5, 0.5]))
    for _ in range(10):
        ens = random_ensemble(2, 3, rng)
        j = it.joint_from_task(ens, random_state(2, rng), random_povm(2, 2, rng))
        assert np.allclose(j.probs.sum(axis=1), ens.prior, atol=1e-10)


def test_joint_validation():
    with pytest.raises(InvalidInputError):
        it.JointDistribution(np.array([[0.5, 0.6]]), np.array([1.1]))
    with pytest.raises(InvalidInputError):
        it.JointDistribution(np.array([[0.5, 0.5]]), np.array([0.5]))


def test_information_examples():
    prod = it.JointDistribution.from_probs(np.full((2, 2), 0.25))
    assert it.mutual_info_plus(prod) == pytest.approx(0.0)
    assert it.mutual_info_minus(prod) == pytest.approx(0.0)
    diag = it.JointDistribution.from_probs(np.diag([0.5, 0.5]))
    assert it.mutual_info_plus(diag) == pytest.approx(1.0)
    assert it.mutual_info_minus(diag) == math.inf
    assert it.conditional_entropy_minus(diag) == math.inf
    # degenerate prior: log(1/1)
    assert it.mutual_info_plus(it.JointDistribution.from_probs([[0.3, 0.7], [0.0, 0.0]])) == 0.0


def test_zero_prior_symbols_are_dropped():
    j = it.JointDistribution.from_probs([[0.25, 0.25], [0.25, 0.25], [0.0, 0.0]])
    assert it.mutual_info_minus(j) == pytest.approx(0.0)
    assert it.entropy_minus(j.prior) == pytest.approx(1.0)


def test_extended_arithmetic():
    assert it.extended_sub(math.inf, math.inf) is None
    assert it.extended_sub(math.inf, 2.0) == math.inf
    assert it.extended_sub(1.0, math.inf) == -math.inf
    assert it.fmt_ext(None) == "indeterminate"
    assert it.fmt_ext(math.inf) == "inf" and it.fmt_ext(-math.inf) == "-inf"
    assert it.fmt_ext(1.5) == 1.5


@settings(max_examples=100, deadline=None)
@given(joints)
def test_ranges_and_coarse_graining(p):
    j = it.JointDistribution.from_probs(p)
    k, o = p.shape
    ip = it.mutual_info_plus(j)
    assert -1e-12 <= ip <= math.log2(k) + 1e-12
    assert it.mutual_info_minus(j) >= 0
    if o >= 2:
        assert it.mutual_info_plus(j.coarse_grain(0, 1)) <= ip + 1e-12


def test_identities_against_games(rng):
    for _ in range(20):
        ens = random_ensemble(2, 3, rng)
        rho, m = random_state(2, rng), random_povm(2, 3, rng)
        j = it.joint_from_task(ens, rho, m)
        game = SubchannelSet(tuple(scaled(c, p) for c, p in zip(ens.channels, ens.prior)))
        assert it.conditional_entropy_plus(j) == pytest.approx(-math.log2(eval_discrimination(game, rho, m)[0]), abs=1e-10)
        assert it.conditional_entropy_minus(j) == pytest.approx(-math.log2(eval_exclusion(game, rho, m)[0]), abs=1e-10)


def test_result3_free_pair(rng):
    inc, triv = FreeStateSet("incoherent", 2), FreeMeasurementSet("trivial", 2, 2)
    m = Povm(np.stack([0.4 * np.eye(2), 0.6 * np.eye(2)]).astype(complex))
    ens = [random_ensemble(2, 3, rng) for _ in range(5)]
    rep = it.certify_result3(np.diag([0.3, 0.7]), m, inc, triv, ens)
    assert rep.bounds_hold
    assert rep.robustness_bound == pytest.approx(0.0, abs=1e-6)
    for e in rep.ensembles:
        assert e.gap_plus <= 1e-6


def test_result3_plus_projective(plus, proj, inc2, triv2, rng):
    ens = [random_ensemble(2, int(rng.integers(2, 5)), rng) for _ in range(10)]
    rep = it.certify_result3(plus, proj, inc2, triv2, ens)
    assert rep.robustness_bound == pytest.approx(2.0, abs=1e-6)
    assert rep.weight_bound == math.inf
    assert rep.bounds_hold
    assert all(e.status_minus in ("vacuous", "indeterminate") for e in rep.ensembles)
    assert rep.max_identity_error <= 1e-10
    assert 0 <= rep.max_saturation <= 1 + 1e-6


def test_result3_needs_two_symbols(plus, proj, inc2, triv2, rng):
    ens = random_ensemble(2, 2, rng, prior=[1.0, 0.0])
    with pytest.raises(InvalidInputError):
        it.certify_result3(plus, proj, inc2, triv2, [ens])
