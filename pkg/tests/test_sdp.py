import csv

import numpy as np
import pytest

from resource_games.errors import MalformedProgramError
from resource_games.sdp import Block, ConicProgram, hermitian_basis, realify, solve, unrealify_dual


def _lambda_max_program(m, scale=1.0):
    d = m.shape[0]
    prog = ConicProgram("min")
    t = prog.scalar("t")
    s = prog.block("S", d)
    prog.objective({t: scale})
    # t I - m = S >= 0
    prog.add_matrix_eq({t: np.eye(d), s: -1.0}, m)
    return prog


def test_max_eigenvalue_program():
    rep = solve(_lambda_max_program(np.diag([1.0, 3.0])))
    assert rep.optimal
    assert rep.objective == pytest.approx(3.0, abs=1e-7)
    assert abs(rep.objective - rep.dual_objective) <= 1e-8


def test_trace_constrained_max():
    prog = ConicProgram("max")
    x = prog.block("X", 2)
    prog.objective({x: np.diag([1.0, 0.0])})
    prog.add_eq({x: np.eye(2)}, 1.0)
    rep = solve(prog)
    assert rep.optimal
    assert rep.objective == pytest.approx(1.0, abs=1e-7)
    assert np.allclose(rep.primal_values["X"], np.diag([1.0, 0.0]), atol=1e-5)


def test_complex_hermitian_block(rng):
    g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    m = g + g.conj().T
    rep = solve(_lambda_max_program(m))
    assert rep.objective == pytest.approx(np.linalg.eigvalsh(m)[-1], abs=1e-7)


def test_inequality_and_nonneg_scalar():
    # max t s.t. t <= 2, t >= 0, plus a dummy PSD block pinned to 1
    prog = ConicProgram("max")
    t = prog.scalar("t", nonneg=True)
    x = prog.block("X", 1)
    prog.objective({t: 1.0})
    prog.add_ineq({t: 1.0}, 2.0, label="cap")
    prog.add_eq({x: np.eye(1)}, 1.0)
    rep = solve(prog)
    assert rep.objective == pytest.approx(2.0, abs=1e-7)
    assert rep.dual_values["cap"] == pytest.approx(1.0, abs=1e-6)


def test_dual_values_are_sensitivities():
    # min -t s.t. t <= 2: raising the cap lowers the optimum
    prog = ConicProgram("min")
    t = prog.scalar("t", nonneg=True)
    x = prog.block("X", 1)
    prog.objective({t: -1.0, x: np.eye(1)})
    prog.add_ineq({t: 1.0}, 2.0, label="cap")
    prog.add_eq({x: np.eye(1)}, 1.0, label="pin")
    rep = solve(prog)
    assert rep.objective == pytest.approx(-1.0, abs=1e-7)
    assert rep.dual_values["cap"] == pytest.approx(-1.0, abs=1e-6)
    assert rep.dual_values["pin"] == pytest.approx(1.0, abs=1e-6)


def test_infeasible_program():
    prog = ConicProgram("min")
    x = prog.block("X", 2)
    prog.objective({x: np.eye(2)})
    prog.add_eq({x: np.eye(2)}, -1.0)
    assert solve(prog).status == "infeasible"


def test_scaling_objective_scales_optimum(rng):
    m = np.diag([0.2, 1.7, -0.4])
    base = solve(_lambda_max_program(m))
    for c in (0.5, 3.0, 10.0):
        rep = solve(_lambda_max_program(m, c))
        assert rep.objective == pytest.approx(c * base.objective, abs=1e-7 * c)
        assert np.allclose(rep.primal_values["S"], base.primal_values["S"], atol=1e-5)


def test_malformed_programs():
    prog = ConicProgram("min")
    with pytest.raises(MalformedProgramError):
        solve(prog)
    x = prog.block("X", 2)
    with pytest.raises(MalformedProgramError):
        prog.add_eq({x: np.eye(3)}, 1.0)
    with pytest.raises(MalformedProgramError):
        prog.add_eq({Block("Y", 2): np.eye(2)}, 1.0)
    with pytest.raises(MalformedProgramError):
        prog.block("X", 2)
    with pytest.raises(MalformedProgramError):
        ConicProgram("maximise")


def test_csv_log(tmp_path):
    path = tmp_path / "log.csv"
    rep = solve(_lambda_max_program(np.diag([1.0, 3.0])), log_path=path)
    rows = list(csv.DictReader(open(path)))
    assert rows and list(rows[0]) == ["iter", "mu", "primal_res", "dual_res", "gap"]
    assert len(rows) == len(rep.log)


def test_realify_examples():
    assert np.allclose(realify(np.diag([1.0, 2.0])), np.diag([1.0, 2.0, 1.0, 2.0]))
    r = realify(np.array([[0, 1j], [-1j, 0]]))
    assert np.allclose(r[:2, :2], 0) and np.allclose(r[2:, 2:], 0)
    assert np.allclose(r[2:, :2], [[0, 1], [-1, 0]])


def test_realify_spectrum_doubles(rng):
    for _ in range(50):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        h = g + g.conj().T
        ev = np.linalg.eigvalsh(realify(h))
        assert np.allclose(ev[::2], np.linalg.eigvalsh(h), atol=1e-10)
        assert np.allclose(ev[1::2], np.linalg.eigvalsh(h), atol=1e-10)


def test_unrealify_dual_pairing(rng):
    for _ in range(10):
        z = rng.standard_normal((4, 4))
        z = z + z.T
        w = unrealify_dual(z)
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        x = g + g.conj().T
        assert np.real(np.trace(w @ x)) == pytest.approx(np.trace(z @ realify(x)), abs=1e-10)


def test_hermitian_basis_orthonormal():
    b = hermitian_basis(3)
    gram = np.real(np.einsum("aij,bji->ab", b, b))
    assert np.allclose(gram, np.eye(9))
