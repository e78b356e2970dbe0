import numpy as np
import pytest
from hypothesis import given, strategies as st

from matsqrt import linalg
from matsqrt.baselines import (
    NewtonConfig,
    NewtonConvergenceError,
    evd_sqrt,
    newton_sqrt,
    scalar_newton,
)
from matsqrt.experiments import SpdInstanceSpec, random_spd


def test_scalar_newton_first_step_exact():
    # x1 = (3 + 4/3) / 2 = 13/6
    seq = scalar_newton(4.0, 3.0, 1)
    assert seq == [3.0, 13.0 / 6.0]


def test_scalar_newton_quadratic_convergence():
    seq = scalar_newton(2.0, 2.0, 6)
    errs = [abs(x - np.sqrt(2.0)) for x in seq]
    # error roughly squares each step until it hits machine precision
    for a, b in zip(errs, errs[1:]):
        if a > 1e-8:
            assert b <= a * a


def test_newton_sqrt_diagonal():
    M = np.diag([4.0, 2.0])
    X, iters = newton_sqrt(M)
    assert iters <= 10
    assert np.allclose(np.asarray(X), np.diag([2.0, np.sqrt(2.0)]), rtol=0, atol=1e-10)


def test_newton_sqrt_identity_init():
    M = random_spd(SpdInstanceSpec(n=5, kappa=12.0, seed=1))
    X, iters = newton_sqrt(M, NewtonConfig(init="identity"))
    assert iters <= 20
    assert np.allclose(np.asarray(X) @ np.asarray(X), M, rtol=1e-9, atol=1e-12)


def test_newton_sqrt_identity_input_converges_immediately():
    X, iters = newton_sqrt(np.eye(3))
    assert iters == 0
    assert np.array_equal(np.asarray(X), np.eye(3))


@given(st.integers(0, 150))
def test_newton_matches_evd(seed):
    spec = SpdInstanceSpec(n=4, kappa=1.0 + (seed % 10) * 11.0, seed=seed)
    M = random_spd(spec)
    X, _ = newton_sqrt(M)
    Y = evd_sqrt(M)
    scale = np.linalg.norm(np.asarray(Y))
    assert np.linalg.norm(np.asarray(X) - np.asarray(Y)) <= 1e-8 * scale


def test_newton_diagonal_reduces_to_scalar():
    M = np.diag([9.0, 3.0, 0.5])
    X, iters = newton_sqrt(M)
    for i, m in enumerate([9.0, 3.0, 0.5]):
        seq = scalar_newton(m, m, iters)
        assert np.asarray(X)[i, i] == pytest.approx(seq[-1], rel=1e-12)
    off = np.asarray(X) - np.diag(np.diag(np.asarray(X)))
    assert np.max(np.abs(off)) == 0.0


def test_newton_iteration_cap():
    M = np.diag([4.0, 1.0])
    with pytest.raises(NewtonConvergenceError):
        newton_sqrt(M, NewtonConfig(max_iters=1, tol=1e-15))


def test_newton_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(init="random")
    with pytest.raises(ValueError):
        NewtonConfig(max_iters=0)
    with pytest.raises(ValueError):
        NewtonConfig(tol=0.0)


def test_evd_sqrt_squares_back():
    M = random_spd(SpdInstanceSpec(n=8, kappa=50.0, seed=4))
    X = evd_sqrt(M)
    assert isinstance(X, linalg.SpdMatrix)
    err = np.linalg.norm(np.asarray(X) @ np.asarray(X) - M)
    assert err <= 1e-10 * np.linalg.norm(M)


def test_evd_sqrt_diagonal_exact():
    X = evd_sqrt(np.diag([4.0, 1.0]))
    assert np.asarray(X)[0, 0] == pytest.approx(2.0, abs=1e-14)
    assert np.asarray(X)[1, 1] == pytest.approx(1.0, abs=1e-14)


def test_newton_rejects_non_spd():
    with pytest.raises(linalg.NotPositiveDefiniteError):
        newton_sqrt(np.diag([1.0, -1.0]))
