import numpy as np
import pytest

from octopsh import hermitian as hm
from octopsh import operators as ops
from octopsh.catalog import (
    Scaled, barrier, bump, const, coord, defining_rho, extremal_ball, fundamental, fundamental_eps, max_of,
    parse_field, quadratic_pusher, shell_pusher, smooth_max, sq_norm,
)
from octopsh.errors import ContractError, DomainError
from octopsh.quadrature import ball, sample, shell, sphere


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def test_fundamental_values(rng):
    a = np.r_[0.1, np.zeros(15)]
    X = a + unit(rng.normal(size=(20, 16)))
    assert np.allclose(fundamental(a)(X), -1.0)


def test_fundamental_density_vanishes():
    X = sample(shell(0, 0.1, 2.0), 1000, 3)
    assert np.max(np.abs(ops.ma_density_normalized(fundamental(0), X))) <= 1e-8


def test_fundamental_opsh():
    X = sample(shell(0, 0.1, 2.0), 1000, 4)
    assert np.all(hm.is_nonneg(ops.hessian(fundamental(0), X)))


def test_k_eps_density_at_centre():
    # det(Hess K_eps) = 48^2 eps / (|x|^2 + eps)^9 = 2304 at x = a, eps = 1
    x = np.zeros((1, 16))
    assert ops.ma_density(fundamental_eps(0, 1.0), x)[0] == pytest.approx(2304.0, rel=1e-12)
    H = ops.hessian(fundamental_eps(0, 1.0), x)
    assert H.a11[0] == pytest.approx(48.0) and H.a22[0] == pytest.approx(48.0)


def test_k_eps_density_on_unit_sphere(rng):
    X = unit(rng.normal(size=(10, 16)))
    assert np.allclose(ops.ma_density(fundamental_eps(0, 1.0), X), 2304.0 / 2**9, rtol=1e-12)


def test_extremal_ball_values(rng):
    a, r, R = np.r_[0.0, 0.2, np.zeros(14)], 0.5, 1.0
    u = extremal_ball(a, r, R)
    d = unit(rng.normal(size=(10, 16)))
    assert np.allclose(u(a + r * d), -1.0)
    assert np.allclose(u(a + R * d), 0.0, atol=1e-15)
    m = 0.7
    expect = (-(m**-6) + R**-6) / (r**-6 - R**-6)
    assert np.allclose(u(a + m * d), expect)
    assert np.allclose(u(a + 0.2 * d), -1.0)


def test_extremal_ball_rejects_radii():
    with pytest.raises(DomainError) as exc:
        extremal_ball(0, 1.0, 0.5)
    assert exc.value.code == "catalog.radii"


def test_barrier_examples(rng):
    x0 = unit(rng.normal(size=16))
    grad = rng.normal(size=16)
    b = barrier(x0, 0.7, grad, 1.3)
    assert b(x0[None])[0] == pytest.approx(0.7)
    flat = barrier(x0, 0.7, np.zeros(16), 0.0)
    X = sample(ball(), 10, 1)
    assert np.allclose(flat(X), 0.7)
    S = sample(sphere(), 50, 2)
    lhs = 0.7 + (S - x0) @ grad - b(S)
    assert np.allclose(lhs, 1.3 * np.sum((S - x0) ** 2, axis=1))
    with pytest.raises(ContractError):
        barrier(x0, 0.0, grad, -1.0)


def test_misc_constructors(rng):
    S = unit(rng.normal(size=(5, 16)))
    assert np.allclose(shell_pusher()(S), 4.0)
    assert np.allclose(defining_rho()(S), 0.0, atol=1e-15)
    assert np.allclose(quadratic_pusher()(S), 0.5)
    X = sample(ball(), 200, 3)
    f, d = sq_norm(), 0.3
    diff = smooth_max(f, f, d)(X) - f(X)
    assert np.all((diff >= 0) & (diff <= d / 2 + 1e-15))
    assert np.all(bump(0, 0.5)(X[np.linalg.norm(X, axis=1) > 0.5]) == 0.0)


def test_exact_max_of(rng):
    X = sample(ball(), 50, 4)
    m = max_of([coord(0), coord(1), const(0.1)])
    assert np.allclose(m(X), np.maximum(np.maximum(X[:, 0], X[:, 1]), 0.1))


OPSH = [sq_norm(), coord(0), fundamental(0), fundamental_eps([0, 0.3], 0.01), shell_pusher(), quadratic_pusher(),
        extremal_ball(0, 0.5, 1.0, 0.05), smooth_max(sq_norm(), fundamental_eps(0, 0.1), 0.1),
        Scaled(sq_norm(), 2.0, -3.0), sq_norm() + coord(4)]


@pytest.mark.parametrize("u", OPSH, ids=lambda u: u.to_text()[:30])
def test_opsh_flagged_fields_are_nonneg(u):
    assert u.opsh
    X = sample(ball(), 1000, 5)
    X = X[ops._valid(u, X, ops.SINGULAR_EXCLUSION)]
    assert np.all(hm.is_nonneg(ops.hessian(u, X)))


def test_opsh_flag_closure():
    assert smooth_max(sq_norm(), coord(0), 0.1).opsh
    assert Scaled(sq_norm(), 0.5, 1.0).opsh
    assert not Scaled(sq_norm(), -0.5, 1.0).opsh
    assert not bump(0, 0.5).opsh


@pytest.mark.parametrize("u", OPSH + [bump([0.1, 0.2], 0.5), max_of([coord(0), const(1)])], ids=lambda u: u.to_text()[:30])
def test_text_round_trip(u):
    v = parse_field(u.to_text())
    assert v.to_text() == u.to_text()
    X = sample(ball(0, 0.9), 20, 6)
    X = X[ops._valid(u, X, 0.05)]
    assert np.array_equal(u(X), v(X))


def test_parse_errors():
    for bad in ["(nosuch 1)", "(const", "(add 1 2)", "(const (sqnorm))"]:
        with pytest.raises(ContractError) as exc:
            parse_field(bad)
        assert exc.value.code == "catalog.parse"


def test_parse_outer_parentheses_optional():
    assert parse_field("const 1").to_text() == parse_field("(const 1)").to_text()


def test_singular_points_and_regularisation():
    K = fundamental([0.5])
    assert np.allclose(K.singular_points()[0][0], 0.5)
    assert K.regularized(0.1).to_text() == fundamental_eps([0.5], 0.1).to_text()
    assert sq_norm().regularized(0.1) is None
