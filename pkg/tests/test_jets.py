import numpy as np
import pytest

from octopsh import hermitian as hm
from octopsh import octonion as oc
from octopsh.catalog import (
    bump, const, coord, extremal_ball, fundamental, fundamental_eps, parse_field, quadratic_pusher, shell_pusher,
    smooth_max, sq_norm, affine,
)
from octopsh.jets import Jet, closedness_residual, oct_gradient, oct_hessian, t_outer


def points(rng, n, r=0.8):
    g = rng.normal(size=(n, 16))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * r * rng.random((n, 1)) ** (1 / 16)


def test_square_norm_jet(rng):
    X = points(rng, 10)
    j = sq_norm().jet(X, order=2)
    assert np.allclose(j.g, 2 * X.T)
    assert np.allclose(np.moveaxis(j.h, -1, 0), 2 * np.eye(16))


def test_linear_jet(rng):
    X = points(rng, 5)
    j = coord(0).jet(X, order=2)
    assert np.allclose(j.g, np.eye(16)[0][:, None])
    assert j.h is None or not np.any(j.h)


def k_eps_hessian(x, eps):
    s = x @ x + eps
    return 6 * np.eye(16) / s**4 - 48 * np.outer(x, x) / s**5


def test_k_eps_hessian_closed_form(rng):
    X = points(rng, 20, 1.5)
    j = fundamental_eps(0, 0.3).jet(X, order=2)
    for k, x in enumerate(X):
        ref = k_eps_hessian(x, 0.3)
        assert np.max(np.abs(j.h[:, :, k] - ref)) <= 1e-9 * np.max(np.abs(ref))


def test_oct_hessian_square_norm(rng):
    H = oct_hessian(sq_norm().jet(points(rng, 4), 2))
    assert np.allclose(H.a11, 16) and np.allclose(H.a22, 16) and not np.any(H.a12)


def test_oct_hessian_linear_is_zero(rng):
    H = oct_hessian(affine(rng.normal(size=16), 0.3).jet(points(rng, 4), 2))
    assert not np.any(H.to_vector())


def test_oct_hessian_k_eps_entries(rng):
    eps = 0.7
    X = points(rng, 30, 1.2)
    H = oct_hessian(fundamental_eps(0, eps).jet(X, 2))
    s = np.sum(X * X, axis=1) + eps
    x1, x2 = X[:, :8], X[:, 8:]
    a11 = 48 / s**4 - 48 * oc.norm2(x1) / s**5
    a22 = 48 / s**4 - 48 * oc.norm2(x2) / s**5
    a12 = -48 * oc.mul(x1, oc.conj(x2)) / s[:, None] ** 5
    assert np.allclose(H.a11, a11, rtol=1e-12)
    assert np.allclose(H.a22, a22, rtol=1e-12)
    assert np.allclose(H.a12, a12, rtol=1e-12, atol=1e-14)


def test_diagonal_is_block_laplacian(rng):
    X = points(rng, 10)
    j = bump(0.1, 0.9).jet(X, 2)
    H = oct_hessian(j)
    assert np.allclose(H.a11, np.einsum("ii...->...", j.h[:8, :8]))
    assert np.allclose(H.a22, np.einsum("ii...->...", j.h[8:, 8:]))


def test_t_outer_examples(rng):
    du, dv = rng.normal(size=(50, 2, 8)), rng.normal(size=(50, 2, 8))
    T = t_outer(du, du)
    O = hm.outer(oc.conj(du))
    assert np.allclose(T.to_vector(), O.to_vector())
    assert np.all(hm.is_nonneg(T))
    Z = t_outer(np.zeros((3, 2, 8)), dv[:3])
    assert not np.any(Z.to_vector())
    assert np.max(np.abs(t_outer(du, dv).to_vector() - t_outer(dv, du).to_vector())) <= 1e-12


def test_oct_gradient_layout(rng):
    X = points(rng, 3)
    g = oct_gradient(sq_norm().jet(X, 1))
    assert np.allclose(g.reshape(3, 16), 2 * X)


CATALOG = [
    sq_norm(), coord(3), fundamental(0), fundamental_eps(0, 0.1), fundamental_eps([0.2, 0.1], 0.05),
    shell_pusher(), quadratic_pusher(), bump(0.1, 0.9), smooth_max(sq_norm(), coord(0), 0.2),
    extremal_ball(0, 0.5, 1.0, 0.05), parse_field("(pow 2 (add (sqnorm) (const 1)))"),
]


@pytest.mark.parametrize("f", CATALOG, ids=lambda f: f.to_text()[:30])
def test_jets_match_central_differences(f, rng):
    X = points(rng, 6, 0.9)
    X = X[np.linalg.norm(X, axis=1) > 0.2]
    j = f.jet(X, 2)
    h = 1e-4
    E = np.eye(16) * h
    fd_g = np.stack([(f(X + e) - f(X - e)) / (2 * h) for e in E])
    gp = np.stack([f.jet(X + e, 1).g for e in E])
    gm = np.stack([f.jet(X - e, 1).g for e in E])
    fd_h = (gp - gm) / (2 * h)
    g = np.zeros_like(fd_g) if j.g is None else j.g
    H = np.zeros_like(fd_h) if j.h is None else j.h
    assert np.max(np.abs(g - fd_g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))
    assert np.max(np.abs(H - fd_h)) <= 1e-6 * max(1.0, np.max(np.abs(H)))


@pytest.mark.parametrize("f", [sq_norm(), quadratic_pusher(), coord(2)], ids=str)
def test_closedness_quadratic_exact(f, rng):
    assert np.max(closedness_residual(f.jet(points(rng, 10), 3))) == 0.0


def test_closedness_k_eps_unit_sphere(rng):
    X = points(rng, 20)
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.max(closedness_residual(fundamental_eps(0, 0.1).jet(X, 3))) <= 1e-9


def test_closedness_random_quartic(rng):
    X = points(rng, 20)
    w = rng.normal(size=16)
    q = parse_field("(add (mul (sqnorm) (sqnorm)) (pospow 4 (affine [" + ",".join(map(str, w)) + "] 0.3)))")
    assert np.max(closedness_residual(q.jet(X, 3))) <= 1e-9


def test_third_order_against_differences(rng):
    f = fundamental_eps(0, 0.5)
    x = points(rng, 1)
    t = f.jet(x, 3).t[..., 0]
    h = 1e-4
    fd = np.stack([(f.jet(x + e, 2).h[..., 0] - f.jet(x - e, 2).h[..., 0]) / (2 * h) for e in np.eye(16) * h])
    assert np.max(np.abs(t - fd)) <= 1e-6 * np.max(np.abs(t))


def test_jet_arithmetic_product_rule(rng):
    X = points(rng, 4)
    a = Jet.variables(X, 2)[0]
    b = Jet.variables(X, 2)[9]
    p = a * b
    assert np.allclose(p.h[0, 9], 1.0) and np.allclose(p.h[9, 0], 1.0)
    c = const(2.0).jet(X, 2)
    assert np.allclose((c * a).g[0], 2.0)
