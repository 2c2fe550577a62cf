import math

import numpy as np
import pytest

from octopsh import octonion as oc
from octopsh import quadrature as qd
from octopsh.errors import DomainError

TAU16 = math.pi**8 / math.factorial(8)
S15 = 2 * math.pi**8 / math.factorial(7)


def one(X):
    return np.ones(len(X))


def test_closed_form_constants():
    assert qd.ball_volume() == pytest.approx(0.2353306303, rel=1e-9)
    assert qd.ball_volume() == pytest.approx(TAU16, rel=1e-14)
    assert qd.sphere_area() == pytest.approx(3.7652901, rel=1e-7)
    assert qd.sphere_area() == pytest.approx(16 * TAU16, rel=1e-14)
    assert qd.ball_volume(1.0, 8) == pytest.approx(math.pi**4 / 24, rel=1e-14)


@pytest.mark.parametrize("method", ["mc", "qmc"])
@pytest.mark.parametrize("region", [qd.ball(), qd.sphere(), qd.shell(0, 0.5, 1.0), qd.ball([0.2], 0.5)],
                         ids=["ball", "sphere", "shell", "offball"])
def test_volume_calibration(region, method):
    est = qd.integrate(one, region, 20_000, 1, method)
    assert abs(est.value - region.measure) <= 3 * est.stderr + 1e-12 * region.measure


def test_calibration_against_radial_moment():
    # int_B |x|^2 = 16/18 tau16 in R^16
    est = qd.integrate(lambda X: np.sum(X * X, axis=1), qd.ball(), 50_000, 2)
    assert abs(est.value - 16 / 18 * TAU16) <= 3 * est.stderr


def test_dimension_eight_disc_calibration():
    b = np.r_[0.6, np.zeros(7), 0.8, np.zeros(7)]
    disc = qd.line_disc(np.zeros(16), b, 0.7)
    assert disc.measure == pytest.approx(qd.ball_volume(0.7, 8))
    est = qd.integrate(lambda X: np.sum(X * X, axis=1), disc, 50_000, 3)
    # |b t|^2 = |t|^2 and int_{B8(rho)} |t|^2 = 8/10 rho^2 vol
    assert abs(est.value - 0.8 * 0.49 * disc.measure) <= 3 * est.stderr


def test_odd_integrand_vanishes():
    est = qd.integrate(lambda X: X[:, 3] ** 3 + X[:, 9], qd.ball(), 20_000, 4)
    assert abs(est.value) <= 3 * est.stderr


def test_deterministic():
    f = lambda X: np.exp(X[:, 0])
    for method in ("mc", "qmc"):
        a = qd.integrate(f, qd.ball(), 10_000, 5, method)
        b = qd.integrate(f, qd.ball(), 10_000, 5, method)
        assert a.value == b.value and a.stderr == b.stderr
    c = qd.integrate(f, qd.ball(), 10_000, 6)
    assert c.value != a.value


def test_chunk_streams_are_independent_of_order():
    A = qd.sample(qd.ball(), 100, 7, 3)
    B = qd.sample(qd.ball(), 100, 7, 3)
    assert np.array_equal(A, B)
    assert not np.array_equal(A, qd.sample(qd.ball(), 100, 7, 4))


def test_vector_integrand_covariance():
    est = qd.integrate(lambda X: np.stack([X[:, 0], X[:, 0] + 1e-3 * X[:, 1]], axis=1), qd.ball(), 20_000, 8)
    d, se = est.diff(1, 0)
    assert se < 0.01 * est.stderr[0]
    assert abs(d) <= 3 * se


def test_points_lie_in_region():
    assert np.all(np.linalg.norm(qd.sample(qd.ball(0, 0.5), 2000, 1), axis=1) <= 0.5)
    r = np.linalg.norm(qd.sample(qd.sphere(), 2000, 1), axis=1)
    assert np.allclose(r, 1.0)
    r = np.linalg.norm(qd.sample(qd.shell(0, 0.3, 0.4), 2000, 1), axis=1)
    assert np.all((r >= 0.3 - 1e-12) & (r <= 0.4 + 1e-12))


def test_sample_lines_contract():
    A, B = qd.sample_lines(500, 9)
    assert np.allclose(np.sum(B * B, axis=1), 1.0, atol=1e-12)
    assert np.all(B[:, 1:8] == 0.0)
    assert np.all(np.linalg.norm(A, axis=1) <= 0.5)
    A2, B2 = qd.sample_lines(500, 9)
    assert np.array_equal(A, A2) and np.array_equal(B, B2)


def test_line_disc_points_on_line():
    b = np.r_[0.6, np.zeros(7), 0.0, 0.8, np.zeros(6)]
    a = np.r_[0.1, np.zeros(15)]
    X = qd.sample(qd.line_disc(a, b, 0.5), 100, 10)
    t = (X[:, :8] - a[:8]) / 0.6
    assert np.allclose(X[:, 8:], oc.mul(b[8:], t) + a[8:], atol=1e-14)


def test_errors():
    with pytest.raises(DomainError):
        qd.ball(0, -1.0)
    with pytest.raises(DomainError):
        qd.shell(0, 0.5, 0.4)
    with pytest.raises(DomainError):
        qd.line_disc(0, np.r_[0.6, 0.8, np.zeros(14)], 0.5)
    with pytest.raises(DomainError):
        qd.integrate(one, qd.ball(), 10, 0, "nosuch")
    with pytest.raises(DomainError):
        qd.sample_lines(0)
