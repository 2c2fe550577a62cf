import numpy as np
import pytest

from octopsh import perron as pr
from octopsh import quadrature as qd
from octopsh.catalog import Scaled, barrier, const, coord, extremal_ball, sq_norm
from octopsh.errors import ContractError, DomainError


def quad_phi():
    return coord(0) * coord(0) + coord(9)


def test_boundary_data_bound():
    data = pr.BoundaryData.from_field(quad_phi())
    assert data.C == pytest.approx(1.25 * 0.5 * 2.0)
    assert data.validate() <= data.C
    with pytest.raises(ContractError) as exc:
        pr.BoundaryData(Scaled(coord(0) * coord(0), -1.0, 0.0), 0.1).validate()
    assert exc.value.code == "perron.c2_bound"


def test_lower_of_constant():
    data = pr.BoundaryData.from_field(const(1.0))
    X = qd.sample(qd.ball(), 100, 1)
    assert np.allclose(pr.build_lower(data)(X), 1.0)


def test_lower_attains_phi_at_feet():
    data = pr.BoundaryData.from_field(coord(0))
    X0 = pr.boundary_points(64)
    assert np.allclose(pr.build_lower(data)(X0), X0[:, 0], atol=1e-14)
    assert pr.build_lower(data)(np.zeros((1, 16)))[0] >= -2 * data.C - 1.0


def test_lower_monotone_in_candidates():
    data = pr.BoundaryData.from_field(quad_phi())
    X = qd.sample(qd.ball(0, 0.95), 500, 2)
    assert np.all(pr.build_lower(data, 4096)(X) >= pr.build_lower(data, 64)(X))


def test_lower_is_below_phi_on_sphere():
    data = pr.BoundaryData.from_field(quad_phi())
    S = qd.sample(qd.sphere(), 2000, 3)
    assert np.all(pr.build_lower(data)(S) <= data.phi(S) + 1e-12)


def test_smoothed_lower_below_exact():
    data = pr.BoundaryData.from_field(quad_phi())
    X = qd.sample(qd.ball(), 500, 4)
    assert np.all(pr.build_lower(data, beta=50.0)(X) <= pr.build_lower(data)(X) + 1e-12)


def test_non_opsh_candidate_rejected():
    from octopsh.catalog import bump

    with pytest.raises(ContractError):
        pr.build_lower(pr.BoundaryData.from_field(coord(0)), extra=[bump(0, 0.5)])


def test_poisson_kernel_normalised():
    x = np.r_[0.4, 0.2, np.zeros(14)]
    est = qd.integrate(lambda Z: pr.poisson_kernel(x, Z), qd.sphere(), 200_000, 5)
    assert abs(est.value / qd.sphere_area() - 1.0) <= 3 * est.stderr / qd.sphere_area()


def test_upper_examples():
    X = qd.sample(qd.ball(0, 0.95), 20, 6)
    v, se = pr.upper_harmonic(const(2.5), X, 4000)
    assert np.all(np.abs(v - 2.5) <= 3 * se + 1e-12)
    v, se = pr.upper_harmonic(coord(0), X, 20_000)
    # affine data are integrated exactly through the control variate
    assert np.max(np.abs(v - X[:, 0])) <= 1e-13
    v0, se0 = pr.upper_harmonic(quad_phi(), np.zeros((1, 16)), 20_000)
    # spherical mean of x0^2 + x9 is 1/16
    assert abs(v0[0] - 1 / 16) <= 3 * se0[0]


def test_upper_stderr_calibrated():
    X = qd.sample(qd.ball(0, 0.95), 10, 8)
    exact = X[:, 0] ** 2 + (1 - np.sum(X * X, axis=1)) / 16 + X[:, 9]
    z = []
    for seed in range(20):
        v, se = pr.upper_harmonic(quad_phi(), X, 10_000, seed)
        z.append((v - exact) / se)
    z = np.ravel(z)
    assert abs(np.mean(z)) < 0.25
    assert 0.85 < np.std(z) < 1.2


def test_upper_near_boundary():
    x = np.r_[0.99, np.zeros(15)]
    v, _ = pr.upper_harmonic(coord(0), x[None], 20_000)
    assert abs(v[0] - 0.99) <= 1e-13
    y = np.r_[0.6, np.zeros(8), 0.78, np.zeros(6)]
    v, se = pr.upper_harmonic(quad_phi(), y[None], 20_000)
    exact = 0.36 + (1 - 0.36 - 0.78**2) / 16 + 0.78
    assert abs(v[0] - exact) <= 4 * se[0]
    with pytest.raises(DomainError):
        pr.upper_harmonic(coord(0), np.r_[1.0, np.zeros(15)][None])


def test_sandwich_examples():
    X = qd.sample(qd.ball(0, 0.9), 10, 7)
    r = pr.sandwich(pr.BoundaryData.from_field(const(1.0)), X, exact=True)
    assert r.passed and np.allclose(r.details["lower"], 1.0)
    r = pr.sandwich(pr.BoundaryData.from_field(coord(0)), X, extra=[coord(0)], exact=True)
    assert r.passed
    r = pr.sandwich(pr.BoundaryData.from_field(quad_phi()), X)
    assert r.passed and r.details["ordered"]


def test_sandwich_gap_for_extremal_trace():
    # trace of the exact extremal function: the harmonic majorant lies strictly above the barriers
    phi = Scaled(extremal_ball(0, 0.5, 1.0, 0.0), 1.0, 0.0) + coord(0)
    X = np.zeros((1, 16))
    r = pr.sandwich(pr.BoundaryData.from_field(phi), X)
    assert r.details["ordered"]
    assert r.estimate[0] > 3 * r.stderr[0]


def test_boundary_consistency():
    data = pr.BoundaryData.from_field(quad_phi())
    X0 = pr.boundary_points(64)[:10]
    Y = 0.99 * X0
    tol = 5 * data.C * 0.01
    lo = pr.build_lower(data)(Y)
    up, se = pr.upper_harmonic(data.phi, Y, 20_000)
    phi = data.phi(X0)
    assert np.all(np.abs(lo - phi) <= tol)
    assert np.all(np.abs(up - phi) <= tol + 3 * se)


def test_second_difference_examples():
    r = pr.second_difference_check(sq_norm())
    assert r.passed and r.estimate == pytest.approx(2.0)
    r = pr.second_difference_check(coord(0))
    assert r.passed and abs(r.estimate) <= 1e-9


def test_second_difference_smoothed_envelope_stable():
    data = pr.BoundaryData.from_field(quad_phi())
    r = pr.second_difference_check(pr.build_lower(data, beta=50.0))
    assert r.passed and np.isfinite(r.estimate)


def test_maximality_examples():
    x0 = pr.boundary_points(8)
    comps = [barrier(x, float(x[0]), np.eye(16)[0], 0.9) for x in x0]
    assert pr.maximality_check(coord(0), comps).passed
    u = Scaled(sq_norm(), 1.0, -1.0)
    assert not pr.maximality_check(u, [extremal_ball(0, 0.5, 1.0, 0.0)]).passed
    zero = const(0.0)
    assert pr.maximality_check(zero, [Scaled(sq_norm(), 1.0, -1.0), coord(0) - const(1.0)]).passed


def test_maximality_rejects_bad_competitor():
    with pytest.raises(ContractError):
        pr.maximality_check(const(0.0), [const(1.0)], n=100)


def test_candidate_shift_zero_shift():
    X = qd.sample(qd.ball(0, 0.8), 5, 8)
    v = pr.candidate_shift_values(sq_norm(), np.r_[0.3, np.zeros(15)], np.zeros(16), X)
    assert np.allclose(v, np.sum(X * X, axis=1), atol=1e-12)
