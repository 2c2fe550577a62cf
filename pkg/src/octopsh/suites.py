"""Named verification suites run by ``octopsh verify``.

Each suite takes ``(seed, samples)`` and returns a list of reports.  Sample
counts scale with ``samples``; algebraic checks use fixed sizes.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable

import numpy as np

from octopsh import geometry as geo
from octopsh import hermitian as hm
from octopsh import octonion as oc
from octopsh import operators as ops
from octopsh import perron as pr
from octopsh import quadrature as qd
from octopsh.catalog import (
    ScalarField,
    affine,
    bump,
    const,
    coord,
    extremal_ball,
    fundamental,
    fundamental_eps,
    shell_pusher,
    smooth_max,
    sq_norm,
)
from octopsh.jets import closedness_residual
from octopsh.reports import Report

__all__ = ["SUITES", "run_suite", "ibp_catalog", "opsh_catalog"]


def _rep(check, inputs, est, se, gate, ok, **details) -> Report:
    return Report(check, inputs, est, se, gate, Report.status_of(bool(ok)), details)


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), tag])


def _unit_ball(rng, n, r=1.0):
    g = rng.normal(size=(n, 16))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * (r * rng.random((n, 1)) ** (1 / 16))


# catalogs ----------------------------------------------------------------------------

A_OFF = np.r_[0.2, 0.1, np.zeros(6), 0.1, np.zeros(7)]


def opsh_catalog() -> list[ScalarField]:
    """Smooth or singular OPSH fields used by the pullback and density checks."""
    return [
        sq_norm(),
        shell_pusher(),
        fundamental_eps(A_OFF, 0.1),
        fundamental(A_OFF),
        extremal_ball(A_OFF, 0.3, 0.8, 0.05),
        smooth_max(sq_norm(), affine(np.r_[0, 1, np.zeros(14)]), 0.1),
    ]


def ibp_catalog() -> tuple[list[ScalarField], list[ScalarField], list[ScalarField]]:
    """Three choices each for ``u``, ``v`` and ``w`` (27 combinations)."""
    us = [sq_norm(), fundamental_eps(A_OFF, 0.5), smooth_max(sq_norm(), affine(np.r_[0, 1, np.zeros(14)]), 0.2)]
    vs = [sq_norm(), affine(np.r_[0.3, 0, 0, 0, 0, 0, 0, 0, 0, -0.5, 0.2], 0.1), fundamental_eps(-A_OFF, 1.0)]
    ws = [sq_norm(), fundamental_eps(A_OFF, 0.5), shell_pusher() + affine(np.r_[0, 0, 0, 0.4, 0, 0, 0, 0, 0, 0, 0, 0.7])]
    return us, vs, ws


# suites ------------------------------------------------------------------------------

def suite_algebra(seed: int, samples: int) -> list[Report]:
    rng = _rng(seed, 1)
    n = 100_000
    x, y, z = rng.normal(size=(3, n, 8))
    inputs = {"n": n, "seed": seed}
    out = []
    e = np.eye(8)
    sq = max(float(np.abs(oc.mul(e[p], e[p]) + e[0]).max()) for p in range(1, 8))
    anti = max(float(np.abs(oc.mul(e[p], e[q]) + oc.mul(e[q], e[p])).max()) for p in range(1, 8) for q in range(1, 8) if p != q)
    out.append(_rep("algebra.basis", {}, max(sq, anti), None, "<= 1e-12", max(sq, anti) <= 1e-12))
    checks = {
        "algebra.norm_multiplicative": np.abs(oc.norm(oc.mul(x, y)) - oc.norm(x) * oc.norm(y)) / (1 + oc.norm(x) * oc.norm(y)),
        "algebra.alternative_left": np.abs(oc.associator(x, x, y)).max(axis=1) / (1 + oc.norm2(x) * oc.norm(y)),
        "algebra.alternative_right": np.abs(oc.associator(x, y, y)).max(axis=1) / (1 + oc.norm(x) * oc.norm2(y)),
        "algebra.re_triple": np.abs(oc.re(oc.mul(oc.mul(x, y), z)) - oc.re(oc.mul(x, oc.mul(y, z)))) / (1 + oc.norm(x) * oc.norm(y) * oc.norm(z)),
        "algebra.conj_antiautomorphism": np.abs(oc.conj(oc.mul(x, y)) - oc.mul(oc.conj(y), oc.conj(x))).max(axis=1) / (1 + oc.norm(x) * oc.norm(y)),
        "algebra.table_vs_pairs": np.abs(oc.table_mul(x[:2000], y[:2000]) - oc.mul(x[:2000], y[:2000])).max(axis=1),
    }
    for name, err in checks.items():
        m = float(err.max())
        out.append(_rep(name, inputs, m, None, "relative error <= 1e-12", m <= 1e-12))
    nonassoc = float(np.abs(oc.associator(x[:100], y[:100], z[:100])).max())
    out.append(_rep("algebra.nonassociative", inputs, nonassoc, None, "> 1e-3", nonassoc > 1e-3))
    return out


def suite_hermitian(seed: int, samples: int) -> list[Report]:
    rng = _rng(seed, 2)
    n = 2000
    A = hm.Hermitian2(rng.normal(size=n), rng.normal(size=n), 0.5 * rng.normal(size=(n, 8)))
    B = hm.Hermitian2(rng.normal(size=n) ** 2 + 0.1, rng.normal(size=n) ** 2 + 0.1, 0.1 * rng.normal(size=(n, 8)))
    syl = hm.is_nonneg(A)
    smp = hm.is_nonneg_sampled(A)
    # the sampled test is necessary only; disagreements must be sampled-positive, Sylvester-negative
    bad = int(np.sum(syl & ~smp))
    out = [_rep("hermitian.sylvester_vs_sampled", {"n": n, "seed": seed}, bad, None, "no Sylvester-positive matrix fails the sampled test", bad == 0)]
    pos = hm.is_nonneg(B)
    gap = hm.cs_gap(B[pos], B[pos])
    out.append(_rep("hermitian.cs_gap_self", {"n": n}, float(np.abs(gap).max()), None, "|cs_gap(A, A)| <= 1e-12", np.abs(gap).max() <= 1e-12))
    C = hm.Hermitian2(B.a22[::-1], B.a11[::-1], B.a12[::-1])
    both = pos & hm.is_nonneg(C)
    g2 = hm.cs_gap(B[both], C[both])
    out.append(_rep("hermitian.cs_gap_nonneg", {"n": n}, float(g2.min()), None, ">= -1e-12", g2.min() >= -1e-12))
    H, D = hm.esp_basis(), hm.dual_basis()
    M = np.array([[float(hm.mixed_det(H[i], D[j])) for j in range(10)] for i in range(10)])
    err = float(np.abs(M - np.eye(10)).max())
    out.append(_rep("hermitian.dual_basis", {}, err, None, "<= 1e-12", err <= 1e-12))
    rec = hm.coordinates(A) @ H.to_vector()
    err = float(np.abs(rec - A.to_vector()).max())
    out.append(_rep("hermitian.reconstruction", {"n": n}, err, None, "<= 1e-12", err <= 1e-12))
    return out


def suite_jets(seed: int, samples: int) -> list[Report]:
    rng = _rng(seed, 3)
    out = []
    for eps in (1.0, 0.1):
        X = _unit_ball(rng, 1000, 1.5)
        s = np.sum(X * X, axis=1)
        got = ops.ma_density(fundamental_eps(0, eps), X)
        ref = 2304.0 * eps / (s + eps) ** 9
        err = float(np.max(np.abs(got / ref - 1)))
        out.append(_rep("jets.k_eps_density", {"eps": eps, "n": 1000, "seed": seed}, err, None, "relative error vs 2304 eps/(s+eps)^9 <= 1e-8", err <= 1e-8))
    X = qd.sample(qd.shell(0, 0.1, 3.0), 1000, seed, 3)
    m = float(np.abs(ops.ma_density(fundamental(0), X)).max())
    dn = float(np.abs(ops.ma_density_normalized(fundamental(0), X)).max())
    out.append(_rep("jets.k_density_vanishes", {"shell": [0.1, 3.0], "n": 1000}, m, None, "|det H| <= 1e-8", m <= 1e-8,
                    normalized=dn))
    X = _unit_ball(rng, 100)
    worst = 0.0
    for f in [sq_norm(), fundamental_eps(A_OFF, 0.5), shell_pusher(), bump(0, 1.2), extremal_ball(A_OFF, 0.3, 0.8, 0.1)]:
        worst = max(worst, float(closedness_residual(f.jet(X, order=3)).max()))
    Y = X[np.linalg.norm(X - A_OFF, axis=1) > 0.3]
    worst = max(worst, float(closedness_residual(fundamental(A_OFF).jet(Y, order=3)).max()))
    out.append(_rep("jets.closedness", {"n": 100}, worst, None, "<= 1e-8", worst <= 1e-8))
    return out


def suite_geometry(seed: int, samples: int) -> list[Report]:
    rng = _rng(seed, 4)
    out = []
    X = _unit_ball(rng, 1000, 0.999)
    Sph = X / np.linalg.norm(X, axis=1, keepdims=True)
    centers = [np.zeros(16), np.r_[0.3, np.zeros(15)], np.r_[0.2, 0, 0.1, 0, 0, 0, 0, 0, -0.3, 0.1, 0.2, np.zeros(5)], _unit_ball(rng, 1, 0.9)[0]]
    for a in centers:
        e0 = float(np.abs(geo.t_a(a, a[None])).max())
        e1 = float(np.abs(np.linalg.norm(geo.t_a(a, Sph), axis=1) - 1).max())
        e2 = float(np.abs(geo.t_a_inv(a, geo.t_a(a, X)) - X).max())
        e3 = float(np.abs(geo.psi_a(a, X) - geo.psi_a_expansion(a, X)).max())
        g = float(oc.re(geo.g_a(a, X)).min())
        inputs = {"a": a, "n": 1000, "seed": seed}
        out.append(_rep("geometry.t_a_center", inputs, e0, None, "<= 1e-12", e0 <= 1e-12))
        out.append(_rep("geometry.sphere_invariance", inputs, e1, None, "<= 1e-10", e1 <= 1e-10))
        out.append(_rep("geometry.inverse_roundtrip", inputs, e2, None, "<= 1e-10", e2 <= 1e-10))
        out.append(_rep("geometry.psi_forms_agree", inputs, e3, None, "<= 1e-10", e3 <= 1e-10))
        out.append(_rep("geometry.re_g_lower_bound", inputs, g, None, ">= 1 - 1e-12", g >= 1 - 1e-12))
    Y = _unit_ball(rng, 1000, 0.95)
    cy = geo.cayley(Y)
    d = geo.siegel_defect(cy)
    ref = 2 * (1 - np.sum(Y * Y, axis=1)) / oc.norm2(Y[:, 8:] + np.eye(8)[0])
    err = float(np.abs(d - ref).max())
    out.append(_rep("geometry.cayley_defect", {"n": 1000}, err, None, "<= 1e-10", err <= 1e-10))
    n_pb = max(50, min(1000, samples // 200))
    Z = _unit_ball(rng, n_pb, 0.95)
    pullback_centers = [centers[0], centers[1], np.r_[np.zeros(8), 0.3, np.zeros(7)], centers[2]]
    for a in pullback_centers:
        worst_det = worst_diag = worst_norm = math.inf
        for u in opsh_catalog():
            H = ops.hessian(geo.weighted_pullback(a, u), Z)
            d = hm.det(H)
            worst_det = min(worst_det, float(d.min()))
            worst_diag = min(worst_diag, float(np.minimum(H.a11, H.a22).min()))
            worst_norm = min(worst_norm, float((d / np.maximum(1.0, H.scale()) ** 2).min()))
        ok = worst_det >= -1e-8 and worst_diag >= -1e-8
        out.append(_rep("geometry.pullback_opsh", {"a": a, "n": n_pb}, [worst_det, worst_diag], None,
                        "det and diagonals >= -1e-8", ok, normalized_det=worst_norm))
    return out


def suite_ibp(seed: int, samples: int) -> list[Report]:
    us, vs, ws = ibp_catalog()
    out = []
    for k, (u, v, w) in enumerate(itertools.product(us, vs, ws)):
        out.append(ops.ibp_residual(u, v, w, "full", samples, seed + k))
    for k, (u, w) in enumerate(itertools.product(us, ws)):
        out.append(ops.ibp_residual(u, const(1.0), w, "v1", samples, seed + 100 + k))
    bumps = [bump(0.1 * A_OFF, 0.6), bump(-A_OFF, 0.5)]
    for k, (b, v, w) in enumerate(itertools.product(bumps, vs[:2], ws[:2])):
        out.append(ops.ibp_residual(b, v, w, "symmetric", samples, seed + 200 + k))
    return out


def comparison_pairs() -> list[tuple[ScalarField, ScalarField]]:
    return [
        (sq_norm() - 0.5, sq_norm() * 0.6 - 0.4),
        (sq_norm() * 3.0 - 1.1, fundamental_eps(0, 1.0)),
        (shell_pusher(), shell_pusher() * 0.5 + 1.5),
    ]


def suite_comparison(seed: int, samples: int) -> list[Report]:
    return [ops.comparison_check(u, v, samples, seed + k) for k, (u, v) in enumerate(comparison_pairs())]


def suite_lelong(seed: int, samples: int) -> list[Report]:
    radii = [round(0.1 * k, 10) for k in range(1, 11)]
    out = []
    for eps in (1e-2, 1e-3):
        out.append(ops.lelong_monotone(fundamental_eps(0, eps), 0, radii, samples, seed))
    out.append(ops.lelong_monotone(sq_norm(), 0, radii, samples, seed))
    r = ops.lelong_number(sq_norm(), 0, n=samples, seed=seed)
    ok = abs(r.estimate) <= 3 * r.stderr + 1e-12
    out.append(Report("lelong.smooth_zero", r.inputs, r.estimate, r.stderr, "|nu| <= 3 stderr", Report.status_of(ok), r.details))
    r = ops.lelong_number(lambda e: fundamental_eps(0, e), 0, n=samples, seed=seed)
    ok = r.estimate > 5 * r.stderr
    out.append(Report("lelong.pole_positive", r.inputs, r.estimate, r.stderr, "nu > 5 stderr", Report.status_of(ok),
                      {**r.details, "closed_form": 48 * qd.sphere_area()}))
    b = np.r_[0.5, np.zeros(15)]
    r = ops.lelong_number(lambda e: fundamental_eps(0, e), b, n=samples, seed=seed)
    ok = abs(r.estimate) <= 3 * r.stderr + 1e-12
    out.append(Report("lelong.off_pole_zero", r.inputs, r.estimate, r.stderr, "|nu| <= 3 stderr", Report.status_of(ok), r.details))
    return out


def suite_capacity(seed: int, samples: int) -> list[Report]:
    out = []
    reps = {}
    for r in (0.3, 0.4, 0.5):
        rep = ops.capacity_ball(0, r, 1.0, n=samples, seed=seed)
        reps[r] = rep
        out.append(rep)
    vals = [(reps[r].estimate, reps[r].stderr) for r in (0.3, 0.4, 0.5)]
    slack = min(b[0] - a[0] - 3 * math.hypot(a[1], b[1]) for a, b in zip(vals, vals[1:]))
    out.append(_rep("capacity.monotone_r", {"r": [0.3, 0.4, 0.5], "R": 1.0}, [v[0] for v in vals], [v[1] for v in vals],
                    "strictly increasing beyond 3 combined stderr", slack > 0, min_slack=slack))
    rep = reps[0.5]
    z = (rep.estimate - ops.capacity_flux(0.5, 1.0)) / rep.stderr
    out.append(_rep("capacity.flux_agreement", {"r": 0.5, "R": 1.0}, z, None, "|z| <= 3 vs boundary-flux value", abs(z) <= 3))
    X = qd.sample(qd.shell(0, 0.5, 1.0), 1000, seed, 5)
    X = X[np.abs(np.linalg.norm(X, axis=1) - 0.5) > 1e-3]
    dens = ops.ma_density(extremal_ball(0, 0.5, 1.0, 0.0), X)
    m = float(np.abs(dens).max())
    out.append(_rep("capacity.exact_density_off_sphere", {"n": len(X)}, m, None, "<= 1e-8", m <= 1e-8))
    return out


def suite_perron(seed: int, samples: int) -> list[Report]:
    out = []
    n = max(2000, samples // 10)
    X = qd.sample(qd.ball(0, 0.9), 10, seed, 9)
    for phi in (coord(0), const(1.0)):
        data = pr.BoundaryData.from_field(phi, seed=seed)
        out.append(pr.sandwich(data, X, n=n, seed=seed, exact=True))
    quad_phi = coord(0) * coord(0) + coord(9)
    data = pr.BoundaryData.from_field(quad_phi, seed=seed)
    out.append(pr.sandwich(data, X, n=n, seed=seed, exact=False))
    out.append(pr.second_difference_check(pr.build_lower(data, seed=seed, beta=50.0), seed=seed))
    c = 0.9
    comp = [geo_barrier for geo_barrier in pr.build_lower(pr.BoundaryData(coord(0), c), seed=seed).fields[:8]]
    out.append(pr.maximality_check(coord(0), comp, seed=seed))
    return out


SUITES: dict[str, Callable[[int, int], list[Report]]] = {
    "algebra": suite_algebra,
    "hermitian": suite_hermitian,
    "jets": suite_jets,
    "geometry": suite_geometry,
    "ibp": suite_ibp,
    "comparison": suite_comparison,
    "lelong": suite_lelong,
    "capacity": suite_capacity,
    "perron": suite_perron,
}


def run_suite(name: str, seed: int, samples: int) -> list[Report]:
    if name == "all":
        return [r for key in SUITES for r in SUITES[key](seed, samples)]
    return SUITES[name](seed, samples)
