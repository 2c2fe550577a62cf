"""Monge-Ampere densities and the integral checks built on them.

All densities are pointwise values of the (mixed) octonionic Monge-Ampere
operator computed from exact jets.  Integral checks return
:class:`~octopsh.reports.Report` objects whose gates are ``k * stderr``
statistical tests on Monte Carlo estimates.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from octopsh import hermitian as hm
from octopsh import quadrature as qd
from octopsh.catalog import ScalarField, SqDist, defining_rho, extremal_ball, point, sq_norm
from octopsh.errors import ContractError, DomainError
from octopsh.jets import oct_gradient, oct_hessian, t_outer
from octopsh.reports import Report

__all__ = [
    "SINGULAR_EXCLUSION",
    "hessian",
    "ma_density",
    "ma_density_normalized",
    "mixed_density",
    "laplacian",
    "opsh_check",
    "line_laplacian",
    "cauchy_schwarz_check",
    "sigma",
    "ibp_residual",
    "comparison_check",
    "lelong_profile",
    "lelong_number",
    "lelong_monotone",
    "capacity_ball",
    "capacity_flux",
    "t_eps",
]

log = logging.getLogger(__name__)

SINGULAR_EXCLUSION = 0.05
IBP_SIGMA = 3.0
CAPACITY_DELTAS = (0.04, 0.02, 0.01)
LELONG_EPS = (1e-2, 1e-3, 1e-4)
CHUNK = 4096


def _valid(u: ScalarField, X: np.ndarray, radius: float) -> np.ndarray:
    ok = np.ones(X.shape[0], dtype=bool)
    for b in u.singular_points():
        ok &= np.linalg.norm(X - b, axis=1) > radius
    return ok


def _chunked(fn, X: np.ndarray, width: int | None = None) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    parts = [fn(X[i : i + CHUNK]) for i in range(0, X.shape[0], CHUNK)]
    return np.concatenate(parts, axis=0) if parts else np.zeros((0,) if width is None else (0, width))


def hessian(u: ScalarField, X: np.ndarray) -> hm.Hermitian2:
    """``Hess_O u`` at points ``X``; raises at singular points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return oct_hessian(u.jet(X, order=2))


def ma_density(u: ScalarField, X: np.ndarray, exclude: float = 0.0) -> np.ndarray:
    """``det(Hess_O u)`` at ``X``.

    Points within ``exclude`` of a declared singular point get ``nan``.
    """

    def fn(Y):
        out = np.full(Y.shape[0], np.nan)
        ok = _valid(u, Y, exclude) if exclude > 0 else np.ones(Y.shape[0], bool)
        if np.any(ok):
            out[ok] = hm.det(hessian(u, Y[ok]))
        return out

    return _chunked(fn, X)


def ma_density_normalized(u: ScalarField, X: np.ndarray) -> np.ndarray:
    """``det(H) / max(1, |H|)^2``: the density measured at the precision of the entries.

    Rounding in the Hessian entries limits the absolute accuracy of the
    determinant to about ``|H|^2 * 2^-52``; this ratio is scale free.
    """

    def fn(Y):
        H = hessian(u, Y)
        return hm.det(H) / np.maximum(1.0, H.scale()) ** 2

    return _chunked(fn, X)


def mixed_density(u: ScalarField, w: ScalarField, X: np.ndarray) -> np.ndarray:
    """``det(Hess_O u, Hess_O w)``."""
    return _chunked(lambda Y: hm.mixed_det(hessian(u, Y), hessian(w, Y)), X)


def laplacian(u: ScalarField, X: np.ndarray) -> np.ndarray:
    """Real Laplacian on R^16 from exact jets."""
    return _chunked(lambda Y: hessian(u, Y).trace, X)


def line_laplacian(u: ScalarField, A: np.ndarray, B: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Laplacian in ``t in R^8`` of ``t -> u(a + b t)`` at ``t = T``.

    ``b = (b1, b2)`` is a 16-vector with ``b1`` real, so the line map is
    ``t -> (b1 t, b2 t)`` with Jacobian ``L = [b1 I; L_{b2}]``.
    """
    from octopsh import octonion as oc

    A, B, T = (np.atleast_2d(np.asarray(z, dtype=float)) for z in (A, B, T))
    L = np.zeros((len(B), 16, 8))
    L[:, :8, :] = B[:, 0, None, None] * np.eye(8)
    L[:, 8:, :] = np.stack([oc.left_matrix(b) for b in B[:, 8:]])
    X = A + np.einsum("nij,nj->ni", L, T)
    h = u.jet(X, order=2).h
    if h is None:
        return np.zeros(len(X))
    return np.einsum("ijn,nia,nja->n", h, L, L)


def opsh_check(
    u: ScalarField,
    X: np.ndarray | None = None,
    lines: int = 1000,
    seed: int = 0,
    tol: float = hm.DEFAULT_TOL,
    radius: float = 0.9,
) -> Report:
    """Pointwise OPSH test by two routes that must agree.

    Line mode: the Laplacian of ``u`` restricted to ``lines`` sampled
    octonionic lines ``a + b t`` with ``|a|, |t| <= radius / 2``.  Matrix mode:
    ``is_nonneg(Hess_O u)`` at the same points ``a + b t`` and at any extra
    points ``X``.  Points within the singular-set exclusion radius are skipped.
    """
    from octopsh import octonion as oc

    A, B = qd.sample_lines(lines, seed, radius / 2)
    T = qd.sample(qd.ball(0, radius / 2), lines, seed, 32)[:, :8]
    pts = A + np.concatenate([B[:, :1] * T, oc.mul(B[:, 8:], T)], axis=1)
    keep = _valid(u, pts, SINGULAR_EXCLUSION)
    A, B, T, pts = A[keep], B[keep], T[keep], pts[keep]
    if X is not None:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        X = np.concatenate([pts, X[_valid(u, X, SINGULAR_EXCLUSION)]], axis=0)
    else:
        X = pts
    H = hessian(u, X)
    mat_ok = hm.is_nonneg(H, tol)
    lap = line_laplacian(u, A, B, T)
    scale = np.maximum(1.0, H[: len(pts)].scale()) if len(pts) else 1.0
    line_ok = lap >= -tol * scale
    m_pass, l_pass = bool(np.all(mat_ok)), bool(np.all(line_ok))
    agree = m_pass == l_pass
    status = "pass" if (m_pass and l_pass) else ("fail" if agree else "inconclusive")
    inputs = {"u": u, "points": len(X), "lines": lines, "seed": seed, "tol": tol, "radius": radius}
    details = {"matrix_pass": m_pass, "line_pass": l_pass, "modes_agree": agree,
               "min_det": float(hm.det(H).min()) if len(X) else None,
               "min_line_laplacian": float(lap.min()) if lap.size else None}
    est = float(np.mean(mat_ok)) if len(X) else 1.0
    return Report("operators.opsh", inputs, est, None, "Hess_O nonneg at every point and line Laplacian >= -tol", status, details)


# integration by parts -------------------------------------------------------------

def _ibp_volume_terms(u, v, w, mode):
    def f(X):
        ju, jv, jw = u.jet(X, 2), v.jet(X, 2 if mode == "symmetric" else 1), w.jet(X, 2)
        Hu, Hw = oct_hessian(ju), oct_hessian(jw)
        if mode == "symmetric":
            Hv = oct_hessian(jv)
            return np.stack([ju.v * hm.mixed_det(Hv, Hw), jv.v * hm.mixed_det(Hu, Hw)], axis=1)
        lhs = jv.v * hm.mixed_det(Hu, Hw)
        tvol = hm.mixed_det(t_outer(oct_gradient(ju), oct_gradient(jv)), Hw)
        return np.stack([lhs, tvol], axis=1)

    return f


def _ibp_surface_term(u, v, w, rho):
    def f(X):
        ju, jv, jw, jr = u.jet(X, 1), v.jet(X, 0), w.jet(X, 2), rho.jet(X, 1)
        du, dr = oct_gradient(ju), oct_gradient(jr)
        gn = np.sqrt(np.sum(jr.g**2, axis=0))
        return jv.v * hm.mixed_det(t_outer(du, dr), oct_hessian(jw)) / gn

    return f


def ibp_residual(
    u: ScalarField,
    v: ScalarField,
    w: ScalarField,
    mode: str = "full",
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    sigma: float = IBP_SIGMA,
    method: str = "mc",
) -> Report:
    """Integration-by-parts identity on the unit ball, ``omega = Hess_O w``.

    ``mode="full"``:
        ``int v det(Hess u, omega) = -int det(T(du, dv), omega) + int_S v det(T(du, drho), omega)``
    ``mode="v1"``:
        ``int det(Hess u, omega) = int_S det(T(du, drho), omega)`` (``v`` ignored)
    ``mode="symmetric"``:
        ``int u det(Hess v, omega) = int v det(Hess u, omega)`` when ``u`` or ``v``
        vanishes near the sphere.

    The defining function is ``rho = (|x|^2 - 1) / 2``.
    """
    rho = defining_rho()
    B, S = qd.ball(), qd.sphere()
    inputs = {"u": u, "v": v, "w": w, "mode": mode, "n": n, "seed": seed, "method": method}
    if mode == "symmetric":
        Y = qd.sample(qd.shell(0, 0.97, 1.0), 2048, seed, 99)
        if not (np.allclose(u(Y), 0.0) or np.allclose(v(Y), 0.0)):
            raise ContractError("operators.support", "symmetric form needs u or v supported inside the ball")
        est = qd.integrate(_ibp_volume_terms(u, v, w, mode), B, n, seed, method)
        lhs, rhs = est.item(0)[0], est.item(1)[0]
        res, se = est.diff(0, 1)
        details = {"lhs": lhs, "rhs": rhs}
    else:
        one = v if mode == "full" else _one()
        vol = qd.integrate(_ibp_volume_terms(u, one, w, mode), B, n, seed, method)
        surf = qd.integrate(_ibp_surface_term(u, one, w, rho), S, n, seed + 7_919, method)
        c = np.atleast_2d(vol.cov)
        lhs = float(vol.value[0])
        tv = float(vol.value[1])
        bd = float(surf.value)
        res = lhs + tv - bd
        se = math.sqrt(max(c[0, 0] + c[1, 1] + 2 * c[0, 1], 0.0) + float(surf.stderr) ** 2)
        details = {"lhs": lhs, "rhs": -tv + bd, "volume_T_term": tv, "boundary_term": bd}
    ok = abs(res) <= sigma * se
    return Report("ibp." + mode, inputs, res, se, f"|residual| <= {sigma:g} stderr", Report.status_of(ok), details)


def _one() -> ScalarField:
    from octopsh.catalog import const

    return const(1.0)


def cauchy_schwarz_check(
    u: ScalarField,
    v: ScalarField,
    w: ScalarField,
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    sigma: float = 3.0,
    method: str = "mc",
) -> Report:
    """``|int det(T(du, dv), omega)|^2 <= int det(T(du, du), omega) int det(T(dv, dv), omega)`` on the unit ball.

    The slack ``I_uu I_vv - I_uv^2`` gets a delta-method error from the joint
    covariance of the three integrals.
    """

    def f(X):
        ju, jv, jw = u.jet(X, 1), v.jet(X, 1), w.jet(X, 2)
        du, dv, om = oct_gradient(ju), oct_gradient(jv), oct_hessian(jw)
        return np.stack([hm.mixed_det(t_outer(du, dv), om), hm.mixed_det(t_outer(du, du), om),
                         hm.mixed_det(t_outer(dv, dv), om)], axis=1)

    est = qd.integrate(f, qd.ball(), n, seed, method)
    iuv, iuu, ivv = (float(z) for z in est.value)
    slack = iuu * ivv - iuv**2
    grad = np.array([-2 * iuv, ivv, iuu])
    se = math.sqrt(max(float(grad @ est.cov @ grad), 0.0))
    ok = slack >= -sigma * se - 1e-12 * max(1.0, iuu * ivv)
    inputs = {"u": u, "v": v, "w": w, "n": n, "seed": seed, "method": method}
    return Report("operators.cauchy_schwarz", inputs, slack, se, f"slack >= -{sigma:g} stderr", Report.status_of(ok),
                  {"I_uv": iuv, "I_uu": iuu, "I_vv": ivv})


# comparison principle ---------------------------------------------------------------

def comparison_check(
    u: ScalarField,
    v: ScalarField,
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    collar: float = 0.05,
    sigma: float = 3.0,
    method: str = "mc",
) -> Report:
    """Compare MA masses of ``u`` and ``v`` on ``{u < v}`` inside the unit ball.

    Requires ``{u < v}`` to stay away from the sphere; this is checked on the
    collar ``1 - collar <= |x| <= 1`` and violations raise
    :class:`~octopsh.errors.ContractError`.
    """
    Y = qd.sample(qd.shell(0, 1.0 - collar, 1.0), 20_000, seed, 77)
    if np.any(u(Y) < v(Y)):
        raise ContractError("operators.containment", "{u < v} reaches the boundary collar")

    def f(X):
        ju, jv = u.jet(X, 2), v.jet(X, 2)
        ind = (ju.v < jv.v).astype(float)
        return np.stack([ind * hm.det(oct_hessian(ju)), ind * hm.det(oct_hessian(jv)), ind], axis=1)

    est = qd.integrate(f, qd.ball(), n, seed, method)
    d, se = est.diff(0, 1)
    Iu, Iv = est.item(0)[0], est.item(1)[0]
    ok = d >= -sigma * se
    details = {"I_u": Iu, "I_v": Iv, "stderr_u": est.item(0)[1], "stderr_v": est.item(1)[1], "volume_u_lt_v": est.item(2)[0]}
    inputs = {"u": u, "v": v, "n": n, "seed": seed, "collar": collar, "method": method}
    return Report("comparison", inputs, d, se, f"I_u - I_v >= -{sigma:g} stderr", Report.status_of(ok), details)


# Lelong numbers --------------------------------------------------------------------

def lelong_profile(
    ws: Sequence[ScalarField],
    a,
    radii: Sequence[float],
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "mc",
    exclude: float = 0.0,
) -> qd.Estimate:
    """Joint estimate of ``sigma(a, r) / r^8`` for each field in ``ws`` and radius.

    ``sigma(a, r) = int_{B(a, r)} det(Hess |x|^2, Hess w)``.  Column
    ``i * len(radii) + k`` belongs to ``ws[i]`` and ``radii[k]``.  All columns
    share one set of samples (scaled copies of the unit ball), so differences
    carry paired errors.
    """
    a = point(a)
    radii = [float(r) for r in radii]
    q = sq_norm()

    def f(Y):
        cols = []
        for w in ws:
            for r in radii:
                X = a + r * Y
                ok = _valid(w, X, exclude) if exclude > 0 else np.ones(len(X), bool)
                val = np.zeros(len(X))
                if np.any(ok):
                    val[ok] = hm.mixed_det(hessian(q, X[ok]), hessian(w, X[ok]))
                # sigma / r^8 = r^16 int_{B1} f(a + r y) dy / r^8
                cols.append(r**8 * val)
        return np.stack(cols, axis=1)

    return qd.integrate(f, qd.ball(), n, seed, method)


def sigma(a, r: float, w: ScalarField, n: int = qd.DEFAULT_SAMPLES, seed: int = 0, method: str = "mc") -> qd.Estimate:
    """``sigma(a, r) = int_{B(a, r)} det(Hess |x|^2, Hess w)``."""
    est = lelong_profile([w], a, [r], n, seed, method)
    k = float(r) ** 8
    return qd.Estimate(est.value * k, est.stderr * k, est.n, est.method, np.atleast_2d(est.cov) * k * k)


def _lincomb(est: qd.Estimate, c: np.ndarray) -> tuple[float, float]:
    v = float(np.atleast_1d(est.value) @ c)
    var = float(c @ np.atleast_2d(est.cov) @ c)
    return v, math.sqrt(max(var, 0.0))


def lelong_monotone(
    w: ScalarField, a, radii: Sequence[float], n: int = qd.DEFAULT_SAMPLES, seed: int = 0, sigma: float = 3.0
) -> Report:
    """``sigma(a, r) / r^8`` nondecreasing in ``r`` up to ``sigma`` paired errors."""
    est = lelong_profile([w], a, radii, n, seed)
    vals = np.atleast_1d(est.value)
    worst = math.inf
    for k in range(len(radii) - 1):
        d, se = est.diff(k + 1, k)
        worst = min(worst, d + sigma * se)
    ok = worst >= 0
    inputs = {"w": w, "a": point(a), "radii": list(radii), "n": n, "seed": seed}
    return Report(
        "lelong.monotone", inputs, vals, np.atleast_1d(est.stderr), f"increments >= -{sigma:g} paired stderr",
        Report.status_of(ok), {"min_slack": worst},
    )


def _extrapolate(x1: float, x2: float) -> np.ndarray:
    """Coefficients of the linear extrapolation to 0 through abscissae ``x1 < x2``."""
    return np.array([x2, -x1]) / (x2 - x1)


def _extrapolate_r(radii: Sequence[float]) -> np.ndarray:
    """Coefficients giving the constant term of ``nu + A r^8 + B r^10`` through three radii."""
    r = np.asarray(radii, dtype=float)
    V = np.stack([np.ones_like(r), r**8, r**10], axis=1)
    return np.linalg.inv(V)[0]


def lelong_number(
    family,
    a,
    eps: Sequence[float] | None = None,
    radii: Sequence[float] = (0.1, 0.2, 0.3),
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "mc",
) -> Report:
    """Lelong number of ``Hess_O w`` at ``a``.

    ``family`` is either a smooth field or a callable ``eps -> field`` giving
    regularisations of a singular one.  The profile ``sigma(a, r) / r^8`` is
    extrapolated linearly to ``eps -> 0`` through the two smallest ``eps`` and
    then to ``r -> 0`` with the model ``nu + A r^8 + B r^10`` through three
    radii.  Both steps are linear combinations of one jointly sampled
    estimate.  The reported error combines the propagated sampling error with
    the Richardson estimate ``|nu_3 - nu_2|``, where ``nu_2`` is the linear
    fit in ``r^8`` through the two smallest radii.
    """
    a = point(a)
    radii = sorted(float(r) for r in radii)[:3]
    if len(radii) != 3:
        raise DomainError("operators.radii", "need three radii for the r -> 0 extrapolation")
    if isinstance(family, ScalarField):
        fields = [family]
        eps_used: list[float] = []
    else:
        eps_used = sorted(float(e) for e in (eps or LELONG_EPS))[:2]
        fields = [family(e) for e in eps_used]
    est = lelong_profile(fields, a, radii, n, seed, method)
    c3 = _extrapolate_r(radii)
    c2 = np.r_[_extrapolate(radii[0] ** 8, radii[1] ** 8), 0.0]
    if eps_used:
        ce = _extrapolate(eps_used[0], eps_used[1])
        c3, c2 = np.kron(ce, c3), np.kron(ce, c2)
    nu, se_mc = _lincomb(est, c3)
    nu2, _ = _lincomb(est, c2)
    se = math.hypot(se_mc, nu - nu2)
    inputs = {"field": fields[0], "a": a, "eps": eps_used, "radii": radii, "n": n, "seed": seed, "method": method}
    details = {"profile": np.atleast_1d(est.value), "profile_stderr": np.atleast_1d(est.stderr),
               "sampling_stderr": se_mc, "two_point_value": nu2}
    return Report("lelong.number", inputs, nu, se, "estimate with sampling and extrapolation error", "pass", details)


# capacity -------------------------------------------------------------------------

def capacity_flux(r: float, R: float) -> float:
    """Closed-form MA mass of the extremal function of ``B(a, r)`` in ``B(a, R)``.

    Boundary flux of the radial field at any sphere between ``r`` and ``R``:
    ``144 |S^15| / (r^-6 - R^-6)^2``.
    """
    return 144.0 * qd.sphere_area() / (r**-6 - R**-6) ** 2


def capacity_ball(
    a=0,
    r: float = 0.5,
    R: float = 1.0,
    deltas: Sequence[float] = CAPACITY_DELTAS,
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    window: float = 3.0,
    method: str = "mc",
) -> Report:
    """Relative capacity of ``B(a, r)`` in ``B(a, R)`` by a smoothing sweep.

    For each ``delta`` the MA density of the smoothed extremal function is
    integrated over the shell ``r - window delta <= |x - a| <= r + window delta``;
    a weighted linear fit in ``delta`` gives the ``delta -> 0`` value.  The
    result is ``inconclusive`` when a sweep point deviates from the fit by more
    than five standard errors.
    """
    a = point(a)
    vals, ses = [], []
    for i, d in enumerate(deltas):
        u = extremal_ball(a, r, R, d)
        lo, hi = max(r - window * d, 0.0), min(r + window * d, R)
        est = qd.integrate(lambda X, u=u: hm.det(hessian(u, X)), qd.shell(a, lo, hi), n, seed + 1009 * i, method)
        vals.append(float(est.value))
        ses.append(float(est.stderr))
    d = np.asarray(deltas, dtype=float)
    y = np.asarray(vals)
    s = np.asarray(ses)
    A = np.stack([np.ones_like(d), d], axis=1) / s[:, None]
    coef, *_ = np.linalg.lstsq(A, y / s, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    c0, se0 = float(coef[0]), float(math.sqrt(cov[0, 0]))
    resid = np.abs(y - (coef[0] + coef[1] * d)) / s
    status = "pass" if np.all(resid <= 5.0) else "inconclusive"
    inputs = {"a": a, "r": r, "R": R, "deltas": list(deltas), "n": n, "seed": seed, "window": window, "method": method}
    details = {"sweep": vals, "sweep_stderr": ses, "fit_slope": float(coef[1]), "max_residual_sigmas": float(resid.max()),
               "flux_value": capacity_flux(r, R)}
    return Report("capacity.ball", inputs, c0, se0, "sweep residuals <= 5 stderr", status, details)


# ball averages ------------------------------------------------------------------------

def t_eps(
    u: ScalarField,
    X: np.ndarray,
    eps: float,
    n: int = qd.DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "qmc",
) -> tuple[np.ndarray, np.ndarray]:
    """``T_eps u = 2 (N + 2) (u_eps - u) / eps^2`` with ``N = 16``.

    ``u_eps`` is the ball average over ``B(x, eps)`` estimated with antithetic
    pairs ``x +- y``.  Returns values and standard errors per point.
    """
    if eps <= 0:
        raise DomainError("operators.eps", "eps must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u0 = u(X)
    region = qd.ball(0, eps)

    def f(Y):
        out = np.empty((Y.shape[0], X.shape[0]))
        for k, x in enumerate(X):
            out[:, k] = 0.5 * (u(x + Y) + u(x - Y)) - u0[k]
        return out

    est = qd.integrate(f, region, n, seed, method)
    scale = 2 * (16 + 2) / eps**2 / region.measure
    return np.atleast_1d(est.value) * scale, np.atleast_1d(est.stderr) * scale
