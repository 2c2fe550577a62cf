"""Perron envelope bounds for the Dirichlet problem on the unit ball.

The lower bound is a finite envelope of affine OPSH barriers built from the
boundary data; the upper bound is the Poisson integral of the data.  The
Perron envelope lies between the two.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm as _gauss
from scipy.stats import qmc

from octopsh import quadrature as qd
from octopsh.catalog import LogSumExp, MaxOf, ScalarField, barrier, const, point
from octopsh.errors import ContractError, DomainError
from octopsh.reports import Report

__all__ = [
    "BoundaryData",
    "boundary_points",
    "certified_min",
    "build_lower",
    "upper_harmonic",
    "poisson_kernel",
    "sandwich",
    "second_difference_check",
    "maximality_check",
    "candidate_shift_values",
]

log = logging.getLogger(__name__)

DEFAULT_M = 64
C_SAFETY = 1.25


@dataclass(frozen=True)
class BoundaryData:
    """Boundary datum ``phi`` (a field near the sphere) and a second-order bound ``C``.

    ``C`` must satisfy ``phi(x) >= phi(x0) + grad phi(x0) . (x - x0) - C |x - x0|^2``
    for ``x, x0`` on the sphere; :meth:`validate` samples this.
    """

    phi: ScalarField
    C: float

    @classmethod
    def from_field(cls, phi: ScalarField, C: float | None = None, n: int = 4096, seed: int = 0) -> "BoundaryData":
        """Attach ``C``; when omitted it is half the sampled Hessian norm on the ball, padded by 25%."""
        if C is None:
            X = qd.sample(qd.ball(0, 1.0), n, seed, 501)
            h = phi.jet(X, order=2).h
            if h is None:
                C = 0.0
            else:
                norms = np.abs(np.linalg.eigvalsh(np.moveaxis(np.asarray(h), -1, 0))).max(axis=1)
                C = C_SAFETY * 0.5 * float(norms.max())
        data = cls(phi, float(C))
        data.validate(seed=seed)
        return data

    def validate(self, n_pairs: int = 4096, seed: int = 0) -> float:
        """Largest sampled second-difference ratio; raises if it exceeds ``C``."""
        S = qd.sphere()
        x0 = qd.sample(S, n_pairs, seed, 601)
        x = qd.sample(S, n_pairs, seed, 602)
        # include close pairs, where the bound is tightest
        near = x0 + 0.05 * (x - x0)
        near /= np.linalg.norm(near, axis=1, keepdims=True)
        x = np.concatenate([x, near])
        x0 = np.concatenate([x0, x0])
        j0 = self.phi.jet(x0, order=1)
        g0 = np.asarray(j0.g).T if j0.g is not None else np.zeros_like(x0)
        d = x - x0
        d2 = np.sum(d * d, axis=1)
        keep = d2 > 1e-12
        ratio = (j0.v + np.sum(g0 * d, axis=1) - self.phi(x))[keep] / d2[keep]
        worst = float(ratio.max()) if ratio.size else 0.0
        if worst > self.C * (1 + 1e-9) + 1e-12:
            raise ContractError("perron.c2_bound", f"sampled ratio {worst:.6g} exceeds C = {self.C:.6g}")
        return worst


def boundary_points(M: int, seed: int = 0) -> np.ndarray:
    """``M`` scrambled-Sobol points on the unit sphere S^15."""
    u = qmc.Sobol(d=16, scramble=True, seed=np.random.default_rng([int(seed), 31337])).random(M)
    g = _gauss.ppf(np.clip(u, 1e-16, 1 - 1e-16))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def certified_min(data: BoundaryData, X0: np.ndarray) -> float:
    """Lower bound for ``min phi`` on the sphere from the barrier inequality.

    On the sphere each barrier is the affine function
    ``phi0 - g0.x0 - 2C + (g0 + 2C x0).x`` whose minimum is explicit.
    """
    j = data.phi.jet(X0, order=1)
    g = np.asarray(j.g).T if j.g is not None else np.zeros_like(X0)
    w = g + 2 * data.C * X0
    lows = j.v - np.sum(g * X0, axis=1) - 2 * data.C - np.linalg.norm(w, axis=1)
    return float(lows.max())


def build_lower(
    data: BoundaryData,
    M: int = DEFAULT_M,
    seed: int = 0,
    extra: Sequence[ScalarField] = (),
    beta: float | None = None,
) -> ScalarField:
    """Envelope of barriers at ``M`` boundary points, a certified constant and ``extra`` minorants.

    With ``beta`` the exact maximum is replaced by the smooth
    ``LogSumExp`` envelope shifted down by ``log(m) / beta``, which never
    exceeds the exact one.
    """
    for f in extra:
        if not f.opsh:
            raise ContractError("perron.candidate", f"candidate {f.to_text()} is not declared OPSH")
    X0 = boundary_points(M, seed)
    j = data.phi.jet(X0, order=1)
    g = np.asarray(j.g).T if j.g is not None else np.zeros_like(X0)
    cands: list[ScalarField] = [barrier(X0[i], float(j.v[i]), g[i], data.C) for i in range(M)]
    cands.append(const(certified_min(data, X0)))
    cands.extend(extra)
    if beta is None:
        return MaxOf(cands)
    return LogSumExp(cands, beta)


_LOG_C = math.lgamma(8.0) - 0.5 * math.log(math.pi) - math.lgamma(7.5)


def poisson_kernel(x: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """``(1 - |x|^2) / |x - zeta|^16`` against normalised surface measure."""
    x = np.asarray(x, dtype=float)
    return (1 - np.sum(x * x, axis=-1)) / np.sum((x - zeta) ** 2, axis=-1) ** 8


def _t_density(t: np.ndarray, r: float) -> np.ndarray:
    """Density of ``zeta . xhat`` under harmonic measure at radius ``r``."""
    base = _LOG_C + 6.5 * np.log1p(-np.minimum(t * t, 1 - 1e-300))
    return np.exp(base) * (1 - r * r) / (1 - 2 * r * t + r * r) ** 8


class _Proposal:
    """Piecewise-constant proposal for ``t`` with bins clustered at ``t = 1``."""

    def __init__(self, r: float, bins: int = 4096):
        s = np.linspace(0.0, 1.0, bins + 1)
        edges = np.sort(1.0 - 2.0 * s**3)
        self.lo, self.hi = edges[:-1], edges[1:]
        width = self.hi - self.lo
        mid = 0.5 * (self.lo + self.hi)
        mass = _t_density(mid, r) * width + 1e-300
        self.p = mass / mass.sum()
        self.dens = self.p / width
        self.cdf = np.cumsum(self.p)

    def draw(self, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
        k = np.minimum(np.searchsorted(self.cdf, rng.random(n) * self.cdf[-1]), len(self.p) - 1)
        t = self.lo[k] + rng.random(n) * (self.hi[k] - self.lo[k])
        return t, self.dens[k]


def upper_harmonic(
    phi: ScalarField, X: np.ndarray, n: int = 20_000, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Poisson integral of ``phi`` over S^15 at interior points ``X``.

    Importance sampling: the component ``t`` of ``zeta`` along ``x`` is drawn
    from a tabulated proposal close to its harmonic-measure marginal, the
    orthogonal part uniformly from S^14 in antithetic pairs ``+-g``.  The
    estimate is a weighted regression on the control variate ``t``, whose
    Poisson mean is exactly ``|x|``, so affine ``phi`` is integrated without
    sampling error.  Standard errors come from the regression residuals over
    the ``n / 2`` pairs.  Returns values and standard errors.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    vals = np.empty(len(X))
    errs = np.empty(len(X))
    m = max(n // 2, 2)
    for i, x in enumerate(X):
        r = float(np.linalg.norm(x))
        if r >= 1.0:
            raise DomainError("perron.outside", "upper_harmonic needs |x| < 1")
        xhat = x / r if r > 0 else np.eye(16)[0]
        rng = np.random.default_rng([int(seed), 4242, i])
        prop = _Proposal(r)
        t, q = prop.draw(rng, m)
        g = rng.normal(size=(m, 16))
        g -= np.outer(g @ xhat, xhat)
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        base = t[:, None] * xhat
        side = np.sqrt(np.maximum(1 - t * t, 0.0))[:, None] * g
        w = _t_density(t, r) / q
        y = 0.5 * (phi(base + side) + phi(base - side))
        # weighted regression on (1, t - r); t is harmonic with Poisson mean r
        design = np.stack([np.ones(m), t - r], axis=1)
        sw = np.sqrt(w)
        coef = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)[0]
        vals[i] = coef[0]
        resid = w * (y - design @ coef)
        errs[i] = math.sqrt(float(np.sum(resid**2)) * m / (m - 2)) / float(np.sum(w))
    return vals, errs


def sandwich(
    data: BoundaryData,
    X: np.ndarray,
    M: int = DEFAULT_M,
    n: int = 20_000,
    seed: int = 0,
    extra: Sequence[ScalarField] = (),
    sigma: float = 3.0,
    exact: bool = False,
) -> Report:
    """Check ``lower <= upper`` at ``X``; with ``exact`` also ``upper - lower <= sigma stderr``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lower = build_lower(data, M, seed, extra)
    lo = lower(X)
    up, se = upper_harmonic(data.phi, X, n, seed)
    gap = up - lo
    ordered = bool(np.all(gap >= -sigma * se - 1e-12))
    tight = bool(np.all(gap <= sigma * se + 1e-12))
    ok = ordered and (tight or not exact)
    inputs = {"phi": data.phi, "C": data.C, "points": X, "M": M, "n": n, "seed": seed, "extra": list(extra), "exact": exact}
    gate = f"gap >= -{sigma:g} stderr" + (f" and gap <= {sigma:g} stderr" if exact else "")
    return Report("perron.sandwich", inputs, gap, se, gate, Report.status_of(ok),
                  {"lower": lo, "upper": up, "ordered": ordered, "tight": tight})


def second_difference_check(
    u: ScalarField,
    hs: Sequence[float] = (1e-1, 1e-2, 1e-3),
    n_points: int = 2000,
    eps: float = 0.1,
    seed: int = 0,
    rel_tol: float = 0.05,
) -> Report:
    """Sup of ``(u(x+h) + u(x-h) - 2u(x)) / |h|^2`` over ``x`` in ``B(0, 1 - eps)``.

    Directions and base points are shared across step sizes.  Stable means the
    two finest levels agree to ``rel_tol`` relative to ``max(1, |sup|)``.
    """
    X = qd.sample(qd.ball(0, 1.0 - eps - max(hs)), n_points, seed, 701)
    D = qd.sample(qd.sphere(), n_points, seed, 702)
    u0 = u(X)
    sups = []
    for h in hs:
        q = (u(X + h * D) + u(X - h * D) - 2 * u0) / (h * h)
        sups.append(float(np.max(q)))
    finite = all(math.isfinite(s) for s in sups)
    drift = abs(sups[-1] - sups[-2]) / max(1.0, abs(sups[-1])) if len(sups) > 1 else 0.0
    ok = finite and drift <= rel_tol
    inputs = {"u": u, "hs": list(hs), "n_points": n_points, "eps": eps, "seed": seed}
    return Report("perron.second_difference", inputs, sups[-1], None,
                  f"finite and relative drift <= {rel_tol:g}", Report.status_of(ok), {"sups": sups, "drift": drift})


def maximality_check(
    u: ScalarField,
    competitors: Sequence[ScalarField],
    center=0,
    radius: float = 1.0,
    n: int = 20_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> Report:
    """Test ``v <= u`` inside ``B(center, radius)`` for competitors ``v <= u`` on its boundary.

    A competitor that exceeds ``u`` on the boundary sample raises
    :class:`~octopsh.errors.ContractError`.
    """
    c = point(center)
    S = qd.sample(qd.sphere(c, radius), n, seed, 801)
    X = qd.sample(qd.ball(c, radius), n, seed, 802)
    uS, uX = u(S), u(X)
    worst = -math.inf
    for v in competitors:
        if np.any(v(S) > uS + tol * np.maximum(1.0, np.abs(uS))):
            raise ContractError("perron.competitor", f"competitor {v.to_text()} exceeds u on the boundary")
        worst = max(worst, float(np.max(v(X) - uX)))
    ok = worst <= tol
    inputs = {"u": u, "competitors": list(competitors), "center": c, "radius": radius, "n": n, "seed": seed}
    return Report("perron.maximality", inputs, worst, None, f"max(v - u) <= {tol:g}", Report.status_of(ok))


def candidate_shift_values(u: ScalarField, a, h, X: np.ndarray) -> np.ndarray:
    """``V(a, h) = (U(a, h) + U(a, -h)) / 2`` at ``X``; optional envelope enrichment."""
    from octopsh.geometry import shifted_field_values

    h = point(h)
    return 0.5 * (shifted_field_values(u, a, h, X) + shifted_field_values(u, a, -h, X))
