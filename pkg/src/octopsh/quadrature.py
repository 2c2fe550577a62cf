"""Monte Carlo and randomised quasi-Monte Carlo integration on R^16 regions.

Samples are drawn chunk by chunk; chunk ``c`` of a run with seed ``s`` uses
the generator seeded by ``(s, c)``, so results do not depend on chunking
order or on anything but ``(seed, n, chunk)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import norm as _gauss
from scipy.stats import qmc

from octopsh.errors import DomainError

__all__ = [
    "Region",
    "Estimate",
    "ball",
    "sphere",
    "shell",
    "line_disc",
    "ball_volume",
    "sphere_area",
    "sample",
    "sample_lines",
    "integrate",
    "DEFAULT_SAMPLES",
    "DEFAULT_CHUNK",
]

log = logging.getLogger(__name__)

DEFAULT_SAMPLES = 200_000
DEFAULT_CHUNK = 8192
QMC_REPLICATES = 16


def ball_volume(r: float = 1.0, n: int = 16) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n


def sphere_area(r: float = 1.0, n: int = 16) -> float:
    """Area of the sphere of radius ``r`` in R^n (``2 pi^8 / 7!`` for the unit S^15)."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2) * r ** (n - 1)


@dataclass(frozen=True)
class Region:
    kind: str
    center: np.ndarray
    r: float
    r_inner: float = 0.0
    direction: np.ndarray | None = None  # line direction b for discs

    @property
    def dim(self) -> int:
        return 8 if self.kind == "disc" else 16

    @property
    def measure(self) -> float:
        if self.kind == "ball":
            return ball_volume(self.r)
        if self.kind == "sphere":
            return sphere_area(self.r)
        if self.kind == "shell":
            return ball_volume(self.r) - ball_volume(self.r_inner)
        if self.kind == "disc":
            return ball_volume(self.r, 8)
        raise DomainError("quadrature.region", f"unknown region kind {self.kind!r}")

    @property
    def uniform_dims(self) -> int:
        """Number of uniform variates per sample."""
        return {"ball": 17, "sphere": 16, "shell": 17, "disc": 9}[self.kind]


def _center(c, n=16) -> np.ndarray:
    out = np.zeros(n)
    if np.isscalar(c):
        if c != 0:
            raise DomainError("quadrature.center", "scalar centre must be 0")
        return out
    c = np.asarray(c, dtype=float).ravel()
    out[: c.size] = c
    return out


def ball(center=0, r: float = 1.0) -> Region:
    if r <= 0:
        raise DomainError("quadrature.radius", "radius must be positive")
    return Region("ball", _center(center), float(r))


def sphere(center=0, r: float = 1.0) -> Region:
    if r <= 0:
        raise DomainError("quadrature.radius", "radius must be positive")
    return Region("sphere", _center(center), float(r))


def shell(center=0, r_inner: float = 0.5, r_outer: float = 1.0) -> Region:
    if not 0 <= r_inner < r_outer:
        raise DomainError("quadrature.radius", f"need 0 <= r_inner < r_outer, got {r_inner}, {r_outer}")
    return Region("shell", _center(center), float(r_outer), float(r_inner))


def line_disc(a, b, rho: float) -> Region:
    """Disc ``{a + b t : t in O, |t| <= rho}`` on an octonionic line.

    ``b = (b1, b2)`` with ``b1`` real and ``b1^2 + |b2|^2 = 1``.
    """
    b = _center(b)
    if np.any(b[1:8] != 0):
        raise DomainError("quadrature.line", "first slot of the line direction must be real")
    if abs(b @ b - 1.0) > 1e-12:
        raise DomainError("quadrature.line", "line direction must have unit length")
    return Region("disc", _center(a), float(rho), direction=b)


def _from_uniform(region: Region, u: np.ndarray) -> np.ndarray:
    """Map uniform variates of shape ``(n, uniform_dims)`` to points."""
    d = 8 if region.kind == "disc" else 16
    g = _gauss.ppf(np.clip(u[:, :d], 1e-16, 1 - 1e-16))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    dirs = g / nrm
    if region.kind == "sphere":
        return region.center + region.r * dirs
    if region.kind == "ball":
        rad = region.r * u[:, d] ** (1.0 / d)
        return region.center + rad[:, None] * dirs
    if region.kind == "shell":
        lo, hi = region.r_inner**d, region.r**d
        rad = (lo + u[:, d] * (hi - lo)) ** (1.0 / d)
        return region.center + rad[:, None] * dirs
    # disc on an octonionic line
    from octopsh import octonion as oc

    t = (region.r * u[:, d] ** (1.0 / d))[:, None] * dirs
    b = region.direction
    x1 = b[0] * t
    x2 = oc.mul(b[8:], t)
    return region.center + np.concatenate([x1, x2], axis=1)


def sample(region: Region, n: int, seed: int = 0, chunk_index: int = 0) -> np.ndarray:
    """``n`` i.i.d. uniform points of ``region`` from the stream ``(seed, chunk_index)``."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk_index)]))
    return _from_uniform(region, rng.random((n, region.uniform_dims)))


def sample_lines(count: int, seed: int = 0, radius: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Octonionic lines ``{a + b t}``: ``a`` uniform in ``B(0, radius)``, ``b`` uniform on its sphere.

    ``b`` is returned as a 16-vector ``(b1, 0, ..., 0, b2)`` with ``b1`` real
    and ``b1^2 + |b2|^2 = 1``.
    """
    if count < 1:
        raise DomainError("quadrature.count", "need at least one line")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7_777]))
    A = _from_uniform(ball(0, radius), rng.random((count, 17)))
    g = rng.standard_normal((count, 9))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    B = np.zeros((count, 16))
    B[:, 0] = g[:, 0]
    B[:, 8:] = g[:, 1:]
    return A, B


@dataclass
class Estimate:
    """Integral estimate with standard error; vector valued when the integrand is."""

    value: np.ndarray
    stderr: np.ndarray
    n: int
    method: str
    cov: np.ndarray = field(repr=False, default=None)

    def item(self, k: int = 0) -> tuple[float, float]:
        return float(np.atleast_1d(self.value)[k]), float(np.atleast_1d(self.stderr)[k])

    def diff(self, i: int, j: int) -> tuple[float, float]:
        """``value[i] - value[j]`` with its paired standard error."""
        v = np.atleast_1d(self.value)
        c = np.atleast_2d(self.cov)
        var = c[i, i] + c[j, j] - 2 * c[i, j]
        return float(v[i] - v[j]), float(math.sqrt(max(var, 0.0)))


Integrand = Callable[[np.ndarray], np.ndarray]


def _as_columns(y: np.ndarray, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != n:
        raise DomainError("quadrature.integrand", f"integrand returned {y.shape[0]} rows for {n} points")
    return y


def integrate(
    f: Integrand,
    region: Region,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    method: str = "mc",
    chunk: int = DEFAULT_CHUNK,
) -> Estimate:
    """Estimate ``int_region f`` (Lebesgue / surface measure).

    ``method="mc"`` uses i.i.d. samples and the sample standard error (equal
    to the jackknife error for a mean).  ``method="qmc"`` averages 16
    independently scrambled Sobol replicates and reports the replicate
    standard error.
    """
    if n <= 1:
        raise DomainError("quadrature.samples", "need at least two samples")
    meas = region.measure
    if method == "mc":
        mean = m2 = None
        done = 0
        c = 0
        while done < n:
            m = min(chunk, n - done)
            y = _as_columns(f(sample(region, m, seed, c)), m)
            cm = y.mean(axis=0)
            d = y - cm
            cm2 = d.T @ d
            if mean is None:
                mean, m2 = cm, cm2
            else:
                # pairwise merge of centred moments
                delta = cm - mean
                tot = done + m
                mean = mean + delta * (m / tot)
                m2 = m2 + cm2 + np.outer(delta, delta) * (done * m / tot)
            done += m
            c += 1
        cov = m2 / (n - 1) / n
        value = meas * mean
        cov = meas * meas * cov
    elif method == "qmc":
        per = max(2, int(2 ** round(math.log2(max(n // QMC_REPLICATES, 2)))))
        reps = []
        for r in range(QMC_REPLICATES):
            eng = qmc.Sobol(d=region.uniform_dims, scramble=True, seed=np.random.default_rng([int(seed), 1_000_003, r]))
            u = eng.random_base2(int(math.log2(per)))
            acc = None
            for start in range(0, per, chunk):
                pts = _from_uniform(region, u[start : start + chunk])
                y = _as_columns(f(pts), pts.shape[0]).sum(axis=0)
                acc = y if acc is None else acc + y
            reps.append(meas * acc / per)
        reps = np.array(reps)
        value = reps.mean(axis=0)
        d = reps - value
        cov = d.T @ d / (QMC_REPLICATES - 1) / QMC_REPLICATES
        n = per * QMC_REPLICATES
    else:
        raise DomainError("quadrature.method", f"unknown method {method!r}")
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    if value.size == 1:
        return Estimate(value[0], stderr[0], n, method, cov)
    return Estimate(value, stderr, n, method, cov)
