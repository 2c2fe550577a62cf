"""2x2 octonionic Hermitian matrices and their mixed determinant.

A Hermitian matrix is ``[[a11, a12], [conj(a12), a22]]`` with real diagonal
and octonionic off-diagonal entry.  Every field of :class:`Hermitian2` may
carry leading batch axes; ``a12`` has a trailing axis of length 8.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from octopsh import octonion as oc
from octopsh.errors import DomainError

__all__ = [
    "Hermitian2",
    "det",
    "mixed_det",
    "outer",
    "cs_gap",
    "is_nonneg",
    "quadratic_form",
    "is_nonneg_sampled",
    "is_positive_sampled",
    "esp_basis",
    "dual_basis",
    "coordinates",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class Hermitian2:
    a11: np.ndarray
    a22: np.ndarray
    a12: np.ndarray

    def __post_init__(self):
        a11 = np.asarray(self.a11, dtype=float)
        a22 = np.asarray(self.a22, dtype=float)
        a12 = np.asarray(self.a12, dtype=float)
        if a12.shape[-1:] != (8,):
            raise DomainError("hermitian.shape", f"a12 must end in an axis of length 8, got {a12.shape}")
        object.__setattr__(self, "a11", a11)
        object.__setattr__(self, "a22", a22)
        object.__setattr__(self, "a12", a12)

    @classmethod
    def identity(cls) -> "Hermitian2":
        return cls(1.0, 1.0, np.zeros(8))

    @classmethod
    def diag(cls, d1, d2) -> "Hermitian2":
        d1 = np.asarray(d1, dtype=float)
        return cls(d1, d2, np.zeros(d1.shape + (8,)))

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "Hermitian2":
        """Inverse of :meth:`to_vector`: ``(a11, a22, a12[0..7])``."""
        v = np.asarray(v, dtype=float)
        return cls(v[..., 0], v[..., 1], v[..., 2:])

    def to_vector(self) -> np.ndarray:
        a11, a22 = np.broadcast_arrays(self.a11, self.a22)
        shape = np.broadcast_shapes(a11.shape, self.a12.shape[:-1])
        out = np.empty(shape + (10,))
        out[..., 0] = a11
        out[..., 1] = a22
        out[..., 2:] = self.a12
        return out

    @property
    def a21(self) -> np.ndarray:
        return oc.conj(self.a12)

    @property
    def trace(self) -> np.ndarray:
        return self.a11 + self.a22

    def scale(self) -> np.ndarray:
        """Largest entry magnitude, used to make tolerances scale-aware."""
        return np.maximum(np.maximum(np.abs(self.a11), np.abs(self.a22)), oc.norm(self.a12))

    def __add__(self, other: "Hermitian2") -> "Hermitian2":
        return Hermitian2(self.a11 + other.a11, self.a22 + other.a22, self.a12 + other.a12)

    def __sub__(self, other: "Hermitian2") -> "Hermitian2":
        return Hermitian2(self.a11 - other.a11, self.a22 - other.a22, self.a12 - other.a12)

    def __mul__(self, s) -> "Hermitian2":
        s = np.asarray(s, dtype=float)
        return Hermitian2(self.a11 * s, self.a22 * s, self.a12 * s[..., None])

    __rmul__ = __mul__

    def __getitem__(self, idx) -> "Hermitian2":
        a11, a22 = np.broadcast_arrays(self.a11, self.a22)
        return Hermitian2(a11[idx], a22[idx], self.a12[idx])


def det(A: Hermitian2) -> np.ndarray:
    """``a11 a22 - |a12|^2``."""
    return A.a11 * A.a22 - oc.norm2(A.a12)


def mixed_det(A: Hermitian2, B: Hermitian2) -> np.ndarray:
    """Polarised determinant ``(a11 b22 + a22 b11 - 2 Re(a12 b21)) / 2``."""
    re_ab = oc.re(oc.mul(A.a12, oc.conj(B.a12)))
    return 0.5 * (A.a11 * B.a22 + A.a22 * B.a11) - re_ab


def cs_gap(A: Hermitian2, B: Hermitian2) -> np.ndarray:
    """``det(A, B)^2 - det(A) det(B)``; nonnegative for nonnegative A, B."""
    return mixed_det(A, B) ** 2 - det(A) * det(B)


def outer(xi: np.ndarray) -> Hermitian2:
    """Elementary strongly positive matrix with entries ``conj(xi_j) xi_k``.

    ``xi`` has shape ``(..., 2, 8)``.
    """
    xi = np.asarray(xi, dtype=float)
    x1, x2 = xi[..., 0, :], xi[..., 1, :]
    return Hermitian2(oc.norm2(x1), oc.norm2(x2), oc.mul(oc.conj(x1), x2))


def is_nonneg(A: Hermitian2, tol: float = DEFAULT_TOL, relative: bool = True) -> np.ndarray:
    """Sylvester test ``a11 >= -tol``, ``a22 >= -tol``, ``det >= -tol``.

    With ``relative`` the tolerance is multiplied by ``max(1, scale)`` for the
    diagonal and ``max(1, scale)^2`` for the determinant, so that matrices with
    large entries are judged at the precision their entries carry.  For
    entries of size at most one this is the plain absolute test.
    """
    s = np.maximum(1.0, A.scale()) if relative else 1.0
    return (A.a11 >= -tol * s) & (A.a22 >= -tol * s) & (det(A) >= -tol * s * s)


def quadratic_form(A: Hermitian2, xi: np.ndarray) -> np.ndarray:
    """``Re(xi^* A xi)`` for ``xi`` of shape ``(..., 2, 8)``."""
    x1, x2 = xi[..., 0, :], xi[..., 1, :]
    cross = oc.re(oc.mul(oc.mul(oc.conj(x1), A.a12), x2))
    return A.a11 * oc.norm2(x1) + A.a22 * oc.norm2(x2) + 2.0 * cross


@lru_cache(maxsize=8)
def _sphere_directions(m: int, seed: int) -> np.ndarray:
    from scipy.stats import norm as gauss

    u = qmc.Sobol(d=16, scramble=True, seed=seed).random(m)
    g = gauss.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g.setflags(write=False)
    return g.reshape(m, 2, 8)


def is_nonneg_sampled(A: Hermitian2, m: int = 512, tol: float = DEFAULT_TOL, seed: int = 0) -> np.ndarray:
    """Quadratic-form test over ``m`` quasi-random unit vectors in O^2.

    A necessary condition for nonnegativity; independent of the Sylvester
    route in :func:`is_nonneg`.
    """
    xi = _sphere_directions(m, seed)
    # broadcast A over the sample axis placed last
    a = Hermitian2(np.asarray(A.a11)[..., None], np.asarray(A.a22)[..., None], np.asarray(A.a12)[..., None, :])
    q = quadratic_form(a, xi)
    s = np.maximum(1.0, A.scale())
    return np.all(q >= -tol * s[..., None], axis=-1)


def is_positive_sampled(A: Hermitian2, m: int = 512, tol: float = DEFAULT_TOL, seed: int = 0) -> np.ndarray:
    """Dual-cone test: ``det(A, outer(zeta)) >= -tol`` over sampled zeta."""
    zeta = _sphere_directions(m, seed)
    E = outer(zeta)
    a = Hermitian2(np.asarray(A.a11)[..., None], np.asarray(A.a22)[..., None], np.asarray(A.a12)[..., None, :])
    vals = mixed_det(a, E)
    s = np.maximum(1.0, A.scale())
    return np.all(vals >= -tol * s[..., None], axis=-1)


def _basis_vectors() -> np.ndarray:
    xs = [np.zeros((2, 8)) for _ in range(10)]
    xs[0][0, 0] = 1.0
    xs[1][1, 0] = 1.0
    xs[2][0, 0] = 1.0
    xs[2][1, 0] = 1.0
    for p in range(1, 8):
        xs[2 + p][0, 0] = 1.0
        xs[2 + p][1, p] = 1.0
    return np.stack(xs)


_XI = _basis_vectors()
# mixed_det(A, B) = vec(A) @ _GRAM @ vec(B)
_GRAM = np.zeros((10, 10))
_GRAM[0, 1] = _GRAM[1, 0] = 0.5
_GRAM[2:, 2:] = -np.eye(8)


def esp_basis() -> Hermitian2:
    """Ten elementary strongly positive matrices spanning Herm_2(O).

    Built from ``outer`` of ``(1,0), (0,1), (1,1)`` and ``(1, e_p)``.
    Returned as a batch of shape ``(10,)``.
    """
    return outer(_XI)


def dual_basis() -> Hermitian2:
    """Matrices ``h'_k`` with ``mixed_det(h_j, h'_k) = delta_jk``."""
    H = esp_basis().to_vector()
    M = H @ _GRAM @ H.T
    D = np.linalg.solve(M, H)  # rows: dual vectors, since M is symmetric
    return Hermitian2.from_vector(D)


def coordinates(A: Hermitian2) -> np.ndarray:
    """Coefficients ``c_j = mixed_det(A, h'_j)`` so that ``A = sum c_j h_j``."""
    Dv = dual_basis().to_vector()
    return A.to_vector() @ _GRAM @ Dv.T
