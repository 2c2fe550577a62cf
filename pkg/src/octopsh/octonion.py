"""Octonion arithmetic on real 8-vectors.

An octonion is stored as the last axis (length 8) of a float array, in the
basis ``e0 = 1, e1..e7``.  The product is built from quaternion pairs::

    (a, b)(c, d) = (ac - conj(d) b,  d a + b conj(c))

with ``e0..e3 <-> (1, 0), (i, 0), (j, 0), (k, 0)`` and
``e4..e7 <-> (1, i, j, k)`` placed in the second slot.  All functions
broadcast over leading axes so batches of octonions are handled in one call.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from octopsh.errors import DomainError

__all__ = [
    "Octonion",
    "MULT_TABLE",
    "basis",
    "mul",
    "conj",
    "re",
    "im",
    "norm",
    "norm2",
    "inv",
    "div_right",
    "re_triple",
    "associator",
    "left_matrix",
    "table_mul",
]


def _qmul(a: np.ndarray, b: np.ndarray, sa: float = 1.0, sb: float = 1.0) -> list[np.ndarray]:
    """Quaternion product with components on the leading axis.

    ``sa`` and ``sb`` scale the imaginary parts, so ``-1`` conjugates.
    """
    a0, a1, a2, a3 = a[0], sa * a[1], sa * a[2], sa * a[3]
    b0, b1, b2, b3 = b[0], sb * b[1], sb * b[2], sb * b[3]
    return [
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    ]


def mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Octonion product ``x y`` (broadcasting over leading axes)."""
    x = np.moveaxis(np.asarray(x, dtype=float), -1, 0)
    y = np.moveaxis(np.asarray(y, dtype=float), -1, 0)
    a, b = x[:4], x[4:]
    c, d = y[:4], y[4:]
    out = np.empty((8,) + np.broadcast_shapes(x.shape[1:], y.shape[1:]))
    ac, db = _qmul(a, c), _qmul(d, b, sa=-1.0)
    da, bc = _qmul(d, a), _qmul(b, c, sb=-1.0)
    for k in range(4):
        out[k] = ac[k] - db[k]
        out[4 + k] = da[k] + bc[k]
    return np.moveaxis(out, 0, -1)


def conj(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x[..., :1], -x[..., 1:]], axis=-1)


def re(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., 0]


def im(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([np.zeros_like(x[..., :1]), x[..., 1:]], axis=-1)


def norm2(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(norm2(x))


def inv(x: np.ndarray) -> np.ndarray:
    """Multiplicative inverse ``conj(x) / |x|^2``; raises on zero."""
    n2 = norm2(x)
    if np.any(n2 == 0.0):
        raise DomainError("octonion.zero_inverse", "inverse of the zero octonion")
    return conj(x) / n2[..., None]


def div_right(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``x y^{-1}``."""
    return mul(x, inv(y))


def re_triple(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``Re(x y z)``; independent of the bracketing."""
    return re(mul(mul(x, y), z))


def associator(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return mul(mul(x, y), z) - mul(x, mul(y, z))


def basis(p: int) -> np.ndarray:
    e = np.zeros(8)
    e[p] = 1.0
    return e


def _build_table() -> np.ndarray:
    eye = np.eye(8)
    # MULT_TABLE[p, q] = e_p e_q as an 8-vector
    return mul(eye[:, None, :], eye[None, :, :])


MULT_TABLE: np.ndarray = _build_table()
MULT_TABLE.setflags(write=False)


def table_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product through the structure constants; used as a cross-check."""
    return np.einsum("...p,...q,pqr->...r", x, y, MULT_TABLE)


def left_matrix(a: np.ndarray) -> np.ndarray:
    """Real 8x8 matrix of ``t -> a t``."""
    return np.einsum("p,pqr->rq", np.asarray(a, dtype=float), MULT_TABLE)


class Octonion:
    """Single octonion value with operator overloads.

    Thin wrapper for interactive use and tests; numerical kernels work on raw
    arrays through the module-level functions.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[float] | np.ndarray | float = 0.0):
        if np.isscalar(coeffs):
            c = np.zeros(8)
            c[0] = float(coeffs)  # type: ignore[arg-type]
        else:
            c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs, dtype=float)
            if c.shape != (8,):
                raise DomainError("octonion.shape", f"expected 8 coefficients, got shape {c.shape}")
        self.c = c

    @classmethod
    def e(cls, p: int) -> "Octonion":
        return cls(basis(p))

    def _coerce(self, other) -> "Octonion":
        return other if isinstance(other, Octonion) else Octonion(other)

    def __add__(self, other) -> "Octonion":
        return Octonion(self.c + self._coerce(other).c)

    __radd__ = __add__

    def __sub__(self, other) -> "Octonion":
        return Octonion(self.c - self._coerce(other).c)

    def __rsub__(self, other) -> "Octonion":
        return Octonion(self._coerce(other).c - self.c)

    def __neg__(self) -> "Octonion":
        return Octonion(-self.c)

    def __mul__(self, other) -> "Octonion":
        if np.isscalar(other):
            return Octonion(self.c * float(other))
        return Octonion(mul(self.c, self._coerce(other).c))

    def __rmul__(self, other) -> "Octonion":
        if np.isscalar(other):
            return Octonion(self.c * float(other))
        return Octonion(mul(self._coerce(other).c, self.c))

    def __truediv__(self, other) -> "Octonion":
        if np.isscalar(other):
            return Octonion(self.c / float(other))
        return Octonion(div_right(self.c, self._coerce(other).c))

    def conj(self) -> "Octonion":
        return Octonion(conj(self.c))

    def inv(self) -> "Octonion":
        return Octonion(inv(self.c))

    @property
    def re(self) -> float:
        return float(self.c[0])

    def norm(self) -> float:
        return float(norm(self.c))

    def __eq__(self, other) -> bool:
        return isinstance(other, Octonion) and bool(np.array_equal(self.c, other.c))

    def __hash__(self) -> int:
        return hash(self.c.tobytes())

    def __repr__(self) -> str:
        return "Octonion(" + ", ".join(f"{v:g}" for v in self.c) + ")"
