"""Exact derivative jets on R^16 = O^2 and the octonionic Hessian.

:class:`Jet` carries a value together with its first, second and optionally
third partial derivatives with respect to the 16 real coordinates
``x_{alpha p}`` (index ``8 * (alpha - 1) + p``).  Derivative axes come first,
so a jet of shape ``S`` stores

* ``v``: ``S``
* ``g``: ``(16,) + S``
* ``h``: ``(16, 16) + S``
* ``t``: ``(16, 16, 16) + S``

Any of ``g, h, t`` may be ``None``, meaning identically zero.  Arithmetic
follows the Leibniz and Faa di Bruno rules, so jets of composite expressions
(including octonion products) are exact up to rounding.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from octopsh import octonion as oc
from octopsh.errors import DomainError
from octopsh.hermitian import Hermitian2

__all__ = [
    "DIM",
    "Jet",
    "oct_mul",
    "oct_conj",
    "oct_inv",
    "oct_norm2",
    "oct_hessian",
    "oct_hessian_entries",
    "oct_gradient",
    "t_outer",
    "closedness_residual",
]

DIM = 16

Bilinear = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


def _scale(s, a):
    return None if a is None else s * a


class Jet:
    __slots__ = ("v", "g", "h", "t", "order", "identity")

    def __init__(self, v, g=None, h=None, t=None, order: int = 2, identity: bool = False):
        self.v = np.asarray(v, dtype=float)
        self.order = order
        self.g = g if order >= 1 else None
        self.h = h if order >= 2 else None
        self.t = t if order >= 3 else None
        self.identity = identity

    # construction -------------------------------------------------------
    @classmethod
    def variables(cls, X: np.ndarray, order: int = 2) -> "Jet":
        """Coordinate jet of points ``X`` with shape ``(n, 16)``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != DIM:
            raise DomainError("jets.shape", f"points must have shape (n, 16), got {X.shape}")
        g = np.broadcast_to(np.eye(DIM)[:, None, :], (DIM,) + X.shape) if order >= 1 else None
        return cls(X, g, None, None, order=order, identity=True)

    @classmethod
    def constant(cls, v, order: int = 2) -> "Jet":
        return cls(v, order=order)

    def like(self, v) -> "Jet":
        return Jet(np.broadcast_to(np.asarray(v, dtype=float), self.v.shape).copy(), order=self.order)

    @property
    def shape(self):
        return self.v.shape

    # structural ops -----------------------------------------------------
    def _map(self, fn) -> "Jet":
        return Jet(
            fn(self.v),
            None if self.g is None else fn(self.g),
            None if self.h is None else fn(self.h),
            None if self.t is None else fn(self.t),
            order=self.order,
        )

    def __getitem__(self, idx) -> "Jet":
        """Index trailing (component) axes, e.g. ``jet[..., 3]``."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        if idx[0] is not Ellipsis:
            idx = (Ellipsis,) + idx
        return self._map(lambda a: a[idx])

    def sum(self, axis: int = -1) -> "Jet":
        if axis >= 0:
            raise ValueError("axis must be negative (component axes are trailing)")
        return self._map(lambda a: a.sum(axis=axis))

    def expand(self) -> "Jet":
        """Append a trailing axis of length one."""
        return self._map(lambda a: a[..., None])

    @staticmethod
    def concat(jets: Sequence["Jet"], axis: int = -1) -> "Jet":
        order = min(j.order for j in jets)

        def cat(attr, lead):
            arrs = [getattr(j, attr) for j in jets]
            if all(a is None for a in arrs):
                return None
            shapes = [lead + j.v.shape for j in jets]
            arrs = [np.zeros(s) if a is None else np.broadcast_to(a, s) for a, s in zip(arrs, shapes)]
            return np.concatenate(arrs, axis=axis)

        return Jet(
            np.concatenate([j.v for j in jets], axis=axis),
            cat("g", (DIM,)) if order >= 1 else None,
            cat("h", (DIM, DIM)) if order >= 2 else None,
            cat("t", (DIM, DIM, DIM)) if order >= 3 else None,
            order=order,
        )

    @staticmethod
    def where(cond: np.ndarray, a: "Jet", b: "Jet") -> "Jet":
        """Pointwise branch selection (piecewise jets)."""
        order = min(a.order, b.order)

        def sel(x, y, lead):
            if x is None and y is None:
                return None
            shape = lead + np.broadcast_shapes(a.v.shape, b.v.shape)
            x = np.zeros(shape) if x is None else x
            y = np.zeros(shape) if y is None else y
            return np.where(cond, x, y)

        return Jet(
            np.where(cond, a.v, b.v),
            sel(a.g, b.g, (DIM,)) if order >= 1 else None,
            sel(a.h, b.h, (DIM, DIM)) if order >= 2 else None,
            sel(a.t, b.t, (DIM, DIM, DIM)) if order >= 3 else None,
            order=order,
        )

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet(np.asarray(other, dtype=float), order=self.order)

    def __add__(self, other) -> "Jet":
        o = self._coerce(other)
        order = min(self.order, o.order)
        return Jet(self.v + o.v, _add(self.g, o.g), _add(self.h, o.h), _add(self.t, o.t), order=order)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return self._map(np.negative)

    def __sub__(self, other) -> "Jet":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            s = np.asarray(other, dtype=float)
            if s.ndim == 0 or s.shape[-1:] == self.v.shape[-1:]:
                return Jet(self.v * s, _scale(s, self.g), _scale(s, self.h), _scale(s, self.t), order=self.order)
            other = self._coerce(other)
        return bilinear(self, other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def apply(self, f0, f1=None, f2=None, f3=None) -> "Jet":
        """Compose with a univariate function given its derivatives at ``v``."""
        g = h = t = None
        if self.order >= 1 and self.g is not None:
            g = f1 * self.g
        if self.order >= 2:
            if self.g is not None:
                h = f2 * (self.g[:, None] * self.g[None, :])
            h = _add(h, _scale(f1, self.h))
        if self.order >= 3:
            a, b = self.g, self.h
            if a is not None:
                t = f3 * (a[:, None, None] * a[None, :, None] * a[None, None, :])
                if b is not None:
                    t = t + f2 * (
                        b[:, :, None] * a[None, None, :]
                        + b[:, None, :] * a[None, :, None]
                        + b[None, :, :] * a[:, None, None]
                    )
            t = _add(t, _scale(f1, self.t))
        return Jet(f0, g, h, t, order=self.order)

    def power(self, p: float) -> "Jet":
        v = self.v
        if p != int(p) and np.any(v < 0):
            raise DomainError("jets.power", "fractional power of a negative value")
        if p < 0 and np.any(v == 0):
            raise DomainError("jets.singular", "negative power at a zero")
        f0 = v**p
        f1 = p * v ** (p - 1) if self.order >= 1 else None
        f2 = p * (p - 1) * v ** (p - 2) if self.order >= 2 else None
        f3 = p * (p - 1) * (p - 2) * v ** (p - 3) if self.order >= 3 else None
        return self.apply(f0, f1, f2, f3)

    def pos_power(self, k: int) -> "Jet":
        """``max(v, 0)^k`` for an integer ``k >= 1`` (C^{k-1})."""
        v = np.maximum(self.v, 0.0)
        f = [v**k]
        c = float(k)
        for j in range(1, 4):
            e = k - j
            f.append(c * v**e if e >= 0 else np.zeros_like(v))
            c *= e
        return self.apply(*f)

    def reciprocal(self) -> "Jet":
        return self.power(-1.0)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def exp(self) -> "Jet":
        e = np.exp(self.v)
        return self.apply(e, e, e, e)

    def log(self) -> "Jet":
        v = self.v
        if np.any(v <= 0):
            raise DomainError("jets.log", "log of a nonpositive value")
        return self.apply(np.log(v), 1 / v, -1 / v**2, 2 / v**3)


def bilinear(a: Jet, b: Jet, B: Bilinear) -> Jet:
    """Jet of ``B(a, b)`` for a bilinear ``B`` acting on trailing axes."""
    order = min(a.order, b.order)
    av, bv = a.v, b.v
    ag, bg = (a.g, b.g) if order >= 1 else (None, None)
    ah, bh = (a.h, b.h) if order >= 2 else (None, None)
    at, bt = (a.t, b.t) if order >= 3 else (None, None)

    def term(x, y):
        return None if x is None or y is None else B(x, y)

    v = B(av, bv)
    g = h = t = None
    if order >= 1:
        g = _add(term(ag, bv), term(av, bg))
    if order >= 2:
        h = _add(term(ah, bv), term(av, bh))
        if ag is not None and bg is not None:
            q = B(ag[:, None], bg[None, :])
            h = _add(h, q + np.swapaxes(q, 0, 1))
    if order >= 3:
        t = _add(term(at, bv), term(av, bt))
        # h is symmetric, so the three placements of the odd index are transposes
        if ah is not None and bg is not None:
            p = B(ah[:, :, None], bg[None, None, :])
            t = _add(t, p + np.moveaxis(p, 2, 1) + np.moveaxis(p, 2, 0))
        if ag is not None and bh is not None:
            p = B(ag[:, None, None], bh[None, :, :])
            t = _add(t, p + np.moveaxis(p, 0, 1) + np.moveaxis(p, 0, 2))
    if g is not None:
        g = np.broadcast_to(g, (DIM,) + v.shape)
    if h is not None:
        h = np.broadcast_to(h, (DIM, DIM) + v.shape)
    if t is not None:
        t = np.broadcast_to(t, (DIM, DIM, DIM) + v.shape)
    return Jet(v, g, h, t, order=order)


# octonion-valued jets (trailing axis of length 8) -------------------------

def oct_mul(a: Jet, b: Jet) -> Jet:
    return bilinear(a, b, oc.mul)


def oct_conj(a: Jet) -> Jet:
    sign = np.array([1.0, -1, -1, -1, -1, -1, -1, -1])
    return a * sign


def oct_norm2(a: Jet) -> Jet:
    return (a * a).sum(-1)


def oct_inv(a: Jet) -> Jet:
    n2 = oct_norm2(a)
    if np.any(n2.v == 0):
        raise DomainError("jets.zero_inverse", "inverse of a vanishing octonion")
    return oct_conj(a) * n2.reciprocal().expand()


# octonionic Hessian ----------------------------------------------------------

# _EE[p, q] = e_p conj(e_q)
_EE = oc.mul(np.eye(8)[:, None, :], oc.conj(np.eye(8))[None, :, :])


def _block(h: np.ndarray, alpha: int, beta: int) -> np.ndarray:
    return h[8 * alpha : 8 * alpha + 8, 8 * beta : 8 * beta + 8]


def oct_hessian_entries(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Octonionic entries ``(H11, H22, H12)`` from a real Hessian ``(16, 16, n)``.

    ``H_ab = sum_{p,q} d^2 u / dx_{ap} dx_{bq} e_p conj(e_q)``; diagonal
    entries are returned as full octonions so their imaginary parts can be
    inspected.
    """
    out = []
    for a, b in ((0, 0), (1, 1), (0, 1)):
        out.append(np.einsum("pq...,pqr->...r", _block(h, a, b), _EE))
    return tuple(out)  # type: ignore[return-value]


def oct_hessian(jet: Jet) -> Hermitian2:
    """``Hess_O`` of a scalar jet as a batch of Hermitian matrices.

    The diagonal entries are the real 8-variable Laplacians in each slot.
    """
    h = jet.h
    shape = jet.v.shape
    if h is None:
        return Hermitian2(np.zeros(shape), np.zeros(shape), np.zeros(shape + (8,)))
    a11 = np.einsum("pp...->...", _block(h, 0, 0))
    a22 = np.einsum("pp...->...", _block(h, 1, 1))
    a12 = np.einsum("pq...,pqr->...r", _block(h, 0, 1), _EE)
    return Hermitian2(a11, a22, a12)


def oct_gradient(jet: Jet) -> np.ndarray:
    """``du`` as the column ``(dbar_1 u, dbar_2 u)``, shape ``S + (2, 8)``.

    ``dbar_a u = sum_p e_p du/dx_{ap}``.
    """
    g = jet.g
    if g is None:
        return np.zeros(jet.v.shape + (2, 8))
    return np.moveaxis(g, 0, -1).reshape(jet.v.shape + (2, 8))


def t_outer(du: np.ndarray, dv: np.ndarray) -> Hermitian2:
    """Symmetrised ``T(du (x) dv)`` with entries ``(xi_a conj(eta_b) + eta_a conj(xi_b)) / 2``.

    ``du, dv`` have shape ``(..., 2, 8)`` as returned by :func:`oct_gradient`.
    ``t_outer(du, du)`` equals ``outer(conj(du))``.
    """
    x1, x2 = du[..., 0, :], du[..., 1, :]
    y1, y2 = dv[..., 0, :], dv[..., 1, :]
    a11 = np.sum(x1 * y1, axis=-1)
    a22 = np.sum(x2 * y2, axis=-1)
    a12 = 0.5 * (oc.mul(x1, oc.conj(y2)) + oc.mul(y1, oc.conj(x2)))
    return Hermitian2(a11, a22, a12)


def closedness_residual(jet: Jet) -> np.ndarray:
    """Max defect of the closedness identities for ``Hess_O`` of a jet.

    For ``alpha != beta`` compares ``sum_r d_{beta r} H_{alpha beta} e_r``
    with ``sum_r e_r d_{alpha r} H_{beta beta}``.  Needs third derivatives.
    """
    if jet.order < 3:
        raise DomainError("jets.order", "closedness needs a third-order jet")
    t = jet.t
    shape = jet.v.shape
    if t is None:
        return np.zeros(shape)
    E = np.eye(8)
    worst = np.zeros(shape)
    for a, b in ((0, 1), (1, 0)):
        sa, sb = slice(8 * a, 8 * a + 8), slice(8 * b, 8 * b + 8)
        # d_{b r} H_ab = sum_{p,q} t[ap, bq, br] e_p conj(e_q)
        dH = np.einsum("pqr...,pqs->r...s", t[sa, sb, sb], _EE)
        lhs = sum(oc.mul(dH[r], E[r]) for r in range(8))
        # d_{a r} of the real Laplacian in slot b
        rhs = np.moveaxis(np.einsum("qqr...->r...", t[sb, sb, sa]), 0, -1)
        worst = np.maximum(worst, np.max(np.abs(lhs - rhs), axis=-1))
    return worst
