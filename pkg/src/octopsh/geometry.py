"""Cayley transform, Siegel-domain maps and automorphisms of the unit ball of O^2.

Points are arrays of shape ``(..., 16)`` holding ``(x1, x2)`` as two octonions.
The Siegel upper half space is ``{y : 2 Re y2 - |y1|^2 > 0}``.  The ball
automorphism moving ``a`` to the origin is

    T_a = C^{-1} o D_{delta_a} o tau_{zeta_a} o C

and the weighted pullback ``|Psi_a|^{-6} u o T_a`` preserves octonionic
plurisubharmonicity.  The composite maps are written once against a tiny
operations backend so that they run on plain arrays and on jets.
"""

from __future__ import annotations

import math

import numpy as np

from octopsh import octonion as oc
from octopsh.catalog import ScalarField, _fmt_point, _pt, point, register
from octopsh.errors import DomainError
from octopsh.jets import Jet, oct_inv, oct_mul, oct_norm2

__all__ = [
    "EPS0",
    "EXPANSION_COLLAR",
    "cayley",
    "cayley_inv",
    "siegel_defect",
    "tau",
    "dilate",
    "heisenberg_mul",
    "delta_a",
    "zeta_a",
    "zeta_inv",
    "t_a",
    "t_a_composed",
    "t_a_direct",
    "t_a_inv",
    "psi_a",
    "psi_a_expansion",
    "g_a",
    "WeightedPullback",
    "weighted_pullback",
    "second_diff_weight",
    "shift_weight",
    "shifted_field_values",
]

EPS0 = 0.05
EXPANSION_COLLAR = 0.1
SQRT2 = math.sqrt(2.0)
_ONE = np.eye(8)[0]


class _ArrayOps:
    @staticmethod
    def split(x):
        x = np.asarray(x, dtype=float)
        return x[..., :8], x[..., 8:]

    @staticmethod
    def join(a, b):
        a, b = np.broadcast_arrays(a, b)
        return np.concatenate([a, b], axis=-1)

    mul = staticmethod(oc.mul)
    inv = staticmethod(oc.inv)
    conj = staticmethod(oc.conj)
    norm2 = staticmethod(oc.norm2)

    @staticmethod
    def lconst(c, x):
        return oc.mul(c, x)


class _JetOps:
    @staticmethod
    def split(x: Jet):
        return x[..., :8], x[..., 8:]

    @staticmethod
    def join(a: Jet, b: Jet):
        return Jet.concat([a, b])

    mul = staticmethod(oct_mul)
    inv = staticmethod(oct_inv)
    norm2 = staticmethod(oct_norm2)

    @staticmethod
    def conj(x: Jet):
        return x * np.array([1.0, -1, -1, -1, -1, -1, -1, -1])

    @staticmethod
    def lconst(c, x: Jet):
        return x._map(lambda a: oc.mul(c, a))


def _ops(x):
    return _JetOps if isinstance(x, Jet) else _ArrayOps


def _check_pole(x2):
    v = x2.v if isinstance(x2, Jet) else x2
    if np.any(oc.norm2(v + _ONE) == 0.0):
        raise DomainError("geometry.pole", "x2 = -1 is the pole of the Cayley transform")


def cayley(x):
    """``C(x) = (sqrt2 x1 (1+x2)^{-1}, (1-x2)(1+x2)^{-1})``; its own inverse in form."""
    ops = _ops(x)
    x1, x2 = ops.split(x)
    _check_pole(x2)
    w = ops.inv(x2 + _ONE)
    return ops.join(ops.mul(x1, w) * SQRT2, ops.mul(-x2 + _ONE, w))


def cayley_inv(y):
    """Inverse Cayley transform (Siegel domain to ball); same formula as :func:`cayley`."""
    return cayley(y)


def siegel_defect(y) -> np.ndarray:
    """``2 Re y2 - |y1|^2``; positive exactly on the Siegel domain."""
    y = np.asarray(y, dtype=float)
    return 2.0 * y[..., 8] - oc.norm2(y[..., :8])


def tau(zeta, x):
    """Siegel translation ``(x1 + z1, x2 + z2 + conj(z1) x1)`` for ``zeta`` on the boundary."""
    ops = _ops(x)
    zeta = point(zeta)
    z1, z2 = zeta[:8], zeta[8:]
    x1, x2 = ops.split(x)
    return ops.join(x1 + z1, x2 + z2 + ops.lconst(oc.conj(z1), x1))


def dilate(delta: float, x):
    """``D_delta(x) = (delta x1, delta^2 x2)``."""
    ops = _ops(x)
    x1, x2 = ops.split(x)
    return ops.join(x1 * float(delta), x2 * float(delta) ** 2)


def heisenberg_mul(p, q) -> np.ndarray:
    """Group law on O x Im O: ``(x, t)(x', t') = (x + x', t + t' + 2 Im(conj(x) x'))``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    x, t = p[..., :8], p[..., 8:]
    y, s = q[..., :8], q[..., 8:]
    return np.concatenate([x + y, t + s + 2.0 * oc.im(oc.mul(oc.conj(x), y))], axis=-1)


def _check_center(a: np.ndarray, eps0: float) -> np.ndarray:
    a = point(a)
    if np.linalg.norm(a) > 1.0 - eps0:
        raise DomainError("geometry.center", f"|a| = {np.linalg.norm(a):.6g} exceeds 1 - {eps0}")
    return a


def delta_a(a, eps0: float = EPS0) -> float:
    """``|1 + a2| / (1 - |a|^2)^{1/2}``."""
    a = _check_center(a, eps0)
    return float(oc.norm(a[8:] + _ONE) / math.sqrt(1.0 - a @ a))


def zeta_a(a, eps0: float = EPS0) -> np.ndarray:
    """Boundary point with ``tau_{zeta_a}(C(a))`` on the imaginary-free axis.

    ``zeta_a = (-[C a]_1, |[C a]_1|^2 / 2 - Im [C a]_2)``.
    """
    a = _check_center(a, eps0)
    ca = cayley(a)
    c1, c2 = ca[:8], ca[8:]
    z2 = oc.im(-c2)
    z2[0] = 0.5 * oc.norm2(c1)
    return np.concatenate([-c1, z2])


def zeta_inv(zeta) -> np.ndarray:
    """Inverse boundary translation parameter ``(-z1, conj(z2))``."""
    zeta = point(zeta)
    return np.concatenate([-zeta[:8], oc.conj(zeta[8:])])


def _params(a, eps0):
    return delta_a(a, eps0), zeta_a(a, eps0)


def t_a_composed(a, x, eps0: float = EPS0):
    """``C^{-1} o D_delta o tau_zeta o C`` evaluated literally."""
    d, z = _params(a, eps0)
    return cayley_inv(dilate(d, tau(z, cayley(x))))


def g_a(a, x, eps0: float = EPS0):
    """``G_a(x) = 1 + delta^2 (C2 + zeta2 + conj(zeta1) C1)``; ``Re G_a >= 1`` on the ball."""
    d, z = _params(a, eps0)
    ops = _ops(x)
    c1, c2 = ops.split(cayley(x))
    y2 = c2 + z[8:] + ops.lconst(oc.conj(z[:8]), c1)
    return y2 * (d * d) + _ONE


def psi_a(a, x, eps0: float = EPS0):
    """``Psi_a(x) = 2 (1 + [T_a x]_2)^{-1} (1 + x2) = G_a(x) (1 + x2)``."""
    ops = _ops(x)
    _, x2 = ops.split(x)
    return ops.mul(g_a(a, x, eps0), x2 + _ONE)


def psi_a_expansion(a, x, eps0: float = EPS0) -> np.ndarray:
    """Expansion form of ``Psi_a``, finite up to and including ``x2 = -1``.

    ``(1 + d^2) + (1 - d^2) x2 + d^2 zeta2 (1 + x2) + R(x)`` with
    ``R = sqrt2 d^2 (conj(zeta1) (x1 (1 + x2)^{-1})) (1 + x2)``.
    """
    d, z = _params(a, eps0)
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., :8], x[..., 8:]
    w = x2 + _ONE
    n2 = oc.norm2(w)
    pole = n2 == 0.0
    safe = np.where(pole[..., None], _ONE, w)
    q = oc.mul(x1, oc.inv(safe))
    R = SQRT2 * d * d * oc.mul(oc.mul(oc.conj(z[:8]), q), safe)
    R = np.where(pole[..., None], 0.0, R)
    out = (1 - d * d) * x2 + d * d * oc.mul(z[8:], w) + R
    out[..., 0] += 1 + d * d
    return out


def t_a_direct(a, x, eps0: float = EPS0) -> np.ndarray:
    """``T_a`` through ``Psi_a`` (expansion form), valid on the closed ball.

    ``[T_a x]_2 = -1 + 2 (1 + x2) Psi^{-1}`` and
    ``[T_a x]_1 = sqrt2 d (C1 + zeta1) ((1 + x2) Psi^{-1})``.  The pole
    ``(0, -1)`` is fixed.
    """
    d, z = _params(a, eps0)
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., :8], x[..., 8:]
    w = x2 + _ONE
    pole = oc.norm2(w) == 0.0
    safe = np.where(pole[..., None], _ONE, w)
    psi = psi_a_expansion(a, np.where(pole[..., None], np.concatenate([np.zeros(8), -_ONE]), x), eps0)
    k = oc.mul(safe, oc.inv(psi))
    t2 = 2.0 * k
    t2[..., 0] -= 1.0
    c1 = SQRT2 * oc.mul(x1, oc.inv(safe))
    t1 = SQRT2 * d * oc.mul(c1 + z[:8], k)
    out = np.concatenate([t1, t2], axis=-1)
    if np.any(pole):
        out[pole] = np.concatenate([np.zeros(8), -_ONE])
    return out


def t_a(a, x, eps0: float = EPS0):
    """Automorphism of the unit ball with ``T_a(a) = 0``.

    Uses the literal composition away from ``x2 = -1`` and the ``Psi_a``
    expansion inside the collar ``|1 + x2| < 0.1``.  Jets always use the
    composition.
    """
    if isinstance(x, Jet):
        return t_a_composed(a, x, eps0)
    x = np.asarray(x, dtype=float)
    if np.any(np.linalg.norm(x, axis=-1) > 1.0 + 1e-12):
        raise DomainError("geometry.outside", "t_a is evaluated on the closed unit ball")
    near = oc.norm(x[..., 8:] + _ONE) < EXPANSION_COLLAR
    if not np.any(near):
        return t_a_composed(a, x, eps0)
    out = np.empty(np.broadcast_shapes(x.shape, (16,)))
    out[near] = t_a_direct(a, x[near], eps0)
    if np.any(~near):
        out[~near] = t_a_composed(a, x[~near], eps0)
    return out


def t_a_inv(a, y, eps0: float = EPS0):
    """``T_a^{-1} = C^{-1} o tau_{zeta^{-1}} o D_{1/delta} o C``."""
    d, z = _params(a, eps0)
    return cayley_inv(tau(zeta_inv(z), dilate(1.0 / d, cayley(y))))


class WeightedPullback(ScalarField):
    """``x -> |Psi_a(x)|^{-6} u(T_a x)`` or, inverted, ``|Psi_a(T_a^{-1} x)|^6 u(T_a^{-1} x)``."""

    def __init__(self, a, u: ScalarField, inverse: bool = False, eps0: float = EPS0):
        self.a = _check_center(a, eps0)
        self.u = u
        self.inverse = bool(inverse)
        self.eps0 = eps0
        self.opsh = u.opsh
        self.children = ()

    def _eval(self, x: Jet) -> Jet:
        if self.inverse:
            y = t_a_inv(self.a, x, self.eps0)
            psi = psi_a(self.a, y, self.eps0)
            weight = oct_norm2(psi).power(3.0)
            return self.u._eval(y) * weight
        psi = psi_a(self.a, x, self.eps0)
        weight = oct_norm2(psi).power(-3.0)
        return self.u._eval(t_a(self.a, x, self.eps0)) * weight

    def singular_points(self) -> list[np.ndarray]:
        out = []
        for b in self.u.singular_points():
            if np.linalg.norm(b) < 1.0:
                mapped = t_a(self.a, b[None], self.eps0) if self.inverse else t_a_inv(self.a, b[None], self.eps0)
                out.append(np.asarray(mapped)[0])
        return out

    def to_text(self) -> str:
        name = "pullback_inv" if self.inverse else "pullback"
        return f"({name} {_fmt_point(self.a)} {self.u.to_text()})"


def weighted_pullback(a, u: ScalarField, inverse: bool = False, eps0: float = EPS0) -> WeightedPullback:
    return WeightedPullback(a, u, inverse, eps0)


register("pullback", lambda a: WeightedPullback(_pt(a[0]), a[1]))
register("pullback_inv", lambda a: WeightedPullback(_pt(a[0]), a[1], inverse=True))


def second_diff_weight(a, h, x, eps0: float = EPS0) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(J, L)`` for the translated second difference.

    ``J(h, x) = |Psi_{x+h}(x+h) / Psi_x(x)|^6`` and
    ``L(a, h, x) = T_{a+h}^{-1}(T_a x)``.
    """
    a, h = point(a), point(h)
    x = np.asarray(x, dtype=float)
    num = oc.norm2(psi_a(x + h, (x + h)[None], eps0)[0])
    den = oc.norm2(psi_a(x, x[None], eps0)[0])
    J = (num / den) ** 3
    L = t_a_inv(a + h, t_a(a, x, eps0), eps0)
    return np.asarray(J), L


def shift_weight(a, h, x, eps0: float = EPS0) -> np.ndarray:
    """``J_{a,h}(x) = |Psi_{a+h}(L) / Psi_a(x)|^6`` with ``L = T_{a+h}^{-1} T_a x``."""
    a, h = point(a), point(h)
    L = t_a_inv(a + h, t_a(a, x, eps0), eps0)
    return (oc.norm2(psi_a(a + h, L, eps0)) / oc.norm2(psi_a(a, x, eps0))) ** 3


def shifted_field_values(u: ScalarField, a, h, x, eps0: float = EPS0) -> np.ndarray:
    """``U(a, h, x) = J_{a,h}(x) u(L(a, h, x))``."""
    a, h = point(a), point(h)
    L = t_a_inv(a + h, t_a(a, x, eps0), eps0)
    return shift_weight(a, h, x, eps0) * u(np.atleast_2d(L))
