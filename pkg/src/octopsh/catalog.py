"""Scalar fields on O^2 = R^16 as small expression trees.

Every field evaluates on points of shape ``(n, 16)`` (values) or on a
:class:`~octopsh.jets.Jet` (exact derivatives).  Fields are serialisable to a
compact s-expression form and parsed back with :func:`parse_field`::

    (fundamental 0)
    (fundamental_eps [0.3] 0.01)
    (add (sqnorm) (scale 2 0 (coord 8)))

A point argument is ``0`` (the origin) or a bracketed comma list of up to 16
numbers, padded with zeros.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Sequence

import numpy as np

from octopsh.errors import ContractError, DomainError
from octopsh.jets import DIM, Jet

__all__ = [
    "ScalarField",
    "Const",
    "Affine",
    "SqDist",
    "Power",
    "PosPower",
    "Sum",
    "Product",
    "Scaled",
    "SmoothMax",
    "MaxOf",
    "LogSumExp",
    "ExtremalBall",
    "Named",
    "point",
    "const",
    "coord",
    "affine",
    "sq_norm",
    "fundamental",
    "fundamental_eps",
    "extremal_ball",
    "barrier",
    "shell_pusher",
    "quadratic_pusher",
    "defining_rho",
    "bump",
    "smooth_max",
    "max_of",
    "parse_field",
    "register",
]


def point(a=0) -> np.ndarray:
    """Coerce to a 16-vector; scalars and short lists are zero-padded."""
    if isinstance(a, (int, float)) and a == 0:
        return np.zeros(DIM)
    arr = np.atleast_1d(np.asarray(a, dtype=float)).ravel()
    if arr.size > DIM:
        raise DomainError("catalog.point", f"point has {arr.size} > 16 coordinates")
    out = np.zeros(DIM)
    out[: arr.size] = arr
    return out


def _fmt_num(x: float) -> str:
    x = float(x)
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_point(a: np.ndarray) -> str:
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        return "0"
    nz = int(np.max(np.nonzero(a)[0])) + 1
    return "[" + ",".join(_fmt_num(v) for v in a[:nz]) + "]"


def _as_jet(X, order: int) -> Jet:
    if isinstance(X, Jet):
        return X
    return Jet.variables(np.atleast_2d(np.asarray(X, dtype=float)), order=order)


class ScalarField:
    """Base class.  Subclasses implement :meth:`_eval` and :meth:`to_text`."""

    opsh: bool = False
    singular: tuple[np.ndarray, ...] = ()
    children: tuple["ScalarField", ...] = ()

    def _eval(self, x: Jet) -> Jet:  # pragma: no cover - abstract
        raise NotImplementedError

    def to_text(self) -> str:  # pragma: no cover - abstract
        raise NotImplementedError

    def jet(self, X, order: int = 2) -> Jet:
        """Jet of the field at points ``X`` (or at an input jet)."""
        return self._eval(_as_jet(X, order))

    def __call__(self, X) -> np.ndarray:
        return self.jet(X, order=0).v

    def singular_points(self) -> list[np.ndarray]:
        pts = list(self.singular)
        for c in self.children:
            pts.extend(c.singular_points())
        return pts

    def regularized(self, eps: float) -> "ScalarField | None":
        """Smooth ``eps``-regularisation when one is known, else ``None``."""
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.to_text()}>"

    def __eq__(self, other) -> bool:
        return isinstance(other, ScalarField) and self.to_text() == other.to_text()

    def __hash__(self) -> int:
        return hash(self.to_text())

    def __add__(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            return Sum(self, other)
        return Scaled(self, 1.0, float(other))

    __radd__ = __add__

    def __neg__(self) -> "ScalarField":
        return Scaled(self, -1.0, 0.0)

    def __sub__(self, other) -> "ScalarField":
        return self + (-other if isinstance(other, ScalarField) else -float(other))

    def __mul__(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            return Product(self, other)
        return Scaled(self, float(other), 0.0)

    __rmul__ = __mul__


class Const(ScalarField):
    opsh = True

    def __init__(self, c: float):
        self.c = float(c)

    def _eval(self, x: Jet) -> Jet:
        return Jet(np.full(x.v.shape[:-1], self.c), order=x.order)

    def to_text(self) -> str:
        return f"(const {_fmt_num(self.c)})"


class Affine(ScalarField):
    """``w . x + c`` with the real inner product on R^16."""

    opsh = True

    def __init__(self, w, c: float = 0.0):
        self.w = point(w)
        self.c = float(c)

    def _eval(self, x: Jet) -> Jet:
        if x.identity:
            n = x.v.shape[0]
            g = np.broadcast_to(self.w[:, None], (DIM, n)) if x.order >= 1 else None
            return Jet(x.v @ self.w + self.c, g, order=x.order)
        return (x * self.w).sum(-1) + self.c

    def to_text(self) -> str:
        return f"(affine {_fmt_point(self.w)} {_fmt_num(self.c)})"


class SqDist(ScalarField):
    """``|x - a|^2``."""

    opsh = True

    def __init__(self, a=0):
        self.a = point(a)

    def _eval(self, x: Jet) -> Jet:
        if x.identity:
            d = x.v - self.a
            n = d.shape[0]
            g = 2.0 * d.T if x.order >= 1 else None
            h = np.broadcast_to((2.0 * np.eye(DIM))[:, :, None], (DIM, DIM, n)) if x.order >= 2 else None
            return Jet(np.einsum("ij,ij->i", d, d), g, h, None, order=x.order)
        d = x - self.a
        return (d * d).sum(-1)

    def to_text(self) -> str:
        if not np.any(self.a):
            return "(sqnorm)"
        return f"(sqdist {_fmt_point(self.a)})"


class Power(ScalarField):
    def __init__(self, f: ScalarField, p: float):
        self.f, self.p = f, float(p)
        self.children = (f,)

    def _eval(self, x: Jet) -> Jet:
        return self.f._eval(x).power(self.p)

    def to_text(self) -> str:
        return f"(pow {_fmt_num(self.p)} {self.f.to_text()})"


class PosPower(ScalarField):
    """``max(f, 0)^k``."""

    def __init__(self, f: ScalarField, k: int):
        self.f, self.k = f, int(k)
        self.children = (f,)

    def _eval(self, x: Jet) -> Jet:
        return self.f._eval(x).pos_power(self.k)

    def to_text(self) -> str:
        return f"(pospow {self.k} {self.f.to_text()})"


class Sum(ScalarField):
    def __init__(self, f: ScalarField, g: ScalarField):
        self.f, self.g = f, g
        self.children = (f, g)
        self.opsh = f.opsh and g.opsh

    def _eval(self, x: Jet) -> Jet:
        return self.f._eval(x) + self.g._eval(x)

    def to_text(self) -> str:
        return f"(add {self.f.to_text()} {self.g.to_text()})"


class Product(ScalarField):
    def __init__(self, f: ScalarField, g: ScalarField):
        self.f, self.g = f, g
        self.children = (f, g)

    def _eval(self, x: Jet) -> Jet:
        return self.f._eval(x) * self.g._eval(x)

    def to_text(self) -> str:
        return f"(mul {self.f.to_text()} {self.g.to_text()})"


class Scaled(ScalarField):
    """``s f + c``."""

    def __init__(self, f: ScalarField, s: float, c: float = 0.0):
        self.f, self.s, self.c = f, float(s), float(c)
        self.children = (f,)
        self.opsh = f.opsh and self.s >= 0

    def _eval(self, x: Jet) -> Jet:
        return self.f._eval(x) * self.s + self.c

    def to_text(self) -> str:
        return f"(scale {_fmt_num(self.s)} {_fmt_num(self.c)} {self.f.to_text()})"


def _smooth_max_jet(a: Jet, b: Jet, delta: float) -> Jet:
    if delta == 0.0:
        return Jet.where(a.v >= b.v, a, b)
    d = a - b
    return (a + b + (d * d + delta * delta).sqrt()) * 0.5


class SmoothMax(ScalarField):
    """``(f + g + sqrt((f - g)^2 + delta^2)) / 2``; exact max when ``delta = 0``."""

    def __init__(self, f: ScalarField, g: ScalarField, delta: float):
        if delta < 0:
            raise DomainError("catalog.delta", "smoothing parameter must be >= 0")
        self.f, self.g, self.delta = f, g, float(delta)
        self.children = (f, g)
        self.opsh = f.opsh and g.opsh

    def _eval(self, x: Jet) -> Jet:
        return _smooth_max_jet(self.f._eval(x), self.g._eval(x), self.delta)

    def to_text(self) -> str:
        return f"(smax {_fmt_num(self.delta)} {self.f.to_text()} {self.g.to_text()})"


class MaxOf(ScalarField):
    """Pointwise maximum of finitely many fields (piecewise jets)."""

    def __init__(self, fields: Sequence[ScalarField]):
        if not fields:
            raise ContractError("catalog.empty", "max of an empty family")
        self.fields = tuple(fields)
        self.children = self.fields
        self.opsh = all(f.opsh for f in self.fields)

    def _eval(self, x: Jet) -> Jet:
        best = self.fields[0]._eval(x)
        for f in self.fields[1:]:
            j = f._eval(x)
            best = Jet.where(j.v > best.v, j, best)
        return best

    def to_text(self) -> str:
        return "(max " + " ".join(f.to_text() for f in self.fields) + ")"


class LogSumExp(ScalarField):
    """``log(sum_j exp(beta f_j)) / beta - shift``.

    With ``shift = log(m) / beta`` this lies between ``max_j f_j - log(m)/beta``
    and ``max_j f_j``.
    """

    def __init__(self, fields: Sequence[ScalarField], beta: float, shift: float | None = None):
        if beta <= 0:
            raise DomainError("catalog.beta", "beta must be positive")
        self.fields = tuple(fields)
        self.beta = float(beta)
        self.shift = math.log(len(self.fields)) / self.beta if shift is None else float(shift)
        self.children = self.fields
        self.opsh = all(f.opsh for f in self.fields)

    def _eval(self, x: Jet) -> Jet:
        jets = [f._eval(x) for f in self.fields]
        m = np.max(np.stack([j.v for j in jets]), axis=0)
        acc = None
        for j in jets:
            e = ((j - m) * self.beta).exp()
            acc = e if acc is None else acc + e
        return acc.log() * (1.0 / self.beta) + (m - self.shift)

    def to_text(self) -> str:
        body = " ".join(f.to_text() for f in self.fields)
        return f"(lse {_fmt_num(self.beta)} {_fmt_num(self.shift)} {body})"


class ExtremalBall(ScalarField):
    """Relative extremal function of ``B(a, r)`` in ``B(a, R)``, smoothed by ``delta``.

    ``max{(R^-6 - |x-a|^-6) / (r^-6 - R^-6), -1}``; the inner branch is the
    rescaled fundamental solution.
    """

    opsh = True

    def __init__(self, a, r: float, R: float, delta: float = 0.0):
        if not 0 < r < R:
            raise DomainError("catalog.radii", f"need 0 < r < R, got r={r}, R={R}")
        if delta < 0:
            raise DomainError("catalog.delta", "smoothing parameter must be >= 0")
        self.a, self.r, self.R, self.delta = point(a), float(r), float(R), float(delta)

    def inner(self) -> ScalarField:
        c = self.r**-6 - self.R**-6
        return Scaled(Power(SqDist(self.a), -3.0), -1.0 / c, self.R**-6 / c)

    def _eval(self, x: Jet) -> Jet:
        s = SqDist(self.a)._eval(x)
        c = self.r**-6 - self.R**-6
        tiny = s.v < (1e-3 * self.r) ** 2
        if np.any(tiny):
            # deep inside the plateau the inner branch is irrelevant
            s = Jet.where(tiny, s.like(self.r**2), s)
        g = s.power(-3.0) * (-1.0 / c) + self.R**-6 / c
        lo = g.like(-1.0)
        out = _smooth_max_jet(g, lo, self.delta)
        if np.any(tiny):
            out = Jet.where(tiny, lo, out)
        return out

    def to_text(self) -> str:
        return (
            f"(extremal_ball {_fmt_point(self.a)} {_fmt_num(self.r)} "
            f"{_fmt_num(self.R)} {_fmt_num(self.delta)})"
        )


class Named(ScalarField):
    """A constructor-level alias that serialises under its own name."""

    def __init__(self, text: str, inner: ScalarField, opsh: bool | None = None, singular=(), regular=None):
        self.text = text
        self.inner = inner
        self.children = (inner,)
        self.opsh = inner.opsh if opsh is None else opsh
        self.singular = tuple(singular)
        self.regular = regular

    def _eval(self, x: Jet) -> Jet:
        return self.inner._eval(x)

    def to_text(self) -> str:
        return self.text

    def singular_points(self) -> list[np.ndarray]:
        return list(self.singular)

    def regularized(self, eps: float) -> ScalarField | None:
        return None if self.regular is None else self.regular(eps)


# constructors ------------------------------------------------------------------

def const(c: float) -> ScalarField:
    return Const(c)


def coord(k: int) -> ScalarField:
    """The real coordinate ``x_k``, ``k = 8 (alpha - 1) + p``."""
    if not 0 <= k < DIM:
        raise DomainError("catalog.coord", f"coordinate index {k} out of range")
    w = np.zeros(DIM)
    w[k] = 1.0
    return Named(f"(coord {k})", Affine(w, 0.0))


def affine(w, c: float = 0.0) -> ScalarField:
    return Affine(w, c)


def sq_norm() -> ScalarField:
    return SqDist(0)


def fundamental(a=0) -> ScalarField:
    """``-|x - a|^-6``; OPSH with vanishing Monge-Ampere density off ``a``."""
    a = point(a)
    return Named(f"(fundamental {_fmt_point(a)})", Scaled(Power(SqDist(a), -3.0), -1.0), opsh=True, singular=(a,),
                 regular=lambda eps: fundamental_eps(a, eps))


def fundamental_eps(a=0, eps: float = 1e-2) -> ScalarField:
    """``-(|x - a|^2 + eps)^-3``; smooth OPSH regularisation."""
    if eps <= 0:
        raise DomainError("catalog.eps", "eps must be positive")
    a = point(a)
    inner = Scaled(Power(Scaled(SqDist(a), 1.0, eps), -3.0), -1.0)
    return Named(f"(fundamental_eps {_fmt_point(a)} {_fmt_num(eps)})", inner, opsh=True)


def extremal_ball(a=0, r: float = 0.5, R: float = 1.0, delta: float = 0.0) -> ScalarField:
    return ExtremalBall(a, r, R, delta)


def barrier(x0, phi0: float, grad, C: float) -> ScalarField:
    """``phi0 + grad . (x - x0) - 2 C (1 - x . x0)`` (affine in x)."""
    x0, grad = point(x0), point(grad)
    if C < 0:
        raise ContractError("catalog.barrier", "barrier constant must be >= 0")
    w = grad + 2.0 * C * x0
    c = float(phi0) - float(grad @ x0) - 2.0 * C
    text = f"(barrier {_fmt_point(x0)} {_fmt_num(phi0)} {_fmt_point(grad)} {_fmt_num(C)})"
    return Named(text, Affine(w, c), opsh=True)


def shell_pusher() -> ScalarField:
    """``9 (|x|^2 - 5/9)``; equals 4 on the unit sphere."""
    return Named("(shell_pusher)", Scaled(SqDist(0), 9.0, -5.0), opsh=True)


def quadratic_pusher() -> ScalarField:
    """``2 (|x|^2 - 3/4)``."""
    return Named("(quadratic_pusher)", Scaled(SqDist(0), 2.0, -1.5), opsh=True)


def defining_rho() -> ScalarField:
    """``(|x|^2 - 1) / 2``; defining function of the unit ball, ``|grad| = 1`` on the sphere."""
    return Named("(defining_rho)", Scaled(SqDist(0), 0.5, -0.5), opsh=True)


def bump(c=0, r: float = 0.5) -> ScalarField:
    """``max(1 - |x - c|^2 / r^2, 0)^4``: C^3, supported in ``B(c, r)``."""
    c = point(c)
    inner = PosPower(Scaled(SqDist(c), -1.0 / r**2, 1.0), 4)
    return Named(f"(bump {_fmt_point(c)} {_fmt_num(r)})", inner, opsh=False)


def smooth_max(f: ScalarField, g: ScalarField, delta: float) -> ScalarField:
    return SmoothMax(f, g, delta)


def max_of(fields: Sequence[ScalarField]) -> ScalarField:
    return MaxOf(fields)


# parsing -----------------------------------------------------------------------

_TOKEN = re.compile(r"\(|\)|\[[^\]]*\]|[^\s()]+")

Builder = Callable[[list], ScalarField]
_REGISTRY: dict[str, Builder] = {}


def register(name: str, builder: Builder) -> None:
    _REGISTRY[name] = builder


def _num(tok) -> float:
    if isinstance(tok, ScalarField):
        raise ContractError("catalog.parse", "expected a number, got a field")
    return float(tok)


def _pt(tok) -> np.ndarray:
    if isinstance(tok, ScalarField):
        raise ContractError("catalog.parse", "expected a point, got a field")
    if tok.startswith("["):
        body = tok[1:-1].strip()
        vals = [float(v) for v in body.split(",") if v.strip()] if body else []
        return point(vals) if vals else np.zeros(DIM)
    return point(float(tok))


def _fields(args) -> list[ScalarField]:
    if not all(isinstance(a, ScalarField) for a in args):
        raise ContractError("catalog.parse", "expected field arguments")
    return list(args)


for _name, _builder in {
    "const": lambda a: const(_num(a[0])),
    "coord": lambda a: coord(int(_num(a[0]))),
    "affine": lambda a: affine(_pt(a[0]), _num(a[1]) if len(a) > 1 else 0.0),
    "sqnorm": lambda a: sq_norm(),
    "sqdist": lambda a: SqDist(_pt(a[0])),
    "fundamental": lambda a: fundamental(_pt(a[0]) if a else 0),
    "fundamental_eps": lambda a: fundamental_eps(_pt(a[0]), _num(a[1])),
    "extremal_ball": lambda a: extremal_ball(_pt(a[0]), _num(a[1]), _num(a[2]), _num(a[3]) if len(a) > 3 else 0.0),
    "barrier": lambda a: barrier(_pt(a[0]), _num(a[1]), _pt(a[2]), _num(a[3])),
    "shell_pusher": lambda a: shell_pusher(),
    "quadratic_pusher": lambda a: quadratic_pusher(),
    "defining_rho": lambda a: defining_rho(),
    "bump": lambda a: bump(_pt(a[0]), _num(a[1])),
    "add": lambda a: Sum(*_fields(a)),
    "mul": lambda a: Product(*_fields(a)),
    "scale": lambda a: Scaled(_fields(a[2:])[0], _num(a[0]), _num(a[1])),
    "pow": lambda a: Power(_fields(a[1:])[0], _num(a[0])),
    "pospow": lambda a: PosPower(_fields(a[1:])[0], int(_num(a[0]))),
    "smax": lambda a: SmoothMax(*_fields(a[1:]), _num(a[0])),
    "max": lambda a: MaxOf(_fields(a)),
    "lse": lambda a: LogSumExp(_fields(a[2:]), _num(a[0]), _num(a[1])),
}.items():
    register(_name, _builder)


def _parse_tokens(tokens: list[str], pos: int):
    tok = tokens[pos]
    if tok != "(":
        return tok, pos + 1
    if pos + 1 >= len(tokens):
        raise ContractError("catalog.parse", "unexpected end of input")
    name = tokens[pos + 1]
    pos += 2
    args = []
    while pos < len(tokens) and tokens[pos] != ")":
        arg, pos = _parse_tokens(tokens, pos)
        args.append(arg)
    if pos >= len(tokens):
        raise ContractError("catalog.parse", "missing closing parenthesis")
    if name not in _REGISTRY and name in ("pullback", "pullback_inv"):
        import octopsh.geometry  # noqa: F401  registers the pullback forms
    if name not in _REGISTRY:
        raise ContractError("catalog.parse", f"unknown field constructor {name!r}")
    try:
        return _REGISTRY[name](args), pos + 1
    except (IndexError, TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ContractError("catalog.parse", f"bad arguments for {name!r}: {exc}") from exc


def parse_field(text: str) -> ScalarField:
    """Parse the s-expression form; outer parentheses are optional."""
    text = text.strip()
    if not text.startswith("("):
        text = f"({text})"
    tokens = _TOKEN.findall(text)
    field, pos = _parse_tokens(tokens, 0)
    if pos != len(tokens) or not isinstance(field, ScalarField):
        raise ContractError("catalog.parse", f"could not parse field {text!r}")
    return field
