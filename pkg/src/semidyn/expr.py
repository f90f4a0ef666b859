"""Expression trees for entire functions of one complex variable.

Nodes are immutable dataclasses, so trees can be shared freely across
worker processes.  Evaluation comes in two flavours: a scalar path that
raises on overflow, and a vectorised numpy path that tracks a per-element
"bad" mask instead (the grid kernel needs the latter).

Any intermediate value whose magnitude exceeds OVERFLOW_CEILING is treated
as overflow -- well below float infinity, so products can never silently
turn into NaN.
"""

from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

OVERFLOW_CEILING = 1e150


class EvalOverflow(ArithmeticError):
    """An intermediate value exceeded the overflow ceiling."""


class DegenerateAffineError(ValueError):
    """Affine map with a = 0 requested where invertibility is required."""


class IndeterminateComparison(RuntimeError):
    """Too few sample points evaluated cleanly to compare two functions."""


class ExprParseError(ValueError):
    """Malformed prefix-notation expression text."""


# ---------------------------------------------------------------------------
# nodes


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    def __call__(self, z: complex) -> complex:
        return eval_at(self, z)


@dataclass(frozen=True)
class Identity(Expr):
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: complex


@dataclass(frozen=True)
class AffineExpr(Expr):
    a: complex
    b: complex


@dataclass(frozen=True)
class Power(Expr):
    base: Expr
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("power exponent must be >= 1")


@dataclass(frozen=True)
class Exp(Expr):
    inner: Expr


@dataclass(frozen=True)
class Cos(Expr):
    inner: Expr


@dataclass(frozen=True)
class Sin(Expr):
    inner: Expr


@dataclass(frozen=True)
class Sum(Expr):
    terms: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.terms) < 2:
            raise ValueError("sum needs at least two terms")


@dataclass(frozen=True)
class Product(Expr):
    factors: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.factors) < 2:
            raise ValueError("product needs at least two factors")


@dataclass(frozen=True)
class Negate(Expr):
    inner: Expr


@dataclass(frozen=True)
class Compose(Expr):
    outer: Expr
    inner: Expr


def children(expr: Expr) -> Iterator[Expr]:
    if isinstance(expr, Power):
        yield expr.base
    elif isinstance(expr, (Exp, Cos, Sin, Negate)):
        yield expr.inner
    elif isinstance(expr, Sum):
        yield from expr.terms
    elif isinstance(expr, Product):
        yield from expr.factors
    elif isinstance(expr, Compose):
        yield expr.outer
        yield expr.inner


def is_transcendental(expr: Expr) -> bool:
    """True iff the tree contains at least one exp/cos/sin node."""
    if isinstance(expr, (Exp, Cos, Sin)):
        return True
    return any(is_transcendental(c) for c in children(expr))


# ---------------------------------------------------------------------------
# composition


def compose(outer: Expr, inner: Expr) -> Expr:
    """Structural composition (outer after inner), with identity and
    affine-on-affine folding only."""
    if isinstance(outer, Identity):
        return inner
    if isinstance(inner, Identity):
        return outer
    if isinstance(outer, AffineExpr) and isinstance(inner, AffineExpr):
        return AffineExpr(outer.a * inner.a, outer.a * inner.b + outer.b)
    return Compose(outer, inner)


def compose_power(f: Expr, n: int) -> Expr:
    """n-fold self-composition, n >= 1."""
    if n < 1:
        raise ValueError("iterate count must be >= 1")
    out = f
    for _ in range(n - 1):
        out = compose(out, f)
    return out


# ---------------------------------------------------------------------------
# evaluation


def _check(v: complex) -> complex:
    m = abs(v)
    if not math.isfinite(m) or m > OVERFLOW_CEILING:
        raise EvalOverflow(f"magnitude {m!r} exceeds ceiling")
    return v


def eval_at(expr: Expr, z: complex) -> complex:
    """Scalar evaluation; raises EvalOverflow past the ceiling."""
    if isinstance(expr, Identity):
        return _check(complex(z))
    if isinstance(expr, Const):
        return _check(expr.value)
    if isinstance(expr, AffineExpr):
        return _check(expr.a * z + expr.b)
    if isinstance(expr, Power):
        v = eval_at(expr.base, z)
        out = 1 + 0j
        for _ in range(expr.k):
            out = _check(out * v)
        return out
    if isinstance(expr, Exp):
        v = eval_at(expr.inner, z)
        if v.real > 345.0:  # exp(345) ~ 1e149
            raise EvalOverflow("exp argument too large")
        return _check(np.exp(complex(v)))
    if isinstance(expr, (Cos, Sin)):
        v = eval_at(expr.inner, z)
        if abs(v.imag) > 345.0:
            raise EvalOverflow("cos/sin argument imaginary part too large")
        fn = np.cos if isinstance(expr, Cos) else np.sin
        return _check(complex(fn(complex(v))))
    if isinstance(expr, Sum):
        out = 0 + 0j
        for t in expr.terms:
            out = _check(out + eval_at(t, z))
        return out
    if isinstance(expr, Product):
        out = 1 + 0j
        for f in expr.factors:
            out = _check(out * eval_at(f, z))
        return out
    if isinstance(expr, Negate):
        return -eval_at(expr.inner, z)
    if isinstance(expr, Compose):
        return eval_at(expr.outer, eval_at(expr.inner, z))
    raise TypeError(f"not an expression node: {expr!r}")


def eval_array(expr: Expr, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised evaluation.

    Returns (values, bad) where bad marks elements at which some
    intermediate overflowed; values are unspecified there.
    """
    bad = np.zeros(z.shape, dtype=bool)

    def rec(e: Expr, w: np.ndarray) -> np.ndarray:
        if isinstance(e, Identity):
            v = w.astype(np.complex128, copy=True)
        elif isinstance(e, Const):
            v = np.full(w.shape, complex(e.value), dtype=np.complex128)
        elif isinstance(e, AffineExpr):
            v = e.a * w + e.b
        elif isinstance(e, Power):
            b = rec(e.base, w)
            v = b.copy()
            for _ in range(e.k - 1):
                v *= b
        elif isinstance(e, Exp):
            u = rec(e.inner, w)
            over = u.real > 345.0
            bad[over] = True
            v = np.exp(np.where(over, 0.0, u))
        elif isinstance(e, (Cos, Sin)):
            u = rec(e.inner, w)
            over = np.abs(u.imag) > 345.0
            bad[over] = True
            fn = np.cos if isinstance(e, Cos) else np.sin
            v = fn(np.where(over, 0.0, u))
        elif isinstance(e, Sum):
            v = rec(e.terms[0], w).copy()
            for t in e.terms[1:]:
                v += rec(t, w)
        elif isinstance(e, Product):
            v = rec(e.factors[0], w).copy()
            for f in e.factors[1:]:
                v *= rec(f, w)
        elif isinstance(e, Negate):
            v = -rec(e.inner, w)
        elif isinstance(e, Compose):
            v = rec(e.outer, rec(e.inner, w))
        else:
            raise TypeError(f"not an expression node: {e!r}")
        with np.errstate(invalid="ignore"):
            m = np.abs(v)
        over = ~np.isfinite(m) | (m > OVERFLOW_CEILING)
        if over.any():
            bad[over] = True
            v = np.where(over, 0.0, v)
        return v

    values = rec(expr, np.asarray(z, dtype=np.complex128))
    return values, bad


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap:
    """z -> a*z + b with a != 0."""

    a: complex
    b: complex

    def __post_init__(self):
        a = complex(self.a)
        if a == 0 or not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise DegenerateAffineError(f"invalid affine coefficient a={self.a!r}")

    def __call__(self, z):
        return self.a * z + self.b

    def as_expr(self) -> AffineExpr:
        return AffineExpr(self.a, self.b)


IDENTITY_MAP = AffineMap(1 + 0j, 0j)


def affine_apply(m: AffineMap, z: complex) -> complex:
    return m.a * z + m.b


def affine_compose(m1: AffineMap, m2: AffineMap) -> AffineMap:
    """m1 after m2: (a1*a2, a1*b2 + b1)."""
    return AffineMap(m1.a * m2.a, m1.a * m2.b + m1.b)


def affine_inverse(m: AffineMap) -> AffineMap:
    return AffineMap(1 / m.a, -m.b / m.a)


def affine_distance(m1: AffineMap, m2: AffineMap) -> float:
    return abs(m1.a - m2.a) + abs(m1.b - m2.b)


# ---------------------------------------------------------------------------
# sampled numeric equality


@dataclass(frozen=True)
class SamplePlan:
    """Seeded sample points in a disk, standing in for pointwise equality
    of entire functions (functions agreeing on the disk agree everywhere)."""

    seed: int = 0
    count: int = 32
    radius: float = 2.0
    tolerance: float = 1e-9
    abs_floor: float = 1e-12
    center: complex = 0j

    def __post_init__(self):
        if self.count < 8:
            raise ValueError("sample count must be >= 8")
        if self.radius <= 0:
            raise ValueError("sample radius must be > 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


def sample_points(plan: SamplePlan, count: int | None = None) -> np.ndarray:
    """Reproducible uniform points in the plan's disk."""
    n = plan.count if count is None else count
    rng = np.random.default_rng(plan.seed)
    r = plan.radius * np.sqrt(rng.random(n))
    theta = 2 * np.pi * rng.random(n)
    return plan.center + r * np.exp(1j * theta)


@dataclass(frozen=True)
class EquivalenceReport:
    equal: bool
    max_error: float
    clean_count: int
    total_count: int


def numerically_equal(
    fexpr: Expr, gexpr: Expr, plan: SamplePlan, points: np.ndarray | None = None
) -> EquivalenceReport:
    """Compare two functions at sampled points, relative tolerance with an
    absolute floor.  Raises IndeterminateComparison when fewer than half
    the samples evaluate cleanly on both sides."""
    pts = sample_points(plan) if points is None else points
    fv, fbad = eval_array(fexpr, pts)
    gv, gbad = eval_array(gexpr, pts)
    clean = ~(fbad | gbad)
    n_clean = int(clean.sum())
    if n_clean * 2 < len(pts):
        raise IndeterminateComparison(
            f"only {n_clean}/{len(pts)} samples evaluated cleanly"
        )
    scale = np.maximum(np.abs(fv[clean]), np.abs(gv[clean]))
    scale = np.maximum(scale, plan.abs_floor / plan.tolerance)
    err = np.abs(fv[clean] - gv[clean]) / scale
    max_err = float(err.max()) if n_clean else 0.0
    return EquivalenceReport(max_err <= plan.tolerance, max_err, n_clean, len(pts))


# ---------------------------------------------------------------------------
# prefix-notation serialization


_COMPLEX_RE = _re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"(?:([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i)?$"
)


def parse_complex(text: str) -> complex:
    m = _COMPLEX_RE.match(text.strip())
    if not m:
        raise ExprParseError(f"bad complex literal {text!r}")
    re_part = float(m.group(1))
    im_part = float(m.group(2)) if m.group(2) is not None else 0.0
    return complex(re_part, im_part)


def format_complex(c: complex) -> str:
    c = complex(c)
    sign = "-" if (c.imag < 0 or (c.imag == 0 and math.copysign(1, c.imag) < 0)) else "+"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


_TOKEN_RE = _re.compile(r"\s*([(),]|[^\s(),]+)")

_FUNCS = {"const", "affine", "pow", "exp", "cos", "sin", "neg", "add", "mul", "compose"}


def _tokenize(text: str) -> list[str]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            break
        tokens.append(m.group(1))
        pos = m.end()
    if text[pos:].strip():
        raise ExprParseError(f"trailing garbage at {text[pos:]!r}")
    return tokens


def parse_expr(text: str, env: Mapping[str, Expr] | None = None) -> Expr:
    """Parse the prefix notation, e.g. ``add(exp(pow(z,2)), const(0.2+0i))``.

    ``env`` resolves bare names like ``f1`` to previously defined trees.
    """
    tokens = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ExprParseError("unexpected end of input")
        tok = tokens[pos]
        if expected is not None and tok != expected:
            raise ExprParseError(f"expected {expected!r}, got {tok!r}")
        pos += 1
        return tok

    def args() -> list[str | Expr]:
        take("(")
        out: list[str | Expr] = []
        if peek() == ")":
            take(")")
            return out
        while True:
            out.append(node())
            if peek() == ",":
                take(",")
                continue
            take(")")
            return out

    def raw_args() -> list[str]:
        # arguments taken as raw atoms (complex literals / integers)
        take("(")
        out = []
        while True:
            out.append(take())
            if peek() == ",":
                take(",")
                continue
            take(")")
            return out

    def node() -> Expr:
        tok = take()
        if tok in ("(", ")", ","):
            raise ExprParseError(f"unexpected {tok!r}")
        if tok == "z":
            return Identity()
        if tok in _FUNCS and peek() == "(":
            if tok == "const":
                (lit,) = raw_args()
                return Const(parse_complex(lit))
            if tok == "affine":
                a, b = raw_args()
                return AffineExpr(parse_complex(a), parse_complex(b))
            if tok == "pow":
                take("(")
                base = node()
                take(",")
                k = take()
                take(")")
                return Power(base, int(k))
            a = args()
            if tok == "exp":
                (inner,) = a
                return Exp(inner)
            if tok == "cos":
                (inner,) = a
                return Cos(inner)
            if tok == "sin":
                (inner,) = a
                return Sin(inner)
            if tok == "neg":
                (inner,) = a
                return Negate(inner)
            if tok == "add":
                return Sum(tuple(a))
            if tok == "mul":
                return Product(tuple(a))
            if tok == "compose":
                outer, inner = a
                return Compose(outer, inner)
        if env is not None and tok in env:
            return env[tok]
        raise ExprParseError(f"unknown name {tok!r}")

    result = node()
    if pos != len(tokens):
        raise ExprParseError(f"trailing tokens: {tokens[pos:]!r}")
    return result


def format_expr(expr: Expr) -> str:
    """Emit the prefix notation; round-trips bit-stably through parse_expr."""
    if isinstance(expr, Identity):
        return "z"
    if isinstance(expr, Const):
        return f"const({format_complex(expr.value)})"
    if isinstance(expr, AffineExpr):
        return f"affine({format_complex(expr.a)}, {format_complex(expr.b)})"
    if isinstance(expr, Power):
        return f"pow({format_expr(expr.base)}, {expr.k})"
    if isinstance(expr, Exp):
        return f"exp({format_expr(expr.inner)})"
    if isinstance(expr, Cos):
        return f"cos({format_expr(expr.inner)})"
    if isinstance(expr, Sin):
        return f"sin({format_expr(expr.inner)})"
    if isinstance(expr, Sum):
        return f"add({', '.join(format_expr(t) for t in expr.terms)})"
    if isinstance(expr, Product):
        return f"mul({', '.join(format_expr(f) for f in expr.factors)})"
    if isinstance(expr, Negate):
        return f"neg({format_expr(expr.inner)})"
    if isinstance(expr, Compose):
        return f"compose({format_expr(expr.outer)}, {format_expr(expr.inner)})"
    raise TypeError(f"not an expression node: {expr!r}")
