"""Affine commutator solving and conjugate semigroup construction.

A commutator of a pair (f, g) is the map phi with f(g(z)) = phi(g(f(z)));
here phi is restricted to invertible affine maps z -> a*z + b, which is
what every worked example needs and what keeps the solve well posed: two
sample points pin down (a, b) and the remaining samples act as an
overdetermined max-norm verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import (
    AffineMap,
    DegenerateAffineError,
    EquivalenceReport,
    Expr,
    IDENTITY_MAP,
    SamplePlan,
    affine_compose,
    affine_distance,
    affine_inverse,
    compose,
    eval_array,
    format_expr,
    is_transcendental,
    numerically_equal,
    parse_expr,
    sample_points,
)

DEDUP_TOLERANCE = 1e-9
MIN_SEPARATION = 1e-6


class NoAffineCommutatorError(ValueError):
    """No affine map satisfies f∘g = phi∘g∘f within tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DegenerateSamplesError(RuntimeError):
    """Could not find a well-separated clean pair of sample values."""


class NotNearlyRepresentableError(ValueError):
    """Some generator pairs admit no affine commutator."""

    def __init__(self, failing_pairs: list[tuple[int, int]]):
        super().__init__(f"no affine commutator for pairs {failing_pairs}")
        self.failing_pairs = failing_pairs


class ClosureOverflowError(RuntimeError):
    """Group closure exceeded its element cap."""

    def __init__(self, partial: tuple[AffineMap, ...], cap: int):
        super().__init__(f"closure exceeded cap {cap}")
        self.partial = partial
        self.cap = cap


class MissingCommutatorError(ValueError):
    """An identity check needs a bracket that could not be solved."""


# ---------------------------------------------------------------------------
# clean-point search
#
# Deep compositions of fast-growing entire maps overflow on most of any
# fixed disk.  Since entire functions agreeing on any open set agree
# everywhere, it is legitimate to compare on whatever sub-disk evaluates
# cleanly; the search below finds one deterministically (seeded draws plus
# a fixed lattice, then zooming onto the best clean candidate).


def find_clean_points(
    exprs: list[Expr], plan: SamplePlan, count: int | None = None
) -> np.ndarray:
    n = plan.count if count is None else count

    def clean_mask(pts: np.ndarray) -> np.ndarray:
        ok = np.ones(pts.shape, dtype=bool)
        for e in exprs:
            _, bad = eval_array(e, pts)
            ok &= ~bad
        return ok

    rng = np.random.default_rng(plan.seed)

    def draw(center: complex, radius: float, m: int) -> np.ndarray:
        r = radius * np.sqrt(rng.random(m))
        theta = 2 * np.pi * rng.random(m)
        return center + r * np.exp(1j * theta)

    # stage 1: the plan's own disk, growing batches, plus a fixed lattice
    side = np.linspace(-plan.radius, plan.radius, 48)
    lattice = plan.center + (side[:, None] + 1j * side[None, :]).ravel()
    lattice = lattice[np.abs(lattice - plan.center) <= plan.radius]
    pool = np.concatenate([draw(plan.center, plan.radius, 4 * n), lattice])
    for extra in (16 * n, 64 * n):
        ok = clean_mask(pool)
        if ok.sum() >= n:
            return pool[ok][:n]
        pool = np.concatenate([pool, draw(plan.center, plan.radius, extra)])
    ok = clean_mask(pool)
    if ok.sum() >= n:
        return pool[ok][:n]

    # stage 2: zoom onto clean candidates with shrinking radii
    candidates = pool[ok]
    for center in candidates[:8]:
        for shrink in (8.0, 32.0, 128.0, 512.0):
            local = draw(complex(center), plan.radius / shrink, 4 * n)
            lok = clean_mask(local)
            if lok.sum() >= n:
                return local[lok][:n]
    raise DegenerateSamplesError(
        f"no disk with {n} clean samples found for {len(exprs)} expression(s)"
    )


# ---------------------------------------------------------------------------
# commutator solving


@dataclass(frozen=True)
class CommutatorResult:
    map: AffineMap
    residual: float


def find_affine_commutator(
    f: Expr, g: Expr, plan: SamplePlan
) -> CommutatorResult:
    """Solve f∘g = phi∘g∘f for an affine phi.

    Two small-magnitude well-separated sample values pin down (a, b); all
    remaining clean samples verify the fit in max norm.  Small-magnitude
    anchors keep b free of catastrophic cancellation when the values are
    huge.
    """
    if f is g or f == g:
        return CommutatorResult(IDENTITY_MAP, 0.0)
    u_expr = compose(f, g)
    w_expr = compose(g, f)
    try:
        pts = find_clean_points([u_expr, w_expr], plan)
    except DegenerateSamplesError:
        raise
    u, _ = eval_array(u_expr, pts)
    w, _ = eval_array(w_expr, pts)

    # anchor pair: among the smallest-magnitude values, the best separated
    order = np.argsort(np.maximum(np.abs(u), np.abs(w)))
    best = None
    for m in (8, 16, len(pts)):
        idx = order[:m]
        sep = np.abs(w[idx][:, None] - w[idx][None, :])
        i, j = np.unravel_index(int(sep.argmax()), sep.shape)
        if sep[i, j] > MIN_SEPARATION:
            best = (int(idx[i]), int(idx[j]))
            break
    if best is None:
        raise DegenerateSamplesError("no well-separated pair of w-values")
    i, j = best
    a = (u[i] - u[j]) / (w[i] - w[j])
    b = u[i] - a * w[i]
    if a == 0:
        raise NoAffineCommutatorError("solved a = 0, not an affine conjugacy")

    scale = np.maximum(np.abs(u), np.abs(w))
    scale = np.maximum(scale, plan.abs_floor / plan.tolerance)
    resid = np.abs(a * w + b - u) / scale
    max_resid = float(resid.max())
    if max_resid > plan.tolerance:
        raise NoAffineCommutatorError(
            f"affine fit residual {max_resid:.3e} exceeds tolerance",
            residual=max_resid,
        )
    return CommutatorResult(AffineMap(complex(a), complex(b)), max_resid)


# ---------------------------------------------------------------------------
# presentations and tables


@dataclass(frozen=True)
class SemigroupPresentation:
    generators: tuple[Expr, ...]
    label: str = ""
    require_transcendental: bool = True

    def __post_init__(self):
        if len(self.generators) < 1:
            raise ValueError("presentation needs at least one generator")
        if self.require_transcendental:
            for k, gen in enumerate(self.generators, start=1):
                if not is_transcendental(gen):
                    raise ValueError(f"generator {k} is not transcendental")

    def __len__(self) -> int:
        return len(self.generators)

    def generator(self, index: int) -> Expr:
        """1-based access, matching word letters."""
        return self.generators[index - 1]


@dataclass(frozen=True)
class CommutatorTable:
    size: int
    entries: dict[tuple[int, int], AffineMap]
    residuals: dict[tuple[int, int], float]

    def entry(self, i: int, j: int) -> AffineMap:
        return self.entries[(i, j)]

    def maps(self) -> list[AffineMap]:
        return list(self.entries.values())

    def to_json_dict(self) -> dict:
        return {
            "size": self.size,
            "entries": [
                {
                    "i": i,
                    "j": j,
                    "a": f"{m.a.real!r},{m.a.imag!r}",
                    "b": f"{m.b.real!r},{m.b.imag!r}",
                    "residual": self.residuals[(i, j)],
                }
                for (i, j), m in sorted(self.entries.items())
            ],
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "CommutatorTable":
        entries, residuals = {}, {}
        for rec in doc["entries"]:
            key = (rec["i"], rec["j"])
            ar, ai = (float(x) for x in rec["a"].split(","))
            br, bi = (float(x) for x in rec["b"].split(","))
            entries[key] = AffineMap(complex(ar, ai), complex(br, bi))
            residuals[key] = float(rec["residual"])
        return CommutatorTable(doc["size"], entries, residuals)


def presentation_to_json_dict(S: SemigroupPresentation) -> dict:
    return {
        "label": S.label,
        "generators": [format_expr(g) for g in S.generators],
        "composition_order": "rightmost letter applied first",
    }


def presentation_from_json_dict(doc: dict, **kwargs) -> SemigroupPresentation:
    gens = tuple(parse_expr(t) for t in doc["generators"])
    return SemigroupPresentation(gens, label=doc.get("label", ""), **kwargs)


def build_commutator_table(
    S: SemigroupPresentation, plan: SamplePlan
) -> CommutatorTable:
    n = len(S)
    entries: dict[tuple[int, int], AffineMap] = {}
    residuals: dict[tuple[int, int], float] = {}
    failing: list[tuple[int, int]] = []
    for i in range(1, n + 1):
        entries[(i, i)] = IDENTITY_MAP
        residuals[(i, i)] = 0.0
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            try:
                res = find_affine_commutator(
                    S.generator(i), S.generator(j), plan
                )
            except (NoAffineCommutatorError, DegenerateSamplesError):
                failing.append((i, j))
                continue
            entries[(i, j)] = res.map
            residuals[(i, j)] = res.residual
    if failing:
        raise NotNearlyRepresentableError(failing)
    return CommutatorTable(n, entries, residuals)


@dataclass(frozen=True)
class NearAbelianReport:
    algebraic: bool
    table: CommutatorTable | None
    failing_pairs: tuple[tuple[int, int], ...] = ()
    # pre-compactness of the commutator family has no finite certificate;
    # it is carried as an assumption, never verified
    precompactness_assumed: bool = True


def is_nearly_abelian(S: SemigroupPresentation, plan: SamplePlan) -> NearAbelianReport:
    """Algebraic half of the nearly-abelian check: every generator pair
    admits an affine commutator.  Fatou-set invariance of those maps is a
    grid-level question, reported separately by the dynamics module."""
    try:
        table = build_commutator_table(S, plan)
    except NotNearlyRepresentableError as exc:
        return NearAbelianReport(False, None, tuple(exc.failing_pairs))
    return NearAbelianReport(True, table)


# ---------------------------------------------------------------------------
# the group generated by the commutators


@dataclass(frozen=True)
class AffineGroup:
    elements: tuple[AffineMap, ...]
    closed: bool

    def __len__(self) -> int:
        return len(self.elements)

    def find(self, m: AffineMap, tol: float = DEDUP_TOLERANCE) -> AffineMap | None:
        for e in self.elements:
            if affine_distance(e, m) < tol:
                return e
        return None


def group_closure(seeds: list[AffineMap], cap: int = 256) -> AffineGroup:
    """Breadth-first closure of the seeds under composition and inverse,
    deduplicating maps whose coefficients agree within DEDUP_TOLERANCE."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    elements: list[AffineMap] = [IDENTITY_MAP]

    def add(m: AffineMap) -> bool:
        for e in elements:
            if affine_distance(e, m) < DEDUP_TOLERANCE:
                return False
        if len(elements) >= cap:
            raise ClosureOverflowError(tuple(elements), cap)
        elements.append(m)
        return True

    frontier = []
    for s in seeds:
        if add(s):
            frontier.append(s)
    while frontier:
        next_frontier = []
        for m in frontier:
            for candidate in [affine_inverse(m)] + [
                affine_compose(m, e) for e in list(elements)
            ] + [affine_compose(e, m) for e in list(elements)]:
                if add(candidate):
                    next_frontier.append(candidate)
        frontier = next_frontier
    return AffineGroup(tuple(elements), closed=True)


# ---------------------------------------------------------------------------
# section-2 identity verification


@dataclass(frozen=True)
class IdentityReport:
    which: str
    holds: bool
    residual: float


def _bracket(f: Expr, g: Expr, plan: SamplePlan) -> AffineMap:
    try:
        return find_affine_commutator(f, g, plan).map
    except (NoAffineCommutatorError, DegenerateSamplesError) as exc:
        raise MissingCommutatorError(f"bracket could not be solved: {exc}") from exc


def _compare(lhs: Expr, rhs: Expr, plan: SamplePlan) -> tuple[bool, float]:
    pts = find_clean_points([lhs, rhs], plan)
    rep = numerically_equal(lhs, rhs, plan, points=pts)
    return rep.equal, rep.max_error


def verify_identity(
    which: str | int,
    f: Expr,
    g: Expr,
    n: int = 1,
    plan: SamplePlan = SamplePlan(),
) -> IdentityReport:
    """Check one of the commutator identities:

    1: [f, g∘f^n] = [f, g]
    2: [f, f^n∘g] ∘ f^n = f^n ∘ [f, g]
    3: [f∘g, g∘f] ∘ g∘f = f∘g ∘ [g, f]
    inverse:  [f, g] ∘ [g, f] = identity
    diagonal: [f, f] = identity
    """
    which = str(which)
    if which in ("1", "2") and not 1 <= n <= 3:
        raise ValueError("n must be in 1..3")

    if which == "diagonal":
        m = _bracket(f, f, plan)
        resid = affine_distance(m, IDENTITY_MAP)
        return IdentityReport("diagonal", resid <= plan.tolerance, resid)

    if which == "inverse":
        fg = _bracket(f, g, plan)
        gf = _bracket(g, f, plan)
        resid = affine_distance(affine_compose(fg, gf), IDENTITY_MAP)
        return IdentityReport("inverse", resid <= plan.tolerance, resid)

    if which == "1":
        from .expr import compose_power

        lhs_map = _bracket(f, compose(g, compose_power(f, n)), plan)
        rhs_map = _bracket(f, g, plan)
        resid = affine_distance(lhs_map, rhs_map)
        return IdentityReport("1", resid <= plan.tolerance, resid)

    if which == "2":
        from .expr import compose_power

        fn = compose_power(f, n)
        lhs = compose(_bracket(f, compose(fn, g), plan).as_expr(), fn)
        rhs = compose(fn, _bracket(f, g, plan).as_expr())
        holds, resid = _compare(lhs, rhs, plan)
        return IdentityReport("2", holds, resid)

    if which == "3":
        fg = compose(f, g)
        gf = compose(g, f)
        lhs = compose(_bracket(fg, gf, plan).as_expr(), gf)
        rhs = compose(fg, _bracket(g, f, plan).as_expr())
        holds, resid = _compare(lhs, rhs, plan)
        return IdentityReport("3", holds, resid)

    raise ValueError(f"unknown identity {which!r}")


# ---------------------------------------------------------------------------
# conjugation


def conjugate_semigroup(
    S: SemigroupPresentation, phi: AffineMap
) -> SemigroupPresentation:
    """Generators phi ∘ f_i ∘ phi^{-1}."""
    inv = affine_inverse(phi)
    gens = tuple(
        compose(phi.as_expr(), compose(gen, inv.as_expr()))
        for gen in S.generators
    )
    label = f"conjugate({S.label or 'S'}, a={phi.a!r}, b={phi.b!r})"
    return SemigroupPresentation(
        gens, label=label, require_transcendental=S.require_transcendental
    )
