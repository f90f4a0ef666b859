"""Escape-time classification of complex-plane grids.

Each cell center is iterated under a map; a cell escapes when its iterate
leaves the escape disk (or overflows -- for rapidly growing entire maps
overflow is indistinguishable from divergence), is bounded when it returns
within 1e-6 of an iterate seen in a sliding 16-step window, and is
otherwise undecided at the iteration budget.

The kernel is vectorised over the active cells only and parallelises over
row bands; per-cell results depend on nothing but the cell center, so the
assembled grid is bitwise identical for any worker count.
"""

from __future__ import annotations

import csv
import multiprocessing as mp
import os
from dataclasses import dataclass, replace
from itertools import product as iter_product

import numpy as np
from scipy.ndimage import binary_dilation

from .commutator import SemigroupPresentation
from .expr import AffineMap, Expr, affine_inverse, compose, eval_array, format_expr

STATUS_UNDECIDED = 0
STATUS_BOUNDED = 1
STATUS_ESCAPING = 2

STATUS_NAMES = {
    STATUS_UNDECIDED: "undecided",
    STATUS_BOUNDED: "bounded",
    STATUS_ESCAPING: "escaping",
}

CYCLE_WINDOW = 16
CYCLE_TOLERANCE = 1e-6
WORD_BUDGET = 4096


class WordBudgetExceededError(RuntimeError):
    """Too many semigroup words for the enumeration budget."""


class SpecMismatchError(ValueError):
    """Grids with different specs cannot be compared."""


@dataclass(frozen=True)
class GridSpec:
    center: complex = 0j
    width: float = 4.0
    height: float = 4.0
    cols: int = 512
    rows: int = 512
    max_iter: int = 100
    escape_radius: float = 50.0
    word_depth: int = 2

    def __post_init__(self):
        if self.cols < 2 or self.rows < 2:
            raise ValueError("grid must be at least 2x2")
        if self.escape_radius <= 1:
            raise ValueError("escape radius must be > 1")
        if self.max_iter < 1 or self.word_depth < 1:
            raise ValueError("max_iter and word_depth must be >= 1")

    def cell_centers(self, row0: int = 0, row1: int | None = None) -> np.ndarray:
        """Complex coordinates of cell centers for rows [row0, row1);
        row 0 is the top of the window (largest imaginary part)."""
        row1 = self.rows if row1 is None else row1
        dx = self.width / self.cols
        dy = self.height / self.rows
        x = self.center.real - self.width / 2 + (np.arange(self.cols) + 0.5) * dx
        y = self.center.imag + self.height / 2 - (np.arange(row0, row1) + 0.5) * dy
        return x[None, :] + 1j * y[:, None]

    def to_json_dict(self) -> dict:
        return {
            "center": f"{self.center.real!r},{self.center.imag!r}",
            "width": self.width,
            "height": self.height,
            "cols": self.cols,
            "rows": self.rows,
            "max_iter": self.max_iter,
            "escape_radius": self.escape_radius,
            "word_depth": self.word_depth,
        }


@dataclass(frozen=True)
class ClassificationGrid:
    spec: GridSpec
    status: np.ndarray  # uint8, rows x cols
    escape_iter: np.ndarray  # int32, rows x cols, -1 where not escaping
    subject: str

    def counts(self) -> dict[str, int]:
        return {
            name: int((self.status == code).sum())
            for code, name in STATUS_NAMES.items()
        }


# ---------------------------------------------------------------------------
# kernel


def _classify_band(f: Expr, spec: GridSpec, row0: int, row1: int):
    z0 = spec.cell_centers(row0, row1).ravel()
    n = z0.size
    status = np.zeros(n, dtype=np.uint8)
    esc = np.full(n, -1, dtype=np.int32)

    immediate = np.abs(z0) > spec.escape_radius
    status[immediate] = STATUS_ESCAPING
    esc[immediate] = 0

    active = np.nonzero(~immediate)[0]
    z = z0[active]
    hist = np.empty((CYCLE_WINDOW, active.size), dtype=np.complex128)
    hist_len = 0  # slots 0..hist_len-1 valid, slot (k-1) % CYCLE_WINDOW newest
    hist[0] = z
    hist_len = 1

    for k in range(1, spec.max_iter + 1):
        if active.size == 0:
            break
        z, bad = eval_array(f, z)
        mag = np.abs(z)
        escaped = bad | (mag > spec.escape_radius)

        bounded = np.zeros(z.shape, dtype=bool)
        live = ~escaped
        if live.any() and hist_len > 0:
            d = np.abs(hist[:hist_len, :] - z[None, :])
            bounded = live & (d.min(axis=0) < CYCLE_TOLERANCE)

        status[active[escaped]] = STATUS_ESCAPING
        esc[active[escaped]] = k
        status[active[bounded]] = STATUS_BOUNDED

        keep = ~(escaped | bounded)
        if not keep.all():
            active = active[keep]
            z = z[keep]
            hist = hist[:, keep]
        slot = k % CYCLE_WINDOW
        hist[slot] = z
        hist_len = min(hist_len + 1, CYCLE_WINDOW)

    rows = row1 - row0
    return status.reshape(rows, spec.cols), esc.reshape(rows, spec.cols)


def _band_worker(args):
    f, spec, row0, row1 = args
    return _classify_band(f, spec, row0, row1)


def resolve_workers(workers: int | None = None) -> int:
    """0 or None means auto; SEMIDYN_THREADS caps the result (0 = auto)."""
    auto = os.cpu_count() or 1
    if not workers:
        workers = auto
    env = os.environ.get("SEMIDYN_THREADS")
    if env is not None:
        cap = int(env)
        if cap > 0:
            workers = min(workers, cap)
    return max(1, workers)


def classify_map(
    f: Expr, spec: GridSpec, workers: int = 1, subject: str | None = None
) -> ClassificationGrid:
    workers = resolve_workers(workers)
    subject = subject if subject is not None else f"map:{format_expr(f)}"
    if workers == 1 or spec.rows < 2 * workers:
        status, esc = _classify_band(f, spec, 0, spec.rows)
        return ClassificationGrid(spec, status, esc, subject)

    bounds = np.linspace(0, spec.rows, 4 * workers + 1).astype(int)
    jobs = [
        (f, spec, int(bounds[i]), int(bounds[i + 1]))
        for i in range(len(bounds) - 1)
        if bounds[i] < bounds[i + 1]
    ]
    ctx = mp.get_context("fork")
    with ctx.Pool(workers) as pool:
        parts = pool.map(_band_worker, jobs)
    status = np.vstack([p[0] for p in parts])
    esc = np.vstack([p[1] for p in parts])
    return ClassificationGrid(spec, status, esc, subject)


def enumerate_words(n_generators: int, word_depth: int) -> list[tuple[int, ...]]:
    if n_generators**word_depth > WORD_BUDGET:
        raise WordBudgetExceededError(
            f"{n_generators}^{word_depth} words exceeds budget {WORD_BUDGET}"
        )
    words = []
    for d in range(1, word_depth + 1):
        words.extend(iter_product(range(1, n_generators + 1), repeat=d))
    return words


def classify_semigroup(
    S: SemigroupPresentation, spec: GridSpec, workers: int = 1
) -> ClassificationGrid:
    """Escaping iff escaping under every word up to word_depth (each word
    iterated as a unit map); bounded if bounded under at least one."""
    words = enumerate_words(len(S), spec.word_depth)
    escaping_all = None
    bounded_any = None
    esc_iter = None
    for w in words:
        expr = S.generator(w[-1])
        for i in reversed(w[:-1]):
            expr = compose(S.generator(i), expr)
        g = classify_map(expr, spec, workers=workers)
        is_esc = g.status == STATUS_ESCAPING
        if escaping_all is None:
            escaping_all = is_esc
            bounded_any = g.status == STATUS_BOUNDED
            esc_iter = g.escape_iter.copy()
        else:
            escaping_all &= is_esc
            bounded_any |= g.status == STATUS_BOUNDED
            esc_iter = np.maximum(esc_iter, g.escape_iter)
    status = np.zeros((spec.rows, spec.cols), dtype=np.uint8)
    status[bounded_any] = STATUS_BOUNDED
    status[escaping_all] = STATUS_ESCAPING
    esc = np.where(escaping_all, esc_iter, -1).astype(np.int32)
    subject = f"semigroup:{S.label or 'S'};words<=%d" % spec.word_depth
    return ClassificationGrid(spec, status, esc, subject)


# ---------------------------------------------------------------------------
# boundary extraction and transport


def extract_julia_boundary(grid: ClassificationGrid) -> np.ndarray:
    """Cells whose 4-neighborhood (including the cell) contains both
    escaping and non-escaping cells; approximates the Julia set as the
    boundary of the escaping set."""
    esc = grid.status == STATUS_ESCAPING
    struct = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    near_esc = binary_dilation(esc, structure=struct)
    near_nonesc = binary_dilation(~esc, structure=struct)
    return near_esc & near_nonesc


def fatou_mask(grid: ClassificationGrid) -> np.ndarray:
    """Complement of the Julia boundary mask."""
    return ~extract_julia_boundary(grid)


def _source_indices(
    source: GridSpec, phi_inv: AffineMap, target: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """For each target cell center w, the (row, col) of the source cell
    containing phi_inv(w), plus a validity mask."""
    w = target.cell_centers()
    z = phi_inv.a * w + phi_inv.b
    dx = source.width / source.cols
    dy = source.height / source.rows
    xmin = source.center.real - source.width / 2
    ymax = source.center.imag + source.height / 2
    col = np.floor((z.real - xmin) / dx).astype(np.int64)
    row = np.floor((ymax - z.imag) / dy).astype(np.int64)
    valid = (col >= 0) & (col < source.cols) & (row >= 0) & (row < source.rows)
    return row, col, valid


def map_classification(
    grid: ClassificationGrid, phi: AffineMap, target: GridSpec
) -> ClassificationGrid:
    """Transport a classification by an affine map: target cell takes the
    status of the source cell containing phi^{-1}(center); cells mapping
    outside the source window become undecided."""
    inv = affine_inverse(phi)
    row, col, valid = _source_indices(grid.spec, inv, target)
    status = np.zeros((target.rows, target.cols), dtype=np.uint8)
    esc = np.full((target.rows, target.cols), -1, dtype=np.int32)
    rr, cc = row[valid], col[valid]
    status[valid] = grid.status[rr, cc]
    esc[valid] = grid.escape_iter[rr, cc]
    subject = f"transported({grid.subject}; a={phi.a!r}, b={phi.b!r})"
    return ClassificationGrid(target, status, esc, subject)


def map_mask(
    mask: np.ndarray, source: GridSpec, phi: AffineMap, target: GridSpec
) -> tuple[np.ndarray, np.ndarray]:
    """Transport a boolean cell mask; returns (mask, valid)."""
    inv = affine_inverse(phi)
    row, col, valid = _source_indices(source, inv, target)
    out = np.zeros((target.rows, target.cols), dtype=bool)
    out[valid] = mask[row[valid], col[valid]]
    return out, valid


@dataclass(frozen=True)
class ComparisonReport:
    ratio: float
    compared: int
    disagreement: np.ndarray
    indeterminate: bool

    def to_json_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "compared": self.compared,
            "indeterminate": self.indeterminate,
        }


def compare_classifications(
    ga: ClassificationGrid,
    gb: ClassificationGrid,
    ignore_undecided: bool = True,
    boundary_band: int = 1,
) -> ComparisonReport:
    """Agreement ratio over cells decided in both grids and outside a
    dilated band around either grid's extracted boundary (boundary cells
    legitimately disagree at finite resolution)."""
    if ga.spec != gb.spec:
        raise SpecMismatchError("grids have different specs")
    mask = np.ones(ga.status.shape, dtype=bool)
    if ignore_undecided:
        mask &= (ga.status != STATUS_UNDECIDED) & (gb.status != STATUS_UNDECIDED)
    if boundary_band > 0:
        band = extract_julia_boundary(ga) | extract_julia_boundary(gb)
        band = binary_dilation(band, iterations=boundary_band)
        mask &= ~band
    compared = int(mask.sum())
    if compared == 0:
        return ComparisonReport(0.0, 0, np.zeros_like(mask), True)
    disagree = mask & (ga.status != gb.status)
    ratio = 1.0 - disagree.sum() / compared
    return ComparisonReport(float(ratio), compared, disagree, False)


@dataclass(frozen=True)
class FatouInvarianceReport:
    ratio: float
    compared: int
    indeterminate: bool


def check_fatou_invariance(
    S: SemigroupPresentation,
    phi: AffineMap,
    spec: GridSpec,
    workers: int = 1,
    grid: ClassificationGrid | None = None,
) -> FatouInvarianceReport:
    """Grid-level check that phi maps the Fatou approximation onto itself."""
    if grid is None:
        grid = classify_semigroup(S, spec, workers=workers)
    fat = fatou_mask(grid)
    moved, valid = map_mask(fat, spec, phi, spec)
    compare = valid & ~extract_julia_boundary(grid)
    n = int(compare.sum())
    if n == 0:
        return FatouInvarianceReport(0.0, 0, True)
    agree = (moved == fat) & compare
    return FatouInvarianceReport(float(agree.sum() / n), n, False)


# ---------------------------------------------------------------------------
# artifact emission


def status_bytes(grid: ClassificationGrid) -> np.ndarray:
    out = np.full(grid.status.shape, 128, dtype=np.uint8)
    out[grid.status == STATUS_ESCAPING] = 255
    out[grid.status == STATUS_BOUNDED] = 0
    return out


def heatmap_bytes(grid: ClassificationGrid) -> np.ndarray:
    """Escape iteration scaled to 0-254; non-escaping cells are 255."""
    out = np.full(grid.status.shape, 255, dtype=np.uint8)
    esc = grid.escape_iter >= 0
    scaled = np.round(grid.escape_iter * 254.0 / grid.spec.max_iter)
    out[esc] = np.clip(scaled[esc], 0, 254).astype(np.uint8)
    return out


def write_pgm(path: str, data: np.ndarray, comment: str | None = None) -> None:
    rows, cols = data.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        if comment:
            fh.write(f"# {comment}\n".encode("ascii"))
        fh.write(f"{cols} {rows}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())


def write_csv(path: str, grid: ClassificationGrid) -> None:
    centers = grid.spec.cell_centers()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im", "status", "first_escape_iter"])
        for r in range(grid.spec.rows):
            for c in range(grid.spec.cols):
                z = centers[r, c]
                writer.writerow(
                    [
                        r,
                        c,
                        repr(z.real),
                        repr(z.imag),
                        STATUS_NAMES[int(grid.status[r, c])],
                        int(grid.escape_iter[r, c]),
                    ]
                )
