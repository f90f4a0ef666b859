import cmath

import numpy as np
import pytest

from semidyn.commutator import SemigroupPresentation, build_commutator_table
from semidyn.expr import AffineMap, Cos, Exp, Identity, Negate, Power, Sum, Const
from semidyn.fixtures import FIXTURES
from semidyn.grid import (
    STATUS_BOUNDED,
    STATUS_ESCAPING,
    STATUS_UNDECIDED,
    ClassificationGrid,
    GridSpec,
    SpecMismatchError,
    WordBudgetExceededError,
    check_fatou_invariance,
    classify_map,
    classify_semigroup,
    compare_classifications,
    enumerate_words,
    extract_julia_boundary,
    fatou_mask,
    heatmap_bytes,
    map_classification,
    status_bytes,
    write_csv,
    write_pgm,
)

Z = Identity()


def small_spec(**kwargs):
    defaults = dict(center=0j, width=8.0, height=8.0, cols=64, rows=64)
    defaults.update(kwargs)
    return GridSpec(**defaults)


def cell_index_of(spec, z):
    dx = spec.width / spec.cols
    dy = spec.height / spec.rows
    col = int((z.real - (spec.center.real - spec.width / 2)) // dx)
    row = int(((spec.center.imag + spec.height / 2) - z.imag) // dy)
    return row, col


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(cols=1)
        with pytest.raises(ValueError):
            GridSpec(escape_radius=0.5)
        with pytest.raises(ValueError):
            GridSpec(max_iter=0)

    def test_cell_centers_orientation(self):
        spec = small_spec(cols=4, rows=4)
        centers = spec.cell_centers()
        assert centers[0, 0].imag > centers[-1, 0].imag  # row 0 on top
        assert centers[0, 0].real < centers[0, -1].real


class TestClassifyMap:
    def test_exp_escapes_fast_at_one(self):
        # oracle: 1, e, e^e ~ 15.15, e^15.15 > 50
        orbit = [1.0]
        while abs(orbit[-1]) <= 50:
            orbit.append(cmath.exp(orbit[-1]))
        expected_iter = len(orbit) - 1
        assert expected_iter <= 5

        spec = small_spec(cols=8, rows=8, width=0.01, height=0.01, center=1 + 0j)
        g = classify_map(Exp(Z), spec)
        assert (g.status == STATUS_ESCAPING).all()
        assert g.escape_iter.max() <= 5

    def test_cos_bounded_at_half(self):
        spec = small_spec(cols=8, rows=8, width=0.01, height=0.01, center=0.5 + 0j)
        g = classify_map(Cos(Z), spec)
        assert (g.status == STATUS_BOUNDED).all()

    def test_outside_escape_radius_is_immediate(self):
        spec = GridSpec(center=100 + 0j, width=1, height=1, cols=4, rows=4,
                        escape_radius=50)
        g = classify_map(Cos(Z), spec)
        assert (g.status == STATUS_ESCAPING).all()
        assert (g.escape_iter == 0).all()

    def test_deterministic_across_workers(self):
        spec = small_spec(cols=96, rows=96)
        g1 = classify_map(Exp(Z), spec, workers=1)
        g2 = classify_map(Exp(Z), spec, workers=3)
        assert np.array_equal(g1.status, g2.status)
        assert np.array_equal(g1.escape_iter, g2.escape_iter)

    def test_monotone_in_max_iter(self):
        spec = small_spec(max_iter=20)
        g1 = classify_map(Cos(Z), spec)
        from dataclasses import replace

        g2 = classify_map(Cos(Z), replace(spec, max_iter=40))
        esc1 = g1.status == STATUS_ESCAPING
        assert not (esc1 & (g2.status == STATUS_BOUNDED)).any()
        # decisions only increase
        assert ((g2.status != STATUS_UNDECIDED) | (g1.status == STATUS_UNDECIDED)).all()


class TestClassifySemigroup:
    def test_single_generator_depth_one_matches_map(self):
        f = Cos(Z)
        S = SemigroupPresentation((f,), label="single")
        spec = small_spec(word_depth=1)
        gm = classify_map(f, spec)
        gs = classify_semigroup(S, spec)
        assert np.array_equal(gm.status, gs.status)
        assert np.array_equal(gm.escape_iter, gs.escape_iter)

    def test_escaping_requires_all_words(self):
        fx = FIXTURES["example-2.1-cos"]
        spec = small_spec(word_depth=2)
        gs = classify_semigroup(fx.presentation, spec)
        for i in (1, 2):
            gm = classify_map(fx.presentation.generator(i), spec)
            esc_s = gs.status == STATUS_ESCAPING
            esc_m = gm.status == STATUS_ESCAPING
            assert (esc_s <= esc_m).all()  # subset

    def test_exp_pair_agrees_with_single_map(self):
        fx = FIXTURES["example-2.1-exp"]
        spec = small_spec(cols=128, rows=128, word_depth=2)
        gs = classify_semigroup(fx.presentation, spec)
        gm = classify_map(fx.presentation.generator(1), spec)
        both = (gs.status != STATUS_UNDECIDED) & (gm.status != STATUS_UNDECIDED)
        agree = (gs.status == gm.status) & both
        assert agree.sum() / both.sum() >= 0.99

    def test_word_budget(self):
        fx = FIXTURES["example-2.1-cos"]
        spec = small_spec(word_depth=13)  # 2^13 > 4096
        with pytest.raises(WordBudgetExceededError):
            classify_semigroup(fx.presentation, spec)
        assert len(enumerate_words(2, 2)) == 6


def synthetic_grid(status, max_iter=100):
    rows, cols = status.shape
    spec = GridSpec(center=0j, width=4.0, height=4.0, cols=cols, rows=rows,
                    max_iter=max_iter)
    esc = np.where(status == STATUS_ESCAPING, 1, -1).astype(np.int32)
    return ClassificationGrid(spec, status.astype(np.uint8), esc, "synthetic")


class TestBoundary:
    def test_all_escaping_empty_mask(self):
        g = synthetic_grid(np.full((8, 8), STATUS_ESCAPING))
        assert not extract_julia_boundary(g).any()

    def test_checkerboard_all_masked(self):
        status = np.indices((8, 8)).sum(axis=0) % 2
        status = np.where(status, STATUS_ESCAPING, STATUS_BOUNDED)
        g = synthetic_grid(status)
        assert extract_julia_boundary(g).all()

    def test_exp_window_nonempty(self):
        # half escaping / half bounded split produces a boundary line
        status = np.full((8, 8), STATUS_BOUNDED)
        status[:, 4:] = STATUS_ESCAPING
        g = synthetic_grid(status)
        mask = extract_julia_boundary(g)
        assert mask[:, 3:5].all() and not mask[:, 0].any()

    def test_fatou_mask_is_complement(self):
        fx = FIXTURES["example-2.1-cos"]
        g = classify_map(fx.presentation.generator(1), small_spec())
        assert np.array_equal(fatou_mask(g), ~extract_julia_boundary(g))


class TestTransport:
    def test_identity_transport(self):
        g = classify_map(Cos(Z), small_spec())
        moved = map_classification(g, AffineMap(1, 0), g.spec)
        assert np.array_equal(moved.status, g.status)
        assert np.array_equal(moved.escape_iter, g.escape_iter)

    def test_mirror_transport_on_symmetric_raster(self):
        g = classify_map(Cos(Z), small_spec())
        moved = map_classification(g, AffineMap(-1, 0), g.spec)
        assert np.array_equal(moved.status, g.status[::-1, ::-1])

    def test_scaling_transport_against_direct_oracle(self):
        rng = np.random.default_rng(3)
        status = rng.integers(0, 3, size=(16, 16)).astype(np.uint8)
        g = synthetic_grid(status)
        phi = AffineMap(2, 0)
        moved = map_classification(g, phi, g.spec)
        inv_centers = g.spec.cell_centers() / 2  # phi^{-1}(w) = w / 2
        for r in range(16):
            for c in range(16):
                rr, cc = cell_index_of(g.spec, inv_centers[r, c])
                if 0 <= rr < 16 and 0 <= cc < 16:
                    assert moved.status[r, c] == status[rr, cc]
                else:
                    assert moved.status[r, c] == STATUS_UNDECIDED

    def test_out_of_window_is_undecided(self):
        g = classify_map(Cos(Z), small_spec())
        moved = map_classification(g, AffineMap(1, 1000 + 0j), g.spec)
        assert (moved.status == STATUS_UNDECIDED).all()


class TestCompare:
    def test_identical(self):
        g = classify_map(Cos(Z), small_spec())
        rep = compare_classifications(g, g)
        assert rep.ratio == 1.0 and not rep.indeterminate

    def test_map_unmap_round_trip(self):
        g = classify_map(Cos(Z), small_spec())
        phi = AffineMap(-1, 0)
        back = map_classification(map_classification(g, phi, g.spec), phi, g.spec)
        rep = compare_classifications(g, back)
        assert rep.ratio == 1.0

    def test_conjugate_pipeline_agreement(self):
        fx = FIXTURES["example-2.1-cos"]
        table = build_commutator_table(fx.presentation, fx.plan)
        phi = table.entry(1, 2)
        from semidyn.commutator import conjugate_semigroup

        conj = conjugate_semigroup(fx.presentation, phi)
        spec = small_spec(cols=128, rows=128)
        g = classify_map(fx.presentation.generator(1), spec)
        gc = classify_map(conj.generator(1), spec)
        moved = map_classification(g, phi, spec)
        rep = compare_classifications(moved, gc)
        assert rep.ratio >= 0.99

    def test_spec_mismatch(self):
        g1 = classify_map(Cos(Z), small_spec())
        g2 = classify_map(Cos(Z), small_spec(cols=32, rows=32))
        with pytest.raises(SpecMismatchError):
            compare_classifications(g1, g2)


class TestFatouInvariance:
    def test_identity(self):
        fx = FIXTURES["example-2.1-cos"]
        rep = check_fatou_invariance(
            fx.presentation, AffineMap(1, 0), small_spec(word_depth=1)
        )
        assert rep.ratio == 1.0

    def test_negation_on_symmetric_window(self):
        fx = FIXTURES["example-2.1-cos"]
        rep = check_fatou_invariance(
            fx.presentation, AffineMap(-1, 0), small_spec(cols=128, rows=128,
                                                          word_depth=1)
        )
        assert rep.ratio >= 0.99

    def test_far_shift_is_indeterminate(self):
        fx = FIXTURES["example-2.1-cos"]
        rep = check_fatou_invariance(
            fx.presentation, AffineMap(1, 1000 + 0j), small_spec(word_depth=1)
        )
        # no comparable overlap in the window interior
        assert rep.indeterminate or rep.compared == 0 or rep.ratio >= 0.0


class TestArtifacts:
    def test_pgm_bytes(self, tmp_path):
        status = np.array([[STATUS_ESCAPING, STATUS_BOUNDED],
                           [STATUS_UNDECIDED, STATUS_ESCAPING]], dtype=np.uint8)
        g = synthetic_grid(status)
        path = tmp_path / "out.pgm"
        write_pgm(str(path), status_bytes(g), comment="config=x seed=0")
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n# config=x seed=0\n2 2\n255\n")
        assert blob[-4:] == bytes([255, 0, 128, 255])

    def test_pgm_reproducible(self, tmp_path):
        g = classify_map(Cos(Z), small_spec(cols=16, rows=16))
        p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_pgm(str(p1), status_bytes(g))
        write_pgm(str(p2), status_bytes(g))
        assert p1.read_bytes() == p2.read_bytes()

    def test_heatmap_range(self):
        g = classify_map(Exp(Z), small_spec(cols=16, rows=16))
        hm = heatmap_bytes(g)
        esc = g.status == STATUS_ESCAPING
        assert (hm[esc] <= 254).all()
        assert (hm[~esc] == 255).all()

    def test_csv(self, tmp_path):
        g = classify_map(Cos(Z), small_spec(cols=4, rows=4))
        path = tmp_path / "grid.csv"
        write_csv(str(path), g)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "row,col,re,im,status,first_escape_iter"
        assert len(lines) == 17
        assert lines[1].startswith("0,0,")


class TestEremenkoWitness:
    @pytest.mark.parametrize("name", list(FIXTURES))
    def test_escaping_cells_exist(self, name):
        fx = FIXTURES[name]
        from dataclasses import replace

        spec = replace(fx.window, cols=64, rows=64)
        g = classify_map(fx.presentation.generator(1), spec)
        assert (g.status == STATUS_ESCAPING).any()
