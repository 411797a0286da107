import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cartpso.errors import (
    EmptyMask,
    FeatureExtractionError,
    NoPairs,
    RegionTooSmall,
    ValidationError,
    ZeroCytoplasm,
)
from cartpso.features import (
    DEFAULT_CATALOG,
    DIRECTIONS,
    Glcm,
    SegmentedCellImage,
    compute_glcm,
    extract_all,
    extract_color_features,
    extract_morphology,
    glcm_features,
    tamura_features,
    to_gray,
    trace_boundary,
)


def full_cell(pixels, nucleus=None):
    pixels = np.asarray(pixels)
    cell = np.ones(pixels.shape[:2], bool)
    if nucleus is None:
        nucleus = np.zeros_like(cell)
        nucleus[0, 0] = True
    return SegmentedCellImage(pixels, nucleus, cell)


def test_catalog_layout():
    assert len(DEFAULT_CATALOG) == 20
    assert [e.index for e in DEFAULT_CATALOG] == list(range(1, 21))
    groups = [e.group for e in DEFAULT_CATALOG]
    assert groups == ["color"] * 6 + ["morphology"] * 6 + ["glcm"] * 5 + ["tamura"] * 3
    assert len(set(DEFAULT_CATALOG.names)) == 20


def test_image_validation():
    n = np.zeros((4, 4), bool)
    n[1, 1] = True
    c = np.zeros((4, 4), bool)
    with pytest.raises(ValidationError, match="contained"):
        SegmentedCellImage(np.zeros((4, 4), np.uint8), n, c)
    with pytest.raises(ValidationError, match="dimensions"):
        SegmentedCellImage(np.zeros((4, 5), np.uint8), n, n)


def test_gray_conversion_rounds_half_up():
    # 0.299*1 + 0.587*1 + 0.114*1 = 1.0; a pure-blue 5 gives 0.57 -> 1
    px = np.array([[[1, 1, 1], [0, 0, 5], [255, 255, 255]]], np.uint8)
    assert to_gray(px).tolist() == [[1, 1, 255]]


# ---------------------------------------------------------------- color

def test_color_constant_region():
    img = full_cell(np.full((10, 10), 128, np.uint8))
    assert extract_color_features(img) == (128.0, 0.0, 0.0, 0.0, 1.0, 0.0)


def test_color_two_level_region():
    px = np.full((10, 10), 100, np.uint8)
    px[5:] = 200
    mean, var, skew, kurt, energy, entropy = extract_color_features(full_cell(px))
    assert mean == 150.0
    assert var == 2500.0
    assert skew == 0.0
    assert kurt == pytest.approx(1.0)  # symmetric two-point distribution
    assert energy == 0.5
    assert entropy == 1.0


def test_color_ignores_pixels_outside_cell():
    px = np.full((6, 6), 10, np.uint8)
    px[0] = 250
    cell = np.zeros((6, 6), bool)
    cell[2:, :] = True
    nucleus = np.zeros((6, 6), bool)
    nucleus[3, 3] = True
    assert extract_color_features(SegmentedCellImage(px, nucleus, cell))[0] == 10.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_color_bounds(seed):
    rng = np.random.default_rng(seed)
    px = rng.integers(0, 256, size=(12, 12), dtype=np.uint8)
    *_, energy, entropy = extract_color_features(full_cell(px))
    assert 0 <= entropy <= 8
    assert 0 < energy <= 1


# -------------------------------------------------------------- boundary

def replay(chain):
    r, c = chain.start
    for k in chain.codes:
        dr, dc = DIRECTIONS[k]
        r, c = r + dr, c + dc
    return r, c


def test_trace_single_pixel():
    m = np.zeros((5, 5), bool)
    m[2, 3] = True
    chain = trace_boundary(m)
    assert chain.start == (2, 3)
    assert chain.codes == ()
    assert chain.perimeter == 0


def test_trace_three_by_three_square():
    m = np.zeros((7, 7), bool)
    m[2:5, 2:5] = True
    chain = trace_boundary(m)
    assert chain.start == (2, 2)
    assert chain.codes == (0, 0, 6, 6, 4, 4, 2, 2)
    assert replay(chain) == chain.start


def test_trace_visits_every_border_pixel_of_a_square():
    m = np.zeros((9, 9), bool)
    m[2:7, 2:7] = True
    visited = set(trace_boundary(m).pixels())
    border = {(r, c) for r in range(2, 7) for c in range(2, 7)
              if r in (2, 6) or c in (2, 6)}
    assert visited == border


def test_trace_diagonal_moves_use_odd_codes():
    m = np.eye(4, dtype=bool)
    chain = trace_boundary(m)
    assert set(chain.codes) == {7, 3}
    assert chain.perimeter == pytest.approx(6 * math.sqrt(2))


def test_trace_uses_largest_component():
    m = np.zeros((10, 10), bool)
    m[0, 0] = True  # noise pixel, first in raster order
    m[4:7, 4:7] = True
    chain = trace_boundary(m)
    assert chain.start == (4, 4)
    assert len(chain.codes) == 8


def test_trace_empty_mask():
    with pytest.raises(EmptyMask):
        trace_boundary(np.zeros((3, 3), bool))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.2, 0.8))
def test_trace_closes_on_random_masks(seed, density):
    rng = np.random.default_rng(seed)
    m = rng.random((10, 10)) < density
    if not m.any():
        m[5, 5] = True
    chain = trace_boundary(m)
    assert replay(chain) == chain.start
    assert all(0 <= k <= 7 for k in chain.codes)


# ------------------------------------------------------------ morphology

def test_morphology_digital_square(square_cell):
    area, perim, aspect, circ, rect, nc = extract_morphology(square_cell)
    assert (area, perim, aspect, rect) == (25.0, 16.0, 1.0, 1.0)
    assert nc == pytest.approx(25 / 75)
    assert circ == pytest.approx(4 * math.pi * 25 / 256)


def test_morphology_single_pixel_nucleus():
    n = np.zeros((8, 8), bool)
    n[4, 4] = True
    img = SegmentedCellImage(np.zeros((8, 8), np.uint8), n, np.ones((8, 8), bool))
    area, perim, aspect, circ, rect, nc = extract_morphology(img)
    assert (area, perim, circ, aspect, rect) == (1.0, 0.0, 0.0, 1.0, 1.0)


def test_morphology_rectangle_aspect():
    n = np.zeros((20, 20), bool)
    n[5:8, 2:14] = True
    img = SegmentedCellImage(np.zeros((20, 20), np.uint8), n, np.ones((20, 20), bool))
    _, perim, aspect, _, rect, _ = extract_morphology(img)
    assert aspect == 4.0
    assert rect == 1.0
    assert perim == 2 * (11 + 2)


def test_morphology_digital_disk_circularity():
    yy, xx = np.mgrid[:61, :61]
    disk = (yy - 30) ** 2 + (xx - 30) ** 2 <= 20**2
    img = SegmentedCellImage(np.zeros((61, 61), np.uint8), disk, np.ones((61, 61), bool))
    area, _, _, circ, _, _ = extract_morphology(img)
    assert area == disk.sum()
    assert 0.85 <= circ <= 1.1


def test_morphology_errors():
    n = np.zeros((6, 6), bool)
    img = SegmentedCellImage(np.zeros((6, 6), np.uint8), n, np.ones((6, 6), bool))
    with pytest.raises(EmptyMask):
        extract_morphology(img)
    n[1:3, 1:3] = True
    img = SegmentedCellImage(np.zeros((6, 6), np.uint8), n, n.copy())
    with pytest.raises(ZeroCytoplasm):
        extract_morphology(img)


@pytest.mark.parametrize("side", [5, 8, 12])
def test_morphology_scaling(side):
    def measure(s):
        n = np.zeros((60, 60), bool)
        n[10:10 + s, 10:10 + s] = True
        img = SegmentedCellImage(np.zeros((60, 60), np.uint8), n, np.ones((60, 60), bool))
        return extract_morphology(img)

    a1, p1 = measure(side)[:2]
    a2, p2 = measure(2 * side)[:2]
    assert a2 / a1 == 4
    # digital perimeter of an s-square is 4(s - 1)
    assert (p1, p2) == (4 * (side - 1), 4 * (2 * side - 1))


# ------------------------------------------------------------------ GLCM

def test_glcm_constant_image():
    g = compute_glcm(full_cell(np.full((8, 8), 77, np.uint8)))
    assert g.matrix[0, 0] == 1.0
    assert g.matrix.sum() == 1.0
    assert glcm_features(g) == (1.0, 0.0, 0.0, 1.0, 1.0)


def test_glcm_checkerboard_four_orientations():
    # hand count: 0 and 90 degrees give 2 unlike pairs each, 45 degrees joins
    # the two 255s and 135 degrees the two 0s; symmetric doubling -> 12 counts
    img = full_cell(np.array([[0, 255], [255, 0]], np.uint8))
    g = compute_glcm(img, levels=2)
    np.testing.assert_array_equal(g.matrix, [[2 / 12, 4 / 12], [4 / 12, 2 / 12]])


def test_glcm_checkerboard_axis_offsets_are_off_diagonal():
    img = full_cell(np.array([[0, 255], [255, 0]], np.uint8))
    g = compute_glcm(img, levels=2, offsets=((0, 1), (-1, 0)))
    np.testing.assert_array_equal(g.matrix, [[0, 0.5], [0.5, 0]])


def test_glcm_pairs_must_lie_in_mask():
    px = np.array([[0, 255, 0]], np.uint8)
    cell = np.array([[True, False, True]])
    with pytest.raises(NoPairs):
        compute_glcm(SegmentedCellImage(px, cell & [[1, 0, 0]], cell))


def test_glcm_uniform_matrix_features():
    g = Glcm(2, np.full((2, 2), 0.25))
    energy, entropy, inertia, corr, idm = glcm_features(g)
    assert energy == 0.25
    assert entropy == 2.0
    assert inertia == 0.5
    assert corr == 0.0
    assert idm == 0.75


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 16))
def test_glcm_invariants(seed, levels):
    rng = np.random.default_rng(seed)
    px = rng.integers(0, 256, size=(9, 11), dtype=np.uint8)
    cell = rng.random((9, 11)) < 0.7
    cell[4, 4:6] = True
    nucleus = np.zeros_like(cell)
    nucleus[4, 4] = True
    g = compute_glcm(SegmentedCellImage(px, nucleus, cell), levels)
    assert g.matrix.shape == (levels, levels)
    np.testing.assert_array_equal(g.matrix, g.matrix.T)
    assert abs(g.matrix.sum() - 1) <= 1e-12
    assert (g.matrix >= 0).all()
    energy, _, inertia, corr, idm = glcm_features(g)
    assert 0 < energy <= 1
    assert inertia >= 0
    assert 0 < idm <= 1 + 1e-12
    assert -1 - 1e-9 <= corr <= 1 + 1e-9


# ---------------------------------------------------------------- Tamura

def test_tamura_constant_image():
    coarse, contrast, direction = tamura_features(full_cell(np.full((16, 16), 90, np.uint8)))
    assert contrast == 0.0
    assert direction == 1.0
    assert coarse == 1.0


def test_tamura_region_too_small():
    with pytest.raises(RegionTooSmall):
        tamura_features(full_cell(np.zeros((2, 8), np.uint8)))


def stripes(period, size=64):
    x = np.arange(size)
    row = np.where((x // (period // 2)) % 2 == 0, 40, 210).astype(np.uint8)
    return np.tile(row, (size, 1))


def test_tamura_coarseness_grows_with_stripe_period():
    fine = tamura_features(full_cell(stripes(2)))[0]
    coarse = tamura_features(full_cell(stripes(16)))[0]
    assert fine < 1.5  # mostly the smallest window, border pixels aside
    assert coarse > fine


def test_tamura_ramp_is_directional():
    ramp = np.tile(np.arange(0, 192, 6, dtype=np.uint8), (32, 1))
    assert tamura_features(full_cell(ramp))[2] > 0.9


def test_tamura_random_texture_less_directional_than_ramp():
    rng = np.random.default_rng(1)
    noise = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
    ramp = np.tile(np.arange(0, 192, 6, dtype=np.uint8), (32, 1))
    assert tamura_features(full_cell(noise))[2] < tamura_features(full_cell(ramp))[2]


def test_tamura_contrast_matches_moment_formula():
    px = np.full((8, 8), 100, np.uint8)
    px[4:] = 200
    # two-point distribution: sigma = 50, alpha4 = 1
    assert tamura_features(full_cell(px))[1] == pytest.approx(50.0)


# ------------------------------------------------------------ extract_all

def test_extract_all_shape_and_determinism(textured_cell):
    a = extract_all(textured_cell)
    b = extract_all(textured_cell)
    assert a.shape == (20,)
    assert np.isfinite(a).all()
    assert a.tobytes() == b.tobytes()


def test_extract_all_empty_nucleus_names_morphology_index():
    px = np.full((10, 10), 100, np.uint8)
    img = SegmentedCellImage(px, np.zeros((10, 10), bool), np.ones((10, 10), bool))
    with pytest.raises(FeatureExtractionError) as info:
        extract_all(img)
    assert info.value.feature_index == 7
    assert DEFAULT_CATALOG.entries[6].group == "morphology"
    assert isinstance(info.value.cause, EmptyMask)


def test_extract_all_translation_invariant(textured_cell):
    def shifted(img, dr, dc):
        def pad(a):
            out = np.zeros((a.shape[0] + 20, a.shape[1] + 20) + a.shape[2:], a.dtype)
            out[dr:dr + a.shape[0], dc:dc + a.shape[1]] = a
            return out

        return SegmentedCellImage(pad(img.pixels), pad(img.nucleus_mask), pad(img.cell_mask))

    base = extract_all(shifted(textured_cell, 0, 0))
    for dr, dc in [(3, 7), (20, 0), (11, 19)]:
        np.testing.assert_array_equal(extract_all(shifted(textured_cell, dr, dc)), base)


def test_extract_all_value_ranges(textured_cell):
    v = extract_all(textured_cell)
    names = DEFAULT_CATALOG.names
    d = dict(zip(names, v))
    assert 0 <= d["color_entropy"] <= 8
    assert 0 < d["color_energy"] <= 1
    assert 0 < d["glcm_energy"] <= 1
    assert 0 < d["morphology_rectangularity"] <= 1
    assert d["morphology_nc_ratio"] > 0
