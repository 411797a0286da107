"""Twenty-feature cell descriptor: color histogram statistics, nucleus
morphology from an 8-connected chain code, GLCM texture and Tamura texture.

All extractors take a :class:`SegmentedCellImage` (raster plus nucleus and
cell masks) and return plain tuples of floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    EmptyMask,
    FeatureExtractionError,
    NoPairs,
    RegionTooSmall,
    ValidationError,
    ZeroCytoplasm,
)

CATALOG_VERSION = "cartpso-features-1"

GLCM_LEVELS = 16
TAMURA_KMAX = 5
TAMURA_DIR_BINS = 16
TAMURA_GRAD_THRESHOLD = 12.0

# chain-code direction -> (drow, dcol); 0 = east, counterclockwise on screen
DIRECTIONS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
_DIR_INDEX = {d: k for k, d in enumerate(DIRECTIONS)}

# (drow, dcol) for 0, 45, 90 and 135 degrees at distance 1
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class CatalogEntry:
    index: int
    name: str
    group: str


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple
    version: str = CATALOG_VERSION

    def __post_init__(self):
        if len(self.entries) != 20:
            raise ValidationError("feature catalog must have exactly 20 entries")
        if [e.index for e in self.entries] != list(range(1, 21)):
            raise ValidationError("catalog indices must be 1..20 without gaps")
        counts = {}
        for e in self.entries:
            counts[e.group] = counts.get(e.group, 0) + 1
        if counts != {"color": 6, "morphology": 6, "glcm": 5, "tamura": 3}:
            raise ValidationError(f"bad catalog group sizes: {counts}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def names(self):
        return [e.name for e in self.entries]

    def name(self, index):
        return self.entries[index - 1].name

    def group_indices(self, group):
        return [e.index for e in self.entries if e.group == group]


def _default_catalog():
    groups = [
        ("color", ["mean", "variance", "skewness", "kurtosis", "energy", "entropy"]),
        ("morphology", ["area", "perimeter", "aspect_ratio", "circularity",
                        "rectangularity", "nc_ratio"]),
        ("glcm", ["energy", "entropy", "inertia", "correlation", "inverse_moment"]),
        ("tamura", ["coarseness", "contrast", "directionality"]),
    ]
    entries = []
    for group, names in groups:
        for name in names:
            entries.append(CatalogEntry(len(entries) + 1, f"{group}_{name}", group))
    return FeatureCatalog(tuple(entries))


DEFAULT_CATALOG = _default_catalog()


@dataclass(frozen=True)
class SegmentedCellImage:
    """An 8-bit gray (H, W) or RGB (H, W, 3) raster with boolean masks."""

    pixels: np.ndarray
    nucleus_mask: np.ndarray
    cell_mask: np.ndarray
    gray: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        nucleus = np.asarray(self.nucleus_mask).astype(bool)
        cell = np.asarray(self.cell_mask).astype(bool)
        if pixels.ndim not in (2, 3) or (pixels.ndim == 3 and pixels.shape[2] != 3):
            raise ValidationError(f"pixels must be (H, W) or (H, W, 3), got {pixels.shape}")
        if nucleus.shape != pixels.shape[:2] or cell.shape != pixels.shape[:2]:
            raise ValidationError("raster and mask dimensions differ")
        if np.any(nucleus & ~cell):
            raise ValidationError("nucleus mask is not contained in cell mask")
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "nucleus_mask", nucleus)
        object.__setattr__(self, "cell_mask", cell)
        object.__setattr__(self, "gray", to_gray(pixels))


def to_gray(pixels):
    """Integer luma L = round(0.299 R + 0.587 G + 0.114 B), halves rounded up."""
    pixels = np.asarray(pixels)
    if pixels.ndim == 2:
        return np.clip(np.asarray(pixels, dtype=np.int64), 0, 255)
    rgb = pixels.astype(np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(luma + 0.5).astype(np.int64), 0, 255)


# --------------------------------------------------------------------- color

def _moments(values, weights):
    mean = float(np.dot(values, weights))
    centered = values - mean
    var = float(np.dot(centered**2, weights))
    if var <= 0.0:
        return mean, 0.0, 0.0, 0.0
    sd = math.sqrt(var)
    skew = float(np.dot(centered**3, weights)) / sd**3
    kurt = float(np.dot(centered**4, weights)) / var**2
    return mean, var, skew, kurt


def _entropy(p):
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0  # no negative zero


def extract_color_features(img):
    """Mean, variance, skewness, kurtosis, energy and entropy of the
    normalized 256-bin gray histogram over the cell mask."""
    if not img.cell_mask.any():
        raise EmptyMask("cell mask has no true pixel")
    hist = np.bincount(img.gray[img.cell_mask], minlength=256).astype(np.float64)
    p = hist / hist.sum()
    mean, var, skew, kurt = _moments(np.arange(256, dtype=np.float64), p)
    energy = float((p**2).sum())
    return (mean, var, skew, kurt, energy, _entropy(p))


# ---------------------------------------------------------------- morphology

@dataclass(frozen=True)
class ChainCode:
    start: tuple
    codes: tuple

    def endpoint(self):
        r, c = self.start
        for k in self.codes:
            dr, dc = DIRECTIONS[k]
            r += dr
            c += dc
        return (r, c)

    def pixels(self):
        r, c = self.start
        out = [(r, c)]
        for k in self.codes:
            dr, dc = DIRECTIONS[k]
            r += dr
            c += dc
            out.append((r, c))
        return out

    @property
    def perimeter(self):
        odd = sum(k & 1 for k in self.codes)
        return (len(self.codes) - odd) + math.sqrt(2.0) * odd


def largest_component(mask):
    """Largest 8-connected component; ties go to the first in raster order."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMask("mask has no true pixel")
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 1:
        return mask
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def trace_boundary(mask):
    """Moore-neighbour trace of the largest 8-connected component.

    Starts at the top-most, left-most pixel and walks clockwise on screen;
    stops on re-entering the start pixel with the initial move (Jacob's
    criterion).
    """
    region = largest_component(mask)
    padded = np.pad(region, 1)
    rows, cols = np.nonzero(padded)
    start = (int(rows[0]), int(cols[0]))

    def scan(p, back_dir):
        # neighbours of p, clockwise starting just after the backtrack pixel
        for step in range(1, 9):
            k = (back_dir - step) % 8
            dr, dc = DIRECTIONS[k]
            if padded[p[0] + dr, p[1] + dc]:
                prev = (back_dir - step + 1) % 8
                return k, prev
        return None, None

    codes = []
    p = start
    back = 4  # west of the top-left pixel is background
    first = None
    limit = 4 * int(region.sum()) + 8
    while len(codes) <= limit:
        k, prev = scan(p, back)
        if k is None:
            break
        if p == start and first is not None and k == first:
            break
        if first is None:
            first = k
        dr, dc = DIRECTIONS[k]
        q = (p[0] + dr, p[1] + dc)
        pr, pc = DIRECTIONS[prev]
        b = (p[0] + pr, p[1] + pc)
        back = _DIR_INDEX[(b[0] - q[0], b[1] - q[1])]
        codes.append(k)
        p = q
    return ChainCode((start[0] - 1, start[1] - 1), tuple(codes))


def extract_morphology(img):
    """Area, perimeter, aspect ratio, circularity, rectangularity and
    nuclear-cytoplasmic ratio of the nucleus."""
    if not img.nucleus_mask.any() or not img.cell_mask.any():
        raise EmptyMask("nucleus or cell mask is empty")
    n_nucleus = int(img.nucleus_mask.sum())
    n_cyto = int(img.cell_mask.sum()) - n_nucleus
    if n_cyto <= 0:
        raise ZeroCytoplasm("cell mask adds no pixels to the nucleus")
    region = largest_component(img.nucleus_mask)
    area = float(region.sum())
    chain = trace_boundary(region)
    perimeter = chain.perimeter
    rows = np.flatnonzero(region.any(axis=1))
    cols = np.flatnonzero(region.any(axis=0))
    h = float(rows[-1] - rows[0] + 1)
    w = float(cols[-1] - cols[0] + 1)
    aspect = max(h, w) / min(h, w)
    circularity = 4.0 * math.pi * area / perimeter**2 if perimeter > 0 else 0.0
    rectangularity = area / (h * w)
    return (area, perimeter, aspect, circularity, rectangularity, n_nucleus / n_cyto)


# ---------------------------------------------------------------------- GLCM

@dataclass(frozen=True)
class Glcm:
    levels: int
    matrix: np.ndarray


def quantize(gray, mask, levels):
    vals = gray[mask].astype(np.float64)
    lo, hi = vals.min(), vals.max()
    if hi == lo:
        return np.zeros(gray.shape, dtype=np.int64)
    q = np.floor((gray.astype(np.float64) - lo) / (hi - lo) * levels).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def _shifted_pairs(arr, mask, dr, dc):
    """Pairs (arr[r, c], arr[r+dr, c+dc]) with both ends inside ``mask``."""
    H, W = mask.shape
    r0, r1 = max(0, -dr), min(H, H - dr)
    c0, c1 = max(0, -dc), min(W, W - dc)
    a = arr[r0:r1, c0:c1]
    b = arr[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    ok = mask[r0:r1, c0:c1] & mask[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
    return a[ok], b[ok]


def compute_glcm(img, levels=GLCM_LEVELS, offsets=GLCM_OFFSETS):
    """Symmetric, normalized co-occurrence matrix over the cell mask."""
    if levels < 2:
        raise ValidationError("levels must be >= 2")
    if not img.cell_mask.any():
        raise EmptyMask("cell mask has no true pixel")
    q = quantize(img.gray, img.cell_mask, levels)
    counts = np.zeros(levels * levels, dtype=np.float64)
    for dr, dc in offsets:
        a, b = _shifted_pairs(q, img.cell_mask, dr, dc)
        counts += np.bincount(a * levels + b, minlength=levels * levels)
        counts += np.bincount(b * levels + a, minlength=levels * levels)
    total = counts.sum()
    if total == 0:
        raise NoPairs("no pixel pair inside the cell mask")
    return Glcm(levels, (counts / total).reshape(levels, levels))


def glcm_features(g):
    """Energy, entropy, inertia, correlation and inverse difference moment."""
    p = g.matrix
    i, j = np.indices(p.shape, dtype=np.float64)
    energy = float((p**2).sum())
    entropy = _entropy(p.ravel())
    inertia = float(((i - j) ** 2 * p).sum())
    mu_i = float((i * p).sum())
    mu_j = float((j * p).sum())
    sd_i = math.sqrt(float(((i - mu_i) ** 2 * p).sum()))
    sd_j = math.sqrt(float(((j - mu_j) ** 2 * p).sum()))
    if sd_i * sd_j > 0:
        corr = float(((i - mu_i) * (j - mu_j) * p).sum()) / (sd_i * sd_j)
    else:
        corr = 1.0
    inverse_moment = float((p / (1.0 + (i - j) ** 2)).sum())
    return (energy, entropy, inertia, corr, inverse_moment)


# -------------------------------------------------------------------- Tamura

def _bbox(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return slice(rows[0], rows[-1] + 1), slice(cols[0], cols[-1] + 1)


def _coarseness(gray, mask, kmax=TAMURA_KMAX):
    best = np.full(gray.shape, -1.0)
    size = np.ones(gray.shape)
    for k in range(kmax + 1):
        win = 2**k
        avg = ndimage.uniform_filter(gray, size=win, mode="nearest")
        hi, lo = (win + 1) // 2, win // 2
        # |A(x + hi) - A(x - lo)|, edges replicated
        padded = np.pad(avg, ((lo, hi), (lo, hi)), mode="edge")
        H, W = gray.shape
        eh = np.abs(padded[lo:lo + H, lo + hi:lo + hi + W] - padded[lo:lo + H, 0:W])
        ev = np.abs(padded[lo + hi:lo + hi + H, lo:lo + W] - padded[0:H, lo:lo + W])
        e = np.maximum(eh, ev)
        better = e > best
        best = np.where(better, e, best)
        size = np.where(better, float(win), size)
    return float(size[mask].mean())


def _contrast(values):
    mean = values.mean()
    var = float(((values - mean) ** 2).mean())
    if var <= 0:
        return 0.0
    mu4 = float(((values - mean) ** 4).mean())
    alpha4 = mu4 / var**2
    return math.sqrt(var) / alpha4**0.25


def _directionality(gray, mask, bins=TAMURA_DIR_BINS, threshold=TAMURA_GRAD_THRESHOLD):
    kh = np.array([[-1.0, 0.0, 1.0]] * 3)
    dh = ndimage.correlate(gray, kh, mode="nearest")
    dv = ndimage.correlate(gray, kh.T, mode="nearest")
    mag = (np.abs(dh) + np.abs(dv)) / 2.0
    sel = mask & (mag >= threshold)
    if not sel.any():
        return 1.0
    theta = np.arctan2(dv[sel], dh[sel]) % np.pi  # direction in [0, pi)
    idx = np.minimum((theta / np.pi * bins).astype(np.int64), bins - 1)
    hist = np.bincount(idx, minlength=bins).astype(np.float64)
    hist /= hist.sum()
    left, right = np.roll(hist, 1), np.roll(hist, -1)
    peaks = np.flatnonzero((hist >= left) & (hist >= right) & (hist >= 0.2 * hist.max()))
    # a plateau of adjacent maxima counts once, at its first bin
    is_peak = set(peaks.tolist())
    peaks = [p for p in is_peak if (p - 1) % bins not in is_peak] or [min(is_peak)]
    peaks.sort()
    centers = (np.arange(bins) + 0.5) * np.pi / bins
    dist = np.abs(centers[:, None] - centers[peaks][None, :])
    dist = np.minimum(dist, np.pi - dist)
    nearest = dist.min(axis=1)
    spread = float((nearest**2 * hist).sum())
    r = 1.0 / (np.pi / 2.0) ** 2
    return float(np.clip(1.0 - r * len(peaks) * spread, 0.0, 1.0))


def tamura_features(img):
    """Coarseness, contrast and directionality over the cell-mask bounding box."""
    rs, cs = _bbox(img.cell_mask)
    if rs.stop - rs.start < 3 or cs.stop - cs.start < 3:
        raise RegionTooSmall("cell mask bounding box smaller than 3x3")
    gray = img.gray[rs, cs].astype(np.float64)
    mask = img.cell_mask[rs, cs]
    return (
        _coarseness(gray, mask),
        _contrast(gray[mask]),
        _directionality(gray, mask),
    )


# ---------------------------------------------------------------------- all

_GROUPS = (
    ("color", extract_color_features),
    ("morphology", extract_morphology),
    ("glcm", lambda img: glcm_features(compute_glcm(img))),
    ("tamura", tamura_features),
)


def extract_all(img, catalog=DEFAULT_CATALOG):
    """The 20-value descriptor in catalog order.

    Failures are re-raised as :class:`FeatureExtractionError` carrying the
    index of the first feature of the failing group.
    """
    values = []
    for group, fn in _GROUPS:
        first = catalog.group_indices(group)[0]
        try:
            vals = fn(img)
        except (ValidationError, ArithmeticError) as exc:
            raise FeatureExtractionError(first, catalog.name(first), exc) from exc
        for offset, v in enumerate(vals):
            if not math.isfinite(v):
                idx = first + offset
                raise FeatureExtractionError(
                    idx, catalog.name(idx), ValidationError(f"non-finite value {v}")
                )
        values.extend(float(v) for v in vals)
    return np.array(values, dtype=np.float64)
