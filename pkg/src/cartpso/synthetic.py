"""Seeded synthetic datasets for tests, benchmarks and demos."""
import numpy as np


def planted_features(n_samples=500, n_features=20, n_informative=9, n_classes=2,
                     shift=2.0, seed=0):
    """Gaussian data where ``n_informative`` randomly placed columns carry
    class-dependent means and the rest are pure noise.

    Returns ``(X, y, informative)`` with 1-based informative indices.
    """
    rng = np.random.default_rng(seed)
    informative = np.sort(rng.choice(n_features, n_informative, replace=False))
    y = np.arange(n_samples) % n_classes + 1
    rng.shuffle(y)
    X = rng.normal(size=(n_samples, n_features))
    # each informative column separates the classes along its own direction
    signs = rng.choice([-1.0, 1.0], size=(n_classes, n_informative))
    signs[0] = 0.0
    X[:, informative] += shift * signs[y - 1]
    return X, y, (informative + 1).tolist()


def planted_table(n_samples=500, n_informative=9, n_classes=2, shift=2.0, seed=0):
    """:func:`planted_features` as a 20-column feature table with labels
    ``"1"``..``"K"``."""
    from .dataio import FeatureTable

    X, y, _ = planted_features(n_samples, 20, n_informative, n_classes, shift, seed)
    return FeatureTable([f"s{i:04d}" for i in range(n_samples)], [str(v) for v in y], X)


def blobs(centers, n_per_class=30, scale=0.3, seed=0):
    """Isotropic Gaussian blobs; labels are 1..len(centers)."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    X = np.concatenate([c + scale * rng.normal(size=(n_per_class, centers.shape[1]))
                        for c in centers])
    y = np.repeat(np.arange(1, len(centers) + 1), n_per_class)
    return X, y


def ring(n_inner=40, n_outer=40, r_inner=0.5, r_outer=2.0, noise=0.15, seed=0):
    """A central cluster (label 1) surrounded by a ring (label 2)."""
    rng = np.random.default_rng(seed)
    inner = r_inner * rng.uniform(0, 1, (n_inner, 1)) ** 0.5
    t = rng.uniform(0, 2 * np.pi, n_inner)
    Xi = np.column_stack([inner[:, 0] * np.cos(t), inner[:, 0] * np.sin(t)])
    t = rng.uniform(0, 2 * np.pi, n_outer)
    r = r_outer + noise * rng.normal(size=n_outer)
    Xo = np.column_stack([r * np.cos(t), r * np.sin(t)])
    X = np.concatenate([Xi, Xo])
    y = np.concatenate([np.ones(n_inner, int), np.full(n_outer, 2)])
    return X, y


def synthetic_cell(nucleus_radius=8.0, cell_radius=20.0, size=64, elongation=1.0,
                   nucleus_gray=70, cyto_gray=170, texture=10.0, seed=0):
    """An RGB cell with elliptical nucleus and cytoplasm plus noise texture.

    Returns ``(pixels, nucleus_mask, cell_mask)``.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:size, :size].astype(np.float64)
    cy = cx = (size - 1) / 2.0
    cell = ((yy - cy) / cell_radius) ** 2 + ((xx - cx) / (cell_radius * 0.9)) ** 2 <= 1.0
    a = nucleus_radius * elongation ** 0.5
    b = nucleus_radius / elongation ** 0.5
    nucleus = (((yy - cy) / b) ** 2 + ((xx - cx) / a) ** 2 <= 1.0) & cell
    gray = np.full((size, size), 235.0)
    gray[cell] = cyto_gray
    gray[nucleus] = nucleus_gray
    gray += texture * rng.normal(size=gray.shape)
    gray = np.clip(gray, 0, 255)
    rgb = np.stack([gray * 0.9, gray * 0.8, np.minimum(gray * 1.1, 255)], axis=-1)
    return rgb.round().astype(np.uint8), nucleus, cell


def write_cell_dataset(directory, n_per_class=4, seed=0):
    """Write a small two-class PNG dataset and ``manifest.jsonl``.

    Class ``normal`` has small round nuclei, ``abnormal`` large elongated
    dark ones.  Returns the manifest path.
    """
    from pathlib import Path

    from PIL import Image

    from .dataio import write_manifest

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for label, (radius, elong, shade) in (("normal", (5.0, 1.0, 90)),
                                          ("abnormal", (11.0, 1.6, 50))):
        for i in range(n_per_class):
            sid = f"{label}_{i:03d}"
            pix, nuc, cell = synthetic_cell(
                nucleus_radius=radius + rng.uniform(-1, 1), elongation=elong,
                nucleus_gray=shade, seed=int(rng.integers(1 << 31)),
            )
            Image.fromarray(pix).save(directory / f"{sid}.png")
            Image.fromarray(nuc.astype(np.uint8) * 255).save(directory / f"{sid}_nuc.png")
            Image.fromarray(cell.astype(np.uint8) * 255).save(directory / f"{sid}_cell.png")
            records.append({
                "sample_id": sid, "image_path": f"{sid}.png",
                "nucleus_mask_path": f"{sid}_nuc.png", "cell_mask_path": f"{sid}_cell.png",
                "label": label,
            })
    path = directory / "manifest.jsonl"
    write_manifest(path, records, ["normal", "abnormal"], ["normal"])
    return path
