"""Grayscale image ingestion, pooling, train/test splits and dictionary assembly."""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .classifier import Dictionary

__all__ = [
    "LabeledImageSet",
    "read_pgm",
    "write_pgm",
    "load_image_dir",
    "downsample",
    "split",
    "assemble_dictionary",
    "vectorize",
    "make_synthetic",
]

MANIFEST_NAME = "manifest.tsv"


@dataclass
class LabeledImageSet:
    """Parallel lists of 2-D grayscale arrays (values in [0, 1]) and labels."""

    images: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError("need one label per image")

    def __len__(self):
        return len(self.images)

    def classes(self):
        return sorted(set(self.labels))

    def by_class(self):
        out = {}
        for img, lab in zip(self.images, self.labels):
            out.setdefault(lab, []).append(img)
        return out

    def map(self, fn):
        return LabeledImageSet([fn(img) for img in self.images], list(self.labels))


def _pgm_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens, pos, n = [], 0, len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise ValueError("truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path):
    """Read a P2 (ASCII) or P5 (binary) PGM file, scaled to [0, 1].

    16-bit P5 samples are big-endian, per the Netpbm definition.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PGM header ({exc})") from None
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a grayscale PGM (magic {magic!r})")
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise ValueError(f"{path}: invalid PGM dimensions or maxval")
    count = width * height
    if magic == b"P5":
        body = data[pos + 1:]  # exactly one whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(body) < count * dtype.itemsize:
            raise ValueError(f"{path}: truncated pixel data")
        pixels = np.frombuffer(body, dtype=dtype, count=count)
    else:
        tokens = data[pos:].split()
        if len(tokens) < count:
            raise ValueError(f"{path}: truncated pixel data")
        pixels = np.array([int(t) for t in tokens[:count]])
    if pixels.max(initial=0) > maxval:
        raise ValueError(f"{path}: sample exceeds maxval {maxval}")
    return pixels.reshape(height, width).astype(np.float64) / maxval


def write_pgm(path, image, maxval=255):
    """Write ``image`` (values in [0, 1]) as a binary P5 PGM."""
    image = np.asarray(image, dtype=np.float64)
    height, width = image.shape
    scaled = np.rint(np.clip(image, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else "u1"
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(scaled.astype(dtype).tobytes())


def _read_flat(path, shape):
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size != shape[0] * shape[1]:
        raise ValueError(f"{path}: expected {shape[0] * shape[1]} bytes, found {raw.size}")
    return raw.reshape(shape).astype(np.float64) / 255.0


def _read_manifest(root):
    entries = []
    with open(os.path.join(root, MANIFEST_NAME), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{MANIFEST_NAME}:{lineno}: expected 'path<TAB>label'")
            entries.append((parts[0], parts[1]))
    return sorted(entries)


def load_image_dir(path, format="pgm", shape=None):
    """Load a labelled grayscale image collection.

    Parameters
    ----------
    path : str or PathLike
        Either one subdirectory per class holding ``.pgm`` files, or a
        directory with a ``manifest.tsv`` listing ``relative/path<TAB>label``.
    format : {"pgm", "flat"}
        ``"flat"`` files are raw 8-bit row-major pixels and require the
        manifest plus ``shape=(height, width)``.
    shape : tuple of int, optional

    Returns
    -------
    LabeledImageSet
        Sorted by file path.
    """
    root = os.fspath(path)
    if not os.path.isdir(root):
        raise FileNotFoundError(f"no such directory: {root}")
    if format not in ("pgm", "flat"):
        raise ValueError(f"unknown image format {format!r}")
    has_manifest = os.path.isfile(os.path.join(root, MANIFEST_NAME))
    if format == "flat":
        if not has_manifest:
            raise ValueError(f"flat images need a {MANIFEST_NAME} in {root}")
        if shape is None:
            raise ValueError("flat images need an explicit shape")
    if has_manifest:
        entries = _read_manifest(root)
    else:
        entries = []
        for cls in sorted(os.listdir(root)):
            cdir = os.path.join(root, cls)
            if not os.path.isdir(cdir):
                continue
            for name in sorted(os.listdir(cdir)):
                if name.lower().endswith(".pgm"):
                    entries.append((os.path.join(cls, name), cls))
        entries.sort()
    if not entries:
        raise ValueError(f"no images found in {root}")

    images, labels, dims = [], [], {}
    for rel, label in entries:
        full = os.path.join(root, rel)
        try:
            img = _read_flat(full, shape) if format == "flat" else read_pgm(full)
        except OSError as exc:
            raise ValueError(f"cannot read {full}: {exc}") from exc
        if dims.setdefault(label, img.shape) != img.shape:
            raise ValueError(f"{full}: shape {img.shape} differs from {dims[label]} in class {label!r}")
        images.append(img)
        labels.append(label)
    return LabeledImageSet(images, labels)


def _pool_edges(n, target, block=None):
    block = block or math.ceil(n / target)
    edges = list(range(0, n, block))
    if len(edges) != target:
        # a uniform block with one trailing remainder cannot hit this count
        edges = [(i * n) // target for i in range(target)]
    return np.asarray(edges)


def downsample(image, ratio=None, shape=None):
    """Block-average pooling.

    Pass either ``ratio`` (e.g. ``1/8``; blocks of ``1/ratio`` pixels, the
    trailing partial block averaged over the pixels it has) or an explicit
    target ``shape=(rows, cols)``. A target that does not divide the input
    uses blocks of ``ceil(n / target)`` with a shorter trailing block, e.g.
    112 x 92 -> 11 x 10 pools 11 x 10 blocks and a 2 x 2 remainder; when
    no uniform block size produces the target count the blocks are spread
    as evenly as possible instead.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if (ratio is None) == (shape is None):
        raise ValueError("pass exactly one of ratio or shape")
    if ratio is not None:
        if not 0 < ratio <= 1:
            raise ValueError("ratio must lie in (0, 1]")
        block = int(round(1.0 / ratio))
        shape = (math.ceil(h / block), math.ceil(w / block))
    else:
        block = None
    th, tw = (int(s) for s in shape)
    if th < 1 or tw < 1 or th > h or tw > w:
        raise ValueError(f"cannot pool {h}x{w} down to {th}x{tw}")
    re, ce = _pool_edges(h, th, block), _pool_edges(w, tw, block)
    sums = np.add.reduceat(np.add.reduceat(image, re, axis=0), ce, axis=1)
    counts = np.outer(np.diff(np.append(re, h)), np.diff(np.append(ce, w)))
    return sums / counts


def split(ds, train_fraction=0.8, seed=0):
    """Per-class random split; ``ceil(train_fraction * count)`` images go to training.

    Classes are visited in sorted label order and shuffled with one
    generator seeded by ``seed``, so equal seeds give equal splits.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    groups = {}
    for idx, lab in enumerate(ds.labels):
        groups.setdefault(lab, []).append(idx)
    train, test = LabeledImageSet(), LabeledImageSet()
    for lab in sorted(groups):
        members = groups[lab]
        count = len(members)
        if count < 2:
            raise ValueError(f"class {lab!r} has {count} image(s); need at least 2 to split")
        n_train = math.ceil(train_fraction * count - 1e-9)
        if not 1 <= n_train <= count - 1:
            raise ValueError(f"class {lab!r}: fraction {train_fraction} leaves an empty side")
        perm = rng.permutation(count)
        for pos, k in enumerate(perm):
            target = train if pos < n_train else test
            target.images.append(ds.images[members[k]])
            target.labels.append(lab)
    return train, test


def vectorize(images):
    """Stack images as columns, column-major (Fortran order) per image."""
    return np.column_stack([np.asarray(img, dtype=np.float64).ravel(order="F") for img in images])


def assemble_dictionary(train, normalize=False):
    """Column-stack the training images into class blocks in sorted label order."""
    shapes = {img.shape for img in train.images}
    if len(shapes) != 1:
        raise ValueError(f"training images have mixed shapes {sorted(shapes)}")
    D = Dictionary.from_columns(vectorize(train.images), train.labels)
    return D.normalized() if normalize else D


def _smooth_field(rng, shape, passes=2):
    img = rng.random(shape)
    for _ in range(passes):
        padded = np.pad(img, 1, mode="edge")
        img = sum(padded[i:i + shape[0], j:j + shape[1]] for i in range(3) for j in range(3)) / 9.0
    img -= img.min()
    return img / max(img.max(), 1e-12)


def make_synthetic(n_classes=5, per_class=10, shape=(12, 10), subspace_dim=3,
                   variation=0.3, noise=0.02, seed=0):
    """Face-like synthetic collection: one smooth template per class plus a
    few smooth class-specific variation modes and pixel noise.

    Every image is ``template + sum_k c_k * mode_k + noise`` clipped to
    [0, 1], with modes and templates drawn independently per class.
    """
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for c in range(n_classes):
        template = _smooth_field(rng, shape)
        modes = [_smooth_field(rng, shape) - 0.5 for _ in range(subspace_dim)]
        for _ in range(per_class):
            coef = variation * rng.standard_normal(subspace_dim)
            img = template + sum(a * m for a, m in zip(coef, modes))
            img = img + noise * rng.standard_normal(shape)
            images.append(np.clip(img, 0.0, 1.0))
            labels.append(f"s{c + 1:02d}")
    return LabeledImageSet(images, labels)
