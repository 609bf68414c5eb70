"""Masked datasets, mask generation, synthetic sparse data and file I/O."""

import csv
import gzip
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, GenerationError, ParseError
from .numerics import RngStream, gaussian_fill

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True, eq=False)
class MaskedDataset:
    """Samples with a per-entry observation mask.

    ``features`` is ``I x N``; entries where ``mask`` is False carry no
    information and are never read by this package.  ``labels`` are ints in
    ``[0, num_classes)``.
    """

    features: np.ndarray
    mask: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.features, dtype=np.float64)
        m = np.ascontiguousarray(self.mask, dtype=bool)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or m.shape != x.shape:
            raise ContractViolation(
                f"features {x.shape} and mask {m.shape} must be equal 2-D shapes")
        if y.shape != (x.shape[0],):
            raise ContractViolation(f"labels shape {y.shape} does not match {x.shape[0]} samples")
        C = int(self.num_classes)
        if C < 1:
            raise ContractViolation("num_classes must be >= 1")
        if y.size and (y.min() < 0 or y.max() >= C):
            raise ContractViolation(f"labels must lie in [0, {C})")
        if not np.all(np.isfinite(x[m])):
            raise ContractViolation("observed entries must be finite")
        if x.shape[0] and not np.all(m.any(axis=1)):
            raise ContractViolation("every sample needs at least one observed feature")
        x.flags.writeable = False
        m.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "num_classes", C)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def is_complete(self):
        return bool(self.mask.all())

    def observed(self):
        """Features with every unobserved entry replaced by 0."""
        return np.where(self.mask, self.features, 0.0)

    def subset(self, index):
        index = np.asarray(index)
        return MaskedDataset(self.features[index], self.mask[index],
                             self.labels[index], self.num_classes)

    def with_mask(self, mask):
        return MaskedDataset(self.features, mask, self.labels, self.num_classes)

    def with_labels(self, labels):
        return MaskedDataset(self.features, self.mask, labels, self.num_classes)


@dataclass(frozen=True)
class MaskSpec:
    """How to hide entries: ``full``, ``uniform_random`` or ``occlusion``."""

    kind: str = "full"
    missing_fraction: float = 0.0
    image_height: int = 0
    image_width: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("full", "uniform_random", "occlusion"):
            raise ContractViolation(f"unknown mask kind {self.kind!r}")
        if not 0.0 <= self.missing_fraction < 1.0:
            raise ContractViolation("missing_fraction must lie in [0, 1)")


@dataclass(frozen=True)
class SyntheticSpec:
    n_features: int = 100
    dict_atoms: int = 200
    sparsity: int = 4
    n_train: int = 10000
    n_test: int = 1000
    separation: float = 0.0
    coefficient_stddev: float = 1.0
    bias_stddev: float = 1.0
    normalize_samples: bool = False
    seed: int = 0
    max_attempt_factor: int = 1000

    def __post_init__(self):
        if self.sparsity < 1 or self.sparsity > self.dict_atoms:
            raise ContractViolation("need 1 <= sparsity <= dict_atoms")
        if self.dict_atoms < self.n_features:
            raise ContractViolation("dictionary must be overcomplete (dict_atoms >= n_features)")
        if self.separation < 0:
            raise ContractViolation("separation must be >= 0")
        if self.n_train < 0 or self.n_test < 0 or self.n_train + self.n_test < 1:
            raise ContractViolation("need at least one sample")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    dictionary: np.ndarray
    w: np.ndarray
    b: float
    codes: np.ndarray
    n_train: int
    scale: float = 1.0


def margin(w, b, x):
    """Linear decision values ``<w, x> + b`` for the rows of ``x``."""
    return np.asarray(x) @ w + b


def _draw_sparse_codes(rng, count, P, K, stddev):
    codes = np.zeros((count, P))
    # per-row uniform support: argsort of uniforms gives a random permutation
    support = np.argsort(rng.uniform(size=(count, P)), axis=1)[:, :K]
    values = rng.normal(size=(count, K), scale=stddev)
    # redraw exact zeros so every code has exactly K nonzeros
    while np.any(values == 0.0):
        z = values == 0.0
        values[z] = rng.normal(size=int(z.sum()), scale=stddev)
    np.put_along_axis(codes, support, values, axis=1)
    return codes


def generate_synthetic(spec):
    """K-sparse samples over a random Gaussian dictionary, labelled by a random hyperplane.

    Returns ``(dataset, truth)``; the first ``spec.n_train`` rows of the
    dataset are the training split (see :func:`split`).  Samples closer than
    ``spec.separation`` to the hyperplane (``|<w,x>+b| < d``) are rejected,
    as are samples exactly on it.
    """
    N, P, K = spec.n_features, spec.dict_atoms, spec.sparsity
    total = spec.n_train + spec.n_test
    rng = RngStream(spec.seed)
    D = gaussian_fill(rng.child(0), N, P)
    D /= np.linalg.norm(D, axis=0)
    hp = rng.child(1)
    w = hp.normal(size=N)
    b = float(hp.normal(scale=spec.bias_stddev)) if spec.bias_stddev > 0 else 0.0

    sampler = rng.child(2)
    budget = spec.max_attempt_factor * total
    chunk = max(2 * total, 64)
    scale = None
    kept_x, kept_s = [], []
    n_kept = attempts = 0
    while n_kept < total:
        if attempts >= budget:
            raise GenerationError(
                f"accepted {n_kept} of {total} samples after {attempts} attempts; "
                f"separation d={spec.separation} is likely too large")
        count = min(chunk, budget - attempts)
        s = _draw_sparse_codes(sampler, count, P, K, spec.coefficient_stddev)
        attempts += count
        if scale is None:
            scale = 1.0
            if spec.normalize_samples:
                scale = float(np.linalg.norm(s @ D.T, axis=1).max())
        if scale != 1.0:
            s /= scale
        x = s @ D.T
        f = margin(w, b / scale, x)
        ok = (np.abs(f) >= spec.separation) & (f != 0.0)
        if spec.normalize_samples:
            ok &= np.linalg.norm(x, axis=1) <= 1.0
        kept_x.append(x[ok])
        kept_s.append(s[ok])
        n_kept += int(ok.sum())

    X = np.concatenate(kept_x)[:total]
    S = np.concatenate(kept_s)[:total]
    b /= scale
    y = (margin(w, b, X) > 0).astype(np.int64)
    ds = MaskedDataset(X, np.ones_like(X, dtype=bool), y, 2)
    truth = GroundTruth(D, w, b, S, spec.n_train, scale)
    return ds, truth


def split(dataset, n_train):
    """First ``n_train`` rows and the remainder."""
    idx = np.arange(dataset.n_samples)
    return dataset.subset(idx[:n_train]), dataset.subset(idx[n_train:])


def _occlusion_shape(area, H, W):
    best = None
    for h in range(H, 0, -1):
        w = min(max(int(round(area / h)), 1), W)
        err = abs(h * w - area)
        if best is None or err < best[0]:
            best = (err, h, w)
    _, h, w = best
    if h * w >= H * W:
        w -= 1
    return h, w


def apply_mask(dataset, spec):
    """Hide entries of a fully observed dataset according to ``spec``."""
    if not dataset.is_complete:
        raise ContractViolation("apply_mask expects a fully observed dataset")
    I, N = dataset.features.shape
    rng = RngStream(spec.seed, key=(7,))
    p = spec.missing_fraction
    if spec.kind == "full" or p == 0.0:
        return dataset

    if spec.kind == "uniform_random":
        mask = rng.uniform(size=(I, N)) >= p
        bad = np.flatnonzero(~mask.any(axis=1))
        while bad.size:
            mask[bad] = rng.uniform(size=(bad.size, N)) >= p
            bad = bad[~mask[bad].any(axis=1)]
        return dataset.with_mask(mask)

    H, W = spec.image_height, spec.image_width
    if H * W != N:
        raise ContractViolation(f"occlusion shape {H}x{W} does not match {N} features")
    area = int(round(p * N))
    if area == 0:
        return dataset
    h, w = _occlusion_shape(area, H, W)
    top = rng.integers(0, H - h + 1, size=I)
    left = rng.integers(0, W - w + 1, size=I)
    rows = np.arange(H)[None, :, None]
    cols = np.arange(W)[None, None, :]
    hidden = ((rows >= top[:, None, None]) & (rows < (top + h)[:, None, None])
              & (cols >= left[:, None, None]) & (cols < (left + w)[:, None, None]))
    return dataset.with_mask(~hidden.reshape(I, N))


def _parse_float(cell, row, col):
    try:
        v = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric value {cell!r}", row, col) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {cell!r}", row, col)
    return v


def load_csv(path, missing_token="", num_classes=None):
    """Read a CSV whose last column is the integer label.

    Cells equal to ``missing_token`` are unobserved.  Rows and columns in
    error messages are 1-based.
    """
    feats, masks, labels = [], [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for r, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError("need at least one feature column and a label", r)
            elif len(row) != width:
                raise ParseError(f"expected {width} cells, found {len(row)}", r)
            x = np.zeros(width - 1)
            m = np.zeros(width - 1, dtype=bool)
            for c, cell in enumerate(row[:-1]):
                if cell.strip() == missing_token:
                    continue
                x[c] = _parse_float(cell, r, c + 1)
                m[c] = True
            if not m.any():
                raise ParseError("sample has no observed feature", r)
            try:
                y = int(row[-1])
            except ValueError:
                raise ParseError(f"label {row[-1]!r} is not an integer", r, width) from None
            if y < 0 or (num_classes is not None and y >= num_classes):
                raise ParseError(f"label {y} outside [0, {num_classes})", r, width)
            feats.append(x)
            masks.append(m)
            labels.append(y)
    if not feats:
        raise ParseError(f"{path}: no data rows")
    labels = np.array(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    return MaskedDataset(np.array(feats), np.array(masks), labels, num_classes)


def save_csv(dataset, path, missing_token=""):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for x, m, y in zip(dataset.features, dataset.mask, dataset.labels):
            cells = [repr(float(v)) if o else missing_token for v, o in zip(x, m)]
            cells.append(str(int(y)))
            writer.writerow(cells)


def _read_idx(path, magic):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ParseError(f"{path}: truncated IDX header")
    found = struct.unpack(">I", raw[:4])[0]
    if found != magic:
        raise ParseError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header < size:
        raise ParseError(f"{path}: truncated payload ({len(raw) - header} of {size} bytes)")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx(images_path, labels_path, num_classes=None):
    """MNIST-style IDX image/label pair, pixels scaled to [0, 1], full mask."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC).astype(np.int64)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    if num_classes is None:
        num_classes = int(labels.max()) + 1 if labels.size else 1
    return MaskedDataset(x, np.ones_like(x, dtype=bool), labels, num_classes)
