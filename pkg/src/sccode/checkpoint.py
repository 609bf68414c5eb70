"""Binary checkpoints for dictionaries, codes, classifiers and trained models.

Layout (all integers little-endian)::

    magic   8 bytes  b"SCCKPT\\x00\\x01"
    meta    u32 length + UTF-8 JSON object
    count   u32 number of arrays
    array*  u16 name length, name (UTF-8), u8 dtype code, u8 ndim,
            ndim x u64 dims, payload (C order, little-endian)

Dtype codes: 0 float64, 1 int64, 2 bool (one byte per entry).
"""

import csv
import json
import struct

import numpy as np

from .classifier import MlpClassifier
from .errors import ParseError
from .training import TrainedModel

MAGIC = b"SCCKPT\x00\x01"
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<i8"), 2: np.dtype("?")}
_CODES = {"f": 0, "i": 1, "u": 1, "b": 2}


def write_arrays(path, arrays, meta=None):
    """Write a mapping ``name -> ndarray`` plus a JSON-able ``meta`` dict."""
    blob = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            arr = np.asarray(arr)
            code = _CODES.get(arr.dtype.kind)
            if code is None:
                raise TypeError(f"array {name!r}: unsupported dtype {arr.dtype}")
            arr = np.asarray(arr, dtype=_DTYPES[code], order="C")
            key = name.encode("utf-8")
            fh.write(struct.pack("<H", len(key)))
            fh.write(key)
            fh.write(struct.pack("<BB", code, arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise ParseError(f"checkpoint truncated while reading {what}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_arrays(path):
    """Inverse of :func:`write_arrays`; returns ``(arrays, meta)``."""
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise ParseError(f"{path}: not a checkpoint file (bad magic)")
    (mlen,) = r.unpack("<I", "metadata length")
    try:
        meta = json.loads(r.take(mlen, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: corrupt metadata: {exc}") from None
    (count,) = r.unpack("<I", "array count")
    arrays = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H", "array name length")
        name = r.take(nlen, "array name").decode("utf-8")
        code, ndim = r.unpack("<BB", f"header of {name!r}")
        if code not in _DTYPES:
            raise ParseError(f"array {name!r}: unknown dtype code {code}")
        shape = r.unpack(f"<{ndim}Q", f"shape of {name!r}")
        dt = _DTYPES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        arrays[name] = np.frombuffer(r.take(size, f"payload of {name!r}"), dtype=dt).reshape(shape).copy()
    if r.pos != len(r.data):
        raise ParseError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    return arrays, meta


def _classifier_arrays(clf, prefix="clf."):
    out = {}
    for l, (W, B) in enumerate(clf.layers):
        out[f"{prefix}W{l}"] = W
        out[f"{prefix}B{l}"] = B
    out[prefix + "head_w"] = clf.head_w
    out[prefix + "head_b"] = clf.head_b
    return out


def _classifier_from(arrays, depth, prefix="clf."):
    try:
        layers = [(arrays[f"{prefix}W{l}"], arrays[f"{prefix}B{l}"]) for l in range(depth)]
        return MlpClassifier(layers, arrays[prefix + "head_w"], arrays[prefix + "head_b"])
    except KeyError as exc:
        raise ParseError(f"checkpoint is missing classifier array {exc}") from None


def save_model(model, path, meta=None):
    """Write a :class:`TrainedModel` (or a bare classifier)."""
    if isinstance(model, MlpClassifier):
        model = TrainedModel(model)
    arrays = _classifier_arrays(model.classifier)
    for name in ("dictionary", "train_codes", "loss_trace", "sparsity_trace", "classifier_trace"):
        value = getattr(model, name)
        if value is not None:
            arrays[name] = value
    doc = {"kind": "trained_model", "depth": model.classifier.depth}
    doc.update(meta or {})
    write_arrays(path, arrays, doc)


def load_model(path):
    """Returns ``(TrainedModel, meta)``."""
    arrays, meta = read_arrays(path)
    if meta.get("kind") != "trained_model":
        raise ParseError(f"{path}: not a trained-model checkpoint")
    clf = _classifier_from(arrays, int(meta["depth"]))
    model = TrainedModel(clf, arrays.get("dictionary"), arrays.get("train_codes"))
    for name in ("loss_trace", "sparsity_trace"):
        if name in arrays:
            setattr(model, name, arrays[name])
    model.classifier_trace = arrays.get("classifier_trace")
    return model, meta


def write_loss_trace(model, path):
    """CSV with columns ``iteration, J0, J1, J2, mean_nnz`` (one row per logged iteration)."""
    lt, st = model.loss_trace, model.sparsity_trace
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "J0", "J1", "J2", "mean_nnz"])
        for (it, j0, j1, j2), (_, nnz) in zip(lt, st):
            w.writerow([int(it), repr(float(j0)), repr(float(j1)), repr(float(j2)),
                        repr(float(nnz))])
