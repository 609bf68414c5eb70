"""Experiment configuration: a flat TOML file with a fixed, typed schema.

Every key is optional and falls back to the default listed in ``SCHEMA``;
unknown keys, wrong types and out-of-range values are errors.  Keys marked
``sweep`` accept either a scalar or a list, and the runner iterates over
the Cartesian product of all swept values.  See ``configs/comparison.toml`` for a
commented example.
"""

import sys
from dataclasses import dataclass, field

from ..data import MaskSpec, SyntheticSpec
from ..errors import ContractViolation
from ..imputers import ImputerKind
from ..training import TrainConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DATASETS = ("synthetic", "csv", "idx")
TEST_CONDITIONS = ("complete", "masked")
FIXED_METHODS = ("simult", "seq_sp", "zf", "mu", "ms", "complete_baseline")

# key: (type, default, sweepable)
SCHEMA = {
    "name": (str, "experiment", False),
    "dataset": (str, "synthetic", False),
    # synthetic data
    "n_features": (int, 100, False),
    "dict_atoms": (int, 200, False),
    "sparsity": (int, 4, True),
    "n_train": (int, 2000, False),
    "n_test": (int, 500, False),
    "separation": (float, 0.2, True),
    "coefficient_stddev": (float, 1.0, False),
    "bias_stddev": (float, 1.0, False),
    "normalize_samples": (bool, False, False),
    # file data
    "train_path": (str, "", False),
    "test_path": (str, "", False),
    "train_labels_path": (str, "", False),
    "test_labels_path": (str, "", False),
    "missing_token": (str, "", False),
    "num_classes": (int, 0, False),
    # masks
    "mask_kind": (str, "uniform_random", False),
    "missing_fraction": (float, 0.5, True),
    "image_height": (int, 0, False),
    "image_width": (int, 0, False),
    "test_condition": (str, "complete", False),
    # methods and model
    "methods": (list, ["simult", "seq_sp", "zf", "mu", "ms", "knn10"], False),
    "hidden": (list, [], False),
    # training
    "lam1": (float, 1.0, False),
    "lam2": (float, 1.0, False),
    "lr_theta": (float, 0.1, False),
    "lr_dict": (float, 0.1, False),
    "lr_code": (float, 0.1, False),
    "lr_code_test": (float, 0.1, False),
    "momentum": (float, 0.5, False),
    "n_iter": (int, 1000, False),
    "n_iter_test": (int, 200, False),
    "batch_size": (int, 100, False),
    "n_atoms": (int, 0, False),
    "j1_scale": (str, "as_paper", False),
    "pin_zeros": (bool, True, False),
    "code_init_stddev": (float, 0.1, False),
    "log_every": (int, 10, False),
    # tuning and repetition
    "grid_lam1": (list, [], False),
    "grid_lam2": (list, [], False),
    "grid_method": (str, "simult", False),
    "validation_fraction": (float, 0.2, False),
    "repetitions": (int, 1, False),
    "base_seed": (int, 0, False),
    "histogram_bins": (int, 20, False),
}

_TRAIN_KEYS = ("lam1", "lam2", "lr_theta", "lr_dict", "lr_code", "lr_code_test", "momentum",
               "n_iter", "n_iter_test", "batch_size", "n_atoms", "j1_scale", "pin_zeros",
               "code_init_stddev", "log_every")


def _coerce(key, value, typ):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is bool and not isinstance(value, bool):
        raise ContractViolation(f"{key}: expected true/false, got {value!r}")
    if typ is int and isinstance(value, bool):
        raise ContractViolation(f"{key}: expected an integer, got {value!r}")
    if not isinstance(value, typ):
        raise ContractViolation(f"{key}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def method_name(method):
    """Canonical method name; ``knn`` variants normalise to ``knn<k>``."""
    m = str(method).strip().lower()
    if m in FIXED_METHODS:
        return m
    if m.startswith("knn"):
        return ImputerKind.parse(m).name
    raise ContractViolation(f"unknown method {method!r}; expected one of {FIXED_METHODS} or knn<k>")


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = {}
        unknown = sorted(set(self.values) - set(SCHEMA))
        if unknown:
            raise ContractViolation(f"unknown config key(s): {', '.join(unknown)}")
        for key, (typ, default, sweep) in SCHEMA.items():
            v = self.values.get(key, default)
            if sweep and isinstance(v, list):
                if not v:
                    raise ContractViolation(f"{key}: sweep list is empty")
                v = [_coerce(key, x, typ) for x in v]
            else:
                v = _coerce(key, v, typ)
            vals[key] = v
        vals["methods"] = [method_name(m) for m in vals["methods"]]
        vals["hidden"] = [_coerce("hidden", h, int) for h in vals["hidden"]]
        vals["grid_lam1"] = [_coerce("grid_lam1", x, float) for x in vals["grid_lam1"]]
        vals["grid_lam2"] = [_coerce("grid_lam2", x, float) for x in vals["grid_lam2"]]
        object.__setattr__(self, "values", vals)
        self._validate()

    def _validate(self):
        v = self.values
        if v["dataset"] not in DATASETS:
            raise ContractViolation(f"dataset must be one of {DATASETS}")
        if v["test_condition"] not in TEST_CONDITIONS:
            raise ContractViolation(f"test_condition must be one of {TEST_CONDITIONS}")
        if v["repetitions"] < 1:
            raise ContractViolation("repetitions must be >= 1")
        if not 0.0 < v["validation_fraction"] <= 0.5:
            raise ContractViolation("validation_fraction must lie in (0, 0.5]")
        if not v["methods"]:
            raise ContractViolation("methods must not be empty")
        if any(h < 1 for h in v["hidden"]):
            raise ContractViolation("hidden widths must be >= 1")
        if v["base_seed"] < 0:
            raise ContractViolation("base_seed must be >= 0")
        if v["dataset"] != "synthetic" and not v["train_path"]:
            raise ContractViolation(f"dataset {v['dataset']!r} needs train_path")
        if v["dataset"] == "idx" and not v["train_labels_path"]:
            raise ContractViolation("idx data needs train_labels_path")
        method_name(v["grid_method"])
        # build once so range errors surface at load time
        self.train_config(0)
        for mf in self.sweep("missing_fraction"):
            self.mask_spec(mf, 0)
        if v["dataset"] == "synthetic":
            for K in self.sweep("sparsity"):
                for d in self.sweep("separation"):
                    self.synthetic_spec(K, d, 0)

    def __getitem__(self, key):
        return self.values[key]

    def sweep(self, key):
        v = self.values[key]
        return list(v) if isinstance(v, list) else [v]

    def cells(self):
        """Sweep cells ``(missing_fraction, separation, sparsity)`` in a fixed order."""
        return [(mf, d, K) for mf in self.sweep("missing_fraction")
                for d in self.sweep("separation") for K in self.sweep("sparsity")]

    def train_config(self, seed, **overrides):
        kw = {k: self.values[k] for k in _TRAIN_KEYS}
        kw.update(overrides)
        return TrainConfig(seed=seed, **kw)

    def mask_spec(self, missing_fraction, seed):
        kind = self.values["mask_kind"] if missing_fraction > 0 else "full"
        return MaskSpec(kind, missing_fraction, self.values["image_height"],
                        self.values["image_width"], seed)

    def synthetic_spec(self, sparsity, separation, seed):
        v = self.values
        return SyntheticSpec(v["n_features"], v["dict_atoms"], sparsity, v["n_train"],
                             v["n_test"], separation, v["coefficient_stddev"],
                             v["bias_stddev"], v["normalize_samples"], seed)

    def replace(self, **changes):
        vals = dict(self.values)
        vals.update(changes)
        return ExperimentConfig(vals)

    def as_dict(self):
        return dict(self.values)


def parse_config(text):
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ContractViolation(f"invalid TOML: {exc}") from None
    nested = [k for k, v in raw.items() if isinstance(v, dict)]
    if nested:
        raise ContractViolation(f"config must be flat; found table(s) {', '.join(nested)}")
    return ExperimentConfig(raw)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
