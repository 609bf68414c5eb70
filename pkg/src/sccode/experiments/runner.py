"""Repetitions, sweeps, grid search and condition studies.

The unit of work is one ``(sweep cell, repetition)`` pair.  Repetition
``r`` uses seed ``base_seed + r`` for data generation, masks and every
training run, so results do not depend on the worker count or on the
order in which units finish.  Each unit runs with BLAS pinned to one
thread.
"""

import csv
import functools
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from multiprocessing import get_context

import numpy as np
from threadpoolctl import threadpool_limits

from ..classifier import predict
from ..data import apply_mask, generate_synthetic, load_csv, load_idx, split
from ..errors import ContractViolation, SccodeError
from ..imputers import FittedImputer, ImputerKind, impute, impute_test
from ..numerics import RngStream
from ..theory import check_conditions, condition_histogram
from ..training import (
    code_and_classify_test,
    train_classifier,
    train_sequential,
    train_simultaneous,
)
from .config import ExperimentConfig
from .stats import mean_sem, welch_t_test

logger = logging.getLogger(__name__)

TEST_MASK_SEED_OFFSET = 2**32
_ZERO_FILL = FittedImputer(ImputerKind("zero_fill"), None, None)
RESULT_FIELDS = ("method", "missing_fraction", "separation", "sparsity", "repetition", "seed",
                 "test_accuracy", "status")


@dataclass
class ResultRow:
    method: str
    missing_fraction: float
    separation: float
    sparsity: int
    repetition: int
    seed: int
    test_accuracy: float
    status: str = "ok"
    wall_time_seconds: float = 0.0


@dataclass(eq=False)
class ExperimentData:
    train_complete: object  # None when the training file is itself incomplete
    train: object
    test: object
    test_eval: object
    truth: object = None


@functools.lru_cache(maxsize=8)
def _load_file(kind, path, labels_path, missing_token, num_classes):
    if kind == "csv":
        return load_csv(path, missing_token, num_classes)
    return load_idx(path, labels_path, num_classes)


def load_data(cfg, cell, seed):
    """Training and test data for one sweep cell and seed."""
    mf, d, K = cell
    truth = None
    if cfg["dataset"] == "synthetic":
        ds, truth = generate_synthetic(cfg.synthetic_spec(K, d, seed))
        train, test = split(ds, cfg["n_train"])
    else:
        nc = cfg["num_classes"] or None
        train = _load_file(cfg["dataset"], cfg["train_path"], cfg["train_labels_path"],
                           cfg["missing_token"], nc)
        if not cfg["test_path"]:
            raise ContractViolation("file datasets need test_path")
        test = _load_file(cfg["dataset"], cfg["test_path"], cfg["test_labels_path"],
                          cfg["missing_token"], nc)
        if not test.is_complete:
            raise ContractViolation("the test file must be fully observed")
    if train.is_complete:
        train_complete = train
        train = apply_mask(train, cfg.mask_spec(mf, seed))
    else:
        train_complete = None
    test_eval = test
    if cfg["test_condition"] == "masked":
        test_eval = apply_mask(test, cfg.mask_spec(mf, seed + TEST_MASK_SEED_OFFSET))
    return ExperimentData(train_complete, train, test, test_eval, truth)


def _labels_accuracy(pred, labels):
    return float(np.mean(np.asarray(pred) == labels))


def fit_method(method, train, tc, hidden, train_complete=None):
    """Train one method; returns a predictor ``f(MaskedDataset) -> labels``."""
    if method in ("simult", "seq_sp"):
        fn = train_simultaneous if method == "simult" else train_sequential
        model = fn(train, hidden, tc)
        return lambda ds: code_and_classify_test(ds, model, tc).labels
    if method == "complete_baseline":
        if train_complete is None:
            raise ContractViolation("complete_baseline needs fully observed training data")
        clf, _ = train_classifier(train_complete.features, train_complete.labels,
                                  train_complete.num_classes, hidden, tc)
        return lambda ds: predict(clf, impute_test(ds, _ZERO_FILL).features).label
    imp, fitted = impute(train, method)
    clf, _ = train_classifier(imp.features, imp.labels, train.num_classes, hidden, tc)
    return lambda ds: predict(clf, impute_test(ds, fitted).features).label


def run_method(method, data, cfg, seed):
    tc = cfg.train_config(seed)
    predictor = fit_method(method, data.train, tc, tuple(cfg["hidden"]), data.train_complete)
    return _labels_accuracy(predictor(data.test_eval), data.test.labels)


def _run_unit(values, cell, rep):
    cfg = ExperimentConfig(values)
    seed = cfg["base_seed"] + rep
    rows = []
    with threadpool_limits(1):
        data = load_data(cfg, cell, seed)
        for method in cfg["methods"]:
            t0 = time.perf_counter()
            try:
                acc, status = run_method(method, data, cfg, seed), "ok"
            except SccodeError as exc:
                logger.warning("%s failed (cell %s, repetition %d): %s", method, cell, rep, exc)
                acc, status = float("nan"), f"failed: {type(exc).__name__}: {exc}"
            rows.append(ResultRow(method, cell[0], cell[1], cell[2], rep, seed, acc, status,
                                  time.perf_counter() - t0))
    return rows


def map_units(fn, args, workers=1):
    """``[fn(*a) for a in args]``, optionally across worker processes (order kept)."""
    args = list(args)
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    ctx = get_context("spawn")
    with ProcessPoolExecutor(max_workers=min(workers, len(args)), mp_context=ctx) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


def run_comparison(cfg, workers=1):
    """Every method on every sweep cell and repetition; returns ``(rows, summary)``."""
    units = [(cfg.values, cell, r) for cell in cfg.cells() for r in range(cfg["repetitions"])]
    rows = [row for chunk in map_units(_run_unit, units, workers) for row in chunk]
    return rows, summarize(rows)


def summarize(rows):
    """Per (cell, method) mean / s.e.m., plus Welch tests of ``simult`` against each method.

    Only rows with status ``ok`` enter the statistics.  Everything here can be
    recomputed from the result CSV.
    """
    groups = {}
    for r in rows:
        key = (r.missing_fraction, r.separation, r.sparsity)
        groups.setdefault(key, {}).setdefault(r.method, [])
        if r.status == "ok":
            groups[key][r.method].append(r.test_accuracy)
    out = []
    for (mf, d, K), by_method in groups.items():
        cell = {"missing_fraction": mf, "separation": d, "sparsity": K, "methods": {}}
        ref = by_method.get("simult", [])
        for method, accs in by_method.items():
            entry = {"n": len(accs), "mean": None, "sem": None}
            if accs:
                m, s = mean_sem(accs)
                entry.update(mean=m, sem=None if math.isnan(s) else s)
            if method != "simult" and len(ref) >= 2 and len(accs) >= 2:
                t, dof, p = welch_t_test(ref, accs)
                entry["vs_simult"] = {"test": "welch_two_sided_unpaired", "t": t,
                                      "dof": None if math.isnan(dof) else dof, "p": p}
            cell["methods"][method] = entry
        out.append(cell)
    return {"cells": out}


def _validation_split(train, fraction, seed):
    n = train.n_samples
    n_val = max(1, int(round(fraction * n)))
    if n_val >= n:
        raise ContractViolation("validation split leaves no training samples")
    perm = RngStream(seed, key=(11,)).permutation(n)
    return train.subset(np.sort(perm[n_val:])), train.subset(np.sort(perm[:n_val]))


def _grid_unit(values, lam1, lam2):
    cfg = ExperimentConfig(values)
    seed = cfg["base_seed"]
    with threadpool_limits(1):
        data = load_data(cfg, cfg.cells()[0], seed)
        fit, val = _validation_split(data.train, cfg["validation_fraction"], seed)
        tc = cfg.train_config(seed, lam1=lam1, lam2=lam2)
        try:
            predictor = fit_method(cfg["grid_method"], fit, tc, tuple(cfg["hidden"]))
            return _labels_accuracy(predictor(val), val.labels), "ok"
        except SccodeError as exc:
            return float("nan"), f"failed: {type(exc).__name__}: {exc}"


def grid_search(cfg, workers=1):
    """Validation accuracy for every ``(lam1, lam2)`` cell of the configured grid.

    Returns ``(best, table)`` where ``best = (lam1, lam2)`` maximises
    validation accuracy; ties prefer larger ``lam2`` and then smaller
    ``lam1``.  The first sweep cell and the base seed are used.
    """
    l1s = cfg["grid_lam1"] or [cfg["lam1"]]
    l2s = cfg["grid_lam2"] or [cfg["lam2"]]
    cells = [(a, b) for a in l1s for b in l2s]
    results = map_units(_grid_unit, [(cfg.values, a, b) for a, b in cells], workers)
    table = [{"lam1": a, "lam2": b, "validation_accuracy": acc, "status": st}
             for (a, b), (acc, st) in zip(cells, results)]
    scored = [r for r in table if r["status"] == "ok"]
    if not scored:
        raise SccodeError("every grid cell failed")
    best = max(scored, key=lambda r: (r["validation_accuracy"], r["lam2"], -r["lam1"]))
    return (best["lam1"], best["lam2"]), table


def _condition_unit(values, cell, rep):
    cfg = ExperimentConfig(values)
    seed = cfg["base_seed"] + rep
    with threadpool_limits(1):
        data = load_data(cfg, cell, seed)
        if data.train_complete is None:
            raise ContractViolation("condition checks need the complete training data")
        tc = cfg.train_config(seed)
        fn = train_simultaneous if cfg["grid_method"] == "simult" else train_sequential
        model = fn(data.train, tuple(cfg["hidden"]), tc)
        report = check_conditions(model, data.train_complete, data.train.mask,
                                  model.reconstructions())
    return report


def run_condition_study(cfg, workers=1):
    """Train on each cell / repetition and check the separability certificates.

    Returns a list of ``(cell, repetition, ConditionReport, summary)``; the
    summary is None for nonlinear classifiers.
    """
    units = [(cfg.values, cell, r) for cell in cfg.cells() for r in range(cfg["repetitions"])]
    reports = map_units(_condition_unit, units, workers)
    out = []
    for (_, cell, r), rep in zip(units, reports):
        summary = None
        if rep.linear:
            summary = condition_histogram(rep, cfg["histogram_bins"]).summary()
        out.append((cell, r, rep, summary))
    return out


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def rows_to_csv(rows, fields=RESULT_FIELDS):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        d = r if isinstance(r, dict) else asdict(r)
        w.writerow([_fmt(d[f]) for f in fields])
    return buf.getvalue()


def rows_to_json(rows, fields=RESULT_FIELDS):
    out = []
    for r in rows:
        d = r if isinstance(r, dict) else asdict(r)
        out.append({f: (None if isinstance(d[f], float) and math.isnan(d[f]) else d[f])
                    for f in fields})
    return json.dumps(out, indent=2, sort_keys=False) + "\n"


def read_result_csv(path):
    """Result rows back from a CSV written by :func:`rows_to_csv`."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ResultRow(rec["method"], float(rec["missing_fraction"]),
                                  float(rec["separation"]), int(rec["sparsity"]),
                                  int(rec["repetition"]), int(rec["seed"]),
                                  float(rec["test_accuracy"]), rec["status"]))
    return rows
