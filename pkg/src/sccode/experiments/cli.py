"""Command-line front end.

    sccode gen-data  --config C --out train.csv
    sccode train     --config C --checkpoint model.ckpt [--out trace.csv] [--method simult]
    sccode eval      --config C --checkpoint model.ckpt --out predictions.csv
    sccode compare   --config C --out results.csv [--workers N] [--format csv|json]
    sccode grid      --config C --out grid.csv [--workers N]
    sccode condcheck --config C --out conditions.csv [--checkpoint model.ckpt]

Every command writes ``<out>.manifest.json`` next to its main output.
Exit codes: 0 success, 2 usage or configuration errors, 1 runtime failures.
"""

import argparse
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .. import __version__, kernels
from ..checkpoint import load_model, save_model, write_loss_trace
from ..data import save_csv
from ..errors import ContractViolation, ParseError, SccodeError
from ..theory import check_conditions, condition_histogram
from ..training import code_and_classify_test, train_sequential, train_simultaneous
from .config import load_config
from .runner import (
    RESULT_FIELDS,
    grid_search,
    load_data,
    rows_to_csv,
    rows_to_json,
    run_comparison,
    run_condition_study,
)

logger = logging.getLogger("sccode")


class UsageError(Exception):
    pass


def sibling(path, suffix):
    p = Path(path)
    stem = p.name.rsplit(".", 1)[0] if "." in p.name else p.name
    return p.with_name(stem + suffix)


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _dump_json(path, doc):
    _write_text(path, json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else (str(v) if math.isinf(v) else v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _manifest(args, cfg, outputs, started, extra=None):
    doc = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": cfg.as_dict(),
        "base_seed": cfg["base_seed"],
        "seeds": [cfg["base_seed"] + r for r in range(cfg["repetitions"])],
        "outputs": [str(o) for o in outputs],
        "versions": {"sccode": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "kernel_backend": kernels.BACKEND,
        "wall_time_seconds": time.perf_counter() - started,
    }
    doc.update(extra or {})
    _dump_json(sibling(outputs[0], ".manifest.json"), doc)


def _table(rows, fields, fmt):
    return rows_to_json(rows, fields) if fmt == "json" else rows_to_csv(rows, fields)


def cmd_gen_data(args, cfg, started):
    data = load_data(cfg, cfg.cells()[0], cfg["base_seed"])
    test_path = sibling(args.out, ".test.csv")
    save_csv(data.train, args.out)
    save_csv(data.test, test_path)
    _manifest(args, cfg, [args.out, test_path], started)


def _train_model(args, cfg):
    if args.method not in ("simult", "seq_sp"):
        raise UsageError("--method must be simult or seq_sp")
    seed = cfg["base_seed"]
    data = load_data(cfg, cfg.cells()[0], seed)
    tc = cfg.train_config(seed)
    fn = train_simultaneous if args.method == "simult" else train_sequential
    with threadpool_limits(1):
        return fn(data.train, tuple(cfg["hidden"]), tc), data


def cmd_train(args, cfg, started):
    if not args.checkpoint:
        raise UsageError("train needs --checkpoint")
    model, _ = _train_model(args, cfg)
    save_model(model, args.checkpoint, {"method": args.method, "config": cfg.as_dict()})
    outputs = [args.checkpoint]
    if args.out:
        write_loss_trace(model, args.out)
        outputs = [args.out, args.checkpoint]
    _manifest(args, cfg, outputs, started)


def _need_checkpoint(args):
    if not args.checkpoint:
        raise UsageError(f"{args.command} needs --checkpoint")
    if not Path(args.checkpoint).is_file():
        raise UsageError(f"checkpoint not found: {args.checkpoint}")
    return load_model(args.checkpoint)[0]


def cmd_eval(args, cfg, started):
    model = _need_checkpoint(args)
    data = load_data(cfg, cfg.cells()[0], cfg["base_seed"])
    tc = cfg.train_config(cfg["base_seed"])
    with threadpool_limits(1):
        res = code_and_classify_test(data.test_eval, model, tc)
    rows = [{"index": i, "label": int(y), "prediction": int(p)}
            for i, (y, p) in enumerate(zip(data.test.labels, res.labels))]
    _write_text(args.out, _table(rows, ("index", "label", "prediction"), args.format))
    acc = float(np.mean(res.labels == data.test.labels))
    _dump_json(sibling(args.out, ".summary.json"), {"test_accuracy": acc, "n": len(rows)})
    _manifest(args, cfg, [args.out], started)


def cmd_compare(args, cfg, started):
    rows, summary = run_comparison(cfg, args.workers)
    _write_text(args.out, _table(rows, RESULT_FIELDS, args.format))
    _dump_json(sibling(args.out, ".summary.json"), summary)
    timing = [{"method": r.method, "repetition": r.repetition, "sparsity": r.sparsity,
               "missing_fraction": r.missing_fraction, "separation": r.separation,
               "wall_time_seconds": r.wall_time_seconds} for r in rows]
    _manifest(args, cfg, [args.out], started, {"timings": timing})


def cmd_grid(args, cfg, started):
    best, table = grid_search(cfg, args.workers)
    fields = ("lam1", "lam2", "validation_accuracy", "status")
    _write_text(args.out, _table(table, fields, args.format))
    _dump_json(sibling(args.out, ".summary.json"),
               {"best_lam1": best[0], "best_lam2": best[1], "method": cfg["grid_method"]})
    _manifest(args, cfg, [args.out], started)


_COND_FIELDS = ("missing_fraction", "separation", "sparsity", "repetition", "sample")


def _report_rows(cell, rep, report):
    for row in report.rows():
        sample = row.pop("sample")
        yield dict(zip(_COND_FIELDS, (*cell, rep, sample)), **row)


def cmd_condcheck(args, cfg, started):
    if args.checkpoint:
        model = _need_checkpoint(args)
        cell = cfg.cells()[0]
        data = load_data(cfg, cell, cfg["base_seed"])
        if data.train_complete is None:
            raise ContractViolation("condition checks need the complete training data")
        if model.train_codes is None or model.train_codes.shape[0] != data.train.n_samples:
            raise ContractViolation("checkpoint codes do not match the configured training data")
        report = check_conditions(model, data.train_complete, data.train.mask,
                                  model.reconstructions())
        summary = condition_histogram(report, cfg["histogram_bins"]).summary() if report.linear else None
        results = [(cell, 0, report, summary)]
    else:
        results = run_condition_study(cfg, args.workers)
    rows = [r for cell, rep, report, _ in results for r in _report_rows(cell, rep, report)]
    fields = list(rows[0]) if rows else list(_COND_FIELDS)
    _write_text(args.out, _table(rows, fields, args.format))
    summaries = [dict(zip(_COND_FIELDS[:4], (*cell, rep)), summary=summary)
                 for cell, rep, _, summary in results]
    _dump_json(sibling(args.out, ".summary.json"), {"runs": summaries})
    _manifest(args, cfg, [args.out], started)


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "grid": cmd_grid,
    "condcheck": cmd_condcheck,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sccode", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat TOML experiment config")
        p.add_argument("--out", required=name != "train", help="main output file")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--checkpoint", default=None, help="model checkpoint (train/eval/condcheck)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "train":
            p.add_argument("--method", default="simult", help="simult or seq_sp")
    return parser


def _error(kind, exc, code):
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}),
          file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        if not Path(args.config).is_file():
            raise UsageError(f"config not found: {args.config}")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(base_seed=args.seed)
        for target in (args.out, args.checkpoint if args.command == "train" else None):
            if target and not Path(target).resolve().parent.is_dir():
                raise UsageError(f"output directory does not exist: {Path(target).parent}")
    except (UsageError, ContractViolation, ParseError, OSError) as exc:
        return _error("usage", exc, 2)
    try:
        COMMANDS[args.command](args, cfg, started)
    except UsageError as exc:
        return _error("usage", exc, 2)
    except (SccodeError, OSError, ValueError) as exc:
        return _error("runtime", exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
