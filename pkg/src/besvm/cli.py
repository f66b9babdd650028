"""besvm command line: train, eval, embed, select-basis, analyze, bench, cv.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical failure.
"""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import _backend, datasets
from .analysis import pearson_r, spectrum_report, time_call
from .basis import select_basis
from .config import canonical, load_config, measure_spec
from .embedding import BasisSet, embed_dataset
from .errors import BesvmError, ConfigError, DataError, NumericalError
from .features import compute_hog_grids
from .pipeline import (
    BESVMClassifier,
    KernelSVMClassifier,
    LinearSVMClassifier,
    NystromClassifier,
    apply_feature_norm,
    estimator_from_dict,
    fit_feature_norm,
)
from .similarity import gram_values
from .solver import cross_validate

log = logging.getLogger("besvm")


# data ---------------------------------------------------------------------


class Data:
    """Labels plus lazily computed representations keyed by name."""

    def __init__(self, labels, images=None, points=None):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.images = images
        self.points = points
        self._reps = {}

    def __len__(self):
        return len(self.labels)

    def rep(self, key):
        if key not in self._reps:
            if key == "raw":
                if self.points is None:
                    raise ConfigError("vector measures on image data need an H<cell> prefix")
                self._reps[key] = self.points
            else:
                if self.images is None:
                    raise ConfigError(f"representation {key!r} needs image data")
                self._reps[key] = compute_hog_grids(self.images, int(key[3:]))
        return self._reps[key]

    def subset(self, idx):
        out = Data(self.labels[idx],
                   None if self.images is None else self.images[idx],
                   None if self.points is None else self.points[idx])
        out._reps = {k: v[idx] for k, v in self._reps.items()}
        return out


def _limit(arrs, limit):
    if limit is None:
        return arrs
    return [a[:int(limit)] for a in arrs]


def load_data(cfg):
    """(train, test) Data objects for the configured source."""
    ds = cfg["dataset"]
    seed = int(cfg["seed"])
    src = ds["source"]
    test = None
    if src == "two_rings":
        s = datasets.make_two_rings(int(ds["n_per_class"]), tuple(ds["radii"]), float(ds["noise_sigma"]), seed)
        full = Data(s.labels, points=s.points)
    elif src == "blobs":
        k = int(ds["n_classes"])
        angles = 2 * np.pi * np.arange(k) / k
        s = datasets.make_blobs(int(ds["n_per_class"]), np.column_stack([np.cos(angles), np.sin(angles)]),
                                float(ds["noise_sigma"]), seed)
        full = Data(s.labels, points=s.points)
    elif src == "textures":
        s = datasets.make_textures(int(ds["n_images"]), int(ds["n_classes"]), seed=seed)
        full = Data(s.labels, images=s.images)
    elif src == "csv":
        if not ds["paths"]:
            raise ConfigError("dataset.paths must name a CSV file")
        s = datasets.load_csv(ds["paths"][0])
        full = Data(s.labels, points=s.points)
        if ds["test_paths"]:
            t = datasets.load_csv(ds["test_paths"][0])
            test = Data(t.labels, points=t.points)
    elif src == "cifar10":
        if not ds["paths"]:
            raise ConfigError("dataset.paths must list CIFAR-10 batch files")
        s = datasets.load_cifar10(ds["paths"])
        images, labels = _limit([s.images, s.labels], ds["limit"])
        full = Data(labels, images=images)
        if ds["test_paths"]:
            t = datasets.load_cifar10(ds["test_paths"])
            images, labels = _limit([t.images, t.labels], ds["limit"])
            test = Data(labels, images=images)
    else:
        raise ConfigError(f"unknown dataset.source {src!r}")

    if test is None:
        n = len(full)
        n_test = int(round(float(ds["test_fraction"]) * n))
        if n_test <= 0 or n_test >= n:
            raise ConfigError("dataset.test_fraction leaves an empty train or test split")
        test = full.subset(np.arange(n - n_test, n))
        full = full.subset(np.arange(n - n_test))
    return full, test


def _rep_key(cell, data):
    if data.images is None:
        return "raw"
    return f"hog{cell}"


def keyed_measures(cfg, data):
    """[(representation key, measure)] and their labels."""
    specs = [measure_spec(e) for e in cfg["measures"]]
    out, labels = [], []
    for label, measure, cell in specs:
        if data.images is None and measure.on_grids:
            raise ConfigError(f"measure {label} needs image data (cell grids)")
        if data.images is not None and cell is None:
            cell = int(cfg["features"]["cell_size"])
        out.append((_rep_key(cell, data), measure))
        labels.append(label)
    return out, labels


def payload(data, keys):
    return {k: data.rep(k) for k in dict.fromkeys(keys)}


def _per_class(cfg, labels):
    b = cfg["basis"]
    if b.get("fraction"):
        n_classes = len(np.unique(labels))
        return max(1, int(round(float(b["fraction"]) * len(labels) / n_classes)))
    return int(b["per_class"])


def build_estimator(cfg, train):
    s = cfg["solver"]
    method = s["method"]
    seed = int(cfg["seed"])
    fnorm = cfg["features"]["normalization"]
    if method == "linear":
        bias = True if s["bias"] is None else bool(s["bias"])
        key = _rep_key(int(cfg["features"]["cell_size"]), train)
        return LinearSVMClassifier(C=float(s["C"]), feature_norm=fnorm, bias=bias, seed=seed,
                                   epsilon=float(s["epsilon"]), loss=s["loss"]), [key]
    measures, _ = keyed_measures(cfg, train)
    keys = [k for k, _ in measures]
    per_class = _per_class(cfg, train.labels)
    if per_class < 1:
        raise DataError("basis is empty (basis.per_class < 1)")
    bias = False if s["bias"] is None else bool(s["bias"])
    if method == "besvm":
        est = BESVMClassifier(measures, per_class=per_class, basis_strategy=cfg["basis"]["strategy"],
                              C=float(s["C"]), feature_norm=fnorm, map_norm=cfg["normalization"]["kernel_map"],
                              bias=bias, seed=seed, epsilon=float(s["epsilon"]), loss=s["loss"])
    elif method == "nystrom":
        key, measure = measures[0]
        est = NystromClassifier(measure, per_class=per_class, basis_strategy=cfg["basis"]["strategy"],
                                C=float(s["C"]), fix=s["fix"], feature_norm=fnorm, bias=bias, seed=seed,
                                epsilon=float(s["epsilon"]), key=key)
        keys = [key]
    else:
        key, measure = measures[0]
        est = KernelSVMClassifier(measure, C=float(s["C"]), feature_norm=fnorm, key=key)
        keys = [key]
    return est, keys


# reports --------------------------------------------------------------------


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def _metric_rows(pred, labels, est):
    rows = [("accuracy", "all", float(np.mean(pred == labels)))]
    for c in np.unique(labels):
        mask = labels == c
        rows.append(("class_accuracy", int(c), float(np.mean(pred[mask] == c))))
    rows.append(("n_parameters", "all", int(est.n_parameters)))
    rows.append(("n_supporting_exemplars", "all", int(est.n_supporting)))
    rows.append(("n_test", "all", int(len(labels))))
    return rows


def _out_dir(cfg):
    d = cfg["output"]["dir"]
    os.makedirs(d, exist_ok=True)
    return d


# subcommands ------------------------------------------------------------------


def cmd_train(cfg, args):
    train, test = load_data(cfg)
    est, keys = build_estimator(cfg, train)
    est.fit(payload(train, keys), train.labels)
    pred = est.predict(payload(test, keys))
    out = _out_dir(cfg)
    model_path = cfg["output"]["model"] or os.path.join(out, "model.json")
    doc = est.to_dict()
    doc["config"] = cfg
    doc["keys"] = list(dict.fromkeys(keys))
    with open(model_path, "w") as fh:
        json.dump(doc, fh)
    _write_rows(os.path.join(out, "metrics.csv"), ["metric", "class", "value"],
                [("n_train", "all", len(train))] + _metric_rows(pred, test.labels, est))
    _write_rows(os.path.join(out, "timings.csv"), ["stage", "seconds"], sorted(est.timings.items()))
    print(f"accuracy {np.mean(pred == test.labels):.4f}; model -> {model_path}")
    return 0


def cmd_eval(cfg, args):
    model_path = args.model or cfg["output"]["model"] or os.path.join(cfg["output"]["dir"], "model.json")
    if not os.path.exists(model_path):
        raise DataError(f"no such model file: {model_path}")
    with open(model_path) as fh:
        doc = json.load(fh)
    est = estimator_from_dict(doc)
    _, test = load_data(cfg)
    keys = doc.get("keys") or ["raw"]
    pred = est.predict(payload(test, keys))
    out = _out_dir(cfg)
    _write_rows(os.path.join(out, "eval_metrics.csv"), ["metric", "class", "value"],
                _metric_rows(pred, test.labels, est))
    print(f"accuracy {np.mean(pred == test.labels):.4f}")
    return 0


def cmd_embed(cfg, args):
    if cfg["solver"]["method"] != "besvm":
        raise ConfigError("embed requires solver.method = besvm")
    train, test = load_data(cfg)
    measures, _ = keyed_measures(cfg, train)
    keys = [k for k, _ in measures]
    fstats = fit_feature_norm(payload(train, keys), cfg["features"]["normalization"])
    tr = apply_feature_norm(payload(train, keys), fstats)
    te = apply_feature_norm(payload(test, keys), fstats)
    idx = select_basis(cfg["basis"]["strategy"], train.labels, _per_class(cfg, train.labels), seed=int(cfg["seed"]))
    basis = BasisSet.from_indices(tr, train.labels, idx)
    mode = cfg["normalization"]["kernel_map"]
    E_tr = embed_dataset(basis, measures, tr, train.labels, mode=mode)
    E_te = embed_dataset(basis, measures, te, test.labels, stats=E_tr.stats)
    out = _out_dir(cfg)
    for name, E in (("embedded_train.csv", E_tr), ("embedded_test.csv", E_te)):
        _write_rows(os.path.join(out, name), ["label"] + [f"f{j}" for j in range(E.matrix.shape[1])],
                    ([int(l)] + [float(v) for v in row] for l, row in zip(E.labels, E.matrix)))
    print(f"embedded {len(E_tr.labels)} + {len(E_te.labels)} samples into {E_tr.matrix.shape[1]} dims")
    return 0


def cmd_select_basis(cfg, args):
    train, _ = load_data(cfg)
    per_class = _per_class(cfg, train.labels)
    if per_class < 1:
        raise DataError("basis is empty (basis.per_class < 1)")
    S = None
    if cfg["basis"]["strategy"].lower().startswith("km"):
        measures, _ = keyed_measures(cfg, train)
        key, measure = measures[0]
        data = train.rep(key)
        S = gram_values(measure, data, data)
        S = (S + S.T) / 2
    idx = select_basis(cfg["basis"]["strategy"], train.labels, per_class, seed=int(cfg["seed"]), similarity=S)
    classes, counts = np.unique(train.labels[idx], return_counts=True)
    doc = {"version": 1, "strategy": cfg["basis"]["strategy"], "indices": idx.tolist(),
           "labels": train.labels[idx].tolist(),
           "per_class_counts": {str(int(c)): int(n) for c, n in zip(classes, counts)}}
    out = _out_dir(cfg)
    with open(os.path.join(out, "basis.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    print(f"selected {len(idx)} basis exemplars")
    return 0


def cmd_analyze(cfg, args):
    train, _ = load_data(cfg)
    per_class = _per_class(cfg, train.labels)
    if per_class < 1:
        raise DataError("basis is empty (basis.per_class < 1)")
    idx = select_basis(cfg["basis"]["strategy"], train.labels, per_class, seed=int(cfg["seed"]))
    measures, labels = keyed_measures(cfg, train)
    keys = [k for k, _ in measures]
    data = apply_feature_norm(payload(train, keys), fit_feature_norm(payload(train, keys),
                                                                     cfg["features"]["normalization"]))
    reports = []
    for (key, measure), label in zip(measures, labels):
        B = data[key][idx]
        reports.append(spectrum_report(label, gram_values(measure, B, B)))
    out = _out_dir(cfg)
    _write_rows(os.path.join(out, "eigen.csv"), ["measure", "NgRat", "NgEng"],
                [(r.label, r.ng_rat, r.ng_eng) for r in reports])
    accs = cfg["analysis"]["accuracies"] or {}
    if accs:
        rows = []
        for column, values in sorted(accs.items()):
            if len(values) != len(reports):
                raise ConfigError(f"analysis.accuracies.{column} needs one value per measure")
            for stat in ("NgRat", "NgEng"):
                xs = [r.ng_rat if stat == "NgRat" else r.ng_eng for r in reports]
                rows.append((column, stat, pearson_r(xs, values)))
        _write_rows(os.path.join(out, "correlations.csv"), ["accuracy_column", "statistic", "pearson_r"], rows)
    for r in reports:
        print(f"{r.label}: NgRat {r.ng_rat:.3f} NgEng {r.ng_eng:.3f}")
    return 0


def _bench_data(cfg, n):
    local = json.loads(json.dumps(cfg))
    ds = local["dataset"]
    if ds["source"] in ("two_rings", "blobs"):
        k = 2 if ds["source"] == "two_rings" else int(ds["n_classes"])
        ds["n_per_class"] = max(1, n // k)
    elif ds["source"] == "textures":
        ds["n_images"] = n
    else:
        ds["limit"] = n
    ds["test_fraction"] = 0.5
    train, _ = load_data(local)
    # keep exactly n training samples when the source allows
    return local, train


def cmd_bench(cfg, args):
    b = cfg["bench"]
    n_values = [int(v) for v in b["n_values"]]
    B = int(b["basis_size"])
    if not n_values:
        raise ConfigError("bench.n_values is empty")
    if B > min(n_values):
        raise DataError(f"basis size {B} exceeds the smallest data size {min(n_values)}")
    rows = []
    for n in n_values:
        local, train = _bench_data(cfg, 2 * n)
        classes = np.unique(train.labels)
        local["basis"]["per_class"] = max(1, B // len(classes))
        local["basis"]["fraction"] = None
        for method in ("besvm", "kernel"):
            local["solver"]["method"] = method
            est, keys = build_estimator(local, train)
            data = payload(train, keys)
            t = time_call(lambda: est.fit(data, train.labels), repeats=int(b["repeats"]), warmup=1)
            rows.append((method, len(train), B, 1000.0 * t))
    out = _out_dir(cfg)
    _write_rows(os.path.join(out, "bench.csv"), ["method", "n", "B", "time_ms"], rows)
    for r in rows:
        print(f"{r[0]:>6} n={r[1]:<6} B={r[2]:<5} {r[3]:.1f} ms")
    return 0


def cmd_cv(cfg, args):
    train, _ = load_data(cfg)
    est, keys = build_estimator(cfg, train)
    res = cross_validate(est, payload(train, keys), train.labels, int(cfg["cv"]["folds"]), return_result=True)
    out = _out_dir(cfg)
    _write_rows(os.path.join(out, "cv.csv"), ["fold", "accuracy"],
                [(i, a) for i, a in enumerate(res.fold_accuracies)] + [("mean", res.mean)])
    print(f"{len(res.fold_accuracies)}-fold CV accuracy {res.mean:.4f}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "embed": cmd_embed,
    "select-basis": cmd_select_basis,
    "analyze": cmd_analyze,
    "bench": cmd_bench,
    "cv": cmd_cv,
}


def _parse_set(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    return key.lstrip("-"), value


def build_parser():
    parser = argparse.ArgumentParser(prog="besvm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s (backend: {_backend.NAME})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", help="experiment JSON file")
        p.add_argument("-s", "--set", dest="overrides", action="append", default=[], type=_parse_set,
                       metavar="KEY=VALUE", help="override a config leaf by dotted path, e.g. solver.C=2")
        p.add_argument("-o", "--out", help="output directory (same as output.dir)")
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
        if name == "eval":
            p.add_argument("-m", "--model", help="model JSON written by train")
    return parser


def _split_dotted_flags(argv):
    """Turn ``--solver.C=2`` style flags into ``--set solver.C=2``."""
    out = []
    for a in argv:
        if a.startswith("--") and "." in a.split("=", 1)[0] and "=" in a:
            out.extend(["--set", a[2:]])
        else:
            out.append(a)
    return out


def main(argv=None):
    argv = _split_dotted_flags(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.overrides)
        if args.out:
            overrides.append(("output.dir", args.out))
        cfg = load_config(args.config, overrides)
        if args.print_config:
            sys.stdout.write(canonical(cfg))
            return 0
        return COMMANDS[args.command](cfg, args)
    except BesvmError as exc:
        print(f"besvm {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, PermissionError) as exc:
        print(f"besvm {args.command}: error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"besvm {args.command}: numerical error: {exc}", file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
