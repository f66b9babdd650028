"""Experiment configuration: JSON documents with dotted-path overrides."""
import copy
import json
import re

from .errors import ConfigError, UnparseableLabel
from .features import normalize_mode_name
from .similarity import SimilarityMeasure

_LABEL = re.compile(r"^H(\d+)(?:(L)|(R)|\((\d+),(\d+)\))$")


def parse_measure_label(label):
    """'H8L' -> (linear, 8); 'H4R' -> (rbf gamma=1, 4); 'H4(2,1)' -> (deformable, 4).

    A zero local deformation, e.g. 'H8(1,0)', gives the rigid measure.
    """
    m = _LABEL.match(str(label).strip())
    if not m:
        raise UnparseableLabel(f"cannot parse measure label {label!r}; expected H<cell>(L|R|(h_R,h_L))")
    cell = int(m.group(1))
    if cell < 1:
        raise UnparseableLabel(f"cell size must be positive in {label!r}")
    if m.group(2):
        return SimilarityMeasure.linear(), cell
    if m.group(3):
        return SimilarityMeasure.rbf(1.0), cell
    h_r, h_l = int(m.group(4)), int(m.group(5))
    if h_l == 0:
        return SimilarityMeasure.rigid(h_r), cell
    return SimilarityMeasure.deformable(h_r, h_l), cell


DEFAULTS = {
    "seed": 0,
    "dataset": {
        "source": "two_rings",   # two_rings | blobs | textures | csv | cifar10
        "paths": [],
        "test_paths": [],
        "n_per_class": 250,
        "noise_sigma": 0.05,
        "radii": [0.5, 1.0],
        "n_images": 200,
        "n_classes": 10,
        "test_fraction": 0.2,
        "limit": None,
    },
    "features": {"cell_size": 8, "normalization": "BE-SVM"},
    "measures": ["R[10]"],
    "basis": {"strategy": "indx", "per_class": 25, "fraction": None},
    "normalization": {"kernel_map": "BE-SVM"},
    "solver": {
        "method": "besvm",        # besvm | linear | nystrom | kernel
        "C": 1.0,
        "loss": "squared_hinge",
        "multiclass": "1vR",
        "bias": None,
        "epsilon": 1e-6,
        "fix": "clip",
    },
    "cv": {"folds": 10},
    "analysis": {"accuracies": {}},
    "bench": {"n_values": [250, 500, 1000], "basis_size": 50, "repeats": 3},
    "output": {"dir": "besvm_out", "model": None},
}


def _merge(base, override, path=""):
    for k, v in override.items():
        where = f"{path}.{k}" if path else k
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and not (k == "accuracies"):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where!r} must be an object")
            _merge(base[k], v, where)
        else:
            base[k] = v
    return base


def _coerce(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg, dotted, value):
    """Set ``cfg[a][b] = value`` for ``dotted = 'a.b'``; value text is JSON-decoded when possible."""
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"unknown config key {dotted!r}")
        node = node[k]
    if not isinstance(node, dict) or keys[-1] not in node:
        raise ConfigError(f"unknown config key {dotted!r}")
    node[keys[-1]] = _coerce(value) if isinstance(value, str) else value
    return cfg


def measure_spec(entry):
    """Normalize one ``measures`` entry to (label, measure, cell_size or None)."""
    if isinstance(entry, dict):
        d = dict(entry)
        label = d.pop("label", None)
        cell = d.pop("cell_size", None)
        try:
            measure = SimilarityMeasure.from_dict(d)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad measure entry {entry!r}: {exc}") from None
        return label or (f"H{cell}" if cell else "") + measure.label, measure, cell
    text = str(entry)
    m = re.fullmatch(r"(L|R(?:\[([0-9.eE+-]+)\])?)", text)
    if m:  # vector measures without a HOG cell prefix
        if text == "L":
            return text, SimilarityMeasure.linear(), None
        return text, SimilarityMeasure.rbf(float(m.group(2)) if m.group(2) else 1.0), None
    measure, cell = parse_measure_label(text)
    return text, measure, cell


def validate(cfg):
    try:
        normalize_mode_name(cfg["features"]["normalization"])
        normalize_mode_name(cfg["normalization"]["kernel_map"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg["solver"]["method"] not in ("besvm", "linear", "nystrom", "kernel"):
        raise ConfigError(f"unknown solver.method {cfg['solver']['method']!r}")
    if not cfg["measures"] and cfg["solver"]["method"] != "linear":
        raise ConfigError("at least one measure is required")
    for entry in cfg["measures"]:
        measure_spec(entry)
    if not float(cfg["solver"]["C"]) > 0:
        raise ConfigError("solver.C must be positive")
    return cfg


def load_config(path=None, overrides=()):
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        _merge(cfg, doc)
    for dotted, value in overrides:
        apply_override(cfg, dotted, value)
    return validate(cfg)


def canonical(cfg):
    """Stable text form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"
