"""Experiment configuration: INI-style sections, typed keys, full validation.

Every problem found while parsing is collected and reported together, each
tagged with its ``section.key`` path and source line.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, replace

from .compressors import KINDS
from .core import ALGORITHMS
from .errors import ConfigError

OUT_DIR_ENV = "RCPP_OUT_DIR"
TOPOLOGIES = ("ring", "edgelist")


def _int(s):
    return int(s)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _bool(s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _str(s):
    return s.strip()


def _int_list(s):
    vals = [int(x) for x in s.replace(",", " ").split()]
    if not vals:
        raise ValueError("expected at least one integer")
    return tuple(vals)


def _name_list(s):
    vals = tuple(x for x in s.replace(",", " ").split())
    if not vals:
        raise ValueError("expected at least one name")
    return vals


def _k(s):
    return 0 if s.strip().lower() == "auto" else int(s)


# section -> key -> (parser, default, description)
SCHEMA = {
    "graph": {
        "topology": (_str, "ring", "ring (directed cycle plus random chords) or edgelist"),
        "n": (_int, 20, "number of agents"),
        "extra_edges": (_int, 20, "random chords added to the ring"),
        "seed": (_int, 0, "seed for chords and weight perturbation"),
        "random_weights": (_bool, True, "perturb the equal weights by seeded factors in [0.5, 1.5)"),
        "path": (_str, "", "edge-list file used when topology = edgelist"),
    },
    "problem": {
        "p": (_int, 10, "dimension of the decision variable"),
        "rho": (_float, 0.1, "ridge penalty, > 0"),
        "noise": (_float, 0.1, "observation noise standard deviation"),
        "seed": (_int, 0, "seed for features and observations"),
    },
    "algorithm": {
        "name": (_name_list, ("rcpp",), "one or more of rcpp, rcpp_static, pushpull"),
        "lambda": (_float, 0.02, "step size used by every agent"),
        "alpha_x": (_float, 0.5, "reference relaxation for X, in (0, 1/r]"),
        "alpha_y": (_float, 0.5, "reference relaxation for Y, in (0, 1/r]"),
        "gamma_x": (_float, 0.5, "consensus gain for X, in (0, 1]"),
        "gamma_y": (_float, 0.5, "consensus gain for Y, in (0, 1]"),
        "c0": (_float, 1.0, "initial squared scale"),
        "c": (_float, 0.995, "squared-scale decay ratio per iteration, in (0, 1]"),
        "K": (_int, 5000, "iteration budget"),
    },
    "compressor": {
        "kind": (_str, "qn", "identity, qn, topk, qtn or uniform"),
        "b": (_int, 2, "bits per entry for qn / qtn"),
        "k": (_k, 0, "entries kept by topk / qtn; auto = ceil(p / 2)"),
        "level": (_float, 1.0, "grid step of the uniform quantiser"),
    },
    "output": {
        "directory": (_str, "runs", f"output directory (default taken from ${OUT_DIR_ENV} when set)"),
        "seeds": (_int_list, (0,), "compression-noise seeds, one run per seed and algorithm"),
        "workers": (_int, 1, "parallel worker processes"),
        "burn_in": (_int, 0, "iterations skipped before fitting the rate"),
        "target_residual": (_float, 1e-8, "a run passes when its final residual is below this"),
        "plateau_residual": (_float, 1e-4, "final residuals above this are flagged as a plateau"),
    },
}


@dataclass(frozen=True)
class GraphConfig:
    topology: str
    n: int
    extra_edges: int
    seed: int
    random_weights: bool
    path: str


@dataclass(frozen=True)
class ProblemConfig:
    p: int
    rho: float
    noise: float
    seed: int


@dataclass(frozen=True)
class AlgorithmConfig:
    name: tuple
    lambda_: float
    alpha_x: float
    alpha_y: float
    gamma_x: float
    gamma_y: float
    c0: float
    c: float
    K: int


@dataclass(frozen=True)
class CompressorConfig:
    kind: str
    b: int
    k: int
    level: float


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    seeds: tuple
    workers: int
    burn_in: int
    target_residual: float
    plateau_residual: float


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphConfig
    problem: ProblemConfig
    algorithm: AlgorithmConfig
    compressor: CompressorConfig
    output: OutputConfig

    def to_text(self) -> str:
        """Canonical INI text; parsing it reproduces this config."""
        lines = []
        for sec in SCHEMA:
            obj = getattr(self, sec)
            lines.append(f"[{sec}]")
            for key in SCHEMA[sec]:
                val = getattr(obj, _attr(key))
                lines.append(f"{key} = {'auto' if key == 'k' and val == 0 else _render(val)}")
            lines.append("")
        return "\n".join(lines)

    def with_overrides(self, **sections) -> "ExperimentConfig":
        return replace(self, **{s: replace(getattr(self, s), **kv) for s, kv in sections.items()})


_SECTION_TYPES = {
    "graph": GraphConfig,
    "problem": ProblemConfig,
    "algorithm": AlgorithmConfig,
    "compressor": CompressorConfig,
    "output": OutputConfig,
}


def _attr(key):
    return "lambda_" if key == "lambda" else key


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _line_index(text):
    """Map (section, key) to 1-based line numbers."""
    where = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            where.setdefault((section, None), no)
        elif section is not None:
            for sep in ("=", ":"):
                if sep in line:
                    where[(section, line.split(sep, 1)[0].strip())] = no
                    break
    return where


def default_config() -> ExperimentConfig:
    return parse_config_text("")


def parse_config(path, overrides=()) -> ExperimentConfig:
    if not os.path.exists(path):
        raise ConfigError([f"{path}: config file not found"])
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, overrides, source=str(path))


def parse_config_text(text, overrides=(), source="<config>") -> ExperimentConfig:
    """Parse, apply ``section.key=value`` overrides, validate; raise ConfigError listing every problem."""
    errors = []
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"{source}: {exc}"]) from exc
    lines = _line_index(text)

    def loc(sec, key=None):
        name = f"{sec}.{key}" if key else f"[{sec}]"
        no = lines.get((sec, key))
        return f"{name} ({source}:{no})" if no else name

    raw = {sec: {} for sec in SCHEMA}
    for sec in cp.sections():
        if sec not in SCHEMA:
            errors.append(f"{loc(sec)}: unknown section; expected one of {', '.join(SCHEMA)}")
            continue
        for key, val in cp.items(sec):
            if key not in SCHEMA[sec]:
                errors.append(f"{loc(sec, key)}: unknown key; valid keys are {', '.join(SCHEMA[sec])}")
                continue
            raw[sec][key] = val
    for ov in overrides:
        path, sep, val = ov.partition("=")
        sec, dot, key = path.strip().partition(".")
        if not sep or not dot:
            errors.append(f"--set {ov!r}: expected section.key=value")
        elif sec not in SCHEMA or key not in SCHEMA[sec]:
            errors.append(f"--set {ov!r}: unknown key {path.strip()}")
        else:
            raw[sec][key] = val

    values = {}
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, (conv, default, _) in keys.items():
            if key in raw[sec]:
                try:
                    values[sec][_attr(key)] = conv(raw[sec][key])
                except ValueError as exc:
                    errors.append(f"{loc(sec, key)}: cannot parse {raw[sec][key]!r}: {exc}")
                    values[sec][_attr(key)] = default
            else:
                if sec == "output" and key == "directory":
                    default = os.environ.get(OUT_DIR_ENV, default)
                values[sec][_attr(key)] = default
    errors += _validate(values, loc)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**{sec: _SECTION_TYPES[sec](**values[sec]) for sec in SCHEMA})


def _validate(v, loc):
    errs = []
    g, pr, a, cm, o = (v[s] for s in ("graph", "problem", "algorithm", "compressor", "output"))

    def need(ok, sec, key, msg):
        if not ok:
            errs.append(f"{loc(sec, key)}: {msg}")

    need(g["topology"] in TOPOLOGIES, "graph", "topology",
         f"{g['topology']!r} is not one of {', '.join(TOPOLOGIES)}")
    need(g["n"] >= 1, "graph", "n", "must be >= 1")
    need(g["extra_edges"] >= 0, "graph", "extra_edges", "must be >= 0")
    if g["topology"] == "edgelist":
        need(bool(g["path"]), "graph", "path", "required when topology = edgelist")
    need(pr["p"] >= 1, "problem", "p", "must be >= 1")
    need(pr["rho"] > 0, "problem", "rho", "must be > 0")
    need(pr["noise"] >= 0, "problem", "noise", "must be >= 0")
    for name in a["name"]:
        need(name in ALGORITHMS, "algorithm", "name",
             f"{name!r} is not one of {', '.join(ALGORITHMS)}")
    need(a["lambda_"] > 0, "algorithm", "lambda", "must be > 0")
    for key in ("gamma_x", "gamma_y"):
        need(0 < a[key] <= 1, "algorithm", key,
             f"{a[key]} outside the admissible consensus-gain range (0, 1]")
    need(a["c0"] > 0, "algorithm", "c0", "must be > 0")
    need(0 < a["c"] <= 1, "algorithm", "c", f"{a['c']} outside (0, 1]")
    need(a["K"] >= 0, "algorithm", "K", "must be >= 0")
    kind_ok = cm["kind"] in KINDS
    need(kind_ok, "compressor", "kind", f"{cm['kind']!r} is not one of {', '.join(KINDS)}")
    need(cm["b"] >= 1, "compressor", "b", "must be >= 1")
    need(cm["k"] == 0 or 1 <= cm["k"] <= pr["p"], "compressor", "k", f"must be auto or in [1, p={pr['p']}]")
    need(cm["level"] > 0, "compressor", "level", "must be > 0")
    need(o["workers"] >= 1, "output", "workers", "must be >= 1")
    need(o["burn_in"] >= 0, "output", "burn_in", "must be >= 0")
    need(o["target_residual"] > 0, "output", "target_residual", "must be > 0")
    if kind_ok and not errs:
        from .compressors import make_compressor

        spec = make_compressor(cm["kind"], pr["p"], b=cm["b"], k=cm["k"] or None, level=cm["level"])
        for key in ("alpha_x", "alpha_y"):
            need(0 < a[key] <= 1 / spec.r, "algorithm", key,
                 f"{a[key]} outside the admissible scaling range (0, 1/r] = (0, {1 / spec.r:.6g}] for {cm['kind']}")
    return errs


def reference_page() -> str:
    """Markdown table of every key, its default and meaning."""
    out = ["# Configuration reference", ""]
    for sec, keys in SCHEMA.items():
        out += [f"## [{sec}]", "", "| key | default | meaning |", "|---|---|---|"]
        for key, (_, default, doc) in keys.items():
            shown = "auto" if key == "k" else _render(default)
            out.append(f"| `{key}` | `{shown}` | {doc} |")
        out.append("")
    return "\n".join(out)
