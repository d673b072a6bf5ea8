"""Command-line front end.

Subcommands:

``fit``              fit one model to files on disk and write factors, history and a JSON summary
``estimate-memory``  dense storage estimate for a rows x cols matrix
``split``            partition the observed entries of a matrix into train/validation files

Every ``fit`` flag can also be given in a JSON run spec (``--spec``) using the
flag name with underscores (``max_iter``, ``lambda_l``, ...); flags on the
command line override the file.

Exit codes: 0 converged, 2 stopped at ``max_iter`` without converging,
1 input or solver error (message on standard error).
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields

from . import basic_mf, completion, io, nmf, onmf3, regularizers, supervised
from .config import ModelConfig
from .errors import ValidationError
from .matcore import estimate_memory_mb, laplacian_from_adjacency

MODELS = ("basic", "nmf", "onmf2", "onmf3", "completion", "laplacian", "twosided", "supervised", "attitude")

# inputs each model cannot run without
REQUIRED = {
    "laplacian": ("graph",),
    "twosided": ("side_a", "side_b"),
    "supervised": ("responses", "n_train"),
    "attitude": ("opinion", "sentiment"),
}

_CONFIG_FIELDS = tuple(f.name for f in fields(ModelConfig))


@dataclass
class RunSpec:
    model: str
    input: str
    out: str
    format: str = None
    mask: str = None
    graph: str = None
    side_a: str = None
    side_b: str = None
    responses: str = None
    n_train: int = None
    opinion: str = None
    sentiment: str = None
    solver: str = "gradient"
    tri_mode: str = "three_factor_bi"
    k2: int = None
    config: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        cfg = {k: data.pop(k) for k in list(data) if k in _CONFIG_FIELDS}
        cfg.update(data.pop("config", {}) or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown run spec keys: {sorted(unknown)}")
        for name in ("model", "input", "out"):
            if data.get(name) is None:
                raise ValidationError(f"missing required input: --{name.replace('_', '-')}")
        if data["model"] not in MODELS:
            raise ValidationError(f"model must be one of {MODELS}")
        spec = cls(config=cfg, **data)
        for name in REQUIRED.get(spec.model, ()):
            if getattr(spec, name) is None:
                raise ValidationError(
                    f"model {spec.model!r} requires --{name.replace('_', '-')}")
        return spec

    def model_config(self):
        return ModelConfig.from_dict(self.config)


def _read(path):
    return io.parse_matrix_file(path)


def _read_full(path, what):
    x, mask = _read(path)
    if not mask.all():
        raise ValidationError(f"{what} ({path}) has missing entries")
    return x


def _input(spec):
    x, mask = io.parse_matrix_file(spec.input, spec.format)
    if spec.mask is not None:
        mask = _read_full(spec.mask, "mask")
    return x, mask


def _dispatch(spec, cfg):
    x, mask = _input(spec)
    m = spec.model
    if m in ("completion", "laplacian"):
        p = completion.MaskedProblem(x, mask, cfg.alpha, cfg.beta)
        if m == "completion":
            return completion.fit_completion(p, cfg, solver=spec.solver)
        g = laplacian_from_adjacency(_read_full(spec.graph, "graph"))
        return regularizers.fit_laplacian_mf(p, g, cfg.lambda_l, cfg)
    if not mask.all():
        raise ValidationError(f"model {m!r} needs a fully observed input; use 'completion'")
    if m == "basic":
        return basic_mf.fit_basic(x, cfg)
    if m == "nmf":
        return nmf.fit_nmf(x, cfg)
    if m == "onmf2":
        return onmf3.fit_onmf3(x, cfg, mode="two_factor_onesided")
    if m == "onmf3":
        return onmf3.fit_onmf3(x, cfg, mode=spec.tri_mode, k2=spec.k2)
    if m == "twosided":
        p = regularizers.TwoSidedProblem(
            x, _read_full(spec.side_a, "side-a"), _read_full(spec.side_b, "side-b"),
            cfg.lambda_a, cfg.lambda_b, cfg.delta, cfg.alpha)
        return regularizers.fit_twosided(p, cfg)
    if m == "supervised":
        y = _read_full(spec.responses, "responses")
        p = supervised.SupervisedProblem.from_split(
            x, y, spec.n_train, lam=cfg.lam, lambda_x=cfg.lambda_x, lambda_y=cfg.lambda_y)
        return supervised.fit_supervised(p, cfg)
    p = supervised.AttitudeProblem(
        x, _read_full(spec.opinion, "opinion"), _read_full(spec.sentiment, "sentiment"),
        lambda1=cfg.lambda1, lambda2=cfg.lambda2, alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma)
    return supervised.fit_attitude(p, cfg)


def run(spec):
    """Fit ``spec`` and write its outputs; return the process exit status."""
    cfg = spec.model_config()
    result = _dispatch(spec, cfg)
    io.write_outputs(result, spec.out, model=spec.model, config=cfg.to_dict())
    return 0 if result.converged else 2


def _add_fit_args(p):
    s = argparse.SUPPRESS
    p.add_argument("--spec", help="JSON run spec; command-line flags override it")
    p.add_argument("--model", choices=MODELS, default=s)
    p.add_argument("--input", default=s, help="data matrix (.mtx coordinate or dense .csv)")
    p.add_argument("--format", choices=io.FORMATS, default=s, help="override format detection")
    p.add_argument("--mask", default=s, help="dense 0/1 observation mask overriding the input's")
    p.add_argument("--graph", default=s, help="symmetric adjacency matrix (laplacian)")
    p.add_argument("--side-a", dest="side_a", default=s, help="row side matrix (twosided)")
    p.add_argument("--side-b", dest="side_b", default=s, help="column side matrix (twosided)")
    p.add_argument("--responses", default=s, help="response column, one per row (supervised)")
    p.add_argument("--n-train", dest="n_train", type=int, default=s,
                   help="leading rows with observed responses (supervised)")
    p.add_argument("--opinion", default=s, help="opinion target matrix (attitude)")
    p.add_argument("--sentiment", default=s, help="sentiment target matrix (attitude)")
    p.add_argument("--solver", choices=completion.SOLVERS, default=s)
    p.add_argument("--tri-mode", dest="tri_mode", choices=onmf3.MODES, default=s)
    p.add_argument("--k2", type=int, default=s, help="column rank for onmf3")
    p.add_argument("--out", default=s, help="output directory")
    ints = {"rank", "max_iter", "seed"}
    for name in _CONFIG_FIELDS:
        p.add_argument("--" + name.replace("_", "-"), dest=name,
                       type=int if name in ints else float, default=s)


def build_parser():
    parser = argparse.ArgumentParser(prog="lowrank", description="Low-rank factorization models.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_fit_args(sub.add_parser("fit", help="fit a model"))

    mem = sub.add_parser("estimate-memory", help="dense storage estimate in MB (10^6 bytes)")
    mem.add_argument("--rows", type=int, required=True)
    mem.add_argument("--cols", type=int, required=True)
    mem.add_argument("--bytes", type=int, default=4, help="bytes per entry")

    sp = sub.add_parser("split", help="split observed entries into train/validation")
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", choices=io.FORMATS)
    sp.add_argument("--train-fraction", dest="train_fraction", type=float, default=0.8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    return parser


def _fit_spec(ns):
    data = {}
    if ns.spec is not None:
        with open(ns.spec) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("run spec must be a JSON object")
    flags = {k: v for k, v in vars(ns).items() if k not in ("spec", "command")}
    data.update(flags)
    return RunSpec.from_dict(data)


def _split(ns):
    x, mask = io.parse_matrix_file(ns.input, ns.format)
    train, valid = completion.split_observed(mask, ns.train_fraction, ns.seed)
    os.makedirs(ns.out, exist_ok=True)
    io.write_matrixmarket(os.path.join(ns.out, "train.mtx"), x, train)
    io.write_matrixmarket(os.path.join(ns.out, "validation.mtx"), x, valid)
    print(f"train {int(train.sum())} validation {int(valid.sum())}")
    return 0


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "estimate-memory":
            print(f"{estimate_memory_mb(ns.rows, ns.cols, ns.bytes):.1f} MB")
            return 0
        if ns.command == "split":
            return _split(ns)
        return run(_fit_spec(ns))
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
