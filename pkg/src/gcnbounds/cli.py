"""Command-line entry point.

Subcommands: gradcheck, bounds, train, twin, sweep, filters. Every value
can come from a flag or from an INI config file (flag wins); the fully
resolved configuration is echoed into a run manifest next to the outputs,
and ``--from-manifest`` re-executes a stored run so output digests can be
reproduced exactly. Randomness flows from the single ``--seed`` value
through named sub-streams; no ambient entropy is consulted.

Exit codes: 0 success, 1 usage/config error, 2 verification failure
(gradient check or bound audit), 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, replace

from . import __version__
from . import bounds as bnd
from .activations import get_activation
from .data import CsbmParams, gen_csbm, load_dataset
from .errors import (DataFormatError, DomainError, GcnBoundsError, UsageError)
from .experiments import SweepConfig, run_sweep, write_sweep_csv
from .filters import FILTER_KINDS, build_filter, filter_norm
from .gradcheck import run_gradcheck
from .graphs import load_edge_list
from .manifest import load_manifest, write_manifest
from .model import save_params
from .training import (TrainConfig, audit_twin, trace_constants, train,
                       twin_train, write_trace_csv)

_REQUIRED = object()


@dataclass(frozen=True)
class Field:
    name: str
    kind: str  # int | float | str | flag | path
    default: object = None
    help: str = ""


_DATASET_FIELDS = (
    Field("edges", "path", None, "edge-list file (enables file-dataset mode)"),
    Field("features", "path", None, "feature CSV file"),
    Field("labels", "path", None, "label file"),
    Field("split", "path", None, "train/test split file"),
    Field("reduction", "str", "largest_vs_rest", "label reduction for file datasets"),
    Field("class_a", "str", None, "positive class for class_vs_class reduction"),
    Field("class_b", "str", None, "negative class for class_vs_class reduction"),
    Field("csbm_nodes", "int", 300, "synthetic dataset size"),
    Field("csbm_p_in", "float", 0.1, "intra-class edge probability"),
    Field("csbm_p_out", "float", 0.02, "inter-class edge probability"),
    Field("csbm_dim", "int", 16, "synthetic feature dimension"),
    Field("csbm_mu", "float", 1.0, "class-mean separation"),
    Field("csbm_noise", "float", 0.5, "feature noise scale"),
    Field("train_fraction", "float", 0.1, "training fraction of the nodes"),
)

_MODEL_FIELDS = (
    Field("filter", "str", "sym_selfloop", f"one of {', '.join(FILTER_KINDS)}"),
    Field("depth", "int", 1, "hidden layers K"),
    Field("width", "int", 8, "hidden width d"),
    Field("eta", "float", 0.05, "learning rate"),
    Field("steps", "int", 200, "SGD iterations T"),
    Field("loss", "str", "squared", "registered loss kind"),
    Field("activation", "str", "tanh", "registered activation"),
    Field("init_scale", "float", 1.0, "initialization scale multiplier"),
    Field("projection_cap", "float", None, "optional per-block spectral-norm ceiling"),
)

COMMANDS = {
    "gradcheck": (
        Field("seed", "int", 0),
        Field("trials", "int", 100),
        Field("max_nodes", "int", 10),
        Field("max_depth", "int", 3),
        Field("max_width", "int", 4),
        Field("tolerance", "float", 1e-6),
        Field("abs_floor", "float", 1e-9),
        Field("step", "float", 1e-5),
        Field("inject_sign_flip", "flag", False, "test-only fault injection"),
    ),
    "bounds": (
        Field("activation", "str", "tanh"),
        Field("loss", "str", "squared"),
        Field("y_min", "float", -1.0),
        Field("y_max", "float", 1.0),
        Field("B", "float", _REQUIRED),
        Field("C_g", "float", _REQUIRED),
        Field("C_X", "float", _REQUIRED),
        Field("K", "int", _REQUIRED),
        Field("eta", "float", _REQUIRED),
        Field("T", "int", _REQUIRED),
        Field("m", "int", _REQUIRED),
        Field("delta", "float", 0.1),
        Field("from_trace", "path", None,
              "constants file written by the twin command; fills the measured fields"),
    ),
    "train": _DATASET_FIELDS + _MODEL_FIELDS + (
        Field("seed", "int", 0),
        Field("record_every", "int", 10),
    ),
    "twin": _DATASET_FIELDS + _MODEL_FIELDS + (
        Field("seed", "int", 0),
        Field("record_every", "int", 1),
        Field("replaced_index", "int", 0, "training-set position to replace"),
        Field("replacement_node", "int", None, "defaults to the first test node"),
        Field("replacement_label", "float", None, "defaults to that node's label"),
        Field("audit_nodes", "int", 0, "cap on audited test nodes (0 = all)"),
    ),
    "sweep": _DATASET_FIELDS + (
        Field("filters", "str", "sym_selfloop,rw_plus_id"),
        Field("depths", "str", "5"),
        Field("widths", "str", "32"),
        Field("seeds", "str", "0,1,2,3,4,5,6,7,8,9"),
        Field("eta", "float", 0.05),
        Field("steps", "int", 200),
        Field("loss", "str", "squared"),
        Field("activation", "str", "tanh"),
        Field("init_scale", "float", 1.0),
        Field("record_every", "int", 10),
        Field("delta", "float", 0.1),
        Field("jobs", "int", 1),
    ),
    "filters": (
        Field("edges", "path", _REQUIRED),
        Field("kinds", "str", "sym_selfloop,rw_plus_id"),
        Field("num_nodes", "int", None),
        Field("tol", "float", 1e-12),
    ),
}

_PARSERS = {"int": int, "float": float, "str": str, "path": str}


def _resolve_config(command: str, args: argparse.Namespace, config_path) -> dict:
    """flags > config-file section > defaults; missing required values are
    reported together by name."""
    file_values = {}
    if config_path:
        ini = configparser.ConfigParser()
        read = ini.read(config_path)
        if not read:
            raise DataFormatError(f"config file not found: {config_path}")
        if ini.has_section(command):
            file_values = dict(ini.items(command))
    resolved = {}
    missing = []
    for f in COMMANDS[command]:
        value = getattr(args, f.name, None)
        if value is None and f.name in file_values:
            raw = file_values[f.name]
            if f.kind == "flag":
                value = raw.strip().lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = _PARSERS[f.kind](raw)
                except ValueError:
                    raise UsageError(
                        f"config value {f.name}={raw!r} is not a valid {f.kind}") from None
        if value is None:
            if f.default is _REQUIRED:
                missing.append(f.name)
                continue
            value = False if f.kind == "flag" else f.default
        resolved[f.name] = value
    if missing:
        raise UsageError(f"{command}: missing required value(s): {', '.join(missing)}")
    return resolved


def _build_dataset(cfg: dict, seed: int):
    paths = [cfg.get(k) for k in ("edges", "features", "labels", "split")]
    if any(paths):
        if not all(paths):
            raise UsageError("file datasets need all of --edges --features --labels --split")
        kwargs = {"reduction": cfg["reduction"]}
        if cfg["reduction"] == "class_vs_class":
            kwargs.update(class_a=cfg.get("class_a"), class_b=cfg.get("class_b"))
        return load_dataset(*paths, **kwargs), [p for p in paths]
    params = CsbmParams(num_nodes=cfg["csbm_nodes"], p_in=cfg["csbm_p_in"],
                        p_out=cfg["csbm_p_out"], feature_dim=cfg["csbm_dim"],
                        mean_separation=cfg["csbm_mu"], noise_scale=cfg["csbm_noise"],
                        train_fraction=cfg["train_fraction"])
    return gen_csbm(params, seed), []


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        lr=cfg["eta"], steps=cfg["steps"], loss=cfg["loss"], seed=cfg["seed"],
        projection_cap=cfg.get("projection_cap"), record_every=cfg["record_every"],
        hidden_widths=(cfg["width"],) * cfg["depth"], activation=cfg["activation"],
        init_scale=cfg["init_scale"])


def _write_keyvalues(path, pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} {value}\n")


# command implementations ------------------------------------------------------

def cmd_gradcheck(cfg: dict, out: str) -> int:
    result = run_gradcheck(
        seed=cfg["seed"], trials=cfg["trials"], max_nodes=cfg["max_nodes"],
        max_depth=cfg["max_depth"], max_width=cfg["max_width"],
        tolerance=cfg["tolerance"], abs_floor=cfg["abs_floor"], step=cfg["step"],
        inject_sign_flip=cfg["inject_sign_flip"])
    report = out + ".report.txt"
    _write_keyvalues(report, [
        ("trials", result.trials),
        ("worst_rel_err", repr(result.worst_rel_err)),
        ("failures", result.failures),
        ("passed", int(result.passed)),
    ])
    write_manifest(out + ".manifest.json", "gradcheck", {**cfg, "out_prefix": out},
                   outputs=[report])
    print(f"gradcheck: {result.trials} trials, worst relative error "
          f"{result.worst_rel_err:.3e}, failures {result.failures}")
    return 0 if result.passed else 2


def _constants_from_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected 'key value'")
            values[parts[0]] = parts[1]
    return values


def cmd_bounds(cfg: dict, out: str) -> int:
    provenance_src = "user"
    if cfg.get("from_trace"):
        stored = _constants_from_file(cfg["from_trace"])
        provenance_src = "measured"
        casts = {"B": float, "C_g": float, "C_X": float, "eta": float,
                 "y_min": float, "y_max": float, "K": int, "T": int, "m": int,
                 "activation": str, "loss": str}
        for key, cast in casts.items():
            if key in stored:
                cfg[key] = cast(stored[key])
    act = get_activation(cfg["activation"])
    constants = bnd.constants_for(
        act, cfg["loss"], cfg["y_min"], cfg["y_max"],
        param_norm_cap=cfg["B"], filter_norm=cfg["C_g"], feature_norm=cfg["C_X"],
        depth=cfg["K"], lr=cfg["eta"], steps=cfg["T"], train_size=cfg["m"])
    report = bnd.bound_report(constants, cfg["delta"],
                              provenance={"B": provenance_src, "C_g": provenance_src,
                                          "C_X": provenance_src})
    text = report.to_text()
    sys.stdout.write(text)
    txt_path, json_path = out + ".bounds.txt", out + ".bounds.json"
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = [cfg["from_trace"]] if cfg.get("from_trace") else []
    write_manifest(out + ".manifest.json", "bounds", {**cfg, "out_prefix": out},
                   inputs=inputs, outputs=[txt_path, json_path])
    return 0


def cmd_train(cfg: dict, out: str) -> int:
    dataset, inputs = _build_dataset(cfg, cfg["seed"])
    filt = build_filter(dataset.graph, cfg["filter"])
    params, summary = train(dataset, filt, _train_config(cfg))
    params_path = out + ".params"
    save_params(params, params_path)
    summary_path = out + ".summary.txt"
    _write_keyvalues(summary_path, [
        ("measured_B", repr(summary.measured_b)),
        ("final_empirical_risk", repr(summary.final_empirical_risk)),
        ("steps", len(summary.step_losses)),
        ("C_g", repr(filter_norm(filt))),
        ("C_X", repr(dataset.c_x)),
        ("m", dataset.num_train),
    ])
    write_manifest(out + ".manifest.json", "train", {**cfg, "out_prefix": out},
                   inputs=inputs, outputs=[params_path, summary_path])
    print(f"train: final empirical risk {summary.final_empirical_risk:.6f}, "
          f"measured B {summary.measured_b:.6f}")
    return 0


def cmd_twin(cfg: dict, out: str) -> int:
    dataset, inputs = _build_dataset(cfg, cfg["seed"])
    filt = build_filter(dataset.graph, cfg["filter"])
    node = cfg.get("replacement_node")
    if node is None:
        if not dataset.test_indices:
            raise UsageError("no test nodes to draw a replacement sample from")
        node = dataset.test_indices[0]
    label = cfg.get("replacement_label")
    if label is None:
        label = float(dataset.labels[node])
    trace = twin_train(dataset, filt, _train_config(cfg), cfg["replaced_index"],
                       (node, label))
    audit_nodes = None
    if cfg["audit_nodes"]:
        audit_nodes = list(dataset.test_indices)[: cfg["audit_nodes"]]
    report = audit_twin(trace, filt, dataset, audit_nodes=audit_nodes)

    trace_path = out + ".trace.csv"
    write_trace_csv(trace, trace_path)
    audit_path = out + ".audit.txt"
    with open(audit_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    c = report.constants
    constants_path = out + ".constants.txt"
    _write_keyvalues(constants_path, [
        ("activation", cfg["activation"]),
        ("loss", cfg["loss"]),
        ("y_min", repr(dataset.y_min)),
        ("y_max", repr(dataset.y_max)),
        ("B", repr(c.param_norm_cap)),
        ("C_g", repr(c.filter_norm)),
        ("C_X", repr(c.feature_norm)),
        ("K", c.depth),
        ("eta", repr(c.lr)),
        ("T", c.steps),
        ("m", c.train_size),
    ])
    write_manifest(out + ".manifest.json", "twin", {**cfg, "out_prefix": out},
                   inputs=inputs, outputs=[trace_path, audit_path, constants_path])
    print(f"twin: max slack ratio {report.max_ratio:.6f} "
          f"({'pass' if report.passed else 'FAIL'})")
    return 0 if report.passed else 2


def _parse_list(text: str, cast):
    try:
        return tuple(cast(tok) for tok in str(text).split(",") if tok != "")
    except ValueError:
        raise UsageError(f"cannot parse list value {text!r}") from None


def cmd_sweep(cfg: dict, out: str) -> int:
    base = TrainConfig(lr=cfg["eta"], steps=cfg["steps"], loss=cfg["loss"],
                       record_every=cfg["record_every"], activation=cfg["activation"],
                       init_scale=cfg["init_scale"])
    paths = [cfg.get(k) for k in ("edges", "features", "labels", "split")]
    if any(paths):
        if not all(paths):
            raise UsageError("file datasets need all of edges/features/labels/split")
        csbm = None
        dataset_paths = tuple(paths)
        inputs = list(paths)
    else:
        csbm = CsbmParams(num_nodes=cfg["csbm_nodes"], p_in=cfg["csbm_p_in"],
                          p_out=cfg["csbm_p_out"], feature_dim=cfg["csbm_dim"],
                          mean_separation=cfg["csbm_mu"], noise_scale=cfg["csbm_noise"],
                          train_fraction=cfg["train_fraction"])
        dataset_paths = None
        inputs = []
    sweep = SweepConfig(
        train=base, csbm=csbm, dataset_paths=dataset_paths,
        filter_kinds=_parse_list(cfg["filters"], str),
        depths=_parse_list(cfg["depths"], int),
        widths=_parse_list(cfg["widths"], int),
        seeds=_parse_list(cfg["seeds"], int),
        delta=cfg["delta"])
    records = run_sweep(sweep, jobs=cfg["jobs"])
    csv_path = out + ".csv"
    write_sweep_csv(records, csv_path)
    write_manifest(out + ".manifest.json", "sweep", {**cfg, "out_prefix": out},
                   inputs=inputs, outputs=[csv_path])
    ok = sum(1 for r in records if r.status == "ok")
    print(f"sweep: {ok}/{len(records)} cells ok -> {csv_path}")
    return 0


def cmd_filters(cfg: dict, out: str) -> int:
    graph = load_edge_list(cfg["edges"], num_nodes=cfg.get("num_nodes"))
    lines = []
    for kind in _parse_list(cfg["kinds"], str):
        filt = build_filter(graph, kind, tol=cfg["tol"])
        lines.append((kind, f"{graph.num_nodes} {repr(filter_norm(filt))}"))
        print(f"{kind:14s} N={graph.num_nodes} C_g={filter_norm(filt):.6f}")
    table_path = out + ".filters.txt"
    _write_keyvalues(table_path, lines)
    write_manifest(out + ".manifest.json", "filters", {**cfg, "out_prefix": out},
                   inputs=[cfg["edges"]], outputs=[table_path])
    return 0


_DISPATCH = {
    "gradcheck": cmd_gradcheck,
    "bounds": cmd_bounds,
    "train": cmd_train,
    "twin": cmd_twin,
    "sweep": cmd_sweep,
    "filters": cmd_filters,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcnbounds",
        description="Deep-GCN training, stability audits and closed-form bounds")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--from-manifest", dest="from_manifest", metavar="FILE",
                        help="re-run a stored command from its manifest")
    parser.add_argument("--out", dest="out", metavar="PREFIX",
                        help="output prefix (with --from-manifest)")
    sub = parser.add_subparsers(dest="command")
    for name, fields in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--out", dest="out", metavar="PREFIX",
                       help=f"output prefix (default ./{name}_run)")
        p.add_argument("--config", dest="config", metavar="FILE",
                       help=f"INI file; values read from the [{name}] section")
        for f in fields:
            flag = "--" + f.name.replace("_", "-")
            if f.kind == "flag":
                p.add_argument(flag, dest=f.name, action="store_const", const=True,
                               default=None, help=f.help)
            else:
                p.add_argument(flag, dest=f.name, type=_PARSERS[f.kind], default=None,
                               help=f.help)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.from_manifest:
            doc = load_manifest(args.from_manifest)
            command = doc["command"]
            if command not in _DISPATCH:
                raise UsageError(f"manifest names unknown command {command!r}")
            cfg = dict(doc["config"])
            out = args.out or cfg.get("out_prefix") or f"{command}_run"
            cfg["out_prefix"] = out
            return _DISPATCH[command](cfg, out)
        if not args.command:
            parser.print_help()
            return 1
        cfg = _resolve_config(args.command, args, args.config)
        out = args.out or f"{args.command}_run"
        cfg["out_prefix"] = out
        return _DISPATCH[args.command](cfg, out)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (DataFormatError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    except GcnBoundsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
