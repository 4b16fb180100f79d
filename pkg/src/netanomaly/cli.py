"""Command-line entry point: ``netanomaly <subcommand> [options]``.

Every option can also come from an INI-style ``--config`` file (``key =
value`` lines under a ``[subcommand]`` or ``[common]`` section); flags win
over the file, the file wins over built-in defaults. Each run writes the
resolved settings to ``<out-dir>/resolved_config.ini`` and stamps its
reports with that file's SHA-256.

Seeds: one top-level ``--seed``; each consumer derives its own stream as
``derive_seed(seed, name)`` (split, adversarial, trees, midas, baselines).

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import sys
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import adversarial, baselines, classifiers, dataset, ensemble, evaluation, midas

logger = logging.getLogger("netanomaly")


class UsageError(Exception):
    pass


def derive_seed(seed: int, name: str) -> int:
    return int(np.random.SeedSequence([seed, zlib.crc32(name.encode())]).generate_state(1)[0])


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


@dataclass
class Opt:
    type: type | callable
    default: object = None
    help: str = ""
    required: bool = False


COMMON = {
    "seed": Opt(int, 0, "top-level random seed"),
    "out_dir": Opt(str, "out", "output directory"),
    "threads": Opt(int, 1, "worker threads for tree ensembles"),
}

COMMANDS: dict[str, dict[str, Opt]] = {
    "synth": {
        "kind": Opt(str, "flows", "flows | dataset | edges"),
        "n": Opt(int, 5000, "rows (flows, dataset) or ticks (edges)"),
        "malicious_fraction": Opt(float, 0.12, "share of malicious rows"),
        "m": Opt(int, 10, "numeric features (dataset)"),
        "separation": Opt(float, 4.0, "class mean gap (dataset)"),
    },
    "preprocess": {
        "input": Opt(str, None, "flow CSV", True),
        "schema": Opt(str, None, "schema file (name,kind,keep|drop per line)", True),
        "has_header": Opt(_bool, True, "CSV has a header row"),
        "test_fraction": Opt(float, 0.25, "held-out share"),
        "top_k": Opt(int, 5, "top-k per importance test"),
        "corr_threshold": Opt(float, 0.85, "|r| cut for the correlation filter"),
        "stratified": Opt(_bool, True, "stratify the split by label"),
    },
    "gen-adv": {
        "train": Opt(str, None, "standardized training set CSV (T1)", True),
        "epsilon": Opt(float, None, "LDA-FGSM step size", True),
        "features": Opt(str, None, "comma-separated feature names or indices for the mean shift", True),
        "fraction": Opt(float, adversarial.DEFAULT_FRACTION, "share of rows perturbed by LDA-FGSM"),
    },
    "train-ensemble": {
        "t1": Opt(str, None, "T1 CSV", True),
        "t2": Opt(str, None, "T2 CSV", True),
        "t3": Opt(str, None, "T3 CSV", True),
        "test": Opt(str, None, "fixed test CSV", True),
        "level2": Opt(str, "naive-bayes", "comma-separated level-2 kinds"),
        "members": Opt(str, "logistic_regression,decision_tree,lda", "level-1 kinds for T1,T2,T3"),
        "grid_search": Opt(_bool, False, "tune level-1 members by 5-fold grid search"),
        "out_of_fold": Opt(_bool, False, "build level-2 inputs from out-of-fold predictions"),
        "table1": Opt(_bool, False, "also score all seven kinds on each training set"),
        "roc": Opt(_bool, False, "write ROC point CSVs"),
    },
    "midas": {
        "input": Opt(str, None, "edge CSV (u,v,t[,label]) or flow CSV with --schema", True),
        "schema": Opt(str, None, "schema file when the input is a flow CSV"),
        "tick": Opt(float, 1.0, "tick width in seconds (flow input)"),
        "depth": Opt(int, midas.DEFAULT_DEPTH, "sketch rows"),
        "width": Opt(int, midas.DEFAULT_WIDTH, "sketch counters per row"),
        "filter": Opt(str, None, "keep only flows with column=value, e.g. service=dns"),
        "sort": Opt(_bool, False, "sort the stream by time before scoring"),
    },
    "baselines": {
        "input": Opt(str, None, "dataset CSV (standardized features + label)", True),
        "methods": Opt(str, "iforest,lof", "comma-separated: iforest, lof"),
        "n_trees": Opt(int, 100, "isolation trees"),
        "subsample": Opt(int, 256, "isolation-tree subsample size"),
        "k": Opt(int, 20, "LOF neighbours"),
        "contamination": Opt(float, None, "flagged share for recall (default: malicious rate)"),
    },
}


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netanomaly", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config file")
        for key, opt in {**COMMON, **opts}.items():
            flag = "--" + key.replace("_", "-")
            if opt.type is _bool:
                p.add_argument(flag, dest=key, default=None, type=_bool, nargs="?", const=True,
                               metavar="BOOL", help=opt.help)
            else:
                p.add_argument(flag, dest=key, default=None, type=opt.type, help=opt.help)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    opts = {**COMMON, **COMMANDS[command]}
    resolved = {k: o.default for k, o in opts.items()}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {path}")
        cp = configparser.ConfigParser()
        cp.read(path)
        for section in cp.sections():
            if section not in ("common", command) and section not in COMMANDS:
                raise UsageError(f"{path}: unknown section [{section}]")
        for section in ("common", command):
            if not cp.has_section(section):
                continue
            for key, raw in cp.items(section):
                k = key.replace("-", "_")
                if k not in opts:
                    raise UsageError(f"{path}: unknown key {key!r} in [{section}]")
                try:
                    resolved[k] = opts[k].type(raw)
                except ValueError as exc:
                    raise UsageError(f"{path}: bad value for {key!r}: {exc}") from None
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            resolved[k] = v
    missing = [k for k, o in opts.items() if o.required and resolved[k] is None]
    if missing:
        raise UsageError(f"{command}: missing required setting(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return resolved


def write_resolved(command: str, cfg: dict, out_dir: Path) -> str:
    cp = configparser.ConfigParser()
    cp[command] = {k: str(v) for k, v in sorted(cfg.items()) if v is not None}
    path = out_dir / "resolved_config.ini"
    with path.open("w") as fh:
        cp.write(fh)
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_synth(cfg: dict, out: Path, config_hash: str) -> None:
    seed = derive_seed(cfg["seed"], "synth")
    kind = cfg["kind"]
    if kind == "flows":
        schema, records = dataset.synth_flows(cfg["n"], cfg["malicious_fraction"], seed=seed)
        dataset.write_flow_csv(out / "flows.csv", records, schema)
        (out / "flows.schema").write_text(schema.to_text())
    elif kind == "dataset":
        n_mal = int(round(cfg["malicious_fraction"] * cfg["n"]))
        ds = dataset.synth_generate(cfg["n"] - n_mal, n_mal, cfg["m"], cfg["separation"], seed)
        dataset.save_dataset(ds, out / "dataset.csv")
    elif kind == "edges":
        u, v, t, y = midas.synthetic_burst_stream(n_ticks=cfg["n"], seed=seed)
        midas.write_edge_csv(out / "edges.csv", u, v, t, y)
    else:
        raise UsageError(f"synth: unknown kind {kind!r} (flows, dataset, edges)")


def cmd_preprocess(cfg: dict, out: Path, config_hash: str) -> None:
    if not Path(cfg["schema"]).exists():
        raise UsageError(f"schema file not found: {cfg['schema']}")
    schema = dataset.Schema.from_file(cfg["schema"])
    records = dataset.load_flow_csv(_require_file(cfg["input"]), schema, has_header=cfg["has_header"])
    kept, dropped = dataset.clean(records, [c.name for c in schema.of_kind("port")])
    ds = dataset.encode_nominal(kept, schema)
    ds, selection = dataset.select_features(ds, min(cfg["top_k"], ds.n_features), cfg["corr_threshold"])
    train, test = dataset.train_test_split(ds, cfg["test_fraction"], derive_seed(cfg["seed"], "split"), cfg["stratified"])
    train, (test,), stats = dataset.standardize(train, [test])
    for d in (train, test):
        d.meta["feature_stats"] = stats.to_dict()
        d.meta["config_sha256"] = config_hash
    dataset.save_dataset(train, out / "train.csv")
    dataset.save_dataset(test, out / "test.csv")
    _write_json(out / "preprocess_report.json", {
        "config_sha256": config_hash,
        "rows_read": len(records),
        "rows_dropped": dropped,
        "rows_kept": len(kept),
        "train_rows": train.n_samples,
        "test_rows": test.n_samples,
        "selection": selection,
        "feature_stats": stats.to_dict(),
    })


def _parse_features(text: str, ds: dataset.Dataset) -> list[int]:
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok.lstrip("-").isdigit():
            out.append(int(tok))
        else:
            out.extend(ds.column_indices([tok]))
    return out


def cmd_gen_adv(cfg: dict, out: Path, config_hash: str) -> None:
    train = dataset.load_dataset(_require_file(cfg["train"]))
    try:
        feats = _parse_features(cfg["features"], train)
    except KeyError as exc:
        raise ValueError(f"features: {exc.args[0]}") from None
    config = adversarial.PerturbationConfig(
        epsilon=cfg["epsilon"], features=feats, fraction=cfg["fraction"], seed=derive_seed(cfg["seed"], "adversarial")
    )
    triple = adversarial.build_training_sets(train, config)
    for name, ds in zip(("t1", "t2", "t3"), triple):
        dataset.save_dataset(ds, out / f"{name}.csv")
    _write_json(out / "adversarial_provenance.json", {**triple.provenance, "config_sha256": config_hash})


DEFAULT_GRIDS = {
    "logistic_regression": [{"l2": v} for v in (1e-4, 1e-3, 1e-2)],
    "decision_tree": [{"max_depth": d, "min_samples_leaf": leaf} for d in (4, 8, None) for leaf in (1, 5)],
    "lda": [{"ridge": r} for r in (None, 1e-3, 1e-1)],
    "qda": [{"ridge": r} for r in (None, 1e-3, 1e-1)],
    "gaussian_nb": [{}],
    "bagging": [{"n_estimators": b} for b in (10, 25)],
    "random_forest": [{"n_estimators": b} for b in (10, 25)],
}


def _tree_kind(kind: str) -> bool:
    return kind in ("decision_tree", "bagging", "random_forest")


def _seeded(kind: str, hp: dict, seed: int, threads: int) -> dict:
    hp = dict(hp)
    if _tree_kind(kind):
        hp.setdefault("seed", seed)
    if kind in ("bagging", "random_forest"):
        hp.setdefault("n_jobs", threads)
    return hp


def cmd_train_ensemble(cfg: dict, out: Path, config_hash: str) -> None:
    sets = [dataset.load_dataset(_require_file(cfg[k])) for k in ("t1", "t2", "t3")]
    test = dataset.load_dataset(_require_file(cfg["test"]))
    triple = adversarial.TrainingSetTriple(*sets)
    tree_seed = derive_seed(cfg["seed"], "trees")
    kinds = [classifiers.resolve_kind(k) for k in cfg["members"].split(",") if k.strip()]
    if len(kinds) != 3:
        raise UsageError("--members needs exactly three kinds (for T1, T2, T3)")
    specs = [(k, _seeded(k, {}, tree_seed, cfg["threads"])) for k in kinds]
    result: dict = {"config_sha256": config_hash, "level1": [], "level2": []}
    tables = []

    if cfg["table1"]:
        cells = {}
        for kind in classifiers.KINDS:
            row = {}
            for sid, ds in zip(ensemble.SET_IDS, sets):
                stats = dataset.fit_stats(ds.features)
                model, secs = evaluation.timed_fit(kind, _seeded(kind, {}, tree_seed, cfg["threads"]),
                                                   stats.transform(ds.features), ds.labels)
                rep = evaluation.evaluate_matrix({kind: evaluation.EvalEntry(model, stats, secs)}, test)[0]
                row[sid] = rep.f1_pair
            cells[kind] = row
        tables.append(evaluation.format_table("Level 1 F1-scores [normal, malicious]", cells))
        result["table1"] = cells

    if cfg["grid_search"]:
        tuned = []
        for (kind, hp), sid, ds in zip(specs, ensemble.SET_IDS, sets):
            grid = [_seeded(kind, g, tree_seed, cfg["threads"]) for g in DEFAULT_GRIDS[kind]]
            gs = ensemble.grid_search(kind, grid, ds.features, ds.labels, 5, derive_seed(cfg["seed"], "grid"))
            result.setdefault("grid_search", {})[sid] = gs.to_dict()
            tuned.append((kind, gs.best_hyperparams))
        specs = tuned

    stack = ensemble.train_level1(triple, specs)
    for member in stack.members:
        rep = evaluation.evaluate_matrix(
            {f"{member.model.kind}@{member.set_id}": evaluation.EvalEntry(member.model, member.stats, member.train_seconds,
                                                                          {"training_set": member.set_id})},
            test,
        )[0]
        result["level1"].append(rep.to_dict())

    if cfg["out_of_fold"]:
        meta = ensemble.out_of_fold_meta(triple, specs, 5, derive_seed(cfg["seed"], "oof"))
    else:
        meta = ensemble.level1_meta_features(stack, triple.t1.features)

    f1_cells, time_cells, auc_cells = {}, {}, {}
    for l2 in [k for k in cfg["level2"].split(",") if k.strip()]:
        kind = classifiers.resolve_kind(l2)
        model, secs = evaluation.timed_fit(kind, _seeded(kind, {}, tree_seed, cfg["threads"]), meta, triple.t1.labels)
        ens = ensemble.StackedEnsemble(stack, model, stack.names, secs)
        ens.save(out / f"ensemble_{kind}.json")
        labels, probs = ens.predict_pipeline(test.features)
        rep = evaluation.report_from_scores(f"stack/{kind}", test.labels, probs, secs,
                                            {"level2": kind, "members": stack.names, "config_sha256": config_hash})
        result["level2"].append(rep.to_dict())
        f1_cells[kind] = {"test": rep.f1_pair}
        time_cells[kind] = {"train s": secs}
        auc_cells[kind] = {"test": rep.auc}
        if cfg["roc"]:
            evaluation.write_roc_csv(out / f"roc_{kind}.csv", *evaluation.roc_points(test.labels, probs))
    tables.append(evaluation.format_table("Level 2 F1-scores [normal, malicious]", f1_cells, ["test"]))
    tables.append(evaluation.format_table("Level 2 AUC", auc_cells, ["test"]))
    timing = evaluation.format_table("Level 2 training times (s)", time_cells, ["train s"])
    _write_json(out / "reports.json", result)
    # timings live in their own file so tables.txt is reproducible byte for byte
    (out / "tables.txt").write_text("\n".join(tables))
    (out / "timings.txt").write_text(timing + "\n" + evaluation.hardware_descriptor() + "\n")
    print("\n".join(tables + [timing]))


def _parse_filter(expr: str | None):
    if not expr:
        return None
    if "=" not in expr:
        raise UsageError(f"--filter expects column=value, got {expr!r}")
    col, val = (s.strip() for s in expr.split("=", 1))
    return col, val


def cmd_midas(cfg: dict, out: Path, config_hash: str) -> None:
    path = _require_file(cfg["input"])
    flt = _parse_filter(cfg["filter"])
    labels = None
    if cfg["schema"]:
        schema = dataset.Schema.from_file(_require_file(cfg["schema"]))
        records = [r for r in dataset.load_flow_csv(path, schema) if r.timestamp is not None and r.src_ip and r.dst_ip]
        if flt:
            col, val = flt
            if col not in schema.names:
                raise UsageError(f"--filter column {col!r} is not in the schema")
            records = [r for r in records if str(r.nominal.get(col, r.numeric.get(col))) == val]
        stamps = [r.timestamp for r in records]
        if not cfg["sort"] and any(b < a for a, b in zip(stamps, stamps[1:])):
            raise ValueError("flow timestamps are not in ascending order; rerun with --sort")
        t0 = min(stamps) if stamps else 0.0
        ticks = [1 + int((r.timestamp - t0) // cfg["tick"]) for r in records]
        order = sorted(range(len(records)), key=lambda i: ticks[i])
        us = [records[i].src_ip for i in order]
        vs = [records[i].dst_ip for i in order]
        ts = [ticks[i] for i in order]
        labels = [records[i].label for i in order]
    else:
        if flt:
            raise UsageError("--filter needs a flow CSV and --schema")
        us, vs, ts, labels = midas.read_edge_csv(path)
        if cfg["sort"]:
            order = sorted(range(len(ts)), key=ts.__getitem__)
            us, vs, ts = [us[i] for i in order], [vs[i] for i in order], [ts[i] for i in order]
            labels = [labels[i] for i in order] if labels is not None else None
        elif any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("edge ticks are not in ascending order; rerun with --sort")

    start = time.perf_counter()
    scores = midas.score_stream(us, vs, ts, cfg["depth"], cfg["width"], derive_seed(cfg["seed"], "midas"))
    elapsed = time.perf_counter() - start
    midas.write_score_csv(out / "scores.csv", us, vs, ts, scores)
    summary = {
        "config_sha256": config_hash,
        "n_events": len(ts),
        "max_score": float(scores.max()) if len(ts) else None,
        "elapsed_seconds": elapsed,
        "events_per_sec": len(ts) / elapsed if elapsed > 0 else None,
        "depth": cfg["depth"],
        "width": cfg["width"],
    }
    if labels is not None and len(set(labels)) == 2:
        summary["auc"] = evaluation.auc(labels, scores)
    _write_json(out / "midas_summary.json", summary)


def cmd_baselines(cfg: dict, out: Path, config_hash: str) -> None:
    ds = dataset.load_dataset(_require_file(cfg["input"]))
    y = ds.labels
    contamination = cfg["contamination"] if cfg["contamination"] is not None else float(y.mean())
    summary = {"config_sha256": config_hash, "contamination": contamination, "methods": {}}
    for method in (m.strip() for m in cfg["methods"].split(",") if m.strip()):
        start = time.perf_counter()
        if method == "iforest":
            scores = baselines.isolation_forest_score(ds.features, cfg["n_trees"], cfg["subsample"],
                                                      derive_seed(cfg["seed"], "iforest"))
        elif method == "lof":
            scores = baselines.lof_score(ds.features, cfg["k"])
        else:
            raise UsageError(f"unknown baseline {method!r} (iforest, lof)")
        elapsed = time.perf_counter() - start
        with (out / f"{method}_scores.csv").open("w") as fh:
            fh.write("row,score\n")
            fh.writelines(f"{i},{float(s)!r}\n" for i, s in enumerate(scores))
        pred = baselines.flag_anomalies(scores, contamination)
        rep = evaluation.MetricsReport(
            name=method,
            per_class=evaluation.f1_per_class(y, pred),
            auc=evaluation.auc(y, scores) if 0 < y.sum() < len(y) else None,
            confusion=evaluation.confusion(y, pred),
            train_seconds=elapsed,
            metadata={"config_sha256": config_hash, "contamination": contamination},
        )
        summary["methods"][method] = {**rep.to_dict(), "recall": rep.per_class[1].recall}
    _write_json(out / "baselines_report.json", summary)


HANDLERS = {
    "synth": cmd_synth,
    "preprocess": cmd_preprocess,
    "gen-adv": cmd_gen_adv,
    "train-ensemble": cmd_train_ensemble,
    "midas": cmd_midas,
    "baselines": cmd_baselines,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args.command, args)
        out = Path(cfg["out_dir"])
        out.mkdir(parents=True, exist_ok=True)
        config_hash = write_resolved(args.command, cfg, out)
        HANDLERS[args.command](cfg, out, config_hash)
    except UsageError as exc:
        print(f"netanomaly {args.command}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError, np.linalg.LinAlgError) as exc:
        print(f"netanomaly {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
