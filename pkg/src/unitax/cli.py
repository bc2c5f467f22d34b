"""Command-line front end.

Every subcommand is a pure function of its input files, flags, and seed;
identical invocations produce byte-identical outputs.  Exit codes: 0 on
success, 1 on validation errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation, pseudolabel, training, toyproblem
from .errors import UnitaxError, ValidationError
from .resolve import build_universal_from_declarations, parse_declarations
from .taxonomy import (
    build_universal_from_atoms,
    collection_from_dict,
    filter_untrainable,
    load_collection,
    mapping_matrix,
    matrix_csv,
    taxonomy_from_dict,
    taxonomy_to_dict,
)


def _write_json(path, data) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path, text) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: line {exc.lineno}: not valid JSON ({exc.msg})")


def _build_artifacts(args):
    """(collection, taxonomy, mappings) from --atoms or --decls."""
    if getattr(args, "atoms", None):
        col = load_collection(args.atoms)
        tax, maps = build_universal_from_atoms(col)
        return col, tax, maps
    if getattr(args, "decls", None):
        with open(args.decls, "r", encoding="utf-8") as fh:
            text = fh.read()
        try:
            program = parse_declarations(text)
            return build_universal_from_declarations(program)
        except (ValidationError, UnitaxError) as exc:
            raise type(exc)(f"{args.decls}: {exc}")
    raise ValidationError("one of --atoms or --decls is required")


def _cmd_build(args):
    col, tax, maps = _build_artifacts(args)
    tax, _, _ = filter_untrainable(tax, maps)  # annotate trainability
    _write_json(args.out, taxonomy_to_dict(col, tax, maps))
    return 0


def _cmd_check(args):
    data = _read_json(args.input)
    if "universal" in data:
        taxonomy_from_dict(data)
    else:
        collection_from_dict(data)
    print(f"{args.input}: OK")
    return 0


def _cmd_filter(args):
    col, tax, maps = _build_artifacts(args)
    tax, filtered_maps, report = filter_untrainable(tax, maps)
    data = taxonomy_to_dict(col, tax, filtered_maps)
    data["filter_report"] = [
        {
            "untrainable": u,
            "untrainable_name": tax.classes[u].display_name,
            "dominator": dom,
            "dominator_name": tax.classes[dom].display_name,
        }
        for u, dom in report
    ]
    _write_json(args.out, data)
    return 0


def _cmd_export_matrix(args):
    if args.input:
        col, tax, maps = taxonomy_from_dict(_read_json(args.input))
    else:
        col, tax, maps = _build_artifacts(args)
        tax, maps, _ = filter_untrainable(tax, maps)
    rows, cols, matrix = mapping_matrix(args.dataset, col, tax, maps,
                                        include_void=args.include_void)
    _write_text(args.out, matrix_csv(rows, cols, matrix))
    return 0


def _load_problem(args):
    spec, tax, maps = toyproblem.load_problem(args.spec)
    if args.seed is not None:
        spec = toyproblem.ToyProblemSpec(spec.collection, spec.concepts, args.seed)
    return spec, tax, maps


def _cmd_toy_train(args):
    spec, tax, maps = _load_problem(args)
    config = training.TrainConfig(args.mode, epochs=args.epochs, lr=args.lr,
                                  seed=spec.seed)
    data = toyproblem.generate_toy(spec, maps)
    result = training.train(config, spec, tax, maps, data)
    os.makedirs(args.out, exist_ok=True)
    training.save_model(os.path.join(args.out, "model.json"), result)
    trace = "epoch,loss\n" + "".join(
        f"{i},{loss!r}\n" for i, loss in enumerate(result.loss_trace)
    )
    _write_text(os.path.join(args.out, "trace.csv"), trace)
    report = {
        "mode": args.mode,
        "seed": spec.seed,
        "epochs": args.epochs,
        "lr": args.lr,
        "final_loss": result.loss_trace[-1],
        "universal_accuracy": training.universal_accuracy(
            result.space, result.model, data.test_points, data.test_universal
        ),
        "per_class_accuracy": training.per_class_accuracy(
            result.space, result.model, data.test_points, data.test_universal
        ),
        "dead_logits": training.dead_logit_report(
            result.space, result.model, data.test_points
        ),
    }
    _write_json(os.path.join(args.out, "report.json"), report)
    return 0


def _cmd_eval(args):
    spec, tax, maps = _load_problem(args)
    result = training.load_model(args.model)
    data = toyproblem.generate_toy(spec, maps)
    ds = spec.collection.dataset(args.dataset)
    class_names = [c.name for c in ds.classes]
    acc = evaluation.ConfusionAccumulator(class_names)
    label_of = {}
    for cls in ds.classes:
        for u in maps.mapped(args.dataset, cls.name):
            label_of[u] = cls.name
    keep = [i for i, u in enumerate(data.test_universal) if int(u) in label_of]
    points = data.test_points[keep]
    truths = [label_of[int(data.test_universal[i])] for i in keep]
    if args.post_inference and not result.space.entries:
        raise ValidationError("--post-inference requires a concatenated-space model")
    names, scores = training.dataset_scores(
        result.space, result.model, points, args.dataset, maps,
        spec.collection, post_inference=bool(args.post_inference),
    )
    for i, gt in enumerate(truths):
        acc.update(gt, names[int(np.argmax(scores[i]))])
    report = acc.report()
    report["dataset"] = args.dataset
    report["post_inference"] = bool(args.post_inference)
    report["samples"] = len(truths)
    _write_json(args.out, report)
    return 0


def _cmd_pseudo_label(args):
    col, tax, maps = _build_artifacts(args)
    with open(args.input, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    out_lines = [
        json.dumps(record, sort_keys=True)
        for record in pseudolabel.relabel_stream(lines, col, tax, maps)
    ]
    _write_text(args.out, "\n".join(out_lines) + ("\n" if out_lines else ""))
    return 0


def _cmd_surface(args):
    result = training.load_model(args.model)
    try:
        xmin, xmax, ymin, ymax, nx, ny = args.grid.split(",")
        grid = (float(xmin), float(xmax), float(ymin), float(ymax), int(nx), int(ny))
    except ValueError:
        raise ValidationError("--grid expects xmin,xmax,ymin,ymax,nx,ny")
    rows, names = training.decision_surface(result.space, result.model, *grid)
    _write_text(args.out, training.surface_csv(rows, names))
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="unitax",
        description="Universal taxonomies over multi-dataset label spaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inputs(p, decls=True):
        p.add_argument("--atoms", help="collection JSON (atoms inventory)")
        if decls:
            p.add_argument("--decls", help="declaration program file")

    p = sub.add_parser("build", help="construct taxonomy and mappings")
    add_inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("check", help="validate invariants of a taxonomy file")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("filter", help="trainability report")
    add_inputs(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("export-matrix", help="mapping matrix CSV")
    add_inputs(p)
    p.add_argument("--in", dest="input", help="built taxonomy JSON")
    p.add_argument("--dataset", required=True)
    p.add_argument("--include-void", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_matrix)

    p = sub.add_parser("toy-train", help="train a toy model")
    p.add_argument("--spec", required=True, help="toy problem JSON")
    p.add_argument("--mode", required=True, choices=training.MODES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_toy_train)

    p = sub.add_parser("eval", help="dataset-space evaluation of a trained model")
    p.add_argument("--model", required=True, help="model.json from toy-train")
    p.add_argument("--spec", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--post-inference", action="store_true",
                   help="score with post-inference mapping instead of void projection")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("pseudo-label", help="universal pseudo-labels from JSONL")
    add_inputs(p)
    p.add_argument("--in", dest="input", required=True, help="JSON-lines input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pseudo_label)

    p = sub.add_parser("surface", help="decision surface CSV over a grid")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, help="xmin,xmax,ymin,ymax,nx,ny")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_surface)
    return parser


def run(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except UnitaxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
