"""Command-line interface.

Subcommands cover each pipeline stage (validate, annotate, features, train,
classify, segment, tree, blocks) plus an eval harness.  Exit codes: 0 on
success, 1 on any input or usage error, 2 when an internal invariant is
violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import forest
from .annotate import Gazetteer, annotate as annotate_page
from .features import extract_features, write_features_csv, read_features_csv
from .metrics import (
    check_page_sets,
    eval_classifier,
    eval_segmentation,
    eval_tree,
    gold_page_labels,
    gold_spans,
    gold_tree_for_page,
    load_gold,
    PRF,
)
from .segment import EmptyPageError, SpanLabel, segment_page, spans_to_json
from .tree import (
    TreeInvariantError,
    TreeParams,
    blocks_to_json,
    build_tree,
    directory_blocks,
    tree_from_json,
    tree_to_json,
    validate_tree,
)
from .visual import parse_document

CONFIG_ENV = "DIRTREE_CONFIG"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the contract here is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass(frozen=True)
class PipelineConfig:
    gazetteer: "str | None" = None
    model: "str | None" = None
    tree_params: TreeParams = TreeParams()
    threshold: float = 0.5
    output_dir: "str | None" = None

    @classmethod
    def from_json(cls, data: "bytes | str | dict") -> "PipelineConfig":
        if isinstance(data, (bytes, str)):
            data = json.loads(data)
        if not isinstance(data, dict):
            raise ValueError("config must be a JSON object")
        known = {"gazetteer", "model", "tree_params", "threshold", "output_dir"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("gazetteer", "model"):
            path = data.get(key)
            if path is not None and not os.path.exists(path):
                raise ValueError(f"config {key} does not exist: {path}")
        tp = data.get("tree_params", {})
        if not isinstance(tp, dict):
            raise ValueError("config tree_params must be an object")
        params = TreeParams(**tp)
        threshold = data.get("threshold", 0.5)
        if not isinstance(threshold, (int, float)) or not 0 <= threshold <= 1:
            raise ValueError("config threshold must be in [0, 1]")
        return cls(
            gazetteer=data.get("gazetteer"),
            model=data.get("model"),
            tree_params=params,
            threshold=float(threshold),
            output_dir=data.get("output_dir"),
        )

    @classmethod
    def from_environment(cls) -> "PipelineConfig":
        path = os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        try:
            raw = Path(path).read_text()
        except OSError as e:
            raise ValueError(f"cannot read {CONFIG_ENV} file: {e}") from e
        return cls.from_json(raw)


# --- shared plumbing -------------------------------------------------------

def _read_doc(path: str):
    return parse_document(Path(path).read_bytes())


def _load_gazetteer(args, cfg: PipelineConfig) -> Gazetteer:
    path = getattr(args, "gazetteer", None) or cfg.gazetteer
    return Gazetteer.load(path) if path else Gazetteer.default()


def _load_model(args, cfg: PipelineConfig):
    path = getattr(args, "model", None) or cfg.model
    if not path:
        raise UsageError("a model is required here; pass --model")
    return forest.load_model(path)


def _tree_params(args, cfg: PipelineConfig) -> TreeParams:
    base = cfg.tree_params
    overrides = {
        name: getattr(args, name)
        for name in (
            "band_overlap_frac",
            "align_tol",
            "gap_factor",
            "min_x_overlap_frac",
            "size_cluster_tol",
        )
        if getattr(args, name, None) is not None
    }
    if not overrides:
        return base
    merged = {
        "band_overlap_frac": base.band_overlap_frac,
        "align_tol": base.align_tol,
        "gap_factor": base.gap_factor,
        "min_x_overlap_frac": base.min_x_overlap_frac,
        "size_cluster_tol": base.size_cluster_tol,
    }
    merged.update(overrides)
    return TreeParams(**merged)


def _page_scores(pages, gaz, model, threshold):
    out = []
    for i, page in enumerate(pages):
        anns = annotate_page(page, gaz, page_index=i)
        score = forest.predict_score(model, extract_features(page, anns, i))
        out.append((i, score, 1 if score >= threshold else 0))
    return out


def _select_pages(args, cfg, pages, gaz):
    """Resolve --pages to a list of page indexes.

    "all" keeps every page; "auto" keeps classifier positives (model
    required); an explicit comma list is taken verbatim and must be in
    range.
    """
    spec = args.pages
    if spec == "all":
        return list(range(len(pages))), False
    if spec == "auto":
        model = _load_model(args, cfg)
        scored = _page_scores(pages, gaz, model, _threshold(args, cfg))
        return [i for i, _, label in scored if label == 1], False
    try:
        indexes = [int(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"--pages must be auto, all or a comma list: {spec!r}")
    if not indexes:
        raise UsageError("--pages list is empty")
    for i in indexes:
        if i < 0 or i >= len(pages):
            raise ValueError(f"page {i} out of range (document has {len(pages)})")
    return indexes, True


def _threshold(args, cfg: PipelineConfig) -> float:
    value = getattr(args, "threshold", None)
    if value is None:
        return cfg.threshold
    if not 0 <= value <= 1:
        raise UsageError("--threshold must be in [0, 1]")
    return value


def _segment_selected(pages, indexes, explicit, gaz):
    """Segment each selected page; pages with no scorable text are an error
    when explicitly requested, and skipped otherwise."""
    out = []
    for i in indexes:
        anns = annotate_page(pages[i], gaz, page_index=i)
        try:
            spans = segment_page(pages[i], anns, page_index=i)
        except EmptyPageError:
            if explicit:
                raise
            continue
        out.append((i, spans))
    return out


def _out_path(args, cfg: PipelineConfig, attr: str = "out") -> "str | None":
    path = getattr(args, attr, None)
    if path is None:
        return None
    if cfg.output_dir and not os.path.isabs(path):
        os.makedirs(cfg.output_dir, exist_ok=True)
        return os.path.join(cfg.output_dir, path)
    return path


def _emit(payload: dict, args, cfg: PipelineConfig) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    path = _out_path(args, cfg)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --- subcommands -----------------------------------------------------------

def _cmd_validate(args, cfg):
    pages = _read_doc(args.doc)
    _emit(
        {"pages": len(pages), "groups": sum(len(p.groups) for p in pages)},
        args,
        cfg,
    )
    return EXIT_OK


def _cmd_annotate(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    indexes, _ = _select_pages(args, cfg, pages, gaz)
    out = []
    for i in indexes:
        page_anns = []
        anns = annotate_page(pages[i], gaz, page_index=i)
        for gi in range(len(pages[i].groups)):
            for a in anns.for_group(i, gi):
                page_anns.append(
                    {
                        "group": gi,
                        "label": a.label.value,
                        "start": a.start,
                        "end": a.end,
                        "surface": a.surface,
                    }
                )
        out.append({"page": i, "annotations": page_anns})
    _emit({"pages": out}, args, cfg)
    return EXIT_OK


def _cmd_features(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    rows = []
    for i, page in enumerate(pages):
        anns = annotate_page(page, gaz, page_index=i)
        rows.append((extract_features(page, anns, i), None))
    path = _out_path(args, cfg, attr="csv")
    if path is None:
        write_features_csv(sys.stdout, rows)
    else:
        with open(path, "w", newline="") as f:
            write_features_csv(f, rows)
    return EXIT_OK


def _cmd_train(args, cfg):
    with open(args.csv, newline="") as f:
        rows = read_features_csv(f)
    if not rows:
        raise ValueError(f"no labeled rows in {args.csv}")
    data = forest.Dataset([(tuple(x), y) for x, y in rows])
    balanced = forest.resample(data, args.pos, args.neg, args.seed)
    hp = forest.ForestHyperparams(
        n_trees=args.trees,
        max_depth=args.depth,
        max_features_fraction=args.max_features,
        min_samples_leaf=args.min_leaf,
        seed=args.seed,
    )
    model = forest.train(balanced, hp)
    out = _out_path(args, cfg)
    forest.save_model(model, out)
    _print_line(
        json.dumps(
            {
                "rows": len(balanced.rows),
                "trees": hp.n_trees,
                "model": out,
                "importances": dict(zip(model.feature_order, model.importances)),
            }
        )
    )
    return EXIT_OK


def _cmd_classify(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    model = _load_model(args, cfg)
    scored = _page_scores(pages, gaz, model, _threshold(args, cfg))
    _emit(
        {
            "pages": [
                {"page": i, "score": score, "label": label}
                for i, score, label in scored
            ]
        },
        args,
        cfg,
    )
    return EXIT_OK


def _cmd_segment(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    indexes, explicit = _select_pages(args, cfg, pages, gaz)
    out = [
        spans_to_json(i, spans)
        for i, spans in _segment_selected(pages, indexes, explicit, gaz)
    ]
    _emit({"pages": out}, args, cfg)
    return EXIT_OK


def _build_page_trees(args, cfg, pages, gaz):
    indexes, explicit = _select_pages(args, cfg, pages, gaz)
    params = _tree_params(args, cfg)
    out = []
    for i, spans in _segment_selected(pages, indexes, explicit, gaz):
        t = build_tree(spans, params)
        validate_tree(t)
        out.append((i, t))
    return out


def _cmd_tree(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    built = _build_page_trees(args, cfg, pages, gaz)
    _emit(
        {"pages": [{"page": i, "tree": tree_to_json(t)} for i, t in built]},
        args,
        cfg,
    )
    return EXIT_OK


def _cmd_blocks(args, cfg):
    pages = _read_doc(args.doc)
    gaz = _load_gazetteer(args, cfg)
    built = _build_page_trees(args, cfg, pages, gaz)
    blocks = []
    for i, t in built:
        blocks.extend(blocks_to_json(directory_blocks(t), page_index=i))
    _emit({"blocks": blocks}, args, cfg)
    return EXIT_OK


# --- eval ------------------------------------------------------------------

def _load_json_file(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path} is not valid JSON: {e}") from e


def _pred_pages(pred: dict, path: str) -> list:
    if not isinstance(pred, dict) or not isinstance(pred.get("pages"), list):
        raise ValueError(f"{path} must be an object with a 'pages' array")
    return pred["pages"]


def _combine(prfs: "list[PRF]") -> PRF:
    return PRF.from_counts(
        sum(p.tp for p in prfs), sum(p.fp for p in prfs), sum(p.fn for p in prfs)
    )


def _eval_classifier(args) -> dict:
    pred = _pred_pages(_load_json_file(args.pred), args.pred)
    gold = gold_page_labels(load_gold(_load_json_file(args.gold)))
    try:
        pred_labels = {int(p["page"]): int(p["label"]) for p in pred}
    except (KeyError, TypeError) as e:
        raise ValueError(f"{args.pred}: every page needs 'page' and 'label'") from e
    check_page_sets(set(gold), set(pred_labels))
    ordered = sorted(gold)
    prf = eval_classifier([gold[i] for i in ordered], [pred_labels[i] for i in ordered])
    return {"stage": "classifier", "overall": prf.to_json()}


def _spans_from_pred(pred_pages: list, path: str):
    from .visual import BBox, StyleInfo
    from .segment import LabeledSpan

    box = BBox(0.0, 0.0, 0.0, 0.0)
    style = StyleInfo("", 1.0, False, False, 0)
    out = []
    for p in pred_pages:
        try:
            page_no = int(p["page"])
            for s in p["spans"]:
                out.append(
                    LabeledSpan(
                        page_index=page_no,
                        group_index=int(s["group"]),
                        start=int(s["start"]),
                        end=int(s["end"]),
                        label=SpanLabel(s["label"]),
                        text="",
                        bbox=box,
                        style_summary=style,
                        fired_rule="pred",
                    )
                )
        except (KeyError, TypeError) as e:
            raise ValueError(f"{path}: malformed span record: {e}") from e
    return out


def _eval_segmentation(args) -> dict:
    pred_pages = _pred_pages(_load_json_file(args.pred), args.pred)
    gold = load_gold(_load_json_file(args.gold))
    pred = _spans_from_pred(pred_pages, args.pred)
    goldspans = gold_spans(gold)
    gold_set = {p["page"] for p in gold["pages"] if "spans" in p}
    check_page_sets(gold_set, {int(p["page"]) for p in pred_pages})
    per_page = {}
    for page in sorted(gold_set):
        per_page[page] = eval_segmentation(
            [s for s in goldspans if s.page_index == page],
            [s for s in pred if s.page_index == page],
        )
    overall = _combine(list(per_page.values()))
    return {
        "stage": "segmentation",
        "overall": overall.to_json(),
        "pages": {str(k): v.to_json() for k, v in per_page.items()},
    }


def _eval_tree(args) -> dict:
    if not args.doc:
        raise UsageError("--doc is required for --stage tree (gold texts live there)")
    pred_pages = _pred_pages(_load_json_file(args.pred), args.pred)
    gold = load_gold(_load_json_file(args.gold))
    doc = _read_doc(args.doc)
    try:
        pred_trees = {int(p["page"]): tree_from_json(p["tree"]) for p in pred_pages}
    except (KeyError, TypeError) as e:
        raise ValueError(f"{args.pred}: every page needs 'page' and 'tree'") from e
    gold_records = {p["page"]: p for p in gold["pages"] if "spans" in p}
    check_page_sets(set(gold_records), set(pred_trees))
    per_page = {}
    for page in sorted(gold_records):
        if page < 0 or page >= len(doc):
            raise ValueError(f"gold page {page} not present in --doc")
        gold_t = gold_tree_for_page(gold_records[page], doc[page])
        per_page[page] = eval_tree(gold_t, pred_trees[page])
    metric_names = ("blocks", "parents", "aligned_nodes")
    report = {"stage": "tree"}
    for name in metric_names:
        report[name] = _combine([m[name] for m in per_page.values()]).to_json()
    report["pages"] = {
        str(k): {name: m[name].to_json() for name in metric_names}
        for k, m in per_page.items()
    }
    return report


def _print_line(text: str) -> None:
    sys.stdout.write(text + "\n")


def _report_table(report: dict) -> "list[str]":
    rows = []
    for key, value in report.items():
        if isinstance(value, dict) and "precision" in value:
            rows.append((key, value))
    lines = [f"{'metric':<14} {'P':>7} {'R':>7} {'F1':>7} {'tp':>5} {'fp':>5} {'fn':>5}"]
    for name, v in rows:
        lines.append(
            f"{name:<14} {v['precision']:>7.3f} {v['recall']:>7.3f} "
            f"{v['f1']:>7.3f} {v['tp']:>5} {v['fp']:>5} {v['fn']:>5}"
        )
    return lines

def _cmd_eval(args, cfg):
    if args.stage == "classifier":
        report = _eval_classifier(args)
    elif args.stage == "segmentation":
        report = _eval_segmentation(args)
    else:
        report = _eval_tree(args)
    # Line 1 is the machine-readable report; the table below it is for eyes.
    _print_line(json.dumps(report, sort_keys=True))
    for line in _report_table(report):
        _print_line(line)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def _add_doc(p):
    p.add_argument("doc", help="visual-model document JSON")


def _add_gazetteer(p):
    p.add_argument("--gazetteer", help="gazetteer JSON (default: packaged)")


def _add_pages(p, default):
    p.add_argument(
        "--pages",
        default=default,
        help=f"auto, all, or comma list of page indexes (default: {default})",
    )


def _add_model(p):
    p.add_argument("--model", help="trained classifier model JSON")
    p.add_argument("--threshold", type=float, help="positive-class threshold")


def _add_tree_params(p):
    p.add_argument("--band-overlap-frac", type=float, dest="band_overlap_frac")
    p.add_argument("--align-tol", type=float, dest="align_tol")
    p.add_argument("--gap-factor", type=float, dest="gap_factor")
    p.add_argument("--min-x-overlap-frac", type=float, dest="min_x_overlap_frac")
    p.add_argument("--size-cluster-tol", type=float, dest="size_cluster_tol")


def _add_out(p):
    p.add_argument("--out", help="write output JSON here instead of stdout")


def build_parser() -> _Parser:
    parser = _Parser(prog="dirtree", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("validate", help="check a document file")
    _add_doc(p)
    _add_out(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("annotate", help="entity annotations per page")
    _add_doc(p)
    _add_gazetteer(p)
    _add_pages(p, "all")
    _add_model(p)
    _add_out(p)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("features", help="per-page feature CSV")
    _add_doc(p)
    _add_gazetteer(p)
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train the page classifier")
    p.add_argument("--csv", required=True, help="labeled feature CSV")
    p.add_argument("--pos", required=True, type=int, help="resampled positive count")
    p.add_argument("--neg", required=True, type=int, help="resampled negative count")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--trees", type=int, default=20)
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--max-features", type=float, default=0.8, dest="max_features")
    p.add_argument("--min-leaf", type=int, default=2, dest="min_leaf")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="score pages with a model")
    _add_doc(p)
    _add_gazetteer(p)
    _add_model(p)
    _add_out(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("segment", help="label spans on pages")
    _add_doc(p)
    _add_gazetteer(p)
    _add_pages(p, "all")
    _add_model(p)
    _add_out(p)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("tree", help="build reading trees")
    _add_doc(p)
    _add_gazetteer(p)
    _add_pages(p, "all")
    _add_model(p)
    _add_tree_params(p)
    _add_out(p)
    p.set_defaults(func=_cmd_tree)

    p = sub.add_parser("blocks", help="end-to-end directory blocks")
    _add_doc(p)
    _add_gazetteer(p)
    _add_pages(p, "auto")
    _add_model(p)
    _add_tree_params(p)
    _add_out(p)
    p.set_defaults(func=_cmd_blocks)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--pred", required=True, help="prediction JSON from this tool")
    p.add_argument("--gold", required=True, help="gold JSON")
    p.add_argument(
        "--stage",
        required=True,
        choices=["classifier", "segmentation", "tree"],
    )
    p.add_argument("--doc", help="source document (required for --stage tree)")
    p.set_defaults(func=_cmd_eval)

    return parser


def run(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as e:  # --help
        return EXIT_OK if e.code in (0, None) else EXIT_INPUT
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        cfg = PipelineConfig.from_environment()
        return args.func(args, cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except TreeInvariantError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
