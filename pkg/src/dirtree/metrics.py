"""Precision/recall/F1 scoring for the classifier, the segmenter and the
tree builder.

Tree quality is scored three ways: recovered blocks (header path plus body,
order-insensitive), parent assignment per body node, and node-level accuracy
after aligning predicted to gold blocks by body overlap.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .segment import LabeledSpan, SpanLabel
from .tree import (
    DirectoryBlock,
    NodeLabel,
    ReadingTree,
    ROOT_ID,
    directory_blocks,
)

ROOT_MARKER = "<ROOT>"


class PageSetMismatch(ValueError):
    """Gold and predicted results cover different page sets."""


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        # All-zero denominators score zero rather than raising.
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f, tp, fp, fn)

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def normalize_text(s: str) -> str:
    return " ".join(s.split())


# --- page classifier -------------------------------------------------------

def eval_classifier(gold: "list[int]", pred: "list[int]") -> PRF:
    """Positive-class scores over aligned label lists."""
    if len(gold) != len(pred):
        raise ValueError("gold and pred must be the same length")
    tp = sum(1 for g, q in zip(gold, pred) if g == 1 and q == 1)
    fp = sum(1 for g, q in zip(gold, pred) if g == 0 and q == 1)
    fn = sum(1 for g, q in zip(gold, pred) if g == 1 and q == 0)
    return PRF.from_counts(tp, fp, fn)


# --- span segmentation -----------------------------------------------------

def _span_keys(spans: "list[LabeledSpan]") -> "set[tuple]":
    return {
        (s.page_index, s.group_index, s.start, s.end, s.label.value)
        for s in spans
        if s.label is not SpanLabel.NEITHER
    }


def eval_segmentation(gold: "list[LabeledSpan]", pred: "list[LabeledSpan]") -> PRF:
    """Exact-match spans: same group, offsets and label.  Neither spans are
    background and do not count."""
    g = _span_keys(gold)
    q = _span_keys(pred)
    return PRF.from_counts(len(g & q), len(q - g), len(g - q))


def eval_segmentation_by_page(
    gold: "list[LabeledSpan]", pred: "list[LabeledSpan]"
) -> "dict[int, PRF]":
    pages = {s.page_index for s in gold} | {s.page_index for s in pred}
    out = {}
    for page in sorted(pages):
        out[page] = eval_segmentation(
            [s for s in gold if s.page_index == page],
            [s for s in pred if s.page_index == page],
        )
    return out


# --- tree quality ----------------------------------------------------------

def _block_key(b: DirectoryBlock) -> tuple:
    return (
        tuple(normalize_text(h) for h in b.headers),
        normalize_text(b.body),
    )


def eval_blocks(gold: "list[DirectoryBlock]", pred: "list[DirectoryBlock]") -> PRF:
    """Multiset match on (header path, body) pairs."""
    g = Counter(_block_key(b) for b in gold)
    q = Counter(_block_key(b) for b in pred)
    tp = sum((g & q).values())
    return PRF.from_counts(tp, sum(q.values()) - tp, sum(g.values()) - tp)


def _parent_pairs(tree: ReadingTree) -> "Counter[tuple[str, str]]":
    pairs: Counter = Counter()
    for node in tree.nodes.values():
        if node.label is not NodeLabel.BODY:
            continue
        parent = tree.nodes[node.parent]
        parent_text = ROOT_MARKER if parent.node_id == ROOT_ID else normalize_text(parent.text)
        pairs[(normalize_text(node.text), parent_text)] += 1
    return pairs


def eval_parents(gold: ReadingTree, pred: ReadingTree) -> PRF:
    """Multiset match on (body text, parent text) pairs; the synthetic root
    shows up as a reserved marker."""
    g = _parent_pairs(gold)
    q = _parent_pairs(pred)
    tp = sum((g & q).values())
    return PRF.from_counts(tp, sum(q.values()) - tp, sum(g.values()) - tp)


def _block_nodes(b: DirectoryBlock) -> "list[str]":
    return [normalize_text(h) for h in b.headers] + [normalize_text(b.body)]


def eval_aligned_nodes(gold: "list[DirectoryBlock]", pred: "list[DirectoryBlock]") -> PRF:
    """Greedy alignment of predicted to gold blocks by shared node count, in
    prediction order (ties go to the earliest gold block); then each aligned
    pair contributes position-wise node matches."""
    gold_nodes = [_block_nodes(b) for b in gold]
    pred_nodes = [_block_nodes(b) for b in pred]
    taken = [False] * len(gold_nodes)
    tp = fp = 0
    matched_gold = 0
    for pn in pred_nodes:
        best = -1
        best_overlap = 0
        for gi, gn in enumerate(gold_nodes):
            if taken[gi]:
                continue
            overlap = sum((Counter(pn) & Counter(gn)).values())
            if overlap > best_overlap:
                best = gi
                best_overlap = overlap
        if best < 0:
            fp += len(pn)
            continue
        taken[best] = True
        gn = gold_nodes[best]
        matched_gold += len(gn)
        hits = sum(1 for a, b in zip(pn, gn) if a == b)
        tp += hits
        fp += len(pn) - hits
    fn = sum(len(gn) for gi, gn in enumerate(gold_nodes) if not taken[gi])
    fn += matched_gold - tp
    return PRF.from_counts(tp, fp, fn)


def eval_tree(gold: ReadingTree, pred: ReadingTree) -> "dict[str, PRF]":
    gold_blocks = directory_blocks(gold)
    pred_blocks = directory_blocks(pred)
    return {
        "blocks": eval_blocks(gold_blocks, pred_blocks),
        "parents": eval_parents(gold, pred),
        "aligned_nodes": eval_aligned_nodes(gold_blocks, pred_blocks),
    }


# --- gold files ------------------------------------------------------------

def load_gold(data: "bytes | str | dict") -> dict:
    """Parse and validate a gold file.

    Shape: {"pages": [{"page": int, "is_directory": bool,
    "spans": [{"group": g, "start": s, "end": e, "label": str,
    "parent": span-index-or-null}]}]}.  Everything past "page" is optional
    so one file can carry gold for any subset of stages; "parent" indices
    point into the same page's spans array and define the gold tree.
    """
    if isinstance(data, (bytes, str)):
        data = json.loads(data)
    if not isinstance(data, dict) or not isinstance(data.get("pages"), list):
        raise ValueError("gold file must be an object with a 'pages' array")
    for p in data["pages"]:
        if not isinstance(p, dict) or not isinstance(p.get("page"), int):
            raise ValueError("every gold page needs an integer 'page' index")
        if "is_directory" in p and not isinstance(p["is_directory"], bool):
            raise ValueError(f"gold page {p['page']}: is_directory must be a bool")
        for i, s in enumerate(p.get("spans", [])):
            for key in ("group", "start", "end"):
                if not isinstance(s.get(key), int):
                    raise ValueError(
                        f"gold page {p['page']} span {i}: missing integer '{key}'"
                    )
            SpanLabel(s.get("label"))
            parent = s.get("parent")
            if parent is not None and not isinstance(parent, int):
                raise ValueError(
                    f"gold page {p['page']} span {i}: parent must be an index or null"
                )
    return data


def gold_page_labels(gold: dict) -> "dict[int, int]":
    out = {}
    for p in gold["pages"]:
        if "is_directory" in p:
            out[p["page"]] = 1 if p["is_directory"] else 0
    return out


def gold_spans(gold: dict) -> "list[LabeledSpan]":
    """Gold span records as LabeledSpan keys for eval_segmentation.

    Only the identity fields take part in matching, so geometry and style
    are placeholders.
    """
    from .visual import BBox, StyleInfo

    placeholder_box = BBox(0.0, 0.0, 0.0, 0.0)
    placeholder_style = StyleInfo("", 1.0, False, False, 0)
    out = []
    for p in gold["pages"]:
        for s in p.get("spans", []):
            out.append(
                LabeledSpan(
                    page_index=p["page"],
                    group_index=s["group"],
                    start=s["start"],
                    end=s["end"],
                    label=SpanLabel(s["label"]),
                    text="",
                    bbox=placeholder_box,
                    style_summary=placeholder_style,
                    fired_rule="gold",
                )
            )
    return out


def gold_tree_for_page(gold_page: dict, visual_page) -> ReadingTree:
    """Materialize the gold tree for one page.

    Span records become nodes (Neither spans are skipped); parent indices
    refer to positions in the spans array, null meaning the root.  Node
    texts are sliced out of the visual page's group text, which is why the
    caller must supply the source document.
    """
    from .tree import TreeNode, validate_tree, TreeInvariantError
    from .visual import group_text

    spans = gold_page.get("spans", [])
    page_no = gold_page["page"]
    labels = [SpanLabel(s["label"]) for s in spans]
    nodes: dict[int, TreeNode] = {
        ROOT_ID: TreeNode(ROOT_ID, NodeLabel.ROOT, "", None)
    }
    for i, s in enumerate(spans):
        if labels[i] is SpanLabel.NEITHER:
            continue
        gi = s["group"]
        if gi < 0 or gi >= len(visual_page.groups):
            raise ValueError(f"gold page {page_no} span {i}: no group {gi}")
        text = group_text(visual_page.groups[gi])
        if not 0 <= s["start"] < s["end"] <= len(text):
            raise ValueError(
                f"gold page {page_no} span {i}: offsets outside group text"
            )
        parent = s.get("parent")
        if parent is not None:
            if not 0 <= parent < len(spans):
                raise ValueError(f"gold page {page_no} span {i}: bad parent index")
            if labels[parent] is SpanLabel.NEITHER:
                raise ValueError(
                    f"gold page {page_no} span {i}: parent is a Neither span"
                )
        nodes[i + 1] = TreeNode(
            node_id=i + 1,
            label=NodeLabel.HEADER if labels[i] is SpanLabel.HEADER else NodeLabel.BODY,
            text=text[s["start"]:s["end"]],
            parent=ROOT_ID if parent is None else parent + 1,
        )
    for node in nodes.values():
        if node.node_id != ROOT_ID:
            nodes[node.parent].children.append(node.node_id)
    for node in nodes.values():
        node.children.sort()
    out = ReadingTree(nodes=nodes)
    try:
        validate_tree(out)
    except TreeInvariantError as e:
        raise ValueError(f"gold page {page_no}: invalid gold tree: {e}") from e
    return out


def check_page_sets(gold_pages: "set[int]", pred_pages: "set[int]") -> None:
    if gold_pages != pred_pages:
        missing = sorted(gold_pages - pred_pages)
        extra = sorted(pred_pages - gold_pages)
        raise PageSetMismatch(
            f"gold and prediction cover different pages: missing={missing} extra={extra}"
        )
