"""Bottom-up construction of the hierarchical reading tree.

Spans are visited in reverse reading order (bottom band first, rightmost span
first).  Each Body claims earlier-visited bodies that belong to the same
entry; each Header claims everything it visually dominates: the space below
it and to its right, unless a nearer node already claimed it.  Headers with
indistinguishable styling sit in one cluster and never parent each other,
which is what keeps sibling sections from swallowing one another.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from enum import Enum

from .segment import LabeledSpan, SpanLabel
from .visual import BBox, v_gap, x_overlap, y_overlap


class TreeParamError(ValueError):
    pass


class TreeInvariantError(RuntimeError):
    """The constructed tree violates a structural invariant."""


@dataclass(frozen=True)
class TreeParams:
    band_overlap_frac: float = 0.5
    align_tol: float = 5.0
    gap_factor: float = 1.5
    min_x_overlap_frac: float = 0.3
    size_cluster_tol: float = 0.5

    def __post_init__(self):
        if not 0 < self.band_overlap_frac <= 1:
            raise TreeParamError("band_overlap_frac must be in (0, 1]")
        if self.align_tol < 0:
            raise TreeParamError("align_tol must be >= 0")
        if self.gap_factor < 0:
            raise TreeParamError("gap_factor must be >= 0")
        if not 0 < self.min_x_overlap_frac <= 1:
            raise TreeParamError("min_x_overlap_frac must be in (0, 1]")
        if self.size_cluster_tol < 0:
            raise TreeParamError("size_cluster_tol must be >= 0")


ROOT_ID = 0


class NodeLabel(str, Enum):
    ROOT = "Root"
    HEADER = "Header"
    BODY = "Body"


@dataclass
class TreeNode:
    node_id: int
    label: NodeLabel
    text: str
    parent: "int | None"
    children: list[int] = field(default_factory=list)
    cluster_id: "int | None" = None
    bbox: "BBox | None" = None
    span: "LabeledSpan | None" = None


@dataclass
class ReadingTree:
    nodes: dict[int, TreeNode]

    @property
    def root(self) -> TreeNode:
        return self.nodes[ROOT_ID]

    def children_of(self, node_id: int) -> "list[TreeNode]":
        return [self.nodes[c] for c in self.nodes[node_id].children]


@dataclass(frozen=True)
class DirectoryBlock:
    headers: tuple[str, ...]
    body: str


# --- header clustering -----------------------------------------------------

_CASING_ALL_CAPS = "all_caps"
_CASING_TITLE = "title"
_CASING_OTHER = "other"


def casing_class(text: str) -> str:
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return _CASING_OTHER
    if all(c.isupper() for c in letters):
        return _CASING_ALL_CAPS
    first = letters[0]
    return _CASING_TITLE if first.isupper() else _CASING_OTHER


def cluster_headers(spans: "list[LabeledSpan]", p: TreeParams) -> "dict[LabeledSpan, int]":
    """Cluster id per header span.

    Sizes are grouped first by single linkage (a chain of gaps, each within
    the tolerance, stays one group), then each size group splits on the exact
    (bold, italic, color, casing) tuple.  Ids are dense from 1, assigned in
    ascending size order.
    """
    headers = [s for s in spans if s.label is SpanLabel.HEADER]
    if not headers:
        return {}
    sizes = sorted({s.style_summary.font_size for s in headers})
    size_group_of: dict[float, int] = {sizes[0]: 0}
    group = 0
    for prev, cur in zip(sizes, sizes[1:]):
        if cur - prev > p.size_cluster_tol:
            group += 1
        size_group_of[cur] = group

    def style_key(s: LabeledSpan):
        st = s.style_summary
        return (st.bold, st.italic, st.color, casing_class(s.text))

    keys = sorted(
        {(size_group_of[s.style_summary.font_size], style_key(s)) for s in headers},
        key=lambda k: (k[0], k[1][0], k[1][1], k[1][2], k[1][3]),
    )
    ids = {key: i + 1 for i, key in enumerate(keys)}
    return {
        s: ids[(size_group_of[s.style_summary.font_size], style_key(s))]
        for s in headers
    }


# --- reading order ---------------------------------------------------------

def _same_band(a: BBox, b: BBox, p: TreeParams) -> bool:
    overlap = y_overlap(a, b)
    shorter = min(a.height, b.height)
    if shorter <= 0:
        # Degenerate zero-height boxes: band together only when touching.
        return max(a.top, b.top) <= min(a.bottom, b.bottom)
    return overlap >= p.band_overlap_frac * shorter


def reading_sequence(spans: "list[LabeledSpan]", p: "TreeParams | None" = None) -> "list[LabeledSpan]":
    """Spans in natural reading order: bands top to bottom, left to right
    within a band.  ``reversed()`` of the result walks the page bottom-up,
    rightmost first."""
    p = p or TreeParams()
    n = len(spans)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if _same_band(spans[i].bbox, spans[j].bbox, p):
                parent[find(i)] = find(j)

    bands: dict[int, list[int]] = {}
    for i in range(n):
        bands.setdefault(find(i), []).append(i)

    def band_key(members):
        return (
            min(spans[i].bbox.top for i in members),
            min(spans[i].bbox.left for i in members),
        )

    ordered = []
    for members in sorted(bands.values(), key=band_key):
        members.sort(key=lambda i: (spans[i].bbox.left, spans[i].bbox.top, i))
        ordered.extend(spans[i] for i in members)
    return ordered


# --- dominance and entry membership ----------------------------------------

def can_parent(
    c: LabeledSpan,
    n: LabeledSpan,
    clusters: "dict[LabeledSpan, int]",
    p: "TreeParams | None" = None,
) -> bool:
    """Whether candidate ``c`` may become the parent of node ``n``.

    ``n`` must start below ``c``; it must either overlap ``c`` horizontally
    by a minimum fraction of its own width or sit to the right of ``c``'s
    left edge; and two headers from the same cluster are never related.
    """
    p = p or TreeParams()
    if n.bbox.top <= c.bbox.top + p.align_tol:
        return False
    admissible = (
        x_overlap(c.bbox, n.bbox) >= p.min_x_overlap_frac * n.bbox.width
        or n.bbox.left >= c.bbox.left - p.align_tol
    )
    if not admissible:
        return False
    if (
        c.label is SpanLabel.HEADER
        and n.label is SpanLabel.HEADER
        and clusters.get(c) == clusters.get(n)
    ):
        return False
    return True


def nearest_header_above(
    x: LabeledSpan,
    spans: "list[LabeledSpan]",
    p: "TreeParams | None" = None,
) -> "LabeledSpan | None":
    """The closest header above a span with enough horizontal overlap;
    None stands for the synthetic root."""
    p = p or TreeParams()
    best = None
    best_key = None
    for idx, h in enumerate(spans):
        if h.label is not SpanLabel.HEADER or h is x:
            continue
        if x.bbox.top <= h.bbox.top + p.align_tol:
            continue
        if x_overlap(h.bbox, x.bbox) < p.min_x_overlap_frac * x.bbox.width:
            continue
        key = (x.bbox.top - h.bbox.bottom, -h.bbox.top, h.bbox.left, idx)
        if best_key is None or key < best_key:
            best = h
            best_key = key
    return best


def median_line_height(spans: "list[LabeledSpan]") -> float:
    """Median span height, used as the page's line-height estimate.

    Most spans on a directory page are single lines, so the median is robust
    to the occasional multi-line body box.
    """
    heights = [s.bbox.height for s in spans]
    return statistics.median(heights) if heights else 0.0


def same_entry(
    c: LabeledSpan,
    b: LabeledSpan,
    spans: "list[LabeledSpan]",
    p: "TreeParams | None" = None,
    line_height: "float | None" = None,
) -> bool:
    """Whether body ``b`` continues the entry started by body ``c``.

    True within one group; across groups the two must hang under the same
    nearest header, be left-aligned, sit within a small multiple of the line
    height, and have no admissible header between them.
    """
    p = p or TreeParams()
    if c.page_index == b.page_index and c.group_index == b.group_index:
        return True
    if line_height is None:
        line_height = median_line_height(spans)
    if abs(c.bbox.left - b.bbox.left) > p.align_tol:
        return False
    if v_gap(c.bbox, b.bbox) > p.gap_factor * line_height:
        return False
    if nearest_header_above(c, spans, p) is not nearest_header_above(b, spans, p):
        return False
    for h in spans:
        if h.label is not SpanLabel.HEADER:
            continue
        if (
            h.bbox.top > c.bbox.top + p.align_tol
            and h.bbox.top < b.bbox.top - p.align_tol
            and x_overlap(h.bbox, b.bbox) >= p.min_x_overlap_frac * b.bbox.width
        ):
            return False
    return True


# --- tree construction -----------------------------------------------------

def build_tree(spans: "list[LabeledSpan]", p: "TreeParams | None" = None) -> ReadingTree:
    """Assemble the reading tree from labeled spans.

    Walks the reading sequence in reverse.  A Body claims earlier unparented
    bodies of the same entry (chaining multi-line bodies); a Header claims
    every earlier unparented node it can dominate.  Whatever is left joins
    the synthetic root.  Headers that end up childless are moved under the
    root and later excluded from the emitted blocks.
    """
    p = p or TreeParams()
    live = [s for s in spans if s.label is not SpanLabel.NEITHER]
    sequence = reading_sequence(live, p)
    clusters = cluster_headers(sequence, p)
    line_height = median_line_height(sequence)

    order = {id(s): i for i, s in enumerate(sequence)}
    node_of = {id(s): i + 1 for i, s in enumerate(sequence)}
    nodes: dict[int, TreeNode] = {
        ROOT_ID: TreeNode(ROOT_ID, NodeLabel.ROOT, "", None)
    }
    for s in sequence:
        nodes[node_of[id(s)]] = TreeNode(
            node_id=node_of[id(s)],
            label=NodeLabel.HEADER if s.label is SpanLabel.HEADER else NodeLabel.BODY,
            text=s.text,
            parent=None,
            cluster_id=clusters.get(s),
            bbox=s.bbox,
            span=s,
        )

    traversed: list[LabeledSpan] = []
    for current in reversed(sequence):
        cur_node = nodes[node_of[id(current)]]
        if current.label is SpanLabel.BODY:
            for earlier in traversed:
                if earlier.label is not SpanLabel.BODY:
                    continue
                node = nodes[node_of[id(earlier)]]
                if node.parent is not None:
                    continue
                if same_entry(current, earlier, sequence, p, line_height):
                    node.parent = cur_node.node_id
                    cur_node.children.append(node.node_id)
        else:
            for earlier in traversed:
                node = nodes[node_of[id(earlier)]]
                if node.parent is not None:
                    continue
                if can_parent(current, earlier, clusters, p):
                    node.parent = cur_node.node_id
                    cur_node.children.append(node.node_id)
        traversed.append(current)

    root = nodes[ROOT_ID]
    for s in sequence:
        node = nodes[node_of[id(s)]]
        if node.parent is None:
            node.parent = ROOT_ID
            root.children.append(node.node_id)

    _demote_childless_headers(nodes)

    for node in nodes.values():
        node.children.sort(
            key=lambda cid: order[id(nodes[cid].span)] if nodes[cid].span is not None else 0
        )
    return ReadingTree(nodes=nodes)


def _demote_childless_headers(nodes: "dict[int, TreeNode]") -> None:
    """Move headers without children under the root (cascading upward)."""
    changed = True
    while changed:
        changed = False
        for node in nodes.values():
            if (
                node.label is NodeLabel.HEADER
                and not node.children
                and node.parent != ROOT_ID
            ):
                old = nodes[node.parent]
                old.children.remove(node.node_id)
                node.parent = ROOT_ID
                nodes[ROOT_ID].children.append(node.node_id)
                changed = True


def validate_tree(tree: ReadingTree) -> None:
    """Check the structural invariants; raise TreeInvariantError on failure.

    Leaves are Body nodes (childless headers may hang off the root); headers
    never have a Body parent; a header's parent is never in its own cluster;
    Neither spans do not appear; body subtrees partition cleanly into blocks.
    """
    nodes = tree.nodes
    if ROOT_ID not in nodes or nodes[ROOT_ID].label is not NodeLabel.ROOT:
        raise TreeInvariantError("missing root node")
    for node in nodes.values():
        if node.node_id == ROOT_ID:
            if node.parent is not None:
                raise TreeInvariantError("root must have no parent")
            continue
        if node.parent is None or node.parent not in nodes:
            raise TreeInvariantError(f"node {node.node_id} has no valid parent")
        if node.node_id not in nodes[node.parent].children:
            raise TreeInvariantError(
                f"node {node.node_id} missing from its parent's children"
            )
        if node.span is not None and node.span.label is SpanLabel.NEITHER:
            raise TreeInvariantError("Neither span present in tree")

    seen_children: set = set()
    for node in nodes.values():
        for c in node.children:
            if c in seen_children:
                raise TreeInvariantError(f"node {c} appears under two parents")
            seen_children.add(c)
            if nodes[c].parent != node.node_id:
                raise TreeInvariantError(f"child link {node.node_id}->{c} not mirrored")

    # Acyclicity: every node must reach the root.
    for node in nodes.values():
        visited = set()
        cur = node.node_id
        while cur != ROOT_ID:
            if cur in visited:
                raise TreeInvariantError(f"cycle involving node {cur}")
            visited.add(cur)
            cur = nodes[cur].parent

    for node in nodes.values():
        if node.node_id == ROOT_ID:
            continue
        parent = nodes[node.parent]
        if not node.children and node.label is NodeLabel.HEADER and node.parent != ROOT_ID:
            raise TreeInvariantError(
                f"childless header {node.node_id} not attached to root"
            )
        if node.label is NodeLabel.HEADER and parent.label is NodeLabel.BODY:
            raise TreeInvariantError(f"header {node.node_id} parented by a body")
        if node.label is NodeLabel.BODY and node.children:
            if any(nodes[c].label is not NodeLabel.BODY for c in node.children):
                raise TreeInvariantError(
                    f"body {node.node_id} has a non-body child"
                )
        if (
            node.label is NodeLabel.HEADER
            and parent.label is NodeLabel.HEADER
            and node.cluster_id is not None
            and node.cluster_id == parent.cluster_id
        ):
            raise TreeInvariantError(
                f"header {node.node_id} shares a cluster with its parent"
            )

    # Every body belongs to exactly one block.
    bodies = {n.node_id for n in nodes.values() if n.label is NodeLabel.BODY}
    covered: set = set()
    for block_nodes in _block_body_sets(tree):
        for node_id in block_nodes:
            if node_id in covered:
                raise TreeInvariantError(f"body {node_id} in two blocks")
            covered.add(node_id)
    if covered != bodies:
        raise TreeInvariantError("bodies not partitioned into blocks")


def _chain_heads(tree: ReadingTree) -> "list[TreeNode]":
    heads = []
    for node in tree.nodes.values():
        if node.label is not NodeLabel.BODY:
            continue
        parent = tree.nodes[node.parent]
        if parent.label is not NodeLabel.BODY:
            heads.append(node)
    return heads


def _body_subtree(tree: ReadingTree, head: TreeNode) -> "list[TreeNode]":
    out = []
    stack = [head]
    while stack:
        node = stack.pop()
        out.append(node)
        stack.extend(
            tree.nodes[c]
            for c in reversed(node.children)
            if tree.nodes[c].label is NodeLabel.BODY
        )
    return out


def _block_body_sets(tree: ReadingTree):
    return [
        [n.node_id for n in _body_subtree(tree, head)]
        for head in _chain_heads(tree)
    ]


def _sequence_position(tree: ReadingTree) -> "dict[int, int]":
    ids = [n.node_id for n in tree.nodes.values() if n.node_id != ROOT_ID]
    return {node_id: i for i, node_id in enumerate(sorted(ids))}


def directory_blocks(tree: ReadingTree) -> "list[DirectoryBlock]":
    """One block per body chain: the header texts from just under the root
    down to the immediate parent, plus the chain's concatenated body text.
    Blocks come out in the reading order of their last body."""
    pos = _sequence_position(tree)
    blocks = []
    for head in _chain_heads(tree):
        headers = []
        cur = tree.nodes[head.parent]
        while cur.node_id != ROOT_ID:
            headers.append(cur.text)
            cur = tree.nodes[cur.parent]
        headers.reverse()
        chain = sorted(_body_subtree(tree, head), key=lambda n: pos[n.node_id])
        body = " ".join(n.text for n in chain)
        leaf_pos = pos[chain[-1].node_id]
        blocks.append((leaf_pos, DirectoryBlock(headers=tuple(headers), body=body)))
    blocks.sort(key=lambda t: t[0])
    return [b for _, b in blocks]


# --- serialization ---------------------------------------------------------

def tree_to_json(tree: ReadingTree) -> dict:
    nodes = []
    for node_id in sorted(tree.nodes):
        node = tree.nodes[node_id]
        nodes.append(
            {
                "id": node.node_id,
                "label": node.label.value,
                "text": node.text,
                "parent": node.parent,
                "children": list(node.children),
                "cluster": node.cluster_id,
                "bbox": node.bbox.to_json() if node.bbox is not None else None,
            }
        )
    return {"nodes": nodes}


def tree_from_json(data: "bytes | str | dict") -> ReadingTree:
    """Rebuild a tree from its JSON form.  Spans are not recoverable; the
    result carries labels, texts and structure, which is all evaluation
    needs."""
    if isinstance(data, (bytes, str)):
        data = json.loads(data)
    nodes: dict[int, TreeNode] = {}
    for obj in data["nodes"]:
        bbox = obj.get("bbox")
        nodes[int(obj["id"])] = TreeNode(
            node_id=int(obj["id"]),
            label=NodeLabel(obj["label"]),
            text=obj["text"],
            parent=None if obj["parent"] is None else int(obj["parent"]),
            children=[int(c) for c in obj["children"]],
            cluster_id=obj.get("cluster"),
            bbox=None if bbox is None else BBox(bbox["l"], bbox["t"], bbox["r"], bbox["b"]),
        )
    return ReadingTree(nodes=nodes)


def blocks_to_json(blocks: "list[DirectoryBlock]", page_index: "int | None" = None) -> list:
    out = []
    for b in blocks:
        obj = {"headers": list(b.headers), "body": b.body}
        if page_index is not None:
            obj["page"] = page_index
        out.append(obj)
    return out
