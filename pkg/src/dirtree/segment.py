"""Label group text as Header, Body or Neither with an ordered rule cascade.

Rules fire per group, earlier rules win, and each emitted span records which
rule decided it.  Spans always tile the full group text exactly.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .annotate import AnnotationLabel, AnnotationSet
from .visual import BBox, Group, StyleInfo, VisualPage, group_layout, group_text, union_all


class SpanLabel(str, Enum):
    HEADER = "Header"
    BODY = "Body"
    NEITHER = "Neither"


# fired_rule values, in cascade order.
RULE_PAGE_FURNITURE = "page_furniture"
RULE_ENTITY_BODY = "entity_body"
RULE_ENTITY_HEADER = "entity_header"
RULE_COLON_DASH = "colon_dash"
RULE_ROLE_ADDRESS = "role_address"
RULE_STYLE_COLOR = "style_color"
RULE_STYLE_BOLD_ITALIC = "style_bold_italic"
RULE_STYLE_SIZE = "style_size"
RULE_STYLE_FAMILY = "style_family"
RULE_DEFAULT_BODY = "default_body"

_RULE_ORDER = {
    RULE_PAGE_FURNITURE: 0,
    RULE_ENTITY_BODY: 1,
    RULE_ENTITY_HEADER: 1,
    RULE_COLON_DASH: 2,
    RULE_ROLE_ADDRESS: 3,
    RULE_STYLE_COLOR: 4,
    RULE_STYLE_BOLD_ITALIC: 5,
    RULE_STYLE_SIZE: 6,
    RULE_STYLE_FAMILY: 7,
    RULE_DEFAULT_BODY: 8,
}

# Trailing tokens that suppress the colon/dash header rule: a label like
# "Tel:" introduces contact details, not a section.
_CONTACT_TOKENS = frozenset({"tel:", "email:", "fax:"})


class EmptyPageError(ValueError):
    """Page has no text outside page header/footer groups."""


@dataclass(frozen=True)
class PageStyleStats:
    predominant_color: int
    majority_font_size: float  # binned to 0.5pt
    majority_font_family: str


@dataclass(frozen=True)
class LabeledSpan:
    page_index: int
    group_index: int
    start: int
    end: int
    label: SpanLabel
    text: str
    bbox: BBox
    style_summary: StyleInfo
    fired_rule: str

    @property
    def line_left(self) -> float:
        return self.bbox.left


def size_bin(size: float) -> float:
    """Font size rounded to the nearest 0.5pt."""
    return round(size * 2) / 2


def page_style_stats(page: VisualPage) -> PageStyleStats:
    """Character-weighted modal color, font size and family of the page.

    Page header/footer groups are excluded.  Ties break toward the smaller
    size, the lexicographically smaller family, the numerically smaller color.
    """
    colors: Counter = Counter()
    sizes: Counter = Counter()
    families: Counter = Counter()
    for g in page.groups:
        if g.is_furniture:
            continue
        for line in g.lines:
            for seg in line.segments:
                weight = len(seg.text)
                colors[seg.style.color] += weight
                sizes[size_bin(seg.style.font_size)] += weight
                families[seg.style.font_family] += weight
    if not colors:
        raise EmptyPageError("page has no text outside header/footer groups")

    def mode(counter: Counter):
        return min(counter.items(), key=lambda kv: (-kv[1], kv[0]))[0]

    return PageStyleStats(
        predominant_color=mode(colors),
        majority_font_size=mode(sizes),
        majority_font_family=mode(families),
    )


def _span_geometry(group: Group, layout, start: int, end: int) -> tuple[BBox, StyleInfo]:
    """Bounding box and dominant style of text[start:end] within a group.

    The dominant style is the one covering the most characters of the span;
    ties go to the earlier segment in reading order.
    """
    boxes = []
    weights: dict[StyleInfo, int] = {}
    order: dict[StyleInfo, int] = {}
    for idx, (seg, s0, s1) in enumerate(layout):
        overlap = min(end, s1) - max(start, s0)
        if overlap <= 0:
            continue
        boxes.append(seg.bbox)
        weights[seg.style] = weights.get(seg.style, 0) + overlap
        order.setdefault(seg.style, idx)
    if not boxes:
        # Span covers only joining whitespace; fall back to the whole group.
        boxes = [group.bbox]
        first = layout[0][0].style
        weights[first] = 1
        order[first] = 0
    style = min(weights, key=lambda st: (-weights[st], order[st]))
    return union_all(boxes), style


def _first_entity(anns):
    candidates = [
        a for a in anns
        if a.label in (AnnotationLabel.ORG, AnnotationLabel.PERSON)
    ]
    if not candidates:
        return None
    return min(candidates, key=lambda a: (a.start, a.end, a.label.value))


def _has_role_or_address(anns, start: int, end: int) -> bool:
    return any(
        a.label in (AnnotationLabel.ROLE, AnnotationLabel.ADDRESS_TYPE)
        and a.start < end
        and a.end > start
        for a in anns
    )


def segment_page(
    page: VisualPage,
    anns: AnnotationSet,
    page_index: int = 0,
) -> list[LabeledSpan]:
    """Apply the rule cascade to every group of an (already classified) page.

    Per group: (1) page furniture is Neither; (2) an ORG/PERSON entity with
    text following it turns [entity start, group end] into Body, an entity
    with nothing following becomes a Header on its own; (3) a remaining span
    ending in ':' or '-' is a Header unless its trailing token is a contact
    label; (4) a remaining span containing a role or address-type mention is
    a Header; (5) styling that stands out from the page (color, bold/italic,
    larger size, different family) makes a Header; (6) whatever is left is
    Body.
    """
    stats = page_style_stats(page)
    spans: list[LabeledSpan] = []
    for gi, group in enumerate(page.groups):
        spans.extend(
            _segment_group(group, anns.for_group(page_index, gi), stats, page_index, gi)
        )
    return spans


def _segment_group(group, anns, stats: PageStyleStats, page_index: int, gi: int):
    text = group_text(group)
    layout = group_layout(group)
    n = len(text)
    labels: list = [None] * n   # SpanLabel per character
    rules: list = [None] * n    # fired_rule per character

    def paint(start, end, label, rule):
        for i in range(start, end):
            if labels[i] is None:
                labels[i] = label
                rules[i] = rule

    if group.is_furniture:
        paint(0, n, SpanLabel.NEITHER, RULE_PAGE_FURNITURE)
    else:
        entity = _first_entity(anns)
        if entity is not None:
            if text[entity.end:].strip():
                paint(entity.start, n, SpanLabel.BODY, RULE_ENTITY_BODY)
            else:
                paint(entity.start, entity.end, SpanLabel.HEADER, RULE_ENTITY_HEADER)

        for start, end in _unlabeled_runs(labels):
            chunk = text[start:end].strip()
            if not chunk:
                continue
            if chunk.endswith((":", "-")):
                trailing = chunk.split()[-1].lower()
                if trailing not in _CONTACT_TOKENS:
                    paint(start, end, SpanLabel.HEADER, RULE_COLON_DASH)
                    continue
            if _has_role_or_address(anns, start, end):
                paint(start, end, SpanLabel.HEADER, RULE_ROLE_ADDRESS)
                continue
            _, style = _span_geometry(group, layout, start, end)
            if style.color != stats.predominant_color:
                paint(start, end, SpanLabel.HEADER, RULE_STYLE_COLOR)
            elif style.bold or style.italic:
                paint(start, end, SpanLabel.HEADER, RULE_STYLE_BOLD_ITALIC)
            elif size_bin(style.font_size) > stats.majority_font_size:
                paint(start, end, SpanLabel.HEADER, RULE_STYLE_SIZE)
            elif style.font_family != stats.majority_font_family:
                paint(start, end, SpanLabel.HEADER, RULE_STYLE_FAMILY)
            else:
                paint(start, end, SpanLabel.BODY, RULE_DEFAULT_BODY)

        # Whitespace-only leftovers merge into a neighboring span.
        for start, end in _unlabeled_runs(labels):
            if start > 0:
                paint(start, end, labels[start - 1], rules[start - 1])
            elif end < n:
                paint(start, end, labels[end], rules[end])
        # A group whose text is nothing but whitespace has no neighbor to
        # merge into; it reads as body filler.
        for start, end in _unlabeled_runs(labels):
            paint(start, end, SpanLabel.BODY, RULE_DEFAULT_BODY)

    return _runs_to_spans(group, layout, text, labels, rules, page_index, gi)


def _unlabeled_runs(labels):
    runs = []
    i = 0
    n = len(labels)
    while i < n:
        if labels[i] is None:
            j = i
            while j < n and labels[j] is None:
                j += 1
            runs.append((i, j))
            i = j
        else:
            i += 1
    return runs


def _runs_to_spans(group, layout, text, labels, rules, page_index, gi):
    """Merge per-character labels into maximal same-label spans.

    A merged span's fired_rule is the earliest cascade rule that contributed
    to it.
    """
    spans = []
    i = 0
    n = len(text)
    while i < n:
        j = i
        while j < n and labels[j] is labels[i]:
            j += 1
        rule = min(
            (rules[k] for k in range(i, j)),
            key=lambda r: _RULE_ORDER[r],
        )
        bbox, style = _span_geometry(group, layout, i, j)
        spans.append(
            LabeledSpan(
                page_index=page_index,
                group_index=gi,
                start=i,
                end=j,
                label=labels[i],
                text=text[i:j],
                bbox=bbox,
                style_summary=style,
                fired_rule=rule,
            )
        )
        i = j
    return spans


def spans_to_json(page_index: int, spans: "list[LabeledSpan]") -> dict:
    return {
        "page": page_index,
        "spans": [
            {
                "group": s.group_index,
                "start": s.start,
                "end": s.end,
                "label": s.label.value,
                "fired_rule": s.fired_rule,
                "text": s.text,
                "bbox": s.bbox.to_json(),
            }
            for s in spans
        ],
    }
