"""Page-level feature extraction for the directory-page classifier.

Fifteen counts and ratios per page.  The order of the vector is frozen:
serialized models and CSV exports both depend on it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .annotate import AnnotationLabel, AnnotationSet, is_address_candidate
from .visual import VisualPage, group_text

FEATURE_NAMES = (
    "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8",
    "f9", "f10", "f11", "f12", "f13", "f14", "f15",
)


@dataclass(frozen=True)
class FeatureVector:
    f1: float = 0.0   # currency mentions
    f2: float = 0.0   # date mentions
    f3: float = 0.0   # email addresses
    f4: float = 0.0   # phone numbers
    f5: float = 0.0   # facility mentions
    f6: float = 0.0   # groups on the page
    f7: float = 0.0   # fraction of page area covered by tables
    f8: float = 0.0   # role mentions
    f9: float = 0.0   # words outside page header/footer groups
    f10: float = 0.0  # groups that look like address blocks
    f11: float = 0.0  # groups boxed on all four sides
    f12: float = 0.0  # groups with 1..3 organization mentions
    f13: float = 0.0  # groups with 1..4 role mentions
    f14: float = 0.0  # f12 / f6
    f15: float = 0.0  # f13 / f6

    def as_list(self) -> list[float]:
        return [getattr(self, name) for name in FEATURE_NAMES]

    @classmethod
    def from_list(cls, values: "list[float]") -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(values)}")
        return cls(**{name: float(v) for name, v in zip(FEATURE_NAMES, values)})


def _label_count(anns, label: AnnotationLabel) -> int:
    return sum(1 for a in anns if a.label is label)


def extract_features(page: VisualPage, anns: AnnotationSet, page_index: int = 0) -> FeatureVector:
    groups = page.groups
    per_group = [anns.for_group(page_index, gi) for gi in range(len(groups))]

    f1 = sum(_label_count(a, AnnotationLabel.CURRENCY) for a in per_group)
    f2 = sum(_label_count(a, AnnotationLabel.DATE) for a in per_group)
    f3 = sum(_label_count(a, AnnotationLabel.EMAIL) for a in per_group)
    f4 = sum(_label_count(a, AnnotationLabel.PHONE) for a in per_group)
    f5 = sum(_label_count(a, AnnotationLabel.FAC) for a in per_group)
    f6 = len(groups)

    # Table regions may overlap each other or hang off the page; only the
    # on-page portion counts and the fraction is capped at 1.
    table_area = 0.0
    for r in page.table_regions:
        w = max(0.0, min(r.right, page.width) - max(r.left, 0.0))
        h = max(0.0, min(r.bottom, page.height) - max(r.top, 0.0))
        table_area += w * h
    f7 = min(1.0, table_area / (page.width * page.height))

    f8 = sum(_label_count(a, AnnotationLabel.ROLE) for a in per_group)
    f9 = sum(
        len(group_text(g).split()) for g in groups if not g.is_furniture
    )
    f10 = sum(1 for a in per_group if is_address_candidate(a))
    f11 = sum(1 for g in groups if g.border_sides == 4)
    f12 = sum(1 for a in per_group if 1 <= _label_count(a, AnnotationLabel.ORG) <= 3)
    f13 = sum(1 for a in per_group if 1 <= _label_count(a, AnnotationLabel.ROLE) <= 4)
    f14 = f12 / f6 if f6 else 0.0
    f15 = f13 / f6 if f6 else 0.0

    return FeatureVector(
        f1=float(f1), f2=float(f2), f3=float(f3), f4=float(f4), f5=float(f5),
        f6=float(f6), f7=f7, f8=float(f8), f9=float(f9), f10=float(f10),
        f11=float(f11), f12=float(f12), f13=float(f13), f14=f14, f15=f15,
    )


def write_features_csv(f, rows: "list[tuple[FeatureVector, int | None]]") -> None:
    """Write rows as CSV with the frozen header.  ``label`` is 1 for a
    directory page, 0 otherwise, empty when unknown."""
    writer = csv.writer(f)
    writer.writerow(list(FEATURE_NAMES) + ["label"])
    for vec, label in rows:
        writer.writerow([repr(v) for v in vec.as_list()] + ["" if label is None else int(label)])


def read_features_csv(f) -> "list[tuple[list[float], int]]":
    """Read labeled feature rows; rows with an empty label are skipped."""
    reader = csv.reader(f)
    header = next(reader, None)
    expected = list(FEATURE_NAMES) + ["label"]
    if header != expected:
        raise ValueError(f"bad CSV header: expected {expected}, got {header}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise ValueError(f"line {lineno}: expected {len(expected)} columns")
        label_text = row[-1].strip().lower()
        if not label_text:
            continue
        if label_text in ("1", "directory", "true"):
            label = 1
        elif label_text in ("0", "non-directory", "false"):
            label = 0
        else:
            raise ValueError(f"line {lineno}: unrecognized label {row[-1]!r}")
        rows.append(([float(v) for v in row[:-1]], label))
    return rows


def features_csv_text(rows) -> str:
    buf = io.StringIO()
    write_features_csv(buf, rows)
    return buf.getvalue()
