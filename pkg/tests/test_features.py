import io

import pytest

from dirtree.annotate import Gazetteer, annotate
from dirtree.features import (
    FEATURE_NAMES,
    FeatureVector,
    extract_features,
    features_csv_text,
    read_features_csv,
    write_features_csv,
)

from conftest import page, parse_page, text_group
from dirtree.visual import parse_document
from conftest import doc

GAZ = Gazetteer.default()


def features_for(*groups, **page_kw):
    vp = parse_document(doc(page(*groups, **page_kw)))[0]
    return extract_features(vp, annotate(vp, GAZ))


def test_counting_features():
    f = features_for(
        text_group("fees of EUR 1,000 due 12/31/2021", 0, 0, 300, 10),
        text_group("mail info@fund.lu or call +352 26 12 34 56", 0, 20, 300, 30),
    )
    assert f.f1 == 1  # currency
    assert f.f2 == 1  # date
    assert f.f3 == 1  # email
    assert f.f4 == 1  # phone
    assert f.f6 == 2  # groups
    assert f.f9 == 15  # words


def test_word_count_excludes_furniture():
    f = features_for(
        text_group("one two three", 0, 0, 100, 10),
        text_group("Page 4 of 120", 0, 700, 100, 710, footer=True),
        text_group("Annual Report", 0, 5, 100, 15, header=True),
    )
    assert f.f9 == 3
    assert f.f6 == 3  # group count still includes furniture


def test_table_area_fraction():
    f = features_for(
        text_group("x", 0, 0, 10, 10),
        width=100, height=100, tables=[{"l": 0, "t": 0, "r": 50, "b": 100}],
    )
    assert f.f7 == pytest.approx(0.5)


def test_table_area_clipped_to_page():
    f = features_for(
        text_group("x", 0, 0, 10, 10),
        width=100, height=100, tables=[{"l": 50, "t": 0, "r": 150, "b": 100}],
    )
    assert f.f7 == pytest.approx(0.5)


def test_table_area_capped_at_one():
    f = features_for(
        text_group("x", 0, 0, 10, 10),
        width=100, height=100,
        tables=[{"l": 0, "t": 0, "r": 100, "b": 100}, {"l": 0, "t": 0, "r": 100, "b": 100}],
    )
    assert f.f7 == 1.0


def test_bordered_groups_need_all_four_sides():
    f = features_for(
        text_group("a", 0, 0, 10, 10, border=4),
        text_group("b", 0, 20, 10, 30, border=3),
        text_group("c", 0, 40, 10, 50),
    )
    assert f.f11 == 1


def test_org_window_excludes_heavy_groups():
    many = "Alpha SA then Beta SA then Gamma SA then Delta SA"
    f = features_for(
        text_group("Acme Capital S.A.", 0, 0, 200, 10),
        text_group(many, 0, 20, 500, 30),
    )
    assert f.f12 == 1  # four orgs in one group falls outside the 1..3 window


def test_role_window_excludes_heavy_groups():
    many = "Custodian Auditor Registrar Depositary Sponsor"
    f = features_for(
        text_group("Custodian", 0, 0, 100, 10),
        text_group(many, 0, 20, 400, 30),
    )
    assert f.f13 == 1  # five roles falls outside the 1..4 window
    assert f.f8 == 6   # raw role count still sees all of them


def test_ratios_zero_without_groups():
    f = FeatureVector(f6=0.0, f12=3.0)
    assert f.f14 == 0.0 and f.f15 == 0.0
    vp = parse_document(doc(page(text_group("x", 0, 0, 10, 10))))[0]
    # extract recomputes the ratios from its own counts
    got = extract_features(vp, annotate(vp, GAZ))
    assert got.f14 == got.f12 / got.f6


def test_fixture_feature_vector(fig1a_page):
    f = extract_features(fig1a_page, annotate(fig1a_page, GAZ))
    assert f.f1 == 0 and f.f2 == 0 and f.f3 == 0 and f.f4 == 0 and f.f5 == 0
    assert f.f6 == 15
    assert f.f7 == 0.0
    assert f.f8 == 3
    assert f.f9 == 116
    assert f.f10 == 6
    assert f.f11 == 0
    assert f.f12 == 5
    assert f.f13 == 3
    assert f.f14 == pytest.approx(5 / 15)
    assert f.f15 == pytest.approx(3 / 15)


def test_vector_list_round_trip():
    vec = FeatureVector.from_list([float(i) for i in range(15)])
    assert vec.as_list() == [float(i) for i in range(15)]
    with pytest.raises(ValueError):
        FeatureVector.from_list([1.0] * 14)


# --- CSV ---

def test_csv_round_trip():
    rows = [
        (FeatureVector.from_list([float(i) for i in range(15)]), 1),
        (FeatureVector(f7=0.123456789012345), 0),
        (FeatureVector(f6=2.0), None),
    ]
    text = features_csv_text(rows)
    assert text.splitlines()[0] == ",".join(FEATURE_NAMES) + ",label"
    back = read_features_csv(io.StringIO(text))
    # the unlabeled row is dropped, floats come back exactly
    assert len(back) == 2
    assert back[0] == ([float(i) for i in range(15)], 1)
    assert back[1][0][6] == 0.123456789012345


def test_csv_label_spellings():
    lines = [",".join(FEATURE_NAMES) + ",label"]
    lines.append(",".join(["0"] * 15) + ",directory")
    lines.append(",".join(["0"] * 15) + ",NON-DIRECTORY")
    lines.append(",".join(["0"] * 15) + ",true")
    back = read_features_csv(io.StringIO("\n".join(lines)))
    assert [label for _, label in back] == [1, 0, 1]


def test_csv_errors():
    with pytest.raises(ValueError, match="header"):
        read_features_csv(io.StringIO("a,b,c\n"))
    good_header = ",".join(FEATURE_NAMES) + ",label"
    with pytest.raises(ValueError, match="columns"):
        read_features_csv(io.StringIO(good_header + "\n1,2,3\n"))
    with pytest.raises(ValueError, match="label"):
        read_features_csv(io.StringIO(good_header + "\n" + ",".join(["0"] * 15) + ",maybe\n"))


def test_write_features_csv_to_real_file(tmp_path):
    p = tmp_path / "features.csv"
    with open(p, "w", newline="") as f:
        write_features_csv(f, [(FeatureVector(f6=1.0), 0)])
    with open(p, newline="") as f:
        assert len(read_features_csv(f)) == 1
