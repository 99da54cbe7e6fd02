from __future__ import annotations

import importlib.resources

import pytest

from gentlestrings.presentation import (
    Arrow,
    GentlePresentation,
    InfiniteDimensionalError,
    NotGentleError,
    PresentationError,
    format_path,
    parse_path_token,
)


def running_example():
    text = importlib.resources.files("gentlestrings.data").joinpath("running.gentle").read_text()
    return GentlePresentation.from_text(text)


def test_running_example_parses_and_is_gentle():
    p = running_example()
    assert p.field.p == 101
    assert p.vertices == ["0", "1", "2", "3", "4", "5"]
    assert len(p.arrows) == 9
    assert len(p.relations) == 8
    assert p.problems() == []
    p.require_gentle()


def test_running_example_quiver_tables():
    p = running_example()
    assert p.outgoing("0") == ["x", "z"]
    assert p.outgoing("1") == ["g", "y"]
    assert p.incoming("0") == ["x", "y"]
    assert p.incoming("3") == ["h", "t"]
    assert p.incoming("4") == ["g", "z"]
    assert p.allowed_successor("t") == "f"
    assert p.allowed_successor("r") is None
    assert p.allowed_predecessor("t") is None
    assert p.forbidden_successor("t") == "r"
    assert p.forbidden_predecessor("f") == "h"


def test_running_example_path_count_and_dimension():
    p = running_example()
    paths = p.enumerate_paths()
    assert len(paths) == 30
    assert p.dimension() == 36
    # the 6 allowed length-2 seams
    two = sorted("".join(q.arrows) for q in paths if len(q) == 2)
    assert two == ["ft", "hz", "rh", "xy", "yf", "zx"]
    # the unique longest path
    longest = max(paths, key=len)
    assert "".join(longest.arrows) == "rhzxyft"
    assert longest.tail == "2" and longest.head == "5"
    # per-arrow counts of being the last (leftmost) arrow of a path
    last_counts = {}
    for q in paths:
        last_counts[q.last_arrow] = last_counts.get(q.last_arrow, 0) + 1
    assert last_counts == {"r": 7, "h": 6, "z": 5, "x": 4, "y": 3, "f": 2, "t": 1, "s": 1, "g": 1}
    first_counts = {}
    for q in paths:
        first_counts[q.first_arrow] = first_counts.get(q.first_arrow, 0) + 1
    assert first_counts == {"t": 7, "f": 6, "y": 5, "x": 4, "z": 3, "h": 2, "r": 1, "s": 1, "g": 1}


def test_multiplication_respects_relations():
    p = running_example()
    f, t = p.path(["f"]), p.path(["t"])
    ft = p.multiply(f, t)
    assert ft is not None and ft.arrows == ("f", "t")
    assert ft.tail == "2" and ft.head == "1"
    # r∘t is a declared relation, s∘t is not composable
    r, s = p.path(["r"]), p.path(["s"])
    assert p.multiply(r, t) is None
    assert p.multiply(s, t) is None
    # trivial paths are one-sided units
    e2 = p.trivial_path("2")
    assert p.multiply(ft, e2) == ft
    assert p.multiply(e2, ft) is None
    e1 = p.trivial_path("1")
    assert p.multiply(e1, ft) == ft


def test_projective_basis():
    p = running_example()
    basis2 = p.projective_basis("2")
    # e_2 plus every subpath of rhzxyft containing t, i.e. 7 of them
    assert len(basis2) == 8
    assert basis2[0].is_trivial
    basis5 = p.projective_basis("5")
    assert ["".join(q.arrows) for q in basis5[1:]] == ["s"]


def test_path_and_seam_helpers():
    p = running_example()
    assert p.seam_allowed("f", "t") and not p.seam_allowed("r", "t")
    assert p.path(["r", "t"]) is None
    assert p.path(["x", "x"]) is None
    assert p.path(["f", "x"]) is None  # not composable
    assert p.path(["r", "h", "z"]).arrows == ("r", "h", "z")


def test_parse_errors_carry_line_numbers():
    with pytest.raises(PresentationError, match="line 2"):
        GentlePresentation.from_text("vertex a\nbogus b\n")
    with pytest.raises(PresentationError, match="line 3"):
        GentlePresentation.from_text("vertex a\nvertex b\narrow only_two a\n")
    with pytest.raises(PresentationError, match="unknown endpoint"):
        GentlePresentation.from_text("vertex a\narrow q a missing\n")
    with pytest.raises(PresentationError, match="composable"):
        GentlePresentation.from_text(
            "vertex a\nvertex b\narrow u a b\narrow v a b\nrel u v\n")


def test_not_gentle_is_reported():
    # three arrows out of one vertex
    text = "vertex a\nvertex b\n" + "".join(
        "arrow %s a b\n" % n for n in ("u", "v", "w"))
    p = GentlePresentation.from_text(text)
    probs = p.problems()
    assert any("3 outgoing" in m for m in probs)
    with pytest.raises(NotGentleError):
        p.require_gentle()
    # two allowed continuations of the same arrow
    text2 = ("vertex a\nvertex b\nvertex c\n"
             "arrow u a b\narrow v b c\narrow w b c\n")
    p2 = GentlePresentation.from_text(text2)
    assert any("two allowed continuations" in m for m in p2.problems())


def test_infinite_dimensional_detected():
    # a 2-cycle with no relations: allowed cycle
    text = "vertex a\nvertex b\narrow u a b\narrow v b a\n"
    p = GentlePresentation.from_text(text)
    assert p.is_gentle()
    with pytest.raises(InfiniteDimensionalError):
        p.enumerate_paths()


def test_roundtrip_text():
    p = running_example()
    q = GentlePresentation.from_text(p.to_text())
    assert q.vertices == p.vertices
    assert q.arrows == p.arrows
    assert q.relations == p.relations
    assert q.field == p.field


def test_path_token_format():
    assert format_path(("y", "f")) == "yf"
    assert format_path(("al", "be")) == "al.be"
    assert parse_path_token("yf") == ("y", "f")
    assert parse_path_token("al.be") == ("al", "be")
    with pytest.raises(PresentationError):
        parse_path_token("")
