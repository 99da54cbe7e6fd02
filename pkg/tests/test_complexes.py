from __future__ import annotations

import importlib.resources

import numpy as np
import pytest

from gentlestrings.complexes import (
    ComplexError,
    apply_graded_automorphism,
    build_band_complex,
    build_string_complex,
    compose_path_maps,
    identity_path_map,
    invert_unitriangular,
    kernel_basis_by_formula,
    kernel_dimensions,
    kernel_parts,
    random_graded_automorphism,
)
from gentlestrings.fields import Subspace
from gentlestrings.presentation import GentlePresentation
from gentlestrings.words import Word, complete, iter_finite_letter_tuples

RUNNING = "[h^-1][g^-1][(ft)^-1][s^-1][r^-1][yf][x^-1]"
BAND = "inf([x][y^-1][g][z^-1])inf"


@pytest.fixture(scope="module")
def pres():
    text = importlib.resources.files("gentlestrings.data").joinpath("running.gentle").read_text()
    return GentlePresentation.from_text(text)


@pytest.fixture(scope="module")
def running(pres):
    return Word.parse(pres, RUNNING)


def path_of(pres, token):
    return pres.path(tuple(token))


# -- the running string complex --------------------------------------------------


def test_running_complex_shape(pres, running):
    cx = build_string_complex(running)
    assert cx.generator_profile() == {
        0: ["3"], 1: ["4"], 2: ["1"], 3: ["2"],
        4: ["0", "5"], 5: ["0", "3"],
    }
    assert cx.dimension_in_degree(4) == len(pres.projective_basis("5")) + 8
    assert cx.is_minimal()
    cx.check_d_squared()


def test_running_complex_edges(pres, running):
    cx = build_string_complex(running)
    pos = {lab[1]: g for g, lab in enumerate(cx.labels)}
    got = {}
    for (h, g), cell in cx.diff.items():
        (p, c), = cell.items()
        assert c == 1
        got[(cx.labels[g][1], cx.labels[h][1])] = "".join(p.arrows)
    # inverse letters point the edge rightward, direct ones leftward
    assert got == {
        (0, 1): "h", (1, 2): "g", (2, 3): "ft", (3, 4): "s",
        (4, 5): "r", (6, 5): "yf", (6, 7): "x",
    }
    assert cx.gens[pos[6]] == ("0", 4)


def test_running_complex_matrix_ranks(pres, running):
    cx = build_string_complex(running)
    f = pres.field
    for n in range(0, 5):
        a = cx.to_matrix(n)
        b = cx.to_matrix(n + 1)
        prod = f.matmul(b, a)
        assert not np.any(prod != 0)
    # d^5 lands in degree 6 = 0
    assert cx.to_matrix(5).shape[0] == 0


# -- kernel formula ---------------------------------------------------------------


def test_kernel_parts_cases(pres, running):
    parts = kernel_parts(running)
    assert parts[0] == ("d", ("arrow", "f"))
    assert parts[1] == ("b", ("arrow", "h"))
    assert parts[2] == ("b", ("arrow", "g"))
    assert parts[3] == ("b", ("arrow", "t"))
    assert parts[4] == ("b", ("arrow", "s"))
    assert parts[5] == ("a", ("full",))
    assert parts[6] == ("f", ("zero",))
    assert parts[7] == ("a", ("full",))


def test_kernel_dimensions_frozen(pres, running):
    assert kernel_dimensions(running) == {0: 6, 1: 2, 2: 1, 3: 7, 4: 1, 5: 16}


def test_kernel_formula_matches_nullspace_on_running_word(pres, running):
    cx = build_string_complex(running)
    rows = kernel_basis_by_formula(cx, running)
    for n in cx.degrees():
        dim = cx.dimension_in_degree(n)
        predicted = Subspace(pres.field, dim, rows[n])
        actual = Subspace(pres.field, dim, cx.nullspace(n))
        assert predicted == actual, n


def test_kernel_formula_matches_nullspace_short_words(pres):
    checked = 0
    for letters, _ in iter_finite_letter_tuples(pres, 2):
        w = Word.finite(pres, letters)
        cx = build_string_complex(w)
        rows = kernel_basis_by_formula(cx, w)
        for n in cx.degrees():
            dim = cx.dimension_in_degree(n)
            assert Subspace(pres.field, dim, rows[n]) == \
                Subspace(pres.field, dim, cx.nullspace(n))
        checked += 1
    assert checked == 60 + 252


def test_trivial_word_complex(pres):
    w = Word.trivial(pres, "3", 1)
    cx = build_string_complex(w)
    assert cx.generator_profile() == {0: ["3"]}
    assert not cx.diff
    assert kernel_parts(w) == {0: ("a", ("full",))}


# -- shifts and sums --------------------------------------------------------------


def test_shift_degrees_and_signs(pres, running):
    cx = build_string_complex(running)
    sh = cx.shift(1)
    assert sh.generator_profile() == {n - 1: vs for n, vs in cx.generator_profile().items()}
    for key, cell in cx.diff.items():
        for path, c in cell.items():
            assert sh.diff[key][path] == pres.field.scalar(-c)
    assert cx.shift(2).diff == cx.diff
    sh.check_d_squared()


def test_shifted_complex_matches_inverse_word_profile(pres, running):
    m = running.length
    shifted = build_string_complex(running).shift(running.mu(m))
    inv = build_string_complex(running.invert())
    assert shifted.generator_profile() == inv.generator_profile()


def test_direct_sum_block_structure(pres, running):
    a = build_string_complex(running)
    b = build_string_complex(Word.trivial(pres, "0", 1))
    s = a.direct_sum(b)
    prof = s.generator_profile()
    assert prof[0] == ["0", "3"]
    assert s.rank(0) == a.rank(0)
    assert len(s.gens) == len(a.gens) + 1


# -- band complexes ---------------------------------------------------------------


def test_band_complex_figure(pres):
    w = Word.parse(pres, BAND)
    f = pres.field
    eta = f.scalar(5)
    twist = f.asarray([[eta, 1], [0, eta]])
    cx = build_band_complex(w, twist)
    assert cx.generator_profile() == {-1: ["0", "0", "4", "4"], 0: ["0", "0", "1", "1"]}
    by_pos = {}
    for (h, g), cell in cx.diff.items():
        hp, hj = cx.labels[h][1], cx.labels[h][2]
        gp, gj = cx.labels[g][1], cx.labels[g][2]
        for path, c in cell.items():
            by_pos.setdefault((gp, hp, "".join(path.arrows)), {})[(hj, gj)] = c
    # plain edges carry identity blocks
    assert by_pos[(1, 0, "x")] == {(0, 0): 1, (1, 1): 1}
    assert by_pos[(1, 2, "y")] == {(0, 0): 1, (1, 1): 1}
    assert by_pos[(3, 2, "g")] == {(0, 0): 1, (1, 1): 1}
    # the seam edge carries the inverse twist
    tinv = f.inverse(twist)
    seam = by_pos[(3, 0, "z")]
    for (k, j), c in seam.items():
        assert c == tinv[k, j]
    assert set(seam) == {(0, 0), (0, 1), (1, 1)}
    # positions 0 and 2 are cycles
    sources = {cx.labels[g][1] for (_h, g) in cx.diff}
    assert sources == {1, 3}


def test_band_complex_rejects_unbalanced_period(pres):
    w = Word.periodic(pres, (Word.parse(pres, "[x][x]").core[0],))
    assert w.is_periodic() and w.mu(w.period) == -1
    with pytest.raises(ComplexError):
        build_band_complex(w, pres.field.asarray([[1]]))


def test_band_complex_rejects_singular_twist(pres):
    w = Word.parse(pres, BAND)
    with pytest.raises(ComplexError):
        build_band_complex(w, pres.field.asarray([[1, 0], [0, 0]]))


def test_band_complex_rejects_string_word(pres, running):
    with pytest.raises(ComplexError):
        build_band_complex(running, pres.field.asarray([[1]]))


# -- windowed complexes for infinite words ------------------------------------------


def test_windowed_complex_of_completion(pres, running):
    comp = complete(running, left="direct", right="inverse")
    w = comp.word
    assert w.kind == "two_sided" and not w.is_periodic()
    cx = build_string_complex(w, window=(0, 8))
    assert cx.window == (0, 8)
    for v, n in cx.gens:
        assert 0 <= n <= 8
    assert cx.is_minimal()
    cx.check_d_squared()
    # the finite heart of the word is still visible: degree-0 generator at 3
    assert "3" in cx.generator_profile()[0]
    with pytest.raises(ComplexError):
        build_string_complex(w)


# -- graded automorphisms -----------------------------------------------------------


def test_invert_unitriangular_roundtrip(pres, running):
    cx = build_string_complex(running)
    rng = np.random.default_rng(7)
    autos = random_graded_automorphism(cx, rng)
    for n, u in autos.items():
        idx = cx.gens_in_degree(n)
        inv = invert_unitriangular(pres, pres.field, cx.gens, idx, u)
        ident = identity_path_map(pres, pres.field, cx.gens, idx)
        assert compose_path_maps(pres, pres.field, u, inv) == ident
        assert compose_path_maps(pres, pres.field, inv, u) == ident


def test_conjugated_complex_keeps_profile_and_ranks(pres, running):
    cx = build_string_complex(running)
    rng = np.random.default_rng(11)
    twisted = apply_graded_automorphism(cx, random_graded_automorphism(cx, rng))
    twisted.check_d_squared()
    assert twisted.is_minimal()
    assert twisted.generator_profile() == cx.generator_profile()
    for n in cx.degrees():
        assert twisted.rank(n) == cx.rank(n)
