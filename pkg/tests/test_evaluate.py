from __future__ import annotations

import importlib.resources
import random

import numpy as np
import pytest

from gentlestrings.complexes import (
    ProjComplex,
    build_band_complex,
    build_string_complex,
)
from gentlestrings.evaluate import EvalError, Evaluator, compact_morphism
from gentlestrings.fields import Subspace
from gentlestrings.presentation import GentlePresentation
from gentlestrings.relations import (
    LinearRelation,
    inverse_invariants,
    module_invariants,
    split_relation,
)
from gentlestrings.words import (
    Letter,
    Word,
    complete,
    iter_finite_letter_tuples,
)

RUNNING = "[h^-1][g^-1][(ft)^-1][s^-1][r^-1][yf][x^-1]"
BAND = "inf([x][y^-1][g][z^-1])inf"


@pytest.fixture(scope="module")
def pres():
    text = importlib.resources.files("gentlestrings.data").joinpath("running.gentle").read_text()
    return GentlePresentation.from_text(text)


@pytest.fixture(scope="module")
def running(pres):
    return Word.parse(pres, RUNNING)


@pytest.fixture(scope="module")
def word_pool(pres):
    return [Word.finite(pres, letters)
            for letters, _ in iter_finite_letter_tuples(pres, 3)]


def random_module(pres, pool, rng, parts=2, max_shift=2):
    cx = None
    for _ in range(parts):
        w = pool[rng.randrange(len(pool))]
        part = build_string_complex(w).shift(rng.randrange(-max_shift, max_shift + 1))
        cx = part if cx is None else cx.direct_sum(part)
    return cx


def block_sum(f, a, b):
    mat = f.zeros(a.dim + b.dim, a.dim_ambient + b.dim_ambient)
    mat[:a.dim, :a.dim_ambient] = a.basis
    mat[a.dim:, a.dim_ambient:] = b.basis
    return Subspace(f, a.dim_ambient + b.dim_ambient, mat)


def unit_vector(f, n, j):
    v = f.zeros(1, n).reshape(-1)
    v[j] = 1
    return v


# -- independent oracle: one block linear solve per word -------------------------
#
# The fold computes CM letter by letter.  The oracle instead writes down the
# whole membership schema at once -- one unknown per word position, one
# equation per letter -- and projects the nullspace onto the position-0 block.
# Its matrices are assembled from the module's raw differential (to_matrix)
# and one-arrow multiplications only.


def _o_point(module, n, v):
    return [i for i, (_, q) in enumerate(module.basis_index(n)) if q.head == v]


def _o_dmat(module, n, a):
    f = module.field
    tgt = module.basis_index(n + 1)
    full = module.to_matrix(n)
    filt = f.zeros(*full.shape)
    for i, (_, q) in enumerate(tgt):
        if not q.is_trivial and q.last_arrow == a:
            filt[i, :] = full[i, :]
    v = module.pres.arrows[a].head
    rows = _o_point(module, n + 1, v)
    cols = _o_point(module, n, v)
    return filt[np.ix_(rows, cols)]


def _o_arrow_mult(module, n, a):
    f = module.field
    basis = module.basis_index(n)
    pos = {key: i for i, key in enumerate(basis)}
    ap = module.pres.path((a,))
    mat = f.zeros(len(basis), len(basis))
    for j, (g, q) in enumerate(basis):
        p = module.pres.multiply(ap, q)
        if p is not None:
            mat[pos[(g, p)], j] = 1
    return mat


def _o_path_mult(module, n, path):
    f = module.field
    total = f.eye(len(module.basis_index(n)))
    for a in reversed(path.arrows):  # first arrow of the path acts first
        total = f.reduce(_o_arrow_mult(module, n, a) @ total)
    rows = _o_point(module, n, path.head)
    cols = _o_point(module, n, path.tail)
    return total[np.ix_(rows, cols)]


def oracle_membership(module, word, n):
    """e_vM^n ∩ CM as the x_0 block of one homogeneous system."""
    f = module.field
    m = word.length if word.kind == "finite" else 0
    offs, dims, total = [], [], 0
    for i in range(m + 1):
        d = len(_o_point(module, n + word.mu(i), word.vertex_at(i)))
        offs.append(total)
        dims.append(d)
        total += d
    rows = []
    for i in range(1, m + 1):
        l = word.letter_at(i)
        a = l.path.last_arrow
        k_left = n + word.mu(i - 1)
        k_right = n + word.mu(i)
        if l.inverse:
            dm = _o_dmat(module, k_left, a)
            pm = _o_path_mult(module, k_right, l.path)
        else:
            pm = _o_path_mult(module, k_left, l.path)
            dm = _o_dmat(module, k_right, a)
        blk = f.zeros(dm.shape[0], total)
        if l.inverse:
            blk[:, offs[i - 1]:offs[i - 1] + dims[i - 1]] = dm
            blk[:, offs[i]:offs[i] + dims[i]] = f.reduce(-pm)
        else:
            blk[:, offs[i - 1]:offs[i - 1] + dims[i - 1]] = pm
            blk[:, offs[i]:offs[i] + dims[i]] = f.reduce(-dm)
        rows.append(blk)
    system = np.concatenate(rows) if rows else f.zeros(0, total)
    null = f.nullspace(system)
    return Subspace(f, dims[0], null[:, :dims[0]])


def test_block_solve_oracle_running(pres, running):
    for mod in (build_string_complex(running),
                build_string_complex(Word.parse(pres, "[h^-1][g^-1]")).direct_sum(
                    build_string_complex(Word.parse(pres, "[yf][x^-1]")).shift(1))):
        ev = Evaluator(mod)
        for n in (-1, 0, 1):
            assert ev.evaluate_word(running, n) == oracle_membership(mod, running, n)


def test_block_solve_oracle_random(pres, word_pool):
    rng = random.Random(20210)
    for _ in range(36):
        mod = random_module(pres, word_pool, rng)
        w = word_pool[rng.randrange(len(word_pool))]
        n = rng.randrange(-2, 3)
        ev = Evaluator(mod)
        assert ev.evaluate_word(w, n) == oracle_membership(mod, w, n)


# -- the arrow components of the differential -------------------------------------


def test_d_alpha_zero_differential(pres):
    mod = ProjComplex(pres, [("0", 0), ("3", 0), ("4", 1)], {})
    ev = Evaluator(mod)
    for a in pres.arrows:
        for n in (-1, 0, 1):
            assert not ev.d_matrix(n, a).any()


def test_d_alpha_sums_to_differential(pres, word_pool):
    # two routes to d restricted to a point: sum the arrow components, or
    # slice the raw to_matrix
    rng = random.Random(7)
    for _ in range(12):
        mod = random_module(pres, word_pool, rng)
        ev = Evaluator(mod)
        for n in mod.degrees():
            full = mod.to_matrix(n)
            for v in pres.vertices:
                rows = [i for i, (_, q) in enumerate(mod.basis_index(n + 1))
                        if q.head == v]
                cols = _o_point(mod, n, v)
                direct = full[np.ix_(rows, cols)]
                total = ev.dv_matrix(n, v)
                assert (total == direct).all()
                summed = ev.field.zeros(*total.shape)
                for a in pres.incoming(v):
                    summed = ev.field.reduce(summed + ev.d_matrix(n, a))
                assert (summed == total).all()
                for a in pres.incoming(v):
                    assert (ev.d_matrix(n, a) == _o_dmat(mod, n, a)).all()


def test_d_alpha_left_multiplication_rules(pres, word_pool):
    # multiplication by an arrow τ interacts with the components: d_{l(τ)}(τx)
    # is τ·d_σ(x) for the unique σ with τσ a path (and zero when no σ exists),
    # while every other component kills τx
    rng = random.Random(99)
    mod = random_module(pres, word_pool, rng, parts=3)
    ev = Evaluator(mod)
    f = ev.field
    for name, tau in pres.arrows.items():
        tp = pres.path((name,))
        sigmas = [c for c in pres.incoming(tau.tail)
                  if pres.multiply(tp, pres.path((c,))) is not None]
        assert len(sigmas) <= 1
        for n in mod.degrees():
            lhs = f.reduce(ev.d_matrix(n, name) @ ev.mult_matrix(n, tp))
            if sigmas:
                rhs = f.reduce(ev.mult_matrix(n + 1, tp) @ ev.d_matrix(n, sigmas[0]))
                assert (lhs == rhs).all()
            else:
                assert not lhs.any()
            for other in pres.incoming(tau.head):
                if other != name:
                    assert not f.reduce(
                        ev.d_matrix(n, other) @ ev.mult_matrix(n, tp)).any()


def test_d_alpha_composites_vanish(pres, word_pool):
    # d_φ ∘ d_ψ = 0 for any two components at the same vertex
    rng = random.Random(4242)
    for _ in range(100):
        mod = random_module(pres, word_pool, rng, parts=rng.randrange(1, 3))
        ev = Evaluator(mod)
        n = rng.choice(mod.degrees())
        for v in pres.vertices:
            for phi in pres.incoming(v):
                for psi in pres.incoming(v):
                    prod = ev.field.reduce(
                        ev.d_matrix(n + 1, phi) @ ev.d_matrix(n, psi))
                    assert not prod.any()


def test_d_alpha_preimage_kernel_rule(pres, word_pool):
    # if τx lands in the image of d_{l(τ)}, then d_ς kills x for any arrow ς
    # continuing τ to a path τς
    rng = random.Random(31)
    mod = random_module(pres, word_pool, rng, parts=3)
    ev = Evaluator(mod)
    taus = [p for p in pres.enumerate_paths() if 1 <= len(p) <= 2]
    for tau in taus:
        for name in pres.incoming(tau.tail):
            if pres.multiply(tau, pres.path((name,))) is None:
                continue
            for n in mod.degrees():
                dmat = ev.d_matrix(n, tau.last_arrow)
                image = ev.point_full(n, tau.head).image(dmat)
                pre = image.preimage(ev.mult_matrix(n + 1, tau))
                ker = Subspace(ev.field, pre.dim_ambient,
                               ev.field.nullspace(ev.d_matrix(n + 1, name)))
                assert ker.contains(pre)


def test_letter_apply(pres, running):
    mod = build_string_complex(running)
    ev = Evaluator(mod)
    f = ev.field
    # a direct letter [h] pulls the d_h-image back along multiplication by h
    beta = Letter(pres.path(("h",)), False)
    full = ev.point_full(1, "3")
    sp, state = ev.letter_apply(beta, full, 1)
    assert state == ("4", 2)
    assert sp == full.image(ev.d_matrix(1, "h")).preimage(
        ev.mult_matrix(2, pres.path(("h",))))
    # an inverted single arrow on the zero space downstairs is the kernel of d
    inv = Letter(pres.path(("h",)), True)
    sp, state = ev.letter_apply(inv, ev.point_zero(1, "4"), 1)
    assert state == ("3", 0)
    assert sp == Subspace(f, ev.point_dim(0, "3"),
                          f.nullspace(ev.d_matrix(0, "h")))
    with pytest.raises(EvalError):
        ev.letter_apply(beta, ev.point_full(0, "3"), 1)


# -- the word fold -----------------------------------------------------------------


def test_trivial_word_passes_far_space_through(pres, running):
    mod = build_string_complex(running)
    ev = Evaluator(mod)
    one = Word.trivial(pres, "3", 1)
    assert ev.evaluate_word(one, 0) == ev.point_full(0, "3")
    rad = ev.rad_point(0, "3")
    assert ev.evaluate_word(one, 0, far=rad) == rad
    with pytest.raises(EvalError):
        ev.evaluate_word(one, 0, far=ev.point_full(1, "4"))


def test_evaluate_word_rejects_one_sided_words(pres, running):
    ev = Evaluator(build_string_complex(running))
    x = Word.right_infinite(pres, (), (Letter(pres.path(("x",)), True),))
    with pytest.raises(EvalError):
        ev.evaluate_word(x, 0)


def test_graded_ungraded_compatibility(pres, word_pool):
    # slicing the ungraded fold at the head degree equals the graded fold
    rng = random.Random(808)
    for _ in range(100):
        mod = random_module(pres, word_pool, rng)
        ev = Evaluator(mod)
        w = word_pool[rng.randrange(len(word_pool))]
        n = rng.randrange(-2, 3)
        u = w.vertex_at(w.length)
        whole = ev.evaluate_word_ungraded(
            w, Subspace.full(ev.field, ev.u_dim(u)))
        assert ev.u_slice(whole, n, w.head()) == ev.evaluate_word(w, n)


def test_completed_word_contains_anchor_generator(pres, running):
    # the class of the anchor generator of P(C(↙↘)) is a member of C·P
    info = complete(running, "direct", "inverse")
    t = info.word.mu(info.anchor)
    mod = build_string_complex(info.word, window=(t - 9, t + 9)).shift(t)
    ev = Evaluator(mod)
    g = mod.labels.index(("pos", info.anchor))
    tp = pres.trivial_path("3")
    basis = mod.basis_index(0)
    idx = ev.point_index(0, "3")
    local = idx.index(basis.index((g, tp)))
    vec = unit_vector(ev.field, len(idx), local)
    assert ev.evaluate_word(running, 0).contains_vector(vec)


# -- one-sided functors ---------------------------------------------------------


def test_one_sided_containment_chain(pres, word_pool):
    rng = random.Random(555)
    for _ in range(25):
        mod = random_module(pres, word_pool, rng)
        ev = Evaluator(mod)
        w = word_pool[rng.randrange(len(word_pool))]
        n = rng.randrange(-1, 2)
        oss = ev.one_sided_spaces(w, n)
        cm = ev.evaluate_word(w, n)
        assert oss.plus.contains(oss.minus)
        assert cm.contains(oss.plus)


def test_one_sided_zero_module(pres, running):
    ev = Evaluator(ProjComplex(pres, [], {}))
    oss = ev.one_sided_spaces(running, 0)
    assert oss.plus.dim == 0 and oss.minus.dim == 0
    assert ev.evaluate_word(running, 0).dim == 0
    band = Word.parse(pres, BAND)
    rel = ev.periodic_relation(band, 0)
    assert rel.relation.sharp().dim == 0
    assert rel.relation.flat().dim == 0


def test_one_sided_rejects_left_infinite(pres, running):
    ev = Evaluator(build_string_complex(running))
    left = Word.left_infinite(pres, (Letter(pres.path(("x",)), False),), ())
    with pytest.raises(EvalError, match="invert"):
        ev.one_sided_spaces(left, 0)
    band = Word.parse(pres, BAND)
    with pytest.raises(EvalError):
        ev.one_sided_spaces(band, 0)


def test_one_sided_direct_sum_additivity(pres, word_pool, running):
    rng = random.Random(23)
    f = pres.field
    for _ in range(6):
        m1 = random_module(pres, word_pool, rng)
        m2 = random_module(pres, word_pool, rng)
        both = m1.direct_sum(m2)
        e1, e2, es = Evaluator(m1), Evaluator(m2), Evaluator(both)
        w = word_pool[rng.randrange(len(word_pool))]
        n = rng.randrange(-1, 2)
        assert es.evaluate_word(w, n) == block_sum(
            f, e1.evaluate_word(w, n), e2.evaluate_word(w, n))
        o1, o2, os_ = e1.one_sided_spaces(w, n), e2.one_sided_spaces(w, n), \
            es.one_sided_spaces(w, n)
        assert os_.plus == block_sum(f, o1.plus, o2.plus)
        assert os_.minus == block_sum(f, o1.minus, o2.minus)


def _prefix_word(pres, word, l):
    if l == 0:
        return Word.trivial(pres, *word.left_state())
    return Word.finite(pres, tuple(word.letter_at(i) for i in range(1, l + 1)))


def _stabilised_chain(values):
    prev = None
    for cur in values:
        if prev is not None and cur == prev:
            return cur
        prev = cur
    raise AssertionError("chain did not stabilise in the sampled range")


def test_nword_spaces_equal_stabilised_prefixes(pres, word_pool, running):
    # dual route for N-words: the fixed-point tail must agree with brute
    # stabilisation of longer and longer finite prefixes
    band = Word.parse(pres, BAND)
    block = tuple(band.letter_at(i) for i in range(1, 5))
    xw = Word.right_infinite(pres, (), block)
    f = pres.field
    jordan = f.reduce(np.array([[7, 1], [0, 7]]))
    rng = random.Random(61)
    modules = [build_band_complex(band, jordan),
               random_module(pres, word_pool, rng, parts=3)]
    tail_x = Word.right_infinite(
        pres, tuple(running.letter_at(i) for i in range(1, 8)),
        (Letter(pres.path(("x",)), True),))
    for mod in modules:
        ev = Evaluator(mod)
        for w, n in ((xw, 0), (xw, -1), (tail_x, 0)):
            oss = ev.one_sided_spaces(w, n)
            assert oss.plus_steps is not None and oss.plus_steps >= 0
            assert oss.minus_steps is not None and oss.minus_steps >= 0

            def plus_at(l):
                return ev.evaluate_word(_prefix_word(pres, w, l), n)

            def minus_at(l):
                pref = _prefix_word(pres, w, l)
                m = pref.length if pref.kind == "finite" else 0
                far = ev.point_zero(n + pref.mu(m), pref.vertex_at(m))
                return ev.evaluate_word(pref, n, far=far)

            assert oss.plus == _stabilised_chain(
                plus_at(l) for l in range(0, 41, 4))
            assert oss.minus == _stabilised_chain(
                minus_at(l) for l in range(0, 41, 4))


# -- refined pairs ---------------------------------------------------------------


def _axis_pair(pres, word, a):
    m = word.length
    v0, s0 = word.left_state()
    vm, sm = word.right_state()
    if a == 0:
        prefix = Word.trivial(pres, v0, s0)
    else:
        prefix = Word.finite(pres, tuple(word.letter_at(i) for i in range(1, a + 1)))
    if a == m:
        suffix = Word.trivial(pres, vm, -sm)
    else:
        suffix = Word.finite(pres, tuple(word.letter_at(i)
                                         for i in range(a + 1, m + 1)))
    return prefix.invert(), suffix


def test_axis_pair_helper_splits_the_word(pres, running):
    for a in (1, 4, 6):
        b, d = _axis_pair(pres, running, a)
        back = b.invert().compose(d)
        assert back is not None and back.serialize() == running.serialize()


def test_refined_nesting_and_dims(pres, word_pool, running):
    rng = random.Random(404)
    for _ in range(12):
        mod = random_module(pres, word_pool, rng)
        ev = Evaluator(mod)
        w = word_pool[rng.randrange(len(word_pool))]
        a = rng.randrange(0, w.length + 1)
        b, d = _axis_pair(pres, w, a)
        n = rng.randrange(-1, 2)
        rs = ev.refined_spaces(b, d, n)
        assert rs.f_plus.contains(rs.f_minus)
        assert rs.g_plus.contains(rs.g_minus)
        assert rs.f_dim >= 0 and rs.g_dim >= 0


def test_refined_requires_compatible_pair(pres, running):
    ev = Evaluator(build_string_complex(running))
    b, d = _axis_pair(pres, running, 3)
    with pytest.raises(EvalError):
        ev.refined_spaces(d, d, 0)  # same head sign
    other = Word.trivial(pres, "0", 1)
    with pytest.raises(EvalError):
        ev.refined_spaces(other, d, 0)  # different head vertex


def test_string_axis_detection(pres, running):
    # each axis of the word detects exactly one copy of its own complex,
    # and only in the right degree
    mod = build_string_complex(running)
    ev = Evaluator(mod)
    for a in range(running.length + 1):
        b, d = _axis_pair(pres, running, a)
        n = running.mu(a)
        assert ev.refined_spaces(b, d, n).f_dim == 1
        assert ev.refined_spaces(b, d, n + 1).f_dim == 0
        assert ev.refined_spaces(b, d, n - 3).f_dim == 0
    # a different module knows nothing about these axes
    other = Evaluator(build_string_complex(Word.parse(pres, "[h^-1][g^-1]")))
    b, d = _axis_pair(pres, running, 0)
    assert other.refined_spaces(b, d, 0).f_dim == 0


def test_refined_direct_sum_additivity(pres, word_pool, running):
    rng = random.Random(12)
    f = pres.field
    m1 = build_string_complex(running)
    m2 = random_module(pres, word_pool, rng)
    es = Evaluator(m1.direct_sum(m2))
    e1, e2 = Evaluator(m1), Evaluator(m2)
    for a in (0, 3, 7):
        b, d = _axis_pair(pres, running, a)
        n = running.mu(a)
        r1, r2, rs = (e.refined_spaces(b, d, n) for e in (e1, e2, es))
        assert rs.f_dim == r1.f_dim + r2.f_dim
        assert rs.g_dim == r1.g_dim + r2.g_dim
        assert rs.f_plus == block_sum(f, r1.f_plus, r2.f_plus)
        assert rs.f_minus == block_sum(f, r1.f_minus, r2.f_minus)


# -- periodic pairs and band modules ------------------------------------------------


def _band_pair(pres):
    band = Word.parse(pres, BAND)
    dblock = tuple(band.letter_at(i) for i in range(1, 5))
    bblock = tuple(band.letter_at(-i).flip() for i in range(0, 4))
    bw = Word.right_infinite(pres, (), bblock)
    dw = Word.right_infinite(pres, (), dblock)
    return band, bw, dw


def test_band_relation_recovers_twist(pres):
    f = pres.field
    band, bw, dw = _band_pair(pres)
    jordan = f.reduce(np.array([[7, 1], [0, 7]]))
    mod = build_band_complex(band, jordan)
    ev = Evaluator(mod)
    rs = ev.refined_spaces(bw, dw, 0)
    assert rs.periodic
    assert rs.f_dim == 2
    assert rs.relation.relation.sharp().dim == 8
    assert rs.relation.relation.flat().dim == 6
    assert rs.invariants == module_invariants(f, jordan)
    assert rs.invariants == (((94, 1), 2),)
    # at a degree where the point is empty everything collapses
    assert ev.refined_spaces(bw, dw, 1).f_dim == 0
    # a string module contains no band copies
    run = Evaluator(build_string_complex(Word.parse(pres, RUNNING)))
    assert run.refined_spaces(bw, dw, 0).f_dim == 0


def test_band_relation_swapped_pair_inverts(pres):
    f = pres.field
    band, bw, dw = _band_pair(pres)
    jordan = f.reduce(np.array([[7, 1], [0, 7]]))
    ev = Evaluator(build_band_complex(band, jordan))
    swapped = ev.refined_spaces(dw, bw, 0)
    assert swapped.periodic
    assert swapped.invariants == inverse_invariants(f, module_invariants(f, jordan))
    assert swapped.invariants == (((72, 1), 2),)


def test_periodic_relation_validates_drift(pres):
    ev = Evaluator(build_string_complex(Word.parse(pres, RUNNING)))
    unbalanced = (Letter(pres.path(("x",)), True),)
    with pytest.raises(EvalError, match="drift"):
        ev.periodic_relation(unbalanced, 0)


def test_graph_relation_of_automorphism(pres):
    f = pres.field
    rng = np.random.default_rng(5)
    while True:
        t = f.reduce(rng.integers(0, 101, size=(3, 3)))
        if f.rank(t) == 3:
            break
    rows = np.concatenate([f.eye(3), t.T], axis=1)
    rel = LinearRelation.from_rows(f, 3, rows)
    assert rel.sharp() == Subspace.full(f, 3)
    assert rel.flat() == Subspace.zero(f, 3)
    induced = split_relation(rel).matrix
    assert module_invariants(f, induced) == module_invariants(f, t)


# -- chain maps, the image lemma, compact morphisms -----------------------------------


def test_chain_map_space_contains_identity(pres, running):
    mod = build_string_complex(running)
    ev = Evaluator(mod)
    cms = ev.chain_map_space(mod)
    for g, (v, n) in enumerate(mod.gens):
        tp = pres.trivial_path(v)
        idx = ev.point_index(n, v)
        local = idx.index(mod.basis_index(n).index((g, tp)))
        vec = unit_vector(ev.field, len(idx), local)
        assert cms.generator_image(g).contains_vector(vec)


def test_pp_image_trivial_word(pres, running):
    ev = Evaluator(build_string_complex(running))
    rep = ev.pp_image_check(Word.trivial(pres, "3", 1), 0)
    assert rep.agree
    assert rep.image == ev.point_full(0, "3")


def test_pp_image_matches_fold(pres, word_pool):
    rng = random.Random(77)
    short = [w for w in word_pool if w.length <= 2]
    for _ in range(10):
        mod = random_module(pres, word_pool, rng)
        ev = Evaluator(mod)
        w = short[rng.randrange(len(short))]
        rep = ev.pp_image_check(w, rng.randrange(-1, 2))
        assert rep.agree
        assert list(rep.prefix_dims) == sorted(rep.prefix_dims, reverse=True)


def test_compact_morphism_case_split(pres, running):
    # all-inverse single arrows: the two completions coincide
    one = compact_morphism(Word.parse(pres, "[h^-1]"))
    assert one.case == 1
    # E and W are the same word; their serializations only differ in how the
    # core/tail split is drawn, so compare letters at aligned positions
    for j in range(-8, 9):
        assert one.source_word.letter_at(one.source_info.anchor + j) == \
            one.target_word.letter_at(one.target_info.anchor + j)
    # a direct letter after the shared run just cuts the map off
    two = compact_morphism(Word.parse(pres, "[r^-1][yf]"))
    assert two.case == 2 and two.q == 1
    # the running word inverts a longer path: the seam picks up its inner part
    three = compact_morphism(running)
    assert three.case == 3 and three.q == 2
    assert three.lam == pres.path(("t",))
    assert three.target_info.anchor == -7
    assert three.source_info.anchor == 0
    assert three.target_word.serialize() == \
        "inf([r][s][t])[h^-1][g^-1][(ft)^-1][s^-1][r^-1][yf][x^-1]:([x^-1])inf"
    assert three.source_word.serialize() == "inf([r][s][t]):([h^-1][g^-1][f^-1])inf"


def test_compact_morphism_staircase(pres, running):
    cm = compact_morphism(running)
    src, tgt, amap = cm.verify()
    by_offset = {}
    for (gt, gs), cell in amap.items():
        s = src.labels[gs][1] - cm.source_info.anchor
        t = tgt.labels[gt][1] - cm.target_info.anchor
        assert s == t
        by_offset[s] = cell
    for s, cell in by_offset.items():
        if s <= 2:
            (p, c), = cell.items()
            assert p.is_trivial and c == 1
        else:
            assert s == 3
            assert cell == {pres.path(("t",)): pres.field.scalar(1)}
    assert min(by_offset) == -6 and max(by_offset) == 3


def _regrade(cx, t):
    """Relabel degrees without touching the differential (no sign flip)."""
    return ProjComplex(cx.pres, [(v, n - t) for v, n in cx.gens], cx.diff,
                       labels=list(cx.labels))


def _aligned_morphism(word, radius):
    cm = compact_morphism(word)
    src, tgt, amap = cm.materialize(radius=radius)
    t = cm.target_info.word.mu(cm.target_info.anchor)
    return cm, src, _regrade(tgt, t), amap


def test_compact_morphism_prefix_factorisation(pres, running):
    # along the prefixes of an N-word, each compact morphism factors through
    # the previous one; the factor is found by an honest chain-map solve
    tail = Word.right_infinite(
        pres, tuple(running.letter_at(i) for i in range(1, 8)),
        (Letter(pres.path(("x",)), True),))
    f = pres.field
    for l in (1, 2, 3, 5, 7):
        cm_a, src_a, tgt_a, amap_a = _aligned_morphism(
            _prefix_word(pres, tail, l), 9)
        cm_b, src_b, tgt_b, amap_b = _aligned_morphism(
            _prefix_word(pres, tail, l + 1), 9)
        assert src_a.labels == src_b.labels  # same completed trivial word
        ev = Evaluator(tgt_b)
        cms = ev.chain_map_space(tgt_a)
        by_source_a = {gs: (gt, cell) for (gt, gs), cell in amap_a.items()}
        by_source_b = {gs: (gt, cell) for (gt, gs), cell in amap_b.items()}
        pins = {}
        for gs, (gt, cell) in by_source_a.items():
            v, n = tgt_a.gens[gt]
            idx = ev.point_index(n, v)
            vec = f.zeros(1, len(idx)).reshape(-1)
            if len(cell) == 1 and next(iter(cell)).is_trivial:
                if gs in by_source_b:
                    gt_b, cell_b = by_source_b[gs]
                    basis = tgt_b.basis_index(n)
                    for p, c in cell_b.items():
                        vec[idx.index(basis.index((gt_b, p)))] = c
                pins[gt] = vec
            else:
                # seam cell: both sides carry the same inner path, so the
                # factor can match the generators directly
                gt_b, cell_b = by_source_b[gs]
                assert cell_b == cell
                tp = pres.trivial_path(v)
                vec[idx.index(tgt_b.basis_index(n).index((gt_b, tp)))] = 1
                pins[gt] = vec
        assert pins
        assert cms.solve_with_values(pins) is not None


def test_pp_prefix_chain_descends(pres, running):
    mod = build_string_complex(running).direct_sum(
        build_string_complex(Word.parse(pres, "[t^-1][s^-1]")).shift(-1))
    ev = Evaluator(mod)
    rep = ev.pp_image_check(running, 0)
    assert rep.agree
    dims = rep.prefix_dims
    assert len(dims) == running.length + 1
    assert all(dims[i] >= dims[i + 1] for i in range(len(dims) - 1))
