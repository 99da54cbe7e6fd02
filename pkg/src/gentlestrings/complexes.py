"""Minimal complexes of projectives attached to words.

A complex is stored symbolically: generators (vertex, degree) plus a
differential whose (target, source) entries are formal sums of nonzero
paths.  Every entry path is nontrivial, so the complexes are minimal by
construction.  Numeric matrices over the coefficient field are realised on
demand in the path basis of each projective, which is what the nullspace
oracle and all rank computations use.

String complexes place one generator at every position of a word, with the
letter path as the connecting differential entry (direct letters point the
edge leftward, inverse letters rightward).  Band complexes take one period
of a periodic word, tensored with an invertible matrix T; the two edges
that cross the seam pick up T and T^{-1}.
"""

from __future__ import annotations

import numpy as np

from .presentation import Path
from .words import Word, WordError

__all__ = [
    "ProjComplex",
    "ComplexError",
    "build_string_complex",
    "build_band_complex",
    "kernel_parts",
    "kernel_dimensions",
    "compose_path_maps",
    "add_path_maps",
    "invert_unitriangular",
    "random_graded_automorphism",
    "apply_graded_automorphism",
    "companion_matrix",
]


class ComplexError(ValueError):
    pass


# -- path-matrix helpers ---------------------------------------------------------
#
# A "path map" between two generator lists is a dict (target, source) ->
# {Path: scalar}.  Composition follows module-map order: (A after B) means
# apply B first.


def _add_entry(table, key, path, coeff, field):
    cell = table.setdefault(key, {})
    c = cell.get(path)
    c = field.scalar(coeff) if c is None else field.scalar(c + coeff)
    if c == 0:
        cell.pop(path, None)
        if not cell:
            table.pop(key, None)
    else:
        cell[path] = c


def compose_path_maps(pres, field, a, b):
    """Entries of A∘B (apply B first): (k,g) = sum_h B[(h,g)] * A[(k,h)],
    multiplying the B coefficient path on the left of the A path."""
    out = {}
    by_source_a = {}
    for (k, h), cell in a.items():
        by_source_a.setdefault(h, []).append((k, cell))
    for (h, g), bcell in b.items():
        for k, acell in by_source_a.get(h, []):
            for pb, cb in bcell.items():
                for pa, ca in acell.items():
                    prod = pres.multiply(pb, pa)
                    if prod is not None:
                        _add_entry(out, (k, g), prod, cb * ca, field)
    return out


def add_path_maps(field, a, b, scale=1):
    out = {k: dict(v) for k, v in a.items()}
    for key, cell in b.items():
        for path, coeff in cell.items():
            _add_entry(out, key, path, coeff * scale, field)
    return out


def identity_path_map(pres, field, gens, indices):
    out = {}
    for g in indices:
        v = gens[g][0]
        out[(g, g)] = {pres.trivial_path(v): field.scalar(1)}
    return out


def invert_unitriangular(pres, field, gens, indices, u):
    """Invert a path map on one degree's generators whose trivial-path part
    is an invertible scalar matrix and whose remaining entries are
    nontrivial paths.  The radical part is nilpotent, so a Neumann series
    terminates."""
    pos = {g: a for a, g in enumerate(indices)}
    smat = field.zeros(len(indices), len(indices))
    nilpotent = {}
    for (k, g), cell in u.items():
        for path, c in cell.items():
            if path.is_trivial:
                smat[pos[k], pos[g]] = field.scalar(c)
            else:
                _add_entry(nilpotent, (k, g), path, c, field)
    sinv = field.inverse(smat)
    if sinv is None:
        raise ComplexError("graded map has a non-invertible scalar part")
    sinv_map = {}
    for a, k in enumerate(indices):
        for b, g in enumerate(indices):
            c = sinv[a, b]
            if c == 0:
                continue
            if gens[k][0] != gens[g][0]:
                raise ComplexError("scalar part mixes different vertices")
            _add_entry(sinv_map, (k, g), pres.trivial_path(gens[k][0]), c, field)
    # u = s ∘ (1 + s^-1 ∘ n)  =>  u^-1 = (sum_j (-s^-1 n)^j) ∘ s^-1
    k_map = compose_path_maps(pres, field, sinv_map, nilpotent)
    acc = identity_path_map(pres, field, gens, indices)
    term = identity_path_map(pres, field, gens, indices)
    sign = 1
    while k_map and term:
        term = compose_path_maps(pres, field, term, k_map)
        sign = -sign
        acc = add_path_maps(field, acc, term, scale=sign)
    inv = compose_path_maps(pres, field, acc, sinv_map)
    return inv


class ProjComplex:
    """A bounded minimal complex of finitely generated projectives.

    gens[i] = (vertex, degree); labels[i] is free-form provenance (string
    position, band (position, copy), summand tags...).  diff[(h, g)] maps
    Path -> scalar and represents d(b_g) ∋ sum c·path·b_h with the entry
    path running from vertex(h) to vertex(g); degree(h) == degree(g) + 1.
    """

    def __init__(self, pres, gens, diff, labels=None, window=None):
        self.pres = pres
        self.field = pres.field
        self.gens = list(gens)
        self.labels = list(labels) if labels is not None else [None] * len(self.gens)
        assert len(self.labels) == len(self.gens)
        self.diff = {}
        for (h, g), cell in diff.items():
            vh, nh = self.gens[h]
            vg, ng = self.gens[g]
            if nh != ng + 1:
                raise ComplexError("entry (%d, %d) does not raise degree by 1" % (h, g))
            clean = {}
            for path, coeff in cell.items():
                c = self.field.scalar(coeff)
                if c == 0:
                    continue
                if path.is_trivial:
                    raise ComplexError("trivial-path entry breaks minimality")
                if path.tail != vh or path.head != vg:
                    raise ComplexError("entry path %r does not run %s -> %s"
                                       % (path, vg, vh))
                clean[path] = c
            if clean:
                self.diff[(h, g)] = clean
        self.window = window
        self._basis_cache = {}

    # -- shape -----------------------------------------------------------------

    def degrees(self):
        return sorted({n for _, n in self.gens})

    def gens_in_degree(self, n):
        return [i for i, (_, d) in enumerate(self.gens) if d == n]

    def generator_profile(self):
        """Canonical graded shape: degree -> sorted vertex list."""
        out = {}
        for v, n in self.gens:
            out.setdefault(n, []).append(v)
        return {n: sorted(vs) for n, vs in out.items()}

    def dimension_in_degree(self, n):
        return sum(len(self.pres.projective_basis(v))
                   for v, d in self.gens if d == n)

    def is_zero(self):
        return not self.gens

    def is_minimal(self):
        return all(not p.is_trivial for cell in self.diff.values() for p in cell)

    # -- numeric realisation ------------------------------------------------------

    def basis_index(self, n):
        """Ordered basis [(gen, path)] of the degree-n term."""
        if n not in self._basis_cache:
            idx = []
            for g in self.gens_in_degree(n):
                v = self.gens[g][0]
                for q in self.pres.projective_basis(v):
                    idx.append((g, q))
            self._basis_cache[n] = idx
        return self._basis_cache[n]

    def to_matrix(self, n):
        """Matrix of d^n from degree n to degree n+1 in the path bases;
        shape (dim P^{n+1}, dim P^n)."""
        src = self.basis_index(n)
        tgt = self.basis_index(n + 1)
        pos = {key: i for i, key in enumerate(tgt)}
        f = self.field
        mat = f.zeros(len(tgt), len(src))
        by_source = {}
        for (h, g), cell in self.diff.items():
            if self.gens[h][1] == n + 1:
                by_source.setdefault(g, []).append((h, cell))
        for col, (g, q) in enumerate(src):
            for h, cell in by_source.get(g, ()):
                for path, coeff in cell.items():
                    prod = self.pres.multiply(q, path)
                    if prod is None:
                        continue
                    mat[pos[(h, prod)], col] = f.scalar(mat[pos[(h, prod)], col] + coeff)
        return mat

    def rank(self, n):
        return self.field.rank(self.to_matrix(n))

    def nullspace(self, n):
        """Right kernel of d^n as rows over basis_index(n)."""
        return self.field.nullspace(self.to_matrix(n))

    def check_d_squared(self):
        """Symbolic d∘d = 0; raises on failure."""
        sq = compose_path_maps(self.pres, self.field, self.diff, self.diff)
        if sq:
            key = next(iter(sq))
            raise ComplexError("d^2 != 0 at entry %r: %r" % (key, sq[key]))

    # -- constructions ------------------------------------------------------------

    def shift(self, t):
        """X[t] with X[t]^n = X^{n+t} and the differential rescaled by
        (-1)^t."""
        if t == 0:
            return self
        gens = [(v, n - t) for v, n in self.gens]
        sign = 1 if t % 2 == 0 else -1
        diff = {key: {p: self.field.scalar(c * sign) for p, c in cell.items()}
                for key, cell in self.diff.items()}
        return ProjComplex(self.pres, gens, diff, labels=list(self.labels),
                           window=None if self.window is None
                           else (self.window[0] - t, self.window[1] - t))

    def direct_sum(self, other):
        assert self.pres is other.pres
        off = len(self.gens)
        gens = self.gens + other.gens
        labels = self.labels + other.labels
        diff = dict(self.diff)
        for (h, g), cell in other.diff.items():
            diff[(h + off, g + off)] = dict(cell)
        return ProjComplex(self.pres, gens, diff, labels=labels)

    def relabel(self, tag):
        return ProjComplex(self.pres, self.gens, self.diff,
                           labels=[(tag, l) for l in self.labels],
                           window=self.window)

    def __repr__(self):
        prof = self.generator_profile()
        return "ProjComplex(%s)" % ", ".join(
            "P^%d=%s" % (n, "+".join("e_%s" % v for v in prof[n])) for n in sorted(prof))


# -- string complexes ----------------------------------------------------------------


def _positions_in_window(word, lo, hi):
    """Positions whose degree lies in [lo, hi], for words whose tails are
    degree-monotone (everything except periodic words)."""
    if word.kind in ("trivial", "finite"):
        m = 0 if word.kind == "trivial" else word.length
        return [i for i in range(0, m + 1) if lo <= word.mu(i) <= hi]
    if word.is_periodic():
        raise ComplexError("periodic words build band complexes, not string complexes")
    out = []
    # walk right from 0 while the degree can still fall inside the window;
    # tails change degree by +-1 per step and are eventually monotone, so
    # going one block-length beyond the window is a safe stopping rule.
    for direction in (1, -1):
        i = 0 if direction == 1 else -1
        misses = 0
        limit = 4 * (len(word.core) + 8 + (len(word.left_block or ()) +
                                           len(word.right_block or ())))
        while word.has_position(i) and misses <= limit:
            if lo <= word.mu(i) <= hi:
                out.append(i)
                misses = 0
            else:
                misses += 1
            i += direction
    return sorted(set(out))


def build_string_complex(word, window=None):
    """P(C) for a trivial/finite word, or a window truncation for an
    infinite non-periodic word (window = inclusive degree range)."""
    pres = word.pres
    if word.kind in ("trivial", "finite"):
        m = 0 if word.kind == "trivial" else word.length
        positions = list(range(0, m + 1))
        truncated = False
    else:
        if window is None:
            raise ComplexError("infinite words need an explicit degree window")
        for blk in (word.left_block, word.right_block):
            if blk and sum(l.degree_step for l in blk) == 0:
                raise ComplexError("a tail with zero degree drift leaves "
                                   "every degree window; cannot truncate")
        positions = _positions_in_window(word, window[0], window[1])
        truncated = True
    index = {i: k for k, i in enumerate(positions)}
    gens = [(word.vertex_at(i), word.mu(i)) for i in positions]
    labels = [("pos", i) for i in positions]
    diff = {}
    field = pres.field
    for i in positions:
        letter = word.letter_at(i)
        if letter is None:
            continue
        if i - 1 not in index:
            continue
        if letter.inverse:
            # d(b_{i-1}) has the letter path times b_i
            _add_entry(diff, (index[i], index[i - 1]), letter.path, 1, field)
        else:
            _add_entry(diff, (index[i - 1], index[i]), letter.path, 1, field)
    cx = ProjComplex(pres, gens, diff, labels=labels,
                     window=window if truncated else None)
    return cx


def companion_matrix(field, poly_coeffs, power=1):
    """Companion matrix of poly^power for a monic polynomial given by its
    coefficient list [c_0, c_1, ..., 1]."""
    coeffs = [field.scalar(c) for c in poly_coeffs]
    assert coeffs[-1] == field.scalar(1), "polynomial must be monic"
    full = [field.scalar(1)]
    for _ in range(power):
        new = [field.scalar(0)] * (len(full) + len(coeffs) - 1)
        for i, a in enumerate(full):
            for j, b in enumerate(coeffs):
                new[i + j] = field.scalar(new[i + j] + a * b)
        full = new
    d = len(full) - 1
    mat = field.zeros(d, d)
    for i in range(1, d):
        mat[i, i - 1] = field.scalar(1)
    for i in range(d):
        mat[i, d - 1] = field.neg(full[i])
    return mat


def build_band_complex(word, twist):
    """P(C, V) for a periodic word and an invertible matrix acting on V.

    One period of positions 0..p-1, each tensored with V; the edge that
    would reference position p instead lands on position 0 carrying
    twist^{-1}, and the edge referencing position -1 lands on p-1 carrying
    twist.  Requires the period to be degree-balanced (mu(p) = 0).
    """
    pres = word.pres
    if not word.is_periodic():
        raise ComplexError("band complexes need a periodic two-sided word")
    p = word.period
    if word.mu(p) != 0:
        raise ComplexError("period is not degree-balanced: mu(%d) = %d"
                           % (p, word.mu(p)))
    field = pres.field
    twist = twist if isinstance(twist, np.ndarray) else field.asarray(twist)
    d = twist.shape[0]
    if d == 0 or twist.shape[0] != twist.shape[1]:
        raise ComplexError("twist must be a nonzero square matrix")
    tinv = field.inverse(twist)
    if tinv is None:
        raise ComplexError("twist matrix is not invertible")
    gens = []
    labels = []
    for i in range(p):
        for j in range(d):
            gens.append((word.vertex_at(i), word.mu(i)))
            labels.append(("band", i, j))
    def gid(i, j):
        return i * d + j
    diff = {}
    ident = field.eye(d)
    # one edge per letter C_1..C_p; the seam letter C_p references position
    # p, which is position 0 tensored with twist^{-1} (equivalently, seen
    # from position 0, the missing position -1 is p-1 tensored with twist).
    for i in range(1, p + 1):
        letter = word.letter_at(i)
        if letter.inverse:
            src_i, tgt_i, mat = i - 1, i % p, (ident if i < p else tinv)
        else:
            src_i, tgt_i, mat = i % p, i - 1, (ident if i < p else twist)
        for j in range(d):
            for k in range(d):
                c = mat[k, j]
                if c != 0:
                    _add_entry(diff, (gid(tgt_i, k), gid(src_i, j)),
                               letter.path, c, field)
    cx = ProjComplex(pres, gens, diff, labels=labels)
    cx.check_d_squared()
    return cx


# -- the kernel formula ------------------------------------------------------------


def kernel_parts(word):
    """The closed-form kernel description of a string complex differential.

    For each position i returns (case, kappa) where kappa is ('full',),
    ('arrow', name) or ('zero',): the kernel of d restricted to the summand
    at i is the full projective, the left ideal generated by that arrow, or
    zero.  Cases: (a) no outgoing edge, (b)/(c) interior annihilator from
    the junction relation, (d)/(e) end annihilator (may be missing), (f) two
    outgoing edges.
    """
    if word.kind not in ("trivial", "finite"):
        raise ComplexError("kernel formula applies to trivial/finite words")
    pres = word.pres
    m = 0 if word.kind == "trivial" else word.length
    out = {}
    for i in range(0, m + 1):
        left = word.letter_at(i)
        right = word.letter_at(i + 1)
        out_left = left is not None and not left.inverse
        out_right = right is not None and right.inverse
        if not out_left and not out_right:
            out[i] = ("a", ("full",))
        elif out_left and out_right:
            out[i] = ("f", ("zero",))
        elif out_right:
            beta = pres.forbidden_successor(right.path.last_arrow)
            if left is not None:
                # interior: the junction relation names the annihilator
                assert beta == left.path.first_arrow
                out[i] = ("b", ("arrow", beta))
            else:
                out[i] = ("d", ("arrow", beta) if beta else ("zero",))
        else:
            alpha = pres.forbidden_successor(left.path.last_arrow)
            if right is not None:
                assert alpha == right.path.first_arrow
                out[i] = ("c", ("arrow", alpha))
            else:
                out[i] = ("e", ("arrow", alpha) if alpha else ("zero",))
    return out


def _kappa_dimension(pres, vertex, kappa):
    if kappa[0] == "full":
        return len(pres.projective_basis(vertex))
    if kappa[0] == "zero":
        return 0
    name = kappa[1]
    return sum(1 for p in pres.enumerate_paths() if p.first_arrow == name)


def kernel_dimensions(word):
    """degree -> dim ker d^n predicted by the kernel formula."""
    pres = word.pres
    parts = kernel_parts(word)
    out = {}
    for i, (_case, kappa) in parts.items():
        n = word.mu(i)
        out[n] = out.get(n, 0) + _kappa_dimension(pres, word.vertex_at(i), kappa)
    return out


def kernel_basis_by_formula(cx, word):
    """Rows spanning ker d^n per degree, read off the formula, in the
    coordinates of cx.basis_index(n).  cx must be build_string_complex(word)."""
    pres = word.pres
    parts = kernel_parts(word)
    pos_of_gen = {}
    for g, label in enumerate(cx.labels):
        assert label[0] == "pos"
        pos_of_gen[g] = label[1]
    field = cx.field
    out = {}
    for n in cx.degrees():
        idx = cx.basis_index(n)
        rows = []
        col = {key: c for c, key in enumerate(idx)}
        for g in cx.gens_in_degree(n):
            i = pos_of_gen[g]
            _case, kappa = parts[i]
            v = cx.gens[g][0]
            if kappa[0] == "full":
                paths = pres.projective_basis(v)
            elif kappa[0] == "zero":
                paths = []
            else:
                paths = [p for p in pres.projective_basis(v)
                         if not p.is_trivial and p.first_arrow == kappa[1]]
            for q in paths:
                row = field.zeros(1, len(idx))
                row[0, col[(g, q)]] = field.scalar(1)
                rows.append(row)
        out[n] = (np.concatenate(rows, axis=0) if rows
                  else field.zeros(0, len(idx)))
    return out


# -- random graded automorphisms -----------------------------------------------------


def random_graded_automorphism(cx, rng):
    """A degreewise automorphism of the underlying graded projective: a
    random invertible scalar block per (degree, vertex) plus random radical
    terms wherever a nontrivial path allows one.  Returns {degree: path map
    on that degree's generators}."""
    pres, field = cx.pres, cx.field
    out = {}
    for n in cx.degrees():
        gens_n = cx.gens_in_degree(n)
        u = {}
        by_vertex = {}
        for g in gens_n:
            by_vertex.setdefault(cx.gens[g][0], []).append(g)
        for v, group in by_vertex.items():
            block = field.random_invertible(rng, len(group))
            triv = pres.trivial_path(v)
            for a, h in enumerate(group):
                for b, g in enumerate(group):
                    if block[a, b] != 0:
                        _add_entry(u, (h, g), triv, block[a, b], field)
        for g in gens_n:
            vg = cx.gens[g][0]
            for h in gens_n:
                for path in pres.projective_basis(cx.gens[h][0]):
                    if path.is_trivial or path.head != vg:
                        continue
                    if rng.random() < 0.5:
                        continue
                    c = int(rng.integers(0, field.p)) if field.p else int(rng.integers(-3, 4))
                    if c:
                        _add_entry(u, (h, g), path, c, field)
        out[n] = u
    return out


def apply_graded_automorphism(cx, autos):
    """Conjugated complex: d' = U ∘ d ∘ U^{-1} degree by degree.  Degrees
    missing from autos keep the identity."""
    pres, field = cx.pres, cx.field
    def auto_at(n):
        u = autos.get(n)
        return u if u is not None else identity_path_map(
            pres, field, cx.gens, cx.gens_in_degree(n))
    inv = {}
    for n in cx.degrees():
        inv[n] = invert_unitriangular(pres, field, cx.gens,
                                      cx.gens_in_degree(n), auto_at(n))
    new_diff = {}
    for (h, g), cell in cx.diff.items():
        n = cx.gens[g][1]
        piece = compose_path_maps(pres, field, {(h, g): cell}, inv[n])
        piece = compose_path_maps(pres, field, auto_at(n + 1), piece)
        for key, c2 in piece.items():
            for path, coeff in c2.items():
                _add_entry(new_diff, key, path, coeff, field)
    return ProjComplex(pres, cx.gens, new_diff, labels=list(cx.labels),
                       window=cx.window)
