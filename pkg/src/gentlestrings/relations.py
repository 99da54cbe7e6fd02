"""Linear relations on a finite-dimensional space and their splitting data.

A relation is a subspace R of V ⊕ V, read as a multivalued map from the
first copy to the second.  Iterating the inverse-image operator from the
full space (descending) and from zero (ascending) yields the stable and
vanishing parts; their combinations carry an induced invertible operator on
a subquotient, and that operator can be realised on an honest subspace
complement, which is the splitting step everything downstream leans on.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import sympy

from .fields import Subspace

__all__ = [
    "LinearRelation",
    "RelationSplitting",
    "split_relation",
    "module_invariants",
    "inverse_invariants",
    "reciprocal_poly",
    "invariants_to_matrix",
]


class LinearRelation:
    """A subspace of V ⊕ V with dim V = dim_side."""

    def __init__(self, field, dim_side, space):
        assert isinstance(space, Subspace)
        assert space.dim_ambient == 2 * dim_side
        self.field = field
        self.dim_side = dim_side
        self.space = space

    # -- constructors ------------------------------------------------------------

    @classmethod
    def from_rows(cls, field, dim_side, rows):
        return cls(field, dim_side, Subspace(field, 2 * dim_side, rows))

    @classmethod
    def from_pairs(cls, field, dim_side, pairs):
        rows = [list(u) + list(w) for u, w in pairs]
        if not rows:
            return cls(field, dim_side, Subspace.zero(field, 2 * dim_side))
        return cls.from_rows(field, dim_side, field.asarray(rows))

    @classmethod
    def graph(cls, field, mat):
        """{(v, Av)} for a square matrix A."""
        d = mat.shape[1]
        assert mat.shape[0] == d
        rows = np.concatenate([field.eye(d), field.reduce(mat.T)], axis=1)
        return cls.from_rows(field, d, rows)

    @classmethod
    def identity(cls, field, d):
        return cls.graph(field, field.eye(d))

    @classmethod
    def everything(cls, field, d):
        return cls(field, d, Subspace.full(field, 2 * d))

    @classmethod
    def nothing(cls, field, d):
        return cls(field, d, Subspace.zero(field, 2 * d))

    # -- basic calculus -----------------------------------------------------------

    def inverse(self):
        d = self.dim_side
        basis = self.space.basis
        swapped = np.concatenate([basis[:, d:], basis[:, :d]], axis=1)
        return LinearRelation.from_rows(self.field, d, swapped)

    def _side(self, U, first):
        """Restrict to pairs whose chosen side lies in U, project the other."""
        d = self.dim_side
        f = self.field
        if first:
            big_rows = np.concatenate([
                np.concatenate([U.basis, f.zeros(U.dim, d)], axis=1),
                np.concatenate([f.zeros(d, d), f.eye(d)], axis=1),
            ], axis=0)
        else:
            big_rows = np.concatenate([
                np.concatenate([f.eye(d), f.zeros(d, d)], axis=1),
                np.concatenate([f.zeros(U.dim, d), U.basis], axis=1),
            ], axis=0)
        cut = self.space.intersect(Subspace(f, 2 * d, big_rows))
        proj = cut.basis[:, d:] if first else cut.basis[:, :d]
        return Subspace(f, d, proj)

    def image_of(self, U):
        """RU = {w : (u, w) ∈ R for some u ∈ U}."""
        return self._side(U, first=True)

    def preimage_of(self, U):
        """R^{-1}U = {v : (v, w) ∈ R for some w ∈ U}."""
        return self._side(U, first=False)

    def compose(self, other):
        """self ; other = {(u, w) : ∃v (u,v) ∈ self, (v,w) ∈ other}."""
        d = self.dim_side
        assert other.dim_side == d
        f = self.field
        # triples (u, v, w) with (u,v) in self (w free) and (v,w) in other
        # (u free); the composite is the (u, w) projection of the cut.
        a = self.space.basis      # rows (u, v)
        b = other.space.basis     # rows (v, w)
        left = np.concatenate([
            np.concatenate([a, f.zeros(a.shape[0], d)], axis=1),
            np.concatenate([f.zeros(d, 2 * d), f.eye(d)], axis=1),
        ], axis=0)
        right = np.concatenate([
            np.concatenate([f.zeros(b.shape[0], d), b], axis=1),
            np.concatenate([f.eye(d), f.zeros(d, 2 * d)], axis=1),
        ], axis=0)
        triple = Subspace(f, 3 * d, left).intersect(Subspace(f, 3 * d, right))
        rows = np.concatenate([triple.basis[:, :d], triple.basis[:, 2 * d:]], axis=1)
        return LinearRelation.from_rows(f, d, rows)

    def contains_pair(self, u, w):
        vec = np.concatenate([self.field.reduce(u), self.field.reduce(w)])
        return self.space.contains_vector(vec)

    def __eq__(self, other):
        return (isinstance(other, LinearRelation)
                and self.dim_side == other.dim_side and self.space == other.space)

    def __hash__(self):
        return hash((self.dim_side, self.space))

    # -- fixpoints ---------------------------------------------------------------

    def stable_part(self):
        """Greatest U with U = R^{-1}U, reached descending from V."""
        f, d = self.field, self.dim_side
        U = Subspace.full(f, d)
        for _ in range(d + 1):
            nxt = self.preimage_of(U)
            if nxt == U:
                return U
            U = nxt
        raise AssertionError("descending chain failed to stabilise")

    def vanishing_part(self):
        """Least U with U = R^{-1}U, reached ascending from 0."""
        f, d = self.field, self.dim_side
        U = Subspace.zero(f, d)
        for _ in range(d + 1):
            nxt = self.preimage_of(U)
            if nxt == U:
                return U
            U = nxt
        raise AssertionError("ascending chain failed to stabilise")

    def sharp(self):
        """Stable part seen from both sides."""
        return self.stable_part().intersect(self.inverse().stable_part())

    def flat(self):
        """The part on which the induced operator must die."""
        inv = self.inverse()
        a = self.stable_part().intersect(inv.vanishing_part())
        b = inv.stable_part().intersect(self.vanishing_part())
        return a.add(b)


class RelationSplitting:
    """The splitting package of a relation: sharp/flat parts, a complement
    witness W with W ⊕ flat = sharp, and the invertible matrix of the
    induced operator in the witness basis (row convention: the i-th witness
    maps to sum_j matrix[j, i] · witness_j)."""

    def __init__(self, relation, sharp, flat, witness, matrix):
        self.relation = relation
        self.sharp = sharp
        self.flat = flat
        self.witness = witness      # Subspace; its .basis rows are the w_i
        self.matrix = matrix

    def certify(self):
        """Re-check everything from the definitions; raises on failure."""
        f = self.relation.field
        R = self.relation
        if not self.sharp.contains(self.flat):
            raise AssertionError("flat part is not inside the sharp part")
        if self.witness.intersect(self.flat).dim != 0:
            raise AssertionError("witness meets the flat part")
        if self.witness.add(self.flat) != self.sharp:
            raise AssertionError("witness + flat does not fill the sharp part")
        if not self.sharp.contains(self.witness):
            raise AssertionError("witness leaves the sharp part")
        if f.inverse(self.matrix) is None:
            raise AssertionError("induced matrix is not invertible")
        w = self.witness.basis
        for i in range(w.shape[0]):
            target = f.zeros(1, R.dim_side)[0]
            for j in range(w.shape[0]):
                target = f.reduce(target + self.matrix[j, i] * w[j])
            if not R.contains_pair(w[i], target):
                raise AssertionError("witness pair %d is not in the relation" % i)
        return True


def _induced_matrix(relation, sharp, flat, reps):
    """Matrix of the induced operator on sharp/flat in the basis of coset
    representatives reps (rows)."""
    f = relation.field
    d = relation.dim_side
    n = reps.shape[0]
    if n == 0:
        return f.zeros(0, 0)
    flat_rows = flat.basis
    rel_rows = relation.space.basis
    # for each rep v: find (x, w) with x = v + b (b in flat), (x, w) in R,
    # w in sharp; then express w in reps modulo flat.
    cols = []
    for i in range(n):
        v = reps[i]
        # unknowns: coefficients a (over rel rows), b (over flat rows),
        # c (over sharp rows); equation: a·rel = (v + b·flat, w), w = c·sharp
        # linear system in (a, b, c):
        #   first block:  a·rel_first - b·flat = v
        #   second block: a·rel_second - c·sharp = 0
        sharp_rows = sharp.basis
        na, nb, nc = rel_rows.shape[0], flat_rows.shape[0], sharp_rows.shape[0]
        lhs = f.zeros(2 * d, na + nb + nc)
        lhs[:d, :na] = rel_rows[:, :d].T
        lhs[d:, :na] = rel_rows[:, d:].T
        if nb:
            lhs[:d, na:na + nb] = f.reduce(-flat_rows.T)
        if nc:
            lhs[d:, na + nb:] = f.reduce(-sharp_rows.T)
        rhs = np.concatenate([v, f.zeros(1, d)[0]])
        sol = f.solve(lhs, rhs)
        if sol is None:
            raise AssertionError("no induced image for a sharp-part vector")
        c = sol[na + nb:]
        w = f.reduce(c @ sharp_rows) if nc else f.zeros(1, d)[0]
        # coordinates of w modulo flat, in the chosen rep basis
        basis_rows = np.concatenate([reps, flat_rows], axis=0) if nb else reps
        coords = f.solve(basis_rows.T, w)
        if coords is None:
            raise AssertionError("induced image escaped sharp = reps + flat")
        cols.append(coords[:n])
    return f.reduce(np.stack(cols, axis=1))


def split_relation(relation, certify=True):
    """Sharp/flat parts plus a witness complement W and the matrix of the
    induced operator restricted to W, solved for in one pass."""
    f = relation.field
    d = relation.dim_side
    sharp = relation.sharp()
    flat = relation.flat()
    rep_rows = flat.complement_in(sharp)
    reps = np.stack(rep_rows, axis=0) if rep_rows else f.zeros(0, d)
    t_mat = _induced_matrix(relation, sharp, flat, reps)
    n, nb = reps.shape[0], flat.dim
    if n == 0:
        out = RelationSplitting(relation, sharp, flat,
                                Subspace.zero(f, d), t_mat)
        if certify:
            out.certify()
        return out
    # adjust each rep by a flat vector so the pairs land in the relation:
    # find x_i in flat with (v_i + x_i, sum_j t[j,i] (v_j + x_j)) in R.
    # unknowns: per i, flat coefficients b_i and relation coefficients a_i.
    na = relation.space.basis.shape[0]
    rel_rows = relation.space.basis
    flat_rows = flat.basis
    lhs = f.zeros(2 * d * n, (na + nb) * n)
    rhs_parts = []
    for i in range(n):
        r0 = 2 * d * i
        # a_i · rel = (v_i + b_i·flat, sum_j t[j,i](v_j + b_j·flat))
        lhs[r0:r0 + d, i * na:(i + 1) * na] = rel_rows[:, :d].T
        lhs[r0 + d:r0 + 2 * d, i * na:(i + 1) * na] = rel_rows[:, d:].T
        if nb:
            off = na * n
            lhs[r0:r0 + d, off + i * nb:off + (i + 1) * nb] = f.reduce(-flat_rows.T)
            for j in range(n):
                blk = f.reduce(-t_mat[j, i] * flat_rows.T)
                lhs[r0 + d:r0 + 2 * d, off + j * nb:off + (j + 1) * nb] = f.reduce(
                    lhs[r0 + d:r0 + 2 * d, off + j * nb:off + (j + 1) * nb] + blk)
        top = reps[i]
        bot = f.zeros(1, d)[0]
        for j in range(n):
            bot = f.reduce(bot + t_mat[j, i] * reps[j])
        rhs_parts.append(top)
        rhs_parts.append(bot)
    rhs = np.concatenate(rhs_parts)
    sol = f.solve(lhs, rhs)
    if sol is None:
        raise AssertionError("witness system is unsolvable; splitting failed")
    witness_rows = []
    for i in range(n):
        w = reps[i].copy()
        if nb:
            b = sol[na * n + i * nb:na * n + (i + 1) * nb]
            w = f.reduce(w + b @ flat_rows)
        witness_rows.append(w)
    witness = Subspace(f, d, np.stack(witness_rows, axis=0))
    out = RelationSplitting(relation, sharp, flat, witness, t_mat)
    if certify:
        out.certify()
    return out


# -- invariants of an invertible operator ---------------------------------------------


def _sym_to_fraction(c):
    c = sympy.Rational(c)
    return Fraction(int(c.p), int(c.q))


def _charpoly_coeffs(field, mat):
    """Characteristic polynomial coefficients, highest degree first, as
    field scalars, via exact integer/rational arithmetic."""
    d = mat.shape[0]
    if d == 0:
        return [field.scalar(1)]
    if field.p:
        sm = sympy.Matrix([[int(mat[i, j]) for j in range(d)] for i in range(d)])
    else:
        sm = sympy.Matrix([[sympy.Rational(Fraction(mat[i, j]).numerator,
                                           Fraction(mat[i, j]).denominator)
                            for j in range(d)] for i in range(d)])
    coeffs = sm.charpoly().all_coeffs()
    if field.p:
        return [field.scalar(int(c)) for c in coeffs]
    return [field.scalar(_sym_to_fraction(c)) for c in coeffs]


def _factor_over_field(field, coeffs):
    """[(monic factor coeffs constant-first, multiplicity)] for a monic
    polynomial given highest-first."""
    x = sympy.Symbol("x")
    if field.p:
        poly = sympy.Poly([int(c) for c in coeffs], x, modulus=field.p)
    else:
        poly = sympy.Poly([sympy.Rational(Fraction(c).numerator, Fraction(c).denominator)
                           for c in coeffs], x, domain="QQ")
    out = []
    for fac, mult in poly.factor_list()[1]:
        cs = fac.all_coeffs()
        if field.p:
            cs = [field.scalar(int(c)) for c in cs]
        else:
            cs = [field.scalar(_sym_to_fraction(c)) for c in cs]
        lead = cs[0]
        if lead != field.scalar(1):
            inv = field.inv_scalar(lead)
            cs = [field.scalar(c * inv) for c in cs]
        out.append((tuple(reversed(cs)), int(mult)))
    return out


def _poly_of_matrix(field, coeffs_low_first, mat):
    d = mat.shape[0]
    acc = field.zeros(d, d)
    for c in reversed(coeffs_low_first):
        acc = field.matmul(acc, mat)
        if c != 0:
            acc = field.reduce(acc + field.scalar(c) * field.eye(d))
    return acc


def module_invariants(field, mat):
    """The k[T, T^{-1}]-module type of an invertible matrix: a sorted tuple
    of (irreducible coeffs constant-first, block size), one entry per
    elementary block.  T must be invertible, so x never divides."""
    d = mat.shape[0]
    if d == 0:
        return ()
    coeffs = _charpoly_coeffs(field, mat)
    out = []
    for pi, mult in _factor_over_field(field, coeffs):
        deg = len(pi) - 1
        if deg == 0:
            continue
        if pi[0] == 0:
            raise ValueError("operator is not invertible (x divides charpoly)")
        pim = _poly_of_matrix(field, pi, mat)
        ranks = [d]
        power = field.eye(d)
        for _ in range(mult):
            power = field.matmul(power, pim)
            ranks.append(field.rank(power))
        ranks.append(ranks[-1])
        for e in range(1, mult + 1):
            count = (ranks[e - 1] - 2 * ranks[e] + ranks[e + 1]) // deg
            out.extend([(pi, e)] * count)
    return tuple(sorted(out))


def reciprocal_poly(field, coeffs_low_first):
    """Monic pi*(x) = x^deg pi(1/x) / pi(0), the factor swap induced by
    inverting the operator."""
    cs = list(coeffs_low_first)
    assert cs[0] != 0, "reciprocal needs a nonzero constant term"
    star = list(reversed(cs))   # low-first coefficients of x^deg * pi(1/x)
    inv = field.inv_scalar(star[-1])
    return tuple(field.scalar(c * inv) for c in star)


def inverse_invariants(field, invariants):
    """Invariants of T^{-1} from those of T."""
    out = [(reciprocal_poly(field, pi), e) for pi, e in invariants]
    return tuple(sorted(out))


def invariants_to_matrix(field, invariants):
    """A block companion matrix realising the given invariants."""
    from .complexes import companion_matrix
    blocks = []
    for pi, e in invariants:
        blocks.append(companion_matrix(field, [field.scalar(c) for c in pi], power=e))
    n = sum(b.shape[0] for b in blocks)
    out = field.zeros(n, n)
    at = 0
    for b in blocks:
        k = b.shape[0]
        out[at:at + k, at:at + k] = b
        at += k
    return out
