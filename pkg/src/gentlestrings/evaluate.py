"""Evaluating words on complexes of projectives.

A complex M of projectives is read as a module with extra operators: for a
path p, multiplication m -> p·m, and for an arrow a, the component d_a of
the differential that lands in the paths ending with a (d_a(m) = a·m_a
where d(m) = sum_a a·m_a).  Both act on the "points" e_v M^n, the slice of
degree n spanned by basis elements whose path part ends at vertex v.

A finite word C evaluates on a subspace U through its homotopy symbols: the
flat symbol list is processed right to left, direct symbols as images and
inverted symbols as preimages, producing C·U at the head point.  One-sided
words get a pair of subspaces C+ and C- (the far end resolved by the sign
data, or for N-words by a fixed point of the one-period fold), and a pair
(B, D) of words sharing a head produces the four refined subspaces whose
quotients count copies of the corresponding string or band complex inside
M.  Chain maps P -> M are solved as one linear system per target, which is
also what realises e_v M^n ∩ CM as the generator image of a completed
word's complex.
"""

from dataclasses import dataclass

import numpy as np

from .fields import Subspace
from .words import Word, HomotopyWord, WordError, complete, context
from .complexes import ProjComplex, ComplexError, build_string_complex

__all__ = [
    "EvalError",
    "Evaluator",
    "OneSidedSpaces",
    "RefinedSpaces",
    "PeriodicRelation",
    "ChainMapSpace",
    "PpImageReport",
    "CompactMorphism",
    "compact_morphism",
]


class EvalError(ValueError):
    pass


@dataclass
class OneSidedSpaces:
    """C+ and C- for a trivial, finite or right-infinite word, both living
    at the head point (vertex, degree).  For N-words the *_steps fields
    certify after how many one-period folds the far fixed point stabilised."""

    vertex: str
    degree: int
    plus: Subspace
    minus: Subspace
    plus_steps: int = None
    minus_steps: int = None


@dataclass
class RefinedSpaces:
    """The four refined subspaces of a pair (B, D) at one degree.

    f_plus/f_minus present the space whose dimension counts string (or, for
    a periodic pair, band) summands; g_plus/g_minus are the companion pair
    used by the same splitting arguments.  When B^{-1}D is periodic the
    one-period relation is attached along with its splitting and the
    invariant-factor data of the induced automorphism.
    """

    vertex: str
    degree: int
    b_spaces: OneSidedSpaces
    d_spaces: OneSidedSpaces
    f_plus: Subspace
    f_minus: Subspace
    g_plus: Subspace
    g_minus: Subspace
    periodic: bool = False
    relation: object = None
    splitting: object = None
    invariants: tuple = None

    @property
    def f_dim(self):
        return self.f_plus.dim - self.f_minus.dim

    @property
    def g_dim(self):
        return self.g_plus.dim - self.g_minus.dim


@dataclass
class PeriodicRelation:
    """The one-period linear relation of a periodic word at a degree: pairs
    (far value, seam value) of the block system over one period."""

    vertex: str
    degree: int
    relation: object
    block_dims: tuple


class Evaluator:
    """Operator calculus of one complex of projectives.

    All matrices are cached per (degree, operator); instances are safe to
    share for reading once warm.
    """

    def __init__(self, module):
        self.module = module
        self.pres = module.pres
        self.field = module.field
        self.signs = context(self.pres).signs
        self._points = {}
        self._lookup = {}
        self._mult = {}
        self._dmat = {}
        self._dv = {}
        self._umult = {}
        self._ud = {}
        self._ublock = {}
        degs = module.degrees()
        self.min_degree = degs[0] if degs else 0
        self.max_degree = degs[-1] if degs else 0
        self._degrees = degs
        # differential entries grouped by source generator
        self._by_source = {}
        for (h, g), cell in module.diff.items():
            self._by_source.setdefault(g, []).append((h, cell))

    # -- points ---------------------------------------------------------------

    def point_index(self, n, v):
        """Row positions of e_v inside basis_index(n)."""
        key = (n, v)
        if key not in self._points:
            idx = [i for i, (g, q) in enumerate(self.module.basis_index(n))
                   if q.head == v]
            self._points[key] = idx
            basis = self.module.basis_index(n)
            self._lookup[key] = {basis[i]: j for j, i in enumerate(idx)}
        return self._points[key]

    def point_dim(self, n, v):
        return len(self.point_index(n, v))

    def point_full(self, n, v):
        return Subspace.full(self.field, self.point_dim(n, v))

    def point_zero(self, n, v):
        return Subspace.zero(self.field, self.point_dim(n, v))

    def rad_point(self, n, v):
        """The radical slice of a point: entries with a nontrivial path part."""
        f = self.field
        idx = self.point_index(n, v)
        basis = self.module.basis_index(n)
        rows = [j for j, i in enumerate(idx) if not basis[i][1].is_trivial]
        mat = f.zeros(len(rows), len(idx))
        for r, j in enumerate(rows):
            mat[r, j] = f.scalar(1)
        return Subspace(f, len(idx), mat)

    def _local(self, n, v):
        self.point_index(n, v)
        return self._lookup[(n, v)]

    # -- graded operators -------------------------------------------------------

    def mult_matrix(self, n, p):
        """Multiplication by the path p: e_{t(p)}M^n -> e_{h(p)}M^n."""
        key = (n, p)
        if key in self._mult:
            return self._mult[key]
        basis = self.module.basis_index(n)
        src = self.point_index(n, p.tail)
        tgt = self._local(n, p.head)
        mat = self.field.zeros(self.point_dim(n, p.head), len(src))
        for col, i in enumerate(src):
            g, q = basis[i]
            prod = self.pres.multiply(p, q)
            if prod is not None:
                mat[tgt[(g, prod)], col] = self.field.scalar(1)
        self._mult[key] = mat
        return mat

    def _d_terms(self, n, i):
        """(gen, path) products contributed by d to basis element i of
        degree n, as [(target basis key, coeff)]."""
        g, q = self.module.basis_index(n)[i]
        out = []
        for h, cell in self._by_source.get(g, ()):
            if self.module.gens[h][1] != n + 1:
                continue
            for path, coeff in cell.items():
                prod = self.pres.multiply(q, path)
                if prod is not None:
                    out.append(((h, prod), coeff))
        return out

    def d_matrix(self, n, a):
        """The component d_a keeping the terms whose path part ends with the
        arrow a: e_{h(a)}M^n -> e_{h(a)}M^{n+1}."""
        key = (n, a)
        if key in self._dmat:
            return self._dmat[key]
        v = self.pres.arrows[a].head
        src = self.point_index(n, v)
        tgt = self._local(n + 1, v)
        mat = self.field.zeros(self.point_dim(n + 1, v), len(src))
        for col, i in enumerate(src):
            for (h, prod), coeff in self._d_terms(n, i):
                if prod.arrows and prod.last_arrow == a:
                    row = tgt[(h, prod)]
                    mat[row, col] = self.field.scalar(mat[row, col] + coeff)
        self._dmat[key] = mat
        return mat

    def dv_matrix(self, n, v):
        """Full differential restricted to a point (it preserves e-parts):
        e_vM^n -> e_vM^{n+1}."""
        key = (n, v)
        if key in self._dv:
            return self._dv[key]
        src = self.point_index(n, v)
        tgt = self._local(n + 1, v)
        mat = self.field.zeros(self.point_dim(n + 1, v), len(src))
        for col, i in enumerate(src):
            for (h, prod), coeff in self._d_terms(n, i):
                row = tgt[(h, prod)]
                mat[row, col] = self.field.scalar(mat[row, col] + coeff)
        self._dv[key] = mat
        return mat

    # -- ungraded operators -------------------------------------------------------
    #
    # The one-period fold of an N-word mixes degrees, so its fixed points are
    # computed on the whole of e_vM, coordinatised degree block by degree
    # block in self._degrees order.

    def _u_offsets(self, v):
        key = v
        if key not in self._ublock:
            offs = {}
            pos = 0
            for n in self._degrees:
                d = self.point_dim(n, v)
                offs[n] = (pos, d)
                pos += d
            self._ublock[key] = (offs, pos)
        return self._ublock[key]

    def u_dim(self, v):
        return self._u_offsets(v)[1]

    def u_embed_rows(self, rows, n, v):
        """Place point-local rows into ungraded coordinates."""
        offs, total = self._u_offsets(v)
        start, d = offs.get(n, (0, 0))
        out = self.field.zeros(rows.shape[0], total)
        if d:
            out[:, start:start + d] = rows
        return out

    def u_slice(self, space, n, v):
        """Degree-n block of an ungraded subspace, as a point subspace."""
        offs, total = self._u_offsets(v)
        start, d = offs.get(n, (0, 0))
        if d == 0:
            return Subspace.zero(self.field, 0)
        block = Subspace(self.field, total,
                         self.u_embed_rows(self.field.eye(d), n, v))
        cut = space.intersect(block)
        return Subspace(self.field, d, cut.basis[:, start:start + d])

    def umult_matrix(self, p):
        key = p
        if key in self._umult:
            return self._umult[key]
        offs_s, tot_s = self._u_offsets(p.tail)
        offs_t, tot_t = self._u_offsets(p.head)
        mat = self.field.zeros(tot_t, tot_s)
        for n in self._degrees:
            s0, sd = offs_s[n]
            t0, td = offs_t[n]
            if sd and td:
                mat[t0:t0 + td, s0:s0 + sd] = self.mult_matrix(n, p)
        self._umult[key] = mat
        return mat

    def ud_matrix(self, a):
        key = a
        if key in self._ud:
            return self._ud[key]
        v = self.pres.arrows[a].head
        offs, tot = self._u_offsets(v)
        mat = self.field.zeros(tot, tot)
        for n in self._degrees:
            if n + 1 not in offs:
                continue
            s0, sd = offs[n]
            t0, td = offs[n + 1]
            if sd and td:
                mat[t0:t0 + td, s0:s0 + sd] = self.d_matrix(n, a)
        self._ud[key] = mat
        return mat

    # -- symbol folds ------------------------------------------------------------

    def apply_symbol(self, sym, space, state):
        """One homotopy symbol acting on a subspace at (vertex, degree)."""
        kind, obj = sym
        v, n = state
        if kind == "path":
            assert obj.tail == v, (sym, state)
            return space.image(self.mult_matrix(n, obj)), (obj.head, n)
        if kind == "path_inv":
            assert obj.head == v, (sym, state)
            return space.preimage(self.mult_matrix(n, obj)), (obj.tail, n)
        arrow = self.pres.arrows[obj]
        assert arrow.head == v, (sym, state)
        if kind == "d":
            return space.image(self.d_matrix(n, obj)), (v, n + 1)
        if kind == "d_inv":
            return space.preimage(self.d_matrix(n - 1, obj)), (v, n - 1)
        raise EvalError("unknown symbol %r" % (sym,))

    def apply_symbol_ungraded(self, sym, space, vertex):
        kind, obj = sym
        if kind == "path":
            assert obj.tail == vertex
            return space.image(self.umult_matrix(obj)), obj.head
        if kind == "path_inv":
            assert obj.head == vertex
            return space.preimage(self.umult_matrix(obj)), obj.tail
        assert self.pres.arrows[obj].head == vertex
        if kind == "d":
            return space.image(self.ud_matrix(obj)), vertex
        if kind == "d_inv":
            return space.preimage(self.ud_matrix(obj)), vertex
        raise EvalError("unknown symbol %r" % (sym,))

    def letter_apply(self, letter, space, degree):
        """One letter acting on a subspace sitting at the letter's right end
        (vertex, `degree`).  A direct letter [p] sends U to p^-1(d_{l(p)} U)
        one degree up; an inverted letter [q^-1] sends U to d_{l(q)}^-1(q U)
        one degree down.  Returns (space, (vertex, degree)) at the left end."""
        v = letter.tail
        if space.dim_ambient != self.point_dim(degree, v):
            raise EvalError("subspace does not live at the letter's source point")
        return self._fold((letter,), space, (v, degree))

    def _fold(self, letters, space, state):
        syms = []
        for l in letters:
            last = l.path.last_arrow
            if l.inverse:
                syms.append(("d_inv", last))
                syms.append(("path", l.path))
            else:
                syms.append(("path_inv", l.path))
                syms.append(("d", last))
        for sym in reversed(syms):
            space, state = self.apply_symbol(sym, space, state)
        return space, state

    def _fold_ungraded(self, letters, space, vertex):
        syms = HomotopyWord(self.pres, letters).flat_symbols() if letters else []
        for sym in reversed(syms):
            space, vertex = self.apply_symbol_ungraded(sym, space, vertex)
        return space, vertex

    def evaluate_word(self, word, n=0, far=None):
        """C·U at the head point (head(C), n); U defaults to the full far
        point e_{u}M^{n + mu(m)}."""
        if word.kind == "trivial":
            ambient = self.point_dim(n, word.vertex)
            if far is None:
                return Subspace.full(self.field, ambient)
            if far.dim_ambient != ambient:
                raise EvalError("far space has ambient %d, point needs %d"
                                % (far.dim_ambient, ambient))
            return far
        if word.kind != "finite":
            raise EvalError("evaluate_word folds trivial/finite words; "
                            "one-sided words go through one_sided_spaces")
        m = word.length
        u, _ = word.right_state()
        k = n + word.mu(m)
        if far is None:
            far = self.point_full(k, u)
        elif far.dim_ambient != self.point_dim(k, u):
            raise EvalError("far space has ambient %d, point needs %d"
                            % (far.dim_ambient, self.point_dim(k, u)))
        space, state = self._fold(word.core, far, (u, k))
        assert state == (word.head(), n)
        return space

    def evaluate_word_ungraded(self, word, far):
        """Same fold on whole e-parts (no degree bookkeeping)."""
        if word.kind == "trivial":
            return far
        if word.kind != "finite":
            raise EvalError("ungraded evaluation folds trivial/finite words")
        u, _ = word.right_state()
        space, vertex = self._fold_ungraded(word.core, far, u)
        assert vertex == word.head()
        return space

    # -- one-sided spaces ---------------------------------------------------------

    def _far_plus(self, u, eps, k):
        for name in self.pres.incoming(u):
            if self.signs.symbol(name, False) == eps:
                dmat = self.d_matrix(k, name)
                return Subspace(self.field, self.point_dim(k, u),
                                self.field.nullspace(dmat))
        return self.point_full(k, u)

    def _far_minus(self, u, eps, k):
        for name in self.pres.outgoing(u):
            if self.signs.symbol(name, True) == -eps:
                alpha = max((p for p in self.pres.enumerate_paths()
                             if p.arrows and p.first_arrow == name),
                            key=len)
                space = self.point_full(k - 1, alpha.head)
                space, st = self.apply_symbol(("d", alpha.last_arrow),
                                              space, (alpha.head, k - 1))
                space, st = self.apply_symbol(("path_inv", alpha), space, st)
                assert st == (u, k)
                return space
        # no outgoing continuation: everything that arrives at u, split by
        # the sign of the arriving arrow
        space = self.point_zero(k, u)
        for name in self.pres.incoming(u):
            if self.signs.symbol(name, False) == eps:
                full = self.point_full(k - 1, u)
                space = space.add(full.image(self.d_matrix(k - 1, name)))
            else:
                arrow_path = self.pres.path([name])
                full = self.point_full(k, arrow_path.tail)
                space = space.add(full.image(self.mult_matrix(k, arrow_path)))
        return space

    def one_sided_spaces(self, word, n=0):
        """C+ and C- at (head(C), n) for a trivial, finite or N-word."""
        if word.kind in ("trivial", "finite"):
            m = 0 if word.kind == "trivial" else word.length
            u, eps = word.right_state()
            k = n + word.mu(m)
            plus = self.evaluate_word(word, n, self._far_plus(u, eps, k))
            minus = self.evaluate_word(word, n, self._far_minus(u, eps, k))
            return OneSidedSpaces(word.head(), n, plus, minus)
        if word.kind != "right_inf":
            raise EvalError("one-sided spaces read words to the right; "
                            "invert a left-infinite word first")
        s = len(word.core)
        p = len(word.right_block)
        seam = word.vertex_at(s)
        assert word.vertex_at(s + p) == seam
        block = tuple(word.letter_at(i) for i in range(s + 1, s + p + 1))
        plus_far, plus_steps = self._tail_fixpoint(block, seam, True)
        minus_far, minus_steps = self._tail_fixpoint(block, seam, False)
        k = n + word.mu(s)
        prefix = word.core
        plus = self._graded_prefix(prefix, self.u_slice(plus_far, k, seam),
                                   (seam, k), (word.head(), n))
        minus = self._graded_prefix(prefix, self.u_slice(minus_far, k, seam),
                                    (seam, k), (word.head(), n))
        return OneSidedSpaces(word.head(), n, plus, minus,
                              plus_steps=plus_steps, minus_steps=minus_steps)

    def _tail_fixpoint(self, block, seam, descending):
        """Fixed point of the one-period fold on e_{seam}M: greatest (from
        the full space) for C+, least (from zero) for C-."""
        total = self.u_dim(seam)
        space = (Subspace.full(self.field, total) if descending
                 else Subspace.zero(self.field, total))
        for step in range(total + 2):
            nxt, vertex = self._fold_ungraded(block, space, seam)
            assert vertex == seam
            if nxt == space:
                return space, step
            space = nxt
        raise EvalError("one-period fold failed to stabilise")

    def _graded_prefix(self, letters, space, state, expect):
        if letters:
            space, state = self._fold(letters, space, state)
        assert state == expect, (state, expect)
        return space

    def plus_space(self, word, n=0):
        return self.one_sided_spaces(word, n).plus

    def minus_space(self, word, n=0):
        return self.one_sided_spaces(word, n).minus

    # -- refined spaces -----------------------------------------------------------

    def refined_spaces(self, bword, dword, n=0):
        """The four refined subspaces of the pair (B, D) at degree n."""
        if bword.head() != dword.head():
            raise EvalError("the two words must share their head vertex")
        if bword.head_sign() != -dword.head_sign():
            raise EvalError("the two words must carry opposite head signs")
        v = bword.head()
        b = self.one_sided_spaces(bword, n)
        d = self.one_sided_spaces(dword, n)
        f_plus = b.plus.intersect(d.plus)
        f_minus = b.plus.intersect(d.minus).add(b.minus.intersect(d.plus))
        g_plus = b.minus.add(d.plus.intersect(b.plus))
        g_minus = b.minus.add(d.minus.intersect(b.plus))
        if not f_plus.contains(f_minus):
            raise EvalError("refined spaces are not nested")
        if not g_plus.contains(g_minus):
            raise EvalError("refined spaces are not nested")
        out = RefinedSpaces(v, n, b, d, f_plus, f_minus, g_plus, g_minus)
        self._attach_periodic(out, bword, dword, n)
        return out

    def _attach_periodic(self, out, bword, dword, n):
        if bword.kind != "right_inf" or dword.kind != "right_inf":
            return
        doubled = bword.invert().compose(dword)
        if doubled is None or not doubled.is_periodic():
            return
        p = len(dword.right_block)
        if dword.mu(len(dword.core) + p) - dword.mu(len(dword.core)) != 0:
            return
        letters = tuple(dword.letter_at(i) for i in range(1, p + 1))
        rel = self.periodic_relation(letters, n)
        from .relations import split_relation, module_invariants
        if rel.relation.sharp() != out.f_plus or rel.relation.flat() != out.f_minus:
            raise EvalError("periodic relation disagrees with the refined fold")
        splitting = split_relation(rel.relation)
        out.periodic = True
        out.relation = rel
        out.splitting = splitting
        out.invariants = module_invariants(self.field, splitting.matrix)

    # -- periodic words -----------------------------------------------------------

    def periodic_relation(self, period, n=0):
        """Linear relation of one period at degree n.

        `period` is either a periodic two-sided word (letters 1..p are
        used) or an explicit letter tuple read away from the seam.  Pairs
        are (value at position p, value at position 0).
        """
        from .relations import LinearRelation
        if isinstance(period, Word):
            if not period.is_periodic():
                raise EvalError("not a periodic word")
            p = len(period.right_block)
            letters = tuple(period.letter_at(i) for i in range(1, p + 1))
        else:
            letters = tuple(period)
        if not letters:
            raise EvalError("empty period")
        # positions 0..p with their vertices and degree offsets
        verts = [letters[0].head]
        mus = [0]
        for l in letters:
            if l.head != verts[-1]:
                raise EvalError("period letters do not chain")
            verts.append(l.tail)
            mus.append(mus[-1] + l.degree_step)
        if verts[-1] != verts[0]:
            raise EvalError("period does not close up")
        if mus[-1] != 0:
            raise EvalError("period has nonzero degree drift; no single "
                            "degree supports its relation")
        dims = [self.point_dim(n + mus[i], verts[i]) for i in range(len(verts))]
        offsets = np.cumsum([0] + dims)
        total = int(offsets[-1])
        rows = []
        f = self.field

        def place(block_rows, i, mat, sign):
            block_rows[:, offsets[i]:offsets[i + 1]] = (
                mat if sign > 0 else f.reduce(-mat))

        for i, l in enumerate(letters, start=1):
            ki, km = n + mus[i], n + mus[i - 1]
            if l.inverse:
                # d_{l(p)} m_{i-1} = p m_i
                dmat = self.d_matrix(km, l.path.last_arrow)
                mmat = self.mult_matrix(ki, l.path)
            else:
                # beta m_{i-1} = d_{l(beta)} m_i
                dmat = self.mult_matrix(km, l.path)
                mmat = self.d_matrix(ki, l.path.last_arrow)
            assert dmat.shape[0] == mmat.shape[0]
            block = f.zeros(dmat.shape[0], total)
            place(block, i - 1, dmat, 1)
            place(block, i, mmat, -1)
            rows.append(block)
        system = np.concatenate(rows, axis=0) if rows else f.zeros(0, total)
        sols = f.nullspace(system)
        d0 = dims[0]
        pair_rows = np.concatenate(
            [sols[:, offsets[-2]:offsets[-1]], sols[:, 0:d0]], axis=1)
        relation = LinearRelation.from_rows(f, d0, pair_rows)
        return PeriodicRelation(verts[0], n, relation, tuple(dims))

    # -- chain maps ---------------------------------------------------------------

    def chain_map_space(self, target):
        """All chain maps target -> module, solved as one sparse system."""
        if target.pres is not self.pres:
            raise EvalError("complexes live over different presentations")
        f = self.field
        blocks = [(v, ndeg) for v, ndeg in target.gens]
        dims = [self.point_dim(ndeg, v) for v, ndeg in blocks]
        offsets = np.cumsum([0] + dims)
        total = int(offsets[-1])
        by_source = {}
        for (h, g), cell in target.diff.items():
            by_source.setdefault(g, []).append((h, cell))
        rows = []
        for g, (v, ndeg) in enumerate(blocks):
            rdim = self.point_dim(ndeg + 1, v)
            if rdim == 0:
                continue
            block = f.zeros(rdim, total)
            if dims[g]:
                block[:, offsets[g]:offsets[g] + dims[g]] = self.dv_matrix(ndeg, v)
            for h, cell in by_source.get(g, ()):
                for path, coeff in cell.items():
                    mat = self.mult_matrix(ndeg + 1, path)
                    if dims[h]:
                        seg = block[:, offsets[h]:offsets[h] + dims[h]]
                        block[:, offsets[h]:offsets[h] + dims[h]] = f.reduce(
                            seg - coeff * mat)
            rows.append(block)
        system = np.concatenate(rows, axis=0) if rows else f.zeros(0, total)
        basis = f.nullspace(system)
        return ChainMapSpace(self, target, blocks, tuple(dims),
                             tuple(int(x) for x in offsets), basis, system)

    # -- the pp realisation of CM ---------------------------------------------

    def pp_image_check(self, word, n=0):
        """e_vM^n ∩ CM two ways: the fold, and the anchor-generator image of
        the chain maps from the completed word's (shifted) complex."""
        if word.kind not in ("trivial", "finite"):
            raise EvalError("pp images attach to trivial/finite words")
        direct_route = self.evaluate_word(word, n)
        info = complete(word, left="direct", right="inverse")
        w_word, anchor = info.word, info.anchor
        shift = w_word.mu(anchor) - n
        if w_word.kind in ("trivial", "finite"):
            wcx = build_string_complex(w_word)
        else:
            lo = self.min_degree - 2 + shift
            hi = self.max_degree + 1 + shift
            wcx = build_string_complex(w_word, window=(lo, hi))
        wcx = wcx.shift(shift)
        maps = self.chain_map_space(wcx)
        try:
            g_anchor = wcx.labels.index(("pos", anchor))
        except ValueError:
            g_anchor = None
        if g_anchor is None:
            hom_route = Subspace.zero(self.field, direct_route.dim_ambient)
        else:
            hom_route = maps.generator_image(g_anchor)
        prefix_dims = []
        head_v, head_sign = word.left_state()
        for l in range(0, (0 if word.kind == "trivial" else word.length) + 1):
            if l == 0:
                prefix = Word.trivial(self.pres, head_v, head_sign)
            else:
                prefix = Word.finite(self.pres, word.core[:l])
            prefix_dims.append(self.evaluate_word(prefix, n).dim)
        return PpImageReport(word, self.module, n, direct_route, hom_route,
                             direct_route == hom_route, tuple(prefix_dims),
                             maps.dim, shift)


@dataclass
class PpImageReport:
    word: Word
    module: ProjComplex
    degree: int
    image: Subspace
    via_chain_maps: Subspace
    agree: bool
    prefix_dims: tuple
    hom_dim: int
    shift: int


class ChainMapSpace:
    """Solution space of all chain maps P -> M.

    Coordinates are the generator blocks of P in order, each block holding
    point coordinates of the value on that generator.
    """

    def __init__(self, evaluator, target, blocks, dims, offsets, basis, system):
        self.evaluator = evaluator
        self.target = target
        self.blocks = blocks
        self.dims = dims
        self.offsets = offsets
        self.basis = basis
        self.system = system

    @property
    def dim(self):
        return self.basis.shape[0]

    def block_of(self, vec, g):
        return vec[self.offsets[g]:self.offsets[g] + self.dims[g]]

    def generator_image(self, g):
        """{f(b_g) : f a chain map} as a subspace of the generator's point."""
        f = self.evaluator.field
        if self.dim == 0:
            return Subspace.zero(f, self.dims[g])
        return Subspace(f, self.dims[g],
                        self.basis[:, self.offsets[g]:self.offsets[g] + self.dims[g]])

    def solve_with_value(self, g, vec):
        """A chain map with f(b_g) = vec, or None."""
        return self.solve_with_values({g: vec})

    def solve_with_values(self, assignments):
        """A chain map taking each prescribed generator value, or None.
        Solved by substituting the pinned blocks into the homogeneous
        system and solving for the rest."""
        f = self.evaluator.field
        n_cols = self.system.shape[1]
        pinned = {}
        for g, vec in assignments.items():
            for idx in range(self.dims[g]):
                pinned[self.offsets[g] + idx] = vec[idx]
        keep = [j for j in range(n_cols) if j not in pinned]
        rhs = f.zeros(self.system.shape[0], 1).reshape(-1)
        for j, val in pinned.items():
            rhs = f.reduce(rhs - self.system[:, j] * val)
        sol = f.solve(self.system[:, keep], rhs)
        if sol is None:
            return None
        out = f.zeros(1, n_cols).reshape(-1)
        for j, val in pinned.items():
            out[j] = val
        for idx, j in enumerate(keep):
            out[j] = sol[idx]
        return out

    def path_map_of(self, vec):
        """Decode a solution vector to {(gen of M, gen of P): {path: c}}."""
        out = {}
        ev = self.evaluator
        for g, (v, ndeg) in enumerate(self.blocks):
            coords = self.block_of(vec, g)
            idx = ev.point_index(ndeg, v)
            basis = ev.module.basis_index(ndeg)
            for j, c in enumerate(coords):
                if c == 0:
                    continue
                gm, q = basis[idx[j]]
                cell = out.setdefault((gm, g), {})
                cell[q] = ev.field.scalar(cell.get(q, 0) + c)
        return {k: {p: c for p, c in cell.items() if c != 0}
                for k, cell in out.items()
                if any(c != 0 for c in cell.values())}


# -- compact morphisms ----------------------------------------------------------


@dataclass
class CompactMorphism:
    """The canonical map a<C>: P(E) -> P(W) for a trivial/finite word C.

    W is the two-way completion of C; E the completion of C's left state
    alone.  The two words share their left part and their first q letters,
    q counting C's leading single-arrow inverse letters.  The map is the
    identity on the shared positions; what happens one step later depends
    on C's letter q+1: nothing remains (case 1, E = W), the next letter is
    direct and the map just stops (case 2), or the next letter inverts a
    path of length >= 2 and the map picks up that path minus its last
    arrow (case 3).
    """

    word: Word
    case: int
    q: int
    lam: object
    source_info: object
    target_info: object

    @property
    def source_word(self):
        return self.source_info.word

    @property
    def target_word(self):
        return self.target_info.word

    def aligned_positions(self, source_cx, target_cx):
        """[(offset, gen index in source, gen index in target)] over the
        shared anchor-relative offsets present in both windows."""
        src = {lab[1] - self.source_info.anchor: i
               for i, lab in enumerate(source_cx.labels)}
        tgt = {lab[1] - self.target_info.anchor: i
               for i, lab in enumerate(target_cx.labels)}
        return [(s, src[s], tgt[s]) for s in sorted(set(src) & set(tgt))]

    def materialize(self, radius=None):
        """(source complex, target complex, path map) over a degree window
        of the given radius around the anchor degree."""
        pres = self.word.pres
        field = pres.field
        if radius is None:
            radius = self.q + 4
        out = []
        for info in (self.source_info, self.target_info):
            w = info.word
            base = w.mu(info.anchor)
            if w.kind in ("trivial", "finite"):
                out.append(build_string_complex(w))
            else:
                out.append(build_string_complex(
                    w, window=(base - radius, base + radius)))
        source_cx, target_cx = out
        amap = {}
        for s, gs, gt in self.aligned_positions(source_cx, target_cx):
            if s <= self.q:
                v = source_cx.gens[gs][0]
                assert target_cx.gens[gt][0] == v
                amap[(gt, gs)] = {pres.trivial_path(v): field.scalar(1)}
            elif s == self.q + 1 and self.case == 3:
                amap[(gt, gs)] = {self.lam: field.scalar(1)}
        return source_cx, target_cx, amap

    def verify(self, radius=None):
        """Check d_W ∘ a = a ∘ d_E on a window; raises on failure."""
        from .complexes import compose_path_maps
        pres = self.word.pres
        field = pres.field
        source_cx, target_cx, amap = self.materialize(radius)
        left = compose_path_maps(pres, field, target_cx.diff, amap)
        right = compose_path_maps(pres, field, amap, source_cx.diff)
        if left != right:
            raise EvalError("compact morphism does not commute "
                            "with the differentials")
        return source_cx, target_cx, amap


def compact_morphism(word):
    """The compact morphism attached to a trivial or finite word."""
    if word.kind not in ("trivial", "finite"):
        raise EvalError("compact morphisms attach to trivial/finite words")
    pres = word.pres
    letters = () if word.kind == "trivial" else word.core
    m = len(letters)
    q = 0
    while q < m and letters[q].inverse and len(letters[q].path) == 1:
        q += 1
    target_info = complete(word, left="direct", right="inverse")
    v, eps = word.left_state()
    source_info = complete(Word.trivial(pres, v, eps),
                           left="direct", right="inverse")
    # the source word must replay the shared letters
    for j in range(1, q + 1):
        replay = source_info.word.letter_at(source_info.anchor + j)
        if replay != letters[j - 1]:
            raise EvalError("completion machine disagrees with the word "
                            "at letter %d" % j)
    if q == m:
        return CompactMorphism(word, 1, q, None, source_info, target_info)
    nxt = letters[q]
    if not nxt.inverse:
        return CompactMorphism(word, 2, q, None, source_info, target_info)
    if len(nxt.path) < 2:
        raise EvalError("letter %d should have been absorbed into q" % (q + 1))
    lam = pres.path(nxt.path.arrows[1:])
    return CompactMorphism(word, 3, q, lam, source_info, target_info)
