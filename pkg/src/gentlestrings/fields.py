"""Exact linear algebra over prime fields and over the rationals.

Everything in this package reduces to small exact matrix computations:
reduced row echelon forms, nullspaces, solving, and a Subspace type whose
canonical form makes equality testing trivial.  Over F_p matrices are numpy
int64 arrays reduced mod p (vectorized row operations); over Q they are
numpy object arrays of fractions.Fraction.  No floating point anywhere.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["FieldSpec", "Subspace", "FieldError"]


class FieldError(ValueError):
    pass


def _is_probable_prime(n):
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    # deterministic Miller-Rabin for 64-bit inputs
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class FieldSpec:
    """A coefficient field: GF(p) for a prime p, or Q (characteristic 0).

    The instance carries the matrix routines so callers never branch on the
    characteristic themselves.  All matrices are 2-d numpy arrays; over GF(p)
    the dtype is int64 with entries in [0, p), over Q the dtype is object
    with Fraction entries.
    """

    def __init__(self, char=101):
        if char == 0:
            self.p = 0
        else:
            if not _is_probable_prime(char):
                raise FieldError("field characteristic must be prime or 0, got %r" % (char,))
            if char >= 3_000_000_000:
                # (p-1)^2 must stay well inside int64 for the vectorized updates
                raise FieldError("prime %d too large for the int64 backend" % char)
            self.p = char

    def __eq__(self, other):
        return isinstance(other, FieldSpec) and self.p == other.p

    def __hash__(self):
        return hash(("FieldSpec", self.p))

    def __repr__(self):
        return "FieldSpec(Q)" if self.p == 0 else "FieldSpec(GF(%d))" % self.p

    def describe(self):
        return "Q" if self.p == 0 else "GF(%d)" % self.p

    # -- scalars ---------------------------------------------------------

    def scalar(self, x):
        if self.p:
            return int(x) % self.p
        if isinstance(x, Fraction):
            return x
        return Fraction(x)

    def inv_scalar(self, x):
        if self.p:
            return pow(int(x), self.p - 2, self.p)
        if x == 0:
            raise ZeroDivisionError
        return Fraction(1) / x

    def neg(self, x):
        return (-x) % self.p if self.p else -x

    # -- array plumbing --------------------------------------------------

    def asarray(self, rows):
        """Coerce nested lists / arrays to this field's canonical dtype."""
        if self.p:
            a = np.array(rows, dtype=np.int64)
            if a.ndim == 1:
                a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
            return np.mod(a, self.p)
        a = np.array([[self.scalar(x) for x in row] for row in rows], dtype=object)
        if a.size == 0:
            a = a.reshape((len(rows), 0)) if rows else a.reshape(0, 0)
        return a

    def zeros(self, m, n):
        if self.p:
            return np.zeros((m, n), dtype=np.int64)
        a = np.empty((m, n), dtype=object)
        a[:] = Fraction(0)
        return a

    def eye(self, n):
        a = self.zeros(n, n)
        for i in range(n):
            a[i, i] = 1 if self.p else Fraction(1)
        return a

    def reduce(self, a):
        return np.mod(a, self.p) if self.p else a

    def matmul(self, a, b):
        c = a @ b
        return np.mod(c, self.p) if self.p else c

    # -- elimination -----------------------------------------------------

    def rref(self, a):
        """Reduced row echelon form.  Returns (R, pivot_columns).

        R has its zero rows dropped, so R is the canonical basis matrix of
        the row space.
        """
        a = a.copy()
        m, n = a.shape
        pivots = []
        r = 0
        for c in range(n):
            if r == m:
                break
            col = a[r:, c]
            nz = np.nonzero(col)[0] if self.p else np.nonzero(col != 0)[0]
            if len(nz) == 0:
                continue
            k = r + int(nz[0])
            if k != r:
                a[[r, k]] = a[[k, r]]
            inv = self.inv_scalar(a[r, c])
            a[r] = self.reduce(a[r] * inv)
            rest = a[:, c].copy()
            rest[r] = 0 if self.p else Fraction(0)
            a = self.reduce(a - np.outer(rest, a[r]))
            pivots.append(c)
            r += 1
        return a[:r], pivots

    def rank(self, a):
        if a.shape[0] == 0 or a.shape[1] == 0:
            return 0
        return len(self.rref(a)[1])

    def nullspace(self, a):
        """Basis (as rows) of the right kernel {x : a @ x = 0}."""
        m, n = a.shape
        if n == 0:
            return self.zeros(0, 0)
        if m == 0:
            return self.eye(n)
        r, pivots = self.rref(a)
        free = [j for j in range(n) if j not in pivots]
        basis = self.zeros(len(free), n)
        for bi, j in enumerate(free):
            basis[bi, j] = 1 if self.p else Fraction(1)
            for ri, pj in enumerate(pivots):
                basis[bi, pj] = self.neg(r[ri, j])
        return basis

    def solve(self, a, b):
        """One solution x of a @ x = b, or None if inconsistent.

        b may be a vector or a matrix of stacked right-hand-side columns;
        the solution has matching shape.
        """
        vec = b.ndim == 1
        bm = b.reshape(-1, 1) if vec else b
        m, n = a.shape
        aug = np.concatenate([a, bm], axis=1)
        r, pivots = self.rref(aug)
        k = bm.shape[1]
        x = self.zeros(n, k)
        for ri, pj in enumerate(pivots):
            if pj >= n:
                return None  # pivot in the rhs block: inconsistent
            x[pj, :] = r[ri, n:]
        return x[:, 0] if vec else x

    def inverse(self, a):
        n = a.shape[0]
        if a.shape[1] != n:
            raise FieldError("only square matrices invert")
        r, pivots = self.rref(np.concatenate([a, self.eye(n)], axis=1))
        if pivots != list(range(n)):
            return None
        return r[:, n:]

    def is_invertible(self, a):
        return a.shape[0] == a.shape[1] and self.rank(a) == a.shape[0]

    def random_matrix(self, rng, m, n):
        if self.p:
            return np.array(rng.integers(0, self.p, size=(m, n)), dtype=np.int64)
        a = np.empty((m, n), dtype=object)
        vals = rng.integers(-9, 10, size=(m, n))
        for i in range(m):
            for j in range(n):
                a[i, j] = Fraction(int(vals[i, j]))
        return a

    def random_invertible(self, rng, n, attempts=64):
        for _ in range(attempts):
            a = self.random_matrix(rng, n, n)
            if self.is_invertible(a):
                return a
        raise FieldError("failed to sample an invertible %dx%d matrix" % (n, n))


class Subspace:
    """A subspace of an ambient coordinate space, in canonical RREF form.

    Equality of subspaces is literal equality of the canonical basis
    matrices, which is what lets every "two routes, one answer" test in this
    package compare subspaces with ==.
    """

    __slots__ = ("field", "dim_ambient", "basis")

    def __init__(self, field, dim_ambient, basis=None):
        self.field = field
        self.dim_ambient = dim_ambient
        if basis is None or basis.shape[0] == 0:
            self.basis = field.zeros(0, dim_ambient)
        else:
            assert basis.shape[1] == dim_ambient, (basis.shape, dim_ambient)
            self.basis = field.rref(basis)[0]

    # construction helpers

    @classmethod
    def zero(cls, field, n):
        return cls(field, n)

    @classmethod
    def full(cls, field, n):
        return cls(field, n, field.eye(n))

    @classmethod
    def span(cls, field, vectors):
        a = field.asarray(vectors)
        return cls(field, a.shape[1], a)

    # basic queries

    @property
    def dim(self):
        return self.basis.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, Subspace)
            and self.dim_ambient == other.dim_ambient
            and self.basis.shape == other.basis.shape
            and bool(np.all(self.basis == other.basis))
        )

    def __hash__(self):
        return hash((self.dim_ambient, self.basis.tobytes() if self.field.p else str(self.basis)))

    def __repr__(self):
        return "Subspace(dim %d of %d)" % (self.dim, self.dim_ambient)

    def is_zero(self):
        return self.dim == 0

    def contains_vector(self, v):
        if self.dim == 0:
            return not np.any(v != 0)
        aug = np.concatenate([self.basis, v.reshape(1, -1)], axis=0)
        return self.field.rank(aug) == self.dim

    def contains(self, other):
        if other.dim == 0:
            return True
        aug = np.concatenate([self.basis, other.basis], axis=0)
        return self.field.rank(aug) == self.dim

    # lattice operations

    def add(self, other):
        assert self.dim_ambient == other.dim_ambient
        if self.dim == 0:
            return other
        if other.dim == 0:
            return self
        return Subspace(self.field, self.dim_ambient,
                        np.concatenate([self.basis, other.basis], axis=0))

    def intersect(self, other):
        """Zassenhaus: rref of [[A|A],[B|0]]; rows with zero left half carry
        the intersection in their right half."""
        assert self.dim_ambient == other.dim_ambient
        n = self.dim_ambient
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.field, n)
        f = self.field
        top = np.concatenate([self.basis, self.basis], axis=1)
        bot = np.concatenate([other.basis, f.zeros(other.dim, n)], axis=1)
        r, pivots = f.rref(np.concatenate([top, bot], axis=0))
        rows = [i for i in range(r.shape[0]) if not np.any(r[i, :n] != 0)]
        if not rows:
            return Subspace.zero(f, n)
        return Subspace(f, n, r[rows, n:])

    def image(self, mat):
        """Image of this subspace under x -> mat @ x (mat maps ambient to a
        possibly different ambient)."""
        f = self.field
        m_out = mat.shape[0]
        if self.dim == 0:
            return Subspace.zero(f, m_out)
        return Subspace(f, m_out, f.matmul(self.basis, mat.T))

    def preimage(self, mat):
        """{x : mat @ x ∈ self}; mat maps the preimage ambient into ours."""
        f = self.field
        n_in = mat.shape[1]
        constraints = f.nullspace(self.basis) if self.dim else f.eye(self.dim_ambient)
        if constraints.shape[0] == 0:
            return Subspace.full(f, n_in)
        return Subspace(f, n_in, f.nullspace(f.matmul(constraints, mat)))

    def complement_in(self, bigger):
        """Vectors of `bigger` extending a basis of self to one of bigger.

        Returned as a list of row vectors (not a Subspace: a complement is a
        choice, not canonical).
        """
        assert bigger.contains(self)
        f = self.field
        chosen = []
        cur = self.basis
        rank = self.dim
        for row in bigger.basis:
            cand = np.concatenate([cur, row.reshape(1, -1)], axis=0)
            if f.rank(cand) > rank:
                cur = cand
                rank += 1
                chosen.append(row)
        assert rank == bigger.dim
        return chosen

    def coordinates(self, v):
        """Coefficients of v in this subspace's canonical basis, or None."""
        if self.dim == 0:
            return None if np.any(v != 0) else self.field.zeros(0, 0).reshape(0)
        return self.field.solve(self.basis.T, v)
