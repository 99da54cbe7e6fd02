"""Walks on a gentle presentation: letters, words, signs, completions.

A *letter* is a nonzero path or its formal inverse.  Reading a word left to
right, letter i connects position i-1 to position i; a direct letter [p]
runs from t(p) (at position i-1) down to h(p), an inverse letter [p^-1] the
other way.  Adjacent letters must meet at a common vertex and satisfy the
junction rules (`junction_ok`), which in particular force consecutive
direct letters to multiply to zero across the seam.

Words come in five shapes: trivial 1_{v,s}, finite, right-infinite,
left-infinite, and two-sided.  An infinite side repeats a block of letters,
subject only to the junction rules (wrap and seam included).  Compact words
are the special ones whose tails consist of single-arrow letters of uniform
orientation (direct on the left, inverse on the right); completion tails
always have that shape, but general infinite words need not, and the
one-sided evaluation functors accept all of them.

Each end of a word carries a state (vertex, sign) computed from a global
sign table on arrow symbols; two words compose exactly when the right state
of the first matches the left state of the second with opposite sign.  The
one-letter extensions available at a state are what make the completion
machines deterministic and their tails eventually periodic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .presentation import (
    GentlePresentation,
    Path,
    PresentationError,
    format_path,
    parse_path_token,
)

__all__ = [
    "Letter",
    "Word",
    "WordError",
    "SignTable",
    "WordContext",
    "HomotopyWord",
    "Completion",
    "junction_ok",
    "iter_finite_letter_tuples",
]


class WordError(ValueError):
    pass


@dataclass(frozen=True)
class Letter:
    """A direct or inverse nonzero path.  head is the vertex on the left
    (position i-1), tail the vertex on the right (position i)."""

    path: Path
    inverse: bool

    def __post_init__(self):
        if self.path.is_trivial:
            raise WordError("letters carry nontrivial paths")

    @property
    def head(self):
        return self.path.head if self.inverse else self.path.tail

    @property
    def tail(self):
        return self.path.tail if self.inverse else self.path.head

    @property
    def degree_step(self):
        """Degree increment of the position to the right of this letter."""
        return 1 if self.inverse else -1

    def flip(self):
        return Letter(self.path, not self.inverse)

    def sort_key(self):
        return (self.inverse, self.path.arrows)

    def serialize(self):
        tok = format_path(self.path.arrows)
        if not self.inverse:
            return "[%s]" % tok
        if len(self.path.arrows) == 1:
            return "[%s^-1]" % tok
        return "[(%s)^-1]" % tok

    def __repr__(self):
        return self.serialize()


def junction_ok(pres, a, b):
    """May letter b follow letter a?  The four clauses, one per orientation
    pair; all of them include t(a) == h(b)."""
    if a.tail != b.head:
        return False
    ga, gb = a.path, b.path
    if not a.inverse and b.inverse:
        # [p][q^-1]: same head, different last arrow
        return ga.head == gb.head and ga.last_arrow != gb.last_arrow
    if a.inverse and b.inverse:
        # [p^-1][q^-1]: first(p) after last(q) must be a relation
        return pres.is_relation(ga.first_arrow, gb.last_arrow)
    if a.inverse and not b.inverse:
        # [p^-1][q]: same tail, different first arrow
        return ga.tail == gb.tail and ga.first_arrow != gb.first_arrow
    # [p][q]: first(q) after last(p) must be a relation
    return pres.is_relation(gb.first_arrow, ga.last_arrow)


class SignTable:
    """The +-1 colouring of arrow symbols.

    Symbols are (arrow, inverse?) with head h(a) for the direct symbol and
    t(a) for the inverse one.  Two distinct symbols at the same head get the
    same sign exactly when they are an inverse/direct pair (a^-1, b) whose
    arrows satisfy the relation a∘b = 0; gentleness makes this colouring
    consistent, which the constructor asserts.  In each head class the
    least symbol (arrow name, direct first) is +1.
    """

    def __init__(self, pres):
        self.pres = pres
        self.table = {}
        by_head = {v: [] for v in pres.vertices}
        for name, a in pres.arrows.items():
            by_head[a.head].append((name, False))
            by_head[a.tail].append((name, True))

        def same_sign(s1, s2):
            (a1, i1), (a2, i2) = s1, s2
            if i1 == i2:
                return False
            inv, dire = (a1, a2) if i1 else (a2, a1)
            return pres.is_relation(inv, dire)

        for v, syms in by_head.items():
            syms.sort()
            if not syms:
                continue
            least = syms[0]
            self.table[least] = 1
            for s in syms[1:]:
                self.table[s] = 1 if same_sign(least, s) else -1
            for i, s1 in enumerate(syms):
                for s2 in syms[i + 1:]:
                    want = self.table[s1] == self.table[s2]
                    assert want == same_sign(s1, s2), (
                        "sign colouring inconsistent at vertex %s (%s, %s); "
                        "presentation is not gentle" % (v, s1, s2))

    def symbol(self, arrow_name, inverse):
        return self.table[(arrow_name, inverse)]

    def letter_sign(self, letter):
        if letter.inverse:
            return -self.symbol(letter.path.last_arrow, False)
        return self.symbol(letter.path.first_arrow, True)

    def path_sign(self, path, inverse):
        """Sign of a bare path symbol (used by homotopy words): s(p) is the
        direct symbol of its last arrow, s(p^-1) the inverse symbol of its
        first arrow."""
        if inverse:
            return self.symbol(path.first_arrow, True)
        return self.symbol(path.last_arrow, False)


def _rot_left(block):
    return block[1:] + (block[0],)


def _rot_right(block):
    return (block[-1],) + block[:-1]


def _primitive(block):
    n = len(block)
    for d in range(1, n + 1):
        if n % d == 0 and block == block[:d] * (n // d):
            return block[:d]
    return block


class Word:
    """An immutable generalized word over a gentle presentation.

    kind is one of 'trivial', 'finite', 'right_inf', 'left_inf',
    'two_sided'.  Letters occupy integer indices:

    * finite: 1..m           (positions 0..m)
    * right_inf: 1..inf      core then right block tiling
    * left_inf: ..-1, 0      core right-aligned at 0, block tiling below
    * two_sided: all of Z    core at core_start..core_start+m-1, left block
      tiling below, right block above.  A two-sided word with empty core
      and equal blocks is a periodic word (normalised so letter 1 is
      block[0]).
    """

    __slots__ = ("pres", "kind", "vertex", "sign", "core",
                 "left_block", "right_block", "core_start")

    def __init__(self, pres, kind, vertex=None, sign=None, core=(),
                 left_block=None, right_block=None, core_start=1,
                 validate=True):
        self.pres = pres
        self.kind = kind
        self.vertex = vertex
        self.sign = sign
        self.core = tuple(core)
        self.left_block = tuple(left_block) if left_block else None
        self.right_block = tuple(right_block) if right_block else None
        self.core_start = core_start
        self._normalize()
        if validate:
            probs = self.problems()
            if probs:
                raise WordError("; ".join(probs))

    # -- constructors ------------------------------------------------------

    @classmethod
    def trivial(cls, pres, vertex, sign):
        if sign not in (1, -1):
            raise WordError("trivial word sign must be +1 or -1")
        if vertex not in pres.vertices:
            raise WordError("unknown vertex %r" % vertex)
        return cls(pres, "trivial", vertex=vertex, sign=sign)

    @classmethod
    def finite(cls, pres, letters):
        if not letters:
            raise WordError("finite words need at least one letter; use trivial")
        return cls(pres, "finite", core=letters)

    @classmethod
    def right_infinite(cls, pres, core, block):
        return cls(pres, "right_inf", core=core, right_block=block)

    @classmethod
    def left_infinite(cls, pres, block, core):
        return cls(pres, "left_inf", core=core, left_block=block)

    @classmethod
    def two_sided(cls, pres, left_block, core, right_block, core_start=1):
        return cls(pres, "two_sided", core=core, left_block=left_block,
                   right_block=right_block, core_start=core_start)

    @classmethod
    def periodic(cls, pres, block):
        return cls(pres, "two_sided", core=(), left_block=block,
                   right_block=block, core_start=1)

    # -- normal form -------------------------------------------------------

    def _normalize(self):
        core = list(self.core)
        if self.kind == "right_inf" and self.right_block:
            blk = self.right_block
            while core and core[-1] == blk[-1]:
                core.pop()
                blk = _rot_right(blk)
            self.right_block = _primitive(blk)
        elif self.kind == "left_inf" and self.left_block:
            blk = self.left_block
            while core and core[0] == blk[0]:
                core.pop(0)
                blk = _rot_left(blk)
            self.left_block = _primitive(blk)
        elif self.kind == "two_sided":
            lb, rb, cs = self.left_block, self.right_block, self.core_start
            while core and core[0] == lb[0]:
                core.pop(0)
                lb = _rot_left(lb)
                cs += 1
            while core and core[-1] == rb[-1]:
                core.pop()
                rb = _rot_right(rb)
            lb, rb = _primitive(lb), _primitive(rb)
            if not core and tuple(rb) == tuple(lb):
                # fully periodic: rotate so that core_start is 1, i.e.
                # new_block[(i-1) mod p] == old_block[(i-cs) mod p]
                p = len(lb)
                shift = (1 - cs) % p
                if shift:
                    lb = lb[shift:] + lb[:shift]
                rb = lb
                cs = 1
            self.left_block, self.right_block, self.core_start = lb, rb, cs
        self.core = tuple(core)

    # -- validation --------------------------------------------------------

    def problems(self):
        out = []
        p = self.pres
        if self.kind == "trivial":
            return out
        for l in self.core:
            if p.path(l.path.arrows) != l.path:
                out.append("letter %s does not carry a nonzero path" % l.serialize())
        for blk in (self.left_block, self.right_block):
            if blk:
                for l in blk:
                    if p.path(l.path.arrows) != l.path:
                        out.append("tail letter %s does not carry a nonzero path" % l.serialize())
        if out:
            return out
        pairs = []
        core = self.core
        for i in range(len(core) - 1):
            pairs.append((core[i], core[i + 1], "core position %d" % (i + 1)))
        lb, rb = self.left_block, self.right_block
        periodic = (self.kind == "two_sided" and not core and lb == rb)
        if lb:
            for i in range(len(lb) - 1):
                pairs.append((lb[i], lb[i + 1], "left tail"))
            pairs.append((lb[-1], lb[0], "left tail wrap"))
            if core:
                pairs.append((lb[-1], core[0], "left seam"))
        if rb:
            for i in range(len(rb) - 1):
                pairs.append((rb[i], rb[i + 1], "right tail"))
            pairs.append((rb[-1], rb[0], "right tail wrap"))
            if core:
                pairs.append((core[-1], rb[0], "right seam"))
        if self.kind == "two_sided" and not core and not periodic:
            pairs.append((lb[-1], rb[0], "tail seam"))
        for a, b, where in pairs:
            if not junction_ok(p, a, b):
                out.append("invalid junction %s%s at %s" % (a.serialize(), b.serialize(), where))
        return out

    # -- indexing ----------------------------------------------------------

    @property
    def length(self):
        """Number of letters for trivial/finite words, None when infinite."""
        if self.kind == "trivial":
            return 0
        if self.kind == "finite":
            return len(self.core)
        return None

    def letter_index_range(self, lo, hi):
        """Indices i in [lo, hi] that carry a letter."""
        first, last = self._letter_bounds()
        lo = lo if first is None else max(lo, first)
        hi = hi if last is None else min(hi, last)
        return range(lo, hi + 1)

    def _letter_bounds(self):
        # (first letter index or None if -inf, last or None if +inf)
        if self.kind == "trivial":
            return (1, 0)
        if self.kind == "finite":
            return (1, len(self.core))
        if self.kind == "right_inf":
            return (1, None)
        if self.kind == "left_inf":
            return (None, 0)
        return (None, None)

    def letter_at(self, i):
        if self.kind == "trivial":
            return None
        if self.kind == "finite":
            return self.core[i - 1] if 1 <= i <= len(self.core) else None
        if self.kind == "right_inf":
            if i < 1:
                return None
            k = len(self.core)
            if i <= k:
                return self.core[i - 1]
            return self.right_block[(i - k - 1) % len(self.right_block)]
        if self.kind == "left_inf":
            if i > 0:
                return None
            k = len(self.core)
            if i > -k:
                return self.core[i + k - 1]
            return self.left_block[(i + k - 1) % len(self.left_block)]
        cs, m = self.core_start, len(self.core)
        if i < cs:
            return self.left_block[(i - cs) % len(self.left_block)]
        if i < cs + m:
            return self.core[i - cs]
        return self.right_block[(i - cs - m) % len(self.right_block)]

    def has_position(self, i):
        if self.kind in ("trivial", "finite"):
            return 0 <= i <= (0 if self.kind == "trivial" else len(self.core))
        if self.kind == "right_inf":
            return i >= 0
        if self.kind == "left_inf":
            return i <= 0
        return True

    def vertex_at(self, i):
        if not self.has_position(i):
            raise WordError("no position %d in this word" % i)
        if self.kind == "trivial":
            return self.vertex
        l = self.letter_at(i)
        if l is not None:
            return l.tail
        r = self.letter_at(i + 1)
        assert r is not None
        return r.head

    def mu(self, i):
        """Cohomological degree of position i (mu(0) = 0)."""
        if not self.has_position(i):
            raise WordError("no position %d in this word" % i)
        if i == 0:
            return 0
        if i > 0:
            return self._mu_sum(1, i)
        return -self._mu_sum(i + 1, 0)

    def _mu_sum(self, a, b):
        # sum of degree_step over letters a..b inclusive, with block shortcuts
        total = 0
        i = a
        while i <= b:
            blk_info = self._block_at(i)
            if blk_info is None:
                total += self.letter_at(i).degree_step
                i += 1
                continue
            blk, blk_end = blk_info
            span = (b if blk_end is None else min(b, blk_end)) - i + 1
            full, rem = divmod(span, len(blk))
            if full:
                total += full * sum(l.degree_step for l in blk)
            for j in range(rem):
                total += self.letter_at(i + full * len(blk) + j).degree_step
            i += span
        return total

    def _block_at(self, i):
        """If index i lies in a tail block region, return (block, last index
        of the region or None); else None."""
        if self.kind == "right_inf":
            if i > len(self.core):
                return (self.right_block, None)
        elif self.kind == "left_inf":
            if i <= -len(self.core):
                return (self.left_block, -len(self.core))
        elif self.kind == "two_sided":
            if i < self.core_start:
                return (self.left_block, self.core_start - 1)
            if i >= self.core_start + len(self.core):
                return (self.right_block, None)
        return None

    def is_periodic(self):
        return (self.kind == "two_sided" and not self.core
                and self.left_block == self.right_block)

    @property
    def period(self):
        if not self.is_periodic():
            raise WordError("not a periodic two-sided word")
        return len(self.right_block)

    # -- ends and signs ------------------------------------------------------

    def _signs(self):
        return _context(self.pres).signs

    def left_state(self):
        """(vertex, sign) of the left end; raises when left-infinite."""
        if self.kind in ("left_inf", "two_sided"):
            raise WordError("word has no left end")
        if self.kind == "trivial":
            return (self.vertex, self.sign)
        first = self.letter_at(1)
        return (first.head, self._signs().letter_sign(first))

    def right_state(self):
        if self.kind in ("right_inf", "two_sided"):
            raise WordError("word has no right end")
        if self.kind == "trivial":
            return (self.vertex, -self.sign)
        last = self.letter_at(self._letter_bounds()[1]).flip()
        return (last.head, self._signs().letter_sign(last))

    def head(self):
        return self.left_state()[0]

    def head_sign(self):
        return self.left_state()[1]

    # -- operations ----------------------------------------------------------

    def invert(self):
        if self.kind == "trivial":
            return Word.trivial(self.pres, self.vertex, -self.sign)
        rev = tuple(l.flip() for l in reversed(self.core))
        if self.kind == "finite":
            return Word.finite(self.pres, rev)
        if self.kind == "right_inf":
            blk = tuple(l.flip() for l in reversed(self.right_block))
            return Word.left_infinite(self.pres, blk, rev)
        if self.kind == "left_inf":
            blk = tuple(l.flip() for l in reversed(self.left_block))
            return Word.right_infinite(self.pres, rev, blk)
        lb = tuple(l.flip() for l in reversed(self.right_block))
        rb = tuple(l.flip() for l in reversed(self.left_block))
        cs = 2 - self.core_start - len(self.core)
        return Word.two_sided(self.pres, lb, rev, rb, core_start=cs)

    def shift(self, t):
        """Relabel: shift(C, t) has letter i equal to C's letter i+t.  Only
        two-sided words shift; t=0 is the identity elsewhere."""
        if t == 0:
            return self
        if self.kind != "two_sided":
            raise WordError("only two-sided words can be shifted")
        return Word.two_sided(self.pres, self.left_block, self.core,
                              self.right_block, core_start=self.core_start - t)

    def compose(self, other):
        """Juxtaposition self·other; None when the ends do not match."""
        if self.kind in ("right_inf", "two_sided"):
            raise WordError("left factor must have a right end")
        if other.kind in ("left_inf", "two_sided"):
            raise WordError("right factor must have a left end")
        u, eps = self.right_state()
        v, delta = other.left_state()
        if u != v or eps != -delta:
            return None
        if self.kind == "trivial":
            return other
        if other.kind == "trivial":
            return self
        assert junction_ok(self.pres, self.letter_at(self._letter_bounds()[1]),
                           other.letter_at(1))
        if self.kind == "finite" and other.kind == "finite":
            return Word.finite(self.pres, self.core + other.core)
        if self.kind == "finite" and other.kind == "right_inf":
            return Word.right_infinite(self.pres, self.core + other.core,
                                       other.right_block)
        if self.kind == "left_inf" and other.kind == "finite":
            return Word.left_infinite(self.pres, self.left_block,
                                      self.core + other.core)
        # left_inf · right_inf
        return Word.two_sided(self.pres, self.left_block,
                              self.core + other.core, other.right_block,
                              core_start=1 - len(self.core))

    # -- equality ------------------------------------------------------------

    def _key(self):
        return (self.kind, self.vertex, self.sign, self.core,
                self.left_block, self.right_block,
                self.core_start if self.kind == "two_sided" else None)

    def __eq__(self, other):
        return isinstance(other, Word) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return self.serialize()

    # -- text ------------------------------------------------------------------

    def serialize(self):
        if self.kind == "trivial":
            return "1_{%s,%s}" % (self.vertex, "+1" if self.sign == 1 else "-1")
        if self.kind == "finite":
            return "".join(l.serialize() for l in self.core)
        if self.kind == "right_inf":
            return ("".join(l.serialize() for l in self.core)
                    + "(" + "".join(l.serialize() for l in self.right_block) + ")inf")
        if self.kind == "left_inf":
            return ("inf(" + "".join(l.serialize() for l in self.left_block) + ")"
                    + "".join(l.serialize() for l in self.core))
        if self.is_periodic() and self.core_start == 1:
            return "inf(" + "".join(l.serialize() for l in self.right_block) + ")inf"
        # materialise the core out to the 0|1 boundary so the anchor is visible
        cs, m = self.core_start, len(self.core)
        lo, hi = min(cs, 1), max(cs + m - 1, 0)
        letters = [self.letter_at(i) for i in range(lo, hi + 1)]
        lb = tuple(self.letter_at(lo - 1 - j) for j in range(len(self.left_block)))
        lb = tuple(reversed(lb))
        rb = tuple(self.letter_at(hi + 1 + j) for j in range(len(self.right_block)))
        before = "".join(l.serialize() for l in letters[:1 - lo])
        after = "".join(l.serialize() for l in letters[1 - lo:])
        return ("inf(" + "".join(l.serialize() for l in lb) + ")" + before + ":"
                + after + "(" + "".join(l.serialize() for l in rb) + ")inf")

    @classmethod
    def parse(cls, pres, text):
        return _parse_word(pres, text)


# -- parsing ------------------------------------------------------------------

_TRIVIAL_RE = re.compile(r"^1_\{([A-Za-z0-9_]+),([+-]1)\}$")
_LETTER_RE = re.compile(r"\[([^\[\]]+)\]")
_PATH_TOKEN_RE = re.compile(r"^[A-Za-z0-9_.]+$")


def parse_letter_body(pres, body):
    body = body.strip()
    inverse = False
    if body.endswith("^-1"):
        inverse = True
        body = body[:-3].strip()
        if body.startswith("(") and body.endswith(")"):
            body = body[1:-1].strip()
    if not _PATH_TOKEN_RE.match(body):
        raise WordError("bad path token %r in letter" % body)
    names = parse_path_token(body)
    try:
        path = pres.path(names)
    except PresentationError as exc:
        raise WordError(str(exc)) from None
    if path is None:
        raise WordError("letter path %r is zero or not composable" % body)
    return Letter(path, inverse)


def _parse_letter_run(pres, text, where):
    out = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _LETTER_RE.match(text, pos)
        if not m:
            raise WordError("cannot parse letters at %r in %s" % (text[pos:pos + 20], where))
        out.append(parse_letter_body(pres, m.group(1)))
        pos = m.end()
    return tuple(out)


def _split_tail(text, side):
    """Peel 'inf(...)' off the left or '(...)inf' off the right; returns
    (block_text or None, rest)."""
    if side == "left":
        if not text.startswith("inf("):
            return None, text
        depth, i = 0, 3
        for i in range(3, len(text)):
            if text[i] == "(":
                depth += 1
            elif text[i] == ")":
                depth -= 1
                if depth == 0:
                    return text[4:i], text[i + 1:]
        raise WordError("unbalanced 'inf(' in word")
    if not text.endswith(")inf"):
        return None, text
    depth = 0
    for i in range(len(text) - 4, -1, -1):
        if text[i] == ")":
            depth += 1
        elif text[i] == "(":
            depth -= 1
            if depth == 0:
                return text[i + 1:len(text) - 4], text[:i]
    raise WordError("unbalanced ')inf' in word")


def _parse_word(pres, text):
    text = "".join(text.split())
    if not text:
        raise WordError("empty word text")
    m = _TRIVIAL_RE.match(text)
    if m:
        return Word.trivial(pres, m.group(1), 1 if m.group(2) == "+1" else -1)
    left_text, rest = _split_tail(text, "left")
    if left_text is not None and rest == "inf":
        # fully periodic two-sided word: inf( block )inf
        blk = _parse_letter_run(pres, left_text, "periodic block")
        if not blk:
            raise WordError("empty periodic block")
        return Word.periodic(pres, blk)
    right_text, rest = _split_tail(rest, "right")
    if ":" in rest:
        if rest.count(":") > 1:
            raise WordError("more than one ':' anchor")
        before_text, after_text = rest.split(":")
        before = _parse_letter_run(pres, before_text, "word")
        after = _parse_letter_run(pres, after_text, "word")
        letters = before + after
        core_start = 1 - len(before)
        if left_text is None or right_text is None:
            raise WordError("':' anchor only makes sense in a two-sided word")
    else:
        letters = _parse_letter_run(pres, rest, "word")
        core_start = 1
    left_blk = _parse_letter_run(pres, left_text, "left tail") if left_text is not None else None
    right_blk = _parse_letter_run(pres, right_text, "right tail") if right_text is not None else None
    if left_blk is not None and not left_blk:
        raise WordError("empty left tail block")
    if right_blk is not None and not right_blk:
        raise WordError("empty right tail block")
    if left_blk is None and right_blk is None:
        if not letters:
            raise WordError("empty word text")
        return Word.finite(pres, letters)
    if left_blk is None:
        return Word.right_infinite(pres, letters, right_blk)
    if right_blk is None:
        return Word.left_infinite(pres, left_blk, letters)
    return Word.two_sided(pres, left_blk, letters, right_blk, core_start=core_start)


# -- per-presentation context ---------------------------------------------------

_CONTEXTS = {}


def _context(pres):
    ctx = _CONTEXTS.get(id(pres))
    if ctx is None:
        ctx = WordContext(pres)
        _CONTEXTS[id(pres)] = ctx
    return ctx


class WordContext:
    """Sign table plus letter/extension tables for one presentation."""

    def __init__(self, pres):
        pres.require_gentle()
        self.pres = pres
        self.signs = SignTable(pres)
        self.letters = []
        for path in pres.enumerate_paths():
            self.letters.append(Letter(path, False))
            self.letters.append(Letter(path, True))
        self.letters.sort(key=Letter.sort_key)
        # append_table[(u, eps)]: letters l with head(l) = u, sign(l) = -eps,
        # i.e. the valid one-letter continuations of a word with right state
        # (u, eps), each with the right state of the extended word.
        self.append_table = {}
        for l in self.letters:
            state = (l.head, -self.signs.letter_sign(l))
            flipped = l.flip()
            new_state = (flipped.head, self.signs.letter_sign(flipped))
            self.append_table.setdefault(state, []).append((l, new_state))

    def extensions(self, state):
        return self.append_table.get(state, [])


def context(pres):
    return _context(pres)


def iter_finite_letter_tuples(pres, max_len, seed_letters=None):
    """Yield (letters, right_state) for every valid finite word with at most
    max_len letters, by depth-first extension.  Cheap tuples, no Word
    objects; words of every intermediate length are yielded."""
    ctx = _context(pres)
    signs = ctx.signs
    stack = []
    start = seed_letters if seed_letters is not None else ctx.letters
    for l in start:
        flipped = l.flip()
        stack.append(((l,), (flipped.head, signs.letter_sign(flipped))))
    while stack:
        letters, state = stack.pop()
        yield letters, state
        if len(letters) < max_len:
            for l, new_state in ctx.extensions(state):
                stack.append((letters + (l,), new_state))


# -- completions ------------------------------------------------------------------


@dataclass
class Completion:
    """Result of completing a word on one or both sides.

    left_added/right_added count the letters added on that side before the
    machine either halted or entered a cycle; a nonzero
    left_block_len/right_block_len means the side became infinite with a
    repeating block of that length.  `anchor` is the position index, in the
    completed word, of the original word's position 0 (so the original's
    letter j sits at index anchor + j).
    """

    word: Word
    left_added: int = 0
    right_added: int = 0
    left_block_len: int = 0
    right_block_len: int = 0
    anchor: int = 0

    @property
    def left_infinite(self):
        return self.left_block_len > 0

    @property
    def right_infinite(self):
        return self.right_block_len > 0


def _march(pres, state, step):
    """Iterate a deterministic extension machine from `state`.  Returns
    (letters, block_start) where block_start is None if the machine halted,
    else the index in `letters` where the repeating block begins."""
    seen = {state: 0}
    letters = []
    while True:
        nxt = step(state)
        if nxt is None:
            return letters, None
        letter, state = nxt
        letters.append(letter)
        if state in seen:
            return letters, seen[state]
        seen[state] = len(letters)


def _left_step(pres, signs, orientation):
    def step(state):
        v, delta = state
        if orientation == "direct":
            for name in pres.incoming(v):
                if signs.symbol(name, False) == delta:
                    a = pres.arrows[name]
                    return (Letter(pres.path([name]), False),
                            (a.tail, signs.symbol(name, True)))
        else:
            for name in pres.outgoing(v):
                if signs.symbol(name, True) == -delta:
                    a = pres.arrows[name]
                    return (Letter(pres.path([name]), True),
                            (a.head, -signs.symbol(name, False)))
        return None
    return step


def _right_step(pres, signs, orientation):
    def step(state):
        u, eps = state
        if orientation == "inverse":
            for name in pres.incoming(u):
                if signs.symbol(name, False) == eps:
                    a = pres.arrows[name]
                    return (Letter(pres.path([name]), True),
                            (a.tail, signs.symbol(name, True)))
        else:
            for name in pres.outgoing(u):
                if signs.symbol(name, True) == -eps:
                    a = pres.arrows[name]
                    return (Letter(pres.path([name]), False),
                            (a.head, -signs.symbol(name, False)))
        return None
    return step


def complete(word, left=None, right=None):
    """Extend a trivial or finite word maximally on the requested sides.

    left/right are None, 'direct' or 'inverse': the orientation of the
    single-arrow letters to be added there.  Each side's machine is
    deterministic, so it either halts or cycles into a periodic tail.
    """
    if word.kind not in ("trivial", "finite"):
        raise WordError("only trivial/finite words are completed")
    pres = word.pres
    signs = _context(pres).signs
    result = word
    info = Completion(word)
    if left:
        added, block_start = _march(pres, word.left_state(),
                                    _left_step(pres, signs, left))
        # `added` lists letters outward (first element adjacent to the word)
        if block_start is None:
            if added:
                ext = Word.finite(pres, tuple(reversed(added)))
                result = ext.compose(result)
                assert result is not None
                info.left_added = len(added)
                info.anchor = len(added)
        else:
            blk = tuple(reversed(added[block_start:]))
            coreL = tuple(reversed(added[:block_start]))
            left_word = Word.left_infinite(pres, blk, coreL)
            result = left_word.compose(result)
            assert result is not None
            info.left_block_len = len(blk)
            info.left_added = block_start
            # left-infinite cores are right-aligned at 0
            info.anchor = -len(word.core)
    if right:
        added, block_start = _march(pres, word.right_state(),
                                    _right_step(pres, signs, right))
        if block_start is None:
            if added:
                ext = Word.finite(pres, tuple(added))
                right_part = ext
                info.right_added = len(added)
                if left and info.left_infinite:
                    # grafting onto a left-infinite word re-right-aligns the
                    # core, pushing the original letters leftward
                    info.anchor -= len(added)
            else:
                right_part = None
        else:
            right_part = Word.right_infinite(pres, tuple(added[:block_start]),
                                             tuple(added[block_start:]))
            info.right_block_len = len(added) - block_start
            info.right_added = block_start
        if right_part is not None:
            if left and info.left_infinite:
                result = _graft_right(result, right_part)
            else:
                result = result.compose(right_part)
                assert result is not None
    info.word = result
    return info


def _graft_right(word, right_part):
    """Attach a finite/right-infinite extension to the right end of a
    left-infinite word."""
    assert word.kind == "left_inf"
    if right_part.kind == "finite":
        return Word.left_infinite(word.pres, word.left_block,
                                  word.core + right_part.core)
    return Word.two_sided(word.pres, word.left_block,
                          word.core + right_part.core, right_part.right_block,
                          core_start=1 - len(word.core))


def is_compact(word):
    """A word is compact when its left tail (if any) is direct and its right
    tail (if any) is inverse; the witness is the finite middle (or the
    matching trivial word when the middle is empty).  Returns
    (flag, witness_or_None)."""
    if word.kind == "trivial" or word.kind == "finite":
        return True, word
    pres = word.pres
    if word.is_periodic():
        return False, None
    if word.left_block is not None:
        if any(l.inverse or len(l.path) != 1 for l in word.left_block):
            return False, None
    if word.right_block is not None:
        if any((not l.inverse) or len(l.path) != 1 for l in word.right_block):
            return False, None
    core = word.core
    if core:
        return True, Word.finite(pres, core)
    # empty middle: seam vertex and the sign of the right part
    if word.kind == "left_inf":
        last = word.letter_at(0).flip()
        signs = _context(pres).signs
        return True, Word.trivial(pres, last.head, -signs.letter_sign(last))
    first = word.letter_at(word.core_start if word.kind == "two_sided" else 1)
    signs = _context(pres).signs
    return True, Word.trivial(pres, first.head, signs.letter_sign(first))


# -- homotopy words -----------------------------------------------------------------


_DSYM_RE = re.compile(r"^d_([A-Za-z0-9_.]+?)(\^-1)?$")


class HomotopyWord:
    """The letter-by-letter relation schema attached to a finite word.

    Each letter contributes a pair (l_i^-1, r_i): [p] gives p^-1 d_{l(p)}
    and [p^-1] gives d_{l(p)}^-1 p.  The flat symbol sequence drives both
    evaluation (fold right to left, images for direct symbols, preimages
    for inverses) and the block linear systems of the relation engine.
    """

    def __init__(self, pres, letters):
        self.pres = pres
        self.letters = tuple(letters)
        if not self.letters:
            raise WordError("homotopy words need at least one letter")

    @classmethod
    def from_word(cls, word):
        if word.kind != "finite":
            raise WordError("homotopy words come from finite words")
        return cls(word.pres, word.core)

    def to_word(self):
        return Word.finite(self.pres, self.letters)

    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return isinstance(other, HomotopyWord) and self.letters == other.letters

    def __hash__(self):
        return hash(("homotopy", self.letters))

    def pairs(self):
        """[(left_symbol, right_symbol)] with each symbol one of
        ('path_inv', path) ('d_inv', arrow) ('d', arrow) ('path', path)."""
        out = []
        for l in self.letters:
            last = l.path.last_arrow
            if l.inverse:
                out.append((("d_inv", last), ("path", l.path)))
            else:
                out.append((("path_inv", l.path), ("d", last)))
        return out

    def flat_symbols(self):
        out = []
        for a, b in self.pairs():
            out.append(a)
            out.append(b)
        return out

    def mu(self, i):
        return self.to_word().mu(i)

    def head(self):
        return self.to_word().head()

    def head_sign(self):
        return self.to_word().head_sign()

    def serialize(self):
        toks = []
        for l in self.letters:
            tok = format_path(l.path.arrows)
            last = l.path.last_arrow
            if l.inverse:
                toks.append("d_%s^-1" % last)
                toks.append(tok)
            else:
                toks.append(("(%s)^-1" % tok) if len(l.path.arrows) > 1 else ("%s^-1" % tok))
                toks.append("d_%s" % last)
        return " ".join(toks)

    def __repr__(self):
        return self.serialize()

    @classmethod
    def parse(cls, pres, text):
        toks = text.split()
        if len(toks) % 2:
            raise WordError("homotopy words have an even number of symbols")
        letters = []
        for left, right in zip(toks[0::2], toks[1::2]):
            mdl = _DSYM_RE.match(left)
            if mdl:
                if not mdl.group(2):
                    raise WordError("left symbol of a pair must be inverted: %r" % left)
                path = _parse_bare_path(pres, right, inverted=False)
                if path.last_arrow != mdl.group(1):
                    raise WordError("pair %r %r: differential arrow must be the"
                                    " last arrow of the path" % (left, right))
                letters.append(Letter(path, True))
            else:
                path = _parse_bare_path(pres, left, inverted=True)
                mdr = _DSYM_RE.match(right)
                if not mdr or mdr.group(2):
                    raise WordError("pair %r %r: expected a plain d_<arrow> on"
                                    " the right" % (left, right))
                if path.last_arrow != mdr.group(1):
                    raise WordError("pair %r %r: differential arrow must be the"
                                    " last arrow of the path" % (left, right))
                letters.append(Letter(path, False))
        return cls(pres, letters)


def _parse_bare_path(pres, tok, inverted):
    if inverted:
        if tok.endswith("^-1"):
            tok = tok[:-3]
            if tok.startswith("(") and tok.endswith(")"):
                tok = tok[1:-1]
        else:
            raise WordError("expected an inverted path symbol, got %r" % tok)
    if not _PATH_TOKEN_RE.match(tok):
        raise WordError("bad path token %r" % tok)
    try:
        path = pres.path(parse_path_token(tok))
    except PresentationError as exc:
        raise WordError(str(exc)) from None
    if path is None:
        raise WordError("path %r is zero or not composable" % tok)
    return path
