"""Gentle presentations: quiver, quadratic monomial relations, path calculus.

Conventions used throughout the package:

* products compose right to left: ``b*a`` means "b after a", so a path is
  written (and stored) last-arrow-first.  For a path p the *first* arrow
  f(p) is p.arrows[-1] and the *last* arrow l(p) is p.arrows[0];
  t(p) is the tail of f(p) and h(p) the head of l(p).
* a relation is an ordered pair (last, first): the length-2 product
  last∘first is declared zero.

A presentation is *gentle* when every vertex meets at most two arrow heads
and two arrow tails, and every arrow has at most one allowed and at most one
forbidden continuation on each side.  Those axioms make allowed paths line
up into disjoint chains, which is what `enumerate_paths` exploits.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fields import FieldSpec

__all__ = [
    "Arrow",
    "Path",
    "GentlePresentation",
    "PresentationError",
    "NotGentleError",
    "InfiniteDimensionalError",
    "parse_path_token",
    "format_path",
]


class PresentationError(ValueError):
    """Malformed presentation text or structurally invalid data."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class NotGentleError(ValueError):
    """The presentation violates a gentle axiom."""


class InfiniteDimensionalError(ValueError):
    """The allowed paths contain a cycle, so the algebra has no finite basis."""


@dataclass(frozen=True)
class Arrow:
    name: str
    tail: str
    head: str

    def __repr__(self):
        return "%s:%s->%s" % (self.name, self.tail, self.head)


@dataclass(frozen=True)
class Path:
    """A basis path of the algebra.  arrows is last-to-first; () is a
    trivial path at the vertex tail == head."""

    arrows: tuple
    tail: str
    head: str

    def __len__(self):
        return len(self.arrows)

    @property
    def is_trivial(self):
        return not self.arrows

    @property
    def first_arrow(self):
        return self.arrows[-1]

    @property
    def last_arrow(self):
        return self.arrows[0]

    def __repr__(self):
        if self.is_trivial:
            return "e_%s" % self.tail
        return format_path(self.arrows)


def format_path(arrow_names):
    """Render a last-to-first arrow name sequence; dots only when some name
    has more than one character."""
    if any(len(a) != 1 for a in arrow_names):
        return ".".join(arrow_names)
    return "".join(arrow_names)


def parse_path_token(token):
    """Inverse of format_path: 'yf' -> ('y','f'); 'al.be' -> ('al','be')."""
    if not token:
        raise PresentationError("empty path token")
    if "." in token:
        parts = tuple(token.split("."))
        if any(not p for p in parts):
            raise PresentationError("empty arrow name in %r" % token)
        return parts
    return tuple(token)


class GentlePresentation:
    """A quiver with quadratic monomial relations, checked for gentleness.

    The constructor enforces structural sanity (names resolve, relations
    compose); the gentle axioms themselves are reported by `problems()` so a
    caller can collect every violation at once.  All word/complex machinery
    calls `require_gentle()` up front.
    """

    def __init__(self, vertices, arrows, relations, field=None):
        self.field = field if field is not None else FieldSpec(101)
        self.vertices = list(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise PresentationError("duplicate vertex names")
        vset = set(self.vertices)
        self.arrows = {}
        for a in arrows:
            if a.name in self.arrows:
                raise PresentationError("duplicate arrow name %r" % a.name)
            if a.name in vset:
                raise PresentationError("name %r used for both a vertex and an arrow" % a.name)
            if a.tail not in vset or a.head not in vset:
                raise PresentationError("arrow %r has unknown endpoint" % a.name)
            self.arrows[a.name] = a
        self.relations = set()
        for last, first in relations:
            if last not in self.arrows or first not in self.arrows:
                raise PresentationError("relation (%s, %s) names an unknown arrow" % (last, first))
            if self.arrows[first].head != self.arrows[last].tail:
                raise PresentationError(
                    "relation (%s, %s) is not a composable pair" % (last, first))
            self.relations.add((last, first))
        self._outgoing = {v: [] for v in self.vertices}
        self._incoming = {v: [] for v in self.vertices}
        for a in self.arrows.values():
            self._outgoing[a.tail].append(a.name)
            self._incoming[a.head].append(a.name)
        for v in self.vertices:
            self._outgoing[v].sort()
            self._incoming[v].sort()
        self._paths = None

    # -- quiver queries ----------------------------------------------------

    def outgoing(self, v):
        return list(self._outgoing[v])

    def incoming(self, v):
        return list(self._incoming[v])

    def arrow(self, name):
        try:
            return self.arrows[name]
        except KeyError:
            raise PresentationError("unknown arrow %r" % name) from None

    def is_relation(self, last, first):
        return (last, first) in self.relations

    def seam_allowed(self, last, first):
        """Is the length-2 product last∘first a nonzero path?"""
        al, af = self.arrows[last], self.arrows[first]
        return af.head == al.tail and (last, first) not in self.relations

    def allowed_successor(self, name):
        """The unique arrow g with g∘name nonzero, if any."""
        a = self.arrows[name]
        out = [c for c in self._outgoing[a.head] if (c, name) not in self.relations]
        assert len(out) <= 1, "not gentle at arrow %s" % name
        return out[0] if out else None

    def allowed_predecessor(self, name):
        a = self.arrows[name]
        inc = [c for c in self._incoming[a.tail] if (name, c) not in self.relations]
        assert len(inc) <= 1, "not gentle at arrow %s" % name
        return inc[0] if inc else None

    def forbidden_successor(self, name):
        """The unique arrow g with g∘name declared zero, if any."""
        a = self.arrows[name]
        out = [c for c in self._outgoing[a.head] if (c, name) in self.relations]
        assert len(out) <= 1
        return out[0] if out else None

    def forbidden_predecessor(self, name):
        a = self.arrows[name]
        inc = [c for c in self._incoming[a.tail] if (name, c) in self.relations]
        assert len(inc) <= 1
        return inc[0] if inc else None

    # -- gentleness --------------------------------------------------------

    def problems(self):
        """All gentle-axiom violations, as human-readable strings."""
        out = []
        for v in self.vertices:
            if len(self._outgoing[v]) > 2:
                out.append("vertex %s has %d outgoing arrows (max 2)" % (v, len(self._outgoing[v])))
            if len(self._incoming[v]) > 2:
                out.append("vertex %s has %d incoming arrows (max 2)" % (v, len(self._incoming[v])))
        for name, a in sorted(self.arrows.items()):
            succ_ok = [c for c in self._outgoing[a.head] if (c, name) not in self.relations]
            succ_bad = [c for c in self._outgoing[a.head] if (c, name) in self.relations]
            pred_ok = [c for c in self._incoming[a.tail] if (name, c) not in self.relations]
            pred_bad = [c for c in self._incoming[a.tail] if (name, c) in self.relations]
            if len(succ_ok) > 1:
                out.append("arrow %s has two allowed continuations: %s" % (name, ", ".join(succ_ok)))
            if len(succ_bad) > 1:
                out.append("arrow %s has two forbidden continuations: %s" % (name, ", ".join(succ_bad)))
            if len(pred_ok) > 1:
                out.append("arrow %s allows two predecessors: %s" % (name, ", ".join(pred_ok)))
            if len(pred_bad) > 1:
                out.append("arrow %s forbids two predecessors: %s" % (name, ", ".join(pred_bad)))
        return out

    def is_gentle(self):
        return not self.problems()

    def require_gentle(self):
        probs = self.problems()
        if probs:
            raise NotGentleError("; ".join(probs))

    # -- path calculus -------------------------------------------------------

    def trivial_path(self, v):
        if v not in self._outgoing:
            raise PresentationError("unknown vertex %r" % v)
        return Path((), v, v)

    def path(self, arrow_names):
        """Build a Path from last-to-first arrow names; None if the product
        is zero (a seam lies in the relations) or not composable."""
        names = tuple(arrow_names)
        if not names:
            raise PresentationError("path() needs at least one arrow; use trivial_path")
        arrs = [self.arrow(n) for n in names]
        for left, right in zip(names, names[1:]):
            # tuple order is last-to-first: `left` is applied after `right`
            if self.arrows[right].head != self.arrows[left].tail:
                return None
            if (left, right) in self.relations:
                return None
        return Path(names, arrs[-1].tail, arrs[0].head)

    def multiply(self, p, q):
        """p∘q (q applied first); None when the product is zero."""
        if p.is_trivial:
            return q if q.head == p.tail else None
        if q.is_trivial:
            return p if p.tail == q.head else None
        if q.head != p.tail:
            return None
        if (p.first_arrow, q.last_arrow) in self.relations:
            return None
        return Path(p.arrows + q.arrows, q.tail, p.head)

    def enumerate_paths(self):
        """All nontrivial nonzero paths, sorted by (length, arrow names).

        Gentleness chains every arrow to at most one allowed successor, so
        the nonzero paths are exactly the contiguous runs of those chains.
        A revisited arrow means an allowed cycle, i.e. no finite basis.
        """
        if self._paths is not None:
            return self._paths
        self.require_gentle()
        paths = []
        starts = [n for n in self.arrows if self.allowed_predecessor(n) is None]
        chained = set()
        for start in sorted(starts):
            chain = [start]
            seen = {start}
            cur = start
            while True:
                nxt = self.allowed_successor(cur)
                if nxt is None:
                    break
                if nxt in seen:
                    raise InfiniteDimensionalError(
                        "allowed cycle through arrow %r" % nxt)
                chain.append(nxt)
                seen.add(nxt)
                cur = nxt
            chained.update(chain)
            # chain is in application order; a run chain[i..j] is the path
            # with tuple reversed(chain[i..j])
            for i in range(len(chain)):
                for j in range(i, len(chain)):
                    names = tuple(reversed(chain[i:j + 1]))
                    p = self.path(names)
                    assert p is not None
                    paths.append(p)
        if len(chained) != len(self.arrows):
            # some arrow had an allowed predecessor on a cycle
            raise InfiniteDimensionalError(
                "allowed cycle through arrows %s" % ", ".join(sorted(set(self.arrows) - chained)))
        paths.sort(key=lambda p: (len(p.arrows), p.arrows))
        self._paths = paths
        return paths

    def dimension(self):
        return len(self.vertices) + len(self.enumerate_paths())

    def projective_basis(self, v):
        """Basis of the projective at v: the trivial path plus every nonzero
        path starting there (t(p) = v)."""
        return [self.trivial_path(v)] + [p for p in self.enumerate_paths() if p.tail == v]

    def paths_ending_at(self, v):
        return [p for p in self.enumerate_paths() if p.head == v]

    # -- text format ---------------------------------------------------------

    @classmethod
    def from_text(cls, text):
        """Parse the presentation format::

            # comment
            field p 101          (or: field Q)
            vertex 0
            arrow x 0 0          arrow <name> <tail> <head>
            rel x x              rel <last> <first>  --  last∘first = 0
        """
        field = None
        vertices, arrows, relations = [], [], []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            kind, args = parts[0], parts[1:]
            if kind == "field":
                if field is not None:
                    raise PresentationError("duplicate field line", lineno)
                if args == ["Q"]:
                    field = FieldSpec(0)
                elif len(args) == 2 and args[0] == "p":
                    try:
                        field = FieldSpec(int(args[1]))
                    except ValueError as exc:
                        raise PresentationError(str(exc), lineno) from None
                else:
                    raise PresentationError("expected 'field p <prime>' or 'field Q'", lineno)
            elif kind == "vertex":
                if len(args) != 1:
                    raise PresentationError("expected 'vertex <name>'", lineno)
                vertices.append(args[0])
            elif kind == "arrow":
                if len(args) != 3:
                    raise PresentationError("expected 'arrow <name> <tail> <head>'", lineno)
                arrows.append(Arrow(args[0], args[1], args[2]))
            elif kind == "rel":
                if len(args) != 2:
                    raise PresentationError("expected 'rel <last> <first>'", lineno)
                relations.append((args[0], args[1]))
            else:
                raise PresentationError("unknown directive %r" % kind, lineno)
        try:
            return cls(vertices, arrows, relations, field=field)
        except PresentationError as exc:
            raise PresentationError("invalid presentation: %s" % exc) from None

    @classmethod
    def from_file(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self):
        lines = ["field %s" % ("Q" if self.field.p == 0 else "p %d" % self.field.p)]
        lines += ["vertex %s" % v for v in self.vertices]
        lines += ["arrow %s %s %s" % (a.name, a.tail, a.head)
                  for _, a in sorted(self.arrows.items())]
        lines += ["rel %s %s" % r for r in sorted(self.relations)]
        return "\n".join(lines) + "\n"
