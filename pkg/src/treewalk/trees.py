"""Infinite trees with a cofinite automorphism action.

Two families are supported:

* Cayley trees of free products of cyclic groups.  Every factor is either
  Z (an infinite-order generator, contributing a letter and its inverse)
  or Z/2Z (an involution, contributing a single letter).  Those are
  exactly the cyclic factors whose natural generators give a tree Cayley
  graph; an order >= 3 factor would create a cycle through the powers of
  its generator.  Vertices are reduced words, the group acts on itself by
  left multiplication, transitively and freely.

* Colored regular trees.  Vertices carry colors from a finite palette and
  the multiset of neighbour colors depends only on the color of the
  vertex.  Vertices are paths from a root; the color-preserving
  automorphism group acts cofinitely with vertex orbits indexed by color.

Vertices are plain tuples so they hash and compare structurally.
"""

from __future__ import annotations

from collections import Counter

from .errors import ModelError

# ---------------------------------------------------------------------------
# Free products
# ---------------------------------------------------------------------------

# A letter is a pair (factor index, sign); order-2 factors only ever use
# sign +1 because their generator is its own inverse.  A vertex (group
# element) is a reduced tuple of letters.

Letter = tuple[int, int]
Word = tuple[Letter, ...]


class FreeProductTree:
    """Cayley tree of a free product of Z and Z/2Z factors."""

    def __init__(self, orders, names=None):
        orders = tuple(orders)
        if not orders:
            raise ModelError("free product needs at least one factor")
        for m in orders:
            if m not in (0, 2):
                raise ModelError(
                    f"cyclic factor of order {m} does not give a tree Cayley "
                    "graph (powers of the generator form a cycle); use order "
                    "2 or 0 (meaning Z)"
                )
        if names is None:
            names = tuple(chr(ord("a") + i) for i in range(len(orders)))
        names = tuple(names)
        if len(names) != len(orders):
            raise ModelError("one generator name per factor required")
        if len(set(names)) != len(names):
            raise ModelError("generator names must be distinct")
        for n in names:
            if not (n and n[0].isalpha() and n.isalnum()):
                raise ModelError(f"invalid generator name: {n!r}")
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                if a.startswith(b) or b.startswith(a):
                    raise ModelError(
                        f"generator names may not be prefixes of each other: {a}, {b}")
        self.orders = orders
        self.names = names
        self.valence = sum(1 if m == 2 else 2 for m in orders)
        if self.valence < 3:
            raise ModelError(
                f"tree valence {self.valence} < 3; add factors (each Z/2Z "
                "contributes one neighbour, each Z two)")
        self.base: Word = ()
        # the symmetric generating set, as letters
        self.letters: list[Letter] = []
        for i, m in enumerate(orders):
            self.letters.append((i, 1))
            if m == 0:
                self.letters.append((i, -1))

    # -- word arithmetic ----------------------------------------------------

    def inv_letter(self, letter: Letter) -> Letter:
        i, s = letter
        return letter if self.orders[i] == 2 else (i, -s)

    def reduce(self, letters) -> Word:
        """Canonical reduced form of a letter sequence."""
        out: list[Letter] = []
        for letter in letters:
            i, s = letter
            if not (0 <= i < len(self.orders)) or s not in (1, -1):
                raise ModelError(f"unknown letter {letter!r}")
            if self.orders[i] == 2 and s != 1:
                letter = (i, 1)
            if out and out[-1] == self.inv_letter(letter):
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def mul(self, u: Word, v: Word) -> Word:
        out = list(u)
        for letter in v:
            if out and out[-1] == self.inv_letter(letter):
                out.pop()
            else:
                out.append(letter)
        return tuple(out)

    def inv(self, u: Word) -> Word:
        return tuple(self.inv_letter(l) for l in reversed(u))

    # -- tree geometry ------------------------------------------------------

    def distance(self, x: Word, y: Word) -> int:
        # |x^-1 y|; strip the common prefix first to avoid building it
        c = 0
        for a, b in zip(x, y):
            if a != b:
                break
            c += 1
        return (len(x) - c) + (len(y) - c)

    def geodesic(self, x: Word, y: Word) -> list[Word]:
        c = 0
        for a, b in zip(x, y):
            if a != b:
                break
            c += 1
        up = [x[:j] for j in range(len(x), c - 1, -1)]
        down = [y[:j] for j in range(c + 1, len(y) + 1)]
        return up + down

    def neighbors(self, v: Word) -> list[Word]:
        return [self.mul(v, (l,)) for l in self.letters]

    def vertex_class(self, v: Word):
        return 0  # transitive action

    def center_classes(self):
        return [0]

    def centered_view(self, cls):
        return self, self.base

    def translate_to_base(self, y: Word, v: Word) -> Word:
        """Image of v under the automorphism sending y to the base vertex."""
        return self.mul(self.inv(y), v)

    def pair_label(self, a: Word, b: Word, y: Word):
        """Canonical orbit label of a pair (a, b) anchored at y.

        Left multiplication acts freely and transitively, so translating y
        to the identity is a complete invariant.
        """
        yi = self.inv(y)
        return (self.mul(yi, a), self.mul(yi, b))

    # -- parsing / formatting ------------------------------------------------

    def parse_vertex(self, text: str) -> Word:
        s = text.strip()
        if s in ("e", "1", ""):
            return ()
        out: list[Letter] = []
        while s:
            for i, n in enumerate(self.names):
                if s.startswith(n):
                    s = s[len(n):]
                    if s.startswith("^-1"):
                        s = s[3:]
                        out.append((i, -1))
                    else:
                        out.append((i, 1))
                    break
            else:
                raise ModelError(f"cannot parse vertex {text!r} at {s!r}")
        return self.reduce(out)

    def format_vertex(self, v: Word) -> str:
        if not v:
            return "e"
        return "".join(self.names[i] + ("^-1" if s < 0 else "") for i, s in v)


# ---------------------------------------------------------------------------
# Colored regular trees
# ---------------------------------------------------------------------------

# A vertex is a path from the root: a tuple of steps (color id, sibling
# index).  The sibling index runs over the copies of that color among the
# children, so paths are canonical names for tree vertices.

Step = tuple[int, int]
Path = tuple[Step, ...]


class ColoredTree:
    """Rooted view of a colored regular tree.

    The neighbour rule maps each color to the multiset of its neighbours'
    colors.  The rule must be support-symmetric (i appears next to j iff
    j appears next to i); multiplicities may differ, which covers the
    biregular trees.  Every vertex of a given color looks the same, so
    color-preserving automorphisms act cofinitely with one vertex orbit
    per color.
    """

    def __init__(self, colors, rule, root_color):
        self.colors = tuple(colors)
        if len(set(self.colors)) != len(self.colors):
            raise ModelError("color names must be distinct")
        self.cid = {c: i for i, c in enumerate(self.colors)}
        if root_color not in self.cid:
            raise ModelError(f"unknown root color {root_color!r}")
        self.rule: dict[int, tuple[int, ...]] = {}
        for c in self.colors:
            if c not in rule:
                raise ModelError(f"no neighbour rule for color {c!r}")
            row = tuple(sorted(self.cid[x] for x in rule[c]))
            if len(row) < 3:
                raise ModelError(
                    f"color {c!r} has valence {len(row)} < 3")
            self.rule[self.cid[c]] = row
        for i in self.rule:
            for j in set(self.rule[i]):
                if i not in self.rule[j]:
                    raise ModelError(
                        f"neighbour rule not symmetric: {self.colors[i]} lists "
                        f"{self.colors[j]} but not conversely")
        self.root_color = self.cid[root_color]
        self.base: Path = ()
        self.valence = min(len(r) for r in self.rule.values())

    def color(self, v: Path) -> int:
        return v[-1][0] if v else self.root_color

    def _parent_color(self, v: Path) -> int | None:
        if not v:
            return None
        return self.color(v[:-1])

    def child_multiplicities(self, v: Path) -> Counter:
        avail = Counter(self.rule[self.color(v)])
        pc = self._parent_color(v)
        if pc is not None:
            avail[pc] -= 1
            if avail[pc] == 0:
                del avail[pc]
        return avail

    def neighbors(self, v: Path) -> list[Path]:
        out: list[Path] = []
        if v:
            out.append(v[:-1])
        for c, m in sorted(self.child_multiplicities(v).items()):
            out.extend(v + ((c, j),) for j in range(m))
        return out

    def distance(self, x: Path, y: Path) -> int:
        c = 0
        for a, b in zip(x, y):
            if a != b:
                break
            c += 1
        return (len(x) - c) + (len(y) - c)

    def geodesic(self, x: Path, y: Path) -> list[Path]:
        c = 0
        for a, b in zip(x, y):
            if a != b:
                break
            c += 1
        up = [x[:j] for j in range(len(x), c - 1, -1)]
        down = [y[:j] for j in range(c + 1, len(y) + 1)]
        return up + down

    def vertex_class(self, v: Path):
        return self.color(v)

    def center_classes(self):
        return list(range(len(self.colors)))

    def centered_view(self, cls):
        """A view of the same tree rooted at a vertex of the given color.

        By homogeneity any vertex of a color is equivalent, so analyses
        anchored at a vertex of color `cls` can run on this view with the
        root as the anchor (giving O(1) distance-to-anchor checks).
        """
        if cls == self.root_color:
            return self, self.base
        rule_by_name = {
            self.colors[i]: tuple(self.colors[j] for j in row)
            for i, row in self.rule.items()
        }
        return ColoredTree(self.colors, rule_by_name, self.colors[cls]), ()

    def geodesic_colors(self, x: Path, y: Path) -> tuple[int, ...]:
        return tuple(self.color(v) for v in self.geodesic(x, y))

    def pair_label(self, a: Path, b: Path, y: Path):
        """Orbit label of (a, b) anchored at y under color automorphisms.

        The colored tripod spanned by y, a, b is a complete invariant:
        same-colored vertices are swappable, and arm colors pin down the
        configuration up to such swaps.
        """
        w = self.median(y, a, b)
        return (
            self.geodesic_colors(w, y),
            self.geodesic_colors(w, a),
            self.geodesic_colors(w, b),
        )

    def median(self, x: Path, y: Path, z: Path) -> Path:
        # the unique meeting point of the three pairwise geodesics
        gxy = set(self.geodesic(x, y))
        for v in self.geodesic(x, z):
            if v in gxy and v in set(self.geodesic(y, z)):
                return v
        raise AssertionError("tree median must exist")

    # -- parsing / formatting ------------------------------------------------

    def parse_vertex(self, text: str) -> Path:
        s = text.strip()
        if s in ("e", "root", ""):
            return ()
        steps: list[Step] = []
        v: Path = ()
        for tok in s.split("."):
            name = tok.rstrip("0123456789")
            idx = tok[len(name):]
            if name not in self.cid or idx == "":
                raise ModelError(f"cannot parse vertex step {tok!r}")
            c, j = self.cid[name], int(idx)
            if j >= self.child_multiplicities(v).get(c, 0):
                raise ModelError(
                    f"vertex step {tok!r} does not exist below "
                    f"{self.format_vertex(v)}")
            steps.append((c, j))
            v = tuple(steps)
        return v

    def format_vertex(self, v: Path) -> str:
        if not v:
            return "root"
        return ".".join(f"{self.colors[c]}{j}" for c, j in v)


# ---------------------------------------------------------------------------
# Geometry shared by both families
# ---------------------------------------------------------------------------


def ball(tree, y, radius: int):
    """All vertices within distance `radius` of y."""
    if radius < 0:
        raise ModelError("radius must be >= 0")
    seen = {y}
    frontier = [y]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in tree.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def sphere(tree, y, radius: int):
    """Vertices at distance exactly `radius` from y."""
    if radius == 0:
        return {y}
    return ball(tree, y, radius) - ball(tree, y, radius - 1)


def boundary(tree, y, k: int):
    """Outer boundary of the radius-k ball, which is the (k+1)-sphere."""
    return sphere(tree, y, k + 1)


def in_shadow(tree, w, x, y) -> bool:
    """True iff x lies on the geodesic from y to w (x falls in the shadow
    that x casts when lit from y)."""
    if x == y:
        raise ModelError("shadow requires x != y")
    return x in tree.geodesic(y, w)
