"""Exact n-step probabilities by dynamic programming.

The oracle is the ground truth of the package: plain Chapman-Kolmogorov
forward sweeps in exact arithmetic, independent of the generating
function machinery it is used to validate.

States are tree vertices encoded as machine integers (a packed stack of
letters or path steps), values are integer numerators over a common
denominator D per step, so a sweep only touches Python ints.  Frontiers
are pruned to vertices that can still reach the aim in the remaining
steps.  Isotropic nearest-neighbour walks on regular trees additionally
get a radial fast path (states collapsed to the distance from the aim),
which is what makes horizons of a hundred steps tractable.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

from .errors import BudgetError, ModelError
from .kernel import WalkModel
from .trees import ColoredTree, FreeProductTree

DEFAULT_BUDGET = 5_000_000


# ---------------------------------------------------------------------------
# Integer state engines
# ---------------------------------------------------------------------------


class _FreeEngine:
    """Reduced words packed into ints, most recent letter in the low bits."""

    def __init__(self, model: WalkModel):
        tree: FreeProductTree = model.tree
        self.tree = tree
        self.ids = {letter: i + 1 for i, letter in enumerate(tree.letters)}
        self.bits = len(tree.letters).bit_length()
        self.mask = (1 << self.bits) - 1
        self.inv = {self.ids[l]: self.ids[tree.inv_letter(l)]
                    for l in tree.letters}
        den = lcm(*(p.denominator for p in model.steps.values()))
        self.denom = den
        self.moves_template = [
            (tuple(self.ids[l] for l in g), int(p * den))
            for g, p in model.steps.items()
        ]

    def encode(self, word) -> int:
        s = 0
        for l in word:
            s = (s << self.bits) | self.ids[l]
        return s

    def decode(self, s: int):
        out = []
        while s:
            out.append(s & self.mask)
            s >>= self.bits
        rev = {v: k for k, v in self.ids.items()}
        return tuple(rev[i] for i in reversed(out))

    def depth(self, s: int) -> int:
        return (s.bit_length() + self.bits - 1) // self.bits

    def moves(self, s: int):
        bits, mask, inv = self.bits, self.mask, self.inv
        out = []
        for seq, num in self.moves_template:
            t = s
            for lid in seq:
                if t and (t & mask) == inv[lid]:
                    t >>= bits
                else:
                    t = (t << bits) | lid
            out.append((t, num))
        return out


class _ColoredEngine:
    """Root paths packed into ints; step = (color, sibling index)."""

    def __init__(self, model: WalkModel):
        tree: ColoredTree = model.tree
        self.tree = tree
        ncol = len(tree.colors)
        self.maxm = max(max(row.count(c) for c in set(row))
                        for row in tree.rule.values())
        self.bits = (ncol * self.maxm).bit_length()
        self.mask = (1 << self.bits) - 1
        self.root_color = tree.root_color
        den = lcm(*(p.denominator for p in model.steps.values()))
        self.denom = den
        self.keys = [(key, int(p * den)) for key, p in model.steps.items()]
        # child multiplicity table indexed by (vertex color, parent color);
        # parent color ncol means "root" (no parent)
        self.mult = {}
        for c in range(ncol):
            for pc in list(range(ncol)) + [ncol]:
                row = list(tree.rule[c])
                if pc < ncol:
                    if pc not in row:
                        continue
                    row.remove(pc)
                self.mult[(c, pc)] = {cc: row.count(cc) for cc in set(row)}

    def _sid(self, c: int, j: int) -> int:
        return 1 + c * self.maxm + j

    def encode(self, path) -> int:
        s = 0
        for c, j in path:
            s = (s << self.bits) | self._sid(c, j)
        return s

    def decode(self, s: int):
        out = []
        while s:
            sid = (s & self.mask) - 1
            out.append((sid // self.maxm, sid % self.maxm))
            s >>= self.bits
        return tuple(reversed(out))

    def depth(self, s: int) -> int:
        return (s.bit_length() + self.bits - 1) // self.bits

    def color(self, s: int) -> int:
        if not s:
            return self.root_color
        return ((s & self.mask) - 1) // self.maxm

    def _parent_color(self, s: int) -> int:
        if not s:
            return len(self.tree.colors)  # sentinel: no parent
        p = s >> self.bits
        return self.color(p) if p or self.depth(s) > 1 else self.color(0)

    def moves(self, s: int):
        out = []
        c0 = self.color(s)
        for key, num in self.keys:
            if key[0] != c0:
                continue
            for t in self._targets(s, key):
                out.append((t, num))
        return out

    def _targets(self, s: int, key):
        # all geodesics from s whose colors follow `key`
        bits = self.bits
        found = []

        def rec(cur, prev, i):
            if i == len(key):
                found.append(cur)
                return
            want = key[i]
            if cur:
                par = cur >> bits
                if par != prev or prev is None:
                    if self.color(par) == want and prev != par:
                        rec(par, cur, i + 1)
            pc = self._parent_color(cur) if cur else len(self.tree.colors)
            m = self.mult.get((self.color(cur), pc), {}).get(want, 0)
            for j in range(m):
                ch = (cur << bits) | self._sid(want, j)
                if ch != prev:
                    rec(ch, cur, i + 1)

        rec(s, None, 1)
        return found


def _engine(model: WalkModel):
    eng = getattr(model, "_oracle_engine", None)
    if eng is None:
        eng = (_FreeEngine(model) if model.is_free_product
               else _ColoredEngine(model))
        model._oracle_engine = eng
    return eng


# ---------------------------------------------------------------------------
# Radial fast path
# ---------------------------------------------------------------------------


def isotropic_params(model: WalkModel):
    """(valence, loop probability) if the walk is an isotropic
    nearest-neighbour walk, possibly lazy, on a regular tree; else None."""
    if not model.is_free_product:
        return None
    tree = model.tree
    loop = model.steps.get((), Fraction(0))
    single = {g: p for g, p in model.steps.items() if len(g) == 1}
    if len(single) + (1 if loop else 0) != len(model.steps):
        return None
    if set(single) != {(l,) for l in tree.letters}:
        return None
    probs = set(single.values())
    if len(probs) != 1:
        return None
    return tree.valence, loop


def _radial_series(model, dist, n_max, absorb):
    """Distance-from-aim DP for isotropic walks.  With `absorb` the aim
    may not be used as an intermediate (first-passage behaviour)."""
    V, beta = isotropic_params(model)
    gamma = (1 - beta) / V
    den = lcm(gamma.denominator, beta.denominator if beta else 1)
    g_num, b_num = int(gamma * den), int(beta * den)
    out = [Fraction(0)] * (n_max + 1)
    if dist == 0:
        out[0] = Fraction(1)
        if absorb:
            return out
    dp = {dist: 1}
    for i in range(1, n_max + 1):
        ndp: dict[int, int] = {}
        cap = dist + (n_max - i)  # cannot return in time from further out
        for j, val in dp.items():
            if j == 0:
                ndp[1] = ndp.get(1, 0) + val * g_num * V
                if b_num:
                    ndp[0] = ndp.get(0, 0) + val * b_num
            else:
                if j - 1 <= cap:
                    ndp[j - 1] = ndp.get(j - 1, 0) + val * g_num
                if j + 1 <= cap:
                    ndp[j + 1] = ndp.get(j + 1, 0) + val * g_num * (V - 1)
                if b_num and j <= cap:
                    ndp[j] = ndp.get(j, 0) + val * b_num
        hit = ndp.get(0, 0)
        if hit:
            out[i] = Fraction(hit, den ** i)
            if absorb:
                del ndp[0]
        dp = ndp
        if not dp:
            break
    return out


# ---------------------------------------------------------------------------
# Generic vertex DP
# ---------------------------------------------------------------------------


def _vertex_series(model, a, b, n_max, avoid_radius, budget):
    """Forward DP from a; hits into b recorded per step.  Intermediates
    must have depth > avoid_radius (relative to the tree base); pass -1
    for no restriction.  a and b are vertices of model.tree."""
    eng = _engine(model)
    k = model.range_k
    sa, sb = eng.encode(a), eng.encode(b)
    depth_b = eng.depth(sb)
    den = eng.denom
    out = [Fraction(0)] * (n_max + 1)
    if sa == sb:
        out[0] = Fraction(1)
    cur = {sa: 1}
    touched = 0
    for i in range(1, n_max + 1):
        nxt: dict[int, int] = {}
        remaining = n_max - i
        cap = max(avoid_radius, depth_b) + k * remaining
        hit = 0
        for s, val in cur.items():
            for t, num in eng.moves(s):
                if t == sb:
                    hit += val * num
                d = eng.depth(t)
                if d <= avoid_radius or d > cap:
                    continue
                if t in nxt:
                    nxt[t] += val * num
                else:
                    nxt[t] = val * num
        if hit:
            out[i] = Fraction(hit, den ** i)
        touched += len(nxt)
        if touched > budget:
            raise BudgetError(
                f"oracle DP exceeded {budget} states at step {i}")
        cur = nxt
        if not cur:
            break
    return out


def _rebase(model, x, y):
    """Move the pair so the aim sits at the tree base (exact by
    automorphism invariance)."""
    vm, x2, y2 = rebase_pair(model, x, y, y)
    return vm, x2, y2


def model_view(model: WalkModel, color: int) -> WalkModel:
    """The same colored walk rooted at a vertex of the given color."""
    if model.is_free_product:
        return model
    views = getattr(model, "_views", None)
    if views is None:
        views = model._views = {}
    if color not in views:
        view_tree, _ = model.tree.centered_view(color)
        views[color] = WalkModel(view_tree, dict(model.steps))
    return views[color]


def rebase_pair(model: WalkModel, a, b, y):
    """Return (view_model, a', b') with the anchor y moved to the view
    root and (a, b) carried along by a color automorphism."""
    tree = model.tree
    if model.is_free_product:
        yi = tree.inv(y)
        return model, tree.mul(yi, a), tree.mul(yi, b)
    view_model = model_view(model, tree.color(y))
    vt: ColoredTree = view_model.tree
    arm_y, arm_a, arm_b = tree.pair_label(a, b, y)
    # median placed by descending from the root along the reversed y-arm
    w = ()
    for c in reversed(arm_y[:-1]):
        w = w + ((c, 0),)
    a2 = _descend(vt, w, arm_a[1:], sibling=0)
    same_first = (len(arm_a) > 1 and len(arm_b) > 1
                  and arm_a[1] == arm_b[1])
    b2 = _descend(vt, w, arm_b[1:], sibling=1 if same_first else 0)
    return view_model, a2, b2


def _descend(tree: ColoredTree, start, colors, sibling: int):
    v = start
    for i, c in enumerate(colors):
        j = sibling if i == 0 else 0
        if j >= tree.child_multiplicities(v).get(c, 0):
            raise ModelError("cannot embed configuration in rooted view")
        v = v + ((c, j),)
    return v


# ---------------------------------------------------------------------------
# Public oracle API
# ---------------------------------------------------------------------------


def n_step_series(model: WalkModel, x, y, n_max: int,
                  budget: int = DEFAULT_BUDGET) -> list[Fraction]:
    """[p^(0)(x,y), ..., p^(n_max)(x,y)], exact."""
    iso = isotropic_params(model)
    if iso is not None:
        return _radial_series(model, model.tree.distance(x, y), n_max, False)
    m, x2, y2 = _rebase(model, x, y)
    return _vertex_series(m, x2, y2, n_max, -1, budget)


def n_step_prob(model: WalkModel, x, y, n: int,
                budget: int = DEFAULT_BUDGET) -> Fraction:
    return n_step_series(model, x, y, n, budget)[n]


def restricted_series(model: WalkModel, a, b, center, radius: int,
                      n_max: int, budget: int = DEFAULT_BUDGET) -> list[Fraction]:
    """Series of p^(n)(a, b; Omega) with Omega the complement of the
    radius-ball around `center` (intermediate vertices must stay out)."""
    if radius == 0 and isotropic_params(model) is not None and b == center:
        return _radial_series(model, model.tree.distance(a, b), n_max, True)
    vm, a2, b2 = rebase_pair(model, a, b, center)
    return _vertex_series(vm, a2, b2, n_max, radius, budget)


def restricted_prob(model: WalkModel, a, b, center, radius: int, n: int,
                    budget: int = DEFAULT_BUDGET) -> Fraction:
    return restricted_series(model, a, b, center, radius, n, budget)[n]


def first_passage_series(model: WalkModel, x, y, n_max: int,
                         budget: int = DEFAULT_BUDGET) -> list[Fraction]:
    """Generating sequence of the first hitting time of y from x."""
    return restricted_series(model, x, y, y, 0, n_max, budget)


def restricted_series_predicate(model: WalkModel, a, b, omega, n_max: int,
                                budget: int = DEFAULT_BUDGET) -> list[Fraction]:
    """Slow tree-level variant accepting an arbitrary predicate for the
    allowed intermediate vertices."""
    out = [Fraction(0)] * (n_max + 1)
    if a == b:
        out[0] = Fraction(1)
    cur = {a: Fraction(1)}
    touched = 0
    for i in range(1, n_max + 1):
        nxt: dict = {}
        for v, val in cur.items():
            for w, p in model.successors(v):
                mass = val * p
                if w == b:
                    out[i] += mass
                if omega(w):
                    nxt[w] = nxt.get(w, Fraction(0)) + mass
        touched += len(nxt)
        if touched > budget:
            raise BudgetError("predicate oracle exceeded budget")
        cur = nxt
        if not cur:
            break
    return out
