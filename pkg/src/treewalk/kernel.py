"""Finite-range step kernels on trees.

A walk model couples a tree family with an exact rational step
distribution that is invariant under the tree's cofinite automorphism
group by construction: on a free product the kernel is p(x, y) =
mu(x^-1 y); on a colored tree it depends only on the colors along the
geodesic from x to y.

All probabilities are `fractions.Fraction`; floating point never enters
this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetError, ModelError
from .trees import ColoredTree, FreeProductTree, ball

ZERO = Fraction(0)
ONE = Fraction(1)


class WalkModel:
    """A finite-range, automorphism-invariant random walk on a tree.

    For the free-product family `steps` maps reduced words (group
    elements) to probabilities; for the colored family it maps geodesic
    color sequences (source color first, target color last; a length-1
    key is the lazy loop at the vertex) to probabilities.
    """

    def __init__(self, tree, steps):
        self.tree = tree
        self.is_free_product = isinstance(tree, FreeProductTree)
        norm: dict = {}
        for key, p in steps.items():
            p = Fraction(p)
            if not 0 < p <= 1:
                raise ModelError(f"step probability {p} outside (0, 1]")
            if self.is_free_product:
                key = tree.reduce(key)
            else:
                key = tuple(tree.cid[c] if isinstance(c, str) else c
                            for c in key)
                for c in key:
                    if not 0 <= c < len(tree.colors):
                        raise ModelError(f"unknown color id {c} in step key")
            if key in norm:
                raise ModelError(f"duplicate step entry {key!r}")
            norm[key] = p
        if not norm:
            raise ModelError("empty step distribution")
        self.steps = norm
        if self.is_free_product:
            self.range_k = max(len(g) for g in norm)
            total = sum(norm.values())
            if total != 1:
                raise ModelError(f"step probabilities sum to {total}, not 1")
        else:
            self.range_k = max(len(key) - 1 for key in norm)
            self._check_colored_rows()
        if self.range_k < 1:
            raise ModelError("walk never moves (range 0)")
        self._period: PeriodData | None = None

    # -- colored-row validation ----------------------------------------------

    def _check_colored_rows(self):
        tree = self.tree
        for c in range(len(tree.colors)):
            view, root = tree.centered_view(c)
            total = ZERO
            for key, p in self.steps.items():
                if key[0] != c:
                    continue
                total += p * len(_color_targets(view, root, key))
            if total != 1:
                raise ModelError(
                    f"row sum for color {tree.colors[c]!r} is {total}, not 1")

    # -- one-step kernel -----------------------------------------------------

    def step_prob(self, x, y) -> Fraction:
        """p(x, y); zero beyond the range."""
        tree = self.tree
        if tree.distance(x, y) > self.range_k:
            return ZERO
        if self.is_free_product:
            return self.steps.get(tree.mul(tree.inv(x), y), ZERO)
        return self.steps.get(tree.geodesic_colors(x, y), ZERO)

    def successors(self, x):
        """All (y, p(x, y)) with positive probability."""
        tree = self.tree
        out = []
        if self.is_free_product:
            for g, p in self.steps.items():
                out.append((tree.mul(x, g), p))
        else:
            for key, p in self.steps.items():
                if key[0] != tree.color(x):
                    continue
                for y in _color_targets(tree, x, key):
                    out.append((y, p))
        return out

    def predecessors(self, x):
        """All (w, p(w, x)) with positive probability."""
        tree = self.tree
        out = []
        if self.is_free_product:
            for g, p in self.steps.items():
                out.append((tree.mul(x, tree.inv(g)), p))
        else:
            for key, p in self.steps.items():
                if key[-1] != tree.color(x):
                    continue
                for w in _color_targets(tree, x, tuple(reversed(key))):
                    out.append((w, p))
        return out

    @property
    def period(self) -> "PeriodData":
        if self._period is None:
            self._period = compute_period(self)
        return self._period


def _color_targets(tree: ColoredTree, v, key):
    """Vertices y whose geodesic from v carries the given color sequence."""
    out = []

    def rec(cur, prev, i):
        if i == len(key):
            out.append(cur)
            return
        want = key[i]
        if cur:
            par = cur[:-1]
            if par != prev and tree.color(par) == want:
                rec(par, cur, i + 1)
        m = tree.child_multiplicities(cur).get(want, 0)
        for j in range(m):
            ch = cur + ((want, j),)
            if ch != prev:
                rec(ch, cur, i + 1)

    if key[0] != tree.color(v):
        return out
    rec(v, None, 1)
    return out


# ---------------------------------------------------------------------------
# Irreducibility
# ---------------------------------------------------------------------------


@dataclass
class IrreducibilityReport:
    status: str                 # "irreducible" | "not_irreducible" | "unknown"
    horizon: int
    counterexample: object = None

    def __bool__(self):
        return self.status == "irreducible"


def check_irreducible(model: WalkModel, horizon: int = 0,
                      max_states: int = 200_000) -> IrreducibilityReport:
    """BFS certificate of irreducibility around the base vertex.

    Certifies that every vertex of the 2k-ball is reached from the base
    within `horizon` steps and can reach the base back.  An exhausted
    horizon yields status "unknown", never a silent pass.
    """
    tree, k = model.tree, model.range_k
    base = tree.base
    if horizon <= 0:
        horizon = 4 * (k + 2)
    target = ball(tree, base, 2 * k)

    def reach(step_fn):
        seen = {base}
        frontier = [base]
        for i in range(horizon):
            radius_cap = 2 * k + k * (horizon - i)
            nxt = []
            for v in frontier:
                for w, _ in step_fn(v):
                    if w not in seen and tree.distance(base, w) <= radius_cap:
                        if len(seen) >= max_states:
                            raise BudgetError("irreducibility BFS budget")
                        seen.add(w)
                        nxt.append(w)
            if not nxt:
                break
            frontier = nxt
        return seen

    try:
        fwd = reach(model.successors)
        bwd = reach(model.predecessors)
    except BudgetError:
        return IrreducibilityReport("unknown", horizon)
    for v in sorted(target, key=str):
        if v not in fwd or v not in bwd:
            # not reached within the horizon; distinguish "provably stuck"
            # (small closed forward orbit) from "ran out of horizon"
            if v not in fwd and len(fwd) < max_states and _is_closed(model, fwd):
                return IrreducibilityReport("not_irreducible", horizon, v)
            return IrreducibilityReport("unknown", horizon, v)
    return IrreducibilityReport("irreducible", horizon)


def _is_closed(model, seen) -> bool:
    return all(w in seen for v in seen for w, _ in model.successors(v))


# ---------------------------------------------------------------------------
# Period and the periodicity cocycle
# ---------------------------------------------------------------------------


@dataclass
class PeriodData:
    """Period d together with the additive cocycle r(x, y) = r0(y) - r0(x).

    Labels satisfy r0(y) = r0(x) + 1 whenever p(x, y) > 0; they are
    assigned by BFS from the base and extended lazily on demand.
    """
    d: int
    model: WalkModel = field(repr=False)
    _labels: dict = field(repr=False)

    def r0(self, v) -> int:
        if v not in self._labels:
            self._extend_to(v)
        return self._labels[v]

    def r(self, x, y) -> int:
        return (self.r0(y) - self.r0(x)) % self.d

    def _extend_to(self, v, max_states: int = 500_000):
        tree = self.model.tree
        radius = tree.distance(tree.base, v) + 2 * self.model.range_k + 2
        frontier = list(self._labels)
        while frontier:
            nxt = []
            for u in frontier:
                for w, _ in self.model.successors(u):
                    if w in self._labels:
                        continue
                    if tree.distance(tree.base, w) > radius:
                        continue
                    if len(self._labels) >= max_states:
                        raise BudgetError("cocycle labeling budget")
                    self._labels[w] = (self._labels[u] + 1) % self.d
                    nxt.append(w)
            if v in self._labels:
                return
            frontier = nxt
        raise BudgetError(
            f"could not label vertex within radius {radius}; "
            "increase the budget")


def _potential_conflicts(model: WalkModel, radius: int, max_states: int):
    """Integer potentials along step edges inside a ball; returns the gcd
    of all label conflicts (0 if none seen) and the potential map."""
    tree = model.tree
    base = tree.base
    theta = {base: 0}
    g = 0
    frontier = [base]
    while frontier:
        nxt = []
        for u in frontier:
            for v, _ in model.successors(u):
                if tree.distance(base, v) > radius:
                    continue
                t = theta[u] + 1
                if v in theta:
                    g = math.gcd(g, abs(theta[v] - t))
                else:
                    if len(theta) >= max_states:
                        raise BudgetError("period scan budget")
                    theta[v] = t
                    nxt.append(v)
        frontier = nxt
    return g, theta


def compute_period(model: WalkModel, max_states: int = 300_000) -> PeriodData:
    """Period d = gcd of return lengths, via potential conflicts.

    Scans growing balls around the base until the conflict gcd is stable
    across three consecutive radii.  This is a completeness heuristic:
    the gcd is generated by short certificates in bounded-geometry
    models, but no a-priori radius bound is available.
    """
    k = model.range_k
    radii = [2 * k + 2, 3 * k + 3, 4 * k + 4, 6 * k + 6]
    seen: list[int] = []
    g, theta = 0, {}
    for radius in radii:
        g, theta = _potential_conflicts(model, radius, max_states)
        seen.append(g)
        if g == 1:
            break  # the gcd cannot shrink further
        if len(seen) >= 3 and seen[-1] == seen[-2] == seen[-3] > 0:
            break
    else:
        if not (len(seen) >= 3 and seen[-1] == seen[-2] == seen[-3] > 0):
            raise BudgetError(
                "period did not stabilize within the scanned radii; "
                f"gcd sequence {seen}")
    d = g
    labels = {v: t % d for v, t in theta.items()}
    # consistency: every explored edge must raise the label by exactly 1
    for u in labels:
        for v, _ in model.successors(u):
            if v in labels and labels[v] != (labels[u] + 1) % d:
                raise AssertionError(
                    "inconsistent periodicity labels; this contradicts "
                    "irreducibility of the model")
    return PeriodData(d, model, labels)
