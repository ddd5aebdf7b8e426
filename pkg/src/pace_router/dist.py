"""Discrete travel-cost distributions.

Costs are non-negative integers in a fixed base unit (seconds by default).
Probabilities are plain Python numbers; floats are the norm, but
``fractions.Fraction`` inputs flow through every operation unchanged, which
keeps small worked examples exact.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Iterable, Mapping, Sequence

import numpy as np

MASS_TOL = 1e-9
MAX_SUPPORT = 10_000
KL_SMOOTHING = 1e-6
DOMINANCE_TOL = 1e-12
# above this many cost pairs a float convolution goes through numpy
_DENSE_THRESHOLD = 256


class DistributionError(ValueError):
    pass


def _as_cost(c) -> int:
    if isinstance(c, bool):
        raise DistributionError(f"cost must be an integer, got {c!r}")
    if isinstance(c, (int, np.integer)):
        c = int(c)
    elif isinstance(c, float) and c.is_integer():
        c = int(c)
    else:
        raise DistributionError(f"cost must be an integer, got {c!r}")
    if c < 0:
        raise DistributionError(f"cost must be non-negative, got {c}")
    return c


def _all_float(probs: Sequence) -> bool:
    return all(type(p) is float for p in probs)


class CostDistribution:
    """A histogram over integer costs. Immutable; zero-mass bins are dropped."""

    __slots__ = ("_costs", "_probs", "_cum")

    def __init__(self, mass: Mapping[int, float] | Iterable[tuple[int, float]], *,
                 normalize: bool = False, max_support: int = MAX_SUPPORT):
        items = mass.items() if isinstance(mass, Mapping) else mass
        acc: dict[int, object] = {}
        for c, p in items:
            c = _as_cost(c)
            if isinstance(p, np.floating):
                p = float(p)
            if p < 0:
                raise DistributionError(f"negative probability {p} at cost {c}")
            if p == 0:
                continue
            acc[c] = acc[c] + p if c in acc else p
        if not acc:
            raise DistributionError("distribution has no mass")
        if len(acc) > max_support:
            raise DistributionError(
                f"support of {len(acc)} points exceeds cap of {max_support}")
        costs = tuple(sorted(acc))
        probs = tuple(acc[c] for c in costs)
        total = sum(probs)
        if normalize:
            probs = tuple(p / total for p in probs)
        elif abs(total - 1) > MASS_TOL:
            raise DistributionError(f"probabilities sum to {float(total)!r}, not 1")
        self._costs = costs
        self._probs = probs
        self._cum = None

    @classmethod
    def _raw(cls, costs: tuple, probs: tuple) -> "CostDistribution":
        # trusted constructor for internal results: sorted, positive, summing to 1
        obj = cls.__new__(cls)
        obj._costs = costs
        obj._probs = probs
        obj._cum = None
        return obj

    @classmethod
    def point(cls, cost: int) -> "CostDistribution":
        return cls._raw((_as_cost(cost),), (1.0,))

    @property
    def costs(self) -> tuple[int, ...]:
        return self._costs

    @property
    def probs(self) -> tuple:
        return self._probs

    def items(self):
        return zip(self._costs, self._probs)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self._costs, self._probs))

    def pdf(self, cost: int):
        i = _bisect(self._costs, cost)
        if i < len(self._costs) and self._costs[i] == cost:
            return self._probs[i]
        return 0

    def cdf(self, x) -> float:
        """P(cost <= x)."""
        if self._cum is None:
            cum, run = [], 0
            for p in self._probs:
                run += p
                cum.append(run)
            self._cum = tuple(cum)
        i = _bisect_right(self._costs, x)
        return self._cum[i - 1] if i else 0

    @property
    def min(self) -> int:
        return self._costs[0]

    @property
    def max(self) -> int:
        return self._costs[-1]

    def mean(self):
        return sum(c * p for c, p in zip(self._costs, self._probs))

    def __len__(self) -> int:
        return len(self._costs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CostDistribution):
            return NotImplemented
        return self._costs == other._costs and self._probs == other._probs

    def __hash__(self) -> int:
        return hash((self._costs, self._probs))

    def __repr__(self) -> str:
        body = ", ".join(f"{c}: {p!r}" for c, p in self.items())
        return f"CostDistribution({{{body}}})"

    def isclose(self, other: "CostDistribution", tol: float = 1e-9) -> bool:
        return total_variation(self, other) <= tol

    def to_text(self) -> str:
        return ",".join(f"{c}:{float(p)!r}" for c, p in self.items())

    @classmethod
    def from_text(cls, text: str) -> "CostDistribution":
        pairs = []
        for tok in text.split(","):
            c, _, p = tok.partition(":")
            if not _:
                raise DistributionError(f"bad distribution token {tok!r}")
            pairs.append((int(c), float(p)))
        # files may carry rounded probabilities; renormalise within tolerance
        d = cls(pairs, normalize=True)
        if abs(sum(p for _, p in pairs) - 1) > 1e-6:
            raise DistributionError(f"distribution {text!r} does not sum to 1")
        return d


def _bisect(a: Sequence[int], x) -> int:
    lo, hi = 0, len(a)
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _bisect_right(a: Sequence[int], x) -> int:
    lo, hi = 0, len(a)
    while lo < hi:
        mid = (lo + hi) // 2
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def convolve(a: CostDistribution, b: CostDistribution) -> CostDistribution:
    """Distribution of the sum of two independent costs."""
    if len(a) == 1 and a.probs[0] == 1:
        shift = a.min
        return CostDistribution._raw(tuple(c + shift for c in b.costs), b.probs)
    if len(b) == 1 and b.probs[0] == 1:
        return convolve(b, a)
    if len(a) * len(b) > _DENSE_THRESHOLD and _all_float(a.probs) and _all_float(b.probs):
        return _convolve_dense(a, b)
    acc: dict[int, object] = defaultdict(int)
    for ca, pa in a.items():
        for cb, pb in b.items():
            acc[ca + cb] += pa * pb
    costs = tuple(sorted(acc))
    return CostDistribution._raw(costs, tuple(acc[c] for c in costs))


def _dense(d: CostDistribution) -> np.ndarray:
    arr = np.zeros(d.max - d.min + 1)
    arr[np.asarray(d.costs) - d.min] = d.probs
    return arr


def _convolve_dense(a: CostDistribution, b: CostDistribution) -> CostDistribution:
    out = np.convolve(_dense(a), _dense(b))
    idx = np.nonzero(out)[0]
    if len(idx) > MAX_SUPPORT:
        raise DistributionError(f"convolution support {len(idx)} exceeds cap")
    base = a.min + b.min
    return CostDistribution._raw(tuple(int(i) + base for i in idx),
                                 tuple(float(v) for v in out[idx]))


def convolve_all(dists: Iterable[CostDistribution]) -> CostDistribution:
    result = None
    for d in dists:
        result = d if result is None else convolve(result, d)
    if result is None:
        return CostDistribution.point(0)
    return result


def prob_within(d: CostDistribution, budget) -> float:
    """P(cost <= budget)."""
    return d.cdf(budget)


def dominates(a: CostDistribution, b: CostDistribution, tol: float = DOMINANCE_TOL) -> bool:
    """First-order stochastic dominance of ``a`` over ``b`` (lower cost is better).

    True when CDF_a >= CDF_b at every cost and strictly greater at one of them.
    ``tol`` absorbs float round-off on both sides of the comparison; pass 0
    for exact inputs.
    """
    if a.min > b.min or a.max > b.max:
        # CDF_a(b.min) = 0 < CDF_b(b.min), or the mirror case at a.max
        return False
    strict = False
    ia = ib = 0
    ca = cb = 0
    na, nb = len(a), len(b)
    ac, ap, bc, bp = a.costs, a.probs, b.costs, b.probs
    while ia < na or ib < nb:
        x = min(ac[ia] if ia < na else math.inf, bc[ib] if ib < nb else math.inf)
        while ia < na and ac[ia] == x:
            ca += ap[ia]
            ia += 1
        while ib < nb and bc[ib] == x:
            cb += bp[ib]
            ib += 1
        if ca < cb - tol:
            return False
        if ca > cb + tol:
            strict = True
    return strict


def total_variation(a: CostDistribution, b: CostDistribution) -> float:
    da, db = a.as_dict(), b.as_dict()
    return 0.5 * sum(abs(da.get(c, 0) - db.get(c, 0)) for c in set(da) | set(db))


def kl_divergence(truth: CostDistribution, estimate: CostDistribution,
                  eps: float = KL_SMOOTHING) -> float:
    """KL(truth || estimate) in nats.

    The estimate is smoothed additively by ``eps`` over the union of both
    supports and renormalised; with ``eps=0`` a truth cost missing from the
    estimate is an error.
    """
    t = truth.as_dict()
    e = estimate.as_dict()
    support = set(t) | set(e)
    z = 1 + eps * len(support)
    kl = 0.0
    for c, p in t.items():
        q = (e.get(c, 0) + eps) / z
        if q <= 0:
            raise DistributionError(f"support mismatch: estimate has no mass at cost {c}")
        kl += p * math.log(p / q)
    return max(kl, 0.0)


class JointDistribution:
    """Probability mass over per-edge cost vectors of a path."""

    __slots__ = ("edges", "mass")

    def __init__(self, edges: Sequence[str], mass: Mapping[tuple, float], *,
                 normalize: bool = False, max_support: int = MAX_SUPPORT):
        edges = tuple(edges)
        if not edges:
            raise DistributionError("joint distribution needs at least one edge")
        acc: dict[tuple, object] = {}
        for vec, p in mass.items():
            vec = tuple(_as_cost(c) for c in vec)
            if len(vec) != len(edges):
                raise DistributionError(
                    f"cost vector {vec} does not match {len(edges)} edges")
            if p < 0:
                raise DistributionError(f"negative probability at {vec}")
            if p == 0:
                continue
            acc[vec] = acc.get(vec, 0) + p
        if not acc:
            raise DistributionError("joint distribution has no mass")
        if len(acc) > max_support:
            raise DistributionError(f"joint support {len(acc)} exceeds cap")
        total = sum(acc.values())
        if normalize:
            acc = {v: p / total for v, p in acc.items()}
        elif abs(total - 1) > MASS_TOL:
            raise DistributionError(f"joint probabilities sum to {float(total)!r}")
        self.edges = edges
        self.mass = acc

    @classmethod
    def _raw(cls, edges: tuple, mass: dict) -> "JointDistribution":
        obj = cls.__new__(cls)
        obj.edges = edges
        obj.mass = mass
        return obj

    @classmethod
    def single(cls, edge: str, dist: CostDistribution) -> "JointDistribution":
        return cls._raw((edge,), {(c,): p for c, p in dist.items()})

    def __len__(self) -> int:
        return len(self.mass)

    def __eq__(self, other) -> bool:
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return self.edges == other.edges and self.mass == other.mass

    def __repr__(self) -> str:
        return f"JointDistribution({self.edges}, {self.mass})"

    def isclose(self, other: "JointDistribution", tol: float = 1e-9) -> bool:
        if self.edges != other.edges:
            return False
        keys = set(self.mass) | set(other.mass)
        return all(abs(self.mass.get(k, 0) - other.mass.get(k, 0)) <= tol for k in keys)

    def to_text(self) -> str:
        return ";".join(",".join(map(str, v)) + f":{float(p)!r}" for v, p in sorted(self.mass.items()))

    @classmethod
    def from_text(cls, edges: Sequence[str], text: str) -> "JointDistribution":
        mass = {}
        for tok in text.split(";"):
            vec, _, p = tok.partition(":")
            mass[tuple(int(c) for c in vec.split(","))] = float(p)
        return cls(edges, mass, normalize=True)


def total_cost(j: JointDistribution) -> CostDistribution:
    acc: dict[int, object] = defaultdict(int)
    for vec, p in j.mass.items():
        acc[sum(vec)] += p
    costs = tuple(sorted(acc))
    return CostDistribution._raw(costs, tuple(acc[c] for c in costs))


def _find_subsequence(seq: tuple, sub: tuple) -> int:
    n, k = len(seq), len(sub)
    for i in range(n - k + 1):
        if seq[i:i + k] == sub:
            return i
    return -1


def marginalize(j: JointDistribution, subset: Sequence[str]) -> JointDistribution:
    """Marginal of ``j`` over a contiguous run of its edges."""
    subset = tuple(subset)
    start = _find_subsequence(j.edges, subset) if subset else -1
    if start < 0:
        raise DistributionError(f"{subset} is not a sub-path of {j.edges}")
    if subset == j.edges:
        return j
    stop = start + len(subset)
    acc: dict[tuple, object] = defaultdict(int)
    for vec, p in j.mass.items():
        acc[vec[start:stop]] += p
    return JointDistribution._raw(subset, dict(acc))


class AssemblyError(DistributionError):
    pass


def _overlap_length(a: tuple, b: tuple) -> int:
    """Length of the longest proper suffix of ``a`` equal to a prefix of ``b``."""
    for k in range(min(len(a), len(b)) - 1, 0, -1):
        if a[-k:] == b[:k]:
            return k
    return 0


def assemble(j1: JointDistribution, j2: JointDistribution, overlap: int | None = None,
             *, stats: dict | None = None) -> JointDistribution:
    """Chain two joint distributions that share a suffix/prefix of edges.

    The result over the union of edges is ``j1(v1) * j2(v2) / m2(o)`` where
    ``m2`` is the marginal of ``j2`` on the shared edges ``o``: ``j1`` times the
    conditional of the rest of ``j2`` given the overlap.  Mass lost where the
    two inputs disagree on overlap values is renormalised away.  Without any
    shared overlap value the rest of ``j2`` is attached independently.
    An empty overlap gives the independent product.
    """
    k = _overlap_length(j1.edges, j2.edges) if overlap is None else overlap
    if k < 0 or k >= len(j2.edges) or k > len(j1.edges) or (k and j1.edges[-k:] != j2.edges[:k]):
        raise AssemblyError(f"{j1.edges} and {j2.edges} are not assemblable")
    edges = j1.edges + j2.edges[k:]
    if len(set(edges)) != len(edges):
        raise AssemblyError(f"assembled path {edges} repeats an edge")
    groups: dict[tuple, list] = defaultdict(list)
    marg: dict[tuple, object] = defaultdict(int)
    for vec, p in j2.mass.items():
        groups[vec[:k]].append((vec[k:], p))
        marg[vec[:k]] += p
    out: dict[tuple, object] = defaultdict(int)
    covered = 0
    for vec, p in j1.mass.items():
        key = vec[len(vec) - k:] if k else ()
        g = groups.get(key)
        if g is None:
            continue
        covered += p
        m = marg[key]
        for rest, q in g:
            out[vec + rest] += p * q / m
    if not out:
        # no overlap value in common: attach the rest independently
        rest_marg: dict[tuple, object] = defaultdict(int)
        for vec, p in j2.mass.items():
            rest_marg[vec[k:]] += p
        for vec, p in j1.mass.items():
            for rest, q in rest_marg.items():
                out[vec + rest] += p * q
        covered = 0
    if stats is not None:
        stats["deficit"] = 1 - covered if covered else 1
    if covered and covered != 1:
        out = {v: p / covered for v, p in out.items()}
    if len(out) > MAX_SUPPORT:
        raise AssemblyError(f"assembled joint support {len(out)} exceeds cap")
    return JointDistribution._raw(edges, dict(out))
