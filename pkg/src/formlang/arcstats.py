"""Validators and estimators computed from raw token streams.

Nothing here trusts generator annotations: balance, nestedness, arc matching,
crossing counts, distance distributions and Zipf fits are all recomputed from
flat token IDs, which is what makes these functions usable as acceptance
oracles for the generators.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels as K
from .vocab import Vocabulary

__all__ = [
    "ArcSet",
    "BalanceReport",
    "DistanceDistribution",
    "ZipfFit",
    "MatchError",
    "AmbiguousMatchError",
    "check_balanced",
    "check_well_nested",
    "match_arcs",
    "count_crossings",
    "distance_distribution",
    "kl_divergence",
    "depth_stats",
    "fit_zipf",
    "render_report",
]


class MatchError(ValueError):
    """Arc matching failed (unbalanced input)."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class AmbiguousMatchError(ValueError):
    """A pair type was open twice concurrently and the policy cannot resolve it."""

    def __init__(self, pair_type: int):
        super().__init__(
            f"pair type {pair_type} is open twice concurrently; "
            "matching is ambiguous under this policy"
        )
        self.pair_type = pair_type


def _as_ids(tokens, vocab: Vocabulary) -> np.ndarray:
    ids = np.asarray(tokens)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab.total_size):
        bad = int(np.argmax((ids < 0) | (ids >= vocab.total_size)))
        raise ValueError(
            f"token ID {int(ids[bad])} at index {bad} out of range "
            f"[0, {vocab.total_size})"
        )
    return ids.astype(np.uint16, copy=False)


@dataclass(frozen=True)
class ArcSet:
    """Matched (open_index, close_index) pairs over one token sequence."""

    opens: np.ndarray  # int64, sorted ascending
    closes: np.ndarray  # int64
    matching_policy: str = "stack"
    n_positions: int = 0

    def __post_init__(self) -> None:
        if self.opens.shape != self.closes.shape:
            raise ValueError("opens and closes must have equal length")
        if self.opens.size:
            if not (self.opens < self.closes).all():
                raise ValueError("each arc must have open_index < close_index")
            both = np.concatenate([self.opens, self.closes])
            if np.unique(both).size != both.size:
                raise ValueError("a token index appears in two arcs")
        if self.n_positions == 0 and self.opens.size:
            object.__setattr__(self, "n_positions", int(self.closes.max()) + 1)

    def __len__(self) -> int:
        return int(self.opens.size)

    def distances(self) -> np.ndarray:
        return (self.closes - self.opens).astype(np.int64)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.opens.tolist(), self.closes.tolist()))


@dataclass(frozen=True)
class BalanceReport:
    ok: bool
    first_violation: Optional[int]
    unmatched_opens: dict  # pair type -> excess open count
    unmatched_closes: dict  # pair type -> excess close count

    def __bool__(self) -> bool:
        return self.ok


def check_balanced(tokens, vocab: Vocabulary) -> BalanceReport:
    """Per-type balance with the prefix condition.

    True iff for every pair type opens equal closes and no prefix closes a
    type more often than it has opened it.
    """
    ids = _as_ids(tokens, vocab)
    n_pairs = vocab.num_pairs
    bal = np.zeros(n_pairs, np.int64)
    first = int(K.balance_scan(ids, n_pairs, bal))
    opens_excess = {int(t): int(c) for t, c in enumerate(bal) if c > 0}
    closes_excess = {int(t): int(-c) for t, c in enumerate(bal) if c < 0}
    ok = first < 0 and not opens_excess and not closes_excess
    return BalanceReport(
        ok=ok,
        first_violation=None if first < 0 else first,
        unmatched_opens=opens_excess,
        unmatched_closes=closes_excess,
    )


def check_well_nested(tokens, vocab: Vocabulary) -> bool:
    """True iff one stack pass matches every close to the top-of-stack open
    of the same type and the stack ends empty."""
    ids = _as_ids(tokens, vocab)
    stack = np.empty(max(ids.size, 1), np.int32)
    return int(K.nested_scan(ids, vocab.num_pairs, stack)) < 0


def match_arcs(
    tokens,
    vocab: Vocabulary,
    policy: str = "stack",
    partner: Optional[np.ndarray] = None,
) -> ArcSet:
    """Match every close to an open of its type.

    Under the no-concurrent-reopen convention all policies agree.  When a
    type is open twice concurrently, policy="stack" resolves LIFO,
    policy="scheduled" resolves FIFO, and policy="annotated" requires the
    generator's partner annotations (raises AmbiguousMatchError without them).
    """
    ids = _as_ids(tokens, vocab)
    n = ids.size
    n_pairs = vocab.num_pairs

    if policy == "annotated" and partner is not None:
        idx = np.arange(n, dtype=np.int64)
        p = np.asarray(partner, dtype=np.int64)
        if p.shape[0] != n:
            raise ValueError("partner annotation length mismatch")
        mask = p > idx
        opens, closes = idx[mask], p[mask]
        if not np.array_equal(p[closes], opens):
            raise MatchError("partner annotations are not symmetric", -1)
        order = np.argsort(opens, kind="stable")
        return ArcSet(opens[order], closes[order], "annotated", n)

    opens_out = np.empty(n // 2 + 1, np.int64)
    closes_out = np.empty(n // 2 + 1, np.int64)
    if policy == "stack" or policy == "annotated":
        head = np.full(n_pairs, -1, np.int64)
        prev = np.empty(max(n, 1), np.int64)
        m, err, ambiguous = K.match_arcs_stack(ids, n_pairs, head, prev, opens_out, closes_out)
    elif policy == "scheduled":
        head = np.full(n_pairs, -1, np.int64)
        tail = np.full(n_pairs, -1, np.int64)
        link = np.empty(max(n, 1), np.int64)
        m, err, ambiguous = K.match_arcs_fifo(ids, n_pairs, head, tail, link, opens_out, closes_out)
    else:
        raise ValueError(f"unknown matching policy {policy!r}")

    if err >= 0:
        what = "unmatched open tokens remain" if err == n else "close without matching open"
        raise MatchError(f"{what} at index {int(err)}", int(err))
    if policy == "annotated" and ambiguous >= 0:
        raise AmbiguousMatchError(int(ambiguous))
    opens, closes = opens_out[:m], closes_out[:m]
    order = np.argsort(opens, kind="stable")
    return ArcSet(opens[order].copy(), closes[order].copy(), policy, n)


def count_crossings(arcs: ArcSet, method: str = "sweep") -> int:
    """Number of unordered arc pairs {(a,b),(c,d)} with a < c < b < d.

    method="sweep" is the O(m log n) Fenwick path; method="pairwise" is the
    O(m^2) check kept as its oracle.
    """
    if len(arcs) == 0:
        return 0
    if method == "sweep":
        return int(K.count_crossings_sweep(arcs.opens, arcs.closes, arcs.n_positions))
    if method == "pairwise":
        return int(K.count_crossings_pairwise(arcs.opens, arcs.closes))
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True, eq=False)
class DistanceDistribution:
    """Probability mass function over open-to-close arc distances."""

    distances: np.ndarray  # int64, sorted ascending, all >= 1
    probs: np.ndarray  # float64
    sample_count: int = 0

    def __post_init__(self) -> None:
        if self.distances.size == 0:
            raise ValueError("empty distance distribution")
        if int(self.distances.min()) < 1:
            raise ValueError("arc distances must be >= 1")
        if not np.all(np.diff(self.distances) > 0):
            raise ValueError("distances must be strictly increasing")
        total = float(self.probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {total!r}, not 1")

    @property
    def pmf(self) -> dict:
        return {int(d): float(p) for d, p in zip(self.distances, self.probs)}

    def mean(self) -> float:
        return float(np.dot(self.distances, self.probs))

    @classmethod
    def from_counts(cls, counts: dict | Counter, sample_count: Optional[int] = None):
        if not counts:
            raise ValueError("empty distance counts")
        ds = np.array(sorted(counts), dtype=np.int64)
        cs = np.array([counts[int(d)] for d in ds], dtype=np.float64)
        total = cs.sum()
        if sample_count is None:
            sample_count = int(total)
        return cls(ds, cs / total, sample_count)

    @classmethod
    def from_params(cls, params: dict) -> "DistanceDistribution":
        pmf = params["pmf"]
        ds = np.array(sorted(int(d) for d in pmf), dtype=np.int64)
        ps = np.array([pmf[str(d)] if str(d) in pmf else pmf[d] for d in ds], dtype=np.float64)
        ps /= ps.sum()
        return cls(ds, ps, int(params.get("sample_count", 0)))

    def to_params(self) -> dict:
        return {
            "pmf": {str(int(d)): float(p) for d, p in zip(self.distances, self.probs)},
            "sample_count": int(self.sample_count),
        }

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_params(), f, indent=1)

    @classmethod
    def load(cls, path) -> "DistanceDistribution":
        with open(path) as f:
            return cls.from_params(json.load(f))


def distance_distribution(arcsets: Iterable[ArcSet]) -> DistanceDistribution:
    """Empirical pmf of close_index - open_index over a stream of ArcSets."""
    counts: Counter = Counter()
    n = 0
    for arcs in arcsets:
        d = arcs.distances()
        if d.size:
            vals, cnts = np.unique(d, return_counts=True)
            for v, c in zip(vals, cnts):
                counts[int(v)] += int(c)
            n += int(d.size)
    if n == 0:
        raise ValueError("no arcs seen; distance distribution undefined")
    return DistanceDistribution.from_counts(counts, n)


def kl_divergence(
    p: DistanceDistribution, q: DistanceDistribution, smoothing: Optional[float] = None
) -> float:
    """KL(p || q~) in bits, q~ being q with epsilon mass added on the part of
    p's support that q never saw, renormalized.  Defaults epsilon to
    1 / q.sample_count (one pseudo-count); when q already covers p's support
    no smoothing is applied, so KL(p, p) is exactly 0."""
    if smoothing is None:
        smoothing = 1.0 / max(q.sample_count, 1)
    if smoothing <= 0:
        raise ValueError("smoothing must be > 0")
    qi = np.searchsorted(q.distances, p.distances)
    qi = np.minimum(qi, q.distances.size - 1)
    covered = q.distances[qi] == p.distances
    qs = np.where(covered, q.probs[qi], 0.0)
    n_missing = int((~covered).sum())
    if n_missing:
        added = smoothing * n_missing
        if added >= 1.0:
            raise ValueError(
                f"smoothing {smoothing} puts mass {added} on {n_missing} unseen distances"
            )
        qs = np.where(covered, qs * (1.0 - added), smoothing)
    return float(np.sum(p.probs * np.log2(p.probs / qs)))


@dataclass(frozen=True, eq=False)
class DepthStats:
    mean_depth: float
    max_depth: int
    depth_histogram: np.ndarray  # counts indexed by depth 0..max

    def merged_with(self, other: "DepthStats") -> "DepthStats":
        n1, n2 = self.depth_histogram.sum(), other.depth_histogram.sum()
        m = max(self.depth_histogram.size, other.depth_histogram.size)
        hist = np.zeros(m, np.int64)
        hist[: self.depth_histogram.size] += self.depth_histogram
        hist[: other.depth_histogram.size] += other.depth_histogram
        mean = (self.mean_depth * n1 + other.mean_depth * n2) / max(n1 + n2, 1)
        return DepthStats(float(mean), int(max(self.max_depth, other.max_depth)), hist)


def depth_stats(tokens, vocab: Vocabulary) -> DepthStats:
    """Depth after each token (+1 open / -1 close), statistics over positions."""
    ids = _as_ids(tokens, vocab)
    if ids.size == 0:
        return DepthStats(0.0, 0, np.zeros(1, np.int64))
    depth = np.empty(ids.size, np.int64)
    rc = int(K.depth_profile(ids, vocab.num_pairs, depth))
    if rc < 0:
        raise ValueError(f"unbalanced prefix: depth went negative at index {-rc - 1}")
    hist = np.bincount(depth)
    return DepthStats(float(depth.mean()), int(depth.max()), hist)


@dataclass(frozen=True)
class ZipfFit:
    alpha_hat: float
    beta_fixed: float
    log_likelihood: float
    support_size: int


def fit_zipf(token_counts, beta_fixed: float = 2.7) -> ZipfFit:
    """MLE of the power-law exponent with the offset frozen.

    Counts sorted descending define the ranks; the likelihood is the discrete
    Zipf-Mandelbrot law over exactly the observed support.  Scale-invariant in
    the counts.
    """
    if isinstance(token_counts, dict):
        counts = np.array(list(token_counts.values()), dtype=np.float64)
    else:
        counts = np.asarray(token_counts, dtype=np.float64)
    counts = counts[counts > 0]
    if counts.size < 2:
        raise ValueError("need at least 2 distinct observed tokens to fit")
    counts = np.sort(counts)[::-1]
    n = counts.sum()
    ranks = np.arange(1, counts.size + 1, dtype=np.float64)
    logr = np.log(ranks + beta_fixed)
    s_emp = float(np.dot(counts, logr)) / n

    def neg_ll(alpha: float) -> float:
        logz = _logsumexp(-alpha * logr)
        return alpha * s_emp + logz  # negative mean log-likelihood (nats)

    res = minimize_scalar(neg_ll, bounds=(1e-9, 25.0), method="bounded",
                          options={"xatol": 1e-10})
    alpha_hat = float(res.x)
    ll = -float(res.fun) * n
    return ZipfFit(alpha_hat, float(beta_fixed), ll, int(counts.size))


def _logsumexp(x: np.ndarray) -> float:
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def render_report(metrics: dict, machine: bool = False) -> str:
    """Key-value statistics report, one metric per line (or JSON with machine)."""
    if machine:
        return json.dumps(metrics, indent=1, default=_json_default)
    lines = []
    for key, val in metrics.items():
        if isinstance(val, float):
            lines.append(f"{key} {val:.6g}")
        else:
            lines.append(f"{key} {val}")
    return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")
