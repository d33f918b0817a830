"""Paired-token vocabularies and the distributions their tokens are drawn from.

A vocabulary of N pairs occupies the flat ID range [0, 2N): open tokens are
0..N-1 and the close partner of open token t is t + N.  Distributions over a
support (pair types or flat IDs) are either uniform or Zipf-Mandelbrot,
optionally with a seeded random rank-to-index permutation so that frequency
rank carries no positional information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Vocabulary",
    "DistributionWeights",
    "make_vocab",
    "make_distribution",
    "sample_token",
    "sample_tokens",
]

_PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Vocabulary:
    """Token-ID space of ``num_pairs`` open/close pairs.

    The mapping between open and close IDs is a fixed offset: open IDs come
    first, close IDs second, so token t (open) pairs with token t + num_pairs
    (close).  Unstructured languages use the same 2*num_pairs flat IDs.
    """

    num_pairs: int

    def __post_init__(self) -> None:
        if int(self.num_pairs) < 1:
            raise ValueError(f"num_pairs must be >= 1, got {self.num_pairs}")
        object.__setattr__(self, "num_pairs", int(self.num_pairs))

    @property
    def total_size(self) -> int:
        return 2 * self.num_pairs

    def is_open(self, token_id: int) -> bool:
        self._check_range(token_id)
        return token_id < self.num_pairs

    def close_of(self, open_id: int) -> int:
        if not 0 <= open_id < self.num_pairs:
            raise ValueError(f"open ID out of range [0, {self.num_pairs}): {open_id}")
        return open_id + self.num_pairs

    def open_of(self, close_id: int) -> int:
        if not self.num_pairs <= close_id < self.total_size:
            raise ValueError(
                f"close ID out of range [{self.num_pairs}, {self.total_size}): {close_id}"
            )
        return close_id - self.num_pairs

    def pair_type(self, token_id: int) -> int:
        """Pair type of any flat ID (opens map to themselves)."""
        self._check_range(token_id)
        return token_id if token_id < self.num_pairs else token_id - self.num_pairs

    def _check_range(self, token_id: int) -> None:
        if not 0 <= token_id < self.total_size:
            raise ValueError(f"token ID out of range [0, {self.total_size}): {token_id}")


def make_vocab(num_pairs: int) -> Vocabulary:
    """Build the paired vocabulary with 2*num_pairs flat token IDs."""
    return Vocabulary(num_pairs)


@dataclass(frozen=True, eq=False)
class DistributionWeights:
    """Normalized sampling weights over a finite support.

    For kind="zipf" the mass of frequency rank r (r = 1..support_size) is
    proportional to 1 / (r + beta) ** alpha and is assigned to support index
    ``rank_permutation[r - 1]``.  The permutation is the identity unless a
    ``permute_seed`` was given, in which case it is a uniformly random
    permutation drawn from that seed.  ``probabilities`` is always recomputable
    from (kind, support_size, alpha, beta, permute_seed); serialized forms
    store only those parameters.
    """

    kind: str
    support_size: int
    alpha: float | None
    beta: float | None
    permute_seed: int | None
    rank_permutation: np.ndarray
    probabilities: np.ndarray
    cdf: np.ndarray = field(repr=False, default=None)

    def __post_init__(self) -> None:
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if float(self.probabilities.min()) <= 0.0:
            raise ValueError("all probabilities must be > 0")
        if self.cdf is None:
            cdf = np.cumsum(self.probabilities)
            cdf[-1] = 1.0
            object.__setattr__(self, "cdf", cdf)

    def to_params(self) -> dict:
        """Serializable parameters; probabilities are recomputed, never stored."""
        return {
            "kind": self.kind,
            "support_size": self.support_size,
            "alpha": self.alpha,
            "beta": self.beta,
            "permute_seed": self.permute_seed,
        }

    @classmethod
    def from_params(cls, params: dict) -> "DistributionWeights":
        return make_distribution(
            params["kind"],
            params["support_size"],
            alpha=params.get("alpha"),
            beta=params.get("beta"),
            permute_seed=params.get("permute_seed"),
        )


def make_distribution(
    kind: str,
    support_size: int,
    alpha: float | None = None,
    beta: float | None = None,
    permute_seed: int | None = None,
) -> DistributionWeights:
    """Build uniform or Zipf-Mandelbrot weights over ``support_size`` indices.

    Zipf masses follow 1 / (r + beta) ** alpha for ranks r = 1..support_size,
    normalized over the finite support.  Identical arguments always produce a
    bit-identical probabilities vector.
    """
    support_size = int(support_size)
    if support_size < 1:
        raise ValueError(f"support_size must be >= 1, got {support_size}")

    if permute_seed is None:
        perm = np.arange(support_size, dtype=np.int64)
    else:
        perm = np.random.default_rng(permute_seed).permutation(support_size).astype(np.int64)

    if kind == "uniform":
        probs = np.full(support_size, 1.0 / support_size, dtype=np.float64)
        alpha = None
        beta = None
    elif kind == "zipf":
        alpha = 1.0 if alpha is None else float(alpha)
        beta = 2.7 if beta is None else float(beta)
        if alpha <= 0.0:
            raise ValueError(f"zipf alpha must be > 0, got {alpha}")
        if beta <= -1.0:
            raise ValueError(f"zipf beta must be > -1, got {beta}")
        ranks = np.arange(1, support_size + 1, dtype=np.float64)
        by_rank = (ranks + beta) ** -alpha
        by_rank /= by_rank.sum()
        probs = np.empty(support_size, dtype=np.float64)
        probs[perm] = by_rank
    else:
        raise ValueError(f"unknown distribution kind {kind!r}")

    probs.setflags(write=False)
    perm.setflags(write=False)
    return DistributionWeights(
        kind=kind,
        support_size=support_size,
        alpha=alpha,
        beta=beta,
        permute_seed=permute_seed,
        rank_permutation=perm,
        probabilities=probs,
    )


def sample_token(dist: DistributionWeights, rng: np.random.Generator) -> int:
    """Draw one support index with probability ``dist.probabilities[i]``."""
    i = int(np.searchsorted(dist.cdf, rng.random(), side="right"))
    return min(i, dist.support_size - 1)


def sample_tokens(dist: DistributionWeights, rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectorized :func:`sample_token`; returns int64 array of length n."""
    idx = np.searchsorted(dist.cdf, rng.random(n), side="right")
    return np.minimum(idx, dist.support_size - 1).astype(np.int64)
