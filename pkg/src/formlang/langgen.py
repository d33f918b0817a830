"""Generators for the five formal languages, streamed as annotated documents.

Every document carries, per token, the flat ID, the matching-partner index
within the document (-1 where no arc exists) and the generator surprisal in
bits: -log2 of the probability the sampling process itself assigned to that
token given its full latent state.  Summed over a document the surprisals
equal -log2 of the probability of the document under the generator.

Streams are deterministic functions of (LanguageSpec, shard_index): shard k
draws its randomness from numpy SeedSequence((seed, k)), so shards can be
produced in parallel, in any order, on any number of workers, and always come
out byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from . import _kernels as K
from .arcstats import DistanceDistribution
from .vocab import DistributionWeights, Vocabulary, make_distribution, make_vocab

__all__ = [
    "FAMILIES",
    "LanguageSpec",
    "AnnotatedToken",
    "Document",
    "SpecError",
    "generate",
    "gen_nest",
    "gen_cross",
    "gen_rand",
    "gen_rep",
    "gen_nest_mix",
    "document_stats",
    "stationary_mean_depth",
]

FAMILIES = ("nest", "cross", "rand", "rep", "nest_mix")
_PAIRED = ("nest", "cross", "nest_mix")

_BUF_TOKENS = 1 << 21  # per kernel call; grows if a document outruns it


class SpecError(ValueError):
    """A LanguageSpec that cannot generate anything."""


@dataclass(frozen=True)
class LanguageSpec:
    """Complete generative recipe for one formal language.

    pair_dist weights pair-type choice for the parenthesis families;
    token_dist weights flat-ID choice for rand/rep.  doc_target_len counts
    tokens for nest/rand/rep/nest_mix and opens for cross (a cross document
    has exactly 2 * doc_target_len tokens).
    """

    family: str
    vocab: Vocabulary
    pair_dist: Optional[DistributionWeights] = None
    token_dist: Optional[DistributionWeights] = None
    p_open: float = 0.49
    rep_block: int = 10
    p_mix: float = 0.0
    distance_ref: Optional[DistanceDistribution] = None
    doc_target_len: int = 480
    seed: int = 0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.doc_target_len < 1:
            raise SpecError(f"doc_target_len must be >= 1, got {self.doc_target_len}")
        if self.family in _PAIRED:
            if self.pair_dist is None:
                raise SpecError(f"family {self.family!r} requires pair_dist")
            if self.pair_dist.support_size != self.vocab.num_pairs:
                raise SpecError(
                    f"pair_dist support {self.pair_dist.support_size} != "
                    f"num_pairs {self.vocab.num_pairs}"
                )
        if self.family in ("rand", "rep"):
            if self.token_dist is None:
                raise SpecError(f"family {self.family!r} requires token_dist")
            if self.token_dist.support_size != self.vocab.total_size:
                raise SpecError(
                    f"token_dist support {self.token_dist.support_size} != "
                    f"vocab total size {self.vocab.total_size}"
                )
        if self.family in ("nest", "nest_mix") and not 0.0 < self.p_open < 0.5:
            raise SpecError(
                f"p_open must lie in (0, 0.5) so documents terminate, got {self.p_open}"
            )
        if self.family == "nest_mix" and not 0.0 <= self.p_mix <= 1.0:
            raise SpecError(f"p_mix must lie in [0, 1], got {self.p_mix}")
        if self.family in ("cross", "nest_mix"):
            if self.distance_ref is None:
                raise SpecError(f"family {self.family!r} requires distance_ref")
            if self.distance_ref.distances.min() < 1:
                raise SpecError("distance_ref contains distances < 1")
        if self.family == "rep":
            if self.rep_block < 1:
                raise SpecError(f"rep_block must be >= 1, got {self.rep_block}")
            if self.doc_target_len < 2 * self.rep_block:
                raise SpecError(
                    f"doc_target_len {self.doc_target_len} shorter than one "
                    f"repetition block of {2 * self.rep_block}"
                )

    def to_params(self) -> dict:
        return {
            "family": self.family,
            "num_pairs": self.vocab.num_pairs,
            "pair_dist": self.pair_dist.to_params() if self.pair_dist else None,
            "token_dist": self.token_dist.to_params() if self.token_dist else None,
            "p_open": self.p_open,
            "rep_block": self.rep_block,
            "p_mix": self.p_mix,
            "distance_ref": self.distance_ref.to_params() if self.distance_ref else None,
            "doc_target_len": self.doc_target_len,
            "seed": self.seed,
        }

    @classmethod
    def from_params(cls, params: dict) -> "LanguageSpec":
        pair_dist = params.get("pair_dist")
        token_dist = params.get("token_dist")
        dref = params.get("distance_ref")
        return cls(
            family=params["family"],
            vocab=make_vocab(params["num_pairs"]),
            pair_dist=DistributionWeights.from_params(pair_dist) if pair_dist else None,
            token_dist=DistributionWeights.from_params(token_dist) if token_dist else None,
            p_open=params.get("p_open", 0.49),
            rep_block=params.get("rep_block", 10),
            p_mix=params.get("p_mix", 0.0),
            distance_ref=DistanceDistribution.from_params(dref) if dref else None,
            doc_target_len=params.get("doc_target_len", 480),
            seed=params.get("seed", 0),
        )

    def with_seed(self, seed: int) -> "LanguageSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class AnnotatedToken:
    id: int
    partner: Optional[int]
    surprisal_bits: float


@dataclass
class Document:
    """One generated document: columnar token annotations plus a stats cache."""

    family: str
    ids: np.ndarray  # uint16
    partner: Optional[np.ndarray] = None  # int32, -1 where no arc
    surprisal: Optional[np.ndarray] = None  # float64 bits
    cross_open: Optional[np.ndarray] = None  # uint8, 1 at cross-scheduled opens
    _stats: Optional[dict] = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    def token(self, i: int) -> AnnotatedToken:
        p = None
        if self.partner is not None and self.partner[i] >= 0:
            p = int(self.partner[i])
        s = float(self.surprisal[i]) if self.surprisal is not None else 0.0
        return AnnotatedToken(int(self.ids[i]), p, s)

    def annotated_tokens(self) -> Iterator[AnnotatedToken]:
        for i in range(len(self)):
            yield self.token(i)

    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """(opens, closes) index arrays sorted by open position."""
        if self.partner is None:
            return (np.empty(0, np.int64), np.empty(0, np.int64))
        idx = np.arange(len(self), dtype=np.int64)
        mask = (self.partner > idx) & (self.partner >= 0)
        return idx[mask], self.partner[mask].astype(np.int64)

    @property
    def stats(self) -> dict:
        if self._stats is None:
            self._stats = document_stats(self)
        return self._stats


def stationary_mean_depth(p_open: float) -> float:
    """Mean depth of the reflected birth-death walk (forced up at 0, up with
    p_open, down otherwise).  25.0 for the canonical p_open = 0.49."""
    q = 1.0 - p_open
    return q / ((1.0 + q - p_open) * (q - p_open))


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------


def _seed_sequence(spec: LanguageSpec, shard_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(spec.seed) & (2**64 - 1), int(shard_index)))


def _pcg_state(spec: LanguageSpec, shard_index: int) -> np.ndarray:
    words = _seed_sequence(spec, shard_index).generate_state(2, np.uint64)
    state = np.zeros(2, np.uint64)
    K.pcg32_seed(state, words[0], words[1])
    return state


def _distance_table(dref: DistanceDistribution):
    vals = dref.distances.astype(np.int64)
    p = dref.probs.astype(np.float64)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return vals, cdf, p


_EMPTY_DIST = (
    np.ones(1, np.int64),
    np.ones(1, np.float64),
    np.ones(1, np.float64),
)


# ---------------------------------------------------------------------------
# kernel-backed streams
# ---------------------------------------------------------------------------


def _stream_scheduled(spec: LanguageSpec, n_tokens: int, shard_index: int):
    """Raw batches (ids, partner, surp, flags, doc_ends) for nest/cross/mix."""
    if n_tokens <= 0:
        return
    state = _pcg_state(spec, shard_index)
    pair_p = spec.pair_dist.probabilities
    pair_cdf = spec.pair_dist.cdf
    n_pairs = spec.vocab.num_pairs
    if spec.family == "cross" or (spec.family == "nest_mix" and spec.p_mix > 0.0):
        dist_vals, dist_cdf, dist_p = _distance_table(spec.distance_ref)
    else:
        dist_vals, dist_cdf, dist_p = _EMPTY_DIST
    ring_sz = int(dist_vals.max()) + n_pairs + 2
    ring_type = np.full(ring_sz, -1, np.int32)
    ring_open = np.zeros(ring_sz, np.int64)
    open_mask = np.zeros(n_pairs, np.bool_)
    counters = np.zeros(K.N_COUNTERS, np.int64)

    cap = _BUF_TOKENS
    remaining = int(n_tokens)
    while remaining > 0:
        ids = np.empty(cap, np.uint16)
        partner = np.empty(cap, np.int32)
        surp = np.empty(cap, np.float64)
        flags = np.empty(cap, np.uint8)
        min_doc = spec.doc_target_len if spec.family != "cross" else 2 * spec.doc_target_len
        doc_ends = np.empty(cap // min_doc + 2, np.int64)
        budget = min(remaining, cap)
        if spec.family == "cross":
            n_tok, n_docs, status = K.cross_fill(
                ids, partner, surp, flags, doc_ends, state,
                pair_cdf, pair_p, dist_vals, dist_cdf, dist_p,
                spec.doc_target_len, budget,
                ring_type, ring_open, open_mask, counters,
            )
        else:
            n_tok, n_docs, status = K.nest_mix_fill(
                ids, partner, surp, flags, doc_ends, state,
                pair_cdf, pair_p, dist_vals, dist_cdf, dist_p,
                spec.p_open, spec.p_mix if spec.family == "nest_mix" else 0.0,
                spec.doc_target_len, budget,
                ring_type, ring_open, open_mask, counters,
            )
        if status == K.STATUS_GROW:
            cap *= 2
            continue
        if n_tok > 0:
            yield (
                ids[:n_tok],
                partner[:n_tok],
                surp[:n_tok],
                flags[:n_tok],
                doc_ends[:n_docs].copy(),
                counters.copy(),
            )
        # a STATUS_BUDGET here only means the buffer-capped call budget was
        # met; the stream is done when the full request is
        remaining -= n_tok


def _stream_iid(spec: LanguageSpec, n_tokens: int, shard_index: int):
    """Raw batches for rand/rep (vectorized numpy sampling)."""
    if n_tokens <= 0:
        return
    rng = np.random.Generator(np.random.PCG64(_seed_sequence(spec, shard_index)))
    dist = spec.token_dist
    log2p = -np.log2(dist.probabilities)
    if spec.family == "rep":
        k = spec.rep_block
        doc_len = (spec.doc_target_len // (2 * k)) * (2 * k)
    else:
        doc_len = spec.doc_target_len
    docs_per_batch = max(_BUF_TOKENS // doc_len, 1)
    remaining = int(n_tokens)
    while remaining > 0:
        n_docs = min(max(-(-remaining // doc_len), 1), docs_per_batch)
        n_tok = n_docs * doc_len
        if spec.family == "rand":
            idx = np.searchsorted(dist.cdf, rng.random(n_tok), side="right")
            np.minimum(idx, dist.support_size - 1, out=idx)
            ids = idx.astype(np.uint16)
            partner = np.full(n_tok, -1, np.int32)
            surp = log2p[idx]
        else:
            k = spec.rep_block
            half = n_tok // 2
            idx = np.searchsorted(dist.cdf, rng.random(half), side="right")
            np.minimum(idx, dist.support_size - 1, out=idx)
            blocks = idx.reshape(-1, k)
            both = np.concatenate([blocks, blocks], axis=1)  # (n_blocks, 2k)
            ids = both.reshape(-1).astype(np.uint16)
            s = np.zeros((blocks.shape[0], 2 * k), np.float64)
            s[:, :k] = log2p[blocks]
            surp = s.reshape(-1)
            # arcs i <-> i+k inside each block, document-relative
            off = np.arange(n_tok, dtype=np.int32).reshape(blocks.shape[0], 2 * k)
            pa = np.empty_like(off)
            pa[:, :k] = off[:, k:]
            pa[:, k:] = off[:, :k]
            partner = (pa.reshape(-1) % doc_len).astype(np.int32)
        flags = np.zeros(n_tok, np.uint8)
        doc_ends = (np.arange(1, n_docs + 1, dtype=np.int64)) * doc_len
        yield ids, partner, surp, flags, doc_ends, np.zeros(K.N_COUNTERS, np.int64)
        remaining -= n_tok


def _stream_batches(spec: LanguageSpec, n_tokens: int, shard_index: int = 0):
    spec.validate()
    if spec.family in ("rand", "rep"):
        yield from _stream_iid(spec, n_tokens, shard_index)
    else:
        yield from _stream_scheduled(spec, n_tokens, shard_index)


def _documents_from_batches(spec: LanguageSpec, batches) -> Iterator[Document]:
    has_arcs = spec.family != "rand"
    for ids, partner, surp, flags, doc_ends, _ in batches:
        lo = 0
        for hi in doc_ends:
            hi = int(hi)
            yield Document(
                family=spec.family,
                ids=ids[lo:hi],
                partner=partner[lo:hi] if has_arcs else None,
                surprisal=surp[lo:hi],
                cross_open=flags[lo:hi],
            )
            lo = hi


def generate(spec: LanguageSpec, n_tokens: int, shard_index: int = 0) -> Iterator[Document]:
    """Stream whole documents until cumulative length reaches n_tokens."""
    if n_tokens < 0:
        raise ValueError(f"token budget must be >= 0, got {n_tokens}")
    return _documents_from_batches(spec, _stream_batches(spec, n_tokens, shard_index))


def _family_entry(family: str):
    def entry(spec: LanguageSpec, n_tokens: int, shard_index: int = 0) -> Iterator[Document]:
        if spec.family != family:
            raise SpecError(f"spec family is {spec.family!r}, expected {family!r}")
        return generate(spec, n_tokens, shard_index)

    entry.__name__ = f"gen_{family}"
    entry.__qualname__ = f"gen_{family}"
    entry.__doc__ = f"Generate {family} documents; see :func:`generate`."
    return entry


gen_nest = _family_entry("nest")
gen_cross = _family_entry("cross")
gen_rand = _family_entry("rand")
gen_rep = _family_entry("rep")
gen_nest_mix = _family_entry("nest_mix")


def document_stats(doc: Document) -> dict:
    """Length, depth and crossing statistics of one document.

    Depth statistics apply to the balanced families and are reported as 0.0
    for rand/rep, whose token streams are not depth-interpretable.
    """
    n = len(doc)
    out = {
        "length": n,
        "max_depth": 0,
        "mean_depth": 0.0,
        "crossing_count": 0,
        "cross_arc_fraction": 0.0,
    }
    if n == 0:
        return out
    if doc.family in _PAIRED and doc.partner is not None:
        # every token sits in exactly one arc: +1 at opens, -1 at closes
        is_open = doc.partner > np.arange(n)
        depth = np.cumsum(np.where(is_open, 1, -1).astype(np.int64))
        out["max_depth"] = int(depth.max())
        out["mean_depth"] = float(depth.mean())
    opens, closes = doc.arcs()
    if opens.size:
        order = np.argsort(opens, kind="stable")
        out["crossing_count"] = int(
            K.count_crossings_sweep(opens[order], closes[order], n)
        )
        if doc.cross_open is not None:
            out["cross_arc_fraction"] = float(doc.cross_open[opens].mean())
    return out
