"""Bit-exact corpus persistence: sharded binary token files plus manifests.

Shard wire format (little-endian):
    16-byte header = magic "FLC1" | format_version u32 | vocab_total_size u32
    | token_count u32, followed by token_count uint16 token IDs.

The manifest is a JSON file at the corpus root recording the full language
spec, per-shard token counts and SHA-256 content hashes.  In the canonical
"sharded" mode, shard k is generated from SeedSequence((seed, k)) with a fixed
per-shard token budget, so regenerating from the manifest alone reproduces
identical shard bytes regardless of worker count.

Document lengths are always persisted per shard (<stem>.docs.npy); partner /
surprisal / cross-flag sidecars are opt-in since trainers need only tokens.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional

import numpy as np

from .arcstats import DistanceDistribution  # noqa: F401  (re-exported for manifest users)
from .langgen import Document, LanguageSpec, _stream_batches
from .vocab import Vocabulary

__all__ = [
    "SHARD_MAGIC",
    "FORMAT_VERSION",
    "DEFAULT_SHARD_TOKENS",
    "CorruptShardError",
    "UnsupportedFormatError",
    "ShardEntry",
    "CorpusManifest",
    "write_shards",
    "generate_corpus",
    "read_shards",
    "iter_documents",
    "chunk",
    "Chunker",
    "to_text",
    "from_text",
]

SHARD_MAGIC = b"FLC1"
FORMAT_VERSION = 1
DEFAULT_SHARD_TOKENS = 64 * 1024 * 1024
_HEADER = struct.Struct("<4sIII")


class CorruptShardError(RuntimeError):
    pass


class UnsupportedFormatError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShardEntry:
    path: str
    token_count: int
    content_hash: str


@dataclass
class CorpusManifest:
    format_version: int
    language_spec: dict
    seed: int
    requested_tokens: int
    total_tokens: int
    seq_len: int
    shard_size: int
    mode: str  # "sharded" (canonical, per-shard seeds) or "stream"
    sidecars: bool
    shard_entries: list[ShardEntry]
    created_at: str
    stats: dict = field(default_factory=dict)
    spec_file: Optional[str] = None
    root: Optional[Path] = field(default=None, repr=False)

    def full_batches(self, batch_size: int) -> int:
        """Whole training batches of batch_size sequences of seq_len tokens."""
        return self.total_tokens // (self.seq_len * batch_size)

    def spec(self) -> LanguageSpec:
        return LanguageSpec.from_params(self.language_spec)

    def shard_path(self, entry: ShardEntry) -> Path:
        base = self.root if self.root is not None else Path(".")
        return base / entry.path

    def to_json(self) -> dict:
        return {
            "format_version": self.format_version,
            "language_spec": self.language_spec,
            "seed": self.seed,
            "requested_tokens": self.requested_tokens,
            "total_tokens": self.total_tokens,
            "seq_len": self.seq_len,
            "shard_size": self.shard_size,
            "mode": self.mode,
            "sidecars": self.sidecars,
            "shard_entries": [
                {"path": e.path, "token_count": e.token_count, "content_hash": e.content_hash}
                for e in self.shard_entries
            ],
            "created_at": self.created_at,
            "stats": self.stats,
            "spec_file": self.spec_file,
        }

    def save(self, path) -> Path:
        """Write atomically: temp file in the same directory, then rename."""
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w") as f:
            json.dump(self.to_json(), f, indent=1, sort_keys=True)
            f.write("\n")
        os.replace(tmp, path)
        self.root = path.parent
        return path

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        path = Path(path)
        with open(path) as f:
            raw = json.load(f)
        if raw["format_version"] != FORMAT_VERSION:
            raise UnsupportedFormatError(
                f"manifest format {raw['format_version']} unsupported "
                f"(expected {FORMAT_VERSION})"
            )
        return cls(
            format_version=raw["format_version"],
            language_spec=raw["language_spec"],
            seed=raw["seed"],
            requested_tokens=raw["requested_tokens"],
            total_tokens=raw["total_tokens"],
            seq_len=raw["seq_len"],
            shard_size=raw["shard_size"],
            mode=raw["mode"],
            sidecars=raw["sidecars"],
            shard_entries=[ShardEntry(**e) for e in raw["shard_entries"]],
            created_at=raw["created_at"],
            stats=raw.get("stats", {}),
            spec_file=raw.get("spec_file"),
            root=path.parent,
        )


# ---------------------------------------------------------------------------
# shard writing
# ---------------------------------------------------------------------------


class _ShardAccumulator:
    """Collects batches for one shard and writes it with a rolling hash."""

    def __init__(self, sidecars: bool):
        self.sidecars = sidecars
        self.ids: list[np.ndarray] = []
        self.partner: list[np.ndarray] = []
        self.surp: list[np.ndarray] = []
        self.flags: list[np.ndarray] = []
        self.doc_lens: list[np.ndarray] = []
        self.n_tokens = 0
        self.counters = np.zeros(4, np.int64)

    def add(self, ids, partner, surp, flags, doc_ends, counters) -> None:
        self.ids.append(ids)
        if self.sidecars:
            self.partner.append(partner)
            self.surp.append(surp.astype(np.float32))
            self.flags.append(flags)
        lens = np.diff(doc_ends, prepend=0).astype(np.uint32)
        self.doc_lens.append(lens)
        self.n_tokens += int(ids.shape[0])
        self.counters = counters

    def add_document(self, doc: Document) -> None:
        self.ids.append(doc.ids)
        if self.sidecars:
            self.partner.append(
                doc.partner if doc.partner is not None else np.full(len(doc), -1, np.int32)
            )
            self.surp.append(
                (doc.surprisal if doc.surprisal is not None else np.zeros(len(doc))).astype(
                    np.float32
                )
            )
            self.flags.append(
                doc.cross_open if doc.cross_open is not None else np.zeros(len(doc), np.uint8)
            )
        self.doc_lens.append(np.array([len(doc)], np.uint32))
        self.n_tokens += len(doc)

    def write(self, path: Path, vocab_total: int) -> ShardEntry:
        header = _HEADER.pack(SHARD_MAGIC, FORMAT_VERSION, vocab_total, self.n_tokens)
        digest = hashlib.sha256()
        digest.update(header)
        with open(path, "wb") as f:
            f.write(header)
            for a in self.ids:
                buf = np.ascontiguousarray(a, dtype="<u2").tobytes()
                digest.update(buf)
                f.write(buf)
        np.save(str(path) + ".docs.npy", np.concatenate(self.doc_lens))
        if self.sidecars:
            np.save(str(path) + ".partner.npy", np.concatenate(self.partner))
            np.save(str(path) + ".surp.npy", np.concatenate(self.surp))
            np.save(str(path) + ".crossflag.npy", np.concatenate(self.flags))
        return ShardEntry(path.name, self.n_tokens, digest.hexdigest())


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _shard_budgets(n_tokens: int, shard_size: int) -> list[int]:
    if n_tokens <= 0:
        return []
    n_full, rem = divmod(n_tokens, shard_size)
    return [shard_size] * n_full + ([rem] if rem else [])


def write_shards(
    documents: Iterable[Document],
    spec: LanguageSpec,
    out_dir,
    *,
    shard_size: int = DEFAULT_SHARD_TOKENS,
    seq_len: int = 512,
    sidecars: bool = False,
    spec_file: Optional[str] = None,
) -> CorpusManifest:
    """Persist an explicit document stream (mode="stream").

    Documents are concatenated in order and split into whole-document shards
    of at least shard_size tokens each.  For corpora that must be regenerable
    from the manifest alone, prefer :func:`generate_corpus`.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries: list[ShardEntry] = []
    acc = _ShardAccumulator(sidecars)
    total = 0
    for doc in documents:
        acc.add_document(doc)
        if acc.n_tokens >= shard_size:
            entries.append(acc.write(out / f"shard-{len(entries):05d}.bin", spec.vocab.total_size))
            total += acc.n_tokens
            acc = _ShardAccumulator(sidecars)
    if acc.n_tokens:
        entries.append(acc.write(out / f"shard-{len(entries):05d}.bin", spec.vocab.total_size))
        total += acc.n_tokens
    manifest = CorpusManifest(
        format_version=FORMAT_VERSION,
        language_spec=spec.to_params(),
        seed=spec.seed,
        requested_tokens=total,
        total_tokens=total,
        seq_len=seq_len,
        shard_size=shard_size,
        mode="stream",
        sidecars=sidecars,
        shard_entries=entries,
        created_at=_now(),
        spec_file=spec_file,
    )
    manifest.save(out / "manifest.json")
    return manifest


def generate_corpus(
    spec: LanguageSpec,
    n_tokens: int,
    out_dir,
    *,
    shard_size: int = DEFAULT_SHARD_TOKENS,
    seq_len: int = 512,
    workers: int = 1,
    sidecars: bool = False,
    spec_file: Optional[str] = None,
) -> CorpusManifest:
    """Generate and persist the canonical sharded corpus (mode="sharded").

    Shard k draws from SeedSequence((spec.seed, k)) and emits whole documents
    until its budget is met, so output bytes depend only on (spec, n_tokens,
    shard_size), never on worker count or scheduling.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    budgets = _shard_budgets(int(n_tokens), int(shard_size))
    stats_lock = threading.Lock()
    stats = {"opens": 0, "cross_opens": 0, "forced_closes": 0, "displaced": 0, "documents": 0}

    def build(k: int) -> ShardEntry:
        acc = _ShardAccumulator(sidecars)
        n_docs = 0
        for batch in _stream_batches(spec, budgets[k], shard_index=k):
            acc.add(*batch)
            n_docs += int(batch[4].shape[0])
        entry = acc.write(out / f"shard-{k:05d}.bin", spec.vocab.total_size)
        with stats_lock:
            stats["opens"] += int(acc.counters[0])
            stats["cross_opens"] += int(acc.counters[1])
            stats["forced_closes"] += int(acc.counters[2])
            stats["displaced"] += int(acc.counters[3])
            stats["documents"] += n_docs
        return entry

    if budgets and workers > 1:
        # warm the jit once so threads do not race to compile
        for _ in _stream_batches(spec, 1, shard_index=0):
            break
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(build, range(len(budgets))))
    else:
        entries = [build(k) for k in range(len(budgets))]

    manifest = CorpusManifest(
        format_version=FORMAT_VERSION,
        language_spec=spec.to_params(),
        seed=spec.seed,
        requested_tokens=int(n_tokens),
        total_tokens=sum(e.token_count for e in entries),
        seq_len=seq_len,
        shard_size=shard_size,
        mode="sharded",
        sidecars=sidecars,
        shard_entries=entries,
        created_at=_now(),
        stats=stats,
        spec_file=spec_file,
    )
    manifest.save(out / "manifest.json")
    return manifest


def regenerate(manifest: CorpusManifest, out_dir, workers: int = 1) -> CorpusManifest:
    """Re-run the canonical generation recorded in a manifest."""
    if manifest.mode != "sharded":
        raise ValueError("only mode='sharded' manifests are regenerable byte-exactly")
    return generate_corpus(
        manifest.spec(),
        manifest.requested_tokens,
        out_dir,
        shard_size=manifest.shard_size,
        seq_len=manifest.seq_len,
        workers=workers,
        sidecars=manifest.sidecars,
    )


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------


def _load_shard_bytes(path: Path, entry: ShardEntry, verify: bool) -> bytes:
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise CorruptShardError(f"shard missing: {path}")
    if verify:
        digest = hashlib.sha256(data).hexdigest()
        if digest != entry.content_hash:
            raise CorruptShardError(
                f"shard {entry.path}: content hash mismatch "
                f"(expected {entry.content_hash}, got {digest})"
            )
    if len(data) < _HEADER.size:
        raise CorruptShardError(f"shard {entry.path}: truncated header")
    magic, version, vocab_total, token_count = _HEADER.unpack_from(data)
    if magic != SHARD_MAGIC:
        raise UnsupportedFormatError(f"shard {entry.path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedFormatError(
            f"shard {entry.path}: format version {version} unsupported"
        )
    expected = _HEADER.size + 2 * token_count
    if len(data) != expected:
        raise CorruptShardError(
            f"shard {entry.path}: expected {expected} bytes, found {len(data)}"
        )
    return data


def read_shards(manifest, verify: bool = True) -> Iterator[np.ndarray]:
    """Yield each shard's tokens in written order, verifying hashes first."""
    if not isinstance(manifest, CorpusManifest):
        manifest = CorpusManifest.load(manifest)
    for entry in manifest.shard_entries:
        data = _load_shard_bytes(manifest.shard_path(entry), entry, verify)
        yield np.frombuffer(data, dtype="<u2", offset=_HEADER.size)


def read_tokens(manifest, verify: bool = True) -> np.ndarray:
    """All tokens of a corpus as one array."""
    parts = list(read_shards(manifest, verify))
    if not parts:
        return np.empty(0, np.uint16)
    return np.concatenate(parts)


def shard_document_bounds(manifest, shard_index: int) -> np.ndarray:
    """Document boundary offsets [0, end_0, ..., end_n] for one shard."""
    if not isinstance(manifest, CorpusManifest):
        manifest = CorpusManifest.load(manifest)
    entry = manifest.shard_entries[shard_index]
    lens = np.load(str(manifest.shard_path(entry)) + ".docs.npy")
    return np.concatenate([[0], np.cumsum(lens.astype(np.int64))])


def iter_documents(manifest, verify: bool = True) -> Iterator[np.ndarray]:
    """Yield per-document token arrays using the .docs sidecars."""
    if not isinstance(manifest, CorpusManifest):
        manifest = CorpusManifest.load(manifest)
    for k, tokens in enumerate(read_shards(manifest, verify)):
        bounds = shard_document_bounds(manifest, k)
        if bounds[-1] != tokens.shape[0]:
            raise CorruptShardError(
                f"shard {manifest.shard_entries[k].path}: document lengths sum to "
                f"{int(bounds[-1])}, shard holds {tokens.shape[0]} tokens"
            )
        for i in range(bounds.shape[0] - 1):
            yield tokens[bounds[i] : bounds[i + 1]]


# ---------------------------------------------------------------------------
# chunking
# ---------------------------------------------------------------------------


class Chunker:
    """Non-overlapping fixed-length windows over a stream of token arrays.

    After iteration, ``dropped`` holds the trailing remainder token count and
    ``remainder`` the tokens themselves, so concat(chunks) + remainder always
    reassembles the input stream.
    """

    def __init__(self, arrays: Iterable[np.ndarray], seq_len: int):
        if seq_len < 1:
            raise ValueError(f"seq_len must be >= 1, got {seq_len}")
        self._arrays = arrays
        self.seq_len = seq_len
        self.dropped = 0
        self.remainder: np.ndarray = np.empty(0, np.uint16)

    def __iter__(self) -> Iterator[np.ndarray]:
        carry = np.empty(0, np.uint16)
        for arr in self._arrays:
            if carry.size:
                arr = np.concatenate([carry, np.asarray(arr)])
            else:
                arr = np.asarray(arr)
            n_full = arr.shape[0] // self.seq_len
            for i in range(n_full):
                yield arr[i * self.seq_len : (i + 1) * self.seq_len]
            carry = arr[n_full * self.seq_len :]
        self.remainder = carry
        self.dropped = int(carry.shape[0])


def chunk(arrays: Iterable[np.ndarray], seq_len: int) -> Chunker:
    return Chunker(arrays, seq_len)


# ---------------------------------------------------------------------------
# text codec
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"^(\d+)(_\(|_\))?$")


def to_text(tokens, vocab: Vocabulary, paired: bool = True) -> str:
    """Render tokens as whitespace-separated text.

    With paired=True open ID t renders as "t_(" and close ID t+N as "t_)";
    with paired=False (rand/rep corpora) flat IDs render as bare integers.
    """
    ids = np.asarray(tokens)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab.total_size):
        raise ValueError("token ID out of vocabulary range")
    if not paired:
        return " ".join(str(int(t)) for t in ids)
    n = vocab.num_pairs
    parts = []
    for t in ids:
        t = int(t)
        parts.append(f"{t}_(" if t < n else f"{t - n}_)")
    return " ".join(parts)


def from_text(text: str, vocab: Vocabulary) -> np.ndarray:
    """Parse the :func:`to_text` rendering back to token IDs.

    Accepts both paired ("12_(", "12_)") and bare ("262") tokens on any
    number of lines; raises ValueError with line/column on bad input.
    """
    out: list[int] = []
    n = vocab.num_pairs
    for lineno, line in enumerate(text.splitlines(), start=1):
        for m in re.finditer(r"\S+", line):
            tok = m.group(0)
            col = m.start() + 1
            parsed = _TOKEN_RE.match(tok)
            if not parsed:
                raise ValueError(f"line {lineno}, col {col}: unparsable token {tok!r}")
            value = int(parsed.group(1))
            suffix = parsed.group(2)
            if suffix == "_(":
                if value >= n:
                    raise ValueError(
                        f"line {lineno}, col {col}: open ID {value} out of range [0, {n})"
                    )
                out.append(value)
            elif suffix == "_)":
                if value >= n:
                    raise ValueError(
                        f"line {lineno}, col {col}: close ID {value} out of range [0, {n})"
                    )
                out.append(value + n)
            else:
                if value >= vocab.total_size:
                    raise ValueError(
                        f"line {lineno}, col {col}: token {value} out of range "
                        f"[0, {vocab.total_size})"
                    )
                out.append(value)
    return np.array(out, dtype=np.uint16)
