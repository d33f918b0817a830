"""Reader for the corpus wire format (manifest.json + FLC1 binary shards).

This package consumes corpora strictly through their on-disk interface:
a 16-byte little-endian shard header (magic "FLC1", u32 format version,
u32 vocab size, u32 token count) followed by uint16 token IDs, plus a JSON
manifest listing per-shard token counts and SHA-256 content hashes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

SHARD_MAGIC = b"FLC1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")


class CorpusError(RuntimeError):
    pass


def load_manifest(path) -> dict:
    path = Path(path)
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CorpusError(f"unsupported manifest format: {manifest.get('format_version')}")
    manifest["_root"] = path.parent
    return manifest


def read_tokens(manifest: dict, verify: bool = True) -> np.ndarray:
    """All corpus tokens in shard order, hash-verified."""
    parts = []
    for entry in manifest["shard_entries"]:
        raw = (manifest["_root"] / entry["path"]).read_bytes()
        if verify:
            digest = hashlib.sha256(raw).hexdigest()
            if digest != entry["content_hash"]:
                raise CorpusError(f"shard {entry['path']}: hash mismatch")
        magic, version, vocab_total, count = _HEADER.unpack_from(raw)
        if magic != SHARD_MAGIC or version != FORMAT_VERSION:
            raise CorpusError(f"shard {entry['path']}: bad header")
        if len(raw) != _HEADER.size + 2 * count:
            raise CorpusError(f"shard {entry['path']}: truncated")
        parts.append(np.frombuffer(raw, dtype="<u2", offset=_HEADER.size))
    if not parts:
        return np.empty(0, np.uint16)
    return np.concatenate(parts)


def vocab_size(manifest: dict) -> int:
    return 2 * manifest["language_spec"]["num_pairs"]


def sequence_matrix(tokens: np.ndarray, seq_len: int) -> np.ndarray:
    """Non-overlapping seq_len windows as an (n, seq_len) int64 matrix;
    the trailing remainder is dropped."""
    n = tokens.shape[0] // seq_len
    if n == 0:
        raise CorpusError(f"corpus shorter than one sequence of {seq_len}")
    return tokens[: n * seq_len].astype(np.int64).reshape(n, seq_len)
