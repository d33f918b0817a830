"""Generation throughput per family and worker scaling.

The generators are jit-compiled with per-shard PCG32 streams, so shards
parallelize across threads without losing byte determinism.  First call per
family includes compilation; the benchmark warms everything first.
"""

import tempfile
import time
from pathlib import Path

import formlang as fl
from formlang.langgen import _stream_batches

vocab = fl.make_vocab(250)
pairs = fl.make_distribution("uniform", 250)
flat = fl.make_distribution("uniform", 500)

nest = fl.LanguageSpec(family="nest", vocab=vocab, pair_dist=pairs, seed=3)
dref = fl.distance_distribution(
    fl.match_arcs(d.ids, vocab) for d in fl.generate(nest, 300_000)
)

specs = {
    "nest": nest,
    "cross": fl.LanguageSpec(family="cross", vocab=vocab, pair_dist=pairs,
                             seed=3, doc_target_len=50_000, distance_ref=dref),
    "nest_mix": fl.LanguageSpec(family="nest_mix", vocab=vocab, pair_dist=pairs,
                                seed=3, p_mix=0.1, distance_ref=dref),
    "rand": fl.LanguageSpec(family="rand", vocab=vocab, token_dist=flat, seed=3),
    "rep": fl.LanguageSpec(family="rep", vocab=vocab, token_dist=flat, seed=3),
}

budget = 20_000_000
print(f"single-stream generation, {budget / 1e6:.0f}M tokens each:")
for name, spec in specs.items():
    for _ in _stream_batches(spec, 1000):  # warm the jit
        pass
    t0 = time.perf_counter()
    n = sum(batch[0].shape[0] for batch in _stream_batches(spec, budget))
    dt = time.perf_counter() - t0
    print(f"  {name:9s} {n / dt / 1e6:6.1f} M tokens/s")

print("\nsharded corpus writing (tokens + hashing + disk), 100M nest tokens:")
root = Path(tempfile.mkdtemp(prefix="formlang_bench_"))
for workers in (1, 2, 4, 8):
    t0 = time.perf_counter()
    manifest = fl.generate_corpus(nest, 100_000_000, root / f"w{workers}",
                                  shard_size=16_000_000, workers=workers)
    dt = time.perf_counter() - t0
    print(f"  workers={workers}: {manifest.total_tokens / dt / 1e6:6.1f} M tokens/s")
print(f"\nscratch dir: {root} (safe to delete)")
