"""Command-line surface: generate, validate, stats, compare-dist, sample,
extract-dist.

Exit codes: 0 success, 1 validation failure, 2 usage or spec error.  Specs can
come from a JSON file (--spec, same schema as LanguageSpec.to_params) with
individual flags overriding fields; the file text is copied verbatim into the
manifest so corpora replay from the manifest alone.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import _kernels as K
from . import arcstats, corpusio
from .arcstats import DistanceDistribution
from .langgen import FAMILIES, LanguageSpec, SpecError, generate
from .vocab import make_distribution, make_vocab

_ENV_WORKERS = "FORMLANG_WORKERS"


def _default_workers() -> int:
    try:
        return max(int(os.environ.get(_ENV_WORKERS, "1")), 1)
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# spec construction
# ---------------------------------------------------------------------------


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", type=Path, default=None,
                   help="JSON spec file; flags below override its fields")
    p.add_argument("--family", choices=FAMILIES, default=None)
    p.add_argument("--pairs", type=int, default=None, help="open/close pair count (default 250)")
    p.add_argument("--p-open", type=float, default=None, help="nest open probability (default 0.49)")
    p.add_argument("--p-mix", type=float, default=None, help="nest_mix cross-open probability")
    p.add_argument("--rep-block", type=int, default=None, help="rep repetition length k (default 10)")
    p.add_argument("--doc-len", type=int, default=None,
                   help="document target length: tokens (nest/rand/rep/nest_mix) or opens (cross)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dist-file", type=Path, default=None,
                   help="distance pmf JSON (required for cross / nest_mix)")
    p.add_argument("--vocab-dist", choices=("uniform", "zipf"), default=None,
                   help="pair/token choice distribution (default uniform)")
    p.add_argument("--alpha", type=float, default=None, help="zipf exponent (default 1.0)")
    p.add_argument("--beta", type=float, default=None, help="zipf offset (default 2.7)")
    p.add_argument("--permute-seed", type=int, default=None,
                   help="seed for the random frequency-rank permutation")


def build_spec(args) -> tuple[LanguageSpec, str | None]:
    """LanguageSpec from --spec file plus flag overrides.

    Returns (spec, verbatim spec file text or None).
    """
    params: dict = {}
    spec_text = None
    if args.spec is not None:
        spec_text = Path(args.spec).read_text()
        params = json.loads(spec_text)
    if args.family is not None:
        params["family"] = args.family
    if "family" not in params or params["family"] is None:
        raise SpecError("--family is required (or provide it in --spec)")
    if args.pairs is not None:
        params["num_pairs"] = args.pairs
    params.setdefault("num_pairs", 250)
    for flag, key in (("p_open", "p_open"), ("p_mix", "p_mix"),
                      ("rep_block", "rep_block"), ("doc_len", "doc_target_len"),
                      ("seed", "seed")):
        val = getattr(args, flag, None)
        if val is not None:
            params[key] = val

    family = params["family"]
    kind = args.vocab_dist
    dist_params = None
    if kind is not None or args.alpha is not None or args.beta is not None \
            or args.permute_seed is not None:
        dist_params = {
            "kind": kind or "zipf",
            "alpha": args.alpha,
            "beta": args.beta,
            "permute_seed": args.permute_seed,
        }
    if family in ("rand", "rep"):
        if dist_params is not None:
            dist_params["support_size"] = 2 * params["num_pairs"]
            params["token_dist"] = dist_params
        params.setdefault("token_dist",
                          {"kind": "uniform", "support_size": 2 * params["num_pairs"]})
    else:
        if dist_params is not None:
            dist_params["support_size"] = params["num_pairs"]
            params["pair_dist"] = dist_params
        params.setdefault("pair_dist", {"kind": "uniform", "support_size": params["num_pairs"]})

    if args.dist_file is not None:
        params["distance_ref"] = DistanceDistribution.load(args.dist_file).to_params()
    return LanguageSpec.from_params(params), spec_text


# ---------------------------------------------------------------------------
# corpus-level checks (shared by validate and stats)
# ---------------------------------------------------------------------------


def _shard_arrays(manifest: corpusio.CorpusManifest):
    for k, tokens in enumerate(corpusio.read_shards(manifest)):
        bounds = corpusio.shard_document_bounds(manifest, k)
        if bounds[-1] != tokens.shape[0]:
            raise corpusio.CorruptShardError(
                f"shard {k}: document bounds inconsistent with token count"
            )
        yield k, tokens, bounds


def validate_manifest(manifest: corpusio.CorpusManifest, out=None) -> bool:
    """Family-invariant validation of every document; prints findings."""
    out = sys.stdout if out is None else out
    spec = manifest.spec()
    vocab = spec.vocab
    n_pairs = vocab.num_pairs
    ok = True
    doc_base = 0
    for k, tokens, bounds in _shard_arrays(manifest):
        n_docs = bounds.shape[0] - 1
        if tokens.size and int(tokens.max()) >= vocab.total_size:
            print(f"shard {k}: token ID out of range", file=out)
            ok = False
        if spec.family == "nest":
            # well-nestedness implies balance, so one scan reports both
            stack = np.empty(int(np.diff(bounds).max() or 1), np.int32)
            bad = int(K.nested_scan_docs(tokens, bounds, n_pairs, stack))
            if bad >= 0:
                print(f"well-nestedness violated at document {doc_base + bad}", file=out)
                ok = False
        elif spec.family in ("cross", "nest_mix"):
            bal = np.zeros(n_pairs, np.int64)
            bad = int(K.balance_scan_docs(tokens, bounds, n_pairs, bal))
            if bad >= 0:
                print(f"balance violated at document {doc_base + bad}", file=out)
                ok = False
        if spec.family == "cross":
            lens = np.diff(bounds)
            bad = np.nonzero(lens != 2 * spec.doc_target_len)[0]
            if bad.size:
                print(
                    f"document {doc_base + int(bad[0])} has {int(lens[bad[0]])} tokens, "
                    f"expected {2 * spec.doc_target_len}",
                    file=out,
                )
                ok = False
        if spec.family == "rep":
            step = 2 * spec.rep_block
            lens = np.diff(bounds)
            if (lens % step).any():
                bad = int(np.nonzero(lens % step)[0][0])
                print(f"document {doc_base + bad} length not a block multiple", file=out)
                ok = False
            else:
                bad = int(K.rep_block_check(tokens, spec.rep_block))
                if bad >= 0:
                    doc = int(np.searchsorted(bounds, bad, side="right")) - 1
                    print(f"repetition violated at document {doc_base + doc}", file=out)
                    ok = False
        doc_base += n_docs
    print("validation " + ("PASSED" if ok else "FAILED"), file=out)
    return ok


def corpus_statistics(manifest: corpusio.CorpusManifest) -> dict:
    """Aggregate arcstats metrics over all shards of a corpus."""
    spec = manifest.spec()
    vocab = spec.vocab
    n_pairs = vocab.num_pairs
    paired = spec.family in ("nest", "cross", "nest_mix")

    metrics: dict = {
        "family": spec.family,
        "total_tokens": manifest.total_tokens,
        "documents": 0,
    }
    token_counts = np.zeros(vocab.total_size, np.int64)
    n_positions = 0
    depth_sum = 0.0
    depth_max = 0
    dist_counts = np.zeros(1, np.int64)
    crossing_total = 0
    docs_with_crossing = 0
    doc_len_max = 0

    for k, tokens, bounds in _shard_arrays(manifest):
        metrics["documents"] += bounds.shape[0] - 1
        doc_len_max = max(doc_len_max, int(np.diff(bounds).max() or 0))
        token_counts += np.bincount(tokens, minlength=vocab.total_size)
        n_positions += tokens.size
        if not paired:
            continue
        depth = np.empty(tokens.size, np.int64)
        rc = int(K.depth_profile(tokens, n_pairs, depth))
        if rc < 0:
            raise ValueError(f"shard {k}: unbalanced prefix at {-rc - 1}")
        depth_sum += float(depth.sum())
        depth_max = max(depth_max, int(depth.max()))
        arcs = arcstats.match_arcs(tokens, vocab, policy="stack")
        d = arcs.distances()
        if d.size:
            if d.max() >= dist_counts.size:
                grown = np.zeros(int(d.max()) + 1, np.int64)
                grown[: dist_counts.size] = dist_counts
                dist_counts = grown
            dist_counts += np.bincount(d, minlength=dist_counts.size)
        arc_doc = np.searchsorted(bounds, arcs.opens, side="right") - 1
        per_doc = np.zeros(bounds.shape[0] - 1, np.int64)
        K.crossings_per_doc(arcs.opens, arcs.closes, arc_doc, bounds, per_doc)
        crossing_total += int(per_doc.sum())
        docs_with_crossing += int((per_doc > 0).sum())

    metrics["doc_len_max"] = doc_len_max
    if paired and n_positions:
        metrics["mean_depth"] = depth_sum / n_positions
        metrics["max_depth"] = depth_max
        metrics["crossing_count"] = crossing_total
        metrics["docs_with_crossing"] = docs_with_crossing
        total_arcs = int(dist_counts.sum())
        if total_arcs:
            ds = np.nonzero(dist_counts)[0]
            metrics["arcs"] = total_arcs
            metrics["mean_arc_distance"] = float(
                (ds * dist_counts[ds]).sum() / total_arcs
            )
            metrics["max_arc_distance"] = int(ds.max())
    if manifest.stats:
        opens = manifest.stats.get("opens", 0)
        if opens:
            metrics["cross_arc_fraction"] = manifest.stats.get("cross_opens", 0) / opens
        metrics["forced_closes"] = manifest.stats.get("forced_closes", 0)
        metrics["displaced_arcs"] = manifest.stats.get("displaced", 0)

    counts = token_counts[:n_pairs] if paired else token_counts
    observed = counts[counts > 0]
    if observed.size >= 2:
        fit = arcstats.fit_zipf(observed, beta_fixed=2.7)
        metrics["zipf_alpha_hat"] = fit.alpha_hat
        metrics["zipf_beta_fixed"] = fit.beta_fixed
    return metrics


def _corpus_distance_pmf(manifest: corpusio.CorpusManifest) -> DistanceDistribution:
    spec = manifest.spec()
    counts = np.zeros(1, np.int64)
    total = 0
    for _, tokens, bounds in _shard_arrays(manifest):
        arcs = arcstats.match_arcs(tokens, spec.vocab, policy="stack")
        d = arcs.distances()
        if d.size:
            if d.max() >= counts.size:
                grown = np.zeros(int(d.max()) + 1, np.int64)
                grown[: counts.size] = counts
                counts = grown
            counts += np.bincount(d, minlength=counts.size)
            total += d.size
    if total == 0:
        raise ValueError("corpus has no arcs; distance distribution undefined")
    ds = np.nonzero(counts)[0].astype(np.int64)
    return DistanceDistribution(ds, counts[ds] / total, total)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    spec, spec_text = build_spec(args)
    t0 = time.time()
    manifest = corpusio.generate_corpus(
        spec,
        args.tokens,
        args.out,
        shard_size=args.shard_size,
        seq_len=args.seq_len,
        workers=args.workers,
        sidecars=args.sidecars,
        spec_file=spec_text,
    )
    dt = time.time() - t0
    rate = manifest.total_tokens / dt if dt > 0 else float("inf")
    print(
        f"wrote {manifest.total_tokens} tokens in {len(manifest.shard_entries)} shard(s) "
        f"to {args.out} ({dt:.2f}s, {rate / 1e6:.2f} M tokens/s)"
    )
    return 0


def cmd_validate(args) -> int:
    manifest = corpusio.CorpusManifest.load(args.manifest)
    return 0 if validate_manifest(manifest) else 1


def cmd_stats(args) -> int:
    manifest = corpusio.CorpusManifest.load(args.manifest)
    metrics = corpus_statistics(manifest)
    report = arcstats.render_report(metrics, machine=args.machine)
    sys.stdout.write(report)
    if not args.no_archive:
        name = "stats.json" if args.machine else "stats.txt"
        (Path(args.manifest).parent / name).write_text(report)
    return 0


def cmd_compare_dist(args) -> int:
    left = _corpus_distance_pmf(corpusio.CorpusManifest.load(args.manifest))
    if args.against is not None:
        right = _corpus_distance_pmf(corpusio.CorpusManifest.load(args.against))
        right_name = str(args.against)
    elif args.ref is not None:
        right = DistanceDistribution.load(args.ref)
        right_name = str(args.ref)
    else:
        manifest = corpusio.CorpusManifest.load(args.manifest)
        dref = manifest.spec().distance_ref
        if dref is None:
            print("corpus has no distance_ref; pass a second manifest or --ref",
                  file=sys.stderr)
            return 2
        right = dref
        right_name = "manifest distance_ref"
    kl = arcstats.kl_divergence(left, right, smoothing=args.smoothing)
    metrics = {
        "kl_bits": kl,
        "reference": right_name,
        "left_mean_distance": left.mean(),
        "right_mean_distance": right.mean(),
        "left_arcs": left.sample_count,
    }
    sys.stdout.write(arcstats.render_report(metrics, machine=args.machine))
    if args.max_kl is not None and kl >= args.max_kl:
        print(f"KL {kl:.6f} bits >= threshold {args.max_kl}", file=sys.stderr)
        return 1
    return 0


def cmd_sample(args) -> int:
    spec, _ = build_spec(args)
    paired = spec.family in ("nest", "cross", "nest_mix")
    for doc in itertools.islice(generate(spec, 2**62), args.docs):
        sys.stdout.write(corpusio.to_text(doc.ids, spec.vocab, paired=paired))
        sys.stdout.write("\n")
    return 0


def cmd_extract_dist(args) -> int:
    manifest = corpusio.CorpusManifest.load(args.manifest)
    pmf = _corpus_distance_pmf(manifest)
    pmf.save(args.out)
    print(f"wrote distance pmf ({pmf.distances.size} support points, "
          f"{pmf.sample_count} arcs) to {args.out}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="formlang",
        description="Generate and validate synthetic formal-language corpora.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a sharded corpus with manifest")
    _add_spec_flags(g)
    g.add_argument("--tokens", type=int, required=True, help="minimum corpus size in tokens")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--shard-size", type=int, default=corpusio.DEFAULT_SHARD_TOKENS)
    g.add_argument("--seq-len", type=int, default=512)
    g.add_argument("--workers", type=int, default=_default_workers(),
                   help=f"parallel shard workers (default ${_ENV_WORKERS} or 1)")
    g.add_argument("--sidecars", action="store_true",
                   help="persist partner/surprisal/cross-flag sidecar arrays")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check family invariants of every document")
    v.add_argument("manifest", type=Path)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("stats", help="corpus statistics report")
    s.add_argument("manifest", type=Path)
    s.add_argument("--machine", action="store_true", help="JSON instead of key-value text")
    s.add_argument("--no-archive", action="store_true",
                   help="print only; skip writing stats.txt next to the manifest")
    s.set_defaults(func=cmd_stats)

    c = sub.add_parser("compare-dist", help="KL divergence between arc-distance pmfs")
    c.add_argument("manifest", type=Path)
    c.add_argument("against", type=Path, nargs="?", default=None,
                   help="second manifest (default: the first manifest's own distance_ref)")
    c.add_argument("--ref", type=Path, default=None, help="reference pmf JSON file")
    c.add_argument("--smoothing", type=float, default=None)
    c.add_argument("--max-kl", type=float, default=None,
                   help="exit 1 if KL in bits reaches this threshold")
    c.add_argument("--machine", action="store_true")
    c.set_defaults(func=cmd_compare_dist)

    sa = sub.add_parser("sample", help="print documents as text to stdout")
    _add_spec_flags(sa)
    sa.add_argument("--docs", type=int, default=10)
    sa.set_defaults(func=cmd_sample)

    e = sub.add_parser("extract-dist", help="empirical arc-distance pmf of a corpus")
    e.add_argument("manifest", type=Path)
    e.add_argument("--out", "-o", type=Path, required=True)
    e.set_defaults(func=cmd_extract_dist)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (corpusio.CorruptShardError, corpusio.UnsupportedFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
