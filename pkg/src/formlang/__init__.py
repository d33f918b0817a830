"""Synthetic formal-language corpora with structural validators.

Five language families over a paired open/close vocabulary:

- nest: well-nested brackets (Dyck), a subcritical open/close walk
- cross: balanced but freely crossing arcs with scheduled distances
- rand: i.i.d. tokens from the vocabulary distribution
- rep: random blocks immediately repeated (regular)
- nest_mix: nest with a fraction of opens scheduled the cross way

Plus validators (balance, nestedness, crossing counts, distance KL, Zipf
fits) that recompute everything from raw tokens, and a bit-exact sharded
binary corpus format with reproducibility manifests.
"""

from .vocab import (
    Vocabulary,
    DistributionWeights,
    make_vocab,
    make_distribution,
    sample_token,
    sample_tokens,
)
from .arcstats import (
    ArcSet,
    BalanceReport,
    DistanceDistribution,
    ZipfFit,
    check_balanced,
    check_well_nested,
    match_arcs,
    count_crossings,
    distance_distribution,
    kl_divergence,
    depth_stats,
    fit_zipf,
)
from .langgen import (
    LanguageSpec,
    Document,
    AnnotatedToken,
    SpecError,
    generate,
    gen_nest,
    gen_cross,
    gen_rand,
    gen_rep,
    gen_nest_mix,
    document_stats,
    stationary_mean_depth,
)
from .corpusio import (
    CorpusManifest,
    write_shards,
    generate_corpus,
    regenerate,
    read_shards,
    read_tokens,
    iter_documents,
    chunk,
    to_text,
    from_text,
)

__version__ = "0.1.0"
