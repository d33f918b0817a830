"""Tour of the five formal languages.

Generates a few short documents from each family, renders them in the
open/close text notation, and prints per-document structure statistics.
"""

import itertools

import numpy as np

import formlang as fl

vocab = fl.make_vocab(250)
pairs = fl.make_distribution("uniform", 250)
flat = fl.make_distribution("uniform", 500)

# the crossing families need a distance distribution; extract one from nest
nest = fl.LanguageSpec(family="nest", vocab=vocab, pair_dist=pairs, seed=1,
                       doc_target_len=12)
ref_spec = fl.LanguageSpec(family="nest", vocab=vocab, pair_dist=pairs, seed=2)
dref = fl.distance_distribution(
    fl.match_arcs(d.ids, vocab) for d in fl.generate(ref_spec, 200_000)
)
print(f"nest distance reference: mean {dref.mean():.1f}, "
      f"{dref.distances.size} support points\n")

specs = {
    "nest": nest,
    "cross": fl.LanguageSpec(family="cross", vocab=vocab, pair_dist=pairs, seed=1,
                             doc_target_len=8, distance_ref=dref),
    "nest_mix": fl.LanguageSpec(family="nest_mix", vocab=vocab, pair_dist=pairs,
                                seed=1, doc_target_len=12, p_mix=0.3,
                                distance_ref=dref),
    "rand": fl.LanguageSpec(family="rand", vocab=vocab, token_dist=flat, seed=1,
                            doc_target_len=12),
    "rep": fl.LanguageSpec(family="rep", vocab=vocab, token_dist=flat, seed=1,
                           rep_block=5, doc_target_len=20),
}

for name, spec in specs.items():
    print(f"=== {name} ===")
    paired = name in ("nest", "cross", "nest_mix")
    for doc in itertools.islice(fl.generate(spec, 2**62), 3):
        print(" ", fl.to_text(doc.ids, vocab, paired=paired))
        s = doc.stats
        print(f"    len={s['length']} max_depth={s['max_depth']} "
              f"crossings={s['crossing_count']} "
              f"surprisal={float(np.sum(doc.surprisal)):.1f} bits")
    print()

# structural checks distinguish the families
doc_nest = next(iter(fl.generate(specs["nest"], 64)))
doc_cross = next(iter(fl.generate(specs["cross"], 64)))
print("nest is well-nested: ", fl.check_well_nested(doc_nest.ids, vocab))
print("cross is well-nested:", fl.check_well_nested(doc_cross.ids, vocab))
print("cross is balanced:   ", bool(fl.check_balanced(doc_cross.ids, vocab)))
