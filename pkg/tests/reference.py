"""Slow pure-Python mirrors of the generation kernels.

These consume randomness in exactly the same order as the compiled kernels,
so token streams and partner indices must match bit for bit and surprisals to
float tolerance.  They also record every sampling decision's probability,
giving an independent account of each document's probability for the
surprisal-sum invariant.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1
PCG_MULT = 6364136223846793005


class PCG32:
    def __init__(self, initstate: int, initseq: int):
        self.state = 0
        self.inc = ((initseq << 1) | 1) & MASK64
        self.next32()
        self.state = (self.state + initstate) & MASK64
        self.next32()

    def next32(self) -> int:
        old = self.state
        self.state = (old * PCG_MULT + self.inc) & MASK64
        xs = (((old >> 18) ^ old) >> 27) & MASK32
        rot = (old >> 59) & 31
        return ((xs >> rot) | (xs << ((32 - rot) & 31))) & MASK32

    def double(self) -> float:
        return self.next32() * 2.0**-32


def rng_for(spec, shard_index: int = 0) -> PCG32:
    ss = np.random.SeedSequence((int(spec.seed) & MASK64, int(shard_index)))
    w = ss.generate_state(2, np.uint64)
    return PCG32(int(w[0]), int(w[1]))


def draw_index(cdf: np.ndarray, rng: PCG32) -> int:
    i = int(np.searchsorted(cdf, rng.double(), side="right"))
    return min(i, cdf.shape[0] - 1)


def draw_available_type(pair_cdf, pair_p, open_mask, avail_p, rng):
    for _ in range(64):
        t = draw_index(pair_cdf, rng)
        if not open_mask[t]:
            return t
    u = rng.double() * avail_p
    acc = 0.0
    last = -1
    for t in range(len(pair_p)):
        if not open_mask[t]:
            last = t
            acc += pair_p[t]
            if u < acc:
                return t
    return last


class RefDoc:
    def __init__(self):
        self.ids: list[int] = []
        self.partner: list[int] = []
        self.surp: list[float] = []
        self.cross_open: list[int] = []
        self.decision_probs: list[float] = []  # every sampled decision


def _dist_table(spec):
    d = spec.distance_ref
    vals = d.distances.astype(np.int64)
    p = d.probs.astype(np.float64)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return vals, cdf, p


def ref_nest_mix(spec, n_tokens: int, shard_index: int = 0) -> list[RefDoc]:
    """Mirror of the nest/nest_mix kernel (p_mix=0 gives plain nest)."""
    rng = rng_for(spec, shard_index)
    pair_p = spec.pair_dist.probabilities
    pair_cdf = spec.pair_dist.cdf
    n_pairs = spec.vocab.num_pairs
    p_open = spec.p_open
    p_mix = spec.p_mix if spec.family == "nest_mix" else 0.0
    if spec.family == "nest_mix" and p_mix > 0.0:
        dist_vals, dist_cdf, dist_p = _dist_table(spec)
    else:
        dist_vals = np.ones(1, np.int64)
        dist_cdf = np.ones(1)
        dist_p = np.ones(1)

    docs = []
    total = 0
    while total < n_tokens:
        doc = RefDoc()
        ring: dict[int, tuple[int, int]] = {}  # scheduled pos -> (type, open idx)
        stack: list[tuple[int, int]] = []
        open_mask = np.zeros(n_pairs, bool)
        avail_p = 1.0
        n_avail = n_pairs
        pos = 0
        while True:
            if pos in ring:
                t, oidx = ring.pop(pos)
                doc.ids.append(t + n_pairs)
                doc.partner.append(oidx)
                doc.partner[oidx] = pos
                doc.surp.append(0.0)
                doc.cross_open.append(0)
                open_mask[t] = False
                avail_p += pair_p[t]
                n_avail += 1
                pos += 1
            elif n_avail == 0:
                if stack:
                    t, oidx = stack.pop()
                else:
                    sched = min(ring)
                    t, oidx = ring.pop(sched)
                doc.ids.append(t + n_pairs)
                doc.partner.append(oidx)
                doc.partner[oidx] = pos
                doc.surp.append(0.0)
                doc.cross_open.append(0)
                open_mask[t] = False
                avail_p += pair_p[t]
                n_avail += 1
                pos += 1
            else:
                depth = len(stack)
                if depth == 0:
                    do_open = True
                    s_struct = 0.0
                else:
                    u = rng.double()
                    do_open = u < p_open
                    s_struct = -np.log2(p_open) if do_open else -np.log2(1.0 - p_open)
                    doc.decision_probs.append(p_open if do_open else 1.0 - p_open)
                if do_open:
                    u2 = rng.double()
                    is_cross = u2 < p_mix
                    if p_mix > 0.0:
                        doc.decision_probs.append(p_mix if is_cross else 1.0 - p_mix)
                    t = draw_available_type(pair_cdf, pair_p, open_mask, avail_p, rng)
                    p_type = min(pair_p[t] / avail_p, 1.0)
                    doc.decision_probs.append(p_type)
                    s_tok = s_struct - np.log2(p_type)
                    if is_cross:
                        k = draw_index(dist_cdf, rng)
                        doc.decision_probs.append(dist_p[k])
                        j = pos + int(dist_vals[k])
                        while j in ring:
                            j += 1
                        ring[j] = (t, pos)
                        doc.cross_open.append(1)
                        s_tok += -np.log2(p_mix) - np.log2(dist_p[k])
                    else:
                        stack.append((t, pos))
                        doc.cross_open.append(0)
                        if p_mix > 0.0:
                            s_tok += -np.log2(1.0 - p_mix)
                    doc.ids.append(t)
                    doc.partner.append(-1)
                    doc.surp.append(s_tok)
                    open_mask[t] = True
                    avail_p -= pair_p[t]
                    n_avail -= 1
                    pos += 1
                else:
                    t, oidx = stack.pop()
                    doc.ids.append(t + n_pairs)
                    doc.partner.append(oidx)
                    doc.partner[oidx] = pos
                    doc.surp.append(-np.log2(1.0 - p_open))
                    doc.cross_open.append(0)
                    open_mask[t] = False
                    avail_p += pair_p[t]
                    n_avail += 1
                    pos += 1
            if not stack and not ring and pos >= spec.doc_target_len:
                break
        docs.append(doc)
        total += pos
    return docs


def ref_cross(spec, n_tokens: int, shard_index: int = 0) -> list[RefDoc]:
    """Mirror of the cross kernel (pre-drawn queue, first-fit-with-skip)."""
    rng = rng_for(spec, shard_index)
    pair_p = spec.pair_dist.probabilities
    pair_cdf = spec.pair_dist.cdf
    n_pairs = spec.vocab.num_pairs
    dist_vals, dist_cdf, dist_p = _dist_table(spec)
    m = spec.doc_target_len
    doc_len = 2 * m

    docs = []
    total = 0
    while total < n_tokens:
        doc = RefDoc()
        queue = [draw_index(dist_cdf, rng) for _ in range(m)]
        for k in queue:
            doc.decision_probs.append(dist_p[k])
        live = [True] * m
        head = 0
        ring: dict[int, tuple[int, int]] = {}
        open_mask = np.zeros(n_pairs, bool)
        avail_p = 1.0
        n_avail = n_pairs
        opens_done = 0
        pos = 0

        def emit_close(t, oidx):
            nonlocal pos, n_avail, avail_p
            doc.ids.append(t + n_pairs)
            doc.partner.append(oidx)
            doc.partner[oidx] = pos
            doc.surp.append(0.0)
            doc.cross_open.append(0)
            open_mask[t] = False
            avail_p += pair_p[t]
            n_avail += 1
            pos += 1

        while opens_done < m or ring:
            if pos in ring:
                t, oidx = ring.pop(pos)
                emit_close(t, oidx)
            elif opens_done < m:
                if n_avail == 0:
                    sched = min(ring)
                    t, oidx = ring.pop(sched)
                    emit_close(t, oidx)
                    continue
                while not live[head]:
                    head += 1
                take = -1
                for j in range(head, m):
                    if not live[j]:
                        continue
                    tgt = pos + int(dist_vals[queue[j]])
                    if tgt < doc_len and tgt not in ring:
                        take = j
                        break
                if take < 0:
                    take = head
                    tgt = pos + int(dist_vals[queue[take]])
                    while tgt in ring:
                        tgt += 1
                k = queue[take]
                live[take] = False
                t = draw_available_type(pair_cdf, pair_p, open_mask, avail_p, rng)
                p_type = min(pair_p[t] / avail_p, 1.0)
                doc.decision_probs.append(p_type)
                ring[tgt] = (t, pos)
                doc.ids.append(t)
                doc.partner.append(-1)
                doc.surp.append(-np.log2(p_type) - np.log2(dist_p[k]))
                doc.cross_open.append(1)
                open_mask[t] = True
                avail_p -= pair_p[t]
                n_avail -= 1
                opens_done += 1
                pos += 1
            else:
                for sched in sorted(ring):
                    t, oidx = ring.pop(sched)
                    emit_close(t, oidx)
        docs.append(doc)
        total += pos
    return docs
