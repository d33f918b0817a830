"""Numba kernels for generation and validation hot loops.

All randomness comes from an explicit PCG32 state (uint64[2] = state, inc)
owned by the caller, so streams are deterministic per shard and safe under any
thread count.  Generation kernels fill caller-provided buffers with whole
documents and rewind the RNG to the last document boundary when they run out
of capacity, which makes the emitted stream independent of buffer sizing.

Status codes returned by the fill kernels:
  0  token budget reached at a document boundary
  1  stopped early (buffer or doc_ends capacity); call again to continue
  2  no complete document fit in the buffer; grow it and call again
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_PCG_MULT = U64(6364136223846793005)
_MASK32 = U64(0xFFFFFFFF)
_INV32 = float(2.0**-32)

STATUS_BUDGET = 0
STATUS_CAPACITY = 1
STATUS_GROW = 2

# counters layout shared by the fill kernels
CTR_OPENS = 0
CTR_CROSS_OPENS = 1
CTR_FORCED_CLOSES = 2
CTR_DISPLACED = 3
N_COUNTERS = 4


@njit(cache=True, nogil=True, inline="always")
def pcg32_next(state):
    old = state[0]
    state[0] = old * _PCG_MULT + state[1]
    xs = (((old >> U64(18)) ^ old) >> U64(27)) & _MASK32
    rot = (old >> U64(59)) & U64(31)
    return ((xs >> rot) | (xs << ((U64(32) - rot) & U64(31)))) & _MASK32


@njit(cache=True, nogil=True, inline="always")
def next_double(state):
    return np.float64(pcg32_next(state)) * _INV32


@njit(cache=True, nogil=True)
def pcg32_seed(state, initstate, initseq):
    state[0] = U64(0)
    state[1] = (U64(initseq) << U64(1)) | U64(1)
    pcg32_next(state)
    state[0] = state[0] + U64(initstate)
    pcg32_next(state)


@njit(cache=True, nogil=True, inline="always")
def _draw_index(cdf, state):
    i = np.searchsorted(cdf, next_double(state), side="right")
    if i >= cdf.shape[0]:
        i = cdf.shape[0] - 1
    return i


@njit(cache=True, nogil=True, inline="always")
def _draw_available_type(pair_cdf, pair_p, open_mask, avail_p, state):
    # Rejection against the open mask is exact conditional sampling; fall back
    # to a cumulative walk when the available mass is tiny.
    for _ in range(64):
        t = _draw_index(pair_cdf, state)
        if not open_mask[t]:
            return t
    u = next_double(state) * avail_p
    acc = 0.0
    last = -1
    for t in range(pair_p.shape[0]):
        if not open_mask[t]:
            last = t
            acc += pair_p[t]
            if u < acc:
                return t
    return last


@njit(cache=True, nogil=True)
def nest_mix_fill(
    ids,
    partner,
    surp,
    cross_open,
    doc_ends,
    state,
    pair_cdf,
    pair_p,
    dist_vals,
    dist_cdf,
    dist_p,
    p_open,
    p_mix,
    doc_target_len,
    budget,
    ring_type,
    ring_open,
    open_mask,
    counters,
):
    """NEST walk with optional CROSS-scheduled opens (p_mix of them).

    At depth 0 an open is forced; otherwise open with p_open else close the
    stack top.  A cross open leaves the stack alone and schedules its close
    token at the first unoccupied emission slot >= current + d, d drawn from
    the distance table.  Documents end at (stack empty, no pending closes,
    length >= doc_target_len).  With p_mix = 0 this is exactly the NEST
    process; the mix coin is still drawn so the stream does not depend on
    which entry point asked for it.
    """
    cap = ids.shape[0]
    n_pairs = pair_p.shape[0]
    ring_sz = ring_type.shape[0]
    log2_close = -np.log2(1.0 - p_open)
    log2_open = -np.log2(p_open)
    log2_mix = -np.log2(p_mix) if p_mix > 0.0 else 0.0
    log2_nomix = -np.log2(1.0 - p_mix) if p_mix > 0.0 else 0.0

    stack_type = np.empty(4096, np.int32)
    stack_pos = np.empty(4096, np.int64)

    total = 0
    n_docs = 0
    status = STATUS_BUDGET
    while total < budget:
        if n_docs >= doc_ends.shape[0]:
            status = STATUS_CAPACITY
            break
        snap0 = state[0]
        snap1 = state[1]
        base = total
        for t in range(n_pairs):
            open_mask[t] = False
        depth = 0
        sp = 0
        pending = 0
        n_avail = n_pairs
        avail_p = 1.0
        pos = 0
        overflow = False

        while True:
            i = base + pos
            if i >= cap:
                overflow = True
                break
            slot = pos % ring_sz
            if pending > 0 and ring_type[slot] >= 0:
                # scheduled cross close: fully determined by state
                t = ring_type[slot]
                oidx = ring_open[slot]
                ring_type[slot] = -1
                ids[i] = t + n_pairs
                partner[i] = oidx
                partner[base + oidx] = pos
                surp[i] = 0.0
                cross_open[i] = 0
                open_mask[t] = False
                avail_p += pair_p[t]
                n_avail += 1
                pending -= 1
                pos += 1
            elif n_avail == 0:
                # every pair type is busy: the close is certain, no RNG spent
                counters[CTR_FORCED_CLOSES] += 1
                if depth > 0:
                    sp -= 1
                    depth -= 1
                    t = stack_type[sp]
                    oidx = stack_pos[sp]
                else:
                    t = -1
                    oidx = -1
                    for k in range(1, ring_sz):
                        s2 = (pos + k) % ring_sz
                        if ring_type[s2] >= 0:
                            t = ring_type[s2]
                            oidx = ring_open[s2]
                            ring_type[s2] = -1
                            pending -= 1
                            break
                ids[i] = t + n_pairs
                partner[i] = oidx
                partner[base + oidx] = pos
                surp[i] = 0.0
                cross_open[i] = 0
                open_mask[t] = False
                avail_p += pair_p[t]
                n_avail += 1
                pos += 1
            else:
                if depth == 0:
                    do_open = True
                    s_struct = 0.0
                else:
                    do_open = next_double(state) < p_open
                    s_struct = log2_open if do_open else log2_close
                if do_open:
                    is_cross = next_double(state) < p_mix
                    t = _draw_available_type(pair_cdf, pair_p, open_mask, avail_p, state)
                    p_type = pair_p[t] / avail_p
                    if p_type > 1.0:
                        p_type = 1.0
                    s_tok = s_struct - np.log2(p_type)
                    if is_cross:
                        k = _draw_index(dist_cdf, state)
                        j = pos + dist_vals[k]
                        while ring_type[j % ring_sz] >= 0:
                            j += 1
                        ring_type[j % ring_sz] = t
                        ring_open[j % ring_sz] = pos
                        pending += 1
                        cross_open[i] = 1
                        s_tok += log2_mix - np.log2(dist_p[k])
                        counters[CTR_CROSS_OPENS] += 1
                    else:
                        if sp >= stack_type.shape[0]:
                            ns_type = np.empty(stack_type.shape[0] * 2, np.int32)
                            ns_pos = np.empty(stack_type.shape[0] * 2, np.int64)
                            ns_type[:sp] = stack_type
                            ns_pos[:sp] = stack_pos
                            stack_type = ns_type
                            stack_pos = ns_pos
                        stack_type[sp] = t
                        stack_pos[sp] = pos
                        sp += 1
                        depth += 1
                        cross_open[i] = 0
                        s_tok += log2_nomix
                    counters[CTR_OPENS] += 1
                    ids[i] = t
                    partner[i] = -1
                    surp[i] = s_tok
                    open_mask[t] = True
                    avail_p -= pair_p[t]
                    n_avail -= 1
                    pos += 1
                else:
                    sp -= 1
                    depth -= 1
                    t = stack_type[sp]
                    oidx = stack_pos[sp]
                    ids[i] = t + n_pairs
                    partner[i] = oidx
                    partner[base + oidx] = pos
                    surp[i] = log2_close
                    cross_open[i] = 0
                    open_mask[t] = False
                    avail_p += pair_p[t]
                    n_avail += 1
                    pos += 1
            if depth == 0 and pending == 0 and pos >= doc_target_len:
                break

        if overflow:
            state[0] = snap0
            state[1] = snap1
            for k in range(ring_sz):
                ring_type[k] = -1
            status = STATUS_GROW if n_docs == 0 else STATUS_CAPACITY
            break
        doc_ends[n_docs] = base + pos
        n_docs += 1
        total = base + pos
    return total, n_docs, status


@njit(cache=True, nogil=True)
def cross_fill(
    ids,
    partner,
    surp,
    cross_open,
    doc_ends,
    state,
    pair_cdf,
    pair_p,
    dist_vals,
    dist_cdf,
    dist_p,
    doc_target_opens,
    budget,
    ring_type,
    ring_open,
    open_mask,
    counters,
):
    """Balanced crossing language: closes are placed by scheduled distances.

    A document holds exactly doc_target_opens arcs (2x that in tokens).  Its
    distance multiset is pre-drawn iid from the distance table, so the drawn
    distribution is exact; placement then sweeps positions, emitting a booked
    close when one is scheduled at the current slot and otherwise opening a
    pair whose close lands at current + d for the earliest queued distance d
    whose slot is free and inside the document (first-fit-with-skip, so
    realized distance == drawn except for rare infeasible placements).  When
    no queued distance fits, the head entry is booked at the first free slot
    >= current + d (counted as displaced).  After the last open the remaining
    booked closes are flushed in schedule order with gaps compacted.
    """
    cap = ids.shape[0]
    n_pairs = pair_p.shape[0]
    ring_sz = ring_type.shape[0]
    m = doc_target_opens
    doc_len = 2 * m
    queue_idx = np.empty(m, np.int64)
    queue_live = np.empty(m, np.uint8)

    total = 0
    n_docs = 0
    status = STATUS_BUDGET
    while total < budget:
        if n_docs >= doc_ends.shape[0]:
            status = STATUS_CAPACITY
            break
        if total + doc_len > cap:
            status = STATUS_GROW if n_docs == 0 else STATUS_CAPACITY
            break
        snap0 = state[0]
        snap1 = state[1]
        base = total
        for t in range(n_pairs):
            open_mask[t] = False
        for j in range(m):
            queue_idx[j] = _draw_index(dist_cdf, state)
            queue_live[j] = 1
        head = 0
        opens_done = 0
        pending = 0
        n_avail = n_pairs
        avail_p = 1.0
        pos = 0

        while opens_done < m or pending > 0:
            i = base + pos
            slot = pos % ring_sz
            if pending > 0 and ring_type[slot] >= 0:
                t = ring_type[slot]
                oidx = ring_open[slot]
                ring_type[slot] = -1
                ids[i] = t + n_pairs
                partner[i] = oidx
                partner[base + oidx] = pos
                surp[i] = 0.0
                cross_open[i] = 0
                open_mask[t] = False
                avail_p += pair_p[t]
                n_avail += 1
                pending -= 1
                pos += 1
            elif opens_done < m:
                if n_avail == 0:
                    # all types busy: pull the oldest scheduled close forward
                    counters[CTR_FORCED_CLOSES] += 1
                    for k in range(1, ring_sz):
                        s2 = (pos + k) % ring_sz
                        if ring_type[s2] >= 0:
                            t = ring_type[s2]
                            oidx = ring_open[s2]
                            ring_type[s2] = -1
                            pending -= 1
                            ids[i] = t + n_pairs
                            partner[i] = oidx
                            partner[base + oidx] = pos
                            surp[i] = 0.0
                            cross_open[i] = 0
                            open_mask[t] = False
                            avail_p += pair_p[t]
                            n_avail += 1
                            break
                    pos += 1
                    continue
                while queue_live[head] == 0:
                    head += 1
                take = -1
                for j in range(head, m):
                    if queue_live[j] == 0:
                        continue
                    tgt = pos + dist_vals[queue_idx[j]]
                    if tgt < doc_len and ring_type[tgt % ring_sz] < 0:
                        take = j
                        break
                if take < 0:
                    # nothing fits: book the head entry at the first free slot
                    take = head
                    counters[CTR_DISPLACED] += 1
                    j2 = pos + dist_vals[queue_idx[take]]
                    while ring_type[j2 % ring_sz] >= 0:
                        j2 += 1
                    tgt = j2
                k = queue_idx[take]
                queue_live[take] = 0
                t = _draw_available_type(pair_cdf, pair_p, open_mask, avail_p, state)
                p_type = pair_p[t] / avail_p
                if p_type > 1.0:
                    p_type = 1.0
                ring_type[tgt % ring_sz] = t
                ring_open[tgt % ring_sz] = pos
                pending += 1
                ids[i] = t
                partner[i] = -1
                surp[i] = -np.log2(p_type) - np.log2(dist_p[k])
                cross_open[i] = 1
                open_mask[t] = True
                avail_p -= pair_p[t]
                n_avail -= 1
                opens_done += 1
                counters[CTR_OPENS] += 1
                counters[CTR_CROSS_OPENS] += 1
                pos += 1
            else:
                # flush remaining closes in schedule order, gaps compacted
                scan = pos
                for k in range(ring_sz):
                    s2 = (scan + k) % ring_sz
                    if ring_type[s2] >= 0:
                        i = base + pos
                        t = ring_type[s2]
                        oidx = ring_open[s2]
                        ring_type[s2] = -1
                        ids[i] = t + n_pairs
                        partner[i] = oidx
                        partner[base + oidx] = pos
                        surp[i] = 0.0
                        cross_open[i] = 0
                        open_mask[t] = False
                        avail_p += pair_p[t]
                        n_avail += 1
                        pending -= 1
                        pos += 1

        doc_ends[n_docs] = base + pos
        n_docs += 1
        total = base + pos
    return total, n_docs, status


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def balance_scan(ids, num_pairs, bal):
    """First prefix-violation index, or -1.  bal must be zeroed; on return it
    holds the final per-type open-minus-close balance."""
    first = -1
    for i in range(ids.shape[0]):
        t = np.int64(ids[i])
        if t < num_pairs:
            bal[t] += 1
        else:
            tt = t - num_pairs
            bal[tt] -= 1
            if bal[tt] < 0 and first < 0:
                first = i
    return first


@njit(cache=True, nogil=True)
def nested_scan(ids, num_pairs, stack):
    """-1 if well-nested; otherwise the index of the first violating close
    (or len(ids) when opens are left unclosed)."""
    sp = 0
    n = ids.shape[0]
    for i in range(n):
        t = np.int64(ids[i])
        if t < num_pairs:
            stack[sp] = t
            sp += 1
        else:
            if sp == 0 or stack[sp - 1] != t - num_pairs:
                return i
            sp -= 1
    if sp != 0:
        return n
    return -1


@njit(cache=True, nogil=True)
def nested_scan_docs(ids, doc_bounds, num_pairs, stack):
    """Well-nestedness of each [doc_bounds[k], doc_bounds[k+1]) segment.
    Returns the first failing document index, or -1."""
    for k in range(doc_bounds.shape[0] - 1):
        v = nested_scan(ids[doc_bounds[k] : doc_bounds[k + 1]], num_pairs, stack)
        if v >= 0:
            return k
    return -1


@njit(cache=True, nogil=True)
def balance_scan_docs(ids, doc_bounds, num_pairs, bal):
    """First document index failing the balance check, or -1."""
    for k in range(doc_bounds.shape[0] - 1):
        for t in range(bal.shape[0]):
            bal[t] = 0
        v = balance_scan(ids[doc_bounds[k] : doc_bounds[k + 1]], num_pairs, bal)
        if v >= 0:
            return k
        for t in range(bal.shape[0]):
            if bal[t] != 0:
                return k
    return -1


@njit(cache=True, nogil=True)
def depth_profile(ids, num_pairs, out_depth):
    """Depth after each token; returns -(i+1) on a negative-depth prefix."""
    d = 0
    for i in range(ids.shape[0]):
        if np.int64(ids[i]) < num_pairs:
            d += 1
        else:
            d -= 1
        if d < 0:
            return -(i + 1)
        out_depth[i] = d
    return 0


@njit(cache=True, nogil=True)
def match_arcs_stack(ids, num_pairs, head, prev, opens_out, closes_out):
    """LIFO per-type matching.  Returns (n_arcs, err_index, ambiguous_type).

    err_index is -1 on success, the offending token index for an unmatched
    close, or len(ids) when unmatched opens remain.  ambiguous_type is the
    first pair type observed open twice concurrently (-1 if none); the stack
    policy resolves it, other policies may refuse.
    """
    n = ids.shape[0]
    m = 0
    ambiguous = np.int64(-1)
    for i in range(n):
        t = np.int64(ids[i])
        if t < num_pairs:
            if head[t] >= 0 and ambiguous < 0:
                ambiguous = t
            prev[i] = head[t]
            head[t] = i
        else:
            tt = t - num_pairs
            j = head[tt]
            if j < 0:
                return m, i, ambiguous
            head[tt] = prev[j]
            opens_out[m] = j
            closes_out[m] = i
            m += 1
    for t in range(num_pairs):
        if head[t] >= 0:
            return m, n, ambiguous
    return m, -1, ambiguous


@njit(cache=True, nogil=True)
def match_arcs_fifo(ids, num_pairs, head_ptr, tail_ptr, link, opens_out, closes_out):
    """FIFO per-type matching: the k-th close of a type matches its k-th open.

    Queues are kept as linked lists through ``link`` over token indices.
    Same return convention as :func:`match_arcs_stack`.
    """
    n = ids.shape[0]
    m = 0
    ambiguous = np.int64(-1)
    for i in range(n):
        t = np.int64(ids[i])
        if t < num_pairs:
            if head_ptr[t] >= 0 and ambiguous < 0:
                ambiguous = t
            link[i] = -1
            if tail_ptr[t] >= 0:
                link[tail_ptr[t]] = i
            else:
                head_ptr[t] = i
            tail_ptr[t] = i
        else:
            tt = t - num_pairs
            j = head_ptr[tt]
            if j < 0:
                return m, i, ambiguous
            head_ptr[tt] = link[j]
            if link[j] < 0:
                tail_ptr[tt] = -1
            opens_out[m] = j
            closes_out[m] = i
            m += 1
    for t in range(num_pairs):
        if head_ptr[t] >= 0:
            return m, n, ambiguous
    return m, -1, ambiguous


@njit(cache=True, nogil=True, inline="always")
def _bit_add(tree, i):
    i += 1
    while i < tree.shape[0]:
        tree[i] += 1
        i += i & (-i)


@njit(cache=True, nogil=True, inline="always")
def _bit_sum(tree, i):
    # sum of positions [0, i]
    i += 1
    s = 0
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@njit(cache=True, nogil=True)
def count_crossings_sweep(opens, closes, n_positions):
    """Crossing pairs {(a,b),(c,d): a<c<b<d} via a Fenwick sweep, O(m log n).

    Arcs must be sorted by open index.  For each arc, previously inserted
    arcs opened earlier; those whose close falls strictly inside (open, close)
    cross it.
    """
    tree = np.zeros(n_positions + 1, np.int64)
    total = 0
    for j in range(opens.shape[0]):
        c = opens[j]
        d = closes[j]
        total += _bit_sum(tree, d - 1) - _bit_sum(tree, c)
        _bit_add(tree, d)
    return total


@njit(cache=True, nogil=True)
def count_crossings_pairwise(opens, closes):
    """O(m^2) crossing count; the test oracle for the sweep."""
    m = opens.shape[0]
    total = 0
    for i in range(m):
        a = opens[i]
        b = closes[i]
        for j in range(i + 1, m):
            c = opens[j]
            d = closes[j]
            if a < c:
                if c < b and b < d:
                    total += 1
            elif c < a:
                if c < a and a < d and d < b:
                    total += 1
    return total


@njit(cache=True, nogil=True)
def crossings_per_doc(opens, closes, arc_doc, doc_bounds, out_counts):
    """Sweep crossing count per document; arcs must be sorted by open index
    and tagged with their document ordinal in arc_doc."""
    n_docs = doc_bounds.shape[0] - 1
    lo = 0
    for k in range(n_docs):
        hi = lo
        while hi < arc_doc.shape[0] and arc_doc[hi] == k:
            hi += 1
        length = doc_bounds[k + 1] - doc_bounds[k]
        if hi > lo:
            out_counts[k] = count_crossings_sweep(
                opens[lo:hi] - doc_bounds[k], closes[lo:hi] - doc_bounds[k], length
            )
        else:
            out_counts[k] = 0
        lo = hi


@njit(cache=True, nogil=True)
def rep_block_check(ids, block):
    """First index where ids[i + block] != ids[i] within a 2*block block,
    or -1.  len(ids) must be a multiple of 2*block."""
    n = ids.shape[0]
    step = 2 * block
    for start in range(0, n, step):
        for i in range(block):
            if ids[start + i] != ids[start + block + i]:
                return start + i
    return -1
