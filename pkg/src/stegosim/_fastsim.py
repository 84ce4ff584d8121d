"""Accelerated trial engine.

Runs the same monthly-round semantics as simnet.TrialState on flat arrays
under numba: linked-list queues in a growable arena, per-message seen-sets
as bitmaps over infected-node indices (allocated at first transmission,
freed when no live copies remain), and sender-granular resume so the arena
and bitmap pool can be grown from Python mid-month.  Trial results are
bit-identical to the reference engine; tests assert the equivalence.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .errors import ValidationError
from .simnet import RunResult, default_ttl

_STATUS_DONE = 0
_STATUS_GROW_ARENA = 1
_STATUS_GROW_BITS = 2

_PHASE_GENERATE = 0
_PHASE_TRANSMIT = 1
_PHASE_MERGE = 2


@njit(cache=True)
def _reserve_msgs(slots, reserve, mpi):
    if slots <= 0 or reserve <= 0.0:
        return 0
    raw = reserve * slots
    if raw < 1e12:
        raw = math.floor(raw * 1e9 + 0.5) / 1e9
    return int(math.ceil(raw)) * mpi


@njit(cache=True)
def _alloc_slot(bits, free_stack, counters):
    # counters: [arena_top, free_top, ever_alloc, next_mid, ent_free_top]
    if counters[1] > 0:
        counters[1] -= 1
        slot = free_stack[counters[1]]
    else:
        slot = counters[2]
        counters[2] += 1
    for w in range(bits.shape[1]):
        bits[slot, w] = 0
    return slot


@njit(cache=True)
def _alloc_entry(ent_free, counters):
    if counters[4] > 0:
        counters[4] -= 1
        return ent_free[counters[4]]
    e = counters[0]
    counters[0] += 1
    return e


_BIT_MASKS = np.left_shift(np.uint64(1), np.arange(64, dtype=np.uint64))

# De Bruijn multiplication table for 64-bit count-trailing-zeros.
_DEBRUIJN = 0x03F79D71B4CB0A89
_DEBRUIJN_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_TABLE[((1 << _i) * _DEBRUIJN & 0xFFFFFFFFFFFFFFFF) >> 58] = _i
del _i

# Senders at least this connected use the word-wise fanout (bitmask merge
# plus fresh-bit extraction) instead of per-neighbor probing.
_WORDWISE_DEGREE = 128


@njit(cache=True)
def _build_nbr_masks(indptr, indices, words):
    n = indptr.shape[0] - 1
    masks = np.zeros((n, words), dtype=np.uint64)
    for s in range(n):
        for j in range(indptr[s], indptr[s + 1]):
            r = indices[j]
            masks[s, r >> 6] |= np.uint64(1) << np.uint64(r & 63)
    return masks


@njit(cache=True)
def _month_kernel(
    month, phase, cursor,
    # topology and schedule (infected-index space); suffix_slots[r, m] is
    # the node's remaining transmission budget from month m to the end, the
    # FIFO admission bound beyond which queued entries could never be sent
    indptr, indices, uploads, suffix_slots, bm,
    # parameters
    K, ttl, cmd_rate, mpi, reserve,
    # per-message state
    origin, pending, seen_slot,
    # bitmap pool
    bits, free_stack,
    # queue arena (cells recycled on pop via ent_free)
    ent_mid, ent_ttl, ent_next, ent_free,
    # per-node queues
    loc_head, loc_tail, loc_len, fwd_head, fwd_tail, fwd_len,
    inc_head, inc_tail, inc_len,
    # counters: [arena_top, free_top, ever_alloc, next_mid]
    counters,
    # outputs: [transmitted, unique, duplicate]
    month_out, delivered_by_origin,
    masks, nbr_masks, ctz_table,
):
    n = indptr.shape[0] - 1
    words = nbr_masks.shape[1]
    arena_cap = ent_mid.shape[0]
    slot_cap = bits.shape[0]
    bm_w = bm >> 6
    bm_mask = masks[bm & 63]
    debruijn = np.uint64(0x03F79D71B4CB0A89)
    shift58 = np.uint64(58)

    if phase == _PHASE_GENERATE:
        b = cursor
        while b <= n:
            count = cmd_rate if b == n else (0 if b == bm else K)
            node = bm if b == n else b
            if count > 0:
                if counters[0] + count - counters[4] > arena_cap:
                    return _STATUS_GROW_ARENA, _PHASE_GENERATE, b
                for _ in range(count):
                    mid = counters[3]
                    counters[3] += 1
                    origin[mid] = -1 if b == n else b
                    seen_slot[mid] = -1
                    if loc_len[node] >= suffix_slots[node, month]:
                        pending[mid] = 0
                        continue
                    pending[mid] = 1
                    e = _alloc_entry(ent_free, counters)
                    ent_mid[e] = mid
                    ent_ttl[e] = ttl
                    ent_next[e] = -1
                    if loc_tail[node] >= 0:
                        ent_next[loc_tail[node]] = e
                    else:
                        loc_head[node] = e
                    loc_tail[node] = e
                    loc_len[node] += 1
            b += 1
        phase = _PHASE_TRANSMIT
        cursor = 0

    if phase == _PHASE_TRANSMIT:
        s = cursor
        while s < n:
            slots = uploads[s, month]
            if slots <= 0:
                s += 1
                continue
            budget = slots * mpi
            qlen = fwd_len[s] + loc_len[s]
            pops_max = budget if budget < qlen else qlen
            if pops_max <= 0:
                s += 1
                continue
            deg = indptr[s + 1] - indptr[s]
            if counters[0] + pops_max * deg - counters[4] > arena_cap:
                return _STATUS_GROW_ARENA, _PHASE_TRANSMIT, s
            if counters[2] + pops_max - counters[1] > slot_cap:
                return _STATUS_GROW_BITS, _PHASE_TRANSMIT, s
            reserve_msgs = _reserve_msgs(slots, reserve, mpi)
            sent = 0
            # Throttle: reserved forward slots, then local cargo, then any
            # leftover returns to the forward queue.
            for phase3 in range(3):
                if phase3 == 1:
                    head, tail, qlen_arr = loc_head, loc_tail, loc_len
                    limit = budget
                else:
                    head, tail, qlen_arr = fwd_head, fwd_tail, fwd_len
                    limit = reserve_msgs if phase3 == 0 else budget
                    if limit > budget:
                        limit = budget
                while sent < limit and head[s] >= 0:
                    e = head[s]
                    head[s] = ent_next[e]
                    if head[s] < 0:
                        tail[s] = -1
                    qlen_arr[s] -= 1
                    sent += 1
                    mid = ent_mid[e]
                    ttlr = ent_ttl[e]
                    ent_free[counters[4]] = e
                    counters[4] += 1
                    is_cargo = origin[mid] >= 0
                    if is_cargo:
                        month_out[0] += 1
                    slot = seen_slot[mid]
                    if slot < 0:
                        # First transmission: only the originator has seen it.
                        slot = _alloc_slot(bits, free_stack, counters)
                        seen_slot[mid] = slot
                        first = origin[mid] if is_cargo else bm
                        bits[slot, first >> 6] |= masks[first & 63]
                    row = bits[slot]
                    enq = -1  # popped copy no longer pending
                    if deg >= _WORDWISE_DEGREE:
                        sender_mask = nbr_masks[s]
                        if sender_mask[bm_w] & bm_mask:
                            if row[bm_w] & bm_mask:
                                if is_cargo:
                                    month_out[2] += 1
                            elif is_cargo:
                                month_out[1] += 1
                                delivered_by_origin[origin[mid]] += 1
                        for w in range(words):
                            fresh = sender_mask[w] & ~row[w]
                            row[w] |= sender_mask[w]
                            if ttlr <= 1:
                                continue
                            while fresh:
                                low = fresh & (~fresh + np.uint64(1))
                                fresh ^= low
                                r = (w << 6) + ctz_table[(low * debruijn) >> shift58]
                                if r == bm:
                                    continue
                                if (fwd_len[r] + inc_len[r]
                                        >= suffix_slots[r, month + 1]):
                                    continue
                                e2 = _alloc_entry(ent_free, counters)
                                ent_mid[e2] = mid
                                ent_ttl[e2] = ttlr - 1
                                ent_next[e2] = -1
                                if inc_tail[r] >= 0:
                                    ent_next[inc_tail[r]] = e2
                                else:
                                    inc_head[r] = e2
                                inc_tail[r] = e2
                                inc_len[r] += 1
                                enq += 1
                    else:
                        for j in range(indptr[s], indptr[s + 1]):
                            r = indices[j]
                            w = r >> 6
                            mask = masks[r & 63]
                            if row[w] & mask:
                                if r == bm and is_cargo:
                                    month_out[2] += 1
                            else:
                                row[w] |= mask
                                if r == bm:
                                    if is_cargo:
                                        month_out[1] += 1
                                        delivered_by_origin[origin[mid]] += 1
                                elif (ttlr > 1
                                      and fwd_len[r] + inc_len[r]
                                      < suffix_slots[r, month + 1]):
                                    e2 = _alloc_entry(ent_free, counters)
                                    ent_mid[e2] = mid
                                    ent_ttl[e2] = ttlr - 1
                                    ent_next[e2] = -1
                                    if inc_tail[r] >= 0:
                                        ent_next[inc_tail[r]] = e2
                                    else:
                                        inc_head[r] = e2
                                    inc_tail[r] = e2
                                    inc_len[r] += 1
                                    enq += 1
                    pending[mid] += enq
                    if pending[mid] == 0:
                        free_stack[counters[1]] = slot
                        counters[1] += 1
                        seen_slot[mid] = -9
            s += 1
        phase = _PHASE_MERGE

    # Month end: received copies become forwardable next month.
    for r in range(n):
        if inc_head[r] >= 0:
            if fwd_tail[r] >= 0:
                ent_next[fwd_tail[r]] = inc_head[r]
            else:
                fwd_head[r] = inc_head[r]
            fwd_tail[r] = inc_tail[r]
            fwd_len[r] += inc_len[r]
            inc_head[r] = -1
            inc_tail[r] = -1
            inc_len[r] = 0
    return _STATUS_DONE, _PHASE_MERGE, 0


def _infected_csr(dataset, bots):
    index = {v: i for i, v in enumerate(bots)}
    indptr = np.zeros(len(bots) + 1, dtype=np.int64)
    chunks = []
    for i, v in enumerate(bots):
        nbrs = [index[int(u)] for u in dataset.adjacency[v] if int(u) in index]
        chunks.append(np.array(nbrs, dtype=np.int32))
        indptr[i + 1] = indptr[i] + len(nbrs)
    indices = (np.concatenate(chunks) if chunks
               else np.zeros(0, dtype=np.int32))
    return indptr, indices.astype(np.int32)


def run_trial_fast(dataset, config, profile, infected, botmaster) -> RunResult:
    """Accelerated equivalent of running every month of one trial."""
    if botmaster not in infected:
        raise ValidationError("botmaster must be an infected node")
    size_bits = profile.capacity_bits // config.messages_per_image
    if size_bits < 1:
        raise ValidationError(
            "messages_per_image exceeds the profile's per-image capacity"
        )
    bots = sorted(infected)
    n = len(bots)
    months = dataset.months
    ttl = config.ttl if config.ttl is not None else default_ttl(n)
    if ttl > 1000:
        raise ValidationError("ttl above 1000 is not supported")
    bm = bots.index(botmaster)
    n_bots = n - 1
    indptr, indices = _infected_csr(dataset, bots)
    uploads = np.ascontiguousarray(dataset.uploads[bots], dtype=np.int64)
    mpi = config.messages_per_image
    suffix_slots = np.zeros((n, months + 1), dtype=np.int64)
    if months:
        suffix_slots[:, :-1] = np.cumsum(
            uploads[:, ::-1] * mpi, axis=1)[:, ::-1]

    total_ids = months * (n_bots * config.K + config.command_rate)
    origin = np.empty(max(total_ids, 1), dtype=np.int32)
    pending = np.zeros(max(total_ids, 1), dtype=np.int32)
    seen_slot = np.empty(max(total_ids, 1), dtype=np.int32)

    words = (n + 63) // 64
    nbr_masks = _build_nbr_masks(indptr, indices, words)
    slot_cap = max(4096, min(total_ids, 65536))
    bits = np.zeros((slot_cap, words), dtype=np.uint64)
    free_stack = np.empty(slot_cap, dtype=np.int64)

    arena_cap = max(65536, n_bots * config.K * 2)
    ent_mid = np.empty(arena_cap, dtype=np.int32)
    ent_ttl = np.empty(arena_cap, dtype=np.int16)
    ent_next = np.empty(arena_cap, dtype=np.int32)
    ent_free = np.empty(arena_cap, dtype=np.int32)

    neg = lambda: np.full(n, -1, dtype=np.int64)
    loc_head, loc_tail = neg(), neg()
    fwd_head, fwd_tail = neg(), neg()
    inc_head, inc_tail = neg(), neg()
    loc_len = np.zeros(n, dtype=np.int64)
    fwd_len = np.zeros(n, dtype=np.int64)
    inc_len = np.zeros(n, dtype=np.int64)

    counters = np.zeros(5, dtype=np.int64)
    delivered_by_origin = np.zeros(n, dtype=np.int64)
    gen_per_month = np.full(months, n_bots * config.K, dtype=np.float64)
    tx = np.zeros(months, dtype=np.float64)
    uniq = np.zeros(months, dtype=np.float64)
    dup = np.zeros(months, dtype=np.float64)

    for month in range(months):
        phase, cursor = _PHASE_GENERATE, 0
        month_out = np.zeros(3, dtype=np.int64)
        while True:
            status, phase, cursor = _month_kernel(
                month, phase, cursor,
                indptr, indices, uploads, suffix_slots, bm,
                config.K, ttl, config.command_rate, config.messages_per_image,
                config.forward_reserve,
                origin, pending, seen_slot,
                bits, free_stack,
                ent_mid, ent_ttl, ent_next, ent_free,
                loc_head, loc_tail, loc_len, fwd_head, fwd_tail, fwd_len,
                inc_head, inc_tail, inc_len,
                counters, month_out, delivered_by_origin,
                _BIT_MASKS, nbr_masks, _DEBRUIJN_TABLE,
            )
            if status == _STATUS_DONE:
                break
            if status == _STATUS_GROW_ARENA:
                new_cap = ent_mid.shape[0] * 2
                ent_mid = np.resize(ent_mid, new_cap)
                ent_ttl = np.resize(ent_ttl, new_cap)
                ent_next = np.resize(ent_next, new_cap)
                ent_free = np.resize(ent_free, new_cap)
            else:
                old = bits.shape[0]
                grown = np.zeros((old * 2, words), dtype=np.uint64)
                grown[:old] = bits
                bits = grown
                free_stack = np.resize(free_stack, old * 2)
        tx[month], uniq[month], dup[month] = month_out

    per_bot_generated = np.zeros(dataset.node_count, dtype=np.float64)
    per_bot_delivered = np.zeros(dataset.node_count, dtype=np.float64)
    for i, v in enumerate(bots):
        per_bot_delivered[v] = delivered_by_origin[i]
        if i != bm:
            per_bot_generated[v] = config.K * months
    return RunResult(
        months=months,
        trials=1,
        bot_count=n_bots,
        bits_per_message=size_bits,
        generated_per_month=gen_per_month,
        transmitted_per_month=tx,
        delivered_unique_per_month=uniq,
        delivered_duplicate_per_month=dup,
        per_bot_generated=per_bot_generated,
        per_bot_delivered=per_bot_delivered,
    )
