"""Pure-Python kernels. Every function here has a line-for-line twin in
``_core.pyx``; both must perform the same floating-point operations in the
same order so that either backend yields bit-identical partitions.
"""
import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
LN2 = math.log(2.0)
INV_2_53 = 1.0 / 9007199254740992.0
MIN_CODELENGTH_GAIN = 1e-13


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n):
        return self.next() % n

    def unit(self):
        return (self.next() >> 11) * INV_2_53


def rng_stream(seed, count):
    """First ``count`` raw outputs of the generator (parity checks)."""
    g = SplitMix64(seed)
    return np.array([g.next() for _ in range(count)], dtype=np.uint64)


def _shuffle(arr, rng):
    for i in range(len(arr) - 1, 0, -1):
        j = rng.below(i + 1)
        arr[i], arr[j] = arr[j], arr[i]


# ---------------------------------------------------------------- louvain

def _modularity_from_aggregates(tot, inn, m2, resolution):
    q = 0.0
    for c in range(len(tot)):
        if tot[c] > 0.0 or inn[c] != 0.0:
            a = tot[c] / m2
            q += inn[c] / m2 - resolution * a * a
    return q


def louvain_local_moves(indptr, indices, weights, loops, k, comm, order, resolution, tol):
    """Greedy modularity moves until a pass stops improving. ``comm`` is updated in place."""
    n = len(k)
    m2 = 0.0
    for i in range(n):
        m2 += k[i]
    if m2 <= 0.0:
        return 0, 0.0
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    kk = k.tolist()
    lp = loops.tolist()
    cm = comm.tolist()
    od = order.tolist()
    tot = [0.0] * n
    inn = [0.0] * n
    for i in range(n):
        c = cm[i]
        tot[c] += kk[i]
        inn[c] += 2.0 * lp[i]
        for p in range(ip[i], ip[i + 1]):
            if cm[ix[p]] == c:
                inn[c] += wt[p]
    neigh_w = [0.0] * n
    neigh_pos = [-1] * n
    q_prev = _modularity_from_aggregates(tot, inn, m2, resolution)
    total_moves = 0
    while True:
        moves = 0
        for i in od:
            ci = cm[i]
            ki = kk[i]
            nlist = []
            for p in range(ip[i], ip[i + 1]):
                c = cm[ix[p]]
                if neigh_pos[c] < 0:
                    neigh_pos[c] = len(nlist)
                    nlist.append(c)
                    neigh_w[c] = 0.0
                neigh_w[c] += wt[p]
            w_self = neigh_w[ci] if neigh_pos[ci] >= 0 else 0.0
            tot[ci] -= ki
            inn[ci] -= 2.0 * w_self + 2.0 * lp[i]
            best = ci
            best_gain = w_self - resolution * tot[ci] * ki / m2
            for c in nlist:
                gain = neigh_w[c] - resolution * tot[c] * ki / m2
                if gain > best_gain:
                    best_gain = gain
                    best = c
            w_best = neigh_w[best] if neigh_pos[best] >= 0 else 0.0
            tot[best] += ki
            inn[best] += 2.0 * w_best + 2.0 * lp[i]
            if best != ci:
                cm[i] = best
                moves += 1
            for c in nlist:
                neigh_pos[c] = -1
        total_moves += moves
        q = _modularity_from_aggregates(tot, inn, m2, resolution)
        if moves == 0 or q - q_prev <= tol * abs(q_prev) or q - q_prev <= 1e-15:
            q_prev = q
            break
        q_prev = q
    comm[:] = cm
    return total_moves, q_prev


# ---------------------------------------------------------------- infomap

def _plogp(x, total):
    if x <= 0.0:
        return 0.0
    p = x / total
    return p * math.log(p) / LN2


def _module_codelength(exit_w, flow_w, total):
    q = 0.0
    for c in range(len(exit_w)):
        q += exit_w[c]
    s = _plogp(q, total)
    for c in range(len(exit_w)):
        if flow_w[c] > 0.0:
            s -= 2.0 * _plogp(exit_w[c], total)
            s += _plogp(exit_w[c] + flow_w[c], total)
    return s


def infomap_local_moves(indptr, indices, weights, flow, comm, order, total, tol):
    """Greedy map-equation moves (module part only; the node entropy term is constant)."""
    n = len(flow)
    if total <= 0.0:
        return 0, 0.0
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    fl = flow.tolist()
    cm = comm.tolist()
    od = order.tolist()
    exit_w = [0.0] * n
    flow_w = [0.0] * n
    size = [0] * n
    out_w = [0.0] * n
    for i in range(n):
        c = cm[i]
        flow_w[c] += fl[i]
        size[c] += 1
        for p in range(ip[i], ip[i + 1]):
            out_w[i] += wt[p]
            if cm[ix[p]] != c:
                exit_w[c] += wt[p]
    free = [c for c in range(n - 1, -1, -1) if size[c] == 0]
    q_exit = 0.0
    for c in range(n):
        q_exit += exit_w[c]
    neigh_w = [0.0] * n
    neigh_pos = [-1] * n
    l_prev = _module_codelength(exit_w, flow_w, total)
    total_moves = 0
    while True:
        moves = 0
        for i in od:
            ci = cm[i]
            oi = out_w[i]
            fi = fl[i]
            nlist = []
            for p in range(ip[i], ip[i + 1]):
                c = cm[ix[p]]
                if neigh_pos[c] < 0:
                    neigh_pos[c] = len(nlist)
                    nlist.append(c)
                    neigh_w[c] = 0.0
                neigh_w[c] += wt[p]
            w_old = neigh_w[ci] if neigh_pos[ci] >= 0 else 0.0
            ex_a = exit_w[ci]
            fa = flow_w[ci]
            ex_a2 = ex_a - oi + 2.0 * w_old
            fa2 = fa - fi
            base_a = -2.0 * _plogp(ex_a, total) + _plogp(ex_a + fa, total)
            new_a = -2.0 * _plogp(ex_a2, total) + _plogp(ex_a2 + fa2, total)
            best = ci
            best_delta = -MIN_CODELENGTH_GAIN
            best_exit_b = 0.0
            cand = [c for c in nlist if c != ci]
            if size[ci] > 1 and free:
                cand.append(free[-1])
            for c in cand:
                w_b = neigh_w[c] if neigh_pos[c] >= 0 else 0.0
                ex_b = exit_w[c]
                fb = flow_w[c]
                ex_b2 = ex_b + oi - 2.0 * w_b
                q2 = q_exit - ex_a - ex_b + ex_a2 + ex_b2
                delta = _plogp(q2, total) - _plogp(q_exit, total)
                delta += new_a - base_a
                delta += -2.0 * _plogp(ex_b2, total) + _plogp(ex_b2 + fb + fi, total)
                delta -= -2.0 * _plogp(ex_b, total) + _plogp(ex_b + fb, total)
                if delta < best_delta:
                    best_delta = delta
                    best = c
                    best_exit_b = ex_b2
            if best != ci:
                if size[best] == 0:
                    free.pop()
                q_exit = q_exit - ex_a - exit_w[best] + ex_a2 + best_exit_b
                exit_w[ci] = ex_a2
                flow_w[ci] = fa2
                size[ci] -= 1
                exit_w[best] = best_exit_b
                flow_w[best] += fi
                size[best] += 1
                cm[i] = best
                if size[ci] == 0:
                    exit_w[ci] = 0.0
                    flow_w[ci] = 0.0
                    free.append(ci)
                moves += 1
            for c in nlist:
                neigh_pos[c] = -1
        total_moves += moves
        l_now = _module_codelength(exit_w, flow_w, total)
        if moves == 0 or l_prev - l_now <= tol * abs(l_prev) or l_prev - l_now <= 1e-15:
            l_prev = l_now
            break
        l_prev = l_now
    comm[:] = cm
    return total_moves, l_prev


# ---------------------------------------------------------------- slpa

def slpa_propagate(indptr, indices, weights, iterations, seed):
    """Speaker-listener rounds; returns the (n, iterations + 1) label memory."""
    n = len(indptr) - 1
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    memory = np.zeros((n, iterations + 1), dtype=np.int64)
    mem = [[i] for i in range(n)]
    rng = SplitMix64(seed)
    order = list(range(n))
    heard = [0.0] * n
    heard_pos = [-1] * n
    for t in range(1, iterations + 1):
        _shuffle(order, rng)
        for i in order:
            lo, hi = ip[i], ip[i + 1]
            if lo == hi:
                mem[i].append(mem[i][-1])
                continue
            labels = []
            for p in range(lo, hi):
                mj = mem[ix[p]]
                lab = mj[rng.below(len(mj))]
                if heard_pos[lab] < 0:
                    heard_pos[lab] = 0
                    heard[lab] = 0.0
                    labels.append(lab)
                heard[lab] += wt[p]
            best = labels[0]
            best_w = heard[best]
            for lab in labels:
                h = heard[lab]
                if h > best_w or (h == best_w and lab < best):
                    best = lab
                    best_w = h
            for lab in labels:
                heard_pos[lab] = -1
            mem[i].append(best)
    for i in range(n):
        memory[i, :] = mem[i]
    return memory


# ---------------------------------------------------------------- block model

def _logfact(x, table):
    if x < len(table):
        return table[x]
    xf = float(x)
    inv = 1.0 / xf
    inv2 = inv * inv
    return (
        xf * math.log(xf) - xf + 0.5 * math.log(2.0 * math.pi * xf)
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)))
    )


def _lbinom(a, b, table):
    if b <= 0 or b >= a:
        return 0.0
    return _logfact(a, table) - _logfact(b, table) - _logfact(a - b, table)


def _sample_row(ptr, cum, r, rng):
    lo, hi = ptr[r], ptr[r + 1]
    if lo == hi:
        return -1
    top = cum[hi - 1]
    base = cum[lo - 1] if lo > 0 else 0.0
    u = base + rng.unit() * (top - base)
    # first position with cum > u
    a, b = lo, hi - 1
    while a < b:
        mid = (a + b) // 2
        if cum[mid] > u:
            b = mid
        else:
            a = mid + 1
    return a


def sbm_merge_proposals(bptr, bidx, bw, bcum, diag, e, nsize, table, n_samples, seed):
    """Best merge partner per block (local part of the description-length change).

    Candidates come from one- and two-step walks on the block graph plus one
    uniform draw, so structurally equivalent but non-adjacent blocks are reachable.
    """
    nb = len(diag)
    ptr = bptr.tolist()
    idx = bidx.tolist()
    w = bw.tolist()
    cum = bcum.tolist()
    dg = diag.tolist()
    ee = e.tolist()
    ns = nsize.tolist()
    tab = table.tolist()
    best_partner = np.full(nb, -1, dtype=np.int64)
    best_delta = np.zeros(nb, dtype=np.float64)
    acc = [0] * nb
    rng = SplitMix64(seed)
    for r in range(nb):
        bp = -1
        bd = 0.0
        for d in range(n_samples):
            s = -1
            if d % 3 == 2 or ptr[r] == ptr[r + 1]:
                s = rng.below(nb)
            else:
                p = _sample_row(ptr, cum, r, rng)
                t = idx[p]
                if d % 3 == 0:
                    s = t
                else:
                    p2 = _sample_row(ptr, cum, t, rng)
                    if p2 >= 0:
                        s = idx[p2]
            if s < 0 or s == r:
                continue
            # m_rt into scratch, then walk s's row
            m_rs = 0
            for p in range(ptr[r], ptr[r + 1]):
                acc[idx[p]] = w[p]
            delta = 0.0
            for p in range(ptr[s], ptr[s + 1]):
                t = idx[p]
                if t == r:
                    m_rs = w[p]
                    continue
                a = acc[t]
                delta += _logfact(a, tab) + _logfact(w[p], tab) - _logfact(a + w[p], tab)
            # entries in r's row not touched by s contribute zero change
            for p in range(ptr[r], ptr[r + 1]):
                acc[idx[p]] = 0
            internal = dg[r] + dg[s] + m_rs
            delta += _logfact(m_rs, tab)
            delta += dg[r] * LN2 + _logfact(dg[r], tab) + dg[s] * LN2 + _logfact(dg[s], tab)
            delta -= internal * LN2 + _logfact(internal, tab)
            er, es = ee[r], ee[s]
            delta += _logfact(er + es, tab) - _logfact(er, tab) - _logfact(es, tab)
            nr, nsz = ns[r], ns[s]
            delta += _logfact(nr, tab) + _logfact(nsz, tab) - _logfact(nr + nsz, tab)
            delta += _lbinom(nr + nsz + er + es - 1, er + es, tab)
            delta -= _lbinom(nr + er - 1, er, tab) + _lbinom(nsz + es - 1, es, tab)
            if bp < 0 or delta < bd or (delta == bd and s < bp):
                bp = s
                bd = delta
        best_partner[r] = bp
        best_delta[r] = bd
    return best_partner, best_delta


def sbm_sweeps(indptr, indices, weights, loops, k, b, m, e, nsize, table, sweeps, seed):
    """Metropolis single-node moves at unit temperature.

    Moves that would empty a block are not proposed, so the block count is
    fixed. ``b``, ``m``, ``e``, ``nsize`` are updated in place; returns the best
    partition visited and its description-length change relative to the start.
    """
    n = len(k)
    nb = m.shape[0]
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    lp = loops.tolist()
    kk = k.tolist()
    bb = b.tolist()
    mm = m.tolist()
    ee = e.tolist()
    ns = nsize.tolist()
    tab = table.tolist()
    rng = SplitMix64(seed)
    order = list(range(n))
    kt = [0] * nb
    kt_seen = [False] * nb
    f_now = 0.0
    f_best = 0.0
    best_b = list(bb)
    if nb < 2:
        return np.array(best_b, dtype=np.int64), 0.0
    for _ in range(sweeps):
        _shuffle(order, rng)
        for i in order:
            r = bb[i]
            s = rng.below(nb - 1)
            if s >= r:
                s += 1
            if ns[r] <= 1:
                continue
            touched = []
            for p in range(ip[i], ip[i + 1]):
                t = bb[ix[p]]
                if not kt_seen[t]:
                    kt_seen[t] = True
                    kt[t] = 0
                    touched.append(t)
                kt[t] += wt[p]
            ktr = kt[r] if kt_seen[r] else 0
            kts = kt[s] if kt_seen[s] else 0
            li = lp[i]
            ki = kk[i]
            mr, ms = mm[r], mm[s]
            delta = 0.0
            for t in touched:
                if t == r or t == s:
                    continue
                x = kt[t]
                delta += _logfact(mr[t], tab) + _logfact(ms[t], tab)
                delta -= _logfact(mr[t] - x, tab) + _logfact(ms[t] + x, tab)
            m_rs_new = mr[s] - kts + ktr
            delta += _logfact(mr[s], tab) - _logfact(m_rs_new, tab)
            m_rr_new = mr[r] - ktr - li
            m_ss_new = ms[s] + kts + li
            delta += mr[r] * LN2 + _logfact(mr[r], tab) + ms[s] * LN2 + _logfact(ms[s], tab)
            delta -= m_rr_new * LN2 + _logfact(m_rr_new, tab) + m_ss_new * LN2 + _logfact(m_ss_new, tab)
            er, es = ee[r], ee[s]
            delta += _logfact(er - ki, tab) + _logfact(es + ki, tab) - _logfact(er, tab) - _logfact(es, tab)
            nr, nsz = ns[r], ns[s]
            delta += _logfact(nr, tab) + _logfact(nsz, tab) - _logfact(nr - 1, tab) - _logfact(nsz + 1, tab)
            delta += _lbinom(nr - 1 + er - ki - 1, er - ki, tab) + _lbinom(nsz + 1 + es + ki - 1, es + ki, tab)
            delta -= _lbinom(nr + er - 1, er, tab) + _lbinom(nsz + es - 1, es, tab)
            accept = delta <= 0.0
            if not accept:
                accept = rng.unit() < math.exp(-delta)
            if accept:
                for t in touched:
                    if t == r or t == s:
                        continue
                    x = kt[t]
                    mr[t] -= x
                    mm[t][r] -= x
                    ms[t] += x
                    mm[t][s] += x
                mr[s] = m_rs_new
                ms[r] = m_rs_new
                mr[r] = m_rr_new
                ms[s] = m_ss_new
                ee[r] = er - ki
                ee[s] = es + ki
                ns[r] = nr - 1
                ns[s] = nsz + 1
                bb[i] = s
                f_now += delta
                if f_now < f_best - 1e-9:
                    f_best = f_now
                    best_b = list(bb)
            for t in touched:
                kt_seen[t] = False
    b[:] = bb
    m[:, :] = np.array(mm, dtype=np.int64)
    e[:] = ee
    nsize[:] = ns
    return np.array(best_b, dtype=np.int64), f_best


# ---------------------------------------------------------------- graph stats

def bfs_distance_sum(indptr, indices, sources):
    """Sum of hop distances and number of reached ordered pairs from each source."""
    n = len(indptr) - 1
    ip = indptr.tolist()
    ix = indices.tolist()
    dist = [-1] * n
    queue = [0] * n
    total = 0
    pairs = 0
    for src in sources.tolist():
        dist[src] = 0
        queue[0] = src
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u] + 1
            for p in range(ip[u], ip[u + 1]):
                v = ix[p]
                if dist[v] < 0:
                    dist[v] = du
                    total += du
                    pairs += 1
                    queue[tail] = v
                    tail += 1
        for q in range(tail):
            dist[queue[q]] = -1
    return total, pairs


def triangle_stats(indptr, indices, weights, max_weight):
    """Per-node triangle counts and cube-root weighted triangle intensities."""
    n = len(indptr) - 1
    ip = indptr.tolist()
    ix = indices.tolist()
    wt = weights.tolist()
    tri = np.zeros(n, dtype=np.int64)
    wtri = np.zeros(n, dtype=np.float64)
    mark = [0.0] * n
    marked = [False] * n
    third = 1.0 / 3.0
    for i in range(n):
        for p in range(ip[i], ip[i + 1]):
            marked[ix[p]] = True
            mark[ix[p]] = wt[p] / max_weight
        t = 0
        wsum = 0.0
        for p in range(ip[i], ip[i + 1]):
            j = ix[p]
            wij = wt[p] / max_weight
            for q in range(ip[j], ip[j + 1]):
                kk = ix[q]
                if kk > j and marked[kk]:
                    t += 1
                    wsum += (wij * (wt[q] / max_weight) * mark[kk]) ** third
        for p in range(ip[i], ip[i + 1]):
            marked[ix[p]] = False
        tri[i] = t
        wtri[i] = wsum
    return tri, wtri
