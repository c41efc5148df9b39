# cython: language_level=3
"""Compiled kernels. Each function mirrors its twin in ``_pure.py`` operation
for operation; keep the two in lockstep.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, pow, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef double LN2 = log(2.0)
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double MIN_CODELENGTH_GAIN = 1e-13


cdef inline uint64_t sm_next(uint64_t* state) nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline int64_t sm_below(uint64_t* state, int64_t n) nogil:
    return <int64_t>(sm_next(state) % <uint64_t>n)


cdef inline double sm_unit(uint64_t* state) nogil:
    return <double>(sm_next(state) >> 11) * INV_2_53


cdef inline void shuffle(int64_t[::1] arr, uint64_t* state) nogil:
    cdef Py_ssize_t i
    cdef int64_t j, tmp
    for i in range(arr.shape[0] - 1, 0, -1):
        j = sm_below(state, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


cdef uint64_t seed_state(object seed):
    return <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)


def rng_stream(seed, Py_ssize_t count):
    cdef uint64_t state = seed_state(seed)
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t i
    for i in range(count):
        o[i] = sm_next(&state)
    return out


# ---------------------------------------------------------------- louvain

cdef double modularity_from_aggregates(double[::1] tot, double[::1] inn, double m2, double resolution):
    cdef double q = 0.0, a
    cdef Py_ssize_t c
    for c in range(tot.shape[0]):
        if tot[c] > 0.0 or inn[c] != 0.0:
            a = tot[c] / m2
            q += inn[c] / m2 - resolution * a * a
    return q


def louvain_local_moves(const int64_t[::1] indptr, const int64_t[::1] indices,
                        const double[::1] weights, const double[::1] loops,
                        const double[::1] k, int64_t[::1] comm,
                        const int64_t[::1] order, double resolution, double tol):
    cdef Py_ssize_t n = k.shape[0]
    cdef double m2 = 0.0
    cdef Py_ssize_t i, p, t, oi
    for i in range(n):
        m2 += k[i]
    if m2 <= 0.0:
        return 0, 0.0
    cdef double[::1] tot = np.zeros(n, dtype=np.float64)
    cdef double[::1] inn = np.zeros(n, dtype=np.float64)
    cdef double[::1] neigh_w = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] neigh_pos = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] nlist = np.zeros(n, dtype=np.int64)
    cdef int64_t c, ci, best, nlen, moves, total_moves = 0
    cdef double ki, w_self, best_gain, gain, w_best, q, q_prev
    for i in range(n):
        c = comm[i]
        tot[c] += k[i]
        inn[c] += 2.0 * loops[i]
        for p in range(indptr[i], indptr[i + 1]):
            if comm[indices[p]] == c:
                inn[c] += weights[p]
    q_prev = modularity_from_aggregates(tot, inn, m2, resolution)
    while True:
        moves = 0
        for oi in range(n):
            i = order[oi]
            ci = comm[i]
            ki = k[i]
            nlen = 0
            for p in range(indptr[i], indptr[i + 1]):
                c = comm[indices[p]]
                if neigh_pos[c] < 0:
                    neigh_pos[c] = nlen
                    nlist[nlen] = c
                    nlen += 1
                    neigh_w[c] = 0.0
                neigh_w[c] += weights[p]
            w_self = neigh_w[ci] if neigh_pos[ci] >= 0 else 0.0
            tot[ci] -= ki
            inn[ci] -= 2.0 * w_self + 2.0 * loops[i]
            best = ci
            best_gain = w_self - resolution * tot[ci] * ki / m2
            for t in range(nlen):
                c = nlist[t]
                gain = neigh_w[c] - resolution * tot[c] * ki / m2
                if gain > best_gain:
                    best_gain = gain
                    best = c
            w_best = neigh_w[best] if neigh_pos[best] >= 0 else 0.0
            tot[best] += ki
            inn[best] += 2.0 * w_best + 2.0 * loops[i]
            if best != ci:
                comm[i] = best
                moves += 1
            for t in range(nlen):
                neigh_pos[nlist[t]] = -1
        total_moves += moves
        q = modularity_from_aggregates(tot, inn, m2, resolution)
        if moves == 0 or q - q_prev <= tol * abs(q_prev) or q - q_prev <= 1e-15:
            q_prev = q
            break
        q_prev = q
    return total_moves, q_prev


# ---------------------------------------------------------------- infomap

cdef inline double plogp(double x, double total) nogil:
    if x <= 0.0:
        return 0.0
    cdef double p = x / total
    return p * log(p) / LN2


cdef double module_codelength(double[::1] exit_w, double[::1] flow_w, double total):
    cdef double q = 0.0, s
    cdef Py_ssize_t c
    for c in range(exit_w.shape[0]):
        q += exit_w[c]
    s = plogp(q, total)
    for c in range(exit_w.shape[0]):
        if flow_w[c] > 0.0:
            s -= 2.0 * plogp(exit_w[c], total)
            s += plogp(exit_w[c] + flow_w[c], total)
    return s


def infomap_local_moves(const int64_t[::1] indptr, const int64_t[::1] indices,
                        const double[::1] weights, const double[::1] flow,
                        int64_t[::1] comm, const int64_t[::1] order,
                        double total, double tol):
    cdef Py_ssize_t n = flow.shape[0]
    if total <= 0.0:
        return 0, 0.0
    cdef double[::1] exit_w = np.zeros(n, dtype=np.float64)
    cdef double[::1] flow_w = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] size = np.zeros(n, dtype=np.int64)
    cdef double[::1] out_w = np.zeros(n, dtype=np.float64)
    cdef double[::1] neigh_w = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] neigh_pos = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] nlist = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] cand = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] free = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t i, p, t, oi, c_
    cdef int64_t c, ci, best, nlen, ncand, nfree = 0, moves, total_moves = 0
    cdef double q_exit = 0.0, oi_w, fi, w_old, ex_a, fa, ex_a2, fa2, base_a, new_a
    cdef double best_delta, best_exit_b, w_b, ex_b, fb, ex_b2, q2, delta, l_prev, l_now
    for i in range(n):
        c = comm[i]
        flow_w[c] += flow[i]
        size[c] += 1
        for p in range(indptr[i], indptr[i + 1]):
            out_w[i] += weights[p]
            if comm[indices[p]] != c:
                exit_w[c] += weights[p]
    for c_ in range(n - 1, -1, -1):
        if size[c_] == 0:
            free[nfree] = c_
            nfree += 1
    for c_ in range(n):
        q_exit += exit_w[c_]
    l_prev = module_codelength(exit_w, flow_w, total)
    while True:
        moves = 0
        for oi in range(n):
            i = order[oi]
            ci = comm[i]
            oi_w = out_w[i]
            fi = flow[i]
            nlen = 0
            for p in range(indptr[i], indptr[i + 1]):
                c = comm[indices[p]]
                if neigh_pos[c] < 0:
                    neigh_pos[c] = nlen
                    nlist[nlen] = c
                    nlen += 1
                    neigh_w[c] = 0.0
                neigh_w[c] += weights[p]
            w_old = neigh_w[ci] if neigh_pos[ci] >= 0 else 0.0
            ex_a = exit_w[ci]
            fa = flow_w[ci]
            ex_a2 = ex_a - oi_w + 2.0 * w_old
            fa2 = fa - fi
            base_a = -2.0 * plogp(ex_a, total) + plogp(ex_a + fa, total)
            new_a = -2.0 * plogp(ex_a2, total) + plogp(ex_a2 + fa2, total)
            best = ci
            best_delta = -MIN_CODELENGTH_GAIN
            best_exit_b = 0.0
            ncand = 0
            for t in range(nlen):
                if nlist[t] != ci:
                    cand[ncand] = nlist[t]
                    ncand += 1
            if size[ci] > 1 and nfree > 0:
                cand[ncand] = free[nfree - 1]
                ncand += 1
            for t in range(ncand):
                c = cand[t]
                w_b = neigh_w[c] if neigh_pos[c] >= 0 else 0.0
                ex_b = exit_w[c]
                fb = flow_w[c]
                ex_b2 = ex_b + oi_w - 2.0 * w_b
                q2 = q_exit - ex_a - ex_b + ex_a2 + ex_b2
                delta = plogp(q2, total) - plogp(q_exit, total)
                delta += new_a - base_a
                delta += -2.0 * plogp(ex_b2, total) + plogp(ex_b2 + fb + fi, total)
                delta -= -2.0 * plogp(ex_b, total) + plogp(ex_b + fb, total)
                if delta < best_delta:
                    best_delta = delta
                    best = c
                    best_exit_b = ex_b2
            if best != ci:
                if size[best] == 0:
                    nfree -= 1
                q_exit = q_exit - ex_a - exit_w[best] + ex_a2 + best_exit_b
                exit_w[ci] = ex_a2
                flow_w[ci] = fa2
                size[ci] -= 1
                exit_w[best] = best_exit_b
                flow_w[best] += fi
                size[best] += 1
                comm[i] = best
                if size[ci] == 0:
                    exit_w[ci] = 0.0
                    flow_w[ci] = 0.0
                    free[nfree] = ci
                    nfree += 1
                moves += 1
            for t in range(nlen):
                neigh_pos[nlist[t]] = -1
        total_moves += moves
        l_now = module_codelength(exit_w, flow_w, total)
        if moves == 0 or l_prev - l_now <= tol * abs(l_prev) or l_prev - l_now <= 1e-15:
            l_prev = l_now
            break
        l_prev = l_now
    return total_moves, l_prev


# ---------------------------------------------------------------- slpa

def slpa_propagate(const int64_t[::1] indptr, const int64_t[::1] indices,
                   const double[::1] weights, Py_ssize_t iterations, seed):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    memory_arr = np.zeros((n, iterations + 1), dtype=np.int64)
    cdef int64_t[:, ::1] memory = memory_arr
    cdef int64_t[::1] mlen = np.ones(n, dtype=np.int64)
    cdef int64_t[::1] order = np.arange(n, dtype=np.int64)
    cdef double[::1] heard = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] heard_pos = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] labels = np.zeros(n, dtype=np.int64)
    cdef uint64_t state = seed_state(seed)
    cdef Py_ssize_t t, oi, i, p, j, q
    cdef int64_t nlab, lab, best, lo, hi
    cdef double best_w, h
    for i in range(n):
        memory[i, 0] = i
    with nogil:
        for t in range(1, iterations + 1):
            shuffle(order, &state)
            for oi in range(n):
                i = order[oi]
                lo = indptr[i]
                hi = indptr[i + 1]
                if lo == hi:
                    memory[i, mlen[i]] = memory[i, mlen[i] - 1]
                    mlen[i] += 1
                    continue
                nlab = 0
                for p in range(lo, hi):
                    j = indices[p]
                    lab = memory[j, sm_below(&state, mlen[j])]
                    if heard_pos[lab] < 0:
                        heard_pos[lab] = 0
                        heard[lab] = 0.0
                        labels[nlab] = lab
                        nlab += 1
                    heard[lab] += weights[p]
                best = labels[0]
                best_w = heard[best]
                for q in range(nlab):
                    lab = labels[q]
                    h = heard[lab]
                    if h > best_w or (h == best_w and lab < best):
                        best = lab
                        best_w = h
                for q in range(nlab):
                    heard_pos[labels[q]] = -1
                memory[i, mlen[i]] = best
                mlen[i] += 1
    return memory_arr


# ---------------------------------------------------------------- block model

cdef inline double logfact(int64_t x, const double[::1] table) nogil:
    if x < table.shape[0]:
        return table[x]
    cdef double xf = <double>x
    cdef double inv = 1.0 / xf
    cdef double inv2 = inv * inv
    return (xf * log(xf) - xf + 0.5 * log(2.0 * M_PI * xf)
            + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0))))


cdef inline double lbinom(int64_t a, int64_t b, const double[::1] table) nogil:
    if b <= 0 or b >= a:
        return 0.0
    return logfact(a, table) - logfact(b, table) - logfact(a - b, table)


cdef inline int64_t sample_row(const int64_t[::1] ptr, const double[::1] cum,
                               int64_t r, uint64_t* state) nogil:
    cdef int64_t lo = ptr[r], hi = ptr[r + 1], a, b, mid
    if lo == hi:
        return -1
    cdef double top = cum[hi - 1]
    cdef double base = cum[lo - 1] if lo > 0 else 0.0
    cdef double u = base + sm_unit(state) * (top - base)
    a = lo
    b = hi - 1
    while a < b:
        mid = (a + b) // 2
        if cum[mid] > u:
            b = mid
        else:
            a = mid + 1
    return a


def sbm_merge_proposals(const int64_t[::1] bptr, const int64_t[::1] bidx,
                        const int64_t[::1] bw, const double[::1] bcum,
                        const int64_t[::1] diag, const int64_t[::1] e,
                        const int64_t[::1] nsize, const double[::1] table,
                        Py_ssize_t n_samples, seed):
    cdef Py_ssize_t nb = diag.shape[0]
    best_partner_arr = np.full(nb, -1, dtype=np.int64)
    best_delta_arr = np.zeros(nb, dtype=np.float64)
    cdef int64_t[::1] best_partner = best_partner_arr
    cdef double[::1] best_delta = best_delta_arr
    cdef int64_t[::1] acc = np.zeros(nb, dtype=np.int64)
    cdef uint64_t state = seed_state(seed)
    cdef Py_ssize_t r, d
    cdef int64_t s, p, p2, t, m_rs, a, internal, er, es, nr, nsz, bp
    cdef double delta, bd
    with nogil:
        for r in range(nb):
            bp = -1
            bd = 0.0
            for d in range(n_samples):
                s = -1
                if d % 3 == 2 or bptr[r] == bptr[r + 1]:
                    s = sm_below(&state, nb)
                else:
                    p = sample_row(bptr, bcum, r, &state)
                    t = bidx[p]
                    if d % 3 == 0:
                        s = t
                    else:
                        p2 = sample_row(bptr, bcum, t, &state)
                        if p2 >= 0:
                            s = bidx[p2]
                if s < 0 or s == r:
                    continue
                m_rs = 0
                for p in range(bptr[r], bptr[r + 1]):
                    acc[bidx[p]] = bw[p]
                delta = 0.0
                for p in range(bptr[s], bptr[s + 1]):
                    t = bidx[p]
                    if t == r:
                        m_rs = bw[p]
                        continue
                    a = acc[t]
                    delta += logfact(a, table) + logfact(bw[p], table) - logfact(a + bw[p], table)
                for p in range(bptr[r], bptr[r + 1]):
                    acc[bidx[p]] = 0
                internal = diag[r] + diag[s] + m_rs
                delta += logfact(m_rs, table)
                delta += diag[r] * LN2 + logfact(diag[r], table) + diag[s] * LN2 + logfact(diag[s], table)
                delta -= internal * LN2 + logfact(internal, table)
                er = e[r]
                es = e[s]
                delta += logfact(er + es, table) - logfact(er, table) - logfact(es, table)
                nr = nsize[r]
                nsz = nsize[s]
                delta += logfact(nr, table) + logfact(nsz, table) - logfact(nr + nsz, table)
                delta += lbinom(nr + nsz + er + es - 1, er + es, table)
                delta -= lbinom(nr + er - 1, er, table) + lbinom(nsz + es - 1, es, table)
                if bp < 0 or delta < bd or (delta == bd and s < bp):
                    bp = s
                    bd = delta
            best_partner[r] = bp
            best_delta[r] = bd
    return best_partner_arr, best_delta_arr


def sbm_sweeps(const int64_t[::1] indptr, const int64_t[::1] indices,
               const int64_t[::1] weights, const int64_t[::1] loops,
               const int64_t[::1] k, int64_t[::1] b, int64_t[:, ::1] m,
               int64_t[::1] e, int64_t[::1] nsize, const double[::1] table,
               Py_ssize_t sweeps, seed):
    cdef Py_ssize_t n = k.shape[0]
    cdef Py_ssize_t nb = m.shape[0]
    best_b_arr = np.array(b, dtype=np.int64)
    cdef int64_t[::1] best_b = best_b_arr
    if nb < 2:
        return best_b_arr, 0.0
    cdef uint64_t state = seed_state(seed)
    cdef int64_t[::1] order = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] kt = np.zeros(nb, dtype=np.int64)
    cdef int64_t[::1] kt_seen = np.zeros(nb, dtype=np.int64)
    cdef int64_t[::1] touched = np.zeros(nb, dtype=np.int64)
    cdef Py_ssize_t sw, oi, i, p, q
    cdef int64_t r, s, t, x, ntouched, ktr, kts, li, ki, m_rs_new, m_rr_new, m_ss_new
    cdef int64_t er, es, nr, nsz
    cdef double delta, f_now = 0.0, f_best = 0.0
    cdef bint accept
    with nogil:
        for sw in range(sweeps):
            shuffle(order, &state)
            for oi in range(n):
                i = order[oi]
                r = b[i]
                s = sm_below(&state, nb - 1)
                if s >= r:
                    s += 1
                if nsize[r] <= 1:
                    continue
                ntouched = 0
                for p in range(indptr[i], indptr[i + 1]):
                    t = b[indices[p]]
                    if not kt_seen[t]:
                        kt_seen[t] = 1
                        kt[t] = 0
                        touched[ntouched] = t
                        ntouched += 1
                    kt[t] += weights[p]
                ktr = kt[r] if kt_seen[r] else 0
                kts = kt[s] if kt_seen[s] else 0
                li = loops[i]
                ki = k[i]
                delta = 0.0
                for q in range(ntouched):
                    t = touched[q]
                    if t == r or t == s:
                        continue
                    x = kt[t]
                    delta += logfact(m[r, t], table) + logfact(m[s, t], table)
                    delta -= logfact(m[r, t] - x, table) + logfact(m[s, t] + x, table)
                m_rs_new = m[r, s] - kts + ktr
                delta += logfact(m[r, s], table) - logfact(m_rs_new, table)
                m_rr_new = m[r, r] - ktr - li
                m_ss_new = m[s, s] + kts + li
                delta += m[r, r] * LN2 + logfact(m[r, r], table) + m[s, s] * LN2 + logfact(m[s, s], table)
                delta -= m_rr_new * LN2 + logfact(m_rr_new, table) + m_ss_new * LN2 + logfact(m_ss_new, table)
                er = e[r]
                es = e[s]
                delta += logfact(er - ki, table) + logfact(es + ki, table) - logfact(er, table) - logfact(es, table)
                nr = nsize[r]
                nsz = nsize[s]
                delta += logfact(nr, table) + logfact(nsz, table) - logfact(nr - 1, table) - logfact(nsz + 1, table)
                delta += lbinom(nr - 1 + er - ki - 1, er - ki, table) + lbinom(nsz + 1 + es + ki - 1, es + ki, table)
                delta -= lbinom(nr + er - 1, er, table) + lbinom(nsz + es - 1, es, table)
                accept = delta <= 0.0
                if not accept:
                    accept = sm_unit(&state) < exp(-delta)
                if accept:
                    for q in range(ntouched):
                        t = touched[q]
                        if t == r or t == s:
                            continue
                        x = kt[t]
                        m[r, t] -= x
                        m[t, r] -= x
                        m[s, t] += x
                        m[t, s] += x
                    m[r, s] = m_rs_new
                    m[s, r] = m_rs_new
                    m[r, r] = m_rr_new
                    m[s, s] = m_ss_new
                    e[r] = er - ki
                    e[s] = es + ki
                    nsize[r] = nr - 1
                    nsize[s] = nsz + 1
                    b[i] = s
                    f_now += delta
                    if f_now < f_best - 1e-9:
                        f_best = f_now
                        for q in range(n):
                            best_b[q] = b[q]
                for q in range(ntouched):
                    kt_seen[touched[q]] = 0
    return best_b_arr, f_best


# ---------------------------------------------------------------- graph stats

def bfs_distance_sum(const int64_t[::1] indptr, const int64_t[::1] indices,
                     const int64_t[::1] sources):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef int64_t[::1] dist = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] queue = np.zeros(max(n, 1), dtype=np.int64)
    cdef int64_t total = 0, pairs = 0, src, u, v, du, head, tail
    cdef Py_ssize_t si, p, q
    with nogil:
        for si in range(sources.shape[0]):
            src = sources[si]
            dist[src] = 0
            queue[0] = src
            head = 0
            tail = 1
            while head < tail:
                u = queue[head]
                head += 1
                du = dist[u] + 1
                for p in range(indptr[u], indptr[u + 1]):
                    v = indices[p]
                    if dist[v] < 0:
                        dist[v] = du
                        total += du
                        pairs += 1
                        queue[tail] = v
                        tail += 1
            for q in range(tail):
                dist[queue[q]] = -1
    return total, pairs


def triangle_stats(const int64_t[::1] indptr, const int64_t[::1] indices,
                   const double[::1] weights, double max_weight):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    tri_arr = np.zeros(n, dtype=np.int64)
    wtri_arr = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] tri = tri_arr
    cdef double[::1] wtri = wtri_arr
    cdef double[::1] mark = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] marked = np.zeros(n, dtype=np.int64)
    cdef double third = 1.0 / 3.0, wsum, wij
    cdef Py_ssize_t i, p, q
    cdef int64_t j, kk, t
    with nogil:
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                marked[indices[p]] = 1
                mark[indices[p]] = weights[p] / max_weight
            t = 0
            wsum = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                wij = weights[p] / max_weight
                for q in range(indptr[j], indptr[j + 1]):
                    kk = indices[q]
                    if kk > j and marked[kk]:
                        t += 1
                        wsum += pow(wij * (weights[q] / max_weight) * mark[kk], third)
            for p in range(indptr[i], indptr[i + 1]):
                marked[indices[p]] = 0
            tri[i] = t
            wtri[i] = wsum
    return tri_arr, wtri_arr
