# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ROBDD node store.

Drop-in replacement for ``bernabs._pynodes``: same node-id protocol, same
canonical form (hash-consed, no complemented edges).  Node records live in
flat C arrays; the unique table and the apply/ite memo tables are
open-addressed hash maps on C arrays, so the hot mk/apply/ite path never
touches Python objects.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memset

FALSE = 0
TRUE = 1

OP_AND = 0
OP_OR = 1
OP_XOR = 2
OP_IMP = 3
OP_IFF = 4

cdef long C_FALSE = 0
cdef long C_TRUE = 1


cdef inline unsigned long _mix(long a, long b, long c):
    cdef unsigned long h = <unsigned long> a
    h *= <unsigned long> 0x9E3779B97F4A7C15
    h ^= (<unsigned long> b) + (h << 6) + (h >> 2)
    h *= <unsigned long> 0xBF58476D1CE4E5B9
    h ^= (<unsigned long> c) + (h << 16) + (h >> 3)
    return h


cdef struct HashMap:
    # open addressing; slot empty iff val == -1
    long* ka
    long* kb
    long* kc
    long* val
    unsigned long size  # power of two
    unsigned long used


cdef void _hm_init(HashMap* m, unsigned long size):
    m.size = size
    m.used = 0
    m.ka = <long*> malloc(size * sizeof(long))
    m.kb = <long*> malloc(size * sizeof(long))
    m.kc = <long*> malloc(size * sizeof(long))
    m.val = <long*> malloc(size * sizeof(long))
    memset(m.val, 0xFF, size * sizeof(long))  # all -1


cdef void _hm_free(HashMap* m):
    free(m.ka)
    free(m.kb)
    free(m.kc)
    free(m.val)


cdef long _hm_get(HashMap* m, long a, long b, long c):
    cdef unsigned long mask = m.size - 1
    cdef unsigned long i = _mix(a, b, c) & mask
    while m.val[i] != -1:
        if m.ka[i] == a and m.kb[i] == b and m.kc[i] == c:
            return m.val[i]
        i = (i + 1) & mask
    return -1


cdef void _hm_put(HashMap* m, long a, long b, long c, long v):
    cdef unsigned long mask, i, j
    cdef HashMap grown
    if (m.used + 1) * 4 >= m.size * 3:
        _hm_init(&grown, m.size * 2)
        mask = grown.size - 1
        for j in range(m.size):
            if m.val[j] != -1:
                i = _mix(m.ka[j], m.kb[j], m.kc[j]) & mask
                while grown.val[i] != -1:
                    i = (i + 1) & mask
                grown.ka[i] = m.ka[j]
                grown.kb[i] = m.kb[j]
                grown.kc[i] = m.kc[j]
                grown.val[i] = m.val[j]
        grown.used = m.used
        _hm_free(m)
        m[0] = grown
    mask = m.size - 1
    i = _mix(a, b, c) & mask
    while m.val[i] != -1:
        if m.ka[i] == a and m.kb[i] == b and m.kc[i] == c:
            m.val[i] = v
            return
        i = (i + 1) & mask
    m.ka[i] = a
    m.kb[i] = b
    m.kc[i] = c
    m.val[i] = v
    m.used += 1


cdef class NodeTable:
    cdef public int num_vars
    cdef int* _lvl
    cdef long* _lo
    cdef long* _hi
    cdef long* _neg  # memoized complement per node, -1 if unknown
    cdef long _n
    cdef long _cap
    cdef HashMap _unique
    cdef HashMap _app
    cdef HashMap _ite_m

    def __cinit__(self, int num_vars):
        if num_vars < 0:
            raise ValueError("num_vars must be non-negative")
        self.num_vars = num_vars
        self._cap = 1024
        self._lvl = <int*> malloc(self._cap * sizeof(int))
        self._lo = <long*> malloc(self._cap * sizeof(long))
        self._hi = <long*> malloc(self._cap * sizeof(long))
        self._neg = <long*> malloc(self._cap * sizeof(long))
        self._lvl[0] = num_vars
        self._lo[0] = 0
        self._hi[0] = 0
        self._neg[0] = 1
        self._lvl[1] = num_vars
        self._lo[1] = 1
        self._hi[1] = 1
        self._neg[1] = 0
        self._n = 2
        _hm_init(&self._unique, 4096)
        _hm_init(&self._app, 4096)
        _hm_init(&self._ite_m, 1024)

    def __dealloc__(self):
        free(self._lvl)
        free(self._lo)
        free(self._hi)
        free(self._neg)
        _hm_free(&self._unique)
        _hm_free(&self._app)
        _hm_free(&self._ite_m)

    def __len__(self):
        return self._n

    def node(self, long u):
        return self._lvl[u], self._lo[u], self._hi[u]

    def is_terminal(self, long u):
        return u < 2

    cdef long _grow(self) except -1:
        cdef long new_cap = self._cap * 2
        cdef int* nl = <int*> malloc(new_cap * sizeof(int))
        cdef long* nlo = <long*> malloc(new_cap * sizeof(long))
        cdef long* nhi = <long*> malloc(new_cap * sizeof(long))
        cdef long* nneg = <long*> malloc(new_cap * sizeof(long))
        cdef long i
        for i in range(self._n):
            nl[i] = self._lvl[i]
            nlo[i] = self._lo[i]
            nhi[i] = self._hi[i]
            nneg[i] = self._neg[i]
        free(self._lvl)
        free(self._lo)
        free(self._hi)
        free(self._neg)
        self._lvl = nl
        self._lo = nlo
        self._hi = nhi
        self._neg = nneg
        self._cap = new_cap
        return 0

    cdef long _mk(self, int level, long lo, long hi) except -1:
        if lo == hi:
            return lo
        cdef long r = _hm_get(&self._unique, level, lo, hi)
        if r != -1:
            return r
        if self._n == self._cap:
            self._grow()
        r = self._n
        self._lvl[r] = level
        self._lo[r] = lo
        self._hi[r] = hi
        self._neg[r] = -1
        self._n += 1
        _hm_put(&self._unique, level, lo, hi, r)
        return r

    def mk(self, int level, long lo, long hi):
        return self._mk(level, lo, hi)

    def var(self, int level):
        if not 0 <= level < self.num_vars:
            raise ValueError(f"variable level {level} outside universe")
        return self._mk(level, C_FALSE, C_TRUE)

    cdef long _not(self, long u) except -1:
        if u < 2:
            return 1 - u
        cdef long r = self._neg[u]
        if r != -1:
            return r
        r = self._mk(self._lvl[u], self._not(self._lo[u]), self._not(self._hi[u]))
        self._neg[u] = r
        self._neg[r] = u
        return r

    def not_(self, long u):
        return self._not(u)

    cdef long _shortcut(self, int op, long u, long v) except -2:
        if op == OP_AND:
            if u == 0 or v == 0:
                return 0
            if u == 1:
                return v
            if v == 1:
                return u
            if u == v:
                return u
        elif op == OP_OR:
            if u == 1 or v == 1:
                return 1
            if u == 0:
                return v
            if v == 0:
                return u
            if u == v:
                return u
        elif op == OP_XOR:
            if u == v:
                return 0
            if u == 0:
                return v
            if v == 0:
                return u
            if u == 1:
                return self._not(v)
            if v == 1:
                return self._not(u)
        elif op == OP_IMP:
            if u == 0 or v == 1:
                return 1
            if u == 1:
                return v
            if v == 0:
                return self._not(u)
            if u == v:
                return 1
        elif op == OP_IFF:
            if u == v:
                return 1
            if u == 1:
                return v
            if v == 1:
                return u
            if u == 0:
                return self._not(v)
            if v == 0:
                return self._not(u)
        else:
            raise ValueError(f"unknown op code {op}")
        return -1

    cdef long _apply(self, int op, long u, long v) except -1:
        cdef long r = self._shortcut(op, u, v)
        cdef long tmp, lo, hi
        cdef int lu, lv, level
        if r >= 0:
            return r
        if op != OP_IMP and u > v:
            tmp = u
            u = v
            v = tmp
        r = _hm_get(&self._app, op, u, v)
        if r != -1:
            return r
        lu = self._lvl[u]
        lv = self._lvl[v]
        if lu == lv:
            level = lu
            lo = self._apply(op, self._lo[u], self._lo[v])
            hi = self._apply(op, self._hi[u], self._hi[v])
        elif lu < lv:
            level = lu
            lo = self._apply(op, self._lo[u], v)
            hi = self._apply(op, self._hi[u], v)
        else:
            level = lv
            lo = self._apply(op, u, self._lo[v])
            hi = self._apply(op, u, self._hi[v])
        r = self._mk(level, lo, hi)
        _hm_put(&self._app, op, u, v, r)
        return r

    def apply(self, int op, long u, long v):
        return self._apply(op, u, v)

    cdef long _ite(self, long f, long g, long h) except -1:
        if f == 1:
            return g
        if f == 0:
            return h
        if g == h:
            return g
        if g == 1 and h == 0:
            return f
        if g == 0 and h == 1:
            return self._not(f)
        cdef long r = _hm_get(&self._ite_m, f, g, h)
        if r != -1:
            return r
        cdef int level = self._lvl[f]
        if self._lvl[g] < level:
            level = self._lvl[g]
        if self._lvl[h] < level:
            level = self._lvl[h]
        cdef long f0, f1, g0, g1, h0, h1
        if self._lvl[f] == level:
            f0 = self._lo[f]
            f1 = self._hi[f]
        else:
            f0 = f
            f1 = f
        if self._lvl[g] == level:
            g0 = self._lo[g]
            g1 = self._hi[g]
        else:
            g0 = g
            g1 = g
        if self._lvl[h] == level:
            h0 = self._lo[h]
            h1 = self._hi[h]
        else:
            h0 = h
            h1 = h
        r = self._mk(level, self._ite(f0, g0, h0), self._ite(f1, g1, h1))
        _hm_put(&self._ite_m, f, g, h, r)
        return r

    def ite(self, long f, long g, long h):
        return self._ite(f, g, h)

    def restrict(self, long u, int level, bint value):
        cdef dict memo = {}
        return self._restrict(u, level, value, memo)

    cdef long _restrict(self, long u, int level, bint value, dict memo) except -1:
        if self._lvl[u] > level:
            return u
        r = memo.get(u)
        if r is not None:
            return r
        cdef long res
        if self._lvl[u] == level:
            res = self._hi[u] if value else self._lo[u]
        else:
            res = self._mk(
                self._lvl[u],
                self._restrict(self._lo[u], level, value, memo),
                self._restrict(self._hi[u], level, value, memo),
            )
        memo[u] = res
        return res

    def exists(self, long u, levels):
        cdef dict memo = {}
        cdef set lvset = set(levels)
        if not lvset:
            return u
        cdef int top = max(lvset)
        return self._exists(u, lvset, top, memo)

    cdef long _exists(self, long u, set levels, int top, dict memo) except -1:
        if self._lvl[u] > top:
            return u
        r = memo.get(u)
        if r is not None:
            return r
        cdef int lw = self._lvl[u]
        cdef long lo = self._exists(self._lo[u], levels, top, memo)
        cdef long hi = self._exists(self._hi[u], levels, top, memo)
        cdef long res
        if lw in levels:
            res = self._apply(OP_OR, lo, hi)
        else:
            res = self._mk(lw, lo, hi)
        memo[u] = res
        return res

    def rename(self, long u, perm):
        if not perm:
            return u
        cdef dict memo = {}
        cdef dict p = dict(perm)
        return self._rename(u, p, memo)

    cdef long _rename(self, long u, dict perm, dict memo) except -1:
        if u < 2:
            return u
        r = memo.get(u)
        if r is not None:
            return r
        cdef int lw = self._lvl[u]
        cdef long lo = self._rename(self._lo[u], perm, memo)
        cdef long hi = self._rename(self._hi[u], perm, memo)
        nl = perm.get(lw, lw)
        cdef long res = self._ite(self._mk(<int> nl, C_FALSE, C_TRUE), hi, lo)
        memo[u] = res
        return res

    def support(self, long u):
        cdef set seen = set()
        cdef set levels = set()
        cdef list stack = [u]
        cdef long w
        while stack:
            w = stack.pop()
            if w < 2 or w in seen:
                continue
            seen.add(w)
            levels.add(self._lvl[w])
            stack.append(self._lo[w])
            stack.append(self._hi[w])
        return tuple(sorted(levels))
