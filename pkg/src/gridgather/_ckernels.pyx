# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; same contracts as ``_purekernels``.

Cell sets are copied into a byte grid over their bounding box (plus a
one-cell margin) and all searches run on flat indices.
"""

from libc.stdlib cimport malloc, calloc, free

NAME = "cython"

cdef int DX[4]
cdef int DY[4]
DX[:] = [0, 1, 0, -1]
DY[:] = [1, 0, -1, 0]


cdef class _Grid:
    cdef int x0, y0, w, h, count
    cdef unsigned char *occ

    def __cinit__(self, cells):
        cdef int x, y, xmin, xmax, ymin, ymax
        self.occ = NULL
        pts = set(cells)
        self.count = len(pts)
        if not pts:
            self.w = self.h = 0
            return
        xmin = ymin = 2147483647
        xmax = ymax = -2147483647
        for x, y in pts:
            if x < xmin: xmin = x
            if x > xmax: xmax = x
            if y < ymin: ymin = y
            if y > ymax: ymax = y
        self.x0 = xmin - 1
        self.y0 = ymin - 1
        self.w = xmax - xmin + 3
        self.h = ymax - ymin + 3
        self.occ = <unsigned char *> calloc(self.w * self.h, 1)
        if self.occ == NULL:
            raise MemoryError()
        for x, y in pts:
            self.occ[(y - self.y0) * self.w + (x - self.x0)] = 1

    def __dealloc__(self):
        free(self.occ)

    cdef object cell(self, int i):
        return (i % self.w + self.x0, i // self.w + self.y0)


cdef int _flood(unsigned char *grid, int w, int h, int start, unsigned char want) except -1:
    """Count cells equal to ``want`` reachable from ``start``; marks them with 2."""
    cdef int *stack = <int *> malloc(w * h * sizeof(int))
    cdef int top = 0, seen = 1, i, k, x, y, nx, ny, j
    if stack == NULL:
        raise MemoryError()
    grid[start] = 2
    stack[top] = start
    top += 1
    while top:
        top -= 1
        i = stack[top]
        x = i % w
        y = i // w
        for k in range(4):
            nx = x + DX[k]
            ny = y + DY[k]
            if nx < 0 or ny < 0 or nx >= w or ny >= h:
                continue
            j = ny * w + nx
            if grid[j] == want:
                grid[j] = 2
                seen += 1
                stack[top] = j
                top += 1
    free(stack)
    return seen


def connected(cells):
    cdef _Grid g = _Grid(cells)
    cdef int i
    if g.count == 0:
        return False
    for i in range(g.w * g.h):
        if g.occ[i]:
            return _flood(g.occ, g.w, g.h, i, 1) == g.count
    return False


def hole_free(cells):
    cdef _Grid g = _Grid(cells)
    if g.count == 0:
        return True
    # corner 0 lies in the empty margin
    return _flood(g.occ, g.w, g.h, 0, 0) == g.w * g.h - g.count


def cut_cells(cells):
    cdef _Grid g = _Grid(cells)
    cdef int n = g.w * g.h, i, root = -1, top, cell, k, nb, counter = 1, children = 0, parent
    cdef int *disc
    cdef int *low
    cdef int *st_cell
    cdef int *st_par
    cdef int *st_i
    cuts = set()
    if g.count < 3:
        return cuts
    disc = <int *> malloc(n * sizeof(int))
    low = <int *> malloc(n * sizeof(int))
    st_cell = <int *> malloc(n * sizeof(int))
    st_par = <int *> malloc(n * sizeof(int))
    st_i = <int *> malloc(n * sizeof(int))
    try:
        if not (disc and low and st_cell and st_par and st_i):
            raise MemoryError()
        for i in range(n):
            disc[i] = -1
        # root: smallest cell in (x, y) order, matching the pure kernel
        for k in range(g.w):
            for i in range(g.h):
                if root < 0 and g.occ[i * g.w + k]:
                    root = i * g.w + k
        disc[root] = low[root] = 0
        top = 0
        st_cell[0] = root
        st_par[0] = -1
        st_i[0] = 0
        top = 1
        while top:
            cell = st_cell[top - 1]
            parent = st_par[top - 1]
            k = st_i[top - 1]
            if k < 4:
                st_i[top - 1] = k + 1
                nb = cell + DY[k] * g.w + DX[k]
                if not g.occ[nb] or nb == parent:
                    continue
                if disc[nb] >= 0:
                    if disc[nb] < low[cell]:
                        low[cell] = disc[nb]
                else:
                    disc[nb] = low[nb] = counter
                    counter += 1
                    if cell == root:
                        children += 1
                    st_cell[top] = nb
                    st_par[top] = cell
                    st_i[top] = 0
                    top += 1
            else:
                top -= 1
                if parent >= 0:
                    if low[cell] < low[parent]:
                        low[parent] = low[cell]
                    if parent != root and low[cell] >= disc[parent]:
                        cuts.add(g.cell(parent))
        if children > 1:
            cuts.add(g.cell(root))
    finally:
        free(disc); free(low); free(st_cell); free(st_par); free(st_i)
    return cuts


cdef struct _Enum:
    int n, w, stride
    unsigned char *reached
    int *buf
    int *poly
    int depth


cdef int _grow(_Enum *e, int base, int length, list out) except -1:
    cdef int c, k, nb, fresh_start, i, nlen
    cdef int nbase = base + e.stride
    while length > 0:
        length -= 1
        c = e.buf[base + length]
        e.poly[e.depth] = c
        e.depth += 1
        if e.depth == e.n:
            out.append(_poly_tuple(e))
        else:
            for i in range(length):
                e.buf[nbase + i] = e.buf[base + i]
            nlen = length
            fresh_start = nlen
            for k in range(4):
                nb = c + DY[k] * e.w + DX[k]
                # allowed: y > 0, or y == 0 and x >= 0 (the origin is column n of row 0)
                if nb < e.n:
                    continue
                if not e.reached[nb]:
                    e.reached[nb] = 1
                    e.buf[nbase + nlen] = nb
                    nlen += 1
            _grow(e, nbase, nlen, out)
            for i in range(fresh_start, nlen):
                e.reached[e.buf[nbase + i]] = 0
        e.depth -= 1
    return 0


cdef tuple _poly_tuple(_Enum *e):
    cdef int i, j, t, m = e.depth
    cdef int tmp[64]
    for i in range(m):
        tmp[i] = e.poly[i]
    for i in range(1, m):
        t = tmp[i]
        j = i - 1
        while j >= 0 and tmp[j] > t:
            tmp[j + 1] = tmp[j]
            j -= 1
        tmp[j + 1] = t
    return tuple([(tmp[i] % e.w - e.n, tmp[i] // e.w) for i in range(m)])


def fixed_polyominoes(int n):
    """All fixed n-ominoes anchored at the origin, cells sorted by (y, x)."""
    cdef _Enum e
    out = []
    if n < 1:
        return out
    if n > 64:
        raise ValueError("size above 64 not supported")
    e.n = n
    e.w = 2 * n + 1
    e.stride = 4 * n + 4
    e.depth = 0
    e.reached = <unsigned char *> calloc(e.w * (n + 1), 1)
    e.buf = <int *> malloc((n + 1) * e.stride * sizeof(int))
    e.poly = <int *> malloc(n * sizeof(int))
    try:
        if not (e.reached and e.buf and e.poly):
            raise MemoryError()
        e.reached[n] = 1
        e.buf[0] = n
        _grow(&e, 0, 1, out)
    finally:
        free(e.reached); free(e.buf); free(e.poly)
    out.sort()
    return out


def has_destructible(cells):
    """True iff some cell is a leaf, or a NE/NW corner on a 2x2 block."""
    cdef _Grid g = _Grid(cells)
    cdef int i, w = g.w, k
    cdef bint nn, ee, ss, ww
    cdef unsigned char *o = g.occ
    for i in range(w * g.h):
        if not o[i]:
            continue
        nn = o[i + w]
        ee = o[i + 1]
        ss = o[i - w]
        ww = o[i - 1]
        k = nn + ee + ss + ww
        if k == 1:
            return True
        if k == 2 and ss and not nn:
            if ww and o[i - w - 1]:
                return True
            if ee and o[i - w + 1]:
                return True
    return False


def lemma_scan(int n):
    checked = 0
    bad = []
    for poly in fixed_polyominoes(n):
        if not hole_free(poly):
            continue
        checked += 1
        if n > 1 and not has_destructible(poly):
            bad.append(poly)
    return checked, bad
