"""Pure-Python geometry kernels.

Every function here has a twin in ``_ckernels.pyx`` with identical
semantics; ``gridgather.kernels`` picks one at import time.  Cells are
plain ``(x, y)`` tuples and cell collections are anything iterable.
"""

NAME = "python"

_STEPS = ((0, 1), (1, 0), (0, -1), (-1, 0))


def connected(cells):
    cells = set(cells)
    if not cells:
        return False
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in _STEPS:
            nb = (x + dx, y + dy)
            if nb in cells and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(cells)


def hole_free(cells):
    """True iff the empty cells of Z^2 form a single (infinite) component.

    Flood fill runs over the bounding box grown by one cell on each side;
    that margin ring is empty and lies in the infinite component.
    """
    cells = set(cells)
    if not cells:
        return True
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    empties = (x1 - x0 + 1) * (y1 - y0 + 1) - len(cells)
    start = (x0, y0)
    seen = {start}
    stack = [start]
    while stack:
        x, y = stack.pop()
        for dx, dy in _STEPS:
            nx, ny = x + dx, y + dy
            if x0 <= nx <= x1 and y0 <= ny <= y1:
                nb = (nx, ny)
                if nb not in cells and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    return len(seen) == empties


def cut_cells(cells):
    """Articulation cells of a connected cell set (iterative Tarjan)."""
    cells = set(cells)
    if len(cells) < 3:
        return set()
    root = min(cells)
    disc = {root: 0}
    low = {root: 0}
    cuts = set()
    root_children = 0
    counter = 1
    # frame: (cell, parent, neighbour iterator index)
    stack = [(root, None, 0)]
    while stack:
        cell, parent, i = stack[-1]
        if i < 4:
            stack[-1] = (cell, parent, i + 1)
            dx, dy = _STEPS[i]
            nb = (cell[0] + dx, cell[1] + dy)
            if nb not in cells or nb == parent:
                continue
            if nb in disc:
                low[cell] = min(low[cell], disc[nb])
            else:
                disc[nb] = low[nb] = counter
                counter += 1
                if cell == root:
                    root_children += 1
                stack.append((nb, cell, 0))
        else:
            stack.pop()
            if parent is not None:
                low[parent] = min(low[parent], low[cell])
                if parent != root and low[cell] >= disc[parent]:
                    cuts.add(parent)
    if root_children > 1:
        cuts.add(root)
    return cuts


def fixed_polyominoes(n):
    """All fixed polyominoes with ``n`` cells (Redelmeier's method).

    Each polyomino is produced once, anchored so that its smallest cell
    in (y, x) order is the origin; cells are returned sorted by (y, x).
    """
    out = []
    if n < 1:
        return out

    def allowed(c):
        return c[1] > 0 or (c[1] == 0 and c[0] >= 0)

    poly = []
    reached = {(0, 0)}

    def grow(untried):
        while untried:
            c = untried.pop()
            poly.append(c)
            if len(poly) == n:
                out.append(tuple(sorted(poly, key=_yx)))
            else:
                fresh = []
                for dx, dy in _STEPS:
                    nb = (c[0] + dx, c[1] + dy)
                    if allowed(nb) and nb not in reached:
                        fresh.append(nb)
                reached.update(fresh)
                grow(untried + fresh)
                reached.difference_update(fresh)
            poly.pop()

    grow([(0, 0)])
    out.sort()
    return out


def _yx(c):
    return (c[1], c[0])


def lemma_scan(n):
    """Check the leaf-or-corner property on every hole-free n-omino.

    Returns ``(checked, counterexamples)`` where ``checked`` counts the
    hole-free polyominoes inspected.
    """
    checked = 0
    bad = []
    for poly in fixed_polyominoes(n):
        if not hole_free(poly):
            continue
        checked += 1
        if n > 1 and not has_destructible(poly):
            bad.append(poly)
    return checked, bad


def has_destructible(cells):
    """True iff some cell is a leaf, or a NE/NW corner on a 2x2 block."""
    cells = set(cells)
    for x, y in cells:
        n = (x, y + 1) in cells
        e = (x + 1, y) in cells
        s = (x, y - 1) in cells
        w = (x - 1, y) in cells
        k = n + e + s + w
        if k == 1:
            return True
        if k == 2 and s and not n:
            if w and (x - 1, y - 1) in cells:
                return True
            if e and (x + 1, y - 1) in cells:
                return True
    return False
