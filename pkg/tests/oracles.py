"""Independent reference implementations used as test oracles.

Nothing here imports the package: each oracle recomputes its answer from
first principles, slowly and obviously.
"""

from itertools import product

STEPS = ((0, 1), (1, 0), (0, -1), (-1, 0))


def nbrs(c):
    return [(c[0] + dx, c[1] + dy) for dx, dy in STEPS]


def normalize(cells):
    """Translate so the (y, x)-smallest cell sits at the origin."""
    ax, ay = min(cells, key=lambda c: (c[1], c[0]))
    return frozenset((x - ax, y - ay) for x, y in cells)


def brute_polyominoes(n):
    """Fixed n-ominoes by growing every (n-1)-omino by one cell, deduplicated."""
    if n < 1:
        return set()
    level = {frozenset({(0, 0)})}
    for _ in range(n - 1):
        nxt = set()
        for p in level:
            for c in p:
                for nb in nbrs(c):
                    if nb not in p:
                        nxt.add(normalize(p | {nb}))
        level = nxt
    return level


def brute_count_in_box(n):
    """Fixed n-ominoes counted by scanning all n-subsets of an n-by-n box (n <= 5)."""
    from itertools import combinations
    box = list(product(range(n), range(n)))
    found = set()
    for cells in combinations(box, n):
        if bfs_connected(cells):
            found.add(normalize(cells))
    return len(found)


def bfs_connected(cells):
    cells = set(cells)
    if not cells:
        return False
    start = next(iter(cells))
    seen, todo = {start}, [start]
    while todo:
        for nb in nbrs(todo.pop()):
            if nb in cells and nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return seen == cells


def euler_hole_free(cells):
    """For a 4-connected cell set: hole-free iff V - E + F of the closed squares is 1."""
    cells = set(cells)
    verts, edges = set(), set()
    for x, y in cells:
        corners = [(x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)]
        verts.update(corners)
        for i in range(4):
            edges.add(frozenset((corners[i], corners[(i + 1) % 4])))
    return len(verts) - len(edges) + len(cells) == 1


def removal_cut_cells(cells):
    cells = set(cells)
    if len(cells) < 3:
        return set()
    return {c for c in cells if not bfs_connected(cells - {c})}


def north_east_target(cells):
    top = max(y for _, y in cells)
    return (max(x for x, y in cells if y == top), top)


def leaf_or_corner(cells):
    """Some cell has one neighbour, or is a NE/NW corner of an occupied 2x2 block."""
    cells = set(cells)
    for x, y in cells:
        n, e, s, w = ((x + dx, y + dy) in cells for dx, dy in STEPS)
        if n + e + s + w == 1:
            return True
        if s and not n and w and not e and (x - 1, y - 1) in cells:
            return True
        if s and not n and e and not w and (x + 1, y - 1) in cells:
            return True
    return False
