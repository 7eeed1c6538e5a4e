"""Enumeration of maximal degree-d branched covers by monodromy.

Over a complete rank-3 fan, maximal covers correspond to assignments of one
degree-d permutation per non-tree edge of the dual graph (the fundamental
cycles of the sphere minus the ray points), up to simultaneous conjugacy.
This module fixes the generator conventions, streams the raw assignments in
lexicographic order, builds the cover determined by an assignment, and
canonicalizes assignments under conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations as iter_permutations
from math import factorial

from .cover_poset import CoverCell, CoverPoset
from .fan_core import Fan, FanError, is_complete, ray_link


class Permutation:
    """A permutation of {0, ..., d-1} in one-line image form."""

    __slots__ = ("images",)

    def __init__(self, images):
        images = tuple(images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{images} is not a permutation")
        self.images = images

    @property
    def degree(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(range(d))

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # (self * other)(i) = self(other(i))
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(inv)

    def conjugate(self, g: "Permutation") -> "Permutation":
        return g * self * g.inverse()

    @property
    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def cycles(self) -> list[tuple[int, ...]]:
        seen = [False] * len(self.images)
        out = []
        for start in range(len(self.images)):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            nxt = self.images[start]
            while nxt != start:
                cyc.append(nxt)
                seen[nxt] = True
                nxt = self.images[nxt]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple[int, ...]:
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    def __eq__(self, other):
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self):
        return f"Permutation({list(self.images)})"


@lru_cache(maxsize=None)
def all_permutations(d: int) -> tuple[Permutation, ...]:
    """All of S_d in lexicographic order of one-line images."""
    return tuple(Permutation(p) for p in iter_permutations(range(d)))


@dataclass(frozen=True)
class DualSpanningTree:
    """BFS spanning tree of the dual graph, fixing the fundamental cycles.

    Walls are referred to by their position in `fan.walls`; `orientations`
    maps each dual-graph wall to its (lower, higher) maximal cone positions.
    """

    root: int
    tree_walls: tuple[int, ...]
    nontree_walls: tuple[int, ...]
    orientations: dict

    @property
    def generators(self) -> int:
        return len(self.nontree_walls)


def spanning_tree(fan: Fan) -> DualSpanningTree:
    """Deterministic BFS tree from the lowest-index maximal cone.

    Incident walls are explored in wall-index order; non-tree walls, each
    oriented from its lower-indexed to its higher-indexed maximal cone, are
    the free generators of the covering monodromy.
    """
    if fan.rank != 3 or not is_complete(fan):
        raise FanError("spanning trees are built over complete rank-3 fans")
    edges = fan.dual_graph_edges()
    incident: dict[int, list[int]] = {i: [] for i in range(len(fan.max_cones))}
    endpoints = {}
    for w, a, b in edges:
        incident[a].append(w)
        incident[b].append(w)
        endpoints[w] = (min(a, b), max(a, b))
    for lst in incident.values():
        lst.sort()
    visited = {0}
    tree = []
    queue = [0]
    while queue:
        cone = queue.pop(0)
        for w in incident[cone]:
            a, b = endpoints[w]
            other = b if a == cone else a
            if other not in visited:
                visited.add(other)
                tree.append(w)
                queue.append(other)
    nontree = tuple(sorted(w for w, _, _ in edges if w not in set(tree)))
    return DualSpanningTree(0, tuple(tree), nontree, endpoints)


@dataclass(frozen=True)
class MonodromyAssignment:
    """One permutation per non-tree wall, in the tree's generator order."""

    degree: int
    perms: tuple[Permutation, ...]

    def __post_init__(self):
        if any(p.degree != self.degree for p in self.perms):
            raise ValueError("permutation degree mismatch")

    def to_dict(self) -> dict:
        return {"degree": self.degree, "perms": [list(p.images) for p in self.perms]}

    @classmethod
    def from_dict(cls, data: dict) -> "MonodromyAssignment":
        return cls(data["degree"], tuple(Permutation(p) for p in data["perms"]))


def count_assignments(fan: Fan, d: int) -> int:
    tree = spanning_tree(fan)
    return factorial(d) ** tree.generators


def assignment_at(fan: Fan, d: int, index: int, tree: DualSpanningTree | None = None) -> MonodromyAssignment:
    """The index-th assignment in lexicographic order (mixed radix, first
    generator most significant)."""
    tree = tree or spanning_tree(fan)
    perms = all_permutations(d)
    base = len(perms)
    total = base ** tree.generators
    if not 0 <= index < total:
        raise IndexError("assignment index out of range")
    digits = []
    for _ in range(tree.generators):
        index, r = divmod(index, base)
        digits.append(r)
    digits.reverse()
    return MonodromyAssignment(d, tuple(perms[r] for r in digits))


def enumerate_assignments(fan: Fan, d: int, tree: DualSpanningTree | None = None):
    """Stream all (d!)^(m-1) assignments in lexicographic order."""
    if d < 1:
        raise ValueError("degree must be positive")
    tree = tree or spanning_tree(fan)
    perms = all_permutations(d)
    n = tree.generators

    def rec(prefix):
        if len(prefix) == n:
            yield MonodromyAssignment(d, tuple(prefix))
            return
        for p in perms:
            prefix.append(p)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])


class _Transitions:
    """Wall-crossing sheet maps for one assignment, as raw image tuples."""

    def __init__(self, fan: Fan, tree: DualSpanningTree, assignment: MonodromyAssignment):
        self.fan = fan
        self.tree = tree
        self.assignment = assignment
        d = assignment.degree
        ident = tuple(range(d))
        self.forward = {}
        nontree_index = {w: i for i, w in enumerate(tree.nontree_walls)}
        for w, (a, b) in tree.orientations.items():
            if w in nontree_index:
                self.forward[w] = assignment.perms[nontree_index[w]].images
            else:
                self.forward[w] = ident

    def crossing(self, wall: int, from_cone: int, to_cone: int) -> tuple[int, ...]:
        a, b = self.tree.orientations[wall]
        fwd = self.forward[wall]
        if (from_cone, to_cone) == (a, b):
            return fwd
        if (from_cone, to_cone) == (b, a):
            inv = [0] * len(fwd)
            for i, j in enumerate(fwd):
                inv[j] = i
            return tuple(inv)
        raise ValueError("wall does not join those cones")


def _ray_transports(fan: Fan, trans: _Transitions, ray: int):
    """(transport-to-reference maps per incident cone, ray monodromy images).

    transport[cone position] sends a sheet over that cone to the sheet over
    the ray's reference cone obtained by walking back along the link cycle.
    """
    cones, walls = ray_link(fan, ray)
    d = trans.assignment.degree
    t = tuple(range(d))  # sheets at reference -> sheets at current cone
    inv_transport = {cones[0]: tuple(range(d))}
    for j, w in enumerate(walls):
        frm = cones[j]
        to = cones[(j + 1) % len(cones)]
        step = trans.crossing(w, frm, to)
        t = tuple(step[x] for x in t)
        if to != cones[0]:
            inv = [0] * d
            for i, x in enumerate(t):
                inv[x] = i
            inv_transport[to] = tuple(inv)
    return inv_transport, t  # t is now the full loop = ray monodromy


def ray_monodromy(fan: Fan, assignment: MonodromyAssignment, ray: int,
                  tree: DualSpanningTree | None = None) -> Permutation:
    """Product of wall transitions around the ray's link cycle."""
    tree = tree or spanning_tree(fan)
    trans = _Transitions(fan, tree, assignment)
    _, loop = _ray_transports(fan, trans, ray)
    return Permutation(loop)


def branch_rays(fan: Fan, assignment: MonodromyAssignment,
                tree: DualSpanningTree | None = None) -> list[int]:
    """Rays with nontrivial monodromy (the branch set on the sphere)."""
    tree = tree or spanning_tree(fan)
    trans = _Transitions(fan, tree, assignment)
    out = []
    for ray in range(len(fan.rays)):
        _, loop = _ray_transports(fan, trans, ray)
        if any(i != x for i, x in enumerate(loop)):
            out.append(ray)
    return out


def build_cover(fan: Fan, assignment: MonodromyAssignment,
                tree: DualSpanningTree | None = None) -> CoverPoset:
    """The maximal branched cover determined by a monodromy assignment.

    Maximal cells are (cone, sheet) pairs of weight 1, wall cells glue sheet
    s of the lower cone to its image sheet of the higher cone, and the cells
    over a ray are the orbits of the ray monodromy, weighted by orbit length.
    """
    if fan.rank != 3 or not is_complete(fan):
        raise FanError("covers are built over complete rank-3 fans")
    tree = tree or spanning_tree(fan)
    d = assignment.degree
    trans = _Transitions(fan, tree, assignment)

    cells: list[CoverCell] = [CoverCell(0, 0, d)]
    pairs: list[tuple[int, int]] = []

    max_cell_id = {}
    for pos in range(len(fan.max_cones)):
        base = fan.cone_id(fan.max_cones[pos].ray_indices)
        for s in range(d):
            max_cell_id[(pos, s)] = len(cells)
            cells.append(CoverCell(base, s, 1))

    # ray cells: orbits of the ray monodromy, indexed by minimal member
    ray_cell_id = {}
    orbit_of: dict[int, list[int]] = {}
    inv_transports = {}
    for ray in range(len(fan.rays)):
        inv_tr, loop = _ray_transports(fan, trans, ray)
        inv_transports[ray] = inv_tr
        seen = [False] * d
        orbits = []
        for start in range(d):
            if seen[start]:
                continue
            orb = [start]
            seen[start] = True
            nxt = loop[start]
            while nxt != start:
                orb.append(nxt)
                seen[nxt] = True
                nxt = loop[nxt]
            orbits.append(orb)
        base = fan.cone_id((ray,))
        lookup = [0] * d
        for k, orb in enumerate(orbits):
            for s in orb:
                lookup[s] = k
            ray_cell_id[(ray, k)] = len(cells)
            cells.append(CoverCell(base, k, len(orb)))
        orbit_of[ray] = lookup

    def ray_cell_at(ray: int, cone_pos: int, sheet: int) -> int:
        ref_sheet = inv_transports[ray][cone_pos][sheet]
        return ray_cell_id[(ray, orbit_of[ray][ref_sheet])]

    # wall cells, with sheet measured over the lower-position cone
    for w, (a, b) in tree.orientations.items():
        base = fan.walls[w]
        wall_rays = fan.cones[base].ray_indices
        fwd = trans.forward[w]
        for s in range(d):
            wid = len(cells)
            cells.append(CoverCell(base, s, 1))
            pairs.append((0, wid))
            pairs.append((wid, max_cell_id[(a, s)]))
            pairs.append((wid, max_cell_id[(b, fwd[s])]))
            for ray in wall_rays:
                pairs.append((ray_cell_at(ray, a, s), wid))

    for pos in range(len(fan.max_cones)):
        rays_here = fan.max_cones[pos].ray_indices
        for s in range(d):
            mid = max_cell_id[(pos, s)]
            pairs.append((0, mid))
            for ray in rays_here:
                pairs.append((ray_cell_at(ray, pos, s), mid))
    for rid in ray_cell_id.values():
        pairs.append((0, rid))

    return CoverPoset(fan, cells, pairs, _closed=True)


def sheet_components(assignment: MonodromyAssignment) -> list[set[int]]:
    """Orbits of the subgroup generated by the assignment (wedge summands)."""
    d = assignment.degree
    parent = list(range(d))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in assignment.perms:
        for i, j in enumerate(p.images):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
    groups: dict[int, set[int]] = {}
    for i in range(d):
        groups.setdefault(find(i), set()).add(i)
    return sorted(groups.values(), key=min)


def canonical_class(assignment: MonodromyAssignment) -> MonodromyAssignment:
    """Lexicographically minimal simultaneous conjugate of the tuple."""
    d = assignment.degree
    best = None
    for g in all_permutations(d):
        candidate = tuple(p.conjugate(g).images for p in assignment.perms)
        if best is None or candidate < best:
            best = candidate
    return MonodromyAssignment(d, tuple(Permutation(p) for p in best or ()))


def assignment_for_branch_set(fan: Fan, rays: list[int],
                              tree: DualSpanningTree | None = None) -> MonodromyAssignment:
    """The degree-2 assignment whose monodromy is the transposition exactly
    at the given rays (well-defined for degree 2), solved over GF(2)."""
    tree = tree or spanning_tree(fan)
    n = tree.generators
    nontree_index = {w: i for i, w in enumerate(tree.nontree_walls)}
    rows = []
    rhs = []
    target = set(rays)
    if not target <= set(range(len(fan.rays))):
        raise ValueError("branch ray index out of range")
    for ray in range(len(fan.rays)):
        _, walls = ray_link(fan, ray)
        row = [0] * n
        for w in walls:
            if w in nontree_index:
                row[nontree_index[w]] ^= 1
        rows.append(row)
        rhs.append(1 if ray in target else 0)
    # Gaussian elimination over GF(2)
    aug = [row + [b] for row, b in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(n):
        pr = next((i for i in range(r, len(aug)) if aug[i][c]), None)
        if pr is None:
            continue
        aug[r], aug[pr] = aug[pr], aug[r]
        for i in range(len(aug)):
            if i != r and aug[i][c]:
                aug[i] = [x ^ y for x, y in zip(aug[i], aug[r])]
        pivots.append(c)
        r += 1
    for i in range(r, len(aug)):
        if aug[i][n]:
            raise ValueError(
                "no degree-2 cover has that branch set (parity obstruction)"
            )
    x = [0] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    swap = Permutation((1, 0))
    ident = Permutation.identity(2)
    return MonodromyAssignment(2, tuple(swap if xi else ident for xi in x))
