"""Fans as cone complexes in poset form.

A fan is stored combinatorially: a table of primitive ray generators plus the
ray-index sets of its maximal cones.  Everything else (the full face poset,
walls, the dual graph, ray links, completeness) is derived at construction
time by exact rational arithmetic.

Face tests use no LP solver: a subset S of a cone's generators spans a face
iff some functional vanishes on S and is strictly positive on the remaining
generators, and such functionals are found by exact Fourier-Motzkin
elimination, then re-checked by sign evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from itertools import permutations

from .exact_linalg import (
    RationalMatrix,
    integer_kernel,
    left_nullspace,
    primitive,
    rank as matrix_rank,
)

IntVector = tuple[int, ...]


class FanError(ValueError):
    """Raised when input data violates the fan axioms."""


# ---------------------------------------------------------------------------
# Exact homogeneous feasibility (Fourier-Motzkin with witness extraction)
# ---------------------------------------------------------------------------


def _normalize_ineq(coeffs, strict):
    if all(c == 0 for c in coeffs):
        return None if not strict else ("infeasible",)
    return (primitive(coeffs), strict)


def _eliminate(rows, var):
    """One Fourier-Motzkin step removing variable `var` from homogeneous rows."""
    keep, pos, neg = [], [], []
    for coeffs, strict in rows:
        c = coeffs[var]
        if c == 0:
            keep.append((coeffs, strict))
        elif c > 0:
            pos.append((coeffs, strict))
        else:
            neg.append((coeffs, strict))
    out = {}
    for coeffs, strict in keep:
        key = coeffs
        out[key] = out.get(key, False) or strict
    for pc, ps in pos:
        a = pc[var]
        for nc, ns in neg:
            b = -nc[var]
            combo = tuple(b * x + a * y for x, y in zip(pc, nc))
            norm = _normalize_ineq(combo, ps or ns)
            if norm is None:
                continue
            if norm[0] == "infeasible":
                return None
            key, strict = norm
            out[key] = out.get(key, False) or strict
    return [(k, s) for k, s in out.items()]


def _fm_inequalities(rows, nvars):
    """Witness y in Q^nvars with c.y >= 0 (or > 0 when strict) for all rows."""
    levels = []
    current = []
    for coeffs, strict in rows:
        norm = _normalize_ineq(coeffs, strict)
        if norm is None:
            continue
        if norm[0] == "infeasible":
            return None
        current.append(norm)
    for var in range(nvars - 1, 0, -1):
        levels.append(current)
        current = _eliminate(current, var)
        if current is None:
            return None
    levels.append(current)

    y = [Fraction(0)] * nvars
    for var in range(nvars):
        rows_here = levels[nvars - 1 - var]
        lo = hi = None
        lo_strict = hi_strict = False
        for coeffs, strict in rows_here:
            c = coeffs[var]
            if c == 0:
                continue
            rest = sum(coeffs[j] * y[j] for j in range(var))
            bound = Fraction(-rest, c)
            if c > 0:
                if lo is None or bound > lo:
                    lo, lo_strict = bound, strict
                elif bound == lo:
                    lo_strict = lo_strict or strict
            else:
                if hi is None or bound < hi:
                    hi, hi_strict = bound, strict
                elif bound == hi:
                    hi_strict = hi_strict or strict
        if lo is None and hi is None:
            y[var] = Fraction(0)
        elif hi is None:
            y[var] = lo + 1 if lo_strict else lo
        elif lo is None:
            y[var] = hi - 1 if hi_strict else hi
        elif lo < hi:
            y[var] = (lo + hi) / 2
        elif lo == hi and not (lo_strict or hi_strict):
            y[var] = lo
        elif var == 0:
            # contradictions on the innermost variable are found here, since
            # it is never eliminated
            return None
        else:  # pragma: no cover - contradicts FM projection soundness
            raise AssertionError("Fourier-Motzkin back-substitution failed")
    return tuple(y)


def linear_functional_witness(zero_on, positive_on, negative_on=(), dim=None):
    """Exact witness u with u.v = 0, > 0, < 0 on the three vector families.

    Returns a tuple of Fractions or None if no such functional exists.  The
    returned witness is re-checked by direct sign evaluation.
    """
    vectors = list(zero_on) + list(positive_on) + list(negative_on)
    if dim is None:
        dim = len(vectors[0])
    if zero_on:
        kernel = RationalMatrix(list(zero_on))
        basis = [list(map(Fraction, b)) for b in _nullspace_cached(kernel)]
        if not basis:
            if positive_on or negative_on:
                return None
            return tuple(Fraction(0) for _ in range(dim))
    else:
        basis = [[Fraction(1) if i == j else Fraction(0) for j in range(dim)] for i in range(dim)]
    k = len(basis)
    rows = []
    for v in positive_on:
        rows.append((tuple(sum(b[i] * v[i] for i in range(dim)) for b in basis), True))
    for v in negative_on:
        rows.append((tuple(-sum(b[i] * v[i] for i in range(dim)) for b in basis), True))
    if not rows:
        # any nonzero element of the kernel works; zero if unconstrained
        y = tuple(Fraction(1) if i == 0 else Fraction(0) for i in range(k))
        u = tuple(sum(y[j] * basis[j][i] for j in range(k)) for i in range(dim))
        return u
    y = _fm_inequalities(rows, k)
    if y is None:
        return None
    u = tuple(sum(y[j] * basis[j][i] for j in range(k)) for i in range(dim))
    for v in zero_on:
        assert sum(a * b for a, b in zip(u, v)) == 0
    for v in positive_on:
        assert sum(a * b for a, b in zip(u, v)) > 0
    for v in negative_on:
        assert sum(a * b for a, b in zip(u, v)) < 0
    return u


_null_cache: dict = {}


def _nullspace_cached(m: RationalMatrix):
    key = (m.cols, m.entries)
    hit = _null_cache.get(key)
    if hit is None:
        from .exact_linalg import right_nullspace

        hit = right_nullspace(m)
        if len(_null_cache) > 4096:
            _null_cache.clear()
        _null_cache[key] = hit
    return hit


def cone_contains_point(generators, point) -> bool:
    """Exact membership of a rational point in cone(generators), via Farkas."""
    pt = tuple(Fraction(x) for x in point)
    if all(x == 0 for x in pt):
        return True
    if not generators:
        return False
    # Farkas: point is outside iff some u is >= 0 on generators and < 0 at point.
    rows = []
    dim = len(pt)
    for g in generators:
        rows.append((tuple(Fraction(x) for x in g), False))
    rows.append((tuple(-x for x in pt), True))
    return _fm_inequalities(rows, dim) is None


# ---------------------------------------------------------------------------
# Fans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    rank: int

    def __post_init__(self):
        if self.rank < 1:
            raise FanError("lattice rank must be at least 1")


@dataclass(frozen=True)
class Cone:
    """A cone of the fan, recorded by the indices of its extremal rays."""

    ray_indices: IntVector
    dim: int


class Fan:
    """A fan with its derived face poset, walls, dual graph and ray links.

    Immutable after construction; use :func:`fan_from_data` to build one.
    """

    def __init__(self, lattice, rays, max_cones, cones, cone_ids, walls, wall_cones, name=None):
        self.lattice = lattice
        self.rays = rays                  # tuple of primitive IntVector
        self.max_cones = max_cones        # tuple of Cone, input order
        self.cones = cones                # tuple of Cone, id order (zero cone first)
        self._cone_ids = cone_ids         # ray tuple -> cone id
        self.walls = walls                # tuple of cone ids, codim-1 cones
        self.wall_cones = wall_cones      # wall position -> tuple of max-cone positions
        self.name = name
        self._complete: bool | None = None
        self._ray_links: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] | None = None
        self._automorphisms: tuple | None = None
        self._max_relations: dict[int, tuple] = {}

    # -- basic queries ------------------------------------------------------

    @property
    def rank(self) -> int:
        return self.lattice.rank

    def cone_id(self, ray_indices) -> int:
        key = tuple(sorted(ray_indices))
        try:
            return self._cone_ids[key]
        except KeyError:
            raise FanError(f"no cone with rays {key} in fan") from None

    def cone(self, cone_id: int) -> Cone:
        return self.cones[cone_id]

    def max_cone_position(self, cone_id: int) -> int:
        for i, c in enumerate(self.max_cones):
            if self.cone_id(c.ray_indices) == cone_id:
                return i
        raise FanError("cone is not maximal")

    def generators(self, cone_id: int) -> tuple[IntVector, ...]:
        return tuple(self.rays[i] for i in self.cones[cone_id].ray_indices)

    def face_ids(self, cone_id: int) -> tuple[int, ...]:
        """Ids of all faces of the cone, itself included."""
        rays = set(self.cones[cone_id].ray_indices)
        return tuple(
            i for i, c in enumerate(self.cones) if set(c.ray_indices) <= rays
        )

    def is_face(self, small_id: int, big_id: int) -> bool:
        return set(self.cones[small_id].ray_indices) <= set(self.cones[big_id].ray_indices)

    def cones_containing_ray(self, ray_index: int) -> tuple[int, ...]:
        """Positions (in max_cones) of maximal cones containing the ray."""
        return tuple(
            i for i, c in enumerate(self.max_cones) if ray_index in c.ray_indices
        )

    # -- dual graph ---------------------------------------------------------

    def dual_graph_edges(self) -> list[tuple[int, int, int]]:
        """(wall position, max cone position, max cone position) triples."""
        out = []
        for w, cs in enumerate(self.wall_cones):
            if len(cs) == 2:
                out.append((w, cs[0], cs[1]))
        return out


def _validate_rays(rank, rays):
    prim = []
    seen = {}
    for i, r in enumerate(rays):
        if len(r) != rank:
            raise FanError(f"ray {i} has wrong length for rank {rank}")
        if all(x == 0 for x in r):
            raise FanError(f"ray {i} is the zero vector")
        p = primitive(r)
        if p in seen:
            raise FanError(f"duplicate ray: rays {seen[p]} and {i} span the same ray")
        seen[p] = i
        prim.append(p)
    return tuple(prim)


def _cone_faces(rays_of_cone, vectors):
    """All faces of one cone as frozensets of its local generator positions.

    The cone must be strongly convex and its generators exactly the extremal
    rays; violations raise FanError.
    """
    k = len(rays_of_cone)
    all_idx = list(range(k))
    if linear_functional_witness([], [vectors[i] for i in all_idx]) is None:
        raise FanError("cone is not strongly convex")
    faces = {frozenset(all_idx)}
    for mask in range(2 ** k - 1):
        subset = [i for i in all_idx if mask & (1 << i)]
        rest = [i for i in all_idx if not mask & (1 << i)]
        u = linear_functional_witness(
            [vectors[i] for i in subset], [vectors[i] for i in rest]
        )
        if u is not None:
            faces.add(frozenset(subset))
    for i in all_idx:
        if frozenset([i]) not in faces:
            raise FanError(
                f"generator {rays_of_cone[i]} is not an extremal ray of its cone"
            )
    return faces


def fan_from_data(rank, rays, max_cones, name=None) -> Fan:
    """Build and fully validate a fan from ray vectors and ray-index lists.

    Rays are replaced by their primitive forms.  The derived face poset,
    walls, dual graph and (for complete rank-3 fans) ray link cycles are
    computed here; the fan axioms (strong convexity, extremality, pairwise
    intersection in common faces) are checked exactly.
    """
    lattice = Lattice(rank)
    prim = _validate_rays(rank, rays)

    seen_cones = set()
    max_list = []
    for ci, idxs in enumerate(max_cones):
        t = tuple(sorted(idxs))
        if len(set(t)) != len(t):
            raise FanError(f"maximal cone {ci} repeats a ray index")
        if not t:
            raise FanError(f"maximal cone {ci} is empty")
        if any(i < 0 or i >= len(prim) for i in t):
            raise FanError(f"maximal cone {ci} has an out-of-range ray index")
        if t in seen_cones:
            raise FanError(f"maximal cone {ci} duplicates another maximal cone")
        seen_cones.add(t)
        dim = matrix_rank(RationalMatrix([prim[i] for i in t]))
        max_list.append(Cone(t, dim))

    # face lattice per maximal cone, accumulated globally
    all_faces: set[tuple[int, ...]] = {()}
    for c in max_list:
        vectors = [prim[i] for i in c.ray_indices]
        for f in _cone_faces(c.ray_indices, vectors):
            all_faces.add(tuple(sorted(c.ray_indices[i] for i in f)))

    # pairwise intersections must be common faces (checked on maximal cones;
    # faces of faces then agree automatically)
    for a in range(len(max_list)):
        for b in range(a + 1, len(max_list)):
            ra = set(max_list[a].ray_indices)
            rb = set(max_list[b].ray_indices)
            common = tuple(sorted(ra & rb))
            if ra <= rb or rb <= ra:
                raise FanError(
                    f"maximal cone {a} is contained in maximal cone {b}"
                )
            u = linear_functional_witness(
                [prim[i] for i in common],
                [prim[i] for i in sorted(ra - rb)],
                [prim[i] for i in sorted(rb - ra)],
            )
            if u is None:
                raise FanError(
                    f"maximal cones {a} and {b} intersect in a non-face"
                )
            if common and common not in all_faces:
                raise FanError(
                    f"common face {common} of cones {a} and {b} missing from face set"
                )

    cones = []
    for t in sorted(all_faces, key=lambda t: (len(t), t)):
        dim = 0 if not t else matrix_rank(RationalMatrix([prim[i] for i in t]))
        cones.append(Cone(t, dim))
    cone_ids = {c.ray_indices: i for i, c in enumerate(cones)}

    wall_ids = tuple(
        i for i, c in enumerate(cones) if c.dim == rank - 1
    )
    wall_cones = []
    for w in wall_ids:
        wset = set(cones[w].ray_indices)
        touching = tuple(
            i
            for i, mc in enumerate(max_list)
            if wset <= set(mc.ray_indices)
        )
        wall_cones.append(touching)

    fan = Fan(
        lattice,
        prim,
        tuple(max_list),
        tuple(cones),
        cone_ids,
        wall_ids,
        tuple(wall_cones),
        name=name,
    )
    return fan


# ---------------------------------------------------------------------------
# Completeness
# ---------------------------------------------------------------------------


def _angle_class(v: IntVector) -> int:
    x, y = v
    return 0 if (y > 0 or (y == 0 and x > 0)) else 1


def _angular_cmp(a: IntVector, b: IntVector) -> int:
    ca, cb = _angle_class(a), _angle_class(b)
    if ca != cb:
        return -1 if ca < cb else 1
    cross = a[0] * b[1] - a[1] * b[0]
    return 0 if cross == 0 else (-1 if cross > 0 else 1)


def _is_complete_rank2(fan: Fan) -> bool:
    rays = list(range(len(fan.rays)))
    if len(rays) < 3:
        return False
    if any(c.dim != 2 for c in fan.max_cones):
        return False
    order = sorted(rays, key=cmp_to_key(lambda i, j: _angular_cmp(fan.rays[i], fan.rays[j])))
    consecutive = set()
    for p in range(len(order)):
        i, j = order[p], order[(p + 1) % len(order)]
        vi, vj = fan.rays[i], fan.rays[j]
        if vi[0] * vj[1] - vi[1] * vj[0] <= 0:
            return False  # an angular gap of pi or more
        consecutive.add(tuple(sorted((i, j))))
    cone_sets = {tuple(sorted(c.ray_indices)) for c in fan.max_cones}
    return cone_sets == consecutive


def _is_complete_rank1(fan: Fan) -> bool:
    dirs = {v[0] > 0 for v in fan.rays}
    cone_rays = {c.ray_indices for c in fan.max_cones if c.dim == 1}
    return len(fan.rays) == 2 and dirs == {True, False} and len(cone_rays) == 2


def _build_ray_links(fan: Fan) -> dict[int, tuple[tuple[int, ...], tuple[int, ...]]]:
    links = {}
    for ray in range(len(fan.rays)):
        carriers = fan.cones_containing_ray(ray)
        walls_here = [
            w
            for w, wid in enumerate(fan.walls)
            if ray in fan.cones[wid].ray_indices
        ]
        incident = {c: [] for c in carriers}
        for w in walls_here:
            for c in fan.wall_cones[w]:
                incident[c].append(w)
        if any(len(ws) != 2 for ws in incident.values()):
            raise FanError(f"ray {ray} link is not a cycle")
        start = min(carriers)
        first_wall = min(incident[start])
        cone_seq = [start]
        wall_seq = [first_wall]
        current_cone, current_wall = start, first_wall
        while True:
            a, b = fan.wall_cones[current_wall]
            nxt = b if a == current_cone else a
            if nxt == start:
                break
            w1, w2 = incident[nxt]
            current_wall = w2 if w1 == current_wall else w1
            cone_seq.append(nxt)
            wall_seq.append(current_wall)
            current_cone = nxt
            if len(cone_seq) > len(carriers):
                raise FanError(f"ray {ray} link does not close into a single cycle")
        if len(cone_seq) != len(carriers):
            raise FanError(f"ray {ray} link is disconnected")
        links[ray] = (tuple(cone_seq), tuple(wall_seq))
    return links


def is_complete(fan: Fan) -> bool:
    """Whether the fan's support is the whole space (rank <= 3 only)."""
    if fan._complete is not None:
        return fan._complete
    if fan.rank > 3:
        raise FanError("completeness check requires rank <= 3")
    if fan.rank == 1:
        result = _is_complete_rank1(fan)
    elif fan.rank == 2:
        result = _is_complete_rank2(fan)
    else:
        result = _is_complete_rank3(fan)
    fan._complete = result
    return result


def _is_complete_rank3(fan: Fan) -> bool:
    if any(c.dim != 3 for c in fan.max_cones):
        return False
    if any(len(cs) != 2 for cs in fan.wall_cones):
        return False
    # dual graph connectivity
    n = len(fan.max_cones)
    if n == 0:
        return False
    seen = {0}
    frontier = [0]
    adj = {i: [] for i in range(n)}
    for _, a, b in fan.dual_graph_edges():
        adj[a].append(b)
        adj[b].append(a)
    while frontier:
        x = frontier.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    if len(seen) != n:
        return False
    # each ray link must close into one cycle and project to a complete
    # rank-2 fan in the quotient lattice
    try:
        links = _build_ray_links(fan)
    except FanError:
        return False
    fan._ray_links = links
    for ray in range(len(fan.rays)):
        st = star(fan, fan.cone_id((ray,)))
        try:
            link_fan = st.to_fan()
        except FanError:
            return False
        if not _is_complete_rank2(link_fan):
            return False
    return True


def ray_link(fan: Fan, ray_index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Cyclic (max cone positions, wall positions) around a ray.

    The cycle starts at the lowest-index incident maximal cone and its first
    step crosses the lowest-index incident wall; wall j joins cone j to cone
    j+1 (cyclically).  Requires a complete rank-3 fan.
    """
    if fan.rank != 3 or not is_complete(fan):
        raise FanError("ray links require a complete rank-3 fan")
    if fan._ray_links is None:
        fan._ray_links = _build_ray_links(fan)
    return fan._ray_links[ray_index]


# ---------------------------------------------------------------------------
# Wall relations and stars
# ---------------------------------------------------------------------------


def wall_relation(fan: Fan, max_cone_position: int) -> list[IntVector]:
    """Generating relations among the primitive ray generators of a maximal cone.

    Returns the left kernel of the generator matrix, one primitive integer
    vector per excess ray (k rays in rank 3 give k-3 relations).
    """
    cached = fan._max_relations.get(max_cone_position)
    if cached is not None:
        return list(cached)
    cone = fan.max_cones[max_cone_position]
    if cone.dim != fan.rank:
        raise FanError("wall relations are defined for full-dimensional maximal cones")
    m = RationalMatrix([fan.rays[i] for i in cone.ray_indices])
    rel = left_nullspace(m)
    fan._max_relations[max_cone_position] = tuple(rel)
    return rel


class Star:
    """The star of a cone: the up-set of the cone with quotient geometry."""

    def __init__(self, fan: Fan, base_cone_id: int):
        self.fan = fan
        self.base_cone_id = base_cone_id
        base = fan.cones[base_cone_id]
        gens = [fan.rays[i] for i in base.ray_indices]
        n = fan.rank
        if gens:
            q_rows = integer_kernel(gens)
        else:
            q_rows = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
        self.quotient_map = tuple(q_rows)
        self.quotient_rank = len(q_rows)
        self.cell_ids = tuple(
            cid
            for cid in range(len(fan.cones))
            if fan.is_face(base_cone_id, cid)
        )

    def project(self, vector) -> tuple:
        return tuple(
            sum(r * x for r, x in zip(row, vector)) for row in self.quotient_map
        )

    def cell_generators(self, cone_id: int) -> list[IntVector]:
        """Nonzero primitive images of the cone's rays in the quotient."""
        out = []
        seen = set()
        for i in self.fan.cones[cone_id].ray_indices:
            img = self.project(self.fan.rays[i])
            if all(x == 0 for x in img):
                continue
            p = primitive(img)
            if p not in seen:
                seen.add(p)
                out.append(p)
        return out

    def poset_pairs(self) -> set[tuple[int, int]]:
        """Strict face relations among the cells, as (face, cone) id pairs."""
        return {
            (a, b)
            for a in self.cell_ids
            for b in self.cell_ids
            if a != b and self.fan.is_face(a, b)
        }

    def to_fan(self) -> Fan:
        """The star as a fan in the quotient lattice.

        Works whenever the projected cells embed (always the case for stars
        of cones in a fan); the maximal cells become maximal cones with their
        generator sets reduced to extremal rays.
        """
        if self.quotient_rank == 0:
            raise FanError("star of a full-dimensional cone has no fan structure")
        maximal = [
            cid
            for cid in self.cell_ids
            if not any(
                cid != other and self.fan.is_face(cid, other)
                for other in self.cell_ids
            )
        ]
        ray_table: list[IntVector] = []
        ray_pos: dict[IntVector, int] = {}
        cone_lists = []
        for cid in maximal:
            gens = self.cell_generators(cid)
            extremal = []
            for i, g in enumerate(gens):
                rest = gens[:i] + gens[i + 1 :]
                if not rest:
                    extremal.append(g)
                    continue
                u = linear_functional_witness([g], rest)
                if u is not None:
                    extremal.append(g)
            idxs = []
            for g in extremal:
                if g not in ray_pos:
                    ray_pos[g] = len(ray_table)
                    ray_table.append(g)
                idxs.append(ray_pos[g])
            cone_lists.append(sorted(idxs))
        return fan_from_data(self.quotient_rank, ray_table, cone_lists)


def star(fan: Fan, cone_id: int) -> Star:
    return Star(fan, cone_id)


# ---------------------------------------------------------------------------
# Combinatorial symmetries
# ---------------------------------------------------------------------------


def combinatorial_automorphisms(fan: Fan) -> tuple[tuple[int, ...], ...]:
    """Ray permutations preserving the set of maximal cones (brute force)."""
    if fan._automorphisms is not None:
        return fan._automorphisms
    n = len(fan.rays)
    if n > 10:
        raise FanError("automorphism search is limited to fans with at most 10 rays")
    cone_sets = {frozenset(c.ray_indices) for c in fan.max_cones}
    autos = []
    for perm in permutations(range(n)):
        if {frozenset(perm[i] for i in s) for s in cone_sets} == cone_sets:
            autos.append(perm)
    fan._automorphisms = tuple(autos)
    return fan._automorphisms


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def fan_to_dict(fan: Fan) -> dict:
    return {
        "rank": fan.rank,
        "rays": [list(r) for r in fan.rays],
        "max_cones": [list(c.ray_indices) for c in fan.max_cones],
    }


def fan_from_dict(data: dict, name=None) -> Fan:
    return fan_from_data(data["rank"], data["rays"], data["max_cones"], name=name)


BUNDLED_FANS = ("fulton", "eikelberg", "sigma_prime", "p2")


def load_fan(source) -> Fan:
    """Load a fan from a bundled name ('fulton', ...) or a JSON file path."""
    if source in BUNDLED_FANS:
        from importlib.resources import files

        text = files("fanbranch.data").joinpath(f"{source}.fan.json").read_text()
        return fan_from_dict(json.loads(text), name=source)
    with open(source) as fh:
        data = json.load(fh)
    return fan_from_dict(data, name=str(source))
