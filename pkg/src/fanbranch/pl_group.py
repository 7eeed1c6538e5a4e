"""Integral piecewise-linear functions on branched covers.

A piecewise-linear function on a cover assigns an ambient linear functional
to every maximal cell so that any two cells agree on shared faces; since in
rank 3 every shared face is generated by shared ray cells, consistency is
exactly the existence of one well-defined value per ray cell.

The solver therefore runs on the values-at-rays form: one variable per ray
cell, and one relation row per generating relation among each maximal cell's
base rays.  Per-cell functionals are recovered from the ray values by exact
3x3 solves, which is a linear isomorphism between the two solution spaces
(the per-cell form is kept as well, for the integral lattice and for
cross-checking).

Triviality of the whole group is decided by a deterministic generic element:
the matching pattern it realizes is certified against the entire solution
space, so verdicts are proofs, not samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cover_poset import CoverPoset
from .exact_linalg import (
    RationalMatrix,
    integer_kernel,
    nullspace_of_int_rows,
    solve_linear,
)
from .fan_core import cone_contains_point, is_complete, wall_relation


class PLError(ValueError):
    pass


def _fan_cache(fan) -> dict:
    cache = getattr(fan, "_pl_cache", None)
    if cache is None:
        cache = {}
        fan._pl_cache = cache
    return cache


def _lift_data(fan, max_pos: int):
    """(local positions of 3 independent rays, inverse of their matrix)."""
    cache = _fan_cache(fan)
    key = ("lift", max_pos)
    if key not in cache:
        cone = fan.max_cones[max_pos]
        gens = [fan.rays[i] for i in cone.ray_indices]
        chosen: list[int] = []
        rowspace: list[list[Fraction]] = []
        for i, g in enumerate(gens):
            vec = [Fraction(x) for x in g]
            for r in rowspace:
                p = next(k for k, x in enumerate(r) if x == 1)
                if vec[p]:
                    f = vec[p]
                    vec = [a - f * b for a, b in zip(vec, r)]
            if any(vec):
                lead = next(k for k, x in enumerate(vec) if x)
                vec = [x / vec[lead] for x in vec]
                # re-reduce previous rows for a clean echelon
                rowspace = [
                    [a - r[lead] * b for a, b in zip(r, vec)] if r[lead] else r
                    for r in rowspace
                ]
                rowspace.append(vec)
                rowspace.sort(key=lambda r: next(k for k, x in enumerate(r) if x))
                chosen.append(i)
            if len(chosen) == fan.rank:
                break
        if len(chosen) != fan.rank:
            raise PLError("maximal cone is not full-dimensional")
        v = [gens[i] for i in chosen]
        n = fan.rank
        inverse_cols = []
        for j in range(n):
            e = [Fraction(1) if k == j else Fraction(0) for k in range(n)]
            col = solve_linear(v, e)
            inverse_cols.append(col)
        # inverse[i][j]: solves V.u = z via u = inverse . z
        inverse = tuple(
            tuple(inverse_cols[j][i] for j in range(n)) for i in range(n)
        )
        cache[key] = (tuple(chosen), inverse)
    return cache[key]


def _max_cell_geometry(cover: CoverPoset):
    """Per maximal cell: (base max-cone position, ray-cell id per base ray).

    Cached on the cover; this is the bridge between poset cells and the base
    cone geometry.
    """
    cached = getattr(cover, "_plgeo", None)
    if cached is not None:
        return cached
    fan = cover.fan
    max_pos_of_base = {
        fan.cone_id(c.ray_indices): pos for pos, c in enumerate(fan.max_cones)
    }
    ray_of_cell = {}
    for r in cover.ray_cells:
        ray_of_cell[r] = fan.cones[cover.cells[r].base].ray_indices[0]
    geo = []
    for m in cover.max_cells:
        base = cover.cells[m].base
        pos = max_pos_of_base[base]
        ray_cells = {}
        for y in cover.below[m]:
            if y in ray_of_cell:
                ray_cells[ray_of_cell[y]] = y
        rays_needed = fan.max_cones[pos].ray_indices
        if sorted(ray_cells) != sorted(rays_needed):
            raise PLError(f"maximal cell {m} is missing ray cells")
        geo.append((m, pos, tuple(ray_cells[r] for r in rays_needed)))
    cover._plgeo = geo
    return geo


class PLFunction:
    """A piecewise-linear function: one ambient functional per maximal cell."""

    def __init__(self, cover: CoverPoset, cell_values, check: bool = True,
                 _ray_values=None):
        self.cover = cover
        self.cell_values = {
            m: tuple(Fraction(x) for x in u) for m, u in cell_values.items()
        }
        if set(self.cell_values) != set(cover.max_cells):
            raise PLError("need exactly one functional per maximal cell")
        if _ray_values is not None and not check:
            self.ray_values = _ray_values
            return
        self.ray_values: dict[int, Fraction] = {}
        fan = cover.fan
        for m, pos, rcells in _max_cell_geometry(cover):
            u = self.cell_values[m]
            for ray, rc in zip(fan.max_cones[pos].ray_indices, rcells):
                val = sum(a * b for a, b in zip(u, fan.rays[ray]))
                if check:
                    old = self.ray_values.get(rc)
                    if old is not None and old != val:
                        raise PLError(
                            f"inconsistent values {old} != {val} at ray cell {rc}"
                        )
                self.ray_values[rc] = val

    def z_vector(self) -> tuple[Fraction, ...]:
        return tuple(self.ray_values[r] for r in self.cover.ray_cells)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        if other.cover is not self.cover:
            raise PLError("cannot add functions on different covers")
        return PLFunction(
            self.cover,
            {
                m: tuple(a + b for a, b in zip(self.cell_values[m], other.cell_values[m]))
                for m in self.cell_values
            },
            check=False,
            _ray_values={
                r: a + other.ray_values[r] for r, a in self.ray_values.items()
            },
        )

    def scale(self, c) -> "PLFunction":
        c = Fraction(c)
        return PLFunction(
            self.cover,
            {m: tuple(c * x for x in u) for m, u in self.cell_values.items()},
            check=False,
            _ray_values={r: c * a for r, a in self.ray_values.items()},
        )

    def to_dict(self) -> dict:
        def enc(x: Fraction):
            return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

        return {
            "cells": [
                {
                    "base": self.cover.cells[m].base,
                    "copy": self.cover.cells[m].copy,
                    "u": [enc(x) for x in self.cell_values[m]],
                }
                for m in sorted(self.cell_values)
            ]
        }

    @classmethod
    def from_dict(cls, cover: CoverPoset, data: dict) -> "PLFunction":
        lookup = {
            (c.base, c.copy): i
            for i, c in enumerate(cover.cells)
        }
        values = {}
        for entry in data["cells"]:
            m = lookup[(entry["base"], entry["copy"])]
            values[m] = tuple(Fraction(str(x)) for x in entry["u"])
        return cls(cover, values)


@dataclass
class ConeMultiset:
    """The weighted multiset of functionals over one base maximal cone."""

    cone_position: int
    entries: tuple  # ((functional, multiplicity), ...) sorted

    @staticmethod
    def collect(cone_position, pairs) -> "ConeMultiset":
        acc: dict[tuple, int] = {}
        for u, w in pairs:
            acc[u] = acc.get(u, 0) + w
        return ConeMultiset(cone_position, tuple(sorted(acc.items())))


def multisets(plf: PLFunction) -> list[ConeMultiset]:
    """Per base maximal cone, the multiset of functionals weighted by cells."""
    cover = plf.cover
    fan = cover.fan
    out = []
    for pos, c in enumerate(fan.max_cones):
        base = fan.cone_id(c.ray_indices)
        pairs = [
            (plf.cell_values[m], cover.cells[m].weight)
            for m in cover.cells_over(base)
        ]
        out.append(ConeMultiset.collect(pos, pairs))
    return out


def is_trivial_function(plf: PLFunction) -> bool:
    """True iff the functional multiset is the same over every maximal cone."""
    ms = multisets(plf)
    return all(m.entries == ms[0].entries for m in ms[1:])


def evaluate(plf: PLFunction, cell: int, point) -> Fraction:
    """Value of the function on a cell at a point of its base cone."""
    cover = plf.cover
    base = cover.cells[cell].base
    gens = cover.fan.generators(base)
    if not cone_contains_point(gens, point):
        raise PLError("point lies outside the cell's base cone")
    if cell in plf.cell_values:
        u = plf.cell_values[cell]
    else:
        carrier = next(
            (m for m in cover.above[cell] if m in plf.cell_values), None
        )
        if carrier is None:
            if cover.cells[cell].base == 0:
                return Fraction(0)
            raise PLError("cell has no maximal cell above it")
        u = plf.cell_values[carrier]
    return sum(Fraction(a) * b for a, b in zip(point, u))


# ---------------------------------------------------------------------------
# The two constraint systems
# ---------------------------------------------------------------------------


def ray_value_system(cover: CoverPoset) -> tuple[list[list[int]], list[int]]:
    """Values-at-rays constraint rows over the ray-cell variables.

    One row per generating relation per maximal cell; a function is PL iff
    its ray-cell values annihilate every row.  Returns (rows, ray cell ids).
    """
    fan = cover.fan
    zvars = cover.ray_cells
    zindex = {r: i for i, r in enumerate(zvars)}
    rows: list[list[int]] = []
    for m, pos, rcells in _max_cell_geometry(cover):
        for rel in wall_relation(fan, pos):
            row = [0] * len(zvars)
            for coeff, rc in zip(rel, rcells):
                row[zindex[rc]] += coeff
            rows.append(row)
    return rows, list(zvars)


def per_cell_system(cover: CoverPoset) -> RationalMatrix:
    """The incidence form: variables are all per-cell functionals plus one
    value per ray cell, constraints <u_c, v_ray> = z_ray per incidence."""
    fan = cover.fan
    n = fan.rank
    maxcells = cover.max_cells
    zvars = cover.ray_cells
    col_of_cell = {m: n * i for i, m in enumerate(maxcells)}
    col_of_ray = {r: n * len(maxcells) + i for i, r in enumerate(zvars)}
    width = n * len(maxcells) + len(zvars)
    rows = []
    for m, pos, rcells in _max_cell_geometry(cover):
        for ray, rc in zip(fan.max_cones[pos].ray_indices, rcells):
            row = [0] * width
            for k, x in enumerate(fan.rays[ray]):
                row[col_of_cell[m] + k] = x
            row[col_of_ray[rc]] = -1
            rows.append(row)
    return RationalMatrix(rows)


def _pullback_z(cover: CoverPoset, coordinate: int) -> tuple[int, ...]:
    fan = cover.fan
    out = []
    for r in cover.ray_cells:
        ray = fan.cones[cover.cells[r].base].ray_indices[0]
        out.append(fan.rays[ray][coordinate])
    return tuple(out)


def _pullback_function(cover: CoverPoset, coordinate: int) -> PLFunction:
    """The pullback of an ambient coordinate functional (constant on cells)."""
    fan = cover.fan
    u = tuple(Fraction(1 if k == coordinate else 0) for k in range(fan.rank))
    ray_values = {}
    for r in cover.ray_cells:
        ray = fan.cones[cover.cells[r].base].ray_indices[0]
        ray_values[r] = Fraction(fan.rays[ray][coordinate])
    return PLFunction(
        cover,
        {m: u for m in cover.max_cells},
        check=False,
        _ray_values=ray_values,
    )


def _lift_z_to_function(cover: CoverPoset, z, check: bool = False) -> PLFunction:
    """Recover per-cell functionals from consistent ray-cell values."""
    fan = cover.fan
    zindex = {r: i for i, r in enumerate(cover.ray_cells)}
    values = {}
    for m, pos, rcells in _max_cell_geometry(cover):
        chosen, inverse = _lift_data(fan, pos)
        rhs = [Fraction(z[zindex[rcells[i]]]) for i in chosen]
        values[m] = tuple(
            sum(a * b for a, b in zip(row, rhs)) for row in inverse
        )
    if check:
        return PLFunction(cover, values, check=True)
    ray_values = {r: Fraction(z[i]) for i, r in enumerate(cover.ray_cells)}
    return PLFunction(cover, values, check=False, _ray_values=ray_values)


@dataclass
class PLBasis:
    """A basis of PL functions; the first `rank` entries are the pullbacks
    of the ambient coordinate functionals."""

    cover: CoverPoset
    functions: list[PLFunction]
    pullbacks: tuple[PLFunction, ...]
    mode: str

    @property
    def dim(self) -> int:
        return len(self.functions)


def _independent_span(vectors, width: int):
    """Incremental elimination; returns indices of an independent subset."""
    rows: list[list[Fraction]] = []
    picked = []
    for idx, vec in enumerate(vectors):
        v = [Fraction(x) for x in vec]
        for r in rows:
            p = next(k for k, x in enumerate(r) if x)
            if v[p]:
                f = v[p] / r[p]
                v = [a - f * b for a, b in zip(v, r)]
        if any(v):
            rows.append(v)
            picked.append(idx)
    return picked


def solve(cover: CoverPoset, mode: str = "rational") -> PLBasis:
    """Basis of the group of piecewise-linear functions on the cover.

    `rational` mode solves the values-at-rays system over Q and lifts ray
    values to per-cell functionals; `integral` mode computes the integer
    kernel of the per-cell incidence system, so each basis function has an
    integral functional on every cell.  The pullback space is contained in
    the span in both modes and heads the rational basis.
    """
    fan = cover.fan
    if fan.rank != 3:
        raise PLError("the solver requires a rank-3 base fan")
    if not is_complete(fan):
        raise PLError("the solver requires a complete base fan")
    n = fan.rank
    pullback_z = [_pullback_z(cover, j) for j in range(n)]
    pullbacks = tuple(_pullback_function(cover, j) for j in range(n))

    if mode == "rational":
        rows, zvars = ray_value_system(cover)
        kernel = nullspace_of_int_rows(rows, len(zvars))
        for z in pullback_z:
            for row in rows:
                if sum(a * b for a, b in zip(row, z)) != 0:
                    raise RuntimeError("pullback fails the ray-value system")
        ordered = list(pullback_z) + [list(v) for v in kernel]
        picked = _independent_span(ordered, len(zvars))
        if picked[:n] != list(range(n)):
            raise RuntimeError("pullback functionals are not independent")
        functions = list(pullbacks)
        for idx in picked[n:]:
            functions.append(_lift_z_to_function(cover, ordered[idx]))
        if len(functions) != len(kernel):
            raise RuntimeError("basis completion lost dimensions")
        return PLBasis(cover, functions, pullbacks, "rational")

    if mode == "integral":
        system = per_cell_system(cover)
        rows = [[int(x) for x in row] for row in system.entries]
        kernel = integer_kernel(rows)
        maxcells = cover.max_cells
        functions = []
        for vec in kernel:
            values = {
                m: tuple(Fraction(x) for x in vec[n * i : n * i + n])
                for i, m in enumerate(maxcells)
            }
            functions.append(PLFunction(cover, values, check=False))
        return PLBasis(cover, functions, pullbacks, "integral")

    raise ValueError(f"unknown mode {mode!r}")


def wedge_summands(cover: CoverPoset) -> list[list[int]]:
    """Connected components of the nonminimal cells (the wedge pieces)."""
    root = cover.minimal_cell
    cells = [i for i in range(len(cover.cells)) if i != root]
    parent = {i: i for i in cells}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for hi in cells:
        for lo in cover.below[hi]:
            if lo != root:
                a, b = find(lo), find(hi)
                if a != b:
                    parent[a] = b
    groups: dict[int, list[int]] = {}
    for i in cells:
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=min)


def _summand_dim(cover: CoverPoset, summand: set[int]) -> int:
    fan = cover.fan
    zvars = [r for r in cover.ray_cells if r in summand]
    zindex = {r: i for i, r in enumerate(zvars)}
    rows = []
    for m, pos, rcells in _max_cell_geometry(cover):
        if m not in summand:
            continue
        for rel in wall_relation(fan, pos):
            row = [0] * len(zvars)
            for coeff, rc in zip(rel, rcells):
                row[zindex[rc]] += coeff
            rows.append(row)
    if not rows:
        return len(zvars)
    from .exact_linalg import _int_echelon

    _, pivots = _int_echelon(rows, len(zvars))
    return len(zvars) - len(pivots)


@dataclass
class TrivialityVerdict:
    all_trivial: bool
    certificate: str | None
    witness: PLFunction | None
    pattern: tuple | None
    dim: int

    @property
    def tag(self) -> str:
        return self.certificate if self.all_trivial else "nontrivial"


def _functional_pattern(plf: PLFunction) -> tuple:
    """Groups of maximal cells carrying equal functionals."""
    groups: dict[tuple, list[int]] = {}
    for m in plf.cover.max_cells:
        groups.setdefault(plf.cell_values[m], []).append(m)
    return tuple(sorted(tuple(g) for g in groups.values()))


def _generic_parameter(basis: list[PLFunction], maxcells: list[int]) -> int:
    """Integer t making sum(t^i . basis_i) avoid every avoidable functional
    coincidence between maximal cells (a Cauchy root bound per pair)."""
    import itertools

    bound = Fraction(1)
    n_coords = len(next(iter(basis[0].cell_values.values()))) if basis else 0
    for c1, c2 in itertools.combinations(maxcells, 2):
        best: Fraction | None = None
        for j in range(n_coords):
            seq = [b.cell_values[c1][j] - b.cell_values[c2][j] for b in basis]
            top = max((i for i, x in enumerate(seq) if x != 0), default=None)
            if top is None:
                continue
            lead = abs(seq[top])
            cand = Fraction(1) + max(
                (abs(seq[i]) / lead for i in range(top)), default=Fraction(0)
            )
            if best is None or cand < best:
                best = cand
        if best is not None and best > bound:
            bound = best
    return max(2, int(bound) + 1)


def _combine(basis: list[PLFunction], t: int) -> PLFunction:
    acc = basis[0]
    scale = 1
    for b in basis[1:]:
        scale *= t
        acc = acc + b.scale(scale)
    return acc


def group_triviality(cover: CoverPoset, basis: PLBasis | None = None) -> TrivialityVerdict:
    """Decide whether every PL function on the cover is trivial.

    Decision ladder: (1) dimension 3 means pullbacks only; (2) a wedge all
    of whose summands have dimension 3 carries only summand-wise pullbacks;
    (3) otherwise a deterministic generic element either witnesses
    nontriviality or realizes a matching pattern that is verified against
    the whole solution space.

    When no basis is supplied, the first two rungs run on the ray-value
    system alone (no functional lifting), which is what makes exhaustive
    sweeps cheap; the same checks on pullback containment still run.
    """
    if basis is None:
        rows, zvars = ray_value_system(cover)
        kernel = nullspace_of_int_rows(rows, len(zvars))
        d = len(kernel)
        pull_z = [_pullback_z(cover, j) for j in range(cover.fan.rank)]
        for z in pull_z:
            for row in rows:
                if sum(a * b for a, b in zip(row, z)) != 0:
                    raise RuntimeError("pullback fails the ray-value system")
        if len(_independent_span(pull_z, len(zvars))) != cover.fan.rank:
            raise RuntimeError("pullback functionals are not independent")
        if d == 3:
            return TrivialityVerdict(True, "pullbacks-only", None, None, d)
        summands = wedge_summands(cover)
        if len(summands) > 1:
            dims = [_summand_dim(cover, set(s)) for s in summands]
            if sum(dims) != d:
                raise RuntimeError("wedge decomposition does not add up")
            if all(x == 3 for x in dims):
                return TrivialityVerdict(True, "wedge-of-pullbacks", None, None, d)
        pl = solve(cover)
    else:
        pl = basis
    d = pl.dim
    if d == 3:
        return TrivialityVerdict(True, "pullbacks-only", None, None, d)
    summands = wedge_summands(cover)
    if len(summands) > 1:
        dims = [_summand_dim(cover, set(s)) for s in summands]
        if sum(dims) != d:
            raise RuntimeError("wedge decomposition does not add up")
        if all(x == 3 for x in dims):
            return TrivialityVerdict(True, "wedge-of-pullbacks", None, None, d)

    maxcells = cover.max_cells
    t = _generic_parameter(pl.functions, maxcells)
    for _ in range(6):
        candidate = _combine(pl.functions, t)
        if not is_trivial_function(candidate):
            return TrivialityVerdict(False, None, candidate, None, d)
        pattern = _functional_pattern(candidate)
        violators = []
        for b in pl.functions:
            ok = True
            for group in pattern:
                first = b.cell_values[group[0]]
                if any(b.cell_values[m] != first for m in group[1:]):
                    ok = False
                    break
            if not ok:
                violators.append(b)
        if not violators:
            return TrivialityVerdict(True, "matched-pattern", None, pattern, d)
        # defensive pencil search; unreachable when t is generic
        for b in violators:
            for s in range(1, 2 * d + 10):
                probe = candidate + b.scale(s)
                if not is_trivial_function(probe):
                    return TrivialityVerdict(False, None, probe, None, d)
        t = 2 * t + 1
    raise RuntimeError("triviality decision did not stabilize")
