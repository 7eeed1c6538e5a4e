"""Toric vector bundles as collections of filtrations over Q.

A bundle of rank r on a fan is a vector space E = Q^r with one decreasing
integer-indexed filtration per ray, compatible on every maximal cone through
a common splitting indexed by integral linear functionals.  Splittings are
supplied explicitly as certificates: along with the stored filtrations they
make compatibility a finite, exactly checkable statement, while
`necessary_dimension_check` provides a certificate-free screen (necessary,
never claimed sufficient).

The associated branched cover glues one cell per restricted functional class
over every cone, weighted by multiplicity, and carries the tautological
piecewise-linear function whose per-cone multisets are the equivariant Chern
data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, product

from .cover_poset import CoverCell, CoverPoset, validate_cover
from .exact_linalg import (
    SubspaceBasis,
    annihilator,
    integer_solve,
    intersect,
    solve_linear,
    span,
    subspace_sum,
)
from .fan_core import Fan, cone_contains_point
from .pl_group import PLFunction


class KlyachkoError(ValueError):
    pass


def _full_space(r: int) -> SubspaceBasis:
    return SubspaceBasis(r, [[1 if j == i else 0 for j in range(r)] for i in range(r)])


class Filtration:
    """A decreasing filtration of Q^r with integer jump thresholds.

    Stored as steps [(t_1, S_1), ..., (t_k, S_k)] with t_1 < ... < t_k and
    S_1 > ... > S_k (strict): the filtration equals S_j on the interval
    (t_{j-1}, t_j], the full space below, and zero above t_k.  S_1 must be
    the full space.
    """

    __slots__ = ("ambient_dim", "steps")

    def __init__(self, ambient_dim: int, steps):
        steps = tuple(
            (int(t), s if isinstance(s, SubspaceBasis) else SubspaceBasis(ambient_dim, s))
            for t, s in steps
        )
        if not steps:
            raise KlyachkoError("a filtration needs at least one step")
        if any(s.ambient_dim != ambient_dim for _, s in steps):
            raise KlyachkoError("subspace ambient dimension mismatch")
        if steps[0][1].dim != ambient_dim:
            raise KlyachkoError("lowest step must be the full space")
        for (t1, s1), (t2, s2) in zip(steps, steps[1:]):
            if t2 <= t1:
                raise KlyachkoError("thresholds must strictly increase")
            if not (s1.contains_subspace(s2) and s1.dim > s2.dim):
                raise KlyachkoError("subspaces must strictly decrease")
        if steps[-1][1].dim == 0:
            raise KlyachkoError("zero subspaces are implicit above the last threshold")
        self.ambient_dim = ambient_dim
        self.steps = steps

    def value(self, i) -> SubspaceBasis:
        """The subspace at index i (full below all thresholds, 0 above)."""
        i = Fraction(i)
        for t, s in self.steps:
            if i <= t:
                return s
        return SubspaceBasis(self.ambient_dim)

    def thresholds(self) -> list[int]:
        return [t for t, _ in self.steps]

    def drop_multiset(self) -> list[tuple[int, int]]:
        """(threshold, dimension drop) pairs; drops sum to the ambient dim."""
        out = []
        dims = [s.dim for _, s in self.steps] + [0]
        for (t, _), d0, d1 in zip(self.steps, dims, dims[1:]):
            out.append((t, d0 - d1))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Filtration)
            and self.ambient_dim == other.ambient_dim
            and self.steps == other.steps
        )

    def __repr__(self):
        parts = ", ".join(f"(<= {t}: dim {s.dim})" for t, s in self.steps)
        return f"Filtration({parts})"


@dataclass
class KlyachkoData:
    """One filtration of Q^rank per ray of the fan."""

    fan: Fan
    rank: int
    filtrations: dict

    def __post_init__(self):
        if set(self.filtrations) != set(range(len(self.fan.rays))):
            raise KlyachkoError("need exactly one filtration per ray")
        for f in self.filtrations.values():
            if f.ambient_dim != self.rank:
                raise KlyachkoError("filtration dimension does not match rank")


class SplittingCertificate:
    """Per maximal cone: pairs (integral functional lift, subspace).

    The multiset of functionals weighted by subspace dimensions is the
    cone's Chern multiset; the subspaces must decompose the full space.
    """

    def __init__(self, entries: dict):
        self.entries = {
            pos: tuple((tuple(int(x) for x in u), s) for u, s in cone_entries)
            for pos, cone_entries in entries.items()
        }

    def cone(self, pos: int):
        try:
            return self.entries[pos]
        except KeyError:
            raise KlyachkoError(f"certificate does not cover maximal cone {pos}") from None


@dataclass
class VerifyResult:
    ok: bool
    cone: int | None = None
    ray: int | None = None
    threshold: int | None = None
    reason: str | None = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        where = []
        if self.cone is not None:
            where.append(f"maximal cone {self.cone}")
        if self.ray is not None:
            where.append(f"ray {self.ray}")
        if self.threshold is not None:
            where.append(f"threshold {self.threshold}")
        loc = ", ".join(where)
        return f"violation at {loc}: {self.reason}"


def _induced_filtration(rank: int, pairs) -> Filtration:
    """Filtration generated by (value, subspace) summands: sum over value >= i."""
    values = sorted({v for v, _ in pairs})
    steps = []
    for t in values:
        acc = SubspaceBasis(rank)
        for v, s in pairs:
            if v >= t:
                acc = subspace_sum(acc, s)
        steps.append((t, acc))
    return Filtration(rank, steps)


def verify(data: KlyachkoData, cert: SplittingCertificate) -> VerifyResult:
    """Exact check of the compatibility identity on every maximal cone.

    For each maximal cone, the certified decomposition must be a direct sum,
    and for every ray of the cone the sums of summands with functional value
    at least i must reproduce the stored filtration at every integer i.
    """
    fan = data.fan
    r = data.rank
    for pos in range(len(fan.max_cones)):
        entries = cert.cone(pos)
        cone_rays = fan.max_cones[pos].ray_indices
        # distinct functional classes on this cone
        tuples = [
            tuple(sum(a * b for a, b in zip(u, fan.rays[ray])) for ray in cone_rays)
            for u, _ in entries
        ]
        if len(set(tuples)) != len(tuples):
            return VerifyResult(False, cone=pos, reason="repeated functional class in splitting")
        total = SubspaceBasis(r)
        dim_sum = 0
        for _, s in entries:
            total = subspace_sum(total, s)
            dim_sum += s.dim
        if dim_sum != r or total.dim != r:
            return VerifyResult(
                False, cone=pos,
                reason=f"summands have total dimension {dim_sum} spanning {total.dim}, want {r}",
            )
        for ray in cone_rays:
            pairs = [
                (sum(a * b for a, b in zip(u, fan.rays[ray])), s) for u, s in entries
            ]
            induced = _induced_filtration(r, pairs)
            stored = data.filtrations[ray]
            if induced != stored:
                thresholds = sorted(set(induced.thresholds()) | set(stored.thresholds()))
                bad = next(
                    (t for t in thresholds if induced.value(t) != stored.value(t)),
                    thresholds[0],
                )
                return VerifyResult(
                    False, cone=pos, ray=ray, threshold=bad,
                    reason="splitting does not reproduce the stored filtration",
                )
    return VerifyResult(True)


@dataclass
class NecessityReport:
    status: str  # "ok" | "violation"
    multisets: dict | None
    note: str = "necessary condition only, never sufficient"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def necessary_dimension_check(data: KlyachkoData) -> NecessityReport:
    """Certificate-free screen: per maximal cone, some multiset of integral
    functionals must reproduce every intersection dimension of the stored
    filtrations.  `ok` results are always inconclusive; `violation` proves
    that no compatible splitting can exist.
    """
    fan = data.fan
    r = data.rank
    recovered = {}
    for pos in range(len(fan.max_cones)):
        cone_rays = fan.max_cones[pos].ray_indices
        filts = [data.filtrations[ray] for ray in cone_rays]
        threshold_sets = [f.thresholds() for f in filts]
        ray_matrix = [list(fan.rays[ray]) for ray in cone_rays]

        candidates = []
        for combo in product(*threshold_sets):
            u = solve_linear(ray_matrix, combo)
            if u is None:
                continue
            if integer_solve(ray_matrix, combo) is None:
                continue
            candidates.append(combo)
        candidates = sorted(set(candidates))

        drops = [dict(f.drop_multiset()) for f in filts]
        grid = list(product(*threshold_sets))
        dims = {}
        for combo in grid:
            acc = _full_space(r)
            for f, t in zip(filts, combo):
                acc = intersect(acc, f.value(t))
            dims[combo] = acc.dim

        solution = None
        for multiset in combinations_with_replacement(candidates, r):
            okay = True
            for j, dmap in enumerate(drops):
                seen: dict[int, int] = {}
                for cand in multiset:
                    seen[cand[j]] = seen.get(cand[j], 0) + 1
                if seen != dmap:
                    okay = False
                    break
            if not okay:
                continue
            for combo in grid:
                predicted = sum(
                    1
                    for cand in multiset
                    if all(cv >= t for cv, t in zip(cand, combo))
                )
                if predicted != dims[combo]:
                    okay = False
                    break
            if okay:
                solution = multiset
                break
        if solution is None:
            return NecessityReport("violation", None)
        counts: dict = {}
        for combo in solution:
            u = solve_linear(ray_matrix, combo)
            key = tuple(u)
            counts[key] = counts.get(key, 0) + 1
        recovered[pos] = tuple(sorted(counts.items()))
    return NecessityReport("ok", recovered)


# ---------------------------------------------------------------------------
# Dual, pullback, interpolation
# ---------------------------------------------------------------------------


def dual(data: KlyachkoData) -> KlyachkoData:
    """Dual bundle: the filtration at index i becomes the annihilator of the
    original filtration at index 1 - i."""
    r = data.rank
    out = {}
    for ray, f in data.filtrations.items():
        steps = f.steps
        new_steps = [(-steps[-1][0], _full_space(r))]
        for j in range(len(steps) - 1, 0, -1):
            new_steps.append((-steps[j - 1][0], annihilator(steps[j][1])))
        out[ray] = Filtration(r, new_steps)
    return KlyachkoData(data.fan, r, out)


def _containing_max_cone(fan: Fan, v) -> int:
    for pos in range(len(fan.max_cones)):
        gens = [fan.rays[i] for i in fan.max_cones[pos].ray_indices]
        if cone_contains_point(gens, v):
            return pos
    raise KlyachkoError(f"point {tuple(v)} lies outside the fan's support")


def interpolate(data: KlyachkoData, cert: SplittingCertificate, v, t) -> SubspaceBasis:
    """The interpolated filtration at a point: sum of certified summands
    whose functional is at least t at v."""
    pos = _containing_max_cone(data.fan, v)
    t = Fraction(t)
    acc = SubspaceBasis(data.rank)
    for u, s in cert.cone(pos):
        if sum(Fraction(a) * b for a, b in zip(u, v)) >= t:
            acc = subspace_sum(acc, s)
    return acc


def flag(data: KlyachkoData, cert: SplittingCertificate, v) -> list[SubspaceBasis]:
    """Distinct nonzero interpolated subspaces at v, ordered by inclusion."""
    pos = _containing_max_cone(data.fan, v)
    entries = cert.cone(pos)
    values = sorted(
        {sum(Fraction(a) * b for a, b in zip(u, v)) for u, _ in entries},
        reverse=True,
    )
    out = []
    for t in values:
        s = interpolate(data, cert, v, t)
        if s.dim > 0 and (not out or s != out[-1]):
            out.append(s)
    return out


def pullback(data: KlyachkoData, lattice_map, target_fan: Fan,
             cert: SplittingCertificate) -> KlyachkoData:
    """Pull back along a lattice map into the source fan's lattice.

    Every cone of the target fan must map into some cone of the source fan;
    the pulled-back filtration at a target ray is the source interpolation
    at the image of its primitive generator, read at integer thresholds.
    """
    rows = [tuple(int(x) for x in row) for row in lattice_map]
    if len(rows) != data.fan.rank:
        raise KlyachkoError("lattice map has wrong target rank")

    def apply(v):
        return tuple(sum(a * b for a, b in zip(row, v)) for row in rows)

    for pos in range(len(target_fan.max_cones)):
        images = [apply(target_fan.rays[i]) for i in target_fan.max_cones[pos].ray_indices]
        landed = False
        for spos in range(len(data.fan.max_cones)):
            gens = [data.fan.rays[i] for i in data.fan.max_cones[spos].ray_indices]
            if all(cone_contains_point(gens, img) for img in images):
                landed = True
                break
        if not landed:
            raise KlyachkoError(
                f"target cone {pos} does not map into a cone of the source fan"
            )

    r = data.rank
    out = {}
    for ray in range(len(target_fan.rays)):
        w = apply(target_fan.rays[ray])
        if all(x == 0 for x in w):
            # constant interpolation: full space for t <= 0
            out[ray] = Filtration(r, [(0, _full_space(r))])
            continue
        pos = _containing_max_cone(data.fan, w)
        pairs = []
        for u, s in cert.cone(pos):
            val = sum(Fraction(a) * b for a, b in zip(u, w))
            if val.denominator != 1:
                raise KlyachkoError("non-integral threshold in pullback")
            pairs.append((int(val), s))
        merged: dict[int, SubspaceBasis] = {}
        for val, s in pairs:
            merged[val] = subspace_sum(merged.get(val, SubspaceBasis(r)), s)
        out[ray] = _induced_filtration(r, list(merged.items()))
    return KlyachkoData(target_fan, r, out)


# ---------------------------------------------------------------------------
# Chern data and the associated branched cover
# ---------------------------------------------------------------------------


def _restriction_multiset(fan: Fan, pos: int, entries, cone_id: int):
    """Multiset of restricted functional classes of a maximal cone's
    splitting on a face, keyed by value tuples at the face's rays."""
    face_rays = fan.cones[cone_id].ray_indices
    acc: dict[tuple, int] = {}
    for u, mult in entries:
        key = tuple(
            sum(a * b for a, b in zip(u, fan.rays[ray])) for ray in face_rays
        )
        acc[key] = acc.get(key, 0) + mult
    return tuple(sorted(acc.items()))


class ChernData:
    """Per maximal cone, the multiset of functionals with multiplicities.

    Functionals are stored as ambient integer vectors; the elementary
    symmetric evaluations at lattice points answer Chern class queries.
    """

    def __init__(self, fan: Fan, multisets: dict):
        self.fan = fan
        self.multisets = {
            pos: tuple(sorted((tuple(int(x) for x in u), int(m)) for u, m in ms))
            for pos, ms in multisets.items()
        }
        if set(self.multisets) != set(range(len(fan.max_cones))):
            raise KlyachkoError("need one multiset per maximal cone")
        ranks = {sum(m for _, m in ms) for ms in self.multisets.values()}
        if len(ranks) != 1:
            raise KlyachkoError("multiset sizes differ between cones")
        (self.rank,) = ranks
        self._check_face_agreement()

    def _check_face_agreement(self):
        fan = self.fan
        for a in range(len(fan.max_cones)):
            for b in range(a + 1, len(fan.max_cones)):
                common = tuple(
                    sorted(
                        set(fan.max_cones[a].ray_indices)
                        & set(fan.max_cones[b].ray_indices)
                    )
                )
                if not common:
                    continue
                cone_id = fan.cone_id(common)
                ra = _restriction_multiset(fan, a, self.multisets[a], cone_id)
                rb = _restriction_multiset(fan, b, self.multisets[b], cone_id)
                if ra != rb:
                    raise KlyachkoError(
                        f"multisets of cones {a} and {b} disagree on their shared face"
                    )

    def c1(self, pos: int):
        ms = self.multisets[pos]
        n = len(next(iter(ms))[0]) if ms else 0
        acc = [0] * n
        for u, m in ms:
            acc = [a + m * x for a, x in zip(acc, u)]
        return tuple(acc)

    def elementary_symmetric(self, pos: int, i: int, v):
        """e_i of the pairings of the cone's multiset against a point."""
        values = []
        for u, m in self.multisets[pos]:
            values.extend([sum(Fraction(a) * b for a, b in zip(u, v))] * m)
        if i < 0 or i > len(values):
            raise KlyachkoError("elementary symmetric index out of range")
        # e_i via the generating polynomial prod(1 + x t)
        coeffs = [Fraction(1)] + [Fraction(0)] * len(values)
        for x in values:
            for k in range(len(values), 0, -1):
                coeffs[k] += x * coeffs[k - 1]
        return coeffs[i]

    def is_trivial(self) -> bool:
        first = next(iter(self.multisets.values()))
        return all(ms == first for ms in self.multisets.values())

    def __eq__(self, other):
        return (
            isinstance(other, ChernData)
            and self.fan.rays == other.fan.rays
            and self.multisets == other.multisets
        )


def chern(data: KlyachkoData, cert: SplittingCertificate) -> ChernData:
    fan = data.fan
    out = {}
    for pos in range(len(fan.max_cones)):
        entries = [(u, s.dim) for u, s in cert.cone(pos)]
        acc: dict[tuple, int] = {}
        for u, m in entries:
            acc[u] = acc.get(u, 0) + m
        out[pos] = tuple(sorted(acc.items()))
    return ChernData(fan, out)


def equal_chern(a: ChernData, b: ChernData) -> bool:
    return a == b


def is_trivial_chern(data: KlyachkoData, cert: SplittingCertificate) -> bool:
    return chern(data, cert).is_trivial()


def branched_cover_of(data_or_chern, cert: SplittingCertificate | None = None):
    """The branched cover and tautological PL function of a bundle.

    Accepts (KlyachkoData, cert) or a ChernData; cells are (cone, restricted
    functional class) pairs weighted by multiplicity, the function restricts
    to the defining functional on each maximal cell.  The result passes
    validate_cover with degree equal to the rank, in any lattice rank.
    """
    if isinstance(data_or_chern, ChernData):
        cdata = data_or_chern
    else:
        cdata = chern(data_or_chern, cert)
    fan = cdata.fan
    r = cdata.rank

    max_pos_of_base = {
        fan.cone_id(c.ray_indices): pos for pos, c in enumerate(fan.max_cones)
    }
    # classes over every cone, from the lowest-position incident maximal cone,
    # cross-checked against all others
    classes: dict[int, tuple] = {}
    for cone_id in range(len(fan.cones)):
        rays_here = set(fan.cones[cone_id].ray_indices)
        carriers = [
            pos
            for pos, c in enumerate(fan.max_cones)
            if rays_here <= set(c.ray_indices)
        ]
        if not carriers:
            raise KlyachkoError(f"cone {cone_id} is not a face of any maximal cone")
        first = _restriction_multiset(fan, carriers[0], cdata.multisets[carriers[0]], cone_id)
        for other in carriers[1:]:
            if _restriction_multiset(fan, other, cdata.multisets[other], cone_id) != first:
                raise KlyachkoError(
                    f"restriction multisets disagree over cone {cone_id}"
                )
        classes[cone_id] = first

    cells = []
    cell_index: dict[tuple, int] = {}
    for cone_id in range(len(fan.cones)):
        for copy, (key, mult) in enumerate(classes[cone_id]):
            cell_index[(cone_id, key)] = len(cells)
            cells.append(CoverCell(cone_id, copy, mult))

    pairs = []
    for cone_id in range(len(fan.cones)):
        face_sets = {
            fid: fan.cones[fid].ray_indices
            for fid in fan.face_ids(cone_id)
            if fid != cone_id
        }
        cone_rays = fan.cones[cone_id].ray_indices
        for key, mult in classes[cone_id]:
            hi = cell_index[(cone_id, key)]
            value_at = dict(zip(cone_rays, key))
            for fid, frays in face_sets.items():
                fkey = tuple(value_at[rr] for rr in frays)
                pairs.append((cell_index[(fid, fkey)], hi))

    cover = CoverPoset(fan, cells, pairs, _closed=True)
    report = validate_cover(cover)
    if not report.ok:
        raise KlyachkoError(f"associated cover is invalid: {report.describe()}")

    # the tautological function: each maximal cell carries its functional
    cell_values = {}
    lookup = {(c.base, c.copy): i for i, c in enumerate(cover.cells)}
    for cone_id in range(len(fan.cones)):
        if fan.cones[cone_id].dim != fan.rank:
            continue
        pos = max_pos_of_base[cone_id]
        by_key = {}
        for u, m in cdata.multisets[pos]:
            key = tuple(
                sum(a * b for a, b in zip(u, fan.rays[ray]))
                for ray in fan.cones[cone_id].ray_indices
            )
            by_key[key] = u
        for copy, (key, mult) in enumerate(classes[cone_id]):
            cell_values[lookup[(cone_id, copy)]] = by_key[key]
    psi = PLFunction(cover, cell_values)
    return cover, psi


# ---------------------------------------------------------------------------
# Direct sums
# ---------------------------------------------------------------------------


def direct_sum(a: KlyachkoData, b: KlyachkoData,
               cert_a: SplittingCertificate | None = None,
               cert_b: SplittingCertificate | None = None):
    """Block sum of two bundles on the same fan; certificates concatenate.

    Returns (data, certificate) when both certificates are given, otherwise
    just the data.
    """
    if a.fan.rays != b.fan.rays:
        raise KlyachkoError("direct sum requires bundles on the same fan")
    ra, rb = a.rank, b.rank
    r = ra + rb

    def embed_a(s: SubspaceBasis) -> list:
        return [list(row) + [0] * rb for row in s.basis]

    def embed_b(s: SubspaceBasis) -> list:
        return [[0] * ra + list(row) for row in s.basis]

    filtrations = {}
    for ray in range(len(a.fan.rays)):
        fa, fb = a.filtrations[ray], b.filtrations[ray]
        thresholds = sorted(set(fa.thresholds()) | set(fb.thresholds()))
        steps = []
        prev = None
        for t in thresholds:
            rows = embed_a(fa.value(t)) + embed_b(fb.value(t))
            s = SubspaceBasis(r, rows)
            if prev is None or s != prev:
                steps.append((t, s))
                prev = s
        filtrations[ray] = Filtration(r, steps)
    data = KlyachkoData(a.fan, r, filtrations)
    if cert_a is None or cert_b is None:
        return data
    entries = {}
    for pos in range(len(a.fan.max_cones)):
        merged: dict[tuple, SubspaceBasis] = {}
        for u, s in cert_a.cone(pos):
            merged[u] = SubspaceBasis(r, embed_a(s))
        for u, s in cert_b.cone(pos):
            if u in merged:
                merged[u] = SubspaceBasis(r, list(merged[u].basis) + embed_b(s))
            else:
                merged[u] = SubspaceBasis(r, embed_b(s))
        entries[pos] = tuple(sorted(merged.items()))
    return data, SplittingCertificate(entries)


def line_bundle(fan: Fan, functional) -> tuple[KlyachkoData, SplittingCertificate]:
    """The rank-1 bundle of a global linear functional (trivial line bundle
    twisted by the character)."""
    u = tuple(int(x) for x in functional)
    full = _full_space(1)
    filtrations = {}
    for ray in range(len(fan.rays)):
        d = sum(a * b for a, b in zip(u, fan.rays[ray]))
        filtrations[ray] = Filtration(1, [(d, full)])
    data = KlyachkoData(fan, 1, filtrations)
    cert = SplittingCertificate(
        {pos: [(u, full)] for pos in range(len(fan.max_cones))}
    )
    return data, cert


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _encode_fraction(x: Fraction):
    x = Fraction(x)
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _decode_fraction(x) -> Fraction:
    return Fraction(str(x))


def bundle_to_dict(data: KlyachkoData, cert: SplittingCertificate | None = None) -> dict:
    out = {
        "fan": data.fan.name or "inline",
        "rank": data.rank,
        "filtrations": {
            str(ray): [
                {
                    "threshold": t,
                    "subspace": [[_encode_fraction(x) for x in row] for row in s.basis],
                }
                for t, s in f.steps
            ]
            for ray, f in data.filtrations.items()
        },
    }
    if cert is not None:
        out["splittings"] = {
            str(pos): [
                {
                    "u": list(u),
                    "subspace": [[_encode_fraction(x) for x in row] for row in s.basis],
                }
                for u, s in entries
            ]
            for pos, entries in cert.entries.items()
        }
    return out


def bundle_from_dict(fan: Fan, data: dict):
    r = data["rank"]
    filtrations = {}
    for ray_str, steps in data["filtrations"].items():
        parsed = [
            (
                step["threshold"],
                SubspaceBasis(
                    r, [[_decode_fraction(x) for x in row] for row in step["subspace"]]
                ),
            )
            for step in steps
        ]
        filtrations[int(ray_str)] = Filtration(r, parsed)
    kdata = KlyachkoData(fan, r, filtrations)
    cert = None
    if "splittings" in data:
        entries = {}
        for pos_str, lst in data["splittings"].items():
            entries[int(pos_str)] = [
                (
                    tuple(e["u"]),
                    SubspaceBasis(
                        r, [[_decode_fraction(x) for x in row] for row in e["subspace"]]
                    ),
                )
                for e in lst
            ]
        cert = SplittingCertificate(entries)
    return kdata, cert


BUNDLED_BUNDLES = ("eikelberg", "fulton_rank3", "p2_tangent")


def load_bundle(source):
    """Load (data, certificate) from a bundled name or a JSON file path."""
    from .fan_core import load_fan

    if source in BUNDLED_BUNDLES:
        from importlib.resources import files

        text = files("fanbranch.data").joinpath(f"{source}.bundle.json").read_text()
        raw = json.loads(text)
    else:
        with open(source) as fh:
            raw = json.load(fh)
    fan = load_fan(raw["fan"])
    return bundle_from_dict(fan, raw)
