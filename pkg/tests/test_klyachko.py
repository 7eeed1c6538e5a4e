import random
from fractions import Fraction

import pytest

from fanbranch.cover_poset import are_isomorphic, degree, is_maximal, validate_cover
from fanbranch.exact_linalg import SubspaceBasis, annihilator
from fanbranch.fan_core import fan_from_data, load_fan
from fanbranch.klyachko import (
    ChernData,
    Filtration,
    KlyachkoData,
    KlyachkoError,
    SplittingCertificate,
    branched_cover_of,
    bundle_from_dict,
    bundle_to_dict,
    chern,
    direct_sum,
    dual,
    equal_chern,
    flag,
    interpolate,
    is_trivial_chern,
    line_bundle,
    load_bundle,
    necessary_dimension_check,
    pullback,
    verify,
)
from fanbranch.pl_group import is_trivial_function, multisets

FULTON_PRINTED_MULTISETS = {
    0: ((1, -1, 0), (0, -1, 1), (0, 0, 0)),
    1: ((0, -1, 1), (0, -1, -1), (1, 0, 1)),
    2: ((1, -1, 0), (0, -1, 1), (0, 0, 0)),
    3: ((1, 0, 1), (0, -2, 0), (0, 0, 0)),
    4: ((1, -1, 0), (-1, -1, 0), (1, 0, 1)),
    5: ((1, -1, 0), (0, -1, 1), (0, 0, 0)),
}


@pytest.fixture(scope="module")
def eikelberg_bundle():
    return load_bundle("eikelberg")


@pytest.fixture(scope="module")
def p2_bundle():
    return load_bundle("p2_tangent")


@pytest.fixture(scope="module")
def fulton_bundle():
    return load_bundle("fulton_rank3")


from conftest import random_bundle  # noqa: E402


class TestFiltration:
    def test_value_lookup(self):
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        L = SubspaceBasis(2, [[1, 0]])
        f = Filtration(2, [(-1, E), (3, L)])
        assert f.value(-5) == E
        assert f.value(-1) == E
        assert f.value(0) == L
        assert f.value(3) == L
        assert f.value(4).dim == 0

    def test_drop_multiset(self):
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        L = SubspaceBasis(2, [[1, 0]])
        assert Filtration(2, [(-1, E), (3, L)]).drop_multiset() == [(-1, 1), (3, 1)]
        assert Filtration(2, [(6, E)]).drop_multiset() == [(6, 2)]

    def test_rejects_bad_chains(self):
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        L = SubspaceBasis(2, [[1, 0]])
        with pytest.raises(KlyachkoError):
            Filtration(2, [(0, L)])  # first step not the full space
        with pytest.raises(KlyachkoError):
            Filtration(2, [(0, E), (0, L)])  # thresholds not increasing
        with pytest.raises(KlyachkoError):
            Filtration(2, [(0, E), (1, E)])  # not strictly decreasing


class TestVerify:
    def test_eikelberg_ok(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        assert verify(data, cert).ok

    def test_p2_ok(self, p2_bundle):
        data, cert = p2_bundle
        assert verify(data, cert).ok

    def test_rank_one_ok(self):
        fan = load_fan("fulton")
        data, cert = line_bundle(fan, (2, -1, 3))
        assert verify(data, cert).ok
        cd = chern(data, cert)
        assert all(len(ms) == 1 for ms in cd.multisets.values())

    def test_fulton_rank3_violation(self, fulton_bundle):
        data, cert = fulton_bundle
        result = verify(data, cert)
        assert not result.ok
        assert result.cone == 0 and result.ray == 2

    def test_broken_certificate_reported(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        bad_entries = dict(cert.entries)
        (u1, s1), (u2, s2) = bad_entries[0]
        bad_entries[0] = ((u1, s2), (u2, s1))  # swap the two lines
        result = verify(data, SplittingCertificate(bad_entries))
        assert not result.ok and result.cone == 0


class TestPrintedMultisetsObstruction:
    """The printed rank-3 multisets admit no compatible splitting at all:
    chasing one-dimensional filtration values around shared rays forces two
    distinct summands of one cone to be the same line."""

    @staticmethod
    def forced_conflict(fan, printed):
        slots = [(pos, u) for pos, ms in printed.items() for u in ms]
        parent = {s: s for s in slots}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[rx] = ry

        for ray in range(len(fan.rays)):
            carriers = fan.cones_containing_ray(ray)
            v = fan.rays[ray]
            values = sorted(
                {
                    sum(a * b for a, b in zip(u, v))
                    for pos in carriers
                    for u in printed[pos]
                }
            )
            for t in values:
                tops = []
                for pos in carriers:
                    hits = [
                        u
                        for u in printed[pos]
                        if sum(a * b for a, b in zip(u, v)) >= t
                    ]
                    tops.append((pos, hits))
                if all(len(h) == 1 for _, h in tops):
                    first = (tops[0][0], tops[0][1][0])
                    for pos, hits in tops[1:]:
                        union(first, (pos, hits[0]))
        for pos, ms in printed.items():
            reps = {find((pos, u)) for u in ms}
            if len(reps) != len(ms):
                return True
        return False

    def test_fulton_printed_multisets_are_unrealizable(self):
        fan = load_fan("fulton")
        assert self.forced_conflict(fan, FULTON_PRINTED_MULTISETS)

    def test_eikelberg_multisets_pass_the_same_chase(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        fan = data.fan
        printed = {
            pos: tuple(u for u, _ in cert.cone(pos))
            for pos in range(len(fan.max_cones))
        }
        assert not self.forced_conflict(fan, printed)


class TestNecessaryDimensionCheck:
    def test_three_distinct_lines_violation(self):
        fan = fan_from_data(3, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2]])
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        lines = [
            SubspaceBasis(2, [[1, 0]]),
            SubspaceBasis(2, [[0, 1]]),
            SubspaceBasis(2, [[1, 1]]),
        ]
        data = KlyachkoData(
            fan,
            2,
            {i: Filtration(2, [(0, E), (1, lines[i])]) for i in range(3)},
        )
        assert necessary_dimension_check(data).status == "violation"

    def test_verified_data_passes(self, eikelberg_bundle, p2_bundle):
        for data, cert in (eikelberg_bundle, p2_bundle):
            report = necessary_dimension_check(data)
            assert report.ok
            assert "necessary" in report.note

    def test_eikelberg_recovers_printed_multisets(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        report = necessary_dimension_check(data)
        for pos in range(5):
            expected = sorted(
                (tuple(Fraction(x) for x in u), s.dim) for u, s in cert.cone(pos)
            )
            assert sorted(report.multisets[pos]) == expected

    def test_fulton_rank3_screened_out(self, fulton_bundle):
        data, _ = fulton_bundle
        assert necessary_dimension_check(data).status == "violation"


class TestDual:
    def test_rank_one_jump_negates(self):
        fan = load_fan("fulton")
        data, _ = line_bundle(fan, (1, 1, 1))
        dd = dual(data)
        for ray in range(len(fan.rays)):
            d = data.filtrations[ray].thresholds()[0]
            assert dd.filtrations[ray].thresholds() == [-d]

    def test_involution_on_random_bundles(self):
        rng = random.Random(42)
        fans = [load_fan("fulton"), load_fan("eikelberg")]
        for i in range(100):
            fan = fans[i % 2]
            data = random_bundle(fan, rng.randint(1, 3), rng)
            assert dual(dual(data)).filtrations == data.filtrations

    def test_eikelberg_dual_against_annihilator_oracle(self, eikelberg_bundle):
        data, _ = eikelberg_bundle
        dd = dual(data)
        for ray, f in data.filtrations.items():
            g = dd.filtrations[ray]
            for i in range(-25, 25):
                assert g.value(i) == annihilator(f.value(1 - i))


class TestPullbackInterpolationFlag:
    def test_identity_pullback(self, eikelberg_bundle, p2_bundle):
        for data, cert in (eikelberg_bundle, p2_bundle):
            n = data.fan.rank
            ident = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
            pb = pullback(data, ident, data.fan, cert)
            assert pb.filtrations == data.filtrations

    def test_rank1_pullback_along_projection(self):
        line_fan = fan_from_data(1, [[1], [-1]], [[0], [1]])
        E = SubspaceBasis(1, [[1]])
        data = KlyachkoData(
            line_fan,
            1,
            {0: Filtration(1, [(3, E)]), 1: Filtration(1, [(-1, E)])},
        )
        cert = SplittingCertificate({0: [((3,), E)], 1: [((1,), E)]})
        assert verify(data, cert).ok
        square = fan_from_data(
            2,
            [[1, 0], [0, 1], [-1, 0], [0, -1]],
            [[0, 1], [1, 2], [2, 3], [0, 3]],
        )
        phi = [[1, 0]]
        pb = pullback(data, phi, square, cert)

        def support(v):  # oracle: the support function of the source bundle
            x = v[0]
            return 3 * x if x >= 0 else -1 * -x

        for ray in range(4):
            image = square.rays[ray][0]
            assert pb.filtrations[ray].thresholds() == [support((image,))]

    def test_incompatible_projection_rejected(self):
        data, cert = load_bundle("p2_tangent")
        # the reflection sends the cone over (0,1), (-1,-1) across a ray
        with pytest.raises(KlyachkoError, match="does not map"):
            pullback(data, [[1, 0], [0, -1]], load_fan("p2"), cert)

    def test_interpolate_reproduces_filtrations(self, eikelberg_bundle, p2_bundle):
        for data, cert in (eikelberg_bundle, p2_bundle):
            fan = data.fan
            for ray in range(len(fan.rays)):
                f = data.filtrations[ray]
                lo = f.thresholds()[0] - 2
                hi = f.thresholds()[-1] + 2
                for t in range(lo, hi + 1):
                    assert interpolate(data, cert, fan.rays[ray], t) == f.value(t)

    def test_interpolate_far_below_is_full(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        v = tuple(
            sum(c)
            for c in zip(*[data.fan.rays[i] for i in data.fan.max_cones[0].ray_indices])
        )
        assert interpolate(data, cert, v, -10**6).dim == data.rank

    def test_interpolate_outside_support_rejected(self):
        octant = fan_from_data(3, [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2]])
        data, cert = line_bundle(octant, (0, 0, 0))
        with pytest.raises(KlyachkoError, match="outside"):
            interpolate(data, cert, (-1, -1, -1), 0)

    def test_flag_generic_interior_point_full_flag(self, fulton_bundle):
        # mechanical sort-and-sum oracle; works with any direct-sum certificate
        data, cert = fulton_bundle
        fan = data.fan
        v = (0, 1, 6)  # interior of the first maximal cone (sum of its rays)
        entries = cert.cone(0)
        values = sorted(
            (sum(a * b for a, b in zip(u, v)) for u, _ in entries), reverse=True
        )
        assert len(set(values)) == 3
        fl = flag(data, cert, v)
        assert [s.dim for s in fl] == [1, 2, 3]

    def test_flag_at_origin(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        fl = flag(data, cert, (0, 0, 0))
        assert len(fl) == 1 and fl[0].dim == data.rank

    def test_flag_constant_on_order_regions(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        fan = data.fan
        gens = [fan.rays[i] for i in fan.max_cones[0].ray_indices]
        a = tuple(3 * x + y + z for x, y, z in zip(*gens))
        b = tuple(5 * x + 2 * y + z for x, y, z in zip(*gens))
        entries = cert.cone(0)

        def pattern(v):
            vals = [sum(p * q for p, q in zip(u, v)) for u, _ in entries]
            return sorted(range(len(vals)), key=lambda i: vals[i])

        assert pattern(a) == pattern(b)
        assert flag(data, cert, a) == flag(data, cert, b)


class TestBranchedCover:
    def test_p2_tangent(self, p2_bundle):
        data, cert = p2_bundle
        cover, psi = branched_cover_of(data, cert)
        assert validate_cover(cover).ok
        assert degree(cover) == 2
        assert len(cover.max_cells) == 6
        assert all(cover.cells[m].weight == 1 for m in cover.max_cells)
        assert cover.cells[cover.minimal_cell].weight == 2
        got = sorted(tuple(int(x) for x in u) for u in psi.cell_values.values())
        assert got == [(-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0)]

    def test_rank_one_cover_is_the_fan(self):
        fan = load_fan("fulton")
        data, cert = line_bundle(fan, (1, 2, 3))
        cover, psi = branched_cover_of(data, cert)
        assert degree(cover) == 1
        assert len(cover.cells) == len(fan.cones)
        assert [c.base for c in cover.cells] == list(range(len(fan.cones)))

    def test_repeated_functional_gives_weighted_identity(self):
        # two copies of the same line bundle: one weight-2 cell per cone
        fan = load_fan("fulton")
        d1, c1 = line_bundle(fan, (1, 2, 3))
        data, cert = direct_sum(d1, d1, c1, c1)
        assert verify(data, cert).ok
        cover, psi = branched_cover_of(data, cert)
        assert validate_cover(cover).ok
        assert degree(cover) == 2
        from fanbranch.cover_poset import weighted_identity

        assert are_isomorphic(cover, weighted_identity(fan, 2))
        assert is_trivial_function(psi)

    def test_eikelberg_cover(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        fan = data.fan
        cover, psi = branched_cover_of(data, cert)
        assert validate_cover(cover).ok
        assert is_maximal(cover)
        branch = sorted(
            fan.cones[cover.cells[i].base].ray_indices[0]
            for i in cover.ray_cells
            if cover.cells[i].weight > 1
        )
        assert branch == [0, 5]
        cd = chern(data, cert)
        for m in multisets(psi):
            got = tuple(
                (tuple(int(x) for x in u), w) for u, w in m.entries
            )
            assert got == cd.multisets[m.cone_position]
        assert not is_trivial_function(psi)

    def test_psi_multisets_equal_chern_everywhere(self, p2_bundle):
        data, cert = p2_bundle
        cover, psi = branched_cover_of(data, cert)
        cd = chern(data, cert)
        for m in multisets(psi):
            got = tuple((tuple(int(x) for x in u), w) for u, w in m.entries)
            assert got == cd.multisets[m.cone_position]


class TestChern:
    def test_printed_fulton_multisets_face_consistent_but_nontrivial(self):
        fan = load_fan("fulton")
        cd = ChernData(
            fan, {pos: tuple((u, 1) for u in ms) for pos, ms in FULTON_PRINTED_MULTISETS.items()}
        )
        assert not cd.is_trivial()
        assert cd.multisets[1] != cd.multisets[0]

    def test_c1_of_first_cone(self):
        fan = load_fan("fulton")
        cd = ChernData(
            fan, {pos: tuple((u, 1) for u in ms) for pos, ms in FULTON_PRINTED_MULTISETS.items()}
        )
        assert cd.c1(0) == (1, -2, 1)

    def test_elementary_symmetric_queries(self):
        fan = load_fan("fulton")
        cd = ChernData(
            fan, {pos: tuple((u, 1) for u in ms) for pos, ms in FULTON_PRINTED_MULTISETS.items()}
        )
        v = (1, 1, 1)
        vals = [sum(u) for u in FULTON_PRINTED_MULTISETS[0]]
        assert cd.elementary_symmetric(0, 1, v) == sum(vals)
        assert cd.elementary_symmetric(0, 3, v) == vals[0] * vals[1] * vals[2]

    def test_face_inconsistent_multisets_rejected(self):
        fan = load_fan("fulton")
        bad = {pos: tuple((u, 1) for u in ms) for pos, ms in FULTON_PRINTED_MULTISETS.items()}
        bad[0] = (((5, 5, 5), 1), ((0, -1, 1), 1), ((0, 0, 0), 1))
        with pytest.raises(KlyachkoError, match="disagree"):
            ChernData(fan, bad)

    def test_trivial_chern_of_split_bundle(self):
        fan = load_fan("fulton")
        d1, c1 = line_bundle(fan, (1, 0, 0))
        d2, c2 = line_bundle(fan, (0, 1, 0))
        data, cert = direct_sum(d1, d2, c1, c2)
        assert verify(data, cert).ok
        assert is_trivial_chern(data, cert)

    def test_equal_chern_iff_isomorphic_labeled_covers(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        # a different bundle with the same multisets: swap which lines realize
        # the splitting (relabel L <-> L' consistently)
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        La = SubspaceBasis(2, [[1, 2]])
        Lb = SubspaceBasis(2, [[2, 1]])
        Lc = SubspaceBasis(2, [[1, -1]])
        fan = data.fan
        filtrations = {
            0: Filtration(2, [(-12, E)]),
            1: Filtration(2, [(-12, E), (18, La)]),
            2: Filtration(2, [(-12, E), (0, Lb)]),
            3: Filtration(2, [(-12, E), (0, Lc)]),
            4: Filtration(2, [(0, E), (18, La)]),
            5: Filtration(2, [(6, E)]),
        }
        other = KlyachkoData(fan, 2, filtrations)
        cert2 = SplittingCertificate(
            {
                0: [((15, -15, 3), La), ((3, 3, -9), Lb)],
                1: [((16, -14, -4), La), ((2, 2, -2), Lc)],
                2: [((12, -18, 0), La), ((6, 6, -6), Lc)],
                3: [((24, -18, 0), La), ((-6, 6, -6), Lb)],
                4: [((12, -6, 0), Lb), ((6, -6, -6), Lc)],
            }
        )
        assert verify(other, cert2).ok
        assert equal_chern(chern(data, cert), chern(other, cert2))
        c_a, psi_a = branched_cover_of(data, cert)
        c_b, psi_b = branched_cover_of(other, cert2)
        labels_a = {m: u for m, u in psi_a.cell_values.items()}
        labels_b = {m: u for m, u in psi_b.cell_values.items()}
        assert are_isomorphic(c_a, c_b, labels_a, labels_b)
        # and a genuinely different Chern datum gives non-equal data
        d1, c1 = line_bundle(fan, (0, 0, 0))
        d2, c2 = line_bundle(fan, (0, 0, 0))
        split, split_cert = direct_sum(d1, d2, c1, c2)
        assert not equal_chern(chern(data, cert), chern(split, split_cert))


class TestDirectSum:
    def test_rank_one_sum_multisets_union(self):
        fan = load_fan("eikelberg")
        d1, c1 = line_bundle(fan, (1, 0, 0))
        d2, c2 = line_bundle(fan, (0, 0, 2))
        data, cert = direct_sum(d1, d2, c1, c2)
        assert verify(data, cert).ok
        cd = chern(data, cert)
        for pos in range(len(fan.max_cones)):
            expected = sorted(
                [(tuple(chern(d1, c1).multisets[pos][0][0]), 1),
                 (tuple(chern(d2, c2).multisets[pos][0][0]), 1)]
            )
            assert sorted(cd.multisets[pos]) == expected

    def test_chern_of_sum_is_union(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        lb, lc = line_bundle(data.fan, (1, 1, 1))
        total, total_cert = direct_sum(data, lb, cert, lc)
        assert verify(total, total_cert).ok
        cd_total = chern(total, total_cert)
        cd_data = chern(data, cert)
        cd_line = chern(lb, lc)
        for pos in cd_total.multisets:
            merged: dict = {}
            for u, m in cd_data.multisets[pos] + cd_line.multisets[pos]:
                merged[u] = merged.get(u, 0) + m
            assert cd_total.multisets[pos] == tuple(sorted(merged.items()))

    def test_dual_commutes_with_direct_sum(self):
        rng = random.Random(7)
        fan = load_fan("eikelberg")
        for _ in range(10):
            a = random_bundle(fan, rng.randint(1, 2), rng)
            b = random_bundle(fan, rng.randint(1, 2), rng)
            lhs = dual(direct_sum(a, b))
            rhs = direct_sum(dual(a), dual(b))
            assert lhs.filtrations == rhs.filtrations


class TestSerialization:
    def test_roundtrip(self, eikelberg_bundle):
        data, cert = eikelberg_bundle
        blob = bundle_to_dict(data, cert)
        data2, cert2 = bundle_from_dict(data.fan, blob)
        assert data2.filtrations == data.filtrations
        assert cert2.entries == cert.entries

    def test_fraction_encoding(self):
        fan = load_fan("p2")
        E = SubspaceBasis(2, [[1, 0], [0, 1]])
        half = SubspaceBasis(2, [[Fraction(1, 2), 1]])
        data = KlyachkoData(
            fan,
            2,
            {i: Filtration(2, [(0, E), (1, half)]) for i in range(3)},
        )
        blob = bundle_to_dict(data)
        data2, cert2 = bundle_from_dict(fan, blob)
        assert cert2 is None
        assert data2.filtrations == data.filtrations
