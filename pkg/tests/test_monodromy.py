import random
from itertools import combinations

import pytest

from fanbranch.cover_poset import (
    are_isomorphic,
    degree,
    euler_characteristic,
    is_maximal,
    validate_cover,
    wedge_power,
)
from fanbranch.fan_core import fan_from_data, load_fan
from fanbranch.monodromy import (
    MonodromyAssignment,
    Permutation,
    all_permutations,
    assignment_at,
    assignment_for_branch_set,
    branch_rays,
    build_cover,
    canonical_class,
    count_assignments,
    enumerate_assignments,
    ray_monodromy,
    sheet_components,
    spanning_tree,
)


@pytest.fixture(scope="module")
def fulton():
    return load_fan("fulton")


@pytest.fixture(scope="module")
def sigma_prime():
    return load_fan("sigma_prime")


def bipyramid():
    # triangular bipyramid: 5 rays, 6 cones, 9 walls
    rays = [[1, 0, 0], [0, 1, 0], [-1, -1, 0], [0, 0, 1], [0, 0, -1]]
    cones = [[0, 1, 3], [1, 2, 3], [0, 2, 3], [0, 1, 4], [1, 2, 4], [0, 2, 4]]
    return fan_from_data(3, rays, cones)


class TestPermutation:
    def test_compose_and_inverse(self):
        a = Permutation((1, 2, 0))
        b = Permutation((0, 2, 1))
        assert (a * b).images == tuple(a(b(i)) for i in range(3))
        assert (a * a.inverse()).is_identity

    def test_cycle_type(self):
        assert Permutation((1, 0, 2)).cycle_type() == (2, 1)
        assert Permutation((1, 2, 0)).cycle_type() == (3,)

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            Permutation((0, 0, 1))

    def test_all_permutations_lexicographic(self):
        perms = all_permutations(3)
        assert len(perms) == 6
        images = [p.images for p in perms]
        assert images == sorted(images)


class TestSpanningTree:
    def test_fulton(self, fulton):
        tree = spanning_tree(fulton)
        assert len(tree.tree_walls) == 5
        assert tree.generators == 7
        assert tree.generators == len(fulton.rays) - 1

    def test_sigma_prime(self, sigma_prime):
        assert spanning_tree(sigma_prime).generators == 7

    def test_bipyramid(self):
        fan = bipyramid()
        assert len(fan.walls) == 9
        assert spanning_tree(fan).generators == 4


class TestEnumeration:
    def test_fulton_degree2_count(self, fulton):
        assert count_assignments(fulton, 2) == 128
        seen = sum(1 for _ in enumerate_assignments(fulton, 2))
        assert seen == 128

    def test_degree1_single(self, fulton):
        assignments = list(enumerate_assignments(fulton, 1))
        assert len(assignments) == 1
        assert all(p.is_identity for p in assignments[0].perms)

    def test_sigma_prime_degree3_count(self, sigma_prime):
        assert count_assignments(sigma_prime, 3) == 279936

    def test_lexicographic_and_indexable(self, fulton):
        stream = list(enumerate_assignments(fulton, 2))
        for i in (0, 1, 17, 127):
            assert assignment_at(fulton, 2, i).perms == stream[i].perms
        words = [tuple(p.images for p in a.perms) for a in stream]
        assert words == sorted(words)

    def test_index_out_of_range(self, fulton):
        with pytest.raises(IndexError):
            assignment_at(fulton, 2, 128)


class TestBuildCover:
    def test_trivial_assignment_gives_wedge(self, fulton):
        cov = build_cover(fulton, assignment_at(fulton, 2, 0))
        assert are_isomorphic(cov, wedge_power(fulton, 2))

    def test_type_c_cover_shape(self, fulton):
        a = assignment_for_branch_set(fulton, [0, 2, 5, 7])
        cov = build_cover(fulton, a)
        assert validate_cover(cov).ok
        assert is_maximal(cov)
        assert degree(cov) == 2
        assert len(cov.ray_cells) == 12
        assert len(cov.max_cells) == 12

    def test_exhaustive_degree2_valid_maximal_riemann_hurwitz(self, fulton):
        tree = spanning_tree(fulton)
        for i in range(count_assignments(fulton, 2)):
            a = assignment_at(fulton, 2, i, tree)
            cov = build_cover(fulton, a, tree)
            assert validate_cover(cov).ok
            assert is_maximal(cov)
            chi = euler_characteristic(cov)
            defect = sum(
                2 - len(ray_monodromy(fulton, a, r, tree).cycles())
                for r in range(len(fulton.rays))
            )
            assert chi == 2 * 2 - defect

    def test_degree3_samples_valid(self, sigma_prime):
        tree = spanning_tree(sigma_prime)
        total = count_assignments(sigma_prime, 3)
        rng = random.Random(4)
        for _ in range(12):
            i = rng.randrange(total)
            a = assignment_at(sigma_prime, 3, i, tree)
            cov = build_cover(sigma_prime, a, tree)
            assert validate_cover(cov).ok
            assert is_maximal(cov)
            chi = euler_characteristic(cov)
            defect = sum(
                3 - len(ray_monodromy(sigma_prime, a, r, tree).cycles())
                for r in range(8)
            )
            assert chi == 2 * 3 - defect

    def test_fiber_sizes_match_monodromy_orbits(self, fulton):
        a = assignment_for_branch_set(fulton, [0, 2, 5, 7])
        cov = build_cover(fulton, a)
        for ray in range(len(fulton.rays)):
            orbits = ray_monodromy(fulton, a, ray).cycles()
            cells = [
                cov.cells[i]
                for i in cov.ray_cells
                if fulton.cones[cov.cells[i].base].ray_indices == (ray,)
            ]
            assert sorted(c.weight for c in cells) == sorted(len(o) for o in orbits)


class TestRayMonodromy:
    def test_identity_assignment(self, fulton):
        a = assignment_at(fulton, 2, 0)
        for ray in range(8):
            assert ray_monodromy(fulton, a, ray).is_identity

    def test_branch_parity_even(self, fulton):
        tree = spanning_tree(fulton)
        for i in range(count_assignments(fulton, 2)):
            a = assignment_at(fulton, 2, i, tree)
            assert len(branch_rays(fulton, a, tree)) % 2 == 0

    def test_every_admissible_branch_set_realized(self, fulton):
        walls = {
            tuple(sorted(fulton.cones[w].ray_indices)) for w in fulton.walls
        }
        admissible = []
        for size in (2, 4):
            for combo in combinations(range(8), size):
                if not any(tuple(sorted(p)) in walls for p in combinations(combo, 2)):
                    admissible.append(set(combo))
        assert len(admissible) == 18
        tree = spanning_tree(fulton)
        seen = set()
        for i in range(count_assignments(fulton, 2)):
            a = assignment_at(fulton, 2, i, tree)
            seen.add(frozenset(branch_rays(fulton, a, tree)))
        for target in admissible:
            assert frozenset(target) in seen

    def test_branch_set_shortcut_matches(self, fulton):
        a = assignment_for_branch_set(fulton, [1, 4])
        assert branch_rays(fulton, a) == [1, 4]
        with pytest.raises(ValueError, match="parity"):
            assignment_for_branch_set(fulton, [0])


class TestCanonicalClass:
    def test_degree2_identity_map(self, fulton):
        for i in (0, 3, 77, 127):
            a = assignment_at(fulton, 2, i)
            assert canonical_class(a).perms == a.perms

    def test_degree2_class_count(self, fulton):
        classes = {
            tuple(p.images for p in canonical_class(a).perms)
            for a in enumerate_assignments(fulton, 2)
        }
        assert len(classes) == 128

    def test_degree3_conjugates_share_class(self):
        rng = random.Random(8)
        perms3 = all_permutations(3)
        for _ in range(20):
            tup = tuple(perms3[rng.randrange(6)] for _ in range(7))
            a = MonodromyAssignment(3, tup)
            g = perms3[rng.randrange(6)]
            b = MonodromyAssignment(3, tuple(p.conjugate(g) for p in tup))
            assert canonical_class(a).perms == canonical_class(b).perms

    def test_constant_transposition_tuple(self):
        swap01 = Permutation((1, 0, 2))
        a = MonodromyAssignment(3, (swap01,) * 7)
        canon = canonical_class(a)
        # the least transposition image-tuple under conjugation is (0,2,1)
        assert canon.perms == (Permutation((0, 2, 1)),) * 7

    def test_conjugate_assignments_give_isomorphic_covers(self, sigma_prime):
        rng = random.Random(13)
        perms3 = all_permutations(3)
        tree = spanning_tree(sigma_prime)
        for _ in range(4):
            tup = tuple(perms3[rng.randrange(6)] for _ in range(7))
            g = perms3[rng.randrange(1, 6)]
            a = MonodromyAssignment(3, tup)
            b = MonodromyAssignment(3, tuple(p.conjugate(g) for p in tup))
            ca = build_cover(sigma_prime, a, tree)
            cb = build_cover(sigma_prime, b, tree)
            assert are_isomorphic(ca, cb)

    def test_sheet_components(self):
        ident = Permutation.identity(3)
        a = MonodromyAssignment(3, (ident,) * 7)
        comps = sheet_components(a)
        assert [sorted(c) for c in comps] == [[0], [1], [2]]
        swap = Permutation((1, 0, 2))
        b = MonodromyAssignment(3, (swap,) + (ident,) * 6)
        comps = sheet_components(b)
        assert [sorted(c) for c in comps] == [[0, 1], [2]]


class TestSerialization:
    def test_roundtrip(self, fulton):
        a = assignment_at(fulton, 2, 99)
        d = a.to_dict()
        b = MonodromyAssignment.from_dict(d)
        assert a.perms == b.perms and a.degree == b.degree
