#!/usr/bin/env python3
"""Regenerate the bundled filtration fixtures and re-verify them.

The subspace coordinates here were chosen by hand over Q to satisfy the
incidence relations the published data prescribes; this script freezes them
into JSON and re-checks each fixture:

* eikelberg.bundle.json  -- rank 2, verifies, branched over rays 0 and 5;
* p2_tangent.bundle.json -- the rank-2 tangent-bundle data on the
  projective-plane fan, verifies;
* fulton_rank3.bundle.json -- rank 3 data transcribed from its source.  The
  printed multisets force, through the compatibility identity, the same
  summand to equal two different lines (chase: the top of the ray-1
  filtration equals the top of the ray-3 filtration through cones 1 and 4,
  yet the printed tables call these distinct subspaces L and L').  No
  choice of subspaces can verify; the fixture keeps the printed shape and
  the expected first failure is recorded below.

Run from the repository root:  python scripts/build_fixtures.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fanbranch.fan_core import load_fan
from fanbranch.klyachko import (
    Filtration,
    KlyachkoData,
    SplittingCertificate,
    SubspaceBasis,
    branched_cover_of,
    bundle_to_dict,
    chern,
    necessary_dimension_check,
    verify,
)

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "fanbranch" / "data"


def write(name: str, payload: dict):
    path = DATA_DIR / name
    path.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {path}")


def eikelberg_bundle():
    fan = load_fan("eikelberg")
    E = SubspaceBasis(2, [[1, 0], [0, 1]])
    L = SubspaceBasis(2, [[1, 0]])
    Lp = SubspaceBasis(2, [[0, 1]])
    Lpp = SubspaceBasis(2, [[1, 1]])
    filtrations = {
        0: Filtration(2, [(-12, E)]),
        1: Filtration(2, [(-12, E), (18, L)]),
        2: Filtration(2, [(-12, E), (0, Lp)]),
        3: Filtration(2, [(-12, E), (0, Lpp)]),
        4: Filtration(2, [(0, E), (18, L)]),
        5: Filtration(2, [(6, E)]),
    }
    data = KlyachkoData(fan, 2, filtrations)
    cert = SplittingCertificate(
        {
            0: [((15, -15, 3), L), ((3, 3, -9), Lp)],
            1: [((16, -14, -4), L), ((2, 2, -2), Lpp)],
            2: [((12, -18, 0), L), ((6, 6, -6), Lpp)],
            3: [((24, -18, 0), L), ((-6, 6, -6), Lp)],
            4: [((12, -6, 0), Lp), ((6, -6, -6), Lpp)],
        }
    )
    result = verify(data, cert)
    assert result.ok, result.describe()
    cover, psi = branched_cover_of(data, cert)
    branch = sorted(
        fan.cones[cover.cells[i].base].ray_indices[0]
        for i in cover.ray_cells
        if cover.cells[i].weight > 1
    )
    assert branch == [0, 5], branch
    assert not chern(data, cert).is_trivial()
    nd = necessary_dimension_check(data)
    assert nd.ok
    write("eikelberg.bundle.json", bundle_to_dict(data, cert))


def p2_tangent_bundle():
    fan = load_fan("p2")
    E = SubspaceBasis(2, [[1, 0], [0, 1]])
    L1 = SubspaceBasis(2, [[1, 0]])
    L2 = SubspaceBasis(2, [[0, 1]])
    L3 = SubspaceBasis(2, [[1, 1]])  # the line of the third ray (-1,-1)
    filtrations = {
        0: Filtration(2, [(0, E), (1, L1)]),
        1: Filtration(2, [(0, E), (1, L2)]),
        2: Filtration(2, [(0, E), (1, L3)]),
    }
    data = KlyachkoData(fan, 2, filtrations)
    # max cones: 0 = <v2,v3>, 1 = <v1,v3>, 2 = <v1,v2>
    cert = SplittingCertificate(
        {
            0: [((-1, 1), L2), ((-1, 0), L3)],
            1: [((1, -1), L1), ((0, -1), L3)],
            2: [((1, 0), L1), ((0, 1), L2)],
        }
    )
    result = verify(data, cert)
    assert result.ok, result.describe()
    cover, psi = branched_cover_of(data, cert)
    assert len(cover.max_cells) == 6
    assert cover.cells[cover.minimal_cell].weight == 2
    write("p2_tangent.bundle.json", bundle_to_dict(data, cert))


def fulton_rank3_bundle():
    fan = load_fan("fulton")
    E = SubspaceBasis(3, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    L = SubspaceBasis(3, [[1, 0, 0]])
    Lp = SubspaceBasis(3, [[0, 1, 0]])
    LLp = SubspaceBasis(3, [[1, 0, 0], [0, 1, 0]])
    V = SubspaceBasis(3, [[1, 0, 0], [0, 0, 1]])
    Vp = SubspaceBasis(3, [[0, 1, 0], [0, 0, 1]])
    Vpp = SubspaceBasis(3, [[0, 0, 1], [1, 1, 0]])
    Vppp = SubspaceBasis(3, [[0, 1, 0], [1, 0, 1]])
    e3 = SubspaceBasis(3, [[0, 0, 1]])
    e1e3 = SubspaceBasis(3, [[1, 0, 1]])
    filtrations = {
        0: Filtration(3, [(-1, E), (0, V), (1, L)]),
        1: Filtration(3, [(0, E), (2, LLp)]),
        2: Filtration(3, [(0, E), (2, Lp)]),
        3: Filtration(3, [(-2, E), (0, Vp)]),
        4: Filtration(3, [(-2, E), (0, Vpp)]),
        5: Filtration(3, [(0, E), (2, Lp)]),
        6: Filtration(3, [(-2, E), (0, Vppp), (2, Lp)]),
        7: Filtration(3, [(-2, E), (0, Lp)]),
    }
    data = KlyachkoData(fan, 3, filtrations)
    a, b, c = (1, -1, 0), (0, -1, 1), (0, 0, 0)
    d, e, f, g = (0, -1, -1), (1, 0, 1), (0, -2, 0), (-1, -1, 0)
    cert = SplittingCertificate(
        {
            0: [(a, Lp), (b, L), (c, e3)],
            1: [(b, L), (d, Lp), (e, e3)],
            2: [(a, Lp), (b, L), (c, e3)],
            3: [(e, L), (f, Lp), (c, e1e3)],
            4: [(a, e1e3), (g, Lp), (e, e3)],
            5: [(a, Lp), (b, L), (c, e3)],
        }
    )
    result = verify(data, cert)
    # the printed data is unrealizable; record the deterministic first failure
    assert not result.ok
    print(f"fulton_rank3 fixture: {result.describe()}")
    nd = necessary_dimension_check(data)
    assert nd.status == "violation"
    print("fulton_rank3 fixture: dimension screen agrees (violation)")
    write("fulton_rank3.bundle.json", bundle_to_dict(data, cert))


if __name__ == "__main__":
    eikelberg_bundle()
    p2_tangent_bundle()
    fulton_rank3_bundle()
    print("all fixtures written")
