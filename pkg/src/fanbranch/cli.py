"""The `fanbranch` command line tool.

Subcommands: fan validation, cover enumeration with a branch-set census,
exhaustive piecewise-linear sweeps with a resumable line-delimited cache,
single-cover solving, bundle operations, and a reproduction harness that
diffs known computations against expected values shipped with the package.

Sweeps are deterministic: records are written in assignment-index order and
contain nothing run-dependent, so the cache bytes are identical for any
worker count, and an interrupted run resumes into the same file.
"""

from __future__ import annotations

import json
import multiprocessing
import os
import sys
import time
from dataclasses import dataclass

import click

from .cover_poset import cover_from_dict, degree as cover_degree, validate_cover
from .exact_linalg import RationalMatrix, rref
from .fan_core import (
    BUNDLED_FANS,
    FanError,
    combinatorial_automorphisms,
    is_complete,
    load_fan,
)
from .klyachko import (
    branched_cover_of,
    chern,
    load_bundle,
    necessary_dimension_check,
    verify,
)
from .monodromy import (
    MonodromyAssignment,
    assignment_at,
    assignment_for_branch_set,
    build_cover,
    canonical_class,
    count_assignments,
    spanning_tree,
)
from .pl_group import group_triviality, is_trivial_function, multisets, ray_value_system, solve


def _resolve_fan(source: str):
    try:
        return load_fan(source)
    except FileNotFoundError:
        raise click.ClickException(
            f"no such fan: {source!r} (bundled fans: {', '.join(BUNDLED_FANS)})"
        )
    except FanError as exc:
        raise click.ClickException(f"invalid fan: {exc}")


def _default_jobs() -> int:
    env = os.environ.get("FANBRANCH_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Sweep engine
# ---------------------------------------------------------------------------


@dataclass
class SweepRecord:
    index: int
    branch_rays: list[int]
    profile: list[list[int]]
    dim_pl: int
    verdict: str
    cert: str
    duration_ms: float = 0.0  # in-memory only, never serialized

    def to_json(self) -> str:
        return json.dumps(
            {
                "index": self.index,
                "branch_rays": self.branch_rays,
                "profile": self.profile,
                "dim_pl": self.dim_pl,
                "verdict": self.verdict,
                "cert": self.cert,
            },
            sort_keys=True,
            separators=(",", ":"),
        )


def evaluate_assignment(fan, tree, d: int, index: int) -> SweepRecord:
    """Build the cover of one assignment, solve, and decide triviality."""
    started = time.perf_counter()
    a = assignment_at(fan, d, index, tree)
    cover = build_cover(fan, a, tree)
    profile = []
    branch = []
    for ray in range(len(fan.rays)):
        base = fan.cone_id((ray,))
        weights = sorted(
            (cover.cells[i].weight for i in cover.cells_over(base)), reverse=True
        )
        profile.append(weights)
        if any(w > 1 for w in weights):
            branch.append(ray)
    verdict = group_triviality(cover)
    return SweepRecord(
        index=index,
        branch_rays=branch,
        profile=profile,
        dim_pl=verdict.dim,
        verdict="AllTrivial" if verdict.all_trivial else "Nontrivial",
        cert=verdict.tag,
        duration_ms=(time.perf_counter() - started) * 1000.0,
    )


_WORKER_STATE: dict = {}


def _sweep_chunk(bounds) -> list[str]:
    fan = _WORKER_STATE["fan"]
    tree = _WORKER_STATE["tree"]
    d = _WORKER_STATE["degree"]
    lo, hi = bounds
    return [evaluate_assignment(fan, tree, d, i).to_json() for i in range(lo, hi)]


@dataclass
class SweepSummary:
    total: int
    processed: int
    verdicts: dict
    nontrivial: list
    seconds: float

    def describe(self) -> str:
        lines = [
            f"assignments processed: {self.processed} / {self.total}",
            f"verdicts: "
            + ", ".join(f"{k}: {v}" for k, v in sorted(self.verdicts.items())),
            f"nontrivial findings: {len(self.nontrivial)}",
        ]
        for rec in self.nontrivial:
            lines.append(
                f"  index {rec['index']}: branch rays {rec['branch_rays']}, dim {rec['dim_pl']}"
            )
        lines.append(f"wall-clock: {self.seconds:.1f}s")
        return "\n".join(lines)


def _read_cache_prefix(path: str, total: int) -> list[str]:
    """Existing cache lines; refuses anything but a clean index prefix."""
    lines = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            try:
                rec = json.loads(raw)
                idx = rec["index"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise click.ClickException(
                    f"cache corruption at line {lineno + 1}; refusing to resume"
                )
            if idx != len(lines) or idx >= total:
                raise click.ClickException(
                    f"cache is not a clean index prefix at line {lineno + 1}; refusing to resume"
                )
            lines.append(raw)
    return lines


def run_sweep(fan, d: int, jobs: int = 1, cache_path: str | None = None,
              resume: bool = False, echo=None) -> SweepSummary:
    """Sweep every assignment; returns the summary recomputed from records."""
    tree = spanning_tree(fan)
    total = count_assignments(fan, d)
    done: list[str] = []
    if cache_path and resume and os.path.exists(cache_path):
        done = _read_cache_prefix(cache_path, total)
        if echo:
            echo(f"resuming: {len(done)} records already cached")
    elif cache_path and not resume and os.path.exists(cache_path):
        raise click.ClickException(
            f"cache file {cache_path} exists; pass --resume to continue it"
        )

    start = len(done)
    t0 = time.perf_counter()
    out = open(cache_path, "a") if cache_path else None
    new_lines: list[str] = []
    try:
        if start < total:
            chunk = max(64, min(4096, (total - start) // max(1, jobs * 8) or 64))
            bounds = [
                (lo, min(lo + chunk, total)) for lo in range(start, total, chunk)
            ]
            if jobs <= 1:
                _WORKER_STATE.update(fan=fan, tree=tree, degree=d)
                chunks = map(_sweep_chunk, bounds)
            else:
                _WORKER_STATE.update(fan=fan, tree=tree, degree=d)
                ctx = multiprocessing.get_context("fork")
                pool = ctx.Pool(jobs)
                chunks = pool.imap(_sweep_chunk, bounds)
            emitted = start
            for lines in chunks:
                for line in lines:
                    if out:
                        out.write(line + "\n")
                    new_lines.append(line)
                    emitted += 1
                if out:
                    out.flush()
                if echo and (emitted % 25000 < chunk):
                    echo(f"  ... {emitted}/{total}")
            if jobs > 1:
                pool.close()
                pool.join()
    finally:
        if out:
            out.close()

    records = [json.loads(x) for x in done + new_lines]
    verdicts: dict = {}
    nontrivial = []
    for rec in records:
        tag = f"{rec['verdict']}({rec['cert']})" if rec["verdict"] == "AllTrivial" else rec["verdict"]
        verdicts[tag] = verdicts.get(tag, 0) + 1
        if rec["verdict"] == "Nontrivial":
            nontrivial.append(rec)
    return SweepSummary(total, len(records), verdicts, nontrivial, time.perf_counter() - t0)


def branch_census(fan) -> dict:
    """Degree-2 census: branch sets that are nonempty and never contain the
    two rays of a wall, grouped into orbits under the fan's combinatorial
    symmetries.  Orbits are keyed by (set size, orbit size)."""
    tree = spanning_tree(fan)
    wall_pairs = {
        tuple(sorted(fan.cones[w].ray_indices)) for w in fan.walls
    }
    from .monodromy import branch_rays as branch_of

    admissible = set()
    total = count_assignments(fan, 2)
    for i in range(total):
        a = assignment_at(fan, 2, i, tree)
        b = tuple(sorted(branch_of(fan, a, tree)))
        if not b:
            continue
        if any(
            tuple(sorted((x, y))) in wall_pairs
            for k, x in enumerate(b)
            for y in b[k + 1 :]
        ):
            continue
        admissible.add(b)
    autos = combinatorial_automorphisms(fan)
    orbits = []
    remaining = set(admissible)
    while remaining:
        seed = min(remaining)
        orbit = {tuple(sorted(g[i] for i in seed)) for g in autos}
        orbit &= admissible
        remaining -= orbit
        orbits.append(sorted(orbit))
    orbits.sort(key=lambda o: (len(o[0]), len(o)))
    return {
        "total_assignments": total,
        "admissible": sorted(admissible),
        "orbit_sizes": [len(o) for o in orbits],
        "orbits": orbits,
    }


# ---------------------------------------------------------------------------
# Command groups
# ---------------------------------------------------------------------------


@click.group()
def main():
    """Branched covers of complete fans and their piecewise-linear functions."""


@main.group()
def fan():
    """Fan validation and inspection."""


@fan.command("validate")
@click.argument("source")
def fan_validate(source):
    """Load and validate a fan; report rays, cones, walls, completeness."""
    f = _resolve_fan(source)
    complete = is_complete(f) if f.rank <= 3 else None
    status = "complete" if complete else "valid, not complete"
    click.echo(
        f"{status}, {len(f.rays)} rays, {len(f.max_cones)} maximal cones, "
        f"{len(f.walls)} walls"
    )


@main.group()
def covers():
    """Enumeration of branched covers."""


@covers.command("enumerate")
@click.argument("source")
@click.option("--degree", "-d", type=int, required=True)
@click.option("--classes", is_flag=True, help="count conjugacy classes as well")
@click.option("--branch-report", is_flag=True, help="tabulate degree-2 branch sets")
def covers_enumerate(source, degree, classes, branch_report):
    """Count the monodromy assignments of the given degree."""
    f = _resolve_fan(source)
    total = count_assignments(f, degree)
    click.echo(f"assignments: {total}")
    if classes:
        tree = spanning_tree(f)
        seen = set()
        for i in range(total):
            a = assignment_at(f, degree, i, tree)
            seen.add(tuple(p.images for p in canonical_class(a).perms))
        click.echo(f"conjugacy classes: {len(seen)}")
    if branch_report:
        if degree != 2:
            raise click.ClickException("--branch-report is defined for degree 2")
        census = branch_census(f)
        click.echo(
            f"admissible branch sets (nonempty, no wall pair): {len(census['admissible'])}"
        )
        click.echo(
            "orbit sizes under fan symmetries: "
            + " / ".join(str(s) for s in census["orbit_sizes"])
        )
        for orbit in census["orbits"]:
            click.echo(f"  orbit of {orbit[0]}: {len(orbit)} sets")


@main.group()
def pl():
    """Piecewise-linear function computations."""


@pl.command("sweep")
@click.argument("source")
@click.option("--degree", "-d", type=int, required=True)
@click.option("--jobs", "-j", type=int, default=None, help="worker processes")
@click.option("--cache", type=click.Path(), default=None, help="record file")
@click.option("--resume", is_flag=True, help="skip indices already cached")
@click.option("--expect-trivial", is_flag=True,
              help="exit with status 2 if any nontrivial verdict appears")
def pl_sweep(source, degree, jobs, cache, resume, expect_trivial):
    """Solve and classify every degree-d cover of the fan."""
    f = _resolve_fan(source)
    jobs = jobs or _default_jobs()
    summary = run_sweep(f, degree, jobs=jobs, cache_path=cache, resume=resume,
                        echo=click.echo)
    click.echo(summary.describe())
    if expect_trivial and summary.nontrivial:
        sys.exit(2)


@pl.command("solve")
@click.argument("source")
@click.option("--cover", "cover_file", type=click.Path(exists=True), default=None)
@click.option("--branch-rays", "branch", default=None,
              help="degree-2 shortcut: comma-separated ray indices (may be empty)")
def pl_solve(source, cover_file, branch):
    """Report dimension, basis, and triviality verdict for one cover."""
    f = _resolve_fan(source)
    if (cover_file is None) == (branch is None):
        raise click.ClickException("pass exactly one of --cover or --branch-rays")
    if branch is not None:
        rays = [int(x) for x in branch.split(",") if x.strip() != ""]
        assignment = assignment_for_branch_set(f, rays)
        cover = build_cover(f, assignment)
    else:
        with open(cover_file) as fh:
            data = json.load(fh)
        if "monodromy" in data:
            assignment = MonodromyAssignment.from_dict(data["monodromy"])
            cover = build_cover(f, assignment)
        else:
            cover = cover_from_dict(f, data)
            report = validate_cover(cover)
            if not report.ok:
                raise click.ClickException(f"cover invalid: {report.describe()}")
    basis = solve(cover)
    verdict = group_triviality(cover, basis)
    rows, zvars = ray_value_system(cover)
    m = RationalMatrix(rows) if rows else None
    rank_str = f", system {len(rows)}x{len(zvars)} of rank {rref(m)[1]}" if m else ""
    click.echo(f"degree {cover_degree(cover)} cover{rank_str}")
    click.echo(f"dim PL = {basis.dim} (pullbacks span 3)")
    if verdict.all_trivial:
        click.echo(f"verdict: AllTrivial({verdict.certificate})")
    else:
        click.echo("verdict: Nontrivial; witness multisets:")
        for ms in multisets(verdict.witness):
            entries = ", ".join(
                f"{tuple(int(x) if x.denominator == 1 else x for x in u)} x{w}"
                for u, w in ms.entries
            )
            click.echo(f"  cone {ms.cone_position}: {entries}")
        sys.exit(0)


@main.group()
def bundle():
    """Filtration-data operations."""


def _load_bundle_arg(source):
    try:
        return load_bundle(source)
    except FileNotFoundError:
        raise click.ClickException(f"no such bundle: {source!r}")


@bundle.command("verify")
@click.argument("source")
def bundle_verify(source):
    """Check the compatibility of filtration data with its splittings."""
    data, cert = _load_bundle_arg(source)
    if cert is None:
        screen = necessary_dimension_check(data)
        click.echo(f"no splittings given; dimension screen: {screen.status} ({screen.note})")
        sys.exit(0 if screen.ok else 1)
    result = verify(data, cert)
    click.echo(result.describe())
    if not result.ok:
        screen = necessary_dimension_check(data)
        click.echo(f"dimension screen: {screen.status}")
        sys.exit(1)


@bundle.command("chern")
@click.argument("source")
def bundle_chern(source):
    """Print the per-cone functional multisets and triviality."""
    data, cert = _load_bundle_arg(source)
    if cert is None:
        raise click.ClickException("chern data needs splittings in the bundle file")
    cd = chern(data, cert)
    for pos in sorted(cd.multisets):
        entries = ", ".join(f"{u} x{m}" for u, m in cd.multisets[pos])
        click.echo(f"cone {pos}: {entries}")
    click.echo("trivial" if cd.is_trivial() else "nontrivial")


@bundle.command("cover")
@click.argument("source")
def bundle_cover(source):
    """Build the associated branched cover and its function."""
    data, cert = _load_bundle_arg(source)
    if cert is None:
        raise click.ClickException("the cover needs splittings in the bundle file")
    cover, psi = branched_cover_of(data, cert)
    f = data.fan
    branch = sorted(
        f.cones[cover.cells[i].base].ray_indices[0]
        for i in cover.ray_cells
        if cover.cells[i].weight > 1
    )
    click.echo(
        f"degree {cover_degree(cover)} cover, {len(cover.cells)} cells, "
        f"branched over rays {branch}"
    )
    click.echo(f"function trivial: {is_trivial_function(psi)}")


# ---------------------------------------------------------------------------
# Reproduction harness
# ---------------------------------------------------------------------------


def _expected() -> dict:
    from importlib.resources import files

    return json.loads(files("fanbranch.data").joinpath("expected.json").read_text())


class _Diff:
    def __init__(self, echo):
        self.echo = echo
        self.ok = True

    def check(self, label, expected, got):
        match = expected == got
        if not match:
            self.ok = False
        status = "OK" if match else "MISMATCH"
        self.echo(f"  {label}: expected {expected}, got {got} [{status}]")


def _reproduce_eikelberg(diff: _Diff):
    f = load_fan("eikelberg")
    expected = _expected()["eikelberg"]
    diff.check("fan complete", expected["fan_complete"], is_complete(f))
    data, cert = load_bundle("eikelberg")
    diff.check("bundle verifies", expected["bundle_verifies"], bool(verify(data, cert)))
    cover, psi = branched_cover_of(data, cert)
    branch = sorted(
        f.cones[cover.cells[i].base].ray_indices[0]
        for i in cover.ray_cells
        if cover.cells[i].weight > 1
    )
    diff.check("branch rays", expected["branch_rays"], branch)
    diff.check("psi nontrivial", expected["psi_nontrivial"], not is_trivial_function(psi))
    mono_cover = build_cover(f, assignment_for_branch_set(f, branch))
    verdict = group_triviality(mono_cover)
    diff.check(
        "cover verdict nontrivial",
        expected["cover_nontrivial_verdict"],
        not verdict.all_trivial,
    )


def _reproduce_fulton_deg2(diff: _Diff, jobs: int):
    f = load_fan("fulton")
    expected = _expected()["fulton-deg2"]
    diff.check("assignments", expected["assignments"], count_assignments(f, 2))
    cover = build_cover(f, assignment_for_branch_set(f, [0, 2, 5, 7]))
    rows, zvars = ray_value_system(cover)
    diff.check("matrix rows", expected["matrix_rows"], len(rows))
    diff.check("matrix cols", expected["matrix_cols"], len(zvars))
    diff.check("matrix rank", expected["matrix_rank"], rref(RationalMatrix(rows))[1])
    diff.check("type-C PL dimension", expected["type_c_pl_dim"], solve(cover).dim)
    census = branch_census(f)
    diff.check(
        "admissible branch sets",
        expected["admissible_branch_sets"],
        len(census["admissible"]),
    )
    diff.check("orbit counts", expected["orbit_counts"], census["orbit_sizes"])
    summary = run_sweep(f, 2, jobs=jobs)
    diff.check("nontrivial verdicts", expected["nontrivial_verdicts"], len(summary.nontrivial))


def _reproduce_fulton_rank3(diff: _Diff):
    expected = _expected()["fulton-rank3"]
    data, cert = load_bundle("fulton_rank3")
    result = verify(data, cert)
    diff.check("bundle verifies", expected["bundle_verifies"], bool(result))
    if not result.ok:
        diff.echo(f"  note: {result.describe()}")
        diff.echo(
            "  note: the printed filtration data is inconsistent with its own"
            " multisets (dimension screen agrees); see the package README"
        )
    cd = chern(data, cert)
    diff.check("chern trivial", expected["chern_trivial"], cd.is_trivial())


def _reproduce_sigma_prime(diff: _Diff, jobs: int):
    f = load_fan("sigma_prime")
    expected = _expected()["sigma-prime-deg3"]
    total = count_assignments(f, 3)
    diff.check("assignments", expected["assignments"], total)
    diff.echo(f"  sweeping {total} assignments with {jobs} jobs ...")
    summary = run_sweep(f, 3, jobs=jobs, echo=diff.echo)
    diff.check("processed", expected["assignments"], summary.processed)
    diff.check("nontrivial verdicts", expected["nontrivial_verdicts"], len(summary.nontrivial))
    diff.echo(f"  sweep wall-clock: {summary.seconds:.1f}s")


def _reproduce_p2_tangent(diff: _Diff):
    expected = _expected()["p2-tangent"]
    data, cert = load_bundle("p2_tangent")
    cover, psi = branched_cover_of(data, cert)
    diff.check("maximal cells", expected["max_cells"], len(cover.max_cells))
    diff.check(
        "minimal cell weight",
        expected["min_weight"],
        cover.cells[cover.minimal_cell].weight,
    )
    got = sorted([int(x) for x in u] for u in psi.cell_values.values())
    diff.check("psi functionals", expected["psi_functionals"], got)


@main.group(name="paper")
def paper_group():
    """Reproduction harness for the published computations."""


@paper_group.command("reproduce")
@click.argument(
    "name",
    type=click.Choice(
        ["eikelberg", "fulton-deg2", "fulton-rank3", "sigma-prime-deg3", "p2-tangent"]
    ),
)
@click.option("--jobs", "-j", type=int, default=None)
def paper_reproduce(name, jobs):
    """Re-run a known computation and diff against bundled expected values."""
    jobs = jobs or _default_jobs()
    diff = _Diff(click.echo)
    click.echo(f"reproducing {name}:")
    if name == "eikelberg":
        _reproduce_eikelberg(diff)
    elif name == "fulton-deg2":
        _reproduce_fulton_deg2(diff, jobs)
    elif name == "fulton-rank3":
        _reproduce_fulton_rank3(diff)
    elif name == "sigma-prime-deg3":
        _reproduce_sigma_prime(diff, jobs)
    elif name == "p2-tangent":
        _reproduce_p2_tangent(diff)
    if diff.ok:
        click.echo("all expectations matched")
    else:
        click.echo("DISCREPANCIES FOUND (see mismatches above)")
        sys.exit(1)


if __name__ == "__main__":
    main()
