from fanbranch.exact_linalg import RationalMatrix, SubspaceBasis, rank
from fanbranch.klyachko import Filtration, KlyachkoData


def random_filtration(rng, r) -> Filtration:
    while True:
        m = [[rng.randint(-3, 3) for _ in range(r)] for _ in range(r)]
        if rank(RationalMatrix(m)) == r:
            break
    dims = sorted(rng.sample(range(1, r + 1), rng.randint(1, r)), reverse=True)
    if dims[0] != r:
        dims = [r] + dims
    thresholds = sorted(rng.sample(range(-9, 10), len(dims)))
    steps = [(t, SubspaceBasis(r, m[:d])) for t, d in zip(thresholds, dims)]
    return Filtration(r, steps)


def random_bundle(fan, r, rng) -> KlyachkoData:
    return KlyachkoData(
        fan, r, {ray: random_filtration(rng, r) for ray in range(len(fan.rays))}
    )
