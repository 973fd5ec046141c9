import numpy as np


def random_unit(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_ball(rng, n, rmin=0.05, rmax=0.95):
    return random_unit(rng, n) * rng.uniform(rmin, rmax, size=(n, 1))


def fd_grad(f, x, h=1e-6):
    """Central differences of a scalar- or array-valued f; last axis is the coordinate."""
    x = np.asarray(x, dtype=float)
    cols = [(np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h) for e in np.eye(3) * h]
    return np.stack(cols, axis=-1)


def random_elements(rng, n_sh, n_apk, max_degree=6, rmin=0.1, rmax=0.9):
    """Distinct random harmonics and kernels."""
    from lrfmp.elements import AbelPoisson, SphericalHarmonic

    if n_sh > (max_degree + 1) ** 2:
        raise ValueError("not enough harmonics below max_degree")
    sh = set()
    while len(sh) < n_sh:
        n = int(rng.integers(0, max_degree + 1))
        sh.add(SphericalHarmonic(n, int(rng.integers(-n, n + 1))))
    sh = sorted(sh, key=lambda d: (d.n, d.j))
    return sh + [AbelPoisson(tuple(x)) for x in random_ball(rng, n_apk, rmin, rmax)]


def random_setup(rng, gamma=6, sigma=1.06, model_size=6):
    """Data synthesized from a random mixed model plus a little independent noise."""
    from lrfmp.continuation import ProblemSetup, synthesize_data
    from lrfmp.grids import reuter_grid

    grid = reuter_grid(gamma)
    elems = random_elements(rng, model_size // 2, model_size - model_size // 2)
    y = synthesize_data(list(zip(rng.normal(size=len(elems)), elems)), grid, sigma)
    y = y + 0.05 * np.std(y) * rng.normal(size=y.shape)
    return ProblemSetup(grid, sigma, y)
