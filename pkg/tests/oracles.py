"""Independent reference implementations used as test oracles.

Everything here is written from the eliminated closed-form chain directly,
separate from the production code paths, so solver and oracle cannot share
a bug.
"""

import numpy as np

from conftest import make_params


def oracle_excitation(params, delta_p, x):
    """|<c>|^2 as a function of x, via the linear-in-x polynomial form."""
    from rydcav.interactions import blockade_volume, c6_coefficient, kappa

    ge = params.ensemble.gamma_e
    gc = params.cavity.gamma_c
    gr = params.rydberg.gamma_r
    om = params.drive.omega_cf
    coop = params.ensemble.cooperativity
    alpha = params.drive.alpha
    D_e = complex(delta_p, ge)
    D_r = complex(delta_p + params.drive.delta_cf, gr)
    D_c = complex(delta_p - params.cavity.delta_bg, gc)
    c6 = c6_coefficient(params.rydberg)
    if c6 == 0:
        kap = 0j
    else:
        v_b = blockade_volume(D_e, D_r, om, c6)
        kap = kappa(D_e, D_r, om, v_b, params.ensemble.cloud_volume)
    drx = D_r - kap * np.asarray(x)
    coop2 = 2 * gc * ge * coop
    poly = drx * (D_e * D_c - coop2) - om**2 * D_c / 4.0
    k_const = (om / 2.0) * np.sqrt(coop2) * alpha
    return k_const**2 / np.abs(poly) ** 2


def oracle_roots(params, delta_p, npoints=100_000, bisect_iters=90):
    """All steady-state roots by dense sign scan plus bisection."""
    f0 = float(oracle_excitation(params, delta_p, 0.0))
    if f0 == 0.0:
        return [0.0]
    x_max = 10.0 * f0
    for _ in range(10):
        grid = np.linspace(0.0, x_max, npoints)
        res = oracle_excitation(params, delta_p, grid) - grid
        idx = np.nonzero(np.sign(res[:-1]) * np.sign(res[1:]) < 0)[0]
        if idx.size:
            break
        x_max *= 4.0
    roots = []
    for i in idx:
        lo, hi = grid[i], grid[i + 1]
        flo = oracle_excitation(params, delta_p, lo) - lo
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            fmid = oracle_excitation(params, delta_p, mid) - mid
            if flo * fmid <= 0:
                hi = mid
            else:
                lo, flo = mid, fmid
        roots.append(0.5 * (lo + hi))
    return roots


def random_paper_scale_params(rng, series="S", **fixed):
    kw = dict(
        gamma_c=rng.uniform(5.0, 15.0),
        gamma_e=rng.uniform(1.0, 5.0),
        gamma_r=rng.uniform(0.05, 0.5),
        omega_cf=rng.uniform(1.0, 8.0),
        cooperativity=rng.uniform(1.0, 10.0),
        n=int(rng.integers(50, 90)),
        series=series,
        cloud_volume=rng.uniform(2e5, 2e6),
        alpha=rng.uniform(0.1, 10.0),
    )
    kw.update(fixed)
    return make_params(**kw)
