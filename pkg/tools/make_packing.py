"""Compute a packing of n equal circles in the unit circle and write it as "x y" lines.

Local optimisation (SLSQP on max r s.t. |ci - cj| >= 2r, |ci| <= 1 - r) from
several jittered hexagonal starts.  The result is a good packing, not a
certified optimum.  The final centers are rescaled so the declared radius is
exactly half the minimum center distance and every circle touches or lies
inside the boundary.

    python3 tools/make_packing.py 67 src/qpolar/data/circle67.txt
"""
import sys

import numpy as np
from scipy.optimize import minimize


def hex_start(n, rng):
    k = int(np.ceil(np.sqrt(n))) + 3
    g = np.array([(i + 0.5 * (j % 2), j * np.sqrt(3) / 2) for i in range(-k, k) for j in range(-k, k)])
    g -= g.mean(axis=0) + rng.normal(scale=0.3, size=2)
    g = g[np.argsort(np.hypot(*g.T))][:n]
    g /= np.hypot(*g.T).max() * 1.1
    return g + rng.normal(scale=0.01, size=g.shape)


def solve(n, rng):
    c0 = hex_start(n, rng)
    iu, ju = np.triu_indices(n, 1)
    d0 = np.hypot(*(c0[iu] - c0[ju]).T).min()
    z0 = np.concatenate([c0.ravel(), [d0 / 2 * 0.9]])

    def pair(z):
        c = z[:-1].reshape(n, 2)
        d = c[iu] - c[ju]
        return (d * d).sum(axis=1) - 4 * z[-1] ** 2

    def pair_jac(z):
        c = z[:-1].reshape(n, 2)
        d = c[iu] - c[ju]
        J = np.zeros((iu.size, 2 * n + 1))
        r = np.arange(iu.size)
        J[r, 2 * iu] = 2 * d[:, 0]
        J[r, 2 * iu + 1] = 2 * d[:, 1]
        J[r, 2 * ju] = -2 * d[:, 0]
        J[r, 2 * ju + 1] = -2 * d[:, 1]
        J[:, -1] = -8 * z[-1]
        return J

    def ring(z):
        c = z[:-1].reshape(n, 2)
        return (1 - z[-1]) ** 2 - (c * c).sum(axis=1)

    def ring_jac(z):
        c = z[:-1].reshape(n, 2)
        J = np.zeros((n, 2 * n + 1))
        J[np.arange(n), 2 * np.arange(n)] = -2 * c[:, 0]
        J[np.arange(n), 2 * np.arange(n) + 1] = -2 * c[:, 1]
        J[:, -1] = -2 * (1 - z[-1])
        return J

    res = minimize(lambda z: -z[-1], z0, jac=lambda z: np.eye(2 * n + 1)[-1] * -1,
                   constraints=[{"type": "ineq", "fun": pair, "jac": pair_jac},
                                {"type": "ineq", "fun": ring, "jac": ring_jac}],
                   method="SLSQP", options={"maxiter": 2000, "ftol": 1e-15})
    return rescale(res.x[:-1].reshape(n, 2))


def rescale(c):
    """Scale so that 2r = min distance and max |c| + r = 1 exactly."""
    n = len(c)
    iu, ju = np.triu_indices(n, 1)
    d = np.hypot(*(c[iu] - c[ju]).T).min()
    b = np.hypot(*c.T).max()
    s = 1.0 / (b + d / 2)
    c = c * s
    return c, np.hypot(*(c[iu] - c[ju]).T).min() / 2


def main(n, out, restarts=12, seed=1):
    rng = np.random.default_rng(seed)
    best = None
    for k in range(restarts):
        c, r = solve(n, rng)
        print(f"start {k}: r = {r:.8f}")
        if best is None or r > best[1]:
            best = (c, r)
    c, r = best
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(f"radius {float(r)!r}\n")
        for x, y in c:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
    print(f"wrote {out}: n={n} r={float(r)!r}")


if __name__ == "__main__":
    main(int(sys.argv[1]), sys.argv[2])
