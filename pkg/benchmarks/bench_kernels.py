"""Time the numba and NumPy kernels on the same inputs, plus whole fits.

    python3 benchmarks/bench_kernels.py [--repeat 5]

numba is compiled by a warm-up call before timing.
"""

import argparse
import timeit
import warnings

import numpy as np

from vbsvm.data import DesignPair
from vbsvm.distributions import make_rng
from vbsvm.kernels import get_backend
from vbsvm.mcmc import GibbsConfig, gibbs_sparse
from vbsvm.priors import PriorConfig
from vbsvm.simulate import SimSpec, apply_mcar, simulate_logistic
from vbsvm.vb_missing import _filled_observed, fit_vb_missing, init_missing_state
from vbsvm.vb_sparse import fit_vb_sparse


def sparse_local_case(backend, rng, p=1, m=100):
    k = p + m
    A = rng.standard_normal((k, k))
    CWC = A @ A.T
    mu = rng.standard_normal(k)
    omega = np.linalg.inv(CWC + np.eye(k)) + np.outer(mu, mu)
    zy, zwy = rng.standard_normal(m), rng.standard_normal(m)
    g0 = rng.uniform(0.05, 0.95, m)
    a, b = np.ascontiguousarray(CWC[p:, p:]), np.ascontiguousarray(CWC[p:, :p])
    return lambda: backend.sparse_local_updates(a, b, zy, zwy, mu, omega, p, g0.copy(), 1.0, -1.0, 35.0)


def gamma_scan_case(backend, rng, n=500, m=100):
    Z = rng.standard_normal((n, m))
    y = np.where(rng.random(n) > 0.5, 1.0, -1.0)
    inv_a, base, v = rng.uniform(0.2, 3, n), rng.standard_normal(n), rng.standard_normal(m)
    g0, unif = (rng.random(m) > 0.5).astype(float), rng.random(m)
    return lambda: backend.sparse_gibbs_gamma_scan(Z, y, inv_a, base.copy(), v.copy(), g0.copy(), unif, -1.1)


def missing_vb_case(backend, rng, n=500, d=10):
    ds, _, _ = simulate_logistic(SimSpec(n, d, 1))
    ds = apply_mcar(ds, 0.2, rng)
    st = init_missing_state(ds, PriorConfig())
    D_obs = _filled_observed(ds)
    pat = st.pattern
    om = st.omega_bu

    def run():
        backend.missing_vb_rows(
            D_obs, pat.mask, pat.rows, ds.y, st.mu_a_inv, st.mu_sigma_inv, st.mu_mu, st.mu_bu[1:],
            np.ascontiguousarray(om[1:, 1:]), np.ascontiguousarray(om[1:, 0]),
            st.mu_d.copy(), st.sigma_d.copy(), st.logdet_mis.copy(),
        )

    return run


def missing_gibbs_case(backend, rng, n=500, d=10):
    mask = (rng.random((n, d)) > 0.2).astype(np.int8)
    D = rng.standard_normal((n, d))
    rows = np.flatnonzero(~mask.all(axis=1)).astype(np.int64)
    counts = (mask == 0).sum(axis=1)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    normals = rng.standard_normal(int(counts.sum()))
    A = rng.standard_normal((d, d))
    args = (rows, offsets, normals, np.where(rng.random(n) > 0.5, 1.0, -1.0), rng.uniform(0.3, 2, n),
            A @ A.T + np.eye(d), rng.standard_normal(d), rng.standard_normal(d), 0.3)
    return lambda: backend.missing_gibbs_rows(D.copy(), mask, *args)


def whole_fits(backend):
    ds, _, _ = simulate_logistic(SimSpec(200, 20, 2))
    des = DesignPair(np.ones((200, 1)), ds.D)
    dm = apply_mcar(ds, 0.2, make_rng(3))
    return {
        "fit_vb_sparse n=200 m=20": lambda: fit_vb_sparse(des, ds.y, 0.25, backend=backend),
        "fit_vb_missing n=200 d=20": lambda: fit_vb_missing(dm, backend=backend),
        "gibbs_sparse 500 scans": lambda: gibbs_sparse(des, ds.y, 0.25, cfg=GibbsConfig(250, 250, seed=0), backend=backend),
    }


CASES = {
    "sparse_local_updates m=100": sparse_local_case,
    "sparse_gibbs_gamma_scan n=500 m=100": gamma_scan_case,
    "missing_vb_rows n=500 d=10": missing_vb_case,
    "missing_gibbs_rows n=500 d=10": missing_gibbs_case,
}


def best_of(fn, repeat):
    fn()  # warm-up, includes numba compilation
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    warnings.simplefilter("ignore")
    backends = {name: get_backend(name) for name in ("numpy", "numba")}
    print(f"{'case':40s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    rows = [(label, {b: make(be, make_rng(0)) for b, be in backends.items()}) for label, make in CASES.items()]
    fits = {b: whole_fits(be) for b, be in backends.items()}
    rows += [(label, {b: fits[b][label] for b in backends}) for label in fits["numpy"]]
    for label, fns in rows:
        t = {b: best_of(fn, a.repeat) for b, fn in fns.items()}
        print(f"{label:40s} {t['numpy'] * 1e3:10.3f}ms {t['numba'] * 1e3:10.3f}ms {t['numpy'] / t['numba']:7.1f}x")


if __name__ == "__main__":
    main()
