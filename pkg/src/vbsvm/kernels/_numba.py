"""Numba versions of the kernels in ``_numpy``; same signatures, same results
up to floating-point rounding."""

import numpy as np
from numba import njit


@njit(cache=True)
def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def sparse_local_updates(G, A, zy, zwy, mu_theta, omega, p, mu_gamma, mu_inv_sigma, logit_rho, clip):
    m = G.shape[0]
    mu_b = np.empty(m)
    eta = np.empty(m)
    for k in range(m):
        kk = p + k
        okk = omega[kk, kk]
        mu_b[k] = (mu_inv_sigma * okk) ** -0.5
        e = logit_rho - 0.5 * G[k, k] * okk + (zy[k] + zwy[k]) * mu_theta[kk]
        for j in range(p):
            e -= A[k, j] * omega[j, kk]
        for j in range(m):
            if j != k:
                e -= G[k, j] * mu_gamma[j] * omega[p + j, kk]
        eta[k] = e
        mu_gamma[k] = _expit(min(max(e, -clip), clip))
    return mu_b, eta


@njit(cache=True)
def sparse_gibbs_gamma_scan(Z, y, inv_a, base, v, gamma, uniforms, logit_rho):
    n, m = Z.shape
    resid = np.zeros(n)
    for k in range(m):
        if gamma[k] != 0.0:
            for i in range(n):
                resid[i] += Z[i, k] * v[k]
    prob = np.empty(m)
    for k in range(m):
        gk = gamma[k] * v[k]
        quad = 0.0
        lin = 0.0
        for i in range(n):
            z = Z[i, k]
            resid[i] -= z * gk
            quad += inv_a[i] * z * z
            lin += z * (y[i] * (1.0 + inv_a[i]) - inv_a[i] * (base[i] + resid[i]))
        e = logit_rho - 0.5 * v[k] * v[k] * quad + v[k] * lin
        prob[k] = _expit(e)
        gamma[k] = 1.0 if uniforms[k] < prob[k] else 0.0
        gk = gamma[k] * v[k]
        for i in range(n):
            resid[i] += Z[i, k] * gk
    return prob


@njit(cache=True)
def _split(mask_row):
    d = mask_row.shape[0]
    n_mis = 0
    for j in range(d):
        if mask_row[j] == 0:
            n_mis += 1
    mis = np.empty(n_mis, dtype=np.int64)
    obs = np.empty(d - n_mis, dtype=np.int64)
    a = 0
    b = 0
    for j in range(d):
        if mask_row[j] == 0:
            mis[a] = j
            a += 1
        else:
            obs[b] = j
            b += 1
    return mis, obs


@njit(cache=True)
def _row_system(lam, rhs, D_row, mis, obs):
    s = mis.shape[0]
    lam_mm = np.empty((s, s))
    r = np.empty(s)
    for a in range(s):
        acc = rhs[mis[a]]
        for b in range(obs.shape[0]):
            acc -= lam[mis[a], obs[b]] * D_row[obs[b]]
        r[a] = acc
        for b in range(s):
            lam_mm[a, b] = lam[mis[a], mis[b]]
    return lam_mm, r


@njit(cache=True)
def missing_vb_rows(D, mask, rows, y, w, prec, mu_mu, mu_u, omega_u, omega_ub, mu_d, sigma_d, logdet):
    d = D.shape[1]
    base = prec @ mu_mu
    for t in range(rows.shape[0]):
        i = rows[t]
        mis, obs = _split(mask[i])
        wi = w[i]
        lam = prec + wi * omega_u
        rhs = base + y[i] * (1.0 + wi) * mu_u - wi * omega_ub
        lam_mm, r = _row_system(lam, rhs, D[i], mis, obs)
        L = np.linalg.cholesky(lam_mm)
        Linv = np.linalg.inv(L)
        cov = Linv.T @ Linv
        cov = 0.5 * (cov + cov.T)
        mean = cov @ r
        ld = 0.0
        for a in range(mis.shape[0]):
            ld -= 2.0 * np.log(L[a, a])
        logdet[i] = ld
        for a in range(d):
            for b in range(d):
                sigma_d[i, a, b] = 0.0
        for a in range(mis.shape[0]):
            mu_d[i, mis[a]] = mean[a]
            for b in range(mis.shape[0]):
                sigma_d[i, mis[a], mis[b]] = cov[a, b]


@njit(cache=True)
def missing_gibbs_rows(D, mask, rows, offsets, normals, y, inv_a, prec, mu, u, beta):
    base = prec @ mu
    uu = np.outer(u, u)
    for t in range(rows.shape[0]):
        i = rows[t]
        mis, obs = _split(mask[i])
        ai = inv_a[i]
        lam = prec + ai * uu
        rhs = base + y[i] * (1.0 + ai) * u - ai * beta * u
        lam_mm, r = _row_system(lam, rhs, D[i], mis, obs)
        L = np.linalg.cholesky(lam_mm)
        Linv = np.linalg.inv(L)
        mean = Linv.T @ (Linv @ r)
        z = normals[offsets[i] : offsets[i] + mis.shape[0]]
        draw = mean + Linv.T @ z
        for a in range(mis.shape[0]):
            D[i, mis[a]] = draw[a]
