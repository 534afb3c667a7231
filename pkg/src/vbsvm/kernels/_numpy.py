"""Pure-NumPy kernels. Sequential loops stay loops over the short axis; the
per-row imputation updates are batched over rows sharing a missingness
pattern."""

import numpy as np


def _expit(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def sparse_local_updates(G, A, zy, zwy, mu_theta, omega, p, mu_gamma, mu_inv_sigma, logit_rho, clip):
    m = G.shape[0]
    mu_b = np.empty(m)
    eta = np.empty(m)
    mu_v = mu_theta[p:]
    omega_v = omega[p:, p:]
    for k in range(m):
        okk = omega_v[k, k]
        mu_b[k] = (mu_inv_sigma * okk) ** -0.5
        cross = G[k] * mu_gamma
        cross[k] = 0.0
        e = (
            logit_rho
            - 0.5 * G[k, k] * okk
            + (zy[k] + zwy[k]) * mu_v[k]
            - A[k] @ omega[:p, p + k]
            - cross @ omega_v[:, k]
        )
        eta[k] = e
        mu_gamma[k] = _expit(min(max(e, -clip), clip))
    return mu_b, eta


def sparse_gibbs_gamma_scan(Z, y, inv_a, base, v, gamma, uniforms, logit_rho):
    resid = Z @ (gamma * v)
    prob = np.empty(Z.shape[1])
    ywt = y * (1.0 + inv_a)
    for k in range(Z.shape[1]):
        zk = Z[:, k]
        resid -= zk * (gamma[k] * v[k])
        e = (
            logit_rho
            - 0.5 * v[k] ** 2 * (inv_a @ (zk * zk))
            + v[k] * (zk @ ywt)
            - v[k] * (zk @ (inv_a * (base + resid)))
        )
        prob[k] = _expit(e)
        gamma[k] = 1.0 if uniforms[k] < prob[k] else 0.0
        resid += zk * (gamma[k] * v[k])
    return prob


def _pattern_groups(mask, rows):
    """Rows grouped by identical missingness pattern."""
    if rows.size == 0:
        return []
    patterns, inverse = np.unique(mask[rows], axis=0, return_inverse=True)
    inverse = inverse.ravel()
    out = []
    for g, pat in enumerate(patterns):
        members = rows[inverse == g]
        out.append((members, np.flatnonzero(pat == 0), np.flatnonzero(pat == 1)))
    return out


def missing_vb_rows(D, mask, rows, y, w, prec, mu_mu, mu_u, omega_u, omega_ub, mu_d, sigma_d, logdet):
    """q(d_{i,M_i}) updates for every row in ``rows``; writes the filled row
    means into ``mu_d``, the expanded covariances into ``sigma_d`` and
    log|Sigma_q(d_i,M_i)| into ``logdet``."""
    base = prec @ mu_mu
    for members, mis, obs in _pattern_groups(mask, rows):
        wi = w[members]
        lam = prec[None, :, :] + wi[:, None, None] * omega_u[None, :, :]
        lam_mm = lam[:, mis][:, :, mis]
        rhs = (
            base[None, :]
            + (y[members] * (1.0 + wi))[:, None] * mu_u[None, :]
            - wi[:, None] * omega_ub[None, :]
        )
        if obs.size:
            d_obs = D[members][:, obs]
            rhs = rhs - np.einsum("rjk,rk->rj", lam[:, :, obs], d_obs)
        rhs_m = rhs[:, mis]
        L = np.linalg.cholesky(lam_mm)
        Linv = np.linalg.inv(L)
        cov = np.swapaxes(Linv, 1, 2) @ Linv
        cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
        mean = np.einsum("rjk,rk->rj", cov, rhs_m)
        logdet[members] = -2.0 * np.log(np.diagonal(L, axis1=1, axis2=2)).sum(axis=1)
        mu_d[np.ix_(members, mis)] = mean
        block = np.zeros((members.size, mu_d.shape[1], mu_d.shape[1]))
        block[:, mis[:, None], mis[None, :]] = cov
        sigma_d[members] = block


def missing_gibbs_rows(D, mask, rows, offsets, normals, y, inv_a, prec, mu, u, beta):
    """Draw d_{i,M_i} | rest for each row in ``rows`` in place in ``D``.

    ``normals[offsets[i]:offsets[i] + |M_i|]`` are the standard normals used
    for row i, in ascending column order.
    """
    base = prec @ mu
    uu = np.outer(u, u)
    for members, mis, obs in _pattern_groups(mask, rows):
        ai = inv_a[members]
        lam = prec[None, :, :] + ai[:, None, None] * uu[None, :, :]
        rhs = (
            base[None, :]
            + (y[members] * (1.0 + ai))[:, None] * u[None, :]
            - (ai * beta)[:, None] * u[None, :]
        )
        if obs.size:
            rhs = rhs - np.einsum("rjk,rk->rj", lam[:, :, obs], D[members][:, obs])
        L = np.linalg.cholesky(lam[:, mis][:, :, mis])
        Linv = np.linalg.inv(L)
        LinvT = np.swapaxes(Linv, 1, 2)
        mean = np.einsum("rjk,rk->rj", LinvT @ Linv, rhs[:, mis])
        z = normals[offsets[members][:, None] + np.arange(mis.size)[None, :]]
        D[np.ix_(members, mis)] = mean + np.einsum("rjk,rk->rj", LinvT, z)
