"""Independent reference computations used to freeze expected values."""
import numpy as np


def dense_ppr(nodes, edges, teleport, damping=0.85, tol=1e-14, max_iter=20_000):
    """Dense power iteration on the full Google matrix.

    ``edges`` are unordered pairs; isolated nodes jump according to the
    teleport distribution.
    """
    n = len(nodes)
    pos = {s: i for i, s in enumerate(nodes)}
    adj = np.zeros((n, n))
    for a, b in edges:
        if a != b:
            adj[pos[a], pos[b]] = 1.0
            adj[pos[b], pos[a]] = 1.0
    v = np.zeros(n)
    for s in teleport:
        v[pos[s]] += 1.0
    v /= v.sum()
    M = np.zeros((n, n))
    for i in range(n):
        deg = adj[i].sum()
        M[i] = adj[i] / deg if deg else v
    G = damping * M + (1 - damping) * np.outer(np.ones(n), v)
    x = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        x_new = G.T @ x
        if np.abs(x_new - x).sum() < tol:
            x = x_new
            break
        x = x_new
    return dict(zip(nodes, x))


def dense_ppr_solve(nodes, edges, teleport, damping=0.85):
    """Closed form: x = (1-d) (I - d M^T)^-1 v."""
    n = len(nodes)
    pos = {s: i for i, s in enumerate(nodes)}
    adj = np.zeros((n, n))
    for a, b in edges:
        if a != b:
            adj[pos[a], pos[b]] = adj[pos[b], pos[a]] = 1.0
    v = np.zeros(n)
    for s in teleport:
        v[pos[s]] += 1.0
    v /= v.sum()
    M = np.array([adj[i] / adj[i].sum() if adj[i].sum() else v for i in range(n)])
    x = np.linalg.solve(np.eye(n) - damping * M.T, (1 - damping) * v)
    return dict(zip(nodes, x))
