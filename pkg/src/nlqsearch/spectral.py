"""Small symmetric eigensolver and the gap/overlap diagnostics used to locate critical jumping rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JACOBI_MAX_DIM = 64


@dataclass(frozen=True)
class SpectralSummary:
    gamma: float
    eigenvalues: np.ndarray
    gap: float
    overlaps_s: np.ndarray
    overlaps_w: np.ndarray


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    for j in range(vecs.shape[1]):
        nz = np.flatnonzero(np.abs(vecs[:, j]) > 1e-14)
        if nz.size and vecs[nz[0], j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def jacobi_eig(a: np.ndarray, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations in fixed row-major pivot order."""
    a = np.array(a, dtype=float)
    m = a.shape[0]
    v = np.eye(m)
    scale = np.linalg.norm(a)
    if scale == 0.0 or m == 1:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-16 * scale:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ValueError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def eig_sym(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a real symmetric matrix.

    Each eigenvector is signed so that its first non-negligible entry is positive.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.abs(a).max(initial=0.0), 1.0)
    if np.abs(a - a.T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if a.shape[0] <= JACOBI_MAX_DIM:
        vals, vecs = jacobi_eig(a)
    else:
        vals, vecs = np.linalg.eigh(a)
    order = np.argsort(vals, kind="stable")
    return vals[order], _fix_signs(vecs[:, order])


def _linear_hamiltonian(collapsed, gamma: float) -> np.ndarray:
    from .dynamics import hamiltonian

    return hamiltonian(collapsed, gamma)


def spectral_summary(collapsed, gamma: float) -> SpectralSummary:
    sizes = np.asarray(collapsed.class_sizes, dtype=float)
    s = np.sqrt(sizes / sizes.sum())
    vals, vecs = eig_sym(_linear_hamiltonian(collapsed, gamma))
    ov_s = (s @ vecs) ** 2
    ov_w = vecs[0, :] ** 2
    gap = float(vals[1] - vals[0]) if len(vals) > 1 else 0.0
    return SpectralSummary(float(gamma), vals, gap, ov_s, ov_w)


def overlap_sweep(collapsed, gamma_grid) -> list[SpectralSummary]:
    grid = np.atleast_1d(np.asarray(gamma_grid, dtype=float))
    if grid.size == 0:
        raise ValueError("gamma_grid must be non-empty")
    if np.any(grid <= 0):
        raise ValueError("gamma_grid must be positive")
    return [spectral_summary(collapsed, g) for g in grid]


def sweep_csv(summaries: list[SpectralSummary]) -> str:
    m = len(summaries[0].eigenvalues)
    header = ["gamma", "gap"] + [f"os{j}" for j in range(m)] + [f"ow{j}" for j in range(m)]
    lines = [",".join(header)]
    for s in summaries:
        row = [s.gamma, s.gap, *s.overlaps_s, *s.overlaps_w]
        lines.append(",".join(f"{x:.12g}" for x in row))
    return "\n".join(lines) + "\n"
