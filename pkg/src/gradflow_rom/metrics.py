"""Error measures between full and reduced trajectories."""
from __future__ import annotations

import numpy as np


def l2_time_error(traj_a, traj_b, M, dt: float) -> float:
    """Discrete ``L2(0, T; L2)`` distance of two snapshot matrices.

    ``sqrt(dt * sum_{n=1}^{J} (a^n - b^n)^T M (a^n - b^n))``; column 0
    (the initial state) is excluded from the sum.
    """
    a = np.asarray(traj_a, dtype=float)
    b = np.asarray(traj_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    D = a[:, 1:] - b[:, 1:]
    return float(np.sqrt(dt * np.sum(D * (M @ D))))


def linf_energy_error(energies_a, energies_b) -> float:
    """``max_n |E_a(t_n) - E_b(t_n)|``."""
    a = np.asarray(energies_a, dtype=float)
    b = np.asarray(energies_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))
