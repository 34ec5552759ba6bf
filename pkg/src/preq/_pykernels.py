"""Pure numpy implementations of the hot loops.

Same signatures and semantics as the compiled ``_ckernels`` module; used
when the extension is not built or ``PREQ_PURE_PYTHON=1`` is set.
"""
import numpy as np


def iterate_affine(P, q, x0, steps):
    """``x_{k+1} = P x_k + q`` for ``steps`` steps; returns all iterates."""
    out = np.empty((steps + 1, x0.shape[0]), dtype=np.complex128)
    out[0] = x0
    x = x0
    for k in range(steps):
        x = P @ x + q
        out[k + 1] = x
    return out


def rk4_affine(L, c, x0, dt, steps):
    """Classical RK4 for ``dx/dt = L x + c``."""
    out = np.empty((steps + 1, x0.shape[0]), dtype=np.complex128)
    out[0] = x0
    x = x0
    h2 = 0.5 * dt
    for k in range(steps):
        k1 = L @ x + c
        k2 = L @ (x + h2 * k1) + c
        k3 = L @ (x + h2 * k2) + c
        k4 = L @ (x + dt * k3) + c
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
    return out


def rk4_normalized(L, x0, dt, steps, n):
    """Classical RK4 for ``dx/dt = L x - x tr(L x)`` (vectorized n x n state)."""
    diag = np.arange(n) * (n + 1)

    def f(x):
        y = L @ x
        return y - x * y[diag].sum()

    out = np.empty((steps + 1, x0.shape[0]), dtype=np.complex128)
    out[0] = x0
    x = x0
    h2 = 0.5 * dt
    # divergence shows up as non-finite states, which the caller reports
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            k1 = f(x)
            k2 = f(x + h2 * k1)
            k3 = f(x + h2 * k2)
            k4 = f(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            out[k + 1] = x
    return out


def em_block(phi, F, S, z, moments, record):
    """Advance paths through ``F.shape[0]`` Euler-Maruyama steps in place.

    ``phi`` (m, n) is updated as ``phi <- F[s] phi + S z[s]``; after each step
    ``moments[s] += sum_p phi_p phi_p^dagger``.  ``record`` is None or an
    (s, m, n) array receiving the states.
    """
    St = S.T
    for s in range(F.shape[0]):
        phi[...] = phi @ F[s].T + z[s] @ St
        moments[s] += phi.T @ phi.conj()
        if record is not None:
            record[s] = phi
