"""Admittance matrix utilities: Kron reduction and sequence components."""

from __future__ import annotations

import numpy as np


class SingularEliminatedBlockError(np.linalg.LinAlgError):
    pass


def kron_reduce(y: np.ndarray, keep) -> np.ndarray:
    """Schur-complement elimination of the nodes not listed in `keep`.

    Returns Y_kk - Y_ke Y_ee^-1 Y_ek.  The eliminated nodes must carry no
    external current injection for the reduction to be exact.
    """
    y = np.asarray(y, dtype=complex)
    n = y.shape[0]
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= n for i in keep):
        raise IndexError(f"keep indices out of range for {n}x{n} matrix")
    elim = [i for i in range(n) if i not in keep]
    if not elim:
        return y.copy()
    kk = y[np.ix_(keep, keep)]
    ke = y[np.ix_(keep, elim)]
    ek = y[np.ix_(elim, keep)]
    ee = y[np.ix_(elim, elim)]
    try:
        x = np.linalg.solve(ee, ek)
    except np.linalg.LinAlgError as exc:
        raise SingularEliminatedBlockError(
            f"eliminated block is singular: {exc}"
        ) from None
    return kk - ke @ x


def sequence_to_phase(y0: complex, y1: complex) -> np.ndarray:
    """3x3 phase-frame admittance from zero and positive/negative sequence.

    Equals A diag(y0, y1, y1) A^-1 with A the symmetric-component matrix;
    the closed form has (y0 + 2 y1)/3 on the diagonal and (y0 - y1)/3 off
    the diagonal.
    """
    a = np.exp(2j * np.pi / 3.0)
    amat = np.array([[1, 1, 1], [1, a * a, a], [1, a, a * a]], dtype=complex)
    d = np.diag([complex(y0), complex(y1), complex(y1)])
    return amat @ d @ np.linalg.inv(amat)
