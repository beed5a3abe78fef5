"""Hot state-vector kernels.

Two interchangeable backends share one calling convention: every kernel takes a
contiguous complex128 amplitude array ``psi`` of length ``2**k`` and qubit
positions counted from the left of the ket (qubit 0 is the most significant
bit). Kernels never mutate their input.

The numba backend is used when numba imports cleanly, unless the environment
variable ``BQTSIM_DISABLE_NUMBA`` is set to a truthy value, in which case the
pure-numpy path is selected.
"""
from __future__ import annotations

import logging
import math
import os

import numpy as np

logger = logging.getLogger(__name__)

INV_SQRT2 = 1.0 / math.sqrt(2.0)


# --------------------------------------------------------------------------
# numpy backend

def _split(psi: np.ndarray, k: int, q: int) -> np.ndarray:
    return psi.reshape(1 << q, 2, 1 << (k - q - 1))


def np_apply_h(psi, k, q):
    v = _split(psi, k, q)
    out = np.empty_like(v)
    a = v[:, 0, :]
    b = v[:, 1, :]
    out[:, 0, :] = (a + b) * INV_SQRT2
    out[:, 1, :] = (a - b) * INV_SQRT2
    return out.reshape(-1)


def np_apply_x(psi, k, q):
    return _split(psi, k, q)[:, ::-1, :].reshape(-1).copy()


def np_apply_z(psi, k, q):
    out = _split(psi, k, q).copy()
    out[:, 1, :] *= -1.0
    return out.reshape(-1)


def np_apply_cnot(psi, k, c, t):
    src = psi.reshape((2,) * k)
    out = src.copy()
    sel = [slice(None)] * k
    sel[c] = 1
    sel = tuple(sel)
    # target axis index shifts down by one once the control axis is fixed
    axis = t if t < c else t - 1
    out[sel] = np.flip(src[sel], axis=axis)
    return out.reshape(-1)


def np_project(psi, k, q, outcome):
    """Unnormalised slice with qubit ``q`` fixed to ``outcome`` and removed."""
    return np.ascontiguousarray(_split(psi, k, q)[:, outcome, :]).reshape(-1)


def np_norm_sq(psi):
    return float(np.vdot(psi, psi).real)


# --------------------------------------------------------------------------
# numba backend

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def nb_apply_h(psi, k, q):
        out = np.empty_like(psi)
        stride = 1 << (k - q - 1)
        n = psi.shape[0]
        for base in range(0, n, 2 * stride):
            for j in range(base, base + stride):
                a = psi[j]
                b = psi[j + stride]
                out[j] = (a + b) * INV_SQRT2
                out[j + stride] = (a - b) * INV_SQRT2
        return out

    @njit(cache=True)
    def nb_apply_x(psi, k, q):
        out = np.empty_like(psi)
        stride = 1 << (k - q - 1)
        n = psi.shape[0]
        for base in range(0, n, 2 * stride):
            for j in range(base, base + stride):
                out[j] = psi[j + stride]
                out[j + stride] = psi[j]
        return out

    @njit(cache=True)
    def nb_apply_z(psi, k, q):
        out = psi.copy()
        stride = 1 << (k - q - 1)
        n = psi.shape[0]
        for base in range(stride, n, 2 * stride):
            for j in range(base, base + stride):
                out[j] = -psi[j]
        return out

    @njit(cache=True)
    def nb_apply_cnot(psi, k, c, t):
        out = psi.copy()
        cbit = 1 << (k - c - 1)
        tbit = 1 << (k - t - 1)
        for i in range(psi.shape[0]):
            if (i & cbit) and not (i & tbit):
                j = i | tbit
                out[i] = psi[j]
                out[j] = psi[i]
        return out

    @njit(cache=True)
    def nb_project(psi, k, q, outcome):
        stride = 1 << (k - q - 1)
        n = psi.shape[0]
        out = np.empty(n // 2, dtype=psi.dtype)
        pos = 0
        for base in range(outcome * stride, n, 2 * stride):
            for j in range(base, base + stride):
                out[pos] = psi[j]
                pos += 1
        return out

    @njit(cache=True)
    def nb_norm_sq(psi):
        s = 0.0
        for i in range(psi.shape[0]):
            s += psi[i].real * psi[i].real + psi[i].imag * psi[i].imag
        return s

    return {
        "apply_h": nb_apply_h,
        "apply_x": nb_apply_x,
        "apply_z": nb_apply_z,
        "apply_cnot": nb_apply_cnot,
        "project": nb_project,
        "norm_sq": nb_norm_sq,
    }


NUMPY_KERNELS = {
    "apply_h": np_apply_h,
    "apply_x": np_apply_x,
    "apply_z": np_apply_z,
    "apply_cnot": np_apply_cnot,
    "project": np_project,
    "norm_sq": np_norm_sq,
}


def _numba_disabled() -> bool:
    return os.environ.get("BQTSIM_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


def numba_kernels() -> dict | None:
    """The compiled kernel table, or None when numba is unavailable."""
    global _NUMBA_CACHE
    if _NUMBA_CACHE is None:
        try:
            _NUMBA_CACHE = _build_numba()
        except ImportError:
            logger.info("numba not importable; numpy kernels only")
            _NUMBA_CACHE = {}
    return _NUMBA_CACHE or None


_NUMBA_CACHE: dict | None = None

if _numba_disabled():
    KERNELS = NUMPY_KERNELS
    BACKEND = "numpy"
else:
    KERNELS = numba_kernels() or NUMPY_KERNELS
    BACKEND = "numba" if KERNELS is not NUMPY_KERNELS else "numpy"

apply_h = KERNELS["apply_h"]
apply_x = KERNELS["apply_x"]
apply_z = KERNELS["apply_z"]
apply_cnot = KERNELS["apply_cnot"]
project = KERNELS["project"]
norm_sq = KERNELS["norm_sq"]


def warmup() -> None:
    """Trigger JIT compilation of every kernel on a tiny register."""
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = 1.0
    apply_h(psi, 2, 0)
    apply_x(psi, 2, 1)
    apply_z(psi, 2, 0)
    apply_cnot(psi, 2, 0, 1)
    project(psi, 2, 1, 0)
    norm_sq(psi)
