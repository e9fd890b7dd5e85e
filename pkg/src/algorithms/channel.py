# algorithms/channel.py

import numpy as np

from data.system import BeamformerMatrix, ChannelSet

UNIT_NORM_TOL = 1e-12


def draw_channels(params, seed):
    """IID circularly-symmetric unit-variance complex Gaussian rows, one per user."""
    rng = seed.generator(stream=0)
    real = rng.standard_normal((params.K, params.M))
    imag = rng.standard_normal((params.K, params.M))
    return ChannelSet((real + 1j * imag) / np.sqrt(2.0), seed)


def channel_gains(H):
    return np.sum(np.abs(H) ** 2, axis=1)


def _columns(W):
    if isinstance(W, BeamformerMatrix):
        return W.W
    W = np.asarray(W, dtype=complex)
    return W.reshape(W.shape[0], -1)


def project_complement(W, h):
    """(I - W W^H) h."""
    columns = _columns(W)
    h = np.asarray(h, dtype=complex)
    if h.shape != (columns.shape[0],):
        raise ValueError(f"vector of length {columns.shape[0]} expected, got shape {h.shape}")
    if columns.shape[1] == 0:
        return h.copy()
    return h - columns @ (columns.conj().T @ h)


def null_space_basis(v):
    """M x (M-1) orthonormal complement of the unit vector v."""
    v = np.asarray(v, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("null space of the zero vector is undefined")
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"unit vector expected, got norm {norm!r}")
    M = v.shape[0]
    skip = int(np.argmax(np.abs(v)))
    basis = [v]
    for i in range(M):
        if i == skip:
            continue
        w = np.zeros(M, dtype=complex)
        w[i] = 1.0
        Q = np.column_stack(basis)
        # second pass restores orthogonality lost to cancellation
        for _ in range(2):
            w = w - Q @ (Q.conj().T @ w)
        basis.append(w / np.linalg.norm(w))
    return np.column_stack(basis[1:]) if M > 1 else np.zeros((1, 0), dtype=complex)
