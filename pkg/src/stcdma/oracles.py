"""Slow, independent reference implementations used for cross-checking.

Nothing here shares code with the production paths: the received-signal
reference walks the transmission chip by chip, the constrained minimizer is
solved through its stationarity system, and eigenvector references use a full
eigendecomposition.  These run in the test suite and in the CLI selftest.
"""

from __future__ import annotations

import numpy as np

from .signal_model import SpaceTimeChannel, SymbolStream
from .spreading import SpreadingSet

__all__ = [
    "reference_received_blocks",
    "kkt_constrained_minimizer",
    "central_difference",
    "min_eigenvector",
    "noise_subspace_projector",
]


def reference_received_blocks(
    streams: list[SymbolStream],
    spreading: SpreadingSet,
    channel: SpaceTimeChannel,
) -> np.ndarray:
    """Noise-free received blocks computed chip by chip.

    Walks every (user, antenna, slot, chip, path) combination explicitly:
    antenna one sends b1 then -conj(b2) over each block, antenna two sends b2
    then conj(b1), each chip propagates through the channel taps of the block
    it was transmitted in, and the receiver stacks the M-chip window of the
    first slot over the conjugated window of the second.
    """
    n = spreading.gain
    lp = channel.n_paths
    m = n + lp - 1
    nsym = len(streams[0])
    nblocks = nsym // 2
    total = nsym * n + lp - 1
    received = np.zeros(total, dtype=complex)
    for k, stream in enumerate(streams):
        amps = stream.amplitude_per_symbol()
        for block in range(nblocks):
            b1 = stream.symbols[2 * block]
            b2 = stream.symbols[2 * block + 1]
            amp = amps[2 * block]
            for slot_in_block, per_antenna in enumerate(
                [(b1, b2), (-np.conj(b2), np.conj(b1))]
            ):
                slot = 2 * block + slot_in_block
                for ant in range(spreading.tx_antennas):
                    coeff = amp * per_antenna[ant]
                    code = spreading.code(k, ant)
                    for chip in range(n):
                        sent = coeff * code[chip]
                        for path in range(lp):
                            tap = channel.taps[ant, path, block]
                            received[slot * n + chip + path] += sent * tap
    blocks = np.empty((2 * m, nblocks), dtype=complex)
    for block in range(nblocks):
        first = received[2 * block * n : 2 * block * n + m]
        second = received[(2 * block + 1) * n : (2 * block + 1) * n + m]
        blocks[:m, block] = first
        blocks[m:, block] = np.conj(second)
    return blocks


def kkt_constrained_minimizer(
    r: np.ndarray, d: np.ndarray, c: np.ndarray, target: np.ndarray
) -> np.ndarray:
    """Minimizer of w^H R w - 2 Re(d^H w) s.t. C^H w = target via the full
    stationarity system [[R, C], [C^H, 0]] [w; lam] = [d; target]."""
    dim, ncon = c.shape
    kkt = np.zeros((dim + ncon, dim + ncon), dtype=complex)
    kkt[:dim, :dim] = r
    kkt[:dim, dim:] = c
    kkt[dim:, :dim] = c.conj().T
    rhs = np.concatenate([d, target]).astype(complex)
    sol = np.linalg.solve(kkt, rhs)
    return sol[:dim]


def central_difference(f, x: np.ndarray, direction: np.ndarray, eps: float) -> float:
    """Symmetric difference quotient of a real scalar function along a
    (complex) direction."""
    return (f(x + eps * direction) - f(x - eps * direction)) / (2.0 * eps)


def min_eigenvector(a: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the smallest eigenvalue of a Hermitian matrix."""
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2.0)
    v = vecs[:, int(np.argmin(vals))]
    return v / np.linalg.norm(v)


def noise_subspace_projector(r: np.ndarray, signal_dim: int) -> np.ndarray:
    """Projector onto the span of the smallest eigenvectors of R."""
    vals, vecs = np.linalg.eigh((r + r.conj().T) / 2.0)
    order = np.argsort(vals)
    vn = vecs[:, order[: r.shape[0] - signal_dim]]
    return vn @ vn.conj().T
