"""
Density matrices, ensembles and the distances used by the blindness checks.

Matrices are only ever built for the handful of wires a party receives in one
round, so dense 2^n x 2^n arrays are fine here. Anything that would need the
full register (``reduced_distance``) works on Gram matrices of the
amplitude tensor instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from . import config
from .errors import ValidationError, WireArgumentError
from .statevec import QuantumState

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite 2^n x 2^n matrix."""

    n_wires: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        rho = np.asarray(self.entries, dtype=complex)
        dim = 1 << self.n_wires
        if rho.shape != (dim, dim):
            raise ValidationError(f"Expected a {dim}x{dim} matrix for {self.n_wires} wires, got {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=config.STATE_TOLERANCE, rtol=0.0):
            raise ValidationError("Density matrix is not Hermitian")
        trace = complex(np.trace(rho))
        if abs(trace - 1.0) > config.STATE_TOLERANCE:
            raise ValidationError(f"Density matrix trace is {trace!r}, expected 1")
        min_eig = float(np.linalg.eigvalsh(rho).min())
        if min_eig < -config.PSD_TOLERANCE:
            raise ValidationError(f"Density matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dimension(self) -> int:
        return 1 << self.n_wires

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def __repr__(self) -> str:
        return f"DensityMatrix(n_wires={self.n_wires})"


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def density_from_state(state: QuantumState) -> DensityMatrix:
    """|psi><psi|."""
    psi = state.amplitudes
    return DensityMatrix(state.n_wires, np.outer(psi, psi.conj()))


def maximally_mixed(n_wires: int) -> DensityMatrix:
    """I / 2^n."""
    dim = 1 << n_wires
    return DensityMatrix(n_wires, np.eye(dim, dtype=complex) / dim)


def density_from_arrays(probabilities: np.ndarray, amplitudes: np.ndarray) -> DensityMatrix:
    """Vectorized ensemble average.

    ``amplitudes`` has one state per row; the result is A^T diag(p) A*.
    """
    probs = np.asarray(probabilities, dtype=float).reshape(-1)
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.ndim != 2 or amps.shape[0] != probs.shape[0]:
        raise WireArgumentError(
            f"Need one amplitude row per probability, got {amps.shape} for {probs.shape[0]} probabilities"
        )
    if probs.size == 0:
        raise WireArgumentError("An ensemble needs at least one member")
    if (probs < 0).any():
        raise WireArgumentError(f"Ensemble probabilities must be nonnegative, min is {probs.min()!r}")
    total = float(probs.sum())
    if abs(total - 1.0) > config.STATE_TOLERANCE:
        raise WireArgumentError(f"Ensemble probabilities sum to {total!r}, expected 1")
    n_wires = int(round(np.log2(amps.shape[1])))
    rho = (amps.T * probs) @ amps.conj()
    return DensityMatrix(n_wires, rho)


def density_from_ensemble(members: Iterable[Tuple[float, QuantumState]]) -> DensityMatrix:
    """rho = sum_i p_i |psi_i><psi_i| over (probability, state) pairs."""
    members = list(members)
    if not members:
        raise WireArgumentError("An ensemble needs at least one member")
    widths = {state.n_wires for _, state in members}
    if len(widths) != 1:
        raise WireArgumentError(f"Ensemble members have different wire counts: {sorted(widths)}")
    probs = np.array([p for p, _ in members], dtype=float)
    amps = np.stack([state.amplitudes for _, state in members])
    return density_from_arrays(probs, amps)


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------

def _check_keep(n_wires: int, keep: Sequence[int]) -> List[int]:
    keep = [int(w) for w in keep]
    if not keep:
        raise WireArgumentError("partial trace needs at least one wire to keep")
    if len(set(keep)) != len(keep):
        raise WireArgumentError(f"Kept wires must be distinct, got {keep}")
    for w in keep:
        if not 0 <= w < n_wires:
            raise WireArgumentError(f"Wire {w} out of range for {n_wires} wires")
    return keep


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace out every wire not in ``keep``; the result lists wires in ``keep`` order."""
    keep = _check_keep(rho.n_wires, keep)
    n = rho.n_wires
    t = rho.entries.reshape((2,) * (2 * n))
    remaining = n
    for w in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=w, axis2=w + remaining)
        remaining -= 1
    ordered = sorted(keep)
    perm = [ordered.index(w) for w in keep]
    t = t.transpose(perm + [p + remaining for p in perm])
    dim = 1 << remaining
    return DensityMatrix(remaining, t.reshape(dim, dim))


def _split_matrix(state: QuantumState, keep: Sequence[int]) -> np.ndarray:
    """Amplitudes reshaped to (kept wires, other wires)."""
    keep = _check_keep(state.n_wires, keep)
    moved = np.moveaxis(state.tensor(), keep, list(range(len(keep))))
    return moved.reshape(1 << len(keep), -1)


def reduced_density(state: QuantumState, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state of a pure state on ``keep`` without forming the full matrix."""
    m = _split_matrix(state, keep)
    return DensityMatrix(len(keep), m @ m.conj().T)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------

def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """(1/2) ||rho - sigma||_1 from the eigenvalues of the difference."""
    if rho.n_wires != sigma.n_wires:
        raise WireArgumentError(f"Dimension mismatch: {rho.n_wires} vs {sigma.n_wires} wires")
    diff = rho.entries - sigma.entries
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def expectation_fidelity(rho: DensityMatrix, psi: QuantumState) -> float:
    """<psi| rho |psi>, the fidelity of a mixed state against a pure target."""
    if rho.n_wires != psi.n_wires:
        raise WireArgumentError(f"Dimension mismatch: {rho.n_wires} vs {psi.n_wires} wires")
    value = np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes).real
    return float(min(1.0, max(0.0, value)))


def reduced_distance(a: QuantumState, b: QuantumState, keep: Sequence[int]) -> float:
    """Squared Hilbert-Schmidt distance ||rho_a - rho_b||_F^2 of the reduced states on ``keep``.

    Rounding leaves about 1e-16 here for equal states; compare it to squared tolerances.

    With M the (kept, rest) amplitude matrix, tr(rho_a rho_b) = ||M_a^dag M_b||_F^2,
    so only rest x rest Gram matrices are formed.
    """
    if a.n_wires != b.n_wires:
        raise WireArgumentError(f"Dimension mismatch: {a.n_wires} vs {b.n_wires} wires")
    ma = _split_matrix(a, keep)
    mb = _split_matrix(b, keep)

    def overlap(x: np.ndarray, y: np.ndarray) -> float:
        gram = x.conj().T @ y
        return float(np.vdot(gram, gram).real)

    squared = overlap(ma, ma) + overlap(mb, mb) - 2.0 * overlap(ma, mb)
    return max(0.0, squared)
