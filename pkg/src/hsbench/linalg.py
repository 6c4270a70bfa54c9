"""Dense complex linear algebra, seeded randomness, and Haar sampling.

Conventions used throughout the package:

* qubit 0 is the most significant bit of a basis-state index (row-major),
  so the basis state ``|q0 q1 ... q_{m-1}>`` has index ``sum q_i 2^(m-1-i)``;
* the block of a block-encoding unitary is its top-left quadrant, i.e. the
  sector where the (most significant) ancilla qubit is 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotUnitaryError(ValueError):
    """Raised when a matrix that must be unitary fails the defect check."""


class CapacityError(ValueError):
    """Raised when a dense computation would exceed the supported size."""


class RandomSource:
    """Seeded random stream with deterministic, order-independent children.

    A child stream is addressed by its index path from the root seed, never
    by how many draws the parent has consumed.  Two processes that spawn
    ``root.child(7)`` therefore see identical streams regardless of thread
    count or interleaving, which is what makes benchmark artifacts
    reproducible byte for byte.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.path = _path
        self._gen: np.random.Generator | None = None

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
            self._gen = np.random.default_rng(seq)
        return self._gen

    def child(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.path + (int(index),))

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, path={self.path})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigendecomposition of H = A†A with eigenvalues clamped to [0, 1].

    Attributes
    ----------
    eigenvalues : (N,) float array, sorted ascending.
    eigenvectors : (N, N) complex array, columns are eigenvectors.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def unitarity_defect(u: np.ndarray) -> float:
    """Max-norm distance of U†U from the identity."""
    d = u.conj().T @ u
    d[np.diag_indices_from(d)] -= 1.0
    return float(np.abs(d).max())


def haar_unitary(dim: int, rng: RandomSource) -> np.ndarray:
    """Draw a Haar-distributed unitary via corrected QR factorization.

    QR of an i.i.d. complex Gaussian matrix alone is biased: the factor pair
    is only unique once R's diagonal has a fixed phase.  Rescaling the
    columns of Q by diag(R)/|diag(R)| removes that gauge freedom and yields
    the unique factorization with positive-real R diagonal, which is exactly
    Haar.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    g = rng.generator
    z = g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def block_and_spectrum(u: np.ndarray, n: int) -> tuple[np.ndarray, SpectralDecomposition]:
    """Extract the encoded block A and the spectrum of H = A†A.

    Parameters
    ----------
    u : unitary on n+1 qubits (dimension 2^(n+1)).
    n : number of system qubits; the block is the top-left 2^n square.

    Returns the block together with the eigendecomposition of A†A,
    eigenvalues sorted ascending and clamped to [0, 1].
    """
    dim = 1 << (n + 1)
    if u.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} matrix for n={n}, got {u.shape}")
    if unitarity_defect(u) > 1e-8:
        raise NotUnitaryError("matrix is not unitary within 1e-8")
    half = 1 << n
    a = np.ascontiguousarray(u[:half, :half])
    h = a.conj().T @ a
    w, v = np.linalg.eigh(h)
    if w.min() < -1e-12 or w.max() > 1 + 1e-12:
        raise ValueError(f"eigenvalues of A†A escape [0,1]: [{w.min()}, {w.max()}]")
    w = np.clip(w, 0.0, 1.0)
    return a, SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def spectral_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, ord=2))


# -- statevector kernels ------------------------------------------------------
#
# States (or batches of states) are arrays whose first axis is the Hilbert
# space dimension 2^m.  Extra trailing axes are carried along untouched, so
# the same kernels evolve a single vector, a matrix of basis columns, or a
# batch of trajectories.


def apply_1q(state: np.ndarray, u: np.ndarray, q: int, m: int) -> np.ndarray:
    """Apply a 2x2 gate to qubit q (0 = most significant) of an m-qubit state."""
    dim = 1 << m
    lead = 1 << q
    tail = dim >> (q + 1)
    psi = state.reshape(lead, 2, -1)
    out = np.einsum("ab,ibk->iak", u, psi, optimize=True)
    return out.reshape(state.shape)


def apply_2q(state: np.ndarray, u: np.ndarray, qa: int, qb: int, m: int) -> np.ndarray:
    """Apply a 4x4 gate to qubits (qa, qb) of an m-qubit state.

    The gate's 4-dimensional index is ordered with qa's bit more significant,
    matching the operand order of a two-qubit GateSpec; qa and qb need not be
    sorted or adjacent.
    """
    if qa == qb:
        raise ValueError("two-qubit gate operands must be distinct")
    g = u.reshape(2, 2, 2, 2)
    if qa > qb:
        qa, qb = qb, qa
        g = g.transpose(1, 0, 3, 2)
    dim = 1 << m
    lead = 1 << qa
    mid = 1 << (qb - qa - 1)
    psi = state.reshape(lead, 2, mid, 2, -1)
    out = np.einsum("abcd,icjdk->iajbk", g, psi, optimize=True)
    return out.reshape(state.shape)


def basis_state(m: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << m, dtype=complex)
    psi[index] = 1.0
    return psi
