"""Dense complex linear algebra for Lagrangian frames.

A frame is a 2n x n complex matrix F = (X; Y) of full rank whose column
span is Lagrangian, i.e. F* J F = 0 with J = [[0, -I], [I, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

RANK_TOL = 1e-9
FRAME_TOL = 1e-10


def symplectic_j(n: int) -> np.ndarray:
    """Return the 2n x 2n standard symplectic matrix."""
    if n < 1:
        raise ConfigError(f"half-dimension must be positive, got {n}")
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]]).astype(complex)


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real positive."""
    v = np.array(vectors, dtype=complex, copy=True)
    if v.ndim == 1:
        k = np.argmax(np.abs(v))
        return v * np.exp(-1j * np.angle(v[k]))
    idx = np.argmax(np.abs(v), axis=-2)
    lead = np.take_along_axis(v, idx[..., None, :], axis=-2)
    return v * np.exp(-1j * np.angle(lead))


def hermitian_eigen(m: np.ndarray, tol: float = 1e-8):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and orthonormal eigenvectors (columns) with
    the phase normalized by :func:`fix_phase`.  Stacked input of shape
    (..., k, k) is accepted.
    """
    m = np.asarray(m, dtype=complex)
    scale = max(float(np.max(np.abs(m))), 1e-300)
    defect = float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2)))))
    if defect > tol * scale:
        raise ConfigError(
            f"matrix is not Hermitian: symmetry defect {defect:.3e} "
            f"relative to size {scale:.3e}")
    h = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    vals, vecs = np.linalg.eigh(h)
    return vals, fix_phase(vecs)


def lagrangian_defect(frame: np.ndarray) -> float:
    """Relative size of F* J F."""
    f = np.asarray(frame, dtype=complex)
    n = f.shape[-1]
    w = np.conj(np.swapaxes(f, -1, -2)) @ symplectic_j(n) @ f
    nrm = np.linalg.norm(f, 2, axis=(-2, -1)) ** 2
    return float(np.max(np.linalg.norm(w, 2, axis=(-2, -1)) / nrm))


def is_lagrangian_frame(frame: np.ndarray, tol: float = RANK_TOL) -> bool:
    """Full-rank test plus the Lagrangian identity F* J F = 0."""
    f = np.asarray(frame, dtype=complex)
    if f.ndim != 2 or f.shape[0] != 2 * f.shape[1]:
        return False
    s = np.linalg.svd(f, compute_uv=False)
    if s[0] == 0 or s[-1] <= tol * s[0]:
        return False
    return lagrangian_defect(f) <= tol


def orthonormalize(frame: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span (works on stacks)."""
    q, _ = np.linalg.qr(np.asarray(frame, dtype=complex))
    return q


def projector(frame: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the column span of a full-rank frame."""
    f = np.asarray(frame, dtype=complex)
    s = np.linalg.svd(f, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise ConfigError("rank-deficient frame")
    q = orthonormalize(f)
    return q @ np.conj(q.T)


def projection_distance(f1: np.ndarray, f2: np.ndarray) -> float:
    """Spectral-norm distance between the two column-span projectors."""
    return float(np.linalg.norm(projector(f1) - projector(f2), 2))


def symplectic_defect(phi: np.ndarray) -> float:
    """Return max |Phi* J Phi - J| over a stack of 2n x 2n matrices."""
    phi = np.asarray(phi, dtype=complex)
    j = symplectic_j(phi.shape[-1] // 2)
    d = np.conj(np.swapaxes(phi, -1, -2)) @ j @ phi - j
    return float(np.max(np.abs(d))) if d.size else 0.0


def lagrangian_from_unitary(w: np.ndarray) -> np.ndarray:
    """Frame (I + W; i(I - W)); every Lagrangian plane arises this way."""
    w = np.asarray(w, dtype=complex)
    eye = np.eye(w.shape[0])
    return np.vstack([eye + w, 1j * (eye - w)])


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_lagrangian(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random Lagrangian frame with a random invertible right factor."""
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) + 2 * np.eye(n)
    return lagrangian_from_unitary(random_unitary(n, rng)) @ g


def null_space(a: np.ndarray, dim: int) -> np.ndarray:
    """Right singular vectors for the ``dim`` smallest singular values."""
    a = np.asarray(a, dtype=complex)
    _, _, vh = np.linalg.svd(a)
    basis = np.conj(vh[-dim:].T)
    return basis


@dataclass(frozen=True)
class LagrangianFrame:
    """Frame (X; Y) tagged with the point (x, lambda) it was computed at."""

    X: np.ndarray
    Y: np.ndarray
    x_position: float = float("nan")
    lam: float = float("nan")

    @classmethod
    def from_matrix(cls, f, x_position=float("nan"), lam=float("nan"),
                    tol: float = 1e-8) -> "LagrangianFrame":
        f = np.asarray(f, dtype=complex)
        if not is_lagrangian_frame(f, tol):
            raise NumericalError(
                f"not a Lagrangian frame (defect {lagrangian_defect(f):.3e})")
        n = f.shape[1]
        return cls(f[:n].copy(), f[n:].copy(), float(x_position), float(lam))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([self.X, self.Y])
