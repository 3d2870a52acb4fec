"""Ellipsoid and flat-ellipse shapes, and their shape matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BALL_VOLUME = 4.0 * np.pi / 3.0

_TIE_TOL = 1e-9


def _deterministic_basis(vectors: np.ndarray) -> np.ndarray:
    """Pick a reproducible orthonormal basis of span(vectors).

    The coordinate axes with the largest projections onto the subspace are
    projected and orthonormalised in index order.
    """
    k = vectors.shape[1]
    if k == 1:
        return vectors
    proj = vectors @ vectors.T
    norms = np.linalg.norm(proj, axis=0)
    order = sorted(range(3), key=lambda i: (-round(norms[i], 12), i))[:k]
    basis = []
    for i in sorted(order):
        v = proj[:, i].copy()
        for b in basis:
            v -= (b @ v) * b
        basis.append(v / np.linalg.norm(v))
    return np.column_stack(basis)


def _fix_signs(R: np.ndarray) -> np.ndarray:
    R = R.copy()
    for j in range(3):
        i = int(np.argmax(np.abs(R[:, j]) + 1e-12 * (3 - np.arange(3))))
        if R[i, j] < 0:
            R[:, j] = -R[:, j]
    if np.linalg.det(R) < 0:
        R[:, 2] = -R[:, 2]
    return R


def gauge_fixed_eigh(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with descending eigenvalues and a fixed gauge.

    Eigenvalues that coincide within ``1e-9`` (relative to the largest) share
    an eigenspace whose basis is chosen closest to the coordinate axes.

    Returns
    -------
    lam : (3,) array, descending
    R : (3, 3) rotation with det +1, columns are eigenvectors
    """
    M = 0.5 * (np.asarray(M, dtype=float) + np.asarray(M, dtype=float).T)
    lam, vec = np.linalg.eigh(M)
    lam, vec = lam[::-1], vec[:, ::-1]
    scale = max(abs(lam[0]), 1e-300)
    cols = []
    i = 0
    while i < 3:
        j = i + 1
        while j < 3 and abs(lam[j] - lam[i]) <= _TIE_TOL * scale:
            j += 1
        cols.append(_deterministic_basis(vec[:, i:j]))
        i = j
    R = _fix_signs(np.column_stack(cols))
    return lam, R


@dataclass(frozen=True)
class Shape:
    """Centred ellipsoid ``R D(a) B`` or, with ``a3 == 0``, a flat ellipse.

    Semi-axes are stored in descending order and the rotation columns are the
    corresponding principal directions, ``det R = +1``.
    """

    semiaxes: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.semiaxes, dtype=float).reshape(3)
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise ValueError(f"semi-axes must be finite and nonnegative, got {a}")
        if np.count_nonzero(a == 0) > 1:
            raise ValueError("at most one semi-axis may vanish (segments and points are not admissible)")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-12:
            raise ValueError("rotation is not orthogonal")
        order = np.argsort(-a, kind="stable")
        a, R = a[order], R[:, order]
        if np.linalg.det(R) < 0:
            R[:, 2] = -R[:, 2]
        a.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "semiaxes", a)
        object.__setattr__(self, "rotation", R)

    @classmethod
    def ball(cls, radius: float = 1.0) -> Shape:
        return cls(np.full(3, float(radius)), np.eye(3))

    @classmethod
    def from_matrix(cls, M: np.ndarray) -> Shape:
        """Shape with ``R D(a^2) R^T = M`` (M positive semi-definite)."""
        lam, R = gauge_fixed_eigh(M)
        if lam[-1] < -1e-14 * max(lam[0], 1.0):
            raise ValueError("shape matrix is not positive semi-definite")
        return cls(np.sqrt(np.clip(lam, 0.0, None)), R)

    @property
    def is_degenerate(self) -> bool:
        return bool(self.semiaxes[2] == 0.0)

    @property
    def matrix(self) -> np.ndarray:
        R, a = self.rotation, self.semiaxes
        M = (R * a**2) @ R.T
        return 0.5 * (M + M.T)

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[:, 2]

    @property
    def volume(self) -> float:
        return BALL_VOLUME * float(np.prod(self.semiaxes))

    @property
    def aspect_ratio(self) -> float:
        return float(self.semiaxes[2] / self.semiaxes[0])

    def to_unit_ball(self, x: np.ndarray) -> np.ndarray:
        """Map points to the unit-ball frame, ``y = D(a)^-1 R^T x``."""
        if self.is_degenerate:
            raise ValueError("flat shapes have no unit-ball frame")
        return (np.asarray(x, dtype=float) @ self.rotation) / self.semiaxes

    def from_unit_ball(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) * self.semiaxes) @ self.rotation.T

    def rotated(self, Q: np.ndarray) -> Shape:
        return Shape(self.semiaxes, np.asarray(Q) @ self.rotation)

    def to_dict(self) -> dict:
        return {
            "semiaxes": [float(v) for v in self.semiaxes],
            "rotation": [[float(v) for v in row] for row in self.rotation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Shape:
        return cls(np.asarray(d["semiaxes"], dtype=float), np.asarray(d.get("rotation", np.eye(3)), dtype=float))


def as_shape_matrix(M, *, strict: bool = True) -> np.ndarray:
    """Validate a symmetric positive-definite 3x3 matrix."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"shape matrix must be 3x3, got {M.shape}")
    if np.max(np.abs(M - M.T)) > 1e-14 * max(1.0, np.max(np.abs(M))):
        raise ValueError("shape matrix is not symmetric")
    M = 0.5 * (M + M.T)
    if strict:
        try:
            np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            raise ValueError("shape matrix is not positive definite") from None
    return M
