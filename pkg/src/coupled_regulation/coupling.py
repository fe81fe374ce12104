"""Physical-layer coupling matrix M = D - A and its Gershgorin-type certificates.

``CouplingNetwork`` holds the raw weights, ``build_coupling`` turns them into a
``CouplingMatrix``; the remaining functions analyse that matrix:

* ``stability_margins``: per-agent slack of the disc condition that makes
  ``M + M^T`` positive definite.
* ``diagonalizability_check``: non-overlapping discs of ``M`` in ascending
  order of self-gain, which forces distinct real eigenvalues.
* ``compute_kz``: the split ``M = k (Z + I)`` with ``Z + Z^T > 0``.
* ``diagonalize``: the modal transform ``T M T^-1 = diag(p)``.
"""
from dataclasses import dataclass

import numpy as np

from ._linalg import frozen
from .errors import DegeneracyError, PreconditionError, ValidationError

#: ``k`` is taken as this fraction of ``lambda_min(M + M^T) / 2``.
KZ_MARGIN = 0.99
LAPLACIAN_ATOL = 1e-12
DIAG_RESIDUAL_RTOL = 1e-10
MAX_EIGVEC_COND = 1e12


@dataclass(frozen=True, eq=False)
class CouplingNetwork:
    """Coupling weights ``a_ij`` and self-gains ``d_i`` of N agents."""

    adjacency: np.ndarray
    self_gains: np.ndarray

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=float)
        self_gains = np.array(self.self_gains, dtype=float).ravel()
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValidationError(f"adjacency must be square, got shape {adjacency.shape}")
        if adjacency.shape[0] != self_gains.size:
            raise ValidationError(
                f"adjacency is {adjacency.shape[0]}x{adjacency.shape[0]} "
                f"but {self_gains.size} self-gains were given")
        object.__setattr__(self, "adjacency", frozen(adjacency))
        object.__setattr__(self, "self_gains", frozen(self_gains))
        validate_network(self)

    @property
    def n_agents(self):
        return self.self_gains.size

    @classmethod
    def scaled(cls, adjacency, self_gains, rho=1.0, epsilon=1.0):
        """Network with self-gains scaled by ``rho`` and adjacency by ``epsilon``."""
        return cls(epsilon * np.asarray(adjacency, dtype=float),
                   rho * np.asarray(self_gains, dtype=float))

    @classmethod
    def uncoupled(cls, self_gains):
        d = np.asarray(self_gains, dtype=float).ravel()
        return cls(np.zeros((d.size, d.size)), d)


def validate_network(net):
    a, d = net.adjacency, net.self_gains
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
        raise ValidationError("coupling weights must be finite")
    for i, j in zip(*np.nonzero(a < 0)):
        raise ValidationError(f"a[{i},{j}] = {a[i, j]} is negative")
    for i in np.nonzero(np.diag(a) != 0)[0]:
        raise ValidationError(f"a[{i},{i}] = {a[i, i]} must be zero")
    for i in np.nonzero(d <= 0)[0]:
        raise ValidationError(f"d[{i}] = {d[i]} must be positive")


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    m: np.ndarray
    row_radii: np.ndarray
    symmetric_radii: np.ndarray

    @property
    def n_agents(self):
        return self.m.shape[0]

    @property
    def self_gains(self):
        return np.diag(self.m).copy()

    @property
    def adjacency(self):
        a = -self.m.copy()
        np.fill_diagonal(a, 0.0)
        return a


def build_coupling(net):
    validate_network(net)
    a, d = net.adjacency, net.self_gains
    m = np.diag(d) - a
    row = a.sum(axis=1)
    sym = row + a.sum(axis=0)
    return CouplingMatrix(frozen(m), frozen(row), frozen(sym))


def _matrix(cm):
    return cm.m if isinstance(cm, CouplingMatrix) else np.asarray(cm, dtype=float)


def is_laplacian(cm):
    return bool(np.all(np.abs(cm.self_gains - cm.row_radii) <= LAPLACIAN_ATOL))


@dataclass(frozen=True, eq=False)
class StabilityMargins:
    margins: np.ndarray
    verdict: bool


def stability_margins(cm):
    """Per-agent slack ``d_i - sum_j (a_ij + a_ji) / 2``; verdict needs every slack > 0."""
    margins = cm.self_gains - cm.symmetric_radii / 2.0
    return StabilityMargins(frozen(margins), bool(np.all(margins > 0)))


def symmetric_min_eig(cm):
    m = _matrix(cm)
    return float(np.linalg.eigvalsh(m + m.T)[0])


@dataclass(frozen=True, eq=False)
class DiagonalizabilityCheck:
    """Outcome of the non-overlapping disc test.

    ``verdict`` False means the sufficient condition is not met; ``M`` may still
    be diagonalizable.  ``order`` lists 0-based agent indices by ascending
    self-gain.
    """

    verdict: bool
    order: tuple

    @property
    def condition_met(self):
        return self.verdict


def diagonalizability_check(cm):
    d, r = cm.self_gains, cm.row_radii
    order = tuple(int(i) for i in np.lexsort((np.arange(d.size), d)))
    ok = d[order[0]] > r[order[0]]
    for lo, hi in zip(order[:-1], order[1:]):
        ok = ok and (d[hi] - d[lo] > r[hi] + r[lo])
    return DiagonalizabilityCheck(bool(ok), order)


@dataclass(frozen=True, eq=False)
class KZDecomposition:
    k: float
    z: np.ndarray

    def reconstruct(self):
        return self.k * (self.z + np.eye(self.z.shape[0]))


def compute_kz(cm, margin=KZ_MARGIN):
    m = _matrix(cm)
    lam = symmetric_min_eig(m)
    if not lam > 0:
        raise PreconditionError(
            f"lambda_min(M + M^T) = {lam:.6g} is not positive; no k > 0 exists")
    k = margin * lam / 2.0
    z = (m - k * np.eye(m.shape[0])) / k
    return KZDecomposition(float(k), frozen(z))


@dataclass(frozen=True, eq=False)
class Diagonalization:
    t: np.ndarray
    p: np.ndarray

    @property
    def t_inv(self):
        return np.linalg.inv(self.t)


def diagonalize(cm):
    """Real modal decomposition ``T M T^-1 = diag(p)`` with ``p`` ascending.

    Columns of ``T^-1`` are unit eigenvectors whose largest-magnitude entry is
    positive.  Raises ``DegeneracyError`` for complex spectra, near-defective
    matrices, or a reconstruction residual above tolerance.
    """
    m = _matrix(cm)
    scale = max(1.0, float(np.max(np.abs(m))))
    vals, vecs = np.linalg.eig(m)
    if np.any(np.abs(np.imag(vals)) > 1e-12 * scale):
        raise DegeneracyError(f"M has complex eigenvalues: {np.sort_complex(vals)}")
    vals = np.real(vals)
    vecs = np.real(vecs)
    idx = np.argsort(vals, kind="stable")
    vals, vecs = vals[idx], vecs[:, idx]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(vecs.shape[1])])
    cond = np.linalg.cond(vecs)
    if not cond <= MAX_EIGVEC_COND:
        raise DegeneracyError(f"eigenvector matrix condition number {cond:.3g} exceeds "
                              f"{MAX_EIGVEC_COND:.0e}; M is (nearly) defective")
    t = np.linalg.inv(vecs)
    residual = np.max(np.abs(t @ m @ vecs - np.diag(vals)))
    if residual > DIAG_RESIDUAL_RTOL * max(float(np.max(np.abs(m))), np.finfo(float).tiny):
        raise DegeneracyError(f"diagonalization residual {residual:.3g} above tolerance")
    return Diagonalization(frozen(t), frozen(vals))
