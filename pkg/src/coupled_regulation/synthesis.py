"""Feedback-gain synthesis for the agent dynamics ``x' = A x + B u``.

Two routes produce a gain ``F`` used as ``u_i = F (sum_j a_ij eta_j - d_i eta_i)``:

* ``positive_real_gain``: ``F = k B^T X`` from the Riccati equation
  ``A^T X + X A - k^2 X B B^T X + Q = 0``.  With ``M = k (Z + I)`` and
  ``Z + Z^T > 0`` the coupled closed loop is stable for any such network.
* ``assign_gain``: ``F = B2^-1 V^-1 Sigma V [K I]`` for plants with
  ``B = [0; B2]``.  ``K`` places the slow block ``A11 - A12 K`` on the
  requested dominant poles; as the self-gain ``d`` grows the spectrum of
  ``A - d B F`` approaches those poles plus ``-d sigma_j``.

The certificate helpers check the positive-real property of the Riccati gain
on the imaginary axis and the non-singularity of ``I + M1 M2`` for matrices
with nonnegative / positive Hermitian parts.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
from scipy.signal import place_poles

from ._linalg import (as_matrix, conjugate_pairs, frozen, is_hurwitz, multiset_distance,
                      real_realization)
from .errors import (NumericalError, PlacementError, PreconditionError, SynthesisError,
                     ValidationError)

CARE_RTOL = 1e-8
PLACEMENT_TOL = 1e-8
PR_TOL = 1e-10
DET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Plant:
    """State matrix ``A`` (n x n) and input matrix ``B = [0; B2]`` (n x m)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        try:
            a = as_matrix(self.a, "A")
            b = as_matrix(self.b, "B", shape=(a.shape[0], None))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        n, m = b.shape
        if a.shape != (n, n):
            raise ValidationError(f"A must be square, got {a.shape}")
        if not 1 <= m <= n:
            raise ValidationError(f"B must have between 1 and n={n} columns, got {m}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValidationError("A and B must be finite")
        if np.any(b[:n - m] != 0):
            raise ValidationError(f"the top {n - m} rows of B must be zero")
        b2 = b[n - m:]
        if np.linalg.matrix_rank(b2) < m:
            raise ValidationError("the bottom m x m block B2 of B is singular")
        object.__setattr__(self, "a", frozen(a))
        object.__setattr__(self, "b", frozen(b))

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def m(self):
        return self.b.shape[1]

    @property
    def a11(self):
        r = self.n - self.m
        return self.a[:r, :r]

    @property
    def a12(self):
        r = self.n - self.m
        return self.a[:r, r:]

    @property
    def a21(self):
        r = self.n - self.m
        return self.a[r:, :r]

    @property
    def a22(self):
        r = self.n - self.m
        return self.a[r:, r:]

    @property
    def b2(self):
        return self.b[self.n - self.m:]

    def uncontrollable_modes(self, stable_too=False):
        """Eigenvalues of ``A`` failing the PBH rank test (unstable ones only by default)."""
        modes = []
        for lam in np.linalg.eigvals(self.a):
            if not stable_too and lam.real < 0:
                continue
            pbh = np.hstack([self.a - lam * np.eye(self.n), self.b])
            if np.linalg.matrix_rank(pbh) < self.n:
                modes.append(complex(lam))
        return modes

    def is_stabilizable(self):
        return not self.uncontrollable_modes()


@dataclass(frozen=True, eq=False)
class GainSpec:
    """Dominant-pole targets, fast-mode rates and mixing matrix for ``assign_gain``."""

    dominant_poles: np.ndarray
    sigmas: np.ndarray
    v: np.ndarray = None

    def __post_init__(self):
        poles = np.array(self.dominant_poles, dtype=complex).ravel()
        sigmas = np.array(self.sigmas, dtype=float).ravel()
        if np.any(poles.real >= 0):
            bad = poles[poles.real >= 0][0]
            raise ValidationError(f"dominant pole {bad} is not in the open left half plane")
        scale = max(1.0, float(np.max(np.abs(poles), initial=0.0)))
        try:
            conjugate_pairs(poles, 1e-12 * scale)
        except ValueError as exc:
            raise ValidationError(f"dominant poles: {exc}") from None
        if np.any(~(sigmas > 0)):
            raise ValidationError(f"sigmas must be positive, got {sigmas}")
        v = np.eye(sigmas.size) if self.v is None else np.array(self.v, dtype=float)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        if v.shape != (sigmas.size, sigmas.size):
            raise ValidationError(f"V must be {sigmas.size}x{sigmas.size}, got {v.shape}")
        if not np.linalg.cond(v) < 1e12:
            raise PreconditionError("mixing matrix V is singular")
        object.__setattr__(self, "dominant_poles", frozen(poles))
        object.__setattr__(self, "sigmas", frozen(sigmas))
        object.__setattr__(self, "v", frozen(v))

    @property
    def sigma(self):
        return np.diag(self.sigmas)


@dataclass(frozen=True, eq=False)
class FeedbackGain:
    f: np.ndarray
    k_reduced: np.ndarray = None
    provenance: str = "explicit"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "f", frozen(np.atleast_2d(np.array(self.f, dtype=float))))


@dataclass(frozen=True, eq=False)
class RiccatiSolution:
    x: np.ndarray
    k: float
    q: np.ndarray
    residual: float


def care_residual(a, b, k, q, x):
    return a.T @ x + x @ a - k**2 * x @ b @ b.T @ x + q


def _check_weight(q, n):
    q = as_matrix(q, "Q", shape=(n, n))
    if np.max(np.abs(q - q.T)) > 1e-12 * max(1.0, np.max(np.abs(q))):
        raise PreconditionError("Q must be symmetric")
    q = (q + q.T) / 2
    if not np.linalg.eigvalsh(q)[0] > 0:
        raise PreconditionError("Q must be positive definite")
    return q


def solve_care(plant, k, q=None, max_iter=50):
    """Stabilizing solution of ``A^T X + X A - k^2 X B B^T X + Q = 0``.

    Stable invariant subspace of the Hamiltonian (ordered real Schur form),
    then Newton-Kleinman refinement until the residual stops improving.
    """
    if not k > 0:
        raise PreconditionError(f"k must be positive, got {k}")
    a, b, n = plant.a, plant.b, plant.n
    q = np.eye(n) if q is None else _check_weight(q, n)
    bad = plant.uncontrollable_modes()
    if bad:
        raise SynthesisError(f"(A, B) is not stabilizable; uncontrollable modes {bad}")

    s = k**2 * b @ b.T
    ham = np.block([[a, -s], [-q, -a.T]])
    _, u, sdim = la.schur(ham, output="real", sort="lhp")
    if sdim != n:
        raise NumericalError(f"Hamiltonian has {sdim} stable eigenvalues, expected {n}")
    u11, u21 = u[:n, :n], u[n:, :n]
    if np.linalg.cond(u11) > 1e14:
        raise NumericalError("stable invariant subspace is not a graph; U11 singular")
    x = la.solve(u11.T, u21.T).T
    x = (x + x.T) / 2

    qscale = float(np.max(np.abs(q)))
    res = float(np.max(np.abs(care_residual(a, b, k, q, x))))
    for _ in range(max_iter):
        acl = a - s @ x
        if not is_hurwitz(acl):
            break
        # correction form keeps the Lyapunov error relative to the step, not to X
        delta = la.solve_continuous_lyapunov(acl.T, -care_residual(a, b, k, q, x))
        x_new = x + (delta + delta.T) / 2
        res_new = float(np.max(np.abs(care_residual(a, b, k, q, x_new))))
        if not res_new < res:
            break
        x, res = x_new, res_new
        if res <= 1e-14 * qscale:
            break

    if res > CARE_RTOL * qscale:
        raise NumericalError(f"CARE residual {res:.3g} above {CARE_RTOL:g} * |Q|", residual=res)
    if not np.linalg.eigvalsh(x)[0] > 0:
        raise NumericalError("CARE solution is not positive definite", residual=res)
    if not is_hurwitz(a - s @ x):
        raise NumericalError("CARE solution is not stabilizing", residual=res)
    return RiccatiSolution(frozen(x), float(k), frozen(q), res)


def positive_real_gain(plant, kz, q=None):
    """``F = k B^T X`` so that ``A - d B F`` is Hurwitz for every ``d >= k``.

    The sign is chosen for the regulator ``u_i = -d_i F eta_i``; the
    equivalent convention with ``F' = -F`` pairs with ``A + d B F'``.
    """
    k = kz.k if hasattr(kz, "k") else float(kz)
    sol = solve_care(plant, k, q)
    f = k * plant.b.T @ sol.x
    for d in (k, 2 * k, 10 * k):
        if not is_hurwitz(plant.a - d * plant.b @ f):
            raise SynthesisError(f"A - d B F is not Hurwitz at d = {d:.6g}")
    meta = {
        "riccati": sol,
        "sign_convention": "F = +k B^T X, closed loop A - d B F",
        "alternate_sign": "F' = -k B^T X, closed loop A + d B F'",
    }
    return FeedbackGain(f, None, "positive_real", meta)


@dataclass(frozen=True, eq=False)
class PositiveRealCertificate:
    passed: bool
    hurwitz: bool
    min_hermitian_eig: float = None
    worst_frequency: float = None
    offending_eigenvalue: complex = None
    frequencies: np.ndarray = None


def frequency_grid(n_points=200, w_min=1e-4, w_max=1e4):
    return np.concatenate([[0.0], np.logspace(np.log10(w_min), np.log10(w_max), n_points)])


def check_positive_real(plant, gain, k, omegas=None):
    """Boundary test of ``T(s) = F (sI - A + k B F)^-1 k B`` on the imaginary axis."""
    f = gain.f if isinstance(gain, FeedbackGain) else np.atleast_2d(gain)
    acl = plant.a - k * plant.b @ f
    eigs = np.linalg.eigvals(acl)
    worst = eigs[np.argmax(eigs.real)]
    if not worst.real < 0:
        return PositiveRealCertificate(False, False, offending_eigenvalue=complex(worst))
    omegas = frequency_grid() if omegas is None else np.asarray(omegas, dtype=float)
    kb = k * plant.b
    eye = np.eye(plant.n)
    mins = np.empty(omegas.size)
    for i, w in enumerate(omegas):
        t = f @ np.linalg.solve(1j * w * eye - acl, kb)
        mins[i] = np.linalg.eigvalsh(t + t.conj().T)[0]
    j = int(np.argmin(mins))
    return PositiveRealCertificate(bool(mins[j] >= -PR_TOL), True, float(mins[j]),
                                   float(omegas[j]), frequencies=frozen(omegas))


@dataclass(frozen=True)
class DetCertificate:
    determinant: complex
    verdict: bool


def det_certificate(m1, m2):
    """Check ``det(I + M1 M2) != 0`` given ``M1 + M1^* >= 0`` and ``M2 + M2^* > 0``."""
    m1 = np.atleast_2d(np.asarray(m1, dtype=complex))
    m2 = np.atleast_2d(np.asarray(m2, dtype=complex))
    if m1.shape != m2.shape or m1.shape[0] != m1.shape[1]:
        raise ValidationError(f"M1 {m1.shape} and M2 {m2.shape} must be square and equal-sized")
    h1 = np.linalg.eigvalsh(m1 + m1.conj().T)[0]
    if h1 < -1e-12 * max(1.0, np.max(np.abs(m1))):
        raise PreconditionError(f"M1 + M1^* is not positive semidefinite (min eig {h1:.3g})")
    h2 = np.linalg.eigvalsh(m2 + m2.conj().T)[0]
    if not h2 > 0:
        raise PreconditionError(f"M2 + M2^* is not positive definite (min eig {h2:.3g})")
    det = complex(np.linalg.det(np.eye(m1.shape[0]) + m1 @ m2))
    return DetCertificate(det, abs(det) > DET_TOL)


def _ackermann(a, b, targets):
    n = a.shape[0]
    ctrb = np.hstack([np.linalg.matrix_power(a, i) @ b for i in range(n)])
    coeffs = np.real(np.poly(targets))
    phi = np.zeros_like(a)
    for c in coeffs:
        phi = phi @ a + c * np.eye(n)
    last = np.zeros(n)
    last[-1] = 1.0
    return np.linalg.solve(ctrb.T, last)[None, :] @ phi


def place_reduced(a11, a12, targets):
    """Real ``K`` with ``eig(A11 - A12 K)`` equal to the conjugate-closed ``targets``.

    Full-row-rank ``A12``: ``K = pinv(A12) (A11 - L)`` with ``L`` a real
    realization of the targets.  Single input: Ackermann's formula.  Otherwise
    scipy's robust multi-input placement.  The result is always round-trip
    checked.
    """
    a11 = np.atleast_2d(np.asarray(a11, dtype=float))
    a12 = np.atleast_2d(np.asarray(a12, dtype=float))
    r, m = a12.shape
    targets = np.asarray(targets, dtype=complex).ravel()
    if a11.shape != (r, r):
        raise ValidationError(f"A11 {a11.shape} and A12 {a12.shape} are inconsistent")
    if targets.size != r:
        raise ValidationError(f"need {r} targets, got {targets.size}")
    if r == 0:
        return np.zeros((m, 0))
    scale = max(1.0, float(np.max(np.abs(a11))), float(np.max(np.abs(targets))))
    try:
        conjugate_pairs(targets, 1e-12 * scale)
    except ValueError as exc:
        raise ValidationError(f"targets: {exc}") from None

    open_loop = np.linalg.eigvals(a11)
    for s in targets:
        if np.min(np.abs(open_loop - s)) <= 1e-9 * scale:
            raise PreconditionError(f"target {s} is an eigenvalue of A11")
    for lam in open_loop:
        pbh = np.hstack([a11 - lam * np.eye(r), a12])
        if np.linalg.matrix_rank(pbh) < r:
            raise PlacementError(f"mode {lam} of A11 is uncontrollable through A12", mode=lam)

    def miss(k):
        return multiset_distance(np.linalg.eigvals(a11 - a12 @ k), targets)

    if np.linalg.matrix_rank(a12) == r:
        k = np.linalg.pinv(a12) @ (a11 - real_realization(targets))
    elif m == 1:
        k = _ackermann(a11, a12, targets)
        if miss(k) > PLACEMENT_TOL:
            # the Krylov matrix can be poorly conditioned; keep the better of the two
            try:
                alt = place_poles(a11, a12, targets).gain_matrix
            except ValueError:
                alt = k
            k = min((k, alt), key=miss)
    else:
        try:
            k = place_poles(a11, a12, targets).gain_matrix
        except ValueError as exc:
            raise PlacementError(str(exc)) from None

    err = miss(k)
    if err > PLACEMENT_TOL * scale:
        raise PlacementError(f"placed spectrum misses the targets by {err:.3g}")
    return k


def assign_gain(plant, spec):
    """``F = B2^-1 V^-1 Sigma V [K I]`` with ``K`` from ``place_reduced``."""
    r, m = plant.n - plant.m, plant.m
    if spec.dominant_poles.size != r:
        raise ValidationError(f"plant needs {r} dominant poles, spec has {spec.dominant_poles.size}")
    if spec.sigmas.size != m:
        raise ValidationError(f"plant needs {m} sigmas, spec has {spec.sigmas.size}")
    k = place_reduced(plant.a11, plant.a12, spec.dominant_poles)
    mix = np.linalg.solve(spec.v, spec.sigma @ spec.v)
    f = np.linalg.solve(plant.b2, mix @ np.hstack([k, np.eye(m)]))
    return FeedbackGain(f, frozen(k), "pole_assignment", {"spec": spec})


def predict_spectrum(plant, spec, d):
    """Large-``d`` limit of ``eig(A - d B F)``: the dominant poles and ``-d sigma_j``."""
    return np.concatenate([np.asarray(spec.dominant_poles, dtype=complex),
                           -d * np.asarray(spec.sigmas, dtype=complex)])


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    d_values: np.ndarray
    hurwitz: tuple
    eigenvalues: tuple
    dominant_errors: np.ndarray = None
    fast_relative_errors: np.ndarray = None
    monotone: bool = None
    ties: tuple = ()


def _greedy_match(eigs, targets, used, tol):
    """Nearest unused eigenvalue for each target in order; returns errors and ties."""
    errors, ties = [], []
    for t in targets:
        dist = np.abs(eigs - t)
        dist[list(used)] = np.inf
        j = int(np.argmin(dist))
        others = np.delete(dist, j)
        if others.size and np.any(np.abs(others - dist[j]) <= tol * max(1.0, abs(t))):
            ties.append(complex(t))
        used.add(j)
        errors.append(dist[j])
    return np.array(errors), ties


def verify_convergence(plant, gain, spec, d_sequence):
    """Compare ``eig(A - d B F)`` with ``predict_spectrum`` along increasing ``d``.

    With ``spec=None`` only the Hurwitz verdicts are reported.  Dominant-pole
    errors must be non-increasing over the last half of the sequence.
    """
    ds = np.asarray(d_sequence, dtype=float).ravel()
    if ds.size == 0 or np.any(ds <= 0) or np.any(np.diff(ds) <= 0):
        raise PreconditionError("d_sequence must be positive and strictly increasing")
    f = gain.f if isinstance(gain, FeedbackGain) else np.atleast_2d(gain)
    eig_list, hurwitz = [], []
    for d in ds:
        eigs = np.linalg.eigvals(plant.a - d * plant.b @ f)
        eig_list.append(frozen(eigs))
        hurwitz.append(bool(np.max(eigs.real) < 0))
    if spec is None:
        return ConvergenceReport(frozen(ds), tuple(hurwitz), tuple(eig_list))

    dom_err, fast_err, ties = [], [], []
    for d, eigs in zip(ds, eig_list):
        used = set()
        dom = sorted(spec.dominant_poles, key=lambda z: (z.real, z.imag))
        e1, t1 = _greedy_match(eigs, dom, used, 1e-12)
        fast = -d * spec.sigmas
        e2, t2 = _greedy_match(eigs, fast, used, 1e-12)
        dom_err.append(e1.max() if e1.size else 0.0)
        fast_err.append((e2 / (d * spec.sigmas)).max() if e2.size else 0.0)
        ties.extend((float(d), z) for z in t1 + t2)
    dom_err = np.array(dom_err)
    tail = dom_err[ds.size // 2:]
    monotone = bool(np.all(np.diff(tail) <= 0))
    return ConvergenceReport(frozen(ds), tuple(hurwitz), tuple(eig_list), frozen(dom_err),
                             frozen(np.array(fast_err)), monotone, tuple(ties))
