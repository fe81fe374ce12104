"""Small numerical helpers used across modules."""
import numpy as np
from scipy.optimize import linear_sum_assignment


def as_matrix(value, name, shape=None, dtype=float):
    arr = np.array(value, dtype=dtype)
    if arr.ndim == 1 and shape is not None and len(shape) == 2 and shape[1] == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got shape {arr.shape}")
    if shape is not None:
        for axis, want in enumerate(shape):
            if want is not None and arr.shape[axis] != want:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    return arr


def frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


def sort_eigs(values):
    """Sort complex eigenvalues by real part, then imaginary part."""
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def spectral_abscissa(mat):
    mat = np.asarray(mat)
    if mat.size == 0:
        return -np.inf
    return float(np.max(np.linalg.eigvals(mat).real))


def is_hurwitz(mat):
    return spectral_abscissa(mat) < 0.0


def multiset_distance(a, b):
    """Largest pairing error under the optimal one-to-one matching of two multisets.

    The matching minimizes the total absolute difference; the returned value is
    the worst pair in that matching.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError(f"multisets differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def conjugate_pairs(values, tol):
    """Split a conjugate-closed multiset into real values and upper-half-plane reps.

    Returns ``(reals, uppers)`` in input order, or raises ``ValueError`` if some member has no
    conjugate partner within ``tol``.
    """
    values = list(np.asarray(values, dtype=complex).ravel())
    reals, uppers, lowers = [], [], []
    for v in values:
        if abs(v.imag) <= tol:
            reals.append(v.real)
        elif v.imag > 0:
            uppers.append(v)
        else:
            lowers.append(v)
    if len(uppers) != len(lowers):
        raise ValueError("values are not closed under complex conjugation")
    remaining = list(lowers)
    for u in uppers:
        dists = [abs(u.conjugate() - w) for w in remaining]
        j = int(np.argmin(dists))
        if dists[j] > tol:
            raise ValueError(f"{u} has no conjugate partner")
        remaining.pop(j)
    return reals, uppers


def real_realization(values, tol=1e-12):
    """Real block-diagonal matrix whose spectrum is the conjugate-closed ``values``."""
    scale = max(1.0, float(np.max(np.abs(values), initial=0.0)))
    reals, uppers = conjugate_pairs(values, tol * scale)
    size = len(reals) + 2 * len(uppers)
    out = np.zeros((size, size))
    i = 0
    for r in reals:
        out[i, i] = r
        i += 1
    for z in uppers:
        out[i:i + 2, i:i + 2] = [[z.real, z.imag], [-z.imag, z.real]]
        i += 2
    return out
