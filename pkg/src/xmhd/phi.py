"""Scalar, dense-matrix and divided-difference evaluation of the phi functions.

phi_0(z) = exp(z) and phi_{l+1}(z) = (phi_l(z) - 1/l!) / z.  These entire
functions are the building blocks of exponential integrators; the routines
here favour accuracy over speed and serve as the correctness oracle for the
iterative (Leja / Krylov) engines.
"""

import math
from dataclasses import dataclass

import numpy as np

#: highest phi order used by any scheme in the package
MAX_ORDER = 4

# Degree-30 truncated Taylor series of exp() is accurate to machine
# precision inside a disc of this radius.
_TAYLOR_DEGREE = 30
_TAYLOR_RADIUS = 3.5

# Below this |z| the downward recursion from exp(z) cancels catastrophically;
# switch to the direct series sum_k z^k / (k+l)!.
_SERIES_SWITCH = 0.5


def _check_order(l):
    if not isinstance(l, (int, np.integer)) or l < 0 or l > MAX_ORDER:
        raise ValueError(f"phi order must be an integer in [0, {MAX_ORDER}], got {l!r}")


def phi_scalar(l, z):
    """Evaluate phi_l(z) for a real or complex scalar z."""
    _check_order(l)
    if abs(z) < _SERIES_SWITCH:
        term = 1.0 / math.factorial(l)
        total = term
        for k in range(1, 64):
            term = term * z / (k + l)
            total = total + term
            if abs(term) <= 1e-16 * abs(total):
                break
        return total
    val = np.exp(z)
    for j in range(l):
        val = (val - 1.0 / math.factorial(j)) / z
    return val


def _expm_taylor(a):
    """exp(a) by scaling and squaring of a truncated Taylor expansion."""
    norm = np.linalg.norm(a, 1)
    s = int(math.ceil(math.log2(max(1.0, norm / _TAYLOR_RADIUS))))
    b = a / (2.0 ** s)
    f = np.eye(a.shape[0])
    for k in range(_TAYLOR_DEGREE, 0, -1):
        f = np.eye(a.shape[0]) + (b @ f) / k
    for _ in range(s):
        f = f @ f
    return f


def phi_dense(l, a):
    """Evaluate the full matrix phi_l(A) for a square real matrix A.

    For l >= 1 the result is read off the exponential of the block matrix

        [[A, I, 0, ...],
         [0, 0, I, ...],
         ...
         [0, 0, 0, ...]]

    whose top-right n-by-n block equals phi_l(A).
    """
    _check_order(l)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("phi_dense requires a square matrix")
    n = a.shape[0]
    if l == 0:
        return _expm_taylor(a)
    dim = n * (l + 1)
    m = np.zeros((dim, dim))
    m[:n, :n] = a
    eye = np.eye(n)
    for k in range(l):
        m[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = eye
    return _expm_taylor(m)[:n, l * n:]


@dataclass(frozen=True)
class DividedDiffTable:
    """Newton divided differences of phi_l at a node sequence."""
    nodes: np.ndarray
    coeffs: np.ndarray
    order: int


def _phi_divided_diffs(l, nodes, subdiag=1.0):
    """First column of phi_l of the bidiagonal node matrix.

    Exploits the identity  phi_l[x_0..x_k] = exp[0,..,0, x_0..x_k]  (l zeros
    prepended), so only the first column of the exponential of a
    lower-bidiagonal matrix Z is needed.  With a constant subdiagonal entry
    sigma, entry (l+k, 0) of exp(Z) equals sigma^(l+k) * phi_l[x_0..x_k];
    the caller rescales.

    The column is computed by time substepping: exp(Z) e_1 equals 2^s
    sequential applications of exp(Z / 2^s), each evaluated as a short
    Taylor series (cheap bidiagonal matvecs).  The substep count keeps the
    scaled norm at or below one, which bounds both the per-entry truncation
    and the cancellation from mixed-sign nodes; it also guarantees reach,
    since a degree-d polynomial of a bidiagonal matrix is zero beyond
    subdiagonal offset d, so the substeps together must span the dimension.
    Divided differences of exp at real nodes are positive, so repeated
    application loses no relative accuracy to cancellation.
    """
    nodes = np.asarray(nodes, dtype=float)
    ext = np.concatenate([np.zeros(l), nodes])
    dim = ext.size
    # 60 terms per substep: entries near the reach edge of a substep keep a
    # wide enough truncation margin for full relative accuracy
    terms = 60
    scale = max(np.max(np.abs(ext)), abs(subdiag), 1e-30)
    s = max(0, int(math.ceil(math.log2(scale))),
            int(math.ceil(math.log2((dim + terms) / terms))))
    diag = ext / 2.0 ** s
    sub = subdiag / 2.0 ** s

    def matvec(w):
        out = diag * w
        out[1:] += sub * w[:-1]
        return out

    col = np.zeros(dim)
    col[0] = 1.0
    for _ in range(2 ** s):
        term = col.copy()
        new = col.copy()
        for k in range(1, terms):
            term = matvec(term) / k
            new += term
        col = new
    return col[l:]


def divided_differences(l, nodes):
    """Newton divided differences of phi_l at the given real nodes.

    Computed through the bidiagonal-matrix route (Opitz), which keeps full
    relative accuracy where the naive recursive difference table loses every
    digit beyond roughly twenty nodes.
    """
    _check_order(l)
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size == 0:
        raise ValueError("divided_differences requires a nonempty 1-d node sequence")
    if nodes.size > 512:
        raise ValueError("node sequence longer than the 512-node oracle scale")
    coeffs = _phi_divided_diffs(l, nodes, subdiag=1.0)
    return DividedDiffTable(nodes=nodes, coeffs=coeffs, order=l)


def newton_eval(table, z):
    """Evaluate the Newton-form polynomial of a DividedDiffTable at z."""
    x = table.nodes
    result = np.full_like(np.asarray(z, dtype=float), table.coeffs[-1])
    for k in range(x.size - 2, -1, -1):
        result = result * (z - x[k]) + table.coeffs[k]
    return result
