"""Gauss-Lobatto-Legendre basis, geometric factors, and the direct Ax oracle.

This module is the numerical ground truth for the rest of the package: the
GLL quadrature rule and differentiation matrix, element-shaped tensor types,
geometry generators, the reference (brute-force) stiffness apply, a dense
assembly helper, and the flop-count model used for Gflops/s reporting.

The reference apply is written so that its per-element floating-point
operation sequence is reproducible bit-for-bit: fixed loop order, fixed
association, no fused operations. Interpreted and compiled versions of the
same kernel are compared against it with zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NumericError, RangeError

__all__ = [
    "GllBasis",
    "ElementField",
    "GeomFactors",
    "legendre_eval",
    "gll_basis",
    "box_geometry",
    "random_spd_geometry",
    "operator_matrices",
    "ax_reference",
    "dense_assemble",
    "flops_model",
]

LX_MIN = 2
LX_MAX = 16

_NEWTON_TOL = 1e-14
_NEWTON_MAX_ITER = 100


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class GllBasis:
    """Quadrature points/weights and differentiation matrix for one order.

    Attributes:
        lx: points per dimension (polynomial order plus one).
        order: polynomial order, lx - 1.
        points: lx nodes in [-1, 1], strictly increasing, endpoints exact.
        weights: lx positive quadrature weights summing to 2.
        deriv: lx-by-lx matrix D with D[i][j] = l_j'(points[i]).
    """

    lx: int
    order: int
    points: np.ndarray
    weights: np.ndarray
    deriv: np.ndarray


@dataclass(frozen=True)
class ElementField:
    """A rank-4 nodal field, indexed [element][k][j][i] with i fastest.

    data is validated to shape (nel, lx, lx, lx), finite, float64, and made
    read-only so instances can be shared freely.
    """

    nel: int
    lx: int
    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.shape != (self.nel, self.lx, self.lx, self.lx):
            raise ContractError(
                f"field data has shape {a.shape}, expected "
                f"{(self.nel, self.lx, self.lx, self.lx)}"
            )
        if not np.all(np.isfinite(a)):
            raise ContractError("field data contains non-finite values")
        object.__setattr__(self, "data", _freeze(a))

    @classmethod
    def from_array(cls, data: np.ndarray) -> "ElementField":
        a = np.asarray(data, dtype=np.float64)
        if a.ndim != 4 or a.shape[1] != a.shape[2] or a.shape[2] != a.shape[3]:
            raise ContractError(f"expected (nel, lx, lx, lx) array, got {a.shape}")
        return cls(nel=a.shape[0], lx=a.shape[1], data=a)

    @classmethod
    def zeros(cls, nel: int, lx: int) -> "ElementField":
        return cls(nel=nel, lx=lx, data=np.zeros((nel, lx, lx, lx)))


@dataclass(frozen=True)
class GeomFactors:
    """Per-gridpoint symmetric metric terms and coefficient field.

    The six g-tensors are the entries of a symmetric 3x3 matrix per point
    (quadrature weights folded in); h1 multiplies the whole gradient
    contraction. All seven share the (nel, lx, lx, lx) shape.
    """

    g11: np.ndarray
    g22: np.ndarray
    g33: np.ndarray
    g12: np.ndarray
    g13: np.ndarray
    g23: np.ndarray
    h1: np.ndarray

    def __post_init__(self):
        shape = np.asarray(self.h1).shape
        if len(shape) != 4 or shape[1:] != (shape[1],) * 3:
            raise ContractError(f"expected (nel, lx, lx, lx) tensors, got {shape}")
        for name in ("g11", "g22", "g33", "g12", "g13", "g23", "h1"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            if a.shape != shape:
                raise ContractError(
                    f"geometry tensor {name} has shape {a.shape}, expected {shape}"
                )
            if not np.all(np.isfinite(a)):
                raise ContractError(f"geometry tensor {name} has non-finite values")
            object.__setattr__(self, name, _freeze(a))

    @property
    def nel(self) -> int:
        return self.h1.shape[0]

    @property
    def lx(self) -> int:
        return self.h1.shape[1]


def legendre_eval(n: int, x):
    """Evaluate the Legendre polynomial L_n and its derivative at x.

    Uses the three-term recurrence for the value and the companion
    recurrence L_k' = x*L_{k-1}' + k*L_{k-1} for the derivative. Accepts a
    scalar or an ndarray; |x| must not exceed 1.

    Returns:
        (value, derivative), matching the shape of x.
    """
    if n < 0:
        raise RangeError(f"polynomial degree must be >= 0, got {n}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(xa) > 1.0):
        raise RangeError("evaluation point outside [-1, 1]")
    p_prev = np.ones_like(xa)
    d_prev = np.zeros_like(xa)
    if n == 0:
        out = (p_prev, d_prev)
    else:
        p = xa.copy()
        d = np.ones_like(xa)
        for k in range(2, n + 1):
            p_next = ((2 * k - 1) * xa * p - (k - 1) * p_prev) / k
            d_next = xa * d + k * p
            p_prev, p = p, p_next
            d = d_next
        out = (p, d)
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return float(out[0]), float(out[1])
    return out


def _legendre_second_derivative(n: int, x: np.ndarray) -> np.ndarray:
    # From the Legendre ODE: (1-x^2) L'' = 2x L' - n(n+1) L, valid for |x| < 1.
    p, d = legendre_eval(n, x)
    return (2.0 * x * d - n * (n + 1) * p) / (1.0 - x * x)


def gll_basis(lx: int) -> GllBasis:
    """Build the GLL rule and differentiation matrix for lx nodes.

    Interior nodes are the roots of L_N' (N = lx-1), located by damped
    Newton iteration from Chebyshev-Lobatto starting guesses; the left half
    is solved and mirrored so the node set is exactly antisymmetric.
    """
    if not isinstance(lx, (int, np.integer)) or not (LX_MIN <= lx <= LX_MAX):
        raise RangeError(f"lx must be an integer in [{LX_MIN}, {LX_MAX}], got {lx!r}")
    n = lx - 1
    points = np.empty(lx, dtype=np.float64)
    points[0] = -1.0
    points[-1] = 1.0
    half = (lx - 2) // 2
    if lx % 2 == 1:
        points[lx // 2] = 0.0
    # Chebyshev-Lobatto guesses for the left-half interior nodes.
    for idx in range(1, half + 1):
        x = -np.cos(np.pi * idx / n)
        spacing = np.pi / n
        for _ in range(_NEWTON_MAX_ITER):
            _, d = legendre_eval(n, x)
            dd = _legendre_second_derivative(n, np.asarray(x))
            step = d / dd
            # Damping: a Newton step may not jump past the neighboring guess.
            step = float(np.clip(step, -0.5 * spacing, 0.5 * spacing))
            x -= step
            if abs(step) < 1e-16:
                break
        else:
            raise NumericError(f"GLL node iteration failed to converge for lx={lx}")
        _, d = legendre_eval(n, x)
        if abs((1.0 - x * x) * d) >= _NEWTON_TOL:
            raise NumericError(f"GLL node residual too large for lx={lx}")
        points[idx] = x
        points[lx - 1 - idx] = -x

    values, _ = legendre_eval(n, points)
    weights = 2.0 / (n * (n + 1) * values * values)

    deriv = np.zeros((lx, lx), dtype=np.float64)
    for i in range(lx):
        for j in range(lx):
            if i != j:
                deriv[i, j] = (values[i] / values[j]) / (points[i] - points[j])
    deriv[0, 0] = -n * (n + 1) / 4.0
    deriv[-1, -1] = n * (n + 1) / 4.0

    return GllBasis(
        lx=lx,
        order=n,
        points=_freeze(points),
        weights=_freeze(weights),
        deriv=_freeze(deriv),
    )


def box_geometry(nel: int, lx: int, h: float) -> GeomFactors:
    """Geometric factors for identical axis-aligned cube elements of side h.

    The diagonal metric entries carry the quadrature weights:
    g11 = g22 = g33 = w_i * w_j * w_k * (h/2); cross terms vanish; h1 = 1.
    """
    if nel < 1:
        raise RangeError(f"nel must be >= 1, got {nel}")
    if h <= 0:
        raise RangeError(f"element size must be positive, got {h}")
    basis = gll_basis(lx)
    w = basis.weights
    diag = (h / 2.0) * (w[:, None, None] * w[None, :, None] * w[None, None, :])
    diag = np.broadcast_to(diag, (nel, lx, lx, lx)).copy()
    zero = np.zeros((nel, lx, lx, lx))
    return GeomFactors(
        g11=diag,
        g22=diag.copy(),
        g33=diag.copy(),
        g12=zero,
        g13=zero.copy(),
        g23=zero.copy(),
        h1=np.ones((nel, lx, lx, lx)),
    )


def random_spd_geometry(nel: int, lx: int, seed: int) -> GeomFactors:
    """Seeded random geometry whose per-point metric blocks are SPD.

    Each 3x3 block is M @ M.T + 0.1*I for M drawn uniformly from [-1, 1);
    h1 is uniform in (0.5, 1.5). Identical seeds give bit-identical output.
    """
    if nel < 1 or lx < LX_MIN:
        raise RangeError(f"invalid geometry sizes nel={nel}, lx={lx}")
    rng = np.random.default_rng(seed)
    m = rng.uniform(-1.0, 1.0, size=(nel, lx, lx, lx, 3, 3))
    g = np.einsum("...ab,...cb->...ac", m, m) + 0.1 * np.eye(3)
    h1 = rng.uniform(0.5, 1.5, size=(nel, lx, lx, lx))
    return GeomFactors(
        g11=g[..., 0, 0],
        g22=g[..., 1, 1],
        g33=g[..., 2, 2],
        g12=g[..., 0, 1],
        g13=g[..., 0, 2],
        g23=g[..., 1, 2],
        h1=h1,
    )


def operator_matrices(basis: GllBasis) -> tuple[np.ndarray, np.ndarray]:
    """The two matrix layouts bound to the kernel's dxd... and dxtd... slots.

    The first stage contracts over the leading index of its matrix
    (sum_l m[l, i] * u[l]), so handing it deriv transposed makes that
    contraction the nodal derivative at point i, which annihilates
    constants. The second stage gets deriv itself, i.e. the transpose of
    the first-stage array, completing the symmetric weak-form apply.
    """
    return basis.deriv.T.copy(), basis.deriv.copy()


def ax_reference(u: ElementField, basis: GllBasis, g: GeomFactors) -> ElementField:
    """Brute-force stiffness apply; the oracle everything else must match.

    Stage 1 accumulates the three directional derivative fields with a
    sequential loop over l; the per-point combine scales them by the metric
    block and h1; stage 2 accumulates the output with the transposed
    matrices, adding the three directional terms in fixed order per l. The
    association of every floating-point operation is fixed, making the
    result bit-reproducible.
    """
    if u.nel != g.nel or u.lx != g.lx or u.lx != basis.lx:
        raise ContractError(
            f"shape mismatch: u is ({u.nel},{u.lx}), geometry is "
            f"({g.nel},{g.lx}), basis lx={basis.lx}"
        )
    lx = basis.lx
    dxd, dxtd = operator_matrices(basis)
    ud = u.data

    rtmp = np.zeros_like(ud)
    stmp = np.zeros_like(ud)
    ttmp = np.zeros_like(ud)
    for l in range(lx):
        rtmp = rtmp + dxd[l, :] * ud[:, :, :, l][..., None]
        stmp = stmp + dxd[l, :][:, None] * ud[:, :, l, :][:, :, None, :]
        ttmp = ttmp + dxd[l, :][:, None, None] * ud[:, l, :, :][:, None, :, :]

    ur = g.h1 * (g.g11 * rtmp + g.g12 * stmp + g.g13 * ttmp)
    us = g.h1 * (g.g12 * rtmp + g.g22 * stmp + g.g23 * ttmp)
    ut = g.h1 * (g.g13 * rtmp + g.g23 * stmp + g.g33 * ttmp)

    wd = np.zeros_like(ud)
    for l in range(lx):
        wd = wd + dxtd[l, :] * ur[:, :, :, l][..., None]
        wd = wd + dxtd[l, :][:, None] * us[:, :, l, :][:, :, None, :]
        wd = wd + dxtd[l, :][:, None, None] * ut[:, l, :, :][:, None, :, :]

    return ElementField(nel=u.nel, lx=lx, data=wd)


def dense_assemble(basis: GllBasis, g: GeomFactors) -> np.ndarray:
    """Assemble the lx^3 x lx^3 operator matrix column by column.

    Column j is ax_reference applied to the j-th unit vector. All columns
    are evaluated in one batched apply (one pseudo-element per column),
    which runs the identical per-element operation sequence.
    """
    if g.nel != 1:
        raise ContractError(f"dense assembly requires nel=1, got nel={g.nel}")
    lx = g.lx
    if lx > 8:
        raise ContractError(f"dense assembly limited to lx <= 8, got lx={lx}")
    n = lx**3
    ud = np.eye(n).reshape(n, lx, lx, lx)
    tiled = GeomFactors(
        g11=np.broadcast_to(g.g11, (n, lx, lx, lx)).copy(),
        g22=np.broadcast_to(g.g22, (n, lx, lx, lx)).copy(),
        g33=np.broadcast_to(g.g33, (n, lx, lx, lx)).copy(),
        g12=np.broadcast_to(g.g12, (n, lx, lx, lx)).copy(),
        g13=np.broadcast_to(g.g13, (n, lx, lx, lx)).copy(),
        g23=np.broadcast_to(g.g23, (n, lx, lx, lx)).copy(),
        h1=np.broadcast_to(g.h1, (n, lx, lx, lx)).copy(),
    )
    w = ax_reference(ElementField(nel=n, lx=lx, data=ud), basis, tiled)
    return w.data.reshape(n, n).T.copy()


def flops_model(lx: int, nel: int) -> int:
    """Flop count of one apply: nel * lx^3 * (12*lx + 18).

    Per gridpoint: 2 flops per directional term and stage (3 * 2 * lx each
    for stages 1 and 2) plus 18 for the metric combine.
    """
    if lx < LX_MIN or nel < 0:
        raise RangeError(f"invalid sizes lx={lx}, nel={nel}")
    return int(nel) * int(lx) ** 3 * (12 * int(lx) + 18)
