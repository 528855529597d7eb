"""Givens and hyperbolic rotations acting on pairs of columns of a 3-column array.

The array ``B`` carries the signature ``diag(+1, +1, -1)``.  A Givens rotation
mixes the two ``+1`` columns (0 and 1) and a hyperbolic rotation mixes column
0 with the ``-1`` column 2, so the composite transform ``H`` satisfies
``H @ SIGNATURE @ H.T == SIGNATURE`` and ``B @ SIGNATURE @ B.T`` is preserved.
Both rotations are built so that the pivot (column 0) of the annihilated row
comes out positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegeneratePair, HyperbolicBreakdown

SIGNATURE = np.array([1.0, 1.0, -1.0])
PAIR_SIGNATURE = np.array([1.0, -1.0])

# a**2 - b**2 below this fraction of max(1, a**2) is treated as breakdown
BREAKDOWN_TOL = 1e-14

GIVENS_COLUMNS = (0, 1)
HYPERBOLIC_COLUMNS = (0, 2)


@dataclass(frozen=True)
class GivensRotation:
    """Maps a pair ``(a, b)`` to ``(c*a + s*b, -s*a + c*b)``."""

    c: float
    s: float

    def apply(self, a, b):
        return self.c * a + self.s * b, -self.s * a + self.c * b

    def matrix(self) -> np.ndarray:
        # right-multiplication form: [a, b] @ matrix()
        return np.array([[self.c, -self.s], [self.s, self.c]])


@dataclass(frozen=True)
class HyperbolicRotation:
    """Maps a pair ``(a, b)`` to ``(ch*a - sh*b, -sh*a + ch*b)``.

    Preserves ``a**2 - b**2``.
    """

    ch: float
    sh: float

    def apply(self, a, b):
        return self.ch * a - self.sh * b, -self.sh * a + self.ch * b

    def matrix(self) -> np.ndarray:
        return np.array([[self.ch, -self.sh], [-self.sh, self.ch]])


IDENTITY_GIVENS = GivensRotation(1.0, 0.0)
IDENTITY_HYPERBOLIC = HyperbolicRotation(1.0, 0.0)


def compute_givens(a: float, b: float) -> GivensRotation:
    """Rotation sending ``(a, b)`` to ``(hypot(a, b), 0)``."""
    if a == 0.0 and b == 0.0:
        raise DegeneratePair("cannot orient a Givens rotation on (0, 0)")
    # normalise first so subnormal inputs keep full precision
    scale = max(abs(a), abs(b))
    a, b = a / scale, b / scale
    r = math.hypot(a, b)
    return GivensRotation(a / r, b / r)


def compute_hyperbolic(a: float, b: float, tol: float = BREAKDOWN_TOL) -> HyperbolicRotation:
    """Hyperbolic rotation sending ``(a, b)`` to ``(sqrt(a**2 - b**2), 0)``.

    Requires ``|a| > |b|``; the gap ``a**2 - b**2`` must also exceed
    ``tol * max(1, a**2)``.  With ``a > 0`` the result has ``ch >= 1``.
    """
    if b == 0.0 and a != 0.0:
        return HyperbolicRotation(math.copysign(1.0, a), 0.0)
    abs_a, abs_b = abs(a), abs(b)
    gap = (abs_a - abs_b) * (abs_a + abs_b)
    if not gap > tol * max(1.0, a * a):
        raise HyperbolicBreakdown(f"hyperbolic pivot does not dominate: a={a!r}, b={b!r}")
    r = math.sqrt(gap)
    return HyperbolicRotation(a / r, b / r)


def annihilating_rotations(row: np.ndarray, tol: float = BREAKDOWN_TOL):
    """The Givens/hyperbolic pair that reduces ``row`` to ``[r, 0, 0]``."""
    a, b, d = float(row[0]), float(row[1]), float(row[2])
    givens = IDENTITY_GIVENS if b == 0.0 and a > 0.0 else compute_givens(a, b)
    a = givens.apply(a, b)[0]
    return givens, compute_hyperbolic(a, d, tol)


def apply_transform(pre_array: np.ndarray, tol: float = BREAKDOWN_TOL) -> np.ndarray:
    """Apply the signature-preserving transform that zeroes ``B[0, 1:]``.

    Returns a new array; the first row of the result is ``[r, 0, 0]`` with
    ``r > 0``.  Each rotation touches two columns, so the cost is linear in
    the number of rows.
    """
    B = np.array(pre_array, dtype=np.result_type(pre_array, np.float32), copy=True)
    if B.ndim != 2 or B.shape[1] != 3:
        raise ValueError(f"pre-array must have 3 columns, got shape {B.shape}")
    givens, hyper = annihilating_rotations(B[0], tol)

    i, j = GIVENS_COLUMNS
    B[:, i], B[:, j] = givens.apply(B[:, i], B[:, j])
    B[0, j] = 0.0

    i, j = HYPERBOLIC_COLUMNS
    B[:, i], B[:, j] = hyper.apply(B[:, i], B[:, j])
    B[0, j] = 0.0
    return B


def transform_matrix(givens: GivensRotation, hyper: HyperbolicRotation) -> np.ndarray:
    """The full 3x3 ``H`` such that ``B @ H`` equals :func:`apply_transform`."""
    HG = np.eye(3)
    HG[np.ix_(GIVENS_COLUMNS, GIVENS_COLUMNS)] = givens.matrix()
    HH = np.eye(3)
    HH[np.ix_(HYPERBOLIC_COLUMNS, HYPERBOLIC_COLUMNS)] = hyper.matrix()
    return HG @ HH
