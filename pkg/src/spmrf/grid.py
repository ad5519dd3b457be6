"""Observation grids, forward differences and increment variance factors.

Only first- and second-order models are supported. On irregular grids the
second-order increment follows the Galerkin (integrated Wiener process)
discretisation, which reduces to the ordinary second difference when the
spacing is constant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

REGULAR_RTOL = 1e-12


def check_order(k: int) -> int:
    if k not in (1, 2):
        raise ValueError(f"difference order must be 1 or 2, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class Grid:
    """Strictly increasing observation locations.

    Parameters
    ----------
    locations : array_like
        Locations ``s_1 < ... < s_n`` in the units of the covariate.
        Duplicates are rejected; replicate observations must be aggregated
        by the caller.
    """

    locations: np.ndarray
    spacings: np.ndarray = field(init=False, repr=False)
    regular: bool = field(init=False)

    def __post_init__(self):
        s = np.array(self.locations, dtype=float).ravel()
        if s.size < 2:
            raise ValueError("a grid needs at least two locations")
        if not np.all(np.isfinite(s)):
            raise ValueError("grid locations must be finite")
        d = np.diff(s)
        if np.any(d <= 0):
            raise ValueError("grid locations must be strictly increasing (no duplicates)")
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "locations", s)
        object.__setattr__(self, "spacings", d)
        regular = bool(np.all(np.abs(d - d[0]) <= REGULAR_RTOL * np.abs(d[0])))
        object.__setattr__(self, "regular", regular)

    @classmethod
    def regular_grid(cls, n: int, spacing: float = 1.0, start: float = 1.0) -> "Grid":
        """Unit-index grid ``1..n`` by default."""
        return cls(start + spacing * np.arange(n))

    @property
    def n(self) -> int:
        return self.locations.size

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return np.array_equal(self.locations, other.locations)

    def __hash__(self):
        return hash(self.locations.tobytes())

    def check_order(self, k: int) -> None:
        check_order(k)
        if self.n < k + 2:
            raise ValueError(f"grid of size {self.n} too small for an order-{k} model")

    def ratios(self) -> np.ndarray:
        """Spacing ratios ``delta_{j+1} / delta_j`` (length n-2)."""
        d = self.spacings
        return d[1:] / d[:-1]

    def densify(self, m: int) -> "Grid":
        """Regular grid over the same range with ``m`` times the node density."""
        if not self.regular:
            raise ValueError("densify is only defined for regular grids")
        h = self.spacings[0] / m
        n_new = (self.n - 1) * m + 1
        return Grid(self.locations[0] + h * np.arange(n_new))


def difference(theta, k: int, grid: Grid) -> np.ndarray:
    """Order-``k`` forward differences of ``theta`` on ``grid``.

    For ``k = 2`` the irregular-grid increment
    ``theta[j+2] - (1 + r_j) theta[j+1] + r_j theta[j]`` with
    ``r_j = delta[j+1] / delta[j]`` is returned; on a regular grid this is the
    usual second difference.
    """
    k = check_order(k)
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size != grid.n:
        raise ValueError(f"theta has length {theta.size}, grid has {grid.n} points")
    if k == 1:
        return np.diff(theta)
    r = grid.ratios()
    return theta[2:] - (1.0 + r) * theta[1:-1] + r * theta[:-2]


def scale_factors(k: int, grid: Grid) -> np.ndarray:
    """Variance multipliers ``d_j`` with ``Var(increment_j) = d_j tau_j^2``."""
    k = check_order(k)
    d = grid.spacings
    if k == 1:
        return d.copy()
    return d[1:] ** 2 * (d[:-1] + d[1:]) / 2.0


class DifferenceOperator:
    """Lower-triangular map between ``theta`` and its difference coordinates.

    The coordinates are ``b = [theta_1, (theta_2 - theta_1) if k == 2,
    increments_1..increments_{n-k}]`` so that ``b = L @ theta``. Both
    ``integrate`` (``L^{-1} b``) and its adjoint are O(n).
    """

    def __init__(self, grid: Grid, k: int):
        grid.check_order(k)
        self.grid = grid
        self.k = k
        self.n = grid.n
        self._cumsum = k == 1 or grid.regular
        if not self._cumsum:
            r = grid.ratios()
            n = self.n
            # banded storage for solve_banded((2, 0), ...): rows are diagonals 0, -1, -2
            ab = np.zeros((3, n))
            ab[0] = 1.0
            ab[1, :-1] = -1.0
            ab[1, 1:-1] = -(1.0 + r)
            ab[2, :-2] = r
            self._ab = ab
            # transpose is upper banded: rows are diagonals +2, +1, 0
            abt = np.zeros((3, n))
            abt[2] = 1.0
            abt[1, 1:] = ab[1, :-1]
            abt[0, 2:] = ab[2, :-2]
            self._abt = abt

    def apply(self, theta) -> np.ndarray:
        """``L @ theta``."""
        theta = np.asarray(theta, dtype=float)
        out = np.empty_like(theta)
        out[0] = theta[0]
        if self.k == 1:
            out[1:] = np.diff(theta)
        else:
            out[1] = theta[1] - theta[0]
            out[2:] = difference(theta, 2, self.grid)
        return out

    def integrate(self, b) -> np.ndarray:
        """Solve ``L @ theta = b``."""
        if self._cumsum:
            if self.k == 1:
                return np.cumsum(b)
            out = np.empty(self.n)
            out[0] = b[0]
            out[1:] = b[0] + np.cumsum(np.cumsum(b[1:]))
            return out
        return solve_banded((2, 0), self._ab, b, check_finite=False)

    def integrate_adjoint(self, g) -> np.ndarray:
        """Solve ``L.T @ x = g`` (maps a gradient in theta to one in ``b``)."""
        if self._cumsum:
            if self.k == 1:
                return _rcumsum(g)
            out = np.empty(self.n)
            out[0] = np.sum(g)
            out[1:] = _rcumsum(_rcumsum(g[1:]))
            return out
        return solve_banded((0, 2), self._abt, g, check_finite=False)


def _rcumsum(a):
    return np.cumsum(a[::-1])[::-1]
