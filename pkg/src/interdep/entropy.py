"""Approximate entropy of a dependency map's index sequence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import apen_counts
from .errors import InsufficientDataError, InvalidParameterError

MAX_APEN_LENGTH = 10_000


@dataclass(frozen=True)
class ApEnParams:
    """Window length ``m`` and tolerance as a multiple of the series' std."""

    m: int = 2
    tolerance_factor: float = 0.2

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameterError(f"m must be >= 1, got {self.m}")
        if not self.tolerance_factor > 0:
            raise InvalidParameterError(
                f"tolerance_factor must be positive, got {self.tolerance_factor}")


def tolerance(series, params: ApEnParams = ApEnParams()) -> float:
    return params.tolerance_factor * float(np.std(np.asarray(series, dtype=np.float64)))


def apen(series, params: ApEnParams = ApEnParams()) -> float:
    """Approximate entropy ``Phi^m - Phi^(m+1)``.

    Windows are compared in the max-norm; a pair matches when its distance is
    strictly below ``tolerance_factor * std(series)`` (population std), and
    each window counts itself. A constant series returns 0.
    """
    u = np.ascontiguousarray(series, dtype=np.float64)
    if u.ndim != 1 or u.size < params.m + 2:
        raise InsufficientDataError(
            f"need at least m+2={params.m + 2} samples, got {u.size}")
    tol = tolerance(u, params)
    if tol == 0.0:
        return 0.0
    phi_m, phi_m1 = apen_counts(u, params.m, tol)
    return float(phi_m - phi_m1)


def apen_window(N: int, offset: int | None = None, seed=None,
                length: int = MAX_APEN_LENGTH) -> slice:
    """Contiguous slice of at most ``length`` entries used for long maps.

    The offset is ``offset`` if given, else drawn from ``seed``; with neither
    the window starts at 0.
    """
    if N <= length:
        return slice(0, N)
    if offset is None:
        offset = 0 if seed is None else int(np.random.default_rng(seed).integers(N - length + 1))
    if not 0 <= offset <= N - length:
        raise InvalidParameterError(f"offset {offset} outside [0, {N - length}]")
    return slice(offset, offset + length)


def apen_of_map(dmap, params: ApEnParams = ApEnParams(), *, offset: int | None = None,
                seed=None, length: int = MAX_APEN_LENGTH) -> float:
    """ApEn of the sequence ``pi[0], pi[1], ...``, on a contiguous window
    of ``length`` entries when the map is longer."""
    pi = dmap.pi if hasattr(dmap, "pi") else np.asarray(dmap)
    window = apen_window(pi.shape[0], offset, seed, length)
    return apen(pi[window], params)
