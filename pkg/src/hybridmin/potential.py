"""Lennard-Jones pair and cluster potentials.

Configurations are ``(N, 3)`` float arrays.  Every model in this package
exposes the same three methods used by the optimizers::

    model.energy(x)               -> float
    model.gradient(x)             -> array shaped like x
    model.energy_and_gradient(x)  -> (float, array)

Reduced units are the default (``a = b = 4``), so the pair minimum is -1
at ``r = 2**(1/6)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

#: distances below this are treated as coincident atoms
MIN_DISTANCE = 1e-8

PAIR_MINIMUM = 2.0 ** (1.0 / 6.0)


class DomainError(ValueError):
    """Raised when a potential is evaluated outside its domain."""


class PotentialModel(Protocol):
    def energy(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...

    def energy_and_gradient(self, x: np.ndarray) -> tuple[float, np.ndarray]: ...


def as_config(coords, n_atoms: int | None = None) -> np.ndarray:
    """Validate and return coordinates as a float ``(N, 3)`` array."""
    x = np.array(coords, dtype=float)
    if x.ndim == 1:
        if x.size % 3:
            raise ValueError(f"flat coordinate vector length {x.size} is not a multiple of 3")
        x = x.reshape(-1, 3)
    if x.ndim != 2 or x.shape[1] != 3 or x.shape[0] < 1:
        raise ValueError(f"expected an (N, 3) coordinate array, got shape {x.shape}")
    if n_atoms is not None and x.shape[0] != n_atoms:
        raise ValueError(f"expected {n_atoms} atoms, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("coordinates must be finite")
    return x


@dataclass(frozen=True)
class LJParams:
    """Pair coefficients for ``a/r**12 - b/r**6`` with an optional ``c/r**12 - d/r**10`` term.

    ``a`` and ``b`` may be scalars or symmetric ``(N, N)`` matrices.  No
    combination rules are applied; per-pair matrices must be built by the
    caller.
    """

    a: ArrayLike = 4.0
    b: ArrayLike = 4.0
    hb_c: ArrayLike | None = None
    hb_d: ArrayLike | None = None

    def __post_init__(self):
        for name in ("a", "b"):
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise ValueError(f"LJ coefficient {name} must be positive")
        if (self.hb_c is None) != (self.hb_d is None):
            raise ValueError("hb_c and hb_d must be given together")

    @classmethod
    def from_epsilon_sigma(cls, epsilon: float = 1.0, sigma: float = 1.0) -> "LJParams":
        return cls(a=4.0 * epsilon * sigma**12, b=4.0 * epsilon * sigma**6)

    @property
    def has_hbond_term(self) -> bool:
        return self.hb_c is not None


REDUCED = LJParams()


def lj_pair_energy(r: float, params: LJParams = REDUCED) -> float:
    """Energy of a single pair at distance ``r``."""
    r = float(r)
    if not np.isfinite(r) or r <= 0.0:
        raise DomainError(f"pair distance must be positive and finite, got {r}")
    inv6 = r**-6
    e = params.a * inv6 * inv6 - params.b * inv6
    if params.has_hbond_term:
        e += params.hb_c * inv6 * inv6 - params.hb_d * r**-10
    return float(e)


def _pair_terms(x: np.ndarray, params: LJParams, need_grad: bool):
    n = x.shape[0]
    if n < 2:
        raise DomainError("a cluster needs at least two atoms")
    diff = x[:, None, :] - x[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, np.inf)
    if r2.min() < MIN_DISTANCE**2:
        i, j = np.unravel_index(np.argmin(r2), r2.shape)
        i, j = sorted((int(i), int(j)))
        raise DomainError(f"atoms {i} and {j} are coincident (r = {np.sqrt(r2[i, j]):.3e})")
    inv2 = 1.0 / r2
    inv6 = inv2 * inv2 * inv2
    inv12 = inv6 * inv6
    a, b = params.a, params.b
    pair_e = a * inv12 - b * inv6
    if need_grad:
        # (dV/dr) / r
        coef = (-12.0 * a * inv12 + 6.0 * b * inv6) * inv2
    if params.has_hbond_term:
        inv10 = inv6 * inv2 * inv2
        pair_e = pair_e + params.hb_c * inv12 - params.hb_d * inv10
        if need_grad:
            coef = coef + (-12.0 * params.hb_c * inv12 + 10.0 * params.hb_d * inv10) * inv2
    energy = 0.5 * float(pair_e.sum())
    if not need_grad:
        return energy, None
    grad = np.einsum("ij,ijk->ik", coef, diff)
    return energy, grad


def lj_cluster_energy(x, params: LJParams = REDUCED) -> float:
    """Sum of pair energies over all unordered pairs, no cutoff."""
    x = as_config(x)
    return _pair_terms(x, params, need_grad=False)[0]


def lj_cluster_gradient(x, params: LJParams = REDUCED) -> np.ndarray:
    x = as_config(x)
    return _pair_terms(x, params, need_grad=True)[1]


class LJCluster:
    """Lennard-Jones cluster satisfying the potential-model contract."""

    def __init__(self, params: LJParams = REDUCED):
        self.params = params

    def energy(self, x: np.ndarray) -> float:
        return _pair_terms(np.asarray(x, dtype=float), self.params, need_grad=False)[0]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return _pair_terms(np.asarray(x, dtype=float), self.params, need_grad=True)[1]

    def energy_and_gradient(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        return _pair_terms(np.asarray(x, dtype=float), self.params, need_grad=True)

    def atom_energy_change(self, x: np.ndarray, k: int, new_pos: np.ndarray) -> float:
        """Energy change from moving atom ``k`` to ``new_pos``, in O(N)."""
        others = np.delete(x, k, axis=0)
        old = self._atom_energy(others, x[k], k)
        new = self._atom_energy(others, new_pos, k)
        return new - old

    def _atom_energy(self, others: np.ndarray, pos: np.ndarray, k: int) -> float:
        d = others - pos
        r2 = np.einsum("ij,ij->i", d, d)
        if r2.min() < MIN_DISTANCE**2:
            raise DomainError(f"atom {k} coincides with another atom")
        inv6 = 1.0 / (r2 * r2 * r2)
        a, b = self._row(self.params.a, k), self._row(self.params.b, k)
        e = a * inv6 * inv6 - b * inv6
        if self.params.has_hbond_term:
            c, dd = self._row(self.params.hb_c, k), self._row(self.params.hb_d, k)
            e = e + c * inv6 * inv6 - dd * inv6 / (r2 * r2)
        return float(e.sum())

    @staticmethod
    def _row(coef, k):
        coef = np.asarray(coef)
        if coef.ndim == 0:
            return coef
        return np.delete(coef[k], k)


def finite_difference_gradient(model, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of ``model.energy`` (verification oracle)."""
    if h <= 0:
        raise ValueError("step h must be positive")
    x = np.array(x, dtype=float)
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        ep = model.energy(x)
        flat[k] = orig - h
        em = model.energy(x)
        flat[k] = orig
        gflat[k] = (ep - em) / (2.0 * h)
    return grad
