"""State families of the F-qubit protocol in a d-dimensional Hilbert space.

Three families are used throughout the package:

* computational states ``|n>``,
* Fourier states ``|eta_k> = sum_n w^(k n) |n> / sqrt(d)`` with ``w = exp(2 pi i / d)``,
* F-qubits ``|phi_jk^m> = (|j> + w^m |k>) / sqrt(2)`` for ``j < k``.

F-qubit labels are always enumerated in lexicographic ``(j, k, m)`` order; every
matrix indexed by F-qubits in this package uses that order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

NORM_TOL = 1e-12


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class BasisId(enum.Enum):
    COMPUTATIONAL = "computational"
    FOURIER = "fourier"
    FQUBIT = "fqubit"
    SYMMETRIC_SUBSET = "symmetric"

    @classmethod
    def parse(cls, name: str) -> "BasisId":
        try:
            return cls(name.lower())
        except ValueError:
            choices = ", ".join(b.value for b in cls)
            raise DomainError(f"unknown basis {name!r} (expected one of {choices})") from None


class FQubitLabel(NamedTuple):
    """Index triplet ``(j, k, m)`` of an F-qubit state."""

    j: int
    k: int
    m: int

    def validate(self, d: int) -> "FQubitLabel":
        if not (0 <= self.j < self.k <= d - 1 and 0 <= self.m <= d - 1):
            raise DomainError(f"invalid F-qubit label {tuple(self)} for d={d}")
        return self

    def __str__(self) -> str:
        return f"{self.j}-{self.k}-{self.m}"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm pure state; ``amplitudes`` is a read-only complex array."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise DomainError("a state needs at least two amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.amplitudes, other.amplitudes)

    __hash__ = None


def _check_dim(d: int) -> None:
    if d < 2:
        raise DomainError(f"dimension must be at least 2, got {d}")


def _check_index(d: int, n: int, what: str) -> None:
    _check_dim(d)
    if not 0 <= n < d:
        raise DomainError(f"{what} index {n} out of range for d={d}")


def root_of_unity(d: int, p: int) -> complex:
    """Return ``exp(2 pi i p / d)``.

    Quarter turns are returned exactly so that e.g. ``root_of_unity(4, 1)`` is
    ``1j`` rather than ``6e-17 + 1j``.
    """
    if d < 1:
        raise DomainError(f"root of unity needs d >= 1, got {d}")
    p %= d
    if (4 * p) % d == 0:
        return (1 + 0j, 1j, -1 + 0j, -1j)[(4 * p) // d]
    return complex(np.exp(2j * np.pi * p / d))


def computational_state(d: int, n: int) -> StateVector:
    _check_index(d, n, "computational")
    amps = np.zeros(d, dtype=complex)
    amps[n] = 1.0
    return StateVector(amps)


def fourier_state(d: int, k: int) -> StateVector:
    _check_index(d, k, "Fourier")
    amps = np.array([root_of_unity(d, k * n) for n in range(d)]) / np.sqrt(d)
    return StateVector(amps)


def fqubit_state(d: int, label: FQubitLabel | tuple[int, int, int]) -> StateVector:
    _check_dim(d)
    j, k, m = FQubitLabel(*label).validate(d)
    amps = np.zeros(d, dtype=complex)
    amps[j] = 1 / np.sqrt(2)
    amps[k] = root_of_unity(d, m) / np.sqrt(2)
    return StateVector(amps)


def oam_index(d: int, oam: int) -> int:
    """Map an OAM value in ``{-d/2..-1, 1..d/2}`` to a computational index.

    Values are laid out in ascending order, so for d=4 the OAM values
    ``-2, -1, 1, 2`` occupy indices ``0, 1, 2, 3``.
    """
    half = d // 2
    if oam == 0 or abs(oam) > half:
        raise DomainError(f"OAM value {oam} not available for d={d}")
    return oam + half if oam < 0 else oam + half - 1


def symmetric_subset_state(d: int, level: int, sign: int) -> StateVector:
    """``(|l> + sign |-l>) / sqrt(2)`` with ``l = level`` in OAM labelling.

    Only defined for even ``d`` and ``1 <= level <= d/2``.
    """
    _check_dim(d)
    if d % 2:
        raise DomainError(f"symmetric subset states need even d, got {d}")
    if not 1 <= level <= d // 2:
        raise DomainError(f"level {level} out of range 1..{d // 2}")
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    amps = np.zeros(d, dtype=complex)
    amps[oam_index(d, level)] = 1 / np.sqrt(2)
    amps[oam_index(d, -level)] = sign / np.sqrt(2)
    return StateVector(amps)


def enumerate_fqubit_labels(d: int) -> list[FQubitLabel]:
    """All F-qubit labels for dimension ``d`` in lexicographic order."""
    _check_dim(d)
    return [FQubitLabel(j, k, m) for j in range(d) for k in range(j + 1, d) for m in range(d)]


def num_fqubit_states(d: int) -> int:
    return d * d * (d - 1) // 2


def num_pairs(d: int) -> int:
    return d * (d - 1) // 2


def overlap_probability(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2``."""
    if a.dim != b.dim:
        raise DomainError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def fqubit_fourier_coefficients(d: int, label: FQubitLabel | tuple[int, int, int]) -> np.ndarray:
    """Coefficients of ``|phi_jk^m>`` on the Fourier states ``|eta_l>``.

    The coefficient on ``|eta_l>`` is ``(w^(-j l) + w^(m - k l)) / sqrt(2 d)``.
    """
    _check_dim(d)
    j, k, m = FQubitLabel(*label).validate(d)
    return np.array(
        [root_of_unity(d, -j * ell) + root_of_unity(d, m - k * ell) for ell in range(d)]
    ) / np.sqrt(2 * d)


def fourier_matrix(d: int) -> np.ndarray:
    """Unitary whose column ``k`` is ``|eta_k>``."""
    _check_dim(d)
    return np.column_stack([fourier_state(d, k).amplitudes for k in range(d)])


def fqubit_matrix(d: int) -> np.ndarray:
    """``D x d`` array whose rows are the F-qubit states in canonical order."""
    return np.array([fqubit_state(d, lab).amplitudes for lab in enumerate_fqubit_labels(d)])


def basis_states(d: int, basis: BasisId) -> list[tuple[str, StateVector]]:
    """Labelled states of a basis family, in canonical order."""
    _check_dim(d)
    if basis is BasisId.COMPUTATIONAL:
        return [(str(n), computational_state(d, n)) for n in range(d)]
    if basis is BasisId.FOURIER:
        return [(str(k), fourier_state(d, k)) for k in range(d)]
    if basis is BasisId.FQUBIT:
        return [(str(lab), fqubit_state(d, lab)) for lab in enumerate_fqubit_labels(d)]
    if d % 2:
        raise DomainError(f"symmetric subset basis needs even d, got {d}")
    return [
        (f"{level}{'+' if sign > 0 else '-'}", symmetric_subset_state(d, level, sign))
        for level in range(1, d // 2 + 1)
        for sign in (1, -1)
    ]
