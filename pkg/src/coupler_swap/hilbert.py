"""Composite Hilbert space of 2N bosonic modes plus one two-level coupler.

Basis ordering is fixed: modes ``a_1..a_N``, then ``b_1..b_N``, then the
coupler, with a row-major mixed-radix index in which the coupler varies
fastest.  Coupler level 0 is ``|g>`` and level 1 is ``|e>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.sparse as sp

GROUND = 0
EXCITED = 1


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ordered mode dimensions ``(a_1..a_N, b_1..b_N, coupler)``."""

    mode_dims: tuple[int, ...]
    n_pairs: int

    def __post_init__(self):
        object.__setattr__(self, "mode_dims", tuple(int(d) for d in self.mode_dims))
        if self.n_pairs < 1:
            raise ValueError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if len(self.mode_dims) != 2 * self.n_pairs + 1:
            raise ValueError(
                f"expected {2 * self.n_pairs + 1} mode dimensions, got {len(self.mode_dims)}"
            )
        if self.mode_dims[-1] != 2:
            raise ValueError("coupler dimension must be exactly 2")
        if any(d < 2 for d in self.mode_dims):
            raise ValueError(f"every mode needs at least 2 levels: {self.mode_dims}")

    @property
    def dim(self) -> int:
        return int(np.prod(self.mode_dims))

    @property
    def n_modes(self) -> int:
        """Number of bosonic modes (coupler excluded)."""
        return 2 * self.n_pairs

    @property
    def coupler_slot(self) -> int:
        return 2 * self.n_pairs

    def a_mode(self, j: int) -> int:
        """Slot of ``a_{j+1}`` (0-based pair index)."""
        if not 0 <= j < self.n_pairs:
            raise IndexError(f"pair index {j} out of range")
        return j

    def b_mode(self, k: int) -> int:
        """Slot of ``b_{k+1}`` (0-based)."""
        if not 0 <= k < self.n_pairs:
            raise IndexError(f"pair index {k} out of range")
        return self.n_pairs + k

    def label(self, slot: int) -> str:
        if slot == self.coupler_slot:
            return "c"
        if slot < self.n_pairs:
            return f"a{slot + 1}"
        return f"b{slot - self.n_pairs + 1}"

    def slot(self, label: str) -> int:
        """Inverse of :meth:`label` for bosonic modes (``"a1"``, ``"b2"``...)."""
        label = label.strip().lower()
        if len(label) < 2 or label[0] not in "ab" or not label[1:].isdigit():
            raise ValueError(f"unknown mode label {label!r}")
        idx = int(label[1:]) - 1
        if not 0 <= idx < self.n_pairs:
            raise ValueError(f"mode label {label!r} outside {self.n_pairs} pairs")
        return idx if label[0] == "a" else self.n_pairs + idx

    def index(self, occupations: Sequence[int]) -> int:
        """Basis index of a product state given one occupation per slot."""
        if len(occupations) != len(self.mode_dims):
            raise ValueError("need one occupation per slot (coupler included)")
        i = 0
        for n, d in zip(occupations, self.mode_dims):
            if not 0 <= n < d:
                raise ValueError(f"occupation {n} outside truncation {d}")
            i = i * d + int(n)
        return i

    def occupations(self) -> np.ndarray:
        """``(dim, n_slots)`` table of occupations for every basis index."""
        grids = np.indices(self.mode_dims).reshape(len(self.mode_dims), -1)
        return grids.T.copy()


def make_space(n_pairs: int, fock_levels: int = 3) -> SpaceDescriptor:
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    if fock_levels < 2:
        raise ValueError(f"fock_levels must be >= 2 to hold |0> and |1>, got {fock_levels}")
    return SpaceDescriptor((fock_levels,) * (2 * n_pairs) + (2,), n_pairs)


@dataclass(frozen=True, eq=False)
class Operator:
    """Sparse complex matrix acting on a :class:`SpaceDescriptor`."""

    space: SpaceDescriptor
    matrix: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T.tocsr())

    def _check(self, other: "Operator"):
        if not isinstance(other, Operator):
            return NotImplemented
        if other.space != self.space:
            raise ValueError("operators act on different spaces")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Operator(self.space, self.matrix - other.matrix)

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.space, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def max_abs(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Hermitian up to ``tol`` relative to the largest entry."""
        scale = max(self.max_abs(), 1.0e-300)
        diff = self.matrix - self.matrix.conj().T
        return (abs(diff).max() if diff.nnz else 0.0) <= tol * scale

    def is_unitary(self, tol: float = 1e-10) -> bool:
        prod = self.matrix.conj().T @ self.matrix - sp.identity(self.space.dim, format="csr")
        return (abs(prod).max() if prod.nnz else 0.0) <= tol


def _embed(space: SpaceDescriptor, slot: int, local: np.ndarray) -> Operator:
    factors = [sp.identity(d, format="csr", dtype=complex) for d in space.mode_dims]
    factors[slot] = sp.csr_matrix(local, dtype=complex)
    return Operator(space, reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, sp.identity(space.dim, format="csr", dtype=complex))


def zero(space: SpaceDescriptor) -> Operator:
    return Operator(space, sp.csr_matrix((space.dim, space.dim), dtype=complex))


def mode_annihilator(space: SpaceDescriptor, mode_index: int) -> Operator:
    """Truncated ladder operator ``a|n> = sqrt(n)|n-1>`` on one bosonic mode."""
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"mode index {mode_index} is not a bosonic mode (0..{space.n_modes - 1})")
    d = space.mode_dims[mode_index]
    return _embed(space, mode_index, np.diag(np.sqrt(np.arange(1, d)), 1))


def mode_creator(space: SpaceDescriptor, mode_index: int) -> Operator:
    return mode_annihilator(space, mode_index).dag()


def number_operator(space: SpaceDescriptor, mode_index: int) -> Operator:
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"mode index {mode_index} is not a bosonic mode")
    d = space.mode_dims[mode_index]
    return _embed(space, mode_index, np.diag(np.arange(d, dtype=float)))


def coupler_sigma(space: SpaceDescriptor) -> Operator:
    """Coupler lowering operator ``|g><e|``."""
    local = np.zeros((2, 2))
    local[GROUND, EXCITED] = 1.0
    return _embed(space, space.coupler_slot, local)


def coupler_sigma_z(space: SpaceDescriptor) -> Operator:
    """``|e><e| - |g><g|``."""
    local = np.zeros((2, 2))
    local[EXCITED, EXCITED] = 1.0
    local[GROUND, GROUND] = -1.0
    return _embed(space, space.coupler_slot, local)


def coupler_projector(space: SpaceDescriptor, level: int) -> Operator:
    local = np.zeros((2, 2))
    local[level, level] = 1.0
    return _embed(space, space.coupler_slot, local)


def excitation_numbers(space: SpaceDescriptor) -> np.ndarray:
    """Total excitation count of every basis state (diagonal of N_tot)."""
    return space.occupations().sum(axis=1)


def total_excitation(space: SpaceDescriptor) -> Operator:
    """``sum_j (a_j^+ a_j + b_j^+ b_j) + sigma^+ sigma``."""
    return Operator(space, sp.diags(excitation_numbers(space).astype(complex), format="csr"))


def diagonal_operator(space: SpaceDescriptor, values: np.ndarray) -> Operator:
    values = np.asarray(values)
    if values.shape != (space.dim,):
        raise ValueError("diagonal length does not match space")
    return Operator(space, sp.diags(values.astype(complex), format="csr"))


@dataclass(frozen=True, eq=False)
class FrameHamiltonian:
    """Time-dependent operator ``H(t) = exp(iGt) H_0 exp(-iGt)`` with diagonal ``G``.

    Every interaction-picture Hamiltonian built in :mod:`coupler_swap.model`
    has this form, ``G`` being the free mode energies measured from the
    coupler frequency.  Evaluation is an elementwise phase, and integrators
    may use ``H_0 + G`` as a time-independent generator in the rotating frame.
    """

    base: Operator
    frame: np.ndarray = field(repr=False)

    def __post_init__(self):
        frame = np.asarray(self.frame, dtype=float)
        if frame.shape != (self.base.space.dim,):
            raise ValueError("frame diagonal length does not match space")
        object.__setattr__(self, "frame", frame)

    @property
    def space(self) -> SpaceDescriptor:
        return self.base.space

    def __call__(self, t: float) -> Operator:
        m = self.base.matrix.tocoo()
        phase = np.exp(1j * (self.frame[m.row] - self.frame[m.col]) * t)
        return Operator(self.space, sp.csr_matrix((m.data * phase, (m.row, m.col)), shape=m.shape))

    def __add__(self, other):
        if isinstance(other, FrameHamiltonian):
            if not np.array_equal(other.frame, self.frame):
                raise ValueError("cannot add Hamiltonians defined in different frames")
            return FrameHamiltonian(self.base + other.base, self.frame)
        return NotImplemented

    def max_frequency(self) -> float:
        """Largest phase frequency ``|G_i - G_j|`` among nonzero entries."""
        m = self.base.matrix.tocoo()
        if m.nnz == 0:
            return 0.0
        return float(np.max(np.abs(self.frame[m.row] - self.frame[m.col])))


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure amplitude vector or density matrix over a space."""

    space: SpaceDescriptor
    data: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        dim = self.space.dim
        if data.shape not in ((dim,), (dim, dim)):
            raise ValueError(f"state shape {data.shape} does not match space dim {dim}")
        if self.validate:
            check_state(data)

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_density(self) -> "QuantumState":
        return self if not self.is_pure else QuantumState(self.space, self.density(), validate=False)


def check_state(data: np.ndarray) -> None:
    """Raise ``ValueError`` unless ``data`` is a valid pure or mixed state."""
    if data.ndim == 1:
        norm = np.linalg.norm(data)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"pure state not normalized (norm={norm!r})")
        return
    herm = np.max(np.abs(data - data.conj().T)) if data.size else 0.0
    if herm > 1e-10:
        raise ValueError(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = np.trace(data).real
    if abs(tr - 1.0) > 1e-9:
        raise ValueError(f"density matrix trace {tr!r} differs from 1")
    lo = np.linalg.eigvalsh(0.5 * (data + data.conj().T))[0]
    if lo < -1e-8:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")


def basis_state(space: SpaceDescriptor, occupations: Sequence[int]) -> QuantumState:
    vec = np.zeros(space.dim, dtype=complex)
    vec[space.index(occupations)] = 1.0
    return QuantumState(space, vec)


def expectation(op: Operator, state: QuantumState) -> complex:
    if op.space != state.space:
        raise ValueError("operator and state live on different spaces")
    if state.is_pure:
        return complex(np.vdot(state.data, op.matrix @ state.data))
    # tr(A rho) = sum_ij A_ij rho_ji
    m = op.matrix.tocoo()
    return complex(np.sum(m.data * state.data[m.col, m.row]))
