"""Time evolution: Schrödinger and Lindblad propagation plus closed-form oracles.

Hamiltonians may be given as a :class:`FrameHamiltonian` (``exp(iGt) H_0
exp(-iGt)`` with diagonal ``G``), a constant :class:`Operator`, or any
callable ``t -> Operator``.  Three integrators are available:

``rk4``       fixed-step fourth-order Runge-Kutta on ``H(t)`` as given.
``adaptive``  embedded Runge-Kutta (scipy ``solve_ivp``) on ``H(t)`` as given.
``expm``      exact propagation with the constant generator ``H_0 + G`` in the
              rotating frame, transformed back at every sample time.

For frame and constant Hamiltonians the evolution is restricted to the basis
states reachable from the initial support through the Hamiltonian and the
collapse operators.  The excluded block stays exactly zero, so this changes
nothing but the cost.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, Sequence, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .hilbert import (
    FrameHamiltonian,
    Operator,
    QuantumState,
    SpaceDescriptor,
    check_state,
    make_space,
    mode_creator,
    number_operator,
)
from .model import swap_hamiltonian

log = logging.getLogger(__name__)

HamiltonianSource = Union[FrameHamiltonian, Operator, Callable[[float], Operator]]
INTEGRATORS = ("rk4", "adaptive", "expm")
MAX_DT = 1e-12


class IntegrationError(RuntimeError):
    """Numerical failure during propagation (NaN, divergence, step underflow)."""

    def __init__(self, message: str, time: float | None = None, norm: float | None = None):
        detail = message
        if time is not None:
            detail += f" at t={time:.6e} s"
        if norm is not None:
            detail += f" (state norm {norm:.6e})"
        super().__init__(detail)
        self.time = time
        self.norm = norm


@dataclass(frozen=True)
class EvolutionSpec:
    """Run settings.  ``dephasing_channels`` act as ``rate * (Z rho Z - rho)``."""

    t_final: float
    collapse_channels: Sequence[tuple[Operator, float]] = ()
    dephasing_channels: Sequence[tuple[Operator, float]] = ()
    integrator: str = "rk4"
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    sample_times: Sequence[float] = ()
    dt: float | None = None
    t_start: float = 0.0
    observables: Mapping[str, Operator] = field(default_factory=dict)
    adaptive_method: str = "DOP853"
    reduce_support: bool = True

    def __post_init__(self):
        if not self.t_final > self.t_start:
            raise ValueError(f"t_final ({self.t_final}) must exceed t_start ({self.t_start})")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.integrator!r}; choose from {INTEGRATORS}")
        for _, rate in tuple(self.collapse_channels) + tuple(self.dephasing_channels):
            if rate < 0:
                raise ValueError("channel rates must be >= 0")
        for t in self.sample_times:
            if not self.t_start <= t <= self.t_final:
                raise ValueError(f"sample time {t} outside [{self.t_start}, {self.t_final}]")

    def times(self) -> np.ndarray:
        return np.unique(np.array([self.t_start, *self.sample_times, self.t_final], dtype=float))


@dataclass(frozen=True)
class Diagnostics:
    integrator: str
    support_dim: int
    n_steps: int
    max_trace_drift: float
    max_hermiticity_error: float
    min_eigenvalue: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: list[QuantumState]
    observables: dict[str, np.ndarray]
    averages: dict[str, float]
    diagnostics: Diagnostics

    @property
    def final_state(self) -> QuantumState:
        return self.states[-1]


# ---------------------------------------------------------------- reduction


def reachable_support(start: np.ndarray, patterns: Sequence[sp.spmatrix]) -> np.ndarray:
    """Indices reachable from ``start`` (boolean mask) through nonzero entries.

    A nonzero ``M[r, c]`` is an edge ``c -> r``.
    """
    reached = np.asarray(start, dtype=bool).copy()
    if not patterns:
        return np.flatnonzero(reached)
    adj = sum(abs(sp.csr_matrix(p)) for p in patterns)
    adj = (adj > 0).astype(np.int8)
    while True:
        grown = reached | (adj @ reached.astype(np.int8) > 0)
        if np.array_equal(grown, reached):
            return np.flatnonzero(reached)
        reached = grown


@dataclass
class _Problem:
    """Hamiltonian, channels and observables restricted to the kept basis."""

    space: SpaceDescriptor
    keep: np.ndarray
    base: sp.csr_matrix | None
    frame: np.ndarray | None
    func: Callable[[float], Operator] | None
    jumps: list[tuple[np.ndarray, float]]
    dephasers: list[tuple[np.ndarray, float]]
    observables: dict[str, np.ndarray]

    @property
    def dim(self) -> int:
        return len(self.keep)

    def __post_init__(self):
        if self.base is not None:
            m = self.base.tocoo()
            self._rows, self._cols, self._data = m.row, m.col, m.data
            self._freq = self.frame[m.row] - self.frame[m.col]
        damping = np.zeros((self.dim, self.dim), dtype=complex)
        for L, rate in self.jumps:
            damping -= 0.5 * rate * (L.conj().T @ L)
        self.damping = damping
        self.dephasing_rate = sum(rate for _, rate in self.dephasers)

    def hamiltonian(self, t: float) -> np.ndarray:
        if self.func is not None:
            return self.func(t).dense()
        h = np.zeros((self.dim, self.dim), dtype=complex)
        h[self._rows, self._cols] = self._data * np.exp(1j * self._freq * t)
        return h

    def max_frequency(self) -> float:
        if self.func is not None:
            return 0.0
        spread = float(np.max(np.abs(self._freq))) if self._freq.size else 0.0
        norm = float(abs(self.base).sum(axis=1).max()) if self.base.nnz else 0.0
        return max(spread, norm)

    def rotating_generator(self) -> np.ndarray:
        if self.base is None:
            raise ValueError("the expm integrator needs a FrameHamiltonian or constant Operator")
        return self.base.toarray() + np.diag(self.frame)

    def check_frame_compatible(self) -> None:
        """Channels and observables must be eigenoperators of the frame."""
        for name, mat in [("collapse", L) for L, _ in self.jumps] + [
            ("dephasing", Z) for Z, _ in self.dephasers
        ]:
            if not _is_eigenoperator(mat, self.frame):
                raise ValueError(f"{name} operator is not an eigenoperator of the rotating frame")
        for name, mat in self.observables.items():
            if not _commutes_with_frame(mat, self.frame):
                raise ValueError(f"observable {name!r} does not commute with the rotating frame")

    def lift(self, data: np.ndarray) -> np.ndarray:
        n = self.space.dim
        if data.ndim == 1:
            out = np.zeros(n, dtype=complex)
            out[self.keep] = data
        else:
            out = np.zeros((n, n), dtype=complex)
            out[np.ix_(self.keep, self.keep)] = data
        return out


def _frame_scale(frame: np.ndarray) -> float:
    return max(float(np.max(np.abs(frame))) if frame.size else 0.0, 1.0)


def _is_eigenoperator(mat: np.ndarray, frame: np.ndarray) -> bool:
    r, c = np.nonzero(mat)
    if r.size == 0:
        return True
    freq = frame[r] - frame[c]
    return bool(np.ptp(freq) <= 1e-9 * _frame_scale(frame))


def _commutes_with_frame(mat: np.ndarray, frame: np.ndarray) -> bool:
    r, c = np.nonzero(mat)
    return bool(r.size == 0 or np.max(np.abs(frame[r] - frame[c])) <= 1e-9 * _frame_scale(frame))


def _prepare(
    H: HamiltonianSource, state: np.ndarray, spec: EvolutionSpec, space: SpaceDescriptor
) -> _Problem:
    if isinstance(H, FrameHamiltonian):
        base, frame, func = H.base.matrix, H.frame, None
    elif isinstance(H, Operator):
        base, frame, func = H.matrix, np.zeros(space.dim), None
    elif callable(H):
        base, frame, func = None, None, H
    else:
        raise TypeError(f"unsupported Hamiltonian source {type(H).__name__}")
    for op, _ in tuple(spec.collapse_channels) + tuple(spec.dephasing_channels):
        if op.space != space:
            raise ValueError("channel operator lives on a different space")
    for op in spec.observables.values():
        if op.space != space:
            raise ValueError("observable lives on a different space")
    if base is not None and H.space != space:
        raise ValueError("Hamiltonian and state live on different spaces")

    jumps_full = [(op.matrix, r) for op, r in spec.collapse_channels if r > 0]
    deph_full = [(op.matrix, r) for op, r in spec.dephasing_channels if r > 0]

    if func is None and spec.reduce_support:
        start = np.abs(state) > 0 if state.ndim == 1 else (np.abs(state) > 0).any(axis=1)
        patterns = [base] + [L for L, _ in jumps_full] + [L.conj().T @ L for L, _ in jumps_full]
        patterns += [Z for Z, _ in deph_full]
        keep = reachable_support(start, patterns)
    else:
        keep = np.arange(space.dim)

    def cut(m):
        return sp.csr_matrix(m)[keep][:, keep]

    return _Problem(
        space=space,
        keep=keep,
        base=None if base is None else cut(base),
        frame=None if frame is None else frame[keep],
        func=func,
        jumps=[(cut(L).toarray(), r) for L, r in jumps_full],
        dephasers=[(cut(Z).toarray(), r) for Z, r in deph_full],
        observables={k: cut(op.matrix).toarray() for k, op in spec.observables.items()},
    )


def default_dt(problem: _Problem) -> float:
    """``min(1 ps, 2 pi / (200 w_max))`` with ``w_max`` the fastest rate in ``H``."""
    w = problem.max_frequency()
    return MAX_DT if w == 0 else min(MAX_DT, 2 * math.pi / (200.0 * w))


def _steps(interval: float, dt: float) -> int:
    return max(1, int(math.ceil(interval / dt - 1e-9)))


def _check_finite(data: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(data)):
        raise IntegrationError("non-finite state encountered", t, float(np.linalg.norm(np.nan_to_num(data))))


# ---------------------------------------------------------------- pure states


def _expect_pure(op: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, op @ psi)))


def evolve_schrodinger(H: HamiltonianSource, psi0: QuantumState, spec: EvolutionSpec) -> Trajectory:
    """Solve ``i d psi/dt = H(t) psi`` (hbar = 1) over ``[t_start, t_final]``."""
    if not psi0.is_pure:
        raise ValueError("evolve_schrodinger needs a pure initial state")
    if spec.collapse_channels or spec.dephasing_channels:
        log.debug("dissipative channels ignored by evolve_schrodinger")
    problem = _prepare(H, psi0.data, spec, psi0.space)
    psi = psi0.data[problem.keep].copy()
    times = spec.times()
    obs = problem.observables

    if spec.integrator == "expm":
        problem.check_frame_compatible()
        states, integrals, n_steps = _schrodinger_exact(problem, psi, times)
    elif spec.integrator == "rk4":
        states, integrals, n_steps = _schrodinger_rk4(problem, psi, times, spec.dt or default_dt(problem))
    else:
        states, integrals, n_steps = _schrodinger_adaptive(problem, psi, times, spec)

    drift = max(abs(np.linalg.norm(s) - 1.0) for s in states)
    if drift > 1e-8:
        log.warning("norm drift %.3e exceeds 1e-8", drift)
    duration = times[-1] - times[0]
    return Trajectory(
        times=times,
        states=[QuantumState(psi0.space, problem.lift(s), validate=False) for s in states],
        observables={k: np.array([_expect_pure(o, s) for s in states]) for k, o in obs.items()},
        averages={k: float(integrals[i]) / duration for i, k in enumerate(obs)},
        diagnostics=Diagnostics(spec.integrator, problem.dim, n_steps, drift, 0.0, 0.0),
    )


def _schrodinger_exact(problem: _Problem, psi: np.ndarray, times: np.ndarray):
    """Eigendecomposition of the rotating-frame generator; averages in closed form."""
    energies, vecs = la.eigh(problem.rotating_generator())
    frame = problem.frame
    t0 = times[0]
    coeffs = vecs.conj().T @ (np.exp(-1j * frame * t0) * psi)
    states = []
    for t in times:
        psi_rot = vecs @ (np.exp(-1j * energies * (t - t0)) * coeffs)
        states.append(np.exp(1j * frame * t) * psi_rot)
    duration = times[-1] - t0
    gaps = energies[:, None] - energies[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(
            np.abs(gaps) * duration < 1e-12,
            duration,
            (np.exp(1j * gaps * duration) - 1.0) / (1j * gaps),
        )
    integrals = []
    for op in problem.observables.values():
        rotated = vecs.conj().T @ op @ vecs
        integrals.append(np.real(np.sum(np.outer(coeffs.conj(), coeffs) * rotated * kernel)))
    for s, t in zip(states, times):
        _check_finite(s, t)
    return states, integrals, 0


def _schrodinger_rk4(problem: _Problem, psi: np.ndarray, times: np.ndarray, dt: float):
    ops = list(problem.observables.values())

    def rhs(t, v):
        return -1j * (problem.hamiltonian(t) @ v)

    states = [psi.copy()]
    integrals = np.zeros(len(ops))
    prev = np.array([_expect_pure(o, psi) for o in ops])
    n_total = 0
    for t_a, t_b in zip(times[:-1], times[1:]):
        n = _steps(t_b - t_a, dt)
        h = (t_b - t_a) / n
        for i in range(n):
            t = t_a + i * h
            k1 = rhs(t, psi)
            k2 = rhs(t + h / 2, psi + h / 2 * k1)
            k3 = rhs(t + h / 2, psi + h / 2 * k2)
            k4 = rhs(t + h, psi + h * k3)
            psi = psi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            _check_finite(psi, t + h)
            cur = np.array([_expect_pure(o, psi) for o in ops])
            integrals += 0.5 * h * (prev + cur)
            prev = cur
        n_total += n
        states.append(psi.copy())
    return states, integrals, n_total


def _schrodinger_adaptive(problem: _Problem, psi: np.ndarray, times: np.ndarray, spec: EvolutionSpec):
    ops = list(problem.observables.values())
    d = problem.dim

    def fun(t, y):
        v = y[:d]
        if not np.all(np.isfinite(v)):
            raise IntegrationError("non-finite state encountered", t, float(np.linalg.norm(np.nan_to_num(v))))
        dv = -1j * (problem.hamiltonian(t) @ v)
        return np.concatenate([dv, [np.vdot(v, o @ v) for o in ops]])

    y0 = np.concatenate([psi, np.zeros(len(ops), dtype=complex)])
    sol = _solve(fun, times, y0, spec)
    states = [sol.y[:d, i] for i in range(len(times))]
    return states, np.real(sol.y[d:, -1]), int(sol.nfev)


def _solve(fun, times, y0, spec: EvolutionSpec):
    sol = solve_ivp(
        fun,
        (times[0], times[-1]),
        y0,
        method=spec.adaptive_method,
        t_eval=times,
        rtol=spec.rel_tol,
        atol=spec.abs_tol,
    )
    if sol.status != 0:
        t_fail = float(sol.t[-1]) if sol.t.size else float(times[0])
        raise IntegrationError(f"adaptive integrator failed: {sol.message}", t_fail)
    return sol


# ---------------------------------------------------------------- density matrices


def _lindblad_rhs(problem: _Problem, t: float, rho: np.ndarray) -> np.ndarray:
    m = -1j * problem.hamiltonian(t) + problem.damping
    out = m @ rho + rho @ m.conj().T
    for L, rate in problem.jumps:
        out += rate * (L @ rho @ L.conj().T)
    for Z, rate in problem.dephasers:
        out += rate * (Z @ rho @ Z.conj().T)
    if problem.dephasing_rate:
        out -= problem.dephasing_rate * rho
    return out


def lindblad_superoperator(problem: _Problem) -> sp.csr_matrix:
    """Row-major vectorised generator in the rotating frame: ``vec(A X B) = (A kron B^T) vec X``."""
    d = problem.dim
    eye = sp.identity(d, format="csr", dtype=complex)
    m = sp.csr_matrix(-1j * problem.rotating_generator() + problem.damping)
    sup = sp.kron(m, eye, format="csr") + sp.kron(eye, m.conj(), format="csr")
    for L, rate in problem.jumps:
        Ls = sp.csr_matrix(L)
        sup = sup + rate * sp.kron(Ls, Ls.conj(), format="csr")
    for Z, rate in problem.dephasers:
        Zs = sp.csr_matrix(Z)
        sup = sup + rate * sp.kron(Zs, Zs.conj(), format="csr")
    if problem.dephasing_rate:
        sup = sup - problem.dephasing_rate * sp.identity(d * d, format="csr")
    return sup.tocsr()


def evolve_lindblad(H: HamiltonianSource, rho0: QuantumState, spec: EvolutionSpec) -> Trajectory:
    """Integrate ``d rho/dt = -i[H(t), rho] + sum_k r_k D[L_k] rho + sum_z r_z (Z rho Z - rho)``."""
    data = rho0.density()
    if not rho0.is_pure:
        check_state(data)
    problem = _prepare(H, data, spec, rho0.space)
    rho = data[np.ix_(problem.keep, problem.keep)].copy()
    times = spec.times()

    if spec.integrator == "expm":
        problem.check_frame_compatible()
        states, integrals, n_steps = _lindblad_expm(problem, rho, times)
    elif spec.integrator == "rk4":
        states, integrals, n_steps = _lindblad_rk4(problem, rho, times, spec.dt or default_dt(problem))
    else:
        states, integrals, n_steps = _lindblad_adaptive(problem, rho, times, spec)

    trace_drift = max(abs(np.trace(s).real - 1.0) for s in states)
    herm = max(float(np.max(np.abs(s - s.conj().T))) for s in states)
    min_eig = min(float(la.eigvalsh(0.5 * (s + s.conj().T))[0]) for s in states)
    if problem.dim < rho0.space.dim:
        min_eig = min(min_eig, 0.0)
    duration = times[-1] - times[0]
    obs = problem.observables
    return Trajectory(
        times=times,
        states=[QuantumState(rho0.space, problem.lift(s), validate=False) for s in states],
        observables={k: np.array([np.real(np.sum(o * s.T)) for s in states]) for k, o in obs.items()},
        averages={k: float(integrals[i]) / duration for i, k in enumerate(obs)},
        diagnostics=Diagnostics(spec.integrator, problem.dim, n_steps, trace_drift, herm, min_eig),
    )


def _lindblad_expm(problem: _Problem, rho: np.ndarray, times: np.ndarray):
    """Exact propagation with the observable integrals appended as extra rows."""
    d = problem.dim
    ops = list(problem.observables.values())
    sup = lindblad_superoperator(problem)
    n_obs = len(ops)
    if n_obs:
        rows = sp.csr_matrix(np.array([o.T.reshape(-1) for o in ops]))
        sup = sp.bmat([[sup, None], [rows, sp.csr_matrix((n_obs, n_obs))]], format="csr")
    frame = problem.frame
    t0 = times[0]
    phase0 = np.exp(-1j * frame * t0)
    rho_rot = phase0[:, None] * rho * phase0.conj()[None, :]
    v = np.concatenate([rho_rot.reshape(-1), np.zeros(n_obs, dtype=complex)])
    states = [rho.copy()]
    for t_a, t_b in zip(times[:-1], times[1:]):
        v = expm_multiply(sup * (t_b - t_a), v)
        _check_finite(v, t_b)
        u = np.exp(1j * frame * t_b)
        states.append(u[:, None] * v[: d * d].reshape(d, d) * u.conj()[None, :])
    return states, np.real(v[d * d :]), len(times) - 1


def _lindblad_rk4(problem: _Problem, rho: np.ndarray, times: np.ndarray, dt: float):
    ops = list(problem.observables.values())

    def expect(r):
        return np.array([np.real(np.sum(o * r.T)) for o in ops])

    states = [rho.copy()]
    integrals = np.zeros(len(ops))
    prev = expect(rho)
    n_total = 0
    for t_a, t_b in zip(times[:-1], times[1:]):
        n = _steps(t_b - t_a, dt)
        h = (t_b - t_a) / n
        for i in range(n):
            t = t_a + i * h
            k1 = _lindblad_rhs(problem, t, rho)
            k2 = _lindblad_rhs(problem, t + h / 2, rho + h / 2 * k1)
            k3 = _lindblad_rhs(problem, t + h / 2, rho + h / 2 * k2)
            k4 = _lindblad_rhs(problem, t + h, rho + h * k3)
            rho = rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            _check_finite(rho, t + h)
            cur = expect(rho)
            integrals += 0.5 * h * (prev + cur)
            prev = cur
        n_total += n
        states.append(rho.copy())
    return states, integrals, n_total


def _lindblad_adaptive(problem: _Problem, rho: np.ndarray, times: np.ndarray, spec: EvolutionSpec):
    d = problem.dim
    ops = list(problem.observables.values())

    def fun(t, y):
        r = y[: d * d].reshape(d, d)
        if not np.all(np.isfinite(r)):
            raise IntegrationError("non-finite state encountered", t, float(np.linalg.norm(np.nan_to_num(r))))
        dr = _lindblad_rhs(problem, t, r)
        return np.concatenate([dr.reshape(-1), [np.sum(o * r.T) for o in ops]])

    y0 = np.concatenate([rho.reshape(-1), np.zeros(len(ops), dtype=complex)])
    sol = _solve(fun, times, y0, spec)
    states = [sol.y[: d * d, i].reshape(d, d) for i in range(len(times))]
    return states, np.real(sol.y[d * d :, -1]), int(sol.nfev)


# ---------------------------------------------------------------- closed forms


Amplitudes = Mapping[str, complex]


def _check_register(c: Amplitudes, n: int, name: str) -> None:
    for key in c:
        if len(key) != n or set(key) - {"0", "1"}:
            raise ValueError(f"{name} key {key!r} is not a {n}-bit string")


def analytic_joint_evolution(
    cA: Amplitudes, cB: Amplitudes, lambdas: Sequence[float], t: float
) -> dict[tuple[int, ...], complex]:
    """Exact state after ``exp(-i H_e t)`` on ``sum c_n d_m |n>_A |m>_B``.

    Uses ``a_j^+ -> cos(l_j t) a_j^+ + i sin(l_j t) b_j^+`` and the mirror
    rule for ``b_j^+``.  Keys are Fock occupations ``(a_1..a_N, b_1..b_N)``;
    doubly occupied modes appear when both partners start excited.
    """
    n = len(lambdas)
    _check_register(cA, n, "cA")
    _check_register(cB, n, "cB")
    cos = [math.cos(lam * t) for lam in lambdas]
    isin = [1j * math.sin(lam * t) for lam in lambdas]
    out: dict[tuple[int, ...], complex] = {}
    for (ka, va), (kb, vb) in product(cA.items(), cB.items()):
        amp0 = complex(va) * complex(vb)
        if amp0 == 0:
            continue
        # each excited mode contributes one creation operator with two images
        factors = []
        for j, bit in enumerate(ka):
            if bit == "1":
                factors.append(((j, cos[j]), (n + j, isin[j])))
        for j, bit in enumerate(kb):
            if bit == "1":
                factors.append(((n + j, cos[j]), (j, isin[j])))
        for choice in product(*factors):
            occ = [0] * (2 * n)
            amp = amp0
            for slot, coeff in choice:
                occ[slot] += 1
                amp *= coeff
            if amp == 0:
                continue
            key = tuple(occ)
            out[key] = out.get(key, 0.0) + amp
    # (c^+)^k |0> = sqrt(k!) |k>
    for key in out:
        out[key] *= math.sqrt(math.prod(math.factorial(k) for k in key))
    return out


def analytic_effective_evolution(
    cA: Amplitudes,
    cB: Amplitudes,
    lambdas: Sequence[float],
    t: float,
    swap_form: bool = False,
) -> tuple[dict[str, complex], dict[str, complex]]:
    """Register amplitudes after ``exp(-i H_e t)`` when the output is a product.

    That is the case when every pair is either fully swapped
    (``sin(l_j t) = +-1``: excitations move with factor ``i sin(l_j t)``,
    which at ``t = pi/(2 lambda)`` is ``i^(l_j/lambda)``) or fully returned
    (``cos(l_j t) = +-1``: factor ``cos(l_j t)`` per excitation).  Other
    times mix the registers; use :func:`analytic_joint_evolution` there.

    ``swap_form=True`` additionally asserts equal ``|l_j|`` and
    ``t = pi / (2 |l|)``.
    """
    n = len(lambdas)
    _check_register(cA, n, "cA")
    _check_register(cB, n, "cB")
    mags = np.abs(np.asarray(lambdas, dtype=float))
    if swap_form:
        if n == 0 or np.any(mags == 0) or np.any(np.abs(mags - mags[0]) > 1e-9 * mags[0]):
            raise ValueError("swap form needs equal |lambda_j| across pairs")
        if abs(t - math.pi / (2 * mags[0])) > 1e-9 * t:
            raise ValueError("swap form is evaluated at t = pi / (2 |lambda|)")
    sines = [math.sin(lam * t) for lam in lambdas]
    cosines = [math.cos(lam * t) for lam in lambdas]
    swapped = all(abs(abs(s) - 1.0) < 1e-12 for s in sines)
    kept = all(abs(abs(c) - 1.0) < 1e-12 for c in cosines)
    if swapped:
        factor = [1j * round(s) for s in sines]
    elif kept:
        factor = [complex(round(c)) for c in cosines]
    else:
        raise ValueError("registers are not in a product state at this time; use analytic_joint_evolution")

    def decorate(c: Amplitudes) -> dict[str, complex]:
        out = {}
        for key, val in c.items():
            amp = complex(val)
            for j, bit in enumerate(key):
                if bit == "1":
                    amp *= factor[j]
            out[key] = amp
        return out

    if swapped:
        return decorate(cB), decorate(cA)
    return decorate(cA), decorate(cB)


def verify_heisenberg_transform(lam: float, t: float, fock_levels: int = 3) -> float:
    """Max deviation between ``exp(-iH_e t) a^+ exp(iH_e t)`` and ``cos a^+ + i sin b^+``.

    Compared on states with at most ``fock_levels - 2`` photons in total, where
    the truncated space contains the whole image of ``a^+``.
    """
    space = make_space(1, fock_levels)
    h = swap_hamiltonian(space, [lam]).dense()
    u = la.expm(-1j * h * t)
    ad = mode_creator(space, space.a_mode(0)).dense()
    bd = mode_creator(space, space.b_mode(0)).dense()
    lhs = u @ ad @ u.conj().T
    rhs = math.cos(lam * t) * ad + 1j * math.sin(lam * t) * bd
    photons = (number_operator(space, 0) + number_operator(space, 1)).dense().diagonal().real
    cols = photons <= fock_levels - 2
    return float(np.max(np.abs((lhs - rhs)[:, cols])))
