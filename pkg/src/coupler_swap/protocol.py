"""Register states, the swap protocol, fidelity and staggered switching."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .dynamics import Diagnostics, EvolutionSpec, evolve_lindblad, evolve_schrodinger
from .hilbert import (
    GROUND,
    Operator,
    QuantumState,
    SpaceDescriptor,
    coupler_sigma,
    coupler_sigma_z,
    diagonal_operator,
    make_space,
    mode_annihilator,
    number_operator,
    total_excitation,
)
from .model import (
    DEFAULT_ISOLATION_MARGIN,
    DeviceParams,
    EffectiveParams,
    IsolationReport,
    check_isolation,
    effective_hamiltonian,
    effective_params,
    interaction_hamiltonian,
)

log = logging.getLogger(__name__)

METHODS = ("full_lindblad", "full_unitary", "effective")
STATE_KINDS = (
    "bell_psi_plus",
    "bell_psi_minus",
    "bell_phi_plus",
    "bell_phi_minus",
    "ghz",
    "w",
    "vacuum",
)
ALIASES = {
    "psi+": "bell_psi_plus",
    "psi-": "bell_psi_minus",
    "phi+": "bell_phi_plus",
    "phi-": "bell_phi_minus",
    "vac": "vacuum",
}
SHORT_NAMES = {v: k for k, v in ALIASES.items()}


@dataclass(frozen=True)
class LogicalState:
    """Normalised register amplitudes keyed by N-bit strings (qubit 1 first)."""

    n_qubits: int
    amplitudes: Mapping[str, complex]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = {}
        for key, val in self.amplitudes.items():
            if len(key) != self.n_qubits or set(key) - {"0", "1"}:
                raise ValueError(f"key {key!r} is not a {self.n_qubits}-bit string")
            amps[key] = complex(val)
        norm = sum(abs(v) ** 2 for v in amps.values())
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"amplitudes not normalised (sum |c|^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", dict(sorted(amps.items())))

    @classmethod
    def from_unnormalized(cls, n_qubits: int, amplitudes: Mapping[str, complex]) -> "LogicalState":
        norm = math.sqrt(sum(abs(complex(v)) ** 2 for v in amplitudes.values()))
        if norm == 0:
            raise ValueError("all amplitudes are zero")
        return cls(n_qubits, {k: complex(v) / norm for k, v in amplitudes.items()})

    @property
    def excitations(self) -> np.ndarray:
        """Mean occupation of each qubit."""
        out = np.zeros(self.n_qubits)
        for key, val in self.amplitudes.items():
            out += abs(val) ** 2 * np.array([int(b) for b in key])
        return out


def canonical_kind(kind: str) -> str:
    kind = kind.strip().lower()
    kind = ALIASES.get(kind, kind)
    if kind not in STATE_KINDS:
        raise ValueError(f"unknown state kind {kind!r}; choose from {STATE_KINDS + tuple(ALIASES)}")
    return kind


def make_named_state(kind: str, n_qubits: int = 2) -> LogicalState:
    kind = canonical_kind(kind)
    if kind.startswith("bell_"):
        if n_qubits != 2:
            raise ValueError(f"{kind} needs n_qubits = 2, got {n_qubits}")
        sign = 1.0 if kind.endswith("plus") else -1.0
        keys = ("01", "10") if "psi" in kind else ("00", "11")
        return LogicalState(2, {keys[0]: 1 / math.sqrt(2), keys[1]: sign / math.sqrt(2)})
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    if kind == "vacuum":
        return LogicalState(n_qubits, {"0" * n_qubits: 1.0})
    if kind == "ghz":
        return LogicalState(n_qubits, {"0" * n_qubits: 1 / math.sqrt(2), "1" * n_qubits: 1 / math.sqrt(2)})
    keys = ["0" * j + "1" + "0" * (n_qubits - j - 1) for j in range(n_qubits)]
    return LogicalState(n_qubits, {k: 1 / math.sqrt(n_qubits) for k in keys})


def _occupation_index(space: SpaceDescriptor, a_bits: Sequence[int], b_bits: Sequence[int]) -> int:
    return space.index(list(a_bits) + list(b_bits) + [GROUND])


def embed_logical(stateA: LogicalState, stateB: LogicalState, space: SpaceDescriptor) -> QuantumState:
    """``|psi_A> |psi_B> |g>`` with logical 0/1 mapped to Fock 0/1."""
    n = space.n_pairs
    if stateA.n_qubits != n or stateB.n_qubits != n:
        raise ValueError(f"registers need {n} qubits, got {stateA.n_qubits} and {stateB.n_qubits}")
    vec = np.zeros(space.dim, dtype=complex)
    for (ka, va), (kb, vb) in product(stateA.amplitudes.items(), stateB.amplitudes.items()):
        vec[_occupation_index(space, [int(c) for c in ka], [int(c) for c in kb])] += va * vb
    return QuantumState(space, vec)


def ideal_target(
    stateA: LogicalState,
    stateB: LogicalState,
    eff: EffectiveParams,
    space: SpaceDescriptor,
    pairing: Sequence[int] | None = None,
    swapped: Sequence[bool] | None = None,
    stagger: bool = False,
) -> QuantumState:
    """Phase-decorated swap of the two registers, coupler in ``|g>``.

    An excitation arriving in ``a_j`` carries ``exp(i pi phi_j)`` and one
    arriving in the partner ``b_{pairing[j]}`` carries ``exp(i pi theta_j)``.
    Pairs with ``swapped[j] = False`` are left untouched.
    """
    n = space.n_pairs
    if stateA.n_qubits != n or stateB.n_qubits != n:
        raise ValueError("register size does not match the space")
    if len(eff.lambdas) != n:
        raise ValueError("effective parameters do not match the space")
    if not stagger and not eff.uniform:
        raise ValueError("non-uniform |lambda_j| needs the staggered schedule")
    pairing = list(range(n)) if pairing is None else list(pairing)
    swapped = [True] * n if swapped is None else [bool(s) for s in swapped]
    phase_a = np.exp(1j * math.pi * np.asarray(eff.phi))
    phase_b = np.exp(1j * math.pi * np.asarray(eff.theta))
    vec = np.zeros(space.dim, dtype=complex)
    for (ka, va), (kb, vb) in product(stateA.amplitudes.items(), stateB.amplitudes.items()):
        a_in = [int(c) for c in ka]
        b_in = [int(c) for c in kb]
        a_out, b_out = list(a_in), list(b_in)
        amp = va * vb
        for j in range(n):
            k = pairing[j]
            if not swapped[j]:
                continue
            a_out[j], b_out[k] = b_in[k], a_in[j]
            if b_in[k]:
                amp *= phase_a[j]
            if a_in[j]:
                amp *= phase_b[j]
        vec[_occupation_index(space, a_out, b_out)] += amp
    return QuantumState(space, vec)


def phase_correction_operators(
    eff: EffectiveParams, space: SpaceDescriptor, pairing: Sequence[int] | None = None
) -> dict[str, Operator]:
    """``exp(-i pi phi_j n_{a_j})`` and ``exp(-i pi theta_j n_{b})`` keyed by mode label.

    Applied to the swapped output they remove the phases carried by the
    ideal target.
    """
    n = space.n_pairs
    pairing = list(range(n)) if pairing is None else list(pairing)
    occ = space.occupations()
    ops = {}
    for j in range(n):
        slot_a, slot_b = space.a_mode(j), space.b_mode(pairing[j])
        ops[space.label(slot_a)] = diagonal_operator(space, np.exp(-1j * math.pi * eff.phi[j] * occ[:, slot_a]))
        ops[space.label(slot_b)] = diagonal_operator(space, np.exp(-1j * math.pi * eff.theta[j] * occ[:, slot_b]))
    return ops


def fidelity(rho: QuantumState, target: QuantumState) -> float:
    """``sqrt(<psi|rho|psi>)`` clamped to ``[0, 1]``."""
    if rho.space != target.space:
        raise ValueError("state and target live on different spaces")
    if not target.is_pure:
        raise ValueError("target must be a pure state")
    psi = target.data
    if rho.is_pure:
        overlap = abs(np.vdot(psi, rho.data)) ** 2
    else:
        overlap = float(np.real(np.vdot(psi, rho.data @ psi)))
    return float(math.sqrt(min(max(overlap, 0.0), 1.0)))


@dataclass(frozen=True)
class ProtocolResult:
    fidelity: float
    avg_coupler_excitation: float
    swap_time: float
    method: str
    final_state: QuantumState
    target: QuantumState
    isolation: IsolationReport
    diagnostics: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()


def swap_time(params: DeviceParams) -> float:
    """``pi / (2 |lambda|)`` after checking that all pairs share ``|lambda|``."""
    eff = effective_params(params)
    if not eff.uniform:
        raise ValueError("non-uniform |lambda_j|: use run_staggered")
    return math.pi / (2.0 * abs(eff.lambdas[0]))


def dissipation_channels(params: DeviceParams, space: SpaceDescriptor):
    """Collapse channels (a_j, b_k, sigma) and the sigma_z dephasing channel."""
    rates = params.mode_decay_rates()
    collapse = [(mode_annihilator(space, m), float(rates[m])) for m in range(space.n_modes)]
    collapse.append((coupler_sigma(space), params.gamma))
    dephasing = [(coupler_sigma_z(space), params.gamma_phi)]
    return collapse, dephasing


def protocol_observables(space: SpaceDescriptor) -> dict[str, Operator]:
    sigma = coupler_sigma(space)
    obs = {"P_e": sigma.dag() @ sigma, "N_tot": total_excitation(space)}
    for m in range(space.n_modes):
        obs[f"n_{space.label(m)}"] = number_operator(space, m)
    return obs


def _summarise(traj, dissipative: bool) -> dict:
    d: Diagnostics = traj.diagnostics
    n_tot = traj.observables["N_tot"]
    return {
        "integrator": d.integrator,
        "support_dim": d.support_dim,
        "n_steps": d.n_steps,
        "max_trace_drift": d.max_trace_drift,
        "max_hermiticity_error": d.max_hermiticity_error,
        "min_eigenvalue": d.min_eigenvalue,
        "excitation_drift": None if dissipative else float(np.max(np.abs(n_tot - n_tot[0]))),
    }


def run_protocol(
    params: DeviceParams,
    stateA: LogicalState,
    stateB: LogicalState,
    method: str = "full_lindblad",
    crosstalk: bool = False,
    fock_levels: int = 3,
    integrator: str = "expm",
    dt: float | None = None,
    n_samples: int = 5,
    margin: float = DEFAULT_ISOLATION_MARGIN,
) -> ProtocolResult:
    """Evolve ``|psi_A>|psi_B>|g>`` for ``pi/(2 lambda)`` and score it against the ideal swap."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if crosstalk and method == "effective":
        raise ValueError("crosstalk is only modelled by the full methods")
    space = make_space(params.n_pairs, fock_levels)
    t_swap = swap_time(params)
    eff = effective_params(params)
    psi0 = embed_logical(stateA, stateB, space)
    target = ideal_target(stateA, stateB, eff, space, params.pairing)
    isolation = check_isolation(params, margin)
    warnings = tuple(isolation.violations)
    if warnings:
        log.debug("isolation conditions not met: %s", "; ".join(warnings))

    spec_kwargs = dict(
        t_final=t_swap,
        integrator=integrator,
        dt=dt,
        sample_times=tuple(np.linspace(0.0, t_swap, n_samples + 1)[1:-1]),
        observables=protocol_observables(space),
    )
    if method == "effective":
        H = effective_hamiltonian(params, space)
        traj = evolve_schrodinger(H, psi0, EvolutionSpec(**spec_kwargs))
        dissipative = False
    else:
        H = interaction_hamiltonian(params, space, crosstalk=crosstalk)
        if method == "full_lindblad":
            collapse, dephasing = dissipation_channels(params, space)
            spec = EvolutionSpec(collapse_channels=collapse, dephasing_channels=dephasing, **spec_kwargs)
            traj = evolve_lindblad(H, psi0.to_density(), spec)
            dissipative = any(r > 0 for _, r in collapse + dephasing)
        else:
            traj = evolve_schrodinger(H, psi0, EvolutionSpec(**spec_kwargs))
            dissipative = False

    final = traj.final_state
    return ProtocolResult(
        fidelity=fidelity(final, target),
        avg_coupler_excitation=traj.averages["P_e"],
        swap_time=t_swap,
        method=method,
        final_state=final,
        target=target,
        isolation=isolation,
        diagnostics=_summarise(traj, dissipative),
        warnings=warnings,
    )


@dataclass(frozen=True)
class StaggerSchedule:
    """Pair ``j`` is switched on at ``on_times[j]`` for ``durations[j]``; all end at ``t_max``."""

    on_times: tuple[float, ...]
    durations: tuple[float, ...]
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "on_times", tuple(float(x) for x in self.on_times))
        object.__setattr__(self, "durations", tuple(float(x) for x in self.durations))
        if len(self.on_times) != len(self.durations):
            raise ValueError("one on-time per duration")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        for tau, dur in zip(self.on_times, self.durations):
            if tau < 0 or dur < 0:
                raise ValueError("on-times and durations must be >= 0")
            if abs(tau + dur - self.t_max) > 1e-9 * self.t_max:
                raise ValueError(f"pair window [{tau}, {tau + dur}] does not end at t_max = {self.t_max}")

    @property
    def active(self) -> tuple[bool, ...]:
        return tuple(d > 0 for d in self.durations)


def compute_stagger_schedule(lambdas: Sequence[float]) -> StaggerSchedule:
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0 or np.any(lam == 0):
        raise ValueError("every lambda_j must be nonzero")
    durations = math.pi / (2.0 * np.abs(lam))
    t_max = float(durations.max())
    return StaggerSchedule(tuple(t_max - durations), tuple(durations), t_max)


def run_staggered(
    params: DeviceParams,
    stateA: LogicalState,
    stateB: LogicalState,
    schedule: StaggerSchedule | None = None,
    fock_levels: int = 3,
    margin: float = DEFAULT_ISOLATION_MARGIN,
) -> ProtocolResult:
    """Effective dynamics with pair ``j`` coupled only on ``[tau_j, t_max]``.

    Each active pair completes exactly one swap; a pair with zero duration
    is never switched on and keeps its contents.
    """
    eff = effective_params(params)
    if schedule is None:
        schedule = compute_stagger_schedule(eff.lambdas)
    n = params.n_pairs
    if len(schedule.durations) != n:
        raise ValueError("schedule does not match the number of pairs")
    for j, dur in enumerate(schedule.durations):
        expected = math.pi / (2.0 * abs(eff.lambdas[j]))
        if dur > 0 and abs(dur - expected) > 1e-9 * expected:
            raise ValueError(f"pair {j + 1}: duration {dur:.6e} s differs from pi/(2|lambda|) = {expected:.6e} s")

    space = make_space(n, fock_levels)
    state = embed_logical(stateA, stateB, space)
    target = ideal_target(stateA, stateB, eff, space, params.pairing, swapped=schedule.active, stagger=True)
    obs = protocol_observables(space)
    edges = sorted({0.0, schedule.t_max, *(t for t, d in zip(schedule.on_times, schedule.durations) if d > 0)})
    weighted = 0.0
    drift = 0.0
    n_total = float(np.real(np.vdot(state.data, obs["N_tot"] @ state.data)))
    for t_a, t_b in zip(edges[:-1], edges[1:]):
        if t_b - t_a <= 1e-15 * schedule.t_max:
            continue
        pairs = [j for j in range(n) if schedule.durations[j] > 0 and schedule.on_times[j] <= t_a * (1 + 1e-12)]
        if not pairs:
            continue
        H = effective_hamiltonian(params, space, pairs=pairs)
        spec = EvolutionSpec(t_final=t_b, t_start=t_a, integrator="expm", observables=obs)
        traj = evolve_schrodinger(H, state, spec)
        state = traj.final_state
        weighted += traj.averages["P_e"] * (t_b - t_a)
        drift = max(drift, float(np.max(np.abs(traj.observables["N_tot"] - n_total))))

    isolation = check_isolation(params, margin)
    return ProtocolResult(
        fidelity=fidelity(state, target),
        avg_coupler_excitation=weighted / schedule.t_max,
        swap_time=schedule.t_max,
        method="effective",
        final_state=state,
        target=target,
        isolation=isolation,
        diagnostics={"integrator": "expm", "excitation_drift": drift, "schedule": schedule},
        warnings=tuple(isolation.violations),
    )
