"""Device parameters and every Hamiltonian of the coupler-mediated swap.

All frequencies, detunings and couplings are angular (rad/s) and all rates
are in 1/s.  Detunings are always derived from frequencies:
``delta_a[j] = omega_c - omega_a[j]`` and ``delta_b[j] = omega_c - omega_b[j]``.

Pair ``j`` couples ``a_{j}`` to ``b_{pairing[j]}``; the per-pair arrays
``omega_b``, ``mu`` and ``kappa_b`` describe that partner mode.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .hilbert import (
    EXCITED,
    GROUND,
    FrameHamiltonian,
    Operator,
    SpaceDescriptor,
    coupler_projector,
    coupler_sigma,
    coupler_sigma_z,
    mode_annihilator,
    zero,
)

DEFAULT_ISOLATION_MARGIN = 10.0


def _tuple(values, n=None, name="value") -> tuple[float, ...]:
    out = tuple(float(v) for v in np.atleast_1d(values))
    if n is not None and len(out) != n:
        raise ValueError(f"{name} needs {n} entries, got {len(out)}")
    return out


def _mode_label(label: str, n_pairs: int) -> str:
    label = str(label).strip().lower()
    if len(label) < 2 or label[0] not in "ab" or not label[1:].isdigit():
        raise ValueError(f"crosstalk key references unknown mode {label!r}")
    if not 1 <= int(label[1:]) <= n_pairs:
        raise ValueError(f"crosstalk key references unknown mode {label!r}")
    return f"{label[0]}{int(label[1:])}"


@dataclass(frozen=True)
class DeviceParams:
    omega_c: float
    omega_a: tuple[float, ...]
    omega_b: tuple[float, ...]
    g: tuple[float, ...]
    mu: tuple[float, ...]
    kappa_a: tuple[float, ...] | None = None
    kappa_b: tuple[float, ...] | None = None
    gamma: float = 0.0
    gamma_phi: float = 0.0
    crosstalk: tuple[tuple[tuple[str, str], float], ...] | Mapping = ()
    pairing: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(np.atleast_1d(self.omega_a))
        if n < 1:
            raise ValueError("need at least one pair")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("omega_c", float(self.omega_c))
        set_("omega_a", _tuple(self.omega_a, n, "omega_a"))
        set_("omega_b", _tuple(self.omega_b, n, "omega_b"))
        set_("g", _tuple(self.g, n, "g"))
        set_("mu", _tuple(self.mu, n, "mu"))
        set_("kappa_a", _tuple(self.kappa_a if self.kappa_a is not None else [0.0] * n, n, "kappa_a"))
        set_("kappa_b", _tuple(self.kappa_b if self.kappa_b is not None else [0.0] * n, n, "kappa_b"))
        set_("gamma", float(self.gamma))
        set_("gamma_phi", float(self.gamma_phi))

        rates = self.kappa_a + self.kappa_b + (self.gamma, self.gamma_phi)
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise ValueError("dissipation rates must be finite and >= 0")
        if any(c == 0 or not math.isfinite(c) for c in self.g + self.mu):
            raise ValueError("coupling strengths must be nonzero and finite")

        pairing = tuple(range(n)) if self.pairing is None else tuple(int(p) for p in self.pairing)
        if sorted(pairing) != list(range(n)):
            raise ValueError(f"pairing {pairing} is not a permutation of 0..{n - 1}")
        set_("pairing", pairing)

        items = self.crosstalk.items() if isinstance(self.crosstalk, Mapping) else self.crosstalk
        canon = {}
        for key, value in items:
            if isinstance(key, str):
                key = key.replace("-", ",").split(",")
            a, b = (_mode_label(k, n) for k in key)
            if a == b:
                raise ValueError(f"crosstalk key couples mode {a} to itself")
            canon[tuple(sorted((a, b)))] = float(value)
        set_("crosstalk", tuple(sorted(canon.items())))

    @property
    def n_pairs(self) -> int:
        return len(self.omega_a)

    @property
    def delta_a(self) -> np.ndarray:
        return self.omega_c - np.asarray(self.omega_a)

    @property
    def delta_b(self) -> np.ndarray:
        return self.omega_c - np.asarray(self.omega_b)

    @property
    def crosstalk_map(self) -> dict[tuple[str, str], float]:
        return dict(self.crosstalk)

    def mode_frequencies(self) -> np.ndarray:
        """Frequencies of the physical modes in slot order ``a_1..a_N, b_1..b_N``."""
        n = self.n_pairs
        freqs = np.empty(2 * n)
        freqs[:n] = self.omega_a
        for j, k in enumerate(self.pairing):
            freqs[n + k] = self.omega_b[j]
        return freqs

    def mode_decay_rates(self) -> np.ndarray:
        n = self.n_pairs
        rates = np.empty(2 * n)
        rates[:n] = self.kappa_a
        for j, k in enumerate(self.pairing):
            rates[n + k] = self.kappa_b[j]
        return rates

    def with_detunings(self, delta_a: Sequence[float], delta_b: Sequence[float] | None = None) -> "DeviceParams":
        """Same device with resonator frequencies moved to the given detunings."""
        delta_a = np.asarray(delta_a, dtype=float)
        delta_b = delta_a if delta_b is None else np.asarray(delta_b, dtype=float)
        return replace(
            self,
            omega_a=tuple(self.omega_c - delta_a),
            omega_b=tuple(self.omega_c - delta_b),
        )

    def with_uniform_crosstalk(self, fraction: float) -> "DeviceParams":
        """Couple every pair of resonator modes with ``fraction * g[0]``."""
        if fraction < 0:
            raise ValueError("crosstalk fraction must be >= 0")
        if fraction == 0:
            return replace(self, crosstalk=())
        n = self.n_pairs
        labels = [f"a{j + 1}" for j in range(n)] + [f"b{k + 1}" for k in range(n)]
        value = fraction * self.g[0]
        return replace(self, crosstalk={pair: value for pair in itertools.combinations(labels, 2)})

    def b_slot(self, space: SpaceDescriptor, j: int) -> int:
        return space.b_mode(self.pairing[j])


def _check_space(params: DeviceParams, space: SpaceDescriptor) -> None:
    if space.n_pairs != params.n_pairs:
        raise ValueError(f"space has {space.n_pairs} pairs but device has {params.n_pairs}")


def lambda_equal_detuning(g: float, mu: float, delta: float) -> float:
    """Superexchange strength ``g mu / delta`` for a pair sharing one detuning."""
    return g * mu * (1.0 / delta)


def lambda_general(g: float, mu: float, delta_a: float, delta_b: float) -> float:
    """``(g mu / 2)(1/delta_a + 1/delta_b)``; reduces to the equal-detuning value bit for bit."""
    return 0.5 * g * mu * (1.0 / delta_a + 1.0 / delta_b)


def pair_lambdas(params: DeviceParams) -> np.ndarray:
    da, db = params.delta_a, params.delta_b
    if np.any(da == 0) or np.any(db == 0):
        raise ValueError("effective coupling undefined for zero detuning")
    return np.array([lambda_general(g, m, a, b) for g, m, a, b in zip(params.g, params.mu, da, db)])


@dataclass(frozen=True)
class EffectiveParams:
    """Effective couplings, ac-Stark shifts and output-phase exponents per pair.

    ``phi[j]`` is the phase exponent (in units of pi) picked up by an
    excitation arriving in ``a_j``; ``theta[j]`` the one arriving in the
    B partner of pair ``j``.  ``reference[j]`` is the ``|lambda|`` that fixes
    the pair's swap duration ``pi / (2 reference[j])``.
    """

    lambdas: np.ndarray
    stark_a: np.ndarray
    stark_b: np.ndarray
    reference: np.ndarray
    phi: np.ndarray
    theta: np.ndarray

    @property
    def uniform(self) -> bool:
        mags = np.abs(self.lambdas)
        return bool(np.all(np.abs(mags - mags[0]) <= 1e-9 * mags[0]))


def effective_params(params: DeviceParams, reference: float | None = None) -> EffectiveParams:
    """Derive the effective-model quantities.

    With ``reference=None`` each pair is normalised by its own ``|lambda_j|``,
    which equals the common ``lambda`` whenever the couplings are uniform.
    """
    lam = pair_lambdas(params)
    g, mu = np.asarray(params.g), np.asarray(params.mu)
    stark_a = g**2 / params.delta_a
    stark_b = mu**2 / params.delta_b
    ref = np.abs(lam) if reference is None else np.full_like(lam, abs(float(reference)))
    return EffectiveParams(
        lambdas=lam,
        stark_a=stark_a,
        stark_b=stark_b,
        reference=ref,
        phi=(lam + stark_a) / (2 * ref),
        theta=(lam + stark_b) / (2 * ref),
    )


def rotating_frame(params: DeviceParams, space: SpaceDescriptor) -> np.ndarray:
    """Diagonal of the free Hamiltonian relative to the coupler frequency."""
    _check_space(params, space)
    occ = space.occupations()[:, : space.n_modes]
    return occ @ (params.mode_frequencies() - params.omega_c)


def _crosstalk_base(params: DeviceParams, space: SpaceDescriptor) -> Operator:
    h = zero(space)
    for (x, y), value in params.crosstalk:
        if value == 0:
            continue
        ax = mode_annihilator(space, space.slot(x))
        ay = mode_annihilator(space, space.slot(y))
        term = ax @ ay.dag()
        h = h + value * (term + term.dag())
    return h


def interaction_hamiltonian(
    params: DeviceParams, space: SpaceDescriptor, crosstalk: bool = False
) -> FrameHamiltonian:
    """Interaction-picture ``H_I(t)``, optionally with direct resonator crosstalk."""
    _check_space(params, space)
    sp_ = coupler_sigma(space).dag()
    h = zero(space)
    for j in range(params.n_pairs):
        a = mode_annihilator(space, space.a_mode(j))
        b = mode_annihilator(space, params.b_slot(space, j))
        term = params.g[j] * (a @ sp_) + params.mu[j] * (b @ sp_)
        h = h + term + term.dag()
    if crosstalk:
        h = h + _crosstalk_base(params, space)
    return FrameHamiltonian(h, rotating_frame(params, space))


def build_interaction_hamiltonian(params: DeviceParams, space: SpaceDescriptor, t: float) -> Operator:
    return interaction_hamiltonian(params, space)(t)


def build_crosstalk_hamiltonian(params: DeviceParams, space: SpaceDescriptor, t: float) -> Operator:
    """``H_I(t)`` plus the direct inter-resonator terms of the crosstalk map."""
    return interaction_hamiltonian(params, space, crosstalk=True)(t)


def _pairs(params: DeviceParams, pairs) -> list[int]:
    return list(range(params.n_pairs)) if pairs is None else sorted(set(int(p) for p in pairs))


def effective_hamiltonian_parts(
    params: DeviceParams, space: SpaceDescriptor, pairs: Sequence[int] | None = None
) -> tuple[FrameHamiltonian, FrameHamiltonian]:
    """ac-Stark part and coupler-conditioned exchange part, restricted to ``pairs``."""
    _check_space(params, space)
    eff = effective_params(params)
    pe = coupler_projector(space, EXCITED)
    pg = coupler_projector(space, GROUND)
    sz = coupler_sigma_z(space)
    h0 = zero(space)
    hint = zero(space)
    for j in _pairs(params, pairs):
        a = mode_annihilator(space, space.a_mode(j))
        b = mode_annihilator(space, params.b_slot(space, j))
        ad, bd = a.dag(), b.dag()
        h0 = h0 + (eff.stark_a[j] * (a @ ad) + eff.stark_b[j] * (b @ bd)) @ pe
        h0 = h0 - (eff.stark_a[j] * (ad @ a) + eff.stark_b[j] * (bd @ b)) @ pg
        swap = a @ bd
        hint = hint + eff.lambdas[j] * ((swap + swap.dag()) @ sz)
    frame = rotating_frame(params, space)
    return FrameHamiltonian(h0, frame), FrameHamiltonian(hint, frame)


def build_effective_hamiltonians(
    params: DeviceParams, space: SpaceDescriptor, t: float = 0.0
) -> tuple[Operator, Operator]:
    h0, hint = effective_hamiltonian_parts(params, space)
    return h0(t), hint(t)


def effective_hamiltonian(
    params: DeviceParams, space: SpaceDescriptor, pairs: Sequence[int] | None = None
) -> FrameHamiltonian:
    h0, hint = effective_hamiltonian_parts(params, space, pairs)
    return h0 + hint


def swap_hamiltonian(
    space: SpaceDescriptor, lambdas: Sequence[float], pairing: Sequence[int] | None = None
) -> Operator:
    """``-sum_j lambda_j (a_j b_j^+ + a_j^+ b_j)`` with ``b_j`` relabelled by ``pairing``."""
    if len(lambdas) != space.n_pairs:
        raise ValueError("need one lambda per pair")
    pairing = range(space.n_pairs) if pairing is None else pairing
    h = zero(space)
    for j, (lam, k) in enumerate(zip(lambdas, pairing)):
        if lam == 0:
            continue
        a = mode_annihilator(space, space.a_mode(j))
        b = mode_annihilator(space, space.b_mode(k))
        swap = a @ b.dag()
        h = h - float(lam) * (swap + swap.dag())
    return h


def build_swap_hamiltonian(params: DeviceParams, space: SpaceDescriptor) -> Operator:
    _check_space(params, space)
    return swap_hamiltonian(space, pair_lambdas(params), params.pairing)


class NoDetuningMatch(ValueError):
    """No real ``delta_b`` removes the residual exchange oscillation."""


def solve_detuning_matching(g: float, mu: float, delta_a: float, root: str = "+") -> float:
    """Detuning of the B partner that makes the effective exchange time-independent.

    ``root="+"`` is the standard choice; ``root="-"`` returns the other
    solution of the same quadratic (the two roots multiply to ``mu**2``).
    """
    if delta_a == 0:
        raise ValueError("delta_a must be nonzero")
    if root not in ("+", "-"):
        raise ValueError("root must be '+' or '-'")
    s = delta_a**2 + g**2
    disc = s * s - 4.0 * delta_a**2 * mu**2
    if disc < 0:
        raise NoDetuningMatch(
            f"no real matching detuning: discriminant {disc:.3e} < 0 "
            f"(g={g:.4g}, mu={mu:.4g}, delta_a={delta_a:.4g})"
        )
    if abs(g) == abs(mu) and abs(delta_a) > abs(g) and root == "+":
        return float(delta_a)
    plus = (s + math.sqrt(disc)) / (2.0 * delta_a)
    return plus if root == "+" else mu**2 / plus


def matching_residual(g: float, mu: float, delta_a: float, delta_b: float) -> float:
    """Relative residual of ``g^2/da - mu^2/db + (da - db) = 0``."""
    terms = (g**2 / delta_a, mu**2 / delta_b, delta_a, delta_b)
    value = terms[0] - terms[1] + terms[2] - terms[3]
    return abs(value) / max(abs(t) for t in terms)


@dataclass(frozen=True)
class CrossPairEntry:
    j: int
    k: int
    ratio: float
    threshold: float

    @property
    def margin(self) -> float:
        return self.ratio / self.threshold


@dataclass(frozen=True)
class PairEntry:
    j: int
    ratio_a: float
    ratio_b: float

    @property
    def margin(self) -> float:
        return min(self.ratio_a, self.ratio_b)


@dataclass(frozen=True)
class IsolationReport:
    cross: tuple[CrossPairEntry, ...]
    pairs: tuple[PairEntry, ...]
    margin_factor: float
    errors: tuple[str, ...] = ()

    @property
    def worst_margin(self) -> float:
        margins = [e.margin for e in self.cross] + [e.margin for e in self.pairs]
        return min(margins) if margins else math.inf

    @property
    def violations(self) -> list[str]:
        out = list(self.errors)
        for e in self.pairs:
            if not e.margin > self.margin_factor:
                out.append(f"pair {e.j + 1}: |delta|/coupling = {e.margin:.4g}")
        for e in self.cross:
            if not e.margin > self.margin_factor:
                out.append(f"pairs ({e.j + 1},{e.k + 1}): isolation ratio/threshold = {e.margin:.4g}")
        return out

    @property
    def passed(self) -> bool:
        return not self.violations

    def render(self) -> str:
        lines = [f"isolation check (margin factor {self.margin_factor:g})"]
        lines.append("  pair  |da|/g      |db|/mu     status")
        for e in self.pairs:
            ok = "ok" if e.margin > self.margin_factor else "FAIL"
            lines.append(f"  {e.j + 1:<4d}  {e.ratio_a:<10.4g}  {e.ratio_b:<10.4g}  {ok}")
        if self.cross:
            lines.append("  (j,k)   ratio [rad^2/s^2]  threshold         margin      status")
            for e in self.cross:
                ok = "ok" if e.margin > self.margin_factor else "FAIL"
                lines.append(
                    f"  ({e.j + 1},{e.k + 1})   {e.ratio:<17.6e}  {e.threshold:<16.6e}  {e.margin:<10.4g}  {ok}"
                )
        else:
            lines.append("  no cross-pair terms (single pair)")
        for err in self.errors:
            lines.append(f"  error: {err}")
        lines.append(f"  worst margin: {self.worst_margin:.4g}")
        lines.append("  result: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def check_isolation(params: DeviceParams, margin: float = DEFAULT_ISOLATION_MARGIN) -> IsolationReport:
    """Check the dispersive and pair-isolation conditions.

    The cross-pair ratio ``|d_j - d_k| / (1/|d_j| + 1/|d_k|)`` is evaluated
    for every combination of A/B detunings of the two pairs and the smallest
    value is compared with ``max(g_j g_k, g_j mu_k, mu_j mu_k)``.
    """
    da, db = params.delta_a, params.delta_b
    g, mu = params.g, params.mu
    errors = []
    pair_entries = []
    for j in range(params.n_pairs):
        if da[j] == 0 or db[j] == 0:
            errors.append(f"pair {j + 1}: zero detuning")
        pair_entries.append(PairEntry(j, abs(da[j]) / abs(g[j]), abs(db[j]) / abs(mu[j])))
    cross = []
    for j, k in itertools.permutations(range(params.n_pairs), 2):
        ratios = []
        for x in (da[j], db[j]):
            for y in (da[k], db[k]):
                if x == 0 or y == 0:
                    ratios.append(0.0)
                else:
                    ratios.append(abs(x - y) / (1.0 / abs(x) + 1.0 / abs(y)))
        threshold = max(abs(g[j] * g[k]), abs(g[j] * mu[k]), abs(mu[j] * mu[k]))
        cross.append(CrossPairEntry(j, k, min(ratios), threshold))
    return IsolationReport(tuple(cross), tuple(pair_entries), float(margin), tuple(errors))
