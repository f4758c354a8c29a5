"""JSON run configurations in laboratory units, and the built-in presets.

Frequencies and couplings are written as ``omega / 2pi`` in GHz or MHz,
lifetimes (``1/kappa``, ``1/gamma``) in microseconds.  Conversion to the
angular units used everywhere else happens once, in :meth:`DeviceSpec.to_params`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .model import DeviceParams
from .protocol import METHODS, canonical_kind

TWO_PI = 2.0 * math.pi
TASKS = ("transfer", "exchange")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _rate(lifetime_us: float | None) -> float:
    if lifetime_us is None:
        return 0.0
    if lifetime_us <= 0:
        raise ConfigError(f"lifetimes must be positive, got {lifetime_us} us")
    return 1.0 / (lifetime_us * 1e-6)


@dataclass(frozen=True)
class PairSpec:
    omega_a_ghz: float
    omega_b_ghz: float
    g_mhz: float
    mu_mhz: float
    kappa_a_inv_us: float | None = None
    kappa_b_inv_us: float | None = None


@dataclass(frozen=True)
class DeviceSpec:
    omega_c_ghz: float
    pairs: tuple[PairSpec, ...]
    gamma_inv_us: float | None = None
    gamma_phi_inv_us: float | None = None
    crosstalk_mhz: tuple[tuple[str, float], ...] = ()
    pairing: tuple[int, ...] | None = None  # 1-based B index for each a_j

    def to_params(self) -> DeviceParams:
        try:
            return DeviceParams(
                omega_c=TWO_PI * self.omega_c_ghz * 1e9,
                omega_a=[TWO_PI * p.omega_a_ghz * 1e9 for p in self.pairs],
                omega_b=[TWO_PI * p.omega_b_ghz * 1e9 for p in self.pairs],
                g=[TWO_PI * p.g_mhz * 1e6 for p in self.pairs],
                mu=[TWO_PI * p.mu_mhz * 1e6 for p in self.pairs],
                kappa_a=[_rate(p.kappa_a_inv_us) for p in self.pairs],
                kappa_b=[_rate(p.kappa_b_inv_us) for p in self.pairs],
                gamma=_rate(self.gamma_inv_us),
                gamma_phi=_rate(self.gamma_phi_inv_us),
                crosstalk={k: TWO_PI * v * 1e6 for k, v in self.crosstalk_mhz},
                pairing=None if self.pairing is None else [k - 1 for k in self.pairing],
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def quality_factors(self) -> list[tuple[float, float]]:
        """``Q = omega / kappa`` per pair (``inf`` for lossless modes); display only."""
        out = []
        for p in self.pairs:
            qa = math.inf if p.kappa_a_inv_us is None else TWO_PI * p.omega_a_ghz * 1e9 * p.kappa_a_inv_us * 1e-6
            qb = math.inf if p.kappa_b_inv_us is None else TWO_PI * p.omega_b_ghz * 1e9 * p.kappa_b_inv_us * 1e-6
            out.append((qa, qb))
        return out


@dataclass(frozen=True)
class SweepConfig:
    device: DeviceSpec
    name: str = "custom"
    alpha_min: float = 4.0
    alpha_max: float = 10.0
    alpha_steps: int = 61
    task: str = "transfer"
    state_pairs: tuple[tuple[str, str], ...] = (("bell_psi_plus", "vacuum"),)
    method: str = "full_lindblad"
    crosstalk: float = 0.0
    fock_levels: int = 3
    integrator: str = "expm"
    output: str | None = None
    params: DeviceParams = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.alpha_min >= 1:
            raise ConfigError(f"alpha min must be >= 1, got {self.alpha_min}")
        if not self.alpha_max >= self.alpha_min:
            raise ConfigError("alpha max must be >= alpha min")
        if int(self.alpha_steps) != self.alpha_steps or self.alpha_steps < 2:
            raise ConfigError(f"alpha steps must be an integer >= 2, got {self.alpha_steps}")
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.crosstalk >= 0:
            raise ConfigError(f"crosstalk fraction must be >= 0, got {self.crosstalk}")
        if self.fock_levels < 2:
            raise ConfigError("fock_levels must be >= 2")
        if not self.state_pairs:
            raise ConfigError("at least one state pair is required")
        try:
            pairs = tuple((canonical_kind(a), canonical_kind(b)) for a, b in self.state_pairs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.task == "transfer" and any(b != "vacuum" for _, b in pairs):
            raise ConfigError("transfer task needs the receiving register in vacuum")
        object.__setattr__(self, "state_pairs", pairs)
        object.__setattr__(self, "alpha_steps", int(self.alpha_steps))
        object.__setattr__(self, "params", self.device.to_params())

    def alpha_grid(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.alpha_steps)


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"missing field {key!r} in {where}")
    return d[key]


def _number(value, name: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"field {name!r} must be a number, got {value!r}")
    return float(value)


def _device_from_dict(d: dict) -> DeviceSpec:
    pairs_raw = _require(d, "pairs", "device")
    if not isinstance(pairs_raw, list) or not pairs_raw:
        raise ConfigError("device.pairs must be a non-empty list")
    pairs = []
    for i, p in enumerate(pairs_raw):
        where = f"device.pairs[{i}]"
        pairs.append(
            PairSpec(
                omega_a_ghz=_number(_require(p, "omega_a_ghz", where), "omega_a_ghz"),
                omega_b_ghz=_number(_require(p, "omega_b_ghz", where), "omega_b_ghz"),
                g_mhz=_number(_require(p, "g_mhz", where), "g_mhz"),
                mu_mhz=_number(_require(p, "mu_mhz", where), "mu_mhz"),
                kappa_a_inv_us=_number(p.get("kappa_a_inv_us"), "kappa_a_inv_us", True),
                kappa_b_inv_us=_number(p.get("kappa_b_inv_us"), "kappa_b_inv_us", True),
            )
        )
    crosstalk = d.get("crosstalk_mhz") or {}
    if not isinstance(crosstalk, dict):
        raise ConfigError("device.crosstalk_mhz must map 'x-y' mode pairs to MHz")
    pairing = d.get("pairing")
    if pairing is not None:
        if not isinstance(pairing, list) or any(not isinstance(k, int) for k in pairing):
            raise ConfigError("device.pairing must be a list of 1-based integers")
        pairing = tuple(pairing)
    return DeviceSpec(
        omega_c_ghz=_number(_require(d, "omega_c_ghz", "device"), "omega_c_ghz"),
        pairs=tuple(pairs),
        gamma_inv_us=_number(d.get("gamma_inv_us"), "gamma_inv_us", True),
        gamma_phi_inv_us=_number(d.get("gamma_phi_inv_us"), "gamma_phi_inv_us", True),
        crosstalk_mhz=tuple(sorted((str(k), _number(v, k)) for k, v in crosstalk.items())),
        pairing=pairing,
    )


def config_from_dict(d: dict[str, Any]) -> SweepConfig:
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a JSON object")
    if "preset" in d and "device" not in d:
        base = PRESETS.get(d["preset"])
        if base is None:
            raise ConfigError(f"unknown preset {d['preset']!r}; available: {sorted(PRESETS)}")
        d = {**config_to_dict(base), **{k: v for k, v in d.items() if k != "preset"}}
    grid = d.get("alpha_grid", {})
    crosstalk = d.get("crosstalk", 0.0)
    if crosstalk in (None, "off"):
        crosstalk = 0.0
    pairs = d.get("state_pairs", [["bell_psi_plus", "vacuum"]])
    if not isinstance(pairs, list) or any(not isinstance(p, list) or len(p) != 2 for p in pairs):
        raise ConfigError("state_pairs must be a list of [stateA, stateB] pairs")
    try:
        return SweepConfig(
            device=_device_from_dict(_require(d, "device", "config")),
            name=str(d.get("name", "custom")),
            alpha_min=_number(grid.get("min", 4.0), "alpha_grid.min"),
            alpha_max=_number(grid.get("max", 10.0), "alpha_grid.max"),
            alpha_steps=grid.get("steps", 61),
            task=d.get("task", "transfer"),
            state_pairs=tuple(tuple(p) for p in pairs),
            method=d.get("method", "full_lindblad"),
            crosstalk=_number(crosstalk, "crosstalk"),
            fock_levels=int(d.get("fock_levels", 3)),
            integrator=d.get("integrator", "expm"),
            output=d.get("output"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: SweepConfig) -> dict[str, Any]:
    dev = cfg.device
    device = {
        "omega_c_ghz": dev.omega_c_ghz,
        "pairs": [asdict(p) for p in dev.pairs],
        "gamma_inv_us": dev.gamma_inv_us,
        "gamma_phi_inv_us": dev.gamma_phi_inv_us,
        "crosstalk_mhz": dict(dev.crosstalk_mhz),
        "pairing": None if dev.pairing is None else list(dev.pairing),
    }
    return {
        "name": cfg.name,
        "device": device,
        "alpha_grid": {"min": cfg.alpha_min, "max": cfg.alpha_max, "steps": cfg.alpha_steps},
        "task": cfg.task,
        "state_pairs": [list(p) for p in cfg.state_pairs],
        "method": cfg.method,
        "crosstalk": cfg.crosstalk,
        "fock_levels": cfg.fock_levels,
        "integrator": cfg.integrator,
        "output": cfg.output,
    }


def parse_config(text: str) -> SweepConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return config_from_dict(data)


def emit_config(cfg: SweepConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def load_config(source: str) -> SweepConfig:
    """Read a config file, or resolve ``source`` as a preset name."""
    if source in PRESETS:
        return PRESETS[source]
    try:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {source!r}: {exc.strerror or exc}") from exc
    return parse_config(text)


def _table1_device(low_ghz: float, high_ghz: float) -> DeviceSpec:
    pair = lambda f: PairSpec(f, f, 100.0, 100.0, 1.0, 1.0)  # noqa: E731
    return DeviceSpec(
        omega_c_ghz=6.0,
        pairs=(pair(low_ghz), pair(high_ghz)),
        gamma_inv_us=3.0,
        gamma_phi_inv_us=3.0,
    )


PRESETS: dict[str, SweepConfig] = {
    "table1-transfer": SweepConfig(
        device=_table1_device(5.45, 6.55),
        name="table1-transfer",
        task="transfer",
        state_pairs=(
            ("bell_psi_plus", "vacuum"),
            ("bell_psi_minus", "vacuum"),
            ("bell_phi_plus", "vacuum"),
            ("bell_phi_minus", "vacuum"),
        ),
    ),
    "table1-exchange": SweepConfig(
        device=_table1_device(5.07, 6.93),
        name="table1-exchange",
        task="exchange",
        state_pairs=(
            ("bell_psi_plus", "bell_psi_minus"),
            ("bell_phi_plus", "bell_phi_minus"),
            ("bell_phi_plus", "bell_psi_plus"),
            ("bell_phi_plus", "bell_psi_minus"),
        ),
    ),
}


def _fmt_q(q: float) -> str:
    if math.isinf(q):
        return "inf"
    mant, exp = f"{q:.1e}".split("e")
    return f"{mant}e{int(exp)}"


def render_device_table(cfg: SweepConfig) -> str:
    """Parameter table in laboratory units, including the derived quality factors."""
    dev = cfg.device
    life = lambda x: "none" if x is None else f"{x:g} us"  # noqa: E731
    roman = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII"]
    rows = [
        ("Resonator photon lifetime (1/kappa)", ", ".join(
            f"{life(p.kappa_a_inv_us)} / {life(p.kappa_b_inv_us)}" for p in dev.pairs)),
        ("Coupler energy relaxation time (1/gamma)", life(dev.gamma_inv_us)),
        ("Coupler dephasing time (1/gamma_phi)", life(dev.gamma_phi_inv_us)),
        ("Coupler frequency (omega_c/2pi)", f"{dev.omega_c_ghz:g} GHz"),
    ]
    for j, p in enumerate(dev.pairs):
        tag = roman[j] if j < len(roman) else str(j + 1)
        freqs = f"{p.omega_a_ghz:g} GHz" if p.omega_a_ghz == p.omega_b_ghz else f"{p.omega_a_ghz:g} / {p.omega_b_ghz:g} GHz"
        rows.append((f"Resonator frequency, pair {tag}", freqs))
    for j, (qa, qb) in enumerate(dev.quality_factors()):
        tag = roman[j] if j < len(roman) else str(j + 1)
        q = _fmt_q(qa) if _fmt_q(qa) == _fmt_q(qb) else f"{_fmt_q(qa)} / {_fmt_q(qb)}"
        rows.append((f"Resonator quality factor, pair {tag}", q))
    for j, p in enumerate(dev.pairs):
        rows.append((f"Couplings g, mu, pair {j + 1}", f"{p.g_mhz:g} MHz, {p.mu_mhz:g} MHz"))
    params = cfg.params
    alphas = np.abs(params.delta_a) / np.asarray(params.g)
    rows.append(("Detuning ratio alpha = |delta|/g", ", ".join(f"{a:.4g}" for a in alphas)))
    width = max(len(r[0]) for r in rows)
    lines = [f"preset: {cfg.name} ({cfg.task})"]
    lines += [f"  {k:<{width}}  {v}" for k, v in rows]
    return "\n".join(lines)
