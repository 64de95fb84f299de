"""Scenario files: INI-style sections in the units quoted for the link.

Angles are in degrees, jitter standard deviations in radians, lengths in
metres, coefficients in 1/km, area in cm^2, power in mW.  Omitted keys take
the baseline values below.  ``sigma_all`` in ``[jitter]`` sets all four
standard deviations at once.
"""

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, LinkGeometry
from .counting import DetectorParams
from .errors import ConfigError, InputError
from .jitter import JitterSpec
from .montecarlo import McConfig

DEFAULTS = {
    "geometry": {
        "range_m": 50.0,
        "theta_t_deg": 20.0,
        "theta_r_deg": 20.0,
        "phi_t_deg": 5.0,
        "phi_r_deg": 0.0,
        "alpha_t_deg": 1.0,
        "alpha_r_deg": 30.0,
    },
    "channel": {
        "k_r": 0.266,
        "k_m": 0.284,
        "k_a": 0.802,
        "gamma": 0.017,
        "g": 0.72,
        "f": 0.5,
        "area_cm2": 1.77,
        "power_mw": 50.0,
    },
    "detector": {
        "eta_f": 0.2,
        "eta_p": 0.3,
        "wavelength_nm": 260.0,
        "data_rate_kbps": 96.0,
        "n_n": 14500.0,
    },
    "jitter": {
        "sigma_theta_t": 0.04,
        "sigma_theta_r": 0.04,
        "sigma_phi_t": 0.04,
        "sigma_phi_r": 0.04,
        "mean_theta_t_deg": 0.0,
        "mean_theta_r_deg": 0.0,
        "mean_phi_t_deg": 0.0,
        "mean_phi_r_deg": 0.0,
    },
    "mc": {
        "seed": 20240601,
        "n_samples": 100_000,
        "n_symbols": 100_000_000,
        "bins": 200,
        "workers": 1,
    },
    "sweep": {
        "variable": "sigma",
        "lo": 0.0,
        "hi": 0.07,
        "steps": 8,
    },
}

SIGMA_KEYS = ("sigma_theta_t", "sigma_theta_r", "sigma_phi_t", "sigma_phi_r")
SWEEP_VARIABLES = ("sigma", "range_m")
INT_KEYS = {("mc", k) for k in ("seed", "n_samples", "n_symbols", "bins", "workers")} | {("sweep", "steps")}


@dataclass(frozen=True)
class Sweep:
    variable: str
    lo: float
    hi: float
    steps: int

    def values(self):
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario, kept in file units so it serialises back exactly."""

    values: dict = field(default_factory=lambda: {s: dict(v) for s, v in DEFAULTS.items()})

    def get(self, section, key):
        return self.values[section][key]

    def replace(self, section, key, value):
        vals = {s: dict(v) for s, v in self.values.items()}
        vals[section][key] = value
        return _validated(vals)

    @property
    def geometry(self):
        g = self.values["geometry"]
        return LinkGeometry.from_degrees(g["range_m"], g["theta_t_deg"], g["theta_r_deg"],
                                         g["phi_t_deg"], g["phi_r_deg"],
                                         g["alpha_t_deg"], g["alpha_r_deg"])

    @property
    def channel(self):
        c = self.values["channel"]
        return ChannelParams(k_r=c["k_r"], k_m=c["k_m"], k_a=c["k_a"], gamma=c["gamma"],
                             g=c["g"], f=c["f"], area_cm2=c["area_cm2"],
                             e_t=2.0 * c["power_mw"] * 1e-3)

    @property
    def detector(self):
        d = self.values["detector"]
        return DetectorParams.from_data_rate(d["data_rate_kbps"] * 1e3, eta_f=d["eta_f"],
                                             eta_p=d["eta_p"],
                                             wavelength_m=d["wavelength_nm"] * 1e-9,
                                             n_n=d["n_n"])

    @property
    def jitter(self):
        j = self.values["jitter"]
        means = tuple(math.radians(j[f"mean_{k}_deg"]) for k in ("theta_t", "theta_r", "phi_t", "phi_r"))
        return JitterSpec(mean=means, sigma=tuple(j[k] for k in SIGMA_KEYS))

    @property
    def mc(self):
        return McConfig(**self.values["mc"])

    @property
    def sweep(self):
        return Sweep(**self.values["sweep"])

    def dumps(self):
        lines = []
        for section, entries in self.values.items():
            lines.append(f"[{section}]")
            for key, val in entries.items():
                lines.append(f"{key} = {val if isinstance(val, str) else repr(val)}")
            lines.append("")
        return "\n".join(lines)

    def dump(self, path):
        Path(path).write_text(self.dumps())


def _key_line(text, section, key):
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]", stripped)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return no
    return None


def _convert(section, key, raw):
    if section == "sweep" and key == "variable":
        return raw.strip()
    try:
        if (section, key) in INT_KEYS:
            try:
                return int(raw)
            except ValueError:
                # allow "1e8"; integers past 2**53 must be written out in full
                val = float(raw)
                if not val.is_integer():
                    raise
                return int(val)
        return float(raw)
    except ValueError as exc:
        raise ValueError(f"cannot read {raw!r} as a number") from exc


def _validated(vals):
    sweep = vals["sweep"]
    if sweep["variable"] not in SWEEP_VARIABLES:
        raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}, got "
                          f"{sweep['variable']!r}", key="variable")
    if sweep["steps"] < 2:
        raise ConfigError("sweep steps must be >= 2", key="steps")
    scen = Scenario(vals)
    # construct every domain object so invariant violations surface here
    for section, prop in (("geometry", "geometry"), ("channel", "channel"), ("detector", "detector"),
                          ("jitter", "jitter"), ("mc", "mc")):
        try:
            getattr(scen, prop)
        except InputError as exc:
            raise ConfigError(f"[{section}] {exc}", key=section) from exc
    return scen


def loads(text):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       comment_prefixes=("#",), empty_lines_in_values=False)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any [section]", line=exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate key {exc.option!r}",
                          line=exc.lineno, key=exc.option) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"line {exc.lineno}: duplicate section [{exc.section}]",
                          line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"line {lineno}: cannot parse {exc.errors[0][1] if exc.errors else ''}",
                          line=lineno) from exc

    vals = {s: dict(v) for s, v in DEFAULTS.items()}
    for section in parser.sections():
        if section not in DEFAULTS:
            line = next((i for i, ln in enumerate(text.splitlines(), 1)
                         if ln.strip() == f"[{section}]"), None)
            raise ConfigError(f"line {line}: unknown section [{section}]", line=line)
        entries = parser[section]
        if section == "jitter" and "sigma_all" in entries:
            raw = entries["sigma_all"]
            for k in SIGMA_KEYS:
                vals["jitter"][k] = _convert("jitter", k, raw)
        for key, raw in entries.items():
            if section == "jitter" and key == "sigma_all":
                continue
            line = _key_line(text, section, key)
            if key not in DEFAULTS[section]:
                raise ConfigError(f"line {line}: unknown key {key!r} in [{section}]",
                                  line=line, key=key)
            try:
                vals[section][key] = _convert(section, key, raw)
            except ValueError as exc:
                raise ConfigError(f"line {line}: {key}: {exc}", line=line, key=key) from exc
    return _validated(vals)


def load_scenario(path):
    """Read a scenario file; missing keys fall back to the baseline link."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    return loads(path.read_text())
