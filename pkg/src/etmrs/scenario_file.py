"""JSON scenario files: parsing, sweep grids and validation.

A file has the sections ``radio``, ``battery``, ``policy``, exactly one of
``topology`` / ``relays``, and optionally ``sim``. Any numeric field marked as
a sweep accepts a number, a non-empty list, or a grid object
``{"start", "stop", "step"}`` / ``{"start", "stop", "num", "scale"}`` with
``scale`` either ``"linear"`` or ``"geometric"``.

Documented defaults: ``eta = 0.5``, ``N0_dbm = -90``, ``d_sd = 20``,
``omega = 3``, ``m = 2``. Nothing else is filled in silently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .analysis import MAX_RELAYS, NetworkScenario, Relay
from .battery import BatterySpec, RelayEnergyPolicy, _snap, discretize_alpha
from .channel import NakagamiLink, RadioParams, RayleighLink, Topology, dbm_to_watts
from .optimizer import MAX_EVALUATIONS
from .simulator import SimConfig

POLICY_MODES = ("chi", "optimize:iid", "optimize:full", "optimize:heuristic")
DEFAULTS = {"eta": 0.5, "N0_dbm": -90.0, "d_sd": 20.0, "omega": 3.0, "m": 2.0}
_SECTIONS = {"radio", "battery", "topology", "relays", "policy", "sim", "bound", "name", "notes"}
_MAX_GRID = 100_000


@dataclass(frozen=True)
class Diagnostic:
    where: str
    message: str
    kind: str = "config"  # or "feasibility"

    def __str__(self):
        return f"{self.where}: {self.message}"


@dataclass(frozen=True)
class SweepPoint:
    index: int
    P: float
    P_dbm: float | None
    C: float
    L: int


@dataclass
class ScenarioFile:
    P: list[float]
    P_dbm: list[float] | None
    N0: float
    kappa: float
    eta: float
    C: list[float]
    L: list[int] | None  # explicit level counts
    L_scale: tuple[float, int] | None  # (C_ref, L_ref): L = C * L_ref / C_ref
    alpha: float
    links: list[tuple[NakagamiLink, RayleighLink]]
    policy: str
    chi: list[float] | None
    rounding: str
    sim: dict[str, Any] | None
    bound: bool = True
    name: str = ""

    @property
    def N(self) -> int:
        return len(self.links)

    def level_counts(self, C: float) -> list[int]:
        if self.L is not None:
            return list(self.L)
        c_ref, l_ref = self.L_scale
        return [int(round(_snap(C * l_ref / c_ref)))]

    def points(self) -> list[SweepPoint]:
        """Sweep order: capacity, then level count, then source power."""
        out = []
        for C in self.C:
            for L in self.level_counts(C):
                for i, P in enumerate(self.P):
                    dbm = self.P_dbm[i] if self.P_dbm is not None else None
                    out.append(SweepPoint(len(out), P, dbm, C, L))
        return out

    def radio(self, P: float) -> RadioParams:
        return RadioParams(P, self.N0, self.kappa, self.eta)

    def battery(self, pt: SweepPoint) -> BatterySpec:
        return BatterySpec(pt.C, pt.L, self.alpha)

    def scenario(self, pt: SweepPoint, chi_indices=None) -> NetworkScenario:
        """Network at one sweep point; optimized modes pass the thresholds."""
        spec = self.battery(pt)
        if chi_indices is None:
            if self.chi is None:
                chi_indices = [spec.alpha_index + 1] * self.N
            else:
                chi_indices = [RelayEnergyPolicy.from_chi(spec, c, self.rounding).chi_index for c in self.chi]
        relays = [
            Relay(sr, rd, RelayEnergyPolicy.from_chi_index(spec, c))
            for (sr, rd), c in zip(self.links, chi_indices)
        ]
        return NetworkScenario(tuple(relays), self.radio(pt.P), spec)

    def sim_config(self, seed: int | None = None) -> SimConfig:
        kw = dict(self.sim or {})
        if seed is not None:
            kw["seed"] = seed
        return SimConfig(**kw)


class _Reader:
    """Collects diagnostics while pulling typed fields out of nested dicts."""

    def __init__(self):
        self.diags: list[Diagnostic] = []

    def err(self, where, msg, kind="config"):
        self.diags.append(Diagnostic(where, msg, kind))

    def unknown(self, obj: dict, allowed, where):
        for k in obj:
            if k not in allowed:
                self.err(f"{where}.{k}", f"unknown field (allowed: {', '.join(sorted(allowed))})")

    def number(self, obj, key, where, default=None, required=True):
        if key not in obj:
            if default is not None:
                return float(default)
            if required:
                self.err(f"{where}.{key}", "missing required field")
            return None
        x = obj[key]
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            self.err(f"{where}.{key}", f"expected a finite number, got {x!r}")
            return None
        return float(x)

    def grid(self, obj, key, where, required=True):
        path = f"{where}.{key}"
        if key not in obj:
            if required:
                self.err(path, "missing required field")
            return None
        x = obj[key]
        if isinstance(x, bool):
            self.err(path, f"expected a number, list or grid, got {x!r}")
            return None
        if isinstance(x, (int, float)):
            return [float(x)]
        if isinstance(x, list):
            if not x:
                self.err(path, "sweep list is empty")
                return None
            bad = [v for v in x if isinstance(v, bool) or not isinstance(v, (int, float))]
            if bad:
                self.err(path, f"non-numeric entries {bad!r}")
                return None
            return [float(v) for v in x]
        if isinstance(x, dict):
            return self._grid_obj(x, path)
        self.err(path, f"expected a number, list or grid, got {type(x).__name__}")
        return None

    def _grid_obj(self, g, path):
        self.unknown(g, {"start", "stop", "step", "num", "scale"}, path)
        start = self.number(g, "start", path)
        stop = self.number(g, "stop", path)
        scale = g.get("scale", "linear")
        if scale not in ("linear", "geometric"):
            self.err(f"{path}.scale", f"expected 'linear' or 'geometric', got {scale!r}")
            return None
        if ("step" in g) == ("num" in g):
            self.err(path, "grid needs exactly one of 'step' or 'num'")
            return None
        if start is None or stop is None:
            return None
        if "step" in g:
            step = self.number(g, "step", path)
            if step is None:
                return None
            if scale != "linear":
                self.err(f"{path}.step", "'step' only applies to linear grids; use 'num' for geometric")
                return None
            if step <= 0 or stop < start:
                self.err(path, "need step > 0 and stop >= start")
                return None
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n > _MAX_GRID:
                self.err(path, f"{n} grid points exceed {_MAX_GRID}")
                return None
            return [start + i * step for i in range(n)]
        num = g["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1 or num > _MAX_GRID:
            self.err(f"{path}.num", f"expected an integer in [1, {_MAX_GRID}], got {num!r}")
            return None
        if scale == "geometric":
            if start <= 0 or stop <= 0:
                self.err(path, "geometric grid needs positive endpoints")
                return None
            return [float(v) for v in np.geomspace(start, stop, num)]
        return [float(v) for v in np.linspace(start, stop, num)]


def _parse_radio(rd: _Reader, sec, out):
    where = "radio"
    if not isinstance(sec, dict):
        rd.err(where, "expected an object")
        return
    rd.unknown(sec, {"P", "P_dbm", "N0", "N0_dbm", "kappa", "eta"}, where)
    if ("P" in sec) == ("P_dbm" in sec):
        rd.err(where, "give exactly one of 'P' (watts) or 'P_dbm'")
    elif "P_dbm" in sec:
        dbm = rd.grid(sec, "P_dbm", where)
        if dbm is not None:
            out["P_dbm"] = dbm
            out["P"] = [dbm_to_watts(x) for x in dbm]
    else:
        P = rd.grid(sec, "P", where)
        if P is not None:
            if any(p < 0 for p in P):
                rd.err(f"{where}.P", "source power must be >= 0")
            out["P"] = P
            out["P_dbm"] = None
    if "N0" in sec and "N0_dbm" in sec:
        rd.err(where, "give at most one of 'N0' (watts) or 'N0_dbm'")
    elif "N0" in sec:
        n0 = rd.number(sec, "N0", where)
        if n0 is not None and n0 <= 0:
            rd.err(f"{where}.N0", "noise power must be positive")
        out["N0"] = n0
    else:
        n0 = rd.number(sec, "N0_dbm", where, default=DEFAULTS["N0_dbm"])
        out["N0"] = None if n0 is None else dbm_to_watts(n0)
    kappa = rd.number(sec, "kappa", where)
    if kappa is not None and kappa <= 0:
        rd.err(f"{where}.kappa", "rate must be positive")
    out["kappa"] = kappa
    eta = rd.number(sec, "eta", where, default=DEFAULTS["eta"])
    if eta is not None and not 0 < eta < 1:
        rd.err(f"{where}.eta", "conversion efficiency must lie in (0, 1)")
    out["eta"] = eta


def _parse_battery(rd: _Reader, sec, out):
    where = "battery"
    if not isinstance(sec, dict):
        rd.err(where, "expected an object")
        return
    rd.unknown(sec, {"C", "L", "scale_L", "alpha"}, where)
    C = rd.grid(sec, "C", where)
    if C is not None and any(c <= 0 for c in C):
        rd.err(f"{where}.C", "capacity must be positive")
        C = None
    out["C"] = C
    out["L"] = out["L_scale"] = None
    if ("L" in sec) == ("scale_L" in sec):
        rd.err(where, "give exactly one of 'L' or 'scale_L' ({'C_ref', 'L_ref'})")
    elif "L" in sec:
        L = rd.grid(sec, "L", where)
        if L is not None:
            if any(x != int(x) or x < 1 for x in L):
                rd.err(f"{where}.L", f"level counts must be positive integers, got {L}")
            else:
                out["L"] = [int(x) for x in L]
    else:
        s = sec["scale_L"]
        if not isinstance(s, dict):
            rd.err(f"{where}.scale_L", "expected {'C_ref': ..., 'L_ref': ...}")
        else:
            rd.unknown(s, {"C_ref", "L_ref"}, f"{where}.scale_L")
            c_ref = rd.number(s, "C_ref", f"{where}.scale_L")
            l_ref = rd.number(s, "L_ref", f"{where}.scale_L")
            if c_ref is not None and l_ref is not None:
                if c_ref <= 0 or l_ref < 1 or l_ref != int(l_ref):
                    rd.err(f"{where}.scale_L", "need C_ref > 0 and a positive integer L_ref")
                else:
                    out["L_scale"] = (c_ref, int(l_ref))
                    for c in C or []:
                        x = _snap(c * l_ref / c_ref)
                        if x != int(x) or x < 1:
                            rd.err(f"{where}.scale_L",
                                   f"C = {c:.6g} J gives a non-integer level count {x:.6g}")
    alpha = rd.number(sec, "alpha", where)
    if alpha is not None and alpha < 0:
        rd.err(f"{where}.alpha", "circuit cost must be >= 0")
        alpha = None
    out["alpha"] = alpha


def _parse_links(rd: _Reader, doc, out):
    has_t, has_r = "topology" in doc, "relays" in doc
    if has_t == has_r:
        rd.err("topology", "give exactly one of 'topology' or 'relays'")
        return
    if has_t:
        sec = doc["topology"]
        if not isinstance(sec, dict):
            rd.err("topology", "expected an object")
            return
        rd.unknown(sec, {"d_sd", "d_sr", "omega", "m"}, "topology")
        d_sr = sec.get("d_sr")
        if not isinstance(d_sr, list) or not d_sr:
            rd.err("topology.d_sr", "expected a non-empty list of distances")
            return
        if any(isinstance(d, bool) or not isinstance(d, (int, float)) for d in d_sr):
            rd.err("topology.d_sr", "distances must be numbers")
            return
        d_sd = rd.number(sec, "d_sd", "topology", default=DEFAULTS["d_sd"])
        omega = rd.number(sec, "omega", "topology", default=DEFAULTS["omega"])
        m = rd.number(sec, "m", "topology", default=DEFAULTS["m"])
        if None in (d_sd, omega, m):
            return
        ok = True
        if not 2 <= omega <= 5:
            rd.err("topology.omega", f"path-loss exponent must lie in [2, 5], got {omega}")
            ok = False
        if m < 0.5:
            rd.err("topology.m", f"Nakagami shape must be >= 0.5, got {m}")
            ok = False
        for u, d in enumerate(d_sr):
            if not 0 < d < d_sd:
                rd.err(f"topology.d_sr[{u}]", f"distance {d} outside (0, d_sd={d_sd})")
                ok = False
        if ok:
            out["links"] = Topology(d_sd, d_sr, omega, m).links()
        return
    sec = doc["relays"]
    if not isinstance(sec, list) or not sec:
        rd.err("relays", "expected a non-empty list of relays")
        return
    links, ok = [], True
    for u, r in enumerate(sec):
        where = f"relays[{u}]"
        if not isinstance(r, dict):
            rd.err(where, "expected an object")
            ok = False
            continue
        rd.unknown(r, {"lambda_sr", "lambda_rd", "m"}, where)
        lsr = rd.number(r, "lambda_sr", where)
        lrd = rd.number(r, "lambda_rd", where)
        m = rd.number(r, "m", where, default=DEFAULTS["m"])
        if None in (lsr, lrd, m):
            ok = False
            continue
        if lsr <= 0 or lrd <= 0:
            rd.err(where, "average gains must be positive")
            ok = False
        if m < 0.5:
            rd.err(f"{where}.m", f"Nakagami shape must be >= 0.5, got {m}")
            ok = False
        if ok:
            links.append((NakagamiLink(m, lsr), RayleighLink(lrd)))
    if ok:
        out["links"] = links


def _parse_policy(rd: _Reader, sec, out):
    out["chi"], out["rounding"] = None, "exact"
    if isinstance(sec, str):
        if sec not in POLICY_MODES[1:]:
            rd.err("policy", f"unknown mode {sec!r} (expected one of {', '.join(POLICY_MODES[1:])} or an object)")
            return
        out["policy"] = sec
        return
    if not isinstance(sec, dict):
        rd.err("policy", "expected an object {'chi': ...} or an 'optimize:*' string")
        return
    rd.unknown(sec, {"chi", "rounding"}, "policy")
    out["policy"] = "chi"
    chi = sec.get("chi")
    if chi is None:
        rd.err("policy.chi", "missing required field")
    elif isinstance(chi, bool):
        rd.err("policy.chi", f"expected a number or list, got {chi!r}")
    elif isinstance(chi, (int, float)):
        out["chi"] = float(chi)
    elif isinstance(chi, list) and chi and all(
        isinstance(c, (int, float)) and not isinstance(c, bool) for c in chi
    ):
        out["chi"] = [float(c) for c in chi]
    else:
        rd.err("policy.chi", "expected a positive number or a non-empty list of numbers")
    rounding = sec.get("rounding", "exact")
    if rounding not in ("exact", "up"):
        rd.err("policy.rounding", f"expected 'exact' or 'up', got {rounding!r}")
    out["rounding"] = rounding


def _parse_sim(rd: _Reader, sec, out):
    out["sim"] = None
    if sec is None:
        return
    if not isinstance(sec, dict):
        rd.err("sim", "expected an object")
        return
    rd.unknown(sec, {"blocks", "seed", "battery_mode", "warmup", "streams", "initial"}, "sim")
    kw = {}
    for key in ("blocks", "seed", "warmup", "streams"):
        if key in sec:
            x = sec[key]
            if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                rd.err(f"sim.{key}", f"expected a non-negative integer, got {x!r}")
                return
            kw[key] = x
    for key in ("battery_mode", "initial"):
        if key in sec:
            kw[key] = sec[key]
    try:
        SimConfig(**kw)
    except ValueError as e:
        rd.err("sim", str(e))
        return
    out["sim"] = kw


def _check_points(rd: _Reader, sf: ScenarioFile):
    """Lattice and feasibility checks at every (C, L) combination."""
    if sf.N > MAX_RELAYS:
        rd.err("relays", f"TooManyRelays: {sf.N} relays exceed the enumeration bound of {MAX_RELAYS}", "feasibility")
    if isinstance(sf.chi, list) and len(sf.chi) != sf.N:
        rd.err("policy.chi", f"{len(sf.chi)} thresholds for {sf.N} relays")
        return
    if sf.policy == "optimize:iid" and any(lk != sf.links[0] for lk in sf.links[1:]):
        rd.err("policy", "optimize:iid needs identical relays")
    if isinstance(sf.chi, float):
        sf.chi = [sf.chi] * sf.N
    seen = set()
    for C in sf.C:
        for L in sf.level_counts(C):
            if (C, L) in seen:
                continue
            seen.add((C, L))
            where = f"battery[C={C:.6g}, L={L}]"
            if sf.alpha > C:
                rd.err(where, f"AlphaExceedsCapacity: circuit cost {sf.alpha:g} J exceeds capacity {C:g} J",
                       "feasibility")
                continue
            a = discretize_alpha(sf.alpha, C, L)
            if a >= L:
                rd.err(where, f"AlphaExceedsCapacity: circuit cost needs level {a} of {L}; "
                              "no threshold above it fits", "feasibility")
                continue
            spec = BatterySpec(C, L, sf.alpha)
            if sf.policy == "optimize:full":
                size = (L - a) ** sf.N
                if size > MAX_EVALUATIONS:
                    rd.err(where, f"SearchSpaceTooLarge: {L - a}^{sf.N} = {size} candidates "
                                  f"exceed {MAX_EVALUATIONS}", "feasibility")
            if sf.chi is None:
                continue
            for u, chi in enumerate(sf.chi):
                _check_chi(rd, spec, chi, sf.rounding, f"policy.chi[{u}] @ {where}")


def _check_chi(rd: _Reader, spec: BatterySpec, chi: float, rounding: str, where: str):
    eps = spec.epsilon1
    lo, hi = spec.alpha + eps, spec.C
    if rounding == "exact":
        x = _snap(chi / eps)
        if x != int(x):
            rd.err(where, f"off-lattice threshold {chi:g} J; level energy is {eps:g} J, "
                          f"nearest valid: {math.floor(x) * eps:g} J, {math.ceil(x) * eps:g} J")
            return
        if not spec.alpha_index + 1 <= int(x) <= spec.L:
            rd.err(where, f"threshold {chi:g} J outside [{lo:g}, {hi:g}] J")
        return
    if chi <= spec.alpha_raw:
        rd.err(where, f"threshold {chi:g} J must exceed the circuit cost {spec.alpha_raw:g} J")
    elif chi > spec.C * (1 + 1e-12):
        rd.err(where, f"threshold {chi:g} J exceeds the capacity {spec.C:g} J")


def parse(doc: Any) -> tuple[ScenarioFile | None, list[Diagnostic]]:
    rd = _Reader()
    if not isinstance(doc, dict):
        rd.err("<root>", "expected a JSON object")
        return None, rd.diags
    rd.unknown(doc, _SECTIONS, "<root>")
    out: dict[str, Any] = {}
    for key, fn in (("radio", _parse_radio), ("battery", _parse_battery), ("policy", _parse_policy)):
        if key not in doc:
            rd.err(key, "missing required section")
        else:
            fn(rd, doc[key], out)
    _parse_links(rd, doc, out)
    _parse_sim(rd, doc.get("sim"), out)
    bound = doc.get("bound", True)
    if not isinstance(bound, bool):
        rd.err("bound", f"expected true or false, got {bound!r}")
    if any(not d.message.startswith("unknown field") for d in rd.diags):
        return None, rd.diags
    # unknown fields do not block parsing, so still run the lattice checks and list every problem
    sf = ScenarioFile(
        P=out["P"], P_dbm=out["P_dbm"], N0=out["N0"], kappa=out["kappa"], eta=out["eta"],
        C=out["C"], L=out["L"], L_scale=out["L_scale"], alpha=out["alpha"], links=out["links"],
        policy=out["policy"], chi=out["chi"], rounding=out["rounding"], sim=out["sim"],
        bound=bound, name=str(doc.get("name", "")),
    )
    _check_points(rd, sf)
    return (None if rd.diags else sf), rd.diags


def load(path) -> tuple[ScenarioFile | None, list[Diagnostic]]:
    """Read and check a scenario file; returns the parsed file or every problem found."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        return None, [Diagnostic(str(path), f"cannot read file: {e.strerror}")]
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [Diagnostic(f"{path}:{e.lineno}:{e.colno}", f"JSON syntax error: {e.msg}")]
    return parse(doc)
