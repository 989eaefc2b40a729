"""End-to-end runs, convergence sweeps and file exports."""

from __future__ import annotations

import copy
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .amplitudes import AmplitudeSet, assemble_full_solution, extract, probability_balance, radiation_defect
from .errors import InvalidConfig
from .geometry import ALL_SCREENS
from .helmholtz import Field, LinearOperator, assemble
from .lowrank import GreensCache, SchwartzReport, beta_from_denominator, build_greens_cache, exact_lowrank_solve, schwartz_solve, sep_residual
from .mesh import Domain, build_disk_domain
from .wavefields import ScatterConfig, WaveSet, build_waves, make_config, source_Qb

DEFAULT_CONFIG = {
    "potential": {"depth": 1.0, "halfwidth": 1.0},
    "energies": [0.5, 2.0],
    "geometry": {"R": 50.0, "R1": 15.0, "R2": 30.0, "h": None, "tail_tol": 1e-4},
    "solver": {"order": 2, "n_theta": 720, "channel": "lattice", "denominator": "discrete"},
    "output_dir": "scatter_out",
    "export_fields": True,
}

SWEEP_AXES = ("h", "R", "R1", "order")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in out:
            raise InvalidConfig(f"unknown config key {k!r}")
        if isinstance(out[k], dict):
            if not isinstance(v, dict):
                raise InvalidConfig(f"config section {k!r} must be an object")
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    """Validated JSON run description (see ``DEFAULT_CONFIG`` for the keys)."""

    data: dict

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        cfg = cls(_merge(DEFAULT_CONFIG, d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise InvalidConfig(f"{path}: top level must be an object")
        return cls.from_dict(raw)

    def validate(self) -> None:
        Es = self.data["energies"]
        if not isinstance(Es, list) or not Es:
            raise InvalidConfig("energies must be a nonempty list")
        for E in Es:
            if not isinstance(E, (int, float)) or not E > 0:
                raise InvalidConfig(f"energies must be positive, got {E!r}")
        n = self.data["solver"]["n_theta"]
        if not isinstance(n, int) or n < 8:
            raise InvalidConfig("n_theta must be an integer >= 8")
        for E in Es:
            self.scatter_config(E)

    def scatter_config(self, E: float, **over) -> ScatterConfig:
        g, s, pot = self.data["geometry"], self.data["solver"], self.data["potential"]
        kw = dict(
            depth=pot["depth"], halfwidth=pot["halfwidth"], R=g["R"], R1=g["R1"], R2=g["R2"],
            h=g["h"], tail_tol=g["tail_tol"], order=s["order"], channel=s["channel"],
            denominator=s["denominator"],
        )
        kw.update(over)
        try:
            return make_config(float(E), **kw)
        except InvalidConfig:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidConfig(str(exc)) from exc

    @property
    def n_theta(self) -> int:
        return self.data["solver"]["n_theta"]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


@dataclass(eq=False)
class RunResult:
    """Everything produced by one energy."""

    cfg: ScatterConfig
    domain: Domain
    opr: LinearOperator
    waves: WaveSet
    Qb: Field
    cache: GreensCache
    phi: Field             # exact rank-six solution
    phi_order: Field       # truncated series at cfg.order
    report: SchwartzReport
    amps: AmplitudeSet
    amps_order: AmplitudeSet
    timings: dict = field(default_factory=dict)

    @property
    def balance(self) -> float:
        return probability_balance(self.amps)

    @property
    def balance_flux(self) -> float:
        return probability_balance(self.amps, flux_weighted=True)

    def full_solution(self):
        return assemble_full_solution(self.waves, self.amps, self.phi)

    def summary(self) -> dict:
        cpx = lambda z: [float(z.real), float(z.imag)]
        return {
            "E": self.cfg.E,
            "p": self.cfg.p,
            "epsilon": self.cfg.bound.epsilon,
            "alpha": self.cfg.alpha,
            "R": self.cfg.R, "R1": self.cfg.cutoff.R1, "R2": self.cfg.cutoff.R2, "h": self.cfg.h,
            "order": self.cfg.order,
            "channel": self.cfg.channel,
            "channel_momentum_used": self.waves.mode.p,
            "denominator": self.cfg.denominator,
            "n_nodes": self.domain.n_nodes,
            "amplitudes_exact": {s.key: cpx(self.amps.a[s]) for s in ALL_SCREENS},
            "amplitudes_truncated": {s.key: cpx(self.amps_order.a[s]) for s in ALL_SCREENS},
            "balance": self.balance,
            "balance_flux_weighted": self.balance_flux,
            "balance_truncated": probability_balance(self.amps_order),
            "breakup_probability": self.amps.breakup_probability(),
            "breakup_peak_deg": self.amps.forward_peak_deg(),
            "mirror_asymmetry": self.amps.mirror_asymmetry(),
            "sep_residual": sep_residual(self.opr, self.cache, self.phi, self.Qb),
            "radiation_defect_phi": radiation_defect(self.phi, self.cfg.E),
            "flagged_denominator": self.cache.flagged(),
            "schwartz": self.report.to_dict(),
        }


def solve_energy(cfg: ScatterConfig, n_theta: int = 720, domain: Domain | None = None) -> RunResult:
    """bound state -> mesh -> operator -> residuals -> Q_b -> Green's cache -> Phi -> amplitudes."""
    t = {}
    t0 = time.perf_counter()
    dom = domain if domain is not None else build_disk_domain(cfg.R, cfg.h)
    t["mesh"] = time.perf_counter() - t0
    opr = assemble(dom, cfg.E, cfg.potential)
    t["assemble"] = time.perf_counter() - t0 - t["mesh"]
    waves = build_waves(cfg, opr)
    first = ALL_SCREENS[0]
    den = waves.denominator(first)
    Qb = source_Qb(cfg, waves.Q_in, waves.Q[first], waves.psi_in, den=den)
    t1 = time.perf_counter()
    cache = build_greens_cache(opr, waves.sources(), Qb, beta_from_denominator(den))
    t["solves"] = time.perf_counter() - t1
    phi = exact_lowrank_solve(cache)
    phi_order, report = schwartz_solve(cache, cfg.order)
    amps = extract(waves, phi, n_theta)
    amps_order = extract(waves, phi_order, n_theta)
    t["total"] = time.perf_counter() - t0
    return RunResult(cfg, dom, opr, waves, Qb, cache, phi, phi_order, report, amps, amps_order, t)


@dataclass
class ResultBundle:
    config: RunConfig
    results: list
    manifest: list = field(default_factory=list)


def run_scattering(config: RunConfig, export: bool = True) -> ResultBundle:
    results = [solve_energy(config.scatter_config(E), config.n_theta) for E in config.data["energies"]]
    bundle = ResultBundle(config, results)
    if export:
        export_outputs(bundle, Path(config.data["output_dir"]))
    return bundle


def _energy_dir(root: Path, E: float, multi: bool) -> Path:
    return root / f"E_{E:g}" if multi else root


def export_outputs(bundle: ResultBundle, root) -> list:
    """Write per-energy JSON/CSV files; returns (and stores) the list of paths written."""
    root = Path(root)
    multi = len(bundle.results) > 1
    written = []
    for res in bundle.results:
        d = _energy_dir(root, res.cfg.E, multi)
        try:
            d.mkdir(parents=True, exist_ok=True)
            written += _export_one(res, d, bundle.config.data.get("export_fields", True), bundle.config)
        except OSError as exc:
            raise OSError(f"writing outputs to {d}: {exc}") from exc
    bundle.manifest = [str(p) for p in written]
    return bundle.manifest


def _export_one(res: RunResult, d: Path, fields: bool, config: RunConfig) -> list:
    out = []
    p = d / "amplitudes.json"
    p.write_text(json.dumps(res.amps.to_dict(res.balance), indent=2) + "\n")
    out.append(p)
    p = d / "a_theta.csv"
    A = res.amps.A
    np.savetxt(p, np.column_stack([res.amps.theta, A.real, A.imag, np.abs(A)]),
               delimiter=",", header="theta,re,im,abs", comments="", fmt="%.12g")
    out.append(p)
    if fields:
        psi, psi0 = res.full_solution()
        for name, f in (("phi_field.csv", res.phi), ("psi0_field.csv", psi0), ("psi_field.csv", psi)):
            f.to_csv(d / name)
            out.append(d / name)
    p = d / "report.json"
    rep = {"config": config.data, "result": res.summary(), "timings": res.timings,
           "files": [str(x) for x in out] + [str(p)]}
    p.write_text(json.dumps(rep, indent=2) + "\n")
    out.append(p)
    return out


# -- sweeps ----------------------------------------------------------------

def _sweep_case(config: RunConfig, E: float, axis: str, value):
    g = config.data["geometry"]
    if axis == "h":
        return config.scatter_config(E, h=float(value))
    if axis == "R":
        return config.scatter_config(E, R=float(value))
    if axis == "R1":
        width = g["R2"] - g["R1"]
        gap = g["R"] - g["R2"]
        R1 = float(value)
        return config.scatter_config(E, R1=R1, R2=R1 + width, R=R1 + width + gap)
    if axis == "order":
        return config.scatter_config(E, order=int(value))
    raise InvalidConfig(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")


def _ratios(norms):
    return [norms[m] / norms[m - 1] if norms[m - 1] > 0 else math.nan for m in range(1, len(norms))]


def convergence_sweep(config: RunConfig, axis: str, values, E: float | None = None) -> dict:
    """Amplitudes, balance and series diagnostics against one parameter.

    For ``R1`` the cut-off width and the gap to the boundary stay fixed, so the
    whole geometry moves outward. Decay exponents are log-log slopes between
    consecutive axis values.
    """
    if axis not in SWEEP_AXES:
        raise InvalidConfig(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = list(values)
    if len(values) < 2:
        raise InvalidConfig("a sweep needs at least two values")
    E = config.data["energies"][0] if E is None else E
    if axis == "order":
        # one solve; orders only change the truncation
        base = config.scatter_config(E, order=max(int(v) for v in values))
        res = solve_energy(base, config.n_theta)
        rows = []
        for v in values:
            phi, rep = schwartz_solve(res.cache, int(v))
            amps = extract(res.waves, phi, config.n_theta)
            rows.append(_row(v, amps, rep))
        norms = res.report.correction_norms
        return {"axis": axis, "E": E, "rows": rows, "correction_norms": norms,
                "monotone_decreasing": all(b < a for a, b in zip(norms, norms[1:])),
                "ratios": _ratios(norms)}
    rows = []
    for v in values:
        res = solve_energy(_sweep_case(config, E, axis, v), config.n_theta)
        row = _row(v, res.amps, res.report)
        row["ratios"] = _ratios(res.report.correction_norms)
        rows.append(row)
    exps = []
    for r0, r1 in zip(rows, rows[1:]):
        x0, x1 = float(r0["value"]), float(r1["value"])
        e = {}
        for m, (q0, q1) in enumerate(zip(r0["ratios"], r1["ratios"]), start=1):
            e[f"ratio_{m}"] = math.log(q1 / q0) / math.log(x1 / x0)
        e["a_1_plus"] = math.log(abs(r1["a"]["a_1_plus"][2]) / abs(r0["a"]["a_1_plus"][2])) / math.log(x1 / x0)
        exps.append(e)
    return {"axis": axis, "E": E, "rows": rows, "exponents": exps,
            "amplitude_drift": [amplitude_drift(r0, r1) for r0, r1 in zip(rows, rows[1:])]}


def amplitude_drift(row0: dict, row1: dict) -> float:
    """Largest change of any ``|a_s|`` relative to the norm of the amplitude vector."""
    m0 = np.array([row0["a"][s.key][2] for s in ALL_SCREENS])
    m1 = np.array([row1["a"][s.key][2] for s in ALL_SCREENS])
    return float(np.max(np.abs(m1 - m0)) / np.linalg.norm(m0))


def _row(value, amps: AmplitudeSet, rep: SchwartzReport) -> dict:
    return {
        "value": value,
        "a": {s.key: [amps.a[s].real, amps.a[s].imag, abs(amps.a[s])] for s in ALL_SCREENS},
        "balance": probability_balance(amps),
        "correction_norms": rep.correction_norms,
        "error_to_exact": rep.error_to_exact,
        "spectral_radius": rep.spectral_radius,
    }
