"""Command-line front end: pump-solve, gate-sim, sweep, closure, bloch-traj."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from . import bloch, circuits, closure, metrics
from .codes import CODE_NAMES, BosonicCode, default_layout
from .dynamics import CHANNELS, IntegrationError, NoiseModel, NonlinearParams, ReadoutModel

log = logging.getLogger("edbosonic")

CONFIG_VERSION = 1
TWO_PI = 2 * math.pi

_FREQ = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}
_QTY = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ/]*)\s*$")


class ConfigError(ValueError):
    pass


def _parse(value, table: dict, scale: float, what: str) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    m = _QTY.match(str(value).replace("−", "-"))
    if not m:
        raise ConfigError(f"cannot parse {what} {value!r}")
    number, unit = float(m.group(1)), m.group(2).lower()
    if unit == "":
        return number
    if unit in ("rad/s",):
        return number
    if unit not in table:
        raise ConfigError(f"unknown {what} unit {m.group(2)!r}")
    return number * table[unit] * scale


def frequency(value) -> float:
    """'-1 MHz' -> angular frequency in rad/s; bare numbers are taken as rad/s."""
    return _parse(value, _FREQ, TWO_PI, "frequency")


def duration(value) -> float:
    """'50 ns' -> seconds; bare numbers are taken as seconds."""
    return _parse(value, _TIME, 1.0, "duration")


# --- configuration ----------------------------------------------------------------------

SCHEMA = {
    "version": None,
    "gate": {"kind", "theta", "code", "variant", "alpha"},
    "layout": {"mode_dim"},
    "pump": {"chi_f", "chi_e", "rot_duration", "overrotation"},
    "noise": {"T1_ancilla", "Tphi_ancilla", "T1_cavity"},
    "readout": {"perfect", "eta_ge", "eta_gf", "eta_gg"},
    "sweep": {"axis", "channels", "ratios", "chi_values"},
    "nonlinear": {"enabled", "K_a", "K_b", "chi_e_prime", "chi_f_prime", "chi_ab", "anchor_chi_f",
                  "scale_with_chi"},
    "integrator": {"method", "rtol", "atol"},
    "output": {"dir", "prefix"},
    "closure": {"max_depth", "n_protect", "include_sigma_z"},
}


@dataclass
class ExperimentConfig:
    gate: metrics.GateSpec
    mode_dim: int | None
    noise: NoiseModel
    readout: ReadoutModel
    sweep_axis: str = "t_coh"
    channels: tuple = CHANNELS
    ratios: tuple = metrics.DEFAULT_RATIOS
    chi_values: tuple = ()
    nonlinear: NonlinearParams | None = None
    scale_nonlinear: bool = True
    anchor_chi_f: float = metrics.ANCHOR_CHI_F
    method: str = "expm"
    rtol: float = 1e-9
    atol: float = 1e-12
    out_dir: str = "out"
    prefix: str = ""
    closure_depth: int = 4
    closure_protect: int = 2
    closure_sigma_z: bool = True
    overrotation: float = 0.0
    raw: dict = field(default_factory=dict)

    @property
    def integrator(self) -> dict:
        return {"method": self.method, "rtol": self.rtol, "atol": self.atol}

    def layout(self):
        return default_layout(self.gate.code, self.mode_dim)

    def nonlinearity_at(self, chi_f: float) -> NonlinearParams | None:
        if self.nonlinear is None:
            return None
        if not self.scale_nonlinear:
            return self.nonlinear
        return metrics.nonlinearity_at(chi_f, self.nonlinear, self.anchor_chi_f)


def validate(raw: dict) -> None:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    for key, value in raw.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown configuration section {key!r}")
        allowed = SCHEMA[key]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section {key!r} must be a mapping")
        extra = set(value) - allowed
        if extra:
            raise ConfigError(f"unknown keys in {key!r}: {sorted(extra)}")
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version}")


def _rate(section: dict, key: str) -> float:
    if key not in section or section[key] in (None, "inf"):
        return 0.0
    t = duration(section[key])
    if t <= 0:
        raise ConfigError(f"{key} must be positive")
    return 1.0 / t


def build_config(raw: dict | None) -> ExperimentConfig:
    raw = dict(raw or {})
    validate(raw)
    g = raw.get("gate", {})
    code_name = g.get("code", "Binomial")
    if code_name not in CODE_NAMES:
        raise ConfigError(f"unknown code {code_name!r}")
    code = BosonicCode(code_name, g.get("alpha"))
    p = raw.get("pump", {})
    chi_f = frequency(p.get("chi_f", "-1 MHz"))
    if chi_f == 0:
        raise ConfigError("chi_f must be non-zero")
    chi_e = frequency(p["chi_e"]) if "chi_e" in p else None
    gate = metrics.GateSpec(kind=g.get("kind", "ZZ"), theta=float(g.get("theta", math.pi / 2)), code=code,
                            chi_f=chi_f, chi_e=chi_e,
                            rot_duration=duration(p.get("rot_duration", "50 ns")),
                            variant=g.get("variant", "fast"))
    n = raw.get("noise", {})
    noise = NoiseModel(_rate(n, "T1_ancilla"), _rate(n, "Tphi_ancilla"), _rate(n, "T1_cavity"))
    r = raw.get("readout", {"perfect": True})
    if r.get("perfect", False):
        readout = ReadoutModel.perfect()
    else:
        readout = ReadoutModel.from_errors(float(r.get("eta_ge", 0.01)),
                                           None if r.get("eta_gf") is None else float(r["eta_gf"]),
                                           float(r.get("eta_gg", 1 - 1e-4)))
    s = raw.get("sweep", {})
    channels = tuple(s.get("channels", CHANNELS))
    for c in channels:
        if c not in CHANNELS:
            raise ConfigError(f"unknown channel {c!r}")
    nl_raw = raw.get("nonlinear", {})
    nonlinear = None
    if nl_raw.get("enabled", False):
        a = metrics.ANCHOR_NONLINEAR
        nonlinear = NonlinearParams(
            frequency(nl_raw.get("K_a", a.K_a)), frequency(nl_raw.get("K_b", a.K_b)),
            frequency(nl_raw.get("chi_e_prime", a.chi_e_prime)),
            frequency(nl_raw.get("chi_f_prime", a.chi_f_prime)), frequency(nl_raw.get("chi_ab", a.chi_ab)))
    integ = raw.get("integrator", {})
    out = raw.get("output", {})
    cl = raw.get("closure", {})
    axis = s.get("axis", "t_coh")
    if axis not in ("t_coh", "chi"):
        raise ConfigError("sweep axis must be 't_coh' or 'chi'")
    method = integ.get("method", "expm")
    if method not in ("expm", "dop853", "rk4"):
        raise ConfigError(f"unknown integrator {method!r}")
    return ExperimentConfig(
        gate=gate, mode_dim=raw.get("layout", {}).get("mode_dim"), noise=noise, readout=readout,
        sweep_axis=axis, channels=channels,
        ratios=tuple(float(x) for x in s.get("ratios", metrics.DEFAULT_RATIOS)),
        chi_values=tuple(frequency(x) for x in s.get("chi_values", ())),
        nonlinear=nonlinear, scale_nonlinear=bool(nl_raw.get("scale_with_chi", True)),
        anchor_chi_f=frequency(nl_raw.get("anchor_chi_f", metrics.ANCHOR_CHI_F)),
        method=method, rtol=float(integ.get("rtol", 1e-9)), atol=float(integ.get("atol", 1e-12)),
        out_dir=str(out.get("dir", "out")), prefix=str(out.get("prefix", "")),
        closure_depth=int(cl.get("max_depth", 4)), closure_protect=int(cl.get("n_protect", 2)),
        closure_sigma_z=bool(cl.get("include_sigma_z", True)),
        overrotation=float(p.get("overrotation", 0.0)), raw=raw)


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return build_config({})
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return build_config(raw)


# --- work units ---------------------------------------------------------------------------

def _schedule_for(cfg: ExperimentConfig, chi_f: float | None = None) -> circuits.Schedule:
    gate = cfg.gate
    chi = gate.chi_f if chi_f is None else chi_f
    if gate.kind == "ZZ":
        chi_e = gate.chi_e if chi_f is None else None
        return circuits.zz_gate(gate.code, gate.theta, chi, chi_e, gate.rot_duration, gate.variant,
                                cfg.overrotation)
    return gate.schedule(chi_f)


def _unit(args) -> metrics.SweepPoint:
    """One sweep point; module-level so worker processes can import it."""
    cfg, kind, value = args
    layout = cfg.layout()
    target = cfg.gate.target()
    if kind == "t_coh":
        channel, ratio = value
        sched = _schedule_for(cfg)
        t_coh = ratio * sched.duration
        return metrics.error_detected_infidelity(
            sched, cfg.gate.code, NoiseModel.single_channel(channel, t_coh), cfg.readout, layout, target,
            t_coh=t_coh, channel=channel, nonlinear=cfg.nonlinearity_at(cfg.gate.chi_f),
            chi_f=cfg.gate.chi_f, **cfg.integrator)
    if kind == "chi":
        sched = _schedule_for(cfg, value)
        return metrics.error_detected_infidelity(
            sched, cfg.gate.code, cfg.noise, cfg.readout, layout, target, channel="chi",
            nonlinear=cfg.nonlinearity_at(value), chi_f=value, **cfg.integrator)
    sched = _schedule_for(cfg)
    return metrics.error_detected_infidelity(
        sched, cfg.gate.code, cfg.noise, cfg.readout, layout, target, channel="gate",
        nonlinear=cfg.nonlinearity_at(cfg.gate.chi_f), chi_f=cfg.gate.chi_f, **cfg.integrator)


def run_units(units: list, workers: int) -> list:
    """Evaluate units in order; results come back in submission order regardless of workers."""
    if workers <= 1 or len(units) <= 1:
        return [_unit(u) for u in units]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_unit, units))


# --- output helpers -------------------------------------------------------------------------

def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    d = Path(override or cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")
    log.info("wrote %s", path)


def _summary(cfg: ExperimentConfig, extra: dict) -> str:
    return json.dumps({"config": cfg.raw, **extra}, indent=2, sort_keys=True, default=float)


# --- subcommands ------------------------------------------------------------------------------

def cmd_pump_solve(args) -> int:
    chi = frequency(args.chi)
    targets = bloch.TARGETS if args.target == "all" else (args.target,)
    rows = []
    for t in targets:
        kw = {}
        if t == "cSWAP_alt":
            kw["n"] = args.n
        if t in ("BS5050", "uSWAP"):
            kw["g"] = frequency(args.g) if args.g else (abs(chi) if t == "uSWAP" else None)
        params, dur = bloch.solve_pump(t, chi, **kw)
        row = {"target": t, "g_MHz": params.g / TWO_PI / 1e6, "delta_MHz": params.delta / TWO_PI / 1e6,
               "duration_ns": dur * 1e9}
        if args.verify:
            row["fidelity"] = metrics.verify_primitive(t, chi, n=args.n, g=kw.get("g"))
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_gate_sim(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    out = _out_dir(cfg, args.out)
    point = run_units([(cfg, "gate", None)], 1)[0]
    sched = _schedule_for(cfg)
    _write(out / f"{cfg.prefix}gate_sim.csv", metrics.sweep_csv([point]))
    _write(out / f"{cfg.prefix}gate_sim.json",
           _summary(cfg, {"result": asdict(point), "schedule": circuits.schedule_to_dict(sched)}))
    sys.stdout.write(f"infidelity={point.ed_infidelity:.6e} failure={point.failure_prob:.6e}\n")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    _apply_overrides(cfg, args)
    out = _out_dir(cfg, args.out)
    if cfg.sweep_axis == "t_coh":
        units = [(cfg, "t_coh", (c, r)) for c in cfg.channels for r in cfg.ratios]
    else:
        if not cfg.chi_values:
            raise ConfigError("a chi sweep needs sweep.chi_values")
        units = [(cfg, "chi", c) for c in cfg.chi_values]
    points = run_units(units, args.workers)
    _write(out / f"{cfg.prefix}sweep.csv", metrics.sweep_csv(points))
    fits = {}
    if cfg.sweep_axis == "t_coh":
        for c in cfg.channels:
            pts = [p for p in points if p.channel == c]
            for q in ("failure", "infidelity"):
                try:
                    fits[f"{c}/{q}"] = metrics.fit_scaling(pts, q)
                except metrics.FitError as exc:
                    log.warning("no fit for %s/%s: %s", c, q, exc)
    else:
        x = [abs(p.chi_f) for p in points]
        for q, key in (("failure", "failure_prob"), ("infidelity", "ed_infidelity")):
            try:
                fits[f"chi/{q}"] = metrics.fit_power_law(x, [getattr(p, key) for p in points])
            except metrics.FitError as exc:
                log.warning("no fit for chi/%s: %s", q, exc)
    _write(out / f"{cfg.prefix}fits.json", _summary(cfg, {"fits": {k: asdict(v) for k, v in fits.items()}}))
    return 0


def cmd_closure(args) -> int:
    cfg = load_config(args.config)
    out = _out_dir(cfg, args.out)
    rows = closure.candidate_report(cfg.closure_depth, cfg.closure_protect, cfg.closure_sigma_z)
    _write(out / f"{cfg.prefix}closure.md", closure.report_markdown(rows))
    _write(out / f"{cfg.prefix}closure.csv", closure.report_csv(rows))
    mismatches = [r.hamiltonian for r in rows if not r.matches]
    sys.stdout.write(closure.report_markdown(rows))
    return 1 if mismatches else 0


def cmd_bloch_traj(args) -> int:
    chi = frequency(args.chi)
    if args.target:
        kw = {}
        if args.g:
            kw["g"] = frequency(args.g)
        elif args.target == "uSWAP":
            kw["g"] = abs(chi)
        params, dur = bloch.solve_pump(args.target, chi, **kw)
    else:
        params = bloch.PumpParams(g=frequency(args.g), varphi=args.varphi, delta=frequency(args.delta),
                                  chi_f=chi)
        dur = duration(args.duration) if args.duration else None
    if args.target == "uSWAP":
        samples = bloch.uswap_trajectory(params, args.branch, args.nsteps)
    else:
        samples = bloch.sample_trajectory(params, args.branch, args.nsteps, dur)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "y", "z", "branch"])
    w.writerows(bloch.trajectory_csv_rows(samples, args.branch))
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        _write(d / "bloch_traj.csv", buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _apply_overrides(cfg: ExperimentConfig, args) -> None:
    if getattr(args, "rtol", None) is not None:
        cfg.rtol = args.rtol
    if getattr(args, "atol", None) is not None:
        cfg.atol = args.atol
    if getattr(args, "method", None):
        cfg.method = args.method


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="edbosonic", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("pump-solve", help="closed-form pump settings for a primitive")
    ps.add_argument("--target", default="all", choices=("all", *bloch.TARGETS))
    ps.add_argument("--chi", default="-1 MHz")
    ps.add_argument("--n", type=int, default=2, help="orbit count for cSWAP_alt")
    ps.add_argument("--g", default=None, help="beamsplitter rate for BS5050 / uSWAP")
    ps.add_argument("--verify", action="store_true", help="check against full-space propagation")
    ps.set_defaults(func=cmd_pump_solve)

    for name, func, help_ in (("gate-sim", cmd_gate_sim, "one error-detected gate over 36 cardinal states"),
                              ("sweep", cmd_sweep, "coherence or chi sweep with power-law fits"),
                              ("closure", cmd_closure, "error-closure table")):
        sp_ = sub.add_parser(name, help=help_)
        sp_.add_argument("--config", default=None)
        sp_.add_argument("--out", default=None)
        sp_.add_argument("--workers", type=int, default=1)
        sp_.add_argument("--rtol", type=float, default=None)
        sp_.add_argument("--atol", type=float, default=None)
        sp_.add_argument("--method", choices=("expm", "dop853", "rk4"), default=None)
        sp_.set_defaults(func=func)

    bt = sub.add_parser("bloch-traj", help="operator Bloch sphere trajectory as CSV")
    bt.add_argument("--target", default=None, choices=bloch.TARGETS)
    bt.add_argument("--chi", default="-1 MHz")
    bt.add_argument("--g", default=None)
    bt.add_argument("--delta", default="0")
    bt.add_argument("--varphi", type=float, default=0.0)
    bt.add_argument("--duration", default=None)
    bt.add_argument("--branch", default="g", choices=("g", "f"))
    bt.add_argument("--nsteps", type=int, default=101)
    bt.add_argument("--out", default=None)
    bt.set_defaults(func=cmd_bloch_traj)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, IntegrationError, ValueError) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
