"""Piecewise-constant control schedules for the primitive and composite gates.

A schedule is an ordered tuple of segments plus a tracked frame phase
``phi``: the physical operation equals ``exp(i phi N) @ ideal`` where ``N``
counts photons in the beamsplitter pair.  Software removes the frame by
applying ``exp(-i phi N)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bloch
from .fock import PumpParams

DEFAULT_ROT_DURATION = 50e-9


@dataclass(frozen=True)
class Beamsplitter:
    params: PumpParams
    duration: float
    kind = "beamsplitter"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")


@dataclass(frozen=True)
class Delay:
    """Idle period; ``params.g`` must be zero, ``params.delta`` is a frame detuning."""

    params: PumpParams
    duration: float
    kind = "delay"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")
        if self.params.g != 0:
            raise ValueError("a delay carries no beamsplitter drive")


@dataclass(frozen=True)
class AncillaRotation:
    """Constant-amplitude rotation exp(-i angle/2 sigma_axis) in the g-f manifold."""

    axis: str
    angle: float
    duration: float = DEFAULT_ROT_DURATION
    kind = "rotation"

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"rotation axis must be x, y or z, got {self.axis!r}")
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")

    @property
    def drive_strength(self) -> float:
        return self.angle / (2 * self.duration)


Segment = Beamsplitter | Delay | AncillaRotation


@dataclass(frozen=True)
class Schedule:
    segments: tuple = ()
    frame_phase: float = 0.0
    mode_pair: tuple[int, int] = (0, 1)
    label: str = ""

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def __len__(self):
        return len(self.segments)

    def to_json(self) -> str:
        return json.dumps(schedule_to_dict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        return schedule_from_dict(json.loads(text))


def _params_dict(p: PumpParams) -> dict:
    return {"g": p.g, "varphi": p.varphi, "delta": p.delta, "chi_f": p.chi_f, "chi_e": p.chi_e}


def schedule_to_dict(s: Schedule) -> dict:
    timeline = []
    for seg in s.segments:
        entry = {"kind": seg.kind, "duration_ns": seg.duration * 1e9, "duration_s": seg.duration}
        if isinstance(seg, AncillaRotation):
            entry.update(axis=seg.axis, angle=seg.angle, drive_strength=seg.drive_strength)
        else:
            entry["params"] = _params_dict(seg.params)
        timeline.append(entry)
    return {"label": s.label, "frame_phase": s.frame_phase, "mode_pair": list(s.mode_pair),
            "timeline": timeline}


def schedule_from_dict(d: dict) -> Schedule:
    segs = []
    for e in d["timeline"]:
        t = e["duration_s"] if "duration_s" in e else e["duration_ns"] * 1e-9
        if e["kind"] == "rotation":
            segs.append(AncillaRotation(e["axis"], e["angle"], t))
        elif e["kind"] == "beamsplitter":
            segs.append(Beamsplitter(PumpParams(**e["params"]), t))
        elif e["kind"] == "delay":
            segs.append(Delay(PumpParams(**e["params"]), t))
        else:
            raise ValueError(f"unknown segment kind {e['kind']!r}")
    return Schedule(tuple(segs), d.get("frame_phase", 0.0), tuple(d.get("mode_pair", (0, 1))),
                    d.get("label", ""))


def _segment_transform(seg, branch: str) -> bloch.ModeTransform:
    p = seg.params
    return bloch._transform(p.g, p.varphi, p.branch_detuning(branch), seg.duration)


def branch_transform(segments, branch: str) -> bloch.ModeTransform:
    """Single-excitation transform of the mode segments with the ancilla held in ``branch``."""
    out = bloch.ModeTransform.identity()
    for seg in segments:
        if isinstance(seg, AncillaRotation):
            raise ValueError("branch transforms are defined for mode segments only")
        out = out.then(_segment_transform(seg, branch))
    return out


def _g_branch_frame(segments) -> float:
    """Per-photon phase of the |g> branch, which must be a multiple of the identity."""
    m = branch_transform(segments, "g").matrix
    if abs(m[0, 1]) > 1e-9 or abs(m[0, 0] - m[1, 1]) > 1e-9:
        raise ValueError("the |g> branch is not a pure phase; no frame to track")
    return float(np.angle(m[0, 0]))


# --- primitives --------------------------------------------------------------

def schedule_czz(n: int, chi: float, variant: str = "fast", chi_e: float = 0.0,
                 mode_pair: tuple[int, int] = (0, 1)) -> Schedule:
    """Controlled joint parity exp(i pi/n N) on |f>; identity on |g> after frame removal."""
    if n == 1:
        target = "cZZ_n1"
    elif n == 2:
        if variant not in ("fast", "slow"):
            raise ValueError("variant must be 'fast' or 'slow'")
        target = f"cZZ_n2_{variant}"
    else:
        raise ValueError("n must be 1 or 2")
    params, t = bloch.solve_pump(target, chi, chi_e=chi_e)
    segs = (Beamsplitter(params, t),)
    return Schedule(segs, _g_branch_frame(segs), mode_pair, target)


def cswap_delay(chi: float) -> float:
    return math.pi * (3 - math.sqrt(3)) / (2 * abs(chi))


def schedule_cswap(chi: float, chi_e: float = 0.0, mode_pair: tuple[int, int] = (0, 1)) -> Schedule:
    """Controlled SWAP on |f>, identity on |g>, with phase-nulling delays split evenly.

    The delays run in a frame detuned by +chi/2 on the dispersive mode, so the
    |g> branch is idle and only the |f> branch accumulates phase.
    """
    params, t = bloch.solve_pump("cSWAP", chi, chi_e=chi_e)
    idle = Delay(PumpParams(0.0, 0.0, chi / 2, chi, chi_e), cswap_delay(chi))
    segs = (idle, Beamsplitter(params, t), idle)
    return Schedule(segs, _g_branch_frame(segs), mode_pair, "cSWAP")


def schedule_bs5050(chi: float, g: float | None = None, chi_e: float = 0.0,
                    mode_pair: tuple[int, int] = (0, 1)) -> Schedule:
    params, t = bloch.solve_pump("BS5050", chi, g=g, chi_e=chi_e)
    return Schedule((Beamsplitter(params, t),), 0.0, mode_pair, "BS5050")


def schedule_uswap(g: float, chi: float, chi_e: float = 0.0, rot_duration: float = DEFAULT_ROT_DURATION,
                   mode_pair: tuple[int, int] = (0, 1)) -> Schedule:
    """Half beamsplitter to the equator, ancilla pi pulse, second half.

    Rotation time is not included in the Bloch picture; the dispersive term is
    off while the ancilla is driven.
    """
    params, t_eq = bloch.solve_pump("uSWAP", chi, g=g, chi_e=chi_e)
    segs = (Beamsplitter(params, t_eq), AncillaRotation("x", math.pi, rot_duration),
            Beamsplitter(params, t_eq))
    return Schedule(segs, 0.0, mode_pair, "uSWAP")


# --- composites ----------------------------------------------------------------

def schedule_exponentiation(inner: Schedule, theta: float, rot_duration: float = DEFAULT_ROT_DURATION,
                            overrotation: float = 0.0) -> Schedule:
    """P(theta) (x) |g><g| + P(-theta) (x) |f><f| from a controlled-P schedule.

    ``overrotation`` adds extra angle to the first Y pulse.
    """
    first = AncillaRotation("y", math.pi / 2 + overrotation, rot_duration)
    middle = AncillaRotation("x", theta, rot_duration)
    last = AncillaRotation("y", -math.pi / 2, rot_duration)
    segs = (first, *inner.segments, middle, *inner.segments, last)
    return Schedule(segs, 2 * inner.frame_phase, inner.mode_pair, f"exp[{inner.label}]({theta:.6g})")


def schedule_qnd_measurement(inner: Schedule, rot_duration: float = DEFAULT_ROT_DURATION) -> Schedule:
    """Maps the +1 eigenspace of P to ancilla |g> and the -1 eigenspace to |f>."""
    segs = (AncillaRotation("y", math.pi / 2, rot_duration), *inner.segments,
            AncillaRotation("y", -math.pi / 2, rot_duration))
    return Schedule(segs, inner.frame_phase, inner.mode_pair, f"qnd[{inner.label}]")


def concat(*schedules: Schedule) -> Schedule:
    if not schedules:
        return Schedule()
    pairs = {s.mode_pair for s in schedules if s.segments}
    if len(pairs) > 1:
        raise ValueError(f"cannot concatenate schedules on different mode pairs {pairs}")
    segs = tuple(seg for s in schedules for seg in s.segments)
    return Schedule(segs, float(sum(s.frame_phase for s in schedules)),
                    pairs.pop() if pairs else schedules[0].mode_pair,
                    "+".join(s.label for s in schedules))


def zz_gate(code, theta: float, chi: float, chi_e: float | None = None,
            rot_duration: float = DEFAULT_ROT_DURATION, variant: str = "fast",
            overrotation: float = 0.0) -> Schedule:
    """Error-detected ZZ_L(theta) for a code, chi_e defaulting to chi/2."""
    chi_e = chi / 2 if chi_e is None else chi_e
    inner = schedule_czz(code.rotation_order, chi, variant, chi_e, code.gate_pair)
    return schedule_exponentiation(inner, theta, rot_duration, overrotation)


def eswap_gate(code, theta: float, chi: float, chi_e: float | None = None,
               rot_duration: float = DEFAULT_ROT_DURATION) -> Schedule:
    """Error-detected exponential SWAP built from the controlled SWAP."""
    if code.modes_per_qubit != 1:
        raise ValueError("exponential SWAP needs a single-mode code")
    chi_e = chi / 2 if chi_e is None else chi_e
    inner = schedule_cswap(chi, chi_e, code.gate_pair)
    return schedule_exponentiation(inner, theta, rot_duration)
