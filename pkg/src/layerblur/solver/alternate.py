"""Inner alternation: layers, then mask, then motions."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields

from ..types import BlurModel, Scene
from .alpha import solve_alpha
from .config import EnergyBreakdown, SolverConfig
from .latent import solve_latent
from .motion import solve_motion
from .objective import objective

TRACE_COLUMNS = ["step"] + [f.name for f in fields(EnergyBreakdown)]


@dataclass
class AlternationResult:
    scene: Scene
    initial: EnergyBreakdown
    trace: list = field(default_factory=list)  # (label, EnergyBreakdown)


def alternate(scene: Scene, frames, config: SolverConfig,
              kind: BlurModel = BlurModel.PROPOSED, prefix: str = "",
              on_step=None) -> AlternationResult:
    """Run ``config.inner_iterations`` rounds of latent, alpha and motion updates.

    The energy is recorded after each sub-step under labels such as
    ``iter2/alpha`` (prefixed by ``prefix``).  ``on_step(label, energy)`` is
    called as each entry is recorded.
    """
    result = AlternationResult(scene.copy(), objective(scene, frames, config, kind))
    steps = (("latent", solve_latent), ("alpha", solve_alpha), ("motion", solve_motion))
    for it in range(1, config.inner_iterations + 1):
        for name, step in steps:
            result.scene = step(result.scene, frames, config, kind)
            energy = objective(result.scene, frames, config, kind)
            label = f"{prefix}iter{it}/{name}"
            result.trace.append((label, energy))
            if on_step is not None:
                on_step(label, energy)
    return result


def trace_row(label: str, energy: EnergyBreakdown) -> list:
    return [label] + [repr(getattr(energy, c)) for c in TRACE_COLUMNS[1:]]


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for label, energy in trace:
            writer.writerow(trace_row(label, energy))
