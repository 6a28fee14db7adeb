"""Self-checks behind ``eq-check``: each returns a max deviation and its tolerance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .biphoton import (
    Background,
    Normalization,
    Scenario,
    build_scenario,
    compute_amplitudes,
    negative_image_residual,
)
from .fock import DEFAULT_GRID, Pol, TimeGrid
from .franson import (
    ExperimentConfig,
    eq1_reference,
    eq2_state_check,
    prepare_eq1_state,
    prepare_pair_at_beamsplitter,
)
from .tpa import TpaChannel


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.deviation < self.tolerance


def check_eq1(grid: TimeGrid = DEFAULT_GRID) -> CheckResult:
    """Amplitudes +-1/sqrt(2) with relative phase pi, and post-selection probability 1/2."""
    state, prob = prepare_eq1_state(grid)
    normalized = state.normalized()
    ref = eq1_reference(grid)
    amps = [normalized.amplitude(b) for b in ref.terms]
    ratio = amps[1] / amps[0]
    deviation = max(
        max(abs(abs(a) - 1 / math.sqrt(2)) for a in amps),
        abs(ratio - (-1)),
        abs(prob - 0.5),
    )
    return CheckResult("eq1", deviation, 1e-12, f"post-selection probability {prob!r}")


def check_eq2(n_trials: int = 20, seed: int = 2012, grid: TimeGrid = DEFAULT_GRID) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phi1, phi2 in rng.uniform(-math.pi, math.pi, size=(n_trials, 2)):
        worst = max(worst, eq2_state_check(ExperimentConfig(grid=grid, phi1=float(phi1), phi2=float(phi2))))
    return CheckResult("eq2", worst, 1e-12, f"{n_trials} random phase pairs")


def check_negative_image(grid: TimeGrid = DEFAULT_GRID) -> CheckResult:
    tpa = TpaChannel(strength=1.0)
    results = {}
    for eph, pdc, background in (
        (Scenario.EPH_ET, Scenario.PDC_ET, Background.coherent(0.3)),
        (Scenario.EPH_TB, Scenario.PDC_TB, Background.single()),
    ):
        a_eph = compute_amplitudes(build_scenario(eph, background, grid, tpa), normalization=Normalization.PEAK_ONE)
        a_pdc = compute_amplitudes(build_scenario(pdc, None, grid), normalization=Normalization.PEAK_ONE)
        results[eph.value] = negative_image_residual(a_eph, a_pdc, 1.0)
    detail = ", ".join(f"{k}: {v:.3g}" for k, v in results.items())
    return CheckResult("negative-image", max(results.values()), 1e-10, detail)


def check_hom(grid: TimeGrid = DEFAULT_GRID) -> CheckResult:
    """Two identical photons in the same bin leave the beamsplitter together."""
    _, prob = prepare_pair_at_beamsplitter(grid, 0, Pol.H, Pol.H)
    return CheckResult("hom", prob, 1e-12, "coincidence probability at zero delay")


CHECKS = {
    "eq1": check_eq1,
    "eq2": check_eq2,
    "negative-image": check_negative_image,
    "hom": check_hom,
}
