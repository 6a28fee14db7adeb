"""End-to-end acceptance criteria, one test each, at the stated tolerances."""

import math
import time

import numpy as np
import pytest

from ephsim.biphoton import Background, Scenario, build_scenario, compute_amplitudes
from ephsim.checks import check_eq1, check_eq2, check_hom, check_negative_image
from ephsim.fock import FockBasisState, ModeLabel, Pol, StateVector, TimeGrid
from ephsim.franson import (
    BellVerdict,
    ExperimentConfig,
    analytic_coincidence_rate,
    bell_verdict,
    closed_form_rate,
    run_phase_scan,
)
from ephsim.optics import (
    HWP,
    QWP,
    BeamSplitter,
    Circuit,
    Delay,
    FransonAnalyzer,
    PhaseShift,
    PolarizingBeamSplitter,
    Polarizer,
    WavePlate,
    apply_element,
    unbalanced_mz,
)
from ephsim.report import reproduce_fig4
from ephsim.tpa import TpaChannel, apply_tpa

from oracles import bs_real, bs_symmetric, fock_transition, jones_waveplate, occupations


def test_criterion_01_two_term_state(verdict):
    result = check_eq1()
    verdict("1 post-selected antisymmetric pair, probability 1/2", result.passed, f"dev {result.deviation:.2e}")


def test_criterion_02_short_long_state(verdict):
    result = check_eq2(n_trials=20)
    verdict("2 short/long state over 20 random phase pairs", result.passed, f"dev {result.deviation:.2e}")


def test_criterion_03_coincidence_law(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for phi1, phi2, gamma in zip(rng.uniform(-math.pi, math.pi, 100), rng.uniform(-math.pi, math.pi, 100), rng.uniform(0, 1, 100)):
        config = ExperimentConfig(phi1=float(phi1), phi2=float(phi2), visibility_gamma=float(gamma))
        worst = max(worst, abs(analytic_coincidence_rate(config) - closed_form_rate(phi1, phi2, gamma)))
    verdict("3 pipeline rate matches (1+g cos)/2 on 100 triples", worst < 1e-9, f"max dev {worst:.2e}")


def test_criterion_04_two_fringe_bell_test(verdict, tmp_path):
    start = time.perf_counter()
    result = reproduce_fig4(0, tmp_path, steps=25, shots_mean=1000.0)
    elapsed = time.perf_counter() - start
    a, b = result.joint.fits
    offset, offset_sigma = result.phase_offset
    checks = {
        "vis 0.861": abs(a.visibility - 0.861) < 3 * a.visibility_sigma,
        "vis 0.817": abs(b.visibility - 0.817) < 3 * b.visibility_sigma,
        "offset pi/2": abs(abs(offset) - math.pi / 2) < 3 * offset_sigma,
        "verdicts": result.verdicts == [BellVerdict.VIOLATION, BellVerdict.VIOLATION],
        "runtime": elapsed < 10.0,
    }
    detail = (
        f"V={a.visibility:.4f}+-{a.visibility_sigma:.4f}, {b.visibility:.4f}+-{b.visibility_sigma:.4f}, "
        f"offset {offset:.4f}+-{offset_sigma:.4f}, {elapsed:.2f} s"
        + "".join(f", {k} failed" for k, ok in checks.items() if not ok)
    )
    verdict("4 two-fringe reproduction with joint fit", all(checks.values()), detail)


def test_criterion_05_bell_threshold(verdict):
    cases = [
        ((0.75, 0.005), BellVerdict.VIOLATION),
        ((0.70, 0.005), BellVerdict.NO_VIOLATION),
        ((1 / math.sqrt(2), 0.0), BellVerdict.INCONCLUSIVE),
    ]
    ok = all(bell_verdict(*args) is want for args, want in cases)
    verdict("5 Bell threshold verdicts", ok)


def test_criterion_06_negative_image(verdict):
    result = check_negative_image()
    verdict("6 negative-image residual", result.passed, result.detail)


def test_criterion_07_hole_persistence(verdict):
    worst = 0.0
    tpa = TpaChannel(strength=1.0)
    for which in (Scenario.EPH_ET, Scenario.EPH_TB):
        for background in (Background.single(), Background.coherent(0.3)):
            amps = compute_amplitudes(build_scenario(which, background, tpa=tpa))
            worst = max(worst, max(abs(v) for v in amps.a1c2.values()))
    verdict("7 equal-time amplitude stays zero after absorption", worst < 1e-14, f"max {worst:.1e}")


def test_criterion_08_hom_null(verdict):
    result = check_hom()
    verdict("8 coincidence null for identical photons", result.passed, f"prob {result.deviation:.1e}")


SMALL = TimeGrid(n_bins=10, tau0_bins=3)


def _random_four_photon_state(rng):
    modes = [ModeLabel(p, b, pol) for p in (0, 1) for b in range(3, 7) for pol in (Pol.H, Pol.V)]
    terms = {}
    for _ in range(rng.integers(1, 6)):
        picks = rng.choice(len(modes), size=4)
        terms[FockBasisState.from_modes([modes[i] for i in picks])] = complex(*rng.normal(size=2))
    return StateVector(terms, grid=SMALL).normalized()


def test_criterion_09_property_suites(verdict):
    rng = np.random.default_rng(9)
    elements = [
        BeamSplitter(0, 1),
        BeamSplitter(0, 1, 0.3, "real"),
        PolarizingBeamSplitter(0, 1),
        PhaseShift(0, 1.1, Pol.V),
        Delay(1, -2),
        Delay(0, 3),
        WavePlate(0, QWP, 0.4),
        WavePlate(1, HWP, -0.9),
        FransonAnalyzer(0, 3, 0.7, aux_port=1).routing(),
        Circuit((BeamSplitter(0, 1), PhaseShift(1, 0.2), BeamSplitter(0, 1, 1.0))),
    ]
    drift = 0.0
    idempotent = True
    for _ in range(40):
        state = _random_four_photon_state(rng)
        for element in elements:
            drift = max(drift, abs(apply_element(state, element).norm_sq - 1))
        punched = apply_tpa(state, TpaChannel())
        idempotent &= apply_tpa(punched, TpaChannel()) == punched

    shift = 0.0
    for phi1, phi2, c, gamma in rng.uniform(-math.pi, math.pi, size=(50, 4)):
        base = ExperimentConfig(grid=SMALL, phi1=phi1, phi2=phi2, visibility_gamma=(gamma + math.pi) / (2 * math.pi))
        moved = base.with_(phi1=phi1 + c, phi2=phi2 + c)
        shift = max(shift, abs(analytic_coincidence_rate(base) - analytic_coincidence_rate(moved)))

    config = ExperimentConfig(grid=SMALL, visibility_gamma=0.861, seed=2**63 + 5)
    phi = list(np.linspace(0, 2 * math.pi, 25))
    serial = run_phase_scan(config, phi)
    deterministic = all(run_phase_scan(config, phi, workers=w) == serial for w in (2, 4, 8))
    deterministic &= run_phase_scan(config, phi[:7]) == serial[:7]

    ok = drift < 1e-10 and idempotent and shift < 1e-12 and deterministic
    detail = f"norm drift {drift:.1e}, idempotent {idempotent}, translation {shift:.1e}, schedules {deterministic}"
    verdict("9 property suites", ok, detail)


# Four modes on two ports, one time bin: index = 2 * port + polarization.
MODES4 = [ModeLabel(0, 0, Pol.H), ModeLabel(0, 0, Pol.V), ModeLabel(1, 0, Pol.H), ModeLabel(1, 0, Pol.V)]
I2 = np.eye(2)


def _per_port(matrix2):
    return np.kron(matrix2, I2)


def _on_port(port, block):
    u = np.eye(4, dtype=complex)
    idx = [2 * port, 2 * port + 1]
    u[np.ix_(idx, idx)] = block
    return u


def _oracle_cases():
    phi, theta = 0.83, 0.41
    pbs = np.zeros((4, 4))
    for src, dst in ((0, 0), (1, 3), (2, 2), (3, 1)):
        pbs[dst, src] = 1
    cases = [
        ("BS 50/50", BeamSplitter(0, 1), MODES4, MODES4, _per_port(bs_symmetric())),
        ("BS theta real", BeamSplitter(0, 1, theta, "real"), MODES4, MODES4, _per_port(bs_real(theta))),
        ("PBS", PolarizingBeamSplitter(0, 1), MODES4, MODES4, pbs),
        ("PHASE V", PhaseShift(0, phi, Pol.V), MODES4, MODES4, np.diag([1, np.exp(1j * phi), 1, 1])),
        ("PHASE all", PhaseShift(1, phi), MODES4, MODES4, np.diag([1, 1, np.exp(1j * phi), np.exp(1j * phi)])),
        ("QWP", WavePlate(0, QWP, theta), MODES4, MODES4, _on_port(0, jones_waveplate(np.pi / 2, theta))),
        ("HWP", WavePlate(1, HWP, phi), MODES4, MODES4, _on_port(1, jones_waveplate(np.pi, phi))),
    ]
    chain = Circuit((BeamSplitter(0, 1), PhaseShift(0, phi, Pol.V), WavePlate(1, QWP, theta), PolarizingBeamSplitter(0, 1)))
    u_chain = pbs @ _on_port(1, jones_waveplate(np.pi / 2, theta)) @ np.diag([1, np.exp(1j * phi), 1, 1]) @ _per_port(bs_symmetric())
    cases.append(("composite", chain, MODES4, MODES4, u_chain))

    # polarizer: both polarizations land on H with cos / sin weights
    u_pol = np.zeros((4, 4))
    u_pol[0, 0], u_pol[0, 1] = math.cos(theta), math.sin(theta)
    u_pol[2, 2] = u_pol[3, 3] = 1
    cases.append(("POLARIZER", Polarizer(0, theta), MODES4, MODES4, u_pol))

    # delay: four modes over two bins, outputs spill into a third bin
    bins_in = [ModeLabel(p, b, Pol.H) for p in (0, 1) for b in (0, 1)]
    bins_out = [ModeLabel(p, b, Pol.H) for p in (0, 1) for b in (0, 1, 2)]
    u_delay = np.zeros((6, 4))
    for i, m in enumerate(bins_in):
        target = m.with_(bin=m.bin + 1) if m.port == 0 else m
        u_delay[bins_out.index(target), i] = 1
    cases.append(("DELAY", Delay(0, 1), bins_in, bins_out, u_delay))

    # unbalanced interferometer over the same bin set
    mz_in = [ModeLabel(p, b) for p in (0, 1) for b in (0, 1)]
    mz_out = [ModeLabel(p, b) for p in (0, 1) for b in (0, 1, 2)]
    bs = bs_symmetric()
    u_mz = np.zeros((6, 4), dtype=complex)
    for i, m in enumerate(mz_in):
        for p_mid in (0, 1):
            amp1 = bs[p_mid, m.port]
            b_mid = m.bin + (1 if p_mid == 1 else 0)
            ph = np.exp(1j * phi) if p_mid == 1 else 1
            for p_out in (0, 1):
                u_mz[mz_out.index(ModeLabel(p_out, b_mid)), i] += bs[p_out, p_mid] * ph * amp1
    cases.append(("unbalanced MZ", unbalanced_mz(0, 1, 1, phi), mz_in, mz_out, u_mz))
    return cases


def test_criterion_10_oracle_equivalence(verdict):
    grid = TimeGrid(n_bins=4, tau0_bins=1)
    worst = 0.0
    compared = 0
    for name, element, in_modes, out_modes, u in _oracle_cases():
        for n_in in occupations(len(in_modes), 2):
            basis = FockBasisState.from_counts(dict(zip(in_modes, n_in)))
            got = apply_element(StateVector({basis: 1.0}, grid=grid), element)
            expected = {}
            for n_out in occupations(len(out_modes), 2):
                amp = fock_transition(u, n_in, n_out)
                if abs(amp) > 0:
                    expected[FockBasisState.from_counts(dict(zip(out_modes, n_out)))] = amp
            for k in set(expected) | set(got.terms):
                worst = max(worst, abs(got.amplitude(k) - expected.get(k, 0)))
                compared += 1
    verdict("10 expansion agrees with permanent oracle", worst < 1e-12, f"{compared} amplitudes, max dev {worst:.1e}")


@pytest.mark.parametrize("n_photons", [1, 3])
def test_oracle_equivalence_other_photon_numbers(n_photons):
    grid = TimeGrid(n_bins=4, tau0_bins=1)
    for _, element, in_modes, out_modes, u in _oracle_cases():
        for n_in in occupations(len(in_modes), n_photons):
            got = apply_element(StateVector({FockBasisState.from_counts(dict(zip(in_modes, n_in))): 1.0}, grid=grid), element)
            for n_out in occupations(len(out_modes), n_photons):
                key = FockBasisState.from_counts(dict(zip(out_modes, n_out)))
                assert abs(got.amplitude(key) - fock_transition(u, n_in, n_out)) < 1e-12
