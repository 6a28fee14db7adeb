"""Command-line entry point: ``ephsim <subcommand> ...``.

Any subcommand accepts ``--config FILE``: a flat ``key = value`` file whose
keys are the long flag names (``tau0-bins = 26``). Flags on the command line
override the file.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

from .biphoton import Background, Normalization, Scenario, build_scenario, compute_amplitudes, write_amplitude_csv
from .checks import CHECKS
from .fock import TimeGrid
from .franson import ExperimentConfig, run_phase_scan, write_scan_csv
from .report import bell_test_from_csv, reproduce_fig4
from .tpa import TpaChannel

log = logging.getLogger("ephsim")


def parse_phase(text: str) -> float:
    presets = {"0": 0.0, "pi_2": math.pi / 2, "pi": math.pi}
    return presets[text] if text in presets else float(text)


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = (part.strip() for part in line.split(sep, 1))
                break
        else:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        values[key] = value
    return values


def cmd_amplitudes(args) -> int:
    grid = TimeGrid(n_bins=args.bins, tau0_bins=args.tau0_bins, dt_fs=args.dt_fs)
    scenario = Scenario(args.scenario)
    background = Background.parse(args.background)
    tpa = TpaChannel(strength=args.tpa_strength, window_bins=args.window_bins)
    needs_tpa = scenario in (Scenario.EPH_ET, Scenario.EPH_TB)
    state = build_scenario(scenario, background if needs_tpa else None, grid, tpa if needs_tpa else None)
    amps = compute_amplitudes(state, normalization=Normalization(args.normalize))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p12 = write_amplitude_csv(out / f"{scenario.value}_a12.csv", amps.a12)
    p1c2 = write_amplitude_csv(out / f"{scenario.value}_a1c2.csv", amps.a1c2)
    print(f"wrote {p12} and {p1c2}")
    return 0


def cmd_franson_scan(args) -> int:
    if args.steps < 1:
        raise SystemExit("--steps must be positive")
    config = ExperimentConfig(
        grid=TimeGrid(tau0_bins=args.tau0_bins),
        phi2=parse_phase(args.phi2),
        visibility_gamma=args.gamma,
        shots_mean=args.shots_mean,
        seed=args.seed,
        polarization_free=args.polarization_free,
    )
    phi1 = [2 * math.pi * i / (args.steps - 1) for i in range(args.steps)] if args.steps > 1 else [0.0]
    records = run_phase_scan(config, phi1, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = write_scan_csv(out / f"scan_phi2_{args.phi2}.csv", records)
    print(f"wrote {len(records)} points to {path}")
    return 0


def _print_fits(labels, fits, verdicts):
    for label, fit, verdict in zip(labels, fits, verdicts):
        if fit.degenerate:
            print(f"{label}: no modulation (degenerate fit)")
            continue
        print(
            f"{label}: visibility {100 * fit.visibility:.2f} +- {100 * fit.visibility_sigma:.2f} %, "
            f"period {fit.period:.4f}, phase {fit.phase:.4f} -> {verdict.value}"
        )


def cmd_bell_test(args) -> int:
    result = bell_test_from_csv(args.sources, args.out, k=args.k)
    _print_fits(result.labels, result.joint.fits, result.verdicts)
    print(f"report: {result.files[0]}")
    return 0


def cmd_eq_check(args) -> int:
    result = CHECKS[args.which]()
    status = "PASS" if result.passed else "FAIL"
    print(f"{result.name}: max deviation {result.deviation:.3e} (tolerance {result.tolerance:.0e}) {status}")
    if result.detail:
        print(f"  {result.detail}")
    return 0 if result.passed else 1


def cmd_fig4(args) -> int:
    start = time.perf_counter()
    result = reproduce_fig4(args.seed, args.out, steps=args.steps, shots_mean=args.shots_mean)
    _print_fits(result.labels, result.joint.fits, result.verdicts)
    value, sigma = result.phase_offset
    print(f"phase offset between fringes: {value:.4f} +- {sigma:.4f} rad")
    print(f"done in {time.perf_counter() - start:.2f} s; output in {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ephsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="key = value file with defaults for this command")
        p.set_defaults(func=func)
        return p

    p = add("amplitudes", cmd_amplitudes, "biphoton amplitude grids for one scenario")
    p.add_argument("--scenario", choices=[s.value for s in Scenario], required=False, default="eph-tb")
    p.add_argument("--background", default="single", help="single | coherent:<alpha>")
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--tau0-bins", type=int, default=26)
    p.add_argument("--dt-fs", type=float, default=100.0)
    p.add_argument("--tpa-strength", type=float, default=1.0)
    p.add_argument("--window-bins", type=int, default=0)
    p.add_argument("--normalize", choices=[n.value for n in Normalization], default="peak")
    p.add_argument("--out", default=".")

    p = add("franson-scan", cmd_franson_scan, "coincidence fringe versus phi1")
    p.add_argument("--phi2", default="0", help="0 | pi_2 | <radians>")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--shots-mean", type=float, default=1000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau0-bins", type=int, default=26)
    p.add_argument("--polarization-free", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=".")

    p = add("bell-test", cmd_bell_test, "fit scan CSVs and report Bell verdicts")
    p.add_argument("--from", dest="sources", nargs="+", required=True, metavar="CSV")
    p.add_argument("--k", type=float, default=1.0, help="sigma multiplier for the verdict")
    p.add_argument("--out", default=".")

    p = add("eq-check", cmd_eq_check, "run one built-in consistency check")
    p.add_argument("which", choices=sorted(CHECKS))

    p = add("fig4", cmd_fig4, "two-fringe Bell-test reproduction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--shots-mean", type=float, default=1000.0)
    p.add_argument("--out", default=".")
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config_file(known.config)
    command = next((a for a in argv if not a.startswith("-") and a in _subparsers(parser)), None)
    if command is None:
        return
    subparser = _subparsers(parser)[command]
    dests = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        if key == "from":
            dest = "sources"
        action = dests.get(dest)
        if action is None:
            raise SystemExit(f"{known.config}: unknown key {key!r} for {command}")
        if action.nargs == 0:
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
        elif action.nargs == "+":
            defaults[dest] = value.split()
            action.required = False
        else:
            defaults[dest] = value
    subparser.set_defaults(**defaults)


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
