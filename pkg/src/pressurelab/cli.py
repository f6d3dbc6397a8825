"""Command-line driver for the canned experiments.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from pressurelab.config import CANNED, ExperimentConfig, canned_path, load_config
from pressurelab.empirical import (
    CylinderMeasure,
    invariance_defect,
    l1_distance,
    periodic_orbit_measure,
    weighted_empirical,
)
from pressurelab.errors import ConvergenceError, ValidationError
from pressurelab.ldp import run_ldp_experiment
from pressurelab.markovdv import (
    dv_variational_check,
    ergodic_convergence_experiment,
    feynman_kac_exact,
    feynman_kac_mc,
    twisted_spectrum,
)
from pressurelab.oracle import equilibrium_marginal, pressure_oracle
from pressurelab.pressure import pressure_estimate
from pressurelab.rate import j_restricted
from pressurelab.separated import maximal_separated_set
from pressurelab.shiftspace import parse_word

log = logging.getLogger("pressurelab")

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3
SUBSHIFT_COMMANDS = ("pressure", "equilibrium", "rate", "ldp")


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _need_subshift(cfg: ExperimentConfig, command: str):
    if cfg.is_markov:
        raise ValidationError(f"`{command}` needs a subshift config (with 'A'), got a rate matrix")


def _n_list(cfg, args, default=(4, 8, 16)):
    return args.n or cfg.settings.get("n_list", list(default))


def run_pressure(cfg: ExperimentConfig, args, out: Path) -> None:
    _need_subshift(cfg, "pressure")
    S = cfg.system
    f = cfg.potential(cfg.settings.get("potential", "zero"))
    eps = float(cfg.settings.get("epsilon", 0.6))
    oracle = pressure_oracle(S, f)
    rows = []
    for n in _n_list(cfg, args):
        est = pressure_estimate(S, f, n, eps)
        rows.append((n, eps, est.value, oracle, abs(est.value - oracle)))
    write_atomic(out / "pressure.csv", _csv(("n", "epsilon", "estimate", "oracle", "abs_error"), rows))


def run_equilibrium(cfg: ExperimentConfig, args, out: Path) -> None:
    _need_subshift(cfg, "equilibrium")
    S = cfg.system
    f = cfg.potential(cfg.settings.get("potential", "zero"))
    eps = float(cfg.settings.get("epsilon", 0.6))
    depth = int(cfg.settings.get("depth", 2))
    target = equilibrium_marginal(S, f, depth)
    rows = []
    for n in _n_list(cfg, args):
        mu = weighted_empirical(S, f, maximal_separated_set(S, n, eps), depth)
        rows.append((n, depth, l1_distance(mu, target), _defect(mu), "separated"))
        mu = periodic_orbit_measure(S, f, n, depth)
        rows.append((n, depth, l1_distance(mu, target), _defect(mu), "periodic"))
    write_atomic(
        out / "equilibrium.csv",
        _csv(("n", "depth", "l1_to_oracle", "invariance_defect", "variant"), rows),
    )


def _defect(mu):
    return invariance_defect(mu) if mu.depth >= 2 else 0.0


def _rate_measure(cfg, measure, f, depth):
    S = cfg.system
    if measure in (None, "equilibrium"):
        return equilibrium_marginal(S, f, depth)
    if isinstance(measure, dict) and "weights" in measure:
        weights = {parse_word(w): float(v) for w, v in measure["weights"].items()}
        return CylinderMeasure.from_dict(S, int(measure.get("depth", depth)), weights)
    raise ValidationError("rate measure must be 'equilibrium' or {'depth': d, 'weights': {...}}")


def run_rate(cfg: ExperimentConfig, args, out: Path) -> None:
    _need_subshift(cfg, "rate")
    settings = cfg.settings.get("rate", {})
    f = cfg.potential(settings.get("potential", cfg.settings.get("potential", "zero")))
    depth = int(settings.get("depth", 1))
    mu = _rate_measure(cfg, settings.get("measure"), f, depth)
    res = j_restricted(cfg.system, f, mu, depth)
    if not res.converged:
        log.warning("rate ascent stopped early; value is still a lower bound")
    doc = {
        "value": res.value,
        "iterations": res.iterations,
        "gradient_norm": res.gradient_norm,
        "depth": depth,
    }
    write_atomic(out / "rate.json", _json(doc))


def run_ldp(cfg: ExperimentConfig, args, out: Path) -> None:
    _need_subshift(cfg, "ldp")
    settings = cfg.settings.get("ldp", {})
    S = cfg.system
    f = cfg.potential(settings.get("potential", "zero"))
    g = cfg.potential(settings.get("statistic", "indicator0"))
    c = float(settings.get("c", 0.25))
    n_list = args.n or settings.get("n_list", [8, 12, 16, 20])
    ex = run_ldp_experiment(S, f, g, c, n_list, epsilon=float(cfg.settings.get("epsilon", 0.6)))
    rows = [
        (n, m, math.log(m) / n if m > 0 else "-inf") for n, m in ex.masses
    ]
    write_atomic(out / "ldp.csv", _csv(("n", "mass", "log_mass_over_n"), rows))
    doc = {
        "fitted_rate": _finite_or_str(ex.fitted_rate),
        "dual_bound": _finite_or_str(ex.dual_bound),
        "pass": ex.passed,
    }
    write_atomic(out / "ldp.json", _json(doc))


def _finite_or_str(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def run_markov_dv(cfg: ExperimentConfig, args, out: Path) -> None:
    if not cfg.is_markov:
        raise ValidationError("`markov-dv` needs a config with a rate matrix 'Q'")
    L, V = cfg.system, np.array(cfg.V)
    settings = cfg.settings
    seed = args.seed if args.seed is not None else settings.get("seed")
    if seed is None:
        raise ValidationError("markov-dv runs Monte Carlo and needs a seed (--seed or experiment.seed)")
    spec = twisted_spectrum(L, V)
    x = int(settings.get("x", 0))
    doc = {
        "lambda_V": spec.lambda_V,
        "mu_V": spec.mu_V.tolist(),
        "dv_residual": dv_variational_check(L, V),
    }
    fk = settings.get("feynman_kac")
    if fk:
        ones = np.ones(L.n)
        t, trials = float(fk.get("t", 2.0)), int(fk.get("trials", 100_000))
        mean, se = feynman_kac_mc(L, V, t, ones, x, trials, seed, threads=args.threads)
        doc["feynman_kac"] = {
            "t": t,
            "exact": feynman_kac_exact(L, V, t, ones, x),
            "mc_mean": mean,
            "mc_std_error": se,
        }
    write_atomic(out / "markov_dv.json", _json(doc))
    t_list = args.t or settings.get("t_list", [1, 10, 100])
    trials = int(settings.get("trials", 1000))
    rows = ergodic_convergence_experiment(L, V, t_list, trials, seed, x=x, threads=args.threads)
    header = ("t", "l1_to_mu_V") + tuple(f"occupation_{i}" for i in range(L.n))
    write_atomic(
        out / "markov_dv_convergence.csv",
        _csv(header, [(t, d, *occ.tolist()) for t, d, occ in rows]),
    )


COMMANDS = {
    "pressure": run_pressure,
    "equilibrium": run_equilibrium,
    "rate": run_rate,
    "ldp": run_ldp,
    "markov-dv": run_markov_dv,
}


def run_all(cfg_paths, args, out: Path) -> None:
    for path in cfg_paths:
        cfg = load_config(path)
        target = out / cfg.name
        if cfg.is_markov:
            run_markov_dv(cfg, args, target)
        else:
            for name in SUBSHIFT_COMMANDS:
                COMMANDS[name](cfg, args, target)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pressurelab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "all"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config (default: canned config)")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, help="seed for Monte Carlo runs")
        p.add_argument("--threads", type=int, help="worker threads, 0 = auto")
        p.add_argument("--n", type=_int_list, help="comma list of horizons n")
        p.add_argument("--t", type=_float_list, help="comma list of times t")
    return parser


def _threads(value):
    if value is None:
        value = int(os.environ.get("PRESSURELAB_THREADS", "1") or 1)
    if value < 0:
        raise ValidationError("--threads must be >= 0")
    return value if value > 0 else (os.cpu_count() or 1)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.threads = _threads(args.threads)
        if args.n is not None:
            _check_increasing(args.n, "--n")
        if args.t is not None:
            _check_increasing(args.t, "--t")
        if args.command == "all":
            paths = [args.config] if args.config else [canned_path(name) for name in CANNED]
            run_all(paths, args, args.out)
        else:
            default = "two_state" if args.command == "markov-dv" else "golden_mean"
            cfg = load_config(args.config or canned_path(default))
            COMMANDS[args.command](cfg, args, args.out)
    except ValidationError as exc:
        print(f"pressurelab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"pressurelab: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _check_increasing(values, label):
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise ValidationError(f"{label} must be a nonempty increasing list")


if __name__ == "__main__":
    sys.exit(main())
