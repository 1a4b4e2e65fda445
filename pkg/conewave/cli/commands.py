"""argparse command tree for the ``conewave`` entry point.

Exit codes: 0 success, 1 a check or estimate failed, 2 invalid configuration,
3 accuracy budget exceeded.
"""
import argparse
import logging
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from conewave import __version__
from conewave.cli import verify
from conewave.cli.runconfig import config_hash, merge_config
from conewave.cli.writers import emit, emit_in_dir, render_csv, render_reports, render_table
from conewave.core.config import settings
from conewave.core.exceptions import AccuracyBudgetError, InvalidConfigError, TripleValidityError
from conewave.core.logging import bind_run
from conewave.models.schemas import (
    AdmissibleTriple,
    BoundaryCondition,
    Cone,
    ConePoint,
    EstimateReport,
    MorawetzConfig,
    RunConfig,
    Wedge,
)
from conewave.services import estimate_harness as harness
from conewave.services.cone_geometry import normalize_angle
from conewave.services.parallel import ordered_map
from conewave.services.propagator_kernel import sine_kernel

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_ACCURACY = 3


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise InvalidConfigError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _exit_for(report: EstimateReport) -> int:
    return EXIT_FAILED if report.passed is False else EXIT_OK


def _write_report(report: EstimateReport, cfg: RunConfig) -> None:
    emit(render_reports([report]), cfg.output)


# ---------------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------------

def _kernel_flags(k) -> str:
    flags = []
    if k.on_light_cone:
        flags.append("on_light_cone")
    if k.singular_denominator:
        flags.append("singular_denominator")
    if k.accuracy_warning:
        flags.append("accuracy_warning")
    return "|".join(flags)


def cmd_kernel(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "rho", "t")
    cone = Cone(rho=cfg.rho)
    theta1 = float(normalize_angle(cone.rho, cfg.theta1))
    pairs = [(cfg.t, ConePoint(r=cfg.r1, theta=theta1),
              ConePoint(r=cfg.r2, theta=float(normalize_angle(cone.rho, cfg.theta1 + cfg.dtheta))))]
    rng = np.random.default_rng(cfg.seed)
    half = math.pi * cone.rho
    for _ in range(cfg.samples):
        p1 = ConePoint(r=float(rng.uniform(0.2, 3.0)), theta=float(normalize_angle(cone.rho, rng.uniform(-half, half))))
        p2 = ConePoint(r=float(rng.uniform(0.2, 3.0)), theta=float(normalize_angle(cone.rho, rng.uniform(-half, half))))
        pairs.append((cfg.t, p1, p2))

    kernels = ordered_map(lambda pair: sine_kernel(cone, *pair), pairs, cfg.threads)
    rows = [
        (cone.rho, t, p1.r, p1.theta, p2.r, p2.theta, k.region.tag, k.geometric, k.diffractive, k.total,
         k.n_geom_terms, _kernel_flags(k))
        for (t, p1, p2), k in zip(pairs, kernels)
    ]
    header = ["rho", "t", "r1", "theta1", "r2", "theta2", "region", "K_geom", "K_diff", "K_total", "n_terms", "flags"]
    emit(render_csv(header, rows, cfg, digest), cfg.output)
    return EXIT_OK


def _default_lambda_max(cfg: RunConfig) -> float:
    """Gaussian data of width sigma are negligible (below e^-40) beyond 9 / sigma."""
    return cfg.lambda_max or 9.0 / cfg.sigma


def cmd_propagate(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "rho", "t")
    cone = Cone(rho=cfg.rho)
    source = ConePoint(r=cfg.r0, theta=float(normalize_angle(cone.rho, cfg.theta0)))
    rng = np.random.default_rng(cfg.seed)
    half = math.pi * cone.rho
    targets = [
        ConePoint(r=float(rng.uniform(0.3, cfg.r0 + cfg.t + 2.0)),
                  theta=float(normalize_angle(cone.rho, rng.uniform(-half, half))))
        for _ in range(cfg.points)
    ]
    (_, kernel, spectral), = verify.cross_engine_values(cone.rho, [cfg.t], targets, cfg.sigma,
                                                        _default_lambda_max(cfg), cfg.threads, source=source)
    rows = [(p.r, p.theta, a, b, abs(a - b)) for p, a, b in zip(targets, kernel, spectral)]
    scale = max(max(abs(v) for v in spectral), 1e-300)
    worst = max(r[-1] for r in rows) / scale
    emit(render_csv(["r", "theta", "u_kernel", "u_spectral", "abs_diff"], rows, cfg, digest,
                    metadata={"rho": cone.rho, "t": cfg.t, "max_relative_diff": worst}), cfg.output)
    return EXIT_OK


def cmd_dispersive(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "rho")
    fit = verify.dispersive_fit(cfg.rho, cfg.t_lo, cfg.t_hi, cfg.n_times, cfg.r0, cfg.threads)
    passed = settings.DECAY_SLOPE_LO <= fit.slope <= settings.DECAY_SLOPE_HI
    report = EstimateReport(
        check_name="dispersive_decay",
        params={"rho": cfg.rho, "t_lo": cfg.t_lo, "t_hi": cfg.t_hi, "n_times": cfg.n_times, "r0": cfg.r0},
        values={"times": fit.times, "sup_norms": fit.sup_norms, "sampling_warning": fit.sampling_warning},
        slope=fit.slope,
        ci=fit.slope_ci,
        passed=passed,
        tolerances={"slope_lo": settings.DECAY_SLOPE_LO, "slope_hi": settings.DECAY_SLOPE_HI},
    )
    _write_report(report, cfg)
    emit_in_dir(render_csv(["t", "sup_norm"], zip(fit.times, fit.sup_norms), cfg, digest),
                cfg.output_dir, "dispersive.csv")
    return _exit_for(report)


def cmd_strichartz(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "rho")
    cone = Cone(rho=cfg.rho)
    triple = AdmissibleTriple.from_pq(cfg.p, cfg.q)
    if not triple.is_admissible:
        raise TripleValidityError(f"(p, q) = ({cfg.p}, {cfg.q}) is not wave admissible")
    source = ConePoint(r=cfg.r0, theta=float(normalize_angle(cone.rho, cfg.theta0)))
    f, g = verify.strichartz_data(cone, cfg.T, source=source, sigma=cfg.sigma)
    ratios = harness.strichartz_scaling_family(cone, triple, f, g, cfg.T, cfg.mus, threads=cfg.threads)
    spread = (max(ratios.values()) - min(ratios.values())) / min(ratios.values())
    drift = harness.energy_drift(cone, f, g, np.linspace(0.0, 100.0, 21))
    local = harness.strichartz_ratio(cone, triple, f, g, cfg.T, homogeneous=False, threads=cfg.threads)
    report = EstimateReport(
        check_name="strichartz_scaling",
        params={"rho": cfg.rho, "p": cfg.p, "q": cfg.q, "gamma": triple.gamma, "T": cfg.T},
        values={"ratios": {str(k): v for k, v in ratios.items()}, "spread": spread, "energy_drift": drift,
                "local_ratio": local},
        passed=spread < settings.STRICHARTZ_STABILITY and drift <= settings.ENERGY_DRIFT_TOL,
        tolerances={"spread": settings.STRICHARTZ_STABILITY, "energy_drift": settings.ENERGY_DRIFT_TOL},
    )
    _write_report(report, cfg)
    emit_in_dir(render_csv(["mu", "ratio"], sorted(ratios.items()), cfg, digest), cfg.output_dir, "strichartz.csv")
    return _exit_for(report)


def cmd_morawetz(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "rho")
    cone = Cone(rho=cfg.rho)
    mcfg = MorawetzConfig(m=cfg.m, alpha_mz=cfg.alpha_mz, t_max=cfg.t_max)
    if not mcfg.satisfies_hypothesis(cone):
        raise InvalidConfigError(
            f"alpha = {cfg.alpha_mz} must lie in (0, 1/4 + nu_m/2) = (0, {0.25 + 0.5 * mcfg.nu_m(cone):.6g})")
    j_max = cfg.j_max or cfg.m + 3
    rng = np.random.default_rng(cfg.seed)
    frozen, coarse = verify.morawetz_coarse_constant(cone, mcfg, j_max, cfg.coarse_draws, rng, cfg.threads)
    logger.info(f"Morawetz constant frozen at {frozen:.6g} from a coarse maximum of {coarse:.6g}")
    results = verify.morawetz_draws(cone, mcfg, cfg.draws, j_max, rng, cfg.threads)
    ratios = [r.ratio for r in results]
    violations = sum(r > frozen for r in ratios)
    report = EstimateReport(
        check_name="morawetz_bound",
        params={"rho": cfg.rho, "m": cfg.m, "alpha": cfg.alpha_mz, "t_max": cfg.t_max, "draws": cfg.draws,
                "coarse_draws": cfg.coarse_draws},
        values={"max_ratio": max(ratios), "frozen_constant": frozen, "coarse_max": coarse,
                "analytic_bound": harness.morawetz_mode_bound(cone, mcfg, j_max), "violations": violations,
                "max_tail": max(r.tail_estimate for r in results)},
        passed=violations == 0,
    )
    _write_report(report, cfg)
    rows = [(i, r.ratio, r.lhs, r.rhs, r.lhs_frequency_side, r.tail_estimate) for i, r in enumerate(results)]
    emit_in_dir(render_csv(["draw", "ratio", "lhs", "rhs", "lhs_frequency_side", "tail_estimate"], rows, cfg, digest),
                cfg.output_dir, "morawetz.csv")
    return _exit_for(report)


def _snap_submultiple(alpha: float) -> float:
    """pi / N when alpha agrees with it to the precision of a typed decimal."""
    n = max(1, round(math.pi / alpha))
    if abs(alpha - math.pi / n) <= 1e-6 * alpha:
        return math.pi / n
    return alpha


def cmd_wedge(cfg: RunConfig, digest: str) -> int:
    _require(cfg, "alpha")
    w = Wedge(alpha=_snap_submultiple(cfg.alpha), bc=cfg.bc)
    t = cfg.t or 2.0
    source = verify.wedge_source(w, cfg.r0, cfg.theta0)
    rng = np.random.default_rng(cfg.seed)
    points = [ConePoint(r=float(rng.uniform(0.5, source.r + t + 1.0)), theta=float(rng.uniform(0.05, 0.95) * w.alpha))
              for _ in range(cfg.points)]
    spectral, oracle, residual = verify.wedge_comparison(w, t, points, sigma=cfg.sigma,
                                                         lambda_max=_default_lambda_max(cfg), source=source)
    if oracle is None:
        logger.info(f"alpha = {w.alpha} is not pi / N; no image oracle column")
        oracle = [None] * len(points)
    rows = [
        (w.alpha, w.bc, t, p.r, p.theta, u, o, None if o is None else abs(u - o))
        for p, u, o in zip(points, spectral, oracle)
    ]
    header = ["alpha", "bc", "t", "r", "theta", "u", "u_image_oracle", "abs_diff"]
    metadata: Dict[str, object] = {"boundary_residual": residual}
    deviation = None
    if oracle[0] is not None:
        scale = max(max(abs(o) for o in oracle), 1e-300)
        deviation = max(abs(u - o) for u, o in zip(spectral, oracle)) / scale
        metadata["max_relative_deviation"] = deviation
    emit(render_csv(header, rows, cfg, digest, metadata=metadata), cfg.output)
    if deviation is not None and deviation > settings.WEDGE_ORACLE_TOL:
        logger.error(f"Wedge solution deviates from the image oracle by {deviation:.3e} "
                     f"(tolerance {settings.WEDGE_ORACLE_TOL:.0e})")
        return EXIT_ACCURACY
    return EXIT_OK


def cmd_verify(cfg: RunConfig, digest: str) -> int:
    reports, budget_exceeded = verify.run_suite(cfg.suite, cfg.seed, cfg.threads)
    if cfg.output_dir:
        for report in reports:
            emit_in_dir(report.to_json() + "\n", cfg.output_dir, f"{report.check_name}.json")
        rows = [(r.check_name, "reported" if r.passed is None else r.passed) for r in reports]
        emit_in_dir(render_csv(["check", "pass"], rows, cfg, digest, metadata={"suite": cfg.suite}),
                    cfg.output_dir, "summary.csv")
    if cfg.output:
        emit(render_reports(reports), cfg.output)
    sys.stdout.write(render_table(reports))
    if budget_exceeded:
        return EXIT_ACCURACY
    return EXIT_FAILED if any(r.passed is False for r in reports) else EXIT_OK


# ---------------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------------

def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat 'key = value' config file; flags take precedence")
    sub.add_argument("--threads", type=int, help="worker threads (default: CONEWAVE_THREADS or the machine)")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--output", help="CSV/JSON output file (default: stdout)")
    sub.add_argument("--output-dir", dest="output_dir", help="directory for auxiliary CSV/JSON files")


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conewave", description="Wave propagators on flat cones and wedges")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    kernel = subparsers.add_parser("kernel", help="evaluate the sine-propagator kernel")
    kernel.add_argument("--rho", type=float)
    kernel.add_argument("--t", type=float)
    kernel.add_argument("--r1", type=float)
    kernel.add_argument("--r2", type=float)
    kernel.add_argument("--theta1", type=float)
    kernel.add_argument("--dtheta", type=float)
    kernel.add_argument("--samples", type=int, help="extra random point pairs drawn from --seed")
    kernel.set_defaults(handler=cmd_kernel)

    propagate = subparsers.add_parser("propagate", help="U(t)g by kernel quadrature and by the spectral solver")
    propagate.add_argument("--rho", type=float)
    propagate.add_argument("--t", type=float)
    propagate.add_argument("--points", type=int)
    propagate.set_defaults(handler=cmd_propagate)

    dispersive = subparsers.add_parser("dispersive", help="sup-norm decay of a localized point source")
    dispersive.add_argument("--rho", type=float)
    dispersive.add_argument("--t-lo", dest="t_lo", type=float)
    dispersive.add_argument("--t-hi", dest="t_hi", type=float)
    dispersive.add_argument("--n-times", dest="n_times", type=int)
    dispersive.set_defaults(handler=cmd_dispersive)

    strichartz = subparsers.add_parser("strichartz", help="Strichartz ratio across a scaling family")
    strichartz.add_argument("--rho", type=float)
    strichartz.add_argument("--p", type=float)
    strichartz.add_argument("--q", type=float)
    strichartz.add_argument("--T", type=float)
    strichartz.add_argument("--mus", type=_floats, help="comma-separated scale factors")
    strichartz.set_defaults(handler=cmd_strichartz)

    morawetz = subparsers.add_parser("morawetz", help="Morawetz ratio over random band-limited data")
    morawetz.add_argument("--rho", type=float)
    morawetz.add_argument("--m", type=int)
    morawetz.add_argument("--alpha", dest="alpha_mz", type=float)
    morawetz.add_argument("--t-max", dest="t_max", type=float)
    morawetz.add_argument("--draws", type=int)
    morawetz.add_argument("--coarse-draws", dest="coarse_draws", type=int, help="random draws in the coarse scan")
    morawetz.add_argument("--j-max", dest="j_max", type=int)
    morawetz.set_defaults(handler=cmd_morawetz)

    wedge = subparsers.add_parser("wedge", help="wedge solution against the method of images")
    wedge.add_argument("--alpha", type=float)
    wedge.add_argument("--bc", choices=[b.value for b in BoundaryCondition])
    wedge.add_argument("--t", type=float)
    wedge.add_argument("--points", type=int)
    wedge.set_defaults(handler=cmd_wedge)

    check = subparsers.add_parser("verify", help="run the acceptance suite")
    check.add_argument("--suite", choices=["quick", "full"])
    check.set_defaults(handler=cmd_verify)

    for sub in (propagate, strichartz, wedge, dispersive):
        sub.add_argument("--r0", type=float, help="source radius")
    for sub in (propagate, strichartz, wedge):
        sub.add_argument("--theta0", type=float, help="source angle")
        sub.add_argument("--sigma", type=float, help="source width")
    for sub in (propagate, wedge):
        sub.add_argument("--lambda-max", dest="lambda_max", type=float)
    for sub in subparsers.choices.values():
        _common(sub)
        sub.set_defaults(usage=sub.format_usage())
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    values: Dict[str, object] = vars(args)
    handler = values.pop("handler")
    usage = values.pop("usage")
    command = values.pop("command")
    config_path = values.pop("config")
    bind_run(command)
    try:
        cfg = merge_config(command, values, config_path)
        digest = config_hash(cfg)
        bind_run(command, digest)
        logger.info(f"Running {command}")
        code = handler(cfg, digest)
        logger.info(f"{command} finished with exit code {code}")
        return code
    except (InvalidConfigError, TripleValidityError, ValidationError) as e:
        logger.error(f"Invalid configuration: {e}")
        sys.stderr.write(usage)
        return EXIT_INVALID
    except AccuracyBudgetError as e:
        logger.error(f"Accuracy budget exceeded: {e}")
        return EXIT_ACCURACY
    finally:
        bind_run()
