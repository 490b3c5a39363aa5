"""Command-line entry points.

Subcommands: simulate, verify-identities, scatter, wave-op, gn-check.
Flags mirror config-file keys and override them.  Exit codes: 0 when every
enabled invariant check passes, 1 on a named check/configuration failure,
2 on a NaN abort.  Artifacts per run: diagnostics.csv (17-significant-digit
text), summary.json (config echo, check outcomes, accumulator totals, wall
time), and binary field files for scatter/wave-op profiles.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path


from .config import ConfigError, RunConfig, parse_config
from .diagnostics import (CollectorOptions, DiagnosticsCollector, write_csv,
                          write_summary, fmt17)
from .evolve import NanAbortError, StepParams, evolve
from .fieldio import write_fields
from .gn import corpus_sup_ratio
from .grid import GridSpec
from .initial_data import InitialDataSpec, build_initial_state
from .morawetz import MorawetzWeight
from .scattering import (WaveOperatorDivergence, admissible_pair,
                         asymptotic_profile, wave_operator)
from .system import CouplingSpec, h1_norms_squared, mass
from .verify import (calibrate_fd_constants, check_identities, collect_series)

EXIT_OK, EXIT_FAIL, EXIT_NAN = 0, 1, 2


def _comma_floats(text: str):
    vals = [float(v) for v in text.split(",") if v.strip() != ""]
    return vals[0] if len(vals) == 1 else vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlskit",
        description="Spectral simulator and diagnostics for weakly coupled "
                    "defocusing Schrodinger systems")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in ("simulate", "verify-identities", "scatter", "wave-op", "gn-check"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat JSON config file")
        sp.add_argument("--d", type=int)
        sp.add_argument("--n-components", type=int, dest="n_components")
        sp.add_argument("--p", type=float)
        sp.add_argument("--beta", type=_comma_floats,
                        help="scalar, N diagonal entries, or N*N row-major")
        sp.add_argument("--grid-m", type=int, dest="grid_m")
        sp.add_argument("--box-l", type=float, dest="box_l")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-final", type=float, dest="t_final")
        sp.add_argument("--snapshot-stride", type=int, dest="snapshot_stride")
        sp.add_argument("--weight", choices=("none", "quadratic", "absdistance", "erf"))
        sp.add_argument("--weight-eps", type=float, dest="weight_eps")
        sp.add_argument("--interaction-weight", dest="interaction_weight",
                        choices=("none", "absdistance", "erf", "constant"))
        sp.add_argument("--family", choices=("gaussian", "multi-bump",
                                             "plane-modulated", "random-band-limited"))
        sp.add_argument("--amplitude", type=_comma_floats)
        sp.add_argument("--width", type=_comma_floats)
        sp.add_argument("--center", type=_comma_floats)
        sp.add_argument("--velocity", type=_comma_floats)
        sp.add_argument("--chirp", type=_comma_floats)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--wave-t", type=float, dest="wave_t")
        sp.add_argument("--wave-dt", type=float, dest="wave_dt")
        sp.add_argument("--wave-max-iter", type=int, dest="wave_max_iter")
        sp.add_argument("--scatter-window", type=int, dest="scatter_window")
        sp.add_argument("--gn-variant", dest="gn_variant", choices=("main", "cubic"))
        sp.add_argument("--gn-count", type=int, dest="gn_count")
        sp.add_argument("--gn-generator", dest="gn_generator",
                        choices=("band-limited", "bumps", "bump-trains"))
        sp.add_argument("--gn-alpha", type=int, dest="gn_alpha")
    return parser


def _setup(cfg: RunConfig):
    grid = GridSpec(cfg.d, cfg.grid_m, cfg.box_l)
    coupling = CouplingSpec(cfg.n_components, cfg.beta_matrix(), cfg.p, cfg.d)
    spec = InitialDataSpec(family=cfg.family, amplitude=cfg.amplitude,
                           width=cfg.width, center=cfg.center,
                           velocity=cfg.velocity, chirp=cfg.chirp,
                           bump_amplitudes=tuple(cfg.bump_amplitudes),
                           bump_centers=tuple(cfg.bump_centers),
                           bump_widths=tuple(cfg.bump_widths),
                           bump_velocities=tuple(cfg.bump_velocities),
                           seed=cfg.seed)
    state0 = build_initial_state(grid, coupling, spec)
    return grid, coupling, state0


def _virial_weight(cfg: RunConfig) -> MorawetzWeight | None:
    if cfg.weight == "none":
        return None
    if cfg.weight == "quadratic":
        return MorawetzWeight.quadratic()
    if cfg.weight == "erf":
        return MorawetzWeight.erf_smoothed(cfg.weight_eps)
    return MorawetzWeight.abs_distance()


def _interaction_weight(cfg: RunConfig) -> MorawetzWeight | None:
    if cfg.interaction_weight == "none":
        return None
    if cfg.interaction_weight == "erf":
        return MorawetzWeight.erf_smoothed(cfg.weight_eps)
    if cfg.interaction_weight == "constant":
        return MorawetzWeight.constant()
    return MorawetzWeight.abs_distance()


def _collector(cfg: RunConfig, coupling, grid, keep_states: int = 0) -> DiagnosticsCollector:
    h = grid.h
    cube_ok = 2.0 * grid.l >= 1.0 and abs(round(1.0 / h) * h - 1.0) <= 1e-9
    pair = None
    if coupling.scattering_admissible:
        cand = admissible_pair(cfg.p, cfg.d)
        pair = cand if cand.admissible else None
    lq = tuple(dict.fromkeys((4.0, 2.0 * cfg.p + 2.0)))
    inter = _interaction_weight(cfg)
    if inter is not None and inter.kind == "erf" and grid.d != 1:
        inter = MorawetzWeight.abs_distance()
    return DiagnosticsCollector(coupling, grid, CollectorOptions(
        weight=_virial_weight(cfg), interaction=inter, lq_values=lq,
        accumulators=True, strichartz_pair=pair, cube_mass=cube_ok,
        keep_states=keep_states))


def _base_summary(cfg: RunConfig, coupling, started: float) -> dict:
    return {
        "config": cfg.to_dict(),
        "admissibility": coupling.classification(),
        "wall_time_s": time.time() - started,  # excluded from determinism comparisons
    }


def run_simulate(cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, coupling, state0 = _setup(cfg)
    collector = _collector(cfg, coupling, grid)
    params = StepParams(dt=cfg.dt, t_final=cfg.t_final,
                        snapshot_stride=cfg.snapshot_stride, dealias=cfg.dealias)
    try:
        final = evolve(state0, params, collector)
    except NanAbortError as err:
        write_summary({**_base_summary(cfg, coupling, started),
                       "aborted": f"non-finite values at t = {err.t}"},
                      out / "summary.json")
        print(f"nlskit: NaN abort at t = {err.t}", file=sys.stderr)
        return EXIT_NAN

    write_csv(collector.records, collector.columns, out / "diagnostics.csv")
    h1sq_T = sum(h1_norms_squared(final))
    first = collector.records[0]
    mass0 = sum(first[f"mass_{mu + 1}"] for mu in range(coupling.n))
    bound = mass0 + first["energy_total"]
    checks = {
        "mass_drift": {"value": collector.mass_drift(), "tol": cfg.mass_drift_tol,
                       "pass": collector.mass_drift() <= cfg.mass_drift_tol},
        "energy_drift": {"value": collector.energy_drift(), "tol": cfg.energy_drift_tol,
                         "pass": collector.energy_drift() <= cfg.energy_drift_tol},
        "boundary_mass": {"value": collector.max_boundary_fraction, "tol": 1e-6,
                          "pass": collector.boundary_valid},
        # H1 control: sum ||u(t)||_H1^2 <= sum ||u(0)||_L2^2 + E(0)
        "h1_bound": {"value": h1sq_T, "tol": bound * (1.0 + 1e-6) + 1e-12,
                     "pass": h1sq_T <= bound * (1.0 + 1e-6) + 1e-12},
    }
    summary = {**_base_summary(cfg, coupling, started),
               "t_final": final.t,
               "rows": len(collector.records),
               "checks": checks,
               "accumulator_totals": (collector.accumulators.totals
                                      if collector.accumulators else {}),
               "strichartz": (collector.strichartz.value()
                              if collector.strichartz else None)}
    write_summary(summary, out / "summary.json")
    for name, c in checks.items():
        if not c["pass"]:
            print(f"nlskit: invariant check failed: {name} "
                  f"(value {c['value']:.3e}, tol {c['tol']:.3e})", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def run_verify_identities(cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, coupling, state0 = _setup(cfg)
    smooth = _virial_weight(cfg) or MorawetzWeight.quadratic()
    if smooth.kind == "absdistance":
        smooth = MorawetzWeight.quadratic()
    inter = _interaction_weight(cfg)
    if inter is not None and inter.kind == "erf" and grid.d != 1:
        inter = MorawetzWeight.abs_distance()

    # calibrate over the full horizon: finite-difference constants can grow
    # along the trajectory, so short-window calibration underestimates them
    window = cfg.fd_calibration_t or cfg.t_final
    try:
        constants = calibrate_fd_constants(state0, cfg.dt, cfg.snapshot_stride,
                                           window, smooth, inter)
        params = StepParams(dt=cfg.dt, t_final=cfg.t_final,
                            snapshot_stride=cfg.snapshot_stride)
        series = collect_series(state0, params, smooth, inter)
    except NanAbortError as err:
        print(f"nlskit: NaN abort at t = {err.t}", file=sys.stderr)
        return EXIT_NAN
    result = check_identities(series, constants)

    cols = ["t", "V", "Vdot", "Vddot"]
    recs = [{"t": t, "V": v, "Vdot": vd, "Vddot": vdd}
            for t, v, vd, vdd in zip(series.times, series.V, series.Vdot, series.Vddot)]
    if series.reports:
        cols += ["I", "Idot", "N_term", "rhs_lower"]
        for rec, rep in zip(recs, series.reports):
            rec.update(I=rep.I, Idot=rep.Idot, N_term=rep.N_term,
                       rhs_lower=rep.rhs_lower)
    write_csv(recs, cols, out / "diagnostics.csv")

    summary = {**_base_summary(cfg, coupling, started),
               "fd_constants": vars(constants),
               "checks": {
                   "virial_first_identity": {"gap": result.vdot_gap,
                                             "tol": result.vdot_tol,
                                             "pass": result.vdot_ok},
                   "virial_second_identity": {"gap": result.vddot_gap,
                                              "tol": result.vddot_tol,
                                              "pass": result.vddot_ok},
                   "interaction_first_identity": {"gap": result.idot_gap,
                                                  "tol": result.idot_tol,
                                                  "pass": result.idot_ok},
                   "interaction_inequality": {"pass": result.inequality_ok},
                   "interaction_integrated": {"pass": result.integrated_ok},
               }}
    write_summary(summary, out / "summary.json")
    for name, c in summary["checks"].items():
        if c["pass"] is False:
            print(f"nlskit: identity check failed: {name}", file=sys.stderr)
            return EXIT_FAIL
    return EXIT_OK


def run_scatter(cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, coupling, state0 = _setup(cfg)
    collector = _collector(cfg, coupling, grid, keep_states=cfg.scatter_window)
    params = StepParams(dt=cfg.dt, t_final=cfg.t_final,
                        snapshot_stride=cfg.snapshot_stride)
    try:
        evolve(state0, params, collector)
    except NanAbortError as err:
        print(f"nlskit: NaN abort at t = {err.t}", file=sys.stderr)
        return EXIT_NAN
    write_csv(collector.records, collector.columns, out / "diagnostics.csv")
    result = asymptotic_profile(collector.states, direction=+1, tol=cfg.tol)
    write_fields(out / "profile.nlsf", grid, result.profile)
    summary = {**_base_summary(cfg, coupling, started),
               "residuals": [list(r) for r in result.residuals],
               "converged": result.converged,
               "mass_mismatch": result.mass_mismatch,
               "boundary_valid": collector.boundary_valid,
               "message": result.message}
    write_summary(summary, out / "summary.json")
    if not result.converged:
        print("nlskit: asymptotic profile did not converge: "
              f"{result.message or 'residual above tol'}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def run_wave_op(cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid, coupling, profile_state = _setup(cfg)
    try:
        result = wave_operator(profile_state.fields, coupling, cfg.wave_t,
                               cfg.wave_dt, tol=cfg.tol,
                               max_iter=cfg.wave_max_iter)
    except WaveOperatorDivergence as err:
        write_summary({**_base_summary(cfg, coupling, started),
                       "converged": False,
                       "residuals": err.residuals,
                       "message": str(err)}, out / "summary.json")
        print(f"nlskit: {err}", file=sys.stderr)
        return EXIT_FAIL
    write_fields(out / "initial_data.nlsf", grid, result.state0.fields)
    masses = [mass(result.state0, mu) for mu in range(coupling.n)]
    summary = {**_base_summary(cfg, coupling, started),
               "converged": result.converged,
               "iterations": result.iterations,
               "residuals": list(result.residuals),
               "tail_estimate": result.tail_estimate,
               "initial_masses": masses,
               "message": result.message}
    write_summary(summary, out / "summary.json")
    if not result.converged:
        print(f"nlskit: wave operator did not converge: {result.message}",
              file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def run_gn_check(cfg: RunConfig) -> int:
    started = time.time()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(cfg.d, cfg.grid_m, cfg.box_l)
    try:
        report = corpus_sup_ratio(grid, cfg.gn_alpha, cfg.gn_generator,
                                  cfg.gn_count, cfg.gn_variant, cfg.seed)
    except RuntimeError as err:
        write_summary({"config": cfg.to_dict(), "error": str(err)},
                      out / "gn_report.json")
        print(f"nlskit: gn-check failed: {err}", file=sys.stderr)
        return EXIT_FAIL
    # out_dir is path-dependent and excluded so same-seed reports are
    # byte-identical
    cfg_echo = {k: v for k, v in cfg.to_dict().items() if k != "out_dir"}
    doc = {"config": cfg_echo,
           "variant": report.variant,
           "generator": report.generator,
           "count": report.count,
           "seed": report.seed,
           "sup_ratio": fmt17(report.sup_ratio),
           "median_ratio": fmt17(report.median_ratio),
           "ratios": [fmt17(v) for v in report.ratios]}
    (out / "gn_report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    write_summary({**{"config": cfg.to_dict()},
                   "sup_ratio": report.sup_ratio,
                   "median_ratio": report.median_ratio,
                   "wall_time_s": time.time() - started}, out / "summary.json")
    return EXIT_OK


_RUNNERS = {
    "simulate": run_simulate,
    "verify-identities": run_verify_identities,
    "scatter": run_scatter,
    "wave-op": run_wave_op,
    "gn-check": run_gn_check,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("config", "experiment") and v is not None}
    overrides["experiment"] = args.experiment
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as err:
        print(f"nlskit: {err}", file=sys.stderr)
        return EXIT_FAIL
    return _RUNNERS[cfg.experiment](cfg)


if __name__ == "__main__":
    sys.exit(main())
