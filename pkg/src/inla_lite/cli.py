"""Command-line interface: ``inla-lite fit|compare|simulate|oracle|replay``.

Exit codes: 0 success, 2 input validation, 3 numerical failure,
4 configuration.
"""

import argparse
import json
from pathlib import Path
import sys
import time
import warnings

import numpy as np
import scipy

from . import __version__, data as io
from . import diagnostics, oracle
from .engine import FitOptions, build_problem, fit
from .engine.marginals import QUANTILES, SLA_GRID, SLA_STEP
from .errors import ConfigError, InlaError, InputError, SpecError
from .model import TABLE1_PRESETS, load_model_config, preset, spec_from_dict, spec_to_dict

Q_COLS = [f"q{p:g}" for p in QUANTILES]


def _software():
    return {"inla_lite": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _input_record(path):
    p = Path(path).resolve()
    return {"path": str(p), "sha256": io.sha256(p)}


def _resolve_spec(args):
    if bool(args.model) == bool(args.preset):
        raise ConfigError("give exactly one of --model or --preset")
    if args.preset:
        return preset(args.preset), args.preset
    return load_model_config(args.model), None


def _options(args):
    return FitOptions(delta_z=args.delta_z, delta_pi=args.delta_pi, marginal=args.marginal)


# ---------------------------------------------------------------------------
# fit


def write_fit_outputs(out, result, data, spec, dic):
    out = Path(out)
    lat = result.latent
    rows = []
    for b in result.layout.blocks:
        for k, lab in enumerate(b.labels):
            i = b.offset + k
            rows.append([b.name, lab, i, lat.mean[i], lat.sd[i], *(lat.quantiles[p][i] for p in QUANTILES)])
    io.write_csv(out / "latent_marginals.csv", ["block", "level", "index", "mean", "sd", *Q_COLS], rows)

    rows = []
    for scale, margs in (("precision", result.hyper), ("log_precision", result.hyper_log)):
        for name, m in zip(result.layout.hyper_names, margs):
            rows.append([name, scale, m.mean, m.sd, *(m.quantiles[p] for p in QUANTILES)])
    io.write_csv(out / "hyper_marginals.csv", ["hyperparameter", "scale", "mean", "sd", *Q_COLS], rows)

    rows = []
    for name, effs in diagnostics.effect_summaries(result).items():
        for r in effs:
            rows.append([name, r.level, r.exp_mean, r.exp_lower, r.exp_upper, r.mean, r.sd])
    io.write_csv(out / "effects_exp.csv",
                 ["block", "level", "posterior_mean", "ci_lower", "ci_upper", "mean_log", "sd_log"], rows)

    rows = [[u.unit_id, u.y, u.n, u.srr, u.p_mean, u.p_lower, u.p_upper,
             u.exp_spatial_mean, u.exp_spatial_lower, u.exp_spatial_upper]
            for u in diagnostics.unit_summaries(result, data)]
    io.write_csv(out / "unit_summaries.csv",
                 ["unit_id", "y", "N", "srr_observed", "p_mean", "p_lower", "p_upper",
                  "exp_spatial_mean", "exp_spatial_lower", "exp_spatial_upper"], rows)
    io.write_csv(out / "dic.csv", ["Model", "p_D", "DIC"], [[spec.name or "model", dic.p_D, dic.dic]])


def run_fit(data_path, adjacency_path, spec, out, options, preset_name=None, figures=False):
    data, graph = io.ingest(data_path, adjacency_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # recorded as layout notes instead
        problem = build_problem(spec, data, {"adjacency": graph})
    result = fit(problem, options)
    dic = diagnostics.dic(result)
    out = Path(out)
    write_fit_outputs(out, result, data, spec, dic)
    prov = {
        "command": "fit",
        "inputs": {"data": _input_record(data_path), "adjacency": _input_record(adjacency_path)},
        "model": {"preset": preset_name, "config": spec_to_dict(spec)},
        "options": options.provenance(),
        "latent_dimension": problem.n,
        "constraints": int(len(problem.constraints)),
        "hyperparameters": list(problem.layout.hyper_names),
        "hyper_mode": result.mode.theta if result.mode is not None else [],
        "theta_points": len(result.points),
        "quantiles": list(QUANTILES),
        "sla_grid": {"lo": float(SLA_GRID[0]), "hi": float(SLA_GRID[-1]), "step": SLA_STEP},
        "dic": {
            "mean_deviance": dic.mean_deviance, "deviance_at_point_estimate": dic.deviance_at_point_estimate,
            "convention": dic.convention,
        },
        "notes": list(result.notes),
        "software": _software(),
    }
    io.write_json(out / "provenance.json", prov)
    if figures:
        from .plotting import render_report

        render_report(result, out / "figures")
    return result, dic


def cmd_fit(args):
    spec, name = _resolve_spec(args)
    t0 = time.perf_counter()
    result, dic = run_fit(args.data, args.adjacency, spec, args.out, _options(args), name, args.figures)
    for n in result.notes:
        print(f"note: {n}", file=sys.stderr)
    print(f"{spec.name}: p_D={dic.p_D:.3f} DIC={dic.dic:.3f} "
          f"({len(result.points)} hyperparameter points, {time.perf_counter() - t0:.2f} s)", file=sys.stderr)


# ---------------------------------------------------------------------------
# compare


def run_compare(data_path, adjacency_path, presets, out, options):
    data, graph = io.ingest(data_path, adjacency_path)
    done, skipped = [], []
    for name in presets:
        spec = preset(name)
        missing = [c for c in spec.covariates() if c not in data.covariates]
        if missing:
            skipped.append([spec.name, None, None, name, False, f"skipped: missing covariate {', '.join(missing)}"])
            continue
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                problem = build_problem(spec, data, {"adjacency": graph})
                d = diagnostics.dic(fit(problem, options))
        except (SpecError, InlaError) as exc:
            skipped.append([spec.name, None, None, name, False, f"failed: {exc}"])
            continue
        done.append([spec.name, d.p_D, d.dic, name, False, ""])
    done.sort(key=lambda r: (r[2], r[3]))
    if done:
        done[0][4] = True
    io.write_csv(Path(out) / "dic_table.csv", ["Model", "p_D", "DIC", "preset", "lowest_dic", "note"], done + skipped)
    io.write_json(Path(out) / "provenance.json", {
        "command": "compare",
        "inputs": {"data": _input_record(data_path), "adjacency": _input_record(adjacency_path)},
        "presets": list(presets),
        "options": options.provenance(),
        "dic_convention": diagnostics.DIC_CONVENTION,
        "software": _software(),
    })
    return done, skipped


def cmd_compare(args):
    presets = args.presets.split(",") if args.presets else list(TABLE1_PRESETS)
    done, skipped = run_compare(args.data, args.adjacency, presets, args.out, _options(args))
    for r in skipped:
        print(f"warning: {r[3]}: {r[5]}", file=sys.stderr)
    if not done:
        raise ConfigError("no preset could be fitted")


# ---------------------------------------------------------------------------
# simulate


def run_simulate(out, seed, units=None, preset_name=None):
    if seed is None:
        raise ConfigError("simulation needs --seed")
    if preset_name not in (None, "region-like"):
        raise ConfigError(f"unknown simulation preset {preset_name!r} (available: region-like)")
    n = 377 if preset_name == "region-like" or units is None else int(units)
    if n < 4:
        raise ConfigError("simulation needs at least 4 units")
    sim = oracle.simulate_region(n_units=n, seed=seed)
    out = Path(out)
    io.write_dataset(out / "data.csv", sim.dataset)
    io.atomic_write_text(out / "adjacency.txt", "".join(
        " ".join(str(v) for v in (i, len(nb), *nb)) + "\n" for i, nb in enumerate(sim.graph.neighbors)))
    names = list(sim.effects)
    io.write_csv(out / "truth.csv", ["unit_id", "x", "y", "eta", *names], [
        [i, sim.coords[i, 0], sim.coords[i, 1], sim.eta[i], *(sim.effects[k][i] for k in names)]
        for i in range(n)])
    io.write_json(out / "provenance.json", {
        "command": "simulate", "seed": int(seed), "rng": oracle.RNG_NAME, "units": n,
        "preset": preset_name, "software": _software(),
    })
    return sim


def cmd_simulate(args):
    run_simulate(args.out, args.seed, args.units, args.preset)


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args):
    spec, name = _resolve_spec(args)
    data, graph = io.ingest(args.data, args.adjacency)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        problem = build_problem(spec, data, {"adjacency": graph})
    out = Path(args.out)
    prov = {
        "command": "oracle", "method": args.method,
        "inputs": {"data": _input_record(args.data), "adjacency": _input_record(args.adjacency)},
        "model": {"preset": name, "config": spec_to_dict(spec)}, "software": _software(),
    }
    if args.method == "quadrature":
        q = oracle.quadrature_posterior(problem)
        rows = [[lab, q.mean[i], q.sd[i], *(q.quantiles[i][p] for p in QUANTILES)] for i, lab in enumerate(q.labels)]
        io.write_csv(out / "oracle_latent.csv", ["label", "mean", "sd", *Q_COLS], rows)
        prov.update(latent_ranges=q.latent_ranges, theta_range=q.theta_range,
                    grid={"latent_points": q.spec.latent_points, "theta_points": q.spec.theta_points})
        d = q.dic
    else:
        if args.seed is None:
            raise ConfigError("the sampler needs --seed")
        ms = oracle.McmcSpec(iterations=args.iterations, seed=args.seed, chains=args.chains)
        m = oracle.metropolis(problem, ms, force=args.force)
        rows = [[lab, m.mean[i], m.sd[i], m.mcse[i]] for i, lab in enumerate(m.labels)]
        io.write_csv(out / "oracle_latent.csv", ["label", "mean", "sd", "mcse"], rows)
        prov.update(seed=args.seed, rng=oracle.RNG_NAME, iterations=ms.iterations, burn_in=ms.burn_in,
                    chains=ms.chains, thin=ms.thin, step_sizes=m.step_sizes, acceptance=m.acceptance,
                    split_rhat=m.rhat)
        d = m.dic
    io.write_csv(out / "dic.csv", ["Model", "p_D", "DIC"], [[spec.name or "model", d["p_D"], d["DIC"]]])
    io.write_json(out / "provenance.json", prov)


# ---------------------------------------------------------------------------
# replay


def cmd_replay(args):
    prov = json.loads(Path(args.provenance).read_text())
    if prov.get("command") != "fit":
        raise ConfigError("only fit runs can be replayed")
    for key, rec in prov["inputs"].items():
        if io.sha256(rec["path"]) != rec["sha256"]:
            raise InputError(f"{key} input {rec['path']} changed since the recorded run")
    o = prov["options"]
    options = FitOptions(delta_z=o["delta_z"], delta_pi=o["delta_pi"], marginal=o["marginal"],
                         la_indices=tuple(o["la_indices"]) if o["la_indices"] is not None else None,
                         init=tuple(o["init"]) if o["init"] is not None else None)
    spec = spec_from_dict(prov["model"]["config"])
    run_fit(prov["inputs"]["data"]["path"], prov["inputs"]["adjacency"]["path"], spec, args.out, options,
            prov["model"]["preset"])


# ---------------------------------------------------------------------------


def _common(p, model=True):
    p.add_argument("--data", required=True)
    p.add_argument("--adjacency", required=True)
    if model:
        p.add_argument("--model", help="model config (JSON)")
        p.add_argument("--preset", help="named model preset")
    p.add_argument("--out", required=True)
    p.add_argument("--delta-z", type=float, default=1.0)
    p.add_argument("--delta-pi", type=float, default=2.5)
    p.add_argument("--marginal", choices=("sla", "la"), default="sla")
    p.add_argument("--seed", type=int)


def build_parser():
    ap = argparse.ArgumentParser(prog="inla-lite", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one model and export marginals, effects and DIC")
    _common(p)
    p.add_argument("--figures", action="store_true", help="also render PNG figures under OUT/figures")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="fit several presets and tabulate DIC")
    _common(p, model=False)
    p.add_argument("--presets", help="comma-separated preset names (default: the six table presets)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="write a seeded synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--units", type=int)
    p.add_argument("--preset", help="region-like (377 units)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="reference posterior by quadrature or Metropolis")
    _common(p)
    p.add_argument("--method", choices=("quadrature", "mcmc"), default="quadrature")
    p.add_argument("--iterations", type=int, default=50000)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--force", action="store_true", help="report even if split R-hat is too high")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("replay", help="rerun a fit from its provenance.json")
    p.add_argument("provenance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except InlaError as exc:
        print(f"inla-lite: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"inla-lite: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
