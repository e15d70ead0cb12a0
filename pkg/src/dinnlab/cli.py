"""Command-line interface: dataset generation, training, baselines, studies."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analytic import summarize
from .baselines import LsqProblem, gauss_newton, nelder_mead
from .dataset import Dataset, NoiseSpec, synthesize
from .dinn import TrainConfig, train
from .experiments import EXPERIMENTS, run_experiment
from .integrate import integrate
from .models import registry_get, registry_names


def _load_config(path) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_generate(args) -> int:
    model = registry_get(args.model)
    horizon = args.horizon if args.horizon is not None else model.horizon
    ds = synthesize(
        model, model.true_params(), model.default_y0, args.points, horizon,
        NoiseSpec(level=args.noise, seed=args.seed),
    )
    out = _out_dir(args)
    data_path = os.path.join(out, f"{args.model}_data.csv")
    ds.to_csv(data_path, compartments=model.compartments)
    truth = integrate(model, model.true_params(), model.default_y0, ds.times)
    truth.to_csv(os.path.join(out, f"{args.model}_truth.csv"), model.compartments)
    print(f"wrote {data_path} ({args.points} points, noise={args.noise})")
    return 0


def _cmd_train(args) -> int:
    model = registry_get(args.model)
    overrides = _load_config(args.config)
    ds = Dataset.from_csv(args.data, model_name=args.model)
    cfg_kwargs = {
        "iterations": args.iterations,
        "lr_min": args.lr_min,
        "lr_max": args.lr_max,
        "seed": args.seed,
        "layers": args.layers,
        "neurons": args.neurons,
        "param_range_pct": args.range_pct,
    }
    cfg_kwargs.update(overrides)
    cfg = TrainConfig(**cfg_kwargs)
    truth = None
    if args.truth:
        from .integrate import Trajectory

        truth = Trajectory.from_csv(args.truth, args.model)
    net, report = train(model, ds, cfg, truth=truth)
    out = _out_dir(args)
    net.to_checkpoint(os.path.join(out, "checkpoint.json"), cfg)
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    pred = net.predict(ds.times)
    with open(os.path.join(out, "prediction.csv"), "w") as fh:
        fh.write("t," + ",".join(model.compartments) + "\n")
        for t, row in zip(ds.times, pred):
            fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")
    print(json.dumps(report.found_params, indent=2, sort_keys=True))
    return 0


def _cmd_fit_baseline(args) -> int:
    model = registry_get(args.model)
    ds = Dataset.from_csv(args.data, model_name=args.model)
    names = tuple(s.name for s in model.learnable())
    x0 = (
        np.array([float(v) for v in args.x0.split(",")])
        if args.x0
        else np.full(len(names), 0.1)
    )
    lo, hi = (float(v) for v in args.bounds.split(","))
    prob = LsqProblem(
        model=model, ds=ds, free_params=names, x0=x0,
        bounds=tuple((lo, hi) for _ in names),
    )
    solver = nelder_mead if args.method == "nelder-mead" else gauss_newton
    result = solver(prob)
    payload = {
        "method": result.method,
        "found_params": result.found_params(prob),
        "sse": result.sse,
        "iterations": result.iterations,
        "converged": result.converged,
    }
    out = _out_dir(args)
    with open(os.path.join(out, "baseline.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_experiment(args) -> int:
    kwargs = _load_config(args.config)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.out:
        kwargs["out_dir"] = args.out
    report = run_experiment(args.id, **kwargs)
    if not args.out:
        print(report.to_json())
    else:
        print(f"wrote {os.path.join(args.out, 'report.json')}")
    return 0


def _cmd_analytic(args) -> int:
    summary = summarize(args.s0, args.i0, args.beta, args.alpha)
    print(
        json.dumps(
            {
                "s_infinity": summary.s_infinity,
                "i_max": summary.i_max,
                "ratio_beta_alpha": summary.ratio_beta_alpha,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_models(args) -> int:
    if args.action != "list":
        raise SystemExit(f"unknown models action {args.action!r}")
    for name in registry_names():
        if args.json:
            print(registry_get(name).descriptor_json())
        else:
            model = registry_get(name)
            print(f"{name}: {len(model.compartments)} compartments, "
                  f"{len(model.params)} params, horizon {model.horizon:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dinn-lab",
        description="Disease-informed neural networks for epidemic parameter estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a dataset CSV")
    p.add_argument("--model", required=True, choices=registry_names())
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("train", help="train a DINN on a dataset CSV")
    p.add_argument("--model", required=True, choices=registry_names())
    p.add_argument("--data", required=True)
    p.add_argument("--truth", default=None, help="optional ground-truth CSV")
    p.add_argument("--iterations", type=int, default=100_000)
    p.add_argument("--lr-min", dest="lr_min", type=float, default=1e-4)
    p.add_argument("--lr-max", dest="lr_max", type=float, default=1e-3)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--neurons", type=int, default=20)
    p.add_argument("--range-pct", dest="range_pct", type=float, default=1000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="JSON file of TrainConfig overrides")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("fit-baseline", help="classical least-squares fit")
    p.add_argument("--model", required=True, choices=registry_names())
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("nelder-mead", "gauss-newton"), default="nelder-mead")
    p.add_argument("--x0", default=None, help="comma-separated initial guess")
    p.add_argument("--bounds", default="0,2", help="lo,hi applied to every parameter")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_fit_baseline)

    p = sub.add_parser("experiment", help="run a study by id")
    p.add_argument("id", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", default=None, help="JSON kwargs for the study")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("analytic", help="closed-form SIR summary as JSON")
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--i0", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.set_defaults(fn=_cmd_analytic)

    p = sub.add_parser("models", help="registry inspection")
    p.add_argument("action", choices=("list",))
    p.add_argument("--json", action="store_true", help="full JSON descriptors")
    p.set_defaults(fn=_cmd_models)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
