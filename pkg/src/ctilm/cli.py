"""Command-line interface: ``ctilm <command> [options]``.

Errors are reported on stderr as one line ``error: <Code>: <message>``; the
exit status is 1 for invalid input or configuration and 2 for numeric
failures during computation.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .config import load_config
from .control import ControlPolicy, sweep
from .epidemic import simulate
from .exceptions import CtilmError, InvalidConfig, NumericError
from .likelihood import LikelihoodInput, log_likelihood
from .mcmc import default_workers, run_chains
from .networks import generate_network
from .posterior import (
    gelman_rubin,
    latent_time_summary,
    posterior_predictive,
    read_sample,
    summarize,
    write_sample,
)
from .rng import make_rng


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def cmd_net_gen(args):
    loc = cio.read_locations(args.locations) if args.locations else None
    if loc is None and args.n is None and args.model != "random":
        raise InvalidConfig(f"--locations is required for the {args.model} model")
    net = generate_network(args.model, loc=loc, n=args.n, beta=args.beta, nu=args.nu, rng=make_rng(args.seed))
    _emit(cio.write_edge_list(net), args.out)


def cmd_simulate(args):
    cfg = load_config(args.config)
    sim = cfg.sim_config()
    seed = cfg.seed if args.seed is None else args.seed
    hist = simulate(sim, make_rng(seed))
    _emit(cio.write_event_history(hist), args.out)


def cmd_loglik(args):
    cfg = load_config(args.config)
    inp = LikelihoodInput(
        history=cfg.history(),
        kernel=cfg.kernel_spec(),
        params=cfg.parameter_state(),
        sus_covariates=cfg.covariates("sus_covariates"),
        trans_covariates=cfg.covariates("trans_covariates"),
        periods=cfg.period_specs() if args.with_periods else None,
    )
    print(cio.fmt(log_likelihood(inp)))


def _workers(args, cfg=None):
    if getattr(args, "workers", None):
        return args.workers
    if cfg is not None and cfg.doc.get("workers"):
        return int(cfg.doc["workers"])
    return default_workers()


def cmd_fit(args):
    cfg = load_config(args.config)
    parallel = None if args.parallel is None else args.parallel == "on"
    fit = cfg.fit_config(parallel=parallel, workers=_workers(args, cfg))
    problem = cfg.fit_problem()
    seed = cfg.seed if args.seed is None else args.seed
    out = args.out or cfg.doc.get("output_dir")
    if out is None:
        raise InvalidConfig("no output directory (--out or output_dir)")
    sample = run_chains(problem, fit, seed=seed)
    # the echo leaves out settings that do not change the draws
    echo = {k: v for k, v in cfg.doc.items() if k not in ("workers", "output_dir")}
    echo["fit"] = {k: v for k, v in echo.get("fit", {}).items() if k != "parallel"}
    echo["seed"] = seed
    write_sample(sample, out, config_echo=echo)
    print(summarize(sample).format() if args.verbose else f"wrote {sample.nchains} chain(s) to {out}")


def cmd_summarize(args):
    sample = read_sample(args.draws)
    if args.latent:
        _emit(latent_time_summary(sample, args.latent, args.start, args.thin).to_csv(), args.out)
        return
    _emit(summarize(sample, args.start, args.thin).to_csv(), args.out)


def cmd_diag(args):
    sample = read_sample(args.draws)
    _emit(gelman_rubin(sample, args.start, args.thin).to_csv(), args.out)


def cmd_predict(args):
    cfg = load_config(args.config)
    sample = read_sample(args.draws)
    pred = cfg.section("predict")
    prefix = args.prefix or pred.get("prefix", 1)
    reps = args.reps or pred.get("reps", 1000)
    start = args.start if args.start is not None else pred.get("start", 0)
    thin = args.thin or pred.get("thin", 1)
    seed = cfg.seed if args.seed is None else args.seed
    res = posterior_predictive(
        sample, cfg.sim_config(), cfg.history(), prefix, reps, seed=seed, start=start, thin=thin,
        workers=_workers(args, cfg),
    )
    _emit(res.to_csv(), args.out)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_control(args):
    cfg = load_config(args.config)
    ctl = cfg.section("control")
    radii = args.radii or ctl.get("radii")
    if not radii:
        raise InvalidConfig("no radii given (--radii or control/radii)")
    reps = args.reps or ctl.get("reps", 32)
    loc = cfg.locations()
    if loc is None:
        raise InvalidConfig("the control sweep needs data/locations")
    sim = cfg.sim_config()
    if sim.initial_epi is None:
        raise InvalidConfig("the control sweep needs simulation/initial_id or simulation/initial_history")
    policy = ControlPolicy(radii[0], ctl["grid"]) if "grid" in ctl else ControlPolicy(radii[0])
    seed = cfg.seed if args.seed is None else args.seed
    res = sweep(sim, loc, sim.initial_epi, radii, reps, policy, seed=seed, workers=_workers(args, cfg))
    _emit(res.to_csv(), args.out)


def build_parser():
    p = argparse.ArgumentParser(
        prog="ctilm",
        description="Simulate, fit and check continuous-time individual-level epidemic models.",
        epilog="Worker count defaults to CTILM_WORKERS or the number of available cores.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("net-gen", help="generate a contact network edge list")
    s.add_argument("--model", required=True, choices=["powerlaw", "cauchy", "random"], help="connection model")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--locations", help="CSV of x,y coordinates (spatial models)")
    g.add_argument("--n", type=int, help="population size (random model)")
    s.add_argument("--beta", type=float, required=True, help="decay parameter, or connection probability for random")
    s.add_argument("--nu", type=float, default=1.0, help="power-law scale parameter (default 1)")
    s.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    s.add_argument("--out", help="output edge-list CSV (default stdout)")
    s.set_defaults(func=cmd_net_gen)

    s = sub.add_parser("simulate", help="simulate an epidemic from a run config")
    s.add_argument("--config", required=True, help="JSON run config")
    s.add_argument("--seed", type=int, help="random seed (default: config seed)")
    s.add_argument("--out", help="output event-history CSV (default stdout)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("loglik", help="print the log-likelihood of the configured history")
    s.add_argument("--config", required=True, help="JSON run config")
    s.add_argument(
        "--with-periods", action="store_true", help="add the period log-densities (default: periods treated as fixed)"
    )
    s.set_defaults(func=cmd_loglik)

    s = sub.add_parser("fit", help="run the data-augmented MCMC sampler")
    s.add_argument("--config", required=True, help="JSON run config")
    s.add_argument("--out", help="output directory (default: config output_dir)")
    s.add_argument("--seed", type=int, help="master seed (default: config seed)")
    s.add_argument("--parallel", choices=["on", "off"], help="override fit/parallel")
    s.add_argument("--workers", type=int, help="worker processes for parallel chains")
    s.add_argument("--verbose", action="store_true", help="print a summary table when done")
    s.set_defaults(func=cmd_fit)

    for name, func, helptext in (
        ("summarize", cmd_summarize, "summary table of posterior draws"),
        ("diag", cmd_diag, "Gelman-Rubin scale reduction factors"),
    ):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--draws", required=True, help="directory written by 'fit'")
        s.add_argument("--start", type=int, default=0, help="first iteration kept (default 0)")
        s.add_argument("--thin", type=int, default=1, help="thinning interval (default 1)")
        s.add_argument("--out", help="output CSV (default stdout)")
        if name == "summarize":
            s.add_argument(
                "--latent", choices=["infection", "removal"], help="summarize latent event times instead"
            )
        s.set_defaults(func=func)

    s = sub.add_parser("predict", help="posterior predictive statistics T1-T4")
    s.add_argument("--config", required=True, help="JSON run config (model and observed history)")
    s.add_argument("--draws", required=True, help="directory written by 'fit'")
    s.add_argument("--prefix", type=int, help="condition on this many first infections")
    s.add_argument("--reps", type=int, help="number of replicates")
    s.add_argument("--start", type=int, help="first iteration kept")
    s.add_argument("--thin", type=int, help="thinning interval")
    s.add_argument("--seed", type=int, help="random seed (default: config seed)")
    s.add_argument("--workers", type=int, help="worker processes")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("control", help="ring-culling sweep over radii")
    s.add_argument("--config", required=True, help="JSON run config")
    s.add_argument("--radii", type=_float_list, help="comma-separated radii")
    s.add_argument("--reps", type=int, help="replicates per radius")
    s.add_argument("--seed", type=int, help="random seed (default: config seed)")
    s.add_argument("--workers", type=int, help="worker processes")
    s.add_argument("--out", help="output CSV (default stdout)")
    s.set_defaults(func=cmd_control)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except CtilmError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, NumericError) else 1
    except (OSError, ValueError) as exc:
        code = "IOError" if isinstance(exc, OSError) else "InvalidInput"
        print(f"error: {code}: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: NumericFailure: {exc}", file=sys.stderr)
        return 2
    return 0
