"""Batch command-line front door.

Subcommands: simulate, solve, value, paths, replicate, uiv, frontier.
Every run is a pure function of (config file, seed): outputs are written
with sorted keys and repr-exact floats, so repeated runs produce
byte-identical files regardless of worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .dual_solver import Scenario, solve_dual
from .exceptions import ConfigError, Infeasible, InfoportError
from .indifference import uiv_closed_form, uiv_root_solve
from .information import (
    FiltrationKind,
    VolCase,
    change_point_filter,
    density_path,
    market_price_of_risk,
)
from .market import (
    ChangePointLaw,
    Coefficient,
    CoefficientSpec,
    MarketModel,
    SimGrid,
    paths_to_csv,
    simulate_paths,
)
from .preferences import (
    exponential_loss,
    log_utility,
    neg_reciprocal_loss,
    shifted_neg_reciprocal,
)
from .wealth import (
    regression_strategy,
    replicate,
    paths_csv,
    value_of_solution,
    wealth_path_regression,
)

__all__ = ["main", "load_config", "build_scenario"]


# ---------------------------------------------------------------------------
# config parsing


def _coefficient(node, key: str) -> Coefficient:
    if isinstance(node, (int, float)):
        return Coefficient.constant(float(node))
    if not isinstance(node, dict):
        raise ConfigError("expected number or object", key)
    kind = node.get("kind")
    if kind == "constant":
        return Coefficient.constant(node["value"])
    if kind == "time_table":
        return Coefficient.time_table(node["breakpoints"], node["values"])
    if kind == "bilinear":
        return Coefficient.bilinear(node["t_grid"], node["x_grid"], node["table"])
    raise ConfigError(f"unknown coefficient kind {kind!r}", key)


def _law(node, horizon: float) -> ChangePointLaw:
    if not isinstance(node, dict):
        raise ConfigError("expected object", "market.law")
    kind = node.get("kind")
    if kind == "exponential":
        return ChangePointLaw.exponential(node["rate"],
                                          truncated=node.get("truncated", False),
                                          horizon=horizon)
    if kind == "uniform":
        return ChangePointLaw.uniform(node.get("horizon", horizon))
    if kind == "point_mass":
        t = node["time"]
        return ChangePointLaw.point_mass(float("inf") if t == "inf" else t)
    if kind == "discrete":
        return ChangePointLaw.discrete(node["times"], node["probs"])
    raise ConfigError(f"unknown law kind {kind!r}", "market.law")


def _market(node) -> MarketModel:
    try:
        c = node["coeffs"]
        coeffs = CoefficientSpec(
            mu1=_coefficient(c["mu1"], "coeffs.mu1"),
            mu2=_coefficient(c["mu2"], "coeffs.mu2"),
            sigma1=_coefficient(c["sigma1"], "coeffs.sigma1"),
            sigma2=_coefficient(c["sigma2"], "coeffs.sigma2"),
        )
        horizon = float(node["horizon"])
        return MarketModel(coeffs=coeffs, law=_law(node["law"], horizon),
                           horizon=horizon, s0=float(node.get("s0", 1.0)))
    except KeyError as err:
        raise ConfigError("missing key", f"market.{err.args[0]}") from None


def _preferences(node):
    uname = node.get("utility", "log")
    if uname == "log":
        utility = log_utility()
    elif uname == "shifted_neg_reciprocal":
        utility = shifted_neg_reciprocal()
    else:
        raise ConfigError(f"unknown utility {uname!r}", "preferences.utility")
    lname = node.get("loss", "neg_reciprocal")
    if lname == "neg_reciprocal":
        loss = neg_reciprocal_loss(node.get("loss_c", 3.0))
    elif lname == "exponential":
        loss = exponential_loss(node.get("gamma", 1.0))
    else:
        raise ConfigError(f"unknown loss {lname!r}", "preferences.loss")
    return utility, loss


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError(f"invalid JSON at line {err.lineno}", path) from None
    except OSError as err:
        raise ConfigError(str(err), path) from None


def build_scenario(cfg: dict, args) -> Scenario:
    model = _market(cfg.get("market", {}))
    utility, loss = _preferences(cfg.get("preferences", {}))
    solver = cfg.get("solver", {})
    execution = cfg.get("execution", {})

    eps = solver.get("eps")
    quantile = None
    policy = solver.get("eps_policy")
    if policy is not None:
        if policy.get("kind") == "quantile_between_bounds":
            quantile = float(policy["q"])
            eps = None
        elif policy.get("kind") == "absolute":
            eps = float(policy["value"])
        else:
            raise ConfigError(f"unknown eps policy {policy.get('kind')!r}",
                              "solver.eps_policy")
    if getattr(args, "eps", None) is not None:
        eps, quantile = args.eps, None

    name = getattr(args, "filtration", None) or solver.get("filtration", "prog-s")
    try:
        kind = FiltrationKind(name)
    except ValueError:
        raise ConfigError(f"unknown filtration {name!r}", "solver.filtration") \
            from None

    vol_case = None
    vc = solver.get("vol_case")
    if vc is not None:
        vol_case = VolCase(vc)

    n_steps = int(execution.get("n_steps", 64))
    return Scenario(
        utility=utility, loss=loss,
        x=float(getattr(args, "x", None) or solver.get("x", 1.0)),
        eps=eps, eps_quantile=quantile if eps is None else None,
        kind=kind, model=model,
        grid=SimGrid(n_steps=n_steps, horizon=model.horizon),
        vol_case=vol_case,
        n_paths=int(getattr(args, "paths", None) or execution.get("n_paths", 1000)),
        seed=int(args.seed if args.seed is not None
                 else execution.get("seed", 0)),
        n_strata=int(solver.get("n_strata", 4)),
        workers=int(args.workers or execution.get("workers", 1)),
        solver_tol=float(getattr(args, "tol", None) or solver.get("tol", 1e-10)),
    )


# ---------------------------------------------------------------------------
# output helpers


def _write_json(path: Path, record: dict) -> None:
    path.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")


def _solution_record(sol, scenario: Scenario) -> dict:
    rep = value_of_solution(sol)
    return {
        "filtration": scenario.kind.value,
        "x": scenario.x,
        "n_paths": scenario.n_paths,
        "seed": scenario.seed,
        "value": rep.value,
        "stderr": rep.stderr,
        "per_stratum": [
            {
                "lambda_star": s.lambda_star,
                "y_hat": s.y_hat,
                "eps": s.eps,
                "eps_min": s.bounds.eps_min,
                "eps_max": s.bounds.eps_max,
                "binding": s.binding,
                "budget_residual": s.budget_residual,
                "risk_residual": s.risk_residual,
                "weight": s.weight,
            }
            for s in sol.strata
        ],
    }


def _out_dir(args, cfg: dict) -> Path:
    out = args.out or cfg.get("output", {}).get("directory", ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    scenario = build_scenario(cfg, args)
    bundle = simulate_paths(scenario.model, scenario.grid, scenario.n_paths,
                            scenario.seed, workers=scenario.workers)
    out = _out_dir(args, cfg)
    paths_to_csv(bundle, str(out / "paths.csv"))
    return 0


def _solve_common(args):
    cfg = load_config(args.config)
    scenario = build_scenario(cfg, args)
    sol = solve_dual(scenario)
    return cfg, scenario, sol


def _cmd_solve(args) -> int:
    cfg, scenario, sol = _solve_common(args)
    out = _out_dir(args, cfg)
    _write_json(out / "solution.json", _solution_record(sol, scenario))
    if "csv" in cfg.get("output", {}).get("formats", []):
        with open(out / "r_hat.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "r_hat"])
            for i, v in enumerate(sol.r_hat):
                writer.writerow([i, repr(float(v))])
    return 0


def _cmd_value(args) -> int:
    cfg, scenario, sol = _solve_common(args)
    rep = value_of_solution(sol)
    _write_json(_out_dir(args, cfg) / "value.json",
                {"filtration": scenario.kind.value, "value": rep.value,
                 "stderr": rep.stderr})
    return 0


def _cmd_paths(args) -> int:
    cfg, scenario, sol = _solve_common(args)
    posterior = None
    if scenario.kind is FiltrationKind.PRICE_ONLY:
        posterior = change_point_filter(scenario.model, scenario.paths)
    wealth = wealth_path_regression(sol, scenario, posterior=posterior)
    lam = market_price_of_risk(scenario.model, scenario.paths, scenario.kind,
                               vol_case=scenario.vol_case, posterior=posterior)
    strat = regression_strategy(sol, scenario, lam)
    paths_csv(scenario.density, wealth, strat, scenario.grid.times,
              str(_out_dir(args, cfg) / "wealth_paths.csv"))
    return 0


def _cmd_replicate(args) -> int:
    cfg, scenario, sol = _solve_common(args)
    lam = market_price_of_risk(scenario.model, scenario.paths, scenario.kind,
                               vol_case=scenario.vol_case)
    strat = regression_strategy(sol, scenario, lam)
    report = replicate(strat, scenario.paths, sol)
    _write_json(_out_dir(args, cfg) / "replicate.json",
                {"rel_rmse": report["rel_rmse"],
                 "n_paths": scenario.n_paths,
                 "n_steps": scenario.grid.n_steps})
    return 0


def _cmd_uiv(args) -> int:
    cfg = load_config(args.config)
    try:
        coarse_name, fine_name = args.pair.split(",")
    except ValueError:
        raise ConfigError("expected --pair coarse,fine", "pair") from None

    scens = {}
    for name in (coarse_name, fine_name):
        a = argparse.Namespace(**vars(args))
        a.filtration = name
        scens[name] = build_scenario(cfg, a)
        scens[name].ensure_samples()
    scen_f, scen_g = scens[coarse_name], scens[fine_name]
    if scen_f.utility.kind == "shifted_neg_reciprocal" \
            and scen_f.loss.kind == "neg_reciprocal":
        strata = scen_g.strata() if scen_g.kind.initially_enlarged else None
        res = uiv_closed_form(scen_f.z_samples, scen_g.z_samples, scen_f.x,
                              pair=(coarse_name, fine_name), strata_g=strata)
    else:
        res = uiv_root_solve(scen_f, scen_g)
    record = {"c": res.c, "stderr": res.stderr, "method": res.method,
              "pair": [coarse_name, fine_name],
              "per_stratum": list(res.per_stratum)}
    _write_json(_out_dir(args, cfg) / "uiv.json", record)
    return 0


def _cmd_frontier(args) -> int:
    cfg = load_config(args.config)
    frontier = cfg.get("frontier", {})
    filtrations = frontier.get("filtrations", ["prog-s"])
    eps_grid = frontier.get("eps_grid")
    k_points = int(frontier.get("k", 5))
    rows = []
    for name in filtrations:
        if eps_grid is not None:
            quantiles = None
        else:
            quantiles = list(np.linspace(0.0, 1.0, k_points))
        targets = eps_grid if eps_grid is not None else quantiles
        for target in targets:
            a = argparse.Namespace(**vars(args))
            a.filtration = name
            a.eps = None
            scenario = build_scenario(cfg, a)
            if eps_grid is not None:
                scenario.eps, scenario.eps_quantile = float(target), None
            else:
                scenario.eps, scenario.eps_quantile = None, float(target)
            try:
                sol = solve_dual(scenario)
                rep = value_of_solution(sol)
                s0 = sol.strata[0]
                rows.append([name, repr(s0.eps), repr(s0.lambda_star),
                             repr(s0.y_hat), repr(rep.value), repr(rep.stderr)])
            except InfoportError as err:
                rows.append([name, repr(float(target)), "NA", "NA", "NA",
                             f"NA: {err}"])
    out = _out_dir(args, cfg)
    with open(out / "frontier.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filtration", "eps", "lambda_star", "y_hat",
                         "value", "stderr"])
        writer.writerows(rows)
    return 0


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infoport",
        description="Risk-constrained utility maximization in a "
                    "change-point market under partial information.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None)

    def solve_flags(p):
        p.add_argument("--x", type=float, default=None)
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--filtration", default=None,
                       choices=[k.value for k in FiltrationKind])
        p.add_argument("--paths", type=int, default=None, dest="paths")
        p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("simulate", help="simulate paths and export CSV")
    common(p)
    solve_flags(p)
    p.set_defaults(func=_cmd_simulate)

    for name, fn, help_text in [
        ("solve", _cmd_solve, "solve the constrained problem"),
        ("value", _cmd_value, "report the value function"),
        ("paths", _cmd_paths, "export wealth and strategy paths"),
        ("replicate", _cmd_replicate, "replication error report"),
    ]:
        p = sub.add_parser(name, help=help_text)
        common(p)
        solve_flags(p)
        p.set_defaults(func=fn)

    p = sub.add_parser("uiv", help="indifference value of an information pair")
    common(p)
    solve_flags(p)
    p.add_argument("--pair", required=True,
                   help="coarse,fine filtration names, e.g. prog-s,init-s")
    p.set_defaults(func=_cmd_uiv)

    p = sub.add_parser("frontier", help="sweep the risk benchmark")
    common(p)
    solve_flags(p)
    p.set_defaults(func=_cmd_frontier)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except Infeasible as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except InfoportError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
