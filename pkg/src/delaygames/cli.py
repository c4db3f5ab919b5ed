"""Command-line experiment runner.

Every command reads an optional ``key = value`` config file, applies
``--set`` overrides and writes CSV (to ``--out`` or standard output).  The
effective config is echoed as ``#`` comment lines at the top of trajectory
outputs so a file can be regenerated from its own header.

Exit codes: 0 success, 2 config error, 3 numeric or convergence error,
4 bracket or classification error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import math
import sys
from typing import IO, Iterator

from . import automata, dynamics, stability
from .config import ConfigError, ExperimentConfig, load_config, parse_assignments
from .game_core import GameError, builtin_game
from .trajectory import fmt, write_comment_block, write_phase_csv, write_trajectory_csv

log = logging.getLogger("delaygames")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_BRACKET = 4


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    pairs = list(args.set or [])
    if args.seed is not None:
        pairs.append(("seed", str(args.seed)))
    if args.out is not None:
        pairs.append(("out", args.out))
    return parse_assignments(pairs, cfg) if pairs else cfg


@contextlib.contextmanager
def _output(cfg: ExperimentConfig) -> Iterator[IO[str]]:
    if cfg.out and cfg.out != "-":
        with open(cfg.out, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _echo(cfg: ExperimentConfig) -> list[str]:
    return cfg.to_text().splitlines()


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    traj = dynamics.integrate(
        cfg.load_game(), cfg.params(), cfg.initial, tau=cfg.tau, t_max=cfg.t_max, h=cfg.h
    ).decimate(cfg.decimation)
    with _output(cfg) as fh:
        write_trajectory_csv(traj, fh, _echo(cfg))
    return 0


def cmd_monte_carlo(cfg: ExperimentConfig, args) -> int:
    summary = automata.run_ensemble(cfg.sim_config())
    with _output(cfg) as fh:
        write_comment_block(fh, _echo(cfg))
        fh.write("t,p1,p2,p3,p4,c,var_p1,var_p2,var_p3,var_p4\n")
        for t, m, c, v in zip(summary.times, summary.mean, summary.c_mean, summary.var):
            fh.write(",".join([fmt(t), *map(fmt, m), fmt(c), *map(fmt, v)]) + "\n")
    return 0


def cmd_equilibrium(cfg: ExperimentConfig, args) -> int:
    p = dynamics.find_equilibrium(cfg.load_game(), cfg.params(), cfg.initial)
    with _output(cfg) as fh:
        fh.write("p1,p2,p3,p4,c_star\n")
        fh.write(",".join([*map(fmt, p), fmt(p.c)]) + "\n")
    return 0


def cmd_predict(cfg: ExperimentConfig, args) -> int:
    game = cfg.load_game()
    p, coeffs, res = stability.predict(game, cfg.params(), cfg.initial)
    with _output(cfg) as fh:
        fh.write("game,alpha,beta,theta,c_star,X1,X2,Y1,Y2,w,tau_p\n")
        w = "nan" if res.w is None else fmt(res.w)
        fh.write(
            ",".join(
                [str(game.id), fmt(cfg.alpha), fmt(cfg.beta), fmt(cfg.theta), fmt(coeffs.c_star),
                 fmt(coeffs.X1), fmt(coeffs.X2), fmt(coeffs.Y1), fmt(coeffs.Y2), w, fmt(res.tau2)]
            )
            + "\n"
        )
    return 0


def cmd_onset(cfg: ExperimentConfig, args) -> int:
    initial = cfg.initial if args.from_initial else None
    tau_o = dynamics.observed_instability_delay(
        cfg.load_game(), cfg.params(), initial, (args.tau_lo, args.tau_hi), args.tolerance
    )
    with _output(cfg) as fh:
        fh.write("tau_o\n" + fmt(tau_o) + "\n")
    return 0


def _parse_rows(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        rows = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad --rows value {text!r}") from None
    if any(not 1 <= r <= len(stability.TABLE1_ROWS) for r in rows):
        raise ConfigError(f"rows must be within 1..{len(stability.TABLE1_ROWS)}")
    return rows


def cmd_table1(cfg: ExperimentConfig, args) -> int:
    rows = _parse_rows(args.rows)
    table = stability.predict_table1(rows) if rows is None or rows else []
    header = list(stability.TABLE1_HEADER)
    if args.observed:
        header += ["tau_o", "ref_tau_o", "rel_err_o"]
    status = 0
    with _output(cfg) as fh:
        fh.write(",".join(header) + "\n")
        for r in table:
            cells = [str(r.game), fmt(r.alpha), fmt(r.beta), fmt(r.theta), fmt(r.c_star),
                     fmt(r.tau_p), fmt(r.ref_tau_p), fmt(r.rel_err)]
            if args.observed:
                game = builtin_game(r.game)
                params = automata.LearningParams(r.alpha, r.beta, r.theta)
                bracket = (0.5 * r.ref_tau_o, 2.0 * r.ref_tau_o)
                try:
                    tau_o = dynamics.observed_instability_delay(game, params, tau_range=bracket)
                except dynamics.BracketError as e:
                    log.warning("row game=%s alpha=%s beta=%s theta=%s: %s", r.game, r.alpha, r.beta, r.theta, e)
                    tau_o = math.nan
                    status = EXIT_BRACKET
                cells += [fmt(tau_o), fmt(r.ref_tau_o), fmt(abs(tau_o - r.ref_tau_o) / r.ref_tau_o)]
            fh.write(",".join(cells) + "\n")
    return status


def cmd_phase(cfg: ExperimentConfig, args) -> int:
    traj = dynamics.integrate(
        cfg.load_game(), cfg.params(), cfg.initial, tau=cfg.tau, t_max=cfg.t_max, h=cfg.h
    ).decimate(cfg.decimation)
    i, j = (0, 1) if args.pair == "actions" else (2, 3)
    with _output(cfg) as fh:
        write_phase_csv(traj.states[:, i], traj.states[:, j], fh, _echo(cfg))
    return 0


COMMANDS = {
    "simulate": (cmd_simulate, "integrate the delayed mean dynamics"),
    "monte-carlo": (cmd_monte_carlo, "run the stochastic automata (ensemble mean and variance)"),
    "equilibrium": (cmd_equilibrium, "find the undelayed equilibrium p* and c*"),
    "predict": (cmd_predict, "predicted onset delay from the linearization"),
    "onset": (cmd_onset, "observed onset delay by bisection on long integrations"),
    "table1": (cmd_table1, "predicted (and optionally observed) onset delays for the reference rows"),
    "phase": (cmd_phase, "phase-portrait data for the action or group pair"),
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--set", metavar="KEY=VALUE", type=_key_value, action="append",
                        help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="delaygames", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {name: sub.add_parser(name, parents=[common], help=help_) for name, (_, help_) in COMMANDS.items()}
    subs["onset"].add_argument("--tau-lo", type=float, required=True)
    subs["onset"].add_argument("--tau-hi", type=float, required=True)
    subs["onset"].add_argument("--tolerance", type=float, default=1.0)
    subs["onset"].add_argument("--from-initial", action="store_true",
                               help="probe from the configured initial state instead of the perturbed equilibrium")
    subs["table1"].add_argument("--observed", action="store_true", help="add bisection-measured onset delays")
    subs["table1"].add_argument("--rows", help="comma-separated 1-based row filter; empty string selects none")
    subs["phase"].add_argument("--pair", choices=("actions", "groups"), default="actions")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = build_config(args)
        return func(cfg, args)
    except (ConfigError, GameError) as e:
        log.error("%s", e)
        return EXIT_CONFIG
    except (dynamics.BracketError, dynamics.InsufficientDataError) as e:
        log.error("%s", e)
        return EXIT_BRACKET
    except (dynamics.ConvergenceError, ArithmeticError, FloatingPointError) as e:
        log.error("%s", e)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
