"""Command-line driver: ``train``, ``run`` and ``eval``.

Exit codes are 0 on success, 1 for usage and configuration errors and 2
for failures while simulating or training.

.. autofunction:: main
.. autofunction:: cmd_train
.. autofunction:: cmd_run
.. autofunction:: cmd_eval
"""

__copyright__ = """
Copyright (C) 2026 thermadapt developers
"""

__license__ = """
Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in
all copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
THE SOFTWARE.
"""

import argparse
import logging
import os
import sys

import yaml

from thermadapt.agent import (
    AgentConfig, RewardParams, build_action_space, evaluate, make_env_factory,
    train, write_reward_curve, write_trace_csv)
from thermadapt.knowledge import (
    KnowledgeError, SeriesError, ingest_hourly_csv, synthetic_series)
from thermadapt.logging_quantities import initialize_logmgr
from thermadapt.neural import NetworkError, load_network, save_network
from thermadapt.scenario import load_scenario, run_scenario
from thermadapt.simutil import ConfigurationError, resolve_seed
from thermadapt.thermal import RoomConfig, default_devices, load_room_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

USAGE_ERRORS = (ConfigurationError, SeriesError, KnowledgeError, NetworkError,
                FileNotFoundError)


class UsageError(RuntimeError):
    pass


class SingleLevelFilter(logging.Filter):
    def __init__(self, passlevel, reject):
        self.passlevel = passlevel
        self.reject = reject

    def filter(self, record):
        if self.reject:
            return (record.levelno != self.passlevel)
        else:
            return (record.levelno == self.passlevel)


def configure_logging():
    """Send INFO records to stdout and everything else to stderr."""
    root_logger = logging.getLogger()
    if any(isinstance(f, SingleLevelFilter)
           for h in root_logger.handlers for f in h.filters):
        return
    h1 = logging.StreamHandler(sys.stdout)
    f1 = SingleLevelFilter(logging.INFO, False)
    h1.addFilter(f1)
    root_logger.addHandler(h1)
    h2 = logging.StreamHandler(sys.stderr)
    f2 = SingleLevelFilter(logging.INFO, True)
    h2.addFilter(f2)
    root_logger.addHandler(h2)
    root_logger.setLevel(logging.INFO)


class DriverArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# {{{ inputs

def read_input_file(path):
    """Read a ``run_params.yaml`` style mapping; *None* gives an empty one."""
    if path is None:
        logger.info("No user input file, using default values")
        return {}
    logger.info(f"Reading user input from {path}")
    try:
        with open(path) as f:
            input_data = yaml.load(f, Loader=yaml.FullLoader)
    except FileNotFoundError:
        raise ConfigurationError(f"No such input file: {path}") from None
    if input_data is None:
        return {}
    if not isinstance(input_data, dict):
        raise ConfigurationError(f"Input file {path} is not a mapping.")
    return input_data


def load_series(spec, seed=0):
    """Outdoor series from a CSV path or ``synthetic:<kind>[:<days>]``.

    A mapping ``{synthetic: {kind, days, mean, amplitude, noise}}`` or
    ``{csv: path}`` is accepted as well.
    """
    if isinstance(spec, dict):
        if "csv" in spec:
            return ingest_hourly_csv(spec["csv"], season=spec.get("season"))
        if "synthetic" in spec:
            params = dict(spec["synthetic"])
            return synthetic_series(params.pop("kind"),
                                    int(params.pop("days", 1)),
                                    seed=int(params.pop("seed", seed)), **params)
        raise ConfigurationError(f"Invalid series specification: {spec}")
    spec = str(spec)
    if spec.startswith("synthetic:"):
        parts = spec.split(":")
        days = int(parts[2]) if len(parts) > 2 else 7
        return synthetic_series(parts[1], days, seed=seed)
    if not os.path.exists(spec):
        raise ConfigurationError(f"No such series file: {spec}")
    return ingest_hourly_csv(spec)


def load_room(path):
    if path is None:
        return RoomConfig(), default_devices()
    if not os.path.exists(path):
        raise ConfigurationError(f"No such room file: {path}")
    return load_room_config(path)


def _reward_params(input_data):
    try:
        return RewardParams(**{k: float(v) for k, v in
                               (input_data.get("reward") or {}).items()})
    except TypeError as exc:
        raise ConfigurationError(f"Invalid reward parameters: {exc}") from None


def _log_control_data(title, values):
    logger.info(f"#### {title}: ####")
    for key, value in values.items():
        logger.info(f"\t{key} = {value}")
    logger.info(f"#### {title}: ####")

# }}}


# {{{ commands

def cmd_train(args, logmgr=None):
    """Train an agent; write the model file and its reward curve."""
    input_data = read_input_file(args.input_file)
    seed = resolve_seed(args.seed, input_data.get("seed"))
    agent_data = dict(input_data.get("agent") or {})
    if args.episodes is not None:
        agent_data["episodes"] = args.episodes
    cfg = AgentConfig.from_dict(agent_data)

    series_spec = args.series or input_data.get("series")
    if series_spec is None:
        raise ConfigurationError("No outdoor series given (--series).")
    series = load_series(series_spec, seed)
    room, devices = load_room(args.room or input_data.get("room"))
    space = build_action_space(devices)
    reward = _reward_params(input_data)

    _log_control_data("Training input", {
        "series": f"{series.id.label} ({len(series)} points)",
        "episodes": cfg.episodes, "seed": seed, "actions": space.size,
        "out": args.out})

    factory = make_env_factory(room, space, series.temperatures, reward, cfg)
    network, rewards = train(factory, cfg, seed, logmgr=logmgr)

    out_dir = os.path.dirname(args.out)
    if out_dir and not os.path.exists(out_dir):
        os.makedirs(out_dir)
    save_network(network, args.out)
    curve = args.reward_curve or os.path.splitext(args.out)[0] + "_rewards.csv"
    write_reward_curve(rewards, curve)
    logger.info(f"Wrote {args.out} (trained={network.trained}) and {curve}")
    return EXIT_OK


def cmd_eval(args, logmgr=None):
    """Greedy rollout of a stored model; write its trace and metrics."""
    input_data = read_input_file(args.input_file)
    seed = resolve_seed(args.seed, input_data.get("seed"))
    series_spec = args.series or input_data.get("series")
    if series_spec is None:
        raise ConfigurationError("No outdoor series given (--series).")
    series = load_series(series_spec, seed)
    room, devices = load_room(args.room or input_data.get("room"))
    space = build_action_space(devices)
    reward = _reward_params(input_data)
    cfg = AgentConfig.from_dict(input_data.get("agent"))

    network = load_network(args.model)
    if network.n_actions != space.size:
        raise NetworkError(
            f"Model {args.model} has {network.n_actions} actions but the "
            f"devices give {space.size}; expand the model to the current "
            "devices first.")

    factory = make_env_factory(room, space, series.temperatures, reward, cfg)
    result = evaluate(network, factory, args.steps, t_in=args.t_in,
                      offset=args.offset)

    out_dir = args.out_dir
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)
    write_trace_csv(result.trace, os.path.join(out_dir, "eval_trace.csv"))
    metrics = {"model": args.model, "steps": int(len(result.trace)),
               "cumulative_reward": result.cumulative_reward,
               "occupancy": result.occupancy,
               "total_energy_wh": result.total_energy_wh,
               "trained": network.trained}
    with open(os.path.join(out_dir, "eval_summary.yaml"), "w") as f:
        yaml.dump(metrics, f)
    logger.info(f"Evaluation: reward = {result.cumulative_reward:.3f}, "
                f"occupancy = {result.occupancy:.3f}")
    return EXIT_OK


def cmd_run(args, logmgr=None):
    """Run a scenario through the adaptation loop."""
    scenario = load_scenario(args.scenario)
    seed = resolve_seed(args.seed, scenario.seed)
    run_scenario(scenario, args.out_dir, seed=seed, logmgr=logmgr)
    logger.info(f"Wrote trace.csv, events.csv and summary.yaml to {args.out_dir}")
    return EXIT_OK

# }}}


def build_parser():
    parser = DriverArgumentParser(
        description="Self-adaptive HVAC control driver")
    parser.add_argument("-c", "--casename", dest="casename", action="store",
                        default="thermadapt", help="case name for log files")
    parser.add_argument("--log", action="store_true", default=False,
                        help="enable run logging [OFF]")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (falls back to REPTILE_SEED)")
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                             help="random seed, same as the global --seed")
    sub = parser.add_subparsers(dest="command", parser_class=DriverArgumentParser)

    p_train = sub.add_parser("train", parents=[seed_parent],
                             help="train an agent on an outdoor series")
    p_train.add_argument("-i", "--input_file", dest="input_file",
                         help="training parameter file")
    p_train.add_argument("--series", help="CSV file or synthetic:<kind>[:<days>]")
    p_train.add_argument("--episodes", type=int, default=None)
    p_train.add_argument("--room", help="room configuration file")
    p_train.add_argument("--out", required=True, help="model file to write")
    p_train.add_argument("--reward-curve", dest="reward_curve",
                         help="reward curve CSV [<out>_rewards.csv]")
    p_train.set_defaults(func=cmd_train)

    p_run = sub.add_parser("run", parents=[seed_parent],
                           help="run a scenario")
    p_run.add_argument("-i", "--scenario", required=True, dest="scenario",
                       help="scenario file")
    p_run.add_argument("--out-dir", dest="out_dir", default="run_data",
                       help="output directory [run_data]")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", parents=[seed_parent],
                            help="evaluate a stored model")
    p_eval.add_argument("-i", "--input_file", dest="input_file",
                        help="evaluation parameter file")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--series", help="CSV file or synthetic:<kind>[:<days>]")
    p_eval.add_argument("--steps", type=int, default=96)
    p_eval.add_argument("--room", help="room configuration file")
    p_eval.add_argument("--t-in", dest="t_in", type=float, default=None)
    p_eval.add_argument("--offset", type=int, default=0)
    p_eval.add_argument("--out-dir", dest="out_dir", default="eval_data")
    p_eval.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    """Parse *argv*, run the command and return the exit code."""
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a command is required (train, run or eval)")
    except UsageError as exc:
        logger.error(f"Usage error: {exc}")
        return EXIT_USAGE

    logmgr = initialize_logmgr(args.log,
                               filename=f"log_data/{args.casename}.sqlite")
    try:
        return args.func(args, logmgr)
    except USAGE_ERRORS as exc:
        logger.error(f"Error: {exc}")
        return EXIT_USAGE
    except Exception as exc:
        logger.error(f"Run failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    finally:
        if logmgr:
            logmgr.close()

# vim: foldmethod=marker
