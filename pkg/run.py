#!/usr/bin/env python
"""Main entry point for the assembly-line balancing toolkit."""

import argparse
import json
import logging
import os
import sys

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler('galbp.log', encoding='utf-8')
        ]
    )


def emit(frame: pd.DataFrame, out: str = None, filename: str = None):
    """Write a table to `out` (file or directory) or print it as CSV."""
    if not out:
        print(frame.to_csv(index=False), end='')
        return
    path = out
    if filename and (os.path.isdir(out) or not os.path.splitext(out)[1]):
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, filename)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {path}")


def emit_json(data: dict, out: str = None, filename: str = None):
    if not out:
        print(json.dumps(data, indent=2))
        return
    path = out
    if filename and (os.path.isdir(out) or not os.path.splitext(out)[1]):
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, filename)
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(data, fh, indent=2)
    logger.info(f"Wrote {path}")


def schedule_frame(assignments) -> pd.DataFrame:
    """(clock, workstation, task) rows with 1-based workstation and task numbers."""
    return pd.DataFrame(
        [(clock, i + 1, j + 1) for clock, i, j in assignments],
        columns=['clock', 'workstation', 'task'],
    )


def load_overrides(args) -> dict:
    overrides = {}
    if args.config:
        with open(args.config, encoding='utf-8') as fh:
            overrides.update(json.load(fh))
    if getattr(args, 'tau', None) is not None:
        overrides['soft_update'] = args.tau
    if getattr(args, 'entropy', None) is not None:
        overrides['entropy_coef'] = args.entropy
    return overrides


def run_enumerate(args):
    from src.factory import load_instance
    from src.services.report_service import action_space_table

    config = load_instance(args.instance)
    emit(action_space_table(config), args.out, 'action_space.csv')


def run_solve(args):
    from src.database.db import get_db
    from src.factory import load_instance
    from src.services.data_service import DataService
    from src.solver import solve

    config = load_instance(args.instance)
    result = solve(config)
    with get_db().session() as session:
        DataService(session).save_solve(config.name, result)
    emit_json({
        'instance': config.name,
        'k_opt': result.k_opt,
        'feasible': result.feasible,
        'nodes_expanded': result.nodes_expanded,
        'elapsed': result.elapsed,
    }, args.out, 'solve.json')
    if result.feasible:
        emit(schedule_frame(result.assignments()), args.out, 'schedule.csv')


def run_train(args):
    from src.database.db import get_db
    from src.services.experiment_service import RunManifest, episode_budget, run_training

    manifest = RunManifest(
        instance=args.instance,
        algorithm=args.algo,
        mode=args.mode,
        masking=args.mask == 'on',
        seeds=args.seed,
        episodes=args.episodes if args.episodes is not None else episode_budget(),
        output_dir=args.out or 'runs',
        agent_overrides=load_overrides(args),
        penalty=args.penalty,
    )
    results = run_training(manifest, db=get_db())
    for r in results:
        logger.info(f"Seed {r.seed}: convergence episode {r.convergence_episode}, "
                    f"best k_end {r.best_k_end}, metrics {r.metrics_path}")


def run_evaluate(args):
    from src.factory import load_instance
    from src.services.evaluation_service import load_trainer

    config = load_instance(args.instance)
    trainer = load_trainer(args.checkpoint, config)
    rollout = trainer.rollout()
    emit_json({
        'instance': config.name,
        'k_end': rollout.k_end,
        'finished': rollout.finished,
        'reward': rollout.reward,
        'inference_seconds': rollout.elapsed,
    }, args.out, 'evaluation.json')
    emit(schedule_frame(rollout.assignments()), args.out, 'schedule.csv')


def run_robustness(args):
    from src.factory import load_instance
    from src.services.evaluation_service import load_trainer, robustness_test

    config = load_instance(args.instance)
    trainer = load_trainer(args.checkpoint, config)
    rng = np.random.default_rng(args.seed[0])
    report = robustness_test(trainer, config, args.samples, rng, max_depth=args.max_depth)
    emit(report.to_frame(), args.out, 'robustness.csv')
    emit_json(report.summary(), args.out, 'robustness.json')


def run_mask_check(args):
    from src.factory import load_instance
    from src.services.report_service import mask_check

    config = load_instance(args.instance)
    stats = mask_check(config, args.states, seed=args.seed[0])
    emit_json(stats, args.out, 'mask_check.json')
    if stats['discrepancies']:
        sys.exit(1)


def run_growth(args):
    from src.services.report_service import growth_report

    profile = [int(c) for c in args.occupancy.split(',')]
    emit(growth_report(args.max_tasks, profile), args.out, 'growth.csv')


def run_compare(args):
    from src.services.experiment_service import compare_runs

    emit(compare_runs(args.runs), args.out, 'comparison.csv')


def run_web(host: str = '127.0.0.1', port: int = 5000, debug: bool = False):
    """Run the journal API."""
    from src.web import create_app

    app = create_app()
    logger.info(f"Starting web server at http://{host}:{port}")
    app.run(host=host, port=port, debug=debug, threaded=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Assembly-line balancing with masked RL')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    def instance_command(name, help_text):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument('--instance', required=True, help='Instance JSON file')
        sub.add_argument('--out', help='Output file or directory (default: stdout)')
        sub.add_argument('--seed', type=int, nargs='+', default=[0], help='Seed(s)')
        return sub

    instance_command('enumerate', 'Action-space sizes for an instance')
    instance_command('solve', 'Exact optimum and certificate schedule')

    train = instance_command('train', 'Train agents')
    train.add_argument('--algo', choices=['dqn', 'ppo'], default='ppo')
    train.add_argument('--mode', choices=['central', 'multi'], default='central')
    train.add_argument('--mask', choices=['on', 'off'], default='on')
    train.add_argument('--episodes', type=int, help='Episode budget (env GALBP_EPISODES)')
    train.add_argument('--config', help='JSON file with agent hyperparameter overrides')
    train.add_argument('--tau', type=float, help='DQN soft-update weight')
    train.add_argument('--entropy', type=float, help='PPO entropy coefficient')
    train.add_argument('--penalty', type=float, default=-1.0,
                       help='Reward for infeasible actions when masking is off')

    evaluate = instance_command('evaluate', 'Greedy rollout of a checkpoint')
    evaluate.add_argument('--checkpoint', required=True)

    robustness = instance_command('robustness', 'Optimality from random reachable states')
    robustness.add_argument('--checkpoint', required=True)
    robustness.add_argument('--samples', type=int, default=200)
    robustness.add_argument('--max-depth', type=int, default=5)

    mask = instance_command('mask-check', 'Mask soundness/completeness sweep')
    mask.add_argument('--states', type=int, default=10000)

    growth = subparsers.add_parser('growth', help='Action-space growth with |J|')
    growth.add_argument('--max-tasks', type=int, default=10)
    growth.add_argument('--occupancy', default='1,3,1', help='Comma-separated caps')
    growth.add_argument('--out', help='Output file or directory (default: stdout)')

    compare = subparsers.add_parser('compare', help='Convergence comparison of finished runs')
    compare.add_argument('--runs', nargs='+', required=True, help='Run output directories')
    compare.add_argument('--out', help='Output file or directory (default: stdout)')

    web = subparsers.add_parser('web', help='Run journal API')
    web.add_argument('--host', default='127.0.0.1', help='Host to bind to')
    web.add_argument('--port', type=int, default=5000, help='Port to bind to')
    web.add_argument('--debug', action='store_true', help='Enable debug mode')
    return parser


COMMANDS = {
    'enumerate': run_enumerate,
    'solve': run_solve,
    'train': run_train,
    'evaluate': run_evaluate,
    'robustness': run_robustness,
    'mask-check': run_mask_check,
    'growth': run_growth,
    'compare': run_compare,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    if args.command == 'web':
        run_web(args.host, args.port, args.debug)
        return
    if args.command not in COMMANDS:
        parser.print_help()
        sys.exit(2)

    from src.actions import ActionSpaceTooLarge
    from src.factory import FeasibilityViolation, InstanceValidationError
    from src.solver import SearchBudgetExceeded

    try:
        COMMANDS[args.command](args)
    except InstanceValidationError as e:
        logger.error(f"Invalid instance: {e}")
        for problem in e.problems:
            logger.error(f"  {problem}")
        sys.exit(1)
    except (ActionSpaceTooLarge, SearchBudgetExceeded, FeasibilityViolation,
            FileNotFoundError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        sys.exit(1)


if __name__ == '__main__':
    main()
