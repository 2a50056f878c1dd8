"""Flask JSON API over the run journal."""

import json
import os
import logging
from flask import Flask, jsonify, request

from src.database.db import Database
from src.factory.config import InstanceValidationError, load_instance
from src.services.data_service import DataService
from src.services.report_service import action_space_table

logger = logging.getLogger(__name__)

# Global instances
db: Database = None
instances_dir: str = None


def create_app(db_path: str = None, instance_dir: str = None) -> Flask:
    """Create and configure Flask application."""
    global db, instances_dir

    app = Flask(__name__)

    db = Database(db_path)

    if instance_dir is None:
        project_root = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
        instance_dir = os.path.join(project_root, 'instances')
    instances_dir = instance_dir

    register_routes(app)
    return app


def _run_dict(run) -> dict:
    return {
        'id': run.id,
        'instance': run.instance,
        'algorithm': run.algorithm,
        'mode': run.mode,
        'masking': run.masking,
        'seed': run.seed,
        'episode_budget': run.episode_budget,
        'k_opt': run.k_opt,
        'convergence_episode': run.convergence_episode,
        'best_k_end': run.best_k_end,
        'sfc_invocations': run.sfc_invocations,
        'infeasible_executed': run.infeasible_executed,
        'status': run.status,
        'output_dir': run.output_dir,
        'started_at': run.started_at.isoformat() if run.started_at else None,
        'finished_at': run.finished_at.isoformat() if run.finished_at else None,
    }


def register_routes(app: Flask):
    """Register all routes."""

    @app.route('/api/stats')
    def api_stats():
        """Get journal statistics."""
        with db.session() as session:
            stats = DataService(session).get_stats()
        return jsonify(stats)

    @app.route('/api/runs')
    def api_runs():
        instance = request.args.get('instance')
        with db.session() as session:
            runs = [_run_dict(r) for r in DataService(session).list_runs(instance)]
        return jsonify({'runs': runs, 'total': len(runs)})

    @app.route('/api/runs/<int:run_id>')
    def api_run_detail(run_id):
        with db.session() as session:
            run = DataService(session).get_run(run_id)
            if not run:
                return jsonify({'error': 'Run not found'}), 404
            result = _run_dict(run)
            result['config'] = json.loads(run.config_json) if run.config_json else None
        return jsonify(result)

    @app.route('/api/runs/<int:run_id>/episodes')
    def api_run_episodes(run_id):
        """Per-episode metrics, optionally paged with ?offset=&limit=."""
        offset = request.args.get('offset', 0, type=int)
        limit = request.args.get('limit', 1000, type=int)
        with db.session() as session:
            run = DataService(session).get_run(run_id)
            if not run:
                return jsonify({'error': 'Run not found'}), 404
            episodes = [{
                'episode': e.episode,
                'k_end': e.k_end,
                'reward': e.reward,
                'finished': e.finished,
                'losses': json.loads(e.losses_json) if e.losses_json else {},
                'exploration': e.exploration,
                'sfc_invocations': e.sfc_invocations,
                'wall_clock': e.wall_clock,
            } for e in run.episodes[offset:offset + limit]]
            total = len(run.episodes)
        return jsonify({'episodes': episodes, 'total': total})

    @app.route('/api/solves')
    def api_solves():
        with db.session() as session:
            solves = [{
                'id': s.id,
                'instance': s.instance,
                'k_opt': s.k_opt,
                'feasible': s.feasible,
                'nodes_expanded': s.nodes_expanded,
                'start_clock': s.start_clock,
                'elapsed': s.elapsed,
            } for s in DataService(session).list_solves()]
        return jsonify({'solves': solves, 'total': len(solves)})

    @app.route('/api/instances/<name>/action-space')
    def api_action_space(name):
        path = os.path.join(instances_dir, f'{os.path.basename(name)}.json')
        if not os.path.exists(path):
            return jsonify({'error': 'Instance not found'}), 404
        try:
            config = load_instance(path)
        except InstanceValidationError as e:
            return jsonify({'error': str(e), 'problems': e.problems}), 400
        table = action_space_table(config)
        # counts can exceed 64 bits, send them as strings
        counts = {row.formula: str(row.value) for row in table.itertuples()}
        return jsonify({'instance': config.name, 'counts': counts})
