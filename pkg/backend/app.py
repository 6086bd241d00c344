"""
MIIR - Aplicación principal Flask
API REST para cascadas de fallas por IDR y lista de K contingencias
"""

import json
import logging
from datetime import datetime

from flask import Flask, jsonify, request
from flask_cors import CORS

from src.algorithms.cascade import propagate_idr_cascade
from src.algorithms.contingency import (EvaluationMode, evaluate_initial_set, exhaustive_k_list, heuristic_k_list,
                                        wccp_evaluation)
from src.algorithms.reduction import Hypergraph, brute_force_densest_subhypergraph, build_kcol_from_hypergraph
from src.config import Settings
from src.data_sources.matpower_case import parse_matpower_case
from src.data_sources.network_file import network_from_dict, network_to_dict
from src.data_sources.snapshot import load_snapshot
from src.errors import MiirError
from src.network.builder import build_network
from src.network.dc_flow import solve_dc_flow
from src.optimization.lp_format import emit_lp
from src.optimization.mip_builder import MipOptions, build_fixed_initial_mip, build_mip
from src.utils.cache_manager import CacheManager
from src.utils.report_exporter import ReportExporter

settings = Settings.from_env()

# Configurar logging
logging.basicConfig(
    level=getattr(logging, settings.log_level, logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

app = Flask(__name__)
app.config['DEBUG'] = settings.debug
CORS(app)

cache_manager = CacheManager()
exporter = ReportExporter()


def _network_from_request():
    payload = request.get_json(silent=True)
    if not isinstance(payload, dict) or 'network' not in payload:
        raise MiirError("El cuerpo debe ser JSON con la clave 'network'")
    return payload, network_from_dict(payload['network'])


@app.route('/api/health')
def health_check():
    """Endpoint de verificación de salud del servicio"""
    return jsonify({
        'status': 'healthy',
        'timestamp': datetime.utcnow().isoformat(),
        'version': '1.0.0',
        'cache': cache_manager.stats(),
    })


@app.route('/api/networks/validate', methods=['POST'])
def validate_network():
    """Validar una red y devolver su resumen"""
    try:
        _, network = _network_from_request()
        return jsonify({
            'valid': True,
            'fingerprint': network.fingerprint(),
            'entities': len(network),
            'buses': len(network.buses()),
            'lines': len(network.lines()),
            'idrs': len(network.idrs),
            'minterms': network.minterm_count(),
        })
    except MiirError as e:
        return jsonify({'valid': False, 'error': str(e)}), 400


@app.route('/api/networks/build', methods=['POST'])
def build_from_case():
    """
    Construir una red desde un caso MATPOWER
    Cuerpo:
    - case: texto del archivo .m (requerido)
    - snapshot: objeto snapshot, o dc: true para calcularlo con flujo DC
    - unlimited_rating: cota para líneas sin rateA
    """
    try:
        payload = request.get_json(silent=True) or {}
        if 'case' not in payload:
            return jsonify({'error': "Falta la clave 'case'"}), 400
        case = parse_matpower_case(payload['case'])
        if payload.get('dc'):
            snap = solve_dc_flow(case)
        elif 'snapshot' in payload:
            snap = load_snapshot(json.dumps(payload['snapshot']), case)
        else:
            return jsonify({'error': "Indique 'snapshot' o 'dc'"}), 400
        network = build_network(case, snap, unlimited_rating=payload.get('unlimited_rating'))
        return jsonify({'network': network_to_dict(network), 'fingerprint': network.fingerprint()})
    except MiirError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error construyendo la red: {str(e)}")
        return jsonify({'error': 'Error interno del servidor'}), 500


@app.route('/api/cascade', methods=['POST'])
def run_cascade():
    """Cascada por IDR desde un conjunto inicial"""
    try:
        payload, network = _network_from_request()
        initial = payload.get('initial', [])
        cache_key = CacheManager.make_key(network.fingerprint(), initial=sorted(initial))
        cached_result = cache_manager.get(cache_key, section='timelines')
        if cached_result:
            return jsonify(cached_result)

        result = propagate_idr_cascade(network, initial)
        frame = exporter.timeline_frame(result)
        response = {
            'dead_count': len(result),
            'steps': result.steps,
            'timeline': frame.to_dict(orient='records'),
        }
        cache_manager.set(cache_key, response, section='timelines')
        return jsonify(response)
    except MiirError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error simulando la cascada: {str(e)}")
        return jsonify({'error': 'Error interno del servidor'}), 500


@app.route('/api/evaluate', methods=['POST'])
def evaluate_initial():
    """
    Caídas finales de un conjunto inicial fijo
    Cuerpo:
    - network (requerido), initial (requerido)
    - mode: idr | wccp (default: idr); en wccp se devuelve también la línea de tiempo del MIP
    - backend: builtin | highs (default: builtin)
    """
    try:
        payload, network = _network_from_request()
        if 'initial' not in payload:
            return jsonify({'error': "Falta la clave 'initial'"}), 400
        initial = sorted(payload['initial'])
        mode = EvaluationMode(payload.get('mode', 'idr'))
        backend = payload.get('backend', 'builtin')

        cache_key = CacheManager.make_key(network.fingerprint(), initial=initial, mode=mode.value, backend=backend)
        cached_result = cache_manager.get(cache_key, section='evaluations')
        if cached_result:
            logger.info("Devolviendo evaluación desde cache")
            return jsonify(cached_result)

        if mode is EvaluationMode.WCCP and initial:
            evaluation = wccp_evaluation(network, initial, backend=backend, time_limit=settings.time_limit)
            result = {
                'dead_count': evaluation.dead_count,
                'status': evaluation.solution.status.value,
                'timeline': exporter.timeline_frame(evaluation.timeline).to_dict(orient='records'),
            }
        else:
            result = {'dead_count': evaluate_initial_set(network, initial, mode)}
        result.update(initial=initial, mode=mode.value)
        cache_manager.set(cache_key, result, section='evaluations')
        return jsonify(result)
    except (MiirError, ValueError) as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error evaluando el conjunto inicial: {str(e)}")
        return jsonify({'error': 'Error interno del servidor'}), 500


@app.route('/api/contingency', methods=['POST'])
def run_contingency():
    """
    Lista de K contingencias
    Cuerpo:
    - network (requerido), k (requerido)
    - method: heuristic | exact (default: heuristic)
    - mode: idr | wccp (default: idr)
    - backend: builtin | highs (default: builtin)
    """
    try:
        payload, network = _network_from_request()
        if 'k' not in payload:
            return jsonify({'error': "Falta la clave 'k'"}), 400
        k = int(payload['k'])
        method = payload.get('method', 'heuristic')
        mode = EvaluationMode(payload.get('mode', 'idr'))
        backend = payload.get('backend', 'builtin')

        cache_key = CacheManager.make_key(network.fingerprint(), k=k, method=method, mode=mode.value,
                                          backend=backend)
        cached_result = cache_manager.get(cache_key)
        if cached_result:
            logger.info("Devolviendo resultado desde cache")
            return jsonify(cached_result)

        if method == 'heuristic':
            report = heuristic_k_list(network, k, evaluate_wccp=mode is EvaluationMode.WCCP, backend=backend,
                                      time_limit=settings.time_limit, n_jobs=settings.threads)
        elif method == 'exact':
            report = exhaustive_k_list(network, k, mode, budget=settings.enumeration_budget, backend=backend,
                                       time_limit=settings.time_limit, n_jobs=settings.threads)
        else:
            return jsonify({'error': f"Método desconocido: {method}"}), 400

        result = report.to_dict()
        cache_manager.set(cache_key, result)
        return jsonify(result)
    except (MiirError, ValueError) as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        logger.error(f"Error resolviendo la lista de contingencias: {str(e)}")
        return jsonify({'error': 'Error interno del servidor'}), 500


@app.route('/api/kill-sets', methods=['POST'])
def kill_set_table():
    """Tamaño de Kill Set y FMHV de cada entidad"""
    try:
        _, network = _network_from_request()
        return jsonify({'kill_sets': exporter.kill_set_frame(network).to_dict(orient='records')})
    except MiirError as e:
        return jsonify({'error': str(e)}), 400


@app.route('/api/export-lp', methods=['POST'])
def export_lp():
    """Modelo en formato LP para K fallas (k) o un conjunto inicial fijo (initial)"""
    try:
        payload, network = _network_from_request()
        options = MipOptions(paper_literal=bool(payload.get('paper_literal', False)))
        if 'initial' in payload:
            model = build_fixed_initial_mip(network, payload['initial'], options)
        elif 'k' in payload:
            model = build_mip(network, int(payload['k']), options)
        else:
            return jsonify({'error': "Indique 'k' o 'initial'"}), 400
        return app.response_class(emit_lp(model), mimetype='text/plain')
    except (MiirError, ValueError) as e:
        return jsonify({'error': str(e)}), 400


@app.route('/api/reduce', methods=['POST'])
def reduce_hypergraph():
    """Instancia de KCoL de un hipergrafo y su óptimo de fuerza bruta"""
    try:
        payload = request.get_json(silent=True) or {}
        if 'edges' not in payload or 'p' not in payload:
            return jsonify({'error': "Faltan las claves 'edges' y 'p'"}), 400
        hypergraph = Hypergraph.of(payload['edges'])
        p = int(payload['p'])
        result = build_kcol_from_hypergraph(hypergraph, p, payload.get('generator_bound', 'per_edge'))
        vertices, covered = brute_force_densest_subhypergraph(hypergraph, p, settings.enumeration_budget)
        return jsonify({
            'network': network_to_dict(result.network),
            'k': result.k,
            'densest': {'vertices': vertices, 'covered_edges': covered, 'target': result.target(covered)},
        })
    except (MiirError, ValueError) as e:
        return jsonify({'error': str(e)}), 400


@app.errorhandler(404)
def not_found(error):
    return jsonify({'error': 'Recurso no encontrado'}), 404


@app.errorhandler(500)
def internal_error(error):
    logger.error(f"Error interno: {str(error)}")
    return jsonify({'error': 'Error interno del servidor'}), 500


if __name__ == '__main__':
    logger.info(f"Iniciando MIIR API en el puerto {settings.port}")
    logger.info(f"Modo debug: {settings.debug}")
    app.run(host='0.0.0.0', port=settings.port, debug=settings.debug)
