#!/usr/bin/env python3
"""
Línea de comandos MIIR: construcción de redes, cascadas, lista de K contingencias y MIP
"""

import json
import logging
import sys
from dataclasses import dataclass, field
from functools import wraps
from typing import List, Optional, Sequence

import click

from src.algorithms.cascade import propagate_idr_cascade
from src.algorithms.contingency import EvaluationMode, heuristic_k_list, sweep_k
from src.algorithms.reduction import build_kcol_from_hypergraph, read_hypergraph_file
from src.config import Settings
from src.data_sources.matpower_case import read_case_file
from src.data_sources.network_file import read_network_file, write_network_file
from src.data_sources.snapshot import read_snapshot_file
from src.errors import ConfigurationError, MiirError
from src.network.builder import build_network
from src.network.dc_flow import solve_dc_flow
from src.network.model import PowerNetwork
from src.optimization.branch_and_bound import BACKENDS, solve_mip
from src.optimization.lp_format import emit_lp, format_solution, parse_solution, write_lp_file
from src.optimization.mip_builder import MipOptions, build_fixed_initial_mip, build_mip, cascade_assignment
from src.optimization.verification import extract_timeline, verify_solution
from src.utils.report_exporter import ReportExporter

logger = logging.getLogger('miir')

EXIT_INPUT_ERROR = 2
EXIT_VERIFICATION_FAILED = 3


@dataclass
class RunConfig:
    """Opciones de una corrida; se validan antes de leer cualquier archivo"""
    subcommand: str
    k: Optional[int] = None
    initial: List[str] = field(default_factory=list)
    method: str = 'heuristic'
    mode: str = 'idr'
    time_limit: float = 60.0
    backend: str = 'builtin'
    threads: int = 1
    paper_literal: bool = False
    strict: bool = False

    def validate(self) -> None:
        if self.subcommand in ('export-lp', 'solve', 'verify-solution'):
            if (self.k is None) == (not self.initial):
                raise ConfigurationError("Indique exactamente uno de --k o --initial")
        if self.k is not None and self.k < 0:
            raise ConfigurationError("--k debe ser no negativo")
        if self.time_limit <= 0:
            raise ConfigurationError("--time-limit debe ser positivo")
        if self.threads < 1 and self.threads != -1:
            raise ConfigurationError("--threads debe ser >= 1 (o -1 para todos los núcleos)")
        if self.mode == 'wccp' and self.backend not in BACKENDS:
            raise ConfigurationError(f"--mode wccp necesita un backend de resolución ({', '.join(BACKENDS)})")

    def mip_options(self) -> MipOptions:
        return MipOptions(paper_literal=self.paper_literal)


def handle_errors(command):
    """Traducir errores de la librería a código de salida 2 con diagnóstico en stderr"""
    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except MiirError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except OSError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
    return wrapper


def split_ids(values: Sequence[str]) -> List[str]:
    """Aceptar ids repetidos (--initial A --initial B) o separados por comas"""
    ids = []
    for value in values:
        ids.extend(part.strip() for part in value.split(',') if part.strip())
    return ids


def _build_model(network: PowerNetwork, config: RunConfig):
    if config.initial:
        return build_fixed_initial_mip(network, config.initial, config.mip_options())
    return build_mip(network, config.k, config.mip_options())


mip_options = [
    click.option('--k', 'k', type=int, help='Número de fallas iniciales'),
    click.option('--initial', multiple=True, help='Conjunto inicial fijo (ids separados por comas)'),
    click.option('--paper-literal', is_flag=True, help='Invertir el signo de la restricción línea <= bus origen'),
]


def with_mip_options(command):
    for option in reversed(mip_options):
        command = option(command)
    return command


@click.group()
@click.option('--log-level', default=None, help='Nivel de logging (por defecto LOG_LEVEL o INFO)')
@click.pass_context
def cli(ctx, log_level):
    """Herramientas MIIR para cascadas de fallas y lista de K contingencias"""
    settings = Settings.from_env()
    logging.basicConfig(
        level=getattr(logging, (log_level or settings.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True,
    )
    ctx.obj = settings


@cli.command()
@click.option('--case', 'case_path', required=True, type=click.Path(exists=True), help='Archivo de caso MATPOWER')
@click.option('--snapshot', 'snapshot_path', type=click.Path(exists=True), help='Snapshot JSON de la medición')
@click.option('--dc', is_flag=True, help='Calcular el snapshot con flujo DC en lugar de leerlo')
@click.option('--unlimited-rating', type=float, help='Cota para líneas con rateA = 0')
@click.option('-o', '--output', required=True, type=click.Path(), help='Archivo de red de salida')
@handle_errors
def build(case_path, snapshot_path, dc, unlimited_rating, output):
    """Construir una red MIIR desde un caso y un snapshot"""
    if bool(snapshot_path) == dc:
        raise ConfigurationError("Indique exactamente uno de --snapshot o --dc")
    case = read_case_file(case_path)
    snap = solve_dc_flow(case) if dc else read_snapshot_file(snapshot_path, case)
    network = build_network(case, snap, unlimited_rating=unlimited_rating)
    write_network_file(network, output)
    click.echo(f"{len(network)} entidades, {len(network.idrs)} IDRs -> {output}")


@cli.command()
@click.argument('network_path', type=click.Path(exists=True))
@click.option('--initial', multiple=True, required=True, help='Entidades que fallan en t = 0')
@click.option('--json', 'as_json', is_flag=True, help='Salida JSON en lugar de filas separadas por tabulador')
@handle_errors
def cascade(network_path, initial, as_json):
    """Simular la cascada por IDR e imprimir (paso, entidad)"""
    network = read_network_file(network_path)
    result = propagate_idr_cascade(network, split_ids(initial))
    if as_json:
        failed_at = {entity: step for step, entity in result.timeline()}
        click.echo(json.dumps({'failed_at': failed_at, 'steps': result.steps, 'dead_count': len(result)}, indent=2))
        return
    for step, entity in result.timeline():
        click.echo(f"{step}\t{entity}")


@cli.command()
@click.argument('network_path', type=click.Path(exists=True))
@click.option('--k', 'ks', type=int, multiple=True, required=True, help='K (repetible para un barrido)')
@click.option('--method', type=click.Choice(['heuristic', 'exact']), default='heuristic', show_default=True)
@click.option('--mode', type=click.Choice([m.value for m in EvaluationMode]), default='idr', show_default=True)
@click.option('--backend', type=click.Choice(BACKENDS), default='builtin', show_default=True)
@click.option('--time-limit', type=float, help='Segundos por MIP (por defecto MIIR_TIME_LIMIT)')
@click.option('--threads', type=int, help='Hilos para Kill Sets y enumeración (por defecto MIIR_THREADS)')
@click.option('--budget', type=int, help='Máximo de conjuntos a enumerar (por defecto MIIR_ENUMERATION_BUDGET)')
@click.option('--gnuplot', 'gnuplot_path', type=click.Path(), help='Datos caídas vs. K para gnuplot')
@click.option('--table', is_flag=True, help='Filas separadas por tabulador: K, método, caídas, tiempo')
@click.option('--progress', is_flag=True, help='Barra de progreso de la enumeración')
@click.pass_obj
@handle_errors
def contingency(settings, network_path, ks, method, mode, backend, time_limit, threads, budget,
                gnuplot_path, table, progress):
    """Resolver la lista de K contingencias"""
    config = RunConfig('contingency', k=ks[0], method=method, mode=mode, backend=backend,
                       time_limit=time_limit or settings.time_limit, threads=threads or settings.threads)
    for k in ks:
        RunConfig('contingency', k=k).validate()
    config.validate()
    network = read_network_file(network_path)
    evaluation = EvaluationMode(mode)
    common = dict(backend=config.backend, time_limit=config.time_limit, n_jobs=config.threads)
    if method == 'exact':
        common.update(budget=budget or settings.enumeration_budget, progress=progress)
    reports = sweep_k(network, ks, method=method, mode=evaluation, **common)

    exporter = ReportExporter()
    if table:
        click.echo(exporter.table_rows(reports), nl=False)
    else:
        for report in reports:
            click.echo(json.dumps(report.to_dict(), indent=2, ensure_ascii=False))
    if gnuplot_path:
        with open(gnuplot_path, 'w', encoding='utf-8') as handle:
            handle.write(exporter.gnuplot_data(reports))


@cli.command('export-lp')
@click.argument('network_path', type=click.Path(exists=True))
@with_mip_options
@click.option('-o', '--output', type=click.Path(), help='Archivo LP (por defecto stdout)')
@handle_errors
def export_lp(network_path, k, initial, paper_literal, output):
    """Escribir el MIP en formato LP"""
    config = RunConfig('export-lp', k=k, initial=split_ids(initial), paper_literal=paper_literal)
    config.validate()
    model = _build_model(read_network_file(network_path), config)
    if output:
        write_lp_file(model, output)
        click.echo(f"{model.n_vars} variables, {len(model.constraints)} restricciones -> {output}")
    else:
        click.echo(emit_lp(model), nl=False)


@cli.command()
@click.argument('network_path', type=click.Path(exists=True))
@with_mip_options
@click.option('--time-limit', type=float, help='Segundos (por defecto MIIR_TIME_LIMIT)')
@click.option('--backend', type=click.Choice(BACKENDS), default='builtin', show_default=True)
@click.option('-o', '--output', type=click.Path(), help='Archivo de solución')
@click.option('--timeline', is_flag=True, help='Imprimir la línea de tiempo recuperada')
@click.pass_obj
@handle_errors
def solve(settings, network_path, k, initial, paper_literal, time_limit, backend, output, timeline):
    """Resolver el MIP con el branch-and-bound propio o HiGHS"""
    config = RunConfig('solve', k=k, initial=split_ids(initial), paper_literal=paper_literal,
                       time_limit=time_limit or settings.time_limit, backend=backend)
    config.validate()
    network = read_network_file(network_path)
    model = _build_model(network, config)
    # incumbente inicial: la cascada del conjunto fijo o del que elige la heurística
    seed = config.initial or heuristic_k_list(network, config.k).chosen
    solution = solve_mip(model, time_limit=config.time_limit, backend=config.backend,
                         start=cascade_assignment(model, network, seed))
    gap = solution.gap
    click.echo(f"status\t{solution.status.value}")
    click.echo(f"objective\t{solution.objective_value:g}")
    click.echo(f"gap\t{gap:g}" if gap is not None else "gap\t-")
    if timeline and solution.assignment:
        for step, entity in extract_timeline(model, solution).timeline():
            click.echo(f"{step}\t{entity}")
    if output:
        with open(output, 'w', encoding='utf-8') as handle:
            handle.write(format_solution(model, solution))


@cli.command('verify-solution')
@click.argument('network_path', type=click.Path(exists=True))
@click.argument('solution_path', type=click.Path(exists=True))
@with_mip_options
@click.option('--strict', is_flag=True, help='Añadir las reglas de falla de la cascada')
@handle_errors
def verify_solution_command(network_path, solution_path, k, initial, paper_literal, strict):
    """Verificar un archivo de solución contra el MIP; código 3 si hay violaciones"""
    config = RunConfig('verify-solution', k=k, initial=split_ids(initial), paper_literal=paper_literal, strict=strict)
    config.validate()
    network = read_network_file(network_path)
    model = _build_model(network, config)
    with open(solution_path, 'r', encoding='utf-8') as handle:
        solution = parse_solution(handle.read(), model)
    report = verify_solution(model, solution, network=network, strict=strict)
    click.echo(report.summary())
    if not report.passed:
        sys.exit(EXIT_VERIFICATION_FAILED)


@cli.command()
@click.argument('hypergraph_path', type=click.Path(exists=True))
@click.option('--p', 'p', type=int, required=True, help='Tamaño del subconjunto de vértices (K)')
@click.option('--generator-bound', type=click.Choice(['per_edge', 'total']), default='per_edge', show_default=True)
@click.option('-o', '--output', required=True, type=click.Path(), help='Archivo de red de salida')
@handle_errors
def reduce(hypergraph_path, p, generator_bound, output):
    """Construir la instancia de KCoL de un hipergrafo"""
    result = build_kcol_from_hypergraph(read_hypergraph_file(hypergraph_path), p, generator_bound)
    write_network_file(result.network, output)
    click.echo(f"K = {result.k}; S(M) = {result.k} + M; {len(result.network)} entidades -> {output}")


@cli.command('kill-sets')
@click.argument('network_path', type=click.Path(exists=True))
@click.option('-o', '--output', type=click.Path(), help='CSV, JSON o TSV según la extensión')
@handle_errors
def kill_sets(network_path, output):
    """Tabla de tamaños de Kill Set y FMHV"""
    frame = ReportExporter().kill_set_frame(read_network_file(network_path))
    if output:
        ReportExporter().write(frame, output)
    else:
        click.echo(frame.to_csv(sep='\t', index=False), nl=False)


if __name__ == '__main__':
    cli()
