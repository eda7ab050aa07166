# -*- coding: utf-8 -*-

from typing import Callable, Optional
from functools import wraps
from pathlib import Path
import logging

import click
from omegaconf import OmegaConf
from pydantic import ValidationError
from rich.logging import RichHandler

from .config import ConfigError, config, config_paths
from .constants import CLI_NAME, CONFIG_ENV, ExitCode
from .errors import (
    ArtifactError,
    CcstatError,
    DomainError,
    GateError,
    InfeasibleProblemError,
    InsufficientSamplesError,
)
from .experiment import (
    SUMMARY_CSV,
    CertifySettings,
    ExperimentConfig,
    GenerateSamples,
    Method,
    SampleSource,
    bound_table,
    compare,
    load_experiment,
    load_model,
    make_cwh,
    run,
    write_bound_rows,
    write_bound_table,
    write_summary,
)
from .fmt import print_certification, print_summary, print_thresholds, print_validation, styled_text
from .models import read_document, write_document
from .problem import load_problem
from .solver import Solution, SolveStatus
from .verify import certify, validate_in_sample, validate_out_of_sample, write_certification_csv, write_validation_csv
from .version import package_version


cli_cfg = config.cli
cli_styles = config.console.styles

method_options = tuple(item.value for item in Method)  # noqa


def fail(ctx: click.Context, message: str, err: Optional[Exception] = None, code: ExitCode = ExitCode.error):
    """Print an error message and exit with the given code
    """

    message = f'{message}: {err}' if err else message
    styled_message = styled_text(message, cli_styles.error, rendered=True)

    click.echo(styled_message, err=True)
    ctx.exit(int(code))


def warn(message: str):
    """Print a warning message
    """

    styled_message = styled_text(message, cli_styles.warning, rendered=True)
    click.echo(styled_message, err=True)


def exit_code(err: Exception) -> ExitCode:
    if isinstance(err, InfeasibleProblemError):
        return ExitCode.infeasible
    if isinstance(err, GateError):
        return ExitCode.gate
    if isinstance(err, (ArtifactError, ConfigError, OSError)):
        return ExitCode.io
    return ExitCode.error


def handle_errors(command: Callable) -> Callable:
    """Map library errors to exit codes
    """

    @wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except InsufficientSamplesError as err:
            fail(ctx, f"{err}. Rerun with at least {err.required} samples (e.g. --samples {err.required})",
                 code=ExitCode.gate)
        except (CcstatError, ConfigError, OSError) as err:
            fail(ctx, type(err).__name__, err=err, code=exit_code(err))
        except ValidationError as err:
            fail(ctx, "Invalid options", err=err)

    return wrapper


def setup_logging(verbose: int):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format='%(message)s', datefmt='[%X]',
                        handlers=[RichHandler(rich_tracebacks=True)], force=True)


def solution_exit(ctx: click.Context, status: SolveStatus):
    if status == SolveStatus.infeasible:
        ctx.exit(int(ExitCode.infeasible))


@click.group(name=CLI_NAME)
@click.version_option(version=package_version(), prog_name=CLI_NAME)
@click.option('-v', '--verbose', count=True, help='Log progress (-v) or debug details (-vv)')
@click.pass_context
def cli(ctx: click.Context, verbose: int):
    """Chance-constrained open-loop trajectory planning with sample statistics
    """

    ctx.ensure_object(dict)
    setup_logging(verbose)


config_help = f"""
Configuration management

The user config file is here:

{config_paths.user_path}

A file named by {CONFIG_ENV} is merged last.
"""


@cli.group(name='config', help=config_help)
def cli_config():
    pass


@cli_config.command(name='show')
def show_config():
    """Show the merged configuration and its source files
    """

    click.echo(OmegaConf.to_yaml(config), nl=False)


def _sample_source(samples: str, model: Optional[Path], seed: Optional[int]) -> SampleSource:
    if samples.isdigit():
        if model is None:
            raise DomainError("--model is required to generate samples")
        return SampleSource(generate=GenerateSamples(model=model, count=int(samples), seed=seed))
    return SampleSource(load=Path(samples))


@cli.command(name='solve')
@click.option('-p', '--problem', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Problem JSON file')
@click.option('-m', '--method', type=click.Choice(method_options), default=cli_cfg.solve.method, show_default=True,
              help='Planning method')
@click.option('-s', '--samples', type=str, default=str(cli_cfg.solve.samples), show_default=True,
              help='Number of samples to draw from --model, or a sample file (.bin or .csv)')
@click.option('--model', type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help='Disturbance model JSON used to draw samples, by OSVPI and for certification')
@click.option('--seed', type=int, default=cli_cfg.solve.seed, show_default=True, help='Sample generation seed')
@click.option('-t', '--trials', type=int, default=config.verify.trials, show_default=True,
              help='Certification trials (0 disables certification)')
@click.option('--certify-seed', type=int, default=config.verify.seed, show_default=True, help='Certification seed')
@click.option('-o', '--out', type=click.Path(file_okay=False, path_type=Path), required=True,
              help='Output directory')
@click.pass_context
@handle_errors
def solve_command(ctx: click.Context, problem: Path, method: str, samples: str, model: Optional[Path], seed: int,
                  trials: int, certify_seed: int, out: Path):
    """Solve a problem with one method, certify it and write artifacts
    """

    method = Method(method)
    source = None if method == Method.osvpi else _sample_source(samples, model, seed)
    certify_settings = CertifySettings(trials=trials, seed=certify_seed, model=model) if trials > 0 else None

    cfg = ExperimentConfig(problem=problem, method=method, samples=source, model=model,
                           certify=certify_settings, output=out)
    result = run(cfg)

    print_summary([result.summary])
    if result.report is not None:
        print_certification(result.report)

    solution_exit(ctx, result.solution.status)


@cli.command(name='run')
@click.argument('experiment', type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
@handle_errors
def run_command(ctx: click.Context, experiment: Path):
    """Run an experiment config (YAML or JSON)
    """

    result = run(load_experiment(experiment))
    print_summary([result.summary])
    solution_exit(ctx, result.solution.status)


@cli.command(name='certify')
@click.option('-p', '--problem', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Problem JSON file')
@click.option('--solution', 'solution_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help='Solution JSON file')
@click.option('--model', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Disturbance model JSON')
@click.option('-t', '--trials', type=int, default=config.verify.trials, show_default=True, help='Number of trials')
@click.option('--seed', type=int, default=config.verify.seed, show_default=True, help='Certification seed')
@click.option('-o', '--out', type=click.Path(file_okay=False, path_type=Path), required=True,
              help='Output directory')
@handle_errors
def certify_command(problem: Path, solution_path: Path, model: Path, trials: int, seed: int, out: Path):
    """Monte-Carlo certify a solution against a disturbance model
    """

    spec = load_problem(problem)
    solution = read_document(Solution, solution_path)
    report = certify(spec, solution.U, load_model(model), trials, seed)

    write_document(report, out / 'certification.json')
    write_certification_csv(report, out / 'certification.csv')
    print_certification(report)


@cli.command(name='bound-table')
@click.option('-n', '--n-samples', type=int, multiple=True, default=tuple(config.bound_table.n_samples),
              show_default=True, help='Sample counts (repeatable)')
@click.option('--lambda-max', type=float, default=config.bound_table.lambda_max, show_default=True)
@click.option('--points', type=int, default=config.bound_table.points, show_default=True)
@click.option('-o', '--out', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='CSV file (stdout when omitted)')
@handle_errors
def bound_table_command(n_samples: tuple[int], lambda_max: float, points: int, out: Optional[Path]):
    """Tabulate the sample-based bound for several N_s and its large-sample limit
    """

    table = bound_table(n_samples, lambda_max, points)

    if out is None:
        write_bound_rows(table, click.get_text_stream('stdout'))
    else:
        write_bound_table(table, out)
        print_thresholds(table)


@cli.command(name='make-cwh')
@click.option('-o', '--out', type=click.Path(file_okay=False, path_type=Path), required=True,
              help='Output directory')
@click.option('--alpha', type=float, default=config.cwh.alpha, show_default=True, help='Violation threshold')
@click.option('--horizon', type=int, default=config.cwh.horizon, show_default=True, help='Horizon N')
@handle_errors
def make_cwh_command(out: Path, alpha: float, horizon: int):
    """Write the satellite rendezvous demo problem and disturbance model
    """

    problem_path, model_path = make_cwh(out, alpha=alpha, horizon=horizon)

    click.echo(f"Problem: {styled_text(str(problem_path), cli_styles.path, rendered=True)}")
    click.echo(f"Model: {styled_text(str(model_path), cli_styles.path, rendered=True)}")


@cli.command(name='compare')
@click.option('-p', '--problem', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Problem JSON file')
@click.option('--model', type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True,
              help='Disturbance model JSON (samples, OSVPI moments and certification)')
@click.option('-s', '--samples', type=int, default=cli_cfg.compare.samples,
              help='Sample count (default: scenario sample count)')
@click.option('--seed', type=int, default=None, help='Sample generation seed (default: model seed)')
@click.option('-t', '--trials', type=int, default=config.verify.trials, show_default=True,
              help='Certification trials')
@click.option('-o', '--out', type=click.Path(file_okay=False, path_type=Path), default=None,
              help='Output directory for summary.csv and solutions')
@handle_errors
def compare_command(problem: Path, model: Path, samples: Optional[int], seed: Optional[int], trials: int,
                    out: Optional[Path]):
    """Run every method on one problem and print one merged table
    """

    spec = load_problem(problem)
    true_model = load_model(model)
    if seed is not None:
        true_model = true_model.copy(update={'seed': seed})

    results = compare(spec, true_model, n_samples=samples, trials=trials)
    summaries = [r.summary for r in results]

    if out is not None:
        for result in results:
            write_document(result.solution, out / f'solution_{result.solution.method}.json')
        write_summary(summaries, out / SUMMARY_CSV)

    print_summary(summaries)


@cli.command(name='validate')
@click.option('--in-sample', is_flag=True, default=False,
              help='Test one of the samples against 4/(9(lambda^2+1)) instead of a fresh draw against f')
@click.option('-n', '--n-samples', type=int, multiple=True, required=True, help='Sample counts (repeatable)')
@click.option('-l', '--lambda', 'lambdas', type=float, multiple=True, required=True, help='lambda values (repeatable)')
@click.option('-t', '--trials', type=int, default=10000, show_default=True, help='Experiments per cell')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('-o', '--out', type=click.Path(dir_okay=False, path_type=Path), default=None, help='CSV file')
@click.pass_context
@handle_errors
def validate_command(ctx: click.Context, in_sample: bool, n_samples: tuple[int], lambdas: tuple[float], trials: int,
                     seed: int, out: Optional[Path]):
    """Check the tail bounds empirically on Gaussian samples
    """

    battery = validate_in_sample if in_sample else validate_out_of_sample
    cells = battery(n_samples, lambdas, trials, seed)

    if out is not None:
        write_validation_csv(cells, out)
    print_validation(cells)

    if not all(cell.passed for cell in cells):
        warn("Some cells exceed their bound by more than three standard errors")
        ctx.exit(int(ExitCode.error))
