import logging
from pathlib import Path
from typing import Optional

import click
from pydantic import ValidationError

from config.settings import get_settings
from core.exceptions import EXIT_CODE_TABLE, DeautoconvError, ExitCode
from models.algorithm import InitKind
from models.experiment import ExperimentKind, ExperimentSpec, ExperimentSummary
from services.experiment_service import generate_exact, generate_random, get_experiment_service
from services.fit_service import get_fit_service
from utils.io import read_signal_file, write_json, write_trace_csv, write_vector_csv
from utils.response import error_response, exception_response, success_response

logger = logging.getLogger(__name__)
settings = get_settings()


def _fail(exc: Exception) -> None:
    """Report `exc` on stderr as one line and exit with its code."""
    if isinstance(exc, DeautoconvError):
        click.echo(f"error [{exc.error_code}]: {exc}", err=True)
        raise SystemExit(int(exc.exit_code))
    first = exc.errors()[0] if isinstance(exc, ValidationError) else None
    message = f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}" if first else str(exc)
    click.echo(f"error [invalid_parameters]: {message}", err=True)
    raise SystemExit(int(ExitCode.INVALID_PARAMETERS))


@click.group(epilog=EXIT_CODE_TABLE, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--log-level", default=None, help="Logging level (default: DEAUTOCONV_LOG_LEVEL).")
def cli(log_level: Optional[str]):
    """Positive deautoconvolution by I-divergence alternating minimization."""
    level = (log_level or ("DEBUG" if settings.DEBUG else settings.LOG_LEVEL)).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command(epilog=EXIT_CODE_TABLE)
@click.argument("input_path", type=click.Path(dir_okay=False))
@click.option("--max-iter", type=int, default=None, help="Iteration limit T.")
@click.option("--tol", type=float, default=None, help="Relative decrease over the stop window; 0 disables.")
@click.option("--seed", type=int, default=None, help="Seed of restart 0; restart i uses seed + i.")
@click.option("--restarts", type=int, default=None, help="Number of seeded restarts.")
@click.option("--init", "init", type=click.Choice(["random", "constant", "file"]), default="random")
@click.option("--init-file", type=click.Path(dir_okay=False), default=None, help="Starting vector for --init file.")
@click.option("--validate", is_flag=True, help="Cross-check solver and lifted identities every step.")
@click.option("--allow-degenerate", is_flag=True, help="Fit even when y_0 = 0.")
@click.option("--workers", type=int, default=None, help="Threads for parallel restarts.")
@click.option("--progress-every", type=int, default=None, help="Log a progress line every N iterations.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
def fit(
    input_path, max_iter, tol, seed, restarts, init, init_file, validate, allow_degenerate, workers,
    progress_every, out_dir,
):
    """Fit INPUT and write x.csv, trace.csv and report.json."""
    service = get_fit_service(settings)
    out = Path(out_dir or settings.OUTPUT_DIR)
    try:
        y = service.load(input_path)
        overrides = {
            key: value
            for key, value in {
                "max_iterations": max_iter,
                "seed": seed,
                "restarts": restarts,
                "workers": workers,
                "progress_every": progress_every,
            }.items()
            if value is not None
        }
        if tol is not None:
            overrides["stop_tolerance"] = tol if tol != 0 else None
        if init == "file":
            if init_file is None:
                raise ValueError("--init file needs --init-file")
            overrides["init"] = InitKind.GIVEN
            overrides["init_values"] = read_signal_file(init_file)
        else:
            overrides["init"] = InitKind(init)
        config = service.build_config(validation_mode=validate, **overrides)
        best, report = service.fit(y, config, allow_degenerate=allow_degenerate, input_path=str(input_path))
        service.write_bundle(out, best, report)
    except DeautoconvError as exc:
        write_json(out / "report.json", exception_response(exc, meta={"input_path": str(input_path)}))
        _fail(exc)
    except ValueError as exc:
        _fail(exc)
    click.echo(
        f"divergence {report.initial_divergence:.6e} -> {report.final_divergence:.6e} "
        f"after {report.iterations} iterations; {report.kkt_verdict}"
    )


@cli.command(epilog=EXIT_CODE_TABLE)
@click.option("--kind", type=click.Choice([k.value for k in ExperimentKind]), required=True)
@click.option("--m", "m", type=int, required=True, help="Half-length; y has 2m+1 entries.")
@click.option("--K", "K", type=int, default=5, show_default=True, help="Scale of the random kind.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out", type=click.Path(file_okay=False), default=None, help="Output directory.")
def generate(kind, m, K, seed, out):
    """Write seeded data y.csv (and true_x.csv for the exact kind)."""
    out_dir = Path(out or settings.OUTPUT_DIR)
    try:
        if m < 1 or K < 1 or seed < 0:
            raise ValueError("--m and --K must be >= 1 and --seed >= 0")
        if kind == ExperimentKind.EXACT.value:
            true_x, y = generate_exact(m, seed)
            write_vector_csv(out_dir / "true_x.csv", true_x, column="x")
        else:
            y = generate_random(m, K, seed)
        path = write_vector_csv(out_dir / "y.csv", y, column="y")
    except ValueError as exc:
        _fail(exc)
    click.echo(f"wrote {y.size} values to {path}")


@cli.command(epilog=EXIT_CODE_TABLE)
@click.option("--kind", type=click.Choice([k.value for k in ExperimentKind]), required=True)
@click.option("--m", "m", type=int, default=None, help="Half-length (default 20 exact, 12 random).")
@click.option("--K", "K", type=int, default=5, show_default=True)
@click.option("--T", "T", type=int, default=None, help="Iterations per restart (default MAX_ITERATIONS).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=None, help="Restarts (default 3 exact, 2 random).")
@click.option("--workers", type=int, default=None)
@click.option("--validate", is_flag=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def experiment(kind, m, K, T, seed, restarts, workers, validate, out_dir):
    """Run a seeded experiment and write traces, iterates and summary.json."""
    exact = kind == ExperimentKind.EXACT.value
    out = Path(out_dir or settings.OUTPUT_DIR)
    try:
        spec = ExperimentSpec(
            kind=ExperimentKind(kind),
            m=m if m is not None else (20 if exact else 12),
            K=K,
            T=T if T is not None else settings.MAX_ITERATIONS,
            seed=seed,
            restarts=restarts if restarts is not None else (3 if exact else 2),
            workers=workers if workers is not None else settings.WORKERS,
            validation_mode=validate,
        )
        service = get_experiment_service(get_fit_service(settings).build_config())
        result = service.run_experiment(spec)
    except (DeautoconvError, ValidationError) as exc:
        _fail(exc)

    write_vector_csv(out / "y.csv", result.y, column="y")
    if result.true_x is not None:
        write_vector_csv(out / "true_x.csv", result.true_x, column="x")
    for run in result.completed_runs:
        write_trace_csv(out / f"trace_run{run.restart}.csv", run.outcome.trace)
        write_vector_csv(out / f"x_run{run.restart}.csv", run.outcome.x, column="x")
    summary = ExperimentSummary.from_result(result)

    if not result.completed_runs:
        first = next(run for run in result.runs if run.error is not None)
        envelope = error_response(
            message=f"no restart completed; restart {first.restart}: {first.error}",
            error_code=first.error_code,
            exit_code=ExitCode.RUN_FAILURE,
        )
        envelope.data = summary
        write_json(out / "summary.json", envelope)
        click.echo("error [run_failure]: no restart completed", err=True)
        raise SystemExit(int(ExitCode.RUN_FAILURE))

    write_json(out / "summary.json", success_response(summary))
    click.echo(
        f"{len(result.completed_runs)}/{len(result.runs)} restarts completed; "
        f"best restart {result.best_restart}; results in {out}"
    )


if __name__ == "__main__":
    cli()
