"""Click CLI for layered tensor decomposition anomaly detection."""

from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import structlog
from pydantic import ValidationError
from threadpoolctl import threadpool_limits

from config import LtdParams, LtdSettings, load_run_config
from cube_io import read_mask, read_scores_csv, write_cube, write_mask, write_roc_csv
from detector import BENCH_LAMBDA4, BENCH_VARIANTS, AnomalyDetector, BenchScene, SolverBenchmark, ensure_out_dir
from errors import ConfigError, CubeIOError, LtdError
from evaluation import evaluate
from logging_config import configure_logging
from report_renderer import ReportRenderer, format_auc
from synthetic import synth_dataset


class LtdClickException(click.ClickException):
    """ClickException carrying the exit code of the error it wraps."""

    def __init__(self, message: str, exit_code: int) -> None:
        super().__init__(message)
        self.exit_code = exit_code


@contextmanager
def reported_errors(logger: structlog.typing.FilteringBoundLogger) -> Iterator[None]:
    """Turn library errors into clean CLI failures with their documented exit codes."""
    try:
        yield
    except click.ClickException:
        raise
    except LtdError as e:
        logger.error(type(e).__name__, error=str(e))
        raise LtdClickException(str(e), e.exit_code) from None
    except OSError as e:
        logger.error("I/O error", error=str(e))
        raise LtdClickException(str(e), CubeIOError.exit_code) from None
    except Exception as e:
        logger.exception("Unexpected error", error=str(e))
        raise LtdClickException(f"Unexpected error: {e}", 1) from None


def _load_params(config: Path | None) -> LtdParams:
    return load_run_config(config) if config is not None else LtdParams()


@click.group(name="ltd")
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable debug logging",
)
@click.option(
    "--quiet",
    "-q",
    is_flag=True,
    help="Suppress info messages, show only warnings/errors",
)
@click.pass_context
def cli(ctx: click.Context, verbose: bool, quiet: bool) -> None:
    """Hyperspectral anomaly detection by layered tensor decomposition.

    Examples:
        ltd synth --out data/
        ltd detect --config run.cfg --cube data/cube.hsc --out results/
        ltd eval --scores results/T.csv --mask data/mask.pgm --out results/
        ltd bench --out bench/ --lambda4 0.1 --lambda4 0.5

    Set LTD_THREADS to cap the number of BLAS/LAPACK worker threads.
    """
    try:
        settings = LtdSettings(verbose=verbose, quiet=quiet)
    except ValidationError as e:
        raise LtdClickException(f"Invalid settings: {e}", ConfigError.exit_code) from None

    configure_logging(verbose=settings.verbose, quiet=settings.quiet)
    logger = structlog.get_logger()
    logger.debug("Settings loaded", threads=settings.threads, template=str(settings.report_template_path))

    ctx.obj = settings
    ctx.with_resource(threadpool_limits(limits=settings.threads))


@cli.command()
@click.option(
    "--config",
    type=click.Path(path_type=Path, dir_okay=False),
    default=None,
    help="RunConfig key=value file (defaults when omitted)",
)
@click.option("--cube", type=click.Path(path_type=Path, dir_okay=False), required=True, help="HSC1 cube")
@click.option("--out", "out_dir", type=click.Path(path_type=Path, file_okay=False), required=True)
@click.option("--rx", is_flag=True, help="Also write the RX baseline map (RX.csv, RX.pgm)")
def detect(config: Path | None, cube: Path, out_dir: Path, rx: bool) -> None:
    """Detect anomalies in a cube and write T1/T2/T maps, T.csv, T12.csv, trace.csv, summary.json."""
    logger = structlog.get_logger()
    logger.info("CLI invoked", command="detect", config=str(config) if config else "defaults", cube=str(cube))

    with reported_errors(logger):
        params = _load_params(config)
        result = AnomalyDetector(params).detect_file(cube, out_dir, rx=rx)

    click.echo(f"✓ Maps written: {out_dir}")
    click.echo(f"✓ Iterations: {result.state.iteration}, final r: {result.state.rank}")


@cli.command(name="eval")
@click.option(
    "--scores",
    type=click.Path(path_type=Path, dir_okay=False),
    multiple=True,
    required=True,
    help="Score map CSV (repeat to compare several maps)",
)
@click.option("--mask", type=click.Path(path_type=Path, dir_okay=False), required=True, help="P5 ground-truth mask")
@click.option("--out", "out_dir", type=click.Path(path_type=Path, file_okay=False), required=True)
@click.pass_obj
def evaluate_cmd(settings: LtdSettings, scores: tuple[Path, ...], mask: Path, out_dir: Path) -> None:
    """Score maps against a mask: roc.csv, report.txt and the AUC on stdout.

    The first map's ROC goes to roc.csv; further maps get roc_<name>.csv.
    """
    logger = structlog.get_logger()
    logger.info("CLI invoked", command="eval", scores=[str(s) for s in scores], mask=str(mask))

    with reported_errors(logger):
        gt = read_mask(mask)
        reports = [evaluate(read_scores_csv(path), gt, name=path.stem) for path in scores]

        out_dir = ensure_out_dir(out_dir)
        for i, report in enumerate(reports):
            write_roc_csv(out_dir / ("roc.csv" if i == 0 else f"roc_{report.name}.csv"), report.roc)

        text = ReportRenderer(settings.report_template_path).render_eval(reports, gt, mask)
        try:
            (out_dir / "report.txt").write_text(text)
        except OSError as e:
            raise CubeIOError(f"Cannot write report to {out_dir}: {e.strerror or e}") from e

    if len(reports) == 1:
        click.echo(f"AUC: {format_auc(reports[0].auc)}")
    else:
        for report in reports:
            click.echo(f"AUC {report.name}: {format_auc(report.auc)}")


@cli.command()
@click.option("--n1", type=int, default=64, show_default=True, help="Image rows")
@click.option("--n2", type=int, default=64, show_default=True, help="Image columns")
@click.option("--n3", type=int, default=30, show_default=True, help="Spectral bands")
@click.option("--b", type=int, default=3, show_default=True, help="Spectral factor width")
@click.option("--rank", type=int, default=3, show_default=True, help="Planted tubal rank")
@click.option("--anomalies", type=int, default=40, show_default=True, help="Anomalous pixels")
@click.option("--sigma", type=float, default=1e-2, show_default=True, help="Gaussian noise level")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path, file_okay=False), required=True)
def synth(n1: int, n2: int, n3: int, b: int, rank: int, anomalies: int, sigma: float, seed: int, out_dir: Path) -> None:
    """Generate a planted-model cube (cube.hsc) and its ground truth (mask.pgm)."""
    logger = structlog.get_logger()
    logger.info("CLI invoked", command="synth", shape=(n1, n2, n3), b=b, rank=rank, anomalies=anomalies, seed=seed)

    with reported_errors(logger):
        scene = synth_dataset(n1, n2, n3, b, rank, anomalies, sigma, seed)
        out_dir = ensure_out_dir(out_dir)
        write_cube(out_dir / "cube.hsc", scene.h)
        write_mask(out_dir / "mask.pgm", scene.ground_truth)

    click.echo(f"✓ Cube written: {out_dir / 'cube.hsc'}")
    click.echo(f"✓ Mask written: {out_dir / 'mask.pgm'}")


@cli.command()
@click.option("--out", "out_dir", type=click.Path(path_type=Path, file_okay=False), required=True)
@click.option("--config", type=click.Path(path_type=Path, dir_okay=False), default=None, help="Base RunConfig")
@click.option("--lambda4", "lambda4_values", type=float, multiple=True, help="lambda4 grid (repeatable)")
@click.option("--b", "b_values", type=int, multiple=True, help="Spectral factor widths to sweep (repeatable)")
@click.option(
    "--variant",
    "variants",
    type=click.Choice(["fixed", "rr", "rr-novalid"]),
    multiple=True,
    help="Solver variants (default: all three)",
)
@click.option("--n1", type=int, default=64, show_default=True)
@click.option("--n2", type=int, default=64, show_default=True)
@click.option("--n3", type=int, default=30, show_default=True)
@click.option("--rank", type=int, default=3, show_default=True)
@click.option("--anomalies", type=int, default=40, show_default=True)
@click.option("--sigma", type=float, default=1e-2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def bench(
    settings: LtdSettings,
    out_dir: Path,
    config: Path | None,
    lambda4_values: tuple[float, ...],
    b_values: tuple[int, ...],
    variants: tuple[str, ...],
    n1: int,
    n2: int,
    n3: int,
    rank: int,
    anomalies: int,
    sigma: float,
    seed: int,
) -> None:
    """Time the solver variants on a synthetic scene and write bench.csv and bench.md."""
    logger = structlog.get_logger()
    logger.info("CLI invoked", command="bench", lambda4=list(lambda4_values), b=list(b_values))

    with reported_errors(logger):
        benchmark = SolverBenchmark(_load_params(config), ReportRenderer(settings.report_template_path))
        scene = BenchScene(n1=n1, n2=n2, n3=n3, r_true=rank, anomaly_count=anomalies, noise_sigma=sigma, seed=seed)
        records = benchmark.run(
            scene,
            lambda4_values=lambda4_values or BENCH_LAMBDA4,
            b_values=b_values or None,
            variants=variants or BENCH_VARIANTS,
        )
        benchmark.write(out_dir, records)

    click.echo(f"✓ Benchmark written: {out_dir / 'bench.md'} ({len(records)} runs)")


if __name__ == "__main__":
    cli()
