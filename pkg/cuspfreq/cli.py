# cuspfreq/cli.py
import functools
import logging
import sys

import click
from pydantic import ValidationError

from . import services
from .arith import Number, format_number, parse_number
from .cf import CFParams
from .config import settings
from .errors import CuspfreqError, InvalidParameterError, PrecisionExhaustedError
from .fixtures import fixture_store
from .models import OutputFormat, RunConfig
from .utils import (
    parse_float_list,
    parse_int_list,
    parse_rational,
    parse_schedule,
    write_csv,
    write_json,
    write_jsonl,
)

logger = logging.getLogger(__name__)


class NumberType(click.ParamType):
    """'p/q', 'surd:p,q,d,r', 'dec:<digits>[@e]' or 'inf'."""
    name = "number"

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            return parse_number(value)
        except CuspfreqError as e:
            self.fail(e.detail, param, ctx)


NUMBER = NumberType()


class CuspfreqGroup(click.Group):
    """Usage errors exit with status 1 rather than click's default 2."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


def handle_errors(func):
    """Flushes any partial document, reports the error on stderr and exits with its code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CuspfreqError as e:
            if e.partial is not None:
                write_json(e.partial, sys.stdout)
            sys.stdout.flush()
            click.echo(f"error: {e.detail}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def _params(a: Number, b: Number) -> CFParams:
    if a is None or b is None:
        raise InvalidParameterError("--a and --b are both required")
    return CFParams.ab(a, b)


def _record(ctx: click.Context, subcommand: str, **flags) -> RunConfig:
    """Validated run configuration; logged so every run can be reproduced."""
    text = {key: None if value is None else format_number(value) for key, value in flags.items()
            if key in ("a", "b", "x", "u")}
    try:
        config = RunConfig(
            subcommand=subcommand,
            fixture_dir=str(fixture_store.directory),
            seed=ctx.obj["seed"],
            **text,
            **{key: value for key, value in flags.items() if key not in text},
        )
    except ValidationError as e:
        raise InvalidParameterError(f"invalid {subcommand} flags: {e.errors()[0]['msg']}")
    logger.info("Running %s", config.model_dump_json(exclude_none=True))
    return config


@click.group(cls=CuspfreqGroup)
@click.option("--fixture-dir", envvar="CUSPFREQ_FIXTURE_DIR", default=None,
              help="Directory holding calibration fixtures.")
@click.option("--seed", type=int, default=None, help="Seed for randomized flows.")
@click.option("--log-level", default=None, help="Logging level for stderr.")
@click.pass_context
def cli(ctx, fixture_dir, seed, log_level):
    """(a,b)-continued fractions, geodesic coding and cusp excursions."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    if fixture_dir:
        fixture_store.use(fixture_dir)
    ctx.ensure_object(dict)
    ctx.obj["seed"] = settings.RANDOM_SEED if seed is None else seed


# ==================== EXPANSIONS ====================

@cli.command()
@click.option("--x", "x", type=NUMBER, required=True)
@click.option("--a", "a", type=NUMBER, default=None)
@click.option("--b", "b", type=NUMBER, default=None)
@click.option("--classical", is_flag=True, help="Classical expansion instead of (a,b).")
@click.option("--max-terms", type=int, default=None)
@click.option("--convergents", "with_convergents", is_flag=True)
@click.pass_context
@handle_errors
def expand(ctx, x, a, b, classical, max_terms, with_convergents):
    """Partial quotients (and convergents) of x."""
    params = None if classical else _params(a, b)
    _record(ctx, "expand", x=x, a=a, b=b)
    document = services.expansion_document(x, params, max_terms, with_convergents)
    if document.precision_exhausted:
        raise _exhausted(document, len(document.quotients))
    write_json(document, sys.stdout)


def _exhausted(document, count: int) -> CuspfreqError:
    error = PrecisionExhaustedError(f"precision exhausted after {count} quotients")
    error.partial = document
    return error


@cli.command()
@click.option("--x", "x", type=NUMBER, required=True)
@click.option("--max-terms", type=int, default=None)
@click.option("--xi", "xi", default="", help="Comma-separated xi values for modified quotients.")
@click.pass_context
@handle_errors
def convert(ctx, x, max_terms, xi):
    """Classical, alternated classical and (-1,1) digits of x."""
    xi_list = parse_float_list(xi)
    _record(ctx, "convert", x=x, xi_list=xi_list)
    write_json(services.convert_document(x, max_terms, xi_list), sys.stdout)


# ==================== NATURAL EXTENSION ====================

@cli.command()
@click.option("--a", "a", type=NUMBER, required=True)
@click.option("--b", "b", type=NUMBER, required=True)
@click.option("--cap", type=int, default=None)
@click.option("--levels/--no-levels", default=True)
@click.pass_context
@handle_errors
def orbit(ctx, a, b, cap, levels):
    """Endpoint orbits, cycle property and level sets."""
    _record(ctx, "orbit", a=a, b=b, cap=cap)
    write_json(services.orbit_document(_params(a, b), cap, levels), sys.stdout)


@cli.command()
@click.option("--a", "a", type=NUMBER, required=True)
@click.option("--b", "b", type=NUMBER, required=True)
@click.option("--grid", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--override", is_flag=True, help="Iterate even when finiteness is undetermined.")
@click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), default="json")
@click.pass_context
@handle_errors
def attractor(ctx, a, b, grid, iters, override, output_format):
    """Attractor summary (json) or the point cloud (csv)."""
    _record(ctx, "attractor", a=a, b=b, grid=grid, iters=iters, output_format=output_format)
    summary, points = services.attractor_summary(_params(a, b), grid, iters, override)
    if output_format == OutputFormat.CSV.value:
        write_csv([{"backward": float(u), "forward": float(w)} for u, w in points], sys.stdout)
    else:
        write_json(summary, sys.stdout)


# ==================== GEODESICS ====================

@cli.command()
@click.option("--a", "a", type=NUMBER, required=True)
@click.option("--b", "b", type=NUMBER, required=True)
@click.option("--x", "x", type=NUMBER, required=True, help="Attracting endpoint w.")
@click.option("--u", "u", type=NUMBER, default=None, help="Repelling endpoint.")
@click.option("--cap", type=int, default=None)
@click.option("--grid", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.pass_context
@handle_errors
def reduce(ctx, a, b, x, u, cap, grid, iters):
    """Reduces the geodesic (u, x) for the (a,b) coding."""
    _record(ctx, "reduce", a=a, b=b, x=x, u=u, cap=cap, grid=grid, iters=iters)
    write_json(services.reduce_document(_params(a, b), x, u, cap, grid, iters), sys.stdout)


@cli.command()
@click.option("--a", "a", type=NUMBER, required=True)
@click.option("--b", "b", type=NUMBER, required=True)
@click.option("--x", "x", type=NUMBER, required=True)
@click.option("--u", "u", type=NUMBER, default=None)
@click.option("--returns", "n", type=int, required=True)
@click.option("--d", "d", default="2", help="Comma-separated heights.")
@click.option("--oracle-step", type=float, default=None)
@click.option("--grid", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.pass_context
@handle_errors
def simulate(ctx, a, b, x, u, n, d, oracle_step, grid, iters):
    """One JSON line per return, then the run summary."""
    d_list = parse_float_list(d)
    _record(ctx, "simulate", a=a, b=b, x=x, u=u, n=n, d_list=d_list, oracle_step=oracle_step,
            output_format=OutputFormat.JSONL)
    run = services.SimulationRun(_params(a, b), x, n, d_list, oracle_step, u, grid, iters)
    write_jsonl(run.records(), sys.stdout)
    write_json(run.summary(), sys.stdout)


# ==================== FREQUENCY ANALYSIS ====================

@cli.command()
@click.option("--x", "x", type=NUMBER, required=True)
@click.option("--a", "a", type=NUMBER, default=None)
@click.option("--b", "b", type=NUMBER, default=None)
@click.option("--classical", is_flag=True, help="Averages over classical quotients only.")
@click.option("--N", "n", type=int, required=True)
@click.option("--d", "d", default="2,3,5")
@click.option("--xi", "xi", default="2,10")
@click.option("--checkpoints", default="geometric", help="'geometric' or a comma-separated list.")
@click.option("--tol", type=float, default=None)
@click.option("--oracle-step", type=float, default=None)
@click.option("--grid", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), default="json")
@click.pass_context
@handle_errors
def frequency(ctx, x, a, b, classical, n, d, xi, checkpoints, tol, oracle_step, grid, iters, output_format):
    """Checkpointed A_N, A_N^xi, I_N^d and the resulting classification."""
    d_list, xi_list = parse_float_list(d), parse_float_list(xi)
    schedule = parse_schedule(checkpoints, n)
    params = None if classical else _params(a, b)
    _record(ctx, "frequency", a=a, b=b, x=x, n=n, d_list=d_list, xi_list=xi_list,
            checkpoints=schedule, oracle_step=oracle_step, output_format=output_format)
    document = services.frequency_document(x, params, n, d_list, xi_list, tol=tol, oracle_step=oracle_step,
                                           schedule=schedule, grid=grid, iters=iters)
    document = document.model_copy(update={"seed": ctx.obj["seed"]})
    if output_format == OutputFormat.CSV.value:
        write_csv(document.profile.checkpoints, sys.stdout)
    else:
        write_json(document, sys.stdout)


# ==================== CONSTRUCTIONS ====================

@cli.command()
@click.option("--vwa", "kind", flag_value="vwa", default=True, help="Very well approximable number.")
@click.option("--bad", "kind", flag_value="bad", help="Purely periodic (badly approximable) number.")
@click.option("--eps", default="1")
@click.option("--a0", type=int, default=0)
@click.option("--a1", type=int, default=1)
@click.option("--n", "n", type=int, default=10)
@click.option("--period", default="1")
@click.pass_context
@handle_errors
def construct(ctx, kind, eps, a0, a1, n, period):
    """Builds test numbers with prescribed quotient growth."""
    _record(ctx, "construct", n=n, options={"kind": kind, "eps": eps, "period": period})
    if kind == "bad":
        document = services.badly_approximable_document(parse_int_list(period), n)
    else:
        document = services.vwa_document(parse_rational(eps), a0, a1, n)
    write_json(document, sys.stdout)


@cli.command()
@click.option("--a", "a", type=NUMBER, required=True)
@click.option("--b", "b", type=NUMBER, required=True)
@click.option("--surds", type=int, default=100)
@click.option("--returns", type=int, default=200)
@click.option("--grid", type=float, default=None)
@click.option("--iters", type=int, default=None)
@click.pass_context
@handle_errors
def calibrate(ctx, a, b, surds, returns, grid, iters):
    """Measures and stores the calibration fixture for (a,b)."""
    _record(ctx, "calibrate", a=a, b=b, grid=grid, iters=iters,
            options={"surds": surds, "returns": returns})
    fixture = services.calibrate(_params(a, b), surds, returns, ctx.obj["seed"], grid, iters)
    write_json(fixture, sys.stdout)


def main():
    cli(prog_name="cuspfreq")


if __name__ == "__main__":
    main()
