"""Command-line interface: construct, validate, run, convergence, wb-test, ap-test, stability"""

import functools
import sys
from typing import List, Optional

import click
import numpy as np
from pydantic import ValidationError

from app.core.errors import (
    CoefficientParseError,
    CoefficientValidationError,
    ConstraintError,
    NodeVectorError,
    NumericalFailure,
    PeerError,
)
from app.core.logger import set_log_level
from app.models.problem import SolverConfig
from app.models.report import ProblemSpec, RunSpec
from app.repositories.coefficients import CoefficientRepository
from app.repositories.results import ResultRepository
from app.services.coefficients import CoefficientService
from app.services.harness import HarnessService
from app.services.problems import ProblemCatalog
from app.services.stability import StabilityService
from app.services.stepper import StepperService

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3

VALIDATION_ERRORS = (CoefficientParseError, CoefficientValidationError, NodeVectorError, ConstraintError)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, NumericalFailure):
        return EXIT_NUMERICAL
    if isinstance(error, VALIDATION_ERRORS):
        return EXIT_VALIDATION
    return EXIT_USAGE


class FloatList(click.ParamType):
    """Comma-separated floats, e.g. ``1e-3,1e-6``."""

    name = "floats"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            return [float(item) for item in str(value).split(",") if item.strip()]
        except ValueError:
            self.fail(f"{value!r} is not a comma-separated list of numbers", param, ctx)


FLOATS = FloatList()


class PeerGroup(click.Group):
    """Click group with the exit codes 0 ok, 1 usage, 2 numerical failure, 3 validation failure."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            rv = super().main(*args, **kwargs)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_USAGE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except ValidationError as e:
            click.echo(f"error: invalid options: {e}", err=True)
            sys.exit(EXIT_USAGE)
        except PeerError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(exit_code_for(e))
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


def solver_options(command):
    """Adds the SolverConfig overrides and passes a ``config`` argument."""

    @click.option("--newton-abs-tol", type=float, default=None)
    @click.option("--newton-rel-tol", type=float, default=None)
    @click.option("--newton-max-iter", type=int, default=None)
    @click.option("--starting-tol", type=float, default=None)
    @functools.wraps(command)
    def wrapper(*args, newton_abs_tol, newton_rel_tol, newton_max_iter, starting_tol, **kwargs):
        overrides = {
            "newton_abs_tol": newton_abs_tol,
            "newton_rel_tol": newton_rel_tol,
            "newton_max_iter": newton_max_iter,
            "starting_tol": starting_tol,
        }
        config = SolverConfig(**{key: value for key, value in overrides.items() if value is not None})
        return command(*args, config=config, **kwargs)

    return wrapper


def problem_options(command):
    @click.option("--problem", type=click.Choice(ProblemCatalog.NAMES), required=True)
    @click.option("--epsilon", type=float, default=None)
    @click.option("--degree", type=int, default=None)
    @click.option("--cells", type=int, default=None)
    @functools.wraps(command)
    def wrapper(*args, problem, epsilon, degree, cells, **kwargs):
        spec = ProblemSpec(name=problem, epsilon=epsilon, degree=degree, cells=cells)
        return command(*args, problem=spec, **kwargs)

    return wrapper


def _load_matrix(path: Optional[str], s: int, name: str) -> Optional[np.ndarray]:
    if path is None:
        return None
    try:
        matrix = np.atleast_2d(np.loadtxt(path, dtype=float))
    except (OSError, ValueError) as e:
        raise click.BadParameter(f"cannot read {name} from {path}: {e}")
    if matrix.shape != (s, s):
        raise click.BadParameter(f"{name} in {path} must be {s}x{s}, got {matrix.shape}")
    return matrix


@click.group(cls=PeerGroup)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), default=None)
def cli(log_level: Optional[str]):
    """IMEX Peer methods: construction, validation and benchmarks."""
    if log_level:
        set_log_level(log_level)


@cli.command()
@click.option("--stages", type=int, required=True)
@click.option("--nodes", type=FLOATS, required=True)
@click.option("--gamma", type=float, default=None)
@click.option("--family", type=click.Choice(["order_s", "bdf"]), default="order_s", show_default=True)
@click.option("--p-file", type=click.Path(dir_okay=False), default=None)
@click.option("--s2-file", type=click.Path(dir_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def construct(stages: int, nodes: List[float], gamma, family, p_file, s2_file, out):
    """Construct an order-s method and save it as a coefficient file."""
    if len(nodes) != stages:
        raise click.BadParameter(f"expected {stages} nodes, got {len(nodes)}", param_hint="--nodes")
    if family == "bdf":
        for value, hint in ((gamma, "--gamma"), (p_file, "--p-file")):
            if value is not None:
                raise click.BadParameter("only applies to --family order_s", param_hint=hint)
    S2 = _load_matrix(s2_file, stages, "S2")
    if family == "bdf":
        coeffs = CoefficientService.construct_bdf_type(nodes, S2=S2)
    else:
        P = _load_matrix(p_file, stages, "P")
        coeffs = CoefficientService.construct_order_s(nodes, gamma=gamma, P=P, S2=S2)
    report = CoefficientService.validate(coeffs)
    if not report.passed:
        raise CoefficientValidationError(report)
    CoefficientRepository.save_coefficients(coeffs, out)
    click.echo(report.model_dump_json(indent=2))


@cli.command()
@click.argument("file", type=click.Path(dir_okay=False))
@click.pass_context
def validate(ctx, file):
    """Validate a coefficient file; exit 0 iff it passes."""
    coeffs = CoefficientRepository.load_coefficients(file, validate=False)
    report = CoefficientService.validate(coeffs)
    click.echo(report.model_dump_json(indent=2))
    ctx.exit(EXIT_OK if report.passed else EXIT_VALIDATION)


@cli.command()
@click.option("--method", required=True, help="Coefficient file or builtin:sK")
@problem_options
@click.option("--dt", type=float, required=True)
@click.option("--t-end", type=float, required=True)
@click.option("--out", default="-", show_default=True)
@solver_options
def run(method, problem, dt, t_end, out, config):
    """Integrate a catalog problem and write the trajectory CSV."""
    coeffs = HarnessService.resolve_method(method)
    entry = ProblemCatalog.build(problem)
    trajectory = StepperService.integrate(coeffs, entry.problem, entry.initial_value, t_end, dt, config)
    ResultRepository.emit_csv(trajectory, out)


@cli.command()
@click.option("--method", required=True, help="Coefficient file or builtin:sK")
@problem_options
@click.option("--dt-max", type=float, default=0.2, show_default=True)
@click.option("--levels", type=int, default=5, show_default=True)
@click.option("--t-end", type=float, default=5.0, show_default=True)
@click.option("--reference-tol", type=float, default=1e-10, show_default=True)
@click.option("--out", default="-", show_default=True)
@solver_options
def convergence(method, problem, dt_max, levels, t_end, reference_tol, out, config):
    """Step-size sweep dt_max * 2^-i with least-squares order fit."""
    spec = RunSpec(
        method=method,
        problem=problem,
        dt_max=dt_max,
        levels=levels,
        t_end=t_end,
        config=config,
        reference_tol=reference_tol,
        output=out,
    )
    report = HarnessService.convergence_study(spec)
    ResultRepository.emit_csv(report, out)


@cli.command("wb-test")
@click.option("--method", required=True, help="Coefficient file or builtin:sK")
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--dt", type=float, default=1.0, show_default=True)
@click.option("--perturb", type=FLOATS, default="1e-3,1e-6", show_default=True)
@solver_options
def wb_test(method, steps, dt, perturb, config):
    """Well-balanced tests on the damped oscillator."""
    coeffs = HarnessService.resolve_method(method)
    report = HarnessService.wb_test(
        coeffs, ProblemCatalog.wb_boscarino_pareschi(), n_steps=steps, dt=dt, perturbations=perturb, config=config
    )
    click.echo(report.model_dump_json(indent=2))


@cli.command("ap-test")
@click.option("--method", required=True, help="Coefficient file or builtin:sK")
@click.option("--problem", type=click.Choice(["ap", "jinxin"]), default="ap", show_default=True)
@click.option("--epsilons", type=FLOATS, default="1e-2,1e-4,1e-6,1e-8", show_default=True)
@click.option("--dt", type=float, default=0.0125, show_default=True)
@click.option("--t-end", type=float, default=5.0, show_default=True)
@click.option("--cells", type=int, default=16, show_default=True)
@solver_options
def ap_test(method, problem, epsilons, dt, t_end, cells, config):
    """Asymptotic-preserving tests: residuals, projection gaps and residual-vs-epsilon slope."""
    coeffs = HarnessService.resolve_method(method)
    if problem == "jinxin":
        def relaxation(epsilon):
            return ProblemCatalog.jin_xin_demo(epsilon, cells=cells)
    else:
        relaxation = ProblemCatalog.ap_pareschi_russo
    report = HarnessService.ap_test(coeffs, relaxation, epsilons, dt=dt, t_end=t_end, config=config)
    click.echo(report.model_dump_json(indent=2))


@cli.command()
@click.option("--method", required=True, help="Coefficient file or builtin:sK")
@click.option("--re-min", type=float, default=-10.0, show_default=True)
@click.option("--re-max", type=float, default=2.0, show_default=True)
@click.option("--im-min", type=float, default=-6.0, show_default=True)
@click.option("--im-max", type=float, default=6.0, show_default=True)
@click.option("--resolution", type=click.IntRange(min=1), default=61, show_default=True)
@click.option("--z1", type=float, default=None, help="Fixed implicit argument for the IMEX pair scan")
@click.option("--out", default="-", show_default=True)
def stability(method, re_min, re_max, im_min, im_max, resolution, z1, out):
    """Spectral radius field of the amplification matrix on a complex grid."""
    coeffs = HarnessService.resolve_method(method)
    field = StabilityService.stability_scan(coeffs, re_min, re_max, im_min, im_max, resolution, z1=z1)
    ResultRepository.emit_csv(field, out)


if __name__ == "__main__":
    cli()
