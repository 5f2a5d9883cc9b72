from typing import List, Literal

from fastapi import APIRouter, status
from pydantic import BaseModel, Field

from app.models.problem import SolverConfig
from app.models.report import ProblemSpec, RunSpec
from app.services.harness import HarnessService
from app.services.problems import ProblemCatalog
from app.services.stepper import StepperService
from app.utils.response import create_response, raise_http_error
from app.routers.methods import BUILTIN_PATTERN

router = APIRouter()


class IntegrateRequest(BaseModel):
    method: str = Field(..., pattern=BUILTIN_PATTERN)
    problem: ProblemSpec
    dt: float = Field(..., gt=0)
    t_end: float = Field(..., gt=0)
    config: SolverConfig = Field(default_factory=SolverConfig)


class ConvergenceRequest(BaseModel):
    method: str = Field(..., pattern=BUILTIN_PATTERN)
    problem: ProblemSpec
    dt_max: float = Field(default=0.2, gt=0)
    levels: int = Field(default=5, ge=3, le=8)
    t_end: float = Field(default=5.0, gt=0)
    reference_tol: float = Field(default=1e-10, ge=1e-13)
    config: SolverConfig = Field(default_factory=SolverConfig)


class WellBalancedRequest(BaseModel):
    method: str = Field(..., pattern=BUILTIN_PATTERN)
    steps: int = Field(default=100, ge=1, le=10000)
    dt: float = Field(default=1.0, gt=0)
    perturb: List[float] = Field(default_factory=lambda: [1e-3, 1e-6])
    config: SolverConfig = Field(default_factory=SolverConfig)


class AsymptoticRequest(BaseModel):
    method: str = Field(..., pattern=BUILTIN_PATTERN)
    problem: Literal["ap", "jinxin"] = Field(default="ap")
    epsilons: List[float] = Field(default_factory=lambda: [1e-2, 1e-4, 1e-6, 1e-8], min_length=1)
    dt: float = Field(default=0.0125, gt=0)
    t_end: float = Field(default=5.0, gt=0)
    cells: int = Field(default=16, ge=8)
    config: SolverConfig = Field(default_factory=SolverConfig)


@router.post("/integrate")
def integrate(request: IntegrateRequest):
    """Integrate a catalog problem and return the last-stage trajectory."""
    try:
        coeffs = HarnessService.resolve_method(request.method)
        entry = ProblemCatalog.build(request.problem)
        trajectory = StepperService.integrate(
            coeffs, entry.problem, entry.initial_value, request.t_end, request.dt, request.config
        )
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Integration completed",
            data=trajectory.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "integrate")


@router.post("/convergence")
def convergence(request: ConvergenceRequest):
    try:
        spec = RunSpec(
            method=request.method,
            problem=request.problem,
            dt_max=request.dt_max,
            levels=request.levels,
            t_end=request.t_end,
            reference_tol=request.reference_tol,
            config=request.config,
        )
        report = HarnessService.convergence_study(spec)
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Convergence study completed",
            data=report.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "run convergence study")


@router.post("/wb-test")
def wb_test(request: WellBalancedRequest):
    try:
        coeffs = HarnessService.resolve_method(request.method)
        report = HarnessService.wb_test(
            coeffs,
            ProblemCatalog.wb_boscarino_pareschi(),
            n_steps=request.steps,
            dt=request.dt,
            perturbations=request.perturb,
            config=request.config,
        )
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Well-balanced test completed",
            data=report.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "run well-balanced test")


@router.post("/ap-test")
def ap_test(request: AsymptoticRequest):
    try:
        coeffs = HarnessService.resolve_method(request.method)
        if request.problem == "jinxin":
            def relaxation(epsilon):
                return ProblemCatalog.jin_xin_demo(epsilon, cells=request.cells)
        else:
            relaxation = ProblemCatalog.ap_pareschi_russo
        report = HarnessService.ap_test(
            coeffs, relaxation, request.epsilons, dt=request.dt, t_end=request.t_end, config=request.config
        )
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Asymptotic-preserving test completed",
            data=report.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "run asymptotic-preserving test")
