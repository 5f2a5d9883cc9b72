import pytest

from app.models.problem import SolverConfig
from app.services.coefficients import CoefficientService
from app.services.problems import ProblemCatalog


@pytest.fixture(scope="session")
def anyio_backend():
    return "asyncio"


@pytest.fixture(scope="session")
def builtin_methods():
    """builtin:s1..builtin:s4 keyed by stage count."""
    return {s: CoefficientService.builtin_method(s) for s in (1, 2, 3, 4)}


@pytest.fixture(scope="session")
def solver_config():
    return SolverConfig()


@pytest.fixture
def wb_problem():
    return ProblemCatalog.wb_boscarino_pareschi()
