from typing import List, Literal, Optional

from fastapi import APIRouter, status
from pydantic import BaseModel, Field, model_validator

from app.repositories.coefficients import CoefficientRepository
from app.services.coefficients import CoefficientService
from app.services.harness import HarnessService
from app.services.stability import StabilityService
from app.utils.response import create_response, raise_http_error

router = APIRouter()

BUILTIN_PATTERN = r"^builtin:s[1-4]$"


class ConstructRequest(BaseModel):
    nodes: List[float] = Field(..., min_length=1)
    family: Literal["order_s", "bdf"] = Field(default="order_s")
    gamma: Optional[float] = Field(None, gt=0)
    P: Optional[List[List[float]]] = None
    S2: Optional[List[List[float]]] = None
    R_lower: Optional[List[List[float]]] = None

    @model_validator(mode="after")
    def check_family_fields(self):
        if self.family == "bdf":
            given = [name for name in ("gamma", "P", "R_lower") if getattr(self, name) is not None]
            if given:
                raise ValueError(f"{', '.join(given)} only apply to family order_s")
        return self


class ValidateRequest(BaseModel):
    method: Optional[str] = Field(None, pattern=BUILTIN_PATTERN, description="builtin:sK")
    text: Optional[str] = Field(None, description="Coefficient file contents")

    @model_validator(mode="after")
    def check_source(self):
        if (self.method is None) == (self.text is None):
            raise ValueError("Provide exactly one of method or text")
        return self


class StabilityRequest(BaseModel):
    method: str = Field(default="builtin:s2", pattern=BUILTIN_PATTERN)
    re_min: float = Field(default=-10.0)
    re_max: float = Field(default=2.0)
    im_min: float = Field(default=-6.0)
    im_max: float = Field(default=6.0)
    resolution: int = Field(default=61, ge=1, le=401)
    z1_re: Optional[float] = None
    z1_im: float = Field(default=0.0)


@router.post("/construct", status_code=status.HTTP_201_CREATED)
def construct_method(request: ConstructRequest):
    """Construct a coefficient set and return it in file format together with its validation report."""
    try:
        if request.family == "bdf":
            coeffs = CoefficientService.construct_bdf_type(request.nodes, S2=request.S2)
        else:
            coeffs = CoefficientService.construct_order_s(
                request.nodes,
                gamma=request.gamma,
                P=request.P,
                S2=request.S2,
                R_lower=request.R_lower,
            )
        report = CoefficientService.validate(coeffs)
        return create_response(
            status_code=status.HTTP_201_CREATED,
            message="Method constructed successfully",
            data={
                "coefficients": coeffs.model_dump(mode="json"),
                "file": CoefficientRepository.format_coefficients(coeffs),
                "report": report.model_dump(),
            },
        )
    except Exception as e:
        raise_http_error(e, "construct method")


@router.post("/validate")
def validate_method(request: ValidateRequest):
    try:
        if request.text is not None:
            coeffs = CoefficientRepository.parse_coefficients(request.text, label="upload")
        else:
            coeffs = HarnessService.resolve_method(request.method)
        report = CoefficientService.validate(coeffs)
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Validation passed" if report.passed else "Validation failed",
            data=report.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "validate method")


@router.post("/stability")
def scan_stability(request: StabilityRequest):
    """Spectral radius field of the implicit amplification matrix, or of the IMEX pair when z1 is given."""
    try:
        coeffs = HarnessService.resolve_method(request.method)
        z1 = None if request.z1_re is None else complex(request.z1_re, request.z1_im)
        field = StabilityService.stability_scan(
            coeffs,
            request.re_min,
            request.re_max,
            request.im_min,
            request.im_max,
            request.resolution,
            z1=z1,
        )
        return create_response(
            status_code=status.HTTP_200_OK,
            message="Stability scan completed",
            data=field.model_dump(),
        )
    except Exception as e:
        raise_http_error(e, "scan stability")
