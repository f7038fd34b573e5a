#!/usr/bin/env python3
"""
Pydantic models for grid and exponent configuration
"""

import math
from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .grid import Grid


class GridSpec(BaseModel):
    """Uniform grid on [-L_box, L_box]^n with 2^J cells per axis"""
    n: Literal[1, 2] = Field(default=1, description="Spatial dimension")
    J: int = Field(default=8, ge=4, le=12, description="Resolution level, 2^J cells per axis")
    L_box: float = Field(default=4.0, gt=0, description="Box half-width (power of two)")

    @field_validator("L_box")
    @classmethod
    def validate_power_of_two(cls, v):
        """L_box must be an exact power of two"""
        if not float(math.log2(v)).is_integer():
            raise ValueError("L_box must be a power of two")
        return v

    @model_validator(mode="after")
    def validate_resolution(self):
        """2D grids are limited to J <= 9"""
        if self.n == 2 and self.J > 9:
            raise ValueError("J must be at most 9 for 2D grids")
        return self

    def to_grid(self) -> Grid:
        return Grid(self.n, self.J, self.L_box)

    def refined(self) -> "GridSpec":
        return self.model_copy(update={"J": self.J + 1})

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"n": 1, "J": 8, "L_box": 4.0}
        }
    )


EXPONENT_PARAMS = {
    "constant": ("p",),
    "log_decay": ("p_inf", "c"),
    "two_level": ("p_a", "p_b", "split"),
    "smooth_step": ("p_a", "p_b", "width"),
}


class ExponentSpec(BaseModel):
    """Variable exponent preset with its parameters"""
    preset: Literal["constant", "log_decay", "two_level", "smooth_step"] = Field(
        default="constant",
        description="Exponent family",
    )
    params: Dict[str, Any] = Field(default_factory=lambda: {"p": 2.0}, description="Family parameters")

    @model_validator(mode="after")
    def validate_params(self):
        """Only declared parameters are accepted and exponents stay positive"""
        allowed = EXPONENT_PARAMS[self.preset]
        unknown = set(self.params) - set(allowed)
        if unknown:
            raise ValueError(f"unknown parameters for {self.preset}: {sorted(unknown)}")
        for key in ("p", "p_inf", "p_a", "p_b"):
            if key not in self.params:
                continue
            value = self.params[key]
            if isinstance(value, str):
                if key == "p" and value.lower() in ("inf", "infinity"):
                    continue
                raise ValueError(f"{key} must be a number")
            if value <= 0:
                raise ValueError(f"{key} must be positive")
        if self.preset == "log_decay":
            p_inf = self.params.get("p_inf", 2.0)
            c = self.params.get("c", 1.0)
            if p_inf + min(c, 0.0) <= 0:
                raise ValueError("log_decay must stay positive")
        if self.preset == "smooth_step" and self.params.get("width", 0.5) <= 0:
            raise ValueError("width must be positive")
        return self

    def declared_p_minus(self) -> float:
        p = self.params
        if self.preset == "constant":
            value = p.get("p", 2.0)
            return math.inf if isinstance(value, str) else float(value)
        if self.preset == "log_decay":
            return float(p.get("p_inf", 2.0)) + min(float(p.get("c", 1.0)), 0.0)
        return min(float(p.get("p_a", 1.0)), float(p.get("p_b", 2.0)))

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"preset": "log_decay", "params": {"p_inf": 2.0, "c": 1.0}}
        }
    )


class LHCertificate(BaseModel):
    """Sampled log-Holder constants of an exponent"""
    preset: str = Field(..., description="Exponent preset")
    p_minus: float = Field(..., description="Smallest sampled exponent")
    p_plus: float = Field(..., description="Largest sampled exponent")
    C0: float = Field(..., ge=0, description="Local log-Holder constant")
    Cinf: float = Field(..., ge=0, description="Decay log-Holder constant")
    p_inf: Optional[float] = Field(None, description="Limit exponent")
