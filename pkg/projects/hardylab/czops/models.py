#!/usr/bin/env python3
"""
Pydantic models for kernel specs and Calderon-Zygmund benchmark reports
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field


class KernelSpec(BaseModel):
    """Convolution kernel and its quadrature knobs"""
    name: Literal["hilbert", "riesz_1", "riesz_2"] = Field(default="hilbert", description="Kernel family")
    truncation: float = Field(default=0.5, gt=0, description="Excluded radius in units of h")
    radii_per_octave: int = Field(default=4, ge=1, le=16, description="Far-field radius ladder density")
    gamma_max: int = Field(default=2, ge=0, le=4, description="Highest derivative order certified")
    q: float = Field(default=2.0, ge=1, description="Campanato averaging exponent")

    @property
    def n(self) -> int:
        return 1 if self.name == "hilbert" else 2

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"name": "hilbert", "truncation": 0.5, "radii_per_octave": 4, "gamma_max": 2}
        }
    )


class KernelConstantRow(BaseModel):
    """Sampled constant for one derivative order"""
    order: int = Field(..., ge=0)
    constant: float = Field(..., ge=0, description="sup |d^gamma K| |x - y|^(n + |gamma|)")
    closed_form: bool = Field(..., description="Derivatives are exact rather than finite differences")


class KernelCertificate(BaseModel):
    """Standard-kernel constants of a convolution kernel"""
    kernel: str
    n: int
    delta: float = 1.0
    rows: List[KernelConstantRow] = Field(default_factory=list)
    holder_constant: float = Field(..., ge=0)
    antisymmetry_error: float = Field(..., ge=0)
    samples: int = Field(..., ge=0)

    def constants(self) -> Dict[int, float]:
        return {row.order: row.constant for row in self.rows}


class DecayFit(BaseModel):
    """Log-log regression of the far-field envelope of T a"""
    slope: Optional[float] = None
    intercept: Optional[float] = None
    radii: List[float] = Field(default_factory=list)
    envelope: List[float] = Field(default_factory=list)
    target_slope: float = Field(..., description="-(n + s + delta)")

    @property
    def passed(self) -> bool:
        return self.slope is None or self.slope <= self.target_slope + 0.3


class MomentReport(BaseModel):
    """Moments of T f over the box with the truncation tail estimate"""
    s: int
    moments: List[float] = Field(default_factory=list, description="|int y^gamma T f| over the box")
    scale: float = Field(..., ge=0, description="int |y^gamma| |T f|, maximized over gamma")
    tail: float = Field(..., ge=0, description="Change of the moments when the window doubles")
    tolerance: float = 1e-8

    @property
    def max_moment(self) -> float:
        return max(self.moments, default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_moment <= self.tolerance * self.scale + 2.0 * self.tail


class CZBenchRow(BaseModel):
    """Norm ratios of one suite member"""
    index: int
    hardy_norm: float = Field(..., ge=0)
    h_to_l: float = Field(..., ge=0, description="vnorm(|W T f|) / hardy_norm(f)")
    h_to_h: Optional[float] = Field(None, description="hardy_norm(T f) / hardy_norm(f), when moments survive")
    moments_preserved: bool


class CZBenchReport(BaseModel):
    """Suite-wide CZ boundedness ratios"""
    kernel: str
    rows: List[CZBenchRow] = Field(default_factory=list)
    refined_rows: List[CZBenchRow] = Field(default_factory=list)

    @property
    def max_h_to_l(self) -> float:
        return max((row.h_to_l for row in self.rows), default=0.0)

    @property
    def max_h_to_h(self) -> Optional[float]:
        values = [row.h_to_h for row in self.rows if row.h_to_h is not None]
        return max(values) if values else None

    @property
    def growth(self) -> Optional[float]:
        if not self.refined_rows or self.max_h_to_l == 0.0:
            return None
        fine = max(row.h_to_l for row in self.refined_rows)
        return fine / self.max_h_to_l - 1.0


class DualityRow(BaseModel):
    """One (f, g) pairing against the product of norms"""
    f_index: int
    g_index: int
    pairing: float
    campanato: float = Field(..., ge=0)
    hardy: float = Field(..., ge=0)
    ratio: float = Field(..., ge=0)
    cancelled: bool = Field(default=False, description="0/0 from a polynomial g")


class DualityReport(BaseModel):
    """Pairing ratios over a suite of pairs"""
    s: int
    q: float
    rows: List[DualityRow] = Field(default_factory=list)
    refined_max: Optional[float] = None

    @property
    def max_ratio(self) -> float:
        return max((row.ratio for row in self.rows), default=0.0)
