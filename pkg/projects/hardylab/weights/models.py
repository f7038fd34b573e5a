#!/usr/bin/env python3
"""
Pydantic models for weight presets, cube catalogs and weight certificates
"""

import math
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

WEIGHT_PARAMS = {
    "identity": ("m",),
    "constant": ("matrix",),
    "scalar_power": ("a", "m"),
    "diag_power": ("a",),
    "rotated_diag": ("theta", "a1", "a2"),
    "bump_conjugated": ("twist", "a1", "a2"),
}


class WeightPresetSpec(BaseModel):
    """Matrix weight preset with its parameters"""
    preset: Literal["identity", "constant", "scalar_power", "diag_power",
                    "rotated_diag", "bump_conjugated"] = Field(
        default="identity",
        description="Weight family",
    )
    params: Dict[str, Any] = Field(default_factory=dict, description="Family parameters")

    @model_validator(mode="after")
    def validate_params(self):
        """Only declared parameters are accepted"""
        unknown = set(self.params) - set(WEIGHT_PARAMS[self.preset])
        if unknown:
            raise ValueError(f"unknown parameters for {self.preset}: {sorted(unknown)}")
        if "m" in self.params and self.params["m"] not in (1, 2, 3):
            raise ValueError("m must be 1, 2 or 3")
        if self.preset == "diag_power":
            exponents = self.params.get("a", [0.5, 0.25])
            if not isinstance(exponents, list) or not 1 <= len(exponents) <= 3:
                raise ValueError("diag_power needs a list of 1 to 3 exponents")
        return self

    @property
    def m(self) -> int:
        if self.preset in ("identity", "scalar_power"):
            return int(self.params.get("m", 2))
        if self.preset == "constant":
            return len(self.params.get("matrix", [[2.0, 0.5], [0.5, 1.0]]))
        if self.preset == "diag_power":
            return len(self.params.get("a", [0.5, 0.25]))
        return 2

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"preset": "rotated_diag", "params": {"theta": 0.5235987755982988, "a1": 0.5, "a2": 0.25}}
        }
    )


class CatalogSpec(BaseModel):
    """Cube family replacing the supremum over all cubes"""
    random_count: int = Field(default=200, ge=0, le=5000, description="Number of random cubes")
    seed: int = Field(default=0, ge=0, description="Seed for the random cubes")
    min_edge: Optional[float] = Field(default=None, gt=0, description="Smallest dyadic edge")
    max_edge: Optional[float] = Field(default=None, gt=0, description="Largest dyadic edge")

    @model_validator(mode="after")
    def validate_edges(self):
        """max_edge must exceed min_edge"""
        if self.min_edge is not None and self.max_edge is not None and self.max_edge < self.min_edge:
            raise ValueError("max_edge must be at least min_edge")
        return self


class ReverseHolderRow(BaseModel):
    """Outcome of one reverse Holder exponent on the ladder"""
    r: float = Field(..., gt=1, description="Tested reverse Holder exponent")
    max_ratio: float = Field(..., description="Largest normalized ratio over the catalog")
    refined_ratio: Optional[float] = Field(None, description="Same quantity one grid level finer")
    passed: bool = Field(..., description="Finite, within budget and refinement-stable")


class WeightCertificate(BaseModel):
    """Numerically estimated characteristics of a matrix weight"""
    weight_preset: str = Field(..., description="Weight preset name")
    exponent_preset: str = Field(..., description="Exponent preset name")
    n: int = Field(..., description="Spatial dimension")
    m: int = Field(..., description="Matrix size")
    p_minus: float = Field(..., description="Smallest sampled exponent")
    ap_char: Optional[float] = Field(None, description="A_p characteristic (only for p >= 1)")
    apinfty_char: float = Field(..., description="A_p,infinity characteristic")
    d1: float = Field(..., ge=0, description="Lower dimension estimate")
    d2: float = Field(..., ge=0, description="Upper dimension estimate")
    Delta: float = Field(..., ge=0, description="d1 + d2")
    r_W: float = Field(..., description="Largest reverse Holder exponent that passed")
    alpha: float = Field(..., gt=0, le=1, description="Convexification exponent")
    u: float = Field(..., gt=0, description="Reducing maximal exponent")
    max_fit_ratio: float = Field(..., description="Worst reducing-operator equivalence ratio")
    catalog_size: int = Field(..., description="Number of cubes in the catalog")
    reverse_holder: List[ReverseHolderRow] = Field(default_factory=list, description="Ladder results")
    contracts: Dict[str, bool] = Field(default_factory=dict, description="Named contract outcomes")

    @property
    def passed(self) -> bool:
        return all(self.contracts.values())

    def summary_row(self) -> Dict[str, Any]:
        return {
            "weight": self.weight_preset,
            "exponent": self.exponent_preset,
            "ap_char": self.ap_char,
            "apinfty_char": self.apinfty_char,
            "d1": self.d1,
            "d2": self.d2,
            "r_W": self.r_W,
            "alpha": self.alpha,
            "u": self.u,
            "max_fit_ratio": self.max_fit_ratio,
            "passed": self.passed
        }

    def minimal_moment_order(self) -> int:
        """Smallest admissible moment order floor(d2 + n(1/r - 1))"""
        r = min(1.0, self.p_minus)
        return max(0, int(math.floor(self.d2 + self.n * (1.0 / r - 1.0))))
