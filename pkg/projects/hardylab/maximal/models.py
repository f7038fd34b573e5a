#!/usr/bin/env python3
"""
Pydantic models for maximal-operator parameters and experiment reports
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

KIND_NAMES = ("radial", "grand_radial", "nontangential", "peetre", "grand_peetre",
              "hl", "variable", "christ_goldberg", "reducing_cg")


class MaximalParams(BaseModel):
    """Parameters shared by the maximal family"""
    kind: Literal["radial", "grand_radial", "nontangential", "peetre", "grand_peetre",
                  "hl", "variable", "christ_goldberg", "reducing_cg"] = Field(
        default="grand_radial",
        description="Maximal operator to evaluate",
    )
    N: Optional[int] = Field(default=None, ge=0, le=8, description="Grand maximal order (default ceil(n/alpha)+1)")
    a: float = Field(default=1.0, gt=0, description="Non-tangential aperture")
    l: Optional[float] = Field(default=None, gt=0, description="Peetre decay (default 2n/alpha)")
    alpha: Optional[float] = Field(default=None, gt=0, le=1, description="Convexification exponent override")
    u: Optional[float] = Field(default=None, gt=0, description="Reducing maximal exponent override")
    q: Optional[float] = Field(default=None, gt=0, description="Constant inner exponent for the variable maximal")
    max_degree: Optional[int] = Field(default=None, ge=0, description="Cap on catalog monomial degree")

    @model_validator(mode="after")
    def validate_peetre(self):
        """Peetre decay must exceed n/alpha; only checkable when both are given"""
        if self.l is not None and self.alpha is not None and self.l * self.alpha <= 1.0:
            raise ValueError("l must exceed n/alpha")
        return self

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"kind": "grand_radial", "N": 3, "a": 1.0, "l": 4.0}
        }
    )


class EquivalenceRow(BaseModel):
    """Norms of the maximal images of one suite member"""
    index: int = Field(..., description="Suite member index")
    radial: float = Field(..., ge=0)
    nontangential: float = Field(..., ge=0)
    peetre: float = Field(..., ge=0)
    grand_radial: float = Field(..., ge=0)
    grand_peetre: float = Field(..., ge=0)
    ratios: Dict[str, float] = Field(default_factory=dict, description="Norm ratios against the radial norm")
    ordering_holds: bool = Field(..., description="Pointwise radial <= nontangential <= (1+a)^l peetre")


class EquivalenceReport(BaseModel):
    """Suite-wide equivalence table with its recorded bracket"""
    rows: List[EquivalenceRow] = Field(default_factory=list)
    brackets: Dict[str, float] = Field(default_factory=dict, description="max(ratio, 1/ratio) per pair")
    a: float
    l: float
    N: int

    @property
    def ordering_holds(self) -> bool:
        return all(row.ordering_holds for row in self.rows)

    @property
    def bracket(self) -> float:
        return max(self.brackets.values(), default=1.0)

    def table(self) -> List[Dict[str, float]]:
        out = []
        for row in self.rows:
            record = {"index": row.index, "radial": row.radial, "nontangential": row.nontangential,
                      "peetre": row.peetre, "grand_radial": row.grand_radial,
                      "grand_peetre": row.grand_peetre, "ordering_holds": row.ordering_holds}
            record.update({f"ratio_{k}": v for k, v in row.ratios.items()})
            out.append(record)
        return out


class BoundednessReport(BaseModel):
    """Largest norm ratio of an operator over random inputs"""
    operator: str
    max_ratio: float = Field(..., ge=0)
    refined_ratio: Optional[float] = Field(None, description="Same estimate one grid level finer")
    inputs: int = Field(..., ge=0)

    @property
    def growth(self) -> Optional[float]:
        if self.refined_ratio is None or self.max_ratio == 0:
            return None
        return self.refined_ratio / self.max_ratio - 1.0
