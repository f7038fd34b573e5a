#!/usr/bin/env python3
"""
Pydantic models for decomposition parameters, stopping and atom reports
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class DecompositionParams(BaseModel):
    """Knobs of the atomic decomposition pipeline"""
    s: Optional[int] = Field(default=None, ge=0, le=4, description="Moment order (default from the certificate)")
    K_levels: int = Field(default=6, ge=1, le=16, description="Depth cap on the level iteration")
    level_fraction: Optional[float] = Field(
        default=None, gt=0, lt=1,
        description="|E_Q| < level_fraction |Q| (default the lattice overlap bound)"
    )
    N: Optional[int] = Field(default=None, ge=0, le=8, description="Grand maximal order")
    shift_index: int = Field(default=0, ge=0, description="Lattice shift used for the stopping cubes")
    strict: bool = Field(default=False, description="Raise when a stopping cube would fall below h")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"s": 1, "K_levels": 6, "level_fraction": 0.05, "strict": False}
        }
    )


class StoppingReport(BaseModel):
    """Exact outcomes of the stopping-collection properties"""
    cube_count: int = Field(..., ge=0)
    residue_cells: int = Field(..., ge=0, description="Cells of E covered by no selected cube")
    disjoint: bool = Field(..., description="Selected cubes are pairwise disjoint")
    covering: bool = Field(..., description="Union of L and of 9L agree with E up to the residue")
    residue_unresolvable: bool = Field(..., description="No residue cell lies in an admissible cube with 9L in E")
    nine_fold_inside: bool = Field(..., description="Every 9L lies inside E")
    far_from_complement: bool = Field(..., description="Every 32L meets the complement of E")
    scale_separation: bool = Field(..., description="Overlapping 7L have scale gap below 8")
    parent_nesting: Optional[bool] = Field(None, description="32L inside 3Q for parents Q with L* meeting Q*")
    max_overlap: int = Field(default=0, ge=0, description="Largest neighbour count among selected cubes")

    @property
    def passed(self) -> bool:
        return not self.failed()

    def failed(self) -> List[str]:
        checks = {
            "disjoint": self.disjoint,
            "covering": self.covering,
            "far_from_complement": self.far_from_complement,
            "scale_separation": self.scale_separation,
        }
        if self.parent_nesting is not None:
            checks["parent_nesting"] = self.parent_nesting
        return [name for name, ok in checks.items() if not ok]


class PartitionReport(BaseModel):
    """Sampled properties of a partition of unity"""
    cubes: int = Field(..., ge=0)
    identity_error: float = Field(..., ge=0, description="max |sum eta_L - 1| on the resolved support")
    support_ok: bool = Field(..., description="Every eta_L vanishes off L*")
    mass_ratio_min: float = Field(..., description="min over L of int eta_L / |L|")
    mass_ratio_max: float = Field(..., description="max over L of int eta_L / |L|")
    derivative_constant: float = Field(..., ge=0, description="max over L of l(L) sup |grad eta_L|")


class AtomReport(BaseModel):
    """Support, moment and size checks of one atom"""
    support_ok: bool
    max_moment: float = Field(..., ge=0, description="Largest relative moment of order <= s")
    moments_ok: bool
    a_size: float = Field(..., ge=0, description="sup |A_Q a| vnorm(1_Q)")
    w_size: float = Field(..., ge=0, description="sup_x vnorm(|W(.) a(x)| 1_Q)")
    C_atom: Optional[float] = Field(None, description="Constant the sizes were checked against")
    size_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.support_ok and self.moments_ok and self.size_ok


class LevelDiagnostics(BaseModel):
    """Measurements of one level of the decomposition"""
    level: int = Field(..., ge=0)
    cubes: int = Field(..., ge=0, description="Cubes in F_k")
    E_measure: float = Field(..., ge=0, description="|E_k|")
    residue_measure: float = Field(default=0.0, ge=0, description="|E_k| not covered by F_k")
    thresholds: List[float] = Field(default_factory=list, description="Final C for each parent cube")
    b_norm: float = Field(default=0.0, ge=0, description="L2 norm of b_k")
    residual_error: Optional[float] = Field(None, description="Relative L2 error after this level")
    premise_ok: bool = Field(default=True, description="|E_{k+1} cap 3Q| < 2^-4n |Q| for Q in F_k")
    stopping: Optional[StoppingReport] = None

    @field_validator("thresholds")
    @classmethod
    def finite_thresholds(cls, value: List[float]) -> List[float]:
        """Thresholds are positive reals"""
        if any(t <= 0 for t in value):
            raise ValueError("thresholds must be positive")
        return value


class AtomRecord(BaseModel):
    """Manifest entry for one emitted atom"""
    level: int = Field(..., ge=0)
    cube: Dict[str, Any] = Field(..., description="Supporting cube 3Q")
    parent: Dict[str, Any] = Field(..., description="Stopping cube Q")
    lam: float = Field(..., ge=0, description="Coefficient lambda")
    offset: int = Field(..., ge=0, description="Row of the atom in the sample dump")
    report: Optional[AtomReport] = None


class DecompositionSummary(BaseModel):
    """Result manifest of one decomposition run"""
    s: int
    K_levels: int
    levels_used: int
    atom_count: int
    epsilon: float
    L_dec: float
    level_fraction: float
    overlap_constant: int
    relative_error: float = Field(..., ge=0)
    coefficient_norm: Optional[float] = None
    hardy_norm: Optional[float] = None
    exhausted: bool = Field(default=False, description="Some level still had an unresolved residue")
    levels: List[LevelDiagnostics] = Field(default_factory=list)
    atoms: List[AtomRecord] = Field(default_factory=list)


class FSCheckRow(BaseModel):
    """LHS/RHS ratios of the two vector-valued inequalities for one random family"""
    family: int
    decay_ratio: float = Field(..., ge=0)
    operator_ratio: float = Field(..., ge=0)


class FSCheckReport(BaseModel):
    """Ratios over all families and one level finer"""
    L: float
    r: float
    rows: List[FSCheckRow] = Field(default_factory=list)
    refined_rows: List[FSCheckRow] = Field(default_factory=list)

    @property
    def max_decay_ratio(self) -> float:
        return max((row.decay_ratio for row in self.rows), default=0.0)

    @property
    def max_operator_ratio(self) -> float:
        return max((row.operator_ratio for row in self.rows), default=0.0)

    @property
    def refinement_growth(self) -> Optional[float]:
        if not self.refined_rows:
            return None
        fine = max(max(r.decay_ratio, r.operator_ratio) for r in self.refined_rows)
        coarse = max(self.max_decay_ratio, self.max_operator_ratio)
        if coarse == 0.0:
            return 0.0
        return fine / coarse - 1.0

    @property
    def passed(self) -> bool:
        finite = all(r.decay_ratio < float("inf") and r.operator_ratio < float("inf") for r in self.rows)
        growth = self.refinement_growth
        return finite and (growth is None or growth <= 0.2)
