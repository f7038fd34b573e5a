#!/usr/bin/env python3
"""
Experiment configuration: the pydantic model tree loaded from JSON, its
hash, and the realized objects (grid, exponent, weight, catalogs) a
command works on.
"""

import json
import hashlib
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core.errors import ConfigInvalid
from ..core.grid import Cube, Grid
from ..core.models import ExponentSpec, GridSpec
from ..core.vexp import ExponentProfile, exponent_from_preset
from ..czops.models import KernelSpec
from ..decomp.models import DecompositionParams
from ..maximal.models import MaximalParams
from ..maximal.schwartz_catalog import TestFunctionCatalog, scale_ladder
from ..maximal.convex_maximal import resolve_catalog
from ..weights.catalog import cube_catalog
from ..weights.models import CatalogSpec, WeightPresetSpec
from ..weights.weights import MatrixWeight, weight_from_preset

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1


# ============================================================================
# CONFIG MODELS
# ============================================================================

class SuiteSpec(BaseModel):
    """Random test-function suite"""
    count: int = Field(default=10, ge=1, le=200, description="Number of suite members")
    seed: int = Field(default=0, ge=0, le=MAX_SEED, description="Philox seed of the suite")
    max_scale: Optional[float] = Field(default=None, gt=0, description="Largest maximal-function scale")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"count": 10, "seed": 0}
        }
    )


class ExperimentConfig(BaseModel):
    """Everything a hardylab command needs to reproduce a run"""
    grid: GridSpec = Field(default_factory=GridSpec)
    exponent: ExponentSpec = Field(default_factory=ExponentSpec)
    weight: WeightPresetSpec = Field(default_factory=WeightPresetSpec)
    catalog: CatalogSpec = Field(default_factory=CatalogSpec)
    maximal: MaximalParams = Field(default_factory=MaximalParams)
    decomposition: DecompositionParams = Field(default_factory=DecompositionParams)
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    suite: SuiteSpec = Field(default_factory=SuiteSpec)
    refine: bool = Field(default=False, description="Repeat refinement-sensitive estimates at J + 1")
    output_dir: Optional[str] = Field(default=None, description="Directory receiving the run outputs")

    @model_validator(mode="after")
    def validate_dimensions(self):
        """Kernel dimension must match the grid and refinement must stay within the J bounds"""
        if self.kernel.n != self.grid.n:
            raise ValueError(f"kernel {self.kernel.name} needs n={self.kernel.n}, grid has n={self.grid.n}")
        top = 12 if self.grid.n == 1 else 9
        if self.refine and self.grid.J + 1 > top:
            raise ValueError(f"refine needs J + 1 <= {top}")
        return self

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        """The run seed replaces the suite and catalog seeds"""
        if seed is None:
            return self
        if not 0 <= seed <= MAX_SEED:
            raise ConfigInvalid("seed must be an unsigned 64-bit integer", field="seed", value=seed)
        return self.model_copy(update={
            "suite": self.suite.model_copy(update={"seed": seed}),
            "catalog": self.catalog.model_copy(update={"seed": seed}),
        })

    def refined(self) -> "ExperimentConfig":
        return self.model_copy(update={"grid": self.grid.refined()})

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "grid": {"n": 1, "J": 8, "L_box": 4.0},
                "exponent": {"preset": "constant", "params": {"p": 1.0}},
                "weight": {"preset": "diag_power", "params": {"a": [0.5, 0.25]}},
                "decomposition": {"s": 1, "K_levels": 6},
                "kernel": {"name": "hilbert"},
                "suite": {"count": 10, "seed": 0}
            }
        }
    )


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error.get("loc", ())) or "<root>"


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config mapping, turning pydantic errors into ConfigInvalid"""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigInvalid(f"invalid configuration: {first.get('msg', 'validation error')}",
                            field=_field_path(first), errors=len(e.errors()))


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate an experiment config JSON file"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigInvalid("configuration file not found", path=str(path))
    except json.JSONDecodeError as e:
        raise ConfigInvalid("configuration is not valid JSON", path=str(path), line=e.lineno)
    if not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a JSON object", path=str(path))
    config = parse_config(data)
    logger.debug(f"Loaded configuration from {path}")
    return config


def config_hash(config: ExperimentConfig, seed: Optional[int] = None) -> str:
    """sha256 of the canonical JSON dump of the config plus the seed"""
    payload = config.model_dump(mode="json", exclude={"output_dir"})
    payload["seed"] = config.suite.seed if seed is None else seed
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ============================================================================
# REALIZED EXPERIMENT
# ============================================================================

@dataclass(eq=False)
class Experiment:
    """Grid, exponent, weight and catalogs realized from one config"""

    config: ExperimentConfig

    @cached_property
    def grid(self) -> Grid:
        return self.config.grid.to_grid()

    @cached_property
    def p(self) -> ExponentProfile:
        return exponent_from_preset(self.grid, self.config.exponent.preset, self.config.exponent.params)

    @cached_property
    def weight(self) -> MatrixWeight:
        return weight_from_preset(self.grid, self.config.weight.preset, self.config.weight.params)

    @property
    def m(self) -> int:
        return self.weight.m

    @cached_property
    def cubes(self) -> List[Cube]:
        spec = self.config.catalog
        return cube_catalog(self.grid, spec.random_count, spec.seed, spec.min_edge, spec.max_edge)

    def test_functions(self, alpha: Optional[float] = None) -> TestFunctionCatalog:
        params = self.config.maximal
        N = params.N if params.N is not None else self.config.decomposition.N
        return resolve_catalog(self.grid.n, N, params.alpha or alpha, params.max_degree)

    @cached_property
    def scales(self) -> List[float]:
        return scale_ladder(self.grid, self.config.suite.max_scale)

    def refined(self) -> "Experiment":
        return Experiment(self.config.refined())
