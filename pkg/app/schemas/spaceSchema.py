from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.operator import OperatorModel
from app.models.space import MeasureSpace, SpaceDescriptor, parse_exponent
from app.models.weights import WeightFamily


class SpaceSchema(BaseModel):
    """Weighted L^p space over atoms with the given masses (counting measure with `atoms`)."""
    masses: Optional[List[float]] = None
    atoms: Optional[int] = Field(None, ge=1)
    exponent: Union[float, str] = 2.0
    weight: Optional[List[float]] = None

    class Config:
        extra = "forbid"

    @field_validator("exponent")
    @classmethod
    def validate_exponent(cls, value):
        parse_exponent(value)
        return value

    @model_validator(mode="after")
    def validate_measure(self):
        if (self.masses is None) == (self.atoms is None):
            raise ValueError("give exactly one of masses and atoms")
        return self

    def to_measure(self) -> MeasureSpace:
        if self.masses is not None:
            return MeasureSpace(self.masses)
        return MeasureSpace.counting(self.atoms)

    def to_descriptor(self) -> SpaceDescriptor:
        return SpaceDescriptor(self.to_measure(), self.exponent, self.weight)


class OperatorSchema(BaseModel):
    """Matrix with rows indexed by codomain atoms."""
    matrix: List[List[float]] = Field(..., min_length=1)
    domain: SpaceSchema
    codomain: SpaceSchema

    class Config:
        extra = "forbid"

    def to_model(self) -> OperatorModel:
        return OperatorModel(self.matrix, self.domain.to_descriptor(), self.codomain.to_descriptor())


class PartitionSchema(BaseModel):
    """Averaging operator over the cells of a partition, from L^inf into L^codomain_exponent."""
    masses: List[float] = Field(..., min_length=1)
    cells: List[List[int]] = Field(..., min_length=1)
    codomain_exponent: Union[float, str] = 2.0

    class Config:
        extra = "forbid"


class KernelSchema(BaseModel):
    """Nonnegative kernel grid, rows = x atoms, columns = y atoms."""
    grid: List[List[float]] = Field(..., min_length=1)
    x_masses: List[float] = Field(..., min_length=1)
    y_masses: List[float] = Field(..., min_length=1)

    class Config:
        extra = "forbid"


class WeightFamilySchema(BaseModel):
    """Target weights v over the codomain measure."""
    members: List[List[float]] = Field(..., min_length=1)

    class Config:
        extra = "forbid"

    def to_family(self, base: MeasureSpace) -> WeightFamily:
        return WeightFamily.from_arrays(base, self.members)
