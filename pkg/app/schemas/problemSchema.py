from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from app.constants.constants import CommandName, EndoVariant
from app.schemas.reportSchema import CertificateSchema
from app.schemas.spaceSchema import KernelSchema, OperatorSchema, PartitionSchema, SpaceSchema, WeightFamilySchema


class CounterexampleSchema(BaseModel):
    """Parameters of the stable-embedding mass table."""
    q: float = Field(2.0, ge=1.0, le=2.0)
    sizes: List[int] = Field(default_factory=lambda: [4, 8, 16, 32], min_length=1)
    C2: float = Field(1.0, gt=0)
    C1: Optional[float] = Field(None, gt=0)

    class Config:
        extra = "forbid"


_NEEDS_OPERATOR = {
    CommandName.rho,
    CommandName.lambda_,
    CommandName.dominate,
    CommandName.endo,
    CommandName.conjugate,
    CommandName.verify,
}


class ProblemFile(BaseModel):
    """One command with its inputs; every run is reproducible from this file and its seed."""
    version: Literal["1"]
    command: CommandName
    p: Union[float, str] = 2.0
    seed: int = Field(0, ge=0)
    tol: Optional[float] = Field(None, gt=0)
    budget: Optional[int] = Field(None, ge=1)
    family_size: int = Field(3, ge=1)
    pool_size: int = Field(0, ge=0)
    C: Optional[float] = Field(None, gt=0)
    y_star: Optional[List[float]] = None
    operator: Optional[OperatorSchema] = None
    partition: Optional[PartitionSchema] = None
    kernel: Optional[KernelSchema] = None
    weights: Optional[WeightFamilySchema] = None
    hint: Optional[List[float]] = None
    X: Optional[SpaceSchema] = None
    variant: EndoVariant = EndoVariant.single
    truncation: Optional[int] = Field(None, ge=1)
    counterexample: Optional[CounterexampleSchema] = None
    certificate: Optional[CertificateSchema] = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def validate_inputs(self):
        if self.operator is not None and self.partition is not None:
            raise ValueError("give either operator or partition, not both")
        has_operator = self.operator is not None or self.partition is not None
        if self.command in _NEEDS_OPERATOR and not has_operator:
            raise ValueError(f"command '{self.command.value}' needs an operator or a partition")
        if self.command == CommandName.kernel and self.kernel is None:
            raise ValueError("command 'kernel' needs a kernel")
        if self.command == CommandName.verify and self.certificate is None:
            raise ValueError("command 'verify' needs a certificate")
        return self
