from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.constants.constants import CertificateKind, CertificateMethod, CommandName
from app.models.certificates import DominationCertificate, PietschCertificate
from app.utils.report_utils import parse_number


class CertificateSchema(BaseModel):
    """Stored domination or Pietsch certificate, identified by the SHA-256 of its content."""
    certificate_id: str = Field(..., min_length=64, max_length=64)
    kind: CertificateKind
    p: float
    C: float
    y_star: List[float]
    z_star: Optional[List[float]] = None
    support: Optional[List[List[float]]] = None
    eta: Optional[List[float]] = None
    method: CertificateMethod
    exact: bool
    residual: Union[float, str] = 0.0
    cuts: List[List[float]] = Field(default_factory=list)
    tight_direction: Optional[List[float]] = None

    class Config:
        extra = "forbid"

    @model_validator(mode="after")
    def validate_payload(self):
        if self.kind == CertificateKind.domination and self.z_star is None:
            raise ValueError("a domination certificate needs z_star")
        if self.kind == CertificateKind.pietsch and (self.support is None or self.eta is None):
            raise ValueError("a Pietsch certificate needs support and eta")
        return self

    def content(self) -> Dict[str, Any]:
        """The fields as they were stored, for recomputing the id."""
        return self.model_dump(mode="json", exclude_unset=True)

    def to_certificate(self) -> Union[DominationCertificate, PietschCertificate]:
        cuts = [np.asarray(f, dtype=np.float64) for f in self.cuts]
        residual = parse_number(self.residual)
        if self.kind == CertificateKind.domination:
            return DominationCertificate(
                p=self.p,
                C=self.C,
                y_star=np.asarray(self.y_star, dtype=np.float64),
                z_star=np.asarray(self.z_star, dtype=np.float64),
                method=self.method,
                exact=self.exact,
                residual=residual,
                cuts=cuts,
                tight_direction=None if self.tight_direction is None else np.asarray(self.tight_direction, dtype=np.float64),
            )
        return PietschCertificate(
            p=self.p,
            C=self.C,
            y_star=np.asarray(self.y_star, dtype=np.float64),
            support=np.asarray(self.support, dtype=np.float64),
            eta=np.asarray(self.eta, dtype=np.float64),
            method=self.method,
            exact=self.exact,
            residual=residual,
            cuts=cuts,
        )


class CommandReport(BaseModel):
    """Envelope written for every command."""
    version: str
    command: CommandName
    seed: int
    status: str
    exit_code: int
    anchors: Dict[str, str] = Field(default_factory=dict)
    result: Dict[str, Any] = Field(default_factory=dict)
    certificate: Optional[Dict[str, Any]] = None
