from typing import List

from pydantic import BaseModel, ConfigDict

from marginalflow.models.fock import OccupationConfig
from marginalflow.models.reports import BoundCheck


class SelectionRule(BaseModel):
    """Configurations annihilated by D-hat in its reference basis"""
    zero_configs: List[OccupationConfig]
    labels: List[str]

    model_config = ConfigDict(frozen=True)

    @property
    def dimension(self) -> int:
        return len(self.zero_configs)


class VarianceReport(BaseModel):
    mean: float
    variance: float
    lower_bound: BoundCheck
