from typing import List

from pydantic import BaseModel, ConfigDict, computed_field


class BoundCheck(BaseModel):
    """One-sided inequality lhs <= rhs, accepted within tol"""
    name: str
    lhs: float
    rhs: float
    tol: float

    model_config = ConfigDict(frozen=True)

    @computed_field
    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @computed_field
    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + self.tol)


def all_hold(checks: List[BoundCheck]) -> bool:
    return all(c.holds for c in checks)
