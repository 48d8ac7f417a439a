from enum import Enum
from typing import Any, Dict, List, Optional
from pydantic import BaseModel, Field


class CheckStatus(str, Enum):
    """Outcome of a single verification"""
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"

    @classmethod
    def of(cls, holds: bool) -> "CheckStatus":
        return cls.PASS if holds else cls.FAIL


class CheckResult(BaseModel):
    """One named check with its verdict and supporting detail"""
    name: str
    status: CheckStatus
    detail: Optional[Dict[str, Any]] = None
    reason: Optional[str] = None  # filled for SKIPPED checks


class RunReport(BaseModel):
    """Report written by every CLI subcommand"""
    command: str
    seed: int
    mode: str
    input_digest: Optional[str] = None
    checks: List[CheckResult] = Field(default_factory=list)
    results: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None
    wall_time: float = 0.0  # seconds

    @property
    def all_passed(self) -> bool:
        return self.error is None and all(check.status != CheckStatus.FAIL for check in self.checks)

    def add(self, name: str, holds: bool, detail: Optional[Dict[str, Any]] = None) -> CheckResult:
        result = CheckResult(name=name, status=CheckStatus.of(holds), detail=detail)
        self.checks.append(result)
        return result

    def skip(self, name: str, reason: str) -> CheckResult:
        result = CheckResult(name=name, status=CheckStatus.SKIPPED, reason=reason)
        self.checks.append(result)
        return result
