"""
Physics check results.

Checks never raise: each returns a CheckResult with passed=False and a
reason string, and the CLI turns any failed check into exit status 1.
"""

import logging
import math

logger = logging.getLogger(__name__)


class CheckResult:
    """Outcome of one numerical check against its threshold."""

    def __init__(
        self,
        name: str,
        value: float,
        limit: float,
        passed: bool = True,
        reason: str = "",
    ):
        self.name = name
        self.value = value
        self.limit = limit
        self.passed = passed
        self.reason = reason

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "limit": self.limit,
            "passed": self.passed,
            "reason": self.reason,
        }

    def __repr__(self) -> str:
        status = "pass" if self.passed else f"FAIL ({self.reason})"
        return (
            f"CheckResult({self.name}={self.value:.3e} vs {self.limit:.3e}: {status})"
        )


def _fail(name: str, value: float, limit: float, reason: str) -> CheckResult:
    logger.warning("Check %s failed: %s", name, reason)
    return CheckResult(name, value, limit, passed=False, reason=reason)


def at_most(name: str, value: float, limit: float) -> CheckResult:
    """Pass when value <= limit."""
    if math.isnan(value):
        return _fail(name, value, limit, "not_a_number")
    if value > limit:
        return _fail(name, value, limit, f"above_limit: {value:.3e} > {limit:.3e}")
    return CheckResult(name, value, limit)


def at_least(name: str, value: float, limit: float) -> CheckResult:
    """Pass when value >= limit."""
    if math.isnan(value):
        return _fail(name, value, limit, "not_a_number")
    if value < limit:
        return _fail(name, value, limit, f"below_limit: {value:.3e} < {limit:.3e}")
    return CheckResult(name, value, limit)


def within(name: str, value: float, low: float, high: float) -> CheckResult:
    """Pass when low <= value <= high; limit records the upper bound."""
    if math.isnan(value) or not low <= value <= high:
        return _fail(
            name, value, high, f"outside_range: {value:.3e} not in [{low}, {high}]"
        )
    return CheckResult(name, value, high)


def flagged(name: str, ok: bool, reason: str) -> CheckResult:
    """Boolean check; reason is used only when ok is False."""
    if not ok:
        return _fail(name, 0.0, 0.0, reason)
    return CheckResult(name, 1.0, 1.0)


def all_passed(results: list[CheckResult]) -> bool:
    return all(r.passed for r in results)
