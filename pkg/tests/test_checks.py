"""Tests for check results."""

from bloch_hhg.checks import (
    CheckResult,
    all_passed,
    at_least,
    at_most,
    flagged,
    within,
)


class TestChecks:
    """Test threshold checks never raise and explain failures."""

    def test_at_most(self):
        """Test value <= limit passes and above fails with a reason."""
        assert at_most("drift", 1e-9, 1e-8).passed
        failed = at_most("drift", 1e-7, 1e-8)
        assert not failed.passed
        assert failed.reason.startswith("above_limit")

    def test_at_least(self):
        """Test value >= limit passes."""
        assert at_least("split", 20.0, 10.0).passed
        assert at_least("split", 10.0, 10.0).passed
        assert at_least("split", 5.0, 10.0).reason.startswith("below_limit")

    def test_not_a_number_fails(self):
        """Test NaN never passes."""
        assert not at_most("x", float("nan"), 1.0).passed
        assert not at_least("x", float("nan"), 1.0).passed
        assert not within("x", float("nan"), 0.0, 1.0).passed

    def test_within(self):
        """Test ranges are inclusive."""
        assert within("richardson", 16.0, 12.0, 20.0).passed
        assert within("richardson", 12.0, 12.0, 20.0).passed
        assert not within("richardson", 25.0, 12.0, 20.0).passed

    def test_flagged(self):
        """Test boolean checks keep their reason only on failure."""
        assert flagged("shift", True, "ignored").reason == ""
        assert flagged("shift", False, "k0_dependent_displacement").reason == (
            "k0_dependent_displacement"
        )

    def test_as_dict_and_all_passed(self):
        """Test serialization and aggregation."""
        results = [CheckResult("a", 1.0, 2.0), at_most("b", 3.0, 2.0)]
        assert results[0].as_dict() == {
            "name": "a",
            "value": 1.0,
            "limit": 2.0,
            "passed": True,
            "reason": "",
        }
        assert not all_passed(results)
        assert all_passed(results[:1])
        assert "FAIL" in repr(results[1])
