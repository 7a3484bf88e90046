"""Tests for ToleranceBudget class."""

import logging

from bloch_hhg.budget import ToleranceBudget


class TestToleranceBudget:
    """Test ToleranceBudget tracking and limits."""

    def test_initial_state(self):
        """Test budget starts with no recorded defect."""
        budget = ToleranceBudget(limit=1e-6)
        assert budget.worst == 0.0
        assert budget.count == 0
        assert budget.exceeded is False
        assert budget.remaining == 1e-6

    def test_record_keeps_worst(self):
        """Test only the largest defect is kept."""
        budget = ToleranceBudget(limit=1e-6)
        budget.record(3e-9)
        budget.record(1e-9)
        assert budget.worst == 3e-9
        assert budget.count == 2
        assert budget.remaining == 1e-6 - 3e-9

    def test_exceeded_when_over_limit(self):
        """Test exceeded returns True once a defect passes the limit."""
        budget = ToleranceBudget(limit=1e-6)
        budget.record(2e-6)
        assert budget.exceeded is True
        assert budget.remaining == 0.0

    def test_exceeded_at_exact_limit(self):
        """Test exceeded returns True at exactly the limit."""
        budget = ToleranceBudget(limit=1e-6)
        budget.record(1e-6)
        assert budget.exceeded is True

    def test_unlimited_budget(self):
        """Test a zero limit never trips."""
        budget = ToleranceBudget(limit=0)
        budget.record(1e3)
        assert budget.exceeded is False
        assert budget.remaining == -1

    def test_debug_log_on_excess(self, caplog):
        """Test crossing the limit is logged with the label."""
        budget = ToleranceBudget(limit=1e-6, label="norm drift")
        with caplog.at_level(logging.DEBUG, logger="bloch_hhg.budget"):
            budget.record(1e-3)
        assert "norm drift" in caplog.text
