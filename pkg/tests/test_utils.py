"""Tests for console output and task execution helpers."""

import math

from peclet.utils import output
from peclet.utils.parallel import map_tasks


def test_format_check_lines():
    """Test pass/fail lines with and without detail."""
    assert output.format_check("slope", True, "target 0.5").endswith("slope  (target 0.5)")
    assert output.format_check("slope", False).endswith(" slope")


def test_safe_echo_on_windows(monkeypatch):
    """Test emojis become ASCII tags on Windows consoles."""
    monkeypatch.setattr(output.sys, "platform", "win32")

    assert output.format_check("energy", True) == "  [OK] energy"
    assert output.format_info("Running", "⚙️") == "[CONFIG] Running"
    assert output.safe_echo("🔒 Certifying") == "[CERT] Certifying"


def test_map_tasks_serial_and_parallel_agree():
    """Test worker pools return results in task order."""
    tasks = [float(i) for i in range(8)]

    serial = map_tasks(math.sqrt, tasks)
    parallel = map_tasks(math.sqrt, tasks, workers=2)

    assert serial == parallel == [math.sqrt(t) for t in tasks]
