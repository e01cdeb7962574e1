# MIT License

# Copyright (c) 2025 Abhishek Mishra (neolateral.in)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
Display utilities for gradflow.
Prints run summaries, rate reports and the registries as rich tables.
"""

from rich import box
from rich.console import Console
from rich.table import Table

_STATUS_STYLE = {"pass": "green", "fail": "red", "error": "bold red"}


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


class RunDisplay:
    """
    RunDisplay prints harness output on the terminal.
    """

    def __init__(self, console=None):
        self.console = console or Console()

    def display_summary(self, summary):
        """
        One row per scenario with its failing monitors
        """
        table = Table(title="Scenarios", box=box.SIMPLE)
        table.add_column("Id")
        table.add_column("Kind")
        table.add_column("Status")
        table.add_column("Monitors", justify="right")
        table.add_column("Failed / Error")

        for result in summary.scenarios:
            style = _STATUS_STYLE[result.status]
            passed = sum(1 for v in result.monitors.values() if v)
            if result.status == "error":
                note = result.error
            else:
                note = ", ".join(sorted(k for k, v in result.monitors.items() if not v))
            table.add_row(
                result.id,
                result.kind,
                f"[{style}]{result.status}[/]",
                f"{passed}/{len(result.monitors)}",
                note or "",
            )
        self.console.print(table)

    def display_rate_report(self, record):
        table = Table(title="Rate Report", box=box.SIMPLE)
        table.add_column("Stat")
        table.add_column("Value")
        for key in sorted(record):
            table.add_row(key, _fmt(record[key]))
        self.console.print(table)

    def display_registry(self, entries):
        """
        Energies, systems and kernels with their keyword defaults
        """
        for title, key in (("Energies", "energies"), ("Systems", "systems"), ("Kernels", "kernels")):
            table = Table(title=title, box=box.SIMPLE)
            table.add_column("Name")
            table.add_column("Parameters")
            if key == "energies":
                table.add_column("Theta")
            for entry in entries[key]:
                params = ", ".join(f"{k}={v}" for k, v in entry["params"].items())
                row = [entry["name"], params]
                if key == "energies":
                    row.append(_fmt(entry["theta"]))
                table.add_row(*row)
            self.console.print(table)
