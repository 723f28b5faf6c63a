"""Drive the command-line interface from a config file.

Writes a synthetic panel to CSV, writes an INI config next to it and runs
``allocbench backtest``, ``frontier`` and ``spanning`` into a temporary
directory, then prints the head of each report.

    python3 demos/cli_round_trip.py
"""

import tempfile
from pathlib import Path

from allocbench.cli import main
from allocbench.data import write_metadata, write_panel
from allocbench.synthetic import synthetic_panel

panel, volumes = synthetic_panel(4, 3, 420, seed=2)

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    write_panel(panel, tmp / "returns.csv")
    write_panel(volumes, tmp / "volumes.csv")
    write_metadata(panel, tmp / "assets.csv")
    (tmp / "run.ini").write_text(
        "[data]\n"
        "returns = returns.csv\n"
        "volumes = volumes.csv\n"
        "metadata = assets.csv\n"
        "[backtest]\n"
        "rebalance = monthly\n"
        "strategies = EW, MinVar, ERC, MD, CombNaive\n"
        "seed = 11\n"
        "[libro]\n"
        "enabled = true\n"
        "[frontier]\n"
        "dates = last\n"
        "grid_size = 10\n"
        "[output]\n"
        "dir = out\n"
    )
    for command in ("backtest", "frontier", "spanning"):
        code = main([command, "--config", str(tmp / "run.ini")])
        print(f"allocbench {command} -> exit {code}")
    for path in sorted((tmp / "out").iterdir()):
        lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
        print(f"\n--- {path.name} ({len(lines) - 1} rows) ---")
        print("\n".join(lines[:4]))
