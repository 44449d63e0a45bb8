"""Running the benchmark scenarios.

Every scenario is available as `sphbt <name>` on the command line and as a
function in `sphbt.scenarios`.  Parameters come from built-in defaults, then
an optional YAML or JSON file, then `--key value` flags.  Results are CSV
tables plus a manifest.json recording parameters and versions.

    sphbt transform-convergence --out out/tc
    sphbt eigen --config run.yaml --grid.dr 0.1
    sphbt streak --ir_delay -20,0,20          # desk preset, about 25 min
    sphbt streak --full_scale true            # rmax = 409.6, hours
    sphbt oscillator --show-defaults

This script drives the same code path with a small configuration.
"""

import tempfile
from pathlib import Path

from sphbt import cli

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "tc"
    code = cli.main(["transform-convergence", "--out", str(out), "--degrees", "1,2", "--rmax", "25.6,51.2,102.4"])
    print("exit code", code)
    print((out / "summary.csv").read_text())
    print(sorted(p.name for p in out.iterdir()))

# Configuration errors name the offending key and exit with status 2.
print("exit code for a negative step:", cli.main(["eigen", "--grid.dr", "-0.1"]))
