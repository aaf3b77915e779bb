"""Run every CLI subcommand on the bundled configurations.

Each configuration lives in demos/configs; artifacts go to demos/out/<name>.
The printed exit codes follow the CLI taxonomy: 0 ok, 1 config error,
2 degenerate geometry, 3 incompatible load in strict mode, 4 solver failure.
"""
import pathlib
import subprocess
import sys

here = pathlib.Path(__file__).parent
runs = [
    ("validate", "flat_disk_solve"),
    ("validate", "pinched_validate"),
    ("solve", "flat_disk_solve"),
    ("solve", "monge_solve"),
    ("solve", "strict_incompatible"),
    ("divfield", "flat_disk_divfield"),
    ("divfield", "cap_divfield_incompatible"),
    ("identities", "flat_disk_identities"),
    ("identities", "hemisphere_identities"),
    ("convergence", "flat_disk_convergence"),
    ("eigen", "flat_disk_eigen"),
]
for command, name in runs:
    out = here / "out" / f"{command}_{name}"
    proc = subprocess.run([sys.executable, "-m", "surfpoisson.cli", command,
                           "--config", str(here / "configs" / f"{name}.json"), "--out", str(out)],
                          capture_output=True, text=True)
    msg = (proc.stdout or proc.stderr).strip().splitlines()
    print(f"{command:12s} {name:28s} exit {proc.returncode}  {msg[-1] if msg else ''}")
