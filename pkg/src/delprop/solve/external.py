"""Bridge to an external solver through LP and solution files.

The command template gets the LP path and the solution path appended, or
substituted when it contains ``{lpfile}``/``{solfile}``. The solver must write
``varname value`` lines, optionally with a ``# status <STATUS>`` line.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from pathlib import Path

from ..ilpbuild import IlpModel
from .lp import LpSolution
from .lpfile import export_lp_file, import_solution

ENV_VAR = "GDP_SOLVER_CMD"


class ExternalSolverError(RuntimeError):
    pass


def resolve_command(cmd: str | None) -> str:
    cmd = cmd or os.environ.get(ENV_VAR)
    if not cmd:
        raise ExternalSolverError(f"no external solver command (pass --solver-cmd or set {ENV_VAR})")
    return cmd


def solve_external(model: IlpModel, cmd: str | None = None, timeout: float | None = None) -> LpSolution:
    cmd = resolve_command(cmd)
    with tempfile.TemporaryDirectory(prefix="delprop-") as tmp:
        lp_path = Path(tmp) / "model.lp"
        sol_path = Path(tmp) / "model.sol"
        export_lp_file(model, lp_path)
        if "{lpfile}" in cmd or "{solfile}" in cmd:
            argv = shlex.split(cmd.format(lpfile=lp_path, solfile=sol_path))
        else:
            argv = shlex.split(cmd) + [str(lp_path), str(sol_path)]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalSolverError(f"external solver failed to run: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalSolverError(f"external solver exited with {proc.returncode}: {proc.stderr.strip()}")
        if not sol_path.exists():
            raise ExternalSolverError("external solver wrote no solution file")
        return import_solution(model, sol_path)
