"""Textual LP file export and ``varname value`` solution import."""

from __future__ import annotations

import hashlib
import os
import re
from pathlib import Path

from ..ilpbuild import IlpModel, VarId
from ..relcore import TupleRef
from .lp import OPTIMAL, LpSolution, clean_objective

_TERMS_PER_LINE = 8


class SolutionFormatError(ValueError):
    pass


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def variable_names(model: IlpModel) -> dict[VarId, str]:
    """Deterministic LP names: ``t_<rel>_<hash>``, ``w_<view>_<idx>``, ``v_<view>_<idx>``."""
    names: dict[VarId, str] = {}
    taken: dict[str, VarId] = {}
    for v in model.variables:
        if v.kind == "T":
            digest = hashlib.sha1(str(TupleRef(*v.key)).encode("utf-8")).hexdigest()
            name = f"t_{_safe(v.key[0])}_{digest[:10]}"
        else:
            name = f"{v.kind.lower()}_{_safe(v.key[0])}_{v.key[1]}"
        if name in taken:
            raise ValueError(f"LP name collision between {taken[name]} and {v}")
        taken[name] = v
        names[v] = name
    return names


def _linear(terms, names) -> list[str]:
    parts = []
    for i, (v, c) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        coef = "" if mag == 1 else f"{mag:g} "
        if i == 0:
            parts.append(f"{'- ' if c < 0 else ''}{coef}{names[v]}")
        else:
            parts.append(f"{sign} {coef}{names[v]}")
    return parts


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines = []
    for i in range(0, max(len(parts), 1), _TERMS_PER_LINE):
        chunk = " ".join(parts[i:i + _TERMS_PER_LINE])
        lines.append((head if i == 0 else "   ") + chunk)
    lines[-1] += tail
    return lines


def format_lp(model: IlpModel) -> str:
    names = variable_names(model)
    out = [f"\\ mode {model.mode.value}, {len(model.variables)} variables, {len(model.constraints)} constraints",
           "Minimize"]
    obj_terms = [(v, model.objective[v]) for v in model.variables if v in model.objective]
    if obj_terms:
        out.extend(_wrap(" obj: ", _linear(obj_terms, names)))
    else:
        out.append(" obj: 0")
    out.append("Subject To")
    for i, con in enumerate(model.constraints):
        out.extend(_wrap(f" c{i}_{con.tag}: ", _linear(con.terms, names), f" {con.sense} {con.rhs:g}"))
    out.append("Bounds")
    for v in model.variables:
        out.append(f" 0 <= {names[v]} <= 1")
    if model.integral and model.variables:
        out.append("Binaries")
        for i in range(0, len(model.variables), _TERMS_PER_LINE):
            out.append(" " + " ".join(names[v] for v in model.variables[i:i + _TERMS_PER_LINE]))
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp_file(model: IlpModel, path: str | os.PathLike) -> None:
    Path(path).write_text(format_lp(model), encoding="utf-8")


def import_solution(model: IlpModel, path: str | os.PathLike) -> LpSolution:
    """Read ``varname value`` lines. ``#`` lines are comments; ``# status X`` sets the status."""
    by_name = {name: v for v, name in variable_names(model).items()}
    values: dict[VarId, float] = {}
    status = OPTIMAL
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                m = re.match(r"#\s*status\s+(\S+)", text, re.IGNORECASE)
                if m:
                    status = m.group(1).upper()
                continue
            parts = text.split()
            if len(parts) != 2:
                raise SolutionFormatError(f"{path}:{lineno}: expected 'name value', got {text!r}")
            name, raw = parts
            try:
                value = float(raw)
            except ValueError as exc:
                raise SolutionFormatError(f"{path}:{lineno}: bad value {raw!r}") from exc
            if name not in by_name:
                raise SolutionFormatError(f"{path}:{lineno}: unknown variable {name!r}")
            values[by_name[name]] = value
    if status != OPTIMAL:
        return LpSolution(status, None)
    missing = sum(1 for v in model.variables if v not in values)
    assignment = {v: values.get(v, 0.0) for v in model.variables}
    integral_obj = all(float(c).is_integer() for c in model.objective.values())
    objective = clean_objective(model.objective_value(assignment), integral_obj)
    return LpSolution(OPTIMAL, objective, assignment, missing)


def write_solution(model: IlpModel, solution, path: str | os.PathLike) -> None:
    names = variable_names(model)
    lines = [f"# status {solution.status.lower()}"]
    if solution.assignment:
        for v in model.variables:
            lines.append(f"{names[v]} {solution.assignment.get(v, 0.0):.12g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
