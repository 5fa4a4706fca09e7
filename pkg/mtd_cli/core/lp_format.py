#!/usr/bin/env python3
"""CPLEX-LP text export of MilpModel instances."""

import logging
import math
import re
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Union

from .exceptions import ModelIOError
from .milp import MilpModel, Relation

logger = logging.getLogger(__name__)

MAX_NAME_LENGTH = 255
TERMS_PER_LINE = 8

_INVALID_CHARS = re.compile(r"[^A-Za-z0-9_.]")
_RELATION_TOKENS = {Relation.LE: "<=", Relation.GE: ">=", Relation.EQ: "="}


def sanitize_names(names: Iterable[str]) -> Dict[str, str]:
    """Map model names to unique LP-format identifiers, deterministically."""
    names = list(names)
    return dict(zip(names, _sanitize(names)))


def _sanitize(names: List[str]) -> List[str]:
    sanitized: List[str] = []
    used = set()
    for name in names:
        clean = _INVALID_CHARS.sub("_", name)
        clean = re.sub(r"_+", "_", clean).strip("_") or "var"
        # names may not start with a digit or a period, and e/E reads as an exponent
        if clean[0].isdigit() or clean[0] in ".eE":
            clean = f"n_{clean}"
        clean = clean[:MAX_NAME_LENGTH - 8]
        candidate = clean
        suffix = 1
        while candidate in used:
            suffix += 1
            candidate = f"{clean}_{suffix}"
        used.add(candidate)
        sanitized.append(candidate)
    return sanitized


def _number(value: float) -> str:
    return f"{value:.17g}"


def _expression(coeffs: Mapping[str, float], names: Mapping[str, str]) -> List[str]:
    terms = [f"{'-' if coef < 0 else '+'} {_number(abs(coef))} {names[var]}" for var, coef in coeffs.items()]
    return [" ".join(terms[n:n + TERMS_PER_LINE]) for n in range(0, len(terms), TERMS_PER_LINE)] or ["0"]


def format_lp(model: MilpModel) -> str:
    """Render ``model`` as CPLEX-LP text."""
    names = sanitize_names(var.name for var in model.variables)
    row_labels = _sanitize([c.name or f"c{n + 1}" for n, c in enumerate(model.constraints)])

    lines = [f"\\ Problem: {model.name}", "Minimize"]
    objective = _expression(model.objective, names)
    if objective == ["0"] and model.variables:
        objective = [f"0 {names[model.variables[0].name]}"]
    lines.append(f" obj: {objective[0]}")
    lines.extend(f"   {chunk}" for chunk in objective[1:])

    lines.append("Subject To")
    for label, constraint in zip(row_labels, model.constraints):
        if not constraint.coeffs:
            logger.warning("Skipping empty constraint %s in LP export", label)
            continue
        chunks = _expression(constraint.coeffs, names)
        relation = f"{_RELATION_TOKENS[constraint.relation]} {_number(constraint.rhs)}"
        if len(chunks) == 1:
            lines.append(f" {label}: {chunks[0]} {relation}")
        else:
            lines.append(f" {label}: {chunks[0]}")
            lines.extend(f"   {chunk}" for chunk in chunks[1:-1])
            lines.append(f"   {chunks[-1]} {relation}")

    lines.append("Bounds")
    for var in model.variables:
        name = names[var.name]
        if var.lb == var.ub:
            lines.append(f" {name} = {_number(var.lb)}")
        elif var.is_binary and var.lb == 0.0 and var.ub == 1.0:
            continue
        elif math.isinf(var.lb) and math.isinf(var.ub):
            lines.append(f" {name} free")
        elif var.lb == 0.0 and math.isinf(var.ub):
            continue
        else:
            lower = "-inf" if math.isinf(var.lb) else _number(var.lb)
            upper = "+inf" if math.isinf(var.ub) else _number(var.ub)
            lines.append(f" {lower} <= {name} <= {upper}")

    binaries = [names[name] for name in model.binaries]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {name}" for name in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp_file(model: MilpModel, path: Union[str, Path]) -> None:
    """Write ``model`` to ``path`` in CPLEX-LP format."""
    path = Path(path)
    try:
        path.write_text(format_lp(model))
    except OSError as e:
        raise ModelIOError(str(path), f"Cannot write LP file: {e}")
    logger.info("Wrote LP model %s to %s", model.name, path)
