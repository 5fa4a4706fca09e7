#!/usr/bin/env python3
"""Jinja2 rendering of product MDP DOT dumps and allocation summaries."""

from pathlib import Path
from typing import Any, Dict, List, Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from .product import SINK, ProductMdp, state_label

TEMPLATES_DIR = Path(__file__).parent.parent / "templates"


class TemplateEngine:
    """Template engine over the package's templates directory."""

    def __init__(self, template_dirs: Optional[List[Path]] = None):
        template_dirs = template_dirs or [TEMPLATES_DIR]
        self.env = Environment(
            loader=FileSystemLoader([str(d) for d in template_dirs]),
            trim_blocks=True,
            lstrip_blocks=True,
            undefined=StrictUndefined,
            keep_trailing_newline=True,
        )
        self.env.filters["prob"] = self._prob_filter
        self.env.filters["percent"] = self._percent_filter
        self.env.filters["dot_id"] = self._dot_id_filter

    @staticmethod
    def _prob_filter(value: float, digits: int = 6) -> str:
        return f"{value:.{digits}g}"

    @staticmethod
    def _percent_filter(value: float) -> str:
        return f"{100.0 * value:.2f}%"

    @staticmethod
    def _dot_id_filter(value: str) -> str:
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        return self.env.get_template(template_name).render(**context)


_template_engine: Optional[TemplateEngine] = None


def get_template_engine() -> TemplateEngine:
    """Get the global template engine instance."""
    global _template_engine
    if _template_engine is None:
        _template_engine = TemplateEngine()
    return _template_engine


def render_product_dot(mdp: ProductMdp) -> str:
    """DOT graph: product states as nodes, one edge per (z, a, z') labelled 'a / p'."""
    nodes = []
    for z in mdp.states:
        if z == SINK:
            kind = "sink"
        elif z in mdp.final_states:
            kind = "goal"
        elif z in mdp.initial_dist:
            kind = "initial"
        else:
            kind = "transient"
        nodes.append({"id": state_label(z), "kind": kind})
    edges = [
        {"source": state_label(z), "target": state_label(target), "action": action, "prob": p}
        for (z, action), dist in mdp.trans.items()
        for target, p in dist.items()
    ]
    return get_template_engine().render("product.dot.j2", {"nodes": nodes, "edges": edges})


def render_summary(context: Dict[str, Any]) -> str:
    """Human-readable allocation summary."""
    return get_template_engine().render("summary.txt.j2", context)
