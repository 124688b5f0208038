"""Stochastic computation graph analysis and gradient estimators."""

import csv
import io
import json

from ._core import (
    Graph,
    ScgError,
    builtin_menu_names,
    criteria,
    d_separated,
    fixture,
    fixture_names,
    graph_from_json,
    is_valid_baseline_set,
    is_valid_critic_set,
    load_graph,
    separator_verdict,
)
from . import _core

__all__ = [
    "Graph",
    "ScgError",
    "analyze_node",
    "builtin_menu",
    "builtin_menu_names",
    "criteria",
    "d_separated",
    "estimate",
    "exact_gradient",
    "fixture",
    "fixture_names",
    "graph_from_json",
    "is_valid_baseline_set",
    "is_valid_critic_set",
    "load_graph",
    "separator_verdict",
    "verify",
]


def analyze_node(graph, node, critic=None, baseline=None, separator=None):
    return json.loads(_core.analyze_node(graph, node, critic, baseline, separator))


def exact_gradient(graph, inputs=None):
    """Returns (expected total cost, {input name: gradient})."""
    return _core.exact_gradient(graph, inputs)


def builtin_menu(name):
    return json.loads(_core.builtin_menu(name))


def estimate(config):
    """Runs an experiment config (dict or JSON text); returns one dict per CSV row."""
    text = config if isinstance(config, str) else json.dumps(config)
    return list(csv.DictReader(io.StringIO(_core.run_experiment(text))))


def verify(only=()):
    """Runs acceptance criteria; returns (number of failures, report text)."""
    return _core.verify(list(only))
