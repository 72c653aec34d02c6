"""Knowledge-enhanced follow-up question generation.

Thin wrappers over the C++ core: graphs, results and configs are plain dicts.
"""

import json

from . import _core
from ._core import (
    KfqgError,
    bleu,
    corpus_bleu,
    distinct_n,
    importance,
    mutual_information,
    normalize_importance,
    composite_score,
    topic_consistency,
    ttr,
)

__all__ = [
    "KfqgError",
    "Pipeline",
    "bleu",
    "composite_score",
    "corpus_bleu",
    "distinct_n",
    "importance",
    "load_triplets",
    "mutual_information",
    "normalize_importance",
    "pagerank",
    "random_walk_visits",
    "topic_consistency",
    "ttr",
]


def pagerank(graph, damping=0.85):
    """Node weights for a graph dict {center, nodes, edges}."""
    return _core.pagerank(json.dumps(graph), damping)


def random_walk_visits(graph, steps, restart_prob, seed):
    return _core.random_walk_visits(json.dumps(graph), steps, restart_prob, seed)


def load_triplets(path):
    """Returns {"triplets": [...], "errors": [...], "total_lines": n}."""
    return json.loads(_core.load_triplets(str(path)))


class Pipeline:
    def __init__(self, config_path=None, *, _impl=None):
        self._impl = _impl if _impl is not None else _core.Pipeline(str(config_path))

    @classmethod
    def from_config(cls, config, base_dir=""):
        return cls(_impl=_core.Pipeline.from_json(json.dumps(config), str(base_dir)))

    @property
    def config(self):
        return json.loads(self._impl.config_json)

    def run(self, question, answer, variant="full", item_index=0):
        return json.loads(self._impl.run(question, answer, variant, item_index))

    def with_beta(self, beta):
        return Pipeline(_impl=self._impl.with_beta(beta))
