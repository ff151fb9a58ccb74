"""Likelihood algebra for ternary community graphs.

All quantities use the full quadratic form sigma^T A sigma (both triangles),
which is what makes the log-density sum to one over graph space and keeps
the log-ratio equal to a difference of log-likelihoods.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import n_pairs, quad_form, validate_labels

ZETA_CLAMP = 1e-6


def flip_gap(zeta):
    """log((1 - zeta)/zeta): evidence carried by one revealed pair's sign."""
    if not 0.0 < zeta < 0.5:
        raise ValueError(f"zeta={zeta} outside (0, 0.5)")
    return math.log((1.0 - zeta) / zeta)


def _check_interior(p, zeta):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p={p} is singular here; need 0 < p < 1")
    if not 0.0 < zeta < 0.5:
        raise ValueError(f"zeta={zeta} is singular here; need 0 < zeta < 0.5")


def log_likelihood(graph, labels, p, zeta):
    """Exact log-probability of the graph under (labels, p, zeta)."""
    _check_interior(p, zeta)
    labels = validate_labels(labels, graph.n)
    m = n_pairs(graph.n)
    et = graph.edge_count
    q = quad_form(graph, labels)
    edge_term = math.log(p / (1.0 - p) * math.sqrt(zeta * (1.0 - zeta)))
    return 0.25 * flip_gap(zeta) * q + m * math.log1p(-p) + et * edge_term


def log_likelihood_ratio(graph, labels_num, labels_den, p, zeta):
    """log p(graph; labels_num) - log p(graph; labels_den).

    The reveal terms cancel, leaving (1/4) log((1-zeta)/zeta) times the
    difference of quadratic forms; p only participates in domain checks.
    """
    _check_interior(p, zeta)
    q_num = quad_form(graph, validate_labels(labels_num, graph.n))
    q_den = quad_form(graph, validate_labels(labels_den, graph.n))
    return 0.25 * flip_gap(zeta) * (q_num - q_den)


def kl_divergence(labels_a, labels_b, p, zeta):
    """KL divergence between the graph laws of two labelings at (p, zeta).

    Equals (1/2) log((1-zeta)/zeta) * p * (1-2 zeta) * (#pairs whose label
    product differs) * 2, and is symmetric in its label arguments.
    """
    _check_interior(p, zeta)
    a = validate_labels(labels_a)
    b = validate_labels(labels_b, a.shape[0])
    n = a.shape[0]
    dot = int(a @ b.astype(np.int64))
    c_ab = (dot * dot - n) // 2
    return 0.5 * flip_gap(zeta) * p * (1.0 - 2.0 * zeta) * (n_pairs(n) - c_ab)


@dataclass(frozen=True)
class MleParams:
    p_hat: float
    zeta_hat: float
    degenerate: bool


def mle_params(graph, labels):
    """Closed-form ML fit of (p, zeta) given labels.

    p_hat is the revealed fraction; zeta_hat = 1/2 - sigma^T A sigma /
    (4 * edge count), clamped into [1e-6, 1/2 - 1e-6]. A graph with no
    revealed pair cannot identify zeta: returns (0, 1/4) flagged degenerate.
    """
    labels = validate_labels(labels, graph.n)
    et = graph.edge_count
    if et == 0:
        return MleParams(0.0, 0.25, True)
    z = 0.5 - quad_form(graph, labels) / (4.0 * et)
    z = min(max(z, ZETA_CLAMP), 0.5 - ZETA_CLAMP)
    return MleParams(et / n_pairs(graph.n), z, False)


def mle_params_pooled(graphs, labels):
    """ML fit of (p, zeta) from several graphs sharing one labeling."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    labels = validate_labels(labels, graphs[0].n)
    et = sum(g.edge_count for g in graphs)
    if et == 0:
        return MleParams(0.0, 0.25, True)
    q = sum(quad_form(g, labels) for g in graphs)
    z = 0.5 - q / (4.0 * et)
    z = min(max(z, ZETA_CLAMP), 0.5 - ZETA_CLAMP)
    return MleParams(et / (n_pairs(graphs[0].n) * len(graphs)), z, False)
