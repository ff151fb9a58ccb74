"""File formats: graph and stream CSV, trajectory CSV, experiment JSON.

Graph files: first line `n=<nodes>`, then one `i,j,w` row per revealed pair
with 0-based i < j and w in {-1, +1}; absent pairs are 0. Stream files are
the same with a leading timestep column `t,i,j,w`. Writers emit rows in
sorted order so write -> read -> write is byte-identical.
"""

import json
import math

import numpy as np

from .model import CbmParams, ChangeScenario, TernaryGraph, n_pairs, pair_indices, parse_labels


def _parse_header(line, lineno, path):
    text = line.strip().lstrip("#").strip()
    if not text.startswith("n="):
        raise ValueError(f"{path}:{lineno}: expected header 'n=<nodes>', got {line!r}")
    try:
        n = int(text[2:])
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: bad node count in header {line!r}") from exc
    if n < 2:
        raise ValueError(f"{path}:{lineno}: need n >= 2, got {n}")
    return n


def _parse_fields(line, lineno, path, count):
    parts = line.split(",")
    if len(parts) != count:
        raise ValueError(
            f"{path}:{lineno}: expected {count} comma-separated fields, got {line!r}"
        )
    try:
        return [int(part) for part in parts]
    except ValueError as exc:
        raise ValueError(f"{path}:{lineno}: non-integer field in {line!r}") from exc


def _check_entry(i, j, w, n, lineno, path):
    if not 0 <= i < j < n:
        raise ValueError(f"{path}:{lineno}: pair ({i},{j}) invalid for n={n}")
    if w not in (-1, 1):
        raise ValueError(f"{path}:{lineno}: weight must be -1 or +1, got {w}")


def _pair_pos(i, j, n):
    # row-major position of (i, j), i < j, in the upper triangle
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def write_graph_csv(graph, path):
    i_idx, j_idx = pair_indices(graph.n)
    with open(path, "w") as fh:
        fh.write(f"n={graph.n}\n")
        for i, j, w in zip(i_idx, j_idx, graph.upper):
            if w != 0:
                fh.write(f"{i},{j},{w}\n")


def read_graph_csv(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected an n= header")
    n = _parse_header(lines[0], 1, path)
    upper = np.zeros(n_pairs(n), dtype=np.int8)
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        i, j, w = _parse_fields(line, lineno, path, 3)
        _check_entry(i, j, w, n, lineno, path)
        if (i, j) in seen:
            raise ValueError(f"{path}:{lineno}: duplicate pair ({i},{j})")
        seen.add((i, j))
        upper[_pair_pos(i, j, n)] = w
    return TernaryGraph(n, upper)


def write_stream_csv(graphs, path, times=None):
    """Write a graph sequence; times defaults to 1, 2, ..."""
    graphs = list(graphs)
    if times is None:
        times = list(range(1, len(graphs) + 1))
    times = list(times)
    if len(times) != len(graphs):
        raise ValueError("times and graphs must have equal length")
    if not graphs:
        raise ValueError("need at least one graph to fix n in the header")
    n = graphs[0].n
    i_idx, j_idx = pair_indices(n)
    with open(path, "w") as fh:
        fh.write(f"n={n}\n")
        for t, g in sorted(zip(times, graphs), key=lambda tg: tg[0]):
            if g.n != n:
                raise ValueError("stream graphs must share n")
            for i, j, w in zip(i_idx, j_idx, g.upper):
                if w != 0:
                    fh.write(f"{t},{i},{j},{w}\n")


def ingest_stream(path):
    """Graphs in ascending timestep order from a `t,i,j,w` file.

    One graph per timestep value that appears; pairs absent from a timestep
    are 0. A header-only file yields an empty list. Malformed rows,
    out-of-range pairs, weights outside {-1, +1}, and duplicate (t, i, j)
    rows raise with the offending line number.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty file, expected an n= header")
    n = _parse_header(lines[0], 1, path)
    uppers: dict[int, np.ndarray] = {}
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        t, i, j, w = _parse_fields(line, lineno, path, 4)
        _check_entry(i, j, w, n, lineno, path)
        if t < 0:
            raise ValueError(f"{path}:{lineno}: timestep must be >= 0, got {t}")
        if (t, i, j) in seen:
            raise ValueError(f"{path}:{lineno}: duplicate pair ({i},{j}) at t={t}")
        seen.add((t, i, j))
        if t not in uppers:
            uppers[t] = np.zeros(n_pairs(n), dtype=np.int8)
        uppers[t][_pair_pos(i, j, n)] = w
    return [TernaryGraph(n, uppers[t]) for t in sorted(uppers)]


TRAJECTORY_HEADER = "t,stat,noisy_stat,stopped,hamming_est_vs_post"


def write_trajectory_csv(rows, path):
    """Rows: dicts with t, stat, noisy_stat (None -> stat), stopped, hamming."""
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in rows:
            noisy = row["noisy_stat"]
            if noisy is None:
                noisy = row["stat"]
            fh.write(
                f"{row['t']},{row['stat']:.12g},{noisy:.12g},"
                f"{int(row['stopped'])},{row['hamming_est_vs_post']}\n"
            )


def _labels_from_config(value, n=None, base=None):
    if isinstance(value, str):
        if value == "balanced":
            if n is None:
                raise ValueError("balanced labels need n")
            half = (n + 1) // 2
            return np.array([1] * half + [-1] * (n - half), dtype=np.int8)
        return parse_labels(value)
    if isinstance(value, dict) and "flip" in value:
        if base is None:
            raise ValueError("flip specification needs pre labels")
        out = base.copy()
        for idx in value["flip"]:
            out[idx] = -out[idx]
        return out
    raise ValueError(f"cannot interpret labels spec {value!r}")


def scenario_from_config(payload):
    """Build a ChangeScenario from a JSON payload.

    Expected keys: n, zeta, and p or a; pre ('balanced' or a +- string);
    post (a +- string or {'flip': [indices]}); nu (integer or 'inf');
    optional post_params {p or a, zeta} when the law changes too.
    """
    n = payload["n"]
    zeta = payload["zeta"]
    if "a" in payload:
        params_pre = CbmParams.from_scale(n, payload["a"], zeta)
    else:
        params_pre = CbmParams(n=n, p=payload["p"], zeta=zeta)
    pre = _labels_from_config(payload["pre"], n=n)
    post = _labels_from_config(payload["post"], n=n, base=pre)
    nu = payload.get("nu", 1)
    if nu == "inf":
        nu = math.inf
    post_payload = payload.get("post_params")
    if post_payload is None:
        params_post = params_pre
    elif "a" in post_payload:
        params_post = CbmParams.from_scale(n, post_payload["a"], post_payload.get("zeta", zeta))
    else:
        params_post = CbmParams(n=n, p=post_payload["p"], zeta=post_payload.get("zeta", zeta))
    return ChangeScenario(
        pre=pre, post=post, nu=nu, params_pre=params_pre, params_post=params_post
    )


def load_experiment_json(path):
    """Raw experiment payload: scenario config plus detector/trials fields."""
    with open(path) as fh:
        return json.load(fh)
