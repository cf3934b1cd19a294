"""Pipeline stages behind the CLI commands.

Stages talk through the shared context dict. ``ctx["config"]`` is the RunConfig and
``ctx["out"]`` the stream used when no ``--out`` file is given; the port models below
name the keys each stage reads and writes.
"""

import logging
import time
from contextlib import contextmanager
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict

from .builders import PointCloud, build_graph_from_points
from .errors import InvalidParams
from .flow import ParallelBatchStage, Stage
from .graph import PhysicalGraph, perturb_weights, shortest_path_tree, validate_root
from .io import format_graph, read_graph, read_measures, read_omega, read_points, write_json, write_matrix, write_table
from .kernel import gram, min_eigenvalue
from .measure import truncate
from .oracle import solve_et, solve_wasserstein
from .slicing import RootSet, sample_roots
from .ust import UstParams, assemble_symmetric, distance_row, profile_matrix, ust_distance

logger = logging.getLogger(__name__)

# pairs timed against the exact oracle in bench runs
ORACLE_PAIRS = 10


# --- ports ---

class _Port(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class GraphPort(_Port):
    graph: PhysicalGraph
    params: UstParams


class MeasuresPort(GraphPort):
    measures: list


class TreesPort(MeasuresPort):
    roots: RootSet
    trees: list


class MatrixPort(_Port):
    matrix: np.ndarray
    labels: list


class ReportPort(_Port):
    report: list
    report_columns: list


@contextmanager
def _output(ctx):
    cfg = ctx["config"]
    if cfg.output_path is None:
        yield ctx["out"]
    else:
        with open(cfg.output_path, "w", newline="") as fh:
            yield fh


# --- loading ---

class LoadGraph(Stage):
    """Read the graph, optionally jitter its lengths, and attach per-edge omega weights."""

    Output = GraphPort

    def prep(self, ctx):
        return ctx["config"]

    def exec(self, cfg):
        g = read_graph(cfg.graph_path)
        if cfg.perturb:
            g = perturb_weights(g, cfg.perturb, cfg.seed)
            logger.info("perturbed edge lengths by up to %g", cfg.perturb)
        params = cfg.params
        if cfg.omega_path is not None:
            omega = read_omega(cfg.omega_path, g.edge_count)
            params = UstParams.model_validate({**params.model_dump(), "omega": omega})
        return g, params

    def post(self, ctx, prep_res, exec_res):
        ctx["graph"], ctx["params"] = exec_res


class LoadMeasures(Stage):
    Input = GraphPort
    Output = MeasuresPort

    def prep(self, ctx):
        return ctx["config"].measures_path, ctx["graph"].node_count

    def exec(self, prep_res):
        path, node_count = prep_res
        measures = read_measures(path)
        for lm in measures:
            lm.measure.check_support(node_count)
        return measures

    def post(self, ctx, prep_res, exec_res):
        ctx["measures"] = exec_res
        ctx["labels"] = [lm.label for lm in exec_res]


class Preprocess(Stage):
    """Shortest-path tree for ``--root``, or one per sampled root with ``--slices``."""

    Input = GraphPort
    Output = TreesPort

    def prep(self, ctx):
        return ctx["graph"], ctx["config"]

    def exec(self, prep_res):
        g, cfg = prep_res
        if cfg.slices is None:
            roots = RootSet((cfg.root,), cfg.seed, True, cfg.allow_ties)
        else:
            roots = sample_roots(g, cfg.slices, cfg.seed, cfg.tie_tol, cfg.allow_ties)
        trees = [shortest_path_tree(g, r, cfg.tie_tol, cfg.allow_ties) for r in roots.roots]
        return roots, trees

    def post(self, ctx, prep_res, exec_res):
        ctx["roots"], ctx["trees"] = exec_res
        logger.info("preprocessed %d root(s): %s", len(ctx["roots"]), list(ctx["roots"].roots))


# --- distances and kernels ---

class PairwiseRows(ParallelBatchStage):
    """One batch item per matrix row; each row averages the per-root distances."""

    Input = TreesPort
    Output = MatrixPort

    def prep(self, ctx):
        params = ctx["params"]
        params.require_metric_mode()
        ms = [lm.measure for lm in ctx["measures"]]
        if not ms:
            raise InvalidParams("the measures file holds no measures")
        bundles = [(pre,) + profile_matrix(pre, ms) for pre in ctx["trees"]]
        return [(i, bundles, params) for i in range(len(ms))]

    def exec(self, item):
        i, bundles, params = item
        total = None
        for pre, profiles, masses in bundles:
            row = distance_row(pre, params, profiles, masses, i, start=i + 1)
            total = row if total is None else total + row
        return total / len(bundles)

    def post(self, ctx, prep_res, exec_res):
        ctx["matrix"] = assemble_symmetric(exec_res)


class GramStage(Stage):
    Input = MatrixPort
    Output = MatrixPort

    def prep(self, ctx):
        return ctx["matrix"], ctx["config"].t

    def exec(self, prep_res):
        dists, t = prep_res
        return gram(dists, t)

    def post(self, ctx, prep_res, exec_res):
        ctx["matrix"] = exec_res.values
        if exec_res.size and logger.isEnabledFor(logging.INFO):
            logger.info("gram t=%g: smallest eigenvalue %.3e", exec_res.t, min_eigenvalue(exec_res))


class WriteMatrix(Stage):
    Input = MatrixPort

    def prep(self, ctx):
        return ctx

    def exec(self, ctx):
        with _output(ctx) as out:
            write_matrix(ctx["matrix"], out, ctx["config"].fmt, ctx.get("labels"))


# --- reports ---

class ValidateRoots(Stage):
    """Uniqueness of shortest paths from every node."""

    Input = GraphPort
    Output = ReportPort
    columns = ["node", "ok", "tied_count", "tied_nodes"]

    def prep(self, ctx):
        return ctx["graph"], ctx["config"].tie_tol

    def exec(self, prep_res):
        g, tie_tol = prep_res
        rows = []
        for v in range(g.node_count):
            rep = validate_root(g, v, tie_tol)
            rows.append({
                "node": v,
                "ok": rep.ok,
                "tied_count": len(rep.tied_nodes),
                "tied_nodes": " ".join(str(t) for t in rep.tied_nodes),
            })
        return rows

    def post(self, ctx, prep_res, exec_res):
        bad = sum(1 for r in exec_res if not r["ok"])
        logger.info("%d of %d nodes are not unique-path roots", bad, len(exec_res))
        ctx["report"], ctx["report_columns"] = exec_res, self.columns


class OracleStage(Stage):
    """Exact entropy partial transport or Wasserstein for every pair of measures."""

    Input = MeasuresPort
    Output = ReportPort
    columns = ["i", "j", "label_i", "label_j", "value", "plan_mass", "dual_gap"]

    def prep(self, ctx):
        return ctx["graph"], ctx["params"], ctx["measures"], ctx["config"]

    def exec(self, prep_res):
        g, params, measures, cfg = prep_res
        rows = []
        for i in range(len(measures)):
            for j in range(i + 1, len(measures)):
                mu, nu = measures[i].measure, measures[j].measure
                if cfg.oracle_kind == "et":
                    res = solve_et(g, params, cfg.a1, mu, nu, root=cfg.root)
                else:
                    res = solve_wasserstein(g, cfg.order, mu, nu)
                rows.append({
                    "i": i,
                    "j": j,
                    "label_i": measures[i].label,
                    "label_j": measures[j].label,
                    "value": res.value,
                    "plan_mass": res.plan_mass,
                    "dual_gap": res.dual_gap,
                })
        return rows

    def post(self, ctx, prep_res, exec_res):
        ctx["report"], ctx["report_columns"] = exec_res, self.columns


class BenchStage(Stage):
    """Wall-clock timings: preprocessing per root, closed form per pair, oracle per pair."""

    Input = TreesPort
    Output = ReportPort
    columns = ["stage", "i", "j", "touched_edges", "elapsed_us"]

    def prep(self, ctx):
        return ctx["graph"], ctx["params"], ctx["roots"], ctx["trees"], ctx["measures"], ctx["config"]

    def exec(self, prep_res):
        g, params, roots, trees, measures, cfg = prep_res
        rows = []
        for r in roots.roots:
            start = time.perf_counter()
            pre = shortest_path_tree(g, r, cfg.tie_tol, cfg.allow_ties)
            rows.append(_bench_row("preprocess", None, None, len(pre.tree_edges), start))

        pre = trees[0]
        ms = [lm.measure for lm in measures]
        if len(ms) < 2:
            logger.warning("bench needs at least two measures to time pairs")
            return rows
        rng = np.random.default_rng(cfg.seed)
        pairs = [tuple(int(x) for x in rng.choice(len(ms), size=2, replace=False)) for _ in range(cfg.pairs)]
        for i, j in pairs:
            touched = len(pre.path_closure(np.concatenate([ms[i].nodes, ms[j].nodes])))
            start = time.perf_counter()
            ust_distance(pre, params, ms[i], ms[j])
            rows.append(_bench_row("ust", i, j, touched, start))

        if cfg.oracle_supports:
            for i, j in pairs[:ORACLE_PAIRS]:
                mu = truncate(ms[i], cfg.oracle_supports)
                nu = truncate(ms[j], cfg.oracle_supports)
                start = time.perf_counter()
                solve_et(g, params, cfg.a1, mu, nu, root=pre.root)
                rows.append(_bench_row("oracle", i, j, None, start))
                start = time.perf_counter()
                ust_distance(pre, params, mu, nu)
                touched = len(pre.path_closure(np.concatenate([mu.nodes, nu.nodes])))
                rows.append(_bench_row("ust_truncated", i, j, touched, start))
        return rows

    def post(self, ctx, prep_res, exec_res):
        ctx["report"], ctx["report_columns"] = exec_res, self.columns


def _bench_row(stage, i, j, touched, start) -> dict[str, Any]:
    return {
        "stage": stage,
        "i": i,
        "j": j,
        "touched_edges": touched,
        "elapsed_us": (time.perf_counter() - start) * 1e6,
    }


class WriteReport(Stage):
    Input = ReportPort

    def prep(self, ctx):
        return ctx

    def exec(self, ctx):
        with _output(ctx) as out:
            if ctx["config"].fmt == "json":
                write_json({"results": ctx["report"]}, out)
            else:
                write_table(ctx["report"], out, ctx["report_columns"])


# --- graph building ---

class BuildGraphStage(Stage):
    Output = GraphPort

    def prep(self, ctx):
        return ctx["config"]

    def exec(self, cfg):
        pc = PointCloud(read_points(cfg.points_path))
        g, _ = build_graph_from_points(pc, cfg.m, cfg.density, cfg.seed)
        return g

    def post(self, ctx, prep_res, exec_res):
        ctx["graph"] = exec_res
        ctx["params"] = ctx["config"].params


class WriteGraph(Stage):
    Input = GraphPort

    def prep(self, ctx):
        return ctx

    def exec(self, ctx):
        with _output(ctx) as out:
            out.write(format_graph(ctx["graph"]))
