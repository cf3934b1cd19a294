from .flow import Pipeline
from .nodes import (
    BenchStage,
    BuildGraphStage,
    GramStage,
    LoadGraph,
    LoadMeasures,
    OracleStage,
    PairwiseRows,
    Preprocess,
    ValidateRoots,
    WriteGraph,
    WriteMatrix,
    WriteReport,
)


def create_dist_flow(workers=1):
    """Pairwise distance matrix."""
    load = LoadGraph()
    load >> LoadMeasures() >> Preprocess() >> PairwiseRows(workers=workers) >> WriteMatrix()
    return Pipeline(start=load)


def create_gram_flow(workers=1):
    """Gram matrix exp(-t * d) of the pairwise distances."""
    load = LoadGraph()
    load >> LoadMeasures() >> Preprocess() >> PairwiseRows(workers=workers) >> GramStage() >> WriteMatrix()
    return Pipeline(start=load)


def create_bench_flow(workers=1):
    load = LoadGraph()
    load >> LoadMeasures() >> Preprocess() >> BenchStage() >> WriteReport()
    return Pipeline(start=load)


def create_validate_flow(workers=1):
    load = LoadGraph()
    load >> ValidateRoots() >> WriteReport()
    return Pipeline(start=load)


def create_build_graph_flow(workers=1):
    build = BuildGraphStage()
    build >> WriteGraph()
    return Pipeline(start=build)


def create_oracle_flow(workers=1):
    load = LoadGraph()
    load >> LoadMeasures() >> OracleStage() >> WriteReport()
    return Pipeline(start=load)


FLOWS = {
    "dist": create_dist_flow,
    "gram": create_gram_flow,
    "bench": create_bench_flow,
    "validate": create_validate_flow,
    "build-graph": create_build_graph_flow,
    "oracle": create_oracle_flow,
}
