"""Error taxonomy for ustflow.

Every error carries the process exit code the CLI reports for it:
2 for bad input, 3 for a math-domain failure, 4 for solver faults.
"""


class UstError(Exception):
    exit_code = 4


# --- input errors (exit 2) ---

class InputError(UstError):
    exit_code = 2


class InvalidGraph(InputError):
    pass


class NonPositiveWeight(InputError):
    pass


class SelfLoop(InputError):
    pass


class DuplicateEdge(InputError):
    pass


class DisconnectedGraph(InputError):
    pass


class NodeOutOfRange(InputError):
    pass


class NegativeMass(InputError):
    pass


class NegativeScale(InputError):
    pass


class SupportOffGraph(InputError):
    pass


class InvalidParams(InputError):
    pass


class InvalidWeightSlope(InputError):
    pass


class Unbalanced(InputError):
    pass


class UnbalancedMasses(InputError):
    pass


class NonSymmetricInput(InputError):
    pass


class NonPositiveT(InputError):
    pass


class EmptyCloud(InputError):
    pass


class SingleNode(InputError):
    pass


class DegenerateCentroids(InputError):
    pass


class MissingInput(InputError):
    pass


class FormatError(InputError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path, self.line = path, line


class GraphFormatError(FormatError):
    pass


class MeasuresFormatError(FormatError):
    pass


class PointsFormatError(FormatError):
    pass


class OmegaFormatError(FormatError):
    pass


# --- math-domain errors (exit 3) ---

class MathDomainError(UstError):
    exit_code = 3


class NonUniqueShortestPath(MathDomainError):
    def __init__(self, root, tied_nodes):
        self.root = int(root)
        self.tied_nodes = [int(v) for v in tied_nodes]
        shown = self.tied_nodes[:10]
        more = "" if len(self.tied_nodes) <= 10 else f" (+{len(self.tied_nodes) - 10} more)"
        super().__init__(
            f"root {self.root} has non-unique shortest paths to nodes {shown}{more}"
        )


class NoValidRoot(MathDomainError):
    pass


# --- solver faults (exit 4) ---

class SolverError(UstError):
    exit_code = 4


class DegenerateCycling(SolverError):
    pass


class CertificateError(SolverError):
    pass
