"""Command-line interface: ``ust dist|gram|bench|validate|build-graph|oracle``.

Every failure prints one line on stderr, ``error<TAB>ErrorClass<TAB>message``, and
exits with the error's code: 2 for bad input, 3 for a math-domain failure, 4 otherwise.
"""

import logging
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from .config import RunConfig, Settings
from .errors import UstError
from .flows import FLOWS
from .ust import UstParams

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
PARAM_KEYS = ("p", "b", "lam", "alpha", "w1_root", "w2_root")


def _error_line(name: str, message: str) -> None:
    text = " ".join(str(message).split())
    click.echo(f"error\t{name}\t{text}", err=True)


def _guard(fn) -> int:
    """Run ``fn`` and turn any exception into an exit code and a diagnostic line."""
    try:
        fn()
    except UstError as exc:
        _error_line(type(exc).__name__, exc)
        return exc.exit_code
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        _error_line("ValidationError", f"{where}: {first['msg']}")
        return 2
    except OSError as exc:
        _error_line(type(exc).__name__, exc)
        return 2
    except Exception as exc:
        logger.exception("internal error")
        _error_line(type(exc).__name__, exc)
        return 4
    return 0


def run(config: RunConfig, out=None) -> int:
    """Execute one command; returns the process exit status."""
    ctx = {"config": config, "out": out if out is not None else sys.stdout}
    flow = FLOWS[config.command](config.workers)
    code = _guard(lambda: flow.run(ctx))
    if code == 0:
        for name, ms in ctx.get("timings", []):
            logger.debug("%s: %.3f ms", name, ms)
    return code


def _launch(command: str, opts: dict) -> None:
    settings = click.get_current_context().obj or Settings()
    holder = {}

    def build():
        params = UstParams(**{k: opts.pop(k) for k in PARAM_KEYS if k in opts})
        omega = opts.pop("omega", None)
        if omega is not None and omega != "length":
            opts["omega_path"] = Path(omega)
        if opts.get("workers") is None:
            opts["workers"] = settings.workers
        if opts.get("tie_tol") is None:
            opts["tie_tol"] = settings.tie_tol
        holder["config"] = RunConfig(command=command, params=params, **opts)

    code = _guard(build)
    if code == 0:
        code = run(holder["config"])
    click.get_current_context().exit(code)


def _options(*decorators):
    def apply(f):
        for d in reversed(decorators):
            f = d(f)
        return f
    return apply


graph_option = click.option("--graph", "graph_path", type=click.Path(), help="Graph file ('nodes N' then 'u v w' lines).")
measures_option = click.option("--measures", "measures_path", type=click.Path(), help="Measures YAML file.")
out_options = _options(
    click.option("--out", "output_path", type=click.Path(), default=None, help="Output file; stdout when omitted."),
    click.option("--format", "output_format", type=click.Choice(["csv", "json"]), default=None),
)
param_options = _options(
    click.option("--p", "p", type=float, default=1.0, show_default=True, help="Order p in [1, inf]."),
    click.option("--b", "b", type=float, default=1.0, show_default=True),
    click.option("--lambda", "lam", type=float, default=1.0, show_default=True),
    click.option("--alpha", "alpha", type=float, default=0.0, show_default=True),
    click.option("--w1-root", "w1_root", type=float, default=1.0, show_default=True),
    click.option("--w2-root", "w2_root", type=float, default=1.0, show_default=True),
    click.option("--omega", "omega", default="length", show_default=True,
                 help="'length' or a file with one edge weight per line."),
)
tree_options = _options(
    click.option("--root", "root", type=int, default=0, show_default=True),
    click.option("--slices", "slices", type=int, default=None, help="Average over this many sampled roots; without it the single --root is used."),
    click.option("--seed", "seed", type=int, default=0, show_default=True),
    click.option("--allow-ties", "allow_ties", is_flag=True, help="Break shortest-path ties by smallest edge-id."),
    click.option("--tie-tol", "tie_tol", type=float, default=None),
    click.option("--perturb", "perturb", type=float, default=None, help="Add up to this much noise to each edge length."),
    click.option("--workers", "workers", type=int, default=None),
)


@click.group()
@click.option("--log-level", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--env-file", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def main(ctx, log_level, env_file):
    """Unbalanced Sobolev transport on weighted graphs."""
    holder = {}
    code = _guard(lambda: holder.setdefault("settings", Settings.from_env(env_file)))
    if code:
        ctx.exit(code)
    settings = holder["settings"]
    logging.basicConfig(level=(log_level or settings.log_level).upper(), format=LOG_FORMAT, stream=sys.stderr)
    ctx.obj = settings


@main.command()
@graph_option
@measures_option
@param_options
@tree_options
@out_options
def dist(**opts):
    """Pairwise distance matrix of the measures."""
    _launch("dist", opts)


@main.command()
@graph_option
@measures_option
@param_options
@tree_options
@click.option("--t", "t", type=float, default=1.0, show_default=True, help="Bandwidth in exp(-t * d).")
@out_options
def gram(**opts):
    """Gram matrix exp(-t * d)."""
    _launch("gram", opts)


@main.command()
@graph_option
@measures_option
@param_options
@tree_options
@click.option("--pairs", "pairs", type=int, default=100, show_default=True)
@click.option("--oracle-supports", "oracle_supports", type=int, default=None,
              help="Also time the exact oracle on measures cut to this many supports.")
@click.option("--a1", "weight_a1", type=float, default=None, help="Weight slope (default: b).")
@out_options
def bench(**opts):
    """Timing rows for preprocessing, closed-form pairs and the oracle."""
    _launch("bench", opts)


@main.command()
@graph_option
@click.option("--tie-tol", "tie_tol", type=float, default=None)
@click.option("--perturb", "perturb", type=float, default=None)
@click.option("--seed", "seed", type=int, default=0, show_default=True)
@out_options
def validate(**opts):
    """Per-node report of shortest-path uniqueness."""
    _launch("validate", opts)


@main.command("build-graph")
@click.option("--points", "points_path", type=click.Path(), help="Point file, one point per line.")
@click.option("--m", "m", type=int, required=True, help="Number of nodes (cluster centers).")
@click.option("--density", "density", type=click.Choice(["log", "sqrt"]), default="log", show_default=True)
@click.option("--seed", "seed", type=int, default=0, show_default=True)
@click.option("--out", "output_path", type=click.Path(), default=None)
def build_graph(**opts):
    """Random graph over farthest-point cluster centers of a point cloud."""
    _launch("build-graph", opts)


@main.command()
@graph_option
@measures_option
@param_options
@click.option("--root", "root", type=int, default=0, show_default=True)
@click.option("--kind", "oracle_kind", type=click.Choice(["et", "wasserstein"]), default="et", show_default=True)
@click.option("--a1", "weight_a1", type=float, default=None, help="Weight slope (default: b).")
@click.option("--order", "order", type=float, default=1.0, show_default=True, help="Wasserstein order.")
@out_options
def oracle(**opts):
    """Exact transport values for every pair of measures."""
    _launch("oracle", opts)


if __name__ == "__main__":
    main()
