"""Command-line interface for CVD store."""

import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import click
import pandas as pd
from rich.console import Console

from . import __version__
from .bench.experiments import BenchPlan, run_bench
from .config import settings
from .core.exceptions import CorruptionError, CVDError
from .core.types import VersionId, format_vid, parse_vid
from .engine import VersioningEngine
from .storage.csv_io import read_schema_file

logger = logging.getLogger(__name__)

console = Console(stderr=True)


class CVDGroup(click.Group):
    """Maps store errors and usage errors onto the documented exit codes."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except CorruptionError as e:
            console.print(f"[red]corrupt store:[/red] {e}", highlight=False)
            ctx.exit(2)
        except CVDError as e:
            console.print(f"[red]error:[/red] {e}", highlight=False)
            ctx.exit(1)

    def main(
        self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra
    ):
        try:
            code = super().main(
                args, prog_name, complete_var, standalone_mode=False, **extra
            )
        except click.ClickException as e:
            console.print(f"[red]error:[/red] {e.format_message()}", highlight=False)
            code = 1
        except click.Abort:
            console.print("[yellow]Aborted[/yellow]")
            code = 1
        code = code if isinstance(code, int) else 0
        if standalone_mode:
            sys.exit(code)
        return code


def _vids(values: Sequence[str]) -> List[VersionId]:
    vids: List[VersionId] = []
    for value in values:
        vids.extend(parse_vid(part) for part in value.split(",") if part.strip())
    return vids


def _engine(ctx: click.Context) -> VersioningEngine:
    return ctx.obj["engine"]


@click.group(cls=CVDGroup)
@click.version_option(version=__version__)
@click.option(
    "--root",
    type=click.Path(file_okay=False, path_type=Path),
    default=None,
    help="CVD root directory (defaults to CVDSTORE_ROOT or the configured root)",
)
@click.option("--debug", is_flag=True, help="Log at DEBUG level")
@click.pass_context
def cli(ctx: click.Context, root: Optional[Path], debug: bool):
    """CVD store - dataset version control with partitioned record storage."""
    logging.basicConfig(
        level=logging.DEBUG if debug else settings.app.log_level,
        format=settings.app.log_format,
        stream=sys.stderr,
    )
    ctx.ensure_object(dict)
    ctx.obj["engine"] = VersioningEngine(root)


_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)


@cli.command()
@click.argument("name")
@click.option(
    "--file", "-f", "csv_path", required=True, type=_FILE, help="CSV with the initial rows"
)
@click.option(
    "--schema",
    "-s",
    "schema_path",
    required=True,
    type=_FILE,
    help="Schema file, one name:type per line",
)
@click.option("--pk", default="", help="Comma-separated primary key attributes")
@click.option("--message", "-m", default="init", help="Message of the root version")
@click.pass_context
def init(ctx, name: str, csv_path: Path, schema_path: Path, pk: str, message: str):
    """Create a CVD whose first version holds the CSV rows."""
    schema = read_schema_file(schema_path)
    primary_key = [k.strip() for k in pk.split(",") if k.strip()]
    store = _engine(ctx).init(name, schema, primary_key, csv_path=csv_path, message=message)
    root = store.vids[0]
    click.echo(f"{name}\t{format_vid(root)}\t{store.rlist(root).size}")


@cli.command()
@click.argument("name")
@click.option(
    "--version",
    "-v",
    "versions",
    multiple=True,
    required=True,
    help="Version id, repeatable; earlier versions win key conflicts",
)
@click.option("--table", "-t", default=None, help="Name of the staged table")
@click.option(
    "--file",
    "-f",
    "csv_path",
    default=None,
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV file to write",
)
@click.pass_context
def checkout(
    ctx, name: str, versions: Sequence[str], table: Optional[str], csv_path: Optional[Path]
):
    """Materialize one or more versions as a table or CSV file."""
    if (table is None) == (csv_path is None):
        raise click.UsageError("give exactly one of -t TABLE or -f FILE")
    engine = _engine(ctx)
    result = engine.checkout(name, _vids(versions), dest_name=table, csv_path=csv_path)
    click.echo(f"{result.name}\t{len(result.rows)}")


@cli.command()
@click.option("--table", "-t", default=None, help="Staged table to commit")
@click.option(
    "--file", "-f", "csv_path", default=None, type=_FILE, help="Edited CSV checkout"
)
@click.option(
    "--schema", "-s", "schema_path", default=None, type=_FILE, help="Schema file for -f"
)
@click.option("--message", "-m", default="", help="Commit message")
@click.pass_context
def commit(
    ctx,
    table: Optional[str],
    csv_path: Optional[Path],
    schema_path: Optional[Path],
    message: str,
):
    """Commit a checked-out table as a new version."""
    if (table is None) == (csv_path is None):
        raise click.UsageError("give exactly one of -t TABLE or -f FILE")
    engine = _engine(ctx)
    if csv_path is not None:
        if schema_path is None:
            raise click.UsageError("schema file required with -f (use -s)")
        vid = engine.commit(engine.load_csv_table(csv_path, schema_path), message)
    else:
        vid = engine.commit(table, message)
    click.echo(format_vid(vid))


@cli.command()
@click.argument("name")
@click.argument("a")
@click.argument("b")
@click.pass_context
def diff(ctx, name: str, a: str, b: str):
    """Records present in only one of two versions, by rid."""
    result = _engine(ctx).diff(name, parse_vid(a), parse_vid(b))
    for rid in sorted(result.only_in_a):
        click.echo(f"-\t{rid}")
    for rid in sorted(result.only_in_b):
        click.echo(f"+\t{rid}")


@cli.command(name="ls")
@click.argument("name", required=False)
@click.pass_context
def ls_(ctx, name: Optional[str]):
    """List CVDs, or the versions of one CVD."""
    engine = _engine(ctx)
    if name is None:
        for cvd in engine.list_cvds():
            click.echo(cvd)
        return
    store = engine.open(name)
    for vid in store.vids:
        size = store.rlist(vid).size
        click.echo(f"{format_vid(vid)}\t{size}\tp{store.partition_of(vid)}")


@cli.command()
@click.argument("name")
@click.pass_context
def drop(ctx, name: str):
    """Delete a CVD and its staged tables."""
    purged = _engine(ctx).drop_cvd(name)
    for table in purged:
        console.print(f"[yellow]discarded staged table '{table}'[/yellow]")


@cli.command()
@click.argument("name")
@click.option(
    "--gamma", default=None, help="Storage threshold: records, or a multiple of |R| like 2x"
)
@click.option("--mu", type=float, default=None, help="Tolerance factor, above 1")
@click.option("--delta", type=float, default=None, help="Fixed split parameter in (0, 1]")
@click.option("--check-every", type=int, default=None, help="Commits between checks")
@click.pass_context
def optimize(
    ctx,
    name: str,
    gamma: Optional[str],
    mu: Optional[float],
    delta: Optional[float],
    check_every: Optional[int],
):
    """Repartition now and keep the partitioning maintained."""
    result = _engine(ctx).maintainer(name).optimize(gamma, mu, delta, check_every)
    for key, value in result.to_dict().items():
        click.echo(f"{key}\t{value}")


@cli.command()
@click.argument("name")
@click.option("--version", "-v", "version", required=True, help="Version to scan")
@click.option(
    "--where", "-w", default="", help='Conjunctive predicate, e.g. "age>30,city=Paris"'
)
@click.pass_context
def run(ctx, name: str, version: str, where: str):
    """Print the records of a version matching a predicate as CSV."""
    engine = _engine(ctx)
    vid = parse_vid(version)
    attrs = engine.open(name).version_attributes(vid)
    records = engine.scan_version(name, vid, where)
    frame = pd.DataFrame(
        [r.project([a.attr_id for a in attrs]) for r in records],
        columns=[a.name for a in attrs],
    )
    click.echo(frame.to_csv(index=False), nl=False)


@cli.command()
@click.argument("name")
@click.option("--ancestors-of", default=None, help="Only the ancestors of this version")
@click.option("--descendants-of", default=None, help="Only the descendants of this version")
@click.pass_context
def log(ctx, name: str, ancestors_of: Optional[str], descendants_of: Optional[str]):
    """Version history: vid, parents, commit time and message."""
    engine = _engine(ctx)
    metas = engine.log(name)
    if ancestors_of is not None:
        keep = set(engine.ancestors(name, parse_vid(ancestors_of)))
        metas = [m for m in metas if m.vid in keep]
    if descendants_of is not None:
        keep = set(engine.descendants(name, parse_vid(descendants_of)))
        metas = [m for m in metas if m.vid in keep]
    for meta in metas:
        parents = ",".join(format_vid(p) for p in meta.parents) or "-"
        stamp = meta.commit_time.isoformat()
        click.echo(f"{format_vid(meta.vid)}\t{parents}\t{stamp}\t{meta.message}")


@cli.command()
@click.option(
    "--config", "-c", "config_path", required=True, type=_FILE, help="Benchmark plan (JSON)"
)
@click.option(
    "--out",
    "-o",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="CSV file for the result rows",
)
def bench(config_path: Path, out: Path):
    """Generate a workload and run partitioning or maintenance experiments."""
    plan = BenchPlan.from_json(config_path)
    frame = run_bench(plan, out)
    console.print(f"[green]✓[/green] {len(frame)} rows written to {out}")
    click.echo(str(out))


def main():
    """Main entry point for the CLI."""
    cli()


if __name__ == "__main__":
    main()
