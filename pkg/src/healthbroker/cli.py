"""Command-line entry points: run the service, run the latency harness."""

from __future__ import annotations

import sys

import click

from .bench import format_report, run_bench, write_jsonl
from .config import ApiConfig


@click.group()
def main():
    """Patient-controlled encrypted health-record broker."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON config file (ApiConfig keys).")
@click.option("--host", default=None, help="Listen address override.")
@click.option("--port", type=int, default=None, help="Listen port override.")
@click.option("--db", "database_path", default=None, help="SQLite database path.")
@click.option("--log-dir", default=None, help="Directory for audit logs.")
def serve(config_path, host, port, database_path, log_dir):
    """Start the HTTP service with the background log inspector."""
    from .api import serve as run_serve

    config = ApiConfig.from_file(config_path) if config_path else ApiConfig()
    if host:
        config.listen_host = host
    if port:
        config.listen_port = port
    if database_path:
        config.database_path = database_path
    if log_dir:
        config.log_dir = log_dir
    run_serve(config)


@main.command()
@click.option("--sizes", default="1k,10k,100k,500k,1m", show_default=True,
              help="Comma-separated payload sizes.")
@click.option("--reps", default=5, show_default=True, help="Repetitions per cell (>= 5).")
@click.option("--out", "out_path", default=None, help="Write the text table here.")
@click.option("--json", "json_path", default=None, help="Write machine-readable rows here.")
def bench(sizes, reps, out_path, json_path):
    """Time split/encrypt/upload across payload sizes; exit nonzero on
    structural assertion failure."""
    size_list = [s.strip() for s in sizes.split(",") if s.strip()]
    report = run_bench(sizes=size_list, reps=reps)
    text = format_report(report, size_list)
    click.echo(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    if json_path:
        write_jsonl(report, json_path)
    if report.failures:
        sys.exit(1)


if __name__ == "__main__":
    main()
