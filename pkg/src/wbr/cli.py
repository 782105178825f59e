"""Command-line front end.

Every command works in two modes. With ``--server URL`` (or ``WBR_SERVER``
set) it is a thin HTTP client against the service; otherwise it calls the
library in-process. Batch behavior is identical either way: artifacts land
in the same files and configuration errors exit with code 2 naming the
offending field.
"""

from __future__ import annotations

import functools
import json
import sys
import time
from typing import Optional

import click

from .config import ExperimentConfig, apply_overrides, parse_override_value
from .errors import ConfigError, WbrError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _core_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except WbrError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _load_raw(config_path: str, overrides, output: Optional[str]) -> dict:
    try:
        with open(config_path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {config_path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}")
    raw = apply_overrides(raw, overrides)
    if output is not None:
        raw.setdefault("experiment", {})["output_dir"] = output
    return raw


def _raw_to_request(raw: dict) -> dict:
    """Reshape the TOML dict into the service's request body."""
    exp = raw.get("experiment", {})
    body: dict = {"output_dir": exp.get("output_dir", "runs/out")}
    if "method" in exp:
        body["method"] = exp["method"]
    if "seeds" in exp:
        body["seeds"] = exp["seeds"]
    for section in ("dataset", "scenario", "model", "train"):
        if section in raw:
            body[section] = raw[section]
    return body


def _client(server: str):
    import httpx

    return httpx.Client(base_url=server.rstrip("/"), timeout=30.0)


def _wait_for_job(client, submitted: dict) -> dict:
    status_url = submitted["status_url"]
    last_state = None
    while True:
        status = client.get(status_url)
        status.raise_for_status()
        payload = status.json()
        if payload["state"] != last_state:
            click.echo(f"job {payload['job_id']}: {payload['state']}", err=True)
            last_state = payload["state"]
        if payload["state"] == "done":
            result = client.get(status_url + "/result")
            result.raise_for_status()
            return result.json()
        if payload["state"] == "error":
            raise WbrError(payload.get("error") or "job failed")
        time.sleep(0.3)


def _post_job(server: str, path: str, body: dict) -> dict:
    with _client(server) as client:
        response = client.post(path, json=body)
        if response.status_code == 422:
            detail = response.json().get("detail", [])
            first = detail[0] if detail else {}
            loc = ".".join(str(p) for p in first.get("loc", []))
            raise ConfigError(loc or "request", first.get("msg", "invalid request"))
        response.raise_for_status()
        return _wait_for_job(client, response.json())


def _print_summary(summary: dict) -> None:
    final = summary["final_a_b"]
    avg = summary["average_accuracy"]
    click.echo(f"method: {summary['method']}  seeds: {summary['seeds']}")
    click.echo(f"final A_B: {final['mean']:.2f} +/- {final['std']:.2f}")
    click.echo(f"average accuracy: {avg['mean']:.2f} +/- {avg['std']:.2f}")


@click.group()
def main():
    """Class-incremental learning runs, sweeps, and reports."""


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE",
              help="Override a config value, e.g. --set train.lr=0.1")
@click.option("--output", default=None, help="Output directory (overrides the config).")
@click.option("--server", envvar="WBR_SERVER", default=None,
              help="Run through a wbr service instead of in-process.")
@_core_errors
def run(config_path, overrides, output, server):
    """Execute one experiment config across its seeds."""
    raw = _load_raw(config_path, overrides, output)
    cfg = ExperimentConfig.from_dict(raw)  # validate before any work
    if server:
        summary = _post_job(server, "/api/v1/runs", _raw_to_request(raw))
    else:
        from .experiments import run_experiment

        summary = run_experiment(cfg)
    _print_summary(summary)


def _parse_axis(spec: str) -> tuple[str, list]:
    if "=" not in spec:
        raise ConfigError("--axis", f"expected NAME=v1,v2,..., got {spec!r}")
    name, _, values = spec.partition("=")
    parsed = []
    for chunk in values.split(","):
        chunk = chunk.strip()
        parsed.append(None if chunk in ("unset", "none") else parse_override_value(chunk))
    if not parsed:
        raise ConfigError("--axis", f"axis {name} has no values")
    return name.strip(), parsed


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--axis", "axis_specs", multiple=True, required=True, metavar="NAME=V1,V2",
              help="Sweep axis, e.g. --axis lr=0.1,0.01,0.001 or --axis alpha=0.5,unset")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--output", default=None)
@click.option("--jobs", default=1, show_default=True, help="Parallel worker processes.")
@click.option("--server", envvar="WBR_SERVER", default=None)
@_core_errors
def grid(config_path, axis_specs, overrides, output, jobs, server):
    """Sweep a config over one or more hyperparameter axes."""
    raw = _load_raw(config_path, overrides, output)
    axes = dict(_parse_axis(spec) for spec in axis_specs)
    cfg = ExperimentConfig.from_dict(raw)
    if server:
        body = _raw_to_request(raw)
        body["axes"] = axes
        body["jobs"] = jobs
        result = _post_job(server, "/api/v1/grids", body)
        rows = result["cells"]
    else:
        from .experiments import run_grid

        rows = run_grid(cfg, axes, jobs=jobs)
    for row in rows:
        knobs = "  ".join(f"{k}={row[k]}" for k in sorted(axes))
        click.echo(f"{knobs}  final={row['final_a_b_mean']:.2f}")
    click.echo(f"tables written under {cfg.output_dir}")


@main.command()
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path())
@click.option("--baseline", default=None, type=click.Path(),
              help="Run directory to compute deltas against.")
@click.option("--output", default="report.md", show_default=True)
@click.option("--server", envvar="WBR_SERVER", default=None)
@_core_errors
def report(run_dirs, baseline, output, server):
    """Compare finished runs in one table plus per-stage curves."""
    if server:
        with _client(server) as client:
            response = client.post("/api/v1/reports", json={
                "runs": list(run_dirs), "output": output, "baseline": baseline,
            })
            if response.status_code in (400, 422):
                raise WbrError(str(response.json().get("detail")))
            response.raise_for_status()
            markdown = response.json()["markdown"]
    else:
        from .experiments import build_report

        markdown = build_report(run_dirs, output, baseline_dir=baseline)
    click.echo(markdown, nl=False)


@main.command()
@click.argument("store_path", type=click.Path())
@click.option("--shape", default="32x32x3", show_default=True,
              help="Raw sample shape HxWxC used as the size unit.")
@click.option("--server", envvar="WBR_SERVER", default=None)
@_core_errors
def footprint(store_path, shape, server):
    """Express a saved memory store in raw-sample equivalents."""
    if server:
        with _client(server) as client:
            response = client.post("/api/v1/footprint", json={
                "store": store_path, "shape": shape,
            })
            if response.status_code in (400, 422):
                raise WbrError(str(response.json().get("detail")))
            response.raise_for_status()
            payload = response.json()
    else:
        from .experiments import footprint_report

        payload = footprint_report(store_path, shape)
    click.echo(json.dumps(payload, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
