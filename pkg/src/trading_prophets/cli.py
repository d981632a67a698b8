"""Command-line front end.

Every subcommand is a thin client of the HTTP service in
:mod:`trading_prophets.service`: by default the app is called in-process
(no socket); pass ``--server URL`` to talk to a remote instance instead.

Exit codes: 0 success, 1 domain error (bad instance/policy semantics,
degenerate estimation, ...), 2 flag or request-shape errors.
"""
from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx

from .service import app
from .sim_harness import SimReport, append_report_csv


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
            status, body = resp.status_code, resp.text
    else:
        async def _go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(transport=transport,
                                         base_url="http://trading-prophets.local",
                                         timeout=None) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(_go())
        status, body = resp.status_code, resp.text
    if status == 200:
        return json.loads(body)
    if status == 400:
        err = json.loads(body)
        click.echo(f"error [{err.get('error')}]: {err.get('message')}", err=True)
        sys.exit(1)
    if status == 422:
        click.echo(f"invalid request: {body}", err=True)
        sys.exit(2)
    click.echo(f"server error {status}: {body}", err=True)
    sys.exit(1)


def _load_instance(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read instance file {path}: {exc}")


def _parse_policy(text: str) -> dict:
    """A policy flag is a JSON object, @file, or a bare policy name."""
    if text.startswith("@"):
        return json.loads(Path(text[1:]).read_text())
    try:
        obj = json.loads(text)
        if isinstance(obj, dict):
            return obj
    except json.JSONDecodeError:
        pass
    return {"policy": text}


def _emit(doc: dict) -> None:
    click.echo(json.dumps(doc, indent=2))


def _maybe_csv(csv_path: str | None, instance_path: str, policy_label: str,
               doc: dict) -> None:
    if not csv_path:
        return
    r = doc["report"]
    rep = SimReport(mean=r["mean"], stderr=r["stderr"],
                    ci95=(r["ci95"][0], r["ci95"][1]), trials=r["trials"],
                    seed=r["seed"], wall_time_ms=r["wall_time_ms"])
    append_report_csv(csv_path, Path(instance_path).name, policy_label, rep)


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service URL (default: run in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Exact analytics and Monte Carlo for buy-and-sell threshold trading."""
    ctx.obj = server


_instance_opt = click.option("--instance", "instance_path", required=True,
                             metavar="FILE", help="Instance JSON file.")
_trials_opt = click.option("--trials", type=int, required=True)
_seed_opt = click.option("--seed", type=int, required=True,
                         help="Master seed (required: runs must be reproducible).")
_threads_opt = click.option("--threads", type=int, default=None,
                            help="Worker threads (default: all cores, or "
                                 "TRADING_PROPHETS_THREADS).")
_csv_opt = click.option("--csv", "csv_path", default=None, metavar="FILE",
                        help="Append a result row to this CSV file.")


@main.command()
@_instance_opt
@click.option("--policy", required=True, help="Policy JSON, @file, or bare name.")
@_trials_opt
@_seed_opt
@_threads_opt
@_csv_opt
@click.pass_obj
def simulate(server, instance_path, policy, trials, seed, threads, csv_path):
    """Estimate a policy's expected profit."""
    pol = _parse_policy(policy)
    doc = _post(server, "/simulate", {
        "instance": _load_instance(instance_path), "policy": pol,
        "trials": trials, "seed": seed, "threads": threads,
    })
    _maybe_csv(csv_path, instance_path, pol.get("policy", "?"), doc)
    _emit(doc)


@main.command()
@_instance_opt
@click.option("--policy", required=True, help="Policy JSON, @file, or bare name.")
@_trials_opt
@_seed_opt
@_threads_opt
@_csv_opt
@click.pass_obj
def ratio(server, instance_path, policy, trials, seed, threads, csv_path):
    """Estimate mean(policy)/mean(prophet) on common traces."""
    pol = _parse_policy(policy)
    doc = _post(server, "/ratio", {
        "instance": _load_instance(instance_path), "policy": pol,
        "trials": trials, "seed": seed, "threads": threads,
    })
    _maybe_csv(csv_path, instance_path, f"ratio:{pol.get('policy', '?')}", doc)
    _emit(doc)


@main.command()
@_instance_opt
@click.option("--threshold", type=float, default=None)
@click.option("--policy", default=None, help="Threshold-family policy spec.")
@click.pass_obj
def exact(server, instance_path, threshold, policy):
    """Exact expected values for the prophet and a threshold policy."""
    if (threshold is None) == (policy is None):
        raise click.UsageError("give exactly one of --threshold / --policy")
    payload = {"instance": _load_instance(instance_path)}
    if threshold is not None:
        payload["threshold"] = threshold
    else:
        payload["policy"] = _parse_policy(policy)
    _emit(_post(server, "/exact", payload))


@main.command()
@_instance_opt
@click.option("--method", required=True,
              type=click.Choice(["iid_median", "mixture_median", "sixteenth", "best"]))
@click.pass_obj
def threshold(server, instance_path, method):
    """Construct a threshold from the instance."""
    _emit(_post(server, "/threshold",
                {"instance": _load_instance(instance_path), "method": method}))


@main.command()
@_instance_opt
@click.option("--revealed-order", is_flag=True, default=False,
              help="Average the fixed-order optimum over all n! orders.")
@click.option("--k", type=int, default=None, help="Holdings capacity (i.i.d. only).")
@click.pass_obj
def dp(server, instance_path, revealed_order, k):
    """Exact optimal online value by backward induction."""
    _emit(_post(server, "/dp", {
        "instance": _load_instance(instance_path),
        "revealed_order": revealed_order, "k": k,
    }))


@main.command(name="verify-lemma")
@click.option("--lemma", required=True, type=click.Choice(["two_medians"]))
@click.option("--fuzz", type=int, required=True, help="Number of fuzzed pairs.")
@_seed_opt
@click.option("--max-atoms", type=int, default=8, show_default=True)
@click.pass_obj
def verify_lemma(server, lemma, fuzz, seed, max_atoms):
    """Fuzz-check an exact inequality; reports pass/fail counts and the
    worst captured-value ratio."""
    _emit(_post(server, "/verify-lemma", {
        "lemma": lemma, "fuzz": fuzz, "seed": seed, "max_atoms": max_atoms,
    }))


@main.command()
@click.option("--name", required=True)
@click.option("--params", "-p", "params", multiple=True, metavar="KEY=VALUE",
              help="Builder parameter; repeat for several.")
@click.option("--out", "out_path", default=None, metavar="FILE",
              help="Write the instance JSON here (default: stdout envelope only).")
@click.pass_obj
def builtin(server, name, params, out_path):
    """Construct a named instance and optionally write it to a file."""
    parsed: dict[str, float] = {}
    for p in params:
        key, sep, value = p.partition("=")
        if not sep:
            raise click.UsageError(f"--params takes KEY=VALUE, got {p!r}")
        try:
            parsed[key.strip()] = float(value)
        except ValueError:
            raise click.UsageError(f"parameter {key!r} has non-numeric value {value!r}")
    doc = _post(server, "/builtin", {"name": name, "params": parsed})
    if out_path:
        Path(out_path).write_text(json.dumps(doc["instance"], indent=2) + "\n")
        doc["path"] = out_path
    _emit(doc)


@main.command()
@_instance_opt
@click.option("--inner", default="best", show_default=True,
              help="Per-arm threshold policy (JSON, @file, or bare name).")
@click.option("--arm", type=int, default=None,
              help="Fixed 0-based arm (default: uniform random per trace).")
@click.option("--ratio", "as_ratio", is_flag=True, default=False,
              help="Report mean(policy)/mean(prophet) instead of the mean.")
@_trials_opt
@_seed_opt
@_threads_opt
@_csv_opt
@click.pass_obj
def bandit(server, instance_path, inner, arm, as_ratio, trials, seed, threads, csv_path):
    """Simulate single-arm threshold trading on a multi-arm instance."""
    doc = _post(server, "/bandit", {
        "instance": _load_instance(instance_path), "inner": _parse_policy(inner),
        "arm": arm, "ratio": as_ratio, "trials": trials, "seed": seed,
        "threads": threads,
    })
    _maybe_csv(csv_path, instance_path, "bandit", doc)
    _emit(doc)


@main.command()
@_instance_opt
@click.option("--t", "--T", "t_value", type=float, required=True,
              help="Budgeted threshold (> 0).")
@click.option("--ratio", "as_ratio", is_flag=True, default=False,
              help="Report mean(final budget)/mean(prophet budget).")
@_trials_opt
@_seed_opt
@_threads_opt
@_csv_opt
@click.pass_obj
def budgeted(server, instance_path, t_value, as_ratio, trials, seed, threads, csv_path):
    """Simulate all-in/all-out budgeted threshold trading."""
    doc = _post(server, "/budgeted", {
        "instance": _load_instance(instance_path), "T": t_value,
        "ratio": as_ratio, "trials": trials, "seed": seed, "threads": threads,
    })
    _maybe_csv(csv_path, instance_path, f"budgeted:T={t_value}", doc)
    _emit(doc)


if __name__ == "__main__":
    main()
