"""Command-line front end.

A thin client over the HTTP service: every subcommand builds a request,
sends it to the FastAPI app (in-process by default, or a remote server via
--server) and renders the response as CSV/JSON for offline plotting.

Exit codes: 0 success, 1 usage or input error, 2 feasibility failure.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import sys
from pathlib import Path

import httpx


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 1):
        super().__init__(message)
        self.exit_code = exit_code


class Parser(argparse.ArgumentParser):
    # usage problems are exit code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


def request(
    method: str,
    path: str,
    server: str | None,
    json_body: dict | None = None,
    params: dict | None = None,
) -> tuple[int, dict]:
    """Send one request, in-process unless a --server URL was given."""

    async def go() -> tuple[int, dict]:
        if server:
            client = httpx.AsyncClient(base_url=server, timeout=None)
        else:
            from .service.app import create_app

            client = httpx.AsyncClient(
                transport=httpx.ASGITransport(app=create_app()),
                base_url="http://optomech.internal",
                timeout=None,
            )
        async with client:
            response = await client.request(
                method, path, json=json_body, params=params
            )
        return response.status_code, response.json()

    try:
        return asyncio.run(go())
    except httpx.HTTPError as exc:
        raise CliError(f"request failed: {exc}")


def check_ok(status: int, payload: dict) -> dict:
    if status == 200:
        return payload
    detail = payload.get("detail", payload)
    raise CliError(f"server returned {status}: {detail}")


def overrides_from(args: argparse.Namespace) -> dict:
    mapping = {
        "wavelength": args.wavelength,
        "temperature": args.temperature,
        "dark_rate": args.dark_rate,
        "seed": args.seed,
        "n_photons": args.n_photons,
        "tau_d": args.tau_d,
        "tau_dec": args.tau_dec,
        "bins": args.bins,
    }
    return {k: v for k, v in mapping.items() if v is not None}


def write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def json_text(data: dict) -> str:
    return json.dumps(data, indent=2) + "\n"


def cmd_feasibility(args) -> int:
    body = {
        "device": args.device,
        "device_file": args.device_file,
        "overrides": overrides_from(args),
    }
    payload = check_ok(*request("POST", "/feasibility", args.server, body))
    device = payload["device"]
    lines = [f"device: {device['name']}"]
    for key in (
        "kappa",
        "sideband_ratio",
        "gamma_c_hz",
        "t_eid_k",
        "p_success",
        "dark_count_bound_hz",
        "x_zp_m",
        "g_rad_s",
    ):
        lines.append(f"  {key:20s} {device[key]:.6g}")
    lines.append("checks:")
    for check in payload["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        margin = "unbounded" if check["margin"] is None else f"{check['margin']:.3g}"
        lines.append(
            f"  [{status}] {check['name']:20s} margin {margin}  "
            f"({check['detail']})"
        )
    verdict = "feasible" if payload["passed"] else "NOT feasible"
    lines.append(f"result: {verdict}")
    print("\n".join(lines))
    if args.out:
        write_text(args.out, json_text(payload))
    return 0 if payload["passed"] else 2


def cmd_table(args) -> int:
    params = {"device_file": args.device_file} if args.device_file else None
    payload = check_ok(*request("POST", "/table", args.server, params=params))
    header = (
        f"{'device':16s} {'kappa':>11s} {'printed':>9s} {'dev%':>6s} "
        f"{'w_m/G_c':>8s} {'printed':>8s} {'dev%':>6s} "
        f"{'T_EID(K)':>9s} {'printed':>8s} {'dev%':>6s}"
    )
    print(header)
    print("-" * len(header))
    for row in payload["rows"]:
        print(
            f"{row['name']:16s} {row['kappa']:11.3e} {row['kappa_published']:9.6f} "
            f"{row['kappa_deviation_pct']:6.1f} "
            f"{row['sideband_ratio']:8.3f} {row['sideband_ratio_published']:8.2f} "
            f"{row['sideband_ratio_deviation_pct']:6.1f} "
            f"{row['t_eid_k']:9.3f} {row['t_eid_published_k']:8.1f} "
            f"{row['t_eid_deviation_pct']:6.1f}"
        )
    if args.out:
        write_text(args.out, json_text(payload))
    return 0


def cmd_arrival(args) -> int:
    body = {
        "device": args.device,
        "device_file": args.device_file,
        "overrides": overrides_from(args),
    }
    payload = check_ok(*request("POST", "/arrival", args.server, body))
    rows = [
        [repr(t), repr(d)]
        for t, d in zip(payload["t_s"], payload["density_per_s"])
    ]
    write_text(args.out, csv_text(["t_seconds", "density_per_second"], rows))
    return 0


def cmd_visibility(args) -> int:
    body = {
        "device": args.device,
        "device_file": args.device_file,
        "overrides": overrides_from(args),
        "tau_dec": args.tau_dec,
        "tau_d_grid": args.tau_d_grid,
    }
    payload = check_ok(*request("POST", "/visibility", args.server, body))
    rows = [
        [repr(r["tau_d_s"]), repr(r["visibility"]), repr(r["relative_rate"])]
        for r in payload["rows"]
    ]
    write_text(args.out, csv_text(["tau_d_s", "visibility", "relative_rate"], rows))
    return 0


def cmd_simulate(args) -> int:
    if not args.out:
        raise CliError("simulate requires --out PATH for the records CSV")
    body = {
        "device": args.device,
        "device_file": args.device_file,
        "overrides": overrides_from(args),
        "phases": args.phases,
        "workers": args.workers,
    }
    payload = check_ok(*request("POST", "/simulate", args.server, body))
    rows = [
        [
            r["trial_index"],
            repr(r["arrival_time_s"]),
            r["detector"],
            repr(r["phase_rad"]),
            r["origin"],
        ]
        for r in payload["records"]
    ]
    write_text(
        args.out,
        csv_text(
            ["trial_index", "arrival_time_s", "detector", "phase_rad", "origin"], rows
        ),
    )
    summary = {
        "device": payload["device"],
        "seed": payload["seed"],
        "n_photons": payload["n_photons"],
        **payload["summary"],
    }
    summary_path = Path(args.out).with_suffix(".summary.json")
    write_text(str(summary_path), json_text(summary))
    print(f"records: {args.out}\nsummary: {summary_path}\nseed: {payload['seed']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def comma_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def add_common(sub: argparse.ArgumentParser, with_device: bool = True) -> None:
    sub.add_argument("--device-file", help="device catalog JSON (default: bundled; "
                     "env OPTOMECH_DEVICE_FILE overrides the default)")
    sub.add_argument("--server", help="base URL of a running service "
                     "(default: run in-process)")
    sub.add_argument("--out", help="output file path")
    if with_device:
        sub.add_argument("--device", required=True, help="device name from the catalog")
    # overrides, one flag per key
    sub.add_argument("--wavelength", type=float, help="optical wavelength, m")
    sub.add_argument("--temperature", type=float, help="base temperature, K")
    sub.add_argument("--dark-rate", type=float, dest="dark_rate",
                     help="detector dark count rate, 1/s")
    sub.add_argument("--seed", type=int, help="simulation seed, u64")
    sub.add_argument("--n-photons", type=int, dest="n_photons",
                     help="photons per simulated run")
    sub.add_argument("--tau-d", type=float, dest="tau_d", help="storage delay, s")
    sub.add_argument("--tau-dec", type=float, dest="tau_dec",
                     help="coherence time, s")
    sub.add_argument("--bins", type=int, help="samples per mechanical period")


def build_parser() -> Parser:
    parser = Parser(prog="optomech", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    feas = commands.add_parser("feasibility", help="derived quantities and checks")
    add_common(feas)
    feas.set_defaults(func=cmd_feasibility)

    table = commands.add_parser("table", help="catalog vs published reference values")
    add_common(table, with_device=False)
    table.set_defaults(func=cmd_table)

    arrival = commands.add_parser("arrival", help="normalized arrival-time curve")
    add_common(arrival)
    arrival.set_defaults(func=cmd_arrival)

    vis = commands.add_parser("visibility", help="visibility vs storage delay")
    add_common(vis)
    vis.add_argument("--tau-d-grid", type=comma_floats, dest="tau_d_grid",
                     help="comma-separated delays, s (default: 0..5*tau_dec)")
    vis.set_defaults(func=cmd_visibility)

    sim = commands.add_parser("simulate", help="seeded Monte Carlo run")
    add_common(sim)
    sim.add_argument("--phases", type=comma_floats,
                     help="comma-separated phase settings, rad")
    sim.add_argument("--workers", type=int, default=1,
                     help="worker threads (results identical for any value)")
    sim.set_defaults(func=cmd_simulate)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
