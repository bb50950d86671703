"""Command line front end.

Every command is a thin client of the HTTP service: by default the app is
mounted in-process (no socket, same filesystem), and ``--server URL`` sends
the identical request to a remote ``vepflow serve`` instead.

Exit status: 0 when every requested certificate passed, 1 when the work ran
but a certificate failed, 2 on errors (bad config, missing files,
non-convergence reported by the service).
"""

import argparse
import asyncio
import sys
from pathlib import Path

import httpx


def _read_config(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        print(f"[config-not-found] no config file at {p}", file=sys.stderr)
        raise SystemExit(2)
    return p.read_text()


def _request(server, path: str, payload: dict) -> dict:
    """POST one JSON request, in-process unless a server URL is given."""

    async def go():
        if server:
            client = httpx.AsyncClient(base_url=server.rstrip("/"), timeout=None)
        else:
            from .service import app

            client = httpx.AsyncClient(transport=httpx.ASGITransport(app=app),
                                       base_url="http://vepflow.internal",
                                       timeout=None)
        async with client:
            return await client.post(path, json=payload)

    try:
        resp = asyncio.run(go())
    except httpx.HTTPError as exc:
        print(f"[transport] {exc}", file=sys.stderr)
        raise SystemExit(2)
    if resp.status_code == 400:
        body = resp.json()
        print(f"[{body.get('code', 'error')}] {body.get('message', '')}", file=sys.stderr)
        raise SystemExit(2)
    if resp.status_code != 200:
        print(f"[http-{resp.status_code}] {resp.text}", file=sys.stderr)
        raise SystemExit(2)
    return resp.json()


def _yesno(flag) -> str:
    if flag is None:
        return "n/a"
    return "yes" if flag else "NO"


def _print_run_summary(s: dict) -> None:
    print(f"run directory    {s['directory']}")
    print(f"config hash      {s['config_hash'][:16]}")
    print(f"steps            {s['completed_steps']}/{s['requested_steps']}")
    print(f"certified        {_yesno(s['all_certified'])}  (max defect {s['max_defect']:.3e})")
    print(f"energy monotone  {_yesno(s['energy_monotone'])}")
    print(f"mass drift       {s['mass_drift_rel']:.3e}")
    if s.get("verifier_passed") is not None:
        print(f"trajectory check {_yesno(s['verifier_passed'])}  ({s['verify_report_path']})")
    if s.get("failure"):
        print(f"failure          {s['failure']}")
    print(f"wall time        {s['wall_time']:.1f} s")
    print(f"result           {'PASS' if s['passed'] else 'FAIL'}")


def cmd_run(args) -> int:
    payload = {"config_text": _read_config(args.config), "out_dir": args.out}
    s = _request(args.server, "/run", payload)
    _print_run_summary(s)
    return 0 if s["passed"] else 1


def cmd_sweep(args) -> int:
    payload = {"config_text": _read_config(args.config), "out_dir": args.out}
    s = _request(args.server, "/sweep", payload)
    print(f"sweep directory  {s['directory']}")
    print(f"uniform bound    {s['uniform_bound']:.6e}  holds: {_yesno(s['uniform_bound_holds'])}")
    print(f"{'gamma':>10}  {'pass':>5}  {'sup E_tot':>12}  {'max defect':>12}  {'R to gamma=0':>13}")
    for e in s["entries"]:
        rd = e.get("r_distance_final")
        rd_txt = f"{rd:.4e}" if rd is not None else "--"
        print(f"{e['gamma']:>10g}  {_yesno(e['passed']):>5}  {e['sup_e_tot']:>12.6e}  "
              f"{e['max_defect']:>12.3e}  {rd_txt:>13}")
    print(f"result           {'PASS' if s['passed'] else 'FAIL'}")
    return 0 if s["passed"] else 1


def cmd_verify(args) -> int:
    payload = {"run_dir": str(Path(args.run_dir).resolve()),
               "config_text": _read_config(args.config) if args.config else None,
               "gamma": args.gamma,
               "tol_factor": args.tol_factor}
    s = _request(args.server, "/verify", payload)
    print(f"times checked    {s['n_times']}")
    print(f"max defect       {s['max_defect']:.6e}  (tolerance {s['tol']:.6e})")
    print(f"worst time       {s['worst_time']:.6g}")
    print(f"report           {s['report_path']}")
    print(f"result           {'PASS' if s['passed'] else 'FAIL'}")
    return 0 if s["passed"] else 1


def cmd_check_ops(args) -> int:
    s = _request(args.server, "/check-ops", {"fast": args.fast})
    for c in s["checks"]:
        mark = "pass" if c["passed"] else "FAIL"
        print(f"[{mark}] {c['name']}: value={c['value']:.3e} "
              f"threshold={c['threshold']:.3e} {c['detail']}".rstrip())
    n_fail = sum(not c["passed"] for c in s["checks"])
    print(f"result           {'PASS' if s['passed'] else f'FAIL ({n_fail} checks)'}")
    return 0 if s["passed"] else 1


def cmd_columns(args) -> int:
    """Rewrite a run's CSV tables as whitespace-separated .dat files with a
    gnuplot-style numbered header comment."""
    run_dir = Path(args.run_dir)
    sources = []
    if run_dir.is_file():
        sources = [run_dir]
    else:
        for name in ("steps.csv", "verify_report.csv"):
            p = run_dir / name
            if p.is_file():
                sources.append(p)
    if not sources:
        print(f"no CSV tables under {run_dir}", file=sys.stderr)
        return 2
    for src in sources:
        lines = src.read_text().splitlines()
        header, rows, trailing = None, [], []
        for ln in lines:
            if ln.startswith("#"):
                trailing.append(ln)
            elif header is None:
                header = ln.split(",")
            else:
                rows.append(ln.split(","))
        dest = src.with_suffix(".dat")
        cols = "  ".join(f"{i + 1}:{name}" for i, name in enumerate(header))
        out_lines = [f"# {cols}"]
        out_lines += [" ".join(r) for r in rows]
        out_lines += trailing
        dest.write_text("\n".join(out_lines) + "\n")
        print(f"{dest}  ({cols})")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("vepflow.service:app", host=args.host, port=args.port,
                log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vepflow",
        description="certified two-phase viscoelastoplastic flow runs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument("--server", default=None,
                       help="URL of a running service (default: in-process)")

    p = sub.add_parser("run", help="time-step one config and certify every step")
    p.add_argument("config", help="run config file (key = value lines)")
    p.add_argument("--out", default=None, help="output directory override")
    add_server(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the stress-diffusion sweep, shared initial data")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    add_server(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="trajectory inequality check on a stored run")
    p.add_argument("run_dir", help="run directory with fields/ and config.json")
    p.add_argument("--config", default=None, help="config file overriding the stored one")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--tol-factor", type=float, default=None)
    add_server(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check-ops", help="operator identity and convergence battery")
    p.add_argument("--fast", action="store_true", help="trimmed sample counts")
    add_server(p)
    p.set_defaults(func=cmd_check_ops)

    p = sub.add_parser("columns", help="convert a run's CSV tables to gnuplot .dat")
    p.add_argument("run_dir", help="run directory or a single CSV file")
    p.set_defaults(func=cmd_columns)

    p = sub.add_parser("serve", help="serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
