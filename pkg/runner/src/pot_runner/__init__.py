"""Sandbox shim for generated solver programs.

Protocol: one JSON object per line on stdin, {"source": str, "timeout": s,
"allow_network"?: bool}; exactly one JSON line per request on stdout, either
{"ok": true, "value": "<decimal>"} or {"ok": false, "error": {"kind":
"compile"|"runtime"|"timeout"|"no_output", "message": str}}. Everything
that is not protocol (program prints, import log) goes to stderr.

Each request executes in a fresh namespace. The program's own stdout is
redirected, socket use is disabled unless the request allows it, the wall
clock is enforced with an interval timer, and the numeric return value of
solver() is rendered as a plain decimal string. By default the process
handles a single request and exits; --serve loops until stdin closes, still
one fresh namespace per request.

Standard-library-only on purpose: programs under test may import from the
standard library (imports are logged to stderr), nothing else is provided.
"""

from __future__ import annotations

import argparse
import builtins
import contextlib
import json
import math
import signal
import sys
from decimal import Decimal

__version__ = "0.1.0"

BLOCKED_IMPORTS = {"socket", "ssl"}
MESSAGE_LIMIT = 500


class _WallTimeout(BaseException):
    # BaseException so a bare `except Exception` inside the program
    # cannot swallow the limit
    pass


def _on_alarm(signum, frame):
    raise _WallTimeout()


def _error(kind: str, message: str) -> dict:
    return {"ok": False, "error": {"kind": kind, "message": message[:MESSAGE_LIMIT]}}


def _decimal_text(value) -> str | None:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return format(Decimal(repr(value)), "f")
    if isinstance(value, Decimal):
        return format(value, "f") if value.is_finite() else None
    return None


def _guarded_import(allow_network: bool, seen: set[str]):
    real_import = builtins.__import__

    def guarded(name, globals=None, locals=None, fromlist=(), level=0):
        top = name.partition(".")[0]
        if not allow_network and top in BLOCKED_IMPORTS:
            raise ImportError(f"import of {top!r} is disabled in the sandbox")
        if top not in seen:
            seen.add(top)
            print(f"[import] {top}", file=sys.stderr)
        return real_import(name, globals, locals, fromlist, level)

    return guarded


@contextlib.contextmanager
def _deny_sockets(allow_network: bool):
    # the import guard stops fresh imports; this also blanks an already
    # loaded socket module for the duration of the request
    if allow_network or "socket" not in sys.modules:
        yield
        return
    import socket

    def blocked(*args, **kwargs):
        raise OSError("network access is disabled in the sandbox")

    saved = (socket.socket, socket.create_connection)
    socket.socket, socket.create_connection = blocked, blocked
    try:
        yield
    finally:
        socket.socket, socket.create_connection = saved


def execute_request(request: dict) -> dict:
    """Run one program and build its reply object."""
    source = request.get("source")
    if not isinstance(source, str):
        return _error("runtime", "request carries no source text")
    try:
        timeout = float(request.get("timeout", 10.0))
    except (TypeError, ValueError):
        return _error("runtime", f"bad timeout value {request.get('timeout')!r}")
    if timeout <= 0:
        return _error("runtime", f"bad timeout value {timeout!r}")
    allow_network = bool(request.get("allow_network", False))

    try:
        code = compile(source, "<solver>", "exec")
    except (SyntaxError, ValueError) as exc:
        return _error("compile", str(exc))

    sandbox_builtins = dict(vars(builtins))
    sandbox_builtins["__import__"] = _guarded_import(allow_network, set())
    namespace: dict = {"__name__": "__main__", "__builtins__": sandbox_builtins}

    previous = signal.signal(signal.SIGALRM, _on_alarm)
    signal.setitimer(signal.ITIMER_REAL, timeout)
    try:
        with contextlib.redirect_stdout(sys.stderr), _deny_sockets(allow_network):
            exec(code, namespace)
            if "result" in namespace:
                value = namespace["result"]
            elif callable(namespace.get("solver")):
                value = namespace["solver"]()
            else:
                return _error("no_output", "program defines no solver() and sets no result")
    except _WallTimeout:
        return _error("timeout", f"exceeded the {timeout:g}s wall limit")
    except KeyboardInterrupt:
        raise
    except BaseException as exc:  # noqa: BLE001 - SystemExit and friends are program failures here
        return _error("runtime", f"{type(exc).__name__}: {exc}")
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, previous)

    text = _decimal_text(value)
    if text is None:
        return _error("no_output", f"solver() returned a non-numeric {type(value).__name__}")
    return {"ok": True, "value": text}


def _apply_cpu_backstop(timeout: float) -> None:
    """Hard CPU ceiling for one-shot mode.

    The interval timer cannot interrupt every loop shape (a tight loop
    wrapped in try/except never reaches a signal check on some
    interpreters), so the kernel enforces a cumulative CPU budget: past it,
    the process dies and the parent reports the timeout.
    """
    try:
        import resource
    except ImportError:  # non-POSIX; parent-side kill still applies
        return
    budget = max(2, math.ceil(timeout) + 1)
    try:
        resource.setrlimit(resource.RLIMIT_CPU, (budget, budget + 1))
    except (ValueError, OSError):
        pass


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pot-runner", description="execute solver() programs over JSON lines")
    parser.add_argument("--serve", action="store_true", help="keep handling requests until stdin closes")
    args = parser.parse_args(argv)
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be a JSON object")
        except ValueError as exc:
            reply = _error("runtime", f"bad request line: {exc}")
        else:
            if not args.serve:
                # serve mode skips the process-wide CPU ceiling (it is
                # cumulative across requests); callers enforce wall limits
                try:
                    _apply_cpu_backstop(float(request.get("timeout", 10.0)))
                except (TypeError, ValueError):
                    pass
            reply = execute_request(request)
        print(json.dumps(reply), flush=True)
        if not args.serve:
            break
    return 0
