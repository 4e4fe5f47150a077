"""Command-line entry point: validate, solve, verify, gen, render."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import gen
from .model import InstanceFormatError, read_instance, validate
from .solver import (InvalidBoundary, SolutionMesh, SolverError, dumps_solution, read_solution,
                     solve)
from .split import SplitError
from .verify import DEFAULT_TOL, verify

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFY = 2
EXIT_SOLVER = 3
EXIT_PARSE = 64
EXIT_USAGE = 65

log = logging.getLogger("holefold")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _branch(text: str) -> int:
    table = {"+": 1, "+1": 1, "1": 1, "-": -1, "-1": -1}
    if text not in table:
        raise argparse.ArgumentTypeError("branch must be + or -")
    return table[text]


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_validate(args) -> int:
    bm = read_instance(args.instance)
    tol = bm.tolerance(args.eps)
    bad = validate(bm, tol)
    if bad is None:
        print(json.dumps({"status": "Valid"}))
        return EXIT_OK
    print(json.dumps(bad.to_dict()))
    return EXIT_INVALID


def cmd_solve(args) -> int:
    bm = read_instance(args.instance)
    try:
        mesh, trace = solve(bm, policy=args.policy, branch=args.branch, seed=args.seed,
                            audit=args.audit)
    except InvalidBoundary as exc:
        print(json.dumps(exc.violation.to_dict()))
        return EXIT_INVALID
    except (SolverError, SplitError) as exc:
        trace = getattr(exc, "trace", None)
        dump = {"status": "SolverError", "error": str(exc)}
        if trace is not None and hasattr(trace, "summary"):
            dump["trace"] = {**trace.summary(), "steps": trace.steps, "remaining": trace.remaining}
        elif trace:
            dump["trace"] = trace
        sys.stderr.write(json.dumps(dump, default=_json_default, indent=1) + "\n")
        return EXIT_SOLVER
    _emit(dumps_solution(mesh, trace), args.output)
    log.info("solved: %d faces, routine1=%d routine2=%d", len(mesh.faces), trace.routine1,
             trace.routine2)
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def cmd_verify(args) -> int:
    bm = read_instance(args.instance)
    mesh = read_solution(args.solution)
    report = verify(bm, mesh, tol=args.tol, samples=args.samples, seed=args.seed)
    print(json.dumps(report.to_dict(), indent=1))
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_gen(args) -> int:
    if args.shape in gen.CORPUS:
        bm = gen.build(args.shape)
    else:
        convex = {"random": None, "convex": True, "star": False}[args.shape]
        bm = gen.random_instance(args.folds, args.d, args.seed, n_vertices=args.vertices,
                                 convex=convex)
    _emit(json.dumps(bm.to_json(), indent=1) + "\n", args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.9g}"


def face_parity(mesh: SolutionMesh) -> np.ndarray:
    """+1 for faces whose planar image keeps orientation, -1 for mirrored ones."""
    D = mesh.vertices_domain[mesh.faces]
    I = mesh.vertices_image[mesh.faces]
    a = ((D[:, 1, 0] - D[:, 0, 0]) * (D[:, 2, 1] - D[:, 0, 1])
         - (D[:, 1, 1] - D[:, 0, 1]) * (D[:, 2, 0] - D[:, 0, 0]))
    b = ((I[:, 1, 0] - I[:, 0, 0]) * (I[:, 2, 1] - I[:, 0, 1])
         - (I[:, 1, 1] - I[:, 0, 1]) * (I[:, 2, 0] - I[:, 0, 0]))
    return np.where(a * b < 0, -1, 1)


def render_svg(mesh: SolutionMesh, style: str = "parity") -> str:
    D = mesh.vertices_domain
    lo, hi = D.min(axis=0), D.max(axis=0)
    span = hi - lo
    margin = 0.05 * float(span.max())
    x0, y0 = lo[0] - margin, lo[1] - margin
    w, h = span[0] + 2 * margin, span[1] + 2 * margin
    width = 800.0
    height = width * h / w

    parity = face_parity(mesh) if (style == "parity" and mesh.dimension == 2) else None
    owner: dict = {}
    for k, f in enumerate(mesh.faces.tolist()):
        for s in range(3):
            a, b = f[s], f[(s + 1) % 3]
            owner.setdefault((min(a, b), max(a, b)), []).append(k)
    stroke = max(w, h) / 400.0
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}">',
        "<style>.preserved{fill:#dde8f5}.reflected{fill:#f5e0c8}.face{fill:#e8e8e8}"
        f".edge{{stroke:#888;stroke-width:{_fmt(stroke / 2)}}}"
        f".seam{{stroke:#c0392b;stroke-width:{_fmt(stroke)}}}"
        f".boundary{{stroke:#000;stroke-width:{_fmt(stroke)};fill:none}}</style>",
        # flip y so the domain reads with +y up
        f'<g transform="matrix(1 0 0 -1 0 {_fmt(2 * y0 + h)})">',
    ]
    for k, f in enumerate(mesh.faces.tolist()):
        cls = "face" if parity is None else ("preserved" if parity[k] > 0 else "reflected")
        pts = " ".join(f"{_fmt(D[i, 0])},{_fmt(D[i, 1])}" for i in f)
        out.append(f'<polygon class="{cls}" points="{pts}"/>')
    for (a, b), fs in sorted(owner.items()):
        if len(fs) == 1:
            cls = "boundary"
        elif parity is not None and parity[fs[0]] != parity[fs[1]]:
            cls = "seam"
        else:
            cls = "edge"
        out.append(f'<line class="{cls}" x1="{_fmt(D[a, 0])}" y1="{_fmt(D[a, 1])}" '
                   f'x2="{_fmt(D[b, 0])}" y2="{_fmt(D[b, 1])}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_obj(mesh: SolutionMesh) -> str:
    if mesh.dimension != 3:
        raise ValueError("OBJ export needs a three-dimensional image")
    lines = ["# folded image"]
    lines += ["v " + " ".join(_fmt(c) for c in p) for p in mesh.vertices_image]
    lines += ["f " + " ".join(str(i + 1) for i in f) for f in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def cmd_render(args) -> int:
    mesh = read_solution(args.solution)
    fmt = args.format or Path(args.output).suffix.lower().lstrip(".")
    if fmt == "svg":
        text = render_svg(mesh, args.style)
    elif fmt == "obj":
        if mesh.dimension != 3:
            sys.stderr.write(f"obj export needs d=3, solution has d={mesh.dimension}\n")
            return EXIT_USAGE
        text = render_obj(mesh)
    else:
        sys.stderr.write(f"unknown render format {fmt!r}; use .svg or .obj\n")
        return EXIT_USAGE
    _emit(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="holefold", description="Fill a polygon under a folded boundary.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check an instance")
    s.add_argument("instance")
    s.add_argument("--eps", type=float, default=1e-9, help="relative length tolerance")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", help="compute a solution mesh")
    s.add_argument("instance")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("--policy", choices=("min-angle", "max-angle", "bisector", "random"))
    s.add_argument("--branch", type=_branch, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--audit", action="store_true", help="check every partition step")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", help="check a solution against its instance")
    s.add_argument("instance")
    s.add_argument("solution")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--tol", type=float, default=DEFAULT_TOL, help="tolerance relative to diameter")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen", help="generate an instance")
    s.add_argument("--shape", default="random", choices=("random", "convex", "star") + gen.CORPUS)
    s.add_argument("--folds", type=int, default=2)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--vertices", type=int, default=None, help="base polygon size")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default="-")
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("render", help="write SVG or OBJ")
    s.add_argument("solution")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--format", choices=("svg", "obj"))
    s.add_argument("--style", choices=("parity", "plain"), default="parity")
    s.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "folds", 0) < 0:
        sys.stderr.write("--folds must be non-negative\n")
        return EXIT_USAGE
    if not (0.0 < getattr(args, "eps", 1e-9) <= 1e-3):
        sys.stderr.write("--eps must lie in (0, 1e-3]\n")
        return EXIT_USAGE
    if getattr(args, "d", 2) < 2:
        sys.stderr.write("--d must be at least 2\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except InstanceFormatError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
