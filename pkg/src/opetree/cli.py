"""Command-line front end.

Subcommands: ``tree`` (parse/compose/permute/double), ``coords``,
``expand``, ``braid`` (perm/mirror/cable/generator), ``verify``
(bulk-consistency / boundary-consistency / bootstrap / skew / regions).

Exit codes: 0 on success/pass, 1 on a failed verification, 2 on invalid
input.  JSON output is canonical: sorted keys, floats at 17 significant
digits, so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import random
import re
import sys
from fractions import Fraction

from opetree import braids, coords, latticecft, series, trees


class CliError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Canonical JSON: sorted keys, floats at 17 significant digits


def dumps_canonical(obj) -> str:
    parts = []
    _write_canonical(obj, parts)
    return "".join(parts)


def _write_canonical(obj, parts):
    if isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(str(k) for k in obj)):
            if i:
                parts.append(", ")
            parts.append(json.dumps(key))
            parts.append(": ")
            value = obj[key] if key in obj else _lookup(obj, key)
            _write_canonical(value, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(", ")
            _write_canonical(v, parts)
        parts.append("]")
    elif isinstance(obj, bool) or obj is None:
        parts.append(json.dumps(obj))
    elif isinstance(obj, float):
        parts.append(f"{obj:.17g}")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, Fraction):
        parts.append(json.dumps(str(obj)))
    elif isinstance(obj, complex):
        parts.append(f"[{obj.real:.17g}, {obj.imag:.17g}]")
    else:
        parts.append(json.dumps(str(obj)))


def _lookup(obj, key):
    for k, v in obj.items():
        if str(k) == key:
            return v
    raise KeyError(key)


def _emit(args, obj, text: str | None = None):
    if args.format == "text" and text is not None:
        payload = text
    else:
        payload = dumps_canonical(obj)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)


# ---------------------------------------------------------------------------
# Power-product mini-grammar: "(z2-z1)^-1 * z3^2"

_DIFF_RE = re.compile(r"^\(\s*z(\d+)\s*-\s*z(\d+)\s*\)(?:\^(-?\d+(?:/\d+)?))?$")
_POW_RE = re.compile(r"^z(\d+)(?:\^(\d+))?$")


def parse_power_product(text: str) -> series.PowerProduct:
    diffs, powers = [], []
    for raw in text.split("*"):
        factor = raw.strip()
        if not factor:
            raise CliError("empty factor in power product")
        m = _DIFF_RE.match(factor)
        if m:
            i, j, exp = int(m.group(1)), int(m.group(2)), m.group(3)
            diffs.append(((i, j), Fraction(exp) if exp else Fraction(1)))
            continue
        m = _POW_RE.match(factor)
        if m:
            powers.append((int(m.group(1)), int(m.group(2) or 1)))
            continue
        raise CliError(f"cannot parse factor {factor!r}")
    return series.PowerProduct(diffs=tuple(diffs), powers=tuple(powers))


# ---------------------------------------------------------------------------
# Model configuration

DEFAULT_CONFIG = {
    "R_squared": "2",
    "reflection": "+1",
    "charges": [[1, 0], [0, 1]],
    "truncation": 30,
    "tolerance": 1e-6,
    "seed": 1,
}


def load_config(args) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if args.config:
        with open(args.config) as fh:
            cfg.update(json.load(fh))
    if getattr(args, "order", None) is not None:
        cfg["truncation"] = args.order
    if getattr(args, "tol", None) is not None:
        cfg["tolerance"] = args.tol
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def model_from_config(cfg):
    model = latticecft.NarainModel(Fraction(cfg["R_squared"]))
    rho = {"+1": 1, "-1": -1, 1: 1, -1: -1}.get(cfg["reflection"])
    if rho is None:
        raise CliError(f"bad reflection {cfg['reflection']!r}")
    return model, rho


# ---------------------------------------------------------------------------
# Subcommands


def cmd_tree(args) -> int:
    if args.action == "parse":
        t = trees.parse_tree(args.expr[0])
        _emit(args, {"tree": trees.format_tree(t)}, trees.format_tree(t))
        return 0
    if args.action == "compose":
        if len(args.expr) != 3:
            raise CliError("compose needs TREE SLOT TREE")
        a = trees.parse_tree(args.expr[0])
        p = int(args.expr[1])
        b = trees.parse_tree(args.expr[2])
        if trees.is_colored(a) or trees.is_colored(b):
            out = trees.compose_colored(a, p, b)
        else:
            out = trees.compose(a, p, b)
        _emit(args, {"tree": trees.format_tree(out)}, trees.format_tree(out))
        return 0
    if args.action == "permute":
        if len(args.expr) != 2:
            raise CliError("permute needs TREE PERM (comma separated images)")
        a = trees.parse_tree(args.expr[0])
        perm = [int(x) for x in args.expr[1].split(",")]
        out = trees.permute(a, perm)
        _emit(args, {"tree": trees.format_tree(out)}, trees.format_tree(out))
        return 0
    if args.action == "double":
        e = trees.parse_tree(args.expr[0])
        out = trees.doubling(e)
        _emit(args, {"tree": trees.format_tree(out)}, trees.format_tree(out))
        return 0
    raise CliError(f"unknown tree action {args.action!r}")


def cmd_coords(args) -> int:
    a = trees.parse_tree(args.tree)
    cs = coords.a_coordinates(a)
    desc = cs.describe()
    obj = {"tree": trees.format_tree(a), "coordinates": desc}
    if args.at:
        point = [complex(w) for w in json.loads(args.at)]
        cv = coords.psi(cs, point)
        obj["values"] = {
            "zA": cv.z,
            "xA": cv.x,
            **{f"ze{k}": z for k, z in enumerate(cv.zeta)},
        }
    text = "\n".join(f"{k} = {v}" for k, v in desc.items())
    _emit(args, obj, text)
    return 0


def cmd_expand(args) -> int:
    a = trees.parse_tree(args.tree)
    f = parse_power_product(args.function)
    ex = series.expand(a, f, args.order if args.order is not None else 8)
    obj = {
        "tree": trees.format_tree(a),
        "function": args.function,
        "order": ex.series.order,
        "negative_sign_pairs": [list(p) for p in ex.negative_pairs],
        "terms": series.series_to_obj(ex.series),
    }
    text = "\n".join(
        f"{t['exponents']}  logs={t['logs']}  {t['re']:+.6g}{t['im']:+.6g}i"
        for t in obj["terms"]
    )
    _emit(args, obj, text)
    return 0


def cmd_braid(args) -> int:
    if args.action == "perm":
        w = braids.parse_braid_word(args.expr[0], strands=args.strands)
        _emit(args, {"permutation": list(braids.braid_permutation(w))})
        return 0
    if args.action == "mirror":
        w = braids.parse_braid_word(args.expr[0], strands=args.strands)
        out = braids.mirror(w)
        _emit(args, {"word": braids.format_braid_word(out), "strands": out.strands})
        return 0
    if args.action == "cable":
        if len(args.expr) != 3:
            raise CliError("cable needs WORD SLOT WORD ('-' for the empty word)")
        g = braids.parse_braid_word(
            "" if args.expr[0] == "-" else args.expr[0], strands=args.strands
        )
        p = int(args.expr[1])
        h_text = args.expr[2]
        if h_text == "0":
            h = braids.BraidWord(0, ())
        else:
            h = braids.parse_braid_word("" if h_text == "-" else h_text)
        out = braids.cable_compose(g, p, h)
        _emit(
            args,
            {
                "word": braids.format_braid_word(out),
                "strands": out.strands,
                "permutation": list(braids.braid_permutation(out)),
            },
        )
        return 0
    if args.action == "generator":
        g = braids.papb_generator(args.expr[0])
        _emit(
            args,
            {
                "source": trees.format_tree(g.source),
                "target": trees.format_tree(g.target),
                "word": braids.format_braid_word(g.word),
                "strands": g.word.strands,
                "coloring": [list(map(str, tag)) for tag in g.source_frame],
            },
        )
        return 0
    raise CliError(f"unknown braid action {args.action!r}")


def _verify_bootstrap(cfg):
    model, rho = model_from_config(cfg)
    box = int(cfg.get("box", 5))
    bd = latticecft.build_boundary(model, rho)
    return [latticecft.bootstrap_check(model, bd, box)]


def _verify_boundary(cfg):
    model, rho = model_from_config(cfg)
    bd = latticecft.build_boundary(model, rho)
    charges = [tuple(c) for c in cfg["charges"]]
    alpha = charges[0]
    beta = charges[1] if len(charges) > 1 else (0, 1)
    seed = int(cfg["seed"])
    order = int(cfg["truncation"])
    tol = float(cfg["tolerance"])
    pts = int(cfg.get("points", 10))
    rep1 = latticecft.expansion_consistency_check(
        model,
        [trees.parse_tree("t(c1)o2"), trees.parse_tree("o2t(c1)")],
        [alpha],
        order,
        tol,
        pts,
        seed,
        bd=bd,
        bdry_charges=[bd.t_coeff(beta)],
    )
    rep2 = latticecft.expansion_consistency_check(
        model,
        [trees.parse_tree("(t(c1))(t(c2))"), trees.parse_tree("t(c1c2)")],
        [alpha, beta],
        order,
        tol,
        pts,
        seed + 1,
        bd=bd,
    )
    return [rep1, rep2]


def _verify_bulk(cfg):
    model, _ = model_from_config(cfg)
    charges = [tuple(c) for c in cfg["charges"]]
    while len(charges) < 4:
        charges.append((0, 0))
    charges = charges[:4]
    tree_list = [
        trees.parse_tree("1(2(34))"),
        trees.parse_tree("(12)(34)"),
        trees.parse_tree("((12)3)4"),
    ]
    rep = latticecft.expansion_consistency_check(
        model,
        tree_list,
        charges,
        int(cfg["truncation"]),
        float(cfg["tolerance"]),
        int(cfg.get("points", 6)),
        int(cfg["seed"]),
    )
    rep2 = latticecft.single_valuedness_check(
        model, charges, n_samples=4, seed=int(cfg["seed"]) + 1
    )
    return [rep, rep2]


def _verify_skew(cfg):
    model, _ = model_from_config(cfg)
    rng = random.Random(int(cfg["seed"]))
    pairs = [
        ((rng.randint(-2, 2), rng.randint(-2, 2)), (rng.randint(-2, 2), rng.randint(-2, 2)))
        for _ in range(int(cfg.get("pairs", 10)))
    ]
    return [latticecft.skew_symmetry_check(model, pairs, n_samples=10, seed=int(cfg["seed"]) + 1)]


def _verify_regions(cfg):
    import time

    t0 = time.perf_counter()
    rng = random.Random(int(cfg["seed"]))
    comb = trees.parse_tree("1(2(3(45)))")
    cs = coords.a_coordinates(comb)
    mismatches = 0
    n = int(cfg.get("points", 1000))
    for _ in range(n):
        pt = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(5)]
        chain = all(
            abs(pt[i] - pt[4]) > abs(pt[i + 1] - pt[4]) for i in range(3)
        ) and abs(pt[3] - pt[4]) > 0
        member = coords.region_membership(cs, pt).in_ubar
        if member != chain:
            mismatches += 1
    # two-comb: the certificate reduces to the chain plus the condition
    # that the two root-edge radii sum below one
    two = trees.parse_tree("(1(23))(4(56))")
    cs2 = coords.a_coordinates(two)
    desc = cs2.describe()
    root = [
        int(k[2:])
        for k, v in desc.items()
        if k.startswith("ze") and v.endswith("/ (z3 - z6)")
    ]
    two_comb_ok = len(root) == 2
    for pl, pr, rest, want in ((0.49, 0.49, 0.9, True), (0.51, 0.51, 0.2, False)):
        radii = [rest] * cs2.n_edges
        radii[root[0]], radii[root[1]] = pl, pr
        got = coords.admissibility_certificate(cs2, radii).admissible
        two_comb_ok = two_comb_ok and got is want
    rep = latticecft.VerifyReport(
        name="regions",
        params={"tree": "1(2(3(45)))", "points": n, "seed": cfg["seed"]},
        samples=[{"mismatches": mismatches, "two_comb_reduction": two_comb_ok}],
        max_rel_err=float(mismatches),
        tolerance=0.0,
        passed=mismatches == 0 and two_comb_ok,
        runtime=time.perf_counter() - t0,
    )
    return [rep]


def cmd_verify(args) -> int:
    cfg = load_config(args)
    runner = {
        "bootstrap": _verify_bootstrap,
        "boundary-consistency": _verify_boundary,
        "bulk-consistency": _verify_bulk,
        "skew": _verify_skew,
        "regions": _verify_regions,
    }.get(args.suite)
    if runner is None:
        raise CliError(f"unknown verify suite {args.suite!r}")
    reports = runner(cfg)
    passed = all(r.passed for r in reports)
    obj = {
        "suite": args.suite,
        "passed": passed,
        "checks": [r.to_obj() for r in reports],
    }
    text = "\n".join(r.text() for r in reports)
    _emit(args, obj, text)
    return 0 if passed else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="opetree",
        description="Tree-operad OPE calculus: trees, coordinates, series, braids, lattice model verification",
    )
    ap.add_argument("--format", choices=("json", "text"), default="json")
    ap.add_argument("--out", help="write output to a file instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p_tree = sub.add_parser("tree", help="parse/compose/permute/double trees")
    p_tree.add_argument("action", choices=("parse", "compose", "permute", "double"))
    p_tree.add_argument("expr", nargs="+")
    p_tree.set_defaults(func=cmd_tree)

    p_coords = sub.add_parser("coords", help="tree coordinate system")
    p_coords.add_argument("tree")
    p_coords.add_argument("--at", help="JSON list of complex coordinates to evaluate at")
    p_coords.set_defaults(func=cmd_coords)

    p_expand = sub.add_parser("expand", help="expand a power product in tree coordinates")
    p_expand.add_argument("tree")
    p_expand.add_argument("function", help='e.g. "(z2-z1)^-1 * z3^2"')
    p_expand.add_argument("--N", dest="order", type=int)
    p_expand.set_defaults(func=cmd_expand)

    p_braid = sub.add_parser("braid", help="braid word operations")
    p_braid.add_argument("action", choices=("perm", "mirror", "cable", "generator"))
    p_braid.add_argument("expr", nargs="+")
    p_braid.add_argument("--strands", type=int)
    p_braid.set_defaults(func=cmd_braid)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument(
        "suite",
        choices=("bulk-consistency", "boundary-consistency", "bootstrap", "skew", "regions"),
    )
    p_verify.add_argument("--config", help="model config JSON path")
    p_verify.add_argument("--N", dest="order", type=int)
    p_verify.add_argument("--tol", type=float)
    p_verify.add_argument("--seed", type=int)
    p_verify.set_defaults(func=cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (
        CliError,
        trees.TreeError,
        coords.CoordError,
        coords.CertificateError,
        series.SeriesError,
        braids.BraidError,
        latticecft.LatticeError,
        FileNotFoundError,
        json.JSONDecodeError,
        ValueError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
