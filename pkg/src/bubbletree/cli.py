"""Command line front end: config ingestion, orchestration, report emission.

Subcommands
    extract   run the full extraction driver; writes tree.json,
              theta_profile.csv, markings.csv
    neck      cylinder diagnostics only; writes neck.json, theta_profile.csv
    curve     stability / node-regularity queries on a dual-graph file
    selftest  desk-scale oracle battery (closed-form values)

Exit codes: 0 success, 2 configuration/validation error, 3 algorithmic
invariant violation.  Identical configs produce byte-identical reports:
keys are sorted, floats use shortest round-trip repr, and every report
embeds the hash of the validated config.

Config grammar (YAML, unknown keys rejected at every level):

    family:                      # required for extract/neck
      kind: bubble1              # bubble1|bubble2|plumbing|plumbing_bubble|torus_linear
      schedule: [316.0, 3162.0, 10000.0]
      # optional per-kind knobs: chart_radius, delta, separation, slopes,
      # rel_tol, max_panels, n_t, n_theta
    ladder:                      # optional
      delta0: 1.0
      eps_bar: 0.2
      depth: 6
    thresholds:                  # optional smallness constants, recorded
      eps0: 0.5                  # in every report
      eps0_prime: 0.5
      eps0_second: 0.5
    tolerances:                  # optional
      center_tol: 1.0e-5
      decrement_tol: null        # null -> eps_bar/20
      alpha_tol: 1.0e-3
      marking_radius: null       # null -> delta0/2
    neck:                        # optional; enables the zero-neck test
      deltas: [0.1, 0.05, 0.02, 0.01, 0.005, 0.002]
      eps: 0.01
    curve:                       # required for the curve subcommand
      graph: graph.txt           # path relative to the config file
      edge: 0                    # optional node index to classify
    out: runs/bubble1            # default out directory
    seed: null                   # must stay null: the pipeline is
                                 # deterministic and samples nothing
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import yaml

from .curve import curve_from_text, curve_to_text, is_regular_node, is_stable
from .driver import BubbleTree, ExtractionConfig, extract_bubble_tree
from .errors import BubbleTreeError, ConfigError, FamilyError
from .families import FamilySpec, make_family
from .neck import diagnostics, profile_to_csv, zero_neck_test

_SCHEMA = 1

_LADDER_KEYS = {"delta0": 1.0, "eps_bar": 0.2, "depth": 6}
_THRESHOLD_KEYS = {"eps0": 0.5, "eps0_prime": 0.5, "eps0_second": 0.5}
_TOLERANCE_KEYS = {
    "center_tol": 1e-5,
    "decrement_tol": None,
    "alpha_tol": 1e-3,
    "marking_radius": None,
}
_NECK_KEYS = {"deltas": (), "eps": 0.01}
_CURVE_KEYS = {"graph": None, "edge": None}


def _section(raw: dict, name: str, defaults: dict) -> dict:
    got = raw.get(name, {})
    if got is None:
        got = {}
    if not isinstance(got, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    unknown = set(got) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    out = dict(defaults)
    out.update(got)
    return out


class RunConfig:
    """Validated run configuration; construction rejects anything malformed."""

    def __init__(self, raw: dict, base_dir: Path):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        known_top = {"family", "ladder", "thresholds", "tolerances", "neck", "curve", "out", "seed"}
        unknown = set(raw) - known_top
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

        self.family_raw = raw.get("family")
        self.family_spec: FamilySpec | None = None
        if self.family_raw is not None:
            try:
                self.family_spec = FamilySpec.from_dict(self.family_raw)
            except (FamilyError, TypeError, ValueError) as exc:
                raise ConfigError(f"family section invalid: {exc}") from exc

        self.ladder = _section(raw, "ladder", _LADDER_KEYS)
        if not (self.ladder["delta0"] > 0 and self.ladder["eps_bar"] > 0):
            raise ConfigError("ladder delta0 and eps_bar must be positive")
        if int(self.ladder["depth"]) != self.ladder["depth"] or self.ladder["depth"] < 2:
            raise ConfigError("ladder depth must be an integer >= 2")
        self.ladder["depth"] = int(self.ladder["depth"])

        self.thresholds = _section(raw, "thresholds", _THRESHOLD_KEYS)
        for k, v in self.thresholds.items():
            if not (isinstance(v, (int, float)) and 0 < v <= 1):
                raise ConfigError(f"threshold {k} must lie in (0, 1], got {v!r}")

        self.tolerances = _section(raw, "tolerances", _TOLERANCE_KEYS)
        for k in ("center_tol", "alpha_tol"):
            v = self.tolerances[k]
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k} must be positive, got {v!r}")
        for k in ("decrement_tol", "marking_radius"):
            v = self.tolerances[k]
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance {k} must be positive or null, got {v!r}")

        self.neck = _section(raw, "neck", _NECK_KEYS)
        deltas = self.neck["deltas"]
        if deltas is None:
            deltas = ()
        try:
            deltas = tuple(float(d) for d in deltas)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"neck deltas must be numbers: {exc}") from exc
        if any(d <= 0 for d in deltas):
            raise ConfigError("neck deltas must be positive")
        self.neck["deltas"] = deltas
        if not (isinstance(self.neck["eps"], (int, float)) and self.neck["eps"] > 0):
            raise ConfigError("neck eps must be positive")

        self.curve = _section(raw, "curve", _CURVE_KEYS)
        if self.curve["edge"] is not None and (
            not isinstance(self.curve["edge"], int) or isinstance(self.curve["edge"], bool)
        ):
            raise ConfigError("curve edge must be an integer node index")
        self.graph_path: Path | None = None
        if self.curve["graph"] is not None:
            self.graph_path = (base_dir / str(self.curve["graph"])).resolve()

        self.out = raw.get("out")
        if self.out is not None and not isinstance(self.out, str):
            raise ConfigError("out must be a path string")

        self.seed = raw.get("seed")
        if self.seed is not None:
            raise ConfigError(
                "seed must be null: every stage of the pipeline is deterministic "
                "and no stochastic sampling exists to seed"
            )

    def canonical(self) -> dict:
        # computation-determining inputs only: where the artifacts land must
        # not change their bytes, so `out` stays outside the hash
        return {
            "family": self.family_raw,
            "ladder": self.ladder,
            "thresholds": self.thresholds,
            "tolerances": self.tolerances,
            "neck": {"deltas": list(self.neck["deltas"]), "eps": self.neck["eps"]},
            "curve": {"graph": self.curve["graph"], "edge": self.curve["edge"]},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def extraction_config(self) -> ExtractionConfig:
        return ExtractionConfig(
            eps_bar=float(self.ladder["eps_bar"]),
            delta0=float(self.ladder["delta0"]),
            depth=self.ladder["depth"],
            decrement_tol=self.tolerances["decrement_tol"],
            marking_radius=self.tolerances["marking_radius"],
            center_tol=float(self.tolerances["center_tol"]),
            alpha_tol=float(self.tolerances["alpha_tol"]),
            neck_deltas=self.neck["deltas"],
            neck_eps=float(self.neck["eps"]),
        )


def load_config(path: Path, tol_overrides: list[str]) -> RunConfig:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse as YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    if tol_overrides:
        tols = dict(raw.get("tolerances") or {})
        for item in tol_overrides:
            if "=" not in item:
                raise ConfigError(f"--tol expects name=value, got {item!r}")
            name, _, val = item.partition("=")
            name = name.strip()
            if name not in _TOLERANCE_KEYS:
                raise ConfigError(f"unknown tolerance {name!r}")
            try:
                tols[name] = float(val)
            except ValueError as exc:
                raise ConfigError(f"tolerance {name} needs a number, got {val!r}") from exc
        raw = dict(raw)
        raw["tolerances"] = tols
    return RunConfig(raw, path.parent)


# ---------------------------------------------------------------------------
# deterministic serialization


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            raise ConfigError(f"non-finite value {x} cannot be serialized")
        return x
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def _dump_json(obj: dict, path: Path) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, ensure_ascii=False, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def _zero_neck_dict(report) -> dict | None:
    if report is None:
        return None
    return {
        "passed": report.passed,
        "chosen_delta": report.chosen_delta,
        "late_count": report.late_count,
        "rows": [
            {
                "delta": r.delta,
                "max_energy": r.max_energy,
                "max_diameter": r.max_diameter,
                "predicted_energy": r.predicted_energy,
                "passed": r.passed,
                "predicted_pass": r.predicted_pass,
            }
            for r in report.rows
        ],
    }


def _tree_dict(tree: BubbleTree, cfg: RunConfig) -> dict:
    return {
        "schema": _SCHEMA,
        "config_hash": cfg.config_hash(),
        "family": cfg.family_raw,
        "tolerances": {
            "eps_bar": tree.eps_bar,
            "step_tol": tree.step_tol,
            **{k: cfg.tolerances[k] for k in sorted(_TOLERANCE_KEYS)},
            **{k: cfg.thresholds[k] for k in sorted(_THRESHOLD_KEYS)},
        },
        "limit_energy": tree.limit_energy,
        "re_trace": list(tree.re_trace),
        "components": [
            {
                "vertex": c.vertex,
                "kind": c.kind,
                "energy": c.energy,
                "attachment": c.attachment,
                "site_kind": c.site_kind,
                "marks": list(c.marks),
            }
            for c in tree.components
        ],
        "necks": [
            {
                "kind": n.kind,
                "edges": list(n.edges),
                "site": n.site,
                "annulus_excess": n.annulus_excess,
                "thinness_ratios": list(n.thinness_ratios),
                "alpha": n.alpha,
                "zero_neck": _zero_neck_dict(n.zero_neck),
                "note": n.note,
                "members": list(n.members),
            }
            for n in tree.necks
        ],
        "identity": {
            "residual": tree.identity_residual,
            "note": tree.identity_note,
            "connected": tree.connected,
        },
        "singular": [
            {"location": s.location, "mass": s.mass, "reason": s.reason}
            for s in tree.singular
        ],
        "curve": {
            "genus": list(tree.curve.genus),
            "edges": [list(e) for e in tree.curve.edges],
            "legs": [list(l) for l in tree.curve.legs],
            "text": curve_to_text(tree.curve),
        },
        "notes": list(tree.notes),
    }


def _markings_csv(tree: BubbleTree) -> str:
    cols = "site_re,site_im,kind,member,level,case,q_re,q_im,r_re,r_im,t,neck_ratio"
    lines = [cols]
    for n in tree.necks:
        for member, mk in zip(n.members, n.markings):
            site = n.site if n.site is not None else 0j
            q = ("", "") if mk.q is None else (repr(mk.q.real), repr(mk.q.imag))
            ratio = "" if mk.neck_ratio is None else repr(mk.neck_ratio)
            lines.append(
                ",".join(
                    [
                        repr(site.real),
                        repr(site.imag),
                        n.kind,
                        str(member),
                        str(mk.level),
                        str(mk.case),
                        q[0],
                        q[1],
                        repr(mk.r.real),
                        repr(mk.r.imag),
                        repr(mk.t),
                        ratio,
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def _theta_profile_csv(family) -> str:
    last = family.members[-1]
    if last.field is None:
        return "t,theta,alpha_slice\n"
    return profile_to_csv(diagnostics(last.field))


# ---------------------------------------------------------------------------
# subcommands


def _out_dir(cfg: RunConfig, args, default_stem: str) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.out:
        return Path(cfg.out)
    return Path("runs") / default_stem


def _cmd_extract(cfg: RunConfig, args, stem: str) -> int:
    if cfg.family_spec is None:
        raise ConfigError("extract needs a family section")
    family = make_family(cfg.family_spec)
    tree = extract_bubble_tree(family, cfg.extraction_config())
    out = _out_dir(cfg, args, stem)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(_tree_dict(tree, cfg), out / "tree.json")
    (out / "markings.csv").write_text(_markings_csv(tree), encoding="utf-8")
    (out / "theta_profile.csv").write_text(_theta_profile_csv(family), encoding="utf-8")
    res = tree.identity_residual
    print(
        f"extract: {len(tree.components) - 1} bubble(s), "
        f"identity residual {res:.3e}, wrote {out / 'tree.json'}"
    )
    return 0


def _cmd_neck(cfg: RunConfig, args, stem: str) -> int:
    if cfg.family_spec is None:
        raise ConfigError("neck needs a family section")
    family = make_family(cfg.family_spec)
    if any(m.field is None for m in family.members):
        raise ConfigError(
            f"family kind {family.kind!r} carries no cylinder fields; "
            "neck diagnostics need a plumbing or torus family"
        )
    rows = []
    for m in family.members:
        d = diagnostics(m.field)
        rows.append(
            {
                "label": m.label,
                "parameter": m.parameter,
                "half_length": d.half_length,
                "energy": d.energy,
                "alpha": d.alpha,
                "alpha_deviation": d.alpha_deviation,
                "theta_integral": d.theta_integral,
                "avg_length": d.avg_length,
                "diameter": d.diameter,
                "pohozaev_residual": d.pohozaev_residual,
            }
        )
    zn = None
    if cfg.neck["deltas"]:
        fields = [m.field for m in family.members]
        zn = zero_neck_test(fields, float(cfg.neck["eps"]), list(cfg.neck["deltas"]))
    report = {
        "schema": _SCHEMA,
        "config_hash": cfg.config_hash(),
        "family": cfg.family_raw,
        "tolerances": {
            **{k: cfg.tolerances[k] for k in sorted(_TOLERANCE_KEYS)},
            **{k: cfg.thresholds[k] for k in sorted(_THRESHOLD_KEYS)},
            "neck_eps": cfg.neck["eps"],
        },
        "members": rows,
        "zero_neck": _zero_neck_dict(zn),
    }
    out = _out_dir(cfg, args, stem)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(report, out / "neck.json")
    (out / "theta_profile.csv").write_text(_theta_profile_csv(family), encoding="utf-8")
    verdict = "n/a" if zn is None else ("PASS" if zn.passed else "FAIL")
    print(f"neck: {len(rows)} member(s), zero-neck {verdict}, wrote {out / 'neck.json'}")
    return 0


def _cmd_curve(cfg: RunConfig, args, stem: str) -> int:
    if cfg.graph_path is None:
        raise ConfigError("curve needs curve.graph pointing at a dual-graph file")
    try:
        text = cfg.graph_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read graph {cfg.graph_path}: {exc}") from exc
    c = curve_from_text(text)
    stab = is_stable(c)
    lines = [
        f"vertices: {c.n_vertices}",
        f"arithmetic genus: {c.arithmetic_genus}",
        f"stable: {'true' if stab.stable else 'false'}",
    ]
    answer: dict = {
        "schema": _SCHEMA,
        "config_hash": cfg.config_hash(),
        "graph": curve_to_text(c),
        "vertices": c.n_vertices,
        "arithmetic_genus": c.arithmetic_genus,
        "stable": stab.stable,
        "edges": [list(e) for e in c.edges],
    }
    if cfg.curve["edge"] is not None:
        v = is_regular_node(c, cfg.curve["edge"])
        if v.witness:
            marks = ",".join(str(x) for x in v.witness)
            word = "mark" if len(v.witness) == 1 else "marks"
            lines.append(
                f"edge {cfg.curve['edge']}: regular: true, witness: forget {word} {marks}"
            )
        else:
            lines.append(f"edge {cfg.curve['edge']}: regular: false ({v.status})")
        answer["query"] = {
            "edge": cfg.curve["edge"],
            "status": v.status,
            "witness": list(v.witness) if v.witness else None,
        }
    out = _out_dir(cfg, args, stem)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(answer, out / "curve.json")
    print("\n".join(lines))
    return 0


def _selftest_checks():
    from .families import RationalMap
    from .neck import FlatTorusTarget, PolarAnnulusField, SphereTarget, pohozaev_residual
    from .renorm import solve_neck_scale_from_cdf
    import numpy as np

    from .families import energy_quadrature

    def check_degree_energy():
        worst = 0.0
        for d in (1, 2, 3):
            num = tuple([1.0] + [0.0] * d)
            e = energy_quadrature(RationalMap(num, (1.0,)))
            worst = max(worst, abs(e - 4.0 * math.pi * d) / (4.0 * math.pi * d))
        return worst <= 1e-6, f"max relative error {worst:.3e} (bound 1e-06)"

    def check_pohozaev():
        target = SphereTarget()
        n = 256
        radii = np.geomspace(0.5, 2.0, n)
        phis = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        worst = 0.0
        for d in (1, 2, 3):
            z = radii[:, None] * np.exp(1j * phis[None, :])
            w = z**d
            dw = d * z ** (d - 1)
            fr = target.push(w, dw * np.exp(1j * np.angle(z)))
            fphi = target.push(w, dw * 1j * z)
            f = PolarAnnulusField(radii=radii, f_r=fr, f_phi=fphi)
            worst = max(worst, pohozaev_residual(f))
        return worst <= 1e-8, f"max residual {worst:.3e} (bound 1e-08)"

    def check_neck_scale():
        res = solve_neck_scale_from_cdf(
            lambda s: max(0.0, 1.0 - s * s), total=1.0, eps_bar=0.25
        )
        oracle = 2.0 * math.sqrt(3.0) - 3.0
        err = abs(res.t - oracle)
        return err <= 1e-9, f"|t - (2 sqrt 3 - 3)| = {err:.3e} (bound 1e-09)"

    def check_torus_alpha():
        spec = FamilySpec(
            kind="torus_linear", schedule=(1e-4,), delta=0.5, slopes=(2.0, 1.0)
        )
        fam = make_family(spec)
        d = diagnostics(fam.members[-1].field)
        oracle = math.pi * (2.0**2 - 1.0**2)
        err = abs(d.alpha - oracle)
        return err <= 1e-8, f"|alpha - 3 pi| = {err:.3e} (bound 1e-08)"

    def check_regular_node():
        from .curve import MarkedNodalCurve

        c = MarkedNodalCurve((0, 0), ((0, 1),), ((0, 1), (0, 2), (1, 3), (1, 4)))
        v = is_regular_node(c, 0)
        ok = v.status == "regular" and v.witness == (4,)
        return ok, f"status {v.status}, witness {v.witness} (expect regular via mark 4)"

    return [
        ("degree-energy quadrature", check_degree_energy),
        ("pohozaev residual", check_pohozaev),
        ("neck-scale uniform disk", check_neck_scale),
        ("torus alpha closed form", check_torus_alpha),
        ("two-component node regularity", check_regular_node),
    ]


def _cmd_selftest() -> int:
    failures = 0
    for name, fn in _selftest_checks():
        try:
            ok, detail = fn()
        except BubbleTreeError as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"selftest: {failures} check(s) failed")
        return 3
    print("selftest: all checks passed")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bubbletree",
        description="Bubble-tree extraction laboratory for degenerating families",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (
        ("extract", True),
        ("neck", True),
        ("curve", True),
        ("selftest", False),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="YAML run config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument(
            "--tol",
            action="append",
            default=[],
            metavar="NAME=VALUE",
            help="override a tolerance (repeatable)",
        )
    args = parser.parse_args(argv)

    if args.command == "selftest":
        if args.config or args.tol or args.out:
            print("selftest takes no config or overrides", file=sys.stderr)
            return 2
        return _cmd_selftest()

    try:
        path = Path(args.config)
        cfg = load_config(path, args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    stem = path.stem
    try:
        if args.command == "extract":
            return _cmd_extract(cfg, args, stem)
        if args.command == "neck":
            return _cmd_neck(cfg, args, stem)
        return _cmd_curve(cfg, args, stem)
    except ConfigError as exc:
        print(f"config error ({args.command}): {exc}", file=sys.stderr)
        return 2
    except BubbleTreeError as exc:
        print(f"invariant violation ({args.command}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
