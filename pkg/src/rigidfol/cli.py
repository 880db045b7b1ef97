"""Command-line entry point: ``rigidfol <subcommand> ...``.

Configuration is layered: built-in defaults, then a JSON file given by
``--config``, then ``FOLIATION_<FIELD>`` environment variables (for example
``FOLIATION_SEED=7`` or ``FOLIATION_DEDUP_TOL=1e-10``), then explicit flags.

Exit codes: 0 success, 2 validation failure, 3 budget exceeded,
4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, dynamics, groupcoh, liealg, qform, suspension

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_NONCONVERGENCE = 0, 2, 3, 4
ENV_PREFIX = "FOLIATION_"


class EmptyGeneratorSet(UserWarning):
    """Generator search produced only finite-order elements."""


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    dedup_tol: float = dynamics.DEDUP_TOL
    residual_tol: float = qform.EMBED_RESIDUAL_TOL
    svd_threshold: float = dynamics.SVD_THRESHOLD
    power_tol: float = dynamics.POWER_TOL
    power_max_iters: int = dynamics.POWER_MAX_ITERS
    ball_cap: int = dynamics.BALL_CAP
    ce_budget: int = liealg.CE_BUDGET
    harmonic_cap: int = dynamics.HARMONIC_CAP
    seed: int = 0
    workers: int = 1
    height: int = 10
    radius: int = 6
    degrees: list = field(default_factory=lambda: [1, 2, 3, 4])
    probes: int = 500
    generator_count: int = 4
    per_plane: int = 8

    TOLERANCES = ("dedup_tol", "residual_tol", "svd_threshold", "power_tol")
    CAPS = ("power_max_iters", "ball_cap", "ce_budget", "harmonic_cap", "workers", "height", "probes",
            "generator_count", "per_plane")

    def validate(self) -> Config:
        for name in self.TOLERANCES:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in self.CAPS:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.radius < 0:
            raise ConfigError("radius must be >= 0")
        if any(d < 0 for d in self.degrees):
            raise ConfigError("degrees must be >= 0")
        return self

    def update(self, values: dict, source: str) -> None:
        names = {f.name: f for f in dataclasses.fields(self)}
        for key, raw in values.items():
            if key not in names:
                raise ConfigError(f"{source}: unknown setting {key!r}")
            setattr(self, key, _coerce(key, raw, getattr(self, key), source))

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(key: str, raw, current, source: str):
    try:
        if isinstance(current, list):
            if isinstance(raw, str):
                return [int(x) for x in raw.split(",") if x.strip()]
            return [int(x) for x in raw]
        if isinstance(current, bool):
            return raw if isinstance(raw, bool) else str(raw).lower() in ("1", "true", "yes")
        if isinstance(current, int):
            return int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{source}: cannot read {key}={raw!r}") from None


def load_config(path: str | None, env: dict | None = None, overrides: dict | None = None) -> Config:
    cfg = Config()
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected an object")
        cfg.update(doc, str(path))
    env = os.environ if env is None else env
    from_env = {}
    for f in dataclasses.fields(cfg):
        key = ENV_PREFIX + f.name.upper()
        if key in env:
            from_env[f.name] = env[key]
    cfg.update(from_env, "environment")
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None}, "command line")
    return cfg.validate()


@dataclass
class RunManifest:
    subcommand: str
    input_hashes: dict
    config: dict
    tool_version: str
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def dump(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def _emit(out: Path | None, name: str, report: dict, csvs: dict | None = None):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{name}.json").write_text(dump(report))
    for suffix, text in (csvs or {}).items():
        (out / f"{name}-{suffix}.csv").write_text(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_algebra(args, cfg: Config) -> dict:
    if args.builtin:
        try:
            g = liealg.rigidity_inputs()[args.builtin] if args.builtin in liealg.rigidity_inputs() \
                else liealg.so(int(args.builtin.removeprefix("so")))
        except (ValueError, KeyError):
            raise liealg.InvalidStructureConstants(f"unknown built-in algebra {args.builtin!r}") from None
    elif args.input:
        g = liealg.LieAlgebra.load(args.input)
    else:
        raise ConfigError("give a structure-constant file or --builtin")
    ideal = None
    if args.ideal:
        idx = [int(x) for x in args.ideal.split(",")]
        if any(not 0 <= i < g.dim for i in idx):
            raise liealg.NotAnIdeal(f"ideal indices {idx} out of range for dimension {g.dim}")
        ideal = g.span([g.basis_vector(i) for i in idx])
    rep = suspension.rigidity_pipeline(g, ideal, budget=cfg.ce_budget)
    print(rep.summary())
    return rep.to_dict()


def _density_and_gaps(images: list, cfg: Config, names=None, cache: Path | None = None) -> dict:
    ball = None
    key = None
    if cache is not None:
        h = hashlib.sha256()
        for g in images:
            h.update(np.ascontiguousarray(g, dtype=np.float64).tobytes())
        h.update(f"{cfg.radius}|{cfg.dedup_tol!r}".encode())
        key = cache / f"ball-{h.hexdigest()[:16]}.json"
        if key.exists():
            ball = dynamics.WordBall.load(key)
    if ball is None:
        ball = dynamics.enumerate_ball(images, cfg.radius, cfg.dedup_tol, cfg.ball_cap, names, cfg.workers)
        if key is not None:
            key.parent.mkdir(parents=True, exist_ok=True)
            ball.save(key)
    density = dynamics.covering_radius(ball, cfg.probes, cfg.seed)
    gaps, weyl = [], []
    for d in cfg.degrees:
        space = dynamics.harmonic_space(ball.n, d, cfg.harmonic_cap)
        gap = dynamics.averaging_operator_norm(images, space, cfg.power_tol, cfg.power_max_iters,
                                               seed=cfg.seed, threshold=cfg.svd_threshold)
        gaps.append(gap)
        if d >= 1:
            weyl.append({"degree": d, "radius": ball.radius, "norm": dynamics.weyl_sums(ball, space)})
    print(f"ball sizes by radius: {density.ball_sizes}" + (" (finite group)" if density.finite else ""))
    print("covering radii: " + ", ".join(f"{c:.4f}" for c in density.covering_radii))
    for g in gaps:
        print(f"degree {g.degree}: averaging norm {g.estimate} ({g.iterations} iterations)")
    gap_csv = "degree,norm_estimate,gap\n" + "".join(f"{g.degree},{g.estimate!r},{g.gap!r}\n" for g in gaps)
    return {
        "ball_input_hash": ball.input_hash(),
        "ball_level_starts": ball.level_starts,
        "density": density.to_dict(),
        "gaps": [g.to_dict() for g in gaps],
        "weyl": weyl,
        "_csv": {"density": density.csv(), "gaps": gap_csv},
    }


def cmd_forge(args, cfg: Config) -> dict:
    phi = qform.QuadraticForm.load(args.form)
    cls = qform.classify_embeddings(phi)
    aniso = qform.anisotropy_by_conjugate_definiteness(phi)
    report: dict = {"form": phi.to_dict(), "embeddings": cls.to_dict(), "anisotropic": aniso, "notes": []}
    print("T = {" + ", ".join(f"sigma{s}" for s in cls.definite_set) + "}")
    for s, sig in cls.signatures.items():
        print(f"signature under sigma{s}: {tuple(sig) if sig else 'complex'}")
    if not cls.lattice_hypothesis:
        note = "compact case: T = R, so the lattice hypothesis 'T != R' fails"
        report["notes"].append(note)
        print(note)
    if not aniso:
        witness = qform.find_isotropic_vector(phi, 1)
        report["isotropic_witness"] = None if witness is None else [phi.field.serialize(x) for x in witness]
        if witness is not None:
            report["anisotropic"] = False
        print(f"anisotropy: false{' (witness found)' if witness is not None else ' (no definite conjugate)'}")
    else:
        print("anisotropy: true")
    gens = qform.search_generators(phi, cfg.height, cfg.workers, cfg.per_plane)
    if not gens.verify():
        raise qform.NotAMember(["recheck"])
    orders = [qform.element_order(e) for e in gens.elements]
    report["generators"] = gens.to_dict()
    report["generator_orders"] = orders
    print(f"generators found: {len(gens.elements)}")
    if all(o is not None for o in orders):
        msg = "only finite-order elements found; the generated group may be finite"
        warnings.warn(msg, EmptyGeneratorSet, stacklevel=2)
        report["notes"].append("EmptyGeneratorSet: " + msg)
    if not cls.definite_set or not gens.elements:
        report["notes"].append("no definite conjugate or no generators: compact diagnostics skipped")
        return report
    chosen = qform.select_dense_generators(gens, cfg.generator_count)
    embedded = [qform.galois_embed_element(e, tol=cfg.residual_tol) for e in chosen.elements]
    sigma = qform._definite_embedding(phi)
    report["compact_embedding"] = f"sigma{sigma}"
    report["selected"] = [e.word[0][0] for e in chosen.elements]
    report["embedding_residuals"] = [x.residual for x in embedded]
    images = [x.orthogonal for x in embedded]
    cache = Path(args.cache) if args.cache else None
    report.update(_density_and_gaps(images, cfg, report["selected"], cache))
    return report


def _matrix_file(path) -> tuple[list, list]:
    doc = json.loads(Path(path).read_text())
    if isinstance(doc, dict) and "elements" in doc and "form" in doc:
        gens = qform.GeneratorSet.from_dict(doc)
        return [e.word[0][0] for e in gens.elements], qform.compact_images(gens)
    if isinstance(doc, dict) and "generators" in doc:
        doc = doc["generators"]
    if isinstance(doc, dict):
        return list(doc), [np.array(m, dtype=float) for m in doc.values()]
    return [f"g{k}" for k in range(len(doc))], [np.array(m, dtype=float) for m in doc]


def cmd_dynamics(args, cfg: Config) -> dict:
    names, images = _matrix_file(args.generators)
    return {"generators": names, **_density_and_gaps(images, cfg, names, Path(args.cache) if args.cache else None)}


def cmd_cohomology(args, cfg: Config) -> dict:
    pres = groupcoh.Presentation.load(args.presentation)
    out: dict = {"presentation": pres.to_dict()}
    if args.rep:
        rep = groupcoh.MatrixRep.load(pres, args.rep)
        r = groupcoh.h1_dimension(pres, rep, cfg.svd_threshold)
        out["reports"] = [r.to_dict()]
        print(f"dim H1 = {r.dim_h1} (Z1 {r.dim_z1}, B1 {r.dim_b1}, {r.path})")
    elif args.embedding:
        doc = json.loads(Path(args.embedding).read_text())
        degrees = cfg.degrees
        reps = groupcoh.truncated_rigidity_check(pres, doc, degrees, cfg.svd_threshold, cfg.workers,
                                                 cfg.harmonic_cap)
        out["reports"] = [r.to_dict() for r in reps]
        for r in reps:
            print(f"degree {r.degree}: dim H1 = {r.dim_h1} (Z1 {r.dim_z1}, B1 {r.dim_b1})")
        vanish = all(r.dim_h1 == 0 for r in reps)
        out["vanishing_up_to_degree"] = max(degrees) if vanish and degrees else None
        if vanish and degrees:
            print(f"H1 vanishes for all tested degrees up to {max(degrees)} (not a full rigidity statement)")
    else:
        rep = groupcoh.MatrixRep.trivial(pres)
        r = groupcoh.h1_dimension(pres, rep)
        out["reports"] = [r.to_dict()]
        print(f"trivial coefficients: dim H1 = {r.dim_h1}")
    return out


def cmd_suspension(args, cfg: Config) -> dict:
    if args.mode == "orbits":
        rep = suspension.orbits(suspension.FiniteAction.load(args.action))
        print(f"orbit sizes: {rep.sizes}")
        return rep.to_dict()
    chart = suspension.MCChart(args.n, base_dim=args.base_dim, seed=cfg.seed)
    mc = suspension.mc_residual(chart)
    translations = dynamics.haar_orthogonal(args.n, args.translations, cfg.seed + 1)
    inv = [suspension.invariance_residual(chart, t) for t in translations]
    print("residuals: " + ", ".join(f"{r:.3e}" for r in mc.residuals) + f"; order {mc.order}")
    print(f"max invariance residual: {max(inv) if inv else 0.0:.3e}")
    return {"mc": mc.to_dict(), "invariance_residuals": inv}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with Config fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="directory for reports and manifest")
    common.add_argument("--cache", help="directory for cached word balls")

    p = argparse.ArgumentParser(prog="rigidfol", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    a = sub.add_parser("algebra", parents=[common], help="obstruction report for a Lie algebra")
    a.add_argument("input", nargs="?")
    a.add_argument("--builtin", help="so3, so4, ..., heisenberg, abelian2, aff1")
    a.add_argument("--ideal", help="comma-separated basis indices spanning an ideal")

    f = sub.add_parser("forge", parents=[common], help="arithmetic group pipeline for a quadratic form")
    f.add_argument("form", nargs="?", help="quadratic-form file (default: the bundled example)")
    f.add_argument("--height", type=int)
    f.add_argument("--radius", type=int)
    f.add_argument("--degrees")

    c = sub.add_parser("cohomology", parents=[common], help="H^1 of a presented group")
    c.add_argument("presentation")
    g = c.add_mutually_exclusive_group()
    g.add_argument("--rep", help="representation file")
    g.add_argument("--embedding", help="generator images in SO(n)")
    c.add_argument("--degrees")

    d = sub.add_parser("dynamics", parents=[common], help="density and spectral diagnostics")
    d.add_argument("generators", help="generator matrices (name -> matrix) or a generator-set file")
    d.add_argument("--radius", type=int)
    d.add_argument("--degrees")
    d.add_argument("--probes", type=int)

    s = sub.add_parser("suspension", parents=[common], help="finite orbit models and Maurer-Cartan checks")
    s.add_argument("mode", choices=["orbits", "mc"])
    s.add_argument("action", nargs="?", help="finite-action file (orbits mode)")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--base-dim", type=int, default=0)
    s.add_argument("--translations", type=int, default=20)
    return p


COMMANDS = {
    "algebra": cmd_algebra, "forge": cmd_forge, "cohomology": cmd_cohomology,
    "dynamics": cmd_dynamics, "suspension": cmd_suspension,
}

VALIDATION_ERRORS = (
    ConfigError, liealg.LieAlgebraError, qform.FormError, qform.NotAMember, qform.NonIntegral,
    groupcoh.InvalidPresentation, groupcoh.InvalidRepresentation, suspension.InvalidAction,
    json.JSONDecodeError, FileNotFoundError, KeyError, ValueError,
)
BUDGET_ERRORS = (dynamics.BudgetExceeded, liealg.BudgetExceeded)
NUMERIC_ERRORS = (dynamics.NotConverged, qform.ResidualTooLarge, suspension.SingularSample, ArithmeticError)


def data_path(name: str) -> Path:
    """Path of a bundled data file."""
    return Path(__file__).with_name("data") / name


def _inputs(args) -> list[str]:
    names = ("input", "form", "presentation", "rep", "embedding", "generators", "action")
    return [getattr(args, n) for n in names if getattr(args, n, None)]


def run(argv=None, env=None) -> int:
    args = build_parser().parse_args(argv)
    if args.subcommand == "forge" and not args.form:
        args.form = str(data_path("phi_sqrt2.json"))
    start = time.perf_counter()
    try:
        overrides = {"seed": args.seed, "workers": args.workers}
        for key in ("height", "radius", "probes"):
            overrides[key] = getattr(args, key, None)
        overrides["degrees"] = getattr(args, "degrees", None)
        cfg = load_config(args.config, env, overrides)
        hashes = {Path(p).name: file_hash(p) for p in _inputs(args)}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = COMMANDS[args.subcommand](args, cfg)
        for w in caught:
            print(f"warning: {w.category.__name__}: {w.message}", file=sys.stderr)
    except BUDGET_ERRORS as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NUMERIC_ERRORS as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except VALIDATION_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    csvs = report.pop("_csv", None)
    report = {"subcommand": args.subcommand, "seed": cfg.seed, "input_hashes": hashes, **report}
    out = Path(args.out) if args.out else None
    _emit(out, args.subcommand, report, csvs)
    manifest = RunManifest(args.subcommand, hashes, cfg.snapshot(), __version__,
                           round(time.perf_counter() - start, 3))
    if out is not None:
        (out / f"{args.subcommand}-manifest.json").write_text(dump(manifest.to_dict()))
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
