"""Command-line entry point: generate | extract | train | eval | xval | gradcheck | plot.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
"""
import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .config import CONFIG_ENV_VAR, load_config, parse_config
from .exceptions import QsrError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    argv: list
    config_hash: str
    config: str
    seed: int = None
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    version: str = __version__
    started: float = 0.0
    wall_seconds: float = 0.0

    def write(self, path):
        self.wall_seconds = round(time.time() - self.started, 3)
        with open(path, "w") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")


def _config(args):
    config = load_config(args.config)
    if args.set:
        config = parse_config("\n".join(args.set), base=config)
    return config


def _manifest(args, config, argv):
    return RunManifest(args.command, list(argv), config.digest(), config.to_text(),
                       getattr(args, "seed", None), started=time.time())


def _session_paths(path):
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.glob("*.json") if p.name != "manifest.json")
        if not files:
            raise FileNotFoundError(f"no session files in {path}")
        return files
    if not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")
    return [path]


def _load_sessions(path):
    from .pipeline import load_session
    return [load_session(p) for p in _session_paths(path)]


def _kinds(text):
    from .pipeline import KINDS
    if text == "all":
        return list(KINDS)
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    bad = [k for k in kinds if k not in KINDS]
    if bad or not kinds:
        raise UsageError(f"unknown feature kind {', '.join(bad) or text!r}; valid kinds: {', '.join(KINDS)}, all")
    return kinds


def _grid(text):
    """Parse ``lr=0.1,0.5;hidden=200`` into a parameter grid."""
    from .learn import GRID
    grid = {}
    for part in filter(None, (p.strip() for p in text.split(";"))):
        name, _, values = part.partition("=")
        name = name.strip()
        if name not in GRID:
            raise UsageError(f"unknown grid parameter {name!r}; valid: {', '.join(GRID)}")
        cast = type(GRID[name][0])
        try:
            grid[name] = [cast(v) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise UsageError(f"bad values for {name}: {values!r}") from exc
        if not grid[name]:
            raise UsageError(f"no values given for {name}")
    return grid


def _prepare_out_dir(out, force):
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not force:
        raise UsageError(f"output directory {out} is not empty (use --force)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args, config, manifest):
    from .pipeline import save_session
    from .sim import make_corpus
    if args.n < 5:
        raise UsageError("--n must be at least 5")
    out = _prepare_out_dir(args.out, args.force)
    corpus = make_corpus(args.n, seed=args.seed, noise=args.noise, dropout=args.dropout)
    for item in corpus:
        path = out / f"{item.session.id}.json"
        save_session(item.session, path)
        manifest.outputs.append(str(path))
    manifest.write(out / "manifest.json")
    print(f"wrote {len(corpus)} sessions to {out}")
    return EXIT_OK


def cmd_extract(args, config, manifest):
    from .pipeline import extract, load_session, preprocess
    kinds = _kinds(args.kind)
    paths = _session_paths(args.inp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    label_rows = ["session,segment,subject,verb,object,preposition,locative"]
    for p in paths:
        session = load_session(p)
        manifest.inputs.append(str(p))
        for seg in preprocess(session, config.rate_hz, config.segment_frames):
            label_rows.append(",".join([session.id, str(seg.index), *seg.label]))
            for kind in kinds:
                fm = extract(kind, seg, config)
                path = out / f"{session.id}_seg{seg.index:03d}_{kind}.csv"
                with open(path, "w") as f:
                    f.write(fm.to_csv(comment=f"session={session.id} segment={seg.index}"))
                manifest.outputs.append(str(path))
    with open(out / "labels.csv", "w") as f:
        f.write("\n".join(label_rows) + "\n")
    manifest.outputs.append(str(out / "labels.csv"))
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.outputs) - 1} feature files to {out}")
    return EXIT_OK


def _estimator_overrides(args):
    keys = ("lr", "hidden", "n_layers", "keep_prob", "decay", "epochs", "dtype")
    out = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    if getattr(args, "hard_constraints", False):
        out["hard_constraints"] = True
    return out


def cmd_train(args, config, manifest):
    from .learn import build_dataset, make_estimator, model_for_kind, save_checkpoint
    kind = _kinds(args.kind)
    if len(kind) != 1:
        raise UsageError("train takes exactly one feature kind")
    kind = kind[0]
    sessions = _load_sessions(args.inp)
    manifest.inputs = [str(p) for p in _session_paths(args.inp)]
    data = build_dataset(sessions, [kind], config)
    model = model_for_kind(kind)
    X = data.features[kind]
    if model == "mlp":
        X = X.reshape(len(X), -1)
    est = make_estimator(model, random_state=args.seed, **_estimator_overrides(args)).fit(X, data.codes)
    est.feature_kind_ = kind
    save_checkpoint(est, args.out)
    manifest.outputs.append(str(args.out))
    if args.report:
        Path(args.report).write_text(est.report_.to_csv())
        manifest.outputs.append(str(args.report))
    manifest.write(str(args.out) + ".manifest.json")
    print(f"trained {model.upper()}-CRF on {len(X)} {kind} segments; final loss {est.report_.loss[-1]:.4f}")
    return EXIT_OK


def cmd_eval(args, config, manifest):
    from .learn import build_dataset, evaluate, load_checkpoint
    est = load_checkpoint(args.checkpoint)
    kind = est.feature_kind_
    data = build_dataset(_load_sessions(args.inp), [kind], config)
    X = data.features[kind]
    if est._model_kind == "mlp":
        X = X.reshape(len(X), -1)
    metrics = evaluate(est, X, data.codes)
    print(f"{kind}: all-slot precision {100 * metrics['all_slot_precision']:.1f}% on {metrics['n']} segments")
    for slot, p in metrics["per_slot"].items():
        print(f"  {slot:<12} {100 * p:5.1f}%")
    if args.out:
        Path(args.out).write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
        manifest.outputs.append(str(args.out))
        manifest.inputs = [str(args.checkpoint), str(args.inp)]
        manifest.write(str(args.out) + ".manifest.json")
    return EXIT_OK


def cmd_xval(args, config, manifest):
    from .learn import XVAL_GRID, build_dataset, cross_validate
    from .sim import make_corpus
    kinds = _kinds(args.kinds)
    grid = _grid(args.grid) if args.grid else XVAL_GRID
    if args.inp:
        sessions = _load_sessions(args.inp)
        manifest.inputs = [str(p) for p in _session_paths(args.inp)]
    else:
        if args.n < 5:
            raise UsageError("--n must be at least 5")
        sessions = [c.session for c in make_corpus(args.n, seed=args.seed)]
    data = build_dataset(sessions, kinds, config)
    epochs = {k: v for k, v in (("lstm", args.lstm_epochs), ("mlp", args.mlp_epochs)) if v is not None}
    extra = {"dtype": args.dtype} if args.dtype else {}
    report = cross_validate(data, kinds, grid, seed=args.seed, n_jobs=args.jobs, epochs=epochs, **extra)
    table = report.format_table()
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "xval.csv").write_text(report.to_csv())
        (out / "xval.txt").write_text(table + "\n")
        manifest.outputs += [str(out / "xval.csv"), str(out / "xval.txt")]
        manifest.write(out / "manifest.json")
    return EXIT_OK


def cmd_gradcheck(args, config, manifest):
    from .learn.gradcheck import MODELS, check_gradients
    models = MODELS if args.model == "all" else [args.model]
    perturb = None
    if args.perturb:
        def perturb(grads):
            return {k: g * (1.0 + args.perturb) for k, g in grads.items()}
    ok = True
    for m in models:
        res = check_gradients(m, seed=args.seed, n_samples=args.samples, grad_fn=perturb)
        print(res.summary())
        ok &= res.passed
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_plot(args, config, manifest):
    from .pipeline import load_session
    from .plotting import plot_embedded
    if not Path(args.session).is_file():
        raise FileNotFoundError(f"no such session file: {args.session}")
    session = load_session(args.session)
    plot_embedded(session, args.factor_model, args.out, config)
    manifest.inputs.append(str(args.session))
    manifest.outputs.append(str(args.out))
    manifest.write(str(args.out) + ".manifest.json")
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser():
    from .learn.gradcheck import MODELS
    from .pipeline import FACTOR_NAMES
    p = _Parser(prog="qsrevents", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help=f"pipeline config file (default: ${CONFIG_ENV_VAR} or built-in defaults)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config entry")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic session corpus")
    g.add_argument("--n", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--noise", type=float, default=0.005)
    g.add_argument("--dropout", type=float, default=0.05)
    g.add_argument("--force", action="store_true")

    e = sub.add_parser("extract", help="write per-segment feature CSVs")
    e.add_argument("--kind", required=True, help="feature kind, comma list, or 'all'")
    e.add_argument("--in", dest="inp", required=True, help="session file or directory")
    e.add_argument("--out", required=True)

    def add_hp(q):
        q.add_argument("--lr", type=float)
        q.add_argument("--hidden", type=int)
        q.add_argument("--layers", dest="n_layers", type=int)
        q.add_argument("--keep-prob", type=float)
        q.add_argument("--decay", type=float)
        q.add_argument("--epochs", type=int)
        q.add_argument("--dtype", choices=["float64", "float32"])
        q.add_argument("--hard-constraints", action="store_true")

    t = sub.add_parser("train", help="fit a classifier on all segments of a corpus")
    t.add_argument("--kind", required=True)
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--report", help="training report CSV path")
    t.add_argument("--seed", type=int, default=0)
    add_hp(t)

    v = sub.add_parser("eval", help="evaluate a checkpoint on a corpus")
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--out", help="metrics JSON path")

    x = sub.add_parser("xval", help="cross-validated precision table")
    x.add_argument("--in", dest="inp", help="session directory (default: generate --n sessions from --seed)")
    x.add_argument("--n", type=int, default=30)
    x.add_argument("--kinds", default="all")
    x.add_argument("--grid", help="e.g. 'lr=0.1,0.5;hidden=200'")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--jobs", type=int, default=1)
    x.add_argument("--lstm-epochs", type=int)
    x.add_argument("--mlp-epochs", type=int)
    x.add_argument("--dtype", choices=["float64", "float32"])
    x.add_argument("--out", help="directory for xval.csv, xval.txt and manifest.json")

    c = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    c.add_argument("--model", choices=list(MODELS) + ["all"], default="all")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--perturb", type=float, default=0.0, help="scale analytic gradients by 1+PERTURB (negative control)")

    pl = sub.add_parser("plot", help="SVG of a factor model's embedded trajectories")
    pl.add_argument("--session", required=True)
    pl.add_argument("--factor-model", required=True, choices=FACTOR_NAMES)
    pl.add_argument("--out", required=True)
    return p


COMMANDS = {"generate": cmd_generate, "extract": cmd_extract, "train": cmd_train, "eval": cmd_eval,
            "xval": cmd_xval, "gradcheck": cmd_gradcheck, "plot": cmd_plot}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
        config = _config(args)
        manifest = _manifest(args, config, argv)
        return COMMANDS[args.command](args, config, manifest)
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(f"qsrevents: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QsrError, OSError, ValueError, KeyError) as exc:
        print(f"qsrevents: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
