"""Command-line entry point: ``rateless {train,sweep,pca,synth-check}``.

Every command accepts ``--config FILE`` with flat ``key=value`` lines (keys are
option names, dashes or underscores). Explicit flags override the file. Each
run writes ``<command>_manifest.txt`` with every resolved option, which can be fed back
through ``--config`` to repeat the run.
"""

import argparse
import logging
import os
import sys

import numpy as np

from rateless import _core, checkpoint
from rateless.datasets import GaussianSpec, harmonic_spectrum, load_named, synth_gaussian
from rateless.errors import ConfigError, ConsistencyError, InputError, RatelessError
from rateless.evaluate import (
    REPORTING_GRID,
    export_latent_scatter,
    export_reconstructions,
    sweep,
    write_sweep_csv,
)
from rateless.linalg import Rng
from rateless.losses import SsimConfig
from rateless.model import AEConfig, AutoEncoder
from rateless.optim import TrainConfig, fine_tune_ssim, train
from rateless.pca import PCAModel, fit_pca, population_distortion, theoretical_distortion
from rateless.regularizers import TailDropSchedule

log = logging.getLogger("rateless")

DATASETS = ("mnist", "fmnist", "kmnist", "cifar10", "cifar100", "svhn-like", "synth")
_SKIP = {"config", "func", "verbose"}


# ---------------------------------------------------------------- parsing


def _int_list(text):
    text = str(text).strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _metric_list(text):
    return [m.strip() for m in str(text).split(",") if m.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off", ""):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path):
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _data_options(p, train_split=True):
    p.add_argument("--dataset", choices=DATASETS, default="mnist")
    p.add_argument("--data-dir", default="data/mnist")
    p.add_argument("--coarse-labels", type=_bool, default=False, help="CIFAR-100 superclass labels")
    p.add_argument("--subset", type=int, default=0, help="use only the first N training rows (0 = all)")
    p.add_argument("--test-subset", type=int, default=0, help="use only the first N test rows (0 = all)")
    p.add_argument("--synth-dim", type=int, default=32)
    p.add_argument("--synth-count", type=int, default=50000)
    p.add_argument("--synth-test-count", type=int, default=10000)
    p.add_argument("--spectrum", default="harmonic", help="harmonic | zero | comma-separated eigenvalues")


def _common(p):
    p.add_argument("--config", help="key=value file with option defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="rateless", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an auto-encoder")
    _common(p)
    _data_options(p)
    p.add_argument("--latent", type=int, default=64)
    p.add_argument("--hidden", type=int, default=1024)
    p.add_argument("--schedule", choices=("taildrop", "uniform", "independent", "none"), default="taildrop")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--rates", type=_float_list, default=None, help="comma-separated per-node drop rates")
    p.add_argument("--loss", choices=("mse", "ssim"), default="mse")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--finetune-epochs", type=int, default=None, help="SSIM stage length (default: --epochs)")
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--validation-fraction", type=float, default=0.1)
    p.add_argument("--validation-mode", choices=("full", "rate_averaged"), default="full")
    p.add_argument("--output-activation", choices=("auto", "sigmoid", "linear"), default="auto")
    p.add_argument("--ssim-window", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--init", default=None, help="start from this checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="evaluate a checkpoint over survivor dimensionalities")
    _common(p)
    _data_options(p)
    p.add_argument("--checkpoint", required=False)
    p.add_argument("--L-list", dest="L_list", type=_int_list, default=None)
    p.add_argument("--metrics", type=_metric_list, default=["mse", "ssim", "probe"])
    p.add_argument("--model-id", default=None)
    p.add_argument("--ssim-window", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--grid", default=None, help="write a reconstruction grid (PGM/PPM) here")
    p.add_argument("--samples", type=_int_list, default=[0, 1, 2, 3, 4, 5, 6, 7])
    p.add_argument("--scatter", default=None, help="write first-two-latent CSV here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pca", help="fit the PCA baseline and sweep it")
    _common(p)
    _data_options(p)
    p.add_argument("--latent", type=int, default=64)
    p.add_argument("--L-list", dest="L_list", type=_int_list, default=None)
    p.add_argument("--metrics", type=_metric_list, default=None)
    p.add_argument("--worst-order", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--fit-subsample", type=int, default=0)
    p.add_argument("--ssim-window", choices=("gaussian", "uniform"), default="gaussian")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("synth-check", help="verify PCA distortion against the tail-eigenvalue sum")
    _common(p)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--count", type=int, default=50000)
    p.add_argument("--spectrum", default="harmonic", help="harmonic | zero | comma-separated eigenvalues")
    p.add_argument("--tolerance", type=float, default=0.03)
    p.add_argument("--population-tolerance", type=float, default=1e-8)
    p.set_defaults(func=cmd_synth_check)
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config(args.config)
        values.pop("command", None)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = set(values) - set(known)
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def write_manifest(args, out_dir, info=None, **resolved_extra):
    """Write every resolved option as ``key=value``; ``info`` entries become comments."""
    path = os.path.join(out_dir, f"{args.command}_manifest.txt")
    resolved = {k: v for k, v in vars(args).items() if k not in _SKIP and v is not None}
    resolved.update(resolved_extra)
    with open(path, "w") as fh:
        for key, value in sorted((info or {}).items()):
            fh.write(f"# {key}: {value}\n")
        fh.write(f"command={args.command}\n")
        for key in sorted(k for k in resolved if k != "command"):
            fh.write(f"{key.replace('_', '-')}={_render(resolved[key])}\n")
    return path


def _render(value):
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------- helpers


def _spectrum(text, dim):
    text = str(text).strip()
    if text == "harmonic":
        return harmonic_spectrum(dim)
    if text == "zero":
        return (0.0,) * dim
    return tuple(_float_list(text))


def load_split(args, split):
    if args.dataset == "synth":
        spec = GaussianSpec(_spectrum(args.spectrum, args.synth_dim), rotation_seed=args.seed)
        count = args.synth_count if split == "train" else args.synth_test_count
        data = synth_gaussian(spec, count, Rng(args.seed, 10 if split == "train" else 11))
    else:
        data = load_named(args.dataset, args.data_dir, split, coarse_labels=args.coarse_labels)
    limit = args.subset if split == "train" else args.test_subset
    if limit:
        data = data.head(limit)
    return data


def _out_dir(args):
    out = args.out or os.path.join("runs", args.command)
    os.makedirs(out, exist_ok=True)
    return out


def _schedule(args):
    if args.schedule == "independent" and not args.rates:
        raise ConfigError("--schedule independent needs --rates")
    return TailDropSchedule(
        args.schedule,
        args.latent,
        beta=args.beta,
        p=args.p,
        rates=tuple(args.rates or ()),
    )


def _ssim_cfg(args):
    return SsimConfig() if args.ssim_window == "gaussian" else SsimConfig.uniform8()


def _write_history(history, out, stem):
    # wall-clock times live outside the CSV so reruns stay byte-identical
    history.write_csv(os.path.join(out, stem + ".csv"))
    with open(os.path.join(out, stem + "_seconds.txt"), "w") as fh:
        fh.write("".join(f"{s:.3f}\n" for s in history.seconds))


def _default_grid(M):
    return list(REPORTING_GRID) if M == 64 else list(range(1, M + 1))


# ---------------------------------------------------------------- commands


def cmd_train(args):
    out = _out_dir(args)
    data = load_split(args, "train")
    activation = args.output_activation
    if activation == "auto":
        activation = "linear" if data.unclamped else "sigmoid"
    config = AEConfig(data.dim, args.hidden, args.latent, activation, args.seed)
    schedule = _schedule(args)
    tcfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
        validation_fraction=args.validation_fraction,
        validation_mode=args.validation_mode,
        ssim=_ssim_cfg(args),
    )
    init = None
    if args.init:
        init, init_config, _ = checkpoint.load_autoencoder(args.init)
        if init_config != config:
            raise ConsistencyError(f"--init checkpoint config {init_config} does not match {config}")

    if args.loss == "ssim" and init is not None:
        params, history = init, None
    else:
        params, history = train(config, schedule, data, tcfg, params=init)
        _write_history(history, out, "history")
    if args.loss == "ssim":
        epochs = args.epochs if args.finetune_epochs is None else args.finetune_epochs
        ft_cfg = TrainConfig(**{**tcfg.__dict__, "max_epochs": epochs})
        params, ft_history = fine_tune_ssim(params, config, schedule, data, ft_cfg)
        _write_history(ft_history, out, "finetune_history")

    ckpt = os.path.join(out, "model.ckpt")
    checkpoint.save_autoencoder(
        ckpt,
        params,
        config,
        dataset=args.dataset,
        schedule=schedule.describe(),
        loss=args.loss,
        seed=args.seed,
        shape=list(data.shape),
        dropout_scaling="none",
    )
    write_manifest(args, out, info={"backend": _core.BACKEND}, output_activation=activation)
    print(f"wrote {ckpt}")
    return 0


def _load_model(path):
    kind, _, _ = checkpoint.load(path)
    if kind == "pca":
        return checkpoint.load_pca(path)
    params, config, meta = checkpoint.load_autoencoder(path)
    return AutoEncoder(params, config), meta


def cmd_sweep(args):
    if not args.checkpoint:
        raise InputError("--checkpoint is required")
    out = _out_dir(args)
    model, meta = _load_model(args.checkpoint)
    test = load_split(args, "test")
    if test.dim != model.input_dim:
        raise ConsistencyError(
            f"checkpoint expects {model.input_dim} features but {args.dataset} has {test.dim}"
        )
    Ls = args.L_list or _default_grid(model.latent_dim)
    probe_data = load_split(args, "train") if "probe" in args.metrics else None
    model_id = args.model_id or os.path.splitext(os.path.basename(args.checkpoint))[0]
    result = sweep(
        model,
        test,
        Ls,
        metrics=args.metrics,
        probe_data=probe_data,
        ssim_cfg=_ssim_cfg(args),
        model_id=model_id,
        metadata={"dataset": args.dataset, "loss": meta.get("loss", ""), "schedule": meta.get("schedule", "")},
        probe_seed=args.seed,
    )
    csv_path = os.path.join(out, "sweep.csv")
    write_sweep_csv([result], csv_path)
    if args.grid:
        export_reconstructions(model, test, sorted(Ls, reverse=True), args.samples, args.grid)
    if args.scatter:
        export_latent_scatter(model, test, args.scatter)
    write_manifest(args, out, L_list=Ls)
    print(f"wrote {csv_path}")
    return 0


def cmd_pca(args):
    out = _out_dir(args)
    data = load_split(args, "train")
    test = load_split(args, "test")
    if args.latent > data.dim:
        raise ConfigError(f"--latent {args.latent} exceeds data dimensionality {data.dim}")
    subsample = args.fit_subsample or None
    model = fit_pca(data, args.latent, subsample=subsample, rng=Rng(args.seed, 12))
    checkpoint.save_pca(os.path.join(out, "pca.ckpt"), model, dataset=args.dataset, seed=args.seed)
    metrics = args.metrics or (["mse"] if data.unclamped else ["mse", "ssim"])
    Ls = args.L_list or _default_grid(args.latent)
    evaluated = model.reversed() if args.worst_order else model
    result = sweep(
        evaluated,
        test,
        Ls,
        metrics=metrics,
        probe_data=data if "probe" in metrics else None,
        ssim_cfg=_ssim_cfg(args),
        model_id="pca-reversed" if args.worst_order else "pca",
        metadata={"dataset": args.dataset, "loss": "mse", "schedule": "pca"},
        probe_seed=args.seed,
    )
    csv_path = os.path.join(out, "sweep.csv")
    write_sweep_csv([result], csv_path)
    write_manifest(args, out, L_list=Ls, metrics=metrics)
    print(f"wrote {csv_path}")
    return 0


def synth_check(dim, count, eigenvalues, seed=0, tolerance=0.03, population_tolerance=1e-8):
    """Compare empirical and population PCA distortion with the tail-eigenvalue sum.

    Returns ``(ok, lines)``; one report line per L.
    """
    lines = []
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if lam.size != dim:
        return False, [f"FAIL: {lam.size} eigenvalues given for dimension {dim}"]
    if np.any(np.diff(lam) > 0):
        bad = int(np.argmax(np.diff(lam) > 0))
        return False, [f"FAIL: eigenvalues not sorted descending (index {bad}: {lam[bad]:g} < {lam[bad + 1]:g})"]
    spec = GaussianSpec(tuple(lam), rotation_seed=seed)
    data = synth_gaussian(spec, count, Rng(seed, 10))
    model = fit_pca(data, dim)
    pop_model = PCAModel(np.zeros(dim), *_population_basis(spec))
    cov = spec.covariance()
    ok = True
    lines.append("L,theory,empirical,rel_err,population,pop_err,status")
    for L in range(1, dim + 1):
        theory = theoretical_distortion(lam, L)
        recon = model.decode(_truncated(model.encode(data.images), L))
        empirical = float(np.mean(np.sum((recon - data.images) ** 2, axis=1)))
        population = population_distortion(cov, pop_model.components, L)
        pop_err = abs(population - theory)
        if theory > 0:
            rel = abs(empirical - theory) / theory
            passed = rel <= tolerance and pop_err <= population_tolerance * max(theory, 1.0)
        else:
            # nothing left to lose: only rounding noise is acceptable
            rel = abs(empirical)
            passed = rel <= 1e-12 * max(float(lam.sum()), 1.0) and pop_err <= population_tolerance
        ok &= passed
        lines.append(f"{L},{theory!r},{empirical!r},{rel:.3e},{population!r},{pop_err:.3e},{'ok' if passed else 'FAIL'}")
    return ok, lines


def _population_basis(spec):
    from rateless.linalg import sym_eigen

    values, vectors = sym_eigen(spec.covariance())
    return vectors, values


def _truncated(z, L):
    z = z.copy()
    z[:, L:] = 0.0
    return z


def cmd_synth_check(args):
    eigenvalues = _spectrum(args.spectrum, args.dim)
    ok, lines = synth_check(args.dim, args.count, eigenvalues, args.seed, args.tolerance, args.population_tolerance)
    report = "\n".join(lines)
    print(report)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "synth_check.csv"), "w") as fh:
            fh.write(report + "\n")
        write_manifest(args, args.out)
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except RatelessError as exc:
        print(f"rateless: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (RatelessError, OSError) as exc:
        print(f"rateless: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
