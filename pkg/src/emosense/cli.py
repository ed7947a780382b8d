"""Command-line entry point: synth, extract, evaluate, compare."""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from .classify import DISPLAY_NAMES, ClassifierSpec, canonical_algorithm
from .config import PipelineConfig, load_config, override
from .core import load_manifest
from .errors import EmosenseError
from .evaluate import TARGETS, loo_predictions, macro_metrics, mcnemar_test, run_comparison
from .features import ALL_MASKS, build_dataset, mask_name, normalize_mask, project_sensors, read_feature_csv, write_feature_csv
from .pipeline import extract_session
from .synth import ModulationSpec, synth_cohort


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config; explicit flags override it")
    p.add_argument("--seed", type=_seed, help="random seed (default from config, else 0)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    p.add_argument("--timestamps", action="store_true", help="stamp reports with the wall-clock time")
    return p


def _filters() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--mask", help="sensor mask, e.g. GSR or EEG+GSR (default: all seven)")
    p.add_argument("--clf", choices=["nb", "tree", "svm"], help="single classifier (default: all three)")
    p.add_argument("--target", choices=list(TARGETS), help="single target (default: both)")
    p.add_argument("--loo", choices=["instance", "subject"], help="hold out one instance or one subject per fold")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="emosense", description="Multimodal emotion recognition pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write synthetic sessions (traces + manifests)")
    p.add_argument("--subjects", type=int, default=19)
    p.add_argument("--arousal-gsr-gain", type=float, default=0.0, help="extra SCRs/min in High-arousal videos")
    p.add_argument("--arousal-emg-gain", type=float, default=0.0, help="EMG burst gain in High-arousal videos")
    p.add_argument("--valence-alpha-gain", type=float, default=0.0, help="alpha gain in High-valence videos")
    p.add_argument("--noise-level", type=float, default=1.0)

    p = sub.add_parser("extract", parents=[common], help="session manifests -> feature CSV")
    p.add_argument("manifests", nargs="+", type=Path)
    p.add_argument("--name", default="features.csv", help="output file name inside --out")

    p = sub.add_parser("evaluate", parents=[common, _filters()], help="LOO grid -> report JSON/CSV + figures")
    p.add_argument("features", type=Path)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("compare", parents=[common], help="McNemar test between two settings")
    p.add_argument("features", type=Path)
    p.add_argument("setting_a", help="MASK:CLF, e.g. GSR:tree")
    p.add_argument("setting_b", help="MASK:CLF, e.g. EEG+GSR:svm")
    p.add_argument("--target", choices=list(TARGETS), required=True)
    p.add_argument("--loo", choices=["instance", "subject"])
    return parser


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config)
    return override(cfg, seed=args.seed, loo=getattr(args, "loo", None))


def _stamp(doc: dict, args) -> dict:
    if args.timestamps:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return doc


def _spec(cfg: PipelineConfig, algorithm: str) -> ClassifierSpec:
    algorithm = canonical_algorithm(algorithm)
    return ClassifierSpec(algorithm, cfg.classifiers.get(algorithm, {}))


def cmd_synth(args) -> int:
    cfg = _config(args)
    if args.subjects < 1:
        raise EmosenseError("--subjects must be at least 1")
    spec = ModulationSpec(args.arousal_gsr_gain, args.arousal_emg_gain, args.valence_alpha_gain,
                          args.noise_level, cfg.seed)
    for path in synth_cohort(args.out, args.subjects, spec):
        print(path)
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    sessions = []
    for path in args.manifests:
        try:
            manifest = load_manifest(path)
        except EmosenseError as exc:
            raise type(exc)(f"{path}: {exc}") from None
        traces = manifest.load_traces(path.parent)
        sessions.append(extract_session(manifest.subject_id, traces, manifest.timeline, cfg=cfg.dsp))
    sessions.sort(key=lambda s: s.subject_id)
    dataset = build_dataset(sessions)
    args.out.mkdir(parents=True, exist_ok=True)
    out = args.out / args.name
    write_feature_csv(out, dataset)
    print(f"{out}: {len(dataset)} instances, {dataset.X.shape[1]} features")
    return 0


def _print_table(grid) -> None:
    head = f"{'target':<8} {'mask':<12} {'clf':<4} {'P':>6} {'R':>6} {'F1':>6} {'ref':>6} {'p_vs_best':>9}"
    print(head)
    print("-" * len(head))
    for c in grid.cells:
        ref = f"{c.reference_f1:.3f}" if c.reference_f1 is not None else "-"
        p = "best" if c.best else (f"{c.mcnemar_vs_best.p_value:.3g}" if c.mcnemar_vs_best else "-")
        r = c.report
        print(f"{c.target:<8} {c.mask:<12} {DISPLAY_NAMES[c.classifier]:<4} {r.precision:6.3f} {r.recall:6.3f} "
              f"{r.f1:6.3f} {ref:>6} {p:>9}")


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    dataset = read_feature_csv(args.features)
    masks = [normalize_mask(args.mask)] if args.mask else list(ALL_MASKS)
    algos = [args.clf] if args.clf else ["nb", "tree", "svm"]
    targets = [args.target] if args.target else list(TARGETS)
    echo = cfg.to_dict()
    echo["features"] = str(args.features)
    grid = run_comparison(dataset, targets, [_spec(cfg, a) for a in algos], masks, cfg.loo, echo)
    args.out.mkdir(parents=True, exist_ok=True)
    doc = _stamp(grid.to_dict(), args)
    with open(args.out / "report.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    grid.write_csv(args.out / "report.csv")
    _print_table(grid)
    if not args.no_figures:
        from .plotting import render_report

        for path in render_report(grid, args.out / "figures"):
            print(path)
    return 0


def _setting(text: str):
    mask, sep, clf = text.rpartition(":")
    if not sep or not mask:
        raise EmosenseError(f"setting {text!r} must look like MASK:CLF")
    return normalize_mask(mask), canonical_algorithm(clf)


def cmd_compare(args) -> int:
    cfg = _config(args)
    dataset = read_feature_csv(args.features)
    results = {}
    for key, text in (("a", args.setting_a), ("b", args.setting_b)):
        mask, algo = _setting(text)
        preds = loo_predictions(_spec(cfg, algo), project_sensors(dataset, mask), args.target, cfg.loo)
        results[key] = (mask_name(mask), algo, preds)
    test = mcnemar_test(results["a"][2], results["b"][2])
    doc = {"target": args.target, "loo": cfg.loo, "config": cfg.to_dict(),
           "mcnemar": {"b": test.b, "c": test.c, "statistic": test.statistic, "p_value": test.p_value,
                       "method": test.method}}
    for key, (mask, algo, preds) in results.items():
        rep = macro_metrics(preds)
        doc[key] = {"mask": mask, "classifier": algo, **rep.to_dict()}
        print(f"{key}: {mask}/{DISPLAY_NAMES[algo]} F1={rep.f1:.3f}")
    print(f"McNemar b={test.b} c={test.c} chi2_cc={test.statistic:.3f} p={test.p_value:.4g} ({test.method})")
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "compare.json", "w") as fh:
        json.dump(_stamp(doc, args), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


COMMANDS = {"synth": cmd_synth, "extract": cmd_extract, "evaluate": cmd_evaluate, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"emosense {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
