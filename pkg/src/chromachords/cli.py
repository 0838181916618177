"""Command-line entry point: build-dataset, train-key, train, generate, bench, serve."""
import argparse
import sys
from contextlib import contextmanager
from datetime import datetime
from pathlib import Path
from typing import Iterator, Optional, Sequence

from pydantic import ValidationError

from . import __version__
from .core.binary import atomic_write_text
from .core.config import Settings, load_settings
from .core.errors import ChromaChordsError, InvalidParameter
from .core.models import GenerationConfig, ModelConfig
from .core.parsing import parse_tonic, tonic_name
from .dataset.builder import build_dataset, list_corpus
from .dataset.storage import read_dataset
from .dataset.synthetic import synthesize_key_examples
from .keys.classifier import collect_key_examples, load_key_model, save_key_model, train_key_model
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.training import train
from .pipeline.factory import create_predictor
from .pipeline.latency import MIN_TRIALS, measure_latency
from .pipeline.runner import HarmonizerRunner, TeeLogger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BOUND = 2
LATENCY_BOUND_MS = 80.0


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextmanager
def run_log(settings: Settings, command: str) -> Iterator[Path]:
    """Tee stdout into <log_dir>/<command>_<timestamp>.log for the block."""
    settings.log_dir.mkdir(parents=True, exist_ok=True)
    log_path = settings.log_dir / f"{command}_{datetime.now():%Y%m%d_%H%M%S}.log"
    original_stdout = sys.stdout
    with open(log_path, "w", encoding="utf-8") as log_file:
        try:
            sys.stdout = TeeLogger(log_file)
            yield log_path
        finally:
            sys.stdout = original_stdout


def _load(args: argparse.Namespace, **overrides) -> Settings:
    return load_settings(args.config, seed=args.seed, **overrides)


def _model_config(settings: Settings) -> ModelConfig:
    return ModelConfig(
        seq_len=settings.seq_len,
        hidden_dim=settings.hidden_dim,
        num_layers=settings.num_layers,
        dropout_rate=settings.dropout_rate,
        learning_rate=settings.learning_rate,
        batch_size=settings.batch_size,
        seed=settings.seed,
    )


# Commands

def cmd_build_dataset(args: argparse.Namespace) -> int:
    settings = _load(
        args,
        corpus_dir=args.corpus,
        dataset_path=args.out,
        key_model_path=args.key_model,
        overlap_threshold=args.overlap_threshold,
        workers=args.workers,
    )
    if not settings.corpus_dir.is_dir():
        raise FileNotFoundError(f"Corpus directory not found: {settings.corpus_dir}")

    key_model = None
    if args.key_model is not None or settings.key_model_path.exists():
        key_model = load_key_model(settings.key_model_path)

    with run_log(settings, "build_dataset") as log_path:
        out_path, stats = build_dataset(
            settings.corpus_dir,
            settings.dataset_path,
            key_model=key_model,
            overlap_threshold=settings.overlap_threshold,
            workers=settings.workers,
        )
        for line in stats.summary().splitlines():
            print(f"[Dataset] {line}")
        print(f"[Dataset] Log saved to: {log_path}")
    return EXIT_OK


def cmd_train_key(args: argparse.Namespace) -> int:
    settings = _load(
        args,
        corpus_dir=args.corpus,
        key_model_path=args.out,
        pca_components=args.components,
        svm_c=args.svm_c,
        svm_gamma=args.svm_gamma,
    )
    with run_log(settings, "train_key") as log_path:
        if args.synthetic:
            print(f"[KeyModel] Synthetic corpus: {args.n_per_key} files per key, seed {settings.seed}")
            examples = synthesize_key_examples(args.n_per_key, seed=settings.seed)
        else:
            print(f"[KeyModel] Corpus: {settings.corpus_dir}")
            examples = collect_key_examples(list_corpus(settings.corpus_dir))
        print(f"[KeyModel] {len(examples)} labeled examples")

        model, report = train_key_model(
            examples,
            seed=settings.seed,
            n_components=settings.pca_components,
            C=settings.svm_c,
            gamma=settings.svm_gamma,
            degree=settings.svm_degree,
            tol=settings.svm_tol,
            max_iter=settings.svm_max_iter,
        )
        save_key_model(model, settings.key_model_path)
        print(f"train_accuracy={report.train_accuracy:.4f}")
        if report.test_accuracy is not None:
            print(f"test_accuracy={report.test_accuracy:.4f}")
        if report.unconverged_machines:
            print(f"[KeyModel] ⚠️  {report.unconverged_machines} machine(s) hit the iteration cap")
        print(f"[KeyModel] ✅ Saved to: {settings.key_model_path}")
        print(f"[KeyModel] Log saved to: {log_path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    settings = _load(
        args,
        dataset_path=args.dataset,
        model_path=args.out,
        epochs=args.epochs,
        seq_len=args.seq_len,
        hidden_dim=args.hidden_dim,
        num_layers=args.num_layers,
        dropout_rate=args.dropout,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
    )
    loss_log = Path(args.loss_log) if args.loss_log else Path(f"{settings.model_path}.loss.csv")
    dataset = read_dataset(settings.dataset_path)

    with run_log(settings, "train") as log_path:
        model = None
        previous: list[str] = []
        if args.resume:
            model = load_checkpoint(settings.model_path)
            config = model.config
            if loss_log.exists():
                previous = loss_log.read_text(encoding="utf-8").splitlines()
            print(f"[Train] Resuming {settings.model_path} after epoch {model.trained_epochs}")
        else:
            config = _model_config(settings)

        print(f"[Train] Dataset: {settings.dataset_path} "
              f"({len(dataset.songs)} songs, {dataset.n_examples} examples)")
        print(f"[Train] seq_len={config.seq_len} hidden={config.hidden_dim} layers={config.num_layers} "
              f"dropout={config.dropout_rate} lr={config.learning_rate} batch={config.batch_size}")

        def report(epoch: int, loss: float) -> None:
            print(f"[Train] epoch {epoch}: mean_msle={loss:.6f}")

        model, history = train(dataset, config, settings.epochs, model=model, on_epoch=report)
        first_epoch = model.trained_epochs - len(history) + 1
        lines = previous + [f"{first_epoch + k},{loss:.8f}" for k, loss in enumerate(history)]
        save_checkpoint(model, settings.model_path)
        atomic_write_text(loss_log, "".join(f"{line}\n" for line in lines))
        print(f"[Train] ✅ Checkpoint: {settings.model_path} (epoch {model.trained_epochs})")
        print(f"[Train] Loss log: {loss_log}")
        print(f"[Train] Log saved to: {log_path}")
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        tonic_pc = parse_tonic(args.tonic)
    except InvalidParameter as e:
        args.parser.error(str(e))
    settings = _load(
        args,
        model_path=args.model,
        output_path=args.out,
        voicing_threshold=args.threshold,
        overlap_threshold=args.overlap_threshold,
        use_fake_predictor=True if args.fake else None,
    )
    melody = Path(args.melody)
    if not melody.exists():
        raise FileNotFoundError(f"Melody file not found: {melody}")
    config = GenerationConfig(
        tonic_pc=tonic_pc,
        voicing_threshold=settings.voicing_threshold,
        overlap_threshold=settings.overlap_threshold,
        model_path=settings.model_path,
    )
    predictor = create_predictor(settings.use_fake_predictor, settings.model_path)
    HarmonizerRunner(predictor).run(melody, settings.output_path, config)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.trials < MIN_TRIALS:
        args.parser.error(f"--trials must be at least {MIN_TRIALS}")
    settings = _load(args, model_path=args.model, use_fake_predictor=True if args.fake else None)
    predictor = create_predictor(settings.use_fake_predictor, settings.model_path)
    print(f"[Bench] Predictor: {predictor.describe()}")
    report = measure_latency(predictor, args.trials, seed=settings.seed)
    for line in report.to_lines():
        print(line)
    if report.mean_ms < args.bound_ms:
        print(f"[Bench] ✅ mean {report.mean_ms:.3f} ms < {args.bound_ms:g} ms")
        return EXIT_OK
    print(f"[Bench] ❌ mean {report.mean_ms:.3f} ms >= {args.bound_ms:g} ms")
    return EXIT_BOUND


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api.main import create_app

    settings = _load(args, host=args.host, port=args.port, use_fake_predictor=True if args.fake else None)
    predictor = create_predictor(settings.use_fake_predictor, settings.model_path, fallback_to_fake=True)
    print(f"[API] Serving on http://{settings.host}:{settings.port}")
    uvicorn.run(create_app(predictor), host=settings.host, port=settings.port)
    return EXIT_OK


# Parser

def build_parser() -> CliParser:
    common = CliParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="flat key=value config file")
    common.add_argument("--seed", type=int, default=None, help="random seed (default from config, else 0)")

    parser = CliParser(prog="chromachords", description="Harmonize melodies with chroma-histogram chords.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dataset", parents=[common], help="extract a training dataset from a MIDI corpus")
    p.add_argument("--corpus", type=Path, help="directory searched recursively for .mid/.midi files")
    p.add_argument("--out", type=Path, help="dataset file to write")
    p.add_argument("--key-model", type=Path, help="key model for files without key metadata")
    p.add_argument("--overlap-threshold", type=float, help="melody candidate overlap bound in [0, 1)")
    p.add_argument("--workers", type=int, help="parallel file workers")
    p.set_defaults(handler=cmd_build_dataset)

    p = sub.add_parser("train-key", parents=[common], help="train the major-key classifier")
    p.add_argument("--corpus", type=Path, help="MIDI corpus with key metadata")
    p.add_argument("--synthetic", action="store_true", help="train on a generated diatonic corpus")
    p.add_argument("--n-per-key", type=int, default=100, help="synthetic files per key (default 100)")
    p.add_argument("--out", type=Path, help="key model file to write")
    p.add_argument("--components", type=int, help="PCA components")
    p.add_argument("--svm-c", type=float, help="soft-margin penalty")
    p.add_argument("--svm-gamma", type=float, help="RBF kernel width")
    p.set_defaults(handler=cmd_train_key)

    p = sub.add_parser("train", parents=[common], help="train the LSTM chord model")
    p.add_argument("--dataset", type=Path, help="dataset file")
    p.add_argument("--out", type=Path, help="checkpoint file to write")
    p.add_argument("--epochs", type=int, help="epochs to run")
    p.add_argument("--resume", action="store_true", help="continue training the checkpoint at --out")
    p.add_argument("--loss-log", type=Path, help="epoch,mean_msle log (default <out>.loss.csv)")
    p.add_argument("--seq-len", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--num-layers", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="harmonize a melody file")
    p.add_argument("--melody", required=True, help="input MIDI file")
    p.add_argument("--tonic", required=True, help="major-key tonic: 0-11 or C, C#, Db, ... B")
    p.add_argument("--model", type=Path, help="checkpoint file")
    p.add_argument("--out", type=Path, help="output MIDI file")
    p.add_argument("--threshold", type=float, help="voicing threshold in (0, 1)")
    p.add_argument("--overlap-threshold", type=float, help="melody selection overlap bound")
    p.add_argument("--fake", action="store_true", help="use the I-IV-V-I fake predictor")
    p.set_defaults(handler=cmd_generate, parser=p)

    p = sub.add_parser("bench", parents=[common], help="measure per-prediction latency")
    p.add_argument("--model", type=Path, help="checkpoint file")
    p.add_argument("--trials", type=int, default=100, help=f"timed predictions (at least {MIN_TRIALS})")
    p.add_argument("--bound-ms", type=float, default=LATENCY_BOUND_MS, help="mean latency bound")
    p.add_argument("--fake", action="store_true", help="time the fake predictor")
    p.set_defaults(handler=cmd_bench, parser=p)

    p = sub.add_parser("serve", parents=[common], help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--fake", action="store_true", help="serve the fake predictor")
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as e:
        print(f"❌ Invalid configuration: {e}", file=sys.stderr)
    except ChromaChordsError as e:
        print(f"❌ {e.__class__.__name__}: {e}", file=sys.stderr)
    except OSError as e:
        print(f"❌ {e}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
