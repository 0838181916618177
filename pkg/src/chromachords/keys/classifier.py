"""Major-key classification over whole-file chroma histograms."""
from pathlib import Path
from typing import Iterable, Optional, Union

import numpy as np
from pydantic import BaseModel

from ..core.binary import BinaryReader, BinaryWriter, atomic_write_bytes
from ..core.chroma import l1_normalize, song_histogram, transpose_histogram
from ..core.errors import ChromaChordsError, EmptyInput, InsufficientClasses
from ..core.models import ArrayModel, KeyExample, KeyMode
from ..midi.smf import read_midi_file, relative_major
from .pca import PcaModel, fit_pca, pca_transform
from .svm import BinaryMachine, KernelClassifier, train_kernel_classifier

KEY_MAGIC = b"KEYC"
KEY_VERSION = 1

MINOR_COPIES = 6
NOISE_MAX = 0.02


def augment_keyset(examples: list[KeyExample], seed: int) -> list[tuple[np.ndarray, int]]:
    """
    Balance and de-bias a key dataset.

    1. Each minor example is kept and joined by 6 noisy copies (uniform
       noise in [0, 0.02] per bin, clamped at 0, re-normalized).
    2. Every example is rotated by an independent uniform 0-11 semitone
       shift, and its label with it.
    3. Minor labels move to the relative major.

    Returns (histogram, major tonic) pairs; deterministic for a seed.
    """
    if not examples:
        raise EmptyInput("augment_keyset needs at least one example")
    rng = np.random.default_rng(seed)

    expanded: list[tuple[np.ndarray, int, KeyMode]] = []
    for ex in examples:
        hist = np.asarray(ex.histogram, dtype=np.float64)
        expanded.append((hist, ex.tonic_pc, ex.mode))
        if ex.mode == KeyMode.MINOR:
            for _ in range(MINOR_COPIES):
                noisy = np.clip(hist + rng.uniform(0.0, NOISE_MAX, size=12), 0.0, None)
                expanded.append((l1_normalize(noisy), ex.tonic_pc, ex.mode))

    out = []
    for hist, tonic, mode in expanded:
        shift = int(rng.integers(0, 12))
        out.append((transpose_histogram(hist, shift), relative_major((tonic + shift) % 12, mode)))
    return out


class KeyModel(ArrayModel):
    """PCA projection followed by the kernel classifier."""
    pca: PcaModel
    classifier: KernelClassifier

    def predict_many(self, histograms) -> np.ndarray:
        Z = pca_transform(self.pca, np.atleast_2d(histograms))
        return self.classifier.predict(Z)


def predict_key(clf: KernelClassifier, pca: PcaModel, h) -> int:
    """Major tonic (0-11) for one L1-normalized histogram."""
    z = pca_transform(pca, np.asarray(h, dtype=np.float64))
    return int(clf.predict(z[None, :])[0])


class KeyTrainingReport(BaseModel):
    """Accuracy summary from train_key_model."""
    n_examples: int
    n_train: int
    n_test: int
    n_augmented: int
    train_accuracy: float
    test_accuracy: Optional[float] = None
    unconverged_machines: int = 0


def train_key_model(
    examples: list[KeyExample],
    seed: int = 0,
    n_components: int = 9,
    C: float = 0.5,
    gamma: float = 1.0,
    degree: int = 1,
    tol: float = 1e-3,
    max_iter: int = 10_000,
    test_fraction: float = 0.2,
) -> tuple[KeyModel, KeyTrainingReport]:
    """
    Split, augment, fit PCA and train the classifier.

    Augmentation and PCA see only the training split. Held-out examples are
    scored un-augmented with minor labels mapped to their relative major.
    """
    if not examples:
        raise EmptyInput("no key examples")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(examples))
    n_test = int(round(len(examples) * test_fraction)) if len(examples) > 1 else 0
    test = [examples[i] for i in order[:n_test]]
    train = [examples[i] for i in order[n_test:]]
    if not train:
        raise EmptyInput("training split is empty")

    augmented = augment_keyset(train, seed=seed + 1)
    X = np.stack([h for h, _ in augmented])
    y = np.array([label for _, label in augmented])
    if len(np.unique(y)) < 2:
        raise InsufficientClasses("augmented training set has a single key")

    pca = fit_pca(X, n_components)
    classifier = train_kernel_classifier(
        pca_transform(pca, X), y, C=C, gamma=gamma, degree=degree, tol=tol, max_iter=max_iter
    )
    model = KeyModel(pca=pca, classifier=classifier)

    train_acc = float((model.predict_many(X) == y).mean())
    test_acc = None
    if test:
        X_test = np.stack([ex.histogram for ex in test])
        y_test = np.array([relative_major(ex.tonic_pc, ex.mode) for ex in test])
        test_acc = float((model.predict_many(X_test) == y_test).mean())

    report = KeyTrainingReport(
        n_examples=len(examples),
        n_train=len(train),
        n_test=len(test),
        n_augmented=len(augmented),
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        unconverged_machines=sum(not m.converged for m in classifier.machines),
    )
    return model, report


def collect_key_examples(paths: Iterable[Union[str, Path]]) -> list[KeyExample]:
    """
    KeyExamples from MIDI files with trusted key metadata.

    The first key event supplies the native tonic and mode; files starting
    with C major at tick 0, without key events, or that fail to parse are
    skipped.
    """
    examples = []
    for path in paths:
        try:
            song = read_midi_file(path)
        except (ChromaChordsError, OSError):
            continue
        if not song.key_events:
            continue
        first = song.key_events[0]
        if first.tick == 0 and first.mode == KeyMode.MAJOR and first.tonic_pc == 0:
            continue
        hist = song_histogram(song)
        if not hist.any():
            continue
        examples.append(KeyExample(histogram=hist, tonic_pc=first.tonic_pc, mode=first.mode))
    return examples


# Persistence

def save_key_model(model: KeyModel, path: Union[str, Path]) -> Path:
    w = BinaryWriter(KEY_MAGIC, KEY_VERSION)
    w.array(model.pca.mean, "f8")
    w.array(model.pca.components, "f8")
    w.array(model.pca.explained_variance, "f8")
    clf = model.classifier
    w.f64(clf.gamma)
    w.f64(clf.C)
    w.u32(clf.degree)
    w.array(clf.class_weights, "f8")
    w.u32(len(clf.machines))
    for machine in clf.machines:
        w.array(machine.support_vectors, "f8")
        w.array(machine.dual_coef, "f8")
        w.f64(machine.rho)
        w.u32(machine.iterations)
        w.u8(1 if machine.converged else 0)
    return atomic_write_bytes(path, w.getvalue())


def load_key_model(path: Union[str, Path]) -> KeyModel:
    r = BinaryReader(Path(path).read_bytes(), KEY_MAGIC, (KEY_VERSION,))
    pca = PcaModel(mean=r.array("f8"), components=r.array("f8"), explained_variance=r.array("f8"))
    gamma, C, degree = r.f64(), r.f64(), r.u32()
    class_weights = r.array("f8")
    machines = []
    for _ in range(r.u32()):
        machines.append(BinaryMachine(
            support_vectors=r.array("f8"),
            dual_coef=r.array("f8"),
            rho=r.f64(),
            iterations=r.u32(),
            converged=bool(r.u8()),
        ))
    classifier = KernelClassifier(
        machines=tuple(machines), gamma=gamma, C=C, degree=degree, class_weights=class_weights
    )
    return KeyModel(pca=pca, classifier=classifier)
